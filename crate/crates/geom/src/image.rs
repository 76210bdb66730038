use nalgebra::Vector2;

use crate::{GeomError, Intrinsics, RadialDistortion, Result};

/// Single-channel f32 image, row-major, intensities nominally in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height, "pixel buffer size mismatch");
        Self { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Clamped pixel access; coordinates outside the image are snapped to
    /// the border (replicate padding).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Bilinear sample with border replication.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f32 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = (x - x0) as f32;
        let fy = (y - y0) as f32;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let v00 = self.get_clamped(xi, yi);
        let v10 = self.get_clamped(xi + 1, yi);
        let v01 = self.get_clamped(xi, yi + 1);
        let v11 = self.get_clamped(xi + 1, yi + 1);
        let top = v00 + (v10 - v00) * fx;
        let bot = v01 + (v11 - v01) * fx;
        top + (bot - top) * fy
    }

    /// Largest intensity; 0 for an empty image.
    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(0.0f32, f32::max)
    }

    /// Downsample by dropping every other row/column (floor semantics).
    pub fn half_size(&self) -> GrayImage {
        let w = (self.width / 2).max(1);
        let h = (self.height / 2).max(1);
        GrayImage::from_fn(w, h, |x, y| self.get(x * 2, y * 2))
    }
}

/// Resamples an image so downstream math may assume the pure pinhole model.
///
/// Every output pixel is looked up at its distorted source location: the
/// output grid is the ideal (undistorted) image, sampled bilinearly from the
/// observed image.
pub fn undistort_image(
    image: &GrayImage,
    distortion: &RadialDistortion,
    intrinsics: &Intrinsics,
) -> Result<GrayImage> {
    if distortion.is_zero() {
        return Ok(image.clone());
    }
    // Invertibility over the image diagonal, in normalized units.
    let corners = [
        Vector2::new(0.0, 0.0),
        Vector2::new(image.width as f64 - 1.0, 0.0),
        Vector2::new(0.0, image.height as f64 - 1.0),
        Vector2::new(image.width as f64 - 1.0, image.height as f64 - 1.0),
    ];
    let max_radius = corners
        .iter()
        .map(|&c| intrinsics.pixel_to_normalized(c).norm())
        .fold(0.0, f64::max);
    if !distortion.invertible_up_to(max_radius * 1.05) {
        return Err(GeomError::InvalidDistortion);
    }

    let mut out = GrayImage::new(image.width, image.height);
    for y in 0..image.height {
        for x in 0..image.width {
            let ideal = intrinsics.pixel_to_normalized(Vector2::new(x as f64, y as f64));
            let distorted = distortion.distort_normalized(ideal);
            let src = intrinsics.normalized_to_pixel(distorted);
            out.set(x, y, image.sample_bilinear(src.x, src.y));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_intrinsics() -> Intrinsics {
        Intrinsics::new(60.0, 60.0, 31.5, 31.5).unwrap()
    }

    #[test]
    fn zero_distortion_returns_identical_image() {
        let img = GrayImage::from_fn(64, 64, |x, y| ((x * 7 + y * 13) % 32) as f32 / 32.0);
        let out = undistort_image(&img, &RadialDistortion::none(), &test_intrinsics()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn center_pixel_is_fixed_for_any_coefficients() {
        let img = GrayImage::from_fn(63, 63, |x, y| (x as f32 * 0.01 + y as f32 * 0.02).sin().abs());
        let k = Intrinsics::new(50.0, 50.0, 31.0, 31.0).unwrap();
        for coeffs in [(0.3, 0.0, 0.0), (-0.1, 0.05, 0.0), (0.05, 0.02, 0.01)] {
            let dist = RadialDistortion::new(coeffs.0, coeffs.1, coeffs.2);
            let out = undistort_image(&img, &dist, &k).unwrap();
            assert!((out.get(31, 31) - img.get(31, 31)).abs() < 1e-6);
        }
    }

    #[test]
    fn undistort_then_redistort_grid_points() {
        // Forward-map fixed-point inversion oracle: starting from ideal
        // sample points, distort then undistort and compare (0.1 px).
        let k = test_intrinsics();
        let dist = RadialDistortion::new(0.1, 0.0, 0.0);
        for gx in 0..8 {
            for gy in 0..8 {
                let p = Vector2::new(8.0 + gx as f64 * 6.0, 8.0 + gy as f64 * 6.0);
                let n = k.pixel_to_normalized(p);
                let d = dist.distort_normalized(n);
                let u = dist.undistort_normalized(d);
                let back = k.normalized_to_pixel(u);
                assert!((back - p).norm() < 0.1, "{p:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn non_invertible_distortion_is_rejected() {
        let img = GrayImage::new(64, 64);
        // Strongly negative k1 folds the radius map over the diagonal.
        let dist = RadialDistortion::new(-2.5, 0.0, 0.0);
        let k = Intrinsics::new(30.0, 30.0, 31.5, 31.5).unwrap();
        assert!(matches!(
            undistort_image(&img, &dist, &k),
            Err(GeomError::InvalidDistortion)
        ));
    }

    #[test]
    fn bilinear_sampling_interpolates() {
        let img = GrayImage::from_fn(4, 4, |x, _| x as f32);
        assert!((img.sample_bilinear(1.5, 2.0) - 1.5).abs() < 1e-6);
        assert!((img.sample_bilinear(0.25, 0.75) - 0.25).abs() < 1e-6);
    }
}
