use trussforge_geom::GrayImage;

use crate::detect::Keypoint;
use crate::pyramid::ScaleSpace;
use crate::{FeatureError, Result};

pub const DESCRIPTOR_DIM: usize = 128;

/// Unit-norm 4x4x8 gradient-histogram descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub v: Vec<f32>,
}

impl Descriptor {
    pub fn distance(&self, other: &Descriptor) -> f32 {
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum::<f32>()
            .sqrt()
    }
}

/// Gradient magnitude and orientation by central differences on a blurred
/// image: `m = sqrt(dx^2 + dy^2)`, `theta = atan2(dy, dx)` with
/// `dx = L(x+1, y) - L(x-1, y)` and `dy = L(x, y+1) - L(x, y-1)`.
pub fn gradient_magnitude_orientation(image: &GrayImage, x: usize, y: usize) -> (f32, f32) {
    let dx = image.get_clamped(x as isize + 1, y as isize) - image.get_clamped(x as isize - 1, y as isize);
    let dy = image.get_clamped(x as isize, y as isize + 1) - image.get_clamped(x as isize, y as isize - 1);
    ((dx * dx + dy * dy).sqrt(), dy.atan2(dx))
}

/// Builds the 128-D descriptor for a keypoint: gradients over a rotated
/// 16x16 neighborhood, accumulated trilinearly into 4x4 spatial bins with
/// 8 orientation bins each, then L2-normalized.
pub fn compute_descriptor(pyramid: &ScaleSpace, kp: &Keypoint) -> Result<Descriptor> {
    let octave = &pyramid.octaves[kp.octave];
    let image = &octave.gaussians[kp.interval];
    let (w, h) = (image.width() as f64, image.height() as f64);
    // Rotated samples plus the +-1 gradient taps must stay inside.
    let radius = 8.0 * std::f64::consts::SQRT_2 + 2.0;
    if kp.x - radius < 0.0 || kp.y - radius < 0.0 || kp.x + radius >= w || kp.y + radius >= h {
        return Err(FeatureError::BorderKeypoint);
    }

    let (sin_t, cos_t) = kp.orientation.sin_cos();
    let sample = |u: f64, v: f64| -> f64 {
        // rotate the local offset into image coordinates
        let ix = kp.x + u * cos_t - v * sin_t;
        let iy = kp.y + u * sin_t + v * cos_t;
        image.sample_bilinear(ix, iy) as f64
    };

    let mut hist = [0.0f64; DESCRIPTOR_DIM];
    for j in 0..16 {
        for i in 0..16 {
            let u = i as f64 - 7.5;
            let v = j as f64 - 7.5;
            // gradients along the rotated axes => orientation is relative
            let du = sample(u + 1.0, v) - sample(u - 1.0, v);
            let dv = sample(u, v + 1.0) - sample(u, v - 1.0);
            let mag = (du * du + dv * dv).sqrt();
            if mag < 1e-12 {
                continue;
            }
            let theta = dv.atan2(du).rem_euclid(2.0 * std::f64::consts::PI);

            let bx = u / 4.0 + 1.5;
            let by = v / 4.0 + 1.5;
            let bo = theta / (2.0 * std::f64::consts::PI) * 8.0;
            trilinear_accumulate(&mut hist, bx, by, bo, mag);
        }
    }
    let norm: f64 = hist.iter().map(|&x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        // A flat neighborhood has no gradient signal; callers drop these
        // like border keypoints.
        return Err(FeatureError::BorderKeypoint);
    }
    Ok(Descriptor { v: hist.iter().map(|&x| (x / norm) as f32).collect() })
}

fn trilinear_accumulate(hist: &mut [f64; DESCRIPTOR_DIM], bx: f64, by: f64, bo: f64, mag: f64) {
    let x0 = bx.floor();
    let y0 = by.floor();
    let o0 = bo.floor();
    let (fx, fy, fo) = (bx - x0, by - y0, bo - o0);
    for (dx, wx) in [(0i64, 1.0 - fx), (1, fx)] {
        let xb = x0 as i64 + dx;
        if !(0..4).contains(&xb) {
            continue;
        }
        for (dy, wy) in [(0i64, 1.0 - fy), (1, fy)] {
            let yb = y0 as i64 + dy;
            if !(0..4).contains(&yb) {
                continue;
            }
            for (do_, wo) in [(0i64, 1.0 - fo), (1, fo)] {
                let ob = (o0 as i64 + do_).rem_euclid(8);
                let idx = ((yb * 4 + xb) * 8 + ob) as usize;
                hist[idx] += mag * wx * wy * wo;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pyramid::build_scale_space;
    use crate::FeatureConfig;

    fn keypoint_at(x: f64, y: f64, orientation: f64) -> Keypoint {
        Keypoint { x, y, octave: 0, scale: 1.6, orientation, interval: 1 }
    }

    #[test]
    fn descriptor_is_unit_norm_and_128d() {
        let img = GrayImage::from_fn(48, 48, |x, y| ((x as f32 * 0.4).sin() + (y as f32 * 0.3).cos()) * 0.25 + 0.5);
        let ss = build_scale_space(&img, &FeatureConfig::default()).unwrap();
        let d = compute_descriptor(&ss, &keypoint_at(24.0, 24.0, 0.3)).unwrap();
        assert_eq!(d.v.len(), DESCRIPTOR_DIM);
        let norm: f32 = d.v.iter().map(|x| x * x).sum::<f32>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);
    }

    #[test]
    fn border_keypoint_is_rejected() {
        let img = GrayImage::from_fn(48, 48, |x, _| x as f32 / 48.0);
        let ss = build_scale_space(&img, &FeatureConfig::default()).unwrap();
        assert!(matches!(
            compute_descriptor(&ss, &keypoint_at(3.0, 24.0, 0.0)),
            Err(FeatureError::BorderKeypoint)
        ));
    }

    #[test]
    fn ramp_image_gradients() {
        // I = x: dx = 2 everywhere (central difference), dy = 0 => theta = 0.
        let img = GrayImage::from_fn(32, 32, |x, _| x as f32);
        for y in 4..28 {
            for x in 4..28 {
                let (m, theta) = gradient_magnitude_orientation(&img, x, y);
                assert!((m - 2.0).abs() < 1e-5);
                assert!(theta.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rotated_patch_with_orientation_compensation_matches() {
        // Synthetic patch-rotation oracle: rotate the image by 90 degrees
        // and compensate with the orientation term.
        let n = 64usize;
        let base = |x: f64, y: f64| {
            ((x * 0.35).sin() * (y * 0.21).cos() + (x * 0.11 + y * 0.17).sin()) as f32 * 0.2 + 0.5
        };
        let img_a = GrayImage::from_fn(n, n, |x, y| base(x as f64, y as f64));
        // new(x, y) = old(y, n-1-x) is a quarter-turn of the content
        let img_b = GrayImage::from_fn(n, n, |x, y| base(y as f64, (n - 1 - x) as f64));
        let cfg = FeatureConfig::default();
        let ss_a = build_scale_space(&img_a, &cfg).unwrap();
        let ss_b = build_scale_space(&img_b, &cfg).unwrap();
        let c = (n / 2) as f64 - 0.5;
        let da = compute_descriptor(&ss_a, &keypoint_at(c, c, 0.0)).unwrap();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let db_pos = compute_descriptor(&ss_b, &keypoint_at(c, c, half_pi)).unwrap();
        let db_neg = compute_descriptor(&ss_b, &keypoint_at(c, c, -half_pi)).unwrap();
        let best = da.distance(&db_pos).min(da.distance(&db_neg));
        assert!(best < 0.3, "distance {best}");
    }
}
