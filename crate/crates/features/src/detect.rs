use trussforge_geom::GrayImage;

use crate::pyramid::ScaleSpace;
use crate::FeatureConfig;

/// A detected scale-space extremum.
///
/// `x`/`y` are sub-pixel coordinates at the octave's own resolution;
/// multiply by `2^octave` (see [`Keypoint::image_xy`]) for input-image
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub octave: usize,
    /// Absolute blur sigma (input-image units).
    pub scale: f64,
    /// Dominant gradient orientation, radians in (-pi, pi].
    pub orientation: f64,
    /// DoG interval the extremum was found in (descriptor sampling level).
    pub interval: usize,
}

impl Keypoint {
    /// Coordinates at the input image resolution.
    pub fn image_xy(&self) -> (f64, f64) {
        let f = (1usize << self.octave) as f64;
        (self.x * f, self.y * f)
    }
}

/// Finds extrema that are strictly larger or smaller than all 26 scale-space
/// neighbors, discards low-contrast responses, refines to sub-pixel by a
/// quadratic fit, and assigns one dominant orientation each.
pub fn detect_keypoints(pyramid: &ScaleSpace, config: &FeatureConfig) -> Vec<Keypoint> {
    let mut found: Vec<(Keypoint, f32)> = Vec::new();
    for (oi, octave) in pyramid.octaves.iter().enumerate() {
        let s = pyramid.intervals;
        for layer in 1..=s {
            let below = &octave.dogs[layer - 1];
            let here = &octave.dogs[layer];
            let above = &octave.dogs[layer + 1];
            let (w, h) = (here.width(), here.height());
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    let v = here.get(x, y);
                    if v.abs() < config.contrast_threshold {
                        continue;
                    }
                    if !is_extremum(below, here, above, x, y, v) {
                        continue;
                    }
                    let (dx, dy) = subpixel_offset(here, x, y);
                    let px = x as f64 + dx;
                    let py = y as f64 + dy;
                    let orientation = match dominant_orientation(&octave.gaussians[layer], px, py) {
                        Some(theta) => theta,
                        None => continue,
                    };
                    found.push((
                        Keypoint {
                            x: px,
                            y: py,
                            octave: oi,
                            scale: octave.sigmas[layer],
                            orientation,
                            interval: layer,
                        },
                        v.abs(),
                    ));
                }
            }
        }
    }
    if let Some(cap) = config.max_keypoints {
        if found.len() > cap {
            found.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| cmp_kp(&a.0, &b.0)));
            found.truncate(cap);
        }
    }
    // Deterministic output order regardless of detection schedule.
    found.sort_by(|a, b| cmp_kp(&a.0, &b.0));
    found.into_iter().map(|(kp, _)| kp).collect()
}

fn cmp_kp(a: &Keypoint, b: &Keypoint) -> std::cmp::Ordering {
    (a.octave, a.interval)
        .cmp(&(b.octave, b.interval))
        .then_with(|| a.y.partial_cmp(&b.y).unwrap())
        .then_with(|| a.x.partial_cmp(&b.x).unwrap())
}

fn is_extremum(below: &GrayImage, here: &GrayImage, above: &GrayImage, x: usize, y: usize, v: f32) -> bool {
    let mut is_max = true;
    let mut is_min = true;
    for dy in -1isize..=1 {
        for dx in -1isize..=1 {
            let (nx, ny) = ((x as isize + dx) as usize, (y as isize + dy) as usize);
            for img in [below, here, above] {
                if std::ptr::eq(img, here) && dx == 0 && dy == 0 {
                    continue;
                }
                let n = img.get(nx, ny);
                if v <= n {
                    is_max = false;
                }
                if v >= n {
                    is_min = false;
                }
                if !is_max && !is_min {
                    return false;
                }
            }
        }
    }
    is_max || is_min
}

/// One in-plane quadratic refinement step, clamped to half a pixel.
fn subpixel_offset(dog: &GrayImage, x: usize, y: usize) -> (f64, f64) {
    let v = |dx: isize, dy: isize| dog.get_clamped(x as isize + dx, y as isize + dy) as f64;
    let gx = 0.5 * (v(1, 0) - v(-1, 0));
    let gy = 0.5 * (v(0, 1) - v(0, -1));
    let hxx = v(1, 0) - 2.0 * v(0, 0) + v(-1, 0);
    let hyy = v(0, 1) - 2.0 * v(0, 0) + v(0, -1);
    let hxy = 0.25 * (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1));
    let det = hxx * hyy - hxy * hxy;
    if det.abs() < 1e-12 {
        return (0.0, 0.0);
    }
    let ox = (-(hyy * gx - hxy * gy) / det).clamp(-0.5, 0.5);
    let oy = (-(hxx * gy - hxy * gx) / det).clamp(-0.5, 0.5);
    (ox, oy)
}

/// Peak of a 36-bin Gaussian-weighted gradient-orientation histogram around
/// the keypoint; None when the neighborhood has no gradient energy.
fn dominant_orientation(gaussian: &GrayImage, x: f64, y: f64) -> Option<f64> {
    const BINS: usize = 36;
    let radius = 8isize;
    let sigma_w = 1.5 * 1.6 * 2.0;
    let mut hist = [0.0f64; BINS];
    let (cx, cy) = (x.round() as isize, y.round() as isize);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (sx, sy) = (cx + dx, cy + dy);
            if sx < 1 || sy < 1 || sx >= gaussian.width() as isize - 1 || sy >= gaussian.height() as isize - 1 {
                continue;
            }
            let gx = (gaussian.get_clamped(sx + 1, sy) - gaussian.get_clamped(sx - 1, sy)) as f64;
            let gy = (gaussian.get_clamped(sx, sy + 1) - gaussian.get_clamped(sx, sy - 1)) as f64;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag < 1e-12 {
                continue;
            }
            let weight = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_w * sigma_w)).exp();
            let theta = gy.atan2(gx);
            let mut bin = ((theta + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * BINS as f64) as usize;
            if bin >= BINS {
                bin = BINS - 1;
            }
            hist[bin] += mag * weight;
        }
    }
    let (best_bin, &best) = hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    if best <= 0.0 {
        return None;
    }
    // Parabolic interpolation over the circular histogram.
    let left = hist[(best_bin + BINS - 1) % BINS];
    let right = hist[(best_bin + 1) % BINS];
    let denom = left - 2.0 * best + right;
    let offset = if denom.abs() < 1e-12 { 0.0 } else { (0.5 * (left - right) / denom).clamp(-0.5, 0.5) };
    let theta = (best_bin as f64 + 0.5 + offset) / BINS as f64 * 2.0 * std::f64::consts::PI
        - std::f64::consts::PI;
    Some(theta)
}
