use trussforge_geom::GrayImage;

use crate::{FeatureConfig, FeatureError, Result};

/// Blur already present in the input image, assumed from typical capture.
const BASE_SIGMA: f64 = 0.5;

/// Gaussian and difference-of-Gaussian stacks for one octave.
pub struct Octave {
    /// `s + 3` progressively blurred images.
    pub gaussians: Vec<GrayImage>,
    /// `s + 2` differences `g[i] - g[i+1]`.
    pub dogs: Vec<GrayImage>,
    /// Downsampling factor relative to the input (1, 2, 4, ...).
    pub downsample: usize,
    /// Absolute blur of each Gaussian level (input-image units).
    pub sigmas: Vec<f64>,
}

pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    pub intervals: usize,
    pub sigma0: f64,
}

/// Normalized 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let denom = 2.0 * sigma * sigma;
    for i in -radius..=radius {
        kernel.push((-(i * i) as f64 / denom).exp());
    }
    let total: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= total;
    }
    kernel
}

/// Separable Gaussian blur on an f64 buffer with replicated borders.
pub fn gaussian_blur_f64(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 1e-8 {
        return data.to_vec();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let clamp_get = |buf: &[f64], x: isize, y: isize| {
        let x = x.clamp(0, width as isize - 1) as usize;
        let y = y.clamp(0, height as isize - 1) as usize;
        buf[y * width + x]
    };
    let mut horizontal = vec![0.0f64; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                acc += kv * clamp_get(data, x as isize + ki as isize - radius, y as isize);
            }
            horizontal[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0f64; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                acc += kv * clamp_get(&horizontal, x as isize, y as isize + ki as isize - radius);
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Separable Gaussian blur of an image; identity for sigma <= 0.
pub fn gaussian_blur(image: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 1e-8 {
        return image.clone();
    }
    let data: Vec<f64> = image.data().iter().map(|&v| v as f64).collect();
    let blurred = gaussian_blur_f64(&data, image.width(), image.height(), sigma);
    GrayImage::from_vec(
        image.width(),
        image.height(),
        blurred.into_iter().map(|v| v as f32).collect(),
    )
}

/// Builds the pyramid: per octave `s + 3` Gaussian images with absolute
/// factors `sigma0 * k^i`, `k = 2^(1/s)`, and `s + 2` DoG images; the image
/// is halved between octaves (from the level carrying `2 sigma0`).
pub fn build_scale_space(image: &GrayImage, config: &FeatureConfig) -> Result<ScaleSpace> {
    if image.width() < 16 || image.height() < 16 {
        return Err(FeatureError::ImageTooSmall { width: image.width(), height: image.height() });
    }
    if config.intervals < 2 {
        return Err(FeatureError::BadConfig("intervals must be >= 2"));
    }
    let s = config.intervals;
    let k = 2f64.powf(1.0 / s as f64);
    let levels = s + 3;

    let mut octaves = Vec::with_capacity(config.octaves);
    let mut base = {
        // Bring the input up to sigma0 assuming BASE_SIGMA already applied.
        let delta = (config.sigma0 * config.sigma0 - BASE_SIGMA * BASE_SIGMA).max(0.0).sqrt();
        gaussian_blur(image, delta)
    };
    let mut downsample = 1usize;

    for _ in 0..config.octaves {
        if base.width() < 16 || base.height() < 16 {
            break;
        }
        let mut gaussians = Vec::with_capacity(levels);
        let mut sigmas = Vec::with_capacity(levels);
        gaussians.push(base.clone());
        sigmas.push(config.sigma0 * downsample as f64);
        // Blur within the octave in octave-local units.
        let mut local_sigma = config.sigma0;
        for _ in 1..levels {
            let next_sigma = local_sigma * k;
            let delta = (next_sigma * next_sigma - local_sigma * local_sigma).sqrt();
            let img = gaussian_blur(gaussians.last().unwrap(), delta);
            gaussians.push(img);
            sigmas.push(next_sigma * downsample as f64);
            local_sigma = next_sigma;
        }
        let dogs = (0..levels - 1)
            .map(|i| {
                let a = &gaussians[i];
                let b = &gaussians[i + 1];
                let mut d = GrayImage::new(a.width(), a.height());
                for (o, (&x, &y)) in d
                    .data_mut()
                    .iter_mut()
                    .zip(a.data().iter().zip(b.data().iter()))
                    .map(|(o, p)| (o, p))
                {
                    *o = x - y;
                }
                d
            })
            .collect();
        // The level with local blur 2*sigma0 sits at index s.
        base = gaussians[s].half_size();
        octaves.push(Octave { gaussians, dogs, downsample, sigmas });
        downsample *= 2;
    }
    Ok(ScaleSpace { octaves, intervals: s, sigma0: config.sigma0 })
}
