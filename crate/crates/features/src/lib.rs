//! Difference-of-Gaussian keypoint detection, 128-D gradient-histogram
//! descriptors and nearest-neighbor matching.
//!
//! Pipeline per image: [`build_scale_space`] -> [`detect_keypoints`] ->
//! [`compute_descriptor`]; then [`match_images`] per image pair with a Lowe
//! ratio test and symmetric cross-check.

mod descriptor;
mod detect;
mod io;
mod kdtree;
mod matching;
mod pyramid;

pub use descriptor::{compute_descriptor, Descriptor, DESCRIPTOR_DIM};
pub use detect::{detect_keypoints, Keypoint};
pub use io::{read_keypoint_dump, write_keypoint_dump};
pub use kdtree::KdTree;
pub use matching::{match_descriptors, match_images, MatchPair};
pub use pyramid::{build_scale_space, gaussian_blur, gaussian_blur_f64, gaussian_kernel, Octave, ScaleSpace};

/// Detector / descriptor configuration. The cited detector leaves these
/// unstated; the defaults here are recorded as part of the artifact.
#[derive(Debug, Clone, Copy)]
pub struct FeatureConfig {
    pub octaves: usize,
    /// Intervals per octave (`s`); the scale step is `k = 2^(1/s)`.
    pub intervals: usize,
    pub sigma0: f64,
    /// Reject extrema with |DoG| below this (intensities in [0, 1]).
    pub contrast_threshold: f32,
    /// Keep only the strongest N keypoints per image (None = all).
    pub max_keypoints: Option<usize>,
    /// Lowe ratio for nearest/second-nearest match filtering.
    pub match_ratio: f32,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            octaves: 4,
            intervals: 3,
            sigma0: 1.6,
            contrast_threshold: 0.03,
            max_keypoints: None,
            match_ratio: 0.8,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("image {width}x{height} is smaller than the 16x16 minimum")]
    ImageTooSmall { width: usize, height: usize },
    #[error("keypoint neighborhood leaves the image bounds")]
    BorderKeypoint,
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed keypoint dump: {0}")]
    BadDump(&'static str),
}

pub type Result<T> = std::result::Result<T, FeatureError>;
