//! Camera models, homogeneous projection and lens distortion.
//!
//! Everything downstream of feature extraction shares the camera model
//! defined here: a pinhole intrinsic matrix `K`, a polynomial radial
//! distortion applied in normalized camera coordinates, and a rigid
//! world-to-camera pose `[R|t]`. All geometry is `f64`.

mod camera;
mod image;
pub mod ply;

pub use camera::{look_at, Camera, Intrinsics, Pose, RadialDistortion};
pub use image::{undistort_image, GrayImage};

/// Errors produced by camera and image geometry.
#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    /// Point projects at or behind the camera plane.
    #[error("point at or behind camera plane (depth {depth})")]
    BehindCamera { depth: f64 },
    /// Distortion polynomial is not invertible over the requested domain.
    #[error("radial distortion is not invertible over the image domain")]
    InvalidDistortion,
    /// look_at inputs do not span a frame.
    #[error("degenerate frame: {0}")]
    DegenerateFrame(&'static str),
    /// Intrinsics violate fx > 0, fy > 0.
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    /// Rotation fails the orthonormality / determinant check.
    #[error("matrix is not a rotation: {0}")]
    InvalidRotation(&'static str),
}

pub type Result<T> = std::result::Result<T, GeomError>;
