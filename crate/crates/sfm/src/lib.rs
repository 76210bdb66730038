//! Structure-from-motion: two-view geometry, robust estimation, incremental
//! registration and bundle adjustment.
//!
//! The pipeline consumes per-image keypoint pixels and pairwise matches,
//! seeds from the strongest two-view geometry, registers remaining views by
//! PnP and refines everything with Levenberg-Marquardt after each
//! registration. The first registered camera's frame is the world frame and
//! the seed baseline fixes the scale.

mod ba;
mod essential;
mod export;
mod fundamental;
mod incremental;
mod pnp;
mod triangulate;

pub use ba::{bundle_adjust, residuals_and_jacobian, BaOptions, BaReport};
pub use essential::{essential_from_fundamental, pose_candidates, recover_pose};
pub use export::{export_reconstruction_json, export_sparse_ply};
pub use fundamental::{
    estimate_fundamental_8pt, ransac_fundamental, sampson_distance, FundamentalMatrix,
    RansacOptions,
};
pub use incremental::{incremental_sfm, PairMatches, SfmOptions};
pub use pnp::{register_pnp, PnpOptions};
pub use triangulate::triangulate;

use nalgebra::{Vector2, Vector3};
use std::collections::{BTreeMap, BTreeSet};
use trussforge_geom::Camera;

#[derive(Debug, thiserror::Error)]
pub enum SfmError {
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("insufficient inliers: best consensus {found} < {required}")]
    InsufficientInliers { found: usize, required: usize },
    #[error("no pose candidate passes the cheirality check")]
    CheiralityFailure,
    #[error("low parallax: ray angle {angle} rad below threshold")]
    LowParallax { angle: f64 },
    #[error("insufficient correspondences: {found} < {required}")]
    InsufficientCorrespondences { found: usize, required: usize },
    #[error("optimizer diverged: {0}")]
    NonConvergence(&'static str),
    #[error("normal equations are singular")]
    SingularSystem,
    #[error("reconstruction failed: {0}")]
    ReconstructionFailed(&'static str),
    #[error(transparent)]
    Geom(#[from] trussforge_geom::GeomError),
}

pub type Result<T> = std::result::Result<T, SfmError>;

/// One 2-D observation of a track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub image: usize,
    pub keypoint: usize,
    pub pixel: Vector2<f64>,
}

/// A reconstructed 3-D point with its observations in registered views.
///
/// Invariants: at least two observations, no two in the same image.
#[derive(Debug, Clone)]
pub struct Track {
    pub point: Vector3<f64>,
    pub observations: Vec<Observation>,
}

impl Track {
    pub fn new(point: Vector3<f64>, observations: Vec<Observation>) -> Self {
        debug_assert!(observations.len() >= 2, "track needs >= 2 observations");
        debug_assert!(
            {
                let mut images: Vec<usize> = observations.iter().map(|o| o.image).collect();
                images.sort_unstable();
                images.windows(2).all(|w| w[0] != w[1])
            },
            "observations must come from distinct images"
        );
        Self { point, observations }
    }
}

/// Cameras, tracks and the registered view set.
#[derive(Debug, Clone, Default)]
pub struct Reconstruction {
    pub cameras: BTreeMap<usize, Camera>,
    pub tracks: Vec<Track>,
    pub registered: BTreeSet<usize>,
}

impl Reconstruction {
    /// Mean reprojection error (pixels) over all observations.
    pub fn mean_reprojection_error(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for track in &self.tracks {
            for obs in &track.observations {
                if let Some(cam) = self.cameras.get(&obs.image) {
                    if let Ok(p) = cam.project(track.point) {
                        total += (p - obs.pixel).norm();
                        count += 1;
                    }
                }
            }
        }
        if count == 0 {
            f64::INFINITY
        } else {
            total / count as f64
        }
    }

    /// Sum of squared reprojection residual components (the BA objective).
    pub fn total_squared_error(&self) -> f64 {
        let mut total = 0.0;
        for track in &self.tracks {
            for obs in &track.observations {
                if let Some(cam) = self.cameras.get(&obs.image) {
                    if let Ok(p) = cam.project(track.point) {
                        total += (p - obs.pixel).norm_squared();
                    }
                }
            }
        }
        total
    }
}
