use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::{GeomError, Result};

/// Pinhole intrinsic parameters (pixels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub skew: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if fx <= 0.0 || fy <= 0.0 {
            return Err(GeomError::InvalidIntrinsics("focal lengths must be positive"));
        }
        Ok(Self { fx, fy, cx, cy, skew: 0.0 })
    }

    pub fn with_skew(mut self, skew: f64) -> Self {
        self.skew = skew;
        self
    }

    /// The 3x3 calibration matrix K.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, self.skew, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Normalized camera coordinates -> pixel coordinates.
    pub fn normalized_to_pixel(&self, n: Vector2<f64>) -> Vector2<f64> {
        Vector2::new(self.fx * n.x + self.skew * n.y + self.cx, self.fy * n.y + self.cy)
    }

    /// Pixel coordinates -> normalized camera coordinates.
    pub fn pixel_to_normalized(&self, p: Vector2<f64>) -> Vector2<f64> {
        let y = (p.y - self.cy) / self.fy;
        let x = (p.x - self.cx - self.skew * y) / self.fx;
        Vector2::new(x, y)
    }
}

/// Polynomial radial distortion `lambda(d) = 1 + k1 d^2 + k2 d^4 + k3 d^6`.
///
/// The factor acts on normalized camera coordinates with `d` the distorted
/// radius: undistortion is the closed form `x_u = x_d * lambda(|x_d|)`,
/// distortion inverts it by fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RadialDistortion {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl RadialDistortion {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(k1: f64, k2: f64, k3: f64) -> Self {
        Self { k1, k2, k3 }
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.k3 == 0.0
    }

    /// lambda as a function of squared radius.
    pub fn factor(&self, r2: f64) -> f64 {
        1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }

    /// Distorted normalized point -> undistorted normalized point.
    pub fn undistort_normalized(&self, d: Vector2<f64>) -> Vector2<f64> {
        d * self.factor(d.norm_squared())
    }

    /// Undistorted normalized point -> distorted normalized point.
    ///
    /// Solves `x_d * lambda(|x_d|) = x_u` by fixed-point iteration; for the
    /// small coefficients of real lenses this converges in a few steps.
    pub fn distort_normalized(&self, u: Vector2<f64>) -> Vector2<f64> {
        if self.is_zero() {
            return u;
        }
        let mut d = u;
        for _ in 0..50 {
            let next = u / self.factor(d.norm_squared());
            if (next - d).norm_squared() < 1e-28 {
                return next;
            }
            d = next;
        }
        d
    }

    /// Checks that `r -> r * lambda(r)` is strictly increasing up to
    /// `max_radius` (normalized units), i.e. the map is invertible there.
    pub fn invertible_up_to(&self, max_radius: f64) -> bool {
        let steps = 256;
        let mut prev = 0.0;
        for i in 1..=steps {
            let r = max_radius * i as f64 / steps as f64;
            let mapped = r * self.factor(r * r);
            if mapped <= prev || !mapped.is_finite() {
                return false;
            }
            prev = mapped;
        }
        true
    }
}

/// Rigid world-to-camera transform: `x_cam = R x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

const ROTATION_TOL: f64 = 1e-9;

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Builds a pose, validating `R^T R = I` and `det R = +1` to 1e-9.
    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.amax() > ROTATION_TOL {
            return Err(GeomError::InvalidRotation("R^T R deviates from identity"));
        }
        if (rotation.determinant() - 1.0).abs() > ROTATION_TOL {
            return Err(GeomError::InvalidRotation("det R != +1"));
        }
        Ok(Self { rotation, translation })
    }

    /// Re-orthonormalizes an approximate rotation via SVD before building.
    pub fn from_parts_renormalized(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let svd = rotation.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * vt;
        }
        Self::from_parts(r, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn world_to_camera(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn camera_to_world(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    /// Camera center in world coordinates, `-R^T t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Composition: `(self * other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Relative pose mapping `other`'s camera frame into `self`'s frame.
    pub fn relative_to(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation.transpose(),
            translation: self.translation - self.rotation * other.rotation.transpose() * other.translation,
        }
    }
}

/// Pose whose optical axis (+z) points from `eye` at `target`.
///
/// Camera axes: x to the right, y along `up`, z forward. The translation
/// satisfies `t = -R eye`.
pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> Result<Pose> {
    let forward = target - eye;
    if forward.norm_squared() < 1e-24 {
        return Err(GeomError::DegenerateFrame("eye equals target"));
    }
    let z = forward.normalize();
    let x = up.cross(&z);
    if x.norm_squared() < 1e-18 {
        return Err(GeomError::DegenerateFrame("up parallel to view direction"));
    }
    let x = x.normalize();
    let y = z.cross(&x);
    let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    let translation = -(rotation * eye);
    Pose::from_parts(rotation, translation)
}

/// Full camera: `C = S_lambda K [R|t]` with distortion acting in normalized
/// coordinates between `[R|t]` and `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: Intrinsics,
    pub distortion: RadialDistortion,
    pub pose: Pose,
}

impl Camera {
    pub fn new(intrinsics: Intrinsics, distortion: RadialDistortion, pose: Pose) -> Self {
        Self { intrinsics, distortion, pose }
    }

    /// Pinhole camera without distortion.
    pub fn pinhole(intrinsics: Intrinsics, pose: Pose) -> Self {
        Self { intrinsics, distortion: RadialDistortion::none(), pose }
    }

    /// Projects a world point to Euclidean pixel coordinates.
    ///
    /// Distortion is applied after the perspective division. Points with
    /// non-positive depth in the camera frame are rejected.
    pub fn project(&self, point: Vector3<f64>) -> Result<Vector2<f64>> {
        let cam = self.pose.world_to_camera(point);
        if cam.z <= 0.0 {
            return Err(GeomError::BehindCamera { depth: cam.z });
        }
        let normalized = Vector2::new(cam.x / cam.z, cam.y / cam.z);
        let distorted = self.distortion.distort_normalized(normalized);
        Ok(self.intrinsics.normalized_to_pixel(distorted))
    }

    /// Depth (z in the camera frame) of a world point.
    pub fn depth_of(&self, point: Vector3<f64>) -> f64 {
        self.pose.world_to_camera(point).z
    }

    /// Ray direction (world frame, unit z-depth) through a pixel, assuming
    /// the pinhole model (distortion already removed from the pixel).
    pub fn pixel_ray(&self, pixel: Vector2<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.intrinsics.pixel_to_normalized(pixel);
        let dir_cam = Vector3::new(n.x, n.y, 1.0);
        let center = self.pose.center();
        let dir_world = self.pose.rotation().transpose() * dir_cam;
        (center, dir_world)
    }

    /// Back-projects a pixel with known z-depth into world coordinates.
    pub fn backproject(&self, pixel: Vector2<f64>, depth: f64) -> Vector3<f64> {
        let n = self.intrinsics.pixel_to_normalized(pixel);
        let cam = Vector3::new(n.x * depth, n.y * depth, depth);
        self.pose.camera_to_world(cam)
    }

    /// The 3x4 pinhole projection matrix `K [R|t]` (no distortion).
    pub fn projection_matrix(&self) -> nalgebra::Matrix3x4<f64> {
        let k = self.intrinsics.matrix();
        let mut rt = nalgebra::Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(self.pose.rotation());
        rt.fixed_view_mut::<3, 1>(0, 3).copy_from(self.pose.translation());
        k * rt
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CameraFile::from(self)).expect("camera serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let file: CameraFile = serde_json::from_str(text)?;
        Ok(file.into_camera())
    }
}

/// On-disk camera schema: flat scalar fields, row-major rotation.
#[derive(Serialize, Deserialize)]
struct CameraFile {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    skew: f64,
    k1: f64,
    k2: f64,
    k3: f64,
    #[serde(rename = "R")]
    r: [f64; 9],
    t: [f64; 3],
}

impl From<&Camera> for CameraFile {
    fn from(c: &Camera) -> Self {
        let rot = c.pose.rotation();
        let mut r = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                r[i * 3 + j] = rot[(i, j)];
            }
        }
        let t = c.pose.translation();
        CameraFile {
            fx: c.intrinsics.fx,
            fy: c.intrinsics.fy,
            cx: c.intrinsics.cx,
            cy: c.intrinsics.cy,
            skew: c.intrinsics.skew,
            k1: c.distortion.k1,
            k2: c.distortion.k2,
            k3: c.distortion.k3,
            r,
            t: [t.x, t.y, t.z],
        }
    }
}

impl CameraFile {
    fn into_camera(self) -> Camera {
        let rotation = Matrix3::from_row_slice(&self.r);
        let translation = Vector3::new(self.t[0], self.t[1], self.t[2]);
        Camera {
            intrinsics: Intrinsics { fx: self.fx, fy: self.fy, cx: self.cx, cy: self.cy, skew: self.skew },
            distortion: RadialDistortion::new(self.k1, self.k2, self.k3),
            pose: Pose::from_parts_renormalized(rotation, translation)
                .expect("stored rotation renormalizes"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn unit_intrinsics() -> Intrinsics {
        Intrinsics { fx: 1.0, fy: 1.0, cx: 0.0, cy: 0.0, skew: 0.0 }
    }

    #[test]
    fn project_identity_camera() {
        let cam = Camera::pinhole(unit_intrinsics(), Pose::identity());
        let p = cam.project(Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(p, Vector2::new(0.0, 0.0));
    }

    #[test]
    fn project_scales_by_focal_length() {
        let k = Intrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap();
        let cam = Camera::pinhole(k, Pose::identity());
        let p = cam.project(Vector3::new(1.0, 1.0, 2.0)).unwrap();
        assert!((p - Vector2::new(100.0, 100.0)).norm() < 1e-12);
    }

    #[test]
    fn project_rejects_behind_camera() {
        let cam = Camera::pinhole(unit_intrinsics(), Pose::identity());
        assert!(matches!(
            cam.project(Vector3::new(0.0, 0.0, -1.0)),
            Err(GeomError::BehindCamera { .. })
        ));
        assert!(cam.project(Vector3::new(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn project_matches_homogeneous_oracle() {
        // Independent oracle: multiply the 3x4 matrix against homogeneous
        // coordinates and divide. No distortion so both paths are pinhole.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let k = Intrinsics::new(
                rng.gen_range(50.0..500.0),
                rng.gen_range(50.0..500.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
            )
            .unwrap()
            .with_skew(rng.gen_range(-0.5..0.5));
            let axis = Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let angle: f64 = rng.gen_range(-1.0..1.0);
            let rot = nalgebra::Rotation3::from_scaled_axis(axis.normalize() * angle);
            let pose = Pose::from_parts_renormalized(
                rot.into_inner(),
                Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()),
            )
            .unwrap();
            let cam = Camera::pinhole(k, pose);
            let p_world = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(2.0..8.0),
            );
            let p_world = pose.camera_to_world(p_world); // guaranteed in front
            let proj = cam.project(p_world).unwrap();

            let m = cam.projection_matrix();
            let h = m * nalgebra::Vector4::new(p_world.x, p_world.y, p_world.z, 1.0);
            let oracle = Vector2::new(h.x / h.z, h.y / h.z);
            assert!((proj - oracle).norm() < 1e-12, "{proj:?} vs {oracle:?}");
        }
    }

    #[test]
    fn look_at_canonical_pose_is_identity() {
        let pose = look_at(Vector3::new(0.0, 0.0, -1.0), Vector3::zeros(), Vector3::new(0.0, 1.0, 0.0))
            .unwrap();
        assert!((pose.rotation() - Matrix3::identity()).amax() < 1e-12);
        assert!((pose.translation() - Vector3::new(0.0, 0.0, 1.0)).amax() < 1e-12);
    }

    #[test]
    fn look_at_projects_target_to_principal_point() {
        let k = Intrinsics::new(320.0, 320.0, 128.0, 96.0).unwrap();
        let target = Vector3::new(1.0, 2.0, 3.0);
        let pose = look_at(Vector3::new(5.0, -4.0, 2.0), target, Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let cam = Camera::pinhole(k, pose);
        let p = cam.project(target).unwrap();
        assert!((p - Vector2::new(128.0, 96.0)).norm() < 1e-9);
    }

    #[test]
    fn look_at_rejects_degenerate_inputs() {
        let e = Vector3::new(1.0, 1.0, 1.0);
        assert!(look_at(e, e, Vector3::z()).is_err());
        assert!(look_at(Vector3::zeros(), Vector3::z(), Vector3::z()).is_err());
    }

    #[test]
    fn look_at_result_is_orthonormal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let eye = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * 4.0;
            let target = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            if (eye - target).norm() < 1e-3 {
                continue;
            }
            let pose = look_at(eye, target, Vector3::z()).unwrap();
            let gram = pose.rotation().transpose() * pose.rotation() - Matrix3::identity();
            assert!(gram.amax() < 1e-12);
            assert!((pose.rotation().determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn distortion_round_trip_on_grid() {
        let dist = RadialDistortion::new(0.1, 0.0, 0.0);
        // 0.1 px tolerance at fx = 400 is 2.5e-4 in normalized units.
        for ix in -5..=5 {
            for iy in -5..=5 {
                let u = Vector2::new(ix as f64 * 0.08, iy as f64 * 0.08);
                let d = dist.distort_normalized(u);
                let back = dist.undistort_normalized(d);
                assert!((back - u).norm() * 400.0 < 0.1);
            }
        }
    }

    #[test]
    fn distortion_center_is_fixed_point() {
        let dist = RadialDistortion::new(-0.3, 0.2, 0.05);
        let c = Vector2::zeros();
        assert_eq!(dist.distort_normalized(c), c);
        assert_eq!(dist.undistort_normalized(c), c);
    }

    #[test]
    fn camera_json_round_trip() {
        let k = Intrinsics::new(500.0, 510.0, 320.0, 240.0).unwrap().with_skew(0.25);
        let pose = look_at(Vector3::new(3.0, 2.0, 1.0), Vector3::zeros(), Vector3::z()).unwrap();
        let cam = Camera::new(k, RadialDistortion::new(0.05, -0.01, 0.002), pose);
        let text = cam.to_json();
        let back = Camera::from_json(&text).unwrap();
        assert!((back.pose.rotation() - cam.pose.rotation()).amax() < 1e-12);
        assert!((back.pose.translation() - cam.pose.translation()).amax() < 1e-12);
        assert_eq!(back.intrinsics, cam.intrinsics);
        assert_eq!(back.distortion, cam.distortion);
    }

    proptest! {
        // Scale invariance in homogeneous input: scaling a world point toward
        // or away from the camera center along the same ray leaves the pixel
        // unchanged (the homogeneous formulation of the projective map).
        #[test]
        fn project_is_scale_invariant(px in -0.8f64..0.8, py in -0.8f64..0.8, depth in 0.5f64..10.0, lam in 0.1f64..10.0) {
            let cam = Camera::pinhole(unit_intrinsics(), Pose::identity());
            let p = Vector3::new(px * depth, py * depth, depth);
            let a = cam.project(p).unwrap();
            let b = cam.project(p * lam).unwrap();
            prop_assert!((a - b).norm() < 1e-9);
        }
    }
}
