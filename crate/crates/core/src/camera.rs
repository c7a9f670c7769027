//! Pinhole camera geometry.
//!
//! Device frame: right-handed, millimeters, +z out of the face toward the
//! gaze targets, +y up. Camera frame: +x right, +y down, +z forward. Pixel
//! `(i, j)` has its center at `(i + 0.5, j + 0.5)`.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat3 = Matrix3<f64>;

const ORTHONORMAL_TOL: f64 = 1e-9;
const MIN_DEPTH_MM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr", into = "IntrinsicsRepr")]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsRepr {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

impl TryFrom<IntrinsicsRepr> for CameraIntrinsics {
    type Error = Error;
    fn try_from(r: IntrinsicsRepr) -> Result<Self> {
        CameraIntrinsics::new(r.fx, r.fy, r.cx, r.cy, r.width, r.height)
    }
}

impl From<CameraIntrinsics> for IntrinsicsRepr {
    fn from(c: CameraIntrinsics) -> Self {
        IntrinsicsRepr { fx: c.fx, fy: c.fy, cx: c.cx, cy: c.cy, width: c.width, height: c.height }
    }
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::invalid(format!("focal lengths must be positive, got {fx}, {fy}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("sensor resolution must be positive"));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(Error::invalid(format!(
                "principal point ({cx}, {cy}) outside the {width}x{height} sensor"
            )));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Square pixels, principal point at the sensor center.
    pub fn centered(focal: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(focal, focal, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    pub fn with_focal(&self, focal: f64) -> Result<Self> {
        Self::new(focal, focal, self.cx, self.cy, self.width, self.height)
    }

    /// Normalized camera coordinates of a pixel center.
    #[inline]
    pub fn pixel_to_normalized(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (i as f64 + 0.5 - self.cx) / self.fx,
            (j as f64 + 0.5 - self.cy) / self.fy,
        )
    }
}

/// Rigid camera pose: `rotation` maps device directions into the camera
/// frame, `translation` is the center of projection in device coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct CameraPose {
    rotation: Mat3,
    translation: Vec3,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr {
    /// Row-major.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl TryFrom<PoseRepr> for CameraPose {
    type Error = Error;
    fn try_from(r: PoseRepr) -> Result<Self> {
        let m = Mat3::from_fn(|i, j| r.rotation[i][j]);
        CameraPose::new(m, Vec3::from(r.translation))
    }
}

impl From<CameraPose> for PoseRepr {
    fn from(p: CameraPose) -> Self {
        let m = p.rotation;
        PoseRepr {
            rotation: [
                [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            ],
            translation: p.translation.into(),
        }
    }
}

impl CameraPose {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let err = (rotation.transpose() * rotation - Mat3::identity()).abs().max();
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::invalid(format!("rotation is not orthonormal (error {err:e})")));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!("rotation determinant is {det}, expected +1")));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("translation must be finite"));
        }
        Ok(Self { rotation, translation })
    }

    /// Camera axes aligned with the device axes.
    pub fn identity_at(translation: Vec3) -> Self {
        Self { rotation: Mat3::identity(), translation }
    }

    /// Pose at `position` whose optical axis points at `target`; image "up"
    /// follows `up` as closely as possible.
    pub fn look_at(position: Vec3, target: Vec3, up: Vec3) -> Result<Self> {
        let forward = target - position;
        let dist = forward.norm();
        if !(dist > 1e-9) {
            return Err(Error::invalid("look_at target coincides with position"));
        }
        let z = forward / dist;
        let x = z.cross(&up);
        let xn = x.norm();
        if !(xn > 1e-9) {
            return Err(Error::invalid("look_at up vector is parallel to the view direction"));
        }
        let x = x / xn;
        let y = z.cross(&x);
        let rotation = Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Self::new(rotation, position)
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn center(&self) -> Vec3 {
        self.translation
    }

    /// Optical axis direction in device coordinates.
    pub fn forward(&self) -> Vec3 {
        Vec3::new(self.rotation[(2, 0)], self.rotation[(2, 1)], self.rotation[(2, 2)])
    }

    pub fn to_camera(&self, point: &Vec3) -> Vec3 {
        self.rotation * (point - self.translation)
    }

    pub fn direction_to_device(&self, dir_camera: &Vec3) -> Vec3 {
        self.rotation.tr_mul(dir_camera)
    }

    pub fn translated(&self, offset: &Vec3) -> Self {
        Self { rotation: self.rotation, translation: self.translation + offset }
    }

    /// Reflection across the device x = 0 plane, composed with an image-x
    /// flip so the result stays a proper rotation.
    pub fn mirrored_x(&self) -> Self {
        let mut r = self.rotation;
        for (i, j) in [(0, 1), (0, 2), (1, 0), (2, 0)] {
            r[(i, j)] = -r[(i, j)];
        }
        let t = self.translation;
        Self { rotation: r, translation: Vec3::new(-t.x, t.y, t.z) }
    }

    /// Spin about the camera's own optical axis by 180 degrees.
    pub fn rolled_180(&self) -> Self {
        let mut r = self.rotation;
        for j in 0..3 {
            r[(0, j)] = -r[(0, j)];
            r[(1, j)] = -r[(1, j)];
        }
        Self { rotation: r, translation: self.translation }
    }
}

/// Intrinsics plus pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
}

impl Camera {
    pub fn new(intrinsics: CameraIntrinsics, pose: CameraPose) -> Self {
        Self { intrinsics, pose }
    }

    pub fn project(&self, point: &Vec3) -> Result<Vec2> {
        project(point, &self.intrinsics, &self.pose)
    }

    /// Unit ray direction (device frame) through the center of pixel `(i, j)`.
    #[inline]
    pub fn pixel_ray(&self, i: usize, j: usize) -> Vec3 {
        let (xn, yn) = self.intrinsics.pixel_to_normalized(i, j);
        let d = self.pose.direction_to_device(&Vec3::new(xn, yn, 1.0));
        d / (d.x * d.x + d.y * d.y + d.z * d.z).sqrt()
    }

    /// Mirror across device x = 0; pixel columns map `i -> width - 1 - i`.
    pub fn mirrored_x(&self) -> Self {
        let mut intrinsics = self.intrinsics;
        intrinsics.cx = intrinsics.width as f64 - intrinsics.cx;
        Self { intrinsics, pose: self.pose.mirrored_x() }
    }
}

/// Pinhole projection of a device-frame point to pixel coordinates.
pub fn project(point: &Vec3, intrinsics: &CameraIntrinsics, pose: &CameraPose) -> Result<Vec2> {
    project_camera_space(&pose.to_camera(point), intrinsics)
}

/// Projection of a point already expressed in the camera frame.
pub fn project_camera_space(p: &Vec3, intrinsics: &CameraIntrinsics) -> Result<Vec2> {
    if p.z <= MIN_DEPTH_MM {
        return Err(Error::BehindCamera { z: p.z });
    }
    Ok(Vec2::new(
        intrinsics.fx * p.x / p.z + intrinsics.cx,
        intrinsics.fy * p.y / p.z + intrinsics.cy,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn intr(fx: f64) -> CameraIntrinsics {
        CameraIntrinsics::new(fx, fx, 160.0, 120.0, 320, 240).unwrap()
    }

    #[test]
    fn on_axis_point_hits_principal_point() {
        for fx in [100.0, 270.0, 600.0] {
            let p = project(&Vec3::new(0.0, 0.0, 100.0), &intr(fx), &CameraPose::identity_at(Vec3::zeros())).unwrap();
            assert_eq!(p, Vec2::new(160.0, 120.0));
        }
    }

    #[test]
    fn off_axis_point() {
        let p = project_camera_space(&Vec3::new(10.0, 0.0, 100.0), &intr(270.0)).unwrap();
        assert!((p.x - 187.0).abs() < 1e-12);
        assert_eq!(p.y, 120.0);
    }

    #[test]
    fn behind_camera_is_an_error() {
        let e = project_camera_space(&Vec3::new(0.0, 0.0, -5.0), &intr(270.0)).unwrap_err();
        assert!(matches!(e, Error::BehindCamera { .. }));
        assert!(project_camera_space(&Vec3::new(1.0, 0.0, 0.0), &intr(270.0)).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, -0.1, 1.0, 4, 4).is_err());
    }

    #[test]
    fn pose_validation() {
        let bad = Mat3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(CameraPose::new(bad, Vec3::zeros()).is_err());
        let reflection = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        assert!(CameraPose::new(reflection, Vec3::zeros()).is_err());
    }

    #[test]
    fn look_at_points_the_optical_axis() {
        let pos = Vec3::new(14.0, -16.0, 24.0);
        let pose = CameraPose::look_at(pos, Vec3::zeros(), Vec3::y()).unwrap();
        let c = pose.to_camera(&Vec3::zeros());
        assert!(c.x.abs() < 1e-12 && c.y.abs() < 1e-12);
        assert!((c.z - pos.norm()).abs() < 1e-12);
        // Device +y appears upward, i.e. at smaller image rows.
        let above = project(&Vec3::new(0.0, 1.0, 0.0), &intr(270.0), &pose).unwrap();
        assert!(above.y < 120.0);
    }

    #[test]
    fn pose_json_round_trip_is_exact() {
        let pose = CameraPose::look_at(Vec3::new(3.3, -7.1, 29.0), Vec3::new(0.2, 0.0, 1.0), Vec3::y()).unwrap();
        let s = serde_json::to_string(&pose).unwrap();
        let back: CameraPose = serde_json::from_str(&s).unwrap();
        assert_eq!(back, pose);
    }

    #[test]
    fn mirrored_camera_projects_mirrored_points() {
        let cam = Camera::new(intr(270.0), CameraPose::look_at(Vec3::new(10.0, -12.0, 30.0), Vec3::zeros(), Vec3::y()).unwrap());
        let m = cam.mirrored_x();
        let p = Vec3::new(2.5, 1.0, 3.0);
        let a = cam.project(&p).unwrap();
        let b = m.project(&Vec3::new(-p.x, p.y, p.z)).unwrap();
        assert!((a.x - (320.0 - b.x)).abs() < 1e-9);
        assert!((a.y - b.y).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn projection_is_scale_invariant_along_rays(
            x in -50.0f64..50.0, y in -50.0f64..50.0, z in 1.0f64..200.0, lambda in 0.01f64..100.0
        ) {
            let k = intr(270.0);
            let a = project_camera_space(&Vec3::new(x, y, z), &k).unwrap();
            let b = project_camera_space(&(Vec3::new(x, y, z) * lambda), &k).unwrap();
            prop_assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
        }
    }
}
