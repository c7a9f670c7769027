//! Parametric eye, illumination and rig descriptions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{Camera, CameraIntrinsics, CameraPose, Mat3, Vec3};
use crate::error::{Error, Result};
use crate::metrics::pitch_yaw;

/// Upper-lid drop per degree of downward pitch, mm.
pub const LID_DROP_MM_PER_DEG: f64 = 0.3;
/// Periocular skin plane, mm in front of the eyeball center along device +z.
pub const SKIN_PLANE_OFFSET_MM: f64 = 4.0;
/// Horizontal to vertical semi-axis ratio of the eyelid opening.
pub const LID_ASPECT: f64 = 1.3;

/// Per-identity eye and periocular parameters. Positions are in device
/// coordinates (mm); albedos are 850 nm reflectances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyeModel {
    pub eyeball_center: Vec3,
    pub eyeball_radius: f64,
    pub cornea_radius: f64,
    pub cornea_center_offset: f64,
    pub pupil_radius: f64,
    pub iris_radius: f64,
    pub albedo_pupil: f64,
    pub albedo_iris: f64,
    pub albedo_sclera: f64,
    pub albedo_skin: f64,
    pub eyelid_aperture: f64,
    pub texture_seed: u64,
    /// Set on mirrored identities so procedural textures mirror with the
    /// geometry.
    #[serde(default)]
    pub mirrored: bool,
}

impl Default for EyeModel {
    fn default() -> Self {
        Self {
            eyeball_center: RigConfig::DEFAULT_EYE_CENTER.into(),
            eyeball_radius: 12.0,
            cornea_radius: 7.8,
            cornea_center_offset: 5.6,
            pupil_radius: 2.5,
            iris_radius: 6.0,
            albedo_pupil: 0.008,
            albedo_iris: 0.4,
            albedo_sclera: 0.75,
            albedo_skin: 0.55,
            eyelid_aperture: 10.0,
            texture_seed: 0,
            mirrored: false,
        }
    }
}

impl EyeModel {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("eye model: {m}")));
        if !self.eyeball_center.iter().all(|v| v.is_finite()) {
            return fail("eyeball center must be finite");
        }
        if !(0.0 < self.pupil_radius
            && self.pupil_radius < self.iris_radius
            && self.iris_radius < self.eyeball_radius)
        {
            return fail("need 0 < pupil_radius < iris_radius < eyeball_radius");
        }
        if !(0.0 < self.cornea_radius && self.cornea_radius < self.eyeball_radius) {
            return fail("need 0 < cornea_radius < eyeball_radius");
        }
        if !(self.cornea_center_offset + self.cornea_radius > self.eyeball_radius) {
            return fail("cornea must protrude beyond the eyeball");
        }
        if !(self.cornea_center_offset >= 0.0) {
            return fail("cornea offset must be non-negative");
        }
        for (name, a) in [
            ("pupil", self.albedo_pupil),
            ("iris", self.albedo_iris),
            ("sclera", self.albedo_sclera),
            ("skin", self.albedo_skin),
        ] {
            if !(0.0..=1.0).contains(&a) {
                return fail(&format!("{name} albedo {a} outside [0, 1]"));
            }
        }
        if self.albedo_pupil > 0.05 {
            return fail("pupil albedo must not exceed 0.05");
        }
        if !(self.eyelid_aperture > 0.0) {
            return fail("eyelid aperture must be positive");
        }
        Ok(())
    }

    pub fn with_center(mut self, center: Vec3) -> Self {
        self.eyeball_center = center;
        self
    }

    /// Distance from the eyeball center to the limbus plane, where the
    /// cornea and eyeball spheres meet; the iris sits in this plane.
    pub fn limbus_depth(&self) -> f64 {
        let d = self.cornea_center_offset;
        (d * d + self.eyeball_radius * self.eyeball_radius - self.cornea_radius * self.cornea_radius)
            / (2.0 * d)
    }

    pub fn limbus_radius(&self) -> f64 {
        let h = self.limbus_depth();
        (self.eyeball_radius * self.eyeball_radius - h * h).max(0.0).sqrt()
    }
}

/// Reflect an identity across the device x = 0 plane.
pub fn mirror_identity(eye: &EyeModel) -> EyeModel {
    let mut out = eye.clone();
    out.eyeball_center.x = -eye.eyeball_center.x;
    out.mirrored = !eye.mirrored;
    out
}

/// Deterministic identity with anatomy jittered around the defaults.
pub fn generate_identity(identity_seed: u64) -> EyeModel {
    let mut rng = ChaCha8Rng::seed_from_u64(identity_seed);
    let eyeball_radius = rng.gen_range(11.0..=13.0);
    let cornea_radius = rng.gen_range(7.4..=8.2);
    let protrusion = rng.gen_range(1.2..=1.8);
    let mut eye = EyeModel {
        eyeball_radius,
        cornea_radius,
        cornea_center_offset: eyeball_radius + protrusion - cornea_radius,
        pupil_radius: rng.gen_range(1.5..=4.0),
        iris_radius: rng.gen_range(5.4..=6.0),
        albedo_pupil: rng.gen_range(0.007..=0.0095),
        albedo_iris: rng.gen_range(0.25..=0.6),
        albedo_sclera: rng.gen_range(0.6..=0.9),
        albedo_skin: rng.gen_range(0.35..=0.75),
        eyelid_aperture: rng.gen_range(8.0..=12.0),
        texture_seed: rng.gen(),
        ..EyeModel::default()
    };
    eye.iris_radius = eye.iris_radius.min(eye.limbus_radius() - 0.05);
    eye
}

/// An identity rotated to a gaze direction and placed in the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedEye {
    pub model: EyeModel,
    /// Columns are the eye-local x, y, z axes in device coordinates; local z
    /// is the visual axis.
    pub orientation: Mat3,
}

impl PosedEye {
    pub fn rest(model: EyeModel) -> Self {
        Self { model, orientation: Mat3::identity() }
    }

    pub fn gaze(&self) -> Vec3 {
        self.orientation.column(2).into_owned()
    }

    pub fn center(&self) -> Vec3 {
        self.model.eyeball_center
    }

    pub fn cornea_center(&self) -> Vec3 {
        self.center() + self.gaze() * self.model.cornea_center_offset
    }

    pub fn cornea_apex(&self) -> Vec3 {
        self.center() + self.gaze() * (self.model.cornea_center_offset + self.model.cornea_radius)
    }

    /// Center of the pupil disk (in the limbus plane).
    pub fn pupil_center(&self) -> Vec3 {
        self.center() + self.gaze() * self.model.limbus_depth()
    }

    /// Upper-lid drop in mm for the current gaze.
    pub fn lid_drop(&self) -> f64 {
        let (pitch, _) = pitch_yaw(&self.gaze());
        LID_DROP_MM_PER_DEG * (-pitch).max(0.0)
    }

    /// Rigid rotation about the eyeball center.
    pub fn rotated(&self, rotation: &Mat3) -> Self {
        Self { model: self.model.clone(), orientation: rotation * self.orientation }
    }

    pub fn translated(&self, offset: &Vec3) -> Self {
        let mut model = self.model.clone();
        model.eyeball_center += offset;
        Self { model, orientation: self.orientation }
    }
}

/// Orientation whose third column is `gaze`, built without trigonometry so
/// that mirrored gazes give exactly mirrored frames.
fn orientation_for(gaze: &Vec3) -> Mat3 {
    let right = Vec3::new(gaze.z, 0.0, -gaze.x);
    let right = right / (right.x * right.x + right.y * right.y + right.z * right.z).sqrt();
    let up = gaze.cross(&right);
    Mat3::from_columns(&[right, up, *gaze])
}

/// Rotate the eyeball so its visual axis points along `gaze`.
pub fn apply_gaze(eye: &EyeModel, gaze: &Vec3) -> Result<PosedEye> {
    let n = gaze.norm();
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("gaze must be unit length, norm is {n}")));
    }
    if gaze.z <= 0.0 {
        return Err(Error::invalid("gaze must point toward device +z"));
    }
    Ok(PosedEye { model: eye.clone(), orientation: orientation_for(gaze) })
}

/// Point light at 850 nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Illuminant {
    pub position: Vec3,
    pub radiant_intensity: f64,
    #[serde(default = "Illuminant::default_wavelength")]
    pub wavelength_nm: f64,
}

impl Illuminant {
    pub fn new(position: Vec3, radiant_intensity: f64) -> Result<Self> {
        let led = Self { position, radiant_intensity, wavelength_nm: 850.0 };
        led.validate()?;
        Ok(led)
    }

    fn default_wavelength() -> f64 {
        850.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radiant_intensity >= 0.0) || !self.radiant_intensity.is_finite() {
            return Err(Error::invalid("LED radiant intensity must be finite and >= 0"));
        }
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("LED position must be finite"));
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { radiant_intensity: self.radiant_intensity * k, ..*self }
    }

    pub fn mirrored_x(&self) -> Self {
        let mut out = *self;
        out.position.x = -out.position.x;
        out
    }
}

/// Cameras and LEDs fixed to the device frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigConfig {
    pub cameras: Vec<Camera>,
    pub leds: Vec<Illuminant>,
    pub nominal_eye_center: Vec3,
}

impl RigConfig {
    /// Right eye; device +x is the wearer's left.
    pub const DEFAULT_EYE_CENTER: [f64; 3] = [-32.0, 0.0, 0.0];
    /// Nominal camera offset from the eye center: temporal, below, in front.
    pub const DEFAULT_CAMERA_OFFSET: [f64; 3] = [-15.0, -9.0, 29.0];
    pub const DEFAULT_FOCAL_PX: f64 = 270.0;
    pub const DEFAULT_WIDTH: usize = 320;
    pub const DEFAULT_HEIGHT: usize = 240;
    pub const DEFAULT_LED_INTENSITY: f64 = 220.0;
    /// Cameras look at the front of the eye, this far along +z from the
    /// rotation center, so the pupil sits near the middle of the frame.
    pub const AIM_DEPTH_MM: f64 = 10.0;

    /// Off-axis camera on the lower temporal frame plus four LEDs around the
    /// lens rim.
    pub fn default_rig() -> Self {
        let eye = Vec3::from(Self::DEFAULT_EYE_CENTER);
        let intrinsics =
            CameraIntrinsics::centered(Self::DEFAULT_FOCAL_PX, Self::DEFAULT_WIDTH, Self::DEFAULT_HEIGHT)
                .expect("default intrinsics are valid");
        let aim = eye + Vec3::new(0.0, 0.0, Self::AIM_DEPTH_MM);
        let pose = CameraPose::look_at(eye + Vec3::from(Self::DEFAULT_CAMERA_OFFSET), aim, Vec3::y())
            .expect("default pose is valid");
        let leds = [(-15.0, -11.0), (15.0, -11.0), (-15.0, 11.0), (15.0, 11.0)]
            .into_iter()
            .map(|(x, y)| {
                Illuminant::new(eye + Vec3::new(x, y, 22.0), Self::DEFAULT_LED_INTENSITY)
                    .expect("default LED is valid")
            })
            .collect();
        Self { cameras: vec![Camera::new(intrinsics, pose)], leds, nominal_eye_center: eye }
    }

    /// Point the nominal and swept cameras look at.
    pub fn aim_point(&self) -> Vec3 {
        self.nominal_eye_center + Vec3::new(0.0, 0.0, Self::AIM_DEPTH_MM)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cameras.is_empty() {
            return Err(Error::invalid("rig needs at least one camera"));
        }
        if self.leds.is_empty() {
            return Err(Error::invalid("rig needs at least one LED"));
        }
        self.leds.iter().try_for_each(Illuminant::validate)
    }

    pub fn camera(&self, id: usize) -> Result<&Camera> {
        self.cameras.get(id).ok_or_else(|| {
            Error::invalid(format!("camera id {id} outside [0, {})", self.cameras.len()))
        })
    }
}

/// Device displacement from its nominal fit, mm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlippageTransform {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl SlippageTransform {
    pub fn new(dx: f64, dy: f64, dz: f64) -> Self {
        Self { dx, dy, dz }
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.dx, self.dy, self.dz)
    }
}

/// Symmetric half-ranges for slippage sampling, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlippageRanges {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for SlippageRanges {
    fn default() -> Self {
        Self { x: 3.0, y: 3.0, z: 6.0 }
    }
}

/// Independent uniform draws from each symmetric range.
pub fn sample_slippage(rng_seed: u64, ranges: &SlippageRanges) -> Result<SlippageTransform> {
    if !(ranges.x > 0.0 && ranges.y > 0.0 && ranges.z > 0.0) {
        return Err(Error::invalid("slippage ranges must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(SlippageTransform {
        dx: rng.gen_range(-ranges.x..=ranges.x),
        dy: rng.gen_range(-ranges.y..=ranges.y),
        dz: rng.gen_range(-ranges.z..=ranges.z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::gaze_from_pitch_yaw;

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (a - b).abs().max() <= tol
    }

    #[test]
    fn default_model_is_valid() {
        EyeModel::default().validate().unwrap();
        let e = EyeModel::default();
        assert!((e.limbus_depth() - 10.225).abs() < 1e-3);
        assert!(e.iris_radius < e.limbus_radius());
    }

    #[test]
    fn validation_catches_each_invariant() {
        let bad = [
            EyeModel { pupil_radius: 7.0, ..Default::default() },
            EyeModel { cornea_center_offset: 3.0, ..Default::default() },
            EyeModel { cornea_radius: 12.5, ..Default::default() },
            EyeModel { albedo_pupil: 0.06, ..Default::default() },
            EyeModel { albedo_skin: 1.2, ..Default::default() },
        ];
        for e in bad {
            assert!(e.validate().is_err(), "{e:?}");
        }
    }

    #[test]
    fn straight_gaze_is_rest_pose() {
        let eye = EyeModel::default();
        let posed = apply_gaze(&eye, &Vec3::z()).unwrap();
        assert_eq!(posed, PosedEye::rest(eye));
    }

    #[test]
    fn pitch_up_moves_apex_up() {
        let eye = EyeModel::default();
        let rest = PosedEye::rest(eye.clone()).cornea_apex();
        let up = apply_gaze(&eye, &gaze_from_pitch_yaw(35.0, 0.0)).unwrap().cornea_apex();
        let expected = 35f64.to_radians().sin() * (5.6 + 7.8);
        assert!((up.y - rest.y - expected).abs() < 1e-9);
    }

    #[test]
    fn yaw_there_and_back_is_identity() {
        let eye = EyeModel::default();
        let posed = apply_gaze(&eye, &gaze_from_pitch_yaw(0.0, 10.0)).unwrap();
        let back = nalgebra::Rotation3::from_axis_angle(&Vec3::y_axis(), -10f64.to_radians());
        let restored = posed.rotated(back.matrix());
        assert!(close(&restored.orientation, &Mat3::identity(), 1e-9));
        assert!((restored.cornea_apex() - PosedEye::rest(eye).cornea_apex()).norm() < 1e-9);
    }

    #[test]
    fn orientation_is_a_rotation() {
        for (p, y) in [(35.0, 35.0), (-35.0, 20.0), (10.0, -35.0)] {
            let o = apply_gaze(&EyeModel::default(), &gaze_from_pitch_yaw(p, y)).unwrap().orientation;
            assert!(close(&(o.transpose() * o), &Mat3::identity(), 1e-12));
            assert!((o.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lid_drops_only_when_looking_down() {
        let eye = EyeModel::default();
        assert_eq!(apply_gaze(&eye, &gaze_from_pitch_yaw(20.0, 0.0)).unwrap().lid_drop(), 0.0);
        let down = apply_gaze(&eye, &gaze_from_pitch_yaw(-20.0, 0.0)).unwrap().lid_drop();
        assert!((down - 6.0).abs() < 1e-9);
    }

    #[test]
    fn mirror_examples() {
        let eye = EyeModel { eyeball_center: Vec3::new(32.0, 0.0, 0.0), ..Default::default() };
        let m = mirror_identity(&eye);
        assert_eq!(m.eyeball_center, Vec3::new(-32.0, 0.0, 0.0));
        assert_eq!(m.eyeball_radius, eye.eyeball_radius);
        assert_eq!(m.albedo_iris, eye.albedo_iris);
        assert_eq!(mirror_identity(&m), eye);
        let posed = apply_gaze(&m, &Vec3::z()).unwrap();
        assert_eq!(posed.gaze(), Vec3::z());
    }

    #[test]
    fn slippage_default_ranges_and_determinism() {
        let r = SlippageRanges::default();
        for seed in 0..2000 {
            let s = sample_slippage(seed, &r).unwrap();
            assert!(s.dx.abs() <= 3.0 && s.dy.abs() <= 3.0 && s.dz.abs() <= 6.0);
        }
        assert_eq!(sample_slippage(42, &r).unwrap(), sample_slippage(42, &r).unwrap());
        assert!(sample_slippage(1, &SlippageRanges { x: 0.0, y: 1.0, z: 1.0 }).is_err());
    }

    #[test]
    fn slippage_is_uniform() {
        // Monte Carlo: the mean of U(-a, a) over 1e5 draws has std a/sqrt(3e5),
        // about 0.0055 mm for a = 3 and 0.011 mm for a = 6.
        let r = SlippageRanges::default();
        let n = 100_000u64;
        let mut sum = [0.0f64; 3];
        let mut min = [f64::MAX; 3];
        let mut max = [f64::MIN; 3];
        for seed in 0..n {
            let s = sample_slippage(seed, &r).unwrap();
            for (k, v) in [s.dx, s.dy, s.dz].into_iter().enumerate() {
                sum[k] += v;
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        for (k, half) in [3.0, 3.0, 6.0].into_iter().enumerate() {
            assert!((sum[k] / n as f64).abs() < 0.05, "mean {k}");
            assert!((min[k] + half).abs() < 0.01 * half);
            assert!((max[k] - half).abs() < 0.01 * half);
        }
    }

    #[test]
    fn identities_are_deterministic_distinct_and_valid() {
        assert_eq!(generate_identity(5), generate_identity(5));
        let models: Vec<EyeModel> = (0..1000).map(generate_identity).collect();
        for i in 1..models.len() {
            assert_ne!(models[i], models[i - 1]);
        }
        let mut seeds: Vec<u64> = models.iter().map(|m| m.texture_seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn identity_ranges_hold_over_many_seeds() {
        for seed in 0..10_000 {
            let e = generate_identity(seed);
            e.validate().unwrap();
            assert!((11.0..=13.0).contains(&e.eyeball_radius));
            assert!((1.5..=4.0).contains(&e.pupil_radius));
            assert!((0.25..=0.6).contains(&e.albedo_iris));
            assert!((0.6..=0.9).contains(&e.albedo_sclera));
            assert!((0.35..=0.75).contains(&e.albedo_skin));
            assert!((8.0..=12.0).contains(&e.eyelid_aperture));
        }
    }

    #[test]
    fn default_rig_is_valid_and_at_nominal_standoff() {
        let rig = RigConfig::default_rig();
        rig.validate().unwrap();
        let d = (rig.cameras[0].pose.center() - rig.nominal_eye_center).norm();
        assert!((28.0..=35.0).contains(&d), "{d}");
        assert!(RigConfig { leds: vec![], ..rig.clone() }.validate().is_err());
        let json = serde_json::to_string(&rig).unwrap();
        assert_eq!(serde_json::from_str::<RigConfig>(&json).unwrap(), rig);
    }
}
