//! Dataset and sweep specifications and their JSON loading.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metrics::GazeSample;
use crate::optics::OpticsConfig;
use crate::scene::{RigConfig, SlippageRanges};

/// Schema version every config document must declare.
pub const SPEC_VERSION: &str = "1.0";

fn config_err(pointer: &str, message: impl Into<String>) -> Error {
    Error::Config { pointer: pointer.to_string(), message: message.into() }
}

/// Gaze-target layout parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub count: usize,
    pub half_fov_deg: f64,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self { count: GazeSample::TARGET_COUNT, half_fov_deg: GazeSample::HALF_FOV_DEG }
    }
}

fn default_identity_count() -> usize {
    50
}
fn default_slippage_per_gaze() -> usize {
    24
}

/// Everything needed to regenerate a labelled image set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    #[serde(default = "default_identity_count")]
    pub identity_count: usize,
    #[serde(default)]
    pub identity_seed_base: u64,
    #[serde(default)]
    pub targets: TargetSpec,
    #[serde(default = "default_slippage_per_gaze")]
    pub slippage_per_gaze: usize,
    #[serde(default)]
    pub slippage_ranges: SlippageRanges,
    #[serde(default = "RigConfig::default_rig")]
    pub rig: RigConfig,
    #[serde(default)]
    pub camera_id: usize,
    #[serde(default)]
    pub optics: OpticsConfig,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            identity_count: default_identity_count(),
            identity_seed_base: 0,
            targets: TargetSpec::default(),
            slippage_per_gaze: default_slippage_per_gaze(),
            slippage_ranges: SlippageRanges::default(),
            rig: RigConfig::default_rig(),
            camera_id: 0,
            optics: OpticsConfig::default(),
            master_seed: 0,
        }
    }
}

impl DatasetSpec {
    /// Frames per identity: targets times slippage samples.
    pub fn frames_per_identity(&self) -> usize {
        self.targets.count * self.slippage_per_gaze
    }

    pub fn total_frames(&self) -> usize {
        self.identity_count * self.frames_per_identity()
    }

    pub fn identity_ids(&self) -> Vec<u64> {
        (0..self.identity_count as u64).collect()
    }

    /// Checks invariants, naming the offending field relative to `at`.
    pub fn validate_at(&self, at: &str) -> Result<()> {
        if self.identity_count < 5 {
            return Err(config_err(&format!("{at}/identity_count"), "at least 5 identities are required"));
        }
        if self.slippage_per_gaze < 1 {
            return Err(config_err(&format!("{at}/slippage_per_gaze"), "must be at least 1"));
        }
        let t = self.targets;
        if t.count == 0 || t.count > GazeSample::TARGET_COUNT {
            return Err(config_err(
                &format!("{at}/targets/count"),
                format!("must be in [1, {}]", GazeSample::TARGET_COUNT),
            ));
        }
        if !(t.half_fov_deg > 0.0 && t.half_fov_deg <= GazeSample::HALF_FOV_DEG) {
            return Err(config_err(
                &format!("{at}/targets/half_fov_deg"),
                format!("must be in (0, {}]", GazeSample::HALF_FOV_DEG),
            ));
        }
        let r = self.slippage_ranges;
        if !(r.x > 0.0 && r.y > 0.0 && r.z > 0.0) {
            return Err(config_err(&format!("{at}/slippage_ranges"), "ranges must be positive"));
        }
        self.rig.validate().map_err(|e| config_err(&format!("{at}/rig"), e.to_string()))?;
        self.rig
            .camera(self.camera_id)
            .map_err(|e| config_err(&format!("{at}/camera_id"), e.to_string()))?;
        self.optics.validate().map_err(|e| config_err(&format!("{at}/optics"), e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_at("")
    }
}

/// Hardware parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    BlurRadius,
    Brightness,
    NoisePsnr,
    CameraOffsetVertical,
    CameraLineToOnaxis,
    FocalLength,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::BlurRadius => "blur_radius",
            Axis::Brightness => "brightness",
            Axis::NoisePsnr => "noise_psnr",
            Axis::CameraOffsetVertical => "camera_offset_vertical",
            Axis::CameraLineToOnaxis => "camera_line_to_onaxis",
            Axis::FocalLength => "focal_length",
        }
    }

    /// Camera axes change geometry; optical axes only change the pipeline.
    pub fn is_camera(self) -> bool {
        matches!(self, Axis::CameraOffsetVertical | Axis::CameraLineToOnaxis | Axis::FocalLength)
    }

    /// Grid used when a config leaves `axis_values` out.
    pub fn default_values(self) -> Vec<AxisValue> {
        let v = |xs: &[f64]| xs.iter().map(|&x| AxisValue(x)).collect();
        match self {
            Axis::BlurRadius => v(&[0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]),
            Axis::Brightness => (0..9).map(|k| AxisValue(10f64.powf(-2.0 + 0.5 * k as f64))).collect(),
            Axis::NoisePsnr => v(&[f64::INFINITY, 40.0, 32.0, 28.0, 24.0, 20.0]),
            Axis::CameraOffsetVertical => (-4..=4).map(|k| AxisValue(k as f64)).collect(),
            Axis::CameraLineToOnaxis => (0..6).map(|k| AxisValue(k as f64 / 5.0)).collect(),
            Axis::FocalLength => v(&[200.0, 270.0, 300.0, 400.0, 500.0, 600.0]),
        }
    }

    /// The optics configuration for one value of an optical axis.
    pub fn apply_optics(self, base: &OpticsConfig, value: AxisValue) -> OpticsConfig {
        let mut o = *base;
        match self {
            Axis::BlurRadius => o.blur_radius = value.0,
            Axis::Brightness => o.brightness = value.0,
            Axis::NoisePsnr => {
                if value.0.is_infinite() {
                    o.target_psnr = None;
                    o.read_sigma = 0.0;
                    o.shot_gain = 0.0;
                } else {
                    o.target_psnr = Some(value.0);
                }
            }
            _ => {}
        }
        o
    }
}

/// One sweep coordinate. Infinity (noise-free) is written as `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AxisValue(pub f64);

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_infinite() {
            f.write_str(if self.0 > 0.0 { "inf" } else { "-inf" })
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for AxisValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for AxisValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(AxisValue(v)),
            Raw::Text(s) if s == "inf" => Ok(AxisValue(f64::INFINITY)),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

fn default_trials() -> usize {
    3
}
fn default_split() -> [usize; 2] {
    [4, 1]
}
fn default_lambda() -> f64 {
    crate::estimator::DEFAULT_LAMBDA
}
fn default_true() -> bool {
    true
}
fn default_dark_threshold() -> f64 {
    crate::estimator::DEFAULT_DARK_THRESHOLD
}

/// A one-dimensional hardware sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    #[serde(default)]
    pub axis_values: Vec<AxisValue>,
    #[serde(default)]
    pub base: DatasetSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Train : test identity ratio.
    #[serde(default = "default_split")]
    pub split_ratio: [usize; 2],
    #[serde(default = "default_lambda")]
    pub ridge_lambda: f64,
    #[serde(default = "default_true")]
    pub geometric_glints: bool,
    #[serde(default = "default_dark_threshold")]
    pub dark_threshold: f64,
}

impl SweepSpec {
    pub fn new(axis: Axis, axis_values: Vec<AxisValue>, base: DatasetSpec) -> Self {
        Self {
            axis,
            axis_values,
            base,
            trials: default_trials(),
            split_ratio: default_split(),
            ridge_lambda: default_lambda(),
            geometric_glints: true,
            dark_threshold: default_dark_threshold(),
        }
    }

    /// Fills in the default grid when no values were given.
    pub fn resolved(mut self) -> Self {
        if self.axis_values.is_empty() {
            self.axis_values = self.axis.default_values();
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate_at("/base")?;
        let vals = &self.axis_values;
        if vals.is_empty() {
            return Err(config_err("/axis_values", "at least one axis value is required"));
        }
        let increasing = vals.windows(2).all(|w| w[0].0 < w[1].0);
        let decreasing = vals.windows(2).all(|w| w[0].0 > w[1].0);
        if !(increasing || decreasing) {
            return Err(config_err("/axis_values", "values must be strictly monotone"));
        }
        for (i, v) in vals.iter().enumerate() {
            let ok = match self.axis {
                Axis::BlurRadius => v.0 >= 0.0 && v.0.is_finite(),
                Axis::Brightness | Axis::FocalLength => v.0 > 0.0 && v.0.is_finite(),
                Axis::NoisePsnr => v.0 > 0.0,
                Axis::CameraOffsetVertical => v.0.is_finite(),
                Axis::CameraLineToOnaxis => (0.0..=1.0).contains(&v.0),
            };
            if !ok {
                return Err(config_err(&format!("/axis_values/{i}"), format!("{v} is not valid for {}", self.axis.name())));
            }
        }
        if self.trials == 0 {
            return Err(config_err("/trials", "at least one trial is required"));
        }
        if self.split_ratio[0] == 0 || self.split_ratio[1] == 0 {
            return Err(config_err("/split_ratio", "both parts of the ratio must be positive"));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(config_err("/ridge_lambda", "must be finite and >= 0"));
        }
        if !(self.dark_threshold > 0.0 && self.dark_threshold < 1.0) {
            return Err(config_err("/dark_threshold", "must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Converts a serde path (`a.b[2].c`) into a JSON pointer (`/a/b/2/c`).
fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Parses a versioned config document. Errors carry the JSON pointer of
/// the offending value; syntax errors carry the line and column.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config {
        pointer: String::new(),
        message: format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column()),
    })?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| config_err("", "config document must be a JSON object"))?;
    match obj.remove("spec_version") {
        None => return Err(config_err("/spec_version", "missing required field")),
        Some(serde_json::Value::String(v)) if v == SPEC_VERSION => {}
        Some(other) => {
            return Err(config_err("/spec_version", format!("unsupported version {other}; expected \"{SPEC_VERSION}\"")))
        }
    }
    serde_path_to_error::deserialize(value).map_err(|e| Error::Config {
        pointer: json_pointer(e.path()),
        message: e.into_inner().to_string(),
    })
}

pub fn load_config<T: DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Serializes a config with its schema version, as `parse_config` expects.
pub fn to_config_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("config serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.insert("spec_version".into(), SPEC_VERSION.into());
    }
    serde_json::to_string_pretty(&v).expect("value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_documents_use_defaults() {
        let d: DatasetSpec = parse_config(r#"{"spec_version": "1.0"}"#).unwrap();
        assert_eq!(d, DatasetSpec::default());
        assert_eq!(d.frames_per_identity(), 2736);
        let s: SweepSpec = parse_config(r#"{"spec_version": "1.0", "axis": "noise_psnr"}"#).unwrap();
        let s = s.resolved();
        assert_eq!(s.axis_values[0], AxisValue(f64::INFINITY));
        assert!(s.validate().is_ok());
    }

    #[test]
    fn errors_name_the_pointer() {
        let e = parse_config::<SweepSpec>(
            r#"{"spec_version": "1.0", "axis": "blur_radius", "base": {"rig": {"cameras": [{"intrinsics": 3}]}}}"#,
        )
        .unwrap_err();
        match e {
            Error::Config { pointer, .. } => assert!(pointer.starts_with("/base/rig/cameras/0"), "{pointer}"),
            other => panic!("{other}"),
        }
        let e = parse_config::<DatasetSpec>("{\"spec_version\": \"1.0\",\n  \"identity_count\": }").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_config::<DatasetSpec>(r#"{"identity_count": 5}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref pointer, .. } if pointer == "/spec_version"));
        let e = parse_config::<DatasetSpec>(r#"{"spec_version": "1.0", "identity_cnt": 5}"#).unwrap_err();
        assert!(e.to_string().contains("identity_cnt"));
    }

    #[test]
    fn validation_pointers() {
        let mut s = SweepSpec::new(Axis::BlurRadius, vec![AxisValue(0.0), AxisValue(0.0)], DatasetSpec::default());
        assert!(matches!(s.validate(), Err(Error::Config { ref pointer, .. }) if pointer == "/axis_values"));
        s.axis_values = vec![AxisValue(0.0)];
        s.base.identity_count = 4;
        assert!(matches!(s.validate(), Err(Error::Config { ref pointer, .. }) if pointer == "/base/identity_count"));
    }

    #[test]
    fn round_trip_through_text() {
        let s = SweepSpec::new(Axis::NoisePsnr, Axis::NoisePsnr.default_values(), DatasetSpec::default());
        let back: SweepSpec = parse_config(&to_config_json(&s)).unwrap();
        assert_eq!(back, s);
    }
}
