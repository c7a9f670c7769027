//! Gaze-angle conventions and the summary statistics used in evaluation.

use serde::{Deserialize, Serialize};

use crate::camera::Vec3;
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-6;

/// Unit gaze direction for a (pitch, yaw) pair in degrees. Pitch is positive
/// upward, yaw positive toward device +x.
pub fn gaze_from_pitch_yaw(pitch_deg: f64, yaw_deg: f64) -> Vec3 {
    let (sp, cp) = pitch_deg.to_radians().sin_cos();
    let (sy, cy) = yaw_deg.to_radians().sin_cos();
    Vec3::new(sy * cp, sp, cy * cp)
}

/// Inverse of [`gaze_from_pitch_yaw`] for unit vectors, in degrees.
pub fn pitch_yaw(gaze: &Vec3) -> (f64, f64) {
    (gaze.y.clamp(-1.0, 1.0).asin().to_degrees(), gaze.x.atan2(gaze.z).to_degrees())
}

/// Angle between two unit vectors in degrees.
pub fn angular_error(a: &Vec3, b: &Vec3) -> Result<f64> {
    for v in [a, b] {
        let n = v.norm();
        if !((n - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::invalid(format!("expected a unit vector, norm is {n}")));
        }
    }
    // atan2 keeps full precision near 0 and 180 degrees, where acos does not.
    Ok(a.cross(b).norm().atan2(a.dot(b)).to_degrees())
}

/// Nearest-rank percentile: the element at 1-based rank `ceil(p/100 * n)`.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile of an empty list"));
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::invalid(format!("percentile must be in (0, 100], got {p}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[nearest_rank(p, sorted.len()) - 1])
}

/// Several percentiles over one sort.
pub fn percentiles<const N: usize>(values: &[f64], ps: [f64; N]) -> Result<[f64; N]> {
    if values.is_empty() {
        return Err(Error::Empty("percentile of an empty list"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(ps) {
        if !(p > 0.0 && p <= 100.0) {
            return Err(Error::invalid(format!("percentile must be in (0, 100], got {p}")));
        }
        *o = sorted[nearest_rank(p, sorted.len()) - 1];
    }
    Ok(out)
}

fn nearest_rank(p: f64, n: usize) -> usize {
    // p * n is exact for the integer-valued inputs used in practice; the
    // small offset keeps 0.95 * 100 from rounding up to rank 96.
    let rank = (p * n as f64 / 100.0 - 1e-9).ceil() as usize;
    rank.clamp(1, n)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("series lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("correlation needs at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateSeries("first series has zero variance"));
    }
    if syy <= 0.0 {
        return Err(Error::DegenerateSeries("second series has zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean and sample standard deviation (n - 1); the deviation is 0 for n = 1.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty("mean of an empty list"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// A labelled frame: true gaze, which target produced it, and whose eye.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub gaze: [f64; 3],
    pub target_index: usize,
    pub identity_id: u64,
}

impl GazeSample {
    pub const TARGET_COUNT: usize = 114;
    pub const HALF_FOV_DEG: f64 = 35.0;

    pub fn new(gaze: Vec3, target_index: usize, identity_id: u64) -> Result<Self> {
        let n = gaze.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("gaze must be unit length, norm is {n}")));
        }
        if target_index >= Self::TARGET_COUNT {
            return Err(Error::invalid(format!(
                "target index {target_index} outside [0, {})",
                Self::TARGET_COUNT
            )));
        }
        let (pitch, yaw) = pitch_yaw(&gaze);
        let lim = Self::HALF_FOV_DEG + 1e-9;
        if pitch.abs() > lim || yaw.abs() > lim {
            return Err(Error::invalid(format!(
                "gaze pitch/yaw ({pitch:.3}, {yaw:.3}) deg outside the +/-35 deg field"
            )));
        }
        Ok(Self { gaze: gaze.into(), target_index, identity_id })
    }

    pub fn gaze_vec(&self) -> Vec3 {
        Vec3::from(self.gaze)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn angular_error_examples() {
        let z = Vec3::z();
        assert_eq!(angular_error(&z, &z).unwrap(), 0.0);
        assert!((angular_error(&z, &Vec3::y()).unwrap() - 90.0).abs() < 1e-12);
        let one = 1f64.to_radians();
        let v = Vec3::new(0.0, one.sin(), one.cos());
        assert!((angular_error(&z, &v).unwrap() - 1.0).abs() < 1e-9);
        assert!(angular_error(&z, &Vec3::new(0.0, 0.0, 1.1)).is_err());
    }

    #[test]
    fn percentile_examples() {
        let hundred: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&hundred, 95.0).unwrap(), 95.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 50.0).unwrap(), 2.0);
        for p in [0.1, 50.0, 100.0] {
            assert_eq!(percentile(&[7.0], p).unwrap(), 7.0);
        }
        assert!(matches!(percentile(&[], 50.0), Err(Error::Empty(_))));
        assert!(percentile(&[1.0], 0.0).is_err());
        assert_eq!(percentiles(&hundred, [50.0, 75.0, 95.0]).unwrap(), [50.0, 75.0, 95.0]);
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        // Deviations (-1.5,-.5,.5,1.5) and (-1.5,.5,-.5,1.5): Sxy = 4, Sxx = Syy = 5.
        assert!((pearson_r(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(pearson_r(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DegenerateSeries(_))));
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn mean_std_uses_sample_deviation() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]).unwrap(), (4.0, 0.0));
    }

    #[test]
    fn pitch_yaw_round_trip() {
        for (p, y) in [(0.0, 0.0), (35.0, -35.0), (-20.0, 12.5)] {
            let (p2, y2) = pitch_yaw(&gaze_from_pitch_yaw(p, y));
            assert!((p - p2).abs() < 1e-12 && (y - y2).abs() < 1e-12);
        }
    }

    #[test]
    fn gaze_sample_validation() {
        assert!(GazeSample::new(gaze_from_pitch_yaw(35.0, 35.0), 3, 1).is_ok());
        assert!(GazeSample::new(gaze_from_pitch_yaw(36.0, 0.0), 3, 1).is_err());
        assert!(GazeSample::new(Vec3::z(), 114, 1).is_err());
        assert!(GazeSample::new(Vec3::new(0.0, 0.0, 2.0), 0, 1).is_err());
    }

    fn unit() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-zero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
    }

    proptest! {
        #[test]
        fn angular_error_is_symmetric(a in unit(), b in unit()) {
            prop_assert_eq!(angular_error(&a, &b).unwrap(), angular_error(&b, &a).unwrap());
            prop_assert!(angular_error(&a, &a).unwrap() < 1e-5);
        }

        #[test]
        fn percentile_is_monotone(values in proptest::collection::vec(-1e3f64..1e3, 1..60), p in 0.5f64..100.0, q in 0.5f64..100.0) {
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(percentile(&values, lo).unwrap() <= percentile(&values, hi).unwrap());
            let max = values.iter().copied().fold(f64::MIN, f64::max);
            prop_assert_eq!(percentile(&values, 100.0).unwrap(), max);
        }

        #[test]
        fn pearson_is_affine_invariant(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..30),
            noise in proptest::collection::vec(-10.0f64..10.0, 30),
            alpha in 0.01f64..100.0, beta in -1e3f64..1e3,
        ) {
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 0.5 * x + e).collect();
            let sxx: f64 = { let m = xs.iter().sum::<f64>() / xs.len() as f64; xs.iter().map(|x| (x - m).powi(2)).sum() };
            prop_assume!(sxx > 1e-6);
            if let Ok(r) = pearson_r(&xs, &ys) {
                let scaled: Vec<f64> = xs.iter().map(|x| alpha * x + beta).collect();
                let r2 = pearson_r(&scaled, &ys).unwrap();
                prop_assert!((r - r2).abs() < 1e-9);
            }
        }
    }
}
