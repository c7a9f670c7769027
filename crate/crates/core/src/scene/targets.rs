//! Gaze-target layout: target 0 straight ahead, the rest on concentric rings
//! in (pitch, yaw) space with equally spaced radii out to the half field of
//! view and per-ring counts proportional to radius.

use crate::camera::Vec3;
use crate::error::{Error, Result};
use crate::metrics::gaze_from_pitch_yaw;

/// Number of rings that makes radial and along-ring spacing roughly equal
/// for `n` ring targets: solves K(K+1) = n / pi.
fn ring_count(n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let k = ((-1.0 + (1.0 + 4.0 * n as f64 / std::f64::consts::PI).sqrt()) / 2.0).round();
    (k as usize).clamp(1, n)
}

/// Largest-remainder apportionment of `n` targets with weights 1..=k.
fn ring_sizes(n: usize, k: usize) -> Vec<usize> {
    let total_weight = (k * (k + 1) / 2) as f64;
    let quotas: Vec<f64> = (1..=k).map(|r| n as f64 * r as f64 / total_weight).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut leftover = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    // Larger remainder first; ties go to the outer ring.
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(b.cmp(&a))
    });
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        sizes[i] += 1;
        leftover -= 1;
    }
    sizes
}

/// (pitch, yaw) in degrees for every target.
pub fn target_angles(count: usize, half_fov_deg: f64) -> Result<Vec<(f64, f64)>> {
    if count == 0 {
        return Err(Error::invalid("need at least one gaze target"));
    }
    if !(half_fov_deg > 0.0 && half_fov_deg < 90.0) {
        return Err(Error::invalid(format!("half field of view {half_fov_deg} outside (0, 90)")));
    }
    let mut out = Vec::with_capacity(count);
    out.push((0.0, 0.0));
    let ring_targets = count - 1;
    let k = ring_count(ring_targets);
    for (ring, &size) in ring_sizes(ring_targets, k).iter().enumerate() {
        let radius = half_fov_deg * (ring + 1) as f64 / k as f64;
        for j in 0..size {
            let phi = std::f64::consts::TAU * j as f64 / size as f64;
            let (s, c) = phi.sin_cos();
            out.push(((radius * s).clamp(-half_fov_deg, half_fov_deg), (radius * c).clamp(-half_fov_deg, half_fov_deg)));
        }
    }
    Ok(out)
}

/// Unit gaze directions for the target board.
pub fn gaze_targets(count: usize, half_fov_deg: f64) -> Result<Vec<Vec3>> {
    Ok(target_angles(count, half_fov_deg)?
        .into_iter()
        .map(|(p, y)| gaze_from_pitch_yaw(p, y))
        .collect())
}
