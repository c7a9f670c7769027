//! Corneal glints: the specular reflection of an LED on the cornea sphere.

use crate::camera::{Camera, Vec2, Vec3};
use crate::scene::model::{Illuminant, PosedEye};
use crate::scene::trace::{Hit, Scene};

const BISECTION_STEPS: usize = 200;

/// Point on a sphere where light from `light` reflects into `eye_point`.
///
/// The solution lies on the great circle through the directions to both
/// points. Parameterizing the surface normal by its angle from the camera
/// direction, the tangential component of the summed unit vectors toward
/// camera and light changes sign exactly once on the arc; bisection finds
/// the root.
pub fn reflection_point(center: &Vec3, radius: f64, eye_point: &Vec3, light: &Vec3) -> Option<Vec3> {
    let a = (eye_point - center).normalize();
    let b = (light - center).normalize();
    let cos_ab = a.dot(&b).clamp(-1.0, 1.0);
    if cos_ab > 1.0 - 1e-15 {
        return Some(center + a * radius);
    }
    if cos_ab < -1.0 + 1e-12 {
        return None;
    }
    let arc = cos_ab.acos();
    let e2 = (b - a * cos_ab).normalize();
    let tangential = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let n = a * c + e2 * s;
        let tangent = e2 * c - a * s;
        let x = center + n * radius;
        tangent.dot(&((eye_point - x).normalize() + (light - x).normalize()))
    };
    let (mut lo, mut hi) = (0.0, arc);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tangential(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (s, c) = theta.sin_cos();
    Some(center + (a * c + e2 * s) * radius)
}

/// Glint point on the exposed cornea that both the camera and the LED can
/// see, if any.
pub(crate) fn visible_glint(scene: &Scene, camera_center: &Vec3, led: &Vec3) -> Option<Vec3> {
    let x = reflection_point(&scene.cornea_center, scene.cornea_r, camera_center, led)?;
    let sees = |from: &Vec3| {
        let v = x - from;
        let dist = v.norm();
        match scene.intersect(from, &(v / dist)) {
            Hit::Cornea { t, .. } => (t - dist).abs() < 1e-6 * dist.max(1.0),
            _ => false,
        }
    };
    (sees(camera_center) && sees(led)).then_some(x)
}

/// Pixel positions of the glint produced by `led`; empty when the
/// reflection is occluded by the lids or faces away from camera or LED.
pub fn glint_positions(eye: &PosedEye, camera: &Camera, led: &Illuminant) -> Vec<Vec2> {
    let scene = Scene::new(eye);
    visible_glint(&scene, &camera.pose.center(), &led.position)
        .and_then(|x| camera.project(&x).ok())
        .into_iter()
        .collect()
}
