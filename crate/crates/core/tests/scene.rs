mod common;

use common::brute_force_reflection;
use eyetwin::metrics::gaze_from_pitch_yaw;
use eyetwin::scene::{
    apply_gaze, generate_identity, mirror_identity, reflection_point, render, render_layers, render_with, Illuminant,
    Material, PosedEye, RigConfig, SlippageTransform,
};
use proptest::prelude::*;
use eyetwin::{Camera, CameraPose, Error, Exec, Vec3};

fn posed(seed: u64, pitch: f64, yaw: f64) -> (PosedEye, RigConfig) {
    let rig = RigConfig::default_rig();
    let eye = generate_identity(seed).with_center(rig.nominal_eye_center);
    (apply_gaze(&eye, &gaze_from_pitch_yaw(pitch, yaw)).unwrap(), rig)
}

fn no_slip() -> SlippageTransform {
    SlippageTransform::new(0.0, 0.0, 0.0)
}

#[test]
fn power_of_two_scaling_is_exact() {
    let (eye, rig) = posed(1, 10.0, -5.0);
    let cam = &rig.cameras[0];
    let base = render(&eye, cam, &rig.leds, &no_slip()).unwrap();
    for k in [0.5, 2.0, 4.0] {
        let leds: Vec<Illuminant> = rig.leds.iter().map(|l| l.scaled(k)).collect();
        let scaled = render(&eye, cam, &leds, &no_slip()).unwrap();
        for (a, b) in base.values().iter().zip(scaled.values()) {
            assert_eq!(*b, a * k as f32);
        }
    }
}

#[test]
fn general_scaling_is_linear_to_rounding() {
    let (eye, rig) = posed(2, -20.0, 15.0);
    let cam = &rig.cameras[0];
    let a = render_layers(&eye, cam, &rig.leds, &no_slip(), Exec::default()).unwrap();
    let leds: Vec<Illuminant> = rig.leds.iter().map(|l| l.scaled(3.0)).collect();
    let b = render_layers(&eye, cam, &leds, &no_slip(), Exec::default()).unwrap();
    for (x, y) in a.diffuse.iter().zip(&b.diffuse).chain(a.specular.iter().zip(&b.specular)) {
        assert!((y - 3.0 * x).abs() <= 1e-12 * y.abs().max(1e-300), "{y} vs 3 * {x}");
    }
}

#[test]
fn dark_leds_give_a_black_image() {
    let (eye, rig) = posed(3, 0.0, 0.0);
    let leds: Vec<Illuminant> = rig.leds.iter().map(|l| l.scaled(0.0)).collect();
    let img = render(&eye, &rig.cameras[0], &leds, &no_slip()).unwrap();
    assert!(img.values().iter().all(|&v| v == 0.0));
}

#[test]
fn mirrored_scene_renders_the_flipped_image() {
    for (seed, pitch, yaw) in [(4, 0.0, 0.0), (5, 12.0, 30.0), (6, -25.0, -18.0)] {
        let (eye, rig) = posed(seed, pitch, yaw);
        let cam = &rig.cameras[0];
        let img = render(&eye, cam, &rig.leds, &no_slip()).unwrap();
        let g = eye.gaze();
        let m_eye = apply_gaze(&mirror_identity(&eye.model), &Vec3::new(-g.x, g.y, g.z)).unwrap();
        let m_leds: Vec<Illuminant> = rig.leds.iter().map(Illuminant::mirrored_x).collect();
        let m_img = render(&m_eye, &cam.mirrored_x(), &m_leds, &no_slip()).unwrap();
        assert_eq!(m_img.values(), img.flip_horizontal().values(), "seed {seed}");
    }
}

#[test]
fn rolling_the_camera_about_the_visual_axis_rotates_the_image() {
    let (eye, rig) = posed(7, 5.0, 8.0);
    let pose = CameraPose::look_at(eye.center() + eye.gaze() * 40.0, eye.center(), Vec3::y()).unwrap();
    let cam = Camera::new(rig.cameras[0].intrinsics, pose);
    let rolled = Camera::new(cam.intrinsics, pose.rolled_180());
    let a = render(&eye, &cam, &rig.leds, &no_slip()).unwrap();
    let b = render(&eye, &rolled, &rig.leds, &no_slip()).unwrap();
    for (x, y) in a.rotate_180().values().iter().zip(b.values()) {
        assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
    }
}

#[test]
fn slipping_the_device_equals_moving_the_eye() {
    let (eye, rig) = posed(8, -10.0, 20.0);
    let cam = &rig.cameras[0];
    for d in [Vec3::new(1.5, -2.0, 3.0), Vec3::new(-3.0, 3.0, -6.0)] {
        let slip = SlippageTransform::new(d.x, d.y, d.z);
        let a = render(&eye, cam, &rig.leds, &slip).unwrap();
        let b = render(&eye.translated(&(-d)), cam, &rig.leds, &no_slip()).unwrap();
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn camera_inside_the_eye_is_degenerate() {
    let (eye, rig) = posed(9, 0.0, 0.0);
    let pose = CameraPose::look_at(eye.center(), eye.center() + Vec3::z(), Vec3::y()).unwrap();
    let cam = Camera::new(rig.cameras[0].intrinsics, pose);
    assert!(matches!(render(&eye, &cam, &rig.leds, &no_slip()), Err(Error::DegenerateCamera(_))));
}

#[test]
fn pupil_is_dark_against_an_iris_albedo_render() {
    for seed in 10..16 {
        let (eye, rig) = posed(seed, 0.0, 0.0);
        let cam = &rig.cameras[0];
        let dark = render_layers(&eye, cam, &rig.leds, &no_slip(), Exec::default()).unwrap();
        let mut bright = eye.clone();
        bright.model.albedo_pupil = bright.model.albedo_iris;
        let lit = render_layers(&bright, cam, &rig.leds, &no_slip(), Exec::default()).unwrap();
        let mut checked = 0;
        for k in 0..dark.labels.len() {
            if dark.labels[k] == Material::Pupil {
                assert!(dark.diffuse[k] <= 0.05 * lit.diffuse[k], "seed {seed} pixel {k}");
                checked += 1;
            }
        }
        assert!(checked > 50, "seed {seed}: only {checked} pupil pixels");
    }
}

#[test]
fn worker_count_does_not_change_the_render() {
    let (eye, rig) = posed(17, 15.0, -30.0);
    let slip = SlippageTransform::new(0.5, -1.0, 2.0);
    let a = render_with(&eye, &rig.cameras[0], &rig.leds, &slip, Exec::Sequential).unwrap();
    let b = render_with(&eye, &rig.cameras[0], &rig.leds, &slip, Exec::Parallel).unwrap();
    assert_eq!(a.values(), b.values());
}

#[test]
fn render_is_nonnegative_and_finite() {
    let (eye, rig) = posed(18, -35.0, 35.0);
    let img = render(&eye, &rig.cameras[0], &rig.leds, &no_slip()).unwrap();
    assert!(img.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!(img.max() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn reflection_point_obeys_the_mirror_law(
        radius in 6.0f64..9.0,
        cam in (-20.0f64..20.0, -15.0f64..15.0, 25.0f64..40.0),
        led in (-20.0f64..20.0, -15.0f64..15.0, 10.0f64..30.0),
    ) {
        let center = Vec3::zeros();
        let (cam, led) = (Vec3::new(cam.0, cam.1, cam.2), Vec3::new(led.0, led.1, led.2));
        let x = reflection_point(&center, radius, &cam, &led).unwrap();
        let n = (x - center) / radius;
        prop_assert!((x.norm() - radius).abs() < 1e-9);
        let half = ((cam - x).normalize() + (led - x).normalize()).normalize();
        prop_assert!((half - n).norm() < 1e-9, "normal misses the bisector by {}", (half - n).norm());
        // Lattice spacing at 200k samples is about 0.008 rad.
        let dense = brute_force_reflection(&center, radius, &cam, &led, 200_000);
        prop_assert!((dense - x).norm() < 0.01 * radius, "{} mm apart", (dense - x).norm());
    }
}
