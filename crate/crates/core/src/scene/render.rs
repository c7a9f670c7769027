//! Point-sampled renderer producing linear NIR irradiance.

use crate::camera::{Camera, Vec3};
use crate::error::{Error, Result};
use crate::image::LinearImage;
use crate::par::{self, Exec};
use crate::scene::glint::visible_glint;
use crate::scene::model::{EyeModel, Illuminant, PosedEye, SlippageTransform};
use crate::scene::texture::{fbm2, value_noise};
use crate::scene::trace::{Hit, Material, Scene};

/// Weight of the Blinn lobe relative to a white Lambertian surface.
pub const SPECULAR_WEIGHT: f64 = 0.3;
pub const SPECULAR_EXPONENT: i32 = 200;
/// Glint splat width and gain over the local diffuse maximum.
pub const GLINT_SIGMA_PX: f64 = 0.7;
pub const GLINT_GAIN: f64 = 10.0;
/// Radius of the neighborhood that sets a glint's amplitude, pixels.
pub const GLINT_WINDOW_PX: f64 = 8.0;
/// Inside the lid opening but past the eyeball: skin in shadow.
const SOCKET_SHADE: f64 = 0.3;
const IRIS_SPOKES: i64 = 48;

/// Separate diffuse and specular contributions with per-pixel labels.
#[derive(Debug, Clone)]
pub struct RenderLayers {
    pub width: usize,
    pub height: usize,
    pub diffuse: Vec<f64>,
    pub specular: Vec<f64>,
    pub labels: Vec<Material>,
}

impl RenderLayers {
    /// The rendered image, `diffuse + specular`.
    pub fn image(&self) -> LinearImage {
        let data = self
            .diffuse
            .iter()
            .zip(&self.specular)
            .map(|(d, s)| (d + s) as f32)
            .collect();
        LinearImage::from_raw(self.width, self.height, data)
    }

    pub fn label(&self, x: usize, y: usize) -> Material {
        self.labels[y * self.width + x]
    }
}

/// Renders `eye` as seen by `camera` under `leds`, with the device slipped
/// by `slippage`.
pub fn render(
    eye: &PosedEye,
    camera: &Camera,
    leds: &[Illuminant],
    slippage: &SlippageTransform,
) -> Result<LinearImage> {
    render_with(eye, camera, leds, slippage, Exec::default())
}

pub fn render_with(
    eye: &PosedEye,
    camera: &Camera,
    leds: &[Illuminant],
    slippage: &SlippageTransform,
    exec: Exec,
) -> Result<LinearImage> {
    render_layers(eye, camera, leds, slippage, exec).map(|l| l.image())
}

/// Full render keeping the diffuse/specular split and surface labels.
pub fn render_layers(
    eye: &PosedEye,
    camera: &Camera,
    leds: &[Illuminant],
    slippage: &SlippageTransform,
    exec: Exec,
) -> Result<RenderLayers> {
    // Moving the device by d is the same as moving the eye by -d.
    let eye = eye.translated(&(-slippage.as_vec()));
    let scene = Scene::new(&eye);
    let origin = camera.pose.center();
    if scene.contains(&origin) {
        return Err(Error::DegenerateCamera(format!(
            "camera center ({:.3}, {:.3}, {:.3}) lies inside the eye or behind the skin",
            origin.x, origin.y, origin.z
        )));
    }
    let shader = Shader::new(&scene, &eye.model, leds);
    let (w, h) = (camera.intrinsics.width, camera.intrinsics.height);
    let rows = par::map_range(h, exec, |j| {
        (0..w)
            .map(|i| shader.shade(&origin, &camera.pixel_ray(i, j)))
            .collect::<Vec<_>>()
    });
    let mut layers = RenderLayers {
        width: w,
        height: h,
        diffuse: Vec::with_capacity(w * h),
        specular: Vec::with_capacity(w * h),
        labels: Vec::with_capacity(w * h),
    };
    for (d, s, m) in rows.into_iter().flatten() {
        layers.diffuse.push(d);
        layers.specular.push(s);
        layers.labels.push(m);
    }
    for led in leds {
        if let Some(x) = visible_glint(&scene, &origin, &led.position) {
            splat_glint(&mut layers, camera, &x);
        }
    }
    Ok(layers)
}

/// Adds a Gaussian spot at the projection of `x`, scaled to the brightest
/// diffuse pixel nearby. Distances are measured in normalized camera
/// coordinates rescaled by the focal lengths so mirrored renders agree
/// bit for bit.
fn splat_glint(layers: &mut RenderLayers, camera: &Camera, x: &Vec3) {
    let pc = camera.pose.to_camera(x);
    if pc.z <= 1e-9 {
        return;
    }
    let intr = &camera.intrinsics;
    let (gx, gy) = (pc.x / pc.z, pc.y / pc.z);
    let (u, v) = (intr.fx * gx + intr.cx, intr.fy * gy + intr.cy);
    let reach = GLINT_WINDOW_PX + 1.0;
    let span = |c: f64, n: usize| {
        let lo = (c - reach).floor().max(0.0);
        let hi = (c + reach).ceil().min(n as f64);
        (lo as usize, hi.max(lo) as usize)
    };
    let (i0, i1) = span(u, layers.width);
    let (j0, j1) = span(v, layers.height);
    if i0 >= i1 || j0 >= j1 {
        return;
    }
    let r2_at = |i: usize, j: usize| {
        let (xn, yn) = intr.pixel_to_normalized(i, j);
        let (dx, dy) = ((xn - gx) * intr.fx, (yn - gy) * intr.fy);
        dx * dx + dy * dy
    };
    let window = GLINT_WINDOW_PX * GLINT_WINDOW_PX;
    let mut peak = 0.0f64;
    for j in j0..j1 {
        for i in i0..i1 {
            if r2_at(i, j) <= window {
                peak = peak.max(layers.diffuse[j * layers.width + i]);
            }
        }
    }
    let amp = GLINT_GAIN * peak;
    let cutoff = 16.0 * GLINT_SIGMA_PX * GLINT_SIGMA_PX;
    let inv = 1.0 / (2.0 * GLINT_SIGMA_PX * GLINT_SIGMA_PX);
    for j in j0..j1 {
        for i in i0..i1 {
            let r2 = r2_at(i, j);
            if r2 <= cutoff {
                layers.specular[j * layers.width + i] += amp * (-r2 * inv).exp();
            }
        }
    }
}

struct Shader<'a> {
    scene: &'a Scene,
    leds: &'a [Illuminant],
    skin_seed: u64,
    iris_seed: u64,
    albedo_pupil: f64,
    albedo_iris: f64,
    albedo_sclera: f64,
    albedo_skin: f64,
}

impl<'a> Shader<'a> {
    fn new(scene: &'a Scene, model: &EyeModel, leds: &'a [Illuminant]) -> Self {
        Self {
            scene,
            leds,
            skin_seed: model.texture_seed ^ 0x51ED_2701_9A3C_44B1,
            iris_seed: model.texture_seed ^ 0x1215_7A4E_08F1_C3D5,
            albedo_pupil: model.albedo_pupil,
            albedo_iris: model.albedo_iris,
            albedo_sclera: model.albedo_sclera,
            albedo_skin: model.albedo_skin,
        }
    }

    /// Lambertian irradiance at `p` with unit normal `n`.
    #[inline]
    fn irradiance(&self, p: &Vec3, n: &Vec3) -> f64 {
        let mut e = 0.0;
        for led in self.leds {
            let v = led.position - p;
            let nv = n.dot(&v);
            if nv > 0.0 {
                let d2 = v.norm_squared();
                e += led.radiant_intensity * nv / (d2 * d2.sqrt());
            }
        }
        e
    }

    /// Blinn lobe at `p` seen along `-d`.
    #[inline]
    fn lobe(&self, p: &Vec3, n: &Vec3, d: &Vec3) -> f64 {
        let mut s = 0.0;
        for led in self.leds {
            let l = led.position - p;
            let d2 = l.norm_squared();
            let half = l / d2.sqrt() - d;
            let nh = n.dot(&half) / half.norm();
            if nh > 0.0 {
                s += led.radiant_intensity * nh.powi(SPECULAR_EXPONENT) / d2;
            }
        }
        SPECULAR_WEIGHT * s
    }

    fn skin_texture(&self, p: &Vec3) -> f64 {
        let (u, v) = self.scene.face_uv(p);
        0.75 + 0.5 * fbm2(self.skin_seed, u / 2.5, v / 2.5)
    }

    fn iris_texture(&self, p: &Vec3) -> f64 {
        let q = self.scene.local(p);
        let rho = (q.x * q.x + q.y * q.y).sqrt();
        let phi = q.y.atan2(q.x) / std::f64::consts::TAU + 0.5;
        let n = value_noise(self.iris_seed, phi * IRIS_SPOKES as f64, rho * 1.5, Some(IRIS_SPOKES));
        0.8 + 0.4 * n
    }

    fn shade(&self, o: &Vec3, d: &Vec3) -> (f64, f64, Material) {
        let up = Vec3::z();
        match self.scene.intersect(o, d) {
            Hit::Miss => (0.0, 0.0, Material::Background),
            Hit::Skin { t } => {
                let p = o + d * t;
                let a = self.albedo_skin * self.skin_texture(&p);
                (a * self.irradiance(&p, &up), 0.0, Material::Skin)
            }
            Hit::Socket { t } => {
                let p = o + d * t;
                let a = SOCKET_SHADE * self.albedo_skin * self.skin_texture(&p);
                (a * self.irradiance(&p, &up), 0.0, Material::Socket)
            }
            // Lid tissue is thick and faces outward like the surrounding
            // skin, so it is lit with the face normal rather than the
            // eyeball normal beneath it.
            Hit::Eyelid { t, .. } => {
                let p = o + d * t;
                let a = self.albedo_skin * self.skin_texture(&p);
                (a * self.irradiance(&p, &up), 0.0, Material::Eyelid)
            }
            Hit::Sclera { t, normal } => {
                let p = o + d * t;
                (self.albedo_sclera * self.irradiance(&p, &normal), 0.0, Material::Sclera)
            }
            Hit::Cornea { t, normal } => {
                let p = o + d * t;
                let spec = self.lobe(&p, &normal, d);
                let gaze = self.scene.gaze;
                let (diffuse, m) = match self.scene.through_cornea(o, d) {
                    Some((y, Material::Pupil)) => (self.albedo_pupil * self.irradiance(&y, &gaze), Material::Pupil),
                    Some((y, _)) => (
                        self.albedo_iris * self.iris_texture(&y) * self.irradiance(&y, &gaze),
                        Material::Iris,
                    ),
                    None => (self.albedo_sclera * self.irradiance(&p, &normal), Material::Sclera),
                };
                (diffuse, spec, m)
            }
        }
    }
}
