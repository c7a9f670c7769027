//! Ray/scene intersection shared by the renderer and the glint solver.

use crate::camera::{Mat3, Vec3};
use crate::scene::model::{PosedEye, LID_ASPECT, SKIN_PLANE_OFFSET_MM};

const T_EPS: f64 = 1e-9;

/// Surface class of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Material {
    Background = 0,
    Skin = 1,
    Socket = 2,
    Eyelid = 3,
    Sclera = 4,
    Iris = 5,
    Pupil = 6,
}

/// What a ray hit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Hit {
    /// Skin plane outside the lid opening.
    Skin { t: f64 },
    /// Skin plane inside the opening with no eyeball behind it.
    Socket { t: f64 },
    /// Eyeball or cornea surface covered by the lids.
    Eyelid { t: f64, normal: Vec3 },
    /// Exposed eyeball sphere.
    Sclera { t: f64, normal: Vec3 },
    /// Exposed cornea; `t` is the corneal surface.
    Cornea { t: f64, normal: Vec3 },
    Miss,
}

/// Posed eye flattened into the quantities the tracer needs.
#[derive(Debug, Clone)]
pub(crate) struct Scene {
    pub center: Vec3,
    pub eyeball_r2: f64,
    pub eyeball_r: f64,
    pub cornea_center: Vec3,
    pub cornea_r2: f64,
    pub cornea_r: f64,
    pub gaze: Vec3,
    pub orientation: Mat3,
    pub iris_center: Vec3,
    pub pupil_r2: f64,
    pub iris_r2: f64,
    pub skin_z: f64,
    /// Lid ellipse relative to the eyeball center: vertical center offset
    /// and semi-axes.
    pub lid_cy: f64,
    pub lid_ax: f64,
    pub lid_ay: f64,
    /// -1 for mirrored identities; applied to texture x coordinates.
    pub hand: f64,
}

impl Scene {
    pub fn new(eye: &PosedEye) -> Self {
        let m = &eye.model;
        let gaze = eye.gaze();
        let drop = eye.lid_drop().min(1.9 * m.eyelid_aperture);
        Self {
            center: m.eyeball_center,
            eyeball_r2: m.eyeball_radius * m.eyeball_radius,
            eyeball_r: m.eyeball_radius,
            cornea_center: eye.cornea_center(),
            cornea_r2: m.cornea_radius * m.cornea_radius,
            cornea_r: m.cornea_radius,
            gaze,
            orientation: eye.orientation,
            iris_center: eye.pupil_center(),
            pupil_r2: m.pupil_radius * m.pupil_radius,
            iris_r2: m.iris_radius * m.iris_radius,
            skin_z: m.eyeball_center.z + SKIN_PLANE_OFFSET_MM,
            lid_cy: -drop / 2.0,
            lid_ax: LID_ASPECT * m.eyelid_aperture,
            lid_ay: m.eyelid_aperture - drop / 2.0,
            hand: if m.mirrored { -1.0 } else { 1.0 },
        }
    }

    /// True if `p` lies inside the camera-visible solid (eyeball, cornea, or
    /// behind the skin plane).
    pub fn contains(&self, p: &Vec3) -> bool {
        (p - self.center).norm_squared() <= self.eyeball_r2
            || (p - self.cornea_center).norm_squared() <= self.cornea_r2
            || p.z <= self.skin_z
    }

    /// Inside the lid opening, judged on device (x, y) relative to the
    /// eyeball center.
    #[inline]
    pub fn in_opening(&self, p: &Vec3) -> bool {
        let x = (p.x - self.center.x) / self.lid_ax;
        let y = (p.y - self.center.y - self.lid_cy) / self.lid_ay;
        x * x + y * y <= 1.0
    }

    #[inline]
    fn sphere_entry(o: &Vec3, d: &Vec3, c: &Vec3, r2: f64) -> Option<f64> {
        let oc = o - c;
        let b = oc.x * d.x + oc.y * d.y + oc.z * d.z;
        let q = oc.x * oc.x + oc.y * oc.y + oc.z * oc.z - r2;
        let disc = b * b - q;
        if disc < 0.0 {
            return None;
        }
        let t = -b - disc.sqrt();
        (t > T_EPS).then_some(t)
    }

    /// Nearest surface along the unit ray `o + t d`.
    pub fn intersect(&self, o: &Vec3, d: &Vec3) -> Hit {
        let te = Self::sphere_entry(o, d, &self.center, self.eyeball_r2);
        let tc = Self::sphere_entry(o, d, &self.cornea_center, self.cornea_r2);
        // The first entry into the union of two spheres is the smaller entry.
        let sphere = match (te, tc) {
            (Some(a), Some(b)) if b < a => Some((b, true)),
            (Some(a), _) => Some((a, false)),
            (None, Some(b)) => Some((b, true)),
            (None, None) => None,
        };
        let plane = if d.z < 0.0 {
            let t = (self.skin_z - o.z) / d.z;
            (t > T_EPS).then(|| {
                let p = o + d * t;
                (t, self.in_opening(&p))
            })
        } else {
            None
        };
        if let Some((tp, false)) = plane {
            if sphere.is_none_or(|(ts, _)| tp < ts) {
                return Hit::Skin { t: tp };
            }
        }
        if let Some((t, cornea)) = sphere {
            let p = o + d * t;
            let (c, inv_r) = if cornea {
                (&self.cornea_center, 1.0 / self.cornea_r)
            } else {
                (&self.center, 1.0 / self.eyeball_r)
            };
            let normal = (p - c) * inv_r;
            return if !self.in_opening(&p) {
                Hit::Eyelid { t, normal }
            } else if cornea {
                Hit::Cornea { t, normal }
            } else {
                Hit::Sclera { t, normal }
            };
        }
        match plane {
            Some((t, true)) => Hit::Socket { t },
            _ => Hit::Miss,
        }
    }

    /// Where a ray that entered the cornea meets the iris plane, with the
    /// classification there.
    #[inline]
    pub fn through_cornea(&self, o: &Vec3, d: &Vec3) -> Option<(Vec3, Material)> {
        let denom = d.dot(&self.gaze);
        if denom > -1e-9 {
            return None;
        }
        let t = (self.iris_center - o).dot(&self.gaze) / denom;
        let y = o + d * t;
        let rho2 = (y - self.iris_center).norm_squared();
        if rho2 < self.pupil_r2 {
            Some((y, Material::Pupil))
        } else if rho2 < self.iris_r2 {
            Some((y, Material::Iris))
        } else {
            None
        }
    }

    /// Eye-local coordinates with the texture handedness applied.
    #[inline]
    pub fn local(&self, p: &Vec3) -> Vec3 {
        let mut q = self.orientation.tr_mul(&(p - self.center));
        q.x *= self.hand;
        q
    }

    /// Face-fixed texture coordinates of a point, mm.
    #[inline]
    pub fn face_uv(&self, p: &Vec3) -> (f64, f64) {
        ((p.x - self.center.x) * self.hand, p.y - self.center.y)
    }
}
