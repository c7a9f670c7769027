//! Hash-based value noise for procedural iris and skin detail.

#[inline]
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn lattice(seed: u64, a: i64, b: i64) -> f64 {
    let h = splitmix64(
        seed ^ (a as u64).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7) ^ (b as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93),
    );
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Smoothly interpolated lattice noise in [0, 1]. When `period_x` is set the
/// lattice wraps in x, which keeps angular textures seamless.
pub fn value_noise(seed: u64, x: f64, y: f64, period_x: Option<i64>) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (tx, ty) = (smooth(x - fx), smooth(y - fy));
    let (mut x0, y0) = (fx as i64, fy as i64);
    let mut x1 = x0 + 1;
    if let Some(p) = period_x {
        x0 = x0.rem_euclid(p);
        x1 = x1.rem_euclid(p);
    }
    let v00 = lattice(seed, x0, y0);
    let v10 = lattice(seed, x1, y0);
    let v01 = lattice(seed, x0, y0 + 1);
    let v11 = lattice(seed, x1, y0 + 1);
    let top = v00 + (v10 - v00) * tx;
    let bottom = v01 + (v11 - v01) * tx;
    top + (bottom - top) * ty
}

/// Two-octave noise in [0, 1].
pub fn fbm2(seed: u64, x: f64, y: f64) -> f64 {
    (2.0 * value_noise(seed, x, y, None) + value_noise(seed ^ 0x5555, 2.0 * x, 2.0 * y, None)) / 3.0
}
