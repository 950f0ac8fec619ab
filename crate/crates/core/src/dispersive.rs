//! Symbols of the Hilbert transform, `T_delta`, `G_delta` and the smoothing
//! operator `Q_delta = (T_delta - H) d/dx`.
//!
//! `T_delta` alone is singular at `xi = 0`; it is only ever used composed with
//! a derivative, where `xi coth(delta xi)` extends continuously by `1/delta`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{contract, Result};
use crate::spectral::{japanese_bracket, RealField, SpectralGrid};

/// Beyond this value of `2 delta |xi|` the Q symbol underflows and is set to 0.
const Q_OVERFLOW: f64 = 700.0;

/// Fluid depth, `0 < delta < infinity`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Depth(f64);

impl Depth {
    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_finite() && delta > 0.0 {
            Ok(Self(delta))
        } else {
            contract(format!("depth must satisfy 0 < delta < inf, got {delta}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `-i sgn(xi)`, with `sgn(0) = 0`.
pub fn hilbert_symbol(xi: f64) -> Complex64 {
    if xi == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -xi.signum())
    }
}

/// `coth(x) - 1/x`, odd, with the removable singularity at 0 filled in.
pub fn coth_minus_inv(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.1 {
        let x2 = x * x;
        // x/3 - x^3/45 + 2x^5/945 - x^7/4725 + 2x^9/93555
        x * (1.0 / 3.0
            + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * 2.0 / 93555.0))))
    } else if ax > 20.0 {
        x.signum() * (1.0 + 2.0 * (-2.0 * ax).exp()) - 1.0 / x
    } else {
        1.0 / x.tanh() - 1.0 / x
    }
}

/// Symbol of `G_delta = T_delta - delta^{-1} d_x^{-1}`: `-i (coth(delta xi) - 1/(delta xi))`.
pub fn gdl_symbol(xi: f64, delta: f64) -> Complex64 {
    Complex64::new(0.0, -coth_minus_inv(delta * xi))
}

/// Symbol of `Q_delta`: `2|xi| / (exp(2 delta |xi|) - 1)`, equal to `1/delta` at 0.
pub fn qdl_symbol(xi: f64, delta: f64) -> f64 {
    let z = 2.0 * delta * xi.abs();
    if z == 0.0 {
        1.0 / delta
    } else if z > Q_OVERFLOW {
        0.0
    } else {
        2.0 * xi.abs() / z.exp_m1()
    }
}

/// `xi coth(delta xi)` (symbol of `T_delta d_x`), written as `|xi| + Q(xi)`
/// which is exact at 0 and free of overflow.
pub fn tdl_dx_symbol(xi: f64, delta: f64) -> f64 {
    xi.abs() + qdl_symbol(xi, delta)
}

/// Symbol of `G_delta d_x^2`: `i xi^2 (coth(delta xi) - 1/(delta xi))`.
pub fn gdl_dxx_symbol(xi: f64, delta: f64) -> Complex64 {
    Complex64::new(0.0, xi * xi * coth_minus_inv(delta * xi))
}

/// Symbol of `H d_x^2`: `i xi |xi|`.
pub fn hilbert_dxx_symbol(xi: f64) -> Complex64 {
    Complex64::new(0.0, xi * xi.abs())
}

/// Symbol of `T_delta d_x^2`: `i xi^2 coth(delta xi)` (0 at `xi = 0`).
pub fn tdl_dxx_symbol(xi: f64, delta: f64) -> Complex64 {
    Complex64::new(0.0, xi * tdl_dx_symbol(xi, delta))
}

/// `Q_delta d_x f`, multiplier `i xi Q(xi)`.
pub fn apply_qdl_dx(f: &RealField, delta: Depth) -> Result<RealField> {
    let d = delta.get();
    f.apply_multiplier(|xi| Complex64::new(0.0, xi * qdl_symbol(xi, d)))
}

/// `Q_delta f`.
pub fn apply_qdl(f: &RealField, delta: Depth) -> Result<RealField> {
    let d = delta.get();
    f.apply_multiplier(|xi| Complex64::new(qdl_symbol(xi, d), 0.0))
}

/// Operator norm of `Q_delta d_x: H^{s1} -> H^{s2}` on a grid, together with
/// the depth-dependent factor `delta^{-2} (1 + delta^{s1 - s2})`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmoothingScan {
    pub measured: f64,
    pub bound: f64,
}

impl SmoothingScan {
    pub fn ratio(&self) -> f64 {
        self.measured / self.bound
    }
}

pub fn smoothing_norm_scan(s1: f64, s2: f64, delta: Depth, grid: &SpectralGrid) -> Result<SmoothingScan> {
    if s1 > s2 {
        return contract(format!("smoothing scan needs s1 <= s2, got s1={s1}, s2={s2}"));
    }
    let d = delta.get();
    let measured = grid
        .wavenumbers()
        .into_iter()
        .map(|xi| xi.abs() * qdl_symbol(xi, d) * japanese_bracket(xi, 1.0).powf(s2 - s1))
        .fold(0.0, f64::max);
    let bound = d.powi(-2) * (1.0 + d.powf(s1 - s2));
    Ok(SmoothingScan { measured, bound })
}
