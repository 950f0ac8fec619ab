//! Adaptive Gauss-Kronrod quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel; returns `(estimate, error)`.
pub fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive bisection on `[a, b]` until the summed error estimate is below
/// `max(abs_tol, rel_tol |I|)`.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut panels = vec![(a, b, gk15(&mut f, a, b))];
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2 .0).sum();
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if !total.is_finite() {
            return Err(Error::Numerical("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = panels.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        panels.push((lo, mid, gk15(&mut f, lo, mid)));
        panels.push((mid, hi, gk15(&mut f, mid, hi)));
    }
    Err(Error::Numerical("adaptive quadrature did not converge".into()))
}

/// Result of [`power_weighted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiInfinite {
    pub value: f64,
    /// Closed-form tail beyond the last panel.
    pub tail: f64,
    /// Last quadrature node `tau*`.
    pub cutoff: f64,
}

/// `int_kappa^inf tau^{2s} f(tau) dtau` for `f(tau) ~ C tau^{-p}`.
///
/// The substitution `tau = kappa e^t` turns the integrand into
/// `tau^{2s+1} f(tau)`, integrated over panels of growing width until the
/// power-law tail `f(tau*) tau*^{2s+1} / (p - 1 - 2s)` is below
/// `rel_tol |I| + abs_tol`.
pub fn power_weighted(
    mut f: impl FnMut(f64) -> f64,
    kappa: f64,
    s: f64,
    p: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<SemiInfinite> {
    let e = 2.0 * s + 1.0;
    if !(p - e > 0.0) {
        return Err(Error::Contract(format!("integral diverges: tau^{{2s}} tau^{{-{p}}} with s = {s}")));
    }
    let mut acc = 0.0;
    let (mut lo, mut width) = (0.0f64, 1.0f64);
    loop {
        let hi = lo + width;
        acc += integrate(
            |t| {
                let tau = kappa * t.exp();
                tau.powf(e) * f(tau)
            },
            lo,
            hi,
            abs_tol,
            rel_tol,
        )?;
        let tau = kappa * hi.exp();
        let tail = f(tau) * tau.powf(e) / (p - e);
        if !tail.is_finite() {
            return Err(Error::Numerical(format!("non-finite integrand at tau = {tau:e}")));
        }
        if tail.abs() <= rel_tol * acc.abs() + abs_tol {
            return Ok(SemiInfinite { value: acc + tail, tail, cutoff: tau });
        }
        if hi > 600.0 {
            return Err(Error::Numerical(format!(
                "tail still {tail:e} at tau = {tau:e} (accumulated {acc:e})"
            )));
        }
        lo = hi;
        width = (2.0 * width).min(8.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let (v, _) = gk15(&mut |x: f64| x.powi(20), 0.0, 1.0);
        assert!((v - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 0.0, 1e-13).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn power_weighted_closed_form() {
        // int_kappa^inf tau^{-1/2} / (xi0 + tau) = 2 atan(sqrt(xi0/kappa)) / sqrt(xi0)
        for (xi0, kappa) in [(2.0 * std::f64::consts::PI, 32.0), (1.0, 1.0), (300.0, 4.0)] {
            let r = power_weighted(|t| 1.0 / (xi0 + t), kappa, -0.25, 1.0, 1e-12, 0.0).unwrap();
            let exact = 2.0 * (xi0 / kappa).sqrt().atan() / xi0.sqrt();
            assert!((r.value - exact).abs() < 1e-11 * exact, "{} vs {exact}", r.value);
        }
        assert!(power_weighted(|t| 1.0 / t, 1.0, 0.1, 1.0, 1e-8, 0.0).is_err());
    }
}
