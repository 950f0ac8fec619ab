//! Explicit ILW traveling waves on the line and on the unit circle, their
//! Fourier data, and the delta-limit observables built from them.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersive::tdl_dx_symbol;
use crate::error::{contract, Error, Result};
use crate::spectral::{japanese_bracket, RealField, SpectralGrid};

/// Series are truncated once a term drops below this size.
const SERIES_TOL: f64 = 1e-16;
const SERIES_CAP: usize = 100_000;
/// Largest admissible `a delta` is `pi - REGIME_MARGIN`.
pub const REGIME_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Line,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub delta: f64,
    pub a: f64,
    pub c: f64,
    pub flavor: Flavor,
}

impl WaveParams {
    /// Line wave of speed `c > 0`.
    pub fn line(c: f64, delta: f64) -> Result<Self> {
        let a = solve_a_of_c(c, delta)?;
        Ok(Self { delta, a, c, flavor: Flavor::Line })
    }

    /// Periodic wave on the unit circle with decay parameter `a`.
    pub fn circle(a: f64, delta: f64) -> Result<Self> {
        let c = periodic_speed(a, delta)?;
        Ok(Self { delta, a, c, flavor: Flavor::Circle })
    }

    pub fn a_delta(&self) -> f64 {
        self.a * self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicWaveConstants {
    pub v: f64,
    pub d: f64,
    pub b: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return contract(format!("depth must be positive, got {delta}"));
    }
    Ok(())
}

fn check_regime(a: f64, delta: f64) -> Result<()> {
    check_delta(delta)?;
    let y = a * delta;
    if !(y > 0.0) {
        return contract(format!("need 0 < a delta, got {y}"));
    }
    if y > PI - REGIME_MARGIN {
        return Err(Error::Regime(format!(
            "a delta = {y} is within {REGIME_MARGIN} of pi; the series and the Fourier ratio lose all accuracy"
        )));
    }
    Ok(())
}

/// Root `a` of `a delta cot(a delta) = 1 - c delta` in `(0, pi/delta)`.
pub fn solve_a_of_c(c: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(c > 0.0 && c.is_finite()) {
        return contract(format!("line waves need c > 0, got {c}"));
    }
    let target = 1.0 - c * delta;
    let g = |y: f64| if y == 0.0 { 1.0 } else { y / y.tan() };
    let (mut lo, mut hi) = (0.0f64, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let y = 0.5 * (lo + hi);
    if !(y > 0.0 && y < PI) {
        return Err(Error::Numerical(format!("bisection for a(c) failed at c = {c}")));
    }
    Ok(y / delta)
}

/// `u_c(t, x) = -a sin(a delta) / (cosh(a (x - c t)) + cos(a delta))`.
pub fn line_profile(x: f64, t: f64, p: &WaveParams) -> f64 {
    let y = p.a * p.delta;
    -p.a * y.sin() / ((p.a * (x - p.c * t)).cosh() + y.cos())
}

/// `sinh(delta xi) / sinh(pi xi / a)`, even in `xi`, equal to `a delta / pi` at 0.
fn sinh_ratio(xi: f64, a: f64, delta: f64) -> f64 {
    let z = xi.abs();
    let p = PI / a;
    if z == 0.0 {
        return a * delta / PI;
    }
    ((delta - p) * z).exp() * (-(-2.0 * delta * z).exp_m1()) / (-(-2.0 * p * z).exp_m1())
}

/// `cosh(delta xi) / sinh(pi xi / a)` for `xi != 0` (odd in `xi`).
fn cosh_sinh_ratio(xi: f64, a: f64, delta: f64) -> f64 {
    let z = xi.abs();
    let p = PI / a;
    let r = ((delta - p) * z).exp() * (1.0 + (-2.0 * delta * z).exp()) / (-(-2.0 * p * z).exp_m1());
    r * xi.signum()
}

/// Line Fourier transform with the `1/sqrt(2 pi)` normalization:
/// `-sqrt(2 pi) sinh(delta xi) / sinh(pi xi / a)`.
pub fn line_profile_fourier(xi: f64, p: &WaveParams) -> f64 {
    -(2.0 * PI).sqrt() * sinh_ratio(xi, p.a, p.delta)
}

/// Coefficient of the periodic wave at frequency `xi` (a point of `2 pi Z`).
pub fn periodic_coefficient(xi: f64, a: f64, delta: f64) -> f64 {
    -2.0 * PI * sinh_ratio(xi, a, delta)
}

/// A field computed along two independent routes.
#[derive(Debug, Clone)]
pub struct TwoRoutes {
    pub fourier: RealField,
    pub lattice: RealField,
}

impl TwoRoutes {
    pub fn sup_distance(&self) -> f64 {
        self.fourier.axpy(-1.0, &self.lattice).sup_norm()
    }
}

fn require_unit_circle(grid: &SpectralGrid) -> Result<()> {
    if (grid.period() - 1.0).abs() > 1e-14 {
        return contract(format!("periodic waves live on the unit circle, got L = {}", grid.period()));
    }
    Ok(())
}

/// Truncated lattice sum `sum_n f(x + n)` for an exponentially decaying `f`.
fn lattice_sum(x: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut total = f(x);
    for n in 1..=SERIES_CAP {
        let t = f(x + n as f64) + f(x - n as f64);
        total += t;
        if t.abs() < SERIES_TOL {
            return Ok(total);
        }
    }
    Err(Error::Numerical("lattice sum did not converge".into()))
}

/// Sum `sum_{l >= 1} term(l)` until a term is below the series tolerance.
fn series(term: impl Fn(f64) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for l in 1..=SERIES_CAP {
        let t = term(l as f64);
        total += t;
        if t.abs() < SERIES_TOL {
            return Ok(total);
        }
    }
    Err(Error::Numerical("series did not converge".into()))
}

fn coefficient_field(grid: &SpectralGrid, coeff: impl Fn(f64) -> Complex64, nyquist: f64) -> Result<RealField> {
    let n = grid.n_points();
    let mut c: Vec<Complex64> = (0..n).map(|j| coeff(grid.wavenumber(j))).collect();
    c[grid.nyquist_slot()] = Complex64::new(nyquist, 0.0);
    RealField::from_coeffs(grid, c)
}

/// Periodic wave `U` on the unit circle, from its Fourier series and from
/// the periodized line profile.
pub fn periodic_profile(a: f64, delta: f64, grid: &SpectralGrid) -> Result<TwoRoutes> {
    check_regime(a, delta)?;
    require_unit_circle(grid)?;
    // the Nyquist slot carries both +-N/2 terms of the even series
    let xn = grid.max_wavenumber();
    let fourier = coefficient_field(
        grid,
        |xi| Complex64::new(periodic_coefficient(xi, a, delta), 0.0),
        2.0 * periodic_coefficient(xn, a, delta),
    )?;
    let y = a * delta;
    let (sy, cy) = y.sin_cos();
    let f = |z: f64| -a * sy / ((a * z).cosh() + cy);
    let samples = grid.points().into_iter().map(|x| lattice_sum(x, f)).collect::<Result<Vec<_>>>()?;
    let lattice = RealField::from_samples(grid, &samples)?;
    Ok(TwoRoutes { fourier, lattice })
}

/// Speed of the periodic wave: `1/delta - a cot(a delta) - V`.
pub fn periodic_speed(a: f64, delta: f64) -> Result<f64> {
    let k = constants_vdb(a, delta)?;
    Ok(1.0 / delta - a / (a * delta).tan() - k.v)
}

pub fn constants_vdb(a: f64, delta: f64) -> Result<PeriodicWaveConstants> {
    check_regime(a, delta)?;
    let s = (a * delta).sin();
    let s2 = s * s;
    let denom = |l: f64| (a * l / 2.0).sinh().powi(2) + s2;
    let v = series(|l| a * (2.0 * a * delta).sin() / denom(l))?;
    let d = 2.0 * a * a * s2 * series(|l| l / (a * l / 2.0).tanh() / denom(l))?;
    Ok(PeriodicWaveConstants { v, d, b: -d })
}

/// Sup-norm of `-c U + U/delta - T_delta d_x U - U^2 - B`.
pub fn residual_traveleqn(u: &RealField, c: f64, b: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let tdx = u.apply_multiplier(|xi| Complex64::new(tdl_dx_symbol(xi, delta), 0.0))?;
    let us = u.samples();
    let ts = tdx.samples();
    Ok(us
        .iter()
        .zip(&ts)
        .map(|(&v, &t)| (-c * v + v / delta - t - v * v - b).abs())
        .fold(0.0, f64::max))
}

/// `T_delta U` for the periodic wave, as a Fourier multiplier on the series
/// and as a regularized lattice sum of `-a sinh(a y) / (cosh(a y) + cos(a delta))`.
///
/// The plain lattice sum does not converge; adding `a sgn(x + n)` to each
/// term and subtracting the regularized sum `a (1 - 2 {x})` of those
/// constants gives the zero-mean periodic function.
pub fn tdl_of_profile_lattice(a: f64, delta: f64, grid: &SpectralGrid) -> Result<TwoRoutes> {
    check_regime(a, delta)?;
    require_unit_circle(grid)?;
    let fourier = coefficient_field(
        grid,
        |xi| {
            if xi == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, 2.0 * PI * cosh_sinh_ratio(xi, a, delta))
            }
        },
        0.0,
    )?;
    let cy = (a * delta).cos();
    let f = |z: f64| -a * (a * z).sinh() / ((a * z).cosh() + cy) + a * sign0(z);
    let samples = grid
        .points()
        .into_iter()
        .map(|x| Ok(lattice_sum(x, f)? - a * sawtooth(x)))
        .collect::<Result<Vec<_>>>()?;
    let lattice = RealField::from_samples(grid, &samples)?;
    Ok(TwoRoutes { fourier, lattice })
}

fn sign0(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        z.signum()
    }
}

/// `1 - 2 {x}`, with value 0 at the integers.
fn sawtooth(x: f64) -> f64 {
    let frac = x - x.floor();
    if frac == 0.0 {
        0.0
    } else {
        1.0 - 2.0 * frac
    }
}

/// `b_n(x)` and `d_n(x)`.
fn bd(a: f64, delta: f64, x: f64, n: f64) -> (f64, f64) {
    let z = a * (x + n);
    let b = 1.0 / (z.cosh() + (a * delta).cos());
    (b, b * z.sinh())
}

/// `|LHS - RHS|` of the product identity for `2 b_n b_m`, `n != m`.
pub fn lattice_identity_check(a: f64, delta: f64, x: f64, n: i64, m: i64) -> Result<f64> {
    check_regime(a, delta)?;
    if n == m {
        return contract("the product identity needs n != m");
    }
    let (bn, dn) = bd(a, delta, x, n as f64);
    let (bm, dm) = bd(a, delta, x, m as f64);
    let y = a * delta;
    let h = a / 2.0 * (m - n) as f64;
    let den = h.sinh().powi(2) + y.sin().powi(2);
    let rhs = -y.cos() / den * (bn + bm) + (-h).tanh().recip() / den * (dn - dm);
    Ok((2.0 * bn * bm - rhs).abs())
}

/// Truncated `sum_{n != m} b_n b_m` (with `|n|, |m| <= trunc`) against its
/// closed form with series truncated at `l <= trunc`. Returns `(sum, closed_form)`.
pub fn off_diagonal_sum_check(a: f64, delta: f64, x: f64, trunc: i64) -> Result<(f64, f64)> {
    check_regime(a, delta)?;
    let b: Vec<f64> = (-trunc..=trunc).map(|n| bd(a, delta, x, n as f64).0).collect();
    let total: f64 = b.iter().sum();
    let diag: f64 = b.iter().map(|v| v * v).sum();
    let direct = total * total - diag;
    let y = a * delta;
    let s2 = y.sin().powi(2);
    let (mut c1, mut c2) = (0.0, 0.0);
    for l in 1..=trunc {
        let l = l as f64;
        let den = (a * l / 2.0).sinh().powi(2) + s2;
        c1 += y.cos() / den;
        c2 += l / (a * l / 2.0).tanh() / den;
    }
    Ok((direct, -2.0 * c1 * total + 2.0 * c2))
}

fn require_delta_window(s: f64) -> Result<()> {
    if !(s < -0.5) {
        return contract(format!("the Dirac mass lies in H^s only for s < -1/2, got {s}"));
    }
    Ok(())
}

/// `sum_{k > k0} <2 pi k>^{2s}` by Euler-Maclaurin with the integral
/// expanded in powers of `(2 pi x)^{-2}`.
fn bracket_tail(k0: u64, s: f64) -> f64 {
    let x0 = k0 as f64;
    let y0 = 2.0 * PI * x0;
    // int_{x0}^inf (1 + (2 pi x)^2)^s dx
    let mut integral = 0.0;
    let mut binom = 1.0;
    for j in 0..40 {
        let p = 2.0 * s - 2.0 * j as f64;
        let term = binom * y0.powf(p + 1.0) / (2.0 * PI) / (-(p + 1.0));
        integral += term;
        if term.abs() < 1e-18 * integral.abs() {
            break;
        }
        binom *= (s - j as f64) / (j as f64 + 1.0);
    }
    let g = (1.0 + y0 * y0).powf(s);
    let dg = s * (1.0 + y0 * y0).powf(s - 1.0) * 2.0 * y0 * 2.0 * PI;
    integral - 0.5 * g - dg / 12.0
}

/// Minimum number of explicit modes before switching to the tail formula.
const TAIL_START: u64 = 2048;

/// `||U + 2 pi delta_0||_{H^s}` for a field on the unit circle; modes beyond
/// the grid count as `U_hat = 0`.
pub fn delta_distance(u: &RealField, s: f64) -> Result<f64> {
    require_delta_window(s)?;
    require_unit_circle(u.grid())?;
    let half = (u.grid().n_points() / 2) as i64;
    let w = |k: i64| japanese_bracket(2.0 * PI * k as f64, 1.0).powf(2.0 * s);
    let mut sum = 0.0;
    for k in -half..=half {
        sum += w(k) * (u.band_coeff(k) + 2.0 * PI).norm_sqr();
    }
    let four_pi2 = 4.0 * PI * PI;
    let start = (half as u64 + 1).max(TAIL_START);
    for k in (half + 1)..start as i64 {
        sum += 2.0 * four_pi2 * w(k);
    }
    sum += 2.0 * four_pi2 * bracket_tail(start - 1, s);
    Ok(sum.sqrt())
}

/// `||U + 2 pi delta_0||_{H^s}` for the periodic wave, from the exact
/// coefficients.
pub fn periodic_delta_distance(a: f64, delta: f64, s: f64) -> Result<f64> {
    require_delta_window(s)?;
    check_regime(a, delta)?;
    let w = |k: u64| japanese_bracket(2.0 * PI * k as f64, 1.0).powf(2.0 * s);
    let term = |k: u64| w(k) * (periodic_coefficient(2.0 * PI * k as f64, a, delta) + 2.0 * PI).powi(2);
    let mut sum = term(0);
    let mut k = 1u64;
    loop {
        let r = sinh_ratio(2.0 * PI * k as f64, a, delta);
        sum += 2.0 * term(k);
        if k >= TAIL_START && r < 1e-17 {
            break;
        }
        if k as usize > 100 * SERIES_CAP {
            return Err(Error::Numerical("delta distance series did not converge".into()));
        }
        k += 1;
    }
    sum += 2.0 * 4.0 * PI * PI * bracket_tail(k, s);
    Ok(sum.sqrt())
}

/// Observables of the Galilean family `v = Gamma_{mu_c - alpha}(u_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IllposedObservables {
    pub c: f64,
    pub mode_2pi: Complex64,
    pub mean: f64,
}

/// Mode `2 pi` of the plain periodic wave at time `t` with speed `c`:
/// `-2 pi e^{-2 pi i c t} sinh(2 pi delta) / sinh(2 pi^2 / a)`.
pub fn wave_mode_2pi(a: f64, delta: f64, c: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * c * t) * periodic_coefficient(2.0 * PI, a, delta)
}

/// Mode `2 pi` and mean of the mean-`alpha` family built from the periodic
/// wave. The shift `x - 2 gamma t` with `gamma = mu_c - alpha` multiplies the
/// mode by `e^{-4 pi i gamma t}`.
pub fn illposed_observables(a: f64, delta: f64, t: f64, alpha: f64) -> Result<IllposedObservables> {
    let c = periodic_speed(a, delta)?;
    let mu = periodic_coefficient(0.0, a, delta);
    let gamma = mu - alpha;
    let mode = Complex64::from_polar(1.0, -2.0 * PI * (c + 2.0 * gamma) * t) * periodic_coefficient(2.0 * PI, a, delta);
    Ok(IllposedObservables { c, mode_2pi: mode, mean: mu - gamma })
}

/// One row of the wave catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatalogRow {
    pub a: f64,
    pub delta: f64,
    pub c: f64,
    pub v: f64,
    pub d: f64,
    pub mean: f64,
    pub residual: f64,
    pub delta_distance: f64,
    pub n: usize,
    /// `residual / (|c| |u|_inf + |u|_inf^2)`.
    pub residual_rel: f64,
}

/// Smallest power-of-two grid on the unit circle, at least `min_n`, whose
/// Nyquist coefficient of the periodic profile is below `e^{-40}` times the
/// first one. Capped at `2^20`.
pub fn resolving_grid(a: f64, delta: f64, min_n: usize) -> Result<SpectralGrid> {
    check_regime(a, delta)?;
    let rate = 2.0 * PI * (PI / a - delta);
    let need = (2.0 * 40.0 / rate).ceil() as usize;
    let n = need.max(min_n).max(8).next_power_of_two().min(1 << 20);
    SpectralGrid::unit_torus(n)
}

pub fn catalog_row(a: f64, delta: f64, s: f64, grid: &SpectralGrid) -> Result<CatalogRow> {
    let k = constants_vdb(a, delta)?;
    let c = periodic_speed(a, delta)?;
    let u = periodic_profile(a, delta, grid)?.fourier;
    let residual = residual_traveleqn(&u, c, k.b, delta)?;
    let sup = u.sup_norm();
    Ok(CatalogRow {
        a,
        delta,
        c,
        v: k.v,
        d: k.d,
        mean: u.mean(),
        n: grid.n_points(),
        residual,
        residual_rel: residual / (c.abs() * sup + sup * sup),
        delta_distance: periodic_delta_distance(a, delta, s)?,
    })
}

pub fn write_catalog_csv<W: Write>(rows: &[CatalogRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
