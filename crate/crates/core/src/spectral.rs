//! Periodic grids, Fourier transforms, H^s_kappa norms and the Szego projection.
//!
//! Conventions on a torus of period `L`:
//!
//! ```text
//! u_hat(xi) = int_0^L u(x) exp(-i xi x) dx,      u(x) = (1/L) sum_xi u_hat(xi) exp(i xi x)
//! ```
//!
//! with `xi = (2 pi / L) k`. For `L = 1` these are exactly the circle formulas
//! used throughout the crate. Coefficients are stored in FFT order: slot `j`
//! holds mode `k = j` for `j < N/2` and `k = j - N` otherwise, so slot `N/2`
//! is the Nyquist mode `k = -N/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{contract, Error, Result};

/// Relative tolerance for the Hermitian-symmetry check on input coefficients.
const HERMITIAN_TOL: f64 = 1e-10;

/// Equispaced periodic grid with cached FFT plans.
#[derive(Clone)]
pub struct SpectralGrid {
    period: f64,
    n_points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("period", &self.period)
            .field("n_points", &self.n_points)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.period == other.period && self.n_points == other.n_points
    }
}

impl SpectralGrid {
    pub fn new(period: f64, n_points: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return contract(format!("grid period must be positive, got {period}"));
        }
        if n_points < 8 || n_points % 2 != 0 {
            return contract(format!("grid size must be even and >= 8, got {n_points}"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            period,
            n_points,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        })
    }

    /// The unit torus `R / Z`, frequencies in `2 pi Z`.
    pub fn unit_torus(n_points: usize) -> Result<Self> {
        Self::new(1.0, n_points)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Lattice spacing `2 pi / L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Signed mode index stored in FFT slot `slot`.
    pub fn mode(&self, slot: usize) -> i64 {
        let n = self.n_points as i64;
        let j = slot as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// FFT slot holding signed mode `k`, if it is on the grid.
    pub fn slot(&self, k: i64) -> Option<usize> {
        let n = self.n_points as i64;
        if k >= -n / 2 && k < n / 2 {
            Some(k.rem_euclid(n) as usize)
        } else {
            None
        }
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n_points / 2
    }

    pub fn wavenumber(&self, slot: usize) -> f64 {
        self.mode(slot) as f64 * self.dk()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.wavenumber(j)).collect()
    }

    /// Largest resolved frequency `(N/2 - 1) * 2 pi / L`.
    pub fn max_wavenumber(&self) -> f64 {
        (self.n_points / 2 - 1) as f64 * self.dk()
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.period / self.n_points as f64;
        (0..self.n_points).map(|j| j as f64 * h).collect()
    }

    /// Same period, different resolution.
    pub fn with_points(&self, n_points: usize) -> Result<Self> {
        Self::new(self.period, n_points)
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }
}

/// `<xi>_kappa = (kappa^2 + xi^2)^{1/2}`.
pub fn japanese_bracket(xi: f64, kappa: f64) -> f64 {
    kappa.hypot(xi)
}

/// Regularity `s` together with the spectral shift `kappa >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex {
    pub s: f64,
    pub kappa: f64,
}

impl SobolevIndex {
    pub fn new(s: f64, kappa: f64) -> Result<Self> {
        if !s.is_finite() {
            return contract("Sobolev index s must be finite");
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return contract(format!("kappa must be >= 1, got {kappa}"));
        }
        Ok(Self { s, kappa })
    }

    /// Standard `H^s` (kappa = 1).
    pub fn standard(s: f64) -> Self {
        Self { s, kappa: 1.0 }
    }

    /// Restrict to the negative-regularity window `-1/2 < s < 0`.
    pub fn require_negative_window(&self) -> Result<()> {
        if self.s > -0.5 && self.s < 0.0 {
            Ok(())
        } else {
            contract(format!("s must lie in (-1/2, 0), got {}", self.s))
        }
    }

    pub fn weight(&self, xi: f64) -> f64 {
        japanese_bracket(xi, self.kappa).powf(2.0 * self.s)
    }
}

/// Real-valued periodic function stored through its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: SpectralGrid,
    coeffs: Vec<Complex64>,
}

impl RealField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        }
    }

    pub fn constant(grid: &SpectralGrid, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value * grid.period(), 0.0);
        f
    }

    /// Forward transform of point samples `f(x_j)`, `x_j = j L / N`.
    pub fn from_samples(grid: &SpectralGrid, samples: &[f64]) -> Result<Self> {
        let n = grid.n_points();
        if samples.len() != n {
            return Err(Error::Dimension { expected: n, got: samples.len() });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite sample".into()));
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.fft_forward(&mut buf);
        let scale = grid.period() / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        let mut f = Self { grid: grid.clone(), coeffs: buf };
        f.symmetrize();
        Ok(f)
    }

    pub fn from_fn(grid: &SpectralGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = grid.points().into_iter().map(f).collect();
        Self::from_samples(grid, &samples).expect("grid-sized sample vector")
    }

    /// Build from coefficients in FFT order. The input must already be
    /// Hermitian up to rounding; it is then symmetrized exactly.
    pub fn from_coeffs(grid: &SpectralGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        let n = grid.n_points();
        if coeffs.len() != n {
            return Err(Error::Dimension { expected: n, got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Numerical("non-finite Fourier coefficient".into()));
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for j in 0..n {
            let k = grid.mode(j);
            if let Some(jm) = grid.slot(-k) {
                let defect = (coeffs[j] - coeffs[jm].conj()).norm();
                if defect > HERMITIAN_TOL * scale {
                    return contract(format!(
                        "coefficients are not Hermitian at mode {k} (defect {defect:e})"
                    ));
                }
            } else if coeffs[j].im.abs() > HERMITIAN_TOL * scale {
                return contract("Nyquist coefficient of a real field must be real");
            }
        }
        let mut f = Self { grid: grid.clone(), coeffs };
        f.symmetrize();
        Ok(f)
    }

    fn symmetrize(&mut self) {
        let n = self.grid.n_points();
        self.coeffs[0].im = 0.0;
        self.coeffs[n / 2].im = 0.0;
        for j in 1..n / 2 {
            let avg = 0.5 * (self.coeffs[j] + self.coeffs[n - j].conj());
            self.coeffs[j] = avg;
            self.coeffs[n - j] = avg.conj();
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// Coefficients in FFT order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of signed mode `k` on the grid lattice (zero off-grid).
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid.slot(k).map_or(Complex64::new(0.0, 0.0), |j| self.coeffs[j])
    }

    /// Coefficient of mode `k` for the field read as a trigonometric
    /// polynomial whose Nyquist term is split evenly between `+-N/2`.
    /// Products and Toeplitz operators use this reading so that they are
    /// exact for band-limited data.
    pub fn band_coeff(&self, k: i64) -> Complex64 {
        let half = (self.grid.n_points() / 2) as i64;
        if k.abs() < half {
            self.coeffs[self.grid.slot(k).unwrap()]
        } else if k.abs() == half {
            0.5 * self.coeffs[self.grid.nyquist_slot()]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Inverse transform: samples at the grid points.
    pub fn samples(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        self.grid.fft_inverse(&mut buf);
        let scale = 1.0 / self.grid.period();
        buf.into_iter().map(|c| c.re * scale).collect()
    }

    /// Evaluate the trigonometric interpolant at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        let half = (self.grid.n_points() / 2) as i64;
        let dk = self.grid.dk();
        let mut acc = self.coeffs[0].re;
        for k in 1..=half {
            let c = self.band_coeff(k);
            let ph = Complex64::from_polar(1.0, k as f64 * dk * x);
            acc += 2.0 * (c * ph).re;
        }
        acc / self.grid.period()
    }

    /// Spatial mean `(1/L) int u`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re / self.grid.period()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples().into_iter().map(f64::abs).fold(0.0, f64::max)
    }

    /// `||u||_{L^2}` from the coefficients (Plancherel).
    pub fn l2_norm(&self) -> f64 {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.period()).sqrt()
    }

    /// `||u||_{L^2}` from the samples (trapezoidal rule).
    pub fn l2_norm_physical(&self) -> f64 {
        let h = self.grid.period() / self.grid.n_points() as f64;
        (self.samples().iter().map(|v| v * v).sum::<f64>() * h).sqrt()
    }

    /// `( (1/L) sum <xi>_kappa^{2s} |u_hat|^2 )^{1/2}`.
    pub fn sobolev_norm(&self, idx: SobolevIndex) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| idx.weight(self.grid.wavenumber(j)) * c.norm_sqr())
            .sum();
        (sum / self.grid.period()).sqrt()
    }

    /// Cauchy-Szego projection: coefficients at `xi >= 0`, zero mode included.
    pub fn hardy_project(&self) -> HardyVector {
        let half = self.grid.n_points() / 2;
        HardyVector::new(self.grid.period(), self.coeffs[..half].to_vec())
    }

    /// Complementary projection onto `xi < 0`, returned as coefficients of
    /// modes `-1, -2, ..., -N/2`.
    pub fn negative_part(&self) -> Vec<Complex64> {
        let n = self.grid.n_points();
        (1..=n / 2).map(|k| self.coeffs[n - k]).collect()
    }

    /// Apply a Fourier multiplier sampled on the lattice.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64) -> Complex64) -> Result<RealField> {
        SymbolTable::new(&self.grid, symbol).apply(self)
    }

    /// Resample onto `n_points` with zero padding or truncation.
    pub fn resample(&self, n_points: usize) -> Result<RealField> {
        let grid = self.grid.with_points(n_points)?;
        let mut out = RealField::zeros(&grid);
        let half_new = (n_points / 2) as i64;
        for j in 0..n_points {
            let k = grid.mode(j);
            if k.abs() < half_new {
                out.coeffs[j] = self.band_coeff(k);
            } else {
                // new Nyquist collects both halves of the old mode
                out.coeffs[j] = self.band_coeff(k) + self.band_coeff(-k);
            }
        }
        out.symmetrize();
        Ok(out)
    }

    /// `int_0^L u^p dx` evaluated without aliasing for small integer powers.
    pub fn integral_power(&self, p: u32) -> f64 {
        let fine = self.grid.n_points() * (p as usize).max(1);
        let f = self.resample(fine).expect("finer grid is valid");
        let h = self.grid.period() / fine as f64;
        f.samples().iter().map(|v| v.powi(p as i32)).sum::<f64>() * h
    }

    /// `int_0^L u v dx`.
    pub fn inner(&self, other: &RealField) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        s / self.grid.period()
    }

    /// Translate: `u(x - h)`.
    pub fn translate(&self, h: f64) -> RealField {
        let mut out = self.clone();
        for (j, c) in out.coeffs.iter_mut().enumerate() {
            let xi = self.grid.wavenumber(j);
            *c *= Complex64::from_polar(1.0, -xi * h);
        }
        out.symmetrize();
        out
    }

    pub fn add_constant(&self, v: f64) -> RealField {
        let mut out = self.clone();
        out.coeffs[0].re += v * self.grid.period();
        out
    }

    pub fn scale(&self, a: f64) -> RealField {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= a;
        }
        out
    }

    pub fn axpy(&self, a: f64, other: &RealField) -> RealField {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * d;
        }
        out
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub(crate) fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub(crate) fn from_coeffs_unchecked(grid: &SpectralGrid, coeffs: Vec<Complex64>) -> Self {
        let mut f = Self { grid: grid.clone(), coeffs };
        f.symmetrize();
        f
    }
}

/// Hardy-space coefficient vector: entry `k` is the coefficient at
/// `xi = k * 2 pi / L`, `k >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyVector {
    period: f64,
    coeffs: Vec<Complex64>,
}

impl HardyVector {
    pub fn new(period: f64, coeffs: Vec<Complex64>) -> Self {
        Self { period, coeffs }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    pub fn l2_norm(&self) -> f64 {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.period).sqrt()
    }

    pub fn sobolev_norm(&self, idx: SobolevIndex) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| idx.weight(self.wavenumber(k)) * c.norm_sqr())
            .sum();
        (sum / self.period).sqrt()
    }

    /// Evaluate `(1/L) sum_k c_k exp(i xi_k x)`.
    pub fn eval(&self, x: f64) -> Complex64 {
        let s: Complex64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(1.0, self.wavenumber(k) * x))
            .sum();
        s / self.period
    }
}

/// A Fourier multiplier tabulated on a grid, one value per FFT slot.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    grid: SpectralGrid,
    values: Vec<Complex64>,
}

impl SymbolTable {
    pub fn new(grid: &SpectralGrid, symbol: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n_points()).map(|j| symbol(grid.wavenumber(j))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &SpectralGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Dimension { expected: grid.n_points(), got: values.len() });
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// Whether `symbol(-xi) = conj(symbol(xi))` on every paired mode.
    pub fn is_hermitian(&self) -> bool {
        let scale = self.values.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        (1..self.grid.n_points() / 2).all(|j| {
            let jm = self.grid.n_points() - j;
            (self.values[j] - self.values[jm].conj()).norm() <= 1e-12 * scale
        }) && self.values[0].im.abs() <= 1e-12 * scale
    }

    /// Multiply coefficients by the symbol. A non-real value at the Nyquist
    /// slot marks an odd symbol and the Nyquist output is zeroed.
    pub fn apply(&self, f: &RealField) -> Result<RealField> {
        if f.grid() != &self.grid {
            return contract("symbol and field live on different grids");
        }
        if !self.is_hermitian() {
            return contract("symbol is not Hermitian; the output would not be real");
        }
        let mut coeffs: Vec<Complex64> =
            f.coeffs.iter().zip(&self.values).map(|(c, s)| c * s).collect();
        let ny = self.grid.nyquist_slot();
        let s_ny = self.values[ny];
        if s_ny.im.abs() > 1e-14 * s_ny.norm().max(f64::MIN_POSITIVE) {
            coeffs[ny] = Complex64::new(0.0, 0.0);
        }
        Ok(RealField::from_coeffs_unchecked(&self.grid, coeffs))
    }

    /// CSV rows `xi, re, im` in increasing frequency.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["xi", "re", "im"])?;
        let n = self.grid.n_points() as i64;
        for k in -n / 2..n / 2 {
            let j = self.grid.slot(k).unwrap();
            let v = self.values[j];
            wtr.write_record(&[
                format!("{}", self.grid.wavenumber(j)),
                format!("{}", v.re),
                format!("{}", v.im),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Sobolev norm convenience wrapper.
pub fn sobolev_norm(f: &RealField, idx: SobolevIndex) -> f64 {
    f.sobolev_norm(idx)
}

/// Forward transform convenience wrapper.
pub fn forward_transform(grid: &SpectralGrid, samples: &[f64]) -> Result<RealField> {
    RealField::from_samples(grid, samples)
}

/// Szego projection convenience wrapper.
pub fn hardy_project(f: &RealField) -> HardyVector {
    f.hardy_project()
}

/// Multiplier convenience wrapper.
pub fn multiplier_apply(f: &RealField, symbol: impl Fn(f64) -> Complex64) -> Result<RealField> {
    f.apply_multiplier(symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band_limited(grid: &SpectralGrid, seed: u64, modes: i64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = vec![Complex64::new(0.0, 0.0); grid.n_points()];
        c[0] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        for k in 1..=modes {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            c[grid.slot(k).unwrap()] = z;
            c[grid.slot(-k).unwrap()] = z.conj();
        }
        RealField::from_coeffs(grid, c).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpectralGrid::new(1.0, 6).is_err());
        assert!(SpectralGrid::new(1.0, 9).is_err());
        assert!(SpectralGrid::new(0.0, 16).is_err());
        let g = SpectralGrid::unit_torus(16).unwrap();
        assert_eq!(g.mode(8), -8);
        assert_eq!(g.slot(-1), Some(15));
        assert_eq!(g.slot(8), None);
        assert_relative_eq!(g.wavenumber(1), 2.0 * PI);
    }

    #[test]
    fn constant_and_single_harmonic() {
        let g = SpectralGrid::unit_torus(32).unwrap();
        let one = RealField::from_fn(&g, |_| 1.0);
        assert!((one.coeff(0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((1..16).all(|k| one.coeff(k).norm() < 1e-14));

        let c = RealField::from_fn(&g, |x| 2.0 * (2.0 * PI * x).cos());
        assert!((c.coeff(1) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((c.coeff(-1) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(c.coeff(0).norm() < 1e-14);
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        let g = SpectralGrid::unit_torus(16).unwrap();
        assert!(matches!(
            RealField::from_samples(&g, &[0.0; 15]),
            Err(Error::Dimension { expected: 16, got: 15 })
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        for period in [1.0, 100.0] {
            let g = SpectralGrid::new(period, 128).unwrap();
            let f = random_band_limited(&g, 7, 40);
            let back = RealField::from_samples(&g, &f.samples()).unwrap();
            let scale = f.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
                assert!((a - b).norm() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn plancherel_both_periods() {
        for period in [1.0, 100.0] {
            let g = SpectralGrid::new(period, 256).unwrap();
            let f = random_band_limited(&g, 3, 100);
            assert_relative_eq!(f.l2_norm(), f.l2_norm_physical(), max_relative = 1e-12);
        }
    }

    #[test]
    fn sobolev_examples() {
        let g = SpectralGrid::unit_torus(32).unwrap();
        assert_eq!(RealField::zeros(&g).sobolev_norm(SobolevIndex::standard(-0.3)), 0.0);
        let c = RealField::from_fn(&g, |x| 2.0 * (2.0 * PI * x).cos());
        assert_relative_eq!(
            c.sobolev_norm(SobolevIndex::standard(0.0)),
            2f64.sqrt(),
            max_relative = 1e-13
        );
        assert!(SobolevIndex::new(-0.25, 0.5).is_err());
    }

    #[test]
    fn hs_bounded_by_kappa_weighted_norm() {
        let g = SpectralGrid::unit_torus(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..1000u64 {
            let f = random_band_limited(&g, seed, 31);
            let s: f64 = -rng.gen_range(0.01..0.49);
            let kappa: f64 = rng.gen_range(1.0..200.0);
            let lhs = f.sobolev_norm(SobolevIndex::standard(s));
            let rhs = kappa.powf(-s) * f.sobolev_norm(SobolevIndex::new(s, kappa).unwrap());
            assert!(lhs <= rhs * (1.0 + 1e-12), "seed {seed}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn kappa_monotonicity() {
        let g = SpectralGrid::unit_torus(64).unwrap();
        for seed in 0..20 {
            let f = random_band_limited(&g, seed, 31);
            let norms: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0, 64.0]
                .iter()
                .map(|&k| f.sobolev_norm(SobolevIndex::new(-0.25, k).unwrap()))
                .collect();
            assert!(norms.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn hardy_projection_examples() {
        let g = SpectralGrid::unit_torus(32).unwrap();
        let c = RealField::from_fn(&g, |x| 2.0 * (2.0 * PI * x).cos());
        let p = c.hardy_project();
        assert!(p.coeffs()[0].norm() < 1e-14);
        assert!((p.coeffs()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(p.coeffs()[2..].iter().all(|z| z.norm() < 1e-14));

        let one = RealField::constant(&g, 1.0);
        assert_relative_eq!(one.hardy_project().coeffs()[0].re, 1.0);
    }

    #[test]
    fn hardy_parseval_split_and_contraction() {
        let g = SpectralGrid::new(3.0, 64).unwrap();
        let f = random_band_limited(&g, 5, 31);
        let plus = f.hardy_project();
        let minus: f64 = f.negative_part().iter().map(|c| c.norm_sqr()).sum::<f64>() / 3.0;
        assert_relative_eq!(plus.l2_norm().powi(2) + minus, f.l2_norm().powi(2), max_relative = 1e-13);
        for (s, k) in [(-0.25, 1.0), (-0.4, 30.0), (1.0, 2.0)] {
            let idx = SobolevIndex::new(s, k).unwrap();
            assert!(plus.sobolev_norm(idx) <= f.sobolev_norm(idx));
        }
        // idempotent: projecting the projection changes nothing
        let mut c = vec![Complex64::new(0.0, 0.0); 64];
        c[..32].copy_from_slice(plus.coeffs());
        assert_eq!(&c[..32], plus.coeffs());
    }

    #[test]
    fn multiplier_examples() {
        let g = SpectralGrid::unit_torus(64).unwrap();
        let f = RealField::from_fn(&g, |x| (2.0 * PI * x).sin() + 0.3 * (6.0 * PI * x).cos());
        let id = f.apply_multiplier(|_| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(id.coeffs(), f.coeffs());

        let s = RealField::from_fn(&g, |x| (2.0 * PI * x).sin());
        let d = s.apply_multiplier(|xi| Complex64::new(0.0, xi)).unwrap();
        let exact = RealField::from_fn(&g, |x| 2.0 * PI * (2.0 * PI * x).cos());
        for (a, b) in d.samples().iter().zip(exact.samples()) {
            assert!((a - b).abs() < 1e-12);
        }

        let mut mz = random_band_limited(&g, 1, 31);
        mz.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        mz.coeffs_mut()[32] = Complex64::new(0.7, 0.0);
        let hilbert = |xi: f64| Complex64::new(0.0, -xi.signum() * (xi != 0.0) as i32 as f64);
        let h2 = mz.apply_multiplier(hilbert).unwrap().apply_multiplier(hilbert).unwrap();
        for k in -31..32i64 {
            assert!((h2.coeff(k) + mz.coeff(k)).norm() < 1e-13, "mode {k}");
        }
        // Nyquist removed by the odd symbol
        assert_eq!(h2.coeffs()[32], Complex64::new(0.0, 0.0));

        let bad = f.apply_multiplier(|xi| Complex64::new(0.0, xi.abs() + 1.0));
        assert!(matches!(bad, Err(Error::Contract(_))));
    }

    #[test]
    fn non_hermitian_coefficients_rejected() {
        let g = SpectralGrid::unit_torus(16).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 16];
        c[1] = Complex64::new(1.0, 0.0);
        assert!(RealField::from_coeffs(&g, c).is_err());
    }

    #[test]
    fn cubic_integral_without_aliasing() {
        let g = SpectralGrid::unit_torus(8).unwrap();
        // u = 2 cos(2 pi 3 x): int u^3 = 0, int u^2 = 2, int u^4 = 6 * 16/16 = 6
        let u = RealField::from_fn(&g, |x| 2.0 * (6.0 * PI * x).cos());
        assert!(u.integral_power(3).abs() < 1e-13);
        assert_relative_eq!(u.integral_power(2), 2.0, max_relative = 1e-13);
        assert_relative_eq!(u.integral_power(4), 6.0, max_relative = 1e-13);
    }
}
