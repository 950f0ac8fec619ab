//! Deterministic random data and the batch experiments behind the CLI.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispersive::{smoothing_norm_scan, Depth};
use crate::error::{contract, Error, Result};
use crate::evolution::{
    default_dt, galilean, write_snapshot, EvolutionProblem, EvolveOptions, Frame, GalileanFlavor, JsonSnapshot,
    Monitor,
};
use crate::exec;
use crate::lax::{beta_s, check_kappa, gronwall_experiment, BetaOptions, Flow, GronwallConfig, GronwallReport};
use crate::spectral::{RealField, SobolevIndex, SpectralGrid};
use crate::waves;

/// Shape of [`random_field`] spectra.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectrumShape {
    /// Decay exponent `r`; defaults to `|s| + 0.6`.
    pub decay: Option<f64>,
    /// Keep only `|k| <= band`.
    pub band: Option<usize>,
}

/// `u_hat(xi) = A (1 + |xi|)^{-r} e^{i theta}` with phases drawn from a
/// ChaCha8 stream seeded by `seed`; the Nyquist mode is zero.
pub fn random_field(s_target: f64, amplitude: f64, seed: u64, grid: &SpectralGrid, shape: SpectrumShape) -> Result<RealField> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return contract(format!("amplitude must be nonnegative, got {amplitude}"));
    }
    let r = shape.decay.unwrap_or(s_target.abs() + 0.6);
    let n = grid.n_points();
    let half = n / 2;
    let band = shape.band.unwrap_or(half - 1).min(half - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..=band {
        let theta = rng.gen_range(0.0..2.0 * PI);
        let mag = amplitude * (1.0 + grid.dk() * k as f64).powf(-r);
        if k == 0 {
            c[0] = Complex64::new(mag * theta.cos(), 0.0);
        } else {
            let z = Complex64::from_polar(mag, theta);
            c[k] = z;
            c[n - k] = z.conj();
        }
    }
    RealField::from_coeffs(grid, c)
}


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Wave,
    Beta,
    Gronwall,
    Illposed,
    Smoothing,
    Twodepth,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::Wave,
        Command::Beta,
        Command::Gronwall,
        Command::Illposed,
        Command::Smoothing,
        Command::Twodepth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Wave => "wave",
            Command::Beta => "beta",
            Command::Gronwall => "gronwall",
            Command::Illposed => "illposed",
            Command::Smoothing => "smoothing",
            Command::Twodepth => "twodepth",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown command `{name}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Ilw,
    Bo,
}

/// Parameters shared by all commands. Unset keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub c1: f64,
    pub c2: f64,
    pub frame: Frame,
    pub n: usize,
    pub period: f64,
    /// Time step; `None` picks the CFL default.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub records: usize,
    /// Hardy truncation of the Lax operator.
    pub modes: usize,
    pub s: f64,
    pub kappa: f64,
    pub amplitude: f64,
    /// Random data keep `|k| <= band`.
    pub band: usize,
    pub seed: u64,
    /// Number of seeds in sweeps, starting at `seed`.
    pub seeds: u64,
    pub deltas: Vec<f64>,
    pub a_deltas: Vec<f64>,
    pub min_depths: Vec<f64>,
    /// `delta2 / delta1` in the two-depth sweep.
    pub depth_ratio: f64,
    pub alpha: f64,
    pub s_delta: f64,
    pub scan_period: f64,
    pub scan_n: usize,
    pub tol: f64,
    pub output_dir: PathBuf,
}

#[allow(clippy::approx_constant)]
impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: Model::Ilw,
            delta: 1.0,
            delta1: 10.0,
            delta2: 20.0,
            c1: 1.0,
            c2: 1.0,
            frame: Frame::Original,
            n: 256,
            period: 2.0 * PI,
            dt: None,
            t_final: 1.0,
            records: 100,
            modes: 128,
            s: -0.25,
            kappa: 32.0,
            amplitude: 1.0,
            band: 8,
            seed: 0,
            seeds: 10,
            deltas: vec![0.5, 1.0, 2.0],
            a_deltas: vec![2.8, 3.0, 3.1, 3.14],
            min_depths: vec![10.0, 20.0, 40.0],
            depth_ratio: 2.0,
            alpha: 0.0,
            s_delta: -0.6,
            scan_period: 100.0,
            scan_n: 4096,
            tol: 1e-8,
            output_dir: PathBuf::from("ilw-out"),
        }
    }
}

/// Parse a flag value: integer, float, boolean, float list (`a,b,c`) or string.
fn flag_value(raw: &str) -> toml::Value {
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if raw.contains(',') {
        let items: Option<Vec<toml::Value>> =
            raw.split(',').map(|p| p.trim().parse::<f64>().ok().map(toml::Value::Float)).collect();
        if let Some(items) = items {
            return toml::Value::Array(items);
        }
    }
    toml::Value::String(raw.to_string())
}

/// Float-valued keys accept integers in files and flags.
const FLOAT_KEYS: &[&str] = &[
    "delta", "delta1", "delta2", "c1", "c2", "period", "dt", "t_final", "s", "kappa", "amplitude", "depth_ratio",
    "alpha", "s_delta", "scan_period", "tol",
];
const FLOAT_LIST_KEYS: &[&str] = &["deltas", "a_deltas", "min_depths"];

fn coerce(key: &str, v: toml::Value) -> toml::Value {
    match v {
        toml::Value::Integer(i) if FLOAT_KEYS.contains(&key) => toml::Value::Float(i as f64),
        toml::Value::Integer(i) if FLOAT_LIST_KEYS.contains(&key) => toml::Value::Array(vec![toml::Value::Float(i as f64)]),
        toml::Value::Float(f) if FLOAT_LIST_KEYS.contains(&key) => toml::Value::Array(vec![toml::Value::Float(f)]),
        toml::Value::Array(a) if FLOAT_LIST_KEYS.contains(&key) => toml::Value::Array(
            a.into_iter()
                .map(|x| match x {
                    toml::Value::Integer(i) => toml::Value::Float(i as f64),
                    other => other,
                })
                .collect(),
        ),
        other => other,
    }
}

impl ExperimentConfig {
    /// Merge, lowest precedence first: defaults, top-level keys of the file,
    /// the `[command]` section of the file, then `--key value` flags.
    pub fn resolve(command: Command, file_text: Option<&str>, flags: &[(String, String)]) -> Result<Self> {
        let mut merged = toml::Table::new();
        if let Some(text) = file_text {
            let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config file: {e}")))?;
            let mut section = None;
            for (k, v) in table {
                match v {
                    toml::Value::Table(t) => {
                        if Command::parse(&k).is_err() {
                            return Err(Error::Config(format!("unknown section [{k}]")));
                        }
                        if k == command.name() {
                            section = Some(t);
                        }
                    }
                    other => {
                        merged.insert(k.clone(), coerce(&k, other));
                    }
                }
            }
            for (k, v) in section.unwrap_or_default() {
                merged.insert(k.clone(), coerce(&k, v));
            }
        }
        for (k, raw) in flags {
            let key = k.replace('-', "_");
            merged.insert(key.clone(), coerce(&key, flag_value(raw)));
        }
        let cfg: Self = toml::Value::Table(merged).try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta", self.delta),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("period", self.period),
            ("t_final", self.t_final),
            ("kappa", self.kappa),
            ("depth_ratio", self.depth_ratio),
            ("scan_period", self.scan_period),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{name}` must be positive, got {v}")));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("`dt` must be positive, got {dt}")));
            }
        }
        if self.c1 <= 0.0 || self.c2 < 0.0 {
            return Err(Error::Config("need c1 > 0 and c2 >= 0".into()));
        }
        if self.amplitude < 0.0 {
            return Err(Error::Config("`amplitude` must be nonnegative".into()));
        }
        if self.n < 8 || !self.n.is_multiple_of(2) || self.scan_n < 8 || !self.scan_n.is_multiple_of(2) {
            return Err(Error::Config("grid sizes must be even and at least 8".into()));
        }
        if self.modes == 0 || self.records == 0 || self.seeds == 0 || self.band == 0 {
            return Err(Error::Config("`modes`, `records`, `seeds` and `band` must be positive".into()));
        }
        if self.deltas.iter().chain(&self.a_deltas).chain(&self.min_depths).any(|v| !(*v > 0.0)) {
            return Err(Error::Config("sweep values must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.period, self.n)
    }

    pub fn initial_data(&self, seed: u64) -> Result<RealField> {
        random_field(self.s, self.amplitude, seed, &self.grid()?, SpectrumShape { band: Some(self.band), decay: None })
    }

    fn step(&self, u0: &RealField) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(u0.grid(), u0))
    }

    fn seed_list(&self) -> Vec<u64> {
        (self.seed..self.seed + self.seeds).collect()
    }
}

/// One in-run assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: Command,
    config: &'a ExperimentConfig,
    version: &'static str,
    parallel: bool,
    outputs: &'a [PathBuf],
    checks: &'a [Check],
    wall_time_s: f64,
    finished_unix_s: u64,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.written.push(PathBuf::from(name));
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(self.create(name)?);
        for r in rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Run one command, writing its artifacts and `manifest.json` into the
/// configured output directory.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = Outputs::new(&cfg.output_dir)?;
    let checks = match command {
        Command::Simulate => run_simulate(cfg, &mut out)?,
        Command::Wave => run_wave(cfg, &mut out)?,
        Command::Beta => run_beta(cfg, &mut out)?,
        Command::Gronwall => run_gronwall(cfg, &mut out)?,
        Command::Illposed => run_illposed(cfg, &mut out)?,
        Command::Smoothing => run_smoothing(cfg, &mut out)?,
        Command::Twodepth => twodepth_run(cfg, &mut out)?,
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut outputs = out.written.clone();
    outputs.push(PathBuf::from("manifest.json"));
    let finished_unix_s = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    out.json(
        "manifest.json",
        &Manifest {
            command,
            config: cfg,
            version: env!("CARGO_PKG_VERSION"),
            parallel: cfg!(feature = "parallel"),
            outputs: &outputs,
            checks: &checks,
            wall_time_s,
            finished_unix_s,
        },
    )?;
    Ok(RunReport { command, outputs, checks, wall_time_s })
}

fn relative_drift(v: &[f64]) -> f64 {
    v.iter().map(|x| ((x - v[0]) / v[0]).abs()).fold(0.0, f64::max)
}

fn run_simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let u0 = cfg.initial_data(cfg.seed)?;
    let grid = u0.grid().clone();
    let delta = Depth::new(cfg.delta)?;
    let (problem, energy) = match cfg.model {
        Model::Ilw => (EvolutionProblem::ilw(delta, &grid)?, Monitor::HamiltonianIlw(delta)),
        Model::Bo => (EvolutionProblem::bo(&grid)?, Monitor::HamiltonianBo),
    };
    let energy_name = energy.name();
    let opts = EvolveOptions::new(cfg.t_final, cfg.step(&u0))
        .records(cfg.records)
        .monitor(Monitor::Mass)
        .monitor(energy)
        .monitor(Monitor::Mean)
        .monitor(Monitor::SupNorm)
        .monitor(Monitor::Sobolev(SobolevIndex::standard(cfg.s)));
    let traj = problem.evolve(&u0, &opts)?;
    traj.write_csv(out.create("trajectory.csv")?)?;
    out.json("final_state.json", &JsonSnapshot::new(*traj.times.last().unwrap(), traj.last()))?;
    write_snapshot(traj.last(), out.create("final_state.bin")?)?;
    let mass = relative_drift(&traj.diagnostic("mass").unwrap());
    let energy = relative_drift(&traj.diagnostic(&energy_name).unwrap());
    Ok(vec![
        Check::new("mass_drift", mass < cfg.tol, format!("{mass:e} (tol {:e})", cfg.tol)),
        Check::new("energy_drift", energy < cfg.tol, format!("{energy:e} (tol {:e})", cfg.tol)),
    ])
}

fn run_wave(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let mut params = Vec::new();
    for &d in &cfg.deltas {
        for &y in &cfg.a_deltas {
            params.push((y / d, d));
        }
    }
    let rows = exec::map(&params, |&(a, d)| {
        waves::catalog_row(a, d, cfg.s_delta, &waves::resolving_grid(a, d, cfg.n)?)
    })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut buf = out.create("waves.csv")?;
    waves::write_catalog_csv(&rows, &mut buf)?;
    let worst = rows.iter().map(|r| r.residual_rel).fold(0.0, f64::max);
    Ok(vec![Check::new("residual", worst < cfg.tol, format!("max relative residual {worst:e} (tol {:e})", cfg.tol))])
}

#[derive(Serialize)]
struct BetaSummary {
    seed: u64,
    kappa: f64,
    s: f64,
    modes: usize,
    beta_s: f64,
    tail: f64,
    norm_sq: f64,
    ratio: f64,
    threshold: f64,
    lambda_min: f64,
}

fn run_beta(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let u = cfg.initial_data(cfg.seed)?;
    let prof = beta_s(&u, cfg.kappa, cfg.s, cfg.modes, BetaOptions::default())?;
    let k = check_kappa(&u, cfg.s, cfg.kappa, 1.0, cfg.modes)?;
    let norm_sq = u.sobolev_norm(SobolevIndex::new(cfg.s, cfg.kappa)?).powi(2);
    prof.write_csv(out.create("beta_profile.csv")?)?;
    out.json(
        "beta.json",
        &BetaSummary {
            seed: cfg.seed,
            kappa: cfg.kappa,
            s: cfg.s,
            modes: cfg.modes,
            beta_s: prof.beta_s,
            tail: prof.tail,
            norm_sq,
            ratio: prof.beta_s / norm_sq,
            threshold: k.threshold,
            lambda_min: k.lambda_min,
        },
    )?;
    let monotone = prof.nodes.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(vec![
        Check::new("beta_s_positive", prof.beta_s > 0.0 || u.l2_norm() == 0.0, format!("{:e}", prof.beta_s)),
        Check::new("beta_nonincreasing", monotone, format!("{} nodes", prof.nodes.len())),
        Check::new("kappa_positive", k.lambda_min + cfg.kappa > 0.0, format!("lambda_min {}", k.lambda_min)),
    ])
}

#[derive(Serialize)]
struct GronwallDepth {
    delta: f64,
    a_hat: f64,
    reference_scaling: Option<f64>,
    bound_holds: bool,
    runs: Vec<GronwallReport>,
}

#[derive(Serialize)]
struct GronwallSummary {
    s: f64,
    kappa: f64,
    modes: usize,
    seeds: Vec<u64>,
    depths: Vec<GronwallDepth>,
    bo_control_a_hat: f64,
    a_hat_decreasing: bool,
}

fn gronwall_cfg(cfg: &ExperimentConfig, flow: Flow, dt: f64) -> GronwallConfig {
    GronwallConfig {
        flow,
        s: cfg.s,
        kappa: cfg.kappa,
        t_final: cfg.t_final,
        dt,
        records: cfg.records,
        modes: cfg.modes,
        beta: BetaOptions::tight(),
    }
}

fn run_gronwall(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let seeds = cfg.seed_list();
    let data = seeds.iter().map(|&s| cfg.initial_data(s)).collect::<Result<Vec<_>>>()?;
    let dt = cfg.dt.unwrap_or(1e-3);
    let mut depths = Vec::new();
    for &delta in &cfg.deltas {
        let runs = data
            .iter()
            .map(|u0| gronwall_experiment(u0, &gronwall_cfg(cfg, Flow::Ilw { delta }, dt)))
            .collect::<Result<Vec<_>>>()?;
        let a_hat = runs.iter().map(|r| r.a_hat).fold(f64::NEG_INFINITY, f64::max);
        depths.push(GronwallDepth {
            delta,
            a_hat,
            reference_scaling: runs[0].reference_scaling,
            bound_holds: runs.iter().all(|r| r.bound_holds),
            runs,
        });
    }
    let control = gronwall_experiment(&data[0], &gronwall_cfg(cfg, Flow::Bo, dt))?;
    let mut sorted: Vec<(f64, f64)> = depths.iter().map(|d| (d.delta, d.a_hat)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = sorted.windows(2).all(|w| w[1].1 < w[0].1);
    let holds = depths.iter().all(|d| d.bound_holds);
    let summary = GronwallSummary {
        s: cfg.s,
        kappa: cfg.kappa,
        modes: cfg.modes,
        seeds,
        bo_control_a_hat: control.a_hat,
        a_hat_decreasing: decreasing,
        depths,
    };
    out.json("gronwall.json", &summary)?;
    Ok(vec![
        Check::new("gronwall_bound", holds, "beta_s(t) <= e^{A t} beta_s(0) at every record".into()),
        Check::new("a_hat_decreasing_in_delta", decreasing, format!("{sorted:?}")),
        Check::new("bo_control", control.a_hat < 1e-6, format!("A = {:e}", control.a_hat)),
    ])
}

#[derive(Serialize)]
struct IllposedRow {
    a_delta: f64,
    c: f64,
    delta_distance: f64,
    mode_2pi_abs: f64,
    arg_rate: f64,
    mean: f64,
}

/// `d arg(mode_2pi) / dc` of the plain periodic wave at time `t`, by a
/// centered difference in `c` at fixed profile.
pub fn arg_rate(a: f64, delta: f64, c: f64, t: f64) -> f64 {
    let h = 0.2 / (1.0 + t.abs());
    let up = waves::wave_mode_2pi(a, delta, c + h, t);
    let dn = waves::wave_mode_2pi(a, delta, c - h, t);
    (up / dn).arg() / (2.0 * h)
}

fn run_illposed(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let t = cfg.t_final;
    let rows = cfg
        .a_deltas
        .iter()
        .map(|&y| {
            let a = y / cfg.delta;
            let o = waves::illposed_observables(a, cfg.delta, t, cfg.alpha)?;
            Ok(IllposedRow {
                a_delta: y,
                c: o.c,
                delta_distance: waves::periodic_delta_distance(a, cfg.delta, cfg.s_delta)?,
                mode_2pi_abs: o.mode_2pi.norm(),
                arg_rate: arg_rate(a, cfg.delta, o.c, t),
                mean: o.mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.csv("illposed.csv", &rows)?;
    let mut sorted: Vec<&IllposedRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.a_delta.total_cmp(&b.a_delta));
    let decreasing = sorted.windows(2).all(|w| w[1].delta_distance < w[0].delta_distance);
    let rate_err = rows.iter().map(|r| (r.arg_rate + 2.0 * PI * t).abs()).fold(0.0, f64::max);
    let limit = 2.0 * PI;
    let converging = sorted.windows(2).all(|w| (w[1].mode_2pi_abs - limit).abs() < (w[0].mode_2pi_abs - limit).abs());
    let mean_err = rows.iter().map(|r| (r.mean - cfg.alpha).abs()).fold(0.0, f64::max);
    Ok(vec![
        Check::new("delta_distance_decreasing", decreasing, format!("{:?}", sorted.iter().map(|r| r.delta_distance).collect::<Vec<_>>())),
        Check::new("mode_converges", converging, format!("{:?}", sorted.iter().map(|r| r.mode_2pi_abs).collect::<Vec<_>>())),
        Check::new("phase_velocity", rate_err < 1e-10, format!("max |rate + 2 pi t| = {rate_err:e}")),
        Check::new("family_mean", mean_err < 1e-12, format!("max |mean - alpha| = {mean_err:e}")),
    ])
}

#[derive(Serialize)]
struct SmoothingRow {
    delta: f64,
    s1: f64,
    s2: f64,
    measured: f64,
    bound: f64,
    ratio: f64,
}

/// Index pairs scanned by the `smoothing` command.
pub const SMOOTHING_PAIRS: [(f64, f64); 2] = [(-0.5, 1.0), (0.0, 2.0)];

fn run_smoothing(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let grid = SpectralGrid::new(cfg.scan_period, cfg.scan_n)?;
    let mut rows = Vec::new();
    for &delta in &cfg.deltas {
        for &(s1, s2) in &SMOOTHING_PAIRS {
            let r = smoothing_norm_scan(s1, s2, Depth::new(delta)?, &grid)?;
            rows.push(SmoothingRow { delta, s1, s2, measured: r.measured, bound: r.bound, ratio: r.ratio() });
        }
    }
    out.csv("smoothing.csv", &rows)?;
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(vec![Check::new("ratio_variation", hi / lo < 10.0, format!("constant {hi:.4}, variation {:.4}", hi / lo))])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoDepthRow {
    pub min_depth: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub l2_discrepancy: f64,
}

/// Distance at `t_final` between the two-depth flow and the BO flow with
/// dispersion `(c1 + c2) H d_x^2`, over increasing depths.
pub fn twodepth_sweep(cfg: &ExperimentConfig) -> Result<Vec<TwoDepthRow>> {
    let u0 = cfg.initial_data(cfg.seed)?;
    let grid = u0.grid().clone();
    let dt = cfg.step(&u0);
    let total = cfg.c1 + cfg.c2;
    let bo = EvolutionProblem::from_symbol(&grid, |xi| total * crate::dispersive::hilbert_dxx_symbol(xi), "bo2")?;
    let opts = EvolveOptions::new(cfg.t_final, dt);
    let target = bo.evolve(&u0, &opts)?.last().clone();
    let rows = exec::map(&cfg.min_depths, |&d1| -> Result<TwoDepthRow> {
        let d2 = d1 * cfg.depth_ratio;
        let (a, b) = (Depth::new(d1)?, Depth::new(d2)?);
        let p = EvolutionProblem::two_depth(cfg.c1, cfg.c2, a, b, cfg.frame, &grid)?;
        let mut u = p.evolve(&u0, &opts)?.last().clone();
        if cfg.frame == Frame::Renormalized {
            let gamma = EvolutionProblem::two_depth_gamma(cfg.c1, cfg.c2, a, b);
            u = galilean(&u, -gamma, cfg.t_final, GalileanFlavor::PureShift);
        }
        Ok(TwoDepthRow { min_depth: d1.min(d2), delta1: d1, delta2: d2, l2_discrepancy: u.axpy(-1.0, &target).l2_norm() })
    });
    rows.into_iter().collect()
}

/// `twodepth` command: the sweep plus its monotonicity check.
fn twodepth_run(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let rows = twodepth_sweep(cfg)?;
    out.csv("twodepth.csv", &rows)?;
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.min_depth.total_cmp(&b.min_depth));
    let decreasing = sorted.windows(2).all(|w| w[1].l2_discrepancy < w[0].l2_discrepancy);
    Ok(vec![Check::new(
        "discrepancy_decreasing",
        decreasing,
        format!("{:?}", sorted.iter().map(|r| r.l2_discrepancy).collect::<Vec<_>>()),
    )])
}
