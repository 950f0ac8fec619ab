#![allow(clippy::approx_constant)]

use std::f64::consts::PI;
use std::time::Instant;

use ilw_lab::dispersive::{smoothing_norm_scan, Depth};
use ilw_lab::evolution::{EvolutionProblem, EvolveOptions, Monitor};
use ilw_lab::experiments::{arg_rate, random_field, SpectrumShape, SMOOTHING_PAIRS};
use ilw_lab::lax::{
    beta, beta_flow_derivative, beta_gradient, beta_s, gronwall_experiment, BetaOptions, Flow, GronwallConfig,
};
use ilw_lab::waves::{
    illposed_observables, periodic_delta_distance, periodic_profile, periodic_speed, residual_traveleqn,
    constants_vdb,
};
use ilw_lab::{RealField, SobolevIndex, SpectralGrid};

fn report(id: u32, name: &str, pass: bool, detail: String, start: Instant) -> bool {
    println!(
        "{} criterion {id:>2} {name}: {detail} [{:.2}s]",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    pass
}

fn field(seed: u64, n: usize, amplitude: f64, band: usize) -> RealField {
    let g = SpectralGrid::new(2.0 * PI, n).unwrap();
    random_field(-0.25, amplitude, seed, &g, SpectrumShape { band: Some(band), decay: None }).unwrap()
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn traveling_wave_exactness() -> bool {
    let t0 = Instant::now();
    let delta = 1.0;
    let a = 2.0 / delta;
    let grid = SpectralGrid::unit_torus(1024).unwrap();
    let u = periodic_profile(a, delta, &grid).unwrap().fourier;
    let c = periodic_speed(a, delta).unwrap();
    let k = constants_vdb(a, delta).unwrap();
    let residual = residual_traveleqn(&u, c, k.b, delta).unwrap();

    let p = EvolutionProblem::ilw(Depth::new(delta).unwrap(), &grid).unwrap();
    let traj = p.evolve(&u, &EvolveOptions::new(1.0, 1e-4).records(20)).unwrap();
    let mut worst: f64 = 0.0;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let exact = u.translate(c * t);
        worst = worst.max(s.axpy(-1.0, &exact).l2_norm() / exact.l2_norm());
    }
    report(
        1,
        "traveling wave",
        residual < 1e-8 && worst < 1e-4,
        format!("residual {residual:.3e} (< 1e-8), translation error {worst:.3e} (< 1e-4), c = {c:.6}"),
        t0,
    )
}

fn poisson_summation_identity() -> bool {
    let t0 = Instant::now();
    let grid = SpectralGrid::unit_torus(1024).unwrap();
    let mut worst: f64 = 0.0;
    for y in [1.0, 2.0, 3.0] {
        worst = worst.max(periodic_profile(y, 1.0, &grid).unwrap().sup_distance());
    }
    report(2, "fourier vs lattice profile", worst < 1e-10, format!("max sup distance {worst:.3e} (< 1e-10)"), t0)
}

fn smoothing_ratio_uniform() -> bool {
    let t0 = Instant::now();
    let grid = SpectralGrid::new(100.0, 4096).unwrap();
    let mut ratios = Vec::new();
    for delta in [0.25, 1.0, 4.0] {
        for (s1, s2) in SMOOTHING_PAIRS {
            ratios.push(smoothing_norm_scan(s1, s2, Depth::new(delta).unwrap(), &grid).unwrap().ratio());
        }
    }
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    report(
        3,
        "smoothing ratio",
        hi / lo < 10.0 && lo > 0.0,
        format!("constant {hi:.4}, variation {:.3} (< 10), ratios {ratios:.4?}", hi / lo),
        t0,
    )
}

fn bo_conserves_beta_s() -> bool {
    let t0 = Instant::now();
    let u0 = field(1, 256, 1.0, 8);
    let p = EvolutionProblem::bo(u0.grid()).unwrap();
    let traj = p.evolve(&u0, &EvolveOptions::new(1.0, 1e-4).records(4)).unwrap();
    let values: Vec<f64> =
        traj.states.iter().map(|u| beta_s(u, 32.0, -0.25, 512, BetaOptions::tight()).unwrap().beta_s).collect();
    let drift = values.iter().map(|v| rel(*v, values[0])).fold(0.0, f64::max);
    report(4, "BO beta_s drift", drift < 1e-6, format!("relative drift {drift:.3e} (< 1e-6), beta_s(0) = {:.6e}", values[0]), t0)
}

fn gradient_identity() -> bool {
    let t0 = Instant::now();
    let kappa = 32.0;
    let modes = 128;
    let u = field(2, 256, 1.0, 8);
    let grad = beta_gradient(&u, kappa, modes).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let v = field(100 + seed, 256, 1.0, 16);
        let fd = (beta(&u.axpy(h, &v), kappa, modes).unwrap() - beta(&u.axpy(-h, &v), kappa, modes).unwrap()) / (2.0 * h);
        worst = worst.max(rel(fd, grad.inner(&v)));
    }
    report(5, "gradient identity", worst < 1e-6, format!("max relative error {worst:.3e} over 20 directions (< 1e-6)"), t0)
}

fn flow_derivative_identity() -> bool {
    let t0 = Instant::now();
    let delta = Depth::new(1.0).unwrap();
    let u0 = field(3, 256, 1.0, 8);
    let p = EvolutionProblem::ilw(delta, u0.grid()).unwrap();
    let dt = 1e-4;
    let bs = |v: &RealField| beta_s(v, 32.0, -0.25, 128, BetaOptions::tight()).unwrap().beta_s;
    let mut errs = Vec::new();
    for t in [0.1, 0.5, 1.0] {
        let um = p.evolve(&u0, &EvolveOptions::new(t - dt, dt)).unwrap().last().clone();
        let u = p.evolve(&um, &EvolveOptions::new(dt, dt)).unwrap().last().clone();
        let up = p.evolve(&u, &EvolveOptions::new(dt, dt)).unwrap().last().clone();
        let fd = (bs(&up) - bs(&um)) / (2.0 * dt);
        let f = beta_flow_derivative(&u, 32.0, -0.25, delta, 128, BetaOptions::tight()).unwrap();
        errs.push(rel(fd, f.total));
    }
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    report(6, "flow derivative", worst < 1e-4, format!("relative errors {} (< 1e-4)", sci(&errs)), t0)
}

fn gronwall_bound() -> bool {
    let t0 = Instant::now();
    let mut a_hats = Vec::new();
    let mut holds = true;
    for delta in [0.5, 1.0, 2.0] {
        let mut a_hat = f64::NEG_INFINITY;
        for seed in 0..10 {
            let cfg = GronwallConfig {
                flow: Flow::Ilw { delta },
                s: -0.25,
                kappa: 32.0,
                t_final: 1.0,
                dt: 1e-3,
                records: 100,
                modes: 128,
                beta: BetaOptions::tight(),
            };
            let r = gronwall_experiment(&field(seed, 256, 1.0, 8), &cfg).unwrap();
            a_hat = a_hat.max(r.a_hat);
            holds &= r.bound_holds && r.times.len() == 101;
        }
        a_hats.push(a_hat);
    }
    let decreasing = a_hats.windows(2).all(|w| w[1] < w[0]);
    report(
        7,
        "gronwall bound",
        holds && decreasing,
        format!("bound holds {holds}, A over delta = 1/2, 1, 2: {} (decreasing {decreasing})", sci(&a_hats)),
        t0,
    )
}

fn norm_equivalence() -> bool {
    let t0 = Instant::now();
    let idx = SobolevIndex::new(-0.25, 32.0).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for seed in 0..200u64 {
        let band = [8, 32, 127][seed as usize % 3];
        let amplitude = [0.25, 0.5, 1.0, 2.0][(seed / 3) as usize % 4];
        let u = field(seed, 256, amplitude, band);
        let r = beta_s(&u, 32.0, -0.25, 128, BetaOptions::default()).unwrap().beta_s / u.sobolev_norm(idx).powi(2);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let c = hi.max(1.0 / lo);
    report(8, "norm equivalence", c < 10.0, format!("ratio in [{lo:.4}, {hi:.4}], C = {c:.4} (< 10)"), t0)
}

fn illposedness_mechanism() -> bool {
    let t0 = Instant::now();
    let delta = 1.0;
    let t = 1.0;
    let alpha = 0.3;
    let mut dist = Vec::new();
    let mut modes = Vec::new();
    let mut rate_err: f64 = 0.0;
    let mut mean_err: f64 = 0.0;
    for y in [2.8, 3.0, 3.1, 3.14] {
        let a = y / delta;
        dist.push(periodic_delta_distance(a, delta, -0.6).unwrap());
        let o = illposed_observables(a, delta, t, alpha).unwrap();
        modes.push(o.mode_2pi.norm());
        rate_err = rate_err.max((arg_rate(a, delta, o.c, t) + 2.0 * PI * t).abs());
        mean_err = mean_err.max((o.mean - alpha).abs());
    }
    let decreasing = dist.windows(2).all(|w| w[1] < w[0]);
    let converging = modes.windows(2).all(|w| (w[1] - 2.0 * PI).abs() < (w[0] - 2.0 * PI).abs());
    report(
        9,
        "ill-posedness mechanism",
        decreasing && converging && rate_err < 1e-10 && mean_err < 1e-12,
        format!(
            "distances {dist:.4?} (decreasing {decreasing}), |mode| {modes:.4?} (-> 2 pi {converging}), phase rate error {rate_err:.2e} (< 1e-10), mean error {mean_err:.2e} (< 1e-12)"
        ),
        t0,
    )
}

fn integrator_quality() -> bool {
    let t0 = Instant::now();
    let delta = Depth::new(1.0).unwrap();
    let u0 = field(5, 128, 1.0, 8);
    let p = EvolutionProblem::ilw(delta, u0.grid()).unwrap();
    let h_name = Monitor::HamiltonianIlw(delta).name();
    let opts = EvolveOptions::new(1.0, 1e-3).records(10).monitor(Monitor::Mass).monitor(Monitor::HamiltonianIlw(delta));
    let traj = p.evolve(&u0, &opts).unwrap();
    let drift = |v: Vec<f64>| v.iter().map(|x| rel(*x, v[0])).fold(0.0, f64::max);
    let dm = drift(traj.diagnostic("mass").unwrap());
    let dh = drift(traj.diagnostic(&h_name).unwrap());
    let finals: Vec<RealField> = [4e-3, 2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&dt| p.evolve(&u0, &EvolveOptions::new(1.0, dt)).unwrap().last().clone())
        .collect();
    let orders: Vec<f64> = finals
        .windows(3)
        .map(|w| (w[0].axpy(-1.0, &w[1]).l2_norm() / w[1].axpy(-1.0, &w[2]).l2_norm()).log2())
        .collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    report(
        10,
        "integrator quality",
        dm < 1e-8 && dh < 1e-8 && min_order >= 3.8,
        format!("mass drift {dm:.2e}, H drift {dh:.2e} (< 1e-8), orders {orders:.3?} (>= 3.8)"),
        t0,
    )
}

fn main() {
    let criteria: [fn() -> bool; 10] = [
        traveling_wave_exactness,
        poisson_summation_identity,
        smoothing_ratio_uniform,
        bo_conserves_beta_s,
        gradient_identity,
        flow_derivative_identity,
        gronwall_bound,
        norm_equivalence,
        illposedness_mechanism,
        integrator_quality,
    ];
    let failed = criteria.iter().filter(|c| !c()).count();
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
