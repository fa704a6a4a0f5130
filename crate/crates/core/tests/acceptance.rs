//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N ... PASS|FAIL` line with the measured value and runtime.
//! Run with `cargo test -p kirchhoff-core --test acceptance -- --nocapture`.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use kirchhoff_core::bounds::{gammas, pair_constants};
use kirchhoff_core::dynamics::{evolve_kirchhoff, SolveOptions, State};
use kirchhoff_core::harness::{
    run_age, run_lsc, run_verify, suite_envelopes, suite_interpolation, suite_linear_energy, suite_minimal_difference,
    suite_regular_difference, suite_tightness, ExperimentResult, ScenarioConfig,
};
use kirchhoff_core::model::Nonlinearity;
use kirchhoff_core::operator::Spectrum;

const SEED: u64 = 2024;

fn report(n: u32, name: &str, pass: bool, value: &str, elapsed: Duration, budget: Duration) -> bool {
    let in_time = elapsed < budget;
    println!(
        "criterion {n:>2} {name:<36} {}  {value}  [{:.2}s / {}s]",
        if pass && in_time { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass && in_time
}

fn config(name: &str) -> ScenarioConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ScenarioConfig::load(&p).unwrap()
}

fn column(res: &ExperimentResult, name: &str) -> Vec<f64> {
    let i = res.columns.iter().position(|c| c == name).unwrap();
    res.rows.iter().map(|r| r.values[i]).collect()
}

#[test]
fn criterion_01_hamiltonian_conservation() {
    let t0 = Instant::now();
    let spec = Spectrum::string_like(8).unwrap();
    let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
    let u0: Vec<f64> = (1..=8).map(|k| 0.5 / k as f64).collect();
    let u1: Vec<f64> = (1..=8).map(|k| 0.2 * (-1f64).powi(k) / k as f64).collect();
    let init = State::new(0.0, u0, u1);
    let opts = SolveOptions::new(1e-10).uniform_grid(0.0, 100.0, 2000);
    let traj = evolve_kirchhoff(&spec, &nl, &init, 100.0, &opts).unwrap();
    // H = |v|² + σ + σ²/2 with σ = Σ λ_k² u_k², written out independently
    let h = |s: &State| {
        let sigma: f64 = spec.eigenvalues().iter().zip(&s.u.coords).map(|(l, u)| l * l * u * u).sum();
        s.v.coords.iter().map(|v| v * v).sum::<f64>() + sigma + 0.5 * sigma * sigma
    };
    let h0 = h(&init);
    let drift = traj.samples.iter().map(|s| (h(s) - h0).abs()).fold(0.0, f64::max) / h0;
    let ok = report(
        1,
        "hamiltonian_conservation",
        drift <= 1e-8,
        &format!("relative drift {drift:.3e} (limit 1e-8)"),
        t0.elapsed(),
        Duration::from_secs(5),
    );
    assert!(ok);
}

#[test]
fn criterion_02_linear_energy_bound() {
    let t0 = Instant::now();
    let o = suite_linear_energy(SEED, 200).unwrap();
    let ok = report(
        2,
        "linear_energy_bound",
        o.pass() && o.cases == 200,
        &format!("{} cases, {} violations, worst ratio {:.6}", o.cases, o.violations, o.worst),
        t0.elapsed(),
        Duration::from_secs(30),
    );
    assert!(ok);
}

#[test]
fn criterion_03_difference_bound_regular() {
    let t0 = Instant::now();
    let o = suite_regular_difference(SEED, 50, 1.0).unwrap();
    // independent recomputation of the two constants for one scenario
    let spec = Spectrum::new(vec![1.0, 1.5, 2.0, 2.5]).unwrap();
    let nl = Nonlinearity::affine(0.8, 0.7).unwrap();
    let a = State::new(0.0, vec![0.3, -0.2, 0.1, 0.05], vec![0.1, 0.0, -0.2, 0.1]);
    let b = State::new(0.0, vec![0.31, -0.2, 0.1, 0.05], vec![0.1, 0.01, -0.2, 0.1]);
    let opts = SolveOptions::new(1e-11).uniform_grid(0.0, 20.0, 200);
    let ua = evolve_kirchhoff(&spec, &nl, &a, 20.0, &opts).unwrap();
    let ub = evolve_kirchhoff(&spec, &nl, &b, 20.0, &opts).unwrap();
    let cb = pair_constants(&spec, &nl, &ua, &ub, None).unwrap();
    let (g1, g2) = gammas(&cb).regular().unwrap();
    let r2 = cb.r2.unwrap();
    let c0 = 0.8 + 0.7 * cb.r0 * cb.r0;
    let g1_oracle = c0.max(1.0) / 0.8f64.min(1.0);
    let g2_oracle = 8.0 * 0.7 * cb.r1 * cb.r1 / 0.8 + 4.0 * 0.7 * cb.r0 * (cb.r1 + r2) / 0.8f64.sqrt();
    let consts_ok = (g1 - g1_oracle).abs() <= 1e-12 * g1_oracle && (g2 - g2_oracle).abs() <= 1e-12 * g2_oracle;
    let ok = report(
        3,
        "difference_bound_regular",
        o.pass() && o.cases == 100 && consts_ok,
        &format!("{} runs, {} violations, worst ratio {:.6}; constants match: {consts_ok}", o.cases, o.violations, o.worst),
        t0.elapsed(),
        Duration::from_secs(60),
    );
    assert!(ok);
}

#[test]
fn criterion_04_difference_bound_minimal() {
    let t0 = Instant::now();
    let o = suite_minimal_difference(SEED, 20).unwrap();
    let ok = report(
        4,
        "difference_bound_minimal",
        o.pass() && o.cases == 20,
        &format!("{} scenarios, {} violations, worst ratio {:.3e}", o.cases, o.violations, o.worst),
        t0.elapsed(),
        Duration::from_secs(120),
    );
    assert!(ok);
}

#[test]
fn criterion_05_interpolation_inequality() {
    let t0 = Instant::now();
    let o = suite_interpolation(SEED, 10_000).unwrap();
    let ok = report(
        5,
        "interpolation_inequality",
        o.pass() && o.cases == 10_000,
        &format!("{} sequences ({} empty), {} violations, worst ratio {:.6}", o.cases, o.skipped, o.violations, o.worst),
        t0.elapsed(),
        Duration::from_secs(10),
    );
    assert!(ok);
}

#[test]
fn criterion_06_supersolution_substitution() {
    let t0 = Instant::now();
    let a = suite_envelopes(SEED, 1000, false).unwrap();
    let q = suite_envelopes(SEED, 1000, true).unwrap();
    let ok = report(
        6,
        "supersolution_substitution",
        a.pass() && q.pass(),
        &format!(
            "analytic {}/{} ok, quasi-analytic {}/{} ok; min margins {:.2e}, {:.2e}",
            a.cases - a.violations,
            a.cases,
            q.cases - q.violations,
            q.cases,
            a.worst,
            q.worst
        ),
        t0.elapsed(),
        Duration::from_secs(30),
    );
    assert!(ok);
}

#[test]
fn criterion_07_guaranteed_time_tightness() {
    let t0 = Instant::now();
    let o = suite_tightness(SEED, 100).unwrap();
    let ok = report(
        7,
        "guaranteed_time_tightness",
        o.pass() && o.cases == 100,
        &format!("{} sets, {} violations", o.cases, o.violations),
        t0.elapsed(),
        Duration::from_secs(1),
    );
    assert!(ok);
}

#[test]
fn criterion_08_almost_global_scaling() {
    let t0 = Instant::now();
    let fd = run_age(&config("age_finite.json")).unwrap();
    let eps = column(&fd, "epsilon");
    let spread = |xs: &[f64]| {
        let tail = &xs[xs.len() - 4..];
        tail.iter().cloned().fold(0.0, f64::max) / tail.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let rule: Vec<f64> = column(&fd, "lifespan_bound").iter().zip(&eps).map(|(t, e)| t / e.ln().abs()).collect();
    let guar: Vec<f64> = column(&fd, "guaranteed_time").iter().zip(&eps).map(|(t, e)| t / e.ln().abs()).collect();
    let fd_ok = fd.pass() && eps.len() == 17 && spread(&rule) < 2.0 && spread(&guar) < 2.0;

    let null = run_age(&config("age_null.json")).unwrap();
    let eps = column(&null, "epsilon");
    let scaled: Vec<f64> = column(&null, "guaranteed_time").iter().zip(&eps).map(|(t, e)| t * e * e).collect();
    let floor = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let rate = null.summary.iter().find(|(k, _)| k == "rate").unwrap().1;
    let null_ok = null.pass() && floor >= rate && rate > 0.0 && eps[0] == 0.1 && *eps.last().unwrap() == 1e-4;
    let ok = report(
        8,
        "almost_global_scaling",
        fd_ok && null_ok,
        &format!(
            "finite-dim T/|log eps| spread {:.4} (guaranteed {:.4}); null min T eps^2 {floor:.3e} >= {rate:.3e}",
            spread(&rule),
            spread(&guar)
        ),
        t0.elapsed(),
        Duration::from_secs(60),
    );
    assert!(ok);
}

#[test]
fn criterion_09_lower_semicontinuity() {
    let t0 = Instant::now();
    let res = run_lsc(&config("lsc.json")).unwrap();
    let eps = column(&res, "epsilon");
    let sup = column(&res, "sup_e_diff");
    // skip the ε = 0 row
    let monotone = sup[1..].windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let last = *sup.last().unwrap();
    let ok = report(
        9,
        "lower_semicontinuity",
        res.pass() && monotone && last < 1e-6 && *eps.last().unwrap() == 2f64.powi(-20) && sup[0] == 0.0,
        &format!("monotone {monotone}, sup at eps=2^-20 {last:.3e} (limit 1e-6)"),
        t0.elapsed(),
        Duration::from_secs(60),
    );
    assert!(ok);
}

#[test]
fn criterion_10_determinism() {
    let t0 = Instant::now();
    let cfg = config("verify.json");
    let a = run_verify(&cfg).unwrap();
    let b = run_verify(&cfg).unwrap();
    let same = a.table_csv().unwrap() == b.table_csv().unwrap()
        && a.checks_csv().unwrap() == b.checks_csv().unwrap()
        && serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();
    let ok = report(
        10,
        "determinism",
        same && a.pass(),
        &format!("byte-identical {same}, hash {}", &a.metadata.config_hash[..12]),
        t0.elapsed(),
        Duration::from_secs(120),
    );
    assert!(ok);
}
