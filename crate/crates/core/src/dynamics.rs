//! Galerkin-truncated Kirchhoff dynamics, the linear variable-speed wave
//! equation, and the energy observables evaluated along trajectories.
//!
//! The truncated Kirchhoff system is
//!
//! ```text
//! u_k'' = −m(Σ_j λ_j² u_j²) · λ_k² · u_k,
//! ```
//!
//! integrated as a first-order system in `(u, v = u')`. The nonlocal
//! coefficient is recomputed at every Runge–Kutta stage. The Hamiltonian
//! `|v|² + M(|A^{1/2}u|²)` is never projected; its drift is recorded and
//! serves as an independent correctness monitor.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{self, DenseSegment, Flow, OdeSystem, StepControl};
use crate::model::{Nonlinearity, Weight};
use crate::operator::{split, ModeVector, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub u: ModeVector,
    pub v: ModeVector,
}

impl State {
    pub fn new(t: f64, u: impl Into<ModeVector>, v: impl Into<ModeVector>) -> Self {
        Self {
            t,
            u: u.into(),
            v: v.into(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(0.0, ModeVector::zeros(n), ModeVector::zeros(n))
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut y = self.u.coords.clone();
        y.extend_from_slice(&self.v.coords);
        y
    }

    fn from_flat(t: f64, y: &[f64]) -> Self {
        let n = y.len() / 2;
        Self::new(t, y[..n].to_vec(), y[n..].to_vec())
    }

    pub(crate) fn check(&self, spec: &Spectrum) -> Result<()> {
        spec.check_len(self.u.len())?;
        spec.check_len(self.v.len())?;
        if self.u.coords.iter().chain(&self.v.coords).any(|c| !c.is_finite()) || !self.t.is_finite() {
            return Err(Error::NonFiniteState { t: self.t });
        }
        Ok(())
    }
}

/// Solver bookkeeping carried alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub tol: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    /// `max_t |H(t) − H(0)| / max(1, H(0))`; absent for linear runs.
    pub hamiltonian_drift: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<State>,
    /// Indices into `samples` of the user-requested grid times.
    pub grid: Vec<usize>,
    pub meta: SolverMeta,
    #[serde(skip)]
    dense: Vec<DenseSegment>,
}

impl PartialEq for Trajectory {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples && self.grid == other.grid && self.meta == other.meta
    }
}

impl Trajectory {
    pub fn first(&self) -> Option<&State> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&State> {
        self.samples.last()
    }

    pub fn grid_states(&self) -> impl Iterator<Item = &State> {
        self.grid.iter().map(move |&i| &self.samples[i])
    }

    pub fn has_dense(&self) -> bool {
        !self.dense.is_empty()
    }

    /// State at `t` from the continuous extension, when it was kept.
    pub fn dense_state(&self, t: f64) -> Option<State> {
        if self.dense.is_empty() {
            return None;
        }
        let i = self.dense.partition_point(|s| s.t1() < t);
        let seg = self.dense.get(i)?;
        if t < seg.t0 {
            return None;
        }
        let n = self.samples[0].u.len();
        let mut y = vec![0.0; 2 * n];
        seg.eval(t, &mut y);
        Some(State::from_flat(t, &y))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Integration settings shared by both evolution operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// Requested sample times (absolute).
    pub grid: Vec<f64>,
    pub keep_dense: bool,
    /// Fail with `DriftExceeded` when the Hamiltonian drift passes `1e3·tol`.
    pub enforce_drift: bool,
}

impl SolveOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            grid: Vec::new(),
            keep_dense: false,
            enforce_drift: true,
        }
    }

    pub fn uniform_grid(mut self, t0: f64, t1: f64, n: usize) -> Self {
        self.grid = uniform(t0, t1, n);
        self
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }

    pub fn dense(mut self) -> Self {
        self.keep_dense = true;
        self
    }

    pub fn drift_unchecked(mut self) -> Self {
        self.enforce_drift = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(1e-14..=1e-3).contains(&self.tol) {
            return Err(Error::InvalidSolverSettings(format!(
                "tol = {} outside [1e-14, 1e-3]",
                self.tol
            )));
        }
        Ok(())
    }
}

/// `n + 1` equally spaced points from `t0` to `t1`.
/// Per-step tolerance handed to the controller. The user tolerance is read as
/// an accuracy target for long runs, where local errors accumulate roughly
/// linearly in the number of steps.
pub fn local_tolerance(tol: f64) -> f64 {
    (tol * 1e-2).max(1e-15)
}

pub fn uniform(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|i| if i == n { t1 } else { (t0 + (t1 - t0) * i as f64 / n as f64).min(t1) })
        .collect()
}

struct KirchhoffSystem<'a> {
    lambda_sq: Vec<f64>,
    nl: &'a Nonlinearity,
}

impl OdeSystem for KirchhoffSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.lambda_sq.len()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.lambda_sq.len();
        let (u, v) = y.split_at(n);
        let sigma: f64 = self.lambda_sq.iter().zip(u).map(|(l, x)| l * x * x).sum();
        let m = self.nl.m_raw(sigma);
        let (du, dv) = dy.split_at_mut(n);
        du.copy_from_slice(v);
        for k in 0..n {
            dv[k] = -m * self.lambda_sq[k] * u[k];
        }
    }
}

/// `c(t)` with certified bounds `ν₀ ≤ c ≤ C₀` and `|c'| ≤ Λ₀`.
#[derive(Clone)]
pub struct LinearCoefficient {
    c: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub nu0: f64,
    pub c0: f64,
    pub lambda0: f64,
}

impl std::fmt::Debug for LinearCoefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearCoefficient")
            .field("nu0", &self.nu0)
            .field("c0", &self.c0)
            .field("lambda0", &self.lambda0)
            .finish()
    }
}

impl LinearCoefficient {
    pub fn new<F>(c: F, nu0: f64, c0: f64, lambda0: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(nu0 > 0.0 && c0 >= nu0 && lambda0 >= 0.0) {
            return Err(Error::InvalidSolverSettings(format!(
                "coefficient bounds need 0 < nu0 <= C0 and Lambda0 >= 0 (got {nu0}, {c0}, {lambda0})"
            )));
        }
        Ok(Self {
            c: Arc::new(c),
            nu0,
            c0,
            lambda0,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(move |_| c, c, c, 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.c)(t)
    }

    /// Factor `max{1,C₀}/min{1,ν₀} · exp(Λ₀t/ν₀)` bounding α-energy growth.
    pub fn energy_growth_bound(&self, t: f64) -> f64 {
        self.c0.max(1.0) / self.nu0.min(1.0) * (self.lambda0 * t / self.nu0).exp()
    }
}

struct LinearSystem<'a> {
    lambda_sq: Vec<f64>,
    coef: &'a LinearCoefficient,
}

impl OdeSystem for LinearSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.lambda_sq.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.lambda_sq.len();
        let c = self.coef.eval(t);
        let (u, v) = y.split_at(n);
        let (du, dv) = dy.split_at_mut(n);
        du.copy_from_slice(v);
        for k in 0..n {
            dv[k] = -c * self.lambda_sq[k] * u[k];
        }
    }
}

fn lambda_sq(spec: &Spectrum) -> Vec<f64> {
    spec.eigenvalues().iter().map(|l| l * l).collect()
}

fn run<S: OdeSystem>(
    sys: &S,
    init: &State,
    t_end: f64,
    opts: &SolveOptions,
    observe: impl FnMut(f64, &[f64]) -> Result<Flow>,
) -> Result<Trajectory> {
    opts.validate()?;
    let sol = integrator::solve(
        sys,
        init.t,
        &init.to_flat(),
        t_end,
        &opts.grid,
        &StepControl::with_tol(local_tolerance(opts.tol)),
        opts.keep_dense,
        observe,
    )?;
    let samples = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| State::from_flat(t, y))
        .collect();
    Ok(Trajectory {
        samples,
        grid: sol.grid_index,
        meta: SolverMeta {
            tol: opts.tol,
            accepted_steps: sol.stats.accepted,
            rejected_steps: sol.stats.rejected,
            rhs_evals: sol.stats.rhs_evals,
            hamiltonian_drift: None,
        },
        dense: sol.dense,
    })
}

/// Integrates the truncated Kirchhoff system from `init` to `t_end`.
pub fn evolve_kirchhoff(
    spec: &Spectrum,
    nl: &Nonlinearity,
    init: &State,
    t_end: f64,
    opts: &SolveOptions,
) -> Result<Trajectory> {
    init.check(spec)?;
    let sys = KirchhoffSystem {
        lambda_sq: lambda_sq(spec),
        nl,
    };
    let mut traj = run(&sys, init, t_end, opts, |_, _| Ok(Flow::Continue))?;
    let h0 = hamiltonian(spec, nl, &init.u, &init.v);
    let drift = traj
        .samples
        .iter()
        .map(|s| (hamiltonian(spec, nl, &s.u, &s.v) - h0).abs())
        .fold(0.0, f64::max)
        / h0.max(1.0);
    traj.meta.hamiltonian_drift = Some(drift);
    let limit = 1e3 * opts.tol;
    if opts.enforce_drift && drift > limit {
        return Err(Error::DriftExceeded { drift, limit });
    }
    Ok(traj)
}

/// Integrates `z_k'' = −c(t) λ_k² z_k`, rejecting runs where the sampled
/// coefficient leaves its certified range.
pub fn evolve_linear(
    spec: &Spectrum,
    coef: &LinearCoefficient,
    init: &State,
    t_end: f64,
    opts: &SolveOptions,
) -> Result<Trajectory> {
    init.check(spec)?;
    let check = |t: f64| {
        let c = coef.eval(t);
        if !(c >= coef.nu0 && c <= coef.c0) {
            return Err(Error::CoefficientBoundViolated {
                t,
                value: c,
                lower: coef.nu0,
                upper: coef.c0,
            });
        }
        Ok(())
    };
    check(init.t)?;
    let sys = LinearSystem {
        lambda_sq: lambda_sq(spec),
        coef,
    };
    run(&sys, init, t_end, opts, |t, _| {
        check(t)?;
        Ok(Flow::Continue)
    })
}

/// Evolves forward, flips the velocity, and evolves for the same duration.
/// Returns the final state of the return leg with its velocity flipped back,
/// which equals `init` in exact arithmetic.
pub fn time_reversal_roundtrip(
    spec: &Spectrum,
    nl: &Nonlinearity,
    init: &State,
    t_end: f64,
    tol: f64,
) -> Result<State> {
    let opts = SolveOptions::new(tol);
    let fwd = evolve_kirchhoff(spec, nl, init, t_end, &opts)?;
    let end = fwd.last().ok_or(Error::EmptyTrajectory)?;
    let flipped = State::new(init.t, end.u.clone(), end.v.scale(-1.0));
    let back = evolve_kirchhoff(spec, nl, &flipped, init.t + (t_end - init.t), &opts)?;
    let fin = back.last().ok_or(Error::EmptyTrajectory)?;
    Ok(State::new(init.t, fin.u.clone(), fin.v.scale(-1.0)))
}

/// `σ = |A^{1/2}u|²`, the argument of `m`.
pub fn stiffness(spec: &Spectrum, u: &ModeVector) -> f64 {
    spec.norm_sq(&u.coords, 0.5)
}

/// `H = |v|² + M(|A^{1/2}u|²)`.
pub fn hamiltonian(spec: &Spectrum, nl: &Nonlinearity, u: &ModeVector, v: &ModeVector) -> f64 {
    v.norm_sq() + nl.primitive_raw(stiffness(spec, u))
}

/// `E(z₀, z₁) = |z₁|² + |A^{1/4}z₁|² + |A^{1/2}z₀|² + |A^{3/4}z₀|²`.
pub fn sobolev_energy(spec: &Spectrum, z0: &ModeVector, z1: &ModeVector) -> f64 {
    spec.eigenvalues()
        .iter()
        .zip(z0.coords.iter().zip(&z1.coords))
        .map(|(&l, (&p, &q))| (1.0 + l) * q * q + (l * l + l * l * l) * p * p)
        .sum()
}

/// `𝓔_α = |A^α v|² + |A^{α+1/2}u|²`.
pub fn alpha_energy(spec: &Spectrum, u: &ModeVector, v: &ModeVector, alpha: f64) -> f64 {
    spec.norm_sq(&v.coords, alpha) + spec.norm_sq(&u.coords, alpha + 0.5)
}

/// `|A^{1/4}v|² + |A^{3/4}u|²`, the quantity whose blow-up ends a solution.
pub fn escape_quantity(spec: &Spectrum, u: &ModeVector, v: &ModeVector) -> f64 {
    spec.eigenvalues()
        .iter()
        .zip(u.coords.iter().zip(&v.coords))
        .map(|(&l, (&p, &q))| l * q * q + l * l * l * p * p)
        .sum()
}

/// `max{|A^{1/4}v|, |A^{3/4}u|}`.
pub fn r1_quantity(spec: &Spectrum, u: &ModeVector, v: &ModeVector) -> f64 {
    spec.norm_sq(&v.coords, 0.25)
        .max(spec.norm_sq(&u.coords, 0.75))
        .sqrt()
}

/// `|A^{5/4}u|`.
pub fn r2_quantity(spec: &Spectrum, u: &ModeVector) -> f64 {
    spec.norm_sq(&u.coords, 1.25).sqrt()
}

/// `log Σ_k max{1,λ_k} · a_k · exp(φ(λ_k))`, evaluated without overflow.
/// Returns `-inf` when every `a_k` vanishes.
pub fn log_weighted_sum(spec: &Spectrum, a: impl Iterator<Item = f64>, weight: &Weight) -> f64 {
    let logs: Vec<f64> = spec
        .eigenvalues()
        .iter()
        .zip(a)
        .filter(|(_, ak)| *ak > 0.0)
        .map(|(&l, ak)| l.max(1.0).ln() + ak.ln() + weight.phi(l))
        .collect();
    log_sum_exp(&logs)
}

pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + logs.iter().map(|l| (l - mx).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEnergy {
    pub alpha: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEnergy {
    pub cutoff: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub hamiltonian: f64,
    pub sobolev: f64,
    pub alpha_energies: Vec<AlphaEnergy>,
    /// Corrected φ-energy, with `m(|A^{1/2}u|²)` on the potential part.
    pub f_phi: f64,
    /// Uncorrected φ-energy.
    pub f_phi_hat: f64,
    pub log_f_phi: f64,
    pub log_f_phi_hat: f64,
    pub split: Option<SplitEnergy>,
}

/// Corrected φ-energy in log form.
pub fn log_f_phi(spec: &Spectrum, nl: &Nonlinearity, u: &ModeVector, v: &ModeVector, weight: &Weight) -> f64 {
    let m = nl.m_raw(stiffness(spec, u));
    let a = spec
        .eigenvalues()
        .iter()
        .zip(u.coords.iter().zip(&v.coords))
        .map(|(&l, (&p, &q))| q * q + m * l * l * p * p);
    log_weighted_sum(spec, a, weight)
}

pub fn measure(
    spec: &Spectrum,
    nl: &Nonlinearity,
    state: &State,
    weight: &Weight,
    alphas: &[f64],
    cutoff: Option<f64>,
) -> Result<EnergyReport> {
    state.check(spec)?;
    let (u, v) = (&state.u, &state.v);
    let lam = spec.eigenvalues();
    let lf = log_f_phi(spec, nl, u, v, weight);
    let a_hat = lam
        .iter()
        .zip(u.coords.iter().zip(&v.coords))
        .map(|(&l, (&p, &q))| q * q + l * l * p * p);
    let lf_hat = log_weighted_sum(spec, a_hat, weight);
    let split = match cutoff {
        Some(c) => {
            let su = split(spec, u, c)?;
            let sv = split(spec, v, c)?;
            Some(SplitEnergy {
                cutoff: c,
                low: sobolev_energy(spec, &su.low, &sv.low),
                high: sobolev_energy(spec, &su.high, &sv.high),
            })
        }
        None => None,
    };
    Ok(EnergyReport {
        hamiltonian: hamiltonian(spec, nl, u, v),
        sobolev: sobolev_energy(spec, u, v),
        alpha_energies: alphas
            .iter()
            .map(|&alpha| AlphaEnergy {
                alpha,
                value: alpha_energy(spec, u, v, alpha),
            })
            .collect(),
        f_phi: lf.exp(),
        f_phi_hat: lf_hat.exp(),
        log_f_phi: lf,
        log_f_phi_hat: lf_hat,
        split,
    })
}

/// First time at which `|A^{1/4}v|² + |A^{3/4}u|² ≥ threshold`, refined by
/// bisection between the bracketing samples. Uses the continuous extension
/// when the trajectory kept it, and linear interpolation otherwise.
pub fn escape_time(spec: &Spectrum, traj: &Trajectory, threshold: f64) -> Option<f64> {
    let q = |s: &State| escape_quantity(spec, &s.u, &s.v);
    let idx = traj.samples.iter().position(|s| q(s) >= threshold)?;
    if idx == 0 {
        return Some(traj.samples[0].t);
    }
    let (a, b) = (&traj.samples[idx - 1], &traj.samples[idx]);
    if traj.has_dense() {
        let (mut lo, mut hi) = (a.t, b.t);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match traj.dense_state(mid) {
                Some(s) if q(&s) >= threshold => hi = mid,
                Some(_) => lo = mid,
                None => break,
            }
        }
        Some(hi)
    } else {
        let (qa, qb) = (q(a), q(b));
        let frac = ((threshold - qa) / (qb - qa)).clamp(0.0, 1.0);
        Some(a.t + frac * (b.t - a.t))
    }
}

/// CSV export: `t, u_1..u_N, v_1..v_N, H, E[, F_phi]`, one row per sample.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    spec: &Spectrum,
    nl: &Nonlinearity,
    traj: &Trajectory,
    weight: Option<&Weight>,
) -> Result<()> {
    let n = spec.len();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("u_{k}")));
    header.extend((1..=n).map(|k| format!("v_{k}")));
    header.push("H".into());
    header.push("E".into());
    if weight.is_some() {
        header.push("F_phi".into());
    }
    w.write_record(&header)?;
    for s in &traj.samples {
        let mut row = vec![s.t.to_string()];
        row.extend(s.u.coords.iter().map(|c| c.to_string()));
        row.extend(s.v.coords.iter().map(|c| c.to_string()));
        row.push(hamiltonian(spec, nl, &s.u, &s.v).to_string());
        row.push(sobolev_energy(spec, &s.u, &s.v).to_string());
        if let Some(wt) = weight {
            row.push(log_f_phi(spec, nl, &s.u, &s.v, wt).exp().to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_mode() -> Spectrum {
        Spectrum::new(vec![1.0]).unwrap()
    }

    #[test]
    fn linear_oscillator_is_cos_sin() {
        let spec = one_mode();
        let nl = Nonlinearity::constant(1.0).unwrap();
        let init = State::new(0.0, vec![1.0], vec![0.0]);
        let opts = SolveOptions::new(1e-10).uniform_grid(0.0, 10.0, 100);
        let traj = evolve_kirchhoff(&spec, &nl, &init, 10.0, &opts).unwrap();
        for s in traj.grid_states() {
            assert!((s.u.coords[0] - s.t.cos()).abs() < 1e-8, "t = {}", s.t);
            assert!((s.v.coords[0] + s.t.sin()).abs() < 1e-8);
        }
        assert_eq!(traj.grid.len(), 101);
    }

    #[test]
    fn zero_data_stays_zero() {
        let spec = Spectrum::string_like(3).unwrap();
        let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
        let traj = evolve_kirchhoff(&spec, &nl, &State::zeros(3), 5.0, &SolveOptions::new(1e-8)).unwrap();
        assert!(traj
            .samples
            .iter()
            .all(|s| s.u.coords.iter().chain(&s.v.coords).all(|&c| c == 0.0)));
        let lin = evolve_linear(
            &spec,
            &LinearCoefficient::constant(2.0).unwrap(),
            &State::zeros(3),
            5.0,
            &SolveOptions::new(1e-8),
        )
        .unwrap();
        assert!(lin.samples.iter().all(|s| s.u.norm_sq() == 0.0 && s.v.norm_sq() == 0.0));
    }

    #[test]
    fn measure_examples() {
        let spec = one_mode();
        let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
        let s = State::new(0.0, vec![1.0], vec![0.0]);
        let r = measure(&spec, &nl, &s, &Weight::Zero, &[0.0], None).unwrap();
        assert_eq!(r.hamiltonian, 1.5);
        assert_eq!(r.sobolev, 2.0);

        let spec2 = Spectrum::new(vec![2.0]).unwrap();
        let nl1 = Nonlinearity::constant(1.0).unwrap();
        let r = measure(&spec2, &nl1, &s, &Weight::Zero, &[], None).unwrap();
        assert!((r.f_phi - 8.0).abs() < 1e-12);

        let z = State::zeros(1);
        let r = measure(&spec, &nl, &z, &Weight::QuasiAnalytic, &[0.25], Some(1.0)).unwrap();
        assert_eq!(r.hamiltonian, 0.0);
        assert_eq!(r.sobolev, 0.0);
        assert_eq!(r.f_phi, 0.0);
        assert_eq!(r.f_phi_hat, 0.0);
        assert_eq!(r.alpha_energies[0].value, 0.0);
    }

    #[test]
    fn split_energy_adds_up() {
        let spec = Spectrum::string_like(6).unwrap();
        let nl = Nonlinearity::affine(1.0, 0.5).unwrap();
        let s = State::new(0.0, vec![0.3, -0.2, 0.1, 0.05, -0.02, 0.01], vec![0.1, 0.0, -0.1, 0.02, 0.0, 0.03]);
        let r = measure(&spec, &nl, &s, &Weight::Zero, &[], Some(3.0)).unwrap();
        let sp = r.split.unwrap();
        assert!((sp.low + sp.high - r.sobolev).abs() <= 1e-12 * r.sobolev);
    }

    #[test]
    fn drift_is_recorded_and_small() {
        let spec = Spectrum::string_like(3).unwrap();
        let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
        let init = State::new(0.0, vec![0.2, 0.1, -0.05], vec![0.0, 0.1, 0.0]);
        let traj = evolve_kirchhoff(&spec, &nl, &init, 20.0, &SolveOptions::new(1e-10)).unwrap();
        assert!(traj.meta.hamiltonian_drift.unwrap() < 1e-8);
    }

    #[test]
    fn tolerance_range_is_enforced() {
        let spec = one_mode();
        let nl = Nonlinearity::constant(1.0).unwrap();
        let init = State::new(0.0, vec![1.0], vec![0.0]);
        assert!(matches!(
            evolve_kirchhoff(&spec, &nl, &init, 1.0, &SolveOptions::new(1e-2)),
            Err(Error::InvalidSolverSettings(_))
        ));
        assert!(evolve_kirchhoff(&spec, &nl, &init, 0.0, &SolveOptions::new(1e-8)).is_err());
    }

    #[test]
    fn non_finite_init_rejected() {
        let spec = one_mode();
        let nl = Nonlinearity::constant(1.0).unwrap();
        let init = State::new(0.0, vec![f64::NAN], vec![0.0]);
        assert!(matches!(
            evolve_kirchhoff(&spec, &nl, &init, 1.0, &SolveOptions::new(1e-8)),
            Err(Error::NonFiniteState { .. })
        ));
    }

    #[test]
    fn coefficient_bound_violation_detected() {
        let spec = one_mode();
        let coef = LinearCoefficient::new(|t: f64| 1.0 + t, 1.0, 2.0, 1.0).unwrap();
        let init = State::new(0.0, vec![1.0], vec![0.0]);
        assert!(matches!(
            evolve_linear(&spec, &coef, &init, 3.0, &SolveOptions::new(1e-8)),
            Err(Error::CoefficientBoundViolated { .. })
        ));
    }

    #[test]
    fn constant_coefficient_conserves_alpha_energy() {
        let spec = Spectrum::string_like(4).unwrap();
        let coef = LinearCoefficient::constant(1.0).unwrap();
        let init = State::new(0.0, vec![0.5, -0.3, 0.2, 0.1], vec![0.0, 0.4, 0.0, -0.2]);
        let traj = evolve_linear(&spec, &coef, &init, 10.0, &SolveOptions::new(1e-11)).unwrap();
        for alpha in [0.0, 0.25] {
            let e0 = alpha_energy(&spec, &init.u, &init.v, alpha);
            for s in &traj.samples {
                let e = alpha_energy(&spec, &s.u, &s.v, alpha);
                assert!((e - e0).abs() < 1e-8 * e0);
            }
        }
    }

    #[test]
    fn sinusoidal_coefficient_respects_energy_bound() {
        let spec = one_mode();
        let coef = LinearCoefficient::new(|t: f64| 2.0 + t.sin(), 1.0, 3.0, 1.0).unwrap();
        let init = State::new(0.0, vec![0.7], vec![-0.4]);
        let traj = evolve_linear(&spec, &coef, &init, 15.0, &SolveOptions::new(1e-10)).unwrap();
        for alpha in [0.0, 0.25] {
            let e0 = alpha_energy(&spec, &init.u, &init.v, alpha);
            for s in &traj.samples {
                let e = alpha_energy(&spec, &s.u, &s.v, alpha);
                assert!(e <= e0 * coef.energy_growth_bound(s.t) * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn escape_time_examples() {
        let spec = one_mode();
        let nl = Nonlinearity::constant(1.0).unwrap();
        let init = State::new(0.0, vec![0.5], vec![0.0]);
        let traj = evolve_kirchhoff(&spec, &nl, &init, 10.0, &SolveOptions::new(1e-9)).unwrap();
        assert_eq!(escape_time(&spec, &traj, 1.0), None);
        assert_eq!(escape_time(&spec, &traj, 0.1), Some(0.0));
    }

    #[test]
    fn escape_time_matches_dense_resampling() {
        // Starting at rest with σ₀ = 40 the escape quantity grows to about
        // 20× its initial value when the energy moves into the velocity.
        let spec = Spectrum::new(vec![1.0, 2.0]).unwrap();
        let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
        let a = (40.0f64 / 5.0).sqrt();
        let init = State::new(0.0, vec![a, a], vec![0.0, 0.0]);
        let q0 = escape_quantity(&spec, &init.u, &init.v);
        let thr = 10.0 * q0;
        let traj = evolve_kirchhoff(&spec, &nl, &init, 2.0, &SolveOptions::new(1e-11).dense()).unwrap();
        let te = escape_time(&spec, &traj, thr).expect("threshold is crossed");

        let fine = SolveOptions::new(1e-11).uniform_grid(0.0, 2.0, 200_000);
        let reference = evolve_kirchhoff(&spec, &nl, &init, 2.0, &fine).unwrap();
        let first = reference
            .grid_states()
            .find(|s| escape_quantity(&spec, &s.u, &s.v) >= thr)
            .unwrap()
            .t;
        assert!((te - first).abs() <= 2.0 / 200_000.0 + 1e-9, "{te} vs {first}");

        let coarse = Trajectory::from_json(&traj.to_json().unwrap()).unwrap();
        let te_lin = escape_time(&spec, &coarse, thr).unwrap();
        assert!((te_lin - te).abs() < 1e-3);
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let spec = Spectrum::string_like(3).unwrap();
        let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
        let init = State::new(0.0, vec![0.1, 0.2, 0.3], vec![0.3, -0.1, 0.0]);
        let traj = evolve_kirchhoff(&spec, &nl, &init, 3.0, &SolveOptions::new(1e-9).uniform_grid(0.0, 3.0, 7)).unwrap();
        let js = traj.to_json().unwrap();
        let back = Trajectory::from_json(&js).unwrap();
        assert_eq!(back, traj);
        assert_eq!(back.to_json().unwrap(), js);
        for (a, b) in traj.samples.iter().zip(&back.samples) {
            for (x, y) in a.u.coords.iter().zip(&b.u.coords) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn csv_export_columns() {
        let spec = Spectrum::string_like(2).unwrap();
        let nl = Nonlinearity::constant(1.0).unwrap();
        let init = State::new(0.0, vec![0.1, 0.2], vec![0.0, 0.0]);
        let traj = evolve_kirchhoff(&spec, &nl, &init, 1.0, &SolveOptions::new(1e-8)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &spec, &nl, &traj, Some(&Weight::QuasiAnalytic)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "t,u_1,u_2,v_1,v_2,H,E,F_phi");
        assert_eq!(text.lines().count(), traj.samples.len() + 1);
    }
}
