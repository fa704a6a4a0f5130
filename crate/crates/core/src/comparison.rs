//! Growth envelopes for the corrected φ-energy: the scalar comparison ODEs,
//! the exponents β₁/β₂, supersolution checks and simulation reports.
//!
//! Everything runs on `s = log y`, so checks extend past the point where the
//! envelopes overflow as plain floats.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::sup_power_weight;
use crate::dynamics::{alpha_energy, log_f_phi, log_sum_exp, Trajectory};
use crate::error::{Error, Result};
use crate::integrator::{solve, DenseSegment, Flow, StepControl};
use crate::model::{inv_phi_majorant_c2, Nonlinearity, Weight};
use crate::operator::Spectrum;

/// `log(1e300)`: comparison solutions stop once `y` passes this level.
pub const LOG_OVERFLOW: f64 = 690.7755278982137;

/// Upper end of the grid on which `c₂` is certified for the builtin
/// quasi-analytic weight.
pub const C2_RANGE: f64 = 1e8;

/// Largest `exp(βt)` at which triple-exponential checks are run.
const QA_INNER_MAX: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum EnvelopeFamily {
    Analytic { r0: f64 },
    QuasiAnalytic { c2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub family: EnvelopeFamily,
    pub c0: f64,
    pub c1: f64,
    pub f0: f64,
    pub beta: f64,
}

impl GrowthEnvelope {
    /// `F ≤ F₀·exp(exp(β₁t))` with `β₁ = c₀ + c₀/r₀ + (c₀/r₀)·log(F₀/c₁)`.
    pub fn analytic(c0: f64, c1: f64, r0: f64, f0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidEnvelope(format!("r0 must be positive, got {r0}")));
        }
        Self::build(EnvelopeFamily::Analytic { r0 }, c0, c1, f0)
    }

    /// `F ≤ F₀·exp(exp(exp(β₂t)))` with
    /// `β₂ = c₀ + c₀c₂(1 + log(F₀/c₁))(1 + log(3 + log(F₀/c₁)))`.
    pub fn quasi_analytic(c0: f64, c1: f64, c2: f64, f0: f64) -> Result<Self> {
        if !(c2 > 0.0 && c2.is_finite()) {
            return Err(Error::InvalidEnvelope(format!("c2 must be positive, got {c2}")));
        }
        Self::build(EnvelopeFamily::QuasiAnalytic { c2 }, c0, c1, f0)
    }

    fn build(family: EnvelopeFamily, c0: f64, c1: f64, f0: f64) -> Result<Self> {
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(Error::InvalidEnvelope(format!("c0 must be nonnegative, got {c0}")));
        }
        if !(c1 > 0.0 && f0 >= c1 && f0.is_finite()) {
            return Err(Error::InvalidEnvelope(format!(
                "need F0 >= c1 > 0, got F0 = {f0}, c1 = {c1}"
            )));
        }
        let mut env = Self {
            family,
            c0,
            c1,
            f0,
            beta: 0.0,
        };
        env.beta = env.beta_formula();
        Ok(env)
    }

    /// Replaces β, e.g. to probe a deliberately slow envelope.
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn beta_formula(&self) -> f64 {
        let ell = (self.f0 / self.c1).ln();
        let c0 = self.c0;
        match self.family {
            EnvelopeFamily::Analytic { r0 } => c0 + c0 / r0 + (c0 / r0) * ell,
            EnvelopeFamily::QuasiAnalytic { c2 } => c0 + c0 * c2 * (1.0 + ell) * (1.0 + (3.0 + ell).ln()),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            EnvelopeFamily::Analytic { .. } => "analytic",
            EnvelopeFamily::QuasiAnalytic { .. } => "quasi_analytic",
        }
    }

    /// `log Y(t)` for the closed-form envelope.
    pub fn log_envelope(&self, t: f64) -> f64 {
        let inner = (self.beta * t).exp();
        match self.family {
            EnvelopeFamily::Analytic { .. } => self.f0.ln() + inner,
            EnvelopeFamily::QuasiAnalytic { .. } => self.f0.ln() + inner.exp(),
        }
    }

    /// `Y'(t)/Y(t)`, computed analytically.
    pub fn log_envelope_rate(&self, t: f64) -> f64 {
        let inner = (self.beta * t).exp();
        match self.family {
            EnvelopeFamily::Analytic { .. } => self.beta * inner,
            EnvelopeFamily::QuasiAnalytic { .. } => self.beta * inner * inner.exp(),
        }
    }

    /// Right-hand side of the comparison ODE divided by `y`, as a function
    /// of `s = log y`.
    pub fn log_rate(&self, s: f64) -> f64 {
        let ell = (s - self.c1.ln()).max(0.0);
        match self.family {
            EnvelopeFamily::Analytic { r0 } => self.c0 * (1.0 + ell / r0),
            EnvelopeFamily::QuasiAnalytic { c2 } => self.c0 * (1.0 + c2 * ell * (2.0 + ell).ln()),
        }
    }

    /// Largest `t` where the log-space checks stay finite.
    pub fn horizon(&self) -> f64 {
        if self.beta <= 0.0 {
            return f64::INFINITY;
        }
        match self.family {
            EnvelopeFamily::Analytic { .. } => LOG_OVERFLOW.ln() / self.beta,
            EnvelopeFamily::QuasiAnalytic { .. } => QA_INNER_MAX.ln() / self.beta,
        }
    }

    /// `log Y(0) − log F₀`, which should be 1 (resp. e).
    pub fn initial_inflation(&self) -> f64 {
        match self.family {
            EnvelopeFamily::Analytic { .. } => 1.0,
            EnvelopeFamily::QuasiAnalytic { .. } => std::f64::consts::E,
        }
    }
}

/// Equality-case solution of the comparison ODE, stored as `log y`.
#[derive(Debug, Clone)]
pub struct ComparisonSolution {
    pub times: Vec<f64>,
    pub log_y: Vec<f64>,
    /// First sample time where `y > 1e300`; the solution stops there.
    pub overflow_at: Option<f64>,
    dense: Vec<DenseSegment>,
}

impl ComparisonSolution {
    /// `log y(t)` from the continuous extension; `None` outside the range.
    pub fn log_at(&self, t: f64) -> Option<f64> {
        let i = self.dense.partition_point(|seg| seg.t1() < t);
        let seg = self.dense.get(i)?;
        if t < seg.t0 {
            return None;
        }
        let mut out = [0.0];
        seg.eval(t, &mut out);
        Some(out[0])
    }
}

/// Integrates `y' = c₀y{1 + (1/r₀)log(y/c₁)}` (resp. the quasi-analytic
/// right-hand side) from `y(0) = F₀` in log form.
pub fn integrate_comparison(env: &GrowthEnvelope, t_end: f64, tol: f64) -> Result<ComparisonSolution> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidSolverSettings(format!("t_end must be positive, got {t_end}")));
    }
    let sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = env.log_rate(y[0]));
    let mut overflow_at = None;
    let sol = solve(
        &sys,
        0.0,
        &[env.f0.ln()],
        t_end,
        &[],
        &StepControl::with_tol(tol),
        true,
        |t, y| {
            if y[0] > LOG_OVERFLOW {
                overflow_at = Some(t);
                Ok(Flow::Stop)
            } else {
                Ok(Flow::Continue)
            }
        },
    )?;
    Ok(ComparisonSolution {
        log_y: sol.states.iter().map(|s| s[0]).collect(),
        times: sol.times,
        overflow_at,
        dense: sol.dense,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub grid: Vec<f64>,
    /// `Y'/Y` on the grid.
    pub lhs: Vec<f64>,
    /// Comparison right-hand side at `Y`, divided by `Y`.
    pub rhs: Vec<f64>,
    /// `min (lhs − rhs)` over the grid.
    pub margin: f64,
    /// Worst `(lhs − rhs)/max{1, |lhs|, |rhs|}`.
    pub relative_margin: f64,
    pub initial_ok: bool,
    pub pass: bool,
}

/// Substitutes the closed-form envelope into the comparison ODE on an
/// `n_grid`-point grid, log-spaced on `(0, t_end]` plus `t = 0`. The range is
/// cut at the overflow horizon.
pub fn verify_supersolution(env: &GrowthEnvelope, t_end: f64, n_grid: usize) -> Result<EnvelopeCheck> {
    if n_grid < 100 {
        return Err(Error::InvalidEnvelope(format!("n_grid must be at least 100, got {n_grid}")));
    }
    let t_max = t_end.min(env.horizon());
    let grid = log_grid(t_max, n_grid);
    let mut lhs = Vec::with_capacity(grid.len());
    let mut rhs = Vec::with_capacity(grid.len());
    let mut margin = f64::INFINITY;
    let mut relative_margin = f64::INFINITY;
    for &t in &grid {
        let l = env.log_envelope_rate(t);
        let r = env.log_rate(env.log_envelope(t));
        margin = margin.min(l - r);
        relative_margin = relative_margin.min((l - r) / l.abs().max(r.abs()).max(1.0));
        lhs.push(l);
        rhs.push(r);
    }
    let inflation = env.log_envelope(0.0) - env.f0.ln();
    let initial_ok = (inflation - env.initial_inflation()).abs() <= 1e-12 * env.f0.ln().abs().max(1.0);
    let pass = initial_ok && relative_margin >= -1e-9;
    Ok(EnvelopeCheck {
        grid,
        lhs,
        rhs,
        margin,
        relative_margin,
        initial_ok,
        pass,
    })
}

fn log_grid(t_max: f64, n: usize) -> Vec<f64> {
    let lo = (t_max * 1e-6).ln();
    let hi = t_max.ln();
    let mut g = Vec::with_capacity(n);
    g.push(0.0);
    for i in 0..n - 1 {
        g.push((lo + (hi - lo) * i as f64 / (n - 2) as f64).exp());
    }
    if let Some(last) = g.last_mut() {
        *last = t_max;
    }
    g
}

/// Worst `log y(t) − log Y(t)`, relative to `max{1, |log Y|}`, over the
/// samples of an equality-case comparison solution.
pub fn comparison_excess(env: &GrowthEnvelope, sol: &ComparisonSolution) -> f64 {
    sol.times
        .iter()
        .zip(&sol.log_y)
        .filter(|(t, _)| **t <= env.horizon())
        .map(|(&t, &s)| {
            let e = env.log_envelope(t);
            (s - e) / e.abs().max(1.0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Premise constants read off a pilot trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c0: f64,
    pub c1: f64,
    pub f0: f64,
    pub min_f: f64,
}

/// `c₁ = min{1, min{1,ν₀}·𝓔₀(0), min_t F_φ}` and `c₀` the smallest constant
/// (inflated by 1%) with `F'_φ ≤ c₀F_φ{1 + φ⁻¹(log(F_φ/c₁))}` at the
/// interior grid samples, `F'_φ` by central differences.
pub fn calibrate(spec: &Spectrum, nl: &Nonlinearity, weight: &Weight, pilot: &Trajectory) -> Result<Calibration> {
    let states: Vec<_> = if pilot.grid.len() >= 3 {
        pilot.grid_states().collect()
    } else {
        pilot.samples.iter().collect()
    };
    if states.len() < 3 {
        return Err(Error::EmptyTrajectory);
    }
    let logs: Vec<f64> = states
        .iter()
        .map(|s| log_f_phi(spec, nl, &s.u, &s.v, weight))
        .collect();
    let first = states[0];
    let e00 = alpha_energy(spec, &first.u, &first.v, 0.0);
    let min_log = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let c1 = 1f64.min(nl.nu0().min(1.0) * e00).min(min_log.exp());
    if !(c1 > 0.0) {
        return Err(Error::HypothesisFailed {
            name: "nontrivial_data".into(),
            detail: "initial energy vanishes".into(),
        });
    }
    let mut c0: f64 = 0.0;
    for i in 1..states.len() - 1 {
        let dt = states[i + 1].t - states[i - 1].t;
        let rate = ((logs[i + 1] - logs[i]).exp() - (logs[i - 1] - logs[i]).exp()) / dt;
        let arg = (logs[i] - c1.ln()).max(0.0);
        let denom = 1.0 + weight.phi_inverse(arg)?;
        c0 = c0.max(rate / denom);
    }
    Ok(Calibration {
        c0: 1.01 * c0,
        c1,
        f0: logs[0].exp(),
        min_f: min_log.exp(),
    })
}

/// Envelope matching `weight` with calibrated constants. For the
/// quasi-analytic weight `c₂` is certified on `[1e-6, C2_RANGE]`.
pub fn envelope_for(weight: &Weight, cal: &Calibration) -> Result<GrowthEnvelope> {
    match weight {
        Weight::Linear { r0 } => GrowthEnvelope::analytic(cal.c0, cal.c1, *r0, cal.f0),
        Weight::QuasiAnalytic => {
            let c2 = inv_phi_majorant_c2(weight, C2_RANGE)?;
            GrowthEnvelope::quasi_analytic(cal.c0, cal.c1, c2, cal.f0)
        }
        _ => Err(Error::IncompatibleWeight),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub t: f64,
    pub log_f_phi: f64,
    pub log_envelope: f64,
    /// `log envelope − log F_φ`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    /// `max_t log(𝓔_α(t)/shape(t))` with shape `exp(4αβ₁t)` or
    /// `exp(exp(max{2,4α}β₂t))`.
    pub log_b: f64,
    /// Worst `𝓔_α / {K_{4α} + [φ⁻¹(2 log(F̂/𝓔₀))]^{4α}}𝓔₀` along the run.
    pub interpolation_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub family: String,
    pub beta: f64,
    pub f0: f64,
    pub rows: Vec<GrowthRow>,
    /// `max_t F_φ(t)/(F₀·exp(exp(βt)))` (resp. triple exponential).
    pub max_ratio: f64,
    pub ratio_at_zero: f64,
    pub alpha_fits: Vec<AlphaFit>,
    pub pass: bool,
}

impl GrowthReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "log_f_phi", "log_envelope", "margin"])?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.log_f_phi.to_string(),
                r.log_envelope.to_string(),
                r.margin.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl EnvelopeCheck {
    pub fn write_csv<W: Write>(&self, env: &GrowthEnvelope, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "log_envelope", "lhs", "rhs", "margin"])?;
        for i in 0..self.grid.len() {
            let t = self.grid[i];
            w.write_record([
                t.to_string(),
                env.log_envelope(t).to_string(),
                self.lhs[i].to_string(),
                self.rhs[i].to_string(),
                (self.lhs[i] - self.rhs[i]).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Compares `F_φ` along a trajectory with the envelope, and fits the
/// prefactors of the α-energy bounds for α ∈ {1/4, 3/4}.
pub fn envelope_vs_simulation(
    spec: &Spectrum,
    nl: &Nonlinearity,
    traj: &Trajectory,
    weight: &Weight,
    env: &GrowthEnvelope,
) -> Result<GrowthReport> {
    let compatible = match (weight, env.family) {
        (Weight::Linear { r0 }, EnvelopeFamily::Analytic { r0: e }) => (r0 - e).abs() <= 1e-12 * r0,
        (Weight::QuasiAnalytic, EnvelopeFamily::QuasiAnalytic { .. }) => true,
        _ => false,
    };
    if !compatible {
        return Err(Error::IncompatibleWeight);
    }
    let states: Vec<_> = if traj.grid.is_empty() {
        traj.samples.iter().collect()
    } else {
        traj.grid_states().collect()
    };
    if states.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let alphas = [0.25, 0.75];
    let kbs = alphas
        .iter()
        .map(|&a| sup_power_weight(weight, 4.0 * a))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(states.len());
    let mut worst = f64::NEG_INFINITY;
    let mut fits: Vec<AlphaFit> = alphas
        .iter()
        .map(|&alpha| AlphaFit {
            alpha,
            log_b: f64::NEG_INFINITY,
            interpolation_ratio: 0.0,
        })
        .collect();
    let lam = spec.eigenvalues();
    for s in states {
        let lf = log_f_phi(spec, nl, &s.u, &s.v, weight);
        let le = env.log_envelope(s.t);
        worst = worst.max(lf - le);
        rows.push(GrowthRow {
            t: s.t,
            log_f_phi: lf,
            log_envelope: le,
            margin: le - lf,
        });
        let a: Vec<f64> = lam
            .iter()
            .zip(s.u.coords.iter().zip(&s.v.coords))
            .map(|(&l, (&p, &q))| q * q + l * l * p * p)
            .collect();
        let e0: f64 = a.iter().sum();
        if !(e0 > 0.0) {
            continue;
        }
        let logs: Vec<f64> = a
            .iter()
            .zip(lam)
            .filter(|(ak, _)| **ak > 0.0)
            .map(|(&ak, &l)| ak.ln() + l.max(1.0).ln() + weight.phi(l))
            .collect();
        let log_ratio = (log_sum_exp(&logs) - e0.ln()).max(0.0);
        let threshold = weight.phi_inverse(2.0 * log_ratio)?;
        for (fit, &kb) in fits.iter_mut().zip(&kbs) {
            let b = 4.0 * fit.alpha;
            let ea = alpha_energy(spec, &s.u, &s.v, fit.alpha);
            let log_shape = match env.family {
                EnvelopeFamily::Analytic { .. } => b * env.beta * s.t,
                EnvelopeFamily::QuasiAnalytic { .. } => (b.max(2.0) * env.beta * s.t).exp(),
            };
            fit.log_b = fit.log_b.max(ea.ln() - log_shape);
            let bound = (kb + threshold.powf(b)) * e0;
            fit.interpolation_ratio = fit.interpolation_ratio.max(ea / bound);
        }
    }
    let ratio_at_zero = (rows[0].log_f_phi - rows[0].log_envelope).exp();
    let max_ratio = worst.exp();
    let pass = max_ratio <= 1.0 && fits.iter().all(|f| f.interpolation_ratio <= 1.0 + 1e-9);
    Ok(GrowthReport {
        family: env.family_name().into(),
        beta: env.beta,
        f0: env.f0,
        rows,
        max_ratio,
        ratio_at_zero,
        alpha_fits: fits,
        pass,
    })
}
