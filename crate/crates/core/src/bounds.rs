//! Continuous-dependence constants, guaranteed existence times, life-span
//! lower bounds and the logarithmic interpolation inequality.

use serde::{Deserialize, Serialize};

use crate::dynamics::{hamiltonian, r1_quantity, r2_quantity, Trajectory};
use crate::error::{Error, Result};
use crate::model::{Nonlinearity, Weight};
use crate::operator::{split, Spectrum};

/// Multiplicative inflation applied to every sup-norm read off a trajectory.
pub const SAMPLE_INFLATION: f64 = 1.01;

/// The constants feeding the difference estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub nu0: f64,
    /// Hamiltonian of the reference solution.
    pub h0: f64,
    /// Bound on `|A^{1/2}u|`, `|A^{1/2}v|`.
    pub r0: f64,
    /// `max m` on `[0, R₀²]`.
    pub c0: f64,
    /// `max |m'|` on `[0, R₀²]`.
    pub l0: f64,
    /// Bound on `max{|A^{1/4}u'|, |A^{3/4}u|}`.
    pub r1: f64,
    /// Bound on `|A^{5/4}u|`.
    pub r2: Option<f64>,
    /// Bound on `|A^{5/4}u_{λ,−}|`.
    pub r2_lambda: Option<f64>,
    pub lambda: Option<f64>,
}

impl ConstantsBundle {
    /// Bundle with `C₀`, `L₀` read off `m` on `[0, R₀²]`.
    pub fn from_radii(nl: &Nonlinearity, h0: f64, r0: f64, r1: f64, r2: Option<f64>) -> Self {
        let range = r0 * r0;
        Self {
            nu0: nl.nu0(),
            h0,
            r0,
            c0: nl.max_m(range),
            l0: nl.max_abs_slope(range),
            r1,
            r2,
            r2_lambda: None,
            lambda: None,
        }
    }
}

/// Reads `H₀`, `R₀ = (2H₀/ν₀)^{1/2}`, `C₀`, `L₀` and the sampled
/// `R₁`, `R₂`, `R₂,λ` (each inflated by 1%) from a reference trajectory.
pub fn build_constants(
    spec: &Spectrum,
    nl: &Nonlinearity,
    base: &Trajectory,
    lambda: Option<f64>,
) -> Result<ConstantsBundle> {
    let first = base.first().ok_or(Error::EmptyTrajectory)?;
    if let Some(drift) = base.meta.hamiltonian_drift {
        let limit = 1e3 * base.meta.tol;
        if drift > limit {
            return Err(Error::DriftExceeded { drift, limit });
        }
    }
    let h0 = hamiltonian(spec, nl, &first.u, &first.v);
    let r0 = (2.0 * h0 / nl.nu0()).sqrt();
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    let mut r2l: f64 = 0.0;
    for s in &base.samples {
        r1 = r1.max(r1_quantity(spec, &s.u, &s.v));
        r2 = r2.max(r2_quantity(spec, &s.u));
        if let Some(l) = lambda {
            let low = split(spec, &s.u, l)?.low;
            r2l = r2l.max(r2_quantity(spec, &low));
        }
    }
    let mut cb = ConstantsBundle::from_radii(nl, h0, r0, SAMPLE_INFLATION * r1, Some(SAMPLE_INFLATION * r2));
    if let Some(l) = lambda {
        if !(l > 0.0) {
            return Err(Error::NonpositiveCutoff(l));
        }
        cb.lambda = Some(l);
        cb.r2_lambda = Some(SAMPLE_INFLATION * r2l);
    }
    Ok(cb)
}

/// Constants for the difference of two solutions `u` (reference) and `v`
/// sampled on the same grid: `R₀` covers both through their Hamiltonians,
/// `R₁` bounds `u` and half of `v`, `R₂`, `R₂,λ` bound `u` only.
pub fn pair_constants(
    spec: &Spectrum,
    nl: &Nonlinearity,
    u: &Trajectory,
    v: &Trajectory,
    lambda: Option<f64>,
) -> Result<ConstantsBundle> {
    let mut cb = build_constants(spec, nl, u, lambda)?;
    let vf = v.first().ok_or(Error::EmptyTrajectory)?;
    let hv = hamiltonian(spec, nl, &vf.u, &vf.v);
    let hmax = cb.h0.max(hv);
    let r0 = (2.0 * hmax / nl.nu0()).sqrt();
    let vr1 = v
        .samples
        .iter()
        .map(|s| r1_quantity(spec, &s.u, &s.v))
        .fold(0.0, f64::max);
    let refreshed = ConstantsBundle::from_radii(nl, cb.h0, r0, cb.r1.max(SAMPLE_INFLATION * 0.5 * vr1), cb.r2);
    cb.r0 = refreshed.r0;
    cb.c0 = refreshed.c0;
    cb.l0 = refreshed.l0;
    cb.r1 = refreshed.r1;
    Ok(cb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSet {
    pub gamma1: f64,
    pub gamma2: Option<f64>,
    pub gamma1_lambda: Option<f64>,
    pub gamma2_lambda: Option<f64>,
    pub gamma3: f64,
    pub gamma4: f64,
}

impl GammaSet {
    /// `(Γ₁, Γ₂)` for the more regular reference solution.
    pub fn regular(&self) -> Result<(f64, f64)> {
        Ok((self.gamma1, self.gamma2.ok_or(Error::MissingField("R2"))?))
    }

    /// `(Γ₁,λ, Γ₂,λ)` for the minimal-regularity estimate.
    pub fn minimal(&self) -> Result<(f64, f64)> {
        Ok((
            self.gamma1_lambda.ok_or(Error::MissingField("lambda"))?,
            self.gamma2_lambda.ok_or(Error::MissingField("R2_lambda"))?,
        ))
    }

    /// `Γ₁E₀e^{Γ₂t}`.
    pub fn regular_bound(&self, e0: f64, t: f64) -> Result<f64> {
        let (g1, g2) = self.regular()?;
        Ok(g1 * e0 * (g2 * t).exp())
    }

    /// `Γ₁,λE₀e^{Γ₂,λt} + Γ₃(E_u^{λ,+}(0) + E_v^{λ,+}(0))e^{Γ₄t}`.
    pub fn minimal_bound(&self, e0: f64, high_u0: f64, high_v0: f64, t: f64) -> Result<f64> {
        let (g1, g2) = self.minimal()?;
        Ok(g1 * e0 * (g2 * t).exp() + self.high_frequency_bound(high_u0, high_v0, t))
    }

    /// `Γ₃(E_u^{λ,+}(0) + E_v^{λ,+}(0))e^{Γ₄t}`, independent of the cutoff.
    pub fn high_frequency_bound(&self, high_u0: f64, high_v0: f64, t: f64) -> f64 {
        self.gamma3 * (high_u0 + high_v0) * (self.gamma4 * t).exp()
    }
}

/// Evaluates `Γ₁, Γ₂, Γ₁,λ, Γ₂,λ, Γ₃, Γ₄` from a bundle. Cases whose radii
/// are missing are left as `None`.
pub fn gammas(cb: &ConstantsBundle) -> GammaSet {
    let ConstantsBundle {
        nu0, r0, c0, l0, r1, ..
    } = *cb;
    let gamma1 = c0.max(1.0) / nu0.min(1.0);
    let gamma4 = 8.0 * l0 * r1 * r1 / nu0;
    let sq = nu0.sqrt();
    let gamma2 = cb.r2.map(|r2| gamma4 + 4.0 * l0 * r0 * (r1 + r2) / sq);
    let gamma1_lambda = cb.lambda.map(|l| gamma1 * (1.0 / (l * l)).max(1.0));
    let gamma2_lambda = match (cb.lambda, cb.r2_lambda) {
        (Some(_), Some(r2l)) => Some(gamma4 + 2.0 * l0 * (2.0 * r0 + 3.0 * r1) * (2.0 * r1 + r2l) / sq),
        _ => None,
    };
    GammaSet {
        gamma1,
        gamma2,
        gamma1_lambda,
        gamma2_lambda,
        gamma3: 2.0 * gamma1,
        gamma4,
    }
}

/// `E₀·Γ₁·exp(Γ₂T) < R₁²`.
pub fn regular_smallness_holds(gamma1: f64, gamma2: f64, e0: f64, r1: f64, t: f64) -> bool {
    e0 * gamma1 * (gamma2 * t).exp() < r1 * r1
}

/// `E₀{Γ₁,λe^{Γ₂,λT} + 2Γ₃e^{Γ₄T}} < R₁²/2`.
pub fn minimal_smallness_holds(gs: &GammaSet, e0: f64, r1: f64, t: f64) -> Result<bool> {
    let (g1, g2) = gs.minimal()?;
    Ok(e0 * (g1 * (g2 * t).exp() + 2.0 * gs.gamma3 * (gs.gamma4 * t).exp()) < 0.5 * r1 * r1)
}

/// `E_u^{λ,+}(0)·Γ₃·exp(Γ₄T) < R₁²/6`.
pub fn tail_condition_holds(gs: &GammaSet, high_u0: f64, r1: f64, t: f64) -> bool {
    high_u0 * gs.gamma3 * (gs.gamma4 * t).exp() < r1 * r1 / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum Regularity {
    /// Reference solution bounded in `D(A^{5/4})`.
    Regular,
    /// Only the low-frequency part is controlled; `high_u0 = E_u^{λ,+}(0)`.
    Minimal { high_u0: f64 },
}

/// Supremum of the `T` admissible in the quantitative local-existence
/// smallness condition. `+∞` when the exponential rates vanish.
pub fn guaranteed_time(gs: &GammaSet, e0: f64, r1: f64, case: Regularity) -> Result<f64> {
    if e0 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let r1sq = r1 * r1;
    match case {
        Regularity::Regular => {
            let (g1, g2) = gs.regular()?;
            let lhs = g1 * e0;
            if !(lhs < r1sq) {
                return Err(Error::GapTooLarge { lhs, rhs: r1sq });
            }
            if g2 == 0.0 {
                return Ok(f64::INFINITY);
            }
            Ok((r1sq / lhs).ln() / g2)
        }
        Regularity::Minimal { high_u0 } => {
            let (g1, g2) = gs.minimal()?;
            let tail0 = high_u0 * gs.gamma3;
            if !(tail0 < r1sq / 6.0) {
                return Err(Error::LambdaConditionFails {
                    lhs: tail0,
                    rhs: r1sq / 6.0,
                });
            }
            let f = |t: f64| e0 * (g1 * (g2 * t).exp() + 2.0 * gs.gamma3 * (gs.gamma4 * t).exp());
            let target = 0.5 * r1sq;
            if !(f(0.0) < target) {
                return Err(Error::GapTooLarge {
                    lhs: f(0.0),
                    rhs: target,
                });
            }
            let t_tail = if tail0 == 0.0 || gs.gamma4 == 0.0 {
                f64::INFINITY
            } else {
                (r1sq / (6.0 * tail0)).ln() / gs.gamma4
            };
            let t_main = if g2 == 0.0 && gs.gamma4 == 0.0 {
                f64::INFINITY
            } else {
                bisect_increasing(f, target)
            };
            Ok(t_main.min(t_tail))
        }
    }
}

/// Largest `t ≥ 0` with `f(t) < target` for increasing `f` with `f(0) < target`.
fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifespanCase {
    FiniteDimensional,
    Analytic,
    QuasiAnalytic,
    NullSolution,
}

impl LifespanCase {
    /// Largest ε for which the closed-form bound is positive.
    pub fn domain_threshold(self) -> f64 {
        match self {
            LifespanCase::FiniteDimensional | LifespanCase::NullSolution => 1.0,
            LifespanCase::Analytic => (-1.0f64).exp(),
            LifespanCase::QuasiAnalytic => (-std::f64::consts::E).exp(),
        }
    }

    /// The closed-form shape `T(ε)·rate`.
    pub fn shape(self, epsilon: f64) -> f64 {
        let l = epsilon.ln().abs();
        match self {
            LifespanCase::FiniteDimensional => l,
            LifespanCase::Analytic => l.ln(),
            LifespanCase::QuasiAnalytic => l.ln().ln(),
            LifespanCase::NullSolution => 1.0 / (epsilon * epsilon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanEstimate {
    pub case: LifespanCase,
    pub epsilon: f64,
    pub lower_bound: f64,
    /// `γ₀`, `γ₁`, `γ₂` (the bound divides by it) or, for the null solution,
    /// the constant `c` in `c/ε²`.
    pub rate: f64,
}

/// Closed-form life-span lower bound: `|log ε|/γ₀`, `log|log ε|/γ₁`,
/// `log log|log ε|/γ₂`, or `c/ε²` around the null solution.
pub fn lifespan_lower_bound(
    case: LifespanCase,
    epsilon: f64,
    rate: f64,
    threshold: Option<f64>,
) -> Result<LifespanEstimate> {
    let thr = threshold.map_or(case.domain_threshold(), |t| t.min(case.domain_threshold()));
    if !(epsilon > 0.0 && epsilon < thr) {
        return Err(Error::EpsilonTooLarge {
            epsilon,
            threshold: thr,
        });
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::HypothesisFailed {
            name: "rate".into(),
            detail: format!("rate constant must be positive and finite, got {rate}"),
        });
    }
    let shape = case.shape(epsilon);
    let lower_bound = match case {
        LifespanCase::NullSolution => rate * shape,
        _ => shape / rate,
    };
    Ok(LifespanEstimate {
        case,
        epsilon,
        lower_bound,
        rate,
    })
}

/// `c` in `T(ε) ≥ c/ε²` around the null solution, taking
/// `R₀ = R₁ = R₂ = a₀ε`, `E₀ = ε²·e_d` and `C₀`, `L₀` over `[0, (a₀ε_max)²]`,
/// which bounds the guaranteed time from below for every `ε ≤ ε_max`.
/// `None` when `a₀² ≤ Γ₁·e_d` (no positive time).
pub fn null_solution_rate(nl: &Nonlinearity, a0: f64, eps_max: f64, e_d: f64) -> Option<f64> {
    let range = (a0 * eps_max).powi(2);
    let nu0 = nl.nu0();
    let gamma1 = nl.max_m(range).max(1.0) / nu0.min(1.0);
    let l0 = nl.max_abs_slope(range);
    let log_gap = (a0 * a0 / (gamma1 * e_d)).ln();
    if !(log_gap > 0.0) {
        return None;
    }
    let kappa = a0 * a0 * l0 * (8.0 / nu0 + 8.0 / nu0.sqrt());
    if kappa == 0.0 {
        return Some(f64::INFINITY);
    }
    Some(log_gap / kappa)
}

/// `a₀` for the null-solution scaling, from the fixed point of
/// `a₀² = e·max{Γ₁·e_d, 2h/ν₀}` with `Γ₁` over `[0, (a₀ε_max)²]`.
///
/// `e_d = E(d₀,d₁)` and `h ≥ H(ε d₀, ε d₁)/ε²` on the grid, so that
/// `a₀ε` dominates `(2H/ν₀)^{1/2}` for the perturbed data. `None` if the
/// iteration does not settle (ε_max too large).
pub fn null_solution_a0(nl: &Nonlinearity, e_d: f64, h: f64, eps_max: f64) -> Option<f64> {
    let nu0 = nl.nu0();
    let floor = 2.0 * h / nu0;
    let mut a2 = std::f64::consts::E * (e_d * nl.m_raw(0.0).max(1.0) / nu0.min(1.0)).max(floor);
    for _ in 0..100 {
        let gamma1 = nl.max_m(a2 * eps_max * eps_max).max(1.0) / nu0.min(1.0);
        let next = std::f64::consts::E * (gamma1 * e_d).max(floor);
        if !next.is_finite() {
            return None;
        }
        if (next - a2).abs() <= 1e-12 * next {
            return Some(next.sqrt());
        }
        a2 = next;
    }
    None
}

/// `K_b = sup{σ^b exp(−φ(σ)/2) : σ ≥ 0}` by grid search.
///
/// The grid grows until the log-integrand has decreased for 100
/// consecutive nodes while staying below `1e-3` times the running max; the
/// best node is then refined by golden-section search.
pub fn sup_power_weight(weight: &Weight, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::InfiniteKb(b));
    }
    if matches!(weight, Weight::Zero) {
        return Err(Error::InfiniteKb(b));
    }
    let g = |s: f64| if s <= 0.0 { f64::NEG_INFINITY } else { b * s.ln() - 0.5 * weight.phi(s) };
    let cut = 1e-3f64.ln();
    let mut best = f64::NEG_INFINITY;
    let mut best_s = 0.0;
    let mut prev_s: f64 = 0.0;
    let mut prev = f64::NEG_INFINITY;
    let mut s: f64 = 0.0;
    let mut streak = 0;
    let mut nodes = 0usize;
    let mut before_best = 0.0;
    while streak < 100 {
        let h = 5e-3 * (s / 10.0).max(1.0);
        let next = s + h;
        let v = g(next);
        if v > best {
            best = v;
            best_s = next;
            before_best = prev_s.max(s);
        }
        if v < prev && v < best + cut {
            streak += 1;
        } else {
            streak = 0;
        }
        prev = v;
        prev_s = s;
        s = next;
        nodes += 1;
        if nodes > 20_000_000 || !s.is_finite() {
            return Err(Error::InfiniteKb(b));
        }
    }
    // refine on the bracket around the best node
    let lo = before_best;
    let hi = best_s + 5e-3 * (best_s / 10.0).max(1.0);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut c) = (lo, hi);
    let mut x1 = c - gr * (c - a);
    let mut x2 = a + gr * (c - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..100 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (c - a);
            f2 = g(x2);
        } else {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - gr * (c - a);
            f1 = g(x1);
        }
    }
    Ok(best.max(f1).max(f2).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationResult {
    /// `Σ a_k λ_k^b`.
    pub lhs: f64,
    /// `{K_b + [φ⁻¹(2 log(F/E))]^b}·E`.
    pub bound: f64,
    pub k_b: f64,
    /// `E = Σ a_k`.
    pub e: f64,
    /// `F = Σ a_k max{1,λ_k} exp(φ(λ_k))`, in log form.
    pub log_f: f64,
    /// Set when `F < E`, in which case `log(F/E)` was clamped at zero.
    pub clamped: bool,
}

impl InterpolationResult {
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.lhs <= self.bound * (1.0 + rel_slack)
    }
}

pub fn interpolate(a: &[f64], lambdas: &[f64], b: f64, weight: &Weight) -> Result<InterpolationResult> {
    let k_b = sup_power_weight(weight, b)?;
    interpolate_with_kb(a, lambdas, b, weight, k_b)
}

/// As [`interpolate`] with a precomputed `K_b`, for sweeps.
pub fn interpolate_with_kb(
    a: &[f64],
    lambdas: &[f64],
    b: f64,
    weight: &Weight,
    k_b: f64,
) -> Result<InterpolationResult> {
    if a.len() != lambdas.len() {
        return Err(Error::LengthMismatch {
            expected: lambdas.len(),
            got: a.len(),
        });
    }
    if !k_b.is_finite() {
        return Err(Error::InfiniteKb(b));
    }
    let e: f64 = a.iter().sum();
    if !(e > 0.0) {
        return Err(Error::ZeroE);
    }
    let lhs: f64 = a
        .iter()
        .zip(lambdas)
        .map(|(&ak, &l)| if l == 0.0 { 0.0 } else { ak * l.powf(b) })
        .sum();
    let logs: Vec<f64> = a
        .iter()
        .zip(lambdas)
        .filter(|(ak, _)| **ak > 0.0)
        .map(|(&ak, &l)| ak.ln() + l.max(1.0).ln() + weight.phi(l))
        .collect();
    let log_f = crate::dynamics::log_sum_exp(&logs);
    let log_ratio = log_f - e.ln();
    let clamped = log_ratio < 0.0;
    let threshold = weight.phi_inverse(2.0 * log_ratio.max(0.0))?;
    let bound = (k_b + threshold.powf(b)) * e;
    Ok(InterpolationResult {
        lhs,
        bound,
        k_b,
        e,
        log_f,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_kirchhoff, SolveOptions, State};
    use std::f64::consts::E;

    #[test]
    fn gamma_examples() {
        let nl = Nonlinearity::constant(1.0).unwrap();
        let cb = ConstantsBundle::from_radii(&nl, 1.0, 1.0, 1.0, Some(1.0));
        let gs = gammas(&cb);
        assert_eq!(gs.gamma1, 1.0);
        assert_eq!(gs.gamma2, Some(0.0));
        assert_eq!(gs.gamma4, 0.0);

        let cb = ConstantsBundle {
            nu0: 1.0,
            h0: 1.0,
            r0: 1.0,
            c0: 2.0,
            l0: 0.0,
            r1: 1.0,
            r2: None,
            r2_lambda: Some(1.0),
            lambda: Some(0.5),
        };
        let gs = gammas(&cb);
        assert_eq!(gs.gamma1_lambda, Some(8.0));
        assert_eq!(gs.gamma3, 4.0);
        assert_eq!(gs.regular(), Err(Error::MissingField("R2")));

        let cb = ConstantsBundle {
            nu0: 1.0,
            h0: 1.0,
            r0: 1.0,
            c0: 1.0,
            l0: 1.0,
            r1: 1.0,
            r2: Some(1.0),
            r2_lambda: None,
            lambda: None,
        };
        let gs = gammas(&cb);
        assert_eq!(gs.gamma2, Some(16.0));
        assert_eq!(gs.minimal(), Err(Error::MissingField("lambda")));
    }

    #[test]
    fn gamma3_and_gamma4_ignore_the_cutoff() {
        let base = ConstantsBundle {
            nu0: 0.5,
            h0: 1.0,
            r0: 2.0,
            c0: 3.0,
            l0: 0.7,
            r1: 1.3,
            r2: Some(2.0),
            r2_lambda: Some(1.0),
            lambda: Some(2.0),
        };
        let other = ConstantsBundle {
            lambda: Some(8.0),
            r2_lambda: Some(1.9),
            ..base.clone()
        };
        let (a, b) = (gammas(&base), gammas(&other));
        assert_eq!(a.gamma3, b.gamma3);
        assert_eq!(a.gamma4, b.gamma4);
        assert_eq!(a.gamma3, 2.0 * a.gamma1);
        assert!(a.gamma1 >= 1.0);
    }

    #[test]
    fn constants_from_trajectory() {
        let spec = Spectrum::new(vec![1.0]).unwrap();
        let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
        let init = State::new(0.0, vec![1.0], vec![0.0]);
        let traj = evolve_kirchhoff(&spec, &nl, &init, 1.0, &SolveOptions::new(1e-9)).unwrap();
        let cb = build_constants(&spec, &nl, &traj, None).unwrap();
        assert_eq!(cb.h0, 1.5);
        assert!((cb.r0 - 3f64.sqrt()).abs() < 1e-15);
        assert!((cb.c0 - 4.0).abs() < 1e-14);
        assert_eq!(cb.l0, 1.0);
        assert!(cb.c0 >= cb.nu0);
    }

    #[test]
    fn r1_of_linear_oscillator() {
        let spec = Spectrum::new(vec![1.0]).unwrap();
        let nl = Nonlinearity::constant(1.0).unwrap();
        let init = State::new(0.0, vec![1.0], vec![0.0]);
        let opts = SolveOptions::new(1e-10).uniform_grid(0.0, 7.0, 7000);
        let traj = evolve_kirchhoff(&spec, &nl, &init, 7.0, &opts).unwrap();
        let cb = build_constants(&spec, &nl, &traj, Some(0.5)).unwrap();
        // max over t of max{|sin t|, |cos t|} = 1
        assert!((cb.r1 - 1.01).abs() < 1e-8);
        assert_eq!(cb.r2_lambda, Some(0.0));
        let gs = gammas(&cb);
        assert_eq!(gs.gamma2, Some(0.0));
    }

    #[test]
    fn guaranteed_time_examples() {
        let gs = GammaSet {
            gamma1: 2.0,
            gamma2: Some(1.0),
            gamma1_lambda: None,
            gamma2_lambda: None,
            gamma3: 4.0,
            gamma4: 0.0,
        };
        let e0 = (-3.0f64).exp() / 2.0;
        let t = guaranteed_time(&gs, e0, 1.0, Regularity::Regular).unwrap();
        assert!((t - 3.0).abs() < 1e-12);
        // substitute back: E0·Γ₁·e^{Γ₂T} = R₁²
        assert!((e0 * 2.0 * t.exp() - 1.0).abs() < 1e-12);

        let flat = GammaSet {
            gamma2: Some(0.0),
            ..gs.clone()
        };
        assert_eq!(guaranteed_time(&flat, 0.1, 1.0, Regularity::Regular).unwrap(), f64::INFINITY);

        let near = guaranteed_time(&gs, 0.5 * (1.0 - 1e-9), 1.0, Regularity::Regular).unwrap();
        assert!(near > 0.0 && near < 1e-8);

        assert!(matches!(
            guaranteed_time(&gs, 0.5, 1.0, Regularity::Regular),
            Err(Error::GapTooLarge { .. })
        ));
    }

    #[test]
    fn guaranteed_time_minimal_case() {
        let gs = GammaSet {
            gamma1: 1.0,
            gamma2: None,
            gamma1_lambda: Some(1.5),
            gamma2_lambda: Some(2.0),
            gamma3: 2.0,
            gamma4: 0.5,
        };
        let (e0, r1, hu) = (1e-4, 1.0, 1e-3);
        let t = guaranteed_time(&gs, e0, r1, Regularity::Minimal { high_u0: hu }).unwrap();
        assert!(t > 0.0 && t.is_finite());
        assert!(minimal_smallness_holds(&gs, e0, r1, 0.999 * t).unwrap());
        assert!(tail_condition_holds(&gs, hu, r1, 0.999 * t));
        let fails_main = !minimal_smallness_holds(&gs, e0, r1, 1.001 * t).unwrap();
        let fails_tail = !tail_condition_holds(&gs, hu, r1, 1.001 * t);
        assert!(fails_main || fails_tail);

        assert!(matches!(
            guaranteed_time(&gs, e0, r1, Regularity::Minimal { high_u0: 0.1 }),
            Err(Error::LambdaConditionFails { .. })
        ));
        assert!(matches!(
            guaranteed_time(&gs, e0, r1, Regularity::Regular),
            Err(Error::MissingField("R2"))
        ));
    }

    #[test]
    fn lifespan_examples() {
        let est = lifespan_lower_bound(LifespanCase::NullSolution, 0.1, 1.0, None).unwrap();
        assert!((est.lower_bound - 100.0).abs() < 1e-9);
        let est = lifespan_lower_bound(LifespanCase::FiniteDimensional, (-4.0f64).exp(), 2.0, None).unwrap();
        assert!((est.lower_bound - 2.0).abs() < 1e-12);
        assert!(matches!(
            lifespan_lower_bound(LifespanCase::Analytic, 0.5, 1.0, None),
            Err(Error::EpsilonTooLarge { .. })
        ));
        assert!(matches!(
            lifespan_lower_bound(LifespanCase::FiniteDimensional, 0.2, 1.0, Some(0.1)),
            Err(Error::EpsilonTooLarge { .. })
        ));

        let mut prev = f64::NEG_INFINITY;
        for i in 4..40 {
            let eps = 0.5f64.powi(i);
            let t = lifespan_lower_bound(LifespanCase::QuasiAnalytic, eps, 1.0, None)
                .unwrap()
                .lower_bound;
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn null_rate_is_positive() {
        let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
        let a0 = null_solution_a0(&nl, 1.0, 1.0, 0.1).unwrap();
        let c = null_solution_rate(&nl, a0, 0.1, 1.0).unwrap();
        assert!(c > 0.0 && c.is_finite());
        assert!(null_solution_rate(&nl, 0.5, 0.1, 1.0).is_none());
        // the guaranteed time with these radii dominates c/ε²
        for eps in [1e-4, 1e-3, 1e-2, 0.1] {
            let r = a0 * eps;
            let cb = ConstantsBundle::from_radii(&nl, 0.0, r, r, Some(r));
            let t = guaranteed_time(&gammas(&cb), eps * eps, r, Regularity::Regular).unwrap();
            assert!(t * eps * eps >= c * (1.0 - 1e-9), "eps = {eps}");
        }
        // constant m: no exponential rate at all
        let flat = Nonlinearity::constant(1.0).unwrap();
        let a0 = null_solution_a0(&flat, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(null_solution_rate(&flat, a0, 0.1, 1.0), Some(f64::INFINITY));
    }

    #[test]
    fn kb_linear_matches_grid_oracle() {
        // brute force over [0, 50] on a fine uniform grid
        let w = Weight::linear(2.0).unwrap();
        let oracle = (0..=5_000_000)
            .map(|i| {
                let s = 50.0 * i as f64 / 5_000_000.0;
                s * (-0.5 * w.phi(s)).exp()
            })
            .fold(0.0, f64::max);
        let kb = sup_power_weight(&w, 1.0).unwrap();
        assert!((kb - oracle).abs() < 1e-10);
        assert!((kb - 1.0 / E).abs() < 1e-10);
    }

    #[test]
    fn kb_quasi_analytic_is_finite() {
        for b in [0.5, 1.0, 2.0, 3.0] {
            let kb = sup_power_weight(&Weight::QuasiAnalytic, b).unwrap();
            let spot = (1..4000)
                .map(|i| {
                    let s = i as f64 * 0.25;
                    s.powf(b) * (-0.5 * Weight::QuasiAnalytic.phi(s)).exp()
                })
                .fold(0.0, f64::max);
            assert!(kb >= spot * (1.0 - 1e-12));
            assert!(kb <= spot * 1.01);
        }
        assert_eq!(sup_power_weight(&Weight::Zero, 1.0), Err(Error::InfiniteKb(1.0)));
    }

    #[test]
    fn interpolation_examples() {
        let r = interpolate(&[1.0], &[0.0], 2.0, &Weight::QuasiAnalytic).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds(0.0));

        let w = Weight::linear(1.0).unwrap();
        let r = interpolate(&[1.0, 1.0], &[0.0, 2.0], 1.0, &w).unwrap();
        assert_eq!(r.lhs, 2.0);
        assert_eq!(r.e, 2.0);
        assert!((r.log_f.exp() - (1.0 + 2.0 * E * E)).abs() < 1e-12);
        // K_1 = 2/e for r₀ = 1; threshold = 2 log((1 + 2e²)/2)
        let expected = (2.0 / E + 2.0 * ((1.0 + 2.0 * E * E) / 2.0).ln()) * 2.0;
        assert!((r.bound - expected).abs() < 1e-9);
        assert!(r.holds(0.0));
        assert!(!r.clamped);

        assert_eq!(interpolate(&[0.0, 0.0], &[1.0, 2.0], 1.0, &w), Err(Error::ZeroE));
    }
}
