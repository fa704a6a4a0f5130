//! Scenario configuration, experiment runners and result export.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{
    build_constants, gammas, guaranteed_time, interpolate_with_kb, lifespan_lower_bound, null_solution_a0,
    null_solution_rate, pair_constants, regular_smallness_holds, sup_power_weight, ConstantsBundle, GammaSet,
    LifespanCase, Regularity,
};
use crate::comparison::{
    calibrate, comparison_excess, envelope_for, envelope_vs_simulation, integrate_comparison, verify_supersolution,
    GrowthEnvelope,
};
use crate::dynamics::{
    escape_time, evolve_kirchhoff, evolve_linear, hamiltonian, log_f_phi, r1_quantity, r2_quantity, sobolev_energy,
    alpha_energy, LinearCoefficient, SolveOptions, State, Trajectory,
};
use crate::error::{Error, Result};
use crate::model::{Nonlinearity, NonlinearitySpec, Weight, WeightSpec};
use crate::operator::{split, ModeVector, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lsc,
    Growth,
    Age,
    Verify,
    Simulate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Lsc => "lsc",
            ExperimentKind::Growth => "growth",
            ExperimentKind::Age => "age",
            ExperimentKind::Verify => "verify",
            ExperimentKind::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumGenerator {
    StringLike,
    SqrtLike,
    Lacunary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedSpectrum {
    pub generator: SpectrumGenerator,
    pub n: usize,
}

/// Either an explicit eigenvalue list or a named generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpectrumConfig {
    Explicit(Vec<f64>),
    Generated(GeneratedSpectrum),
}

impl SpectrumConfig {
    pub fn build(&self) -> Result<Spectrum> {
        match self {
            SpectrumConfig::Explicit(v) => Spectrum::new(v.clone()),
            SpectrumConfig::Generated(g) => match g.generator {
                SpectrumGenerator::StringLike => Spectrum::string_like(g.n),
                SpectrumGenerator::SqrtLike => Spectrum::sqrt_like(g.n),
                SpectrumGenerator::Lacunary => Spectrum::lacunary(g.n),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    /// Strictly decreasing, inside `(0, 1)`.
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Number of uniform sampling intervals on `[0, t_end]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_t_end() -> f64 {
    20.0
}
fn default_samples() -> usize {
    1000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            t_end: default_t_end(),
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AgeConfig {
    /// Inferred from the weight and the data when absent.
    #[serde(default)]
    pub case: Option<LifespanCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub linear_cases: usize,
    pub regular_cases: usize,
    pub minimal_cases: usize,
    pub interpolation_cases: usize,
    pub envelope_draws: usize,
    pub local_existence_cases: usize,
    pub tightness_cases: usize,
    /// Multiplies `Γ₂` in the regular difference suite; values below 1
    /// corrupt the bound on purpose.
    pub gamma2_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            linear_cases: 200,
            regular_cases: 50,
            minimal_cases: 20,
            interpolation_cases: 10_000,
            envelope_draws: 1000,
            local_existence_cases: 20,
            tightness_cases: 100,
            gamma2_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_out_dir() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub age: AgeConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.perturbation {
            if p.epsilons.is_empty() {
                return Err(Error::Config("epsilon grid is empty".into()));
            }
            for w in p.epsilons.windows(2) {
                if !(w[1] < w[0]) {
                    return Err(Error::Config("epsilon grid must be strictly decreasing".into()));
                }
            }
            if p.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                return Err(Error::Config("epsilons must lie in (0, 1)".into()));
            }
            if p.d0.len() != p.d1.len() {
                return Err(Error::LengthMismatch {
                    expected: p.d0.len(),
                    got: p.d1.len(),
                });
            }
        }
        if !(self.solver.t_end > 0.0) || self.solver.samples == 0 {
            return Err(Error::Config("solver needs t_end > 0 and samples >= 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn problem(&self) -> Result<(Spectrum, Nonlinearity)> {
        let spec = self.spectrum.as_ref().ok_or(Error::MissingField("spectrum"))?.build()?;
        let nl = Nonlinearity::try_from(self.nonlinearity.as_ref().ok_or(Error::MissingField("nonlinearity"))?)?;
        Ok((spec, nl))
    }

    fn weight(&self) -> Result<Option<Weight>> {
        self.weight.as_ref().map(Weight::try_from).transpose()
    }

    fn initial_state(&self, spec: &Spectrum) -> Result<State> {
        let init = self.initial.as_ref().ok_or(Error::MissingField("initial"))?;
        let st = State::new(0.0, init.u0.clone(), init.u1.clone());
        st.check(spec)?;
        Ok(st)
    }

    fn perturbation(&self, spec: &Spectrum) -> Result<&Perturbation> {
        let p = self.perturbation.as_ref().ok_or(Error::MissingField("perturbation"))?;
        spec.check_len(p.d0.len())?;
        Ok(p)
    }

    fn options(&self, t_end: f64) -> SolveOptions {
        SolveOptions::new(self.solver.tol).uniform_grid(0.0, t_end, self.solver.samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Hypotheses not met at this row; it does not count towards the verdict.
    Excluded,
    Info,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Excluded => "excluded",
            Verdict::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub values: Vec<f64>,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    /// Named scalars (fitted constants, thresholds).
    pub summary: Vec<(String, f64)>,
    pub metadata: Metadata,
}

impl ExperimentResult {
    fn new(cfg: &ScenarioConfig, columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            summary: Vec::new(),
            metadata: Metadata {
                experiment: cfg.experiment.name().into(),
                config_hash: cfg.hash(),
                seed: cfg.seed,
                version: env!("CARGO_PKG_VERSION").into(),
            },
        }
    }

    fn check(&mut self, name: &str, value: f64, limit: f64, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            value,
            limit,
            pass,
            detail: detail.into(),
        });
    }

    /// All checks pass and no row failed.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("verdict".into());
        header.push("note".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.label.clone()];
            rec.extend(r.values.iter().map(|v| v.to_string()));
            rec.push(r.verdict.as_str().into());
            rec.push(r.note.clone());
            w.write_record(&rec)?;
        }
        finish_csv(w)
    }

    pub fn checks_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "value", "limit", "pass", "detail"])?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                c.value.to_string(),
                c.limit.to_string(),
                c.pass.to_string(),
                c.detail.clone(),
            ])?;
        }
        for (k, v) in &self.summary {
            w.write_record([k.clone(), v.to_string(), String::new(), String::new(), "summary".into()])?;
        }
        finish_csv(w)
    }

    /// Writes `<experiment>.csv` and `<experiment>_checks.csv`, or
    /// `<experiment>.json`, into `dir`.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let stem = &self.metadata.experiment;
        let mut written = Vec::new();
        match format {
            OutputFormat::Csv => {
                let p = dir.join(format!("{stem}.csv"));
                fs::write(&p, self.table_csv()?)?;
                written.push(p);
                let p = dir.join(format!("{stem}_checks.csv"));
                fs::write(&p, self.checks_csv()?)?;
                written.push(p);
            }
            OutputFormat::Json => {
                let p = dir.join(format!("{stem}.json"));
                fs::write(&p, serde_json::to_string_pretty(self)?)?;
                written.push(p);
            }
        }
        Ok(written)
    }

    /// Plain-text ledger: one line per check.
    pub fn ledger(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<34} {:>14} {:>12}  {}  {}",
                c.name,
                fmt_num(c.value),
                fmt_num(c.limit),
                if c.pass { "PASS" } else { "FAIL" },
                c.detail
            );
        }
        s
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() && (x == 0.0 || (1e-3..1e6).contains(&x.abs())) {
        format!("{x:.6}")
    } else {
        format!("{x:.4e}")
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Dispatches on the experiment tag.
pub fn run(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    match cfg.experiment {
        ExperimentKind::Lsc => run_lsc(cfg),
        ExperimentKind::Growth => run_growth(cfg),
        ExperimentKind::Age => run_age(cfg),
        ExperimentKind::Verify => run_verify(cfg),
        ExperimentKind::Simulate => run_simulate(cfg),
    }
}

fn perturbed(init: &State, p: &Perturbation, eps: f64) -> State {
    State::new(
        init.t,
        init.u.axpy(eps, &ModeVector::new(p.d0.clone())),
        init.v.axpy(eps, &ModeVector::new(p.d1.clone())),
    )
}

/// `(t, E_{(u−v)}(t))` on the shared sampling grid.
fn difference_series(spec: &Spectrum, u: &Trajectory, v: &Trajectory) -> Vec<(f64, f64)> {
    u.grid_states()
        .zip(v.grid_states())
        .map(|(a, b)| (a.t, sobolev_energy(spec, &a.u.sub(&b.u), &a.v.sub(&b.v))))
        .collect()
}

/// `max_t E(t)/(Γ₁E(0)e^{Γ₂t})`; zero when the data coincide.
fn regular_ratio(series: &[(f64, f64)], g1: f64, g2: f64) -> f64 {
    let e0 = series[0].1;
    if e0 == 0.0 {
        return if series.iter().all(|p| p.1 == 0.0) { 0.0 } else { f64::INFINITY };
    }
    series
        .iter()
        .map(|&(t, e)| e / (g1 * e0 * (g2 * t).exp()))
        .fold(0.0, f64::max)
}

/// Continuous dependence along a decreasing ε grid (plus an ε = 0 row).
pub fn run_lsc(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let (spec, nl) = cfg.problem()?;
    let init = cfg.initial_state(&spec)?;
    let pert = cfg.perturbation(&spec)?;
    let t_end = cfg.solver.t_end;
    let opts = cfg.options(t_end);
    let base = evolve_kirchhoff(&spec, &nl, &init, t_end, &opts)?;
    let mut eps_grid = vec![0.0];
    eps_grid.extend(&pert.epsilons);
    let cells: Vec<Row> = eps_grid
        .par_iter()
        .map(|&eps| {
            let v = evolve_kirchhoff(&spec, &nl, &perturbed(&init, pert, eps), t_end, &opts)?;
            let series = difference_series(&spec, &base, &v);
            let sup = series.iter().map(|p| p.1).fold(0.0, f64::max);
            let e0 = series[0].1;
            let cb = pair_constants(&spec, &nl, &base, &v, None)?;
            let (g1, g2) = gammas(&cb).regular()?;
            let ratio = regular_ratio(&series, g1, g2);
            let (tg, note) = match guaranteed_time(&gammas(&cb), e0, cb.r1, Regularity::Regular) {
                Ok(t) => (t, String::new()),
                Err(e) => (f64::NAN, e.to_string()),
            };
            let esc = escape_time(&spec, &v, 8.0 * cb.r1 * cb.r1).unwrap_or(f64::INFINITY);
            Ok(Row {
                label: format!("eps={eps}"),
                values: vec![eps, e0, sup, g1, g2, ratio, tg, esc],
                verdict: Verdict::of(ratio <= 1.0 + 1e-3),
                note,
            })
        })
        .collect::<Result<_>>()?;
    let mut res = ExperimentResult::new(
        cfg,
        &[
            "epsilon",
            "e_diff_initial",
            "sup_e_diff",
            "gamma1",
            "gamma2",
            "max_bound_ratio",
            "guaranteed_time",
            "escape_time",
        ],
    );
    let worst = cells.iter().map(|r| r.values[5]).fold(0.0, f64::max);
    let sups: Vec<f64> = cells.iter().skip(1).map(|r| r.values[2]).collect();
    let monotone = sups.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let zero_row = cells[0].values[2];
    let last = *sups.last().unwrap_or(&0.0);
    res.rows = cells;
    res.check("difference_bound_regular", worst, 1.0 + 1e-3, worst <= 1.0 + 1e-3, "max E_diff/(G1 E0 exp(G2 t))");
    res.check(
        "monotone_sup_difference",
        sups.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max),
        1.05,
        monotone,
        "max ratio of consecutive sup differences",
    );
    res.check(
        "vanishing_sup_difference",
        last,
        sups.first().copied().unwrap_or(0.0),
        zero_row == 0.0 && last < sups.first().copied().unwrap_or(f64::INFINITY) || sups.len() < 2 && zero_row == 0.0,
        "sup difference at the smallest epsilon vs the largest; eps = 0 row is exactly 0",
    );
    Ok(res)
}

/// Everything `age_cell` needs, fixed before the ε sweep.
pub struct AgeContext {
    pub spec: Spectrum,
    pub nl: Nonlinearity,
    pub case: LifespanCase,
    pub init: State,
    pub pert: Perturbation,
    pub base: Trajectory,
    /// `E(d₀, d₁)`, so that `E_{(u−u_ε)}(0) = ε²·e_d`.
    pub e_d: f64,
    pub h0: f64,
    /// γ₀, γ₁ = 12β₁, γ₂ = 12β₂, or `c` for the null solution.
    pub rate: f64,
    pub beta: Option<f64>,
    pub a0: Option<f64>,
    /// `√B₀` with `B₀` the a priori bound on the squared norms.
    pub b0_radius: Option<f64>,
    pub tol: f64,
    pub sim_cap: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeRow {
    pub epsilon: f64,
    pub e_diff_initial: f64,
    pub r1: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub lifespan_bound: f64,
    pub guaranteed_time: f64,
    pub simulated_until: f64,
    pub max_r1_perturbed: f64,
    pub escape_time: f64,
    pub pass: bool,
}

fn infer_case(cfg: &ScenarioConfig, init: &State, weight: Option<&Weight>) -> LifespanCase {
    if let Some(c) = cfg.age.case {
        return c;
    }
    if init.u.coords.iter().chain(&init.v.coords).all(|&x| x == 0.0) {
        return LifespanCase::NullSolution;
    }
    match weight {
        Some(Weight::Linear { .. }) => LifespanCase::Analytic,
        Some(Weight::QuasiAnalytic) => LifespanCase::QuasiAnalytic,
        _ => LifespanCase::FiniteDimensional,
    }
}

fn hypothesis(name: &str, detail: String) -> Error {
    Error::HypothesisFailed {
        name: name.into(),
        detail,
    }
}

/// Builds the reference run and the case's rate constant.
pub fn prepare_age(cfg: &ScenarioConfig) -> Result<AgeContext> {
    let (spec, nl) = cfg.problem()?;
    let init = cfg.initial_state(&spec)?;
    let pert = cfg.perturbation(&spec)?.clone();
    let weight = cfg.weight()?;
    let case = infer_case(cfg, &init, weight.as_ref());
    let dir = (ModeVector::new(pert.d0.clone()), ModeVector::new(pert.d1.clone()));
    let e_d = sobolev_energy(&spec, &dir.0, &dir.1);
    let t_end = cfg.solver.t_end;
    let mut base = evolve_kirchhoff(&spec, &nl, &init, t_end, &cfg.options(t_end))?;
    let h0 = hamiltonian(&spec, &nl, &init.u, &init.v);
    let nu0 = nl.nu0();
    let r0 = (2.0 * h0 / nu0).sqrt();
    let lmax = spec.max();
    let mut ctx = AgeContext {
        spec,
        nl,
        case,
        init,
        pert,
        base: base.clone(),
        e_d,
        h0,
        rate: 0.0,
        beta: None,
        a0: None,
        b0_radius: None,
        tol: cfg.solver.tol,
        sim_cap: t_end,
        samples: cfg.solver.samples,
    };
    match case {
        LifespanCase::FiniteDimensional => {
            // energy conservation plus the top eigenvalue bound every norm
            let b0 = (lmax * h0).max(lmax * h0 / nu0).max(lmax.powi(3) * h0 / nu0);
            let r = b0.sqrt();
            ctx.b0_radius = Some(r);
            let cb = ConstantsBundle::from_radii(&ctx.nl, h0, r0, r, Some(r));
            ctx.rate = gammas(&cb).regular()?.1;
        }
        LifespanCase::Analytic | LifespanCase::QuasiAnalytic => {
            let w = weight.ok_or(Error::MissingField("weight"))?;
            let cal = calibrate(&ctx.spec, &ctx.nl, &w, &base)?;
            let env = envelope_for(&w, &cal)?;
            ctx.beta = Some(env.beta);
            ctx.rate = 12.0 * env.beta;
            // the reference run must cover every rule time on the grid
            let t_max = ctx
                .pert
                .epsilons
                .iter()
                .filter_map(|&e| lifespan_lower_bound(case, e, ctx.rate, None).ok())
                .map(|l| l.lower_bound)
                .fold(0.0, f64::max);
            if t_max > t_end && t_max.is_finite() {
                base = evolve_kirchhoff(&ctx.spec, &ctx.nl, &ctx.init, t_max, &cfg.options(t_max))?;
                ctx.base = base;
            }
        }
        LifespanCase::NullSolution => {
            if h0 != 0.0 {
                return Err(Error::Config("null-solution case needs zero initial data".into()));
            }
            let eps_max = ctx.pert.epsilons[0];
            let h = ctx
                .pert
                .epsilons
                .iter()
                .map(|&e| {
                    let s = perturbed(&ctx.init, &ctx.pert, e);
                    hamiltonian(&ctx.spec, &ctx.nl, &s.u, &s.v) / (e * e)
                })
                .fold(0.0, f64::max);
            let a0 = null_solution_a0(&ctx.nl, e_d, h, eps_max)
                .ok_or_else(|| hypothesis("null_scaling", format!("no admissible a0 for eps_max = {eps_max}")))?;
            ctx.a0 = Some(a0);
            ctx.rate = null_solution_rate(&ctx.nl, a0, eps_max, e_d)
                .ok_or_else(|| hypothesis("null_scaling", "a0^2 <= G1 E(d)".into()))?;
        }
    }
    Ok(ctx)
}

/// One ε of the life-span experiment. Fails with `HypothesisFailed` naming
/// the first inequality that does not hold.
pub fn age_cell(ctx: &AgeContext, eps: f64) -> Result<AgeRow> {
    let AgeContext { spec, nl, case, .. } = ctx;
    let nu0 = nl.nu0();
    let lifespan = if ctx.rate > 0.0 && ctx.rate.is_finite() {
        lifespan_lower_bound(*case, eps, ctx.rate, None)
            .map_err(|e| hypothesis("epsilon_domain", e.to_string()))?
            .lower_bound
    } else {
        // L₀ = 0: the data flow is linear and global
        f64::INFINITY
    };
    let v0 = perturbed(&ctx.init, &ctx.pert, eps);
    let hv = hamiltonian(spec, nl, &v0.u, &v0.v);
    let e0 = eps * eps * ctx.e_d;
    let le = eps.ln().abs();
    let cb = match case {
        LifespanCase::NullSolution => {
            let r = ctx.a0.unwrap_or(0.0) * eps;
            if !(r * r >= 2.0 * hv / nu0) {
                return Err(hypothesis(
                    "hamiltonian_of_perturbed_data",
                    format!("(a0 eps)^2 = {} < 2H/nu0 = {}", r * r, 2.0 * hv / nu0),
                ));
            }
            ConstantsBundle::from_radii(nl, ctx.h0, r, r, Some(r))
        }
        _ => {
            if !(hv <= 2.0 * ctx.h0) {
                return Err(hypothesis(
                    "hamiltonian_of_perturbed_data",
                    format!("H(v) = {hv} > 2 H0 = {}", 2.0 * ctx.h0),
                ));
            }
            let r0 = (2.0 * ctx.h0 / nu0).sqrt();
            let r = match case {
                LifespanCase::FiniteDimensional => ctx.b0_radius.unwrap_or(0.0),
                _ => {
                    let l0 = nl.max_abs_slope(r0 * r0);
                    let window: Vec<&State> = ctx.base.samples.iter().filter(|s| s.t <= lifespan).collect();
                    let r1u = window.iter().map(|s| r1_quantity(spec, &s.u, &s.v)).fold(0.0, f64::max);
                    let r2u = window.iter().map(|s| r2_quantity(spec, &s.u)).fold(0.0, f64::max);
                    let r = if l0 > 0.0 {
                        (nu0 / (10.0 * l0)).sqrt() * le.powf(0.25)
                    } else {
                        1.01 * r1u.max(r2u)
                    };
                    if !(r1u <= r && r2u <= r) {
                        return Err(hypothesis(
                            "reference_bounds",
                            format!("sampled R1 = {r1u}, R2 = {r2u} exceed {r} on [0, T]"),
                        ));
                    }
                    r
                }
            };
            ConstantsBundle::from_radii(nl, ctx.h0, r0, r, Some(r))
        }
    };
    let gs = gammas(&cb);
    let (g1, g2) = gs.regular()?;
    let t_check = if lifespan.is_finite() { lifespan } else { 0.0 };
    if !regular_smallness_holds(g1, g2, e0, cb.r1, t_check) {
        return Err(hypothesis(
            "regular_smallness",
            format!("E0 G1 exp(G2 T) >= R1^2 at eps = {eps}, T = {lifespan}"),
        ));
    }
    let tg = guaranteed_time(&gs, e0, cb.r1, Regularity::Regular)
        .map_err(|e| hypothesis("regular_smallness", e.to_string()))?;
    let until = lifespan.min(ctx.sim_cap);
    let (max_r1v, esc) = if until > 0.0 {
        let opts = SolveOptions::new(ctx.tol).uniform_grid(0.0, until, ctx.samples);
        let v = evolve_kirchhoff(spec, nl, &v0, until, &opts)?;
        let m = v.samples.iter().map(|s| r1_quantity(spec, &s.u, &s.v)).fold(0.0, f64::max);
        (m, escape_time(spec, &v, 8.0 * cb.r1 * cb.r1).unwrap_or(f64::INFINITY))
    } else {
        (r1_quantity(spec, &v0.u, &v0.v), f64::INFINITY)
    };
    let pass = lifespan <= tg * (1.0 + 1e-12) && max_r1v <= 2.0 * cb.r1 && esc.is_infinite();
    Ok(AgeRow {
        epsilon: eps,
        e_diff_initial: e0,
        r1: cb.r1,
        gamma1: g1,
        gamma2: g2,
        lifespan_bound: lifespan,
        guaranteed_time: tg,
        simulated_until: until,
        max_r1_perturbed: max_r1v,
        escape_time: esc,
        pass,
    })
}

/// Almost-global existence: guaranteed times and closed-form life-span
/// bounds along the ε grid, confirmed by simulation.
pub fn run_age(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let ctx = prepare_age(cfg)?;
    let cells: Vec<(f64, Result<AgeRow>)> = ctx
        .pert
        .epsilons
        .par_iter()
        .map(|&e| (e, age_cell(&ctx, e)))
        .collect();
    let mut res = ExperimentResult::new(
        cfg,
        &[
            "epsilon",
            "e_diff_initial",
            "r1",
            "gamma1",
            "gamma2",
            "lifespan_bound",
            "guaranteed_time",
            "simulated_until",
            "max_r1_perturbed",
            "escape_time",
        ],
    );
    let mut first_err = None;
    let mut threshold = f64::NAN;
    for (eps, cell) in cells.iter().rev() {
        if cell.is_ok() && (threshold.is_nan() || first_err.is_none()) && first_err.is_none() {
            threshold = *eps;
        }
        if let Err(e) = cell {
            if first_err.is_none() {
                first_err = Some(e.clone());
            }
        }
    }
    for (eps, cell) in cells {
        match cell {
            Ok(r) => res.rows.push(Row {
                label: format!("eps={eps}"),
                values: vec![
                    r.epsilon,
                    r.e_diff_initial,
                    r.r1,
                    r.gamma1,
                    r.gamma2,
                    r.lifespan_bound,
                    r.guaranteed_time,
                    r.simulated_until,
                    r.max_r1_perturbed,
                    r.escape_time,
                ],
                verdict: Verdict::of(r.pass),
                note: String::new(),
            }),
            Err(Error::HypothesisFailed { name, detail }) => res.rows.push(Row {
                label: format!("eps={eps}"),
                values: vec![eps, eps * eps * ctx.e_d, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0.0, f64::NAN, f64::NAN],
                verdict: Verdict::Excluded,
                note: format!("{name}: {detail}"),
            }),
            Err(e) => return Err(e),
        }
    }
    let admitted = res.rows.iter().filter(|r| r.verdict != Verdict::Excluded).count();
    if admitted == 0 {
        return Err(first_err.unwrap_or(Error::EmptyTrajectory));
    }
    let ok = res.rows.iter().filter(|r| r.verdict == Verdict::Pass).count();
    res.check(
        "lifespan_within_guaranteed_time",
        ok as f64,
        admitted as f64,
        ok == admitted,
        "rows with T_rule <= T_guaranteed and the perturbed run below 2 R1",
    );
    res.summary.push(("rate".into(), ctx.rate));
    res.summary.push(("epsilon_threshold".into(), threshold));
    if let Some(b) = ctx.beta {
        res.summary.push(("beta".into(), b));
    }
    if let Some(a) = ctx.a0 {
        res.summary.push(("a0".into(), a));
    }
    res.summary.push(("e_d".into(), ctx.e_d));
    Ok(res)
}

/// Growth of the corrected φ-energy against its envelope.
pub fn run_growth(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let (spec, nl) = cfg.problem()?;
    let init = cfg.initial_state(&spec)?;
    let weight = cfg.weight()?.ok_or(Error::MissingField("weight"))?;
    let t_end = cfg.solver.t_end;
    let traj = evolve_kirchhoff(&spec, &nl, &init, t_end, &cfg.options(t_end))?;
    let cal = calibrate(&spec, &nl, &weight, &traj)?;
    let env = envelope_for(&weight, &cal)?;
    let rep = envelope_vs_simulation(&spec, &nl, &traj, &weight, &env)?;
    let chk = verify_supersolution(&env, 3.0, 1000)?;
    let mut res = ExperimentResult::new(cfg, &["t", "log_f_phi", "log_envelope", "margin"]);
    res.rows = rep
        .rows
        .iter()
        .map(|r| Row {
            label: "sample".into(),
            values: vec![r.t, r.log_f_phi, r.log_envelope, r.margin],
            verdict: Verdict::of(r.margin >= 0.0),
            note: String::new(),
        })
        .collect();
    res.check("envelope_ratio", rep.max_ratio, 1.0, rep.max_ratio <= 1.0, "max F_phi/envelope along the run");
    res.check(
        "supersolution",
        chk.relative_margin,
        -1e-9,
        chk.pass,
        "min relative margin of the envelope in the comparison ODE",
    );
    for f in &rep.alpha_fits {
        res.check(
            &format!("interpolation_alpha_{}", f.alpha),
            f.interpolation_ratio,
            1.0 + 1e-9,
            f.interpolation_ratio <= 1.0 + 1e-9,
            "alpha-energy over its interpolation bound",
        );
    }
    res.summary.extend([
        ("c0".to_string(), cal.c0),
        ("c1".to_string(), cal.c1),
        ("f0".to_string(), cal.f0),
        ("beta".to_string(), env.beta),
        ("ratio_at_zero".to_string(), rep.ratio_at_zero),
    ]);
    for f in &rep.alpha_fits {
        res.summary.push((format!("log_b_alpha_{}", f.alpha), f.log_b));
    }
    Ok(res)
}

/// Plain trajectory export.
pub fn run_simulate(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let (spec, nl) = cfg.problem()?;
    let init = cfg.initial_state(&spec)?;
    let weight = cfg.weight()?;
    let t_end = cfg.solver.t_end;
    let opts = cfg.options(t_end).drift_unchecked();
    let traj = evolve_kirchhoff(&spec, &nl, &init, t_end, &opts)?;
    let n = spec.len();
    let mut cols: Vec<String> = vec!["t".into()];
    cols.extend((1..=n).map(|k| format!("u_{k}")));
    cols.extend((1..=n).map(|k| format!("v_{k}")));
    cols.push("H".into());
    cols.push("E".into());
    if weight.is_some() {
        cols.push("log_F_phi".into());
    }
    let colrefs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut res = ExperimentResult::new(cfg, &colrefs);
    for s in traj.grid_states() {
        let mut vals = vec![s.t];
        vals.extend(&s.u.coords);
        vals.extend(&s.v.coords);
        vals.push(hamiltonian(&spec, &nl, &s.u, &s.v));
        vals.push(sobolev_energy(&spec, &s.u, &s.v));
        if let Some(w) = &weight {
            vals.push(log_f_phi(&spec, &nl, &s.u, &s.v, w));
        }
        res.rows.push(Row {
            label: "sample".into(),
            values: vals,
            verdict: Verdict::Info,
            note: String::new(),
        });
    }
    let drift = traj.meta.hamiltonian_drift.unwrap_or(0.0);
    let limit = 1e3 * cfg.solver.tol;
    res.check("hamiltonian_drift", drift, limit, drift <= limit, "max |H - H0| / max(1, H0)");
    res.summary.push(("accepted_steps".into(), traj.meta.accepted_steps as f64));
    res.summary.push(("rejected_steps".into(), traj.meta.rejected_steps as f64));
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    /// Cases whose hypotheses did not hold, so nothing was asserted.
    pub skipped: usize,
    /// Worst ratio (or margin) seen, in the suite's own units.
    pub worst: f64,
    pub detail: String,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.skipped < self.cases.max(1)
    }
}

/// Independent deterministic stream per (suite, case).
pub fn case_rng(seed: u64, suite: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((suite << 40) | case);
    rng
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// `𝓔_α(t) ≤ 𝓔_α(0)·max{1,C₀}/min{1,ν₀}·exp(Λ₀t/ν₀)` for α ∈ {0, 1/4},
/// with `c(t) = a + b sin(ωt + p)`.
pub fn suite_linear_energy(seed: u64, n: usize) -> Result<SuiteOutcome> {
    let out: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 1, i);
            let modes = rng.random_range(1..=8usize);
            let mut lam = uniform_vec(&mut rng, modes, 0.0, 4.0);
            if rng.random_bool(0.2) {
                lam[0] = 0.0;
            }
            lam.sort_by(f64::total_cmp);
            let spec = Spectrum::new(lam)?;
            let a = rng.random_range(0.5..3.0);
            let b = rng.random_range(0.0..0.8) * a;
            let om = rng.random_range(0.2..3.0);
            let ph = rng.random_range(0.0..std::f64::consts::TAU);
            let coef = LinearCoefficient::new(move |t| a + b * (om * t + ph).sin(), a - b, a + b, b * om)?;
            let init = State::new(0.0, uniform_vec(&mut rng, modes, -1.0, 1.0), uniform_vec(&mut rng, modes, -1.0, 1.0));
            let opts = SolveOptions::new(1e-10).uniform_grid(0.0, 10.0, 500);
            let traj = evolve_linear(&spec, &coef, &init, 10.0, &opts)?;
            let mut worst: f64 = 0.0;
            for alpha in [0.0, 0.25] {
                let e0 = alpha_energy(&spec, &init.u, &init.v, alpha);
                for s in &traj.samples {
                    let e = alpha_energy(&spec, &s.u, &s.v, alpha);
                    let bound = e0 * coef.energy_growth_bound(s.t);
                    if bound > 0.0 {
                        worst = worst.max(e / bound);
                    } else if e > 0.0 {
                        worst = f64::INFINITY;
                    }
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(ratio_outcome("linear_energy_bound", &out, 1.0 + 1e-6, "max E_alpha(t)/bound, alpha in {0, 1/4}"))
}

fn ratio_outcome(name: &str, ratios: &[f64], limit: f64, detail: &str) -> SuiteOutcome {
    SuiteOutcome {
        name: name.into(),
        cases: ratios.len(),
        violations: ratios.iter().filter(|&&r| !(r <= limit)).count(),
        skipped: 0,
        worst: ratios.iter().cloned().fold(0.0, f64::max),
        detail: detail.into(),
    }
}

struct FourMode {
    spec: Spectrum,
    nl: Nonlinearity,
    init: State,
    d0: ModeVector,
    d1: ModeVector,
}

fn four_mode(rng: &mut ChaCha8Rng) -> Result<FourMode> {
    let mut lam = uniform_vec(rng, 4, 0.5, 3.0);
    lam.sort_by(f64::total_cmp);
    Ok(FourMode {
        spec: Spectrum::new(lam)?,
        nl: Nonlinearity::affine(rng.random_range(0.5..2.0), rng.random_range(0.1..1.5))?,
        init: State::new(0.0, uniform_vec(rng, 4, -0.5, 0.5), uniform_vec(rng, 4, -0.5, 0.5)),
        d0: ModeVector::new(uniform_vec(rng, 4, -1.0, 1.0)),
        d1: ModeVector::new(uniform_vec(rng, 4, -1.0, 1.0)),
    })
}

/// `E_{(u−v)}(t) ≤ Γ₁E_{(u−v)}(0)exp(Γ₂t)` on `[0, 20]` for 4-mode
/// scenarios and ε ∈ {1e-2, 1e-4}. `gamma2_scale` multiplies `Γ₂`.
pub fn suite_regular_difference(seed: u64, n: usize, gamma2_scale: f64) -> Result<SuiteOutcome> {
    let out: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 2, i);
            let sc = four_mode(&mut rng)?;
            let opts = SolveOptions::new(1e-11).uniform_grid(0.0, 20.0, 2000);
            let u = evolve_kirchhoff(&sc.spec, &sc.nl, &sc.init, 20.0, &opts)?;
            [1e-2, 1e-4]
                .iter()
                .map(|&eps| {
                    let v0 = State::new(0.0, sc.init.u.axpy(eps, &sc.d0), sc.init.v.axpy(eps, &sc.d1));
                    let v = evolve_kirchhoff(&sc.spec, &sc.nl, &v0, 20.0, &opts)?;
                    let cb = pair_constants(&sc.spec, &sc.nl, &u, &v, None)?;
                    let (g1, g2) = gammas(&cb).regular()?;
                    Ok(regular_ratio(&difference_series(&sc.spec, &u, &v), g1, gamma2_scale * g2))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = out.into_iter().flatten().collect();
    let mut o = ratio_outcome("difference_bound_regular", &flat, 1.0 + 1e-3, "max E_diff(t)/(G1 E_diff(0) exp(G2 t))");
    if gamma2_scale != 1.0 {
        o.detail = format!("{} with G2 scaled by {gamma2_scale}", o.detail);
    }
    Ok(o)
}

/// Minimal-regularity bound for 32-mode scenarios at cutoffs 2 and 8, plus
/// the cutoff independence of `Γ₃`, `Γ₄` and the high-frequency term.
pub fn suite_minimal_difference(seed: u64, n: usize) -> Result<SuiteOutcome> {
    let cutoffs = [2.0, 8.0];
    let out: Vec<(f64, bool)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 3, i);
            let spec = Spectrum::new((1..=32).map(|k| 0.5 * k as f64).collect())?;
            let nl = Nonlinearity::affine(rng.random_range(0.5..1.5), rng.random_range(0.05..0.5))?;
            let decay = |rng: &mut ChaCha8Rng, amp: f64| -> Vec<f64> {
                (1..=32).map(|k| amp * rng.random_range(-1.0..1.0) / (k * k) as f64).collect()
            };
            let init = State::new(0.0, decay(&mut rng, 0.3), decay(&mut rng, 0.3));
            let d0 = ModeVector::new(decay(&mut rng, 1.0));
            let d1 = ModeVector::new(decay(&mut rng, 1.0));
            let eps = 1e-3;
            let v0 = State::new(0.0, init.u.axpy(eps, &d0), init.v.axpy(eps, &d1));
            let opts = SolveOptions::new(1e-10).uniform_grid(0.0, 5.0, 500);
            let u = evolve_kirchhoff(&spec, &nl, &init, 5.0, &opts)?;
            let v = evolve_kirchhoff(&spec, &nl, &v0, 5.0, &opts)?;
            let series = difference_series(&spec, &u, &v);
            let e0 = series[0].1;
            let mut worst: f64 = 0.0;
            let mut sets: Vec<GammaSet> = Vec::new();
            let mut highs = Vec::new();
            for &lam in &cutoffs {
                let cb = pair_constants(&spec, &nl, &u, &v, Some(lam))?;
                let gs = gammas(&cb);
                let hu = {
                    let s0 = split(&spec, &init.u, lam)?.high;
                    let s1 = split(&spec, &init.v, lam)?.high;
                    sobolev_energy(&spec, &s0, &s1)
                };
                let hv = {
                    let s0 = split(&spec, &v0.u, lam)?.high;
                    let s1 = split(&spec, &v0.v, lam)?.high;
                    sobolev_energy(&spec, &s0, &s1)
                };
                for &(t, e) in &series {
                    worst = worst.max(e / gs.minimal_bound(e0, hu, hv, t)?);
                }
                highs.push((hu, hv));
                sets.push(gs);
            }
            let (a, b) = (&sets[0], &sets[1]);
            let independent = a.gamma3 == b.gamma3
                && a.gamma4 == b.gamma4
                && highs.iter().all(|&(hu, hv)| {
                    [0.0, 2.5, 5.0]
                        .iter()
                        .all(|&t| a.high_frequency_bound(hu, hv, t) == b.high_frequency_bound(hu, hv, t))
                });
            Ok((worst, independent))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = out.iter().map(|p| p.0).collect();
    let mut o = ratio_outcome(
        "difference_bound_minimal",
        &ratios,
        1.0 + 1e-3,
        "max E_diff(t)/minimal-regularity bound over cutoffs {2, 8}; G3, G4 cutoff independent",
    );
    o.violations += out.iter().filter(|p| !p.1).count();
    Ok(o)
}

/// Randomized interpolation inequality; sequences up to 64 terms with
/// `λ_k ∈ [0,20]`, `a_k ∈ [0,1]`, `b ∈ {1/2,1,2,3}`, both builtin families.
pub fn suite_interpolation(seed: u64, n: usize) -> Result<SuiteOutcome> {
    let bs = [0.5, 1.0, 2.0, 3.0];
    let weights = [Weight::linear(1.0)?, Weight::QuasiAnalytic];
    let mut kb = [[0.0; 4]; 2];
    for (wi, w) in weights.iter().enumerate() {
        for (bi, &b) in bs.iter().enumerate() {
            kb[wi][bi] = sup_power_weight(w, b)?;
        }
    }
    let out: Vec<Option<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 4, i);
            let len = rng.random_range(1..=64usize);
            let lam = uniform_vec(&mut rng, len, 0.0, 20.0);
            let a = uniform_vec(&mut rng, len, 0.0, 1.0);
            let bi = rng.random_range(0..4usize);
            let wi = rng.random_range(0..2usize);
            match interpolate_with_kb(&a, &lam, bs[bi], &weights[wi], kb[wi][bi]) {
                Ok(r) => Ok(Some(r.lhs / r.bound)),
                Err(Error::ZeroE) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = out.iter().flatten().copied().collect();
    let mut o = ratio_outcome("interpolation_inequality", &ratios, 1.0 + 1e-9, "max lhs/bound");
    o.skipped = out.len() - ratios.len();
    o.cases = out.len();
    Ok(o)
}

/// Supersolution substitution and comparison-ODE ordering for random
/// premise constants of one family.
pub fn suite_envelopes(seed: u64, n: usize, quasi_analytic: bool) -> Result<SuiteOutcome> {
    let suite = if quasi_analytic { 6 } else { 5 };
    let out: Vec<(f64, f64, bool)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, suite, i);
            let c0 = rng.random_range(0.05..5.0);
            let c1 = rng.random_range(1e-3..1.0);
            let f0 = c1 * rng.random_range(0.0f64..10.0).exp();
            let env = if quasi_analytic {
                GrowthEnvelope::quasi_analytic(c0, c1, rng.random_range(0.5..3.0), f0)?
            } else {
                GrowthEnvelope::analytic(c0, c1, rng.random_range(0.1..10.0), f0)?
            };
            let chk = verify_supersolution(&env, 3.0, 1000)?;
            let t = 3.0f64.min(env.horizon());
            let sol = integrate_comparison(&env, t, 1e-10)?;
            Ok((chk.relative_margin, comparison_excess(&env, &sol), chk.pass))
        })
        .collect::<Result<_>>()?;
    let bad = out.iter().filter(|p| !p.2 || p.1 > 1e-6).count();
    Ok(SuiteOutcome {
        name: if quasi_analytic { "quasi_analytic_envelope" } else { "analytic_envelope" }.into(),
        cases: out.len(),
        violations: bad,
        skipped: 0,
        worst: out.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        detail: format!(
            "min relative supersolution margin; max comparison excess {:.3e}",
            out.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
        ),
    })
}

/// Runs to the guaranteed time of the smallness hypothesis and checks that
/// the perturbed solution obeys the difference bound and stays below `2R₁`.
pub fn suite_local_existence(seed: u64, n: usize) -> Result<SuiteOutcome> {
    let out: Vec<Option<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 7, i);
            let sc = four_mode(&mut rng)?;
            let horizon = 20.0;
            let u = evolve_kirchhoff(&sc.spec, &sc.nl, &sc.init, horizon, &SolveOptions::new(1e-11).uniform_grid(0.0, horizon, 2000))?;
            let cb = build_constants(&sc.spec, &sc.nl, &u, None)?;
            let gs = gammas(&cb);
            let eps = 1e-4;
            let v0 = State::new(0.0, sc.init.u.axpy(eps, &sc.d0), sc.init.v.axpy(eps, &sc.d1));
            let hv = hamiltonian(&sc.spec, &sc.nl, &v0.u, &v0.v);
            let e0 = sobolev_energy(&sc.spec, &sc.init.u.sub(&v0.u), &sc.init.v.sub(&v0.v));
            if hv > 2.0 * cb.h0 {
                return Ok(None);
            }
            let t = match guaranteed_time(&gs, e0, cb.r1, Regularity::Regular) {
                Ok(t) => t.min(horizon),
                Err(Error::GapTooLarge { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            if !(t > 0.0) {
                return Ok(None);
            }
            let grid: Vec<f64> = u.grid_states().map(|s| s.t).filter(|&s| s <= t).collect();
            let v = evolve_kirchhoff(&sc.spec, &sc.nl, &v0, horizon.min(t.max(grid[grid.len() - 1])), &SolveOptions::new(1e-11).with_grid(grid.clone()))?;
            let (g1, g2) = gs.regular()?;
            let mut worst: f64 = 0.0;
            for (a, b) in u.grid_states().zip(v.grid_states()) {
                let e = sobolev_energy(&sc.spec, &a.u.sub(&b.u), &a.v.sub(&b.v));
                worst = worst.max(e / (g1 * e0 * (g2 * a.t).exp()));
            }
            let r1v = v.samples.iter().map(|s| r1_quantity(&sc.spec, &s.u, &s.v)).fold(0.0, f64::max);
            if r1v > 2.0 * cb.r1 {
                worst = worst.max(f64::INFINITY);
            }
            Ok(Some(worst))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = out.iter().flatten().copied().collect();
    let mut o = ratio_outcome(
        "difference_bound_local_existence",
        &ratios,
        1.0 + 1e-3,
        "max E_diff/(E0 G1 exp(G2 t)) up to the guaranteed time; perturbed run below 2 R1",
    );
    o.skipped = out.len() - ratios.len();
    o.cases = out.len();
    Ok(o)
}

/// The regular smallness inequality holds at `0.999·T` and fails at
/// `1.001·T` for random constants.
pub fn suite_tightness(seed: u64, n: usize) -> Result<SuiteOutcome> {
    let out: Vec<bool> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 8, i);
            let g1 = rng.random_range(1.0..5.0);
            let g2 = rng.random_range(0.01..10.0);
            let r1: f64 = rng.random_range(0.1..3.0);
            let e0 = r1 * r1 / g1 * (-rng.random_range(0.5..30.0f64)).exp();
            let gs = GammaSet {
                gamma1: g1,
                gamma2: Some(g2),
                gamma1_lambda: None,
                gamma2_lambda: None,
                gamma3: 2.0 * g1,
                gamma4: 0.0,
            };
            let t = guaranteed_time(&gs, e0, r1, Regularity::Regular)?;
            Ok(regular_smallness_holds(g1, g2, e0, r1, 0.999 * t) && !regular_smallness_holds(g1, g2, e0, r1, 1.001 * t))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteOutcome {
        name: "guaranteed_time_tightness".into(),
        cases: out.len(),
        violations: out.iter().filter(|&&ok| !ok).count(),
        skipped: 0,
        worst: 0.0,
        detail: "holds at 0.999 T, fails at 1.001 T".into(),
    })
}

/// All property suites with the config's seed; one ledger row per suite.
pub fn run_verify(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let v = &cfg.verify;
    let s = cfg.seed;
    let suites = vec![
        suite_linear_energy(s, v.linear_cases)?,
        suite_regular_difference(s, v.regular_cases, v.gamma2_scale)?,
        suite_minimal_difference(s, v.minimal_cases)?,
        suite_interpolation(s, v.interpolation_cases)?,
        suite_envelopes(s, v.envelope_draws, false)?,
        suite_envelopes(s, v.envelope_draws, true)?,
        suite_local_existence(s, v.local_existence_cases)?,
        suite_tightness(s, v.tightness_cases)?,
    ];
    let mut res = ExperimentResult::new(cfg, &["cases", "violations", "skipped", "worst"]);
    for o in suites {
        res.rows.push(Row {
            label: o.name.clone(),
            values: vec![o.cases as f64, o.violations as f64, o.skipped as f64, o.worst],
            verdict: Verdict::of(o.pass()),
            note: o.detail.clone(),
        });
        res.check(&o.name, o.violations as f64, 0.0, o.pass(), format!("{}; worst {:.6e}", o.detail, o.worst));
    }
    Ok(res)
}
