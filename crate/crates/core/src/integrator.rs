//! Dormand–Prince 5(4) with PI step-size control and the classical
//! fourth-order continuous extension.

use crate::error::{Error, Result};

/// A first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step; `None` means `|t_end − t0|`.
    pub h_max: Option<f64>,
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 50_000_000,
            h_max: None,
        }
    }
}

/// Coefficients of the continuous extension on one accepted step.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Strictly increasing times: requested grid plus every accepted step end.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Index into `times` for each requested grid time.
    pub grid_index: Vec<usize>,
    pub dense: Vec<DenseSegment>,
    pub stats: SolveStats,
}

/// What the step observer asks the solver to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Integrates forward from `t0` to `t_end`, sampling at every accepted step and
/// at each time in `grid` (which must be sorted and lie in `[t0, t_end]`).
///
/// `observe` sees every accepted step end and may stop the integration early
/// or reject the state with an error.
#[allow(clippy::too_many_arguments)]
pub fn solve<S, O>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    grid: &[f64],
    ctrl: &StepControl,
    keep_dense: bool,
    mut observe: O,
) -> Result<Solution>
where
    S: OdeSystem + ?Sized,
    O: FnMut(f64, &[f64]) -> Result<Flow>,
{
    let n = sys.dim();
    assert_eq!(y0.len(), n);
    if !(t_end > t0) {
        return Err(Error::InvalidSolverSettings(format!(
            "t_end = {t_end} must exceed t0 = {t0}"
        )));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.iter().any(|&g| g < t0 || g > t_end) {
        return Err(Error::InvalidSolverSettings("sample grid must be sorted within [t0, t_end]".into()));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { t: t0 });
    }

    let mut sol = Solution {
        times: vec![t0],
        states: vec![y0.to_vec()],
        grid_index: Vec::with_capacity(grid.len()),
        dense: Vec::new(),
        stats: SolveStats::default(),
    };
    let mut gi = 0;
    while gi < grid.len() && grid[gi] <= t0 {
        sol.grid_index.push(0);
        gi += 1;
    }

    let span = t_end - t0;
    let h_max = ctrl.h_max.unwrap_or(span).min(span);

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err_vec = vec![0.0; n];
    sys.rhs(t, &y, &mut k[0]);
    sol.stats.rhs_evals += 1;

    let mut h = initial_step(sys, t, &y, &k[0], ctrl, h_max, &mut sol.stats);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;

    loop {
        if steps >= ctrl.max_steps {
            return Err(Error::InvalidSolverSettings(format!(
                "exceeded {} steps at t = {t}",
                ctrl.max_steps
            )));
        }
        steps += 1;
        let mut last = false;
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t });
        }

        // stages
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k[0][i];
        }
        sys.rhs(t + C2 * h, &ytmp, &mut k[1]);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        sys.rhs(t + C3 * h, &ytmp, &mut k[2]);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        sys.rhs(t + C4 * h, &ytmp, &mut k[3]);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        sys.rhs(t + C5 * h, &ytmp, &mut k[4]);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        sys.rhs(t + h, &ytmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i]
                + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        let (head, tail) = k.split_at_mut(6);
        sys.rhs(t + h, &ynew, &mut tail[0]);
        let k7 = &tail[0];
        sol.stats.rhs_evals += 6;

        let mut err = 0.0;
        for i in 0..n {
            err_vec[i] = h
                * (E1 * head[0][i] + E3 * head[2][i] + E4 * head[3][i] + E5 * head[4][i]
                    + E6 * head[5][i]
                    + E7 * k7[i]);
            let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(ynew[i].abs());
            err += (err_vec[i] / sc).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            if ynew.iter().any(|v| !v.is_finite()) && h <= 1e-10 * span {
                return Err(Error::NonFiniteState { t: t + h });
            }
            h *= FAC_MIN;
            last_rejected = true;
            sol.stats.rejected += 1;
            continue;
        }

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = (h / fac).min(h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);

            if ynew.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState { t: t + h });
            }

            let t_new = if last { t_end } else { t + h };
            let seg = dense_segment(t, h, &y, &ynew, head, k7);
            while gi < grid.len() && grid[gi] <= t_new {
                let g = grid[gi];
                if g >= t_new {
                    sol.grid_index.push(sol.times.len());
                } else {
                    let last_t = *sol.times.last().unwrap();
                    if g > last_t {
                        let mut yg = vec![0.0; n];
                        seg.eval(g, &mut yg);
                        sol.times.push(g);
                        sol.states.push(yg);
                    }
                    sol.grid_index.push(sol.times.len() - 1);
                }
                gi += 1;
            }
            sol.times.push(t_new);
            sol.states.push(ynew.clone());
            if keep_dense {
                sol.dense.push(seg);
            }
            sol.stats.accepted += 1;

            // FSAL
            std::mem::swap(&mut head[0], &mut tail[0]);
            std::mem::swap(&mut y, &mut ynew);
            t = t_new;
            last_rejected = false;

            if observe(t, &y)? == Flow::Stop || last {
                break;
            }
            h = h_new;
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
            sol.stats.rejected += 1;
        }
    }
    Ok(sol)
}

fn dense_segment(t: f64, h: f64, y: &[f64], ynew: &[f64], k: &[Vec<f64>], k7: &[f64]) -> DenseSegment {
    let n = y.len();
    let mut r = [
        y.to_vec(),
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    ];
    for i in 0..n {
        let ydiff = ynew[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - h * k7[i] - bspl;
        r[4][i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k7[i]);
    }
    DenseSegment { t0: t, h, rcont: r }
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    ctrl: &StepControl,
    h_max: f64,
    stats: &mut SolveStats,
) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| ctrl.atol + ctrl.rtol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(h_max);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h * b).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t + h, &y1, &mut f1);
    stats.rhs_evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (1e-6f64).max(h * 1e-3)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h).min(h1).min(h_max)
}
