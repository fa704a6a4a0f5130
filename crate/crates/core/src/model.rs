//! The nonlinearity `m` (with primitive `M` and slope `m'`) and the weight
//! family `φ` used by Sobolev–Gevrey norms.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Grid size used for hyperbolicity spot checks and range maxima.
pub const RANGE_GRID: usize = 4096;

const QUADRATURE_TOL: f64 = 1e-12;

#[derive(Clone)]
pub enum NonlinearityKind {
    /// `m ≡ ν₀`.
    Constant,
    /// `m(σ) = ν₀ + slope·σ`, `slope ≥ 0`.
    Affine { slope: f64 },
    /// User-supplied `C¹` function.
    Custom {
        label: String,
        m: ScalarFn,
        m_prime: Option<ScalarFn>,
    },
}

/// Strictly hyperbolic nonlinearity `m ≥ ν₀ > 0`.
#[derive(Clone)]
pub struct Nonlinearity {
    nu0: f64,
    kind: NonlinearityKind,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Nonlinearity");
        d.field("nu0", &self.nu0);
        match &self.kind {
            NonlinearityKind::Constant => d.field("family", &"constant"),
            NonlinearityKind::Affine { slope } => d.field("family", &"affine").field("slope", slope),
            NonlinearityKind::Custom { label, .. } => d.field("family", label),
        };
        d.finish()
    }
}

/// JSON form of the builtin nonlinearities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Constant {
        nu0: f64,
    },
    Affine {
        nu0: f64,
        #[serde(default = "one")]
        slope: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl TryFrom<&NonlinearitySpec> for Nonlinearity {
    type Error = Error;

    fn try_from(s: &NonlinearitySpec) -> Result<Self> {
        match *s {
            NonlinearitySpec::Constant { nu0 } => Nonlinearity::constant(nu0),
            NonlinearitySpec::Affine { nu0, slope } => Nonlinearity::affine(nu0, slope),
        }
    }
}

fn check_nu0(nu0: f64) -> Result<()> {
    if !(nu0 > 0.0 && nu0.is_finite()) {
        return Err(Error::InvalidNonlinearity(format!("nu0 must be positive, got {nu0}")));
    }
    Ok(())
}

impl Nonlinearity {
    pub fn constant(nu0: f64) -> Result<Self> {
        check_nu0(nu0)?;
        Ok(Self {
            nu0,
            kind: NonlinearityKind::Constant,
        })
    }

    /// `m(σ) = ν₀ + slope·σ`. The concrete string model is `affine(1.0, 1.0)`.
    pub fn affine(nu0: f64, slope: f64) -> Result<Self> {
        check_nu0(nu0)?;
        if !(slope >= 0.0 && slope.is_finite()) {
            return Err(Error::InvalidNonlinearity(format!(
                "affine slope must be nonnegative, got {slope}"
            )));
        }
        Ok(Self {
            nu0,
            kind: NonlinearityKind::Affine { slope },
        })
    }

    /// Custom nonlinearity. `m ≥ ν₀` is spot-checked on a grid of
    /// `[0, check_range]`; when `m_prime` is absent the slope is taken by
    /// central differences.
    pub fn custom<M>(
        label: impl Into<String>,
        nu0: f64,
        m: M,
        m_prime: Option<ScalarFn>,
        check_range: f64,
    ) -> Result<Self>
    where
        M: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_nu0(nu0)?;
        let nl = Self {
            nu0,
            kind: NonlinearityKind::Custom {
                label: label.into(),
                m: Arc::new(m),
                m_prime,
            },
        };
        nl.check_hyperbolic(check_range)?;
        Ok(nl)
    }

    /// Spot-checks `m(σ) ≥ ν₀` on a uniform grid of `[0, range]`.
    pub fn check_hyperbolic(&self, range: f64) -> Result<()> {
        let range = range.max(0.0);
        for i in 0..=RANGE_GRID {
            let s = range * i as f64 / RANGE_GRID as f64;
            let v = self.m_raw(s);
            if !(v >= self.nu0) {
                return Err(Error::HyperbolicityViolated {
                    sigma: s,
                    value: v,
                    nu0: self.nu0,
                });
            }
        }
        Ok(())
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn family(&self) -> &str {
        match &self.kind {
            NonlinearityKind::Constant => "constant",
            NonlinearityKind::Affine { .. } => "affine",
            NonlinearityKind::Custom { label, .. } => label,
        }
    }

    /// JSON form, when the family is a builtin.
    pub fn spec(&self) -> Option<NonlinearitySpec> {
        match self.kind {
            NonlinearityKind::Constant => Some(NonlinearitySpec::Constant { nu0: self.nu0 }),
            NonlinearityKind::Affine { slope } => Some(NonlinearitySpec::Affine {
                nu0: self.nu0,
                slope,
            }),
            NonlinearityKind::Custom { .. } => None,
        }
    }

    /// `m(σ)` without the sign check; used on hot paths where `σ` is a sum of squares.
    #[inline]
    pub fn m_raw(&self, sigma: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Constant => self.nu0,
            NonlinearityKind::Affine { slope } => self.nu0 + slope * sigma,
            NonlinearityKind::Custom { m, .. } => m(sigma),
        }
    }

    pub fn m_value(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        Ok(self.m_raw(sigma))
    }

    pub fn m_slope(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        Ok(self.slope_raw(sigma))
    }

    fn slope_raw(&self, sigma: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Constant => 0.0,
            NonlinearityKind::Affine { slope } => *slope,
            NonlinearityKind::Custom { m, m_prime, .. } => match m_prime {
                Some(d) => d(sigma),
                None => {
                    let h = 1e-6 * sigma.max(1.0);
                    if sigma >= h {
                        (m(sigma + h) - m(sigma - h)) / (2.0 * h)
                    } else {
                        (m(sigma + h) - m(sigma)) / h
                    }
                }
            },
        }
    }

    /// Primitive `M(σ) = ∫₀^σ m(s) ds`.
    #[allow(non_snake_case)]
    pub fn M_value(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        Ok(self.primitive_raw(sigma))
    }

    #[inline]
    pub(crate) fn primitive_raw(&self, sigma: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Constant => self.nu0 * sigma,
            NonlinearityKind::Affine { slope } => self.nu0 * sigma + 0.5 * slope * sigma * sigma,
            NonlinearityKind::Custom { m, .. } => {
                if sigma == 0.0 {
                    0.0
                } else {
                    adaptive_simpson(&**m, 0.0, sigma, QUADRATURE_TOL)
                }
            }
        }
    }

    /// `C₀ = max{m(σ) : 0 ≤ σ ≤ upper}`.
    pub fn max_m(&self, upper: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Constant => self.nu0,
            NonlinearityKind::Affine { slope } => self.nu0 + slope * upper.max(0.0),
            NonlinearityKind::Custom { .. } => range_max(|s| self.m_raw(s), 0.0, upper.max(0.0)),
        }
    }

    /// `L₀ = max{|m'(σ)| : 0 ≤ σ ≤ upper}`.
    pub fn max_abs_slope(&self, upper: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Constant => 0.0,
            NonlinearityKind::Affine { slope } => slope,
            NonlinearityKind::Custom { .. } => {
                range_max(|s| self.slope_raw(s).abs(), 0.0, upper.max(0.0))
            }
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) {
        return Err(Error::NegativeSigma(sigma));
    }
    Ok(())
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Maximum of a continuous function on `[a, b]`: uniform grid followed by
/// golden-section refinement around the best node.
pub fn range_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return f(a);
    }
    let h = (b - a) / RANGE_GRID as f64;
    let mut best_i = 0;
    let mut best = f(a);
    for i in 1..=RANGE_GRID {
        let v = f(a + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + h * best_i.saturating_sub(1) as f64;
    let hi = (a + h * (best_i + 1) as f64).min(b);
    best.max(golden_max(&f, lo, hi, 80))
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// Regularity class a weight describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightClass {
    Sobolev,
    Analytic,
    QuasiAnalytic,
    Unclassified,
}

#[derive(Clone)]
pub struct CustomWeight {
    label: String,
    phi: ScalarFn,
}

/// Increasing weight `φ` with `φ(0) = 0`.
#[derive(Clone)]
pub enum Weight {
    /// `φ ≡ 0`: plain Sobolev spaces.
    Zero,
    /// `φ(σ) = r₀σ`: analytic data with radius `r₀`.
    Linear { r0: f64 },
    /// `φ(σ) = σ / log(2 + σ)`.
    QuasiAnalytic,
    Custom(CustomWeight),
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Zero => write!(f, "Weight::Zero"),
            Weight::Linear { r0 } => write!(f, "Weight::Linear {{ r0: {r0} }}"),
            Weight::QuasiAnalytic => write!(f, "Weight::QuasiAnalytic"),
            Weight::Custom(c) => write!(f, "Weight::Custom({})", c.label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Zero,
    Linear { r0: f64 },
    QuasiAnalytic,
}

impl TryFrom<&WeightSpec> for Weight {
    type Error = Error;

    fn try_from(s: &WeightSpec) -> Result<Self> {
        match *s {
            WeightSpec::Zero => Ok(Weight::Zero),
            WeightSpec::Linear { r0 } => Weight::linear(r0),
            WeightSpec::QuasiAnalytic => Ok(Weight::QuasiAnalytic),
        }
    }
}

impl Weight {
    pub fn linear(r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidWeight(format!("r0 must be positive, got {r0}")));
        }
        Ok(Weight::Linear { r0 })
    }

    /// Custom weight. Rejected unless `φ(0) = 0` and `φ` is strictly
    /// increasing on a uniform grid of `[0, check_range]`.
    pub fn custom<F>(label: impl Into<String>, phi: F, check_range: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        if phi(0.0).abs() > 1e-12 {
            return Err(Error::InvalidWeight(format!("{label}: phi(0) must be 0")));
        }
        let mut prev = phi(0.0);
        for i in 1..=RANGE_GRID {
            let s = check_range * i as f64 / RANGE_GRID as f64;
            let v = phi(s);
            if !(v > prev) {
                return Err(Error::InvalidWeight(format!(
                    "{label}: not strictly increasing near sigma = {s}"
                )));
            }
            prev = v;
        }
        Ok(Weight::Custom(CustomWeight {
            label,
            phi: Arc::new(phi),
        }))
    }

    pub fn spec(&self) -> Option<WeightSpec> {
        match *self {
            Weight::Zero => Some(WeightSpec::Zero),
            Weight::Linear { r0 } => Some(WeightSpec::Linear { r0 }),
            Weight::QuasiAnalytic => Some(WeightSpec::QuasiAnalytic),
            Weight::Custom(_) => None,
        }
    }

    #[inline]
    pub fn phi(&self, sigma: f64) -> f64 {
        match self {
            Weight::Zero => 0.0,
            Weight::Linear { r0 } => r0 * sigma,
            Weight::QuasiAnalytic => sigma / (2.0 + sigma).ln(),
            Weight::Custom(c) => (c.phi)(sigma),
        }
    }

    /// Builtin families are classified from their closed form: the linear and
    /// `σ/log(2+σ)` weights both make `∫ φ(σ)/σ² dσ` diverge.
    pub fn class(&self) -> WeightClass {
        match self {
            Weight::Zero => WeightClass::Sobolev,
            Weight::Linear { .. } => WeightClass::Analytic,
            Weight::QuasiAnalytic => WeightClass::QuasiAnalytic,
            Weight::Custom(_) => WeightClass::Unclassified,
        }
    }

    pub fn phi_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::NegativeSigma(y));
        }
        match self {
            Weight::Zero => Err(Error::ZeroWeightNotInvertible),
            Weight::Linear { r0 } => Ok(y / r0),
            _ if y == 0.0 => Ok(0.0),
            _ => self.bisect_inverse(y),
        }
    }

    fn bisect_inverse(&self, y: f64) -> Result<f64> {
        let tol = 1e-12 * y.max(1.0);
        let mut lo = 0.0;
        let mut hi = y.max(1.0);
        while self.phi(hi) < y {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                return Err(Error::InvalidWeight(format!("phi does not reach {y}")));
            }
        }
        loop {
            let mid = 0.5 * (lo + hi);
            let v = self.phi(mid);
            if (v - y).abs() <= tol || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if v < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
}

/// Smallest grid-certified `c₂` with `φ⁻¹(y) ≤ c₂·y·log(2+y)` on a log-spaced
/// grid of `[1e-6, y_max]`, inflated by 5%.
pub fn inv_phi_majorant_c2(weight: &Weight, y_max: f64) -> Result<f64> {
    if !matches!(weight, Weight::QuasiAnalytic) {
        return Err(Error::WrongFamily {
            expected: "quasi_analytic",
        });
    }
    let y_min = 1e-6;
    if !(y_max > y_min) {
        return Err(Error::InvalidWeight(format!("y_max must exceed {y_min}, got {y_max}")));
    }
    const N: usize = 20_000;
    let (l0, l1) = (y_min.ln(), y_max.ln());
    let mut worst: f64 = 0.0;
    for i in 0..=N {
        let y = (l0 + (l1 - l0) * i as f64 / N as f64).exp();
        let r = weight.phi_inverse(y)? / (y * (2.0 + y).ln());
        worst = worst.max(r);
    }
    Ok(1.05 * worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn affine_values() {
        let nl = Nonlinearity::affine(1.0, 1.0).unwrap();
        assert_eq!(nl.m_value(1.0).unwrap(), 2.0);
        assert_eq!(nl.M_value(1.0).unwrap(), 1.5);
        assert_eq!(nl.m_slope(3.0).unwrap(), 1.0);
        assert_eq!(nl.M_value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_values() {
        let nl = Nonlinearity::constant(0.7).unwrap();
        assert!((nl.M_value(3.0).unwrap() - 2.1).abs() < 1e-15);
        assert_eq!(nl.m_slope(2.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_sigma_rejected() {
        let nl = Nonlinearity::constant(1.0).unwrap();
        assert_eq!(nl.m_value(-1.0), Err(Error::NegativeSigma(-1.0)));
        assert_eq!(nl.M_value(-0.5), Err(Error::NegativeSigma(-0.5)));
    }

    #[test]
    fn invalid_parameters() {
        assert!(Nonlinearity::constant(0.0).is_err());
        assert!(Nonlinearity::affine(1.0, -1.0).is_err());
        assert!(Weight::linear(0.0).is_err());
    }

    #[test]
    fn custom_quadrature_matches_closed_form() {
        // m(σ) = 1 + sin²σ, M(σ) = 3σ/2 − sin(2σ)/4
        let nl = Nonlinearity::custom("sin2", 1.0, |s: f64| 1.0 + s.sin().powi(2), None, 10.0).unwrap();
        for s in [0.1f64, 1.0, 2.5, 7.0] {
            let exact = 1.5 * s - (2.0 * s).sin() / 4.0;
            assert!((nl.M_value(s).unwrap() - exact).abs() < 1e-11, "sigma = {s}");
            let slope = (2.0 * s).sin();
            assert!((nl.m_slope(s).unwrap() - slope).abs() < 1e-6);
        }
        let l0 = nl.max_abs_slope(10.0);
        assert!((l0 - 1.0).abs() < 1e-9);
        let c0 = nl.max_m(10.0);
        assert!((c0 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn custom_rejects_non_hyperbolic() {
        let r = Nonlinearity::custom("dip", 1.0, |s: f64| 1.0 + (s - 1.0).powi(2) - 0.5, None, 3.0);
        assert!(matches!(r, Err(Error::HyperbolicityViolated { .. })));
    }

    #[test]
    fn nonlinearity_json() {
        let s: NonlinearitySpec = serde_json::from_str(r#"{"family":"affine","nu0":1.0}"#).unwrap();
        assert_eq!(s, NonlinearitySpec::Affine { nu0: 1.0, slope: 1.0 });
        let nl = Nonlinearity::try_from(&s).unwrap();
        assert_eq!(nl.m_value(2.0).unwrap(), 3.0);
        assert!(serde_json::from_str::<NonlinearitySpec>(r#"{"family":"affine","nu0":1.0,"bogus":2}"#).is_err());
        let w: WeightSpec = serde_json::from_str(r#"{"family":"linear","r0":2.0}"#).unwrap();
        assert_eq!(w, WeightSpec::Linear { r0: 2.0 });
        let w: WeightSpec = serde_json::from_str(r#"{"family":"quasi_analytic"}"#).unwrap();
        assert_eq!(w, WeightSpec::QuasiAnalytic);
    }

    #[test]
    fn phi_inverse_examples() {
        let w = Weight::linear(2.0).unwrap();
        assert_eq!(w.phi_inverse(6.0).unwrap(), 3.0);
        let qa = Weight::QuasiAnalytic;
        assert_eq!(qa.phi_inverse(0.0).unwrap(), 0.0);
        let s = qa.phi_inverse(10.0).unwrap();
        assert!((qa.phi(s) - 10.0).abs() <= 1e-11);
        assert_eq!(Weight::Zero.phi_inverse(1.0), Err(Error::ZeroWeightNotInvertible));
    }

    #[test]
    fn custom_weight_validation() {
        assert!(Weight::custom("flat", |s: f64| s.min(1.0), 5.0).is_err());
        assert!(Weight::custom("shifted", |s: f64| s + 1.0, 5.0).is_err());
        let w = Weight::custom("sqrt", |s: f64| s.sqrt(), 5.0).unwrap();
        let s = w.phi_inverse(3.0).unwrap();
        assert!((s - 9.0).abs() < 1e-9);
        assert_eq!(w.class(), WeightClass::Unclassified);
    }

    #[test]
    fn weight_classes() {
        assert_eq!(Weight::Zero.class(), WeightClass::Sobolev);
        assert_eq!(Weight::linear(1.0).unwrap().class(), WeightClass::Analytic);
        assert_eq!(Weight::QuasiAnalytic.class(), WeightClass::QuasiAnalytic);
    }

    /// Independent dense-grid maximization of φ⁻¹(y)/(y log(2+y)), with φ⁻¹
    /// evaluated through the parametrization y = φ(σ) rather than bisection.
    fn c2_oracle(y_max: f64) -> f64 {
        let qa = Weight::QuasiAnalytic;
        let mut worst: f64 = 0.0;
        let s_max = qa.phi_inverse(y_max).unwrap();
        let n = 200_000;
        for i in 1..=n {
            let s = s_max * (i as f64 / n as f64).powi(3);
            let y = qa.phi(s);
            if y < 1e-6 {
                continue;
            }
            worst = worst.max(s / (y * (2.0 + y).ln()));
        }
        worst
    }

    #[test]
    fn c2_majorant() {
        let qa = Weight::QuasiAnalytic;
        let c2 = inv_phi_majorant_c2(&qa, 1e3).unwrap();
        assert!(c2 >= 1.0);
        let oracle = c2_oracle(1e3);
        assert!((c2 / 1.05 - oracle).abs() < 1e-4 * oracle, "{c2} vs {oracle}");
        for y in [1e-3, 0.5, 1.0, 7.0, 123.0, 999.0] {
            assert!(qa.phi_inverse(y).unwrap() / (y * (2.0 + y).ln()) <= c2);
        }
        assert!(matches!(
            inv_phi_majorant_c2(&Weight::linear(1.0).unwrap(), 10.0),
            Err(Error::WrongFamily { .. })
        ));
    }

    proptest! {
        #[test]
        fn primitive_monotone_and_coercive(nu0 in 0.1f64..3.0, slope in 0.0f64..4.0, a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let nl = Nonlinearity::affine(nu0, slope).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(nl.M_value(lo).unwrap() <= nl.M_value(hi).unwrap());
            prop_assert!(nl.M_value(hi).unwrap() >= nu0 * hi * (1.0 - 1e-15));
        }

        #[test]
        fn inverse_monotone_and_exact(y1 in 0.0f64..500.0, y2 in 0.0f64..500.0, r0 in 0.1f64..10.0) {
            let qa = Weight::QuasiAnalytic;
            let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
            prop_assert!(qa.phi_inverse(lo).unwrap() <= qa.phi_inverse(hi).unwrap());
            let x = qa.phi_inverse(hi).unwrap();
            prop_assert!((qa.phi(x) - hi).abs() <= 1e-12 * hi.max(1.0));
            let lin = Weight::linear(r0).unwrap();
            prop_assert!((lin.phi_inverse(hi).unwrap() * r0 - hi).abs() <= 1e-12 * hi.max(1e-300));
        }
    }
}
