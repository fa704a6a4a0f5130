//! Diagonal model of the operator `A` through its eigenvalues.
//!
//! `A e_k = λ_k² e_k`, so every fractional power `A^α` acts on coordinates
//! as multiplication by `λ_k^{2α}`. Squared norms `|A^α z|²` therefore carry
//! the factor `λ_k^{4α}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Weight;

/// Finite, nondecreasing list of nonnegative frequencies `λ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Spectrum {
    type Error = Error;

    fn try_from(eigenvalues: Vec<f64>) -> Result<Self> {
        Spectrum::new(eigenvalues)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.eigenvalues
    }
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidSpectrum("empty eigenvalue list".into()));
        }
        for (k, &l) in eigenvalues.iter().enumerate() {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalue {k} is {l}, expected a finite nonnegative number"
                )));
            }
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpectrum("eigenvalues must be nondecreasing".into()));
        }
        Ok(Self { eigenvalues })
    }

    /// `λ_k = k`, the vibrating-string spectrum.
    pub fn string_like(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|k| k as f64).collect())
    }

    /// `λ_k = √k`.
    pub fn sqrt_like(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|k| (k as f64).sqrt()).collect())
    }

    /// Lacunary `λ_k = 2^k`.
    pub fn lacunary(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|k| 2f64.powi(k as i32)).collect())
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum is nonempty")
    }

    /// Multiplier `λ_k^{2α}` of `A^α` at mode `k`.
    pub fn power_weight(&self, k: usize, alpha: f64) -> f64 {
        pow_weight(self.eigenvalues[k], 2.0 * alpha)
    }

    /// `|A^α z|² = Σ λ_k^{4α} z_k²`.
    pub fn norm_sq(&self, z: &[f64], alpha: f64) -> f64 {
        debug_assert_eq!(z.len(), self.len());
        self.eigenvalues
            .iter()
            .zip(z)
            .map(|(&l, &c)| pow_weight(l, 4.0 * alpha) * c * c)
            .sum()
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// `λ^p` with the convention `0^0 = 1`.
pub(crate) fn pow_weight(lambda: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        lambda
    } else if p == 2.0 {
        lambda * lambda
    } else {
        lambda.powf(p)
    }
}

/// Coordinates `⟨z, e_k⟩` of a vector in the eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeVector {
    pub coords: Vec<f64>,
}

impl ModeVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coords: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Squared `H`-norm.
    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn add(&self, other: &ModeVector) -> ModeVector {
        ModeVector::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ModeVector) -> ModeVector {
        ModeVector::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> ModeVector {
        ModeVector::new(self.coords.iter().map(|a| a * s).collect())
    }

    pub fn axpy(&self, s: f64, dir: &ModeVector) -> ModeVector {
        ModeVector::new(self.coords.iter().zip(&dir.coords).map(|(a, d)| a + s * d).collect())
    }
}

impl From<Vec<f64>> for ModeVector {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

/// Low/high frequency decomposition at a cutoff; ties go to the low part.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySplit {
    pub cutoff: f64,
    pub low: ModeVector,
    pub high: ModeVector,
}

/// Realizes `A^α z` in coordinates.
pub fn apply_power(spec: &Spectrum, z: &ModeVector, alpha: f64) -> Result<ModeVector> {
    spec.check_len(z.len())?;
    let coords = spec
        .eigenvalues()
        .iter()
        .zip(&z.coords)
        .enumerate()
        .map(|(k, (&l, &c))| {
            if l == 0.0 && alpha < 0.0 {
                if c != 0.0 {
                    return Err(Error::NegativePowerOnKernel { alpha, mode: k });
                }
                return Ok(0.0);
            }
            Ok(pow_weight(l, 2.0 * alpha) * c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeVector::new(coords))
}

pub fn split(spec: &Spectrum, z: &ModeVector, cutoff: f64) -> Result<FrequencySplit> {
    if !(cutoff > 0.0) {
        return Err(Error::NonpositiveCutoff(cutoff));
    }
    spec.check_len(z.len())?;
    let mut low = ModeVector::zeros(z.len());
    let mut high = ModeVector::zeros(z.len());
    for (k, (&l, &c)) in spec.eigenvalues().iter().zip(&z.coords).enumerate() {
        if l <= cutoff {
            low.coords[k] = c;
        } else {
            high.coords[k] = c;
        }
    }
    Ok(FrequencySplit { cutoff, low, high })
}

/// `Σ_k λ_k^{4α} exp(φ(λ_k)) ⟨z, e_k⟩²`.
pub fn gevrey_norm_sq(spec: &Spectrum, z: &ModeVector, weight: &Weight, alpha: f64) -> Result<f64> {
    spec.check_len(z.len())?;
    Ok(spec
        .eigenvalues()
        .iter()
        .zip(&z.coords)
        .map(|(&l, &c)| {
            if c == 0.0 {
                0.0
            } else {
                pow_weight(l, 4.0 * alpha) * weight.phi(l).exp() * c * c
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mv(c: &[f64]) -> ModeVector {
        ModeVector::new(c.to_vec())
    }

    #[test]
    fn spectrum_rejects_bad_input() {
        assert!(Spectrum::new(vec![]).is_err());
        assert!(Spectrum::new(vec![-1.0]).is_err());
        assert!(Spectrum::new(vec![2.0, 1.0]).is_err());
        assert!(Spectrum::new(vec![f64::NAN]).is_err());
        assert!(Spectrum::new(vec![0.0, 0.0, 3.0]).is_ok());
    }

    #[test]
    fn spectrum_json_is_a_plain_array() {
        let s = Spectrum::new(vec![0.0, 1.5, 2.0]).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, "[0.0,1.5,2.0]");
        let back: Spectrum = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Spectrum>("[3.0,1.0]").is_err());
    }

    #[test]
    fn generators() {
        assert_eq!(Spectrum::string_like(3).unwrap().eigenvalues(), &[1.0, 2.0, 3.0]);
        assert_eq!(Spectrum::lacunary(3).unwrap().eigenvalues(), &[2.0, 4.0, 8.0]);
        assert_eq!(Spectrum::sqrt_like(4).unwrap().eigenvalues()[3], 2.0);
    }

    #[test]
    fn apply_power_examples() {
        let s = Spectrum::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(apply_power(&s, &mv(&[3.0, 4.0]), 0.5).unwrap(), mv(&[3.0, 4.0]));
        let s = Spectrum::new(vec![2.0]).unwrap();
        assert_eq!(apply_power(&s, &mv(&[1.0]), 0.5).unwrap(), mv(&[2.0]));
        let s = Spectrum::new(vec![0.0, 3.0]).unwrap();
        let z = mv(&[1.5, -2.0]);
        assert_eq!(apply_power(&s, &z, 0.0).unwrap(), z);
    }

    #[test]
    fn negative_power_on_kernel() {
        let s = Spectrum::new(vec![0.0, 2.0]).unwrap();
        assert_eq!(
            apply_power(&s, &mv(&[1.0, 1.0]), -0.5),
            Err(Error::NegativePowerOnKernel { alpha: -0.5, mode: 0 })
        );
        assert_eq!(apply_power(&s, &mv(&[0.0, 1.0]), -0.5).unwrap(), mv(&[0.0, 0.5]));
    }

    #[test]
    fn length_mismatch() {
        let s = Spectrum::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            apply_power(&s, &mv(&[1.0]), 1.0),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn split_examples() {
        let s = Spectrum::new(vec![1.0, 2.0, 3.0]).unwrap();
        let sp = split(&s, &mv(&[1.0, 1.0, 1.0]), 2.0).unwrap();
        assert_eq!(sp.low, mv(&[1.0, 1.0, 0.0]));
        assert_eq!(sp.high, mv(&[0.0, 0.0, 1.0]));

        let sp = split(&s, &mv(&[1.0, 2.0, 3.0]), 3.0).unwrap();
        assert_eq!(sp.high, ModeVector::zeros(3));

        let s = Spectrum::new(vec![0.0, 5.0]).unwrap();
        let sp = split(&s, &mv(&[2.0, 3.0]), 1.0).unwrap();
        assert_eq!(sp.low, mv(&[2.0, 0.0]));
        assert_eq!(sp.high, mv(&[0.0, 3.0]));

        assert_eq!(split(&s, &mv(&[2.0, 3.0]), 0.0), Err(Error::NonpositiveCutoff(0.0)));
    }

    #[test]
    fn gevrey_examples() {
        let s = Spectrum::new(vec![1.0, 2.0]).unwrap();
        let z = mv(&[3.0, 4.0]);
        assert_eq!(gevrey_norm_sq(&s, &z, &Weight::Zero, 0.0).unwrap(), 25.0);

        let s1 = Spectrum::new(vec![1.0]).unwrap();
        let w = Weight::linear(1.0).unwrap();
        let g = gevrey_norm_sq(&s1, &mv(&[1.0]), &w, 0.25).unwrap();
        assert!((g - std::f64::consts::E).abs() < 1e-15);

        assert_eq!(gevrey_norm_sq(&s, &ModeVector::zeros(2), &w, 1.0).unwrap(), 0.0);
    }

    fn spectrum_and_vector() -> impl Strategy<Value = (Spectrum, ModeVector)> {
        prop::collection::vec((0.0f64..20.0, -5.0f64..5.0), 1..24).prop_map(|mut pairs| {
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let (l, c): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            (Spectrum::new(l).unwrap(), ModeVector::new(c))
        })
    }

    proptest! {
        #[test]
        fn split_is_disjoint_and_energy_additive(
            (s, z) in spectrum_and_vector(),
            cutoff in 0.01f64..25.0,
            alpha in 0.0f64..1.5,
        ) {
            let sp = split(&s, &z, cutoff).unwrap();
            prop_assert_eq!(sp.low.add(&sp.high), z.clone());
            for k in 0..z.len() {
                prop_assert!(sp.low.coords[k] == 0.0 || sp.high.coords[k] == 0.0);
            }
            let total = s.norm_sq(&z.coords, alpha);
            let parts = s.norm_sq(&sp.low.coords, alpha) + s.norm_sq(&sp.high.coords, alpha);
            prop_assert!((total - parts).abs() <= 1e-12 * total.max(1e-300));
        }

        #[test]
        fn powers_compose((s, z) in spectrum_and_vector(), a in 0.0f64..1.5, b in 0.0f64..1.5) {
            let lhs = apply_power(&s, &apply_power(&s, &z, a).unwrap(), b).unwrap();
            let rhs = apply_power(&s, &z, a + b).unwrap();
            for (x, y) in lhs.coords.iter().zip(&rhs.coords) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(x.abs()) + 1e-300);
            }
        }

        #[test]
        fn zero_weight_norm_is_parseval((s, z) in spectrum_and_vector()) {
            let g = gevrey_norm_sq(&s, &z, &Weight::Zero, 0.0).unwrap();
            prop_assert!((g - z.norm_sq()).abs() <= 1e-12 * g.max(1e-300));
        }
    }
}
