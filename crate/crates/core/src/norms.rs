//! Norms on `R^m` and `R^n`: sup, Euclidean and weighted sup, each with a
//! positive rational scale. Comparisons go through exact "keys" so that no
//! square roots are taken on the rational layer.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{rational_to_f64, serde_rational, serde_rational_vec};
use crate::{BigRational, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormKind {
    Sup,
    Euclidean,
    WeightedSup {
        #[serde(with = "serde_rational_vec")]
        weights: Vec<BigRational>,
    },
}

/// `‖x‖ = scale · base(x)` where `base` is one of the [`NormKind`]s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormSpec {
    #[serde(flatten)]
    pub kind: NormKind,
    pub dim: usize,
    #[serde(with = "serde_rational", default = "one")]
    pub scale: BigRational,
}

fn one() -> BigRational {
    BigRational::one()
}

impl NormSpec {
    pub fn new(kind: NormKind, dim: usize, scale: BigRational) -> Result<Self> {
        let spec = NormSpec { kind, dim, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sup(dim: usize) -> Self {
        NormSpec { kind: NormKind::Sup, dim, scale: one() }
    }

    /// Euclidean norm scaled so the unit ball has volume at least `2^dim`.
    /// The scale is the largest multiple of 1/64 allowed.
    pub fn euclidean(dim: usize) -> Self {
        let k = (euclidean_scale_limit(dim) * 64.0 * (1.0 - 1e-12)).floor() as i64;
        NormSpec {
            kind: NormKind::Euclidean,
            dim,
            scale: BigRational::new(k.into(), 64.into()),
        }
    }

    /// Checks the unit ball volume is at least `2^dim`.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("norm dimension must be positive"));
        }
        if !self.scale.is_positive() {
            return Err(Error::invalid("norm scale must be positive"));
        }
        if let NormKind::WeightedSup { weights } = &self.kind {
            if weights.len() != self.dim || weights.iter().any(|w| !w.is_positive()) {
                return Err(Error::invalid("weighted-sup needs `dim` positive weights"));
            }
        }
        let s = rational_to_f64(&self.scale);
        let base_volume = match &self.kind {
            NormKind::Sup => 2f64.powi(self.dim as i32),
            NormKind::Euclidean => unit_ball_volume(self.dim),
            NormKind::WeightedSup { weights } => weights
                .iter()
                .map(|w| 2.0 / rational_to_f64(w))
                .product(),
        };
        let volume = base_volume / s.powi(self.dim as i32);
        let target = 2f64.powi(self.dim as i32);
        // sup with scale exactly 1 sits on the boundary; decide it exactly
        let ok = match &self.kind {
            NormKind::Sup => self.scale <= one(),
            NormKind::WeightedSup { weights } => {
                let mut prod = num_traits::pow(self.scale.clone(), self.dim);
                for w in weights {
                    prod *= w;
                }
                prod <= one()
            }
            NormKind::Euclidean => volume >= target * (1.0 - 1e-15),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "unit ball volume {volume:.6} is below 2^{} = {target}",
                self.dim
            )))
        }
    }

    /// Exponent `k` with `‖x‖^k = scale^k · key(x)`.
    pub fn key_exp(&self) -> u32 {
        match self.kind {
            NormKind::Euclidean => 2,
            _ => 1,
        }
    }

    /// Unscaled comparison key: `max|x_i|`, `Σ x_i²` or `max w_i|x_i|`.
    pub fn key(&self, x: &[BigRational]) -> BigRational {
        match &self.kind {
            NormKind::Sup => x.iter().map(|v| v.abs()).max().unwrap_or_else(BigRational::zero),
            NormKind::Euclidean => x.iter().map(|v| v * v).fold(BigRational::zero(), |a, b| a + b),
            NormKind::WeightedSup { weights } => x
                .iter()
                .zip(weights)
                .map(|(v, w)| v.abs() * w)
                .max()
                .unwrap_or_else(BigRational::zero),
        }
    }

    /// `‖x‖^{key_exp}` exactly.
    pub fn pow_norm(&self, x: &[BigRational]) -> BigRational {
        self.key(x) * num_traits::pow(self.scale.clone(), self.key_exp() as usize)
    }

    /// Key on integer numerators (a common positive denominator is implied).
    /// `None` for weighted norms, which need rational weights.
    pub fn key_i128(&self, r: &[i128]) -> Option<i128> {
        match self.kind {
            NormKind::Sup => Some(r.iter().map(|v| v.abs()).max().unwrap_or(0)),
            NormKind::Euclidean => r.iter().try_fold(0i128, |acc, v| acc.checked_add(v.checked_mul(*v)?)),
            NormKind::WeightedSup { .. } => None,
        }
    }

    pub fn cmp(&self, a: &[BigRational], b: &[BigRational]) -> Ordering {
        self.key(a).cmp(&self.key(b))
    }

    pub fn norm_f64(&self, x: &[f64]) -> f64 {
        let s = rational_to_f64(&self.scale);
        let base = match &self.kind {
            NormKind::Sup => x.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            NormKind::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormKind::WeightedSup { weights } => x
                .iter()
                .zip(weights)
                .fold(0.0f64, |a, (v, w)| a.max(v.abs() * rational_to_f64(w))),
        };
        s * base
    }

    pub fn norm(&self, x: &[BigRational]) -> f64 {
        let k = rational_to_f64(&self.pow_norm(x));
        match self.key_exp() {
            2 => k.sqrt(),
            _ => k,
        }
    }

    /// Constants with `lo·|x|_∞ ≤ ‖x‖ ≤ hi·|x|_∞`.
    pub fn sup_equivalence(&self) -> (f64, f64) {
        let s = rational_to_f64(&self.scale);
        match &self.kind {
            NormKind::Sup => (s, s),
            NormKind::Euclidean => (s, s * (self.dim as f64).sqrt()),
            NormKind::WeightedSup { weights } => {
                let w: Vec<f64> = weights.iter().map(rational_to_f64).collect();
                let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = w.iter().cloned().fold(0.0, f64::max);
                (s * lo, s * hi)
            }
        }
    }

    pub fn rescaled(&self, factor: &BigRational) -> NormSpec {
        NormSpec { kind: self.kind.clone(), dim: self.dim, scale: &self.scale * factor }
    }
}

/// Volume of the Euclidean unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // V_k = 2π/k · V_{k-2}
    let mut v = [1.0f64, 2.0];
    for k in 2..=d {
        v[k % 2] *= 2.0 * std::f64::consts::PI / k as f64;
    }
    v[d % 2]
}

/// Largest `s` such that the scaled Euclidean ball still has volume `≥ 2^d`.
pub fn euclidean_scale_limit(d: usize) -> f64 {
    (unit_ball_volume(d) / 2f64.powi(d as i32)).powf(1.0 / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(NormSpec::sup(2).validate().is_ok());
        assert!(NormSpec::euclidean(2).validate().is_ok());
        assert!(NormSpec::new(NormKind::Sup, 2, r(3, 2)).is_err());
        assert!(NormSpec::new(NormKind::WeightedSup { weights: vec![r(1, 2), r(2, 1)] }, 2, one()).is_ok());
        assert!(NormSpec::new(NormKind::WeightedSup { weights: vec![r(1, 1), r(2, 1)] }, 2, one()).is_err());
    }

    #[test]
    fn keys() {
        let x = vec![r(-3, 4), r(1, 2)];
        assert_eq!(NormSpec::sup(2).key(&x), r(3, 4));
        assert_eq!(NormSpec::euclidean(2).key(&x), r(13, 16));
        assert_eq!(NormSpec::sup(2).key_i128(&[-3, 2]), Some(3));
        assert_eq!(NormSpec::euclidean(2).key_i128(&[-3, 2]), Some(13));
        let w = NormSpec::new(NormKind::WeightedSup { weights: vec![r(1, 2), r(2, 1)] }, 2, one()).unwrap();
        assert_eq!(w.key(&x), r(1, 1));
    }

    #[test]
    fn serde_roundtrip() {
        let w = NormSpec::new(NormKind::WeightedSup { weights: vec![r(1, 2), r(2, 1)] }, 2, r(1, 1)).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        let back: NormSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(w, back);
        let plain: NormSpec = serde_json::from_str(r#"{"kind":"sup","dim":1}"#).unwrap();
        assert_eq!(plain, NormSpec::sup(1));
    }
}
