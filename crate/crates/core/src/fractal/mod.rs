//! Iterated function systems `κ_e(θ) = ρ(O_e θ O'_e + w_e)` with a common
//! ratio, exact samplers for their self-similar measures, and the group
//! words used to conjugate the flow.

pub mod conjugation;
pub mod field;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::best_approx::MatrixTheta;
use crate::lattice::{determinant, identity, mat_mul, RatMatrix};
use crate::rational::{serde_rational, serde_rational_matrix};
use crate::{BigRational, Error, Result};

pub use conjugation::{conjugation_check, word_images, ConjugationReport, GroupWordImages};
pub use field::{RadMatrix, Radical, RadicalRing};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IFSMap {
    #[serde(with = "serde_rational")]
    pub rho: BigRational,
    #[serde(with = "serde_rational_matrix")]
    pub o: RatMatrix,
    #[serde(with = "serde_rational_matrix")]
    pub o_prime: RatMatrix,
    #[serde(with = "serde_rational_matrix")]
    pub w: RatMatrix,
}

impl IFSMap {
    pub fn m(&self) -> usize {
        self.w.len()
    }

    pub fn n(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    /// `max |κ(θ)_ij − κ(θ')_ij| ≤ ratio · max |θ_ij − θ'_ij|`.
    pub fn lipschitz_max_entry(&self) -> BigRational {
        let row = self
            .o
            .iter()
            .map(|r| r.iter().map(|x| x.abs()).fold(BigRational::zero(), |a, b| a + b))
            .max()
            .unwrap_or_else(BigRational::zero);
        let col = (0..self.n())
            .map(|j| self.o_prime.iter().map(|r| r[j].abs()).fold(BigRational::zero(), |a, b| a + b))
            .max()
            .unwrap_or_else(BigRational::zero);
        &self.rho * row * col
    }

    pub fn apply(&self, theta: &RatMatrix) -> RatMatrix {
        let inner = mat_mul(&mat_mul(&self.o, theta), &self.o_prime);
        inner
            .iter()
            .zip(&self.w)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| &self.rho * (x + y)).collect())
            .collect()
    }

    fn is_translation(&self) -> bool {
        self.o == identity(self.m()) && self.o_prime == identity(self.n())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IFSSystem {
    pub maps: Vec<IFSMap>,
    pub symbol_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IFSWord {
    pub symbols: Vec<usize>,
}

impl IFSSystem {
    pub fn new(maps: Vec<IFSMap>, symbol_weights: Vec<f64>) -> Result<Self> {
        let sys = IFSSystem { maps, symbol_weights };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.maps.first() else {
            return Err(Error::invalid("IFS needs at least one map"));
        };
        if self.symbol_weights.len() != self.maps.len() {
            return Err(Error::invalid("one weight per map"));
        }
        if self.symbol_weights.iter().any(|w| !(*w >= 0.0)) || (self.symbol_weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weights must be a probability vector"));
        }
        let (m, n) = (first.m(), first.n());
        for f in &self.maps {
            if f.rho != first.rho {
                return Err(Error::invalid("all maps must share ρ"));
            }
            if !(f.rho.is_positive() && f.rho < BigRational::one()) {
                return Err(Error::invalid("ρ must lie in (0, 1)"));
            }
            let shapes = f.m() == m
                && f.n() == n
                && f.o.len() == m
                && f.o.iter().all(|r| r.len() == m)
                && f.o_prime.len() == n
                && f.o_prime.iter().all(|r| r.len() == n)
                && f.w.iter().all(|r| r.len() == n);
            if !shapes || m == 0 || n == 0 {
                return Err(Error::invalid("inconsistent IFS map shapes"));
            }
            if determinant(&f.o).is_zero() || determinant(&f.o_prime).is_zero() {
                return Err(Error::invalid("O and O' must be invertible"));
            }
            if f.lipschitz_max_entry() >= BigRational::one() {
                return Err(Error::invalid("IFS map is not a contraction"));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.maps[0].m()
    }

    pub fn n(&self) -> usize {
        self.maps[0].n()
    }

    pub fn rho(&self) -> &BigRational {
        &self.maps[0].rho
    }

    fn contraction(&self) -> BigRational {
        self.maps.iter().map(IFSMap::lipschitz_max_entry).max().unwrap()
    }

    /// Bound on `max |θ_ij|` over the attractor.
    pub fn attractor_radius(&self) -> BigRational {
        let c = self.contraction();
        let w = self
            .maps
            .iter()
            .flat_map(|f| f.w.iter().flatten())
            .map(|x| x.abs())
            .max()
            .unwrap_or_else(BigRational::zero);
        self.rho() * w / (BigRational::one() - c)
    }

    /// `κ_{e_1} ∘ ⋯ ∘ κ_{e_L}(θ)`.
    pub fn compose(&self, word: &[usize], theta: &RatMatrix) -> RatMatrix {
        if word.iter().all(|&e| self.maps[e].is_translation()) {
            return self.compose_translations(word, theta);
        }
        word.iter().rev().fold(theta.clone(), |t, &e| self.maps[e].apply(&t))
    }

    /// Translation-only systems: `Σ_k ρ^k w_{e_k} + ρ^L θ` over a common
    /// denominator, linear in `L`.
    fn compose_translations(&self, word: &[usize], theta: &RatMatrix) -> RatMatrix {
        let rho = self.rho();
        let (a, b) = (rho.numer().clone(), rho.denom().clone());
        let lcm = self
            .maps
            .iter()
            .flat_map(|f| f.w.iter().flatten())
            .fold(BigInt::one(), |l, x| num_integer::lcm(l, x.denom().clone()));
        let (m, n) = (self.m(), self.n());
        let mut acc = vec![vec![BigInt::zero(); n]; m];
        let mut a_pow = BigInt::one();
        for &e in word {
            a_pow *= &a;
            for i in 0..m {
                for j in 0..n {
                    let w = &self.maps[e].w[i][j];
                    let wi = w.numer() * (&lcm / w.denom());
                    acc[i][j] = &acc[i][j] * &b + &a_pow * wi;
                }
            }
        }
        // acc / (lcm · b^L) + ρ^L θ
        let den = lcm * num_traits::pow(b, word.len());
        let scale = num_traits::pow(rho.clone(), word.len());
        (0..m)
            .map(|i| {
                (0..n)
                    .map(|j| BigRational::new(acc[i][j].clone(), den.clone()) + &scale * &theta[i][j])
                    .collect()
            })
            .collect()
    }

    pub fn random_word<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Result<IFSWord> {
        let dist = WeightedIndex::new(&self.symbol_weights).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(IFSWord { symbols: (0..len).map(|_| dist.sample(rng)).collect() })
    }

    /// `κ_{e_1..e_depth}(0)` for the given word, tagged with the tail bound
    /// `c^depth · R` with `c` the contraction ratio and `R` the attractor radius.
    pub fn theta_of_word(&self, word: &IFSWord) -> MatrixTheta {
        let zero = vec![vec![BigRational::zero(); self.n()]; self.m()];
        let entries = self.compose(&word.symbols, &zero);
        let tag = num_traits::pow(self.contraction(), word.symbols.len()) * self.attractor_radius();
        MatrixTheta { entries, precision_tag: Some(tag) }
    }
}

/// Middle-third Cantor measure: `x ↦ x/3` and `x ↦ (x + 2)/3`, equal weights.
pub fn cantor_system() -> IFSSystem {
    let third = BigRational::new(1.into(), 3.into());
    let map = |w: i64| IFSMap {
        rho: third.clone(),
        o: identity(1),
        o_prime: identity(1),
        w: vec![vec![BigRational::from_integer(w.into())]],
    };
    IFSSystem { maps: vec![map(0), map(2)], symbol_weights: vec![0.5, 0.5] }
}

/// Draws a word of the given depth and returns `κ_{e_1..e_depth}(0)`.
pub fn sample_theta<R: Rng + ?Sized>(sys: &IFSSystem, depth: usize, rng: &mut R) -> Result<(MatrixTheta, IFSWord)> {
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let word = sys.random_word(rng, depth)?;
    Ok((sys.theta_of_word(&word), word))
}

/// Sampling depth whose tail bound is about `2^{−bits}`.
pub fn depth_for_bits(sys: &IFSSystem, bits: u64) -> usize {
    let c = crate::rational::rational_to_f64(&sys.contraction());
    (bits as f64 * std::f64::consts::LN_2 / -c.ln()).ceil() as usize
}
