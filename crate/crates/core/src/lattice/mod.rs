//! Unimodular lattices `Λ = a_l · B · Z^{m+n}` with an exact rational basis
//! `B` and an integer flow time `l`.
//!
//! The flow `a_t = diag(e^{(n/m)t} I_m, e^{−t} I_n)` is kept symbolic: every
//! membership test is reduced to a comparison of a rational number with an
//! integer power of `e`, which [`crate::expbound`] decides exactly.

pub mod enumerate;
pub mod perturb;
pub mod s_lambda;
pub mod siegel;

use num_traits::{One, Signed, Zero};

use crate::best_approx::MatrixTheta;
use crate::rational::rational_to_f64;
use crate::{BigRational, Error, Result};

pub use enumerate::{points_in_box, BoxSpec, LatticePoint, Radius, ENUMERATION_BUDGET};
pub use perturb::{perturbation_phi, perturbation_big_phi};
pub use s_lambda::{compute_s_lambda, correspondence_check, observable_f, Correspondence, SLambda};

pub type RatMatrix = Vec<Vec<BigRational>>;

/// `Λ = a_flow · B · Z^{m+n}`; the columns of `b` are the basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    pub b: RatMatrix,
    pub m: usize,
    pub n: usize,
    pub flow: i64,
}

impl LatticeBasis {
    pub fn new(b: RatMatrix, m: usize, n: usize) -> Result<Self> {
        let d = m + n;
        if b.len() != d || b.iter().any(|row| row.len() != d) {
            return Err(Error::invalid(format!("basis must be {d}×{d}")));
        }
        if determinant(&b).abs() != BigRational::one() {
            return Err(Error::invalid("basis determinant must be ±1"));
        }
        Ok(LatticeBasis { b, m, n, flow: 0 })
    }

    pub fn identity(m: usize, n: usize) -> Self {
        LatticeBasis { b: identity(m + n), m, n, flow: 0 }
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// `g · Λ` for a rational `g`; requires `flow = 0` or block-diagonal `g`
    /// commuting with the flow, which callers guarantee.
    pub fn left_mul(&self, g: &RatMatrix) -> Result<Self> {
        let gb = mat_mul(g, &self.b);
        if self.flow != 0 && !commutes_with_flow(g, self.m) {
            return Err(Error::invalid("g must commute with a_t when the flow is nonzero"));
        }
        let mut out = LatticeBasis::new(gb, self.m, self.n)?;
        out.flow = self.flow;
        Ok(out)
    }

    /// Right multiplication by an integer change of basis (same lattice).
    pub fn change_basis(&self, u: &[Vec<i64>]) -> Self {
        let ur: RatMatrix = u
            .iter()
            .map(|row| row.iter().map(|&v| BigRational::from_integer(v.into())).collect())
            .collect();
        LatticeBasis { b: mat_mul(&self.b, &ur), ..self.clone() }
    }

    /// Floating matrix of `a_flow · B`.
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        let (sx, sy) = flow_factors(self.m, self.n, self.flow);
        self.b
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let s = if i < self.m { sx } else { sy };
                row.iter().map(|x| s * rational_to_f64(x)).collect()
            })
            .collect()
    }
}

/// `(e^{(n/m)l}, e^{−l})`.
pub fn flow_factors(m: usize, n: usize, l: i64) -> (f64, f64) {
    ((n as f64 / m as f64 * l as f64).exp(), (-l as f64).exp())
}

fn commutes_with_flow(g: &RatMatrix, m: usize) -> bool {
    g.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, x)| (i < m) == (j < m) || x.is_zero())
    })
}

/// `u(θ) = [[I_m, θ], [0, I_n]]`.
pub fn embed_theta(theta: &MatrixTheta) -> LatticeBasis {
    let (m, n) = (theta.m(), theta.n());
    let mut b = identity(m + n);
    for i in 0..m {
        for j in 0..n {
            b[i][m + j] = theta.entries[i][j].clone();
        }
    }
    LatticeBasis { b, m, n, flow: 0 }
}

/// `a_l · Λ`.
pub fn apply_flow(basis: &LatticeBasis, l: i64) -> LatticeBasis {
    LatticeBasis { flow: basis.flow + l, ..basis.clone() }
}

pub fn identity(d: usize) -> RatMatrix {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect()
}

pub fn mat_mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    (0..inner).fold(BigRational::zero(), |acc, k| {
                        if row[k].is_zero() || b[k][j].is_zero() {
                            acc
                        } else {
                            acc + &row[k] * &b[k][j]
                        }
                    })
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &RatMatrix, z: &[BigRational]) -> Vec<BigRational> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(z)
                .filter(|(x, y)| !x.is_zero() && !y.is_zero())
                .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
        })
        .collect()
}

/// Exact determinant by Gaussian elimination.
pub fn determinant(a: &RatMatrix) -> BigRational {
    let d = a.len();
    let mut m = a.clone();
    let mut det = BigRational::one();
    for col in 0..d {
        let Some(piv) = (col..d).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= &m[col][col];
        for r in col + 1..d {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &m[col][col];
            for c in col..d {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

/// Exact inverse by Gauss–Jordan elimination.
pub fn inverse(a: &RatMatrix) -> Option<RatMatrix> {
    let d = a.len();
    let mut m = a.clone();
    let mut inv = identity(d);
    for col in 0..d {
        let piv = (col..d).find(|&r| !m[r][col].is_zero())?;
        m.swap(piv, col);
        inv.swap(piv, col);
        let p = m[col][col].clone();
        for c in 0..d {
            m[col][c] /= &p;
            inv[col][c] /= &p;
        }
        for r in 0..d {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in 0..d {
                let s1 = &factor * &m[col][c];
                m[r][c] -= s1;
                let s2 = &factor * &inv[col][c];
                inv[r][c] -= s2;
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn embedding() {
        assert_eq!(embed_theta(&MatrixTheta::zeros(1, 1)).b, identity(2));
        let u = embed_theta(&MatrixTheta::scalar(r(3, 10)));
        assert_eq!(u.b, vec![vec![r(1, 1), r(3, 10)], vec![r(0, 1), r(1, 1)]]);
        let t1 = MatrixTheta::new(vec![vec![r(1, 3), r(2, 7)], vec![r(-1, 5), r(4, 9)]], None).unwrap();
        let t2 = MatrixTheta::new(vec![vec![r(1, 2), r(1, 1)], vec![r(3, 5), r(-2, 9)]], None).unwrap();
        let sum: Vec<Vec<BigRational>> = t1
            .entries
            .iter()
            .zip(&t2.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        let composed = mat_mul(&embed_theta(&t1).b, &embed_theta(&t2).b);
        assert_eq!(composed, embed_theta(&MatrixTheta::new(sum, None).unwrap()).b);
        assert_eq!(determinant(&composed), r(1, 1));
    }

    #[test]
    fn flow_semigroup() {
        let u = embed_theta(&MatrixTheta::scalar(r(3, 10)));
        assert_eq!(apply_flow(&u, 0), u);
        assert_eq!(apply_flow(&apply_flow(&u, 2), 3), apply_flow(&u, 5));
        let f = apply_flow(&LatticeBasis::identity(1, 1), 1).to_f64();
        assert!((f[0][0] - std::f64::consts::E).abs() < 1e-15);
        assert!((f[1][1] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn inverse_and_det() {
        let a = vec![vec![r(2, 1), r(1, 3)], vec![r(3, 1), r(1, 1)]];
        assert_eq!(determinant(&a), r(1, 1));
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(2));
        assert!(LatticeBasis::new(vec![vec![r(2, 1), r(0, 1)], vec![r(0, 1), r(1, 1)]], 1, 1).is_err());
    }
}
