//! Exact arithmetic in `Q[r]/(r^d − ρ)` for a rational `ρ > 0`, with
//! evaluation at the real root `r = ρ^{1/d}` by rational enclosures.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::BigRational;

/// Element `Σ c_i r^i`, `0 ≤ i < d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Radical {
    pub c: Vec<BigRational>,
}

pub type RadMatrix = Vec<Vec<Radical>>;

#[derive(Debug, Clone)]
pub struct RadicalRing {
    pub d: usize,
    pub rho: BigRational,
    /// Rational enclosure `lo ≤ ρ^{1/d} ≤ hi`.
    lo: BigRational,
    hi: BigRational,
}

impl RadicalRing {
    pub fn new(d: usize, rho: BigRational) -> Self {
        assert!(d >= 1 && rho.is_positive());
        let (lo, hi) = root_enclosure(&rho, d, 600);
        RadicalRing { d, rho, lo, hi }
    }

    pub fn zero(&self) -> Radical {
        Radical { c: vec![BigRational::zero(); self.d] }
    }

    pub fn from_rational(&self, x: BigRational) -> Radical {
        let mut z = self.zero();
        z.c[0] = x;
        z
    }

    /// `r^k` for any integer `k`.
    pub fn r_pow(&self, k: i64) -> Radical {
        let d = self.d as i64;
        let q = k.div_euclid(d);
        let i = k.rem_euclid(d) as usize;
        let mut z = self.zero();
        z.c[i] = pow_int(&self.rho, q);
        z
    }

    pub fn add(&self, a: &Radical, b: &Radical) -> Radical {
        Radical { c: a.c.iter().zip(&b.c).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, a: &Radical, b: &Radical) -> Radical {
        Radical { c: a.c.iter().zip(&b.c).map(|(x, y)| x - y).collect() }
    }

    pub fn mul(&self, a: &Radical, b: &Radical) -> Radical {
        let mut z = self.zero();
        for (i, x) in a.c.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in b.c.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                let p = x * y;
                if i + j >= self.d {
                    z.c[i + j - self.d] += p * &self.rho;
                } else {
                    z.c[i + j] += p;
                }
            }
        }
        z
    }

    /// Rational interval containing the real value.
    pub fn enclose(&self, a: &Radical) -> (BigRational, BigRational) {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        let mut plo = BigRational::one();
        let mut phi = BigRational::one();
        for c in &a.c {
            if c.is_negative() {
                lo += c * &phi;
                hi += c * &plo;
            } else {
                lo += c * &plo;
                hi += c * &phi;
            }
            plo *= &self.lo;
            phi *= &self.hi;
        }
        (lo, hi)
    }

    /// Upper bound for `|a|`.
    pub fn abs_upper(&self, a: &Radical) -> BigRational {
        let (lo, hi) = self.enclose(a);
        lo.abs().max(hi.abs())
    }

    pub fn to_f64(&self, a: &Radical) -> f64 {
        let (lo, hi) = self.enclose(a);
        crate::rational::rational_to_f64(&((lo + hi) / BigRational::from_integer(2.into())))
    }

    pub fn mat_from_rational(&self, a: &[Vec<BigRational>]) -> RadMatrix {
        a.iter().map(|row| row.iter().map(|x| self.from_rational(x.clone())).collect()).collect()
    }

    pub fn mat_mul(&self, a: &RadMatrix, b: &RadMatrix) -> RadMatrix {
        let cols = b.first().map_or(0, Vec::len);
        a.iter()
            .map(|row| {
                (0..cols)
                    .map(|j| {
                        row.iter()
                            .zip(b)
                            .fold(self.zero(), |acc, (x, brow)| self.add(&acc, &self.mul(x, &brow[j])))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn mat_sub(&self, a: &RadMatrix, b: &RadMatrix) -> RadMatrix {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| self.sub(u, v)).collect())
            .collect()
    }

    /// Certified upper bound of `max |a_ij|`.
    pub fn max_abs_upper(&self, a: &RadMatrix) -> BigRational {
        a.iter()
            .flatten()
            .map(|x| self.abs_upper(x))
            .fold(BigRational::zero(), |m, x| m.max(x))
    }
}

fn pow_int(x: &BigRational, k: i64) -> BigRational {
    let p = num_traits::pow(x.clone(), k.unsigned_abs() as usize);
    if k < 0 {
        p.recip()
    } else {
        p
    }
}

/// Dyadic enclosure of `x^{1/d}` of width `2^{−bits}` by bisection on
/// integers.
fn root_enclosure(x: &BigRational, d: usize, bits: u32) -> (BigRational, BigRational) {
    // floor((x · 2^{bits·d})^{1/d}) = floor(x^{1/d} · 2^bits)
    let scaled = x * BigRational::from_integer(BigInt::one() << (bits as usize * d));
    let target = scaled.floor().to_integer();
    let k = target.nth_root(d as u32);
    let den = BigInt::one() << bits as usize;
    (BigRational::new(k.clone(), den.clone()), BigRational::new(k + 1, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn square_root_of_a_third() {
        let f = RadicalRing::new(2, r(1, 3));
        let s = f.r_pow(1);
        assert_eq!(f.mul(&s, &s), f.from_rational(r(1, 3)));
        assert_eq!(f.mul(&f.r_pow(-3), &f.r_pow(3)), f.from_rational(r(1, 1)));
        assert!((f.to_f64(&s) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let (lo, hi) = f.enclose(&s);
        assert!(&hi - &lo < r(1, 1 << 30));
    }

    #[test]
    fn cube_root_powers() {
        let f = RadicalRing::new(3, r(2, 5));
        for k in -7..7 {
            assert_eq!(f.mul(&f.r_pow(k), &f.r_pow(1 - k)), f.r_pow(1));
            assert!((f.to_f64(&f.r_pow(k)) - 0.4f64.powf(k as f64 / 3.0)).abs() < 1e-12 * 0.4f64.powf(k as f64 / 3.0));
        }
    }
}
