//! Continued fractions of exact rationals.
//!
//! Write `θ = n/d` with `d > 0`. Euclid's algorithm on `(d, n − a_0 d)` yields
//! remainders `s_0 = d, s_1, s_2, …` with `s_{k−1} = a_k s_k + s_{k+1}`, and the
//! classical identities
//!
//! ```text
//! |q_k θ − p_k| = s_{k+1} / d,        θq_k − p_k = (−1)^k s_{k+1} / d.
//! ```
//!
//! Everything here is computed from these remainders, so approximation
//! coefficients never require evaluating `θ q_k − p_k` with big rationals.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::expbound::cmp_exp;
use crate::rational::ScaledF64;
use crate::BigRational;

/// `[a_0; a_1, …, a_K]` together with the length of the certified prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CFExpansion {
    pub a0: BigInt,
    pub partial_quotients: Vec<BigInt>,
    /// Number of quotients `a_1..a_K*` shared by every θ' within the
    /// precision tag. Equal to the length when no tag is attached.
    pub trusted_terms: usize,
    /// `true` when Euclid ran to completion (the expansion is exact).
    pub terminated: bool,
}

/// Convergents `p_k / q_k` for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergentSeq {
    pub pairs: Vec<(BigInt, BigInt)>,
}

/// Continued fraction of `θ` with at most `max_terms` quotients after `a_0`.
pub fn cf_expand(theta: &BigRational, max_terms: usize) -> CFExpansion {
    cf_expand_tagged(theta, max_terms, None)
}

/// As [`cf_expand`], with `trusted_terms` computed from an error bound.
pub fn cf_expand_tagged(theta: &BigRational, max_terms: usize, tag: Option<&BigRational>) -> CFExpansion {
    let d = theta.denom().clone();
    let a0 = theta.numer().div_floor(&d);
    let mut prev = d.clone();
    let mut cur = theta.numer() - &a0 * &d;
    let mut quotients = Vec::new();
    while !cur.is_zero() && quotients.len() < max_terms {
        let (a, r) = prev.div_mod_floor(&cur);
        quotients.push(a);
        prev = std::mem::replace(&mut cur, r);
    }
    let terminated = cur.is_zero();
    let trusted_terms = match tag {
        None => quotients.len(),
        Some(eps) if eps.is_zero() => quotients.len(),
        Some(eps) => trusted_prefix(theta, eps).min(quotients.len()),
    };
    CFExpansion {
        a0,
        partial_quotients: quotients,
        trusted_terms,
        terminated,
    }
}

/// Three-term recurrence, starting from `p_{−1}/q_{−1} = 1/0`.
pub fn convergents(cf: &CFExpansion) -> ConvergentSeq {
    let mut pairs = Vec::with_capacity(cf.partial_quotients.len() + 1);
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (cf.a0.clone(), BigInt::one());
    pairs.push((p.clone(), q.clone()));
    for a in &cf.partial_quotients {
        let p_next = a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        pairs.push((p.clone(), q.clone()));
    }
    ConvergentSeq { pairs }
}

/// Folds `[a_0; a_1, …, a_K]` back into a rational.
pub fn fold(cf: &CFExpansion) -> BigRational {
    let mut x: Option<BigRational> = None;
    for a in cf.partial_quotients.iter().rev() {
        let a = BigRational::from_integer(a.clone());
        x = Some(match x {
            None => a,
            Some(t) => a + t.recip(),
        });
    }
    let a0 = BigRational::from_integer(cf.a0.clone());
    match x {
        None => a0,
        Some(t) => a0 + t.recip(),
    }
}

/// `q · |θq − p|`.
pub fn approx_coefficient(theta: &BigRational, p: &BigInt, q: &BigInt) -> BigRational {
    let q_r = BigRational::from_integer(q.clone());
    let r = theta * &q_r - BigRational::from_integer(p.clone());
    q_r * r.abs()
}

/// Largest `K` such that every θ' with `|θ' − θ| ≤ eps` has the same `a_0`
/// and `a_1..a_K`, hence the same convergents up to index `K`. Returns 0
/// when even `a_1` is uncertain and the full length when `eps = 0`.
///
/// The ball must lie inside the open cylinder of `[a_0; a_1, …, a_K]`, whose
/// endpoints are `p_K/q_K` and `(p_K + p_{K−1})/(q_K + q_{K−1})`. In terms of
/// remainders this reads
///
/// ```text
/// eps·d·q_K < s_{K+1}   and   eps·d·(q_K + q_{K−1}) < s_K − s_{K+1}.
/// ```
pub fn trusted_prefix(theta: &BigRational, eps: &BigRational) -> usize {
    let d = theta.denom().clone();
    let a0 = theta.numer().div_floor(&d);
    let mut s_prev = d.clone();
    let mut s = theta.numer() - &a0 * &d;
    if eps.is_zero() {
        return cf_expand(theta, usize::MAX).partial_quotients.len();
    }
    let g = eps * BigRational::from_integer(d);
    let (gn, gd) = (g.numer().clone(), g.denom().clone());
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    let mut trusted = 0usize;
    let mut k = 0usize;
    while !s.is_zero() {
        let (a, r) = s_prev.div_mod_floor(&s);
        k += 1;
        let q_next = &a * &q + &q_prev;
        q_prev = std::mem::replace(&mut q, q_next);
        s_prev = std::mem::replace(&mut s, r);
        // now s_prev = s_K, s = s_{K+1}, q = q_K, q_prev = q_{K−1}
        let ok_near = &gn * &q < &gd * &s;
        let ok_far = &gn * (&q + &q_prev) < &gd * (&s_prev - &s);
        if ok_near && ok_far {
            trusted = k;
        } else {
            break;
        }
    }
    trusted
}

/// One convergent as produced by [`CoefficientStream`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientStep {
    pub k: usize,
    /// `ln q_k`.
    pub ln_q: f64,
    /// `q_k |θ q_k − p_k|`.
    pub coefficient: f64,
    /// Sign of `θ q_k − p_k`, i.e. `(−1)^k`.
    pub sign: i8,
    /// `floor(ln q_k)`, decided exactly.
    pub window: i64,
    /// Whether `(−p_k, q_k)` is a best approximation (always for `k ≥ 1`;
    /// for `k = 0` iff `a_1 ≥ 2`).
    pub is_best: bool,
    /// Whether the step lies inside the certified prefix of the precision tag.
    pub certified: bool,
}

/// Streaming Euclid that yields approximation coefficients without keeping
/// the convergent list in memory.
pub struct CoefficientStream {
    d: BigInt,
    s_prev: BigInt,
    s: BigInt,
    q_prev: BigInt,
    q: BigInt,
    k: usize,
    started: bool,
    tag: Option<(BigInt, BigInt)>,
    certified: bool,
    d_scaled: ScaledF64,
}

impl CoefficientStream {
    pub fn new(theta: &BigRational, tag: Option<&BigRational>) -> Self {
        let d = theta.denom().clone();
        let a0 = theta.numer().div_floor(&d);
        let s = theta.numer() - &a0 * &d;
        let tag = tag.filter(|e| !e.is_zero()).map(|eps| {
            let g = eps * BigRational::from_integer(d.clone());
            (g.numer().clone(), g.denom().clone())
        });
        CoefficientStream {
            d_scaled: ScaledF64::from_bigint(&d),
            s_prev: d.clone(),
            d,
            s,
            q_prev: BigInt::zero(),
            q: BigInt::one(),
            k: 0,
            started: false,
            tag,
            certified: true,
        }
    }

    fn cylinder_ok(&self) -> bool {
        match &self.tag {
            None => true,
            Some((gn, gd)) if gn == gd => self.q < self.s && &self.q + &self.q_prev < &self.s_prev - &self.s,
            Some((gn, gd)) => {
                gn * &self.q < gd * &self.s && gn * (&self.q + &self.q_prev) < gd * (&self.s_prev - &self.s)
            }
        }
    }

    fn step(&self, is_best: bool) -> CoefficientStep {
        let qs = ScaledF64::from_bigint(&self.q);
        let coefficient = qs.mul(ScaledF64::from_bigint(&self.s)).div(self.d_scaled).to_f64();
        let ln_q = qs.ln();
        CoefficientStep {
            k: self.k,
            ln_q,
            coefficient,
            sign: if self.k % 2 == 0 { 1 } else { -1 },
            window: floor_ln_int(&self.q, ln_q),
            is_best,
            certified: self.certified,
        }
    }
}

impl Iterator for CoefficientStream {
    type Item = CoefficientStep;

    fn next(&mut self) -> Option<CoefficientStep> {
        if !self.started {
            self.started = true;
            if self.s.is_zero() {
                return None;
            }
            // k = 0: q_0 = 1, residual s_1/d; best iff s_1 < d/2
            let twice = &self.s * 2u32;
            let is_best = twice < self.d;
            self.certified = self.cylinder_ok()
                && match &self.tag {
                    None => true,
                    Some((gn, gd)) => gn * 2u32 < gd * (&self.d - &twice).abs(),
                };
            return Some(self.step(is_best));
        }
        if self.s.is_zero() {
            return None;
        }
        let (a, r) = self.s_prev.div_mod_floor(&self.s);
        let q_next = &a * &self.q + &self.q_prev;
        self.q_prev = std::mem::replace(&mut self.q, q_next);
        self.s_prev = std::mem::replace(&mut self.s, r);
        self.k += 1;
        self.certified = self.certified && self.cylinder_ok();
        if self.s.is_zero() {
            // θ = p_k/q_k: the residual vanishes
            return None;
        }
        Some(self.step(true))
    }
}

/// Exact `floor(ln q)` for a positive integer, using the float value unless
/// it is within `1e-8` of an integer.
pub fn floor_ln_int(q: &BigInt, ln_q: f64) -> i64 {
    let guess = ln_q.floor();
    if ln_q - guess > 1e-8 && guess + 1.0 - ln_q > 1e-8 {
        return guess as i64;
    }
    let x = BigRational::from_integer(q.clone());
    let mut k = guess as i64;
    while cmp_exp(&x, k) == Ordering::Less {
        k -= 1;
    }
    while cmp_exp(&x, k + 1) != Ordering::Less {
        k += 1;
    }
    k
}

/// Uniform random dyadic rational `N / 2^bits` in `[0, 1)`.
pub fn random_dyadic<R: rand::Rng + ?Sized>(rng: &mut R, bits: u64) -> BigRational {
    let words = bits.div_ceil(32) as usize;
    let digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
    let mut n = BigUint::new(digits);
    let excess = (words as u64) * 32 - bits;
    n >>= excess as usize;
    BigRational::new(BigInt::from_biguint(Sign::Plus, n), BigInt::one() << bits as usize)
}
