//! Best approximations of `θ ∈ M_{m×n}(R)`.
//!
//! `(p, q) ∈ Z^m × (Z^n \ {0})` is a best approximation when no pair other
//! than `(±p, ±q)` has both `‖p' + θq'‖ ≤ ‖p + θq‖` and `‖q'‖ ≤ ‖q‖`. Since all
//! supported norms are monotone in each `|coordinate|`, the optimal `p` for a
//! given `q` is the coordinatewise rounding of `−θq`.
//!
//! The scan walks denominators in groups of equal `‖q‖`. A candidate survives
//! when its residual is strictly below every residual reached by a smaller
//! `‖q‖`, strictly below every other candidate of its own group, and its `p`
//! is the unique minimizer. All comparisons are exact.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::expbound::cmp_exp;
use crate::norms::{NormKind, NormSpec};
use crate::observable::Observable;
use crate::rational::{rational_to_f64, round_nearest, serde_rational_matrix};
use crate::{BigRational, Error, Result};

/// Cell budget for the denominator scan.
pub const SCAN_BUDGET: f64 = 1e8;

/// An `m × n` matrix of exact rationals with an optional entrywise error bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixTheta {
    #[serde(with = "serde_rational_matrix")]
    pub entries: Vec<Vec<BigRational>>,
    #[serde(default, with = "opt_rational")]
    pub precision_tag: Option<BigRational>,
}

mod opt_rational {
    use super::*;
    use crate::rational::{format_rational, parse_rational};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&format_rational(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<BigRational>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|s| parse_rational(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

impl MatrixTheta {
    pub fn new(entries: Vec<Vec<BigRational>>, precision_tag: Option<BigRational>) -> Result<Self> {
        let m = entries.len();
        let n = entries.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || entries.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("θ must be a nonempty rectangular matrix"));
        }
        Ok(MatrixTheta { entries, precision_tag })
    }

    pub fn scalar(theta: BigRational) -> Self {
        MatrixTheta { entries: vec![vec![theta]], precision_tag: None }
    }

    pub fn with_tag(mut self, tag: Option<BigRational>) -> Self {
        self.precision_tag = tag;
        self
    }

    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn n(&self) -> usize {
        self.entries[0].len()
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        MatrixTheta { entries: vec![vec![BigRational::zero(); n]; m], precision_tag: None }
    }

    /// `θ q` for an integer vector `q`.
    pub fn apply(&self, q: &[BigInt]) -> Vec<BigRational> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(q)
                    .fold(BigRational::zero(), |acc, (t, qi)| acc + t * BigRational::from_integer(qi.clone()))
            })
            .collect()
    }

    /// Common denominator `D` and numerators `N` with `θ = N / D`.
    pub fn integer_form(&self) -> (Vec<Vec<BigInt>>, BigInt) {
        let d = self
            .entries
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let num = self
            .entries
            .iter()
            .map(|row| row.iter().map(|x| x.numer() * (&d / x.denom())).collect())
            .collect();
        (num, d)
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(rational_to_f64).collect())
            .collect()
    }
}

/// Result of minimizing `‖p + θq‖` over `p` for a fixed `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinResidual {
    pub p: Vec<BigInt>,
    pub residual: Vec<BigRational>,
    /// `‖p + θq‖`.
    pub rnorm: f64,
    /// Set when some coordinate of `θq` is a half-integer, so that two
    /// different `p` reach the minimum.
    pub tie: bool,
}

pub fn min_residual(theta: &MatrixTheta, q: &[BigInt], norm_m: &NormSpec) -> Result<MinResidual> {
    if q.iter().all(Zero::is_zero) {
        return Err(Error::invalid("q must be nonzero"));
    }
    let tq = theta.apply(q);
    let mut p = Vec::with_capacity(tq.len());
    let mut residual = Vec::with_capacity(tq.len());
    let mut tie = false;
    for t in &tq {
        let neg = -t;
        let (pi, half) = round_nearest(neg.numer(), neg.denom());
        tie |= half;
        residual.push(BigRational::from_integer(pi.clone()) + t);
        p.push(pi);
    }
    let rnorm = norm_m.norm(&residual);
    Ok(MinResidual { p, residual, rnorm, tie })
}

/// A best approximation with cached residual and norms.
#[derive(Debug, Clone, PartialEq)]
pub struct BestApprox {
    pub p: Vec<BigInt>,
    pub q: Vec<BigInt>,
    /// `p + θq`.
    pub residual: Vec<BigRational>,
    pub rnorm: f64,
    pub qnorm: f64,
}

impl BestApprox {
    /// `(‖r‖^m ‖q‖^n, r/‖r‖, q/‖q‖)`.
    pub fn phi(&self) -> (f64, Vec<f64>, Vec<f64>) {
        let m = self.residual.len() as i32;
        let n = self.q.len() as i32;
        let z = self.rnorm.powi(m) * self.qnorm.powi(n);
        let x = self.residual.iter().map(|r| rational_to_f64(r) / self.rnorm).collect();
        let y = self.q.iter().map(|v| v.to_f64().unwrap_or(f64::NAN) / self.qnorm).collect();
        (z, x, y)
    }

    /// `F(φ(p + θq, q))`.
    pub fn evaluate(&self, f: &Observable) -> f64 {
        let (z, x, y) = self.phi();
        f.eval(z, &x, &y)
    }
}

/// Best approximations ordered by increasing `‖q‖`, complete for `‖q‖ < e^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BestApproxSeq {
    pub items: Vec<BestApprox>,
    pub horizon: f64,
}

/// Orders `‖q‖` against `e^t` for real `t`, exactly when `key_exp·t` is an
/// integer.
pub fn qnorm_cmp_exp(q: &[BigInt], norm_n: &NormSpec, t: f64) -> Ordering {
    let qr: Vec<BigRational> = q.iter().map(|v| BigRational::from_integer(v.clone())).collect();
    let pow = norm_n.pow_norm(&qr);
    let ke = norm_n.key_exp() as f64;
    let kt = ke * t;
    if kt.fract() == 0.0 && kt.abs() < 1e15 {
        return cmp_exp(&pow, kt as i64);
    }
    let lhs = rational_to_f64(&pow).ln();
    lhs.partial_cmp(&kt).unwrap_or(Ordering::Equal)
}

/// Comparison key. `Int` and `Big` are integer numerators over a shared
/// denominator and compare numerically; `Rat` is only used on its own.
#[derive(Debug, Clone)]
enum Key {
    Int(i128),
    Big(BigInt),
    Rat(BigRational),
}

impl Key {
    fn is_zero(&self) -> bool {
        match self {
            Key::Int(v) => *v == 0,
            Key::Big(v) => v.is_zero(),
            Key::Rat(v) => v.is_zero(),
        }
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Key::Int(a), Key::Int(b)) => a.cmp(b),
            (Key::Big(a), Key::Big(b)) => a.cmp(b),
            (Key::Int(a), Key::Big(b)) => BigInt::from(*a).cmp(b),
            (Key::Big(a), Key::Int(b)) => a.cmp(&BigInt::from(*b)),
            (Key::Rat(a), Key::Rat(b)) => a.cmp(b),
            _ => unreachable!("rational keys are never mixed with integer keys"),
        }
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

struct Integer128 {
    num: Vec<Vec<i128>>,
    den: i128,
}

/// Residual numerators `p·den + θq` with `p` the nearest integer vector,
/// plus the tie flag, in big integers.
fn residual_numerators_big(num: &[Vec<BigInt>], den: &BigInt, q: &[i64]) -> (Vec<BigInt>, bool) {
    let mut tie = false;
    let two_den: BigInt = den * 2;
    let r = num
        .iter()
        .map(|row| {
            let tq: BigInt = row.iter().zip(q).map(|(a, b)| a * BigInt::from(*b)).sum();
            let twice: BigInt = den - &tq * 2;
            let p = twice.div_floor(&two_den);
            tie |= twice.mod_floor(&two_den).is_zero();
            p * den + tq
        })
        .collect();
    (r, tie)
}

fn big_key(norm: &NormSpec, r: &[BigInt]) -> BigInt {
    match norm.kind {
        NormKind::Euclidean => r.iter().map(|v| v * v).sum(),
        _ => r.iter().map(|v| v.abs()).max().unwrap_or_default(),
    }
}

fn fast_form(theta: &MatrixTheta, norm_m: &NormSpec, r_max: i64) -> Option<Integer128> {
    if matches!(norm_m.kind, NormKind::WeightedSup { .. }) || theta.m() > 4 {
        return None;
    }
    let (num, den) = theta.integer_form();
    let entry_bits = num.iter().flatten().map(|x| x.bits()).chain([den.bits()]).max().unwrap_or(0);
    let q_bits = 64 - ((r_max.max(1) as u64) * theta.n() as u64).leading_zeros() as u64;
    // θq, 2θq + den and p·den + θq all stay below 2^126
    if entry_bits + q_bits + 3 > 126 {
        return None;
    }
    Some(Integer128 {
        num: num.iter().map(|row| row.iter().map(|x| x.to_i128().unwrap()).collect()).collect(),
        den: den.to_i128().unwrap(),
    })
}

/// Sign-normalized `q` with `|q|_∞ ≤ r`, first nonzero coordinate positive.
fn denominators(n: usize, r: i64) -> Result<Vec<Vec<i64>>> {
    let cells = ((2 * r + 1) as f64).powi(n as i32) / 2.0;
    if cells > SCAN_BUDGET {
        return Err(Error::EnumerationBlowup { cells, budget: SCAN_BUDGET });
    }
    if n == 1 {
        return Ok((1..=r).map(|v| vec![v]).collect());
    }
    let mut out = Vec::new();
    let mut cur = vec![-r; n];
    loop {
        if let Some(first) = cur.iter().find(|v| **v != 0) {
            if *first > 0 {
                out.push(cur.clone());
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < r {
                cur[i] += 1;
                break;
            }
            cur[i] = -r;
        }
    }
}

struct Candidate {
    idx: usize,
    rkey: Key,
    tie: bool,
}

/// All best approximations with `‖q‖ < e^T`.
pub fn enumerate_best(theta: &MatrixTheta, t: f64, norms: &(NormSpec, NormSpec)) -> Result<BestApproxSeq> {
    let (norm_m, norm_n) = norms;
    if norm_m.dim != theta.m() || norm_n.dim != theta.n() {
        return Err(Error::invalid("norm dimensions do not match θ"));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("horizon T must be nonnegative"));
    }
    let (lo_n, _) = norm_n.sup_equivalence();
    let r_max = (t.exp() / lo_n).floor() as i64 + 1;
    let mut qs: Vec<Vec<i64>> = denominators(theta.n(), r_max)?
        .into_iter()
        .filter(|q| {
            let ln = norm_n.norm_f64(&q.iter().map(|&v| v as f64).collect::<Vec<_>>()).ln();
            if (ln - t).abs() > 1e-9 {
                return ln < t;
            }
            let big: Vec<BigInt> = q.iter().map(|&v| v.into()).collect();
            qnorm_cmp_exp(&big, norm_n, t) == Ordering::Less
        })
        .collect();
    let qkey = |q: &[i64]| -> Key {
        match norm_n.key_i128(&q.iter().map(|&v| v as i128).collect::<Vec<_>>()) {
            Some(k) => Key::Int(k),
            None => Key::Rat(norm_n.key(&q.iter().map(|&v| BigRational::from_integer(v.into())).collect::<Vec<_>>())),
        }
    };
    let mut keyed: Vec<(Key, Vec<i64>)> = qs.drain(..).map(|q| (qkey(&q), q)).collect();
    keyed.sort();

    let fast = fast_form(theta, norm_m, r_max);
    let int_form = (!matches!(norm_m.kind, NormKind::WeightedSup { .. })).then(|| theta.integer_form());
    let residual_key = |q: &[i64]| -> Result<(Key, bool)> {
        if let Some(f) = &fast {
            let mut r = Vec::with_capacity(f.num.len());
            let mut tie = false;
            for row in &f.num {
                let tq: i128 = row.iter().zip(q).map(|(a, b)| a * (*b as i128)).sum();
                // p = round(−tq/den), residual numerator p·den + tq
                let twice = -2 * tq + f.den;
                let p = twice.div_euclid(2 * f.den);
                tie |= twice.rem_euclid(2 * f.den) == 0;
                r.push(p * f.den + tq);
            }
            // Euclidean keys can overflow; fall back to big integers then
            if let Some(key) = norm_m.key_i128(&r) {
                return Ok((Key::Int(key), tie));
            }
        }
        if let Some((num, den)) = &int_form {
            let (r, tie) = residual_numerators_big(num, den, q);
            return Ok((Key::Big(big_key(norm_m, &r)), tie));
        }
        let big: Vec<BigInt> = q.iter().map(|&v| v.into()).collect();
        let mr = min_residual(theta, &big, norm_m)?;
        Ok((Key::Rat(norm_m.key(&mr.residual)), mr.tie))
    };

    let mut items = Vec::new();
    let mut best_prev: Option<Key> = None;
    let mut start = 0;
    while start < keyed.len() {
        let mut end = start + 1;
        while end < keyed.len() && keyed[end].0 == keyed[start].0 {
            end += 1;
        }
        let mut group = Vec::with_capacity(end - start);
        for (idx, (_, q)) in keyed[start..end].iter().enumerate() {
            let (rkey, tie) = residual_key(q)?;
            if rkey.is_zero() {
                let big: Vec<BigInt> = q.iter().map(|&v| v.into()).collect();
                let mr = min_residual(theta, &big, norm_m)?;
                return Err(Error::RationalDegeneracy { p: mr.p, q: big });
            }
            group.push(Candidate { idx: start + idx, rkey, tie });
        }
        for c in &group {
            let below_prev = best_prev.as_ref().is_none_or(|b| c.rkey < *b);
            let unique = group.iter().all(|o| o.idx == c.idx || o.rkey > c.rkey);
            if below_prev && unique && !c.tie {
                let q: Vec<BigInt> = keyed[c.idx].1.iter().map(|&v| v.into()).collect();
                let mr = min_residual(theta, &q, norm_m)?;
                let qr: Vec<BigRational> = q.iter().map(|v| BigRational::from_integer(v.clone())).collect();
                items.push(BestApprox {
                    p: mr.p,
                    residual: mr.residual,
                    rnorm: mr.rnorm,
                    qnorm: norm_n.norm(&qr),
                    q,
                });
            }
        }
        let group_min = group.iter().map(|c| c.rkey.clone()).min();
        best_prev = match (best_prev, group_min) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        start = end;
    }

    if let Some(eps) = &theta.precision_tag {
        let eps = rational_to_f64(eps);
        let (_, hi_m) = norm_m.sup_equivalence();
        let drift = eps * theta.n() as f64 * t.exp() / lo_n * hi_m;
        let last = items.last().map_or(f64::INFINITY, |b| b.rnorm);
        if !(last > 2.0 * drift) {
            return Err(Error::BeyondCertifiedHorizon { horizon: t });
        }
    }
    Ok(BestApproxSeq { items, horizon: t })
}

/// Whether `e^a ≤ ‖q‖ < e^b`.
pub fn in_window(q: &[BigInt], norm_n: &NormSpec, a: f64, b: f64) -> bool {
    qnorm_cmp_exp(q, norm_n, a) != Ordering::Less && qnorm_cmp_exp(q, norm_n, b) == Ordering::Less
}

/// `Σ F(φ(p + θq, q))` over best approximations (one per `±` pair) with
/// `e^a ≤ ‖q‖ < e^b`.
pub fn diophantine_sum(
    theta: &MatrixTheta,
    a: f64,
    b: f64,
    f: &Observable,
    norms: &(NormSpec, NormSpec),
) -> Result<f64> {
    if !(0.0 <= a && a < b) {
        return Err(Error::invalid("window needs 0 ≤ a < b"));
    }
    let seq = enumerate_best(theta, b, norms)?;
    Ok(window_sum(&seq, a, b, f, &norms.1))
}

pub fn window_sum(seq: &BestApproxSeq, a: f64, b: f64, f: &Observable, norm_n: &NormSpec) -> f64 {
    seq.items
        .iter()
        .filter(|it| in_window(&it.q, norm_n, a, b))
        .map(|it| it.evaluate(f))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn abs1() -> (NormSpec, NormSpec) {
        (NormSpec::sup(1), NormSpec::sup(1))
    }

    #[test]
    fn min_residual_examples() {
        let t = MatrixTheta::scalar(r(3, 10));
        let mr = min_residual(&t, &[3.into()], &NormSpec::sup(1)).unwrap();
        assert_eq!(mr.p, vec![BigInt::from(-1)]);
        assert_eq!(mr.residual, vec![r(-1, 10)]);
        assert!(!mr.tie);
        let z = MatrixTheta::zeros(1, 1);
        let mr = min_residual(&z, &[7.into()], &NormSpec::sup(1)).unwrap();
        assert_eq!(mr.p, vec![BigInt::zero()]);
        assert_eq!(mr.rnorm, 0.0);
        let t2 = MatrixTheta::new(vec![vec![r(2, 5)], vec![r(-7, 10)]], None).unwrap();
        let mr = min_residual(&t2, &[1.into()], &NormSpec::sup(2)).unwrap();
        assert_eq!(mr.p, vec![BigInt::zero(), BigInt::one()]);
        assert!((mr.rnorm - 0.4).abs() < 1e-15);
        let half = MatrixTheta::scalar(r(1, 2));
        assert!(min_residual(&half, &[1.into()], &NormSpec::sup(1)).unwrap().tie);
    }

    #[test]
    fn three_tenths() {
        let t = MatrixTheta::scalar(r(3, 10));
        let seq = enumerate_best(&t, 11f64.ln(), &abs1());
        // q = 10 gives residual 0
        assert!(matches!(seq, Err(Error::RationalDegeneracy { .. })));
        let seq = enumerate_best(&t, 10f64.ln(), &abs1()).unwrap();
        let qs: Vec<i64> = seq.items.iter().map(|b| b.q[0].to_i64().unwrap()).collect();
        let ps: Vec<i64> = seq.items.iter().map(|b| b.p[0].to_i64().unwrap()).collect();
        assert_eq!(qs, vec![1, 3]);
        assert_eq!(ps, vec![0, -1]);
        // sum of q|θq − p| over the records
        let s = window_sum(&seq, 0.0, 10f64.ln(), &Observable::Coefficient, &NormSpec::sup(1));
        assert!((s - (0.3 + 0.3)).abs() < 1e-12);
        let e = window_sum(&seq, 2.0, 2.0 + 1e-9, &Observable::Constant { value: 1.0 }, &NormSpec::sup(1));
        assert_eq!(e, 0.0);
    }

    #[test]
    fn zero_theta_is_degenerate() {
        let z = MatrixTheta::zeros(2, 1);
        let res = enumerate_best(&z, 2.0, &(NormSpec::sup(2), NormSpec::sup(1)));
        assert!(matches!(res, Err(Error::RationalDegeneracy { .. })));
    }

    #[test]
    fn golden_records_are_fibonacci() {
        let (mut a, mut b) = (BigInt::zero(), BigInt::one());
        for _ in 0..80 {
            let c = &a + &b;
            a = std::mem::replace(&mut b, c);
        }
        let t = MatrixTheta::scalar(BigRational::new(a, b));
        let seq = enumerate_best(&t, 9.0, &abs1()).unwrap();
        let qs: Vec<i64> = seq.items.iter().map(|b| b.q[0].to_i64().unwrap()).collect();
        let fib: Vec<i64> = vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584, 4181, 6765];
        assert_eq!(qs, fib);
    }

    #[test]
    fn horizon_guard() {
        let t = MatrixTheta::scalar(r(1_234_567, 10_000_000)).with_tag(Some(r(1, 1_000_000)));
        assert!(enumerate_best(&t, 2.0, &abs1()).is_ok());
        assert!(matches!(
            enumerate_best(&t, 9.0, &abs1()),
            Err(Error::BeyondCertifiedHorizon { .. })
        ));
    }
}
