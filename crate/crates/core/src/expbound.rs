//! Certified rational enclosures of `e^k` for integer `k`, used to decide
//! window memberships such as `e^l ≤ ‖q‖ < e^{l+1}` exactly.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::BigRational;

static CACHE: Mutex<Option<HashMap<(i64, u64), (BigRational, BigRational)>>> = Mutex::new(None);

/// Interval `[lo, hi]` of width at most about `|k|·2^{-bits}·e^k` containing `e^k`.
pub fn exp_bounds(k: i64, bits: u64) -> (BigRational, BigRational) {
    if k == 0 {
        return (BigRational::one(), BigRational::one());
    }
    if let Some(hit) = CACHE
        .lock()
        .unwrap()
        .as_ref()
        .and_then(|m| m.get(&(k, bits)).cloned())
    {
        return hit;
    }
    let (e_lo, e_hi) = e_bounds(bits + 16 + 2 * (64 - k.unsigned_abs().leading_zeros() as u64));
    let p = k.unsigned_abs() as usize;
    let lo_k = pow_rat(&e_lo, p);
    let hi_k = pow_rat(&e_hi, p);
    let out = if k > 0 {
        (lo_k, hi_k)
    } else {
        (hi_k.recip(), lo_k.recip())
    };
    CACHE
        .lock()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .insert((k, bits), out.clone());
    out
}

fn pow_rat(x: &BigRational, p: usize) -> BigRational {
    BigRational::new(num_traits::pow(x.numer().clone(), p), num_traits::pow(x.denom().clone(), p))
}

/// Enclosure of `e` with denominator `2^bits`.
fn e_bounds(bits: u64) -> (BigRational, BigRational) {
    let scale = BigInt::one() << bits as usize;
    let mut term = scale.clone();
    let mut sum = BigInt::zero();
    let mut j: u64 = 0;
    // each floor loses < 1 ulp; stop once the term is zero, tail ≤ 2·term_next
    while !term.is_zero() {
        sum += &term;
        j += 1;
        term /= BigInt::from(j);
    }
    let lo = BigRational::new(sum.clone(), scale.clone());
    let hi = BigRational::new(sum + BigInt::from(j + 3), scale);
    (lo, hi)
}

/// Exact comparison of a nonnegative rational with `e^k`.
///
/// For `k ≠ 0`, `e^k` is transcendental so equality never happens and the
/// refinement loop always terminates.
pub fn cmp_exp(x: &BigRational, k: i64) -> Ordering {
    if k == 0 {
        return x.cmp(&BigRational::one());
    }
    let mut bits = 96u64;
    loop {
        let (lo, hi) = exp_bounds(k, bits);
        if *x < lo {
            return Ordering::Less;
        }
        if *x > hi {
            return Ordering::Greater;
        }
        bits *= 2;
        assert!(bits < 1 << 22, "e^{k} comparison did not separate");
    }
}

/// Exact `floor(ln x)` for a positive rational `x`.
pub fn floor_ln(x: &BigRational) -> i64 {
    let guess = crate::rational::rational_to_f64(x).ln();
    let mut k = if guess.is_finite() { guess.floor() as i64 } else { 0 };
    // adjust by exact comparisons; the float guess is off by at most one
    while cmp_exp(x, k) == Ordering::Less {
        k -= 1;
    }
    while cmp_exp(x, k + 1) != Ordering::Less {
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rational_to_f64;

    #[test]
    fn enclosure_contains_float_value() {
        for k in [-20i64, -3, -1, 1, 2, 7, 30] {
            let (lo, hi) = exp_bounds(k, 128);
            let v = (k as f64).exp();
            assert!(rational_to_f64(&lo) <= v * (1.0 + 1e-15));
            assert!(rational_to_f64(&hi) >= v * (1.0 - 1e-15));
            assert!(lo < hi);
        }
    }

    #[test]
    fn comparisons_are_exact_near_boundary() {
        // 2.718281828459045 < e < 2.718281828459046
        let below = BigRational::new(2718281828459045i64.into(), 1_000_000_000_000_000i64.into());
        let above = BigRational::new(2718281828459046i64.into(), 1_000_000_000_000_000i64.into());
        assert_eq!(cmp_exp(&below, 1), Ordering::Less);
        assert_eq!(cmp_exp(&above, 1), Ordering::Greater);
        assert_eq!(cmp_exp(&BigRational::one(), 0), Ordering::Equal);
    }

    #[test]
    fn floor_ln_matches_integers() {
        assert_eq!(floor_ln(&BigRational::from_integer(1.into())), 0);
        assert_eq!(floor_ln(&BigRational::from_integer(2.into())), 0);
        assert_eq!(floor_ln(&BigRational::from_integer(3.into())), 1);
        assert_eq!(floor_ln(&BigRational::from_integer(7.into())), 1);
        assert_eq!(floor_ln(&BigRational::from_integer(8.into())), 2);
        assert_eq!(floor_ln(&BigRational::new(1.into(), 3.into())), -2);
    }
}
