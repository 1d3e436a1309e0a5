//! The elements `e = diag(O_e^{−1}, O'_e) u(w_e) â` of the upper block
//! group, the normalizing map `Ξ`, and a certified check of
//! `â^l u(κ̂(e)) = Ξ(e_l⋯e_1) u(κ̂(τ^l e)) e_l⋯e_1`.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::field::{RadMatrix, RadicalRing};
use super::{IFSSystem, IFSWord};
use crate::lattice::{determinant, identity, inverse, mat_mul, RatMatrix};
use crate::rational::rational_to_f64;
use crate::{BigRational, Error, Result};

#[derive(Debug, Clone)]
pub struct GroupWordImages {
    pub ring: RadicalRing,
    /// `Ξ(e_l⋯e_1)`.
    pub xi: RadMatrix,
    /// `e_l⋯e_1`.
    pub product: RadMatrix,
    /// `â^l`.
    pub ahat_power: RadMatrix,
    /// Rational parts `O_{e_l}^{−1}⋯O_{e_1}^{−1}` and `O'_{e_l}⋯O'_{e_1}` of
    /// the diagonal blocks of the product.
    pub blocks: (RatMatrix, RatMatrix),
}

fn block_diag(a: &RatMatrix, c: &RatMatrix) -> RatMatrix {
    let (m, n) = (a.len(), c.len());
    let mut out = vec![vec![BigRational::zero(); m + n]; m + n];
    for i in 0..m {
        out[i][..m].clone_from_slice(&a[i]);
    }
    for i in 0..n {
        out[m + i][m..].clone_from_slice(&c[i]);
    }
    out
}

fn unipotent(x: &RatMatrix, m: usize, n: usize) -> RatMatrix {
    let mut u = identity(m + n);
    for i in 0..m {
        for j in 0..n {
            u[i][m + j] = x[i][j].clone();
        }
    }
    u
}

/// `â^l = diag(r^{−ml} I_m, r^{nl} I_n)` with `r^{m+n} = ρ`.
pub fn ahat_power(ring: &RadicalRing, m: usize, n: usize, l: i64) -> RadMatrix {
    let d = m + n;
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| match (i == j, i < m) {
                    (false, _) => ring.zero(),
                    (true, true) => ring.r_pow(-(m as i64) * l),
                    (true, false) => ring.r_pow(n as i64 * l),
                })
                .collect()
        })
        .collect()
}

/// Exact `|x|^{1/k}` when it is rational.
fn rational_root(x: &BigRational, k: usize) -> Option<BigRational> {
    let x = x.abs();
    let root = |v: &BigInt| {
        let r = v.nth_root(k as u32);
        (num_traits::pow(r.clone(), k) == *v).then_some(r)
    };
    Some(BigRational::new(root(x.numer())?, root(x.denom())?))
}

fn normalized_inverse(a: &RatMatrix) -> Result<RatMatrix> {
    let k = a.len();
    let s = rational_root(&determinant(a), k).ok_or(Error::IrrationalPower(
        "|det|^{1/k} of a diagonal block is irrational".into(),
    ))?;
    let scaled: RatMatrix = a.iter().map(|row| row.iter().map(|x| x / &s).collect()).collect();
    inverse(&scaled).ok_or_else(|| Error::invalid("singular block"))
}

pub fn word_images(sys: &IFSSystem, word: &IFSWord) -> Result<GroupWordImages> {
    let (m, n) = (sys.m(), sys.n());
    let ring = RadicalRing::new(m + n, sys.rho().clone());
    let a1 = ahat_power(&ring, m, n, 1);
    let mut product = ring.mat_from_rational(&identity(m + n));
    let mut pa = identity(m);
    let mut pc = identity(n);
    for &s in &word.symbols {
        let f = sys
            .maps
            .get(s)
            .ok_or_else(|| Error::invalid(format!("symbol {s} out of range")))?;
        let o_inv = inverse(&f.o).ok_or_else(|| Error::invalid("singular O"))?;
        let left = mat_mul(&block_diag(&o_inv, &f.o_prime), &unipotent(&f.w, m, n));
        let e = ring.mat_mul(&ring.mat_from_rational(&left), &a1);
        product = ring.mat_mul(&e, &product);
        pa = mat_mul(&o_inv, &pa);
        pc = mat_mul(&f.o_prime, &pc);
    }
    // Ξ(h) inverts the determinant-normalized diagonal blocks of h; the
    // positive scalar powers of r coming from â cancel in the normalization.
    let xi = block_diag(&normalized_inverse(&pa)?, &normalized_inverse(&pc)?);
    Ok(GroupWordImages {
        xi: ring.mat_from_rational(&xi),
        product,
        ahat_power: ahat_power(&ring, m, n, word.symbols.len() as i64),
        blocks: (pa, pc),
        ring,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugationReport {
    /// Certified upper bound of the max entry difference of the two sides.
    pub error_upper: f64,
    /// A-priori bound `‖Ξ‖ · c^{depth} · 2R · ‖e_l⋯e_1‖`.
    pub tail_bound: f64,
    pub exact: bool,
}

fn max_row_sum(ring: &RadicalRing, a: &RadMatrix) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|x| rational_to_f64(&ring.abs_upper(x))).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Compares `â^l u(κ_{e_1..e_L}(θ_tail))` with
/// `Ξ(e_l⋯e_1) u(κ_{e_{l+1}..e_{l+depth}}(·)) e_l⋯e_1`, where the inner
/// point is `θ_tail` once `l + depth ≥ L` and `0` otherwise.
pub fn conjugation_check(
    sys: &IFSSystem,
    word: &IFSWord,
    l: usize,
    depth: usize,
    theta_tail: &RatMatrix,
) -> Result<ConjugationReport> {
    let big_l = word.symbols.len();
    if l == 0 || l > big_l {
        return Err(Error::invalid("need 1 ≤ l ≤ word length"));
    }
    let (m, n) = (sys.m(), sys.n());
    let head = IFSWord { symbols: word.symbols[..l].to_vec() };
    let img = word_images(sys, &head)?;
    let ring = &img.ring;
    let full = sys.compose(&word.symbols, theta_tail);
    let lhs = ring.mat_mul(&img.ahat_power, &ring.mat_from_rational(&unipotent(&full, m, n)));
    let end = (l + depth).min(big_l);
    let zero = vec![vec![BigRational::zero(); n]; m];
    let inner = if end == big_l { theta_tail } else { &zero };
    let tail = sys.compose(&word.symbols[l..end], inner);
    let rhs = ring.mat_mul(
        &ring.mat_mul(&img.xi, &ring.mat_from_rational(&unipotent(&tail, m, n))),
        &img.product,
    );
    let diff = ring.mat_sub(&lhs, &rhs);
    let exact = diff.iter().flatten().all(|x| x.c.iter().all(Zero::is_zero));
    let err = ring.max_abs_upper(&diff);
    let error_upper = rational_to_f64(&err) * (1.0 + 1e-12);
    let c = rational_to_f64(&sys.contraction());
    let spread = 2.0 * rational_to_f64(&sys.attractor_radius())
        + theta_tail.iter().flatten().map(|x| rational_to_f64(&x.abs())).fold(0.0, f64::max);
    let tail_bound =
        max_row_sum(ring, &img.xi) * c.powi((end - l) as i32) * spread * max_row_sum(ring, &img.product) * (m + n) as f64;
    Ok(ConjugationReport { error_upper, tail_bound: if end == big_l { 0.0 } else { tail_bound }, exact })
}

/// `Ξ(w) â = â Ξ(w)` exactly.
pub fn xi_commutes_with_ahat(images: &GroupWordImages, m: usize, n: usize) -> bool {
    let ring = &images.ring;
    let a = ahat_power(ring, m, n, 1);
    ring.mat_mul(&images.xi, &a) == ring.mat_mul(&a, &images.xi)
}

/// Checks that `e_l⋯e_1` has diagonal blocks `r^{−ml} P_A` and `r^{nl} P_C`.
pub fn product_blocks_consistent(images: &GroupWordImages, m: usize, n: usize) -> bool {
    let ring = &images.ring;
    let (pa, pc) = &images.blocks;
    let mut expected = ring.mat_from_rational(&block_diag(pa, pc));
    let a = &images.ahat_power;
    expected = ring.mat_mul(&expected, a);
    (0..m + n).all(|i| {
        (0..m + n).all(|j| {
            let same_block = (i < m) == (j < m);
            !same_block || images.product[i][j] == expected[i][j]
        })
    }) && (m..m + n).all(|i| (0..m).all(|j| images.product[i][j].c.iter().all(Zero::is_zero)))
}

#[cfg(test)]
mod tests {
    use super::super::{cantor_system, IFSMap};
    use super::*;
    use rand::SeedableRng;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn empty_word_is_identity() {
        let c = cantor_system();
        let img = word_images(&c, &IFSWord { symbols: vec![] }).unwrap();
        let id = img.ring.mat_from_rational(&identity(2));
        assert_eq!(img.xi, id);
        assert_eq!(img.product, id);
        assert_eq!(img.ahat_power, id);
    }

    #[test]
    fn first_identity_is_exact() {
        let c = cantor_system();
        let theta = vec![vec![r(3, 7)]];
        for word in [vec![0], vec![1, 0], vec![1, 1, 0, 1, 0]] {
            let w = IFSWord { symbols: word.clone() };
            let rep = conjugation_check(&c, &w, word.len(), 0, &theta).unwrap();
            assert!(rep.exact, "{word:?}");
            assert_eq!(rep.error_upper, 0.0);
        }
    }

    #[test]
    fn truncated_tail_error_is_small() {
        let c = cantor_system();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let w = c.random_word(&mut rng, 110).unwrap();
        let rep = conjugation_check(&c, &w, 10, 60, &vec![vec![r(0, 1)]]).unwrap();
        assert!(!rep.exact);
        assert!(rep.error_upper <= rep.tail_bound);
        assert!(rep.error_upper < 1e-25);
    }

    #[test]
    fn rotated_blocks_and_commutation() {
        let swap = vec![vec![r(0, 1), r(1, 1)], vec![r(1, 1), r(0, 1)]];
        let neg = vec![vec![r(-1, 1)]];
        let map = |w: i64, o: &RatMatrix, op: &RatMatrix| IFSMap {
            rho: r(1, 4),
            o: o.clone(),
            o_prime: op.clone(),
            w: vec![vec![r(w, 1)], vec![r(1, 2)]],
        };
        let sys = IFSSystem::new(vec![map(0, &swap, &identity(1)), map(1, &identity(2), &neg)], vec![0.5, 0.5]).unwrap();
        let w = IFSWord { symbols: vec![0, 1, 1, 0] };
        let img = word_images(&sys, &w).unwrap();
        assert!(xi_commutes_with_ahat(&img, 2, 1));
        assert!(product_blocks_consistent(&img, 2, 1));
        let theta = vec![vec![r(1, 5)], vec![r(-2, 3)]];
        let rep = conjugation_check(&sys, &w, 4, 0, &theta).unwrap();
        assert!(rep.exact);
        let long = IFSWord { symbols: [0, 1, 1, 0].iter().cycle().take(40).cloned().collect() };
        let rep = conjugation_check(&sys, &long, 3, 20, &theta).unwrap();
        assert!(rep.error_upper <= rep.tail_bound && rep.error_upper > 0.0);
    }

    #[test]
    fn non_unimodular_rotation_is_irrational() {
        let two = vec![vec![r(0, 1), r(1, 2)], vec![r(1, 3), r(0, 1)]];
        let map = IFSMap { rho: r(1, 4), o: two, o_prime: identity(1), w: vec![vec![r(0, 1)], vec![r(0, 1)]] };
        let sys = IFSSystem::new(vec![map], vec![1.0]).unwrap();
        let e = word_images(&sys, &IFSWord { symbols: vec![0] });
        assert!(matches!(e, Err(Error::IrrationalPower(_))));
    }
}
