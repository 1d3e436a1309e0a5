//! The boundary indicators `φ_δ`, `Φ_δ` and the perturbation bound for
//! `|f(gΛ) − f(Λ)|` with `g` near the identity.

use std::f64::consts::E;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use super::enumerate::{points_in_box_half, BoxSpec, Radius, ENUMERATION_BUDGET};
use super::s_lambda::{compute_s_lambda, observable_f_on};
use super::{identity, mat_mul, LatticeBasis, RatMatrix};
use crate::norms::NormSpec;
use crate::observable::Observable;
use crate::rational::rational_to_f64;
use crate::{BigRational, Error, Result};

/// `φ_δ` on the norms `(‖x‖, ‖y‖)` of a vector: 1 on the `δ`-shell around
/// the boundary of the window `{‖x‖ ≤ 1, 1 ≤ ‖y‖ ≤ e}`.
pub fn phi_delta(xn: f64, yn: f64, delta: f64) -> u8 {
    let outer = xn <= 1.0 + delta && 1.0 - delta <= yn && yn <= E + delta;
    let inner = xn < 1.0 - delta && 1.0 + delta < yn && yn < E - delta;
    (outer && !inner) as u8
}

/// `Φ_δ` on the norms of two vectors: both in the enlarged box and one of
/// the projected norms nearly equal.
pub fn big_phi_delta(v: (f64, f64), w: (f64, f64), delta: f64) -> u8 {
    let inside = |p: (f64, f64)| p.0 <= 1.0 + delta && p.1 <= E + delta;
    let close = (v.0 - w.0).abs() <= delta || (v.1 - w.1).abs() <= delta;
    (inside(v) && inside(w) && close) as u8
}

fn split_norms(v: &[f64], m: usize, norms: &(NormSpec, NormSpec)) -> (f64, f64) {
    (norms.0.norm_f64(&v[..m]), norms.1.norm_f64(&v[m..]))
}

/// `φ_δ(v)` for a vector `v = (x, y)`.
pub fn perturbation_phi(v: &[f64], m: usize, norms: &(NormSpec, NormSpec), delta: f64) -> u8 {
    let (xn, yn) = split_norms(v, m, norms);
    phi_delta(xn, yn, delta)
}

/// `Φ_δ(v, w)`.
pub fn perturbation_big_phi(v: &[f64], w: &[f64], m: usize, norms: &(NormSpec, NormSpec), delta: f64) -> u8 {
    big_phi_delta(split_norms(v, m, norms), split_norms(w, m, norms), delta)
}

/// `Σ_{v ∈ Λ_prim} φ_δ(v)` and `Σ_{v, w ∈ Λ_prim, w ≠ ±v} Φ_δ(v, w)`.
pub fn indicator_sums(basis: &LatticeBasis, norms: &(NormSpec, NormSpec), delta: f64) -> Result<(f64, f64)> {
    let bx = BoxSpec {
        x_radius: Radius::Approx(1.0 + delta),
        y_radius: Radius::Approx(E + delta),
        norms: norms.clone(),
    };
    let pts: Vec<(f64, f64)> = points_in_box_half(basis, &bx, ENUMERATION_BUDGET)?
        .into_iter()
        .filter(|p| p.primitive)
        .map(|p| (p.x_norm, p.y_norm))
        .collect();
    let phi: u64 = pts.iter().map(|&(x, y)| phi_delta(x, y, delta) as u64).sum();
    let mut pairs = 0u64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            pairs += big_phi_delta(pts[i], pts[j], delta) as u64;
        }
    }
    // each representative stands for ±v; each unordered pair for 8 ordered
    Ok((2.0 * phi as f64, 8.0 * pairs as f64))
}

/// `sup |(g − I)v| / |v|` in the `∞`-norm, i.e. the maximal absolute row sum.
pub fn op_norm_inf_minus_identity(g: &RatMatrix) -> f64 {
    g.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, x)| {
                    let x = rational_to_f64(x);
                    (if i == j { x - 1.0 } else { x }).abs()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `max |g_ij − δ_ij|`.
pub fn max_entry_distance(g: &RatMatrix) -> f64 {
    g.iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter().enumerate().map(move |(j, x)| {
                let x = rational_to_f64(x);
                (if i == j { x - 1.0 } else { x }).abs()
            })
        })
        .fold(0.0, f64::max)
}

/// Ratio `hi/lo` comparing the product norm `max(‖x‖, ‖y‖)` with `|·|_∞`.
pub fn ambient_distortion(norms: &(NormSpec, NormSpec)) -> f64 {
    let (lo_m, hi_m) = norms.0.sup_equivalence();
    let (lo_n, hi_n) = norms.1.sup_equivalence();
    hi_m.max(hi_n) / lo_m.min(lo_n)
}

/// Worst-case `C₀` for perturbations with `max |g_ij − δ_ij| ≤ ε`:
/// `‖gv − v‖ ≤ C₀ ε ‖v‖`.
pub fn c0_for_family(d: usize, norms: &(NormSpec, NormSpec)) -> f64 {
    d as f64 * ambient_distortion(norms)
}

fn dyadic<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> BigRational {
    let t = rng.random_range(-1.0..1.0) * scale;
    BigRational::from_float(t).unwrap_or_else(BigRational::zero)
}

/// Random `g ∈ SL_d(Q)` with `max |g_ij − δ_ij| ≤ ε`, a product of a
/// diagonal element and three elementary shears.
pub fn random_perturbation<R: Rng + ?Sized>(rng: &mut R, d: usize, eps: f64) -> RatMatrix {
    loop {
        let mut g = identity(d);
        let s = BigRational::one() + dyadic(rng, eps / 4.0);
        let i0 = rng.random_range(0..d);
        let mut i1 = rng.random_range(0..d - 1);
        if i1 >= i0 {
            i1 += 1;
        }
        let mut diag = identity(d);
        diag[i1][i1] = s.recip();
        diag[i0][i0] = s;
        g = mat_mul(&g, &diag);
        for _ in 0..3 {
            let i = rng.random_range(0..d);
            let mut j = rng.random_range(0..d - 1);
            if j >= i {
                j += 1;
            }
            let mut sh = identity(d);
            sh[i][j] = dyadic(rng, eps / 4.0);
            g = mat_mul(&g, &sh);
        }
        if max_entry_distance(&g) <= eps {
            return g;
        }
    }
}

/// Random rational unimodular basis `diag(r^n I_m, r^{−m} I_n) u(θ) u⁻(ψ)`.
pub fn random_lattice<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> LatticeBasis {
    let d = m + n;
    let num: i64 = rng.random_range(8..=24);
    let r = BigRational::new(num.into(), BigInt::from(16));
    let mut a = identity(d);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = if i < m {
            num_traits::pow(r.clone(), n)
        } else {
            num_traits::pow(r.recip(), m)
        };
    }
    let mut u = identity(d);
    let mut lower = identity(d);
    for i in 0..m {
        for j in 0..n {
            u[i][m + j] = BigRational::new(rng.random_range(0..1i64 << 20).into(), BigInt::from(1i64 << 20));
            lower[m + j][i] = BigRational::new(rng.random_range(-(1i64 << 10)..1i64 << 10).into(), BigInt::from(1i64 << 12));
        }
    }
    let b = mat_mul(&mat_mul(&a, &u), &lower);
    LatticeBasis { b, m, n, flow: 0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub f_lambda: f64,
    pub f_g_lambda: f64,
    pub difference: f64,
    pub phi_sum: f64,
    pub big_phi_sum: f64,
    pub bound: f64,
    /// `#S_Λ` and `#S_{gΛ}`, counting `±`.
    pub counts: (usize, usize),
    pub holds: bool,
}

/// Evaluates both sides of the perturbation inequality
/// `|f(gΛ) − f(Λ)| ≤ (Σφ_{Cε} + ΣΦ_{Cε})‖F‖_{C⁰} + M̂·Lip(F∘φ)·Cε`.
pub fn perturbation_bound(
    basis: &LatticeBasis,
    g: &RatMatrix,
    eps: f64,
    c: f64,
    m_hat: f64,
    f: &Observable,
    norms: &(NormSpec, NormSpec),
) -> Result<PerturbationReport> {
    if !f.depends_on_z_only() {
        return Err(Error::invalid("the perturbation bound is implemented for F depending on z only"));
    }
    let (m, n) = (basis.m, basis.n);
    let gl = basis.left_mul(g)?;
    let s = compute_s_lambda(basis, norms)?;
    let sg = compute_s_lambda(&gl, norms)?;
    let f_lambda = observable_f_on(&s, m, f, norms)?;
    let f_g_lambda = observable_f_on(&sg, m, f, norms)?;
    let delta = c * eps;
    let (phi_sum, big_phi_sum) = indicator_sums(basis, norms, delta)?;
    let x = 1.0 + delta;
    let y = E + delta;
    let z_max = x.powi(m as i32) * y.powi(n as i32);
    let lip = f.lip_z()
        * (m as f64 * x.powi(m as i32 - 1) * y.powi(n as i32) + n as f64 * x.powi(m as i32) * y.powi(n as i32 - 1));
    let bound = (phi_sum + big_phi_sum) * f.c0_bound(z_max) + m_hat * lip * c * eps;
    let difference = (f_g_lambda - f_lambda).abs();
    Ok(PerturbationReport {
        f_lambda,
        f_g_lambda,
        difference,
        phi_sum,
        big_phi_sum,
        bound,
        counts: (s.count(), sg.count()),
        holds: difference <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::determinant;
    use rand::SeedableRng;

    #[test]
    fn indicator_examples() {
        assert_eq!(phi_delta(0.5, 2.0, 0.01), 0);
        assert_eq!(phi_delta(1.0, 2.0, 0.05), 1);
        assert_eq!(phi_delta(0.5, 0.9, 0.05), 0);
        assert_eq!(big_phi_delta((0.3, 1.5), (0.3, 2.2), 0.01), 1);
        assert_eq!(big_phi_delta((0.3, 1.5), (0.6, 2.2), 0.01), 0);
    }

    #[test]
    fn random_elements_are_unimodular() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for d in 2..=3 {
            let g = random_perturbation(&mut rng, d, 1e-3);
            assert_eq!(determinant(&g), BigRational::one());
            assert!(max_entry_distance(&g) <= 1e-3);
            let lat = random_lattice(&mut rng, d - 1, 1);
            assert_eq!(determinant(&lat.b), BigRational::one());
        }
    }
}
