//! The set `S_Λ`, the observable `f` and the window correspondence with
//! best approximations.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::enumerate::{points_in_box_half, BoxSpec, FlowFrame, LatticePoint, Radius, ENUMERATION_BUDGET};
use super::{apply_flow, embed_theta, LatticeBasis};
use crate::best_approx::{enumerate_best, in_window, BestApprox, MatrixTheta};
use crate::norms::NormSpec;
use crate::observable::Observable;
use crate::rational::rational_to_f64;
use crate::{BigRational, Error, Result};

/// Primitive vectors `v` with `1 ≤ ‖π₂(v)‖ < e`, `‖π₁(v)‖ ≤ 1` and
/// `Λ_prim ∩ C_v = {±v}`, stored one per `±` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SLambda {
    pub vectors: Vec<LatticePoint>,
}

impl SLambda {
    /// `#S_Λ`, counting `v` and `−v`.
    pub fn count(&self) -> usize {
        2 * self.vectors.len()
    }
}

pub fn compute_s_lambda(basis: &LatticeBasis, norms: &(NormSpec, NormSpec)) -> Result<SLambda> {
    let m = basis.m;
    let bx = BoxSpec { x_radius: Radius::exp(0), y_radius: Radius::exp(1), norms: norms.clone() };
    let pts: Vec<LatticePoint> = points_in_box_half(basis, &bx, ENUMERATION_BUDGET)?
        .into_iter()
        .filter(|p| p.primitive)
        .collect();
    let frame = FlowFrame::new(basis, norms);
    let keys: Vec<(BigRational, BigRational)> = pts
        .iter()
        .map(|p| (norms.0.key(&p.w[..m]), norms.1.key(&p.w[m..])))
        .collect();
    let one = BigRational::one();
    let mut vectors = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if frame.cmp_y(&p.w, &one, 0) == Ordering::Less || frame.cmp_y(&p.w, &one, 1) != Ordering::Less {
            continue;
        }
        let blocked = keys
            .iter()
            .enumerate()
            .any(|(j, k)| j != i && k.0 <= keys[i].0 && k.1 <= keys[i].1);
        if !blocked {
            vectors.push(p.clone());
        }
    }
    Ok(SLambda { vectors })
}

/// `φ(v) = (‖x‖^m ‖y‖^n, x/‖x‖, y/‖y‖)`, computed before the flow since the
/// flow cancels in all three components.
pub fn phi(w: &[BigRational], m: usize, norms: &(NormSpec, NormSpec)) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (x, y) = w.split_at(m);
    if x.iter().all(Zero::is_zero) {
        return Err(Error::DirectionUndefined);
    }
    let xn = norms.0.norm(x);
    let yn = norms.1.norm(y);
    let z = xn.powi(m as i32) * yn.powi(y.len() as i32);
    let xd = x.iter().map(|c| rational_to_f64(c) / xn).collect();
    let yd = y.iter().map(|c| rational_to_f64(c) / yn).collect();
    Ok((z, xd, yd))
}

fn pair_value(f: &Observable, z: f64, x: &[f64], y: &[f64]) -> f64 {
    let nx: Vec<f64> = x.iter().map(|c| -c).collect();
    let ny: Vec<f64> = y.iter().map(|c| -c).collect();
    f.eval(z, x, y) + f.eval(z, &nx, &ny)
}

/// `f(Λ) = Σ_{v ∈ S_Λ} F(φ(v))`, with `v` and `−v` both contributing.
pub fn observable_f(basis: &LatticeBasis, f: &Observable, norms: &(NormSpec, NormSpec)) -> Result<f64> {
    let s = compute_s_lambda(basis, norms)?;
    observable_f_on(&s, basis.m, f, norms)
}

pub fn observable_f_on(s: &SLambda, m: usize, f: &Observable, norms: &(NormSpec, NormSpec)) -> Result<f64> {
    let mut total = 0.0;
    for v in &s.vectors {
        let (z, x, y) = phi(&v.w, m, norms)?;
        total += pair_value(f, z, &x, &y);
    }
    Ok(total)
}

/// Outcome of comparing `S_{a_l u(θ)Z^d}` with the best approximations in
/// the window `e^l ≤ ‖q‖ < e^{l+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    /// Best-approximation side, summed over `(p, q)` and `(−p, −q)`.
    pub lhs: f64,
    pub rhs: f64,
    pub sets_equal: bool,
    pub equal: bool,
    /// `(p, q)` pairs, sign-normalized, from each side.
    pub best: BTreeSet<Vec<BigInt>>,
    pub lattice: BTreeSet<Vec<BigInt>>,
}

fn normalize(pq: Vec<BigInt>, m: usize) -> Vec<BigInt> {
    let flip = pq[m..].iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative());
    if flip {
        pq.into_iter().map(|c| -c).collect()
    } else {
        pq
    }
}

pub fn correspondence_check(
    theta: &MatrixTheta,
    l: i64,
    f: &Observable,
    norms: &(NormSpec, NormSpec),
) -> Result<Correspondence> {
    if l < 0 {
        return Err(Error::invalid("window index must be nonnegative"));
    }
    let m = theta.m();
    let seq = enumerate_best(theta, (l + 1) as f64, norms)?;
    let window: Vec<&BestApprox> = seq
        .items
        .iter()
        .filter(|b| in_window(&b.q, &norms.1, l as f64, (l + 1) as f64))
        .collect();
    let mut lhs = 0.0;
    let mut best = BTreeSet::new();
    for b in &window {
        let (z, x, y) = b.phi();
        lhs += pair_value(f, z, &x, &y);
        best.insert(normalize(b.p.iter().chain(&b.q).cloned().collect(), m));
    }
    let lat = apply_flow(&embed_theta(theta), l);
    let s = compute_s_lambda(&lat, norms)?;
    let rhs = observable_f_on(&s, m, f, norms)?;
    let lattice: BTreeSet<Vec<BigInt>> = s.vectors.iter().map(|v| normalize(v.z.clone(), m)).collect();
    let sets_equal = best == lattice;
    let equal = sets_equal && (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0);
    Ok(Correspondence { lhs, rhs, sets_equal, equal, best, lattice })
}
