//! Enumeration of lattice points in a product box
//! `{‖x‖ ≤ R_x, ‖y‖ ≤ R_y}`.
//!
//! The basis is first LLL-reduced in floating point (repeatedly, each round
//! applied exactly to the rational basis), coefficient bounds come from the
//! exact inverse of the reduced basis, and every point near a boundary is
//! decided on the rational layer.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{identity, inverse, mat_mul, mat_vec, LatticeBasis, RatMatrix};
use crate::expbound::cmp_exp;
use crate::norms::NormSpec;
use crate::rational::rational_to_f64;
use crate::{BigRational, Error, Result};

/// Default cap on the number of coefficient cells scanned.
pub const ENUMERATION_BUDGET: f64 = 1e8;

/// Relative slack of the floating prefilter.
const FLOAT_SLACK: f64 = 1e-7;

/// A box radius: exactly `c · e^k`, or a floating value decided in floating
/// point only.
#[derive(Debug, Clone, PartialEq)]
pub enum Radius {
    Exp { c: BigRational, k: i64 },
    Approx(f64),
}

impl Radius {
    pub fn exp(k: i64) -> Self {
        Radius::Exp { c: BigRational::one(), k }
    }

    pub fn scaled(c: BigRational, k: i64) -> Self {
        Radius::Exp { c, k }
    }

    pub fn value(&self) -> f64 {
        match self {
            Radius::Exp { c, k } => rational_to_f64(c) * (*k as f64).exp(),
            Radius::Approx(v) => *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpec {
    pub x_radius: Radius,
    pub y_radius: Radius,
    pub norms: (NormSpec, NormSpec),
}

/// A nonzero lattice point `v = a_l B z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    /// Coefficients with respect to the basis the lattice was given in.
    pub z: Vec<BigInt>,
    /// `B z`, i.e. the point before the flow.
    pub w: Vec<BigRational>,
    /// Floating coordinates of `v`.
    pub v: Vec<f64>,
    pub x_norm: f64,
    pub y_norm: f64,
    pub primitive: bool,
}

impl LatticePoint {
    pub fn negate(&self) -> Self {
        LatticePoint {
            z: self.z.iter().map(|c| -c).collect(),
            w: self.w.iter().map(|c| -c).collect(),
            v: self.v.iter().map(|c| -c).collect(),
            ..self.clone()
        }
    }
}

/// Exact comparisons of flowed norms against radii of the form `c·e^k`.
#[derive(Debug, Clone)]
pub struct FlowFrame {
    pub m: usize,
    pub n: usize,
    pub flow: i64,
    pub norms: (NormSpec, NormSpec),
}

impl FlowFrame {
    pub fn new(basis: &LatticeBasis, norms: &(NormSpec, NormSpec)) -> Self {
        FlowFrame { m: basis.m, n: basis.n, flow: basis.flow, norms: norms.clone() }
    }

    /// Orders `‖π₁(a_l w)‖` against `c·e^k`.
    pub fn cmp_x(&self, w: &[BigRational], c: &BigRational, k: i64) -> Ordering {
        let nm = &self.norms.0;
        let ke = nm.key_exp() as usize;
        let pow = nm.pow_norm(&w[..self.m]);
        if let Some(o) = zero_cases(&pow, c) {
            return o;
        }
        // ‖w_x‖^{m·ke} e^{n l ke} vs c^{m ke} e^{k m ke}
        let lhs = num_traits::pow(pow, self.m) / num_traits::pow(c.clone(), self.m * ke);
        let e = ke as i64 * (k * self.m as i64 - self.n as i64 * self.flow);
        cmp_exp(&lhs, e)
    }

    /// Orders `‖π₂(a_l w)‖` against `c·e^k`.
    pub fn cmp_y(&self, w: &[BigRational], c: &BigRational, k: i64) -> Ordering {
        let nn = &self.norms.1;
        let ke = nn.key_exp() as usize;
        let pow = nn.pow_norm(&w[self.m..]);
        if let Some(o) = zero_cases(&pow, c) {
            return o;
        }
        let lhs = pow / num_traits::pow(c.clone(), ke);
        let e = ke as i64 * (k + self.flow);
        cmp_exp(&lhs, e)
    }
}

fn zero_cases(pow: &BigRational, c: &BigRational) -> Option<Ordering> {
    match (pow.is_zero(), c.is_zero()) {
        (true, true) => Some(Ordering::Equal),
        (true, false) => Some(Ordering::Less),
        (false, true) => Some(Ordering::Greater),
        (false, false) => None,
    }
}

/// LLL reduction (δ = 0.99) of the columns of `f`; returns the integer
/// transform `V` with `f·V` reduced.
pub fn lll_f64(f: &[Vec<f64>]) -> Vec<Vec<i64>> {
    let d = f.len();
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| f[i][j]).collect()).collect();
    let mut v: Vec<Vec<i64>> = (0..d).map(|j| (0..d).map(|i| (i == j) as i64).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram_schmidt = |cols: &[Vec<f64>]| {
        let mut star: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut mu = vec![vec![0.0; d]; d];
        let mut norms = vec![0.0; d];
        for i in 0..d {
            let mut s = cols[i].clone();
            for j in 0..i {
                mu[i][j] = if norms[j] > 0.0 { dot(&cols[i], &star[j]) / norms[j] } else { 0.0 };
                for t in 0..d {
                    s[t] -= mu[i][j] * star[j][t];
                }
            }
            norms[i] = dot(&s, &s);
            star.push(s);
        }
        (mu, norms)
    };
    let mut k = 1;
    let mut guard = 0;
    while k < d && guard < 100_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (mu, _) = gram_schmidt(&cols);
            let r = mu[k][j].round();
            if r != 0.0 && r.abs() < 9e15 {
                let ri = r as i64;
                for t in 0..d {
                    cols[k][t] -= r * cols[j][t];
                    v[k][t] = v[k][t].saturating_sub(ri.saturating_mul(v[j][t]));
                }
            }
        }
        let (mu, norms) = gram_schmidt(&cols);
        if norms[k] >= (0.99 - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            cols.swap(k, k - 1);
            v.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    // v holds columns; return as a matrix
    (0..d).map(|i| (0..d).map(|j| v[j][i]).collect()).collect()
}

/// A reduced exact basis `B·U` of the same lattice.
#[derive(Debug, Clone)]
pub struct Reduced {
    pub b: RatMatrix,
    pub u: RatMatrix,
    pub f: Vec<Vec<f64>>,
    pub inv_f: Vec<Vec<f64>>,
}

pub fn reduce(basis: &LatticeBasis) -> Result<Reduced> {
    let d = basis.dim();
    let mut cur = basis.clone();
    let mut u = identity(d);
    for _ in 0..12 {
        let t = lll_f64(&cur.to_f64());
        if t.iter().flatten().any(|x| x.abs() > (1i64 << 52)) {
            return Err(Error::invalid("lattice reduction overflowed"));
        }
        let is_identity = t.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, &x)| x == (i == j) as i64));
        if is_identity {
            break;
        }
        let tr: RatMatrix = t
            .iter()
            .map(|row| row.iter().map(|&x| BigRational::from_integer(x.into())).collect())
            .collect();
        u = mat_mul(&u, &tr);
        cur.b = mat_mul(&cur.b, &tr);
    }
    let inv = inverse(&cur.b).ok_or_else(|| Error::invalid("singular basis"))?;
    let inv_f = inv.iter().map(|row| row.iter().map(rational_to_f64).collect()).collect();
    Ok(Reduced { f: cur.to_f64(), b: cur.b, u, inv_f })
}

/// All nonzero lattice points in the box, both `v` and `−v`.
pub fn points_in_box(basis: &LatticeBasis, bx: &BoxSpec) -> Result<Vec<LatticePoint>> {
    let half = points_in_box_half(basis, bx, ENUMERATION_BUDGET)?;
    Ok(half.iter().flat_map(|p| [p.clone(), p.negate()]).collect())
}

/// One representative per `±v` (first nonzero coefficient positive in the
/// reduced basis).
pub fn points_in_box_half(basis: &LatticeBasis, bx: &BoxSpec, budget: f64) -> Result<Vec<LatticePoint>> {
    let red = reduce(basis)?;
    points_in_box_reduced(basis, &red, bx, budget)
}

pub fn points_in_box_reduced(
    basis: &LatticeBasis,
    red: &Reduced,
    bx: &BoxSpec,
    budget: f64,
) -> Result<Vec<LatticePoint>> {
    let (m, n, d) = (basis.m, basis.n, basis.dim());
    let (nm, nn) = &bx.norms;
    let rx = bx.x_radius.value();
    let ry = bx.y_radius.value();
    if rx < 0.0 || ry < 0.0 || !rx.is_finite() || !ry.is_finite() {
        return Err(Error::invalid("box radii must be finite and nonnegative"));
    }
    let (lo_m, _) = nm.sup_equivalence();
    let (lo_n, _) = nn.sup_equivalence();
    let sx = (-(n as f64) / m as f64 * basis.flow as f64).exp();
    let sy = (basis.flow as f64).exp();
    let wbound: Vec<f64> = (0..d)
        .map(|i| if i < m { sx * rx / lo_m } else { sy * ry / lo_n })
        .collect();
    let bounds: Vec<i64> = (0..d)
        .map(|j| {
            let b: f64 = (0..d).map(|i| red.inv_f[j][i].abs() * wbound[i]).sum();
            (b * (1.0 + 1e-9) + 1e-9).floor() as i64
        })
        .collect();
    let cells: f64 = bounds.iter().map(|&b| (2 * b + 1) as f64).product();
    if cells > budget {
        return Err(Error::EnumerationBlowup { cells, budget });
    }
    let frame = FlowFrame::new(basis, &bx.norms);
    let mut out = Vec::new();
    let mut z: Vec<i64> = bounds.iter().map(|b| -b).collect();
    if bounds.iter().all(|&b| b == 0) {
        return Ok(out);
    }
    loop {
        if let Some(first) = z.iter().find(|c| **c != 0) {
            if *first > 0 {
                if let Some(p) = check_point(&z, red, &frame, bx, rx, ry)? {
                    out.push(p);
                }
            }
        }
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if z[i] < bounds[i] {
                z[i] += 1;
                break;
            }
            z[i] = -bounds[i];
        }
    }
}

fn check_point(
    z: &[i64],
    red: &Reduced,
    frame: &FlowFrame,
    bx: &BoxSpec,
    rx: f64,
    ry: f64,
) -> Result<Option<LatticePoint>> {
    let d = z.len();
    let m = frame.m;
    let v: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| red.f[i][j] * z[j] as f64).sum())
        .collect();
    let xn = frame.norms.0.norm_f64(&v[..m]);
    let yn = frame.norms.1.norm_f64(&v[m..]);
    let tiny = 1e-300;
    if xn > rx * (1.0 + FLOAT_SLACK) + tiny || yn > ry * (1.0 + FLOAT_SLACK) + tiny {
        return Ok(None);
    }
    let zr: Vec<BigRational> = z.iter().map(|&c| BigRational::from_integer(c.into())).collect();
    let w = mat_vec(&red.b, &zr);
    let x_ok = match &bx.x_radius {
        Radius::Approx(_) => xn <= rx,
        Radius::Exp { c, k } => {
            xn < rx * (1.0 - FLOAT_SLACK) || frame.cmp_x(&w, c, *k) != Ordering::Greater
        }
    };
    let y_ok = match &bx.y_radius {
        Radius::Approx(_) => yn <= ry,
        Radius::Exp { c, k } => {
            yn < ry * (1.0 - FLOAT_SLACK) || frame.cmp_y(&w, c, *k) != Ordering::Greater
        }
    };
    if !(x_ok && y_ok) {
        return Ok(None);
    }
    let g = z.iter().fold(0i64, |acc, &c| acc.gcd(&c));
    let z_orig: Vec<BigInt> = mat_vec(&red.u, &zr).into_iter().map(|c| c.to_integer()).collect();
    Ok(Some(LatticePoint { z: z_orig, w, v, x_norm: xn, y_norm: yn, primitive: g.abs().is_one() }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn sorted(mut pts: Vec<LatticePoint>) -> Vec<Vec<f64>> {
        let mut vs: Vec<Vec<f64>> = pts.drain(..).map(|p| p.v).collect();
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vs
    }

    fn norms() -> (NormSpec, NormSpec) {
        (NormSpec::sup(1), NormSpec::sup(1))
    }

    #[test]
    fn integer_lattice_unit_box() {
        let bx = BoxSpec { x_radius: Radius::exp(0), y_radius: Radius::exp(0), norms: norms() };
        let pts = points_in_box(&LatticeBasis::identity(1, 1), &bx).unwrap();
        assert_eq!(pts.len(), 8);
        assert!(pts.iter().all(|p| p.primitive));
        // direct scan oracle
        let mut want = Vec::new();
        for x in -1i64..=1 {
            for y in -1i64..=1 {
                if (x, y) != (0, 0) {
                    want.push(vec![x as f64, y as f64]);
                }
            }
        }
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sorted(pts), want);
    }

    #[test]
    fn empty_and_diagonal_boxes() {
        let theta = crate::best_approx::MatrixTheta::scalar(r(1_000_003, 2_718_281));
        let lat = super::super::embed_theta(&theta);
        let bx = BoxSpec {
            x_radius: Radius::scaled(BigRational::zero(), 0),
            y_radius: Radius::scaled(BigRational::zero(), 0),
            norms: norms(),
        };
        assert!(points_in_box(&lat, &bx).unwrap().is_empty());
        let diag = LatticeBasis::new(vec![vec![r(2, 1), r(0, 1)], vec![r(0, 1), r(1, 2)]], 1, 1).unwrap();
        let bx = BoxSpec { x_radius: Radius::exp(0), y_radius: Radius::exp(0), norms: norms() };
        let pts = points_in_box(&diag, &bx).unwrap();
        // (0, k/2) for k = ±1, ±2; only k = ±1 primitive
        let mut ys: Vec<f64> = pts.iter().map(|p| p.v[1]).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ys, vec![-1.0, -0.5, 0.5, 1.0]);
        assert!(pts.iter().all(|p| p.v[0] == 0.0));
        assert_eq!(pts.iter().filter(|p| p.primitive).count(), 2);
    }

    #[test]
    fn flowed_box_matches_brute_force() {
        let theta = crate::best_approx::MatrixTheta::scalar(r(31_415_926, 100_000_000));
        let lat = super::super::apply_flow(&super::super::embed_theta(&theta), 4);
        let bx = BoxSpec { x_radius: Radius::exp(0), y_radius: Radius::exp(1), norms: norms() };
        let got = points_in_box(&lat, &bx).unwrap();
        let e4 = 4f64.exp();
        let mut want = 0;
        for q in -200i64..=200 {
            for p in -100i64..=100 {
                let x = e4 * (p as f64 + 0.31415926 * q as f64);
                let y = q as f64 / e4;
                if (p, q) != (0, 0) && x.abs() <= 1.0 && y.abs() <= 1f64.exp() {
                    want += 1;
                }
            }
        }
        assert_eq!(got.len(), want);
    }
}
