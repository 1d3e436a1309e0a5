//! Planar unimodular lattices in floating point: a Haar sampler on
//! `SL_2(R)/SL_2(Z)` and Lagrange–Gauss reduction.

use std::f64::consts::PI;

use rand::Rng;

pub type Basis2 = [[f64; 2]; 2];

/// Columns `b[0]`, `b[1]` of a Haar-random unimodular planar lattice.
///
/// `z = x + iy` is drawn from the standard fundamental domain with the
/// hyperbolic measure `dx dy / y²`, then rotated by a uniform angle.
pub fn sample_haar_2d<R: Rng + ?Sized>(rng: &mut R) -> Basis2 {
    let y0 = 3f64.sqrt() / 2.0;
    let (x, y) = loop {
        let x: f64 = rng.random_range(-0.5..0.5);
        let u: f64 = 1.0 - rng.random::<f64>();
        let y = y0 / u;
        if x * x + y * y >= 1.0 {
            break (x, y);
        }
    };
    let s = 1.0 / y.sqrt();
    let b1 = [s, 0.0];
    let b2 = [s * x, s * y];
    let a: f64 = rng.random_range(0.0..2.0 * PI);
    let (sn, cs) = a.sin_cos();
    let rot = |v: [f64; 2]| [cs * v[0] - sn * v[1], sn * v[0] + cs * v[1]];
    [rot(b1), rot(b2)]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Lagrange–Gauss reduction; the first returned vector is a shortest one.
pub fn reduce_2d(b: Basis2) -> Basis2 {
    let [mut u, mut v] = b;
    if dot(u, u) > dot(v, v) {
        std::mem::swap(&mut u, &mut v);
    }
    loop {
        let k = (dot(u, v) / dot(u, u)).round();
        v = [v[0] - k * u[0], v[1] - k * u[1]];
        if dot(v, v) >= dot(u, u) {
            return [u, v];
        }
        std::mem::swap(&mut u, &mut v);
    }
}

/// Euclidean length of a shortest nonzero vector.
pub fn shortest_length(b: Basis2) -> f64 {
    dot(reduce_2d(b)[0], reduce_2d(b)[0]).sqrt()
}

/// Euclidean length of a shortest vector of `diag(e^t, e^{−t}) · b`.
pub fn shortest_length_flowed(b: Basis2, t: f64) -> f64 {
    let (ex, ey) = (t.exp(), (-t).exp());
    shortest_length([[ex * b[0][0], ey * b[0][1]], [ex * b[1][0], ey * b[1][1]]])
}

/// Haar probability that `λ₁ < r`, valid for `r ≤ (4/3)^{1/4}` where at most
/// one `±` pair of primitive vectors can be that short.
pub fn shortest_length_cdf(r: f64) -> f64 {
    3.0 * r * r / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn reduction_finds_shortest() {
        let b = [[1.0, 0.0], [7.0, 1.0]];
        assert!((shortest_length(b) - 1.0).abs() < 1e-15);
        let b = [[3.0, 1.0], [2.0, 1.0]];
        assert!((shortest_length(b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_shortest_vector_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let hits = (0..n).filter(|_| shortest_length(sample_haar_2d(&mut rng)) < 0.8).count();
        let p = hits as f64 / n as f64;
        assert!((p - shortest_length_cdf(0.8)).abs() < 0.005, "{p}");
    }
}
