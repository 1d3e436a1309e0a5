//! Small statistics toolkit for the experiment reports.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Fraction of the sample `≤ z`.
pub fn empirical_cdf(sorted: &[f64], z: f64) -> f64 {
    sorted.partition_point(|v| *v <= z) as f64 / sorted.len() as f64
}

/// Kolmogorov–Smirnov distance `sup |F_n − F|`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance to `N(0, σ²)`; `σ = 0` compares with the point mass at 0.
pub fn ks_normal(sample: &[f64], sigma: f64) -> f64 {
    if sigma <= 0.0 {
        let n = sample.len() as f64;
        let neg = sample.iter().filter(|x| **x < 0.0).count() as f64;
        let pos = sample.iter().filter(|x| **x > 0.0).count() as f64;
        return (neg / n).max(pos / n);
    }
    let nd = Normal::new(0.0, sigma).expect("positive sigma");
    ks_distance(sample, |x| nd.cdf(x))
}

/// Best-fit centered normal (`σ̂² = mean of x²`) and its KS distance.
pub fn ks_fitted_centered_normal(sample: &[f64]) -> (f64, f64) {
    let sigma = (sample.iter().map(|x| x * x).sum::<f64>() / sample.len() as f64).sqrt();
    (sigma, ks_normal(sample, sigma))
}

/// Ordinary least squares `y ≈ a + b x`, returns `(a, b)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

fn quantile_sorted(sorted: &[f64], tau: f64) -> f64 {
    // minimizer of the check loss: the ceil(τn)-th order statistic
    let k = ((tau * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

pub fn quantile(x: &[f64], tau: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, tau)
}

fn check_loss(r: f64, tau: f64) -> f64 {
    if r >= 0.0 {
        tau * r
    } else {
        (tau - 1.0) * r
    }
}

/// Linear quantile regression at level `τ`, returns `(a, b)`.
///
/// The profile loss `b ↦ min_a Σ ρ_τ(y − a − b x)` is convex, so a golden
/// section search over `b` with the exact inner quantile suffices.
pub fn quantile_regression(x: &[f64], y: &[f64], tau: f64) -> (f64, f64) {
    let profile = |b: f64| {
        let mut r: Vec<f64> = x.iter().zip(y).map(|(u, v)| v - b * u).collect();
        r.sort_by(f64::total_cmp);
        let a = quantile_sorted(&r, tau);
        (a, r.iter().map(|v| check_loss(v - a, tau)).sum::<f64>())
    };
    let (_, b0) = ols(x, y);
    let width = 10.0 * (b0.abs() + 1.0);
    let (mut lo, mut hi) = (b0 - width, b0 + width);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (profile(c).1, profile(d).1);
    for _ in 0..200 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = profile(c).1;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = profile(d).1;
        }
        if hi - lo < 1e-12 * (1.0 + b0.abs()) {
            break;
        }
    }
    let b = 0.5 * (lo + hi);
    (profile(b).0, b)
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_against_uniform() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_distance(&s, |x| x.clamp(0.0, 1.0)) - 0.005).abs() < 1e-12);
        assert_eq!(ks_normal(&[0.0, 0.0], 0.0), 0.0);
    }

    #[test]
    fn regression_recovers_lines() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 0.5 * v).collect();
        let (a, b) = ols(&x, &y);
        assert!((a - 2.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
        let (a, b) = quantile_regression(&x, &y, 0.9);
        assert!((a - 2.0).abs() < 1e-8 && (b - 0.5).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn quantile_regression_upper_envelope() {
        // y = x + u with u ∈ {0, …, 9}: the 0.85 quantile line is x + 8
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            for u in 0..10 {
                x.push(i as f64);
                y.push(i as f64 + u as f64);
            }
        }
        let (a, b) = quantile_regression(&x, &y, 0.85);
        assert!((b - 1.0).abs() < 1e-6 && (a - 8.0).abs() < 1e-5, "{a} {b}");
    }

    #[test]
    fn spearman_signs() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 20.0, 25.0, 100.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    }
}
