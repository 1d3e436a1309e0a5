//! Property checks shared by the property suite and the acceptance run.
//! Each returns `Err` with the shrunk counterexample on failure.

use std::collections::BTreeSet;

use dlx_core::best_approx::{enumerate_best, in_window, min_residual, qnorm_cmp_exp, MatrixTheta};
use dlx_core::cf::{cf_expand, convergents, fold, random_dyadic};
use dlx_core::experiments::{self, Mode, RunConfig};
use dlx_core::lattice::perturb::{random_lattice, random_perturbation};
use dlx_core::lattice::{compute_s_lambda, determinant, embed_theta, mat_mul};
use dlx_core::norms::NormSpec;
use dlx_core::observable::Observable;
use dlx_core::reference::{nu_cdf, nu_density, nu_functional};
use dlx_core::BigRational;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// `det(AB) = det(A) det(B)`, and the perturbation and embedding
/// constructions are unimodular.
pub fn determinant_identity(cases: u32) -> Result<(), String> {
    let entry = (-20i64..=20, 1i64..=9).prop_map(|(n, d)| rat(n, d));
    let mat = |d: usize| proptest::collection::vec(proptest::collection::vec(entry.clone(), d), d);
    let strat = (2usize..=4).prop_flat_map(move |d| (mat(d), mat(d), any::<u64>()));
    report(runner(cases).run(&strat, |(a, b, seed)| {
        prop_assert_eq!(determinant(&mat_mul(&a, &b)), determinant(&a) * determinant(&b));
        let d = a.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(determinant(&random_perturbation(&mut rng, d, 1e-2)).is_one());
        let lat = random_lattice(&mut rng, d - 1, 1);
        prop_assert!(determinant(&lat.b).is_one());
        let theta = MatrixTheta::new(vec![vec![a[0][0].clone()]; d - 1], None).unwrap();
        prop_assert!(determinant(&embed_theta(&theta).b).is_one());
        Ok(())
    }))
}

/// Folding the expansion gives θ back, convergents satisfy
/// `p_k q_{k−1} − p_{k−1} q_k = (−1)^{k−1}`.
pub fn cf_reconstruction(cases: u32) -> Result<(), String> {
    let strat = (-10_000i64..10_000, 1i64..5_000);
    report(runner(cases).run(&strat, |(n, d)| {
        let theta = rat(n, d);
        let cf = cf_expand(&theta, usize::MAX);
        prop_assert!(cf.terminated);
        prop_assert_eq!(fold(&cf), theta.clone());
        let conv = convergents(&cf);
        for k in 1..conv.pairs.len() {
            let (p1, q1) = &conv.pairs[k];
            let (p0, q0) = &conv.pairs[k - 1];
            let det = p1 * q0 - p0 * q1;
            let expected = if k % 2 == 1 { BigInt::one() } else { -BigInt::one() };
            prop_assert_eq!(det, expected);
        }
        let last = conv.pairs.last().unwrap();
        prop_assert_eq!(BigRational::new(last.0.clone(), last.1.clone()), theta);
        Ok(())
    }))
}

fn sign_normalize(q: &[BigInt]) -> Vec<BigInt> {
    if q.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative()) {
        q.iter().map(|c| -c).collect()
    } else {
        q.to_vec()
    }
}

/// Brute force over every `q` with `‖q‖_∞ < e^T`: `q` is a best
/// approximation when no `q' ≠ ±q` has both norms at most its own.
fn brute_best(theta: &MatrixTheta, t: f64, norms: &(NormSpec, NormSpec)) -> BTreeSet<Vec<BigInt>> {
    let n = theta.n();
    let r = t.exp().ceil() as i64;
    let mut qs: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..n {
        qs = qs.into_iter().flat_map(|q| (-r..=r).map(move |v| [q.clone(), vec![v]].concat())).collect();
    }
    let cands: Vec<(Vec<BigInt>, BigRational, BigRational)> = qs
        .into_iter()
        .filter(|q| q.iter().any(|&v| v != 0))
        .map(|q| q.into_iter().map(BigInt::from).collect::<Vec<_>>())
        .filter(|q| qnorm_cmp_exp(q, &norms.1, t) == std::cmp::Ordering::Less)
        .map(|q| {
            let res = min_residual(theta, &q, &norms.0).unwrap();
            let qr: Vec<BigRational> = q.iter().map(|v| BigRational::from_integer(v.clone())).collect();
            (q.clone(), norms.0.key(&res.residual), norms.1.key(&qr))
        })
        .collect();
    cands
        .iter()
        .filter(|(q, rk, qk)| {
            let nq = sign_normalize(q);
            !cands.iter().any(|(q2, rk2, qk2)| sign_normalize(q2) != nq && rk2 <= rk && qk2 <= qk)
        })
        .map(|(q, _, _)| sign_normalize(q))
        .collect()
}

/// `enumerate_best` agrees with brute force for small horizons.
pub fn best_approx_brute_force(cases: u32) -> Result<(), String> {
    let strat = (any::<u64>(), 1usize..=2, 1usize..=2, 1.0f64..3.5);
    report(runner(cases).run(&strat, |(seed, m, n, t)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = (0..m).map(|_| (0..n).map(|_| random_dyadic(&mut rng, 40)).collect()).collect();
        let theta = MatrixTheta::new(entries, None).unwrap();
        let norms = (NormSpec::sup(m), NormSpec::sup(n));
        let t = if n == 2 { t.min(2.3) } else { t };
        let fast: BTreeSet<Vec<BigInt>> =
            enumerate_best(&theta, t, &norms).unwrap().items.iter().map(|b| sign_normalize(&b.q)).collect();
        prop_assert_eq!(fast, brute_best(&theta, t, &norms));
        Ok(())
    }))
}

fn set_of(s: &dlx_core::lattice::SLambda) -> BTreeSet<Vec<BigRational>> {
    s.vectors
        .iter()
        .map(|p| {
            let flip = p.w.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative());
            p.w.iter().map(|c| if flip { -c } else { c.clone() }).collect()
        })
        .collect()
}

/// `S_Λ` depends on the lattice, not on the basis.
pub fn s_lambda_basis_invariance(cases: u32) -> Result<(), String> {
    let strat = (any::<u64>(), proptest::collection::vec((0usize..3, 0usize..3, -3i64..=3), 1..6));
    report(runner(cases).run(&strat, |(seed, ops)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = random_lattice(&mut rng, 1, 1);
        let d = 2;
        let mut u: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| (i == j) as i64).collect()).collect();
        for (i, j, k) in ops {
            let (i, j) = (i % d, j % d);
            if i == j {
                continue;
            }
            for row in u.iter_mut() {
                row[j] += k * row[i];
            }
        }
        let norms = (NormSpec::sup(1), NormSpec::sup(1));
        let a = compute_s_lambda(&lat, &norms).unwrap();
        let b = compute_s_lambda(&lat.change_basis(&u), &norms).unwrap();
        prop_assert_eq!(set_of(&a), set_of(&b));
        Ok(())
    }))
}

/// `ν` is a probability density on `[0, 1]` with a monotone CDF.
pub fn nu_normalization(cases: u32) -> Result<(), String> {
    if (nu_functional(|_| 1.0) - 1.0).abs() > 1e-12 || (nu_cdf(1.0) - 1.0).abs() > 1e-12 {
        return Err("ν is not normalized".into());
    }
    report(runner(cases).run(&(0.0f64..1.0, 0.0f64..1.0), |(a, b)| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(nu_density(a) >= 0.0);
        prop_assert!(nu_cdf(lo) <= nu_cdf(hi) + 1e-15);
        Ok(())
    }))
}

fn small_dl(seed: u64, threads: usize) -> RunConfig {
    let mut c = RunConfig::new(Mode::Dl);
    c.n_horizon = Some(60);
    c.trials = 6;
    c.seed = seed;
    c.threads = Some(threads);
    c
}

/// Same seed gives identical records whatever the thread count; a
/// different seed gives different ones. JSON configs round-trip.
pub fn determinism_by_seed(cases: u32) -> Result<(), String> {
    report(runner(cases).run(&(any::<u64>(), 1usize..=4), |(seed, threads)| {
        let a = experiments::run(&small_dl(seed, 1)).unwrap();
        let b = experiments::run(&small_dl(seed, threads)).unwrap();
        prop_assert_eq!(&a.records, &b.records);
        let c = experiments::run(&small_dl(seed.wrapping_add(1), threads)).unwrap();
        prop_assert_ne!(&a.records, &c.records);
        let cfg = small_dl(seed, threads);
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(dlx_core::io::parse_config(&text).unwrap(), cfg);
        Ok(())
    }))
}

/// Window sums add up across checkpoints, and `F ≡ 1` counts approximations.
pub fn checkpoint_additivity(cases: u32) -> Result<(), String> {
    report(runner(cases).run(&(any::<u64>(), 2usize..9), |(seed, t)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = MatrixTheta::new(vec![vec![random_dyadic(&mut rng, 400)]], Some(rat(1, 1) / BigRational::from_integer(BigInt::one() << 400))).unwrap();
        let norms = (NormSpec::sup(1), NormSpec::sup(1));
        let fs = [Observable::Coefficient, Observable::Constant { value: 1.0 }];
        let w = dlx_core::reference::window_sums_multi(&theta, t, &fs, &norms).unwrap();
        let seq = enumerate_best(&theta, (t + 1) as f64, &norms).unwrap();
        let inside: Vec<_> = seq.items.iter().filter(|b| in_window(&b.q, &norms.1, 1.0, (t + 1) as f64)).collect();
        let direct_count = inside.len() as f64;
        let direct_sum: f64 = inside.iter().map(|b| b.evaluate(&fs[0])).sum();
        prop_assert!((w[1].iter().sum::<f64>() - direct_count).abs() < 1e-9);
        prop_assert!((w[0].iter().sum::<f64>() - direct_sum).abs() < 1e-9);
        let half = t / 2;
        let split: f64 = w[0][..half].iter().sum::<f64>() + w[0][half..].iter().sum::<f64>();
        prop_assert!((split - w[0].iter().sum::<f64>()).abs() < 1e-12);
        Ok(())
    }))
}

pub fn all(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("determinant identity", determinant_identity(cases)),
        ("CF reconstruction", cf_reconstruction(cases)),
        ("best-approx brute force", best_approx_brute_force(cases / 4 + 1)),
        ("S_Λ basis invariance", s_lambda_basis_invariance(cases / 4 + 1)),
        ("ν normalization", nu_normalization(cases)),
        ("determinism by seed", determinism_by_seed(8)),
        ("checkpoint additivity", checkpoint_additivity(cases / 4 + 1)),
    ]
}
