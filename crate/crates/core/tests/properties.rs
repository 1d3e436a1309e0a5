mod common;

use common::props;

#[test]
fn determinant_identity() {
    props::determinant_identity(128).unwrap();
}

#[test]
fn cf_reconstruction() {
    props::cf_reconstruction(256).unwrap();
}

#[test]
fn best_approx_matches_brute_force() {
    props::best_approx_brute_force(48).unwrap();
}

#[test]
fn s_lambda_is_basis_invariant() {
    props::s_lambda_basis_invariance(48).unwrap();
}

#[test]
fn nu_is_a_probability_law() {
    props::nu_normalization(256).unwrap();
}

#[test]
fn runs_are_determined_by_seed() {
    props::determinism_by_seed(8).unwrap();
}

#[test]
fn window_sums_are_additive() {
    props::checkpoint_additivity(32).unwrap();
}
