use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One row per (trial, checkpoint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub trial: u64,
    /// Horizon reached, in units of `ln ‖q‖`.
    #[serde(rename = "checkpoint_T")]
    pub checkpoint_t: f64,
    /// `F_F(θ, T)`.
    #[serde(rename = "sum_F")]
    pub sum_f: f64,
    /// `N(θ, T)`.
    #[serde(rename = "count_N")]
    pub count_n: u64,
    /// `F_F(θ, T) − γT`.
    pub err_gamma: f64,
    /// `N(θ, T) − γ₀T`.
    pub err_gamma0: f64,
    /// `(F_F(θ, T) − γT)/√T`.
    pub clt_stat: f64,
    pub seed: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: u64,
    pub error: String,
}

/// Records plus a mode-specific JSON summary.
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: serde_json::Value,
    /// Constants the run was calibrated with (`γ`, `γ₀`, `C`, `M̂`, …).
    pub calibration: BTreeMap<String, f64>,
    pub failures: Vec<TrialFailure>,
    /// Pooled approximation coefficients (`dl`, `fractal`).
    pub coefficients: Vec<f64>,
}
