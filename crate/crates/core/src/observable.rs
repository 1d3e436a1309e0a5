//! Test functions `F : R_{≥0} × S^m × S^n → R` evaluated on
//! `(‖x‖^m‖y‖^n, x/‖x‖, y/‖y‖)`.

use serde::{Deserialize, Serialize};

/// Preset observables, selectable from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum Observable {
    /// `F ≡ value`; `value = 1` counts best approximations.
    Constant { value: f64 },
    /// `F(z, ·, ·) = z`, the approximation coefficient.
    Coefficient,
    /// `F(z, x, ·) = z · x_1`, sensitive to the side of approach.
    SignedCoefficient,
    /// `F(z, ·, ·) = min(1, max(0, (z − lo)/(hi − lo)))`, a Lipschitz step.
    Ramp { lo: f64, hi: f64 },
}

impl Default for Observable {
    fn default() -> Self {
        Observable::Coefficient
    }
}

impl Observable {
    pub fn eval(&self, z: f64, x_dir: &[f64], _y_dir: &[f64]) -> f64 {
        match self {
            Observable::Constant { value } => *value,
            Observable::Coefficient => z,
            Observable::SignedCoefficient => z * x_dir.first().copied().unwrap_or(0.0),
            Observable::Ramp { lo, hi } => ((z - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// 1-D evaluation with directions `x = sign`, `y = +1`.
    pub fn eval_1d(&self, z: f64, sign: i8) -> f64 {
        self.eval(z, &[sign as f64], &[1.0])
    }

    /// Whether `F` ignores the direction arguments.
    pub fn depends_on_z_only(&self) -> bool {
        !matches!(self, Observable::SignedCoefficient)
    }

    /// `sup |F|` over `z ∈ [0, z_max]`.
    pub fn c0_bound(&self, z_max: f64) -> f64 {
        match self {
            Observable::Constant { value } => value.abs(),
            Observable::Coefficient | Observable::SignedCoefficient => z_max,
            Observable::Ramp { .. } => 1.0,
        }
    }

    /// Lipschitz constant in `z`.
    pub fn lip_z(&self) -> f64 {
        match self {
            Observable::Constant { .. } => 0.0,
            Observable::Coefficient | Observable::SignedCoefficient => 1.0,
            Observable::Ramp { lo, hi } => 1.0 / (hi - lo),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Observable::Constant { value } => format!("constant({value})"),
            Observable::Coefficient => "coefficient".into(),
            Observable::SignedCoefficient => "signed-coefficient".into(),
            Observable::Ramp { lo, hi } => format!("ramp({lo},{hi})"),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        match self {
            Observable::Ramp { lo, hi } if !(lo < hi) => {
                Err(crate::Error::Config(format!("ramp needs lo < hi, got {lo} and {hi}")))
            }
            Observable::Constant { value } if !value.is_finite() => {
                Err(crate::Error::Config("constant observable must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(Observable::Constant { value: 1.0 }.eval_1d(0.3, -1), 1.0);
        assert_eq!(Observable::Coefficient.eval_1d(0.3, -1), 0.3);
        assert_eq!(Observable::SignedCoefficient.eval_1d(0.3, -1), -0.3);
        assert_eq!(Observable::Ramp { lo: 0.25, hi: 0.75 }.eval_1d(0.5, 1), 0.5);
        let json = serde_json::to_string(&Observable::Ramp { lo: 0.0, hi: 1.0 }).unwrap();
        assert_eq!(json, r#"{"id":"ramp","lo":0.0,"hi":1.0}"#);
        let back: Observable = serde_json::from_str(r#"{"id":"coefficient"}"#).unwrap();
        assert_eq!(back, Observable::Coefficient);
    }
}
