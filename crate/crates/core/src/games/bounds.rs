use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand sides of the perturbation bounds for two graphons sharing `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuboptimalityBound {
    /// Bound on `‖θ̂₁ − θ̂₂‖_{L₂}`.
    pub theta_gap: f64,
    /// Bound on `T₁(θ̂₁) − T₁(θ̂₂)`.
    pub welfare_gap: f64,
}

/// With `m = ‖𝕎₁‖ ∨ ‖𝕎₂‖` and `d = ‖𝕎₁ − 𝕎₂‖`:
/// `2γ(1+γ‖𝕎₁‖)² d (‖θ‖+√B) / (1−γm)³` and `2γ(‖θ‖+√B)² d / (1−γm)⁵`.
pub fn suboptimality_bound(
    w1_norm: f64,
    w2_norm: f64,
    op_distance: f64,
    gamma: f64,
    theta_norm: f64,
    budget: f64,
) -> Result<SuboptimalityBound> {
    if budget < 0.0 || theta_norm < 0.0 || op_distance < 0.0 {
        return Err(Error::invalid("norms, distance and budget must be nonnegative"));
    }
    let margin = 1.0 - gamma * w1_norm.max(w2_norm);
    if !(margin > 0.0) {
        return Err(Error::SpectralCondition {
            what: "gamma * max(||W1||_op, ||W2||_op)".into(),
            value: 1.0 - margin,
        });
    }
    let scale = theta_norm + budget.sqrt();
    Ok(SuboptimalityBound {
        theta_gap: 2.0 * gamma * (1.0 + gamma * w1_norm).powi(2) / margin.powi(3) * op_distance * scale,
        welfare_gap: 2.0 * gamma * scale * scale / margin.powi(5) * op_distance,
    })
}
