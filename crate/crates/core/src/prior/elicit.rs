use super::{ElicitationSpec, HyperPriorParams};
use crate::error::{HmfmError, Result};

/// Hyperprior matching a prior mean `Λ_0` and variance `V_Λ` for `Λ`, with
/// every `γ_j` centred on `γ_0`:
///
/// `a_γ = Λ_0² / (d V_Λ)`, `b_γ = a_γ / (γ_0 Λ_0)`, `a_Λ = Λ_0² / V_Λ`, `b_Λ = Λ_0 / V_Λ`.
pub fn elicit(spec: &ElicitationSpec) -> Result<HyperPriorParams> {
    for (name, v) in [
        ("lambda0", spec.lambda0),
        ("v_lambda", spec.v_lambda),
        ("gamma0", spec.gamma0),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(HmfmError::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if spec.d == 0 {
        return Err(HmfmError::domain("d must be at least 1"));
    }
    let l0 = spec.lambda0;
    let v = spec.v_lambda;
    let a_gamma = l0 * l0 / (spec.d as f64 * v);
    HyperPriorParams::new(a_gamma, a_gamma / (spec.gamma0 * l0), l0 * l0 / v, l0 / v)
}
