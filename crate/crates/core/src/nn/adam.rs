//! Bias-corrected Adam updates over a [`ParamSet`].

use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use super::tensor::Tensor;
use super::NnError;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer state: per-parameter moment accumulators plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub step: u64,
    /// `(name, first moment, second moment)` in parameter order.
    pub moments: Vec<(String, Tensor, Tensor)>,
}

impl AdamState {
    /// Zero-initialized state shaped after `model`'s parameters.
    pub fn new<M: ParamSet>(model: &M, hyper: AdamHyper) -> Self {
        let moments = model
            .params()
            .into_iter()
            .map(|(n, t)| (n, t.zeros_like(), t.zeros_like()))
            .collect();
        AdamState {
            hyper,
            step: 0,
            moments,
        }
    }
}

/// One Adam update. `grads` must list the same names in the same order as
/// `model.params()`.
pub fn adam_step<M: ParamSet>(
    model: &mut M,
    grads: &[(String, Tensor)],
    state: &mut AdamState,
) -> Result<(), NnError> {
    let mut params = model.params_mut();
    if params.len() != grads.len() || params.len() != state.moments.len() {
        return Err(NnError::ParamMismatch {
            context: "adam_step",
            detail: format!(
                "{} params, {} grads, {} moment slots",
                params.len(),
                grads.len(),
                state.moments.len()
            ),
        });
    }
    state.step += 1;
    let t = state.step;
    let h = state.hyper;
    let bc1 = 1.0 - h.beta1.powi(t as i32);
    let bc2 = 1.0 - h.beta2.powi(t as i32);
    for (((pname, param), (gname, grad)), (mname, m, v)) in params
        .iter_mut()
        .zip(grads.iter())
        .zip(state.moments.iter_mut())
    {
        if pname != gname || pname != mname {
            return Err(NnError::ParamMismatch {
                context: "adam_step",
                detail: format!("param {pname:?} vs grad {gname:?} vs moment {mname:?}"),
            });
        }
        if param.shape() != grad.shape() {
            return Err(NnError::ShapeMismatch {
                context: "adam_step",
                expected: param.shape().to_vec(),
                got: grad.shape().to_vec(),
            });
        }
        let pd = param.data_mut();
        let gd = grad.data();
        let md = m.data_mut();
        let vd = v.data_mut();
        for i in 0..pd.len() {
            let g = gd[i];
            md[i] = h.beta1 * md[i] + (1.0 - h.beta1) * g;
            vd[i] = h.beta2 * vd[i] + (1.0 - h.beta2) * g * g;
            let m_hat = md[i] / bc1;
            let v_hat = vd[i] / bc2;
            pd[i] -= h.learning_rate * m_hat / (v_hat.sqrt() + h.epsilon);
        }
    }
    for (name, param) in params {
        let _ = name;
        param.check_finite("adam_step")?;
    }
    Ok(())
}
