//! Central finite-difference checking of analytic gradients.

use super::params::ParamSet;
use super::tensor::Tensor;
use super::NnError;

/// Compare `analytic` gradients against central finite differences of
/// `loss_fn` and return the worst relative error,
/// `|a - n| / max(|a|, |n|, 1e-8)`, over every scalar parameter.
///
/// `analytic` must carry the same names in the same order as
/// `model.params()`. The model is restored to its original parameters before
/// returning. Intended for small models (the cost is two loss evaluations per
/// scalar).
pub fn grad_check<M, F, E>(
    model: &mut M,
    analytic: &[(String, Tensor)],
    loss_fn: F,
    h: f64,
) -> Result<f64, E>
where
    M: ParamSet,
    F: Fn(&M) -> Result<f64, E>,
    E: From<NnError>,
{
    let names: Vec<String> = model.params().into_iter().map(|(n, _)| n).collect();
    if names.len() != analytic.len() {
        return Err(NnError::ParamMismatch {
            context: "grad_check",
            detail: format!("{} params, {} gradient tensors", names.len(), analytic.len()),
        }
        .into());
    }
    let mut worst = 0.0_f64;
    for (pi, name) in names.iter().enumerate() {
        let (gname, gtensor) = &analytic[pi];
        if gname != name {
            return Err(NnError::ParamMismatch {
                context: "grad_check",
                detail: format!("param {name:?} vs gradient {gname:?}"),
            }
            .into());
        }
        let len = {
            let params = model.params();
            let t = params[pi].1;
            if t.shape() != gtensor.shape() {
                return Err(NnError::ShapeMismatch {
                    context: "grad_check",
                    expected: t.shape().to_vec(),
                    got: gtensor.shape().to_vec(),
                }
                .into());
            }
            t.len()
        };
        for i in 0..len {
            let orig = model.params()[pi].1.data()[i];
            set_scalar(model, pi, i, orig + h);
            let plus = loss_fn(model)?;
            set_scalar(model, pi, i, orig - h);
            let minus = loss_fn(model)?;
            set_scalar(model, pi, i, orig);
            let numeric = (plus - minus) / (2.0 * h);
            let a = gtensor.data()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}

fn set_scalar<M: ParamSet>(model: &mut M, param_index: usize, i: usize, value: f64) {
    let mut params = model.params_mut();
    params[param_index].1.data_mut()[i] = value;
}
