//! Finite-difference gradient checking.

use crate::error::{Error, Result};
use crate::nn::{GradientSet, Parameterized};

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Compares an analytic gradient against central finite differences of
/// `loss`, returning the maximum relative error
/// `|g_a - g_n| / max(1e-8, |g_a| + |g_n|)` over all parameters.
///
/// `loss` must be a deterministic function of the model parameters; it is
/// re-evaluated twice per parameter. A zero-parameter model returns 0.
pub fn finite_diff_check<M, L>(model: &mut M, analytic: &GradientSet, mut loss: L, h: f64) -> Result<f64>
where
    M: Parameterized,
    L: FnMut(&M) -> f64,
{
    if !analytic.matches(model) {
        return Err(Error::Contract(
            "analytic gradient does not match model shape".into(),
        ));
    }
    let n_arrays = model.param_slices().len();
    let mut max_rel = 0.0_f64;
    for ai in 0..n_arrays {
        let len = model.param_slices()[ai].len();
        for ei in 0..len {
            let original = model.param_slices()[ai][ei];

            model.param_slices_mut()[ai][ei] = original + h;
            let plus = loss(model);
            model.param_slices_mut()[ai][ei] = original - h;
            let minus = loss(model);
            model.param_slices_mut()[ai][ei] = original;

            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss at perturbed parameter {}[{}]",
                    model.param_specs()[ai].name,
                    ei
                )));
            }

            let numeric = (plus - minus) / (2.0 * h);
            let g = analytic.arrays()[ai][ei];
            let rel = (g - numeric).abs() / (1e-8_f64).max(g.abs() + numeric.abs());
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}
