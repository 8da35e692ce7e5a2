//! Central-difference gradient estimates, used as the reference for the
//! analytic reverse pass.

use super::mlp::Mlp;
use crate::error::Result;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Floor applied to the denominator of [`relative_error`].
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

/// Central-difference gradient of `objective` with respect to every
/// parameter of `net`.
pub fn central_difference<F>(net: &Mlp, mut objective: F) -> Vec<f64>
where
    F: FnMut(&Mlp) -> f64,
{
    let mut probe = net.clone();
    let mut grads = Vec::with_capacity(net.param_count());
    for i in 0..net.param_count() {
        let original = probe.params()[i];
        probe.params_mut()[i] = original + DEFAULT_STEP;
        let up = objective(&probe);
        probe.params_mut()[i] = original - DEFAULT_STEP;
        let down = objective(&probe);
        probe.params_mut()[i] = original;
        grads.push((up - down) / (2.0 * DEFAULT_STEP));
    }
    grads
}

/// Central-difference gradient of `head(net(input))` with respect to the
/// network parameters.
pub fn finite_diff_grad<H>(net: &Mlp, input: &[f64], head: H) -> Result<Vec<f64>>
where
    H: Fn(&[f64]) -> f64,
{
    // surface dimension errors before probing
    net.forward(input)?;
    Ok(central_difference(net, |n| {
        head(&n.forward(input).expect("dimensions checked above"))
    }))
}

/// Relative error between an analytic gradient and its estimate.
///
/// The error is measured in the max norm and scaled by the larger of the
/// two vectors' max norms, floored at [`RELATIVE_ERROR_FLOOR`].
pub fn relative_error(analytic: &[f64], estimate: &[f64]) -> f64 {
    assert_eq!(analytic.len(), estimate.len(), "gradient lengths differ");
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = analytic
        .iter()
        .zip(estimate)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = max_abs(analytic).max(max_abs(estimate)).max(RELATIVE_ERROR_FLOOR);
    diff / scale
}
