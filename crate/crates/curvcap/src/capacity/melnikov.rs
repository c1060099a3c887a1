use crate::capacity::growth::GrowthConstraintSet;
use crate::error::{Error, Result};
use crate::kernels::curvature::curvature_total;
use crate::plane::measure::AtomicMeasure;

/// The mass-vs-curvature functional `g(m) = W^2 / (W + c^2(m))` with
/// `W = m(C)`. Large when the measure carries much mass with little
/// curvature; the quantity whose supremum over admissible measures tracks
/// the capacity of the support.
pub fn melnikov_functional(m: &AtomicMeasure, epsilon: f64) -> Result<f64> {
    let w = m.mass();
    if w == 0.0 {
        return Ok(0.0);
    }
    let k = curvature_total(m, epsilon)?.total;
    Ok(w * w / (w + k))
}

/// Best dilation of the weights: maximizes `g(t*m) = t W^2 / (W + t^2 K)`
/// over t > 0 subject to `t*m` staying inside the growth constraints.
///
/// Unconstrained maximizer is `t = sqrt(W/K)`; the feasible cap is
/// `t_max = 1/max_ratio`. With `K = 0` the functional is increasing in t, so
/// the cap is optimal. Returns `(t_star, value at t_star)`.
pub fn optimal_scaling(
    m: &AtomicMeasure,
    constraints: &GrowthConstraintSet,
    epsilon: f64,
) -> Result<(f64, f64)> {
    let w = m.mass();
    if w == 0.0 {
        return Ok((0.0, 0.0));
    }
    let k = curvature_total(m, epsilon)?.total;
    let mr = constraints.max_ratio(m);
    if !(mr > 0.0) {
        // mass > 0 guarantees some atom's own constraint ball is charged
        return Err(Error::invalid("constraint set does not see the measure"));
    }
    let t_max = 1.0 / mr;
    let t_star = if k > 0.0 {
        (w / k).sqrt().min(t_max)
    } else {
        t_max
    };
    let value = t_star * w * w / (w + t_star * t_star * k);
    Ok((t_star, value))
}
