use crate::error::{domain, Result};

/// Time for the envelope `(1 + r t) e^{lambda t}` to fall to one half.
///
/// The envelope is decreasing past its maximum at `t = -1/lambda - 1/r`, so
/// the root is bracketed from there and found by bisection.
pub fn halflife_with_ratio(lambda: f64, ratio: f64) -> Result<f64> {
    if !(lambda < 0.0) || !lambda.is_finite() {
        return domain(format!("decay rate must be negative, got {lambda}"));
    }
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return domain(format!("ratio must be finite and nonnegative, got {ratio}"));
    }
    if ratio == 0.0 {
        return Ok(std::f64::consts::LN_2 / -lambda);
    }
    let f = |t: f64| (1.0 + ratio * t) * (lambda * t).exp() - 0.5;
    let mut lo = (-1.0 / lambda - 1.0 / ratio).max(0.0);
    let mut hi = lo.max(1.0 / -lambda);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Half-life of `e^{lambda t}`, or of `(1 + t) e^{lambda t}` when a
/// generalized eigenvector contributes with equal weight.
pub fn ep_halflife(lambda: f64, has_generalized: bool) -> Result<f64> {
    halflife_with_ratio(lambda, if has_generalized { 1.0 } else { 0.0 })
}
