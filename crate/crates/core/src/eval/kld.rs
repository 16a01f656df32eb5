use super::{Distribution, EvalError};

pub const DEFAULT_EPSILON: f64 = 1e-9;

/// `D_KL(P || Q)` in nats over the union of both supports.
///
/// Items missing from `Q` (or with `q < epsilon`) are floored at `epsilon`
/// and `Q` is renormalized; `P` is used as given. Terms with `p = 0` add
/// nothing.
pub fn kld(p: &Distribution, q: &Distribution, epsilon: f64) -> Result<f64, EvalError> {
    p.validate()?;
    q.validate()?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(EvalError::InvalidDistribution(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let mut support: Vec<&String> = p.iter().map(|(k, _)| k).chain(q.iter().map(|(k, _)| k)).collect();
    support.sort();
    support.dedup();
    let mut floored = false;
    let qs: Vec<f64> = support
        .iter()
        .map(|k| {
            let v = q.prob(k);
            if v < epsilon {
                floored = true;
                epsilon
            } else {
                v
            }
        })
        .collect();
    // Only rescale when flooring changed the mass, so kld(P, P) is exactly 0.
    let z: f64 = if floored { qs.iter().sum() } else { 1.0 };
    let mut total = 0.0;
    for (k, qv) in support.iter().zip(qs) {
        let pv = p.prob(k);
        if pv > 0.0 {
            total += pv * (pv / (qv / z)).ln();
        }
    }
    Ok(total.max(0.0))
}
