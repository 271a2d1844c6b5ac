//! States and lower bounds on the metric they inherit from the Lip seminorm.

mod program;
mod state;

use serde::{Deserialize, Serialize};

use crate::algebra::{lip_seminorm, trace, zero_mode};
use crate::element::Element;
use crate::error::Result;

pub use program::{
    distance_lower_bound, distance_lower_bound_observed, DistanceResult, Iterate, LipBallProgram, SolverOptions,
};
pub use state::{localized_state, random_vector_state, state_eval, state_value, State, StateKind};

/// The radius bound every computed distance must respect.
pub const RADIUS_BOUND: f64 = 6.0;

/// The bound on `|mu(a) - tau(a^(0))|` over the Lip ball.
pub const ZERO_MODE_GAP_BOUND: f64 = 3.0;

/// `|mu(a) - tau(a^(0))|`, after rescaling `a` into the Lip ball if needed.
///
/// Scalars (`L(a) = 0`) are not rescaled.
pub fn zero_mode_gap(mu: &State, a: &Element) -> Result<f64> {
    let l = lip_seminorm(a)?;
    let a = if l > 1.0 { a.scale_real(1.0 / l) } else { a.clone() };
    Ok((state_eval(mu, &a)? - trace(&zero_mode(&a)).re).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub bounds: Vec<f64>,
    pub max: f64,
    pub limit: f64,
    pub passed: bool,
}

/// Distance lower bounds for each pair, checked against the radius bound.
pub fn radius_check(samples: &[(State, State)], opts: &SolverOptions) -> Result<RadiusReport> {
    let mut bounds = Vec::with_capacity(samples.len());
    for (mu, nu) in samples {
        bounds.push(distance_lower_bound(mu, nu, opts)?.bound);
    }
    let max = bounds.iter().copied().fold(0.0, f64::max);
    let limit = RADIUS_BOUND + 1e-6;
    Ok(RadiusReport { passed: bounds.iter().all(|b| *b <= limit && *b >= 0.0), bounds, max, limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ModelParams, Truncation};

    #[test]
    fn gap_of_the_unit_is_zero() {
        let params = ModelParams::default();
        let trunc = Truncation::new(2, 12, 12, 4).unwrap();
        let mu = random_vector_state(1, params, trunc, 1).unwrap();
        let gap = zero_mode_gap(&mu, &Element::identity(params, trunc)).unwrap();
        assert!(gap < 1e-14);
    }

    #[test]
    fn trace_pair_has_zero_radius() {
        let params = ModelParams::default();
        let trunc = Truncation::new(2, 12, 12, 4).unwrap();
        let t = State::trace(params, trunc);
        let r = radius_check(&[(t.clone(), t)], &SolverOptions::default()).unwrap();
        assert_eq!(r.bounds, vec![0.0]);
        assert!(r.passed);
    }
}
