use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::trace;
use crate::element::Element;
use crate::error::{QhmError, Result};
use crate::params::{unit_phase, ModelParams, Truncation};
use crate::representation::{expectation, GridVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum StateKind {
    Trace,
    /// `a -> <pi(a) xi, xi>` for a unit vector `xi`.
    Vector(GridVector),
}

/// A state on the truncated algebra, tied to the parameters and grid it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub params: ModelParams,
    pub trunc: Truncation,
    pub kind: StateKind,
}

impl State {
    pub fn trace(params: ModelParams, trunc: Truncation) -> Self {
        State { params, trunc, kind: StateKind::Trace }
    }

    /// Vector state of `xi / ||xi||`.
    pub fn vector(params: ModelParams, trunc: Truncation, xi: GridVector) -> Result<Self> {
        if xi.nx != trunc.nx || xi.ny != trunc.ny {
            return Err(QhmError::Config(format!(
                "vector base grid {}x{} does not match truncation {}x{}",
                xi.nx, xi.ny, trunc.nx, trunc.ny
            )));
        }
        let n = xi.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(QhmError::Domain("vector state needs a nonzero finite vector".into()));
        }
        Ok(State { params, trunc, kind: StateKind::Vector(xi.scaled(1.0 / n)) })
    }

    pub fn is_trace(&self) -> bool {
        matches!(self.kind, StateKind::Trace)
    }

    /// Same model data and grid.
    pub fn compatible(&self, other: &State) -> bool {
        self.params == other.params && self.trunc == other.trunc
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let st: State = serde_json::from_str(s)?;
        st.params.validate()?;
        st.trunc.validate()?;
        if let StateKind::Vector(xi) = &st.kind {
            if xi.data.len() != (2 * xi.q + 1) * xi.nx * xi.ny {
                return Err(QhmError::Config("state vector has the wrong length".into()));
            }
            return State::vector(st.params, st.trunc, xi.clone());
        }
        Ok(st)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        State::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `s(a)` without any self-adjointness handling.
pub fn state_value(s: &State, a: &Element) -> Result<Complex64> {
    if s.params != *a.params() || s.trunc.nx != a.trunc().nx || s.trunc.ny != a.trunc().ny {
        return Err(QhmError::Config("state and element are defined over different models or grids".into()));
    }
    match &s.kind {
        StateKind::Trace => Ok(trace(a)),
        StateKind::Vector(xi) => expectation(a, xi),
    }
}

/// `Re s(a)` on the self-adjoint part of `a`.
pub fn state_eval(s: &State, a: &Element) -> Result<f64> {
    let defect = a.selfadjoint_defect();
    if defect > 1e-12 {
        log::warn!("state evaluated on a non-self-adjoint element (defect {defect:e}); using its self-adjoint part");
        return Ok(state_value(s, &a.selfadjoint_part())?.re);
    }
    Ok(state_value(s, a)?.re)
}

/// Periodic squared distance on the unit circle.
fn circle_dist2(a: f64, b: f64) -> f64 {
    let d = (a - b) - (a - b).round();
    d * d
}

/// Vector state of a Gaussian bump of the given width centred at `(x0, y0)` on the `p = 0` fiber.
pub fn localized_state(params: ModelParams, trunc: Truncation, x0: f64, y0: f64, width: f64) -> Result<State> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(QhmError::Config(format!("bump width must be positive, got {width}")));
    }
    let xi = GridVector::from_fn(trunc.q_max, trunc.nx, trunc.ny, |x, y, p| {
        if p != 0 {
            return Complex64::new(0.0, 0.0);
        }
        let r2 = circle_dist2(x, x0) + circle_dist2(y, y0);
        Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
    });
    State::vector(params, trunc, xi)
}

/// Vector state built from one Gaussian bump per fiber `|p| <= spread`, with
/// random centres, amplitudes and phases; deterministic in `seed`.
pub fn random_vector_state(seed: u64, params: ModelParams, trunc: Truncation, spread: usize) -> Result<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = spread.min(trunc.q_max) as i64;
    let bumps: Vec<(f64, f64, f64, f64, f64)> = (-s..=s)
        .map(|_| {
            (
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.08..0.25),
                rng.random_range(0.2..1.0),
                rng.random_range(0.0..1.0),
            )
        })
        .collect();
    let xi = GridVector::from_fn(trunc.q_max, trunc.nx, trunc.ny, |x, y, p| {
        if p.abs() > s {
            return Complex64::new(0.0, 0.0);
        }
        let (cx, cy, w, amp, phase) = bumps[(p + s) as usize];
        let r2 = circle_dist2(x, cx) + circle_dist2(y, cy);
        unit_phase(phase) * (amp * (-r2 / (2.0 * w * w)).exp())
    });
    State::vector(params, trunc, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{involution, star, zero_mode};
    use crate::element::random_element_banded;

    fn setup() -> (ModelParams, Truncation) {
        (ModelParams::default(), Truncation::new(2, 12, 12, 4).unwrap())
    }

    #[test]
    fn states_are_normalized() {
        let (params, trunc) = setup();
        let id = Element::identity(params, trunc);
        let states = [
            State::trace(params, trunc),
            localized_state(params, trunc, 0.2, 0.5, 0.1).unwrap(),
            random_vector_state(3, params, trunc, 2).unwrap(),
        ];
        for s in &states {
            assert!((state_eval(s, &id).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn vector_states_are_positive_and_real() {
        let (params, trunc) = setup();
        let s = random_vector_state(5, params, trunc, 2).unwrap();
        let a = random_element_banded(1, trunc, params, 0.5, 1).unwrap();
        let aa = star(&involution(&a), &a).unwrap();
        let v = state_value(&s, &aa).unwrap();
        assert!(v.re >= -1e-10);
        assert!(v.im.abs() < 1e-10);
    }

    #[test]
    fn localized_state_collapses_to_weighted_average() {
        let (params, trunc) = setup();
        let s = localized_state(params, trunc, 0.3, 0.6, 0.1).unwrap();
        let a = zero_mode(&random_element_banded(2, trunc, params, 0.5, 2).unwrap()).selfadjoint_part();
        let StateKind::Vector(xi) = &s.kind else { unreachable!() };
        let mut want = 0.0;
        for ix in 0..trunc.nx {
            for iy in 0..trunc.ny {
                let w = xi.get(0, ix, iy).norm_sqr() * xi.cell_weight();
                want += w * crate::fold_evaluate(&a, trunc.x_at(ix), trunc.y_at(iy), 0).unwrap().re;
            }
        }
        assert!((state_eval(&s, &a).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let (params, trunc) = setup();
        let xi = GridVector::zeros(4, 12, 12);
        assert!(matches!(State::vector(params, trunc, xi), Err(QhmError::Domain(_))));
    }

    #[test]
    fn state_json_round_trip() {
        let (params, trunc) = setup();
        let s = random_vector_state(8, params, trunc, 1).unwrap();
        let back = State::from_json(&s.to_json().unwrap()).unwrap();
        let a = random_element_banded(2, trunc, params, 0.5, 2).unwrap().selfadjoint_part();
        assert!((state_eval(&s, &a).unwrap() - state_eval(&back, &a).unwrap()).abs() < 1e-14);
    }
}
