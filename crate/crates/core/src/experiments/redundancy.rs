//! Oversampling relative to the tight frames the sampled systems come from.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Curvelet translation constants of the tight frame.
pub const CURVELET_DELTA: (f64, f64) = (14.0 / 3.0, 10.0 * PI / 9.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RedundancyInput {
    /// Translates `alpha k` against the unit translates of the wavelet basis.
    Meyer {
        alpha: f64,
    },
    Curvelet {
        alpha1: f64,
        alpha2: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Redundancy {
    pub input: RedundancyInput,
    /// Factor per axis.
    pub factors: Vec<f64>,
    pub total: f64,
}

pub fn redundancy_report(input: RedundancyInput) -> Result<Redundancy> {
    let factors = match input {
        RedundancyInput::Meyer { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Precondition(format!("alpha = {alpha} is not in (0, 1)")));
            }
            vec![1.0 / alpha]
        }
        RedundancyInput::Curvelet { alpha1, alpha2 } => {
            if !(alpha1 > 0.0 && alpha2 > 0.0) {
                return Err(Error::Precondition(format!("alphas must be positive, got {alpha1}, {alpha2}")));
            }
            vec![1.0 / alpha1 / CURVELET_DELTA.0, 1.0 / alpha2 / CURVELET_DELTA.1]
        }
    };
    let total = factors.iter().product();
    Ok(Redundancy { input, factors, total })
}
