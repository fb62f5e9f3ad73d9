//! Verification report records shared by the check functions and the CLI.

use serde::{Deserialize, Serialize};

/// Residuals smaller than this are indistinguishable from rounding.
pub const FLOATING_POINT_FLOOR: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub property: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckReport {
    pub fn new(id: impl Into<String>, property: impl Into<String>, samples: usize, max_residual: f64, tolerance: f64) -> Self {
        Self {
            id: id.into(),
            property: property.into(),
            samples,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            detail: None,
        }
    }

    /// A check whose expected outcome is failure (negative control): passes
    /// when the residual exceeds the tolerance.
    pub fn negative(id: impl Into<String>, property: impl Into<String>, samples: usize, max_residual: f64, tolerance: f64) -> Self {
        let mut r = Self::new(id, property, samples, max_residual, tolerance);
        r.pass = max_residual > tolerance;
        r
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    /// True when the check failed only because its tolerance is below what
    /// double precision can resolve.
    pub fn tolerance_induced(&self) -> bool {
        !self.pass && self.tolerance < FLOATING_POINT_FLOOR
    }
}

/// Running maximum that treats NaN as an infinite residual.
pub fn max_residual(acc: f64, r: f64) -> f64 {
    if r.is_nan() {
        f64::INFINITY
    } else {
        acc.max(r)
    }
}
