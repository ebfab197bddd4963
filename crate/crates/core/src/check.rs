//! Verified inequality instances.

use serde::{Deserialize, Serialize};

use crate::cube::FunctionTuple;
use crate::grid::GridFunction;

/// Relative slack for inequalities that hold exactly on step functions.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// Relative slack for the Fourier-side bound (one extra transform of roundoff).
pub const FOURIER_SLACK: f64 = 1e-8;
/// Relative tolerance for identities between two evaluation orders.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckParams {
    pub k: u32,
    pub d: usize,
    pub n: usize,
    pub w: f64,
    pub family: String,
}

impl CheckParams {
    pub fn of_grid(k: u32, f: &GridFunction) -> Self {
        CheckParams {
            k,
            d: f.dim(),
            n: f.extents().iter().copied().max().unwrap_or(0),
            w: f.spacing(),
            family: "custom".into(),
        }
    }

    pub fn of_tuple(t: &FunctionTuple) -> Self {
        let n = t.functions().iter().flat_map(|f| f.extents().iter().copied()).max().unwrap_or(0);
        CheckParams { k: t.k(), d: t.dim(), n, w: t.spacing(), family: "custom".into() }
    }
}

/// One evaluated instance: `lhs <= rhs` (and `rhs <= rhs2` when present).
///
/// `pass` is `None` for ungated records (signed inputs, monitored ratios).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub seed: u64,
    pub params: CheckParams,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs2: Option<f64>,
    pub ratio: Option<f64>,
    pub pass: Option<bool>,
    pub runtime_ms: f64,
}

impl CheckRecord {
    pub fn new(name: &str, params: CheckParams, lhs: f64, rhs: f64) -> Self {
        CheckRecord {
            name: name.into(),
            seed: 0,
            params,
            lhs,
            rhs,
            rhs2: None,
            ratio: ratio(lhs, rhs),
            pass: None,
            runtime_ms: 0.0,
        }
    }

    pub fn with_rhs2(mut self, rhs2: f64) -> Self {
        self.rhs2 = Some(rhs2);
        self
    }

    pub fn gate(mut self, gated: bool, pass: bool) -> Self {
        self.pass = gated.then_some(pass);
        self
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

pub(crate) fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0).then(|| lhs / rhs)
}

/// `lhs <= rhs·(1 + slack)`.
pub fn within(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs * (1.0 + slack)
}

/// `|a - b| <= tol·max(|a|, |b|)`, treating two zeros as equal.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
