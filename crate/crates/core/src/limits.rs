//! Finite-`s` evidence for `s ↓ 0` limit statements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Too few replicates to evaluate the configured bounds.
    Insufficient,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Insufficient => "insufficient",
        }
    }

    pub fn is_pass(&self) -> bool {
        *self == Verdict::Pass
    }
}

/// Geometric grid of tail probabilities decreasing toward zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SGrid {
    points: Vec<f64>,
    ratio: f64,
}

impl SGrid {
    /// `start · ratio^i` for `i = 0..count`, all inside `(0, 1/2]`.
    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<SGrid> {
        if !(start > 0.0 && start <= 0.5) {
            return Err(Error::Domain(format!("grid start {start} not in (0, 1/2]")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Domain(format!("grid ratio {ratio} not in (0, 1)")));
        }
        if count == 0 {
            return Err(Error::Domain("grid needs at least one point".into()));
        }
        let points: Vec<f64> = (0..count).map(|i| start * ratio.powi(i as i32)).collect();
        if !(points[count - 1] > crate::quadrature::TAIL_FLOOR * 1e10) {
            return Err(Error::Domain(format!(
                "grid underflows: last point {:e}",
                points[count - 1]
            )));
        }
        Ok(SGrid { points, ratio })
    }

    /// Geometric grid from `start` down to `end` (inclusive, pinned exactly).
    pub fn down_to(start: f64, end: f64, ratio: f64) -> Result<SGrid> {
        if !(end > 0.0 && end <= start) {
            return Err(Error::Domain(format!("grid end {end} not in (0, {start}]")));
        }
        let steps = ((end / start).ln() / ratio.ln()).round().max(0.0) as usize;
        let mut grid = SGrid::geometric(start, ratio, steps + 1)?;
        *grid.points.last_mut().expect("nonempty grid") = end;
        Ok(grid)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

/// A sequence of finite-`s` values approaching a claimed limit, judged at
/// the smallest grid point only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCheckReport {
    pub label: String,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub target: f64,
    pub final_error: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Grid points dropped from the sequence (zero denominators).
    pub excluded: Vec<f64>,
}

impl LimitCheckReport {
    pub fn new(
        label: impl Into<String>,
        points: Vec<f64>,
        values: Vec<f64>,
        target: f64,
        tolerance: f64,
    ) -> Result<LimitCheckReport> {
        let label = label.into();
        if values.is_empty() || values.len() != points.len() {
            return Err(Error::Numeric(format!("{label}: no usable grid points")));
        }
        let final_error = (values[values.len() - 1] - target).abs();
        let verdict = if final_error <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Ok(LimitCheckReport {
            label,
            points,
            values,
            target,
            final_error,
            tolerance,
            verdict,
            excluded: Vec::new(),
        })
    }

    pub fn final_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}
