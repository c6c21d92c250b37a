//! Iterative numerator perturbation that removes passivity violations while
//! keeping the model close to the data.
//!
//! Each iteration runs the adaptive check, linearizes every violating
//! singular value into one inequality on the numerator coefficients, and
//! solves a convex quadratic program whose cost measures the response
//! change on the fitting samples.

mod constraint;
mod cost;
mod layout;
mod qp;

pub use constraint::{build_constraints, ConstraintRow, RowOrigin, REPEATED_SV_TOL};
pub use cost::{build_cost, sensitivity_matrix, CostFactor, CostWeights};
pub use layout::{response_row, DecisionLayout};
pub use qp::{solve_dense, solve_qp, QpConfig, QpSolution, QpStats};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::{rms_error, FitSplit, RmsMode, SampledDataset};
use crate::error::{Error, Result};
use crate::model::ParamModel;
use crate::passivity::{adaptive_check, CheckConfig, ViolationReport};

#[derive(Debug, Clone, PartialEq)]
pub struct EnforceConfig {
    /// Constraints target `1 − margin` instead of 1.
    pub margin: f64,
    pub max_iterations: usize,
    pub qp: QpConfig,
    pub weights: CostWeights,
}

impl Default for EnforceConfig {
    fn default() -> Self {
        Self {
            margin: 1e-3,
            max_iterations: 20,
            qp: QpConfig::default(),
            weights: CostWeights::Uniform,
        }
    }
}

impl EnforceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.1).contains(&self.margin) {
            return Err(Error::InvalidConfig("margin must lie in [0, 0.1)".into()));
        }
        if !(self.qp.feas_tol > 0.0 && self.qp.gap_tol > 0.0 && self.qp.ridge_rel > 0.0) {
            return Err(Error::InvalidConfig("QP tolerances must be positive".into()));
        }
        if self.qp.max_ip_iters == 0 {
            return Err(Error::InvalidConfig("max_ip_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnforceLogRow {
    /// Number of perturbations applied before this check.
    pub iteration: usize,
    pub n_violations: usize,
    /// Largest singular value over every probe of the check.
    pub max_sigma: f64,
    /// `‖Ψx‖²` of the accumulated perturbation.
    pub cost_value: f64,
    /// Worst per-entry RMS deviation from the data over all parameter columns.
    pub rms_abs: f64,
    pub rms_rel: f64,
}

#[derive(Debug, Clone)]
pub struct EnforceOutcome {
    pub model: ParamModel,
    pub log: Vec<EnforceLogRow>,
    /// The final check found no violations.
    pub converged: bool,
    pub final_report: ViolationReport,
    /// Number of perturbations applied.
    pub iterations: usize,
}

/// Alternates passivity checks and QP-based numerator corrections until the
/// check passes or `max_iterations` corrections have been applied. On
/// non-convergence the last iterate is returned with `converged = false`.
pub fn enforce(
    model: &ParamModel,
    data: &SampledDataset,
    split: &FitSplit,
    check_cfg: &CheckConfig,
    cfg: &EnforceConfig,
) -> Result<EnforceOutcome> {
    cfg.validate()?;
    check_cfg.validate()?;
    let layout = DecisionLayout::new(model);
    // The denominator never changes, so neither does the cost factor.
    let cost = build_cost(model, data, split.fit(), &cfg.weights, &layout)?;
    let all: Vec<usize> = (0..data.n_params()).collect();
    let mut cur = model.clone();
    let mut x_total = DVector::zeros(layout.len());
    let mut log = Vec::new();
    let mut it = 0;
    loop {
        let report = adaptive_check(&cur, check_cfg)?;
        log.push(EnforceLogRow {
            iteration: it,
            n_violations: report.violations.len(),
            max_sigma: report.peak_sigma(),
            cost_value: cost.value(&x_total),
            rms_abs: rms_error(&cur, data, &all, RmsMode::Absolute)?.worst,
            rms_rel: rms_error(&cur, data, &all, RmsMode::Relative)?.worst,
        });
        if report.is_passive() || it == cfg.max_iterations {
            return Ok(EnforceOutcome {
                model: cur,
                log,
                converged: report.is_passive(),
                final_report: report,
                iterations: it,
            });
        }
        let mut rows = Vec::new();
        for v in &report.violations {
            rows.extend(build_constraints(&cur, v, &layout, cfg.margin)?);
        }
        let sol = solve_qp(&cost, &rows, &cfg.qp)?;
        cur = cur.apply_perturbation(&layout.to_perturbation(&sol.x)?)?;
        x_total += &sol.x;
        it += 1;
    }
}
