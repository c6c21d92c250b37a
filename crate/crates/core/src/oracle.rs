//! Brute-force passivity verification by dense frequency × parameter
//! sampling of the largest singular value.
//!
//! Nothing here touches the descriptor or pencil code; the sweep only calls
//! [`ParamModel::eval_transfer`], so it can certify a model independently of
//! the eigenvalue-based checker.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Laplace, ParamModel};

/// Pass threshold on the sampled peak.
pub const ORACLE_PASS_TOL: f64 = 1e-6;
const BISECTION_STEPS: usize = 10;

/// Unit crossing of `σ_max(jω; ϑ)` located inside one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Bisection estimate (normalized rad/s).
    pub omega: f64,
    /// Grid cell `[cell_low, cell_high]` that brackets the sign change.
    pub cell_low: f64,
    pub cell_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleColumn {
    pub theta: f64,
    pub max_sigma: f64,
    pub argmax_omega: f64,
    pub sigma_at_infinity: f64,
    pub crossings: Vec<Crossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub max_sigma: f64,
    pub argmax_theta: f64,
    pub argmax_omega: f64,
    pub columns: Vec<OracleColumn>,
    pub omega_grid: Vec<f64>,
    pub pass: bool,
}

/// Largest singular value of a complex matrix.
pub fn sigma_max(h: &DMatrix<Complex64>) -> f64 {
    if h.nrows() == 1 && h.ncols() == 1 {
        return h[(0, 0)].norm();
    }
    h.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Frequency grid `{0} ∪ logspace(ω_lo, ω_hi, n − 1)` in normalized units,
/// with `ω_hi = f_max_mult · max|pole|` and `ω_lo = 10⁻⁴ · min|pole|`.
pub fn omega_grid(model: &ParamModel, n_freq: usize, f_max_mult: f64) -> Vec<f64> {
    let pmax = model.poles().max_magnitude();
    let pmax = if pmax > 0.0 { pmax } else { 1.0 };
    let pmin = model.poles().min_magnitude().unwrap_or(1.0);
    let hi = f_max_mult * pmax;
    let lo = (1e-4 * pmin).min(hi * 1e-6);
    let mut g = Vec::with_capacity(n_freq);
    g.push(0.0);
    let m = n_freq - 1;
    let (llo, lhi) = (lo.ln(), hi.ln());
    for k in 0..m {
        let u = if m == 1 { 1.0 } else { k as f64 / (m - 1) as f64 };
        g.push((llo + u * (lhi - llo)).exp());
    }
    g
}

/// Samples `σ_max(H(jω; ϑ))` on `n_freq` frequencies × `n_theta` linearly
/// spaced parameter values covering the model's domain. The point `s = ∞`
/// is included in the peak.
pub fn dense_sweep(model: &ParamModel, n_freq: usize, n_theta: usize, f_max_mult: f64) -> Result<OracleResult> {
    if n_freq < 2 || n_theta < 2 {
        return Err(Error::InvalidConfig("oracle grid needs at least 2x2 points".into()));
    }
    if !(f_max_mult > 0.0) {
        return Err(Error::InvalidConfig("f_max_mult must be positive".into()));
    }
    let pb = model.param_basis();
    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| pb.theta_min() + (pb.theta_max() - pb.theta_min()) * i as f64 / (n_theta - 1) as f64)
        .collect();
    sweep_thetas(model, &thetas, n_freq, f_max_mult)
}

/// Same as [`dense_sweep`] on an explicit list of parameter values.
pub fn sweep_thetas(model: &ParamModel, thetas: &[f64], n_freq: usize, f_max_mult: f64) -> Result<OracleResult> {
    let grid = omega_grid(model, n_freq, f_max_mult);
    let columns = thetas
        .par_iter()
        .map(|&t| column(model, t, &grid))
        .collect::<Result<Vec<_>>>()?;
    let mut best = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
    for c in &columns {
        if c.max_sigma > best.0 {
            best = (c.max_sigma, c.theta, c.argmax_omega);
        }
    }
    Ok(OracleResult {
        max_sigma: best.0,
        argmax_theta: best.1,
        argmax_omega: best.2,
        pass: best.0 <= 1.0 + ORACLE_PASS_TOL,
        columns,
        omega_grid: grid,
    })
}

fn column(model: &ParamModel, theta: f64, grid: &[f64]) -> Result<OracleColumn> {
    let sig = |w: f64| -> Result<f64> { Ok(sigma_max(&model.eval_transfer(Laplace::imag(w), theta)?)) };
    let vals = grid.iter().map(|&w| sig(w)).collect::<Result<Vec<_>>>()?;
    let s_inf = sigma_max(&model.eval_transfer(Laplace::Infinity, theta)?);
    let (mut max_sigma, mut argmax) = (f64::NEG_INFINITY, 0.0);
    for (w, v) in grid.iter().zip(&vals) {
        if *v > max_sigma {
            max_sigma = *v;
            argmax = *w;
        }
    }
    if s_inf > max_sigma {
        max_sigma = s_inf;
        argmax = f64::INFINITY;
    }
    let mut crossings = Vec::new();
    for k in 0..grid.len() - 1 {
        let (a, b) = (vals[k] - 1.0, vals[k + 1] - 1.0);
        if (a > 0.0) == (b > 0.0) {
            continue;
        }
        let (mut lo, mut hi) = (grid[k], grid[k + 1]);
        let lo_above = a > 0.0;
        // Bisect in log ω except on the first cell, which starts at 0.
        let geometric = lo > 0.0;
        for _ in 0..BISECTION_STEPS {
            let mid = if geometric { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
            if (sig(mid)? - 1.0 > 0.0) == lo_above {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let omega = if geometric { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        crossings.push(Crossing {
            omega,
            cell_low: grid[k],
            cell_high: grid[k + 1],
        });
    }
    Ok(OracleColumn {
        theta,
        max_sigma,
        argmax_omega: argmax,
        sigma_at_infinity: s_inf,
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn toy_peak_and_crossing() {
        let r = dense_sweep(&fixtures::single_pole(2.0), 2048, 5, 10.0).unwrap();
        assert_abs_diff_eq!(r.max_sigma, 2.0, epsilon = 1e-15);
        assert_eq!(r.argmax_omega, 0.0);
        assert!(!r.pass);
        for c in &r.columns {
            assert_eq!(c.crossings.len(), 1);
            let x = c.crossings[0];
            assert!(x.cell_low <= 3f64.sqrt() && 3f64.sqrt() <= x.cell_high);
            let cell = x.cell_high / x.cell_low;
            assert!((x.omega / 3f64.sqrt()).ln().abs() <= cell.ln() / 512.0);
        }
    }

    #[test]
    fn passive_toy() {
        let r = dense_sweep(&fixtures::single_pole(0.5), 256, 3, 10.0).unwrap();
        assert!(r.pass);
        assert_abs_diff_eq!(r.max_sigma, 0.5, epsilon = 1e-15);
        assert!(r.columns.iter().all(|c| c.crossings.is_empty()));
    }

    #[test]
    fn grid_shape() {
        let m = fixtures::single_pole(1.0);
        let g = omega_grid(&m, 100, 10.0);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.0);
        assert_abs_diff_eq!(g[99], 10.0, epsilon = 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(dense_sweep(&m, 1, 5, 10.0).is_err());
    }
}
