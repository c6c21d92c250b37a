use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::layout::{response_row, DecisionLayout};
use crate::error::{Error, Result};
use crate::model::{Laplace, ParamModel};
use crate::passivity::Violation;

/// Singular values closer than this (relative) are treated as repeated.
pub const REPEATED_SV_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowOrigin {
    pub theta: f64,
    pub omega: f64,
    pub sigma: f64,
    /// Position of the singular value in descending order.
    pub singular_index: usize,
    pub asymptotic: bool,
    /// The singular value is repeated, so its vectors are not unique.
    pub repeated: bool,
}

/// Linearized constraint `pᵀx ≤ rhs` on one violating singular value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub p: DVector<f64>,
    pub rhs: f64,
    pub origin: RowOrigin,
}

/// One row per singular value above 1 of `H` at the violation point. The
/// first-order change of singular value `σ_k` is `Re{u_kᴴ ΔH v_k}`, which is
/// required to be at most `1 − margin − σ_k`.
pub fn build_constraints(
    model: &ParamModel,
    violation: &Violation,
    layout: &DecisionLayout,
    margin: f64,
) -> Result<Vec<ConstraintRow>> {
    let s = if violation.asymptotic {
        Laplace::Infinity
    } else {
        Laplace::imag(violation.omega)
    };
    let theta = violation.theta;
    let h = model.eval_transfer(s, theta)?;
    let a = response_row(model, s, theta)?;
    let svd = h.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Qp("singular value decomposition failed".into())),
    };
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]));

    let p = layout.ports();
    let b = layout.block();
    let mut rows = Vec::new();
    for (rank, &k) in order.iter().enumerate() {
        let sk = sv[k];
        if sk <= 1.0 {
            break;
        }
        let repeated = (0..sv.len()).any(|o| o != k && (sv[o] - sk).abs() <= REPEATED_SV_TOL * sk);
        let mut row = DVector::zeros(layout.len());
        for i in 0..p {
            for j in 0..p {
                // v_k is the k-th column of V, the conjugate of row k of Vᴴ.
                let w: Complex64 = u[(i, k)].conj() * vt[(k, j)].conj();
                let off = (i * p + j) * b;
                for (q, aq) in a.iter().enumerate() {
                    row[off + q] = (w * aq).re;
                }
            }
        }
        rows.push(ConstraintRow {
            p: row,
            rhs: (1.0 - margin) - sk,
            origin: RowOrigin {
                theta,
                omega: violation.omega,
                sigma: sk,
                singular_index: rank,
                asymptotic: violation.asymptotic,
                repeated,
            },
        });
    }
    Ok(rows)
}
