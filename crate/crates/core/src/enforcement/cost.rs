use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::layout::{response_row, DecisionLayout};
use crate::dataset::SampledDataset;
use crate::error::{Error, Result};
use crate::model::ParamModel;

/// Weights of the squared response deviations in the cost.
#[derive(Debug, Clone, PartialEq)]
pub enum CostWeights {
    Uniform,
    /// One weight per matrix entry and dataset sample, laid out as
    /// `((i·P + j)·m̄ + m)·k̄ + k` over the full dataset grid.
    PerSample(Vec<f64>),
}

/// Block-diagonal triangular factor `Ψ` with `‖Ψx‖² = Σ w²|ΔH_ij|²` summed
/// over the selected data samples. Each block is the `R` factor of the
/// stacked real and imaginary sensitivity rows of one matrix entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFactor {
    pub blocks: Vec<DMatrix<f64>>,
    pub layout: DecisionLayout,
}

impl CostFactor {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let b = self.layout.block();
        let mut out = DVector::zeros(self.layout.len());
        for (e, blk) in self.blocks.iter().enumerate() {
            let y = blk * x.rows(e * b, b);
            out.rows_mut(e * b, b).copy_from(&y);
        }
        out
    }

    /// `‖Ψx‖²`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.apply(x).norm_squared()
    }

    /// `ΨᵀΨ` as a dense matrix.
    pub fn gram(&self) -> DMatrix<f64> {
        let b = self.layout.block();
        let mut g = DMatrix::zeros(self.layout.len(), self.layout.len());
        for (e, blk) in self.blocks.iter().enumerate() {
            g.view_mut((e * b, e * b), (b, b)).copy_from(&(blk.transpose() * blk));
        }
        g
    }

    /// Dense `Ψ`.
    pub fn dense(&self) -> DMatrix<f64> {
        let b = self.layout.block();
        let mut m = DMatrix::zeros(self.layout.len(), self.layout.len());
        for (e, blk) in self.blocks.iter().enumerate() {
            m.view_mut((e * b, e * b), (b, b)).copy_from(blk);
        }
        m
    }
}

/// Stacked sensitivity rows `[w·Re a; w·Im a]` for one entry.
pub fn sensitivity_matrix(
    model: &ParamModel,
    data: &SampledDataset,
    subset: &[usize],
    weight: impl Fn(usize, usize) -> f64,
) -> Result<DMatrix<f64>> {
    let b = model.n_freq_basis() * model.n_param_basis();
    let kb = data.n_freqs();
    let mut f = DMatrix::zeros(2 * kb * subset.len(), b);
    for (mi, &m) in subset.iter().enumerate() {
        let theta = data.params()[m];
        for (k, &hz) in data.freqs_hz().iter().enumerate() {
            let a = response_row(model, model.s_at_hz(hz), theta)?;
            let w = weight(k, m);
            let r = 2 * (mi * kb + k);
            for (q, aq) in a.iter().enumerate() {
                f[(r, q)] = w * aq.re;
                f[(r + 1, q)] = w * aq.im;
            }
        }
    }
    Ok(f)
}

/// Square upper-triangular `R` with `‖Rx‖ = ‖Fx‖`, zero-padded when `F` has
/// fewer rows than columns.
fn compress(f: &DMatrix<f64>) -> DMatrix<f64> {
    let b = f.ncols();
    let r = f.clone().qr().r();
    let mut out = DMatrix::zeros(b, b);
    let rows = r.nrows().min(b);
    out.view_mut((0, 0), (rows, b)).copy_from(&r.rows(0, rows));
    out
}

pub fn build_cost(
    model: &ParamModel,
    data: &SampledDataset,
    subset: &[usize],
    weights: &CostWeights,
    layout: &DecisionLayout,
) -> Result<CostFactor> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig("cost subset is empty".into()));
    }
    if data.ports() != model.ports() {
        return Err(Error::ShapeMismatch(format!(
            "model has {} ports, data has {}",
            model.ports(),
            data.ports()
        )));
    }
    if subset.iter().any(|&m| m >= data.n_params()) {
        return Err(Error::InvalidConfig("cost subset index out of range".into()));
    }
    let p = model.ports();
    let blocks = match weights {
        CostWeights::Uniform => {
            let r = compress(&sensitivity_matrix(model, data, subset, |_, _| 1.0)?);
            vec![r; p * p]
        }
        CostWeights::PerSample(w) => {
            let (kb, mb) = (data.n_freqs(), data.n_params());
            if w.len() != p * p * kb * mb {
                return Err(Error::ShapeMismatch(format!(
                    "{} weights given, {} expected",
                    w.len(),
                    p * p * kb * mb
                )));
            }
            (0..p * p)
                .into_par_iter()
                .map(|e| {
                    let f = sensitivity_matrix(model, data, subset, |k, m| w[(e * mb + m) * kb + k])?;
                    Ok(compress(&f))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(CostFactor {
        blocks,
        layout: *layout,
    })
}
