use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CoeffPerturbation, Laplace, ParamModel};

/// Ordering of the numerator decision variables. Entry `(i, j)` owns the
/// contiguous block `[(i·P + j)·B, (i·P + j + 1)·B)` with `B = (n̄+1)·ℓ̄`,
/// and inside a block the model's coefficient order `n·ℓ̄ + ℓ` is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionLayout {
    ports: usize,
    n_freq: usize,
    n_param: usize,
}

impl DecisionLayout {
    pub fn new(model: &ParamModel) -> Self {
        Self {
            ports: model.ports(),
            n_freq: model.n_freq_basis(),
            n_param: model.n_param_basis(),
        }
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    /// Variables per matrix entry, `(n̄+1)·ℓ̄`.
    pub fn block(&self) -> usize {
        self.n_freq * self.n_param
    }

    /// Total number of variables, `P²·(n̄+1)·ℓ̄`.
    pub fn len(&self) -> usize {
        self.ports * self.ports * self.block()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, n: usize, l: usize) -> usize {
        debug_assert!(i < self.ports && j < self.ports && n < self.n_freq && l < self.n_param);
        (i * self.ports + j) * self.block() + n * self.n_param + l
    }

    /// Inverse of [`index`](Self::index).
    pub fn unpack(&self, q: usize) -> (usize, usize, usize, usize) {
        let b = self.block();
        let (e, k) = (q / b, q % b);
        (e / self.ports, e % self.ports, k / self.n_param, k % self.n_param)
    }

    pub fn to_perturbation(&self, x: &DVector<f64>) -> Result<CoeffPerturbation> {
        if x.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "decision vector has {} entries, layout expects {}",
                x.len(),
                self.len()
            )));
        }
        let p = self.ports;
        let b = self.block();
        Ok(CoeffPerturbation::new(
            (0..b)
                .map(|k| DMatrix::from_fn(p, p, |i, j| x[(i * p + j) * b + k]))
                .collect(),
        ))
    }

    pub fn from_perturbation(&self, pert: &CoeffPerturbation) -> Result<DVector<f64>> {
        let d = pert.delta();
        if d.len() != self.block() || d.iter().any(|m| m.shape() != (self.ports, self.ports)) {
            return Err(Error::ShapeMismatch("perturbation does not match layout".into()));
        }
        let p = self.ports;
        let b = self.block();
        Ok(DVector::from_fn(self.len(), |q, _| {
            let (e, k) = (q / b, q % b);
            d[k][(e / p, e % p)]
        }))
    }
}

/// Sensitivity of every entry of `H(s; ϑ)` to its numerator coefficients:
/// element `n·ℓ̄ + ℓ` is `ξ_ℓ(ϑ)·φ_n(s)/D(s, ϑ)`.
pub fn response_row(model: &ParamModel, s: Laplace, theta: f64) -> Result<Vec<Complex64>> {
    let phi = model.poles().eval(s).map_err(|e| match e {
        Error::SingularEvaluation { s, .. } => Error::SingularEvaluation { s, theta },
        other => other,
    })?;
    let xi = model.param_basis().eval(theta);
    let d = model.denominator(s, theta)?;
    let mut out = Vec::with_capacity(phi.len() * xi.len());
    for p in &phi {
        for x in &xi {
            out.push(p * *x / d);
        }
    }
    Ok(out)
}
