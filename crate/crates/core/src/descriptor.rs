//! Descriptor state-space realization of a parameterized model at fixed `ϑ`.
//!
//! ```text
//!      ⎡ I_N  0 ⎤      ⎡ A₀   B₀ ⎤      ⎡  0  ⎤
//!  E = ⎣  0   0 ⎦  A = ⎣ C₂   D₂ ⎦  B = ⎣ −I_P ⎦   C = [ C₁  D₁ ]
//! ```
//!
//! `A₀, B₀` encode the basis poles (one `P`-block per basis function, in the
//! order used by [`PoleSet::eval`](crate::basis::PoleSet::eval)),
//! `C₁ = [R₁(ϑ) … R_n̄(ϑ)]`, `D₁ = R₀(ϑ)`, `C₂ = [r₁(ϑ)I … r_n̄(ϑ)I]` and
//! `D₂ = r₀(ϑ)I`. The first `N = n̄P` states carry the partial fractions, the
//! last `P` are algebraic and hold `u/D(s,ϑ)`. Only `A`'s bottom rows and `C`
//! depend on `ϑ`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Laplace, ParamModel};
use crate::qz::{generalized_eigenvalues, split_finite};

/// Relative threshold on `|β|` below which a generalized eigenvalue is
/// treated as infinite. Shared with the Hamiltonian pencil solver.
pub const INFINITE_EIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorRealization {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub theta: f64,
    ports: usize,
}

impl DescriptorRealization {
    pub fn ports(&self) -> usize {
        self.ports
    }

    /// Number of dynamic states `N = n̄P`.
    pub fn n_dynamic(&self) -> usize {
        self.a.nrows() - self.ports
    }

    /// Total state dimension `N + P`.
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
}

pub fn build_descriptor(model: &ParamModel, theta: f64) -> DescriptorRealization {
    let p = model.ports();
    let poles = model.poles();
    let nbar = poles.order();
    let n = nbar * p;
    let dim = n + p;

    let mut e = DMatrix::zeros(dim, dim);
    for i in 0..n {
        e[(i, i)] = 1.0;
    }
    let mut b = DMatrix::zeros(dim, p);
    for i in 0..p {
        b[(n + i, i)] = -1.0;
    }

    let mut a = DMatrix::zeros(dim, dim);
    let mut blk = 0;
    for &q in poles.real() {
        for i in 0..p {
            a[(blk + i, blk + i)] = q;
            a[(blk + i, n + i)] = 1.0;
        }
        blk += p;
    }
    for &(re, im) in poles.complex() {
        for i in 0..p {
            let (x, y) = (blk + i, blk + p + i);
            a[(x, x)] = re;
            a[(x, y)] = im;
            a[(y, x)] = -im;
            a[(y, y)] = re;
            a[(x, n + i)] = 2.0;
        }
        blk += 2 * p;
    }

    let rn = model.numerator_coeffs(theta);
    let dn = model.denominator_coeffs(theta);
    let mut c = DMatrix::zeros(p, dim);
    for k in 1..=nbar {
        let col = (k - 1) * p;
        c.view_mut((0, col), (p, p)).copy_from(&rn[k]);
        for i in 0..p {
            a[(n + i, col + i)] = dn[k];
        }
    }
    c.view_mut((0, n), (p, p)).copy_from(&rn[0]);
    for i in 0..p {
        a[(n + i, n + i)] = dn[0];
    }

    DescriptorRealization {
        e,
        a,
        b,
        c,
        theta,
        ports: p,
    }
}

/// `C (sE − A)⁻¹ B`. At `s = ∞` this is `D₁ D₂⁻¹`.
pub fn eval_descriptor_tf(real: &DescriptorRealization, s: Laplace) -> Result<DMatrix<Complex64>> {
    let p = real.ports;
    let n = real.n_dynamic();
    let singular = || Error::SingularEvaluation { s, theta: real.theta };
    let s = match s {
        Laplace::Infinity => {
            let d2 = real.a[(n, n)];
            if d2 == 0.0 {
                return Err(singular());
            }
            let d1 = real.c.view((0, n), (p, p));
            return Ok(d1.map(|v| Complex64::new(v / d2, 0.0)));
        }
        Laplace::Finite(s) => s,
    };
    let pencil = real.e.map(|v| Complex64::new(v, 0.0)) * s - real.a.map(|v| Complex64::new(v, 0.0));
    let lu = pencil.lu();
    let u = lu.u();
    let dmax = u.diagonal().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dmin = u.diagonal().iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if !(dmin > 1e-14 * dmax) {
        return Err(singular());
    }
    let rhs = real.b.map(|v| Complex64::new(v, 0.0));
    let x = lu.solve(&rhs).ok_or_else(singular)?;
    let h = real.c.map(|v| Complex64::new(v, 0.0)) * x;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    Ok(h)
}

/// Finite poles of the model at `ϑ` and the number of infinite eigenvalues
/// dropped from the pencil `(A(ϑ), E)`.
pub fn model_poles(model: &ParamModel, theta: f64) -> Result<(Vec<Complex64>, usize)> {
    let real = build_descriptor(model, theta);
    let pairs = generalized_eigenvalues(&real.a, &real.e).map_err(|f| Error::Eigen {
        theta,
        reason: f.0,
    })?;
    Ok(split_finite(&pairs, INFINITE_EIG_TOL))
}
