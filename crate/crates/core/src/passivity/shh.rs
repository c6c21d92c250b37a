use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::descriptor::{DescriptorRealization, INFINITE_EIG_TOL};
use crate::error::{Error, Result};
use crate::qz::{generalized_eigenvalues, split_finite};

/// Eigenvalues within this fraction of the spectral scale of the origin are
/// treated as a unit singular value touching at DC rather than as crossings.
pub const DC_TOUCH_TOL: f64 = 1e-6;

/// The pencil `(M, K)` with
///
/// ```text
///     ⎡  A      BBᵀ ⎤        ⎡ E  0  ⎤
/// M = ⎣ −CᵀC   −Aᵀ  ⎦ ,  K = ⎣ 0  Eᵀ ⎦
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ShhPencil {
    pub m: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub theta: f64,
    ports: usize,
}

impl ShhPencil {
    pub fn ports(&self) -> usize {
        self.ports
    }
}

pub fn build_shh_pencil(real: &DescriptorRealization) -> ShhPencil {
    let n = real.n_states();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&real.a);
    m.view_mut((0, n), (n, n)).copy_from(&(&real.b * real.b.transpose()));
    m.view_mut((n, 0), (n, n)).copy_from(&-(real.c.transpose() * &real.c));
    m.view_mut((n, n), (n, n)).copy_from(&-real.a.transpose());
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&real.e);
    k.view_mut((n, n), (n, n)).copy_from(&real.e.transpose());
    ShhPencil {
        m,
        k,
        theta: real.theta,
        ports: real.ports(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSummary {
    pub finite_eigs: Vec<Complex64>,
    /// Positive frequencies of the imaginary eigenvalues, ascending.
    pub imag_freqs: Vec<f64>,
    /// Largest finite eigenvalue magnitude.
    pub rho: f64,
    /// `min |Re λ| / ρ`, clamped to 0 at or below the imaginary tolerance.
    pub psi: f64,
    pub n_infinite: usize,
    /// A unit singular value touches at `ω = 0` (eigenvalue at the origin).
    /// `ψ` is 0 while no positive crossing is reported.
    pub dc_touch: bool,
    /// Fewer than `2P` infinite eigenvalues were found.
    pub degenerate: bool,
}

/// Generalized eigenvalues of the pencil, with infinite ones dropped by the
/// relative `|β|` rule, and the derived crossing frequencies and `ψ`.
///
/// `scale_hint` is a model frequency scale (largest basis pole magnitude)
/// used to recognize eigenvalues at the origin when the whole finite
/// spectrum is tiny.
pub fn finite_pencil_eigs(pencil: &ShhPencil, im_tol: f64, scale_hint: f64) -> Result<SpectrumSummary> {
    let theta = pencil.theta;
    let pairs = generalized_eigenvalues(&pencil.m, &pencil.k).map_err(|f| Error::Eigen { theta, reason: f.0 })?;
    let (finite, n_infinite) = split_finite(&pairs, INFINITE_EIG_TOL);
    if finite.is_empty() {
        return Err(Error::Eigen {
            theta,
            reason: "all pencil eigenvalues are infinite".into(),
        });
    }
    let rho = finite.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let dc_scale = rho.max(scale_hint);
    let dc_touch = finite.iter().any(|l| l.norm() <= DC_TOUCH_TOL * dc_scale);

    let mut imag: Vec<f64> = finite
        .iter()
        .filter(|l| l.im > 0.0 && l.re.abs() <= im_tol * rho && l.norm() > DC_TOUCH_TOL * dc_scale)
        .map(|l| l.im)
        .collect();
    imag.sort_by(f64::total_cmp);
    imag.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * rho);

    let mut psi = if rho > 0.0 {
        finite.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min) / rho
    } else {
        0.0
    };
    if psi <= im_tol || dc_touch {
        psi = 0.0;
    }
    Ok(SpectrumSummary {
        finite_eigs: finite,
        imag_freqs: imag,
        rho,
        psi,
        n_infinite,
        dc_touch,
        degenerate: n_infinite < 2 * pencil.ports,
    })
}
