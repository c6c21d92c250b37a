//! Uniform passivity verification over the parameter range.
//!
//! At each sampled `ϑ` the purely imaginary eigenvalues of the Hamiltonian
//! pencil built from the descriptor realization mark the frequencies where
//! a singular value of `H(jω; ϑ)` equals one. They split the frequency axis
//! into bands that are classified by sampling, and the distance `ψ(ϑ)` of
//! the spectrum from the imaginary axis drives adaptive refinement of the
//! parameter samples.

mod adaptive;
mod bands;
mod shh;

pub use adaptive::{adaptive_check, evaluate_sample, initial_samples, SampleRecord, Violation, ViolationReport};
pub use bands::{classify_bands, BandRecord, WorstPoint};
pub use shh::{build_shh_pencil, finite_pencil_eigs, ShhPencil, SpectrumSummary, DC_TOUCH_TOL};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Relative interpolation error of `ψ` that triggers refinement.
    pub gamma: f64,
    /// Initial samples per parameter basis function.
    pub kappa: usize,
    /// Maximum number of refinement passes.
    pub max_passes: usize,
    /// Eigenvalues with `|Re λ| ≤ im_tol · ρ` count as imaginary.
    pub im_tol: f64,
    /// Probe points per frequency band.
    pub band_samples: usize,
    /// The last band is probed up to this multiple of the largest pole
    /// magnitude (or last crossing).
    pub omega_cap_factor: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            gamma: 0.2,
            kappa: 4,
            max_passes: 10,
            im_tol: 1e-8,
            band_samples: 64,
            omega_cap_factor: 10.0,
        }
    }
}

impl CheckConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if self.kappa < 1 {
            return bad("kappa must be at least 1");
        }
        if self.max_passes < 1 {
            return bad("max_passes must be at least 1");
        }
        if !(self.im_tol > 0.0 && self.im_tol < 1e-3) {
            return bad("im_tol must lie in (0, 1e-3)");
        }
        if self.band_samples < 3 {
            return bad("band_samples must be at least 3");
        }
        if !(self.omega_cap_factor > 1.0) {
            return bad("omega_cap_factor must exceed 1");
        }
        Ok(())
    }
}
