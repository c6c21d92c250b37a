use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bands::{classify_bands, BandRecord, WorstPoint};
use super::shh::{build_shh_pencil, finite_pencil_eigs};
use super::CheckConfig;
use crate::descriptor::build_descriptor;
use crate::error::Result;
use crate::model::ParamModel;

/// Full passivity characterization at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub theta: f64,
    pub psi: f64,
    /// Number of crossing frequencies.
    pub nu: usize,
    pub rho: f64,
    pub imag_freqs: Vec<f64>,
    pub bands: Vec<BandRecord>,
    pub n_infinite: usize,
    pub dc_touch: bool,
    pub degenerate: bool,
    /// Refinement pass that added the sample (0 for the initial grid).
    pub pass: usize,
}

impl SampleRecord {
    pub fn is_passive(&self) -> bool {
        self.bands.iter().all(|b| b.passive)
    }

    pub fn peak_sigma(&self) -> f64 {
        self.bands.iter().map(|b| b.peak_sigma).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub theta: f64,
    /// Normalized rad/s.
    pub omega: f64,
    pub sigma: f64,
    pub asymptotic: bool,
}

impl Violation {
    fn new(theta: f64, w: &WorstPoint) -> Self {
        Self {
            theta,
            omega: w.omega,
            sigma: w.sigma,
            asymptotic: w.asymptotic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Sorted by `theta`, duplicate-free.
    pub samples: Vec<SampleRecord>,
    /// Worst points of every non-passive band, ordered by `theta` then `omega`.
    pub violations: Vec<Violation>,
    pub passes_used: usize,
    /// The last pass added no samples.
    pub converged: bool,
    /// Multiply normalized frequencies by this to get physical rad/s.
    pub omega_ref: f64,
}

impl ViolationReport {
    pub fn is_passive(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest violating singular value, or `None` when passive.
    pub fn max_violation(&self) -> Option<f64> {
        self.violations.iter().map(|v| v.sigma).reduce(f64::max)
    }

    /// Largest singular value seen at any probe of any sample.
    pub fn peak_sigma(&self) -> f64 {
        self.samples.iter().map(SampleRecord::peak_sigma).fold(0.0, f64::max)
    }
}

/// Uniform initial parameter samples, `κ·ℓ̄ + 1` points including both ends.
pub fn initial_samples(model: &ParamModel, cfg: &CheckConfig) -> Vec<f64> {
    let pb = model.param_basis();
    let n = cfg.kappa * pb.count();
    let (a, b) = (pb.theta_min(), pb.theta_max());
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

/// Spectrum, crossings and band classification at one parameter value.
pub fn evaluate_sample(model: &ParamModel, theta: f64, cfg: &CheckConfig) -> Result<SampleRecord> {
    let summary = if model.poles().order() == 0 {
        // No dynamics: the response is constant in frequency, so there is no
        // crossing and the spectrum distance is taken as 1.
        super::SpectrumSummary {
            finite_eigs: vec![],
            imag_freqs: vec![],
            rho: 0.0,
            psi: 1.0,
            n_infinite: 2 * model.ports(),
            dc_touch: false,
            degenerate: false,
        }
    } else {
        let pencil = build_shh_pencil(&build_descriptor(model, theta));
        finite_pencil_eigs(&pencil, cfg.im_tol, model.poles().max_magnitude())?
    };
    let bands = classify_bands(model, theta, &summary, cfg)?;
    Ok(SampleRecord {
        theta,
        psi: summary.psi,
        nu: summary.imag_freqs.len(),
        rho: summary.rho,
        imag_freqs: summary.imag_freqs,
        bands,
        n_infinite: summary.n_infinite,
        dc_touch: summary.dc_touch,
        degenerate: summary.degenerate,
        pass: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IntervalCase {
    /// Both ends violate with equal crossing counts.
    Close,
    /// Violations at both ends with different crossing counts, or at one end only.
    Refine,
    /// Both ends passive: decide from the interpolation error of `ψ`.
    Interpolate,
}

pub(crate) fn interval_case(l: &SampleRecord, r: &SampleRecord) -> IntervalCase {
    match (l.psi == 0.0, r.psi == 0.0) {
        (true, true) if l.nu == r.nu => IntervalCase::Close,
        (true, true) => IntervalCase::Refine,
        (true, false) | (false, true) => IntervalCase::Refine,
        (false, false) => IntervalCase::Interpolate,
    }
}

/// Adaptive refinement of the parameter samples until the `ψ` profile and
/// crossing counts are resolved, or `max_passes` passes have run.
pub fn adaptive_check(model: &ParamModel, cfg: &CheckConfig) -> Result<ViolationReport> {
    cfg.validate()?;
    let eval_all = |thetas: &[f64], pass: usize| -> Result<Vec<SampleRecord>> {
        thetas
            .par_iter()
            .map(|&t| {
                let mut r = evaluate_sample(model, t, cfg)?;
                r.pass = pass;
                Ok(r)
            })
            .collect()
    };

    let mut samples = eval_all(&initial_samples(model, cfg), 0)?;
    let mut closed: HashSet<(u64, u64)> = HashSet::new();
    let mut passes_used = 0;
    let mut converged = false;
    for pass in 1..=cfg.max_passes {
        passes_used = pass;
        let mut refine = Vec::new();
        let mut interp = Vec::new();
        for w in samples.windows(2) {
            let key = (w[0].theta.to_bits(), w[1].theta.to_bits());
            if closed.contains(&key) {
                continue;
            }
            let mid = 0.5 * (w[0].theta + w[1].theta);
            if mid <= w[0].theta || mid >= w[1].theta {
                closed.insert(key);
                continue;
            }
            match interval_case(&w[0], &w[1]) {
                IntervalCase::Close => {
                    closed.insert(key);
                }
                IntervalCase::Refine => refine.push(mid),
                IntervalCase::Interpolate => interp.push((key, mid, 0.5 * (w[0].psi + w[1].psi))),
            }
        }
        let mut added = eval_all(&refine, pass)?;
        let mids: Vec<f64> = interp.iter().map(|x| x.1).collect();
        for (rec, (key, _, avg)) in eval_all(&mids, pass)?.into_iter().zip(interp) {
            if (rec.psi - avg).abs() > cfg.gamma * rec.psi.abs() {
                added.push(rec);
            } else {
                closed.insert(key);
            }
        }
        if added.is_empty() {
            converged = true;
            break;
        }
        samples.extend(added);
        samples.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    }

    let violations = samples
        .iter()
        .flat_map(|s| s.bands.iter().filter_map(|b| b.worst.as_ref().map(|w| Violation::new(s.theta, w))))
        .collect();
    Ok(ViolationReport {
        samples,
        violations,
        passes_used,
        converged,
        omega_ref: model.omega_ref(),
    })
}
