//! Model identification by Generalized Sanathanan–Koerner iteration.
//!
//! Each pass solves the relaxed fitting condition
//!
//! ```text
//! min Σ_{k,m} ‖N(jω_k, ϑ_m) − H̆_{k,m} D(jω_k, ϑ_m)‖²_F / |D_prev(jω_k, ϑ_m)|²
//! ```
//!
//! as one real linear least-squares problem in all numerator and
//! denominator coefficients, with `r_{0,1} = 1` moved to the right-hand side.
//! The numerator block is identical for every matrix entry, so it is
//! factored once per pass and eliminated; the shared denominator is then
//! solved from the stacked reduced systems, and each entry's numerator is
//! recovered by back substitution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{ParamBasis, PoleSet};
use crate::dataset::{FitSplit, SampledDataset};
use crate::descriptor::model_poles;
use crate::error::{Error, Result};
use crate::model::{Laplace, ParamModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GskConfig {
    pub max_iterations: usize,
    /// Stop when the relative change of the denominator coefficient vector
    /// drops below this value.
    pub stop_tol: f64,
    pub column_scaling: bool,
}

impl Default for GskConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            stop_tol: 1e-6,
            column_scaling: true,
        }
    }
}

impl GskConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::InvalidConfig("stop_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GskLogRow {
    pub iteration: usize,
    /// `sqrt(Σ ‖N/D − H̆‖²_F)` over the fitting samples, i.e. the weighted
    /// residual evaluated with the weights of this iterate.
    pub weighted_residual: f64,
    pub max_coeff_change: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Minimum-residual iterate.
    pub model: ParamModel,
    pub log: Vec<GskLogRow>,
    pub converged: bool,
    /// 1-based iteration that produced `model`.
    pub best_iteration: usize,
}

/// Starting poles for a model of order `n̄`, in units normalized to `f_max`.
///
/// `⌊n̄/2⌋` complex pairs with imaginary parts log-spaced over
/// `[f_min, f_max]` and damping ratio `−Re/Im = 1/100`, plus a real pole at
/// `−f_max/2` when `n̄` is odd. A zero `f_min` is replaced by `f_max/1000`.
pub fn default_poles(order: usize, f_min_hz: f64, f_max_hz: f64) -> Result<PoleSet> {
    if !(f_max_hz > 0.0 && f_min_hz >= 0.0 && f_min_hz < f_max_hz) {
        return Err(Error::InvalidConfig(format!(
            "cannot place poles on [{f_min_hz}, {f_max_hz}] Hz"
        )));
    }
    let lo = if f_min_hz > 0.0 { f_min_hz } else { f_max_hz / 1000.0 } / f_max_hz;
    let nc = order / 2;
    let complex = (0..nc)
        .map(|k| {
            let u = if nc == 1 { 1.0 } else { k as f64 / (nc - 1) as f64 };
            let im = lo * (1.0 / lo).powf(u);
            (-im / 100.0, im)
        })
        .collect();
    let real = if order % 2 == 1 { vec![-0.5] } else { vec![] };
    PoleSet::new(real, complex)
}

// Regressors b_{nℓ} = φ_n(jω_k) ξ_ℓ(ϑ_m) and data for every fitting sample.
struct Samples {
    b: Vec<Vec<Complex64>>,
    h: Vec<DMatrix<Complex64>>,
}

fn collect_samples(data: &SampledDataset, split: &FitSplit, poles: &PoleSet, pbasis: &ParamBasis) -> Result<Samples> {
    let f_scale = data.f_max();
    let mut b = Vec::new();
    let mut h = Vec::new();
    for &m in split.fit() {
        let theta = data.params()[m];
        let xi = pbasis.eval(theta);
        for (k, f) in data.freqs_hz().iter().enumerate() {
            let phi = poles.eval(Laplace::imag(f / f_scale)).map_err(|e| match e {
                Error::SingularEvaluation { s, .. } => Error::SingularEvaluation { s, theta },
                other => other,
            })?;
            let mut row = Vec::with_capacity(phi.len() * xi.len());
            for p in &phi {
                for x in &xi {
                    row.push(p * *x);
                }
            }
            b.push(row);
            h.push(data.sample(k, m).clone());
        }
    }
    Ok(Samples { b, h })
}

fn dot(b: &[Complex64], c: &[f64]) -> Complex64 {
    b.iter().zip(c).map(|(x, y)| x * *y).sum()
}

/// Fits numerator and denominator coefficients on fixed `poles` (normalized
/// to the dataset's `f_max`) and parameter basis `pbasis`.
pub fn fit(
    data: &SampledDataset,
    split: &FitSplit,
    poles: &PoleSet,
    pbasis: ParamBasis,
    cfg: &GskConfig,
) -> Result<FitOutcome> {
    cfg.validate()?;
    if split.fit().iter().any(|&m| m >= data.n_params()) {
        return Err(Error::InvalidConfig("fit index out of range".into()));
    }
    if data.f_max() <= 0.0 {
        return Err(Error::InvalidData("frequency axis must extend above 0 Hz".into()));
    }
    let p = data.ports();
    let nb = (poles.order() + 1) * pbasis.count();
    let samples = collect_samples(data, split, poles, &pbasis)?;
    let nq = samples.b.len();
    if 2 * nq < nb {
        return Err(Error::RankDeficient(format!(
            "{} real equations per entry for {nb} numerator unknowns",
            2 * nq
        )));
    }

    let mut den = vec![0.0; nb];
    den[0] = 1.0;
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, Vec<DMatrix<f64>>, Vec<f64>)> = None;
    let mut converged = false;

    for it in 1..=cfg.max_iterations {
        let weights: Vec<f64> = samples.b.iter().map(|b| 1.0 / dot(b, &den).norm()).collect();
        if weights.iter().any(|w| !w.is_finite()) {
            if best.is_some() {
                break;
            }
            return Err(Error::RankDeficient(
                "previous denominator vanishes at a fitting sample".into(),
            ));
        }
        let (num, new_den) = match solve_pass(&samples, &weights, p, nb, cfg.column_scaling) {
            Ok(v) => v,
            // Later passes can degenerate when the previous denominator
            // nearly vanishes at a sample; keep the best iterate so far.
            Err(Error::RankDeficient(_)) if best.is_some() => break,
            Err(e) => return Err(e),
        };
        let change = {
            let diff: f64 = new_den.iter().zip(&den).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = new_den.iter().map(|a| a * a).sum::<f64>().sqrt();
            diff / norm
        };
        den = new_den;
        let residual = model_residual(&samples, &num, &den, p);
        log.push(GskLogRow {
            iteration: it,
            weighted_residual: residual,
            max_coeff_change: change,
        });
        if best.as_ref().is_none_or(|b| residual < b.0) {
            best = Some((residual, it, num, den.clone()));
        }
        if change < cfg.stop_tol {
            converged = true;
            break;
        }
    }

    let (_, best_iteration, num, den) = best.expect("at least one iteration ran");
    let model = ParamModel::new(p, poles.clone(), pbasis, num, den, data.f_max())?;
    Ok(FitOutcome {
        model,
        log,
        converged,
        best_iteration,
    })
}

fn model_residual(s: &Samples, num: &[DMatrix<f64>], den: &[f64], p: usize) -> f64 {
    let mut acc = 0.0;
    for (b, h) in s.b.iter().zip(&s.h) {
        let d = dot(b, den);
        for i in 0..p {
            for j in 0..p {
                let n: Complex64 = b.iter().zip(num).map(|(x, r)| x * r[(i, j)]).sum();
                acc += (n / d - h[(i, j)]).norm_sqr();
            }
        }
    }
    if acc.is_finite() {
        acc.sqrt()
    } else {
        f64::INFINITY
    }
}

// One linearized least-squares pass. Returns the numerator in model layout
// and the full denominator vector with r_{0,1} = 1.
fn solve_pass(
    s: &Samples,
    w: &[f64],
    p: usize,
    nb: usize,
    scaling: bool,
) -> Result<(Vec<DMatrix<f64>>, Vec<f64>)> {
    let nq = s.b.len();
    let rows = 2 * nq;
    let nd = nb - 1;

    // Shared numerator block: rows (Re, Im) of w·b.
    let mut a = DMatrix::<f64>::zeros(rows, nb);
    for (q, b) in s.b.iter().enumerate() {
        for (c, v) in b.iter().enumerate() {
            a[(2 * q, c)] = w[q] * v.re;
            a[(2 * q + 1, c)] = w[q] * v.im;
        }
    }
    let num_scale: Vec<f64> = (0..nb)
        .map(|c| {
            let n = a.column(c).norm();
            if scaling && n > 0.0 { 1.0 / n } else { 1.0 }
        })
        .collect();
    for (c, sc) in num_scale.iter().enumerate() {
        a.column_mut(c).scale_mut(*sc);
    }
    // Denominator columns scaled by their norm over all entries.
    let den_scale: Vec<f64> = (1..nb)
        .map(|c| {
            let n2: f64 = s
                .b
                .iter()
                .zip(&s.h)
                .zip(w)
                .map(|((b, h), wq)| wq * wq * b[c].norm_sqr() * h.iter().map(|v| v.norm_sqr()).sum::<f64>())
                .sum();
            if scaling && n2 > 0.0 { 1.0 / n2.sqrt() } else { 1.0 }
        })
        .collect();

    let qr = a.qr();
    let r11 = qr.r();
    let diag_max = r11.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max);
    let diag_min = r11.diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if !(diag_min > 1e-13 * diag_max) {
        return Err(Error::RankDeficient(format!(
            "numerator regressors are dependent (diagonal ratio {:.3e})",
            diag_min / diag_max
        )));
    }

    // Per entry: project [den | rhs] onto the numerator range and its
    // complement; compress the complement by QR.
    let entries: Vec<(usize, usize)> = (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).collect();
    let reduced: Vec<(DMatrix<f64>, DMatrix<f64>)> = entries
        .par_iter()
        .map(|&(i, j)| {
            let mut x = DMatrix::<f64>::zeros(rows, nb);
            for (q, (b, h)) in s.b.iter().zip(&s.h).enumerate() {
                let hij = h[(i, j)];
                for c in 1..nb {
                    let v = -hij * b[c] * (w[q] * den_scale[c - 1]);
                    x[(2 * q, c - 1)] = v.re;
                    x[(2 * q + 1, c - 1)] = v.im;
                }
                let r = hij * b[0] * w[q];
                x[(2 * q, nd)] = r.re;
                x[(2 * q + 1, nd)] = r.im;
            }
            qr.q_tr_mul(&mut x);
            let top = x.rows(0, nb).clone_owned();
            let bottom = x.rows(nb, rows - nb).clone_owned();
            let rb = if bottom.nrows() > 0 { bottom.qr().r() } else { DMatrix::zeros(0, nb) };
            (top, rb)
        })
        .collect();

    // Stacked reduced systems for the shared denominator.
    let total: usize = reduced.iter().map(|r| r.1.nrows()).sum();
    let mut sys = DMatrix::<f64>::zeros(total, nd);
    let mut rhs = DVector::<f64>::zeros(total);
    let mut off = 0;
    for (_, rb) in &reduced {
        let n = rb.nrows();
        sys.view_mut((off, 0), (n, nd)).copy_from(&rb.columns(0, nd));
        rhs.rows_mut(off, n).copy_from(&rb.column(nd));
        off += n;
    }
    let d_scaled = if nd == 0 {
        DVector::zeros(0)
    } else {
        let svd = sys.svd(true, true);
        // Columns are unit-norm after scaling, so an absolute cut-off
        // discards directions the data cannot determine.
        let smax = svd.singular_values.max();
        let eps = if scaling { 1e-11 } else { 1e-11 * smax };
        svd.solve(&rhs, eps).map_err(|e| Error::RankDeficient(e.to_string()))?
    };
    let mut den = vec![1.0; nb];
    for c in 1..nb {
        den[c] = d_scaled[c - 1] * den_scale[c - 1];
    }

    let mut num = vec![DMatrix::<f64>::zeros(p, p); nb];
    for (&(i, j), (top, _)) in entries.iter().zip(&reduced) {
        let t12 = top.columns(0, nd);
        let q1 = top.column(nd);
        let y = q1 - t12 * &d_scaled;
        let c = r11
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::RankDeficient("singular numerator factor".into()))?;
        for k in 0..nb {
            num[k][(i, j)] = c[k] * num_scale[k];
        }
    }
    Ok((num, den))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// Largest real part among all finite poles found (normalized units).
    pub worst_real_part: f64,
    pub worst_pole: (f64, f64),
    pub worst_theta: f64,
    /// Parameter values at which an unstable pole was found.
    pub unstable_thetas: Vec<f64>,
}

/// Computes the model poles on `grid_size` uniformly spaced parameter
/// values and checks that all of them lie in the open left half plane.
pub fn stability_sweep(model: &ParamModel, grid_size: usize) -> Result<StabilityReport> {
    if grid_size < 2 {
        return Err(Error::InvalidConfig("stability grid needs at least 2 points".into()));
    }
    let pb = model.param_basis();
    let thetas: Vec<f64> = (0..grid_size)
        .map(|i| pb.theta_min() + (pb.theta_max() - pb.theta_min()) * i as f64 / (grid_size - 1) as f64)
        .collect();
    let per_theta = thetas
        .par_iter()
        .map(|&t| model_poles(model, t).map(|(poles, _)| (t, poles)))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = StabilityReport {
        stable: true,
        worst_real_part: f64::NEG_INFINITY,
        worst_pole: (f64::NAN, f64::NAN),
        worst_theta: f64::NAN,
        unstable_thetas: Vec::new(),
    };
    for (t, poles) in per_theta {
        let mut bad = false;
        for p in poles {
            if p.re > rep.worst_real_part {
                rep.worst_real_part = p.re;
                rep.worst_pole = (p.re, p.im);
                rep.worst_theta = t;
            }
            if !(p.re < 0.0) {
                bad = true;
            }
        }
        if bad {
            rep.stable = false;
            rep.unstable_thetas.push(t);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{rms_error, RmsMode};
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn freqs(n: usize, fmax: f64) -> Vec<f64> {
        (0..n).map(|k| fmax * (k + 1) as f64 / n as f64).collect()
    }

    #[test]
    fn exact_recovery_in_class() {
        let gen = fixtures::random_model_on(
            default_poles(2, 0.05, 1.0).unwrap(),
            ParamBasis::chebyshev(2, 0.0, 1.0).unwrap(),
            1,
            31,
            0.9,
            1.0,
        );
        let data = fixtures::dataset_from_model(&gen, &freqs(60, 1.0), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let split = FitSplit::alternating(5);
        let out = fit(&data, &split, gen.poles(), *gen.param_basis(), &GskConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.log.len() <= 5, "{:?}", out.log);
        let all: Vec<usize> = (0..5).collect();
        let r = rms_error(&out.model, &data, &all, RmsMode::Absolute).unwrap();
        assert!(r.worst <= 1e-8, "{}", r.worst);
        assert_eq!(out.model.den_coeffs()[0], 1.0);
    }

    #[test]
    fn constant_data() {
        let half = fixtures::constant_model(1, 0.5);
        let data = fixtures::dataset_from_model(&half, &freqs(40, 1.0), &[0.0, 0.5, 1.0]);
        let poles = default_poles(3, 0.0, 1.0).unwrap();
        let pb = ParamBasis::chebyshev(2, 0.0, 1.0).unwrap();
        let out = fit(&data, &FitSplit::all(3), &poles, pb, &GskConfig::default()).unwrap();
        let num = out.model.num_coeffs();
        assert_abs_diff_eq!(num[0][(0, 0)], 0.5, epsilon = 1e-10);
        for c in &num[1..] {
            assert_abs_diff_eq!(c[(0, 0)], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sign_flip_of_data_flips_model() {
        let gen = fixtures::random_model(5, 2, 1, 1, 2, 0.9);
        let fr: Vec<f64> = freqs(50, 0.6);
        let th = [0.0, 0.3, 0.6, 1.0];
        let data = fixtures::perturb_dataset(&fixtures::dataset_from_model(&gen, &fr, &th), 3, 0.01);
        let neg = fixtures::scale_dataset(&data, Complex64::new(-1.0, 0.0));
        let poles = default_poles(4, 0.01, 0.6).unwrap();
        let pb = ParamBasis::chebyshev(2, 0.0, 1.0).unwrap();
        let a = fit(&data, &FitSplit::all(4), &poles, pb, &GskConfig::default()).unwrap();
        let b = fit(&neg, &FitSplit::all(4), &poles, pb, &GskConfig::default()).unwrap();
        for &t in &th {
            for &f in &fr {
                let ha = a.model.eval_hz(f, t).unwrap();
                let hb = b.model.eval_hz(f, t).unwrap();
                for (x, y) in ha.iter().zip(hb.iter()) {
                    assert!((x.norm() - y.norm()).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn best_iterate_is_minimum_and_normalized() {
        let gen = fixtures::random_model(9, 2, 2, 2, 2, 0.9);
        let data = fixtures::perturb_dataset(
            &fixtures::dataset_from_model(&gen, &freqs(40, 0.8), &[0.0, 0.5, 1.0]),
            4,
            0.05,
        );
        let poles = default_poles(5, 0.02, 0.8).unwrap();
        let pb = ParamBasis::chebyshev(2, 0.0, 1.0).unwrap();
        let cfg = GskConfig { max_iterations: 6, stop_tol: 1e-14, ..Default::default() };
        let out = fit(&data, &FitSplit::all(3), &poles, pb, &cfg).unwrap();
        assert!(!out.converged);
        let min = out.log.iter().map(|r| r.weighted_residual).fold(f64::INFINITY, f64::min);
        assert_eq!(out.log[out.best_iteration - 1].weighted_residual, min);
        assert_eq!(out.model.den_coeffs()[0], 1.0);
    }

    #[test]
    fn too_few_samples() {
        let gen = fixtures::random_model(1, 1, 2, 2, 3, 0.9);
        let data = fixtures::dataset_from_model(&gen, &[0.1, 0.2], &[0.0, 1.0]);
        let poles = default_poles(6, 0.1, 0.2).unwrap();
        let pb = ParamBasis::chebyshev(3, 0.0, 1.0).unwrap();
        let r = fit(&data, &FitSplit::all(2), &poles, pb, &GskConfig::default());
        assert!(matches!(r, Err(Error::RankDeficient(_))));
    }

    #[test]
    fn default_pole_rule() {
        let p = default_poles(5, 1e6, 1e9).unwrap();
        assert_eq!(p.real(), &[-0.5]);
        assert_eq!(p.complex().len(), 2);
        assert_abs_diff_eq!(p.complex()[0].1, 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(p.complex()[1].1, 1.0, epsilon = 1e-15);
        for &(re, im) in p.complex() {
            assert_abs_diff_eq!(-re / im, 0.01, epsilon = 1e-15);
        }
        let p = default_poles(4, 0.0, 1e9).unwrap();
        assert_abs_diff_eq!(p.complex()[0].1, 1e-3, epsilon = 1e-15);
    }

    #[test]
    fn stability_of_toys() {
        let r = stability_sweep(&fixtures::single_pole(2.0), 5).unwrap();
        assert!(r.stable);
        assert_abs_diff_eq!(r.worst_real_part, -1.0, epsilon = 1e-13);

        // D(s) = 1 − 2/(s+1) = (s − 1)/(s + 1).
        let ps = PoleSet::new(vec![-1.0], vec![]).unwrap();
        let pb = ParamBasis::chebyshev(1, 0.0, 1.0).unwrap();
        let m = ParamModel::new(1, ps, pb, vec![DMatrix::zeros(1, 1); 2], vec![1.0, -2.0], 1.0).unwrap();
        let r = stability_sweep(&m, 3).unwrap();
        assert!(!r.stable);
        assert_abs_diff_eq!(r.worst_real_part, 1.0, epsilon = 1e-13);
        assert_eq!(r.unstable_thetas.len(), 3);
    }
}
