use serde::{Deserialize, Serialize};

use super::shh::SpectrumSummary;
use super::CheckConfig;
use crate::error::Result;
use crate::model::{Laplace, ParamModel};
use crate::oracle::sigma_max;

/// Singular values above `1 + UNIT_TOL` count as violations. Passive bands
/// adjacent to a crossing can evaluate to `1 + ε` through rounding alone.
pub(crate) const UNIT_TOL: f64 = 1e-12;

/// Largest singular value inside a non-passive band and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    /// Normalized rad/s. For asymptotic violations this is `ω_cap`.
    pub omega: f64,
    pub sigma: f64,
    /// The peak is attained as `ω → ∞`.
    pub asymptotic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRecord {
    pub omega_low: f64,
    /// `f64::INFINITY` for the last band (`null` in JSON).
    #[serde(with = "crate::report::inf_as_null")]
    pub omega_high: f64,
    pub passive: bool,
    pub worst: Option<WorstPoint>,
    /// Largest singular value seen over the band's probes.
    pub peak_sigma: f64,
}

fn sigma_at(model: &ParamModel, theta: f64, s: Laplace) -> Result<f64> {
    Ok(sigma_max(&model.eval_transfer(s, theta)?))
}

/// Probe frequencies for one band, with the sampling variable used for
/// parabolic refinement (`ω` itself for bands touching DC, `ln ω` otherwise).
fn probes(lo: f64, hi: f64, g: usize, log_floor: f64) -> (Vec<f64>, bool) {
    let mut w = Vec::with_capacity(g + 2);
    if lo == 0.0 && hi.is_finite() {
        w.extend((0..g).map(|k| hi * k as f64 / g as f64));
        w.push(0.5 * hi);
        (w, false)
    } else if lo == 0.0 {
        // Whole positive axis: DC plus a log sweep.
        w.push(0.0);
        let (a, b) = (log_floor.ln(), hi.ln());
        w.extend((0..g).map(|k| (a + (b - a) * k as f64 / (g - 1) as f64).exp()));
        (w, true)
    } else {
        let (a, b) = (lo.ln(), hi.ln());
        w.extend((1..=g).map(|k| (a + (b - a) * k as f64 / (g + 1) as f64).exp()));
        w.push((0.5 * (a + b)).exp());
        (w, true)
    }
}

/// Splits `(0, ∞)` at the crossing frequencies of `summary` and classifies
/// every band by sampling `σ_max(H(jω; ϑ))`. The last band is sampled up to
/// `ω_cap` and also checked at `s = ∞`. Non-passive bands carry the best
/// probe after one parabolic refinement step.
pub fn classify_bands(
    model: &ParamModel,
    theta: f64,
    summary: &SpectrumSummary,
    cfg: &CheckConfig,
) -> Result<Vec<BandRecord>> {
    let chi = &summary.imag_freqs;
    let pmax = model.poles().max_magnitude();
    let scale = if pmax > 0.0 { pmax } else { 1.0 };
    let omega_cap = cfg.omega_cap_factor * scale.max(chi.last().copied().unwrap_or(0.0));
    let log_floor = 1e-3 * model.poles().min_magnitude().unwrap_or(1.0);
    let sigma_inf = sigma_at(model, theta, Laplace::Infinity)?;

    let mut edges = Vec::with_capacity(chi.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(chi);
    edges.push(f64::INFINITY);

    let g = cfg.band_samples;
    let mut out = Vec::with_capacity(edges.len() - 1);
    for win in edges.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let last = hi.is_infinite();
        let (ws, log_var) = if last {
            let (mut ws, lv) = probes(lo, omega_cap.max(2.0 * lo), g, log_floor.min(omega_cap * 1e-6));
            if lo > 0.0 {
                ws.push(omega_cap.max(2.0 * lo));
            }
            ws.sort_by(f64::total_cmp);
            (ws, lv)
        } else {
            let (mut ws, lv) = probes(lo, hi, g, log_floor);
            ws.sort_by(f64::total_cmp);
            (ws, lv)
        };
        let sig: Vec<f64> = ws
            .iter()
            .map(|&w| sigma_at(model, theta, Laplace::imag(w)))
            .collect::<Result<_>>()?;
        let (mut ib, mut best) = (0, f64::NEG_INFINITY);
        for (i, &v) in sig.iter().enumerate() {
            if v > best {
                ib = i;
                best = v;
            }
        }
        let mut w_best = ws[ib];
        if ib > 0 && ib + 1 < ws.len() && (!log_var || ws[ib - 1] > 0.0) {
            let tf = |w: f64| if log_var { w.ln() } else { w };
            let (t0, t1, t2) = (tf(ws[ib - 1]), tf(ws[ib]), tf(ws[ib + 1]));
            let (y0, y1, y2) = (sig[ib - 1], sig[ib], sig[ib + 1]);
            let den = (t1 - t0) * (y1 - y2) - (t1 - t2) * (y1 - y0);
            if den.abs() > 0.0 {
                let num = (t1 - t0).powi(2) * (y1 - y2) - (t1 - t2).powi(2) * (y1 - y0);
                let tv = t1 - 0.5 * num / den;
                if tv > t0 && tv < t2 {
                    let wv = if log_var { tv.exp() } else { tv };
                    let sv = sigma_at(model, theta, Laplace::imag(wv))?;
                    if sv > best {
                        best = sv;
                        w_best = wv;
                    }
                }
            }
        }
        let mut worst = WorstPoint {
            omega: w_best,
            sigma: best,
            asymptotic: false,
        };
        if last && sigma_inf > best {
            worst = WorstPoint {
                omega: omega_cap.max(2.0 * lo),
                sigma: sigma_inf,
                asymptotic: true,
            };
        }
        let passive = worst.sigma <= 1.0 + UNIT_TOL;
        out.push(BandRecord {
            omega_low: lo,
            omega_high: hi,
            passive,
            worst: (!passive).then_some(worst),
            peak_sigma: worst.sigma,
        });
    }
    Ok(out)
}
