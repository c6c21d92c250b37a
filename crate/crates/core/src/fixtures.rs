//! Synthetic models and datasets with known properties.
//!
//! Toy models use `freq_scale_hz = 1/(2π)`, so normalized frequencies are
//! plain rad/s. Random models are seeded and reproducible. Helpers panic on
//! invalid input since they only build known-good objects.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{ParamBasis, PoleSet};
use crate::dataset::SampledDataset;
use crate::gsk::default_poles;
use crate::model::{CoeffPerturbation, ParamModel};
use crate::oracle;

/// `freq_scale_hz` that makes normalized units equal to rad/s.
pub const UNIT_RAD_SCALE: f64 = 1.0 / (2.0 * PI);

/// 1-port `H(s) = c/(s + 1)`, parameter-independent on `ϑ ∈ [0, 1]`.
/// `σ(jω) = c/√(1+ω²)` crosses 1 at `ω = √(c² − 1)` when `c > 1`.
pub fn single_pole(c: f64) -> ParamModel {
    ParamModel::new(
        1,
        PoleSet::new(vec![-1.0], vec![]).unwrap(),
        ParamBasis::chebyshev(1, 0.0, 1.0).unwrap(),
        vec![DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, c)],
        vec![1.0, 0.0],
        UNIT_RAD_SCALE,
    )
    .unwrap()
}

/// 1-port `H(s; ϑ) = ϑ/(s + 1)` on `ϑ ∈ [0.5, 1.5]` with two Chebyshev
/// terms. Non-passive exactly for `ϑ > 1`, with the worst point at DC.
pub fn linear_in_theta() -> ParamModel {
    // ϑ = 1 + x/2 with x the normalized parameter.
    let num = vec![
        DMatrix::zeros(1, 1),
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 0.5),
    ];
    ParamModel::new(
        1,
        PoleSet::new(vec![-1.0], vec![]).unwrap(),
        ParamBasis::chebyshev(2, 0.5, 1.5).unwrap(),
        num,
        vec![1.0, 0.0, 0.0, 0.0],
        UNIT_RAD_SCALE,
    )
    .unwrap()
}

/// Model without poles whose every entry equals `value`.
pub fn constant_model(ports: usize, value: f64) -> ParamModel {
    ParamModel::new(
        ports,
        PoleSet::new(vec![], vec![]).unwrap(),
        ParamBasis::chebyshev(1, 0.0, 1.0).unwrap(),
        vec![DMatrix::from_element(ports, ports, value)],
        vec![1.0],
        UNIT_RAD_SCALE,
    )
    .unwrap()
}

/// Random stable poles: real in `[−3, −0.2]`, complex with imaginary part in
/// `[0.3, 3]` and damping ratio in `[0.05, 0.4]`.
pub fn random_poles(rng: &mut ChaCha8Rng, n_real: usize, n_complex: usize) -> PoleSet {
    let real = (0..n_real).map(|_| -rng.gen_range(0.2..3.0)).collect();
    let complex = (0..n_complex)
        .map(|_| {
            let im = rng.gen_range(0.3..3.0);
            (-im * rng.gen_range(0.05..0.4), im)
        })
        .collect();
    PoleSet::new(real, complex).unwrap()
}

/// Random model on `ϑ ∈ [0, 1]` whose peak `max σ` over a coarse sweep
/// equals `peak`. See [`random_model_on`].
pub fn random_model(seed: u64, ports: usize, n_real: usize, n_complex: usize, ell: usize, peak: f64) -> ParamModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poles = random_poles(&mut rng, n_real, n_complex);
    let pb = ParamBasis::chebyshev(ell, 0.0, 1.0).unwrap();
    random_model_on(poles, pb, ports, seed.wrapping_add(0x9e37), peak, 1.0)
}

/// Random numerator and denominator on given poles. The denominator stays
/// within `0.4·den_strength` of 1 on the closed right half plane for every
/// `ϑ` in the domain, so the model is stable there. The numerator is
/// scaled so that a coarse sweep peaks at `peak`.
pub fn random_model_on(
    poles: PoleSet,
    pbasis: ParamBasis,
    ports: usize,
    seed: u64,
    peak: f64,
    den_strength: f64,
) -> ParamModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lb = pbasis.count();
    // Per-basis-function magnitude bound of φ_n on Re s ≥ 0.
    let mut bound = vec![1.0];
    bound.extend(poles.real().iter().map(|q| 1.0 / q.abs()));
    for &(re, _) in poles.complex() {
        bound.push(2.0 / re.abs());
        bound.push(2.0 / re.abs());
    }
    let nb = bound.len();
    let mut num = Vec::with_capacity(nb * lb);
    for &bn in &bound {
        for l in 0..lb {
            let amp = if l == 0 { 1.0 } else { 0.5 };
            num.push(DMatrix::from_fn(ports, ports, |_, _| rng.gen_range(-1.0..1.0) * amp / bn));
        }
    }
    let mut den: Vec<f64> = (0..nb * lb).map(|_| rng.gen_range(-1.0..1.0)).collect();
    den[0] = 0.0;
    let total: f64 = den.iter().enumerate().map(|(k, r)| r.abs() * bound[k / lb]).sum();
    let scale = if total > 0.0 { 0.4 * den_strength / total } else { 0.0 };
    for r in den.iter_mut() {
        *r *= scale;
    }
    den[0] = 1.0;
    let freq_scale = UNIT_RAD_SCALE;
    let m = ParamModel::new(ports, poles, pbasis, num, den, freq_scale).unwrap();
    scale_to_peak(&m, peak, 400, 9, 10.0)
}

/// Scales the numerator so that the oracle sweep on the given grid peaks at
/// exactly `peak`.
pub fn scale_to_peak(m: &ParamModel, peak: f64, n_freq: usize, n_theta: usize, f_max_mult: f64) -> ParamModel {
    let cur = oracle::dense_sweep(m, n_freq, n_theta, f_max_mult).unwrap().max_sigma;
    if cur == 0.0 {
        return m.clone();
    }
    let a = peak / cur;
    m.with_numerator(m.num_coeffs().iter().map(|c| c * a).collect()).unwrap()
}

/// Random numerator perturbation with entries uniform in `[−scale, scale]`.
pub fn random_perturbation(model: &ParamModel, seed: u64, scale: f64) -> CoeffPerturbation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = model.ports();
    CoeffPerturbation::new(
        (0..model.num_coeffs().len())
            .map(|_| DMatrix::from_fn(p, p, |_, _| rng.gen_range(-scale..scale)))
            .collect(),
    )
}

/// Samples `model` on the given frequency (Hz) and parameter grid.
pub fn dataset_from_model(model: &ParamModel, freqs_hz: &[f64], thetas: &[f64]) -> SampledDataset {
    let mut samples = Vec::with_capacity(freqs_hz.len() * thetas.len());
    for &t in thetas {
        for &f in freqs_hz {
            samples.push(model.eval_hz(f, t).unwrap());
        }
    }
    SampledDataset::new(model.ports(), freqs_hz.to_vec(), thetas.to_vec(), samples).unwrap()
}

/// Adds complex noise with real and imaginary parts uniform in
/// `[−scale, scale]` to every sample.
pub fn perturb_dataset(data: &SampledDataset, seed: u64, scale: f64) -> SampledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    map_samples(data, |h| {
        h.map(|v| v + Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
    })
}

/// Multiplies every sample by a constant.
pub fn scale_dataset(data: &SampledDataset, c: Complex64) -> SampledDataset {
    map_samples(data, |h| h * c)
}

fn map_samples(data: &SampledDataset, mut f: impl FnMut(&DMatrix<Complex64>) -> DMatrix<Complex64>) -> SampledDataset {
    let mut samples = Vec::with_capacity(data.n_freqs() * data.n_params());
    for m in 0..data.n_params() {
        for k in 0..data.n_freqs() {
            samples.push(f(data.sample(k, m)));
        }
    }
    SampledDataset::new(data.ports(), data.freqs_hz().to_vec(), data.params().to_vec(), samples)
        .unwrap()
        .with_parameter_label(data.parameter_name(), data.parameter_unit())
}

/// A 2-port with a shallow passivity violation and noisy reference data.
pub struct ShallowFixture {
    /// Slightly non-passive model, peak `1.0005` on a 2048 × 101 sweep.
    pub model: ParamModel,
    /// Passive model the data were drawn from.
    pub generator: ParamModel,
    /// Generator samples plus uniform noise of amplitude `1e-3`.
    pub data: SampledDataset,
}

pub const SHALLOW_PEAK: f64 = 1.0005;

pub fn shallow_two_port(seed: u64) -> ShallowFixture {
    let generator = random_model(seed, 2, 1, 2, 2, 0.999);
    let freqs: Vec<f64> = (0..100).map(|k| k as f64 / 99.0).collect();
    let thetas: Vec<f64> = (0..9).map(|m| m as f64 / 8.0).collect();
    let data = perturb_dataset(&dataset_from_model(&generator, &freqs, &thetas), seed ^ 0x5eed, 1e-3);
    let model = scale_to_peak(&generator, SHALLOW_PEAK, 2048, 101, 10.0);
    ShallowFixture {
        model,
        generator,
        data,
    }
}

/// 2-port dataset with the dimensions of a PCB interconnect study:
/// 500 frequencies up to 10 GHz, 9 parameter values on `[400, 600]` µm,
/// drawn from an order-44 model with a quadratic parameter basis whose
/// peak is slightly above 1.
pub fn pcb_scale(seed: u64) -> (ParamModel, SampledDataset) {
    let f_max = 10e9;
    let freqs: Vec<f64> = (1..=500).map(|k| f_max * k as f64 / 500.0).collect();
    let thetas: Vec<f64> = (0..9).map(|m| 400.0 + 25.0 * m as f64).collect();
    let poles = default_poles(44, freqs[0], f_max).unwrap();
    let pb = ParamBasis::chebyshev(3, 400.0, 600.0).unwrap();
    let gen = random_model_on(poles, pb, 2, seed, 1.0, 0.3);
    // Re-express in the dataset's frequency normalization.
    let gen = ParamModel::new(
        2,
        gen.poles().clone(),
        pb,
        gen.num_coeffs().to_vec(),
        gen.den_coeffs().to_vec(),
        f_max,
    )
    .unwrap();
    let gen = scale_to_peak(&gen, 1.002, 2048, 21, 10.0);
    let data = dataset_from_model(&gen, &freqs, &thetas).with_parameter_label("radius", "um");
    (gen, data)
}
