//! The parameterized rational model
//!
//! ```text
//!            Σₙ Rₙ(ϑ) φₙ(s)              Rₙ(ϑ) = Σ_ℓ R_{n,ℓ} ξ_ℓ(ϑ)
//! H(s; ϑ) = ─────────────── ,
//!            Σₙ rₙ(ϑ) φₙ(s)              rₙ(ϑ) = Σ_ℓ r_{n,ℓ} ξ_ℓ(ϑ)
//! ```
//!
//! Coefficients are stored flat with `n` major and `ℓ` minor, i.e. the pair
//! `(n, ℓ)` lives at index `n·ℓ̄ + ℓ` (zero-based). Every other part of the
//! crate relies on this ordering.
//!
//! The Laplace variable is normalized: `s = s_phys / ω_ref` with
//! `ω_ref = 2π·freq_scale_hz`. Poles are stored in the same normalized units.

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, ParamBasis, PoleSet};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A point of the extended Laplace domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Laplace {
    Finite(Complex64),
    Infinity,
}

impl Laplace {
    /// `s = jω`.
    pub fn imag(omega: f64) -> Self {
        Laplace::Finite(Complex64::new(0.0, omega))
    }

    pub fn conj(self) -> Self {
        match self {
            Laplace::Finite(s) => Laplace::Finite(s.conj()),
            Laplace::Infinity => Laplace::Infinity,
        }
    }
}

impl From<Complex64> for Laplace {
    fn from(s: Complex64) -> Self {
        Laplace::Finite(s)
    }
}

impl fmt::Display for Laplace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Laplace::Finite(s) => write!(f, "{}{:+}j", s.re, s.im),
            Laplace::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamModel {
    ports: usize,
    poles: PoleSet,
    pbasis: ParamBasis,
    num: Vec<DMatrix<f64>>,
    den: Vec<f64>,
    freq_scale_hz: f64,
}

impl ParamModel {
    pub fn new(
        ports: usize,
        poles: PoleSet,
        pbasis: ParamBasis,
        num: Vec<DMatrix<f64>>,
        den: Vec<f64>,
        freq_scale_hz: f64,
    ) -> Result<Self> {
        if ports == 0 {
            return Err(Error::InvalidModel("model needs at least one port".into()));
        }
        if !(freq_scale_hz.is_finite() && freq_scale_hz > 0.0) {
            return Err(Error::InvalidModel(format!(
                "frequency scale {freq_scale_hz} must be positive"
            )));
        }
        let nc = (poles.order() + 1) * pbasis.count();
        if num.len() != nc || den.len() != nc {
            return Err(Error::ShapeMismatch(format!(
                "expected {nc} coefficient slots, got {} numerator and {} denominator",
                num.len(),
                den.len()
            )));
        }
        for m in &num {
            if m.shape() != (ports, ports) {
                return Err(Error::ShapeMismatch(format!(
                    "numerator coefficient is {:?}, expected {ports}x{ports}",
                    m.shape()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel("non-finite numerator coefficient".into()));
            }
        }
        if den.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite denominator coefficient".into()));
        }
        if den[0] != 1.0 {
            return Err(Error::InvalidModel(format!(
                "denominator is not normalized: r(0,1) = {}",
                den[0]
            )));
        }
        Ok(Self {
            ports,
            poles,
            pbasis,
            num,
            den,
            freq_scale_hz,
        })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn poles(&self) -> &PoleSet {
        &self.poles
    }

    pub fn param_basis(&self) -> &ParamBasis {
        &self.pbasis
    }

    /// `n̄ + 1`, the number of frequency basis functions including `φ₀`.
    pub fn n_freq_basis(&self) -> usize {
        self.poles.order() + 1
    }

    /// `ℓ̄`.
    pub fn n_param_basis(&self) -> usize {
        self.pbasis.count()
    }

    /// Flat index of the coefficient pair `(n, ℓ)`, both zero-based.
    pub fn coeff_index(&self, n: usize, l: usize) -> usize {
        n * self.pbasis.count() + l
    }

    pub fn num_coeffs(&self) -> &[DMatrix<f64>] {
        &self.num
    }

    pub fn den_coeffs(&self) -> &[f64] {
        &self.den
    }

    pub fn freq_scale_hz(&self) -> f64 {
        self.freq_scale_hz
    }

    /// `ω_ref` in rad/s.
    pub fn omega_ref(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.freq_scale_hz
    }

    /// Normalized `s` at physical frequency `f` in Hz.
    pub fn s_at_hz(&self, f: f64) -> Laplace {
        Laplace::imag(f / self.freq_scale_hz)
    }

    /// `Rₙ(ϑ)` for every `n`, given the parameter basis values.
    fn num_at(&self, xi: &[f64]) -> Vec<DMatrix<f64>> {
        let lb = self.pbasis.count();
        (0..self.n_freq_basis())
            .map(|n| {
                let mut acc = DMatrix::zeros(self.ports, self.ports);
                for (l, x) in xi.iter().enumerate() {
                    acc += &self.num[n * lb + l] * *x;
                }
                acc
            })
            .collect()
    }

    fn den_at(&self, xi: &[f64]) -> Vec<f64> {
        let lb = self.pbasis.count();
        (0..self.n_freq_basis())
            .map(|n| xi.iter().enumerate().map(|(l, x)| self.den[n * lb + l] * x).sum())
            .collect()
    }

    /// Parameter-resolved numerator coefficients `R₀(ϑ) … R_n̄(ϑ)`.
    pub fn numerator_coeffs(&self, theta: f64) -> Vec<DMatrix<f64>> {
        self.num_at(&self.pbasis.eval(theta))
    }

    /// Parameter-resolved denominator coefficients `r₀(ϑ) … r_n̄(ϑ)`.
    pub fn denominator_coeffs(&self, theta: f64) -> Vec<f64> {
        self.den_at(&self.pbasis.eval(theta))
    }

    fn basis_at(&self, s: Laplace, theta: f64) -> Result<Vec<Complex64>> {
        self.poles.eval(s).map_err(|e| match e {
            Error::SingularEvaluation { s, .. } => Error::SingularEvaluation { s, theta },
            other => other,
        })
    }

    /// `D(s, ϑ)`.
    pub fn denominator(&self, s: impl Into<Laplace>, theta: f64) -> Result<Complex64> {
        let s = s.into();
        let phi = self.basis_at(s, theta)?;
        self.den_from(&phi, &self.pbasis.eval(theta), s, theta)
    }

    fn den_from(&self, phi: &[Complex64], xi: &[f64], s: Laplace, theta: f64) -> Result<Complex64> {
        let r = self.den_at(xi);
        let mut d = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for (rn, p) in r.iter().zip(phi) {
            let t = p * *rn;
            scale += t.norm();
            d += t;
        }
        if !d.is_finite() || d.norm() <= 1e-14 * scale {
            return Err(Error::SingularEvaluation { s, theta });
        }
        Ok(d)
    }

    /// `H(s; ϑ) = N(s,ϑ)/D(s,ϑ)`; at `s = ∞` this is `R₀(ϑ)/r₀(ϑ)`.
    pub fn eval_transfer(&self, s: impl Into<Laplace>, theta: f64) -> Result<DMatrix<Complex64>> {
        let s = s.into();
        let phi = self.basis_at(s, theta)?;
        let xi = self.pbasis.eval(theta);
        let d = self.den_from(&phi, &xi, s, theta)?;
        let rn = self.num_at(&xi);
        let mut h = DMatrix::<Complex64>::zeros(self.ports, self.ports);
        for (r, p) in rn.iter().zip(&phi) {
            for (hij, rij) in h.iter_mut().zip(r.iter()) {
                *hij += p * *rij;
            }
        }
        Ok(h.map(|v| v / d))
    }

    /// Transfer matrix at physical frequency `f` (Hz).
    pub fn eval_hz(&self, f: f64, theta: f64) -> Result<DMatrix<Complex64>> {
        self.eval_transfer(self.s_at_hz(f), theta)
    }

    /// `ΔH(s; ϑ) = ΔN(s,ϑ)/D(s,ϑ)` for a numerator perturbation.
    pub fn eval_perturbation(
        &self,
        pert: &CoeffPerturbation,
        s: impl Into<Laplace>,
        theta: f64,
    ) -> Result<DMatrix<Complex64>> {
        self.check_pert(pert)?;
        let s = s.into();
        let phi = self.basis_at(s, theta)?;
        let xi = self.pbasis.eval(theta);
        let d = self.den_from(&phi, &xi, s, theta)?;
        let lb = self.pbasis.count();
        let mut h = DMatrix::<Complex64>::zeros(self.ports, self.ports);
        for (n, p) in phi.iter().enumerate() {
            for (l, x) in xi.iter().enumerate() {
                let w = p * *x;
                for (hij, dij) in h.iter_mut().zip(pert.delta[n * lb + l].iter()) {
                    *hij += w * *dij;
                }
            }
        }
        Ok(h.map(|v| v / d))
    }

    fn check_pert(&self, pert: &CoeffPerturbation) -> Result<()> {
        let ok = pert.delta.len() == self.num.len()
            && pert.delta.iter().all(|m| m.shape() == (self.ports, self.ports));
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                "perturbation does not match the model's coefficient layout".into(),
            ))
        }
    }

    /// Returns a model with numerator coefficients `R + ΔR`. Poles, bases and
    /// the denominator are carried over unchanged.
    pub fn apply_perturbation(&self, pert: &CoeffPerturbation) -> Result<Self> {
        self.check_pert(pert)?;
        let mut out = self.clone();
        for (r, d) in out.num.iter_mut().zip(&pert.delta) {
            *r += d;
        }
        Ok(out)
    }

    /// Same model with numerator coefficients replaced.
    pub fn with_numerator(&self, num: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::new(
            self.ports,
            self.poles.clone(),
            self.pbasis,
            num,
            self.den.clone(),
            self.freq_scale_hz,
        )
    }

    /// Frequency-scaled copy: poles and every `n ≥ 1` coefficient multiplied
    /// by `a`, so that `H'(a·s; ϑ) = H(s; ϑ)`.
    pub fn frequency_scaled(&self, a: f64) -> Result<Self> {
        let lb = self.pbasis.count();
        let num = self
            .num
            .iter()
            .enumerate()
            .map(|(k, m)| if k >= lb { m * a } else { m.clone() })
            .collect();
        let den = self
            .den
            .iter()
            .enumerate()
            .map(|(k, v)| if k >= lb { v * a } else { *v })
            .collect();
        Self::new(
            self.ports,
            self.poles.scaled(a),
            self.pbasis,
            num,
            den,
            self.freq_scale_hz,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDoc::from(self)).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))?;
        doc.into_model()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ModelDoc = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        doc.into_model()
    }
}

/// Additive correction `ΔR_{n,ℓ}` of the numerator coefficients, in the same
/// flat `(n, ℓ)` layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffPerturbation {
    delta: Vec<DMatrix<f64>>,
}

impl CoeffPerturbation {
    pub fn zeros(model: &ParamModel) -> Self {
        Self {
            delta: vec![DMatrix::zeros(model.ports, model.ports); model.num.len()],
        }
    }

    pub fn new(delta: Vec<DMatrix<f64>>) -> Self {
        Self { delta }
    }

    pub fn delta(&self) -> &[DMatrix<f64>] {
        &self.delta
    }

    pub fn delta_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.delta
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            delta: self.delta.iter().map(|m| m * a).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.delta.iter().all(|m| m.iter().all(|v| *v == 0.0))
    }
}

impl std::ops::Neg for &CoeffPerturbation {
    type Output = CoeffPerturbation;

    fn neg(self) -> CoeffPerturbation {
        CoeffPerturbation {
            delta: self.delta.iter().map(|m| -m).collect(),
        }
    }
}

// On-disk layout. `num_coeffs[n][l][i][j]`, `den_coeffs[n][l]`, poles in
// normalized units.
#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    ports: usize,
    freq_scale_hz: f64,
    poles: PolesDoc,
    param_basis: BasisDoc,
    num_coeffs: Vec<Vec<Vec<Vec<f64>>>>,
    den_coeffs: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PolesDoc {
    real: Vec<f64>,
    complex: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct BasisDoc {
    kind: BasisKind,
    count: usize,
    theta_min: f64,
    theta_max: f64,
}

impl From<&ParamModel> for ModelDoc {
    fn from(m: &ParamModel) -> Self {
        let lb = m.pbasis.count();
        let nb = m.n_freq_basis();
        let num_coeffs = (0..nb)
            .map(|n| {
                (0..lb)
                    .map(|l| {
                        let c = &m.num[n * lb + l];
                        (0..m.ports)
                            .map(|i| (0..m.ports).map(|j| c[(i, j)]).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let den_coeffs = (0..nb).map(|n| m.den[n * lb..(n + 1) * lb].to_vec()).collect();
        ModelDoc {
            version: MODEL_FORMAT_VERSION,
            ports: m.ports,
            freq_scale_hz: m.freq_scale_hz,
            poles: PolesDoc {
                real: m.poles.real().to_vec(),
                complex: m.poles.complex().iter().map(|&(a, b)| [a, b]).collect(),
            },
            param_basis: BasisDoc {
                kind: m.pbasis.kind(),
                count: lb,
                theta_min: m.pbasis.theta_min(),
                theta_max: m.pbasis.theta_max(),
            },
            num_coeffs,
            den_coeffs,
        }
    }
}

impl ModelDoc {
    fn into_model(self) -> Result<ParamModel> {
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model format version {}",
                self.version
            )));
        }
        let poles = PoleSet::new(
            self.poles.real,
            self.poles.complex.into_iter().map(|[a, b]| (a, b)).collect(),
        )?;
        let pb = self.param_basis;
        let pbasis = ParamBasis::new(pb.kind, pb.count, pb.theta_min, pb.theta_max)?;
        let p = self.ports;
        let mut num = Vec::new();
        for row in &self.num_coeffs {
            if row.len() != pb.count {
                return Err(Error::ShapeMismatch("num_coeffs inner length".into()));
            }
            for mat in row {
                if mat.len() != p || mat.iter().any(|r| r.len() != p) {
                    return Err(Error::ShapeMismatch("num_coeffs matrix shape".into()));
                }
                num.push(DMatrix::from_fn(p, p, |i, j| mat[i][j]));
            }
        }
        let mut den = Vec::new();
        for row in &self.den_coeffs {
            if row.len() != pb.count {
                return Err(Error::ShapeMismatch("den_coeffs inner length".into()));
            }
            den.extend_from_slice(row);
        }
        ParamModel::new(p, poles, pbasis, num, den, self.freq_scale_hz)
    }
}
