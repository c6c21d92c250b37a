//! Frequency and parameter basis functions.
//!
//! The frequency basis is a set of partial fractions built on fixed stable
//! poles, `φ₀ = 1`, `φₙ(s) = 1/(s − qₙ)` for real poles, and for each complex
//! pair `p = p' ± j p''` the two real-valued combinations
//!
//! ```text
//! φ(s)  = 1/(s − p) + 1/(s − p*)
//! φ'(s) = j/(s − p) − j/(s − p*)
//! ```
//!
//! The parameter basis maps `ϑ ∈ [ϑmin, ϑmax]` affinely onto `x ∈ [−1, 1]`
//! and evaluates Chebyshev polynomials, monomials or a trigonometric series
//! in `x`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Laplace;

/// Fixed basis poles, in normalized frequency units (`s / ω_ref`).
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    real: Vec<f64>,
    complex: Vec<(f64, f64)>,
}

impl PoleSet {
    /// Builds a pole set. Complex poles are given as `(p', p'')` with
    /// `p' < 0` and `p'' > 0`; the conjugate is implied.
    pub fn new(real: Vec<f64>, complex: Vec<(f64, f64)>) -> Result<Self> {
        for &q in &real {
            if !(q.is_finite() && q < 0.0) {
                return Err(Error::InvalidModel(format!(
                    "real pole {q} is not strictly negative"
                )));
            }
        }
        for &(re, im) in &complex {
            if !(re.is_finite() && im.is_finite() && re < 0.0 && im > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "complex pole {re}+j{im} needs a negative real part and a positive imaginary part"
                )));
            }
        }
        for (i, a) in real.iter().enumerate() {
            if real[i + 1..].contains(a) {
                return Err(Error::InvalidModel(format!("duplicate real pole {a}")));
            }
        }
        for (i, a) in complex.iter().enumerate() {
            if complex[i + 1..].contains(a) {
                return Err(Error::InvalidModel(format!(
                    "duplicate complex pole {}+j{}",
                    a.0, a.1
                )));
            }
        }
        Ok(Self { real, complex })
    }

    pub fn real(&self) -> &[f64] {
        &self.real
    }

    pub fn complex(&self) -> &[(f64, f64)] {
        &self.complex
    }

    /// Number of non-constant basis functions, `n̄ = n̄r + 2 n̄c`.
    pub fn order(&self) -> usize {
        self.real.len() + 2 * self.complex.len()
    }

    /// Largest pole magnitude, or zero for an empty set.
    pub fn max_magnitude(&self) -> f64 {
        self.real
            .iter()
            .map(|q| q.abs())
            .chain(self.complex.iter().map(|&(a, b)| a.hypot(b)))
            .fold(0.0, f64::max)
    }

    /// Smallest pole magnitude, or `None` for an empty set.
    pub fn min_magnitude(&self) -> Option<f64> {
        self.real
            .iter()
            .map(|q| q.abs())
            .chain(self.complex.iter().map(|&(a, b)| a.hypot(b)))
            .reduce(f64::min)
    }

    /// Returns the same poles multiplied by `a > 0`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            real: self.real.iter().map(|q| q * a).collect(),
            complex: self.complex.iter().map(|&(x, y)| (x * a, y * a)).collect(),
        }
    }

    /// Evaluates `[φ₀(s), …, φ_n̄(s)]`.
    ///
    /// At `s = ∞` every partial fraction vanishes and only `φ₀ = 1` survives.
    pub fn eval(&self, s: Laplace) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.order() + 1);
        out.push(Complex64::new(1.0, 0.0));
        let s = match s {
            Laplace::Infinity => {
                out.resize(self.order() + 1, Complex64::new(0.0, 0.0));
                return Ok(out);
            }
            Laplace::Finite(s) => s,
        };
        let singular = || Error::SingularEvaluation {
            s: Laplace::Finite(s),
            theta: f64::NAN,
        };
        for &q in &self.real {
            let d = s - q;
            if d.norm() <= f64::EPSILON * q.abs() {
                return Err(singular());
            }
            out.push(d.inv());
        }
        let j = Complex64::i();
        for &(re, im) in &self.complex {
            let p = Complex64::new(re, im);
            let (d1, d2) = (s - p, s - p.conj());
            let tol = f64::EPSILON * p.norm();
            if d1.norm() <= tol || d2.norm() <= tol {
                return Err(singular());
            }
            let (g1, g2) = (d1.inv(), d2.inv());
            out.push(g1 + g2);
            out.push(j * g1 - j * g2);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Chebyshev,
    Monomial,
    Trigonometric,
}

/// Parameter basis `ξ₁ … ξ_ℓ̄` over a closed interval in user units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBasis {
    kind: BasisKind,
    count: usize,
    theta_min: f64,
    theta_max: f64,
}

impl ParamBasis {
    pub fn new(kind: BasisKind, count: usize, theta_min: f64, theta_max: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidModel("parameter basis needs at least one function".into()));
        }
        if !(theta_min.is_finite() && theta_max.is_finite() && theta_min < theta_max) {
            return Err(Error::InvalidModel(format!(
                "parameter domain [{theta_min}, {theta_max}] is empty or not finite"
            )));
        }
        Ok(Self {
            kind,
            count,
            theta_min,
            theta_max,
        })
    }

    pub fn chebyshev(count: usize, theta_min: f64, theta_max: f64) -> Result<Self> {
        Self::new(BasisKind::Chebyshev, count, theta_min, theta_max)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn theta_min(&self) -> f64 {
        self.theta_min
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    /// True if `theta` lies in the fitting domain.
    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.theta_min && theta <= self.theta_max
    }

    /// Affine map of the domain onto `[−1, 1]`.
    pub fn normalize(&self, theta: f64) -> f64 {
        (2.0 * theta - (self.theta_max + self.theta_min)) / (self.theta_max - self.theta_min)
    }

    /// Evaluates `[ξ₁(ϑ), …, ξ_ℓ̄(ϑ)]`. Arguments outside the domain are
    /// extrapolated; use [`ParamBasis::contains`] to flag them.
    pub fn eval(&self, theta: f64) -> Vec<f64> {
        let x = self.normalize(theta);
        let mut out = Vec::with_capacity(self.count);
        match self.kind {
            BasisKind::Chebyshev => {
                out.push(1.0);
                if self.count > 1 {
                    out.push(x);
                }
                while out.len() < self.count {
                    let k = out.len();
                    out.push(2.0 * x * out[k - 1] - out[k - 2]);
                }
            }
            BasisKind::Monomial => {
                let mut v = 1.0;
                for _ in 0..self.count {
                    out.push(v);
                    v *= x;
                }
            }
            BasisKind::Trigonometric => {
                // 1, cos(πu), sin(πu), cos(2πu), sin(2πu), … with u = (x+1)/2 ∈ [0,1]
                let u = 0.5 * (x + 1.0);
                out.push(1.0);
                let mut k = 1.0;
                while out.len() < self.count {
                    out.push((k * PI * u).cos());
                    if out.len() < self.count {
                        out.push((k * PI * u).sin());
                    }
                    k += 1.0;
                }
            }
        }
        out
    }
}
