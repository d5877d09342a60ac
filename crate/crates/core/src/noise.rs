//! Measurement-noise models with exact two-term chaos expansions.
//!
//! Any finite-variance scalar `M` is exactly `m⁰ + m¹·φ¹(ξ)` with
//! `m⁰ = E[M]`, `m¹ = √V[M]` and the standardized basis function
//! `φ¹(ξ) = (ξ − E[ξ])/√V[ξ]`. Only this two-term level is represented.

use std::fmt;
use std::sync::Arc;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, positive, Error, Result};
use crate::linalg::SymMatrix;
use crate::rng::Stream;

/// Coefficients of a two-term expansion `m⁰·1 + m¹·φ¹(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pce2 {
    pub m0: f64,
    pub m1: f64,
}

impl Pce2 {
    pub fn mean(&self) -> f64 {
        self.m0
    }

    pub fn variance(&self) -> f64 {
        self.m1 * self.m1
    }
}

/// Exact two-term expansion of a variable with the given mean and standard deviation.
pub fn two_term_pce(mean: f64, std: f64) -> Result<Pce2> {
    if !mean.is_finite() {
        return Err(Error::NonFinite("mean"));
    }
    if !(std.is_finite() && std > 0.0) {
        return Err(Error::NonPositiveStd(std));
    }
    Ok(Pce2 { m0: mean, m1: std })
}

/// Mean and covariance of a vector-valued variable from its expansion
/// coefficients `v⁰, v¹, …`: `E = v⁰`, `Cov = Σ_{j≥1} vʲ·vʲᵀ`.
pub fn moments_from_pce(coeffs: &[Vec<f64>]) -> Result<(Vec<f64>, SymMatrix)> {
    let first = coeffs.first().ok_or(Error::Empty("coefficient list"))?;
    let dim = first.len();
    for c in coeffs {
        check_len(dim, c.len())?;
    }
    let cov = SymMatrix::from_fn(dim, |a, b| coeffs[1..].iter().map(|v| v[a] * v[b]).sum())?;
    Ok((first.clone(), cov))
}

/// Draws of a zero-mean, unit-variance basis argument.
pub type StandardizedSampler = Arc<dyn Fn(&mut Stream) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum NoiseKind {
    Gaussian {
        sigma: f64,
    },
    /// Shape `alpha`, scale `beta`.
    Gamma {
        alpha: f64,
        beta: f64,
    },
    CustomTwoTerm {
        sampler: StandardizedSampler,
        /// Standardized third moment of the basis argument, if known.
        skewness: Option<f64>,
    },
}

impl fmt::Debug for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::Gaussian { sigma } => {
                f.debug_struct("Gaussian").field("sigma", sigma).finish()
            }
            NoiseKind::Gamma { alpha, beta } => f
                .debug_struct("Gamma")
                .field("alpha", alpha)
                .field("beta", beta)
                .finish(),
            NoiseKind::CustomTwoTerm { skewness, .. } => f
                .debug_struct("CustomTwoTerm")
                .field("skewness", skewness)
                .finish_non_exhaustive(),
        }
    }
}

/// Serializable description of the built-in noise models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    Gamma { alpha: f64, beta: f64 },
}

/// An i.i.d. additive noise distribution together with its exact expansion.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    kind: NoiseKind,
    pce: Pce2,
    gamma: Option<GammaSampler>,
}

impl NoiseModel {
    /// Zero-mean Gaussian: `m⁰ = 0`, `m¹ = σ`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(Self {
            kind: NoiseKind::Gaussian { sigma },
            pce: Pce2 { m0: 0.0, m1: sigma },
            gamma: None,
        })
    }

    /// Gamma(shape α, scale β): `m⁰ = αβ`, `m¹ = √α·β`.
    pub fn gamma(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self {
            kind: NoiseKind::Gamma { alpha, beta },
            pce: Pce2 {
                m0: alpha * beta,
                m1: alpha.sqrt() * beta,
            },
            gamma: Some(GammaSampler::new(alpha, beta)),
        })
    }

    /// A user-supplied distribution given by its mean, standard deviation and
    /// a sampler of the standardized variable.
    pub fn custom(
        mean: f64,
        std: f64,
        sampler: StandardizedSampler,
        skewness: Option<f64>,
    ) -> Result<Self> {
        let pce = two_term_pce(mean, std)?;
        Ok(Self {
            kind: NoiseKind::CustomTwoTerm { sampler, skewness },
            pce,
            gamma: None,
        })
    }

    pub fn from_spec(spec: NoiseSpec) -> Result<Self> {
        match spec {
            NoiseSpec::Gaussian { sigma } => Self::gaussian(sigma),
            NoiseSpec::Gamma { alpha, beta } => Self::gamma(alpha, beta),
        }
    }

    /// The serializable description, if this is a built-in model.
    pub fn spec(&self) -> Option<NoiseSpec> {
        match self.kind {
            NoiseKind::Gaussian { sigma } => Some(NoiseSpec::Gaussian { sigma }),
            NoiseKind::Gamma { alpha, beta } => Some(NoiseSpec::Gamma { alpha, beta }),
            NoiseKind::CustomTwoTerm { .. } => None,
        }
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn pce(&self) -> Pce2 {
        self.pce
    }

    /// `σ_M² = (m¹)²`.
    pub fn variance(&self) -> f64 {
        self.pce.variance()
    }

    /// Standardized third moment of `φ¹(ξ)`: 0 for Gaussian, `2/√α` for Gamma.
    pub fn standardized_skewness(&self) -> Option<f64> {
        match self.kind {
            NoiseKind::Gaussian { .. } => Some(0.0),
            NoiseKind::Gamma { alpha, .. } => Some(2.0 / alpha.sqrt()),
            NoiseKind::CustomTwoTerm { skewness, .. } => skewness,
        }
    }

    /// One draw of `φ¹(ξ)`.
    #[inline]
    pub fn draw_standardized(&self, rng: &mut Stream) -> f64 {
        match &self.kind {
            NoiseKind::Gaussian { .. } => rng.sample(StandardNormal),
            NoiseKind::Gamma { .. } => {
                let g = self.gamma.as_ref().expect("gamma sampler present");
                (g.sample(rng) - self.pce.m0) / self.pce.m1
            }
            NoiseKind::CustomTwoTerm { sampler, .. } => sampler(rng),
        }
    }

    /// `n` i.i.d. draws of the standardized basis function `φ¹(ξ)`.
    pub fn sample_standardized(&self, rng: &mut Stream, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw_standardized(rng)).collect()
    }

    /// `n` i.i.d. draws of the noise itself, `m⁰ + m¹·φ¹(ξ)`.
    pub fn sample_noise(&self, rng: &mut Stream, n: usize) -> Vec<f64> {
        match &self.kind {
            // Raw gamma draws keep the support exactly at [0, ∞).
            NoiseKind::Gamma { .. } => {
                let g = self.gamma.as_ref().expect("gamma sampler present");
                (0..n).map(|_| g.sample(rng)).collect()
            }
            _ => (0..n)
                .map(|_| self.pce.m0 + self.pce.m1 * self.draw_standardized(rng))
                .collect(),
        }
    }
}

/// Gamma(shape, scale) sampler using the Marsaglia–Tsang squeeze method,
/// boosted by `U^{1/shape}` for shapes below one.
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler {
    scale: f64,
    d: f64,
    c: f64,
    inv_shape: Option<f64>,
}

impl GammaSampler {
    pub fn new(shape: f64, scale: f64) -> Self {
        let (base, inv_shape) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        let d = base - 1.0 / 3.0;
        Self {
            scale,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
            inv_shape,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = self.sample_unit_large(rng);
        let g = match self.inv_shape {
            Some(inv) => {
                let u: f64 = rng.sample(Open01);
                g * u.powf(inv)
            }
            None => g,
        };
        g * self.scale
    }

    fn sample_unit_large<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + self.c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u: f64 = rng.sample(Open01);
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return self.d * v;
            }
            if u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                return self.d * v;
            }
        }
    }
}
