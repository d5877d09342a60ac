//! Kernel families, Gram matrices and cross-kernel vectors.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, positive, Error, Result};
use crate::linalg::SymMatrix;

/// An input location `x ∈ Rⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Self(coords))
    }

    /// A one-dimensional point. Panics on non-finite input.
    pub fn scalar(x: f64) -> Self {
        assert!(x.is_finite(), "point coordinate must be finite");
        Self(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    fn sq_dist(&self, other: &Point) -> Result<f64> {
        check_len(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    fn inner(&self, other: &Point) -> Result<f64> {
        check_len(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

/// A monomial feature `∏ₖ x_k^{exponents[k]}`; the empty product is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn eval(&self, x: &Point) -> Result<f64> {
        check_len(x.dim(), self.0.len())?;
        Ok(self
            .0
            .iter()
            .zip(x.coords())
            .map(|(&p, &c)| c.powi(p as i32))
            .product())
    }
}

/// Covariance function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    /// `σ_f²·exp(−‖x−x′‖²/(2l²))`
    SquaredExponential { sigma_f: f64, lengthscale: f64 },
    /// `(scale·⟨x,x′⟩ + offset)^degree`
    Polynomial {
        degree: u32,
        offset: f64,
        scale: f64,
    },
    /// `σ_f²·exp(−‖x−x′‖/l)`
    Exponential { sigma_f: f64, lengthscale: f64 },
    /// `σ_W²·φ(x)ᵀφ(x′)` for an explicit list of monomial features.
    FiniteFeature {
        features: Vec<Monomial>,
        weight_scale: f64,
    },
}

impl Kernel {
    pub fn squared_exponential(sigma_f: f64, lengthscale: f64) -> Result<Self> {
        let k = Kernel::SquaredExponential {
            sigma_f,
            lengthscale,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn exponential(sigma_f: f64, lengthscale: f64) -> Result<Self> {
        let k = Kernel::Exponential {
            sigma_f,
            lengthscale,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn polynomial(degree: u32, offset: f64, scale: f64) -> Result<Self> {
        let k = Kernel::Polynomial {
            degree,
            offset,
            scale,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn finite_feature(features: Vec<Monomial>, weight_scale: f64) -> Result<Self> {
        let k = Kernel::FiniteFeature {
            features,
            weight_scale,
        };
        k.validate()?;
        Ok(k)
    }

    /// One-dimensional polynomial features `{1, x, …, x^degree}`.
    pub fn polynomial_features(degree: u32, weight_scale: f64) -> Result<Self> {
        Self::finite_feature(
            (0..=degree).map(|p| Monomial(vec![p])).collect(),
            weight_scale,
        )
    }

    /// Checks parameter ranges; deserialized kernels should be validated before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::SquaredExponential {
                sigma_f,
                lengthscale,
            }
            | Kernel::Exponential {
                sigma_f,
                lengthscale,
            } => {
                positive("sigma_f", *sigma_f)?;
                positive("lengthscale", *lengthscale)
            }
            Kernel::Polynomial {
                degree,
                offset,
                scale,
            } => {
                if *degree == 0 {
                    return Err(Error::InvalidParameter {
                        name: "degree",
                        reason: "must be at least 1".into(),
                    });
                }
                if !(offset.is_finite() && *offset >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "offset",
                        reason: format!("must be non-negative and finite, got {offset}"),
                    });
                }
                positive("scale", *scale)
            }
            Kernel::FiniteFeature {
                features,
                weight_scale,
            } => {
                if features.is_empty() {
                    return Err(Error::Empty("feature list"));
                }
                positive("weight_scale", *weight_scale)
            }
        }
    }

    pub fn eval(&self, x: &Point, x2: &Point) -> Result<f64> {
        let v = match self {
            Kernel::SquaredExponential {
                sigma_f,
                lengthscale,
            } => {
                let d2 = x.sq_dist(x2)?;
                sigma_f * sigma_f * (-d2 / (2.0 * lengthscale * lengthscale)).exp()
            }
            Kernel::Exponential {
                sigma_f,
                lengthscale,
            } => {
                let d = x.sq_dist(x2)?.sqrt();
                sigma_f * sigma_f * (-d / lengthscale).exp()
            }
            Kernel::Polynomial {
                degree,
                offset,
                scale,
            } => (scale * x.inner(x2)? + offset).powi(*degree as i32),
            Kernel::FiniteFeature {
                features,
                weight_scale,
            } => {
                check_len(x.dim(), x2.dim())?;
                let mut s = 0.0;
                for f in features {
                    s += f.eval(x)? * f.eval(x2)?;
                }
                weight_scale * weight_scale * s
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("kernel evaluation"))
        }
    }

    /// Gram matrix `K_ij = k(x_i, x_j)`.
    pub fn gram(&self, xs: &[Point]) -> Result<SymMatrix> {
        let first = xs.first().ok_or(Error::Empty("point list"))?;
        for p in xs {
            check_len(first.dim(), p.dim())?;
        }
        let mut err = None;
        let m = SymMatrix::from_fn(xs.len(), |i, j| match self.eval(&xs[i], &xs[j]) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
        match err {
            Some(e) => Err(e),
            None => m,
        }
    }

    /// Cross-kernel vector `[k(x_1, x), …, k(x_D, x)]`.
    pub fn kvec(&self, xs: &[Point], x: &Point) -> Result<Vec<f64>> {
        xs.iter().map(|xi| self.eval(xi, x)).collect()
    }

    /// Raw feature vector `φ(x)` (without the weight scale).
    pub fn features(&self, x: &Point) -> Result<Vec<f64>> {
        match self {
            Kernel::FiniteFeature { features, .. } => features.iter().map(|f| f.eval(x)).collect(),
            _ => Err(Error::WrongKernelVariant),
        }
    }

    /// The `n_φ × D` matrix whose i-th column is `σ_W·φ(x_i)`, returned as rows.
    ///
    /// The weight scale is folded in so that `ΦᵀΦ` reproduces [`Kernel::gram`].
    pub fn feature_matrix(&self, xs: &[Point]) -> Result<Vec<Vec<f64>>> {
        let (n_phi, sw) = match self {
            Kernel::FiniteFeature {
                features,
                weight_scale,
            } => (features.len(), *weight_scale),
            _ => return Err(Error::WrongKernelVariant),
        };
        let mut rows = vec![vec![0.0; xs.len()]; n_phi];
        for (i, x) in xs.iter().enumerate() {
            for (r, v) in self.features(x)?.into_iter().enumerate() {
                rows[r][i] = sw * v;
            }
        }
        Ok(rows)
    }
}
