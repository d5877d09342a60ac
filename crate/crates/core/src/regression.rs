//! Gaussian-process and Wiener-kernel predictors over one shared factorization.
//!
//! Both predictors are built from `(K + ρ²I)⁻¹`. The GP side treats the ridge
//! as the noise-variance slot of the classical posterior; the Wiener-kernel
//! side propagates the chaos expansion of the measurement noise through the
//! same linear smoother, giving a predictor that is itself a random variable
//! `Ŷ(x) = mean + Σ_j loadings_j·φ¹(ξ_j)`.

use crate::error::{check_len, Error, Result};
use crate::kernel::{Kernel, Point};
use crate::linalg::{cholesky, dot, CholFactor};
use crate::noise::NoiseModel;

/// Training data `{(x_i, y_i)}`. Repeated locations are kept as separate samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: Vec<Point>,
    ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<Point>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        check_len(xs.len(), ys.len())?;
        let dim = xs[0].dim();
        for x in &xs {
            check_len(dim, x.dim())?;
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("targets"));
        }
        Ok(Self { xs, ys })
    }

    /// Convenience constructor for one-dimensional inputs.
    pub fn scalar(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let pts = xs
            .iter()
            .map(|&x| Point::new(vec![x]))
            .collect::<Result<_>>()?;
        Self::new(pts, ys.to_vec())
    }

    pub fn xs(&self) -> &[Point] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Dimension of the input points.
    pub fn input_dim(&self) -> usize {
        self.xs[0].dim()
    }

    /// Appends `n` samples at `x` with the given targets.
    pub fn with_repeats(&self, x: &Point, ys: &[f64]) -> Result<Self> {
        let mut xs = self.xs.clone();
        let mut all_ys = self.ys.clone();
        xs.extend(std::iter::repeat_n(x.clone(), ys.len()));
        all_ys.extend_from_slice(ys);
        Self::new(xs, all_ys)
    }
}

/// Classical GP posterior at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpPrediction {
    pub mu: f64,
    /// `σ²_GP(x)`, clamped at zero.
    pub var_gp: f64,
    /// `σ²_GP(x) + σ_M²`.
    pub var_gp_noisy: f64,
}

/// The Wiener-kernel predictor `Ŷ(x)` as a mean plus one loading per datum.
#[derive(Debug, Clone, PartialEq)]
pub struct PcePrediction {
    pub mean: f64,
    /// Coefficient of `φ¹(ξ_j)`; equals `−m¹·a_j` with `a = (K + ρ²I)⁻¹k(x)`.
    pub loadings: Vec<f64>,
}

impl PcePrediction {
    pub fn variance(&self) -> f64 {
        self.loadings.iter().map(|l| l * l).sum()
    }
}

/// `(E[Ŷ(x)], V[Ŷ(x)])` from the expansion coefficients.
pub fn wk_moments(pred: &PcePrediction) -> (f64, f64) {
    (pred.mean, pred.variance())
}

/// Non-fatal conditions attached to a Wiener-kernel variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// The ridge differs from `σ_M²`, so the GP and Wiener-kernel means need not agree.
    RidgeNotNoiseVariance { ridge: f64, noise_variance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkVariance {
    pub variance: f64,
    pub warning: Option<Warning>,
}

/// A fitted regressor caching the factor of `K + ρ²I`.
#[derive(Debug, Clone)]
pub struct FittedModel {
    data: Dataset,
    kernel: Kernel,
    ridge: f64,
    noise: NoiseModel,
    factor: CholFactor,
    y0: Vec<f64>,
    gp_weights: Vec<f64>,
}

/// Factors `K + ρ²I` and centers the targets by the noise mean.
pub fn fit(data: Dataset, kernel: Kernel, ridge: f64, noise: NoiseModel) -> Result<FittedModel> {
    if !(ridge.is_finite() && ridge > 0.0) {
        return Err(Error::NonPositiveRidge(ridge));
    }
    kernel.validate()?;
    let gram = kernel.gram(data.xs())?;
    let factor = cholesky(&gram, ridge)?;
    let m0 = noise.pce().m0;
    let y0 = data.ys().iter().map(|y| y - m0).collect();
    let gp_weights = factor.solve(data.ys())?;
    Ok(FittedModel {
        data,
        kernel,
        ridge,
        noise,
        factor,
        y0,
        gp_weights,
    })
}

impl FittedModel {
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn factor(&self) -> &CholFactor {
        &self.factor
    }

    /// Targets centered by the noise mean, `y − m⁰·1`.
    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn kvec(&self, x: &Point) -> Result<Vec<f64>> {
        self.kernel.kvec(self.data.xs(), x)
    }

    /// GP posterior mean and variance, using the ridge as the noise variance.
    pub fn gp_predict(&self, x: &Point) -> Result<GpPrediction> {
        let k = self.kvec(x)?;
        let mu = dot(&k, &self.gp_weights);
        let a = self.factor.solve(&k)?;
        let var_gp = (self.kernel.eval(x, x)? - dot(&k, &a)).max(0.0);
        Ok(GpPrediction {
            mu,
            var_gp,
            var_gp_noisy: var_gp + self.noise.variance(),
        })
    }

    /// Wiener-kernel predictor at `x`.
    pub fn wk_predict(&self, x: &Point) -> Result<PcePrediction> {
        let k = self.kvec(x)?;
        let a = self.factor.solve(&k)?;
        let m1 = self.noise.pce().m1;
        Ok(PcePrediction {
            mean: dot(&a, &self.y0),
            loadings: a.iter().map(|aj| -m1 * aj).collect(),
        })
    }

    /// `σ²_WK(x)`, the variance of the Wiener-kernel predictor, flagged when
    /// the ridge is not the noise variance.
    pub fn wk_variance(&self, x: &Point) -> Result<WkVariance> {
        let variance = self.wk_predict(x)?.variance();
        let noise_variance = self.noise.variance();
        let warning = if self.ridge != noise_variance {
            Some(Warning::RidgeNotNoiseVariance {
                ridge: self.ridge,
                noise_variance,
            })
        } else {
            None
        };
        Ok(WkVariance { variance, warning })
    }

    /// `m¹²·k(x)ᵀ(K + ρ²I)⁻²k(x)` through the quadratic form directly.
    pub fn wk_variance_quadratic(&self, x: &Point) -> Result<f64> {
        let k = self.kvec(x)?;
        let w = self.factor.solve_twice(&k)?;
        Ok(self.noise.variance() * dot(&k, &w))
    }
}

/// Explicit weight-space solution `wʲ = Φ(K + ρ²I)⁻¹yʲ` for `j = 0..=D`,
/// with `y⁰ = y − m⁰·1` and `yʲ = −m¹·e_j`.
///
/// Only defined for finite-feature kernels; `Φ` carries the weight scale.
pub fn weight_space_solve(
    data: &Dataset,
    kernel: &Kernel,
    ridge: f64,
    noise: &NoiseModel,
) -> Result<Vec<Vec<f64>>> {
    let phi = kernel.feature_matrix(data.xs())?;
    if !(ridge.is_finite() && ridge > 0.0) {
        return Err(Error::NonPositiveRidge(ridge));
    }
    let factor = cholesky(&kernel.gram(data.xs())?, ridge)?;
    let pce = noise.pce();
    let d = data.len();

    let project = |coef: &[f64]| -> Vec<f64> { phi.iter().map(|row| dot(row, coef)).collect() };

    let mut weights = Vec::with_capacity(d + 1);
    let y0: Vec<f64> = data.ys().iter().map(|y| y - pce.m0).collect();
    weights.push(project(&factor.solve(&y0)?));
    for j in 0..d {
        let mut yj = vec![0.0; d];
        yj[j] = -pce.m1;
        weights.push(project(&factor.solve(&yj)?));
    }
    Ok(weights)
}

/// Prediction induced by explicit weights: mean `σ_W·φ(x)ᵀw⁰`, loadings `σ_W·φ(x)ᵀwʲ`.
pub fn weight_space_predict(
    kernel: &Kernel,
    weights: &[Vec<f64>],
    x: &Point,
) -> Result<PcePrediction> {
    let sw = match kernel {
        Kernel::FiniteFeature { weight_scale, .. } => *weight_scale,
        _ => return Err(Error::WrongKernelVariant),
    };
    let phi: Vec<f64> = kernel.features(x)?.into_iter().map(|v| sw * v).collect();
    let (first, rest) = weights.split_first().ok_or(Error::Empty("weights"))?;
    check_len(phi.len(), first.len())?;
    Ok(PcePrediction {
        mean: dot(&phi, first),
        loadings: rest.iter().map(|w| dot(&phi, w)).collect(),
    })
}
