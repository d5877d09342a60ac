//! Sampling the Wiener-kernel predictor and summarizing the draws.
//!
//! Draws are generated in fixed-size chunks; chunk `i` reads from substream
//! `MC_STREAM_BASE + i` of the caller's seed. Chunks run in parallel and are
//! concatenated in index order, so results depend only on the seed and `n`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::Point;
use crate::noise::NoiseModel;
use crate::regression::{FittedModel, PcePrediction};
use crate::rng::{substream, MC_STREAM_BASE};

/// Number of outcomes drawn from one substream.
pub const CHUNK: usize = 2048;

/// Default number of function realizations for figure data.
pub const DEFAULT_MC_SAMPLES: usize = 5000;

/// Function realizations `Ŷ(x; ω)` over a grid, one row per outcome `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationSet {
    pub grid: Vec<Point>,
    /// `n_samples × n_grid`.
    pub draws: Vec<Vec<f64>>,
    pub seed: u64,
}

impl RealizationSet {
    pub fn column(&self, g: usize) -> Vec<f64> {
        self.draws.iter().map(|row| row[g]).collect()
    }
}

fn chunked<T, F>(n: usize, seed: u64, per_chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut crate::rng::Stream, usize) -> Vec<T> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, MC_STREAM_BASE + c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            per_chunk(&mut rng, len)
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// `n` draws of `mean + Σ_j loadings_j·φ¹(ξ_j)` with fresh `ξ` per draw.
pub fn sample_at(pred: &PcePrediction, noise: &NoiseModel, seed: u64, n: usize) -> Vec<f64> {
    chunked(n, seed, |rng, len| {
        (0..len)
            .map(|_| {
                pred.mean
                    + pred
                        .loadings
                        .iter()
                        .map(|l| l * noise.draw_standardized(rng))
                        .sum::<f64>()
            })
            .collect()
    })
}

/// `n` coherent function realizations over `grid`: every outcome draws one
/// standardized vector `ξ ∈ R^D` and reuses it at every grid point.
pub fn sample_paths(
    model: &FittedModel,
    grid: &[Point],
    seed: u64,
    n: usize,
) -> Result<RealizationSet> {
    if grid.is_empty() {
        return Err(Error::Empty("grid"));
    }
    let preds = grid
        .iter()
        .map(|x| model.wk_predict(x))
        .collect::<Result<Vec<_>>>()?;
    let d = model.data().len();
    let noise = model.noise();
    let draws = chunked(n, seed, |rng, len| {
        (0..len)
            .map(|_| {
                let xi = noise.sample_standardized(rng, d);
                preds
                    .iter()
                    .map(|p| p.mean + p.loadings.iter().zip(&xi).map(|(l, z)| l * z).sum::<f64>())
                    .collect()
            })
            .collect()
    });
    Ok(RealizationSet {
        grid: grid.to_vec(),
        draws,
        seed,
    })
}

/// Skewness implied by the expansion: `κ₃·Σ l_j³ / (Σ l_j²)^{3/2}`, where
/// `κ₃` is the standardized third moment of the noise basis argument.
pub fn predicted_skewness(pred: &PcePrediction, noise: &NoiseModel) -> Option<f64> {
    let k3 = noise.standardized_skewness()?;
    let v = pred.variance();
    if v == 0.0 {
        return None;
    }
    let s3: f64 = pred.loadings.iter().map(|l| l * l * l).sum();
    Some(k3 * s3 / v.powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMoments {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `m₃/m₂^{3/2}` from central sample moments; `None` when the sample is constant.
    pub skewness: Option<f64>,
}

pub fn empirical_moments(samples: &[f64]) -> Result<EmpiricalMoments> {
    if samples.len() < 3 {
        return Err(Error::DegenerateSample("at least 3 samples are required"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for x in samples {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    let variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    let skewness = if m2 > 0.0 {
        Some(m3 / m2.powf(1.5))
    } else {
        None
    };
    Ok(EmpiricalMoments {
        mean,
        variance,
        skewness,
    })
}

/// Gaussian kernel density estimate evaluated on `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub support: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    /// Trapezoidal integral of the density over the support.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.support, &self.density)
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Silverman's rule `0.9·min(std, IQR/1.34)·n^{−1/5}`; the IQR term is
/// skipped when it is zero.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let sorted = sorted_copy(samples)?;
    bandwidth_sorted(&sorted)
}

fn bandwidth_sorted(sorted: &[f64]) -> Result<f64> {
    if sorted.len() < 2 || sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::DegenerateSample(
            "need at least two distinct samples",
        ));
    }
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let std = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let spread = if iqr > 0.0 { std.min(iqr / 1.34) } else { std };
    Ok(0.9 * spread * n.powf(-0.2))
}

/// Kernel contributions beyond this many bandwidths are dropped.
const KDE_CUTOFF: f64 = 9.0;

pub fn kde(samples: &[f64], support: &[f64]) -> Result<DensityEstimate> {
    let sorted = sorted_copy(samples)?;
    let h = bandwidth_sorted(&sorted)?;
    let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = support
        .par_iter()
        .map(|&t| {
            let lo = sorted.partition_point(|&x| x < t - KDE_CUTOFF * h);
            let hi = sorted.partition_point(|&x| x <= t + KDE_CUTOFF * h);
            let s: f64 = sorted[lo..hi]
                .iter()
                .map(|x| {
                    let z = (t - x) / h;
                    (-0.5 * z * z).exp()
                })
                .sum();
            s * norm
        })
        .collect();
    Ok(DensityEstimate {
        support: support.to_vec(),
        density,
        bandwidth: h,
    })
}

/// An evenly spaced support covering the samples with `pad` bandwidths on each side.
pub fn default_support(samples: &[f64], points: usize, pad: f64) -> Result<Vec<f64>> {
    let sorted = sorted_copy(samples)?;
    let h = bandwidth_sorted(&sorted)?;
    let lo = sorted[0] - pad * h;
    let hi = sorted[sorted.len() - 1] + pad * h;
    Ok(linspace(lo, hi, points))
}

/// Inclusive evenly spaced values; endpoints are exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Histogram with Freedman–Diaconis bin width `2·IQR·n^{−1/3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Counts normalized to unit area.
    pub density: Vec<f64>,
}

pub fn histogram(samples: &[f64]) -> Result<Histogram> {
    let sorted = sorted_copy(samples)?;
    let n = sorted.len();
    if n < 2 || sorted[0] == sorted[n - 1] {
        return Err(Error::DegenerateSample(
            "need at least two distinct samples",
        ));
    }
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let width = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
    let bins = if width > 0.0 {
        (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
    } else {
        // Sturges fallback when the IQR collapses.
        ((n as f64).log2().ceil() as usize + 1).max(1)
    };
    let edges = linspace(lo, hi, bins + 1);
    let step = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for x in &sorted {
        let b = (((x - lo) / step) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let density = counts
        .iter()
        .map(|&c| c as f64 / (n as f64 * step))
        .collect();
    Ok(Histogram {
        edges,
        counts,
        density,
    })
}

/// `N(mean, variance)` density.
pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let z = (x - mean) * (x - mean) / variance;
    (-0.5 * z).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}
