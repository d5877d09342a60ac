//! The cubic toy-system study: tube comparisons over the `(N_x, N_sam)` grid,
//! the Gamma-noise realization study and the repeated-sample sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, Point};
use crate::montecarlo::{
    default_support, empirical_moments, histogram, kde, linspace, normal_pdf, sample_paths,
    DensityEstimate, EmpiricalMoments, Histogram, RealizationSet, DEFAULT_MC_SAMPLES,
};
use crate::noise::{NoiseModel, NoiseSpec};
use crate::regression::{fit, Dataset, FittedModel};
use crate::rng::{substream, DATA_STREAM};

pub const SE_SIGMA_F: f64 = 4.21;
pub const SE_LENGTHSCALE: f64 = 3.59;
pub const X_RANGE: [f64; 2] = [-5.0, 5.0];
pub const DEFAULT_GRID: usize = 201;
pub const FIG1_N_X: [usize; 3] = [2, 3, 5];
pub const FIG1_N_SAM: [usize; 3] = [1, 5, 25];
/// Repeat counts reported by validation.
pub const LEMMA3_REPORT_N: [usize; 7] = [1, 2, 5, 10, 25, 50, 100];
/// Support resolution for density estimates.
pub const DENSITY_POINTS: usize = 1024;

/// Noiseless part of `x ↦ 0.01x³ − 0.2x² + 0.2x + M`.
pub fn true_map(x: f64) -> f64 {
    0.01 * x * x * x - 0.2 * x * x + 0.2 * x
}

pub fn study_kernel() -> Kernel {
    Kernel::SquaredExponential {
        sigma_f: SE_SIGMA_F,
        lengthscale: SE_LENGTHSCALE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_x: usize,
    pub n_sam: usize,
    pub x_range: [f64; 2],
    pub kernel: Kernel,
    pub noise: NoiseSpec,
    pub ridge: f64,
    pub prediction_grid_size: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Squared-exponential kernel on `[−5, 5]` with the ridge set to `σ_M²`.
    pub fn standard(n_x: usize, n_sam: usize, noise: NoiseSpec, seed: u64) -> Result<Self> {
        let ridge = NoiseModel::from_spec(noise)?.variance();
        Ok(Self {
            n_x,
            n_sam,
            x_range: X_RANGE,
            kernel: study_kernel(),
            noise,
            ridge,
            prediction_grid_size: DEFAULT_GRID,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed,
        })
    }

    /// Gamma(0.25, 2) noise, five locations, one sample each.
    pub fn gamma_study(seed: u64) -> Self {
        Self::standard(
            5,
            1,
            NoiseSpec::Gamma {
                alpha: 0.25,
                beta: 2.0,
            },
            seed,
        )
        .expect("built-in parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        let [lo, hi] = self.x_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("x_range must satisfy lo < hi, got [{lo}, {hi}]"));
        }
        if self.n_x < 2 {
            return bad(format!("n_x must be at least 2, got {}", self.n_x));
        }
        if self.n_sam == 0 {
            return bad("n_sam must be at least 1".into());
        }
        if self.prediction_grid_size < 2 {
            return bad("prediction_grid_size must be at least 2".into());
        }
        if self.mc_samples == 0 {
            return bad("mc_samples must be at least 1".into());
        }
        if !(self.ridge.is_finite() && self.ridge > 0.0) {
            return bad(format!("ridge must be positive, got {}", self.ridge));
        }
        self.kernel
            .validate()
            .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        NoiseModel::from_spec(self.noise).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        Ok(())
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::from_spec(self.noise)
    }

    pub fn locations(&self) -> Vec<f64> {
        linspace(self.x_range[0], self.x_range[1], self.n_x)
    }

    pub fn prediction_grid(&self) -> Vec<f64> {
        linspace(self.x_range[0], self.x_range[1], self.prediction_grid_size)
    }
}

/// The nine `(N_x, N_sam)` configurations with Gaussian(1) noise.
pub fn fig1_configs(seed: u64) -> Vec<ExperimentConfig> {
    FIG1_N_X
        .iter()
        .flat_map(|&nx| FIG1_N_SAM.iter().map(move |&ns| (nx, ns)))
        .map(|(nx, ns)| {
            ExperimentConfig::standard(nx, ns, NoiseSpec::Gaussian { sigma: 1.0 }, seed)
                .expect("built-in parameters are valid")
        })
        .collect()
}

/// Draws `y = f(x) + M` at `n_x` evenly spaced locations, `n_sam` times each.
pub fn generate_dataset(cfg: &ExperimentConfig, rng: &mut crate::rng::Stream) -> Result<Dataset> {
    cfg.validate()?;
    let noise = cfg.noise_model()?;
    let xs: Vec<f64> = cfg
        .locations()
        .into_iter()
        .flat_map(|x| std::iter::repeat_n(x, cfg.n_sam))
        .collect();
    let draws = noise.sample_noise(rng, xs.len());
    let ys: Vec<f64> = xs
        .iter()
        .zip(&draws)
        .map(|(&x, m)| true_map(x) + m)
        .collect();
    Dataset::scalar(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeRow {
    pub x: f64,
    pub f_true: f64,
    pub mu: f64,
    pub wk_mean: f64,
    pub sigma_gp: f64,
    pub sigma_gp_noisy: f64,
    pub sigma_wk: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TubeTable {
    pub rows: Vec<TubeRow>,
}

impl TubeTable {
    pub fn max_sigma_wk(&self) -> f64 {
        self.rows.iter().map(|r| r.sigma_wk).fold(0.0, f64::max)
    }

    /// `max_x (σ²_WK − σ²_GP)`; non-positive when the WK tube sits inside the GP tube.
    pub fn max_wk_minus_gp(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.sigma_wk * r.sigma_wk - r.sigma_gp * r.sigma_gp)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn tube_row(model: &FittedModel, x: f64) -> Result<TubeRow> {
    let p = Point::scalar(x);
    let gp = model.gp_predict(&p)?;
    let wk = model.wk_predict(&p)?;
    Ok(TubeRow {
        x,
        f_true: true_map(x),
        mu: gp.mu,
        wk_mean: wk.mean,
        sigma_gp: gp.var_gp.sqrt(),
        sigma_gp_noisy: gp.var_gp_noisy.sqrt(),
        sigma_wk: wk.variance().sqrt(),
    })
}

#[derive(Debug, Clone)]
pub struct TubeExperiment {
    pub config: ExperimentConfig,
    pub model: FittedModel,
    pub table: TubeTable,
}

impl TubeExperiment {
    pub fn dataset(&self) -> &Dataset {
        self.model.data()
    }
}

/// Fits one model on freshly drawn data and tabulates the three tubes.
pub fn run_tube_experiment(cfg: &ExperimentConfig) -> Result<TubeExperiment> {
    cfg.validate()?;
    let mut rng = substream(cfg.seed, DATA_STREAM);
    let data = generate_dataset(cfg, &mut rng)?;
    let model = fit(data, cfg.kernel.clone(), cfg.ridge, cfg.noise_model()?)?;
    let rows = cfg
        .prediction_grid()
        .into_iter()
        .map(|x| tube_row(&model, x))
        .collect::<Result<_>>()?;
    Ok(TubeExperiment {
        config: cfg.clone(),
        model,
        table: TubeTable { rows },
    })
}

#[derive(Debug, Clone)]
pub struct LocationDensity {
    pub x: f64,
    pub moments: EmpiricalMoments,
    pub density: DensityEstimate,
}

/// Closed-form normal densities at one location next to the sampled fit.
#[derive(Debug, Clone)]
pub struct ComparisonDensities {
    pub x: f64,
    pub mean: f64,
    pub var_gp: f64,
    pub var_wk: f64,
    pub var_gp_noisy: f64,
    pub support: Vec<f64>,
    pub pdf_mc_fit: Vec<f64>,
    pub pdf_gp: Vec<f64>,
    pub pdf_wk: Vec<f64>,
    pub pdf_gp_noisy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GammaStudy {
    pub experiment: TubeExperiment,
    /// Realizations over the prediction grid.
    pub paths: RealizationSet,
    pub location_densities: Vec<LocationDensity>,
    pub comparison: ComparisonDensities,
    /// Draws of `Ŷ(0)`, coherent with `paths`.
    pub samples_at_zero: Vec<f64>,
    pub histogram_at_zero: Histogram,
}

/// Samples function realizations of the Wiener-kernel predictor and fits
/// densities at each data location and at `x = 0`.
pub fn run_gamma_study(cfg: &ExperimentConfig) -> Result<GammaStudy> {
    if !matches!(cfg.noise, NoiseSpec::Gamma { .. }) {
        return Err(Error::ConfigInvalid(
            "the gamma study requires gamma noise".into(),
        ));
    }
    let experiment = run_tube_experiment(cfg)?;
    let model = &experiment.model;

    let grid = cfg.prediction_grid();
    let locations = cfg.locations();
    // One sampling pass over grid ∪ locations ∪ {0} keeps every column on the same outcomes.
    let mut all: Vec<Point> = grid.iter().map(|&x| Point::scalar(x)).collect();
    all.extend(locations.iter().map(|&x| Point::scalar(x)));
    all.push(Point::scalar(0.0));
    let full = sample_paths(model, &all, cfg.seed, cfg.mc_samples)?;

    let n_grid = grid.len();
    let paths = RealizationSet {
        grid: all[..n_grid].to_vec(),
        draws: full.draws.iter().map(|r| r[..n_grid].to_vec()).collect(),
        seed: cfg.seed,
    };

    let mut location_densities = Vec::with_capacity(locations.len());
    for (i, &x) in locations.iter().enumerate() {
        let col = full.column(n_grid + i);
        let support = default_support(&col, DENSITY_POINTS, 4.0)?;
        location_densities.push(LocationDensity {
            x,
            moments: empirical_moments(&col)?,
            density: kde(&col, &support)?,
        });
    }

    let samples_at_zero = full.column(all.len() - 1);
    let zero = Point::scalar(0.0);
    let gp = model.gp_predict(&zero)?;
    let wk = model.wk_predict(&zero)?;
    let mean = wk.mean;
    let var_wk = wk.variance();
    let support = default_support(&samples_at_zero, DENSITY_POINTS, 4.0)?;
    let fit0 = kde(&samples_at_zero, &support)?;
    let pdf = |v: f64| {
        support
            .iter()
            .map(|&t| normal_pdf(t, mean, v))
            .collect::<Vec<_>>()
    };
    let comparison = ComparisonDensities {
        x: 0.0,
        mean,
        var_gp: gp.var_gp,
        var_wk,
        var_gp_noisy: gp.var_gp_noisy,
        pdf_mc_fit: fit0.density,
        pdf_gp: pdf(gp.var_gp),
        pdf_wk: pdf(var_wk),
        pdf_gp_noisy: pdf(gp.var_gp_noisy),
        support,
    };
    let histogram_at_zero = histogram(&samples_at_zero)?;

    Ok(GammaStudy {
        experiment,
        paths,
        location_densities,
        comparison,
        samples_at_zero,
        histogram_at_zero,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma3Row {
    pub n: usize,
    pub v_n: f64,
    pub bound: f64,
}

/// Appends `N` repeated samples at `x_bar` to `base` for each `N` and records
/// `σ²_WK(x_bar)` against `σ_M²/N`.
///
/// The variance does not depend on the targets, so repeats carry zero targets.
pub fn run_lemma3_sweep(
    base: Option<&Dataset>,
    x_bar: &Point,
    n_list: &[usize],
    kernel: &Kernel,
    ridge: f64,
    noise: &NoiseModel,
) -> Result<Vec<Lemma3Row>> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::ConfigInvalid(
                "repeat counts must be at least 1".into(),
            ));
        }
        let repeats = vec![0.0; n];
        let data = match base {
            Some(b) => b.with_repeats(x_bar, &repeats)?,
            None => Dataset::new(vec![x_bar.clone(); n], repeats)?,
        };
        let model = fit(data, kernel.clone(), ridge, noise.clone())?;
        rows.push(Lemma3Row {
            n,
            v_n: model.wk_variance(x_bar)?.variance,
            bound: noise.variance() / n as f64,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_map_values() {
        assert_eq!(true_map(0.0), 0.0);
        assert!((true_map(5.0) + 2.75).abs() < 1e-12);
        assert!((true_map(-5.0) + 7.25).abs() < 1e-12);
    }

    #[test]
    fn dataset_layout() {
        let cfg = ExperimentConfig::standard(5, 1, NoiseSpec::Gaussian { sigma: 1.0 }, 0).unwrap();
        assert_eq!(cfg.locations(), vec![-5.0, -2.5, 0.0, 2.5, 5.0]);
        let cfg2 = ExperimentConfig::standard(2, 1, NoiseSpec::Gaussian { sigma: 1.0 }, 0).unwrap();
        assert_eq!(cfg2.locations(), vec![-5.0, 5.0]);

        let cfg3 = ExperimentConfig::standard(3, 5, NoiseSpec::Gaussian { sigma: 1.0 }, 0).unwrap();
        let d = generate_dataset(&cfg3, &mut substream(0, DATA_STREAM)).unwrap();
        assert_eq!(d.len(), 15);
        for loc in [-5.0, 0.0, 5.0] {
            assert_eq!(d.xs().iter().filter(|p| p.coords()[0] == loc).count(), 5);
        }
    }

    #[test]
    fn invalid_configs() {
        let mut cfg =
            ExperimentConfig::standard(1, 1, NoiseSpec::Gaussian { sigma: 1.0 }, 0).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(_))));
        cfg.n_x = 3;
        cfg.x_range = [1.0, 1.0];
        assert!(cfg.validate().is_err());
        cfg.x_range = [-1.0, 1.0];
        cfg.ridge = 0.0;
        assert!(cfg.validate().is_err());
        cfg.ridge = 1.0;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn gamma_study_defaults() {
        let cfg = ExperimentConfig::gamma_study(0);
        let noise = cfg.noise_model().unwrap();
        assert_eq!(noise.pce().m0, 0.5);
        assert_eq!(noise.pce().m1, 1.0);
        assert_eq!(cfg.mc_samples, 5000);
        assert_eq!(cfg.ridge, 1.0);
        assert_eq!((cfg.n_x, cfg.n_sam), (5, 1));
    }

    #[test]
    fn tube_rows_decompose() {
        let cfg = ExperimentConfig::standard(3, 5, NoiseSpec::Gaussian { sigma: 1.0 }, 4).unwrap();
        let run = run_tube_experiment(&cfg).unwrap();
        assert_eq!(run.table.rows.len(), DEFAULT_GRID);
        for r in &run.table.rows {
            let lhs = r.sigma_gp_noisy.powi(2);
            assert!((lhs - r.sigma_gp.powi(2) - 1.0).abs() <= 1e-12 * (1.0 + lhs));
            assert!(r.sigma_wk <= r.sigma_gp);
        }
    }

    #[test]
    fn lemma3_constant_block() {
        let k = Kernel::squared_exponential(1.0, 1.0).unwrap();
        let noise = NoiseModel::gaussian(1.0).unwrap();
        let x = Point::scalar(0.7);
        let n_list: Vec<usize> = (1..=100).collect();
        let rows = run_lemma3_sweep(None, &x, &n_list, &k, 1.0, &noise).unwrap();
        assert!((rows[0].v_n - 0.25).abs() <= 1e-12);
        assert!((rows[3].v_n - 0.16).abs() <= 1e-12);
        for w in rows.windows(2) {
            assert!(w[1].v_n <= w[0].v_n);
        }
        for r in &rows {
            assert!(r.v_n <= r.bound + 1e-12);
        }
    }

    #[test]
    fn gamma_study_requires_gamma() {
        let cfg = ExperimentConfig::standard(5, 1, NoiseSpec::Gaussian { sigma: 1.0 }, 0).unwrap();
        assert!(run_gamma_study(&cfg).is_err());
    }
}
