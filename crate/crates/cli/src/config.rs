//! Flat JSON run configurations.
//!
//! Every field is optional in the file; flags override file values and
//! defaults fill the rest. Unknown keys are rejected. The resolved form of
//! each config is what gets recorded in the output manifest.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wiener_kernel::experiments::{
    study_kernel, ExperimentConfig, DEFAULT_GRID, FIG1_N_SAM, FIG1_N_X, X_RANGE,
};
use wiener_kernel::montecarlo::DEFAULT_MC_SAMPLES;
use wiener_kernel::{Dataset, Kernel, NoiseModel, NoiseSpec, Point};

use crate::{CliError, Result};

pub const DEFAULT_SEED: u64 = 2024;
/// Number of realizations written to the paths file.
pub const DEFAULT_PATHS: usize = 50;

/// A location given either as a number (1-D) or as a coordinate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointInput {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PointInput {
    pub fn to_point(&self) -> Result<Point> {
        let coords = match self {
            PointInput::Scalar(x) => vec![*x],
            PointInput::Vector(v) => v.clone(),
        };
        Point::new(coords).map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn read_json<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn check_kernel(k: &Kernel) -> Result<()> {
    k.validate().map_err(|e| CliError::Config(e.to_string()))
}

fn noise_model(spec: NoiseSpec) -> Result<NoiseModel> {
    NoiseModel::from_spec(spec).map_err(|e| CliError::Config(e.to_string()))
}

fn resolve_ridge(ridge: Option<f64>, noise: &NoiseModel) -> Result<f64> {
    let r = ridge.unwrap_or_else(|| noise.variance());
    if !(r.is_finite() && r > 0.0) {
        return Err(CliError::Config(format!("ridge must be positive, got {r}")));
    }
    Ok(r)
}

// ---------------------------------------------------------------- fit-predict

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitPredictFile {
    pub xs: Option<Vec<PointInput>>,
    pub ys: Option<Vec<f64>>,
    pub kernel: Option<Kernel>,
    pub noise: Option<NoiseSpec>,
    pub ridge: Option<f64>,
    pub predict: Option<Vec<PointInput>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitPredictConfig {
    pub xs: Vec<PointInput>,
    pub ys: Vec<f64>,
    pub kernel: Kernel,
    pub noise: NoiseSpec,
    pub ridge: f64,
    pub predict: Vec<PointInput>,
}

impl FitPredictConfig {
    pub fn resolve(file: FitPredictFile, predict: Option<Vec<f64>>) -> Result<Self> {
        let missing = |k: &str| CliError::Config(format!("missing required key `{k}`"));
        let xs = file.xs.ok_or_else(|| missing("xs"))?;
        let ys = file.ys.ok_or_else(|| missing("ys"))?;
        let kernel = file.kernel.unwrap_or_else(study_kernel);
        check_kernel(&kernel)?;
        let noise = file.noise.unwrap_or(NoiseSpec::Gaussian { sigma: 1.0 });
        let ridge = resolve_ridge(file.ridge, &noise_model(noise)?)?;
        let predict = match predict {
            Some(v) => v.into_iter().map(PointInput::Scalar).collect(),
            None => file.predict.ok_or_else(|| missing("predict"))?,
        };
        if predict.is_empty() {
            return Err(CliError::Config("no prediction points given".into()));
        }
        let cfg = Self {
            xs,
            ys,
            kernel,
            noise,
            ridge,
            predict,
        };
        let data = cfg.dataset()?;
        for p in cfg.predict_points()? {
            if p.dim() != data.input_dim() {
                return Err(CliError::Config(format!(
                    "prediction point has dimension {}, data has {}",
                    p.dim(),
                    data.input_dim()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let pts = self
            .xs
            .iter()
            .map(|p| p.to_point())
            .collect::<Result<_>>()?;
        Dataset::new(pts, self.ys.clone()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn predict_points(&self) -> Result<Vec<Point>> {
        self.predict.iter().map(|p| p.to_point()).collect()
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        noise_model(self.noise)
    }
}

// ---------------------------------------------------------------- shared study settings

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub seed: Option<u64>,
    pub n_x: Option<Vec<usize>>,
    pub n_sam: Option<Vec<usize>>,
    pub x_range: Option<[f64; 2]>,
    pub kernel: Option<Kernel>,
    pub noise: Option<NoiseSpec>,
    pub ridge: Option<f64>,
    pub grid: Option<usize>,
    pub mc: Option<usize>,
    pub paths: Option<usize>,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct StudyOverrides {
    pub seed: Option<u64>,
    pub n_x: Option<Vec<usize>>,
    pub n_sam: Option<Vec<usize>>,
    pub grid: Option<usize>,
    pub mc: Option<usize>,
    pub paths: Option<usize>,
}

impl StudyFile {
    fn apply(mut self, o: StudyOverrides) -> Self {
        self.seed = o.seed.or(self.seed);
        self.n_x = o.n_x.or(self.n_x);
        self.n_sam = o.n_sam.or(self.n_sam);
        self.grid = o.grid.or(self.grid);
        self.mc = o.mc.or(self.mc);
        self.paths = o.paths.or(self.paths);
        self
    }
}

fn experiment(
    file: &StudyFile,
    n_x: usize,
    n_sam: usize,
    noise: NoiseSpec,
    seed: u64,
) -> Result<ExperimentConfig> {
    let model = noise_model(noise)?;
    let cfg = ExperimentConfig {
        n_x,
        n_sam,
        x_range: file.x_range.unwrap_or(X_RANGE),
        kernel: file.kernel.clone().unwrap_or_else(study_kernel),
        noise,
        ridge: resolve_ridge(file.ridge, &model)?,
        prediction_grid_size: file.grid.unwrap_or(DEFAULT_GRID),
        mc_samples: file.mc.unwrap_or(DEFAULT_MC_SAMPLES),
        seed,
    };
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig1Config {
    pub seed: u64,
    pub experiments: Vec<ExperimentConfig>,
}

impl Fig1Config {
    pub fn resolve(file: StudyFile, overrides: StudyOverrides) -> Result<Self> {
        let file = file.apply(overrides);
        if file.mc.is_some() || file.paths.is_some() {
            return Err(CliError::Config(
                "`mc` and `paths` do not apply to fig1".into(),
            ));
        }
        let seed = file.seed.unwrap_or(DEFAULT_SEED);
        let noise = file.noise.unwrap_or(NoiseSpec::Gaussian { sigma: 1.0 });
        let n_x = file.n_x.clone().unwrap_or_else(|| FIG1_N_X.to_vec());
        let n_sam = file.n_sam.clone().unwrap_or_else(|| FIG1_N_SAM.to_vec());
        if n_x.is_empty() || n_sam.is_empty() {
            return Err(CliError::Config(
                "n_x and n_sam lists must be non-empty".into(),
            ));
        }
        let mut experiments = Vec::new();
        for &nx in &n_x {
            for &ns in &n_sam {
                experiments.push(experiment(&file, nx, ns, noise, seed)?);
            }
        }
        Ok(Self { seed, experiments })
    }

    pub fn default_with_seed(seed: u64) -> Self {
        Self::resolve(
            StudyFile::default(),
            StudyOverrides {
                seed: Some(seed),
                ..Default::default()
            },
        )
        .expect("defaults are valid")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig2Config {
    pub experiment: ExperimentConfig,
    pub paths: usize,
}

impl Fig2Config {
    pub fn resolve(file: StudyFile, overrides: StudyOverrides) -> Result<Self> {
        let file = file.apply(overrides);
        let single = |v: &Option<Vec<usize>>, default: usize, key: &str| -> Result<usize> {
            match v.as_deref() {
                None => Ok(default),
                Some([one]) => Ok(*one),
                Some(_) => Err(CliError::Config(format!(
                    "fig2 takes a single `{key}` value"
                ))),
            }
        };
        let n_x = single(&file.n_x, 5, "n_x")?;
        let n_sam = single(&file.n_sam, 1, "n_sam")?;
        let noise = file.noise.unwrap_or(NoiseSpec::Gamma {
            alpha: 0.25,
            beta: 2.0,
        });
        if !matches!(noise, NoiseSpec::Gamma { .. }) {
            return Err(CliError::Config("fig2 requires gamma noise".into()));
        }
        let seed = file.seed.unwrap_or(DEFAULT_SEED);
        let experiment = experiment(&file, n_x, n_sam, noise, seed)?;
        let paths = file.paths.unwrap_or(DEFAULT_PATHS);
        if experiment.mc_samples < 2 {
            return Err(CliError::Config("mc must be at least 2".into()));
        }
        Ok(Self {
            paths: paths.min(experiment.mc_samples),
            experiment,
        })
    }

    pub fn default_with_seed(seed: u64) -> Self {
        Self::resolve(
            StudyFile::default(),
            StudyOverrides {
                seed: Some(seed),
                ..Default::default()
            },
        )
        .expect("defaults are valid")
    }
}

// ---------------------------------------------------------------- lemma3

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma3File {
    pub x_bar: Option<PointInput>,
    pub n_list: Option<Vec<usize>>,
    pub kernel: Option<Kernel>,
    pub noise: Option<NoiseSpec>,
    pub ridge: Option<f64>,
    pub base_xs: Option<Vec<PointInput>>,
    pub base_ys: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct Lemma3Overrides {
    pub x_bar: Option<f64>,
    pub n_max: Option<usize>,
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma3Config {
    pub x_bar: PointInput,
    pub n_list: Vec<usize>,
    pub kernel: Kernel,
    pub noise: NoiseSpec,
    pub ridge: f64,
    pub base_xs: Option<Vec<PointInput>>,
    pub base_ys: Option<Vec<f64>>,
}

impl Lemma3Config {
    pub fn resolve(file: Lemma3File, o: Lemma3Overrides) -> Result<Self> {
        let x_bar = match o.x_bar {
            Some(x) => PointInput::Scalar(x),
            None => file.x_bar.unwrap_or(PointInput::Scalar(0.0)),
        };
        x_bar.to_point()?;
        let n_list = match o.n_max {
            Some(n) => (1..=n).collect(),
            None => file.n_list.unwrap_or_else(|| (1..=100).collect()),
        };
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(CliError::Config(
                "n_list must be non-empty and positive".into(),
            ));
        }
        let kernel = file.kernel.unwrap_or_else(study_kernel);
        check_kernel(&kernel)?;
        let noise = o
            .noise
            .or(file.noise)
            .unwrap_or(NoiseSpec::Gaussian { sigma: 1.0 });
        let ridge = resolve_ridge(file.ridge, &noise_model(noise)?)?;
        if file.base_xs.is_some() != file.base_ys.is_some() {
            return Err(CliError::Config(
                "base_xs and base_ys must be given together".into(),
            ));
        }
        let cfg = Self {
            x_bar,
            n_list,
            kernel,
            noise,
            ridge,
            base_xs: file.base_xs,
            base_ys: file.base_ys,
        };
        if let Some(base) = cfg.base()? {
            if base.input_dim() != cfg.x_bar()?.dim() {
                return Err(CliError::Config(
                    "x_bar dimension differs from base data".into(),
                ));
            }
        }
        Ok(cfg)
    }

    pub fn x_bar(&self) -> Result<Point> {
        self.x_bar.to_point()
    }

    pub fn base(&self) -> Result<Option<Dataset>> {
        match (&self.base_xs, &self.base_ys) {
            (Some(xs), Some(ys)) => {
                let pts = xs.iter().map(|p| p.to_point()).collect::<Result<_>>()?;
                Dataset::new(pts, ys.clone())
                    .map(Some)
                    .map_err(|e| CliError::Config(e.to_string()))
            }
            _ => Ok(None),
        }
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        noise_model(self.noise)
    }
}

pub fn parse_noise(s: &str) -> std::result::Result<NoiseSpec, String> {
    match s {
        "gaussian" => Ok(NoiseSpec::Gaussian { sigma: 1.0 }),
        "gamma" => Ok(NoiseSpec::Gamma {
            alpha: 0.25,
            beta: 2.0,
        }),
        other => Err(format!(
            "unknown noise `{other}` (expected gaussian or gamma)"
        )),
    }
}
