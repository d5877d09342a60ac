//! Subcommand implementations. Each computes everything first and only then
//! touches the output directory, so a failed run leaves no partial files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use wiener_kernel::experiments::{
    run_gamma_study, run_lemma3_sweep, run_tube_experiment, GammaStudy, Lemma3Row, TubeExperiment,
    TubeTable,
};
use wiener_kernel::montecarlo::{empirical_moments, predicted_skewness};
use wiener_kernel::{fit, Dataset, Point, Warning};

use crate::config::{Fig1Config, Fig2Config, FitPredictConfig, Lemma3Config};
use crate::output::{Cell, Manifest, OutDir, Table};
use crate::Result;

pub const MANIFEST: &str = "manifest.json";

/// What a command wrote, plus anything worth telling the user.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

fn file_names(files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .filter_map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .collect()
}

#[derive(Debug, Serialize)]
struct DatasetRecord {
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
}

impl From<&Dataset> for DatasetRecord {
    fn from(d: &Dataset) -> Self {
        Self {
            xs: d.xs().iter().map(|p| p.coords().to_vec()).collect(),
            ys: d.ys().to_vec(),
        }
    }
}

// ---------------------------------------------------------------- fit-predict

pub fn fit_predict_table(cfg: &FitPredictConfig) -> Result<(Table, Vec<Warning>)> {
    let data = cfg.dataset()?;
    let dim = data.input_dim();
    let model = fit(data, cfg.kernel.clone(), cfg.ridge, cfg.noise_model()?)?;
    let mut header: Vec<String> = if dim == 1 {
        vec!["x".into()]
    } else {
        (0..dim).map(|i| format!("x{i}")).collect()
    };
    header.extend(["mu", "sigma_gp", "sigma_gp_noisy", "sigma_wk", "wk_mean"].map(String::from));
    let mut table = Table::new(header);
    let mut warnings = Vec::new();
    for p in cfg.predict_points()? {
        let gp = model.gp_predict(&p)?;
        let wk = model.wk_predict(&p)?;
        let var = model.wk_variance(&p)?;
        if let Some(w) = var.warning {
            if warnings.is_empty() {
                warnings.push(w);
            }
        }
        let mut row: Vec<Cell> = p.coords().iter().map(|&c| c.into()).collect();
        row.extend(
            [
                gp.mu,
                gp.var_gp.sqrt(),
                gp.var_gp_noisy.sqrt(),
                var.variance.sqrt(),
                wk.mean,
            ]
            .map(Cell::Float),
        );
        table.push(row);
    }
    Ok((table, warnings))
}

pub fn run_fit_predict(cfg: &FitPredictConfig, out: &Path) -> Result<RunSummary> {
    let (table, warnings) = fit_predict_table(cfg)?;
    let notes: Vec<String> = warnings
        .iter()
        .map(|w| match w {
            Warning::RidgeNotNoiseVariance {
                ridge,
                noise_variance,
            } => format!(
                "ridge {ridge:e} differs from the noise variance {noise_variance:e}; mu and wk_mean may differ"
            ),
        })
        .collect();
    let dir = OutDir::create(out)?;
    let mut files = vec![dir.write_csv("predictions.csv", &table)?];
    let manifest = Manifest {
        command: "fit-predict",
        version: env!("CARGO_PKG_VERSION"),
        seed: None,
        config: cfg,
        files: file_names(&files),
        extra: serde_json::json!({ "warnings": notes }),
    };
    files.push(dir.write_json(MANIFEST, &manifest)?);
    Ok(RunSummary { files, notes })
}

// ---------------------------------------------------------------- fig1

pub fn tube_csv(table: &TubeTable) -> Table {
    let mut t = Table::new([
        "x",
        "f_true",
        "mu",
        "wk_mean",
        "sigma_gp",
        "sigma_gp_noisy",
        "sigma_wk",
    ]);
    for r in &table.rows {
        t.push(
            [
                r.x,
                r.f_true,
                r.mu,
                r.wk_mean,
                r.sigma_gp,
                r.sigma_gp_noisy,
                r.sigma_wk,
            ]
            .map(Cell::Float)
            .to_vec(),
        );
    }
    t
}

pub fn fig1_file_name(n_x: usize, n_sam: usize) -> String {
    format!("fig1_nx{n_x}_nsam{n_sam}.csv")
}

/// Runs every configured experiment in parallel; results keep config order.
pub fn fig1_experiments(cfg: &Fig1Config) -> Result<Vec<TubeExperiment>> {
    Ok(cfg
        .experiments
        .par_iter()
        .map(run_tube_experiment)
        .collect::<wiener_kernel::Result<Vec<_>>>()?)
}

#[derive(Debug, Serialize)]
struct Fig1Record {
    file: String,
    n_x: usize,
    n_sam: usize,
    max_sigma_wk: f64,
    max_wk_minus_gp: f64,
    jitter: f64,
    dataset: DatasetRecord,
}

pub fn run_fig1(cfg: &Fig1Config, out: &Path) -> Result<RunSummary> {
    let runs = fig1_experiments(cfg)?;
    let dir = OutDir::create(out)?;
    let mut files = Vec::new();
    let mut records = Vec::new();
    for run in &runs {
        let name = fig1_file_name(run.config.n_x, run.config.n_sam);
        files.push(dir.write_csv(&name, &tube_csv(&run.table))?);
        records.push(Fig1Record {
            file: name,
            n_x: run.config.n_x,
            n_sam: run.config.n_sam,
            max_sigma_wk: run.table.max_sigma_wk(),
            max_wk_minus_gp: run.table.max_wk_minus_gp(),
            jitter: run.model.factor().jitter_applied(),
            dataset: run.dataset().into(),
        });
    }
    let manifest = Manifest {
        command: "fig1",
        version: env!("CARGO_PKG_VERSION"),
        seed: Some(cfg.seed),
        config: cfg,
        files: file_names(&files),
        extra: serde_json::json!({ "runs": records }),
    };
    files.push(dir.write_json(MANIFEST, &manifest)?);
    Ok(RunSummary {
        files,
        notes: Vec::new(),
    })
}

// ---------------------------------------------------------------- fig2

pub const FIG2_TUBES: &str = "fig2_tubes.csv";
pub const FIG2_PATHS: &str = "fig2_paths.csv";
pub const FIG2_KDE: &str = "fig2_kde.csv";
pub const FIG2_COMPARISON: &str = "fig2_x0_comparison.csv";
pub const FIG2_HISTOGRAM: &str = "fig2_x0_histogram.csv";

pub fn fig2_tables(study: &GammaStudy, paths: usize) -> Vec<(&'static str, Table)> {
    let rows = &study.experiment.table.rows;

    let mut header = vec!["x".to_string(), "f_true".into(), "mean".into()];
    header.extend((0..paths).map(|i| format!("path_{i}")));
    let mut paths_t = Table::new(header);
    for (g, r) in rows.iter().enumerate() {
        let mut row = vec![Cell::Float(r.x), r.f_true.into(), r.wk_mean.into()];
        row.extend(study.paths.draws[..paths].iter().map(|d| Cell::Float(d[g])));
        paths_t.push(row);
    }

    let mut kde_t = Table::new(["location", "value", "density"]);
    for ld in &study.location_densities {
        for (v, d) in ld.density.support.iter().zip(&ld.density.density) {
            kde_t.push(vec![ld.x.into(), (*v).into(), (*d).into()]);
        }
    }

    let c = &study.comparison;
    let mut cmp_t = Table::new(["value", "pdf_mc_fit", "pdf_gp", "pdf_wk", "pdf_gp_noisy"]);
    for i in 0..c.support.len() {
        cmp_t.push(
            [
                c.support[i],
                c.pdf_mc_fit[i],
                c.pdf_gp[i],
                c.pdf_wk[i],
                c.pdf_gp_noisy[i],
            ]
            .map(Cell::Float)
            .to_vec(),
        );
    }

    let h = &study.histogram_at_zero;
    let mut hist_t = Table::new(["bin_lo", "bin_hi", "count", "density"]);
    for b in 0..h.counts.len() {
        hist_t.push(vec![
            h.edges[b].into(),
            h.edges[b + 1].into(),
            Cell::Int(h.counts[b] as usize),
            h.density[b].into(),
        ]);
    }

    vec![
        (FIG2_TUBES, tube_csv(&study.experiment.table)),
        (FIG2_PATHS, paths_t),
        (FIG2_KDE, kde_t),
        (FIG2_COMPARISON, cmp_t),
        (FIG2_HISTOGRAM, hist_t),
    ]
}

#[derive(Debug, Serialize)]
struct MomentRecord {
    x: f64,
    mc_mean: f64,
    mc_variance: f64,
    mc_skewness: Option<f64>,
    wk_mean: f64,
    wk_variance: f64,
    predicted_skewness: Option<f64>,
    kde_bandwidth: Option<f64>,
}

fn moment_record(
    study: &GammaStudy,
    x: f64,
    samples: &[f64],
    bandwidth: Option<f64>,
) -> Result<MomentRecord> {
    let model = &study.experiment.model;
    let pred = model.wk_predict(&Point::scalar(x))?;
    let e = empirical_moments(samples)?;
    Ok(MomentRecord {
        x,
        mc_mean: e.mean,
        mc_variance: e.variance,
        mc_skewness: e.skewness,
        wk_mean: pred.mean,
        wk_variance: pred.variance(),
        predicted_skewness: predicted_skewness(&pred, model.noise()),
        kde_bandwidth: bandwidth,
    })
}

pub fn run_fig2(cfg: &Fig2Config, out: &Path) -> Result<RunSummary> {
    let study = run_gamma_study(&cfg.experiment)?;
    let tables = fig2_tables(&study, cfg.paths);

    let mut locations = Vec::new();
    for ld in &study.location_densities {
        let m = study.experiment.model.wk_predict(&Point::scalar(ld.x))?;
        locations.push(MomentRecord {
            x: ld.x,
            mc_mean: ld.moments.mean,
            mc_variance: ld.moments.variance,
            mc_skewness: ld.moments.skewness,
            wk_mean: m.mean,
            wk_variance: m.variance(),
            predicted_skewness: predicted_skewness(&m, study.experiment.model.noise()),
            kde_bandwidth: Some(ld.density.bandwidth),
        });
    }
    let zero = moment_record(&study, 0.0, &study.samples_at_zero, None)?;
    let c = &study.comparison;
    let extra = serde_json::json!({
        "dataset": DatasetRecord::from(study.experiment.dataset()),
        "at_zero": zero,
        "comparison_variances": {
            "gp": c.var_gp,
            "wk": c.var_wk,
            "gp_noisy": c.var_gp_noisy,
        },
        "locations": locations,
    });

    let dir = OutDir::create(out)?;
    let mut files = Vec::new();
    for (name, t) in &tables {
        files.push(dir.write_csv(name, t)?);
    }
    let manifest = Manifest {
        command: "fig2",
        version: env!("CARGO_PKG_VERSION"),
        seed: Some(cfg.experiment.seed),
        config: cfg,
        files: file_names(&files),
        extra,
    };
    files.push(dir.write_json(MANIFEST, &manifest)?);
    Ok(RunSummary {
        files,
        notes: Vec::new(),
    })
}

// ---------------------------------------------------------------- lemma3

pub const LEMMA3_FILE: &str = "lemma3.csv";

pub fn lemma3_rows(cfg: &Lemma3Config) -> Result<Vec<Lemma3Row>> {
    let base = cfg.base()?;
    Ok(run_lemma3_sweep(
        base.as_ref(),
        &cfg.x_bar()?,
        &cfg.n_list,
        &cfg.kernel,
        cfg.ridge,
        &cfg.noise_model()?,
    )?)
}

pub fn lemma3_table(rows: &[Lemma3Row]) -> Table {
    let mut t = Table::new(["n", "v_n", "bound"]);
    for r in rows {
        t.push(vec![Cell::Int(r.n), r.v_n.into(), r.bound.into()]);
    }
    t
}

pub fn run_lemma3(cfg: &Lemma3Config, out: &Path) -> Result<RunSummary> {
    let rows = lemma3_rows(cfg)?;
    let violations = rows.iter().filter(|r| r.v_n > r.bound + 1e-12).count();
    let dir = OutDir::create(out)?;
    let mut files = vec![dir.write_csv(LEMMA3_FILE, &lemma3_table(&rows))?];
    let manifest = Manifest {
        command: "lemma3",
        version: env!("CARGO_PKG_VERSION"),
        seed: None,
        config: cfg,
        files: file_names(&files),
        extra: serde_json::json!({ "bound_violations": violations }),
    };
    files.push(dir.write_json(MANIFEST, &manifest)?);
    let notes = if violations > 0 {
        vec![format!("{violations} rows exceed the bound")]
    } else {
        Vec::new()
    };
    Ok(RunSummary { files, notes })
}
