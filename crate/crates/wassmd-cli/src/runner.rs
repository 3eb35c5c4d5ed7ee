//! Executes a parsed config: runs the experiment, writes CSV tables, one
//! JSON manifest and a deterministic summary into the output directory.

use crate::config::{ExperimentConfig, Kind};
use crate::table::{cell_bool, cell_f64, cell_opt_bool, cell_opt_f64, Csv};
use crate::verify;
use std::path::{Path, PathBuf};
use std::time::Instant;
use wassmd::models::Model;
use wassmd::montecarlo::{ratio_curve, wp_scaling, wp_scaling_in_p};
use wassmd::oracles::{convolve_iid_pmf, enumerate_comb, enumerate_homsum, exact_tail_ratio, ExactPmf, TailReference};

pub enum RunError {
    /// Bad config or bad inputs: exit 2.
    Validation(String),
    /// The machine cannot do what was asked: exit 3.
    Capability(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Capability(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Validation(m) | RunError::Capability(m) => m,
        }
    }
}

fn lift(e: wassmd::Error) -> RunError {
    if e.is_validation() {
        RunError::Validation(e.to_string())
    } else {
        RunError::Capability(e.to_string())
    }
}

pub struct Artifacts {
    pub dir: PathBuf,
    pub summary: String,
    /// Nonzero values bubble up as the process exit code (verify_suite).
    pub exit_code: i32,
}

pub fn run_config_file(
    path: &Path,
    seed_override: Option<u64>,
    reps_override: Option<usize>,
    out_override: Option<&str>,
) -> Result<Artifacts, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut config = crate::config::parse_config(path, &text).map_err(RunError::Validation)?;
    if let Some(s) = seed_override {
        config.estimation.seed = s;
    }
    if let Some(r) = reps_override {
        config.estimation.reps = r;
    }
    if let Some(dir) = out_override {
        config.output.dir = dir.to_string();
    } else if let Ok(dir) = std::env::var("WASSMD_OUT") {
        config.output.dir = dir;
    }
    crate::config::validate(&config).map_err(RunError::Validation)?;
    run_config(&config)
}

pub fn run_config(config: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let started = Instant::now();
    let dir = PathBuf::from(&config.output.dir);
    std::fs::create_dir_all(&dir)
        .map_err(|e| RunError::Validation(format!("cannot create {}: {e}", dir.display())))?;

    let mut summary = String::new();
    let mut tables: Vec<(String, String)> = Vec::new();
    let mut exit_code = 0;

    match config.kind {
        Kind::TailRatio => {
            let model = build_model(config)?;
            let grid = config.grid.x.clone().unwrap_or_default();
            let app = config.bound.as_ref().map(|b| b.build());
            let report = ratio_curve(
                &model,
                &grid,
                config.estimation.reps,
                config.estimation.seed,
                config.estimation.method.into(),
                app.as_ref(),
            )
            .map_err(lift)?;
            let mut csv = Csv::new(&[
                "x", "p_hat", "se", "ci_lo", "ci_hi", "p_ref", "ratio", "ratio_ci_lo", "ratio_ci_hi",
                "bound_shape", "feasible",
            ]);
            for row in &report.rows {
                csv.row(&[
                    cell_f64(row.x),
                    cell_f64(row.p_hat),
                    cell_f64(row.se),
                    cell_f64(row.ci_lo),
                    cell_f64(row.ci_hi),
                    cell_f64(row.p_ref),
                    cell_f64(row.ratio),
                    cell_f64(row.ratio_ci_lo),
                    cell_f64(row.ratio_ci_hi),
                    cell_opt_f64(row.bound_shape),
                    cell_opt_bool(row.feasible),
                ]);
            }
            tables.push(("tail_ratio.csv".into(), csv.into_string()));
            summary.push_str(&format!(
                "tail_ratio: model {} at {} grid points, reps {}\n",
                model.tag(),
                report.rows.len(),
                report.reps
            ));
            for row in &report.rows {
                summary.push_str(&format!(
                    "  x = {:>8.4}  ratio = {:.6}  ({} feasible)\n",
                    row.x,
                    row.ratio,
                    match row.feasible {
                        Some(true) => "bound",
                        Some(false) => "bound NOT",
                        None => "no bound;",
                    }
                ));
            }
        }
        Kind::WassersteinScaling => {
            let report = if let Some(ns) = &config.grid.n {
                let base = config.model.as_ref().unwrap();
                let order = config.scaling.as_ref().unwrap().p;
                let models: Vec<Model> = ns
                    .iter()
                    .map(|&n| base.with_n(n).and_then(|m| m.build()))
                    .collect::<Result<_, _>>()
                    .map_err(lift)?;
                wp_scaling(&models, order, config.estimation.reps, config.estimation.seed).map_err(lift)?
            } else {
                let model = build_model(config)?;
                let grid = config.grid.p.clone().unwrap_or_default();
                wp_scaling_in_p(&model, &grid, config.estimation.reps, config.estimation.seed).map_err(lift)?
            };
            let mut csv = Csv::new(&["abscissa", "wp_hat"]);
            for pt in &report.points {
                csv.row(&[cell_f64(pt.abscissa), cell_f64(pt.wp_hat)]);
            }
            tables.push(("scaling.csv".into(), csv.into_string()));
            summary.push_str(&format!(
                "wasserstein_scaling: exponent {:.4}, r^2 {:.4}, noise floor {:.6e}{}\n",
                report.fitted_exponent,
                report.r_squared,
                report.noise_floor,
                if report.floor_limited { " (floor-limited)" } else { "" }
            ));
        }
        Kind::BoundEval => {
            let app = config.bound.as_ref().unwrap().build();
            let ad = wassmd::bounds::app_delta(&app).map_err(lift)?;
            let grid = config.grid.x.clone().unwrap_or_default();
            let mut csv = Csv::new(&["x", "delta", "alpha", "p0", "shape", "feasible", "range_max_x"]);
            for &x in &grid {
                let report = ad.translate(x).map_err(lift)?;
                csv.row(&[
                    cell_f64(x),
                    cell_f64(ad.delta),
                    cell_f64(ad.alpha),
                    cell_f64(ad.p0),
                    cell_f64(report.shape),
                    cell_bool(report.feasible),
                    cell_f64(report.range_max_x),
                ]);
            }
            tables.push(("bound.csv".into(), csv.into_string()));
            summary.push_str(&format!(
                "bound_eval: delta = {:.6e}, alpha = {}, p0 = {:.6e}, x-range cap = {:.4}\n",
                ad.delta, ad.alpha, ad.p0, ad.range_max_x
            ));
            for (k, v) in &ad.aux {
                summary.push_str(&format!("  aux {k} = {v:.6e}\n"));
            }
        }
        Kind::OracleCheck => {
            let model = build_model(config)?;
            let pmf = oracle_pmf(&model)?;
            tables.push(("pmf.csv".into(), pmf.to_csv()));
            summary.push_str(&format!(
                "oracle_check: {} with {} atoms, mean {:.3e}, variance {:.12}\n",
                pmf.model_tag(),
                pmf.atoms().len(),
                pmf.mean(),
                pmf.variance()
            ));
            if let Some(grid) = &config.grid.x {
                let reference = if model.dim() >= 2 {
                    TailReference::Chi(model.dim() as u32)
                } else {
                    TailReference::Normal
                };
                let mut csv = Csv::new(&["x", "p_w", "p_ref", "ratio"]);
                for &x in grid {
                    let r = exact_tail_ratio(&pmf, x, reference).map_err(lift)?;
                    csv.row(&[cell_f64(x), cell_f64(r.p_w), cell_f64(r.p_ref), cell_f64(r.ratio)]);
                }
                tables.push(("ratios.csv".into(), csv.into_string()));
            }
        }
        Kind::VerifySuite => {
            let filter = config.verify.as_ref().and_then(|v| v.filter.as_deref());
            let results = verify::run_suite(filter);
            let mut csv = Csv::new(&["check", "passed", "detail"]);
            let mut failures = 0;
            for r in &results {
                csv.row(&[
                    r.name.clone(),
                    cell_bool(r.passed),
                    r.detail.replace(',', ";").replace('\n', " "),
                ]);
                summary.push_str(&format!(
                    "{} {}\n",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name
                ));
                if !r.passed {
                    failures += 1;
                }
            }
            tables.push(("verify.csv".into(), csv.into_string()));
            summary.push_str(&format!("{} checks, {} failures\n", results.len(), failures));
            if failures > 0 {
                exit_code = 1;
            }
        }
    }

    let want_csv = config.output.formats.iter().any(|f| f == "csv");
    let want_json = config.output.formats.iter().any(|f| f == "json");
    if want_csv {
        for (name, body) in &tables {
            std::fs::write(dir.join(name), body)
                .map_err(|e| RunError::Validation(format!("cannot write {name}: {e}")))?;
        }
    }
    if want_json {
        let manifest = serde_json::json!({
            "config": config,
            "seed": config.estimation.seed,
            "reps": config.estimation.reps,
            "versions": { "wassmd": env!("CARGO_PKG_VERSION") },
            "wall_time_s": started.elapsed().as_secs_f64(),
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap())
            .map_err(|e| RunError::Validation(format!("cannot write manifest: {e}")))?;
    }
    std::fs::write(dir.join("summary.txt"), &summary)
        .map_err(|e| RunError::Validation(format!("cannot write summary: {e}")))?;

    Ok(Artifacts {
        dir,
        summary,
        exit_code,
    })
}

fn build_model(config: &ExperimentConfig) -> Result<Model, RunError> {
    config
        .model
        .as_ref()
        .ok_or_else(|| RunError::Validation("missing [model] block".into()))?
        .build()
        .map_err(lift)
}

fn oracle_pmf(model: &Model) -> Result<ExactPmf, RunError> {
    match model {
        Model::IidSum { n, dist } => convolve_iid_pmf(dist, *n).map_err(lift),
        Model::CombClt { c, sigma2, .. } => {
            if sigma2.iter().any(|&s| s != 0.0) {
                return Err(RunError::Capability(
                    "oracle_check for comb_clt needs a deterministic array".into(),
                ));
            }
            enumerate_comb(c).map_err(lift)
        }
        Model::HomSum { .. } => enumerate_homsum(model).map_err(lift),
        _ => Err(RunError::Capability(format!(
            "no exact oracle for {}",
            model.tag()
        ))),
    }
}
