//! Experiment configuration: TOML primary, JSON accepted, strict
//! unknown-key rejection everywhere so model-parameter typos cannot pass
//! silently. Seeds are always explicit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use wassmd::bounds::Application;
use wassmd::dist::DistSpec;
use wassmd::models::Model;
use wassmd::montecarlo::TailMethod;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    TailRatio,
    WassersteinScaling,
    BoundEval,
    OracleCheck,
    VerifySuite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "GridConfig::is_empty")]
    pub grid: GridConfig,
    pub estimation: EstimationConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn is_empty(&self) -> bool {
        self.x.is_none() && self.n.is_none() && self.p.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: MethodConfig,
}

fn default_method() -> MethodConfig {
    MethodConfig::Plain
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    Plain,
    Tilted,
}

impl From<MethodConfig> for TailMethod {
    fn from(m: MethodConfig) -> TailMethod {
        match m {
            MethodConfig::Plain => TailMethod::Plain,
            MethodConfig::Tilted => TailMethod::Tilted,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
            formats: default_formats(),
        }
    }
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// W_p order for n-scaling experiments.
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistConfig {
    Rademacher,
    LaplaceUnitVar,
    CenteredExponential { rate: f64 },
    UniformCentered { half_width: f64 },
    Gaussian,
    Lattice {
        points: Vec<(f64, f64)>,
        #[serde(default)]
        standardize: bool,
    },
}

impl DistConfig {
    pub fn build(&self) -> Result<DistSpec, wassmd::Error> {
        match self {
            DistConfig::Rademacher => Ok(DistSpec::rademacher()),
            DistConfig::LaplaceUnitVar => Ok(DistSpec::laplace_unit_var()),
            DistConfig::CenteredExponential { rate } => DistSpec::centered_exponential(*rate),
            DistConfig::UniformCentered { half_width } => DistSpec::uniform_centered(*half_width),
            DistConfig::Gaussian => Ok(DistSpec::gaussian()),
            DistConfig::Lattice { points, standardize } => {
                if *standardize {
                    DistSpec::lattice_standardized(points)
                } else {
                    DistSpec::lattice(points)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomEntryConfig {
    pub indices: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    IidSum {
        n: usize,
        dist: DistConfig,
    },
    MultiIid {
        n: usize,
        d: usize,
        dist: DistConfig,
    },
    CombClt {
        c: Vec<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma2: Option<Vec<Vec<f64>>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        noise: Option<DistConfig>,
    },
    HomSum {
        q: usize,
        n: usize,
        entries: Vec<HomEntryConfig>,
        dist: DistConfig,
    },
    GaussChaos2 {
        f: Vec<Vec<f64>>,
    },
    MDep {
        n: usize,
        kernel: Vec<f64>,
        dist: DistConfig,
    },
    GraphDep {
        n: usize,
        edges: Vec<(usize, usize)>,
        dist: DistConfig,
    },
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, wassmd::Error> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(wassmd::Error::Validation(format!("{what} must be square and nonempty")));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

impl ModelConfig {
    pub fn build(&self) -> Result<Model, wassmd::Error> {
        match self {
            ModelConfig::IidSum { n, dist } => Model::iid_sum(*n, dist.build()?),
            ModelConfig::MultiIid { n, d, dist } => Model::multi_iid(*n, *d, dist.build()?),
            ModelConfig::CombClt { c, sigma2, noise } => {
                let c = to_matrix(c, "c")?;
                let s2 = match sigma2 {
                    Some(rows) => to_matrix(rows, "sigma2")?,
                    None => DMatrix::zeros(c.nrows(), c.ncols()),
                };
                let noise = match noise {
                    Some(d) => d.build()?,
                    None => DistSpec::gaussian(),
                };
                Model::comb_clt(c, s2, noise)
            }
            ModelConfig::HomSum { q, n, entries, dist } => {
                let entries: Vec<(Vec<usize>, f64)> =
                    entries.iter().map(|e| (e.indices.clone(), e.value)).collect();
                Model::hom_sum(*q, *n, entries, dist.build()?)
            }
            ModelConfig::GaussChaos2 { f } => Model::gauss_chaos2(to_matrix(f, "f")?),
            ModelConfig::MDep { n, kernel, dist } => Model::m_dep(*n, kernel.clone(), dist.build()?),
            ModelConfig::GraphDep { n, edges, dist } => Model::graph_dep(*n, edges, dist.build()?),
        }
    }

    /// Same model with its size parameter replaced (scaling grids).
    pub fn with_n(&self, n: usize) -> Result<Self, wassmd::Error> {
        match self {
            ModelConfig::IidSum { dist, .. } => Ok(ModelConfig::IidSum { n, dist: clone(dist) }),
            ModelConfig::MultiIid { d, dist, .. } => Ok(ModelConfig::MultiIid {
                n,
                d: *d,
                dist: clone(dist),
            }),
            ModelConfig::MDep { kernel, dist, .. } => Ok(ModelConfig::MDep {
                n,
                kernel: kernel.clone(),
                dist: clone(dist),
            }),
            _ => Err(wassmd::Error::Unsupported(
                "scaling over n needs an iid_sum, multi_iid or m_dep model".into(),
            )),
        }
    }
}

fn clone(d: &DistConfig) -> DistConfig {
    d.clone()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "application", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundConfig {
    Iid {
        n: usize,
        b: f64,
    },
    Comb {
        n: usize,
        b: f64,
        bn2: f64,
    },
    Dejong {
        q: usize,
        kappa4_abs: f64,
        m4_max: f64,
        influence: f64,
        k_psi2: f64,
    },
    Qf {
        op_norm_f: f64,
        k_bound: f64,
    },
    WienerSimple {
        hs_norm_f2: f64,
    },
    Chi {
        n: usize,
        d: u32,
        b: f64,
    },
    Mdep {
        n: usize,
        m: usize,
        b: f64,
    },
    LocalBounded {
        n: usize,
        d: u32,
        theta1: f64,
        theta2: f64,
        b_n: f64,
        b_n_prime: f64,
    },
    LocalUnbounded {
        n: usize,
        d: u32,
        l_groups: f64,
        theta1: f64,
        theta2: f64,
        b: f64,
    },
}

impl BoundConfig {
    pub fn build(&self) -> Application {
        match *self {
            BoundConfig::Iid { n, b } => Application::Iid { n, b },
            BoundConfig::Comb { n, b, bn2 } => Application::Comb { n, b, bn2 },
            BoundConfig::Dejong {
                q,
                kappa4_abs,
                m4_max,
                influence,
                k_psi2,
            } => Application::Dejong {
                q,
                kappa4_abs,
                m4_max,
                influence,
                k_psi2,
            },
            BoundConfig::Qf { op_norm_f, k_bound } => Application::Qf { op_norm_f, k_bound },
            BoundConfig::WienerSimple { hs_norm_f2 } => Application::WienerSimple { hs_norm_f2 },
            BoundConfig::Chi { n, d, b } => Application::Chi { n, d, b },
            BoundConfig::Mdep { n, m, b } => Application::Mdep { n, m, b },
            BoundConfig::LocalBounded {
                n,
                d,
                theta1,
                theta2,
                b_n,
                b_n_prime,
            } => Application::LocalBounded {
                n,
                d,
                theta1,
                theta2,
                b_n,
                b_n_prime,
            },
            BoundConfig::LocalUnbounded {
                n,
                d,
                l_groups,
                theta1,
                theta2,
                b,
            } => Application::LocalUnbounded {
                n,
                d,
                l_groups,
                theta1,
                theta2,
                b,
            },
        }
    }
}

/// Parse a config from TOML (primary) or JSON (accepted), by extension
/// first and content sniffing as a fallback.
pub fn parse_config(path: &std::path::Path, text: &str) -> Result<ExperimentConfig, String> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("json") || text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| format!("JSON config error: {e}"))
    } else {
        toml::from_str(text).map_err(|e| format!("TOML config error: {e}"))
    }
}

/// Validate the parts common to every kind.
pub fn validate(config: &ExperimentConfig) -> Result<(), String> {
    match config.kind {
        Kind::TailRatio => {
            if config.model.is_none() {
                return Err("tail_ratio needs a [model] block".into());
            }
            match &config.grid.x {
                None => return Err("tail_ratio needs grid.x".into()),
                Some(x) if x.is_empty() => return Err("grid.x must be nonempty".into()),
                _ => {}
            }
        }
        Kind::WassersteinScaling => {
            if config.model.is_none() {
                return Err("wasserstein_scaling needs a [model] block".into());
            }
            let has_n = config.grid.n.as_ref().map_or(false, |g| !g.is_empty());
            let has_p = config.grid.p.as_ref().map_or(false, |g| !g.is_empty());
            if has_n == has_p {
                return Err("wasserstein_scaling needs exactly one of grid.n or grid.p".into());
            }
            if has_n && config.scaling.is_none() {
                return Err("scaling over n needs [scaling] p = <order>".into());
            }
        }
        Kind::BoundEval => {
            if config.bound.is_none() {
                return Err("bound_eval needs a [bound] block".into());
            }
            match &config.grid.x {
                None => return Err("bound_eval needs grid.x".into()),
                Some(x) if x.is_empty() => return Err("grid.x must be nonempty".into()),
                _ => {}
            }
        }
        Kind::OracleCheck => {
            if config.model.is_none() {
                return Err("oracle_check needs a [model] block".into());
            }
        }
        Kind::VerifySuite => {}
    }
    if config.estimation.reps == 0 {
        return Err("estimation.reps must be >= 1".into());
    }
    Ok(())
}
