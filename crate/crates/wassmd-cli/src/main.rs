//! Experiment runner for the wassmd library.
//!
//! Subcommands: `run <config>`, `verify [--filter]`, `bound <application>`,
//! `oracle <model>`, `wasserstein <files...>`. Exit codes: 0 success,
//! 2 validation failure, 3 runtime capability error.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use wassmd_cli::runner::{self, RunError};
use wassmd_cli::table::{cell_bool, cell_f64, Csv};
use wassmd_cli::verify;
use wassmd::wasserstein::{wp_assignment, wp_empirical_1d, wp_sample_vs_normal, wp_sinkhorn, Points};

#[derive(Parser)]
#[command(name = "wassmd", version, about = "Normal-approximation experiments: transport distances, tail ratios, bound shapes")]
struct Cli {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config replication count.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output directory (also via WASSMD_OUT).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (default: all cores). Results are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (TOML or JSON).
    Run { config: PathBuf },
    /// Run the module invariant suite.
    Verify {
        /// Only checks whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Evaluate a bound shape over an x grid.
    Bound(BoundArgs),
    /// Compute an exact small-instance law.
    Oracle(OracleArgs),
    /// Transport distances between sample files.
    Wasserstein(WassersteinArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// iid | comb | dejong | qf | wiener_simple | chi | mdep | local_bounded | local_unbounded
    application: String,
    /// Comma-separated x grid.
    #[arg(long, default_value = "0.0")]
    x: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    bn2: Option<f64>,
    #[arg(long)]
    kappa4_abs: Option<f64>,
    #[arg(long)]
    m4_max: Option<f64>,
    #[arg(long)]
    influence: Option<f64>,
    #[arg(long)]
    k_psi2: Option<f64>,
    #[arg(long)]
    op_norm_f: Option<f64>,
    #[arg(long)]
    k_bound: Option<f64>,
    #[arg(long)]
    hs_norm_f2: Option<f64>,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    #[arg(long)]
    b_n: Option<f64>,
    #[arg(long)]
    b_n_prime: Option<f64>,
    #[arg(long)]
    l_groups: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    /// iid | comb | homsum
    model: String,
    /// Summand family for iid: rademacher (default) or lattice via --points.
    #[arg(long, default_value = "rademacher")]
    dist: String,
    /// Lattice points "v:p,v:p,..." (standardized automatically).
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Rows of c for comb: "1,-1;-1,1".
    #[arg(long)]
    c: Option<String>,
    /// Entries for homsum: "i,j,...:value;...".
    #[arg(long)]
    entries: Option<String>,
    #[arg(long)]
    q: Option<usize>,
    /// Optional comma-separated x grid for exact tail ratios.
    #[arg(long)]
    x: Option<String>,
}

#[derive(Args)]
struct WassersteinArgs {
    /// One file: sample vs N(0,1). Two files: empirical vs empirical.
    files: Vec<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// sorted | assignment | sinkhorn (multi-d files need assignment/sinkhorn).
    #[arg(long, default_value = "sorted")]
    method: String,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 20000)]
    max_iter: u64,
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            std::process::exit(2);
        }
    }
    let code = dispatch(&cli);
    std::process::exit(code);
}

fn dispatch(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run { config } => {
            match runner::run_config_file(config, cli.seed, cli.reps, cli.out.as_deref()) {
                Ok(artifacts) => {
                    print!("{}", artifacts.summary);
                    println!("artifacts written to {}", artifacts.dir.display());
                    artifacts.exit_code
                }
                Err(e) => {
                    eprintln!("error: {}", e.message());
                    e.exit_code()
                }
            }
        }
        Command::Verify { filter } => {
            let results = verify::run_suite(filter.as_deref());
            let mut failures = 0;
            for r in &results {
                if r.passed {
                    println!("PASS {}", r.name);
                } else {
                    println!("FAIL {} - {}", r.name, r.detail);
                    failures += 1;
                }
            }
            println!("{} checks, {failures} failures", results.len());
            if failures > 0 {
                1
            } else {
                0
            }
        }
        Command::Bound(args) => match run_bound(args, cli.out.as_deref()) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        Command::Oracle(args) => match run_oracle(args, cli.out.as_deref()) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        Command::Wasserstein(args) => match run_wasserstein(args) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
    }
}

fn need<T: Copy>(v: Option<T>, name: &str) -> Result<T, RunError> {
    v.ok_or_else(|| RunError::Validation(format!("missing --{name}")))
}

fn parse_grid(s: &str) -> Result<Vec<f64>, RunError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| RunError::Validation(format!("bad grid value `{t}`: {e}")))
        })
        .collect()
}

fn run_bound(args: &BoundArgs, out: Option<&str>) -> Result<(), RunError> {
    use wassmd::bounds::Application;
    let app = match args.application.as_str() {
        "iid" => Application::Iid {
            n: need(args.n, "n")?,
            b: need(args.b, "b")?,
        },
        "comb" => Application::Comb {
            n: need(args.n, "n")?,
            b: need(args.b, "b")?,
            bn2: need(args.bn2, "bn2")?,
        },
        "dejong" => Application::Dejong {
            q: need(args.q, "q")?,
            kappa4_abs: need(args.kappa4_abs, "kappa4-abs")?,
            m4_max: need(args.m4_max, "m4-max")?,
            influence: need(args.influence, "influence")?,
            k_psi2: need(args.k_psi2, "k-psi2")?,
        },
        "qf" => Application::Qf {
            op_norm_f: need(args.op_norm_f, "op-norm-f")?,
            k_bound: need(args.k_bound, "k-bound")?,
        },
        "wiener_simple" => Application::WienerSimple {
            hs_norm_f2: need(args.hs_norm_f2, "hs-norm-f2")?,
        },
        "chi" => Application::Chi {
            n: need(args.n, "n")?,
            d: need(args.d, "d")?,
            b: need(args.b, "b")?,
        },
        "mdep" => Application::Mdep {
            n: need(args.n, "n")?,
            m: need(args.m, "m")?,
            b: need(args.b, "b")?,
        },
        "local_bounded" => Application::LocalBounded {
            n: need(args.n, "n")?,
            d: args.d.unwrap_or(1),
            theta1: need(args.theta1, "theta1")?,
            theta2: need(args.theta2, "theta2")?,
            b_n: need(args.b_n, "b-n")?,
            b_n_prime: need(args.b_n_prime, "b-n-prime")?,
        },
        "local_unbounded" => Application::LocalUnbounded {
            n: need(args.n, "n")?,
            d: args.d.unwrap_or(1),
            l_groups: need(args.l_groups, "l-groups")?,
            theta1: need(args.theta1, "theta1")?,
            theta2: need(args.theta2, "theta2")?,
            b: need(args.b, "b")?,
        },
        other => {
            return Err(RunError::Validation(format!("unknown application `{other}`")));
        }
    };
    let ad = wassmd::bounds::app_delta(&app).map_err(lift)?;
    println!(
        "delta = {}, alpha = {}, p0 = {}, x-range cap = {}",
        cell_f64(ad.delta),
        ad.alpha,
        cell_f64(ad.p0),
        cell_f64(ad.range_max_x)
    );
    for (k, v) in &ad.aux {
        println!("aux {k} = {}", cell_f64(*v));
    }
    let grid = parse_grid(&args.x)?;
    let mut csv = Csv::new(&["x", "shape", "feasible"]);
    for &x in &grid {
        let report = ad.translate(x).map_err(lift)?;
        println!(
            "x = {x}: shape = {}, feasible = {}{}",
            cell_f64(report.shape),
            report.feasible,
            if report.feasible {
                String::new()
            } else {
                format!(" ({})", report.violated_conditions.join("; "))
            }
        );
        csv.row(&[cell_f64(x), cell_f64(report.shape), cell_bool(report.feasible)]);
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(PathBuf::from(dir).join("bound.csv"), csv.into_string()))
            .map_err(|e| RunError::Validation(format!("cannot write bound.csv: {e}")))?;
    }
    Ok(())
}

fn lift(e: wassmd::Error) -> RunError {
    if e.is_validation() {
        RunError::Validation(e.to_string())
    } else {
        RunError::Capability(e.to_string())
    }
}

fn parse_lattice(s: &str) -> Result<Vec<(f64, f64)>, RunError> {
    s.split(',')
        .map(|pair| {
            let (v, p) = pair
                .split_once(':')
                .ok_or_else(|| RunError::Validation(format!("bad lattice point `{pair}`, want v:p")))?;
            let v: f64 = v.trim().parse().map_err(|e| RunError::Validation(format!("bad value: {e}")))?;
            let p: f64 = p.trim().parse().map_err(|e| RunError::Validation(format!("bad prob: {e}")))?;
            Ok((v, p))
        })
        .collect()
}

fn parse_matrix(s: &str) -> Result<nalgebra::DMatrix<f64>, RunError> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| RunError::Validation(format!("bad matrix entry `{t}`: {e}")))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(RunError::Validation("matrix must be square".into()));
    }
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

fn run_oracle(args: &OracleArgs, out: Option<&str>) -> Result<(), RunError> {
    use wassmd::dist::DistSpec;
    use wassmd::models::Model;
    use wassmd::oracles::{convolve_iid_pmf, enumerate_comb, enumerate_homsum};

    let pmf = match args.model.as_str() {
        "iid" => {
            let n = need(args.n, "n")?;
            let dist = match args.dist.as_str() {
                "rademacher" => DistSpec::rademacher(),
                "lattice" => {
                    let pts = parse_lattice(
                        args.points
                            .as_deref()
                            .ok_or_else(|| RunError::Validation("lattice needs --points".into()))?,
                    )?;
                    DistSpec::lattice_standardized(&pts).map_err(lift)?
                }
                other => {
                    return Err(RunError::Capability(format!(
                        "no exact oracle for summand family `{other}`"
                    )))
                }
            };
            convolve_iid_pmf(&dist, n).map_err(lift)?
        }
        "comb" => {
            let c = parse_matrix(
                args.c
                    .as_deref()
                    .ok_or_else(|| RunError::Validation("comb needs --c".into()))?,
            )?;
            enumerate_comb(&c).map_err(lift)?
        }
        "homsum" => {
            let q = need(args.q, "q")?;
            let n = need(args.n, "n")?;
            let text = args
                .entries
                .as_deref()
                .ok_or_else(|| RunError::Validation("homsum needs --entries".into()))?;
            let entries: Vec<(Vec<usize>, f64)> = text
                .split(';')
                .map(|e| {
                    let (idx, v) = e
                        .split_once(':')
                        .ok_or_else(|| RunError::Validation(format!("bad entry `{e}`, want i,j:value")))?;
                    let indices: Vec<usize> = idx
                        .split(',')
                        .map(|t| {
                            t.trim()
                                .parse::<usize>()
                                .map_err(|er| RunError::Validation(format!("bad index: {er}")))
                        })
                        .collect::<Result<_, _>>()?;
                    let value: f64 = v
                        .trim()
                        .parse()
                        .map_err(|er| RunError::Validation(format!("bad value: {er}")))?;
                    Ok((indices, value))
                })
                .collect::<Result<_, RunError>>()?;
            let model = Model::hom_sum(q, n, entries, DistSpec::rademacher()).map_err(lift)?;
            enumerate_homsum(&model).map_err(lift)?
        }
        other => return Err(RunError::Validation(format!("unknown oracle model `{other}`"))),
    };
    println!(
        "{}: {} atoms, mean {:.3e}, variance {:.12}",
        pmf.model_tag(),
        pmf.atoms().len(),
        pmf.mean(),
        pmf.variance()
    );
    if let Some(grid) = &args.x {
        for x in parse_grid(grid)? {
            let r = wassmd::oracles::exact_tail_ratio(&pmf, x, wassmd::oracles::TailReference::Normal)
                .map_err(lift)?;
            println!("x = {x}: P(W>x) = {}, ratio = {}", cell_f64(r.p_w), cell_f64(r.ratio));
        }
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(PathBuf::from(dir).join("pmf.csv"), pmf.to_csv()))
            .map_err(|e| RunError::Validation(format!("cannot write pmf.csv: {e}")))?;
        println!("pmf written to {dir}/pmf.csv");
    }
    Ok(())
}

fn read_samples(path: &PathBuf) -> Result<Vec<Vec<f64>>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| RunError::Validation(format!("{}:{}: bad number `{t}`: {e}", path.display(), ln + 1)))
            })
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(RunError::Validation(format!("{} has no samples", path.display())));
    }
    Ok(rows)
}

fn run_wasserstein(args: &WassersteinArgs) -> Result<(), RunError> {
    match args.files.len() {
        1 => {
            let rows = read_samples(&args.files[0])?;
            if rows.iter().any(|r| r.len() != 1) {
                return Err(RunError::Capability(
                    "sample-vs-normal needs one value per line".into(),
                ));
            }
            let xs: Vec<f64> = rows.into_iter().map(|r| r[0]).collect();
            let r = wp_sample_vs_normal(&xs, args.p).map_err(lift)?;
            println!("W_{} (sample vs N(0,1)) = {}", args.p, cell_f64(r.distance));
        }
        2 => {
            let a = read_samples(&args.files[0])?;
            let b = read_samples(&args.files[1])?;
            let r = match args.method.as_str() {
                "sorted" => {
                    if a.iter().chain(b.iter()).any(|r| r.len() != 1) {
                        return Err(RunError::Capability(
                            "sorted coupling is 1-D; use --method assignment".into(),
                        ));
                    }
                    let xs: Vec<f64> = a.into_iter().map(|r| r[0]).collect();
                    let ys: Vec<f64> = b.into_iter().map(|r| r[0]).collect();
                    wp_empirical_1d(&xs, &ys, args.p).map_err(lift)?
                }
                "assignment" => wp_assignment(
                    &Points::from_rows(&a).map_err(lift)?,
                    &Points::from_rows(&b).map_err(lift)?,
                    args.p,
                )
                .map_err(lift)?,
                "sinkhorn" => wp_sinkhorn(
                    &Points::from_rows(&a).map_err(lift)?,
                    &Points::from_rows(&b).map_err(lift)?,
                    args.p,
                    args.epsilon,
                    args.max_iter,
                )
                .map_err(lift)?,
                other => return Err(RunError::Validation(format!("unknown method `{other}`"))),
            };
            println!(
                "W_{} = {} (plan cost {}, {} iterations{})",
                args.p,
                cell_f64(r.distance),
                cell_f64(r.plan_cost),
                r.iterations,
                if r.converged { "" } else { ", NOT converged" }
            );
        }
        k => {
            return Err(RunError::Validation(format!(
                "wasserstein needs 1 or 2 sample files, got {k}"
            )))
        }
    }
    Ok(())
}
