//! The model zoo: standardized statistics W with exchangeable-pair draws,
//! structural statistics, and exact conditional-moment certificates on small
//! discrete instances (see `exact`).

mod exact;

pub use exact::{exact_pair_conditionals, Certificate};

use crate::dist::{DistSpec, Family};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamDomain};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// One of the supported standardized statistics. All scalar variants have
/// Var(W) = 1 by construction or validation; MultiIid has Var(W) = I_d.
#[derive(Clone, Debug)]
pub enum Model {
    IidSum {
        n: usize,
        dist: DistSpec,
    },
    MultiIid {
        n: usize,
        d: usize,
        dist: DistSpec,
    },
    CombClt {
        c: DMatrix<f64>,
        sigma2: DMatrix<f64>,
        noise: DistSpec,
    },
    /// Multilinear form of order q with symmetric coefficients, stored once
    /// per strictly increasing index tuple (diagonals vanish).
    HomSum {
        q: usize,
        n: usize,
        entries: Vec<(Vec<usize>, f64)>,
        dist: DistSpec,
    },
    /// Quadratic form X^T F X in standard Gaussians, F symmetric with zero
    /// diagonal and 2 ||F||_HS^2 = 1.
    GaussChaos2 {
        f: DMatrix<f64>,
    },
    /// Moving-average window: X_i = sum_k kernel[k] xi_{i+k}; m = kernel.len() - 1.
    MDep {
        n: usize,
        kernel: Vec<f64>,
        dist: DistSpec,
    },
    /// Dependency-graph sums: X_i built from the noises of i and its
    /// neighbors, so the adjacency is exactly the dependence structure.
    GraphDep {
        n: usize,
        adj: Vec<Vec<usize>>,
        dist: DistSpec,
    },
}

fn require_unit_variance(dist: &DistSpec, what: &str) -> Result<()> {
    if (dist.variance() - 1.0).abs() > 1e-10 {
        return Err(Error::Validation(format!(
            "{what} needs a unit-variance summand, got variance {}",
            dist.variance()
        )));
    }
    Ok(())
}

impl Model {
    pub fn iid_sum(n: usize, dist: DistSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("n must be >= 1".into()));
        }
        require_unit_variance(&dist, "IidSum")?;
        Ok(Model::IidSum { n, dist })
    }

    pub fn multi_iid(n: usize, d: usize, dist: DistSpec) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Validation("n and d must be >= 1".into()));
        }
        require_unit_variance(&dist, "MultiIid")?;
        Ok(Model::MultiIid { n, d, dist })
    }

    pub fn comb_clt(c: DMatrix<f64>, sigma2: DMatrix<f64>, noise: DistSpec) -> Result<Self> {
        let n = c.nrows();
        if n < 2 || c.ncols() != n || sigma2.nrows() != n || sigma2.ncols() != n {
            return Err(Error::Validation("c and sigma2 must be square n x n, n >= 2".into()));
        }
        check_centered(&c)?;
        if sigma2.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(Error::Validation("sigma2 entries must be nonnegative".into()));
        }
        require_unit_variance(&noise, "CombClt noise")?;
        Ok(Model::CombClt { c, sigma2, noise })
    }

    /// Deterministic array: all sigma^2 = 0.
    pub fn comb_clt_deterministic(c: DMatrix<f64>) -> Result<Self> {
        let n = c.nrows();
        Model::comb_clt(c, DMatrix::zeros(n, n), DistSpec::gaussian())
    }

    /// Entries are (strictly increasing index tuple, coefficient); the
    /// symmetric tensor value on every permutation of the tuple.
    pub fn hom_sum(q: usize, n: usize, entries: Vec<(Vec<usize>, f64)>, dist: DistSpec) -> Result<Self> {
        if q < 2 {
            return Err(Error::Validation("q must be >= 2".into()));
        }
        if entries.is_empty() {
            return Err(Error::Validation("tensor must have at least one entry".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (idx, v) in &entries {
            if idx.len() != q {
                return Err(Error::Validation(format!("index tuple {idx:?} is not of length {q}")));
            }
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(format!(
                    "index tuple {idx:?} must be strictly increasing (vanishing diagonals)"
                )));
            }
            if idx.iter().any(|&i| i >= n) {
                return Err(Error::Validation(format!("index out of range in {idx:?}")));
            }
            if !v.is_finite() {
                return Err(Error::Validation("non-finite coefficient".into()));
            }
            if !seen.insert(idx.clone()) {
                return Err(Error::Validation(format!("duplicate index tuple {idx:?}")));
            }
        }
        require_unit_variance(&dist, "HomSum")?;
        let qf = factorial(q) as f64;
        let var: f64 = entries.iter().map(|(_, v)| qf * qf * v * v).sum();
        if (var - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "q! ||f||^2 = {var}, expected 1 (unit variance)"
            )));
        }
        Ok(Model::HomSum { q, n, entries, dist })
    }

    pub fn gauss_chaos2(f: DMatrix<f64>) -> Result<Self> {
        let n = f.nrows();
        if n == 0 || f.ncols() != n {
            return Err(Error::Validation("F must be square and nonempty".into()));
        }
        let scale = f.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
        for i in 0..n {
            if f[(i, i)].abs() > 1e-12 * scale {
                return Err(Error::Validation("F must have zero diagonal".into()));
            }
            for j in 0..i {
                if (f[(i, j)] - f[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Validation("F must be symmetric".into()));
                }
            }
        }
        let hs2: f64 = f.iter().map(|&x| x * x).sum();
        if (2.0 * hs2 - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "2 ||F||_HS^2 = {}, expected 1",
                2.0 * hs2
            )));
        }
        Ok(Model::GaussChaos2 { f })
    }

    pub fn m_dep(n: usize, kernel: Vec<f64>, dist: DistSpec) -> Result<Self> {
        if n == 0 || kernel.is_empty() {
            return Err(Error::Validation("n >= 1 and a nonempty kernel required".into()));
        }
        if kernel.iter().any(|a| !a.is_finite()) || kernel.iter().all(|&a| a == 0.0) {
            return Err(Error::Validation("kernel must be finite and not all zero".into()));
        }
        require_unit_variance(&dist, "MDep")?;
        Ok(Model::MDep { n, kernel, dist })
    }

    pub fn graph_dep(n: usize, edges: &[(usize, usize)], dist: DistSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("n must be >= 1".into()));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::Validation(format!("bad edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        require_unit_variance(&dist, "GraphDep")?;
        Ok(Model::GraphDep { n, adj, dist })
    }

    /// Dimension of W.
    pub fn dim(&self) -> usize {
        match self {
            Model::MultiIid { d, .. } => *d,
            _ => 1,
        }
    }

    /// The model's own size parameter n.
    pub fn size_n(&self) -> usize {
        match self {
            Model::IidSum { n, .. }
            | Model::MultiIid { n, .. }
            | Model::HomSum { n, .. }
            | Model::MDep { n, .. }
            | Model::GraphDep { n, .. } => *n,
            Model::CombClt { c, .. } => c.nrows(),
            Model::GaussChaos2 { f } => f.nrows(),
        }
    }

    /// m-dependence range (kernel length minus one).
    pub fn m_range(&self) -> Option<usize> {
        match self {
            Model::MDep { kernel, .. } => Some(kernel.len() - 1),
            _ => None,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Model::IidSum { n, .. } => format!("iid_sum(n={n})"),
            Model::MultiIid { n, d, .. } => format!("multi_iid(n={n}, d={d})"),
            Model::CombClt { c, .. } => format!("comb_clt(n={})", c.nrows()),
            Model::HomSum { q, n, .. } => format!("hom_sum(q={q}, n={n})"),
            Model::GaussChaos2 { f } => format!("gauss_chaos2(n={})", f.nrows()),
            Model::MDep { n, kernel, .. } => format!("m_dep(n={n}, m={})", kernel.len() - 1),
            Model::GraphDep { n, .. } => format!("graph_dep(n={n})"),
        }
    }
}

fn check_centered(c: &DMatrix<f64>) -> Result<()> {
    let n = c.nrows();
    for i in 0..n {
        let r = c.row(i).sum() / n as f64;
        if r.abs() > 1e-10 {
            return Err(Error::Validation(format!("row {i} of c has mean {r}, expected 0")));
        }
    }
    for j in 0..n {
        let s = c.column(j).sum() / n as f64;
        if s.abs() > 1e-10 {
            return Err(Error::Validation(format!("column {j} of c has mean {s}, expected 0")));
        }
    }
    Ok(())
}

pub(crate) fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Monte Carlo draws of W: `reps` rows by `dim` columns, row-major.
#[derive(Clone, Debug)]
pub struct Sample {
    pub data: Vec<f64>,
    pub reps: usize,
    pub d: usize,
    pub seed: u64,
    pub model_tag: String,
}

impl Sample {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.d..(r + 1) * self.d]
    }

    /// Scalar view; panics when d > 1.
    pub fn values(&self) -> &[f64] {
        assert_eq!(self.d, 1, "values() needs a scalar sample");
        &self.data
    }

    /// Euclidean norms per replication.
    pub fn norms(&self) -> Vec<f64> {
        (0..self.reps)
            .map(|r| self.row(r).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }
}

/// Precomputed sampler context, built once per model.
enum PreparedSampler<'a> {
    Iid {
        n: usize,
        dist: &'a DistSpec,
    },
    MultiIid {
        n: usize,
        d: usize,
        dist: &'a DistSpec,
    },
    Comb {
        c: &'a DMatrix<f64>,
        sigma: DMatrix<f64>,
        noise: &'a DistSpec,
        bn: f64,
        deterministic: bool,
    },
    Hom {
        qfact: f64,
        entries: &'a [(Vec<usize>, f64)],
        n: usize,
        dist: &'a DistSpec,
    },
    Chaos {
        eigvals: Vec<f64>,
    },
    Linear {
        // MDep and GraphDep reduce to W = sum_t w_t xi_t / sd
        weights: Vec<f64>,
        sd: f64,
        dist: &'a DistSpec,
    },
}

impl<'a> PreparedSampler<'a> {
    fn new(model: &'a Model) -> Result<Self> {
        Ok(match model {
            Model::IidSum { n, dist } => PreparedSampler::Iid { n: *n, dist },
            Model::MultiIid { n, d, dist } => PreparedSampler::MultiIid { n: *n, d: *d, dist },
            Model::CombClt { c, sigma2, noise } => {
                let bn2 = comb_variance(c, sigma2)?;
                if bn2 <= 0.0 {
                    return Err(Error::Degenerate("CombClt with B_n^2 = 0".into()));
                }
                let deterministic = sigma2.iter().all(|&s| s == 0.0);
                PreparedSampler::Comb {
                    c,
                    sigma: sigma2.map(|s| s.sqrt()),
                    noise,
                    bn: bn2.sqrt(),
                    deterministic,
                }
            }
            Model::HomSum { q, n, entries, dist } => PreparedSampler::Hom {
                qfact: factorial(*q) as f64,
                entries,
                n: *n,
                dist,
            },
            Model::GaussChaos2 { f } => {
                let eig = f.clone().symmetric_eigen();
                PreparedSampler::Chaos {
                    eigvals: eig.eigenvalues.iter().copied().collect(),
                }
            }
            Model::MDep { n, kernel, dist } => {
                let m = kernel.len() - 1;
                let mut weights = vec![0.0; n + m];
                for i in 0..*n {
                    for (k, &a) in kernel.iter().enumerate() {
                        weights[i + k] += a;
                    }
                }
                let var: f64 = weights.iter().map(|w| w * w).sum();
                if var <= 0.0 {
                    return Err(Error::Degenerate("MDep with Var(S) = 0".into()));
                }
                PreparedSampler::Linear {
                    weights,
                    sd: var.sqrt(),
                    dist,
                }
            }
            Model::GraphDep { n, adj, dist } => {
                let mut weights = vec![0.0; *n];
                for i in 0..*n {
                    let size = (adj[i].len() + 1) as f64;
                    let w = 1.0 / size.sqrt();
                    weights[i] += w;
                    for &j in &adj[i] {
                        weights[j] += w;
                    }
                }
                let var: f64 = weights.iter().map(|w| w * w).sum();
                if var <= 0.0 {
                    return Err(Error::Degenerate("GraphDep with Var(S) = 0".into()));
                }
                PreparedSampler::Linear {
                    weights,
                    sd: var.sqrt(),
                    dist,
                }
            }
        })
    }

    fn dim(&self) -> usize {
        match self {
            PreparedSampler::MultiIid { d, .. } => *d,
            _ => 1,
        }
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            PreparedSampler::Iid { n, dist } => {
                out[0] = dist.sample_sum(*n, rng) / (*n as f64).sqrt();
            }
            PreparedSampler::MultiIid { n, d, dist } => {
                let scale = 1.0 / (*n as f64).sqrt();
                for k in 0..*d {
                    out[k] = dist.sample_sum(*n, rng) * scale;
                }
            }
            PreparedSampler::Comb {
                c,
                sigma,
                noise,
                bn,
                deterministic,
            } => {
                let n = c.nrows();
                let perm = random_permutation(n, rng);
                let mut s = 0.0;
                for (i, &pi) in perm.iter().enumerate() {
                    s += c[(i, pi)];
                    if !deterministic {
                        let sg = sigma[(i, pi)];
                        if sg > 0.0 {
                            s += sg * noise.sample(rng);
                        }
                    }
                }
                out[0] = s / bn;
            }
            PreparedSampler::Hom {
                qfact,
                entries,
                n,
                dist,
            } => {
                let xs: Vec<f64> = (0..*n).map(|_| dist.sample(rng)).collect();
                out[0] = hom_eval(*qfact, entries, &xs);
            }
            PreparedSampler::Chaos { eigvals } => {
                let mut w = 0.0;
                for &l in eigvals {
                    let z: f64 = StandardNormal.sample(rng);
                    w += l * z * z;
                }
                out[0] = w;
            }
            PreparedSampler::Linear { weights, sd, dist } => {
                let mut s = 0.0;
                for &w in weights {
                    s += w * dist.sample(rng);
                }
                out[0] = s / sd;
            }
        }
    }
}

fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

pub(crate) fn hom_eval(qfact: f64, entries: &[(Vec<usize>, f64)], xs: &[f64]) -> f64 {
    let mut w = 0.0;
    for (idx, v) in entries {
        let mut prod = qfact * v;
        for &i in idx {
            prod *= xs[i];
        }
        w += prod;
    }
    w
}

/// `reps` i.i.d. realizations of W, deterministic given the seed and
/// independent of the rayon thread count (per-replication streams).
pub fn sample_w(model: &Model, reps: usize, seed: u64) -> Result<Sample> {
    let sampler = PreparedSampler::new(model)?;
    let d = sampler.dim();
    let mut data = vec![0.0; reps * d];
    data.par_chunks_mut(d).enumerate().for_each(|(r, out)| {
        let mut rng = stream_rng(seed, StreamDomain::Main, 0, r as u64);
        sampler.sample_into(&mut rng, out);
    });
    Ok(Sample {
        data,
        reps,
        d,
        seed,
        model_tag: model.tag(),
    })
}

/// One draw of a scalar model. Prepares the sampler context per call; hot
/// loops should go through `sample_w` instead.
pub fn sample_single<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> Result<f64> {
    let sampler = PreparedSampler::new(model)?;
    if sampler.dim() != 1 {
        return Err(Error::Unsupported("sample_single needs a scalar model".into()));
    }
    let mut buf = [0.0];
    sampler.sample_into(rng, &mut buf);
    Ok(buf[0])
}

/// Auxiliary record of how a pair draw was constructed.
#[derive(Clone, Debug)]
pub enum PairAux {
    ResampledIndex(usize),
    SwappedPair(usize, usize),
}

/// One draw of an exchangeable pair (W, W').
#[derive(Clone, Debug)]
pub struct PairDraw {
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    pub d_increment: Vec<f64>,
    pub aux: PairAux,
}

/// Draw (W, W') once: resample a uniform coordinate (IidSum, MultiIid,
/// HomSum) or transpose the permutation at two uniform indices (CombClt).
pub fn draw_pair(model: &Model, seed: u64) -> Result<PairDraw> {
    let mut rng = stream_rng(seed, StreamDomain::Main, 1, 0);
    match model {
        Model::IidSum { n, dist } => {
            let n = *n;
            let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let scale = 1.0 / (n as f64).sqrt();
            let w = xs.iter().sum::<f64>() * scale;
            let i = rng.gen_range(0..n);
            let xi_new = dist.sample(&mut rng);
            let wp = w + (xi_new - xs[i]) * scale;
            Ok(PairDraw {
                w: vec![w],
                w_prime: vec![wp],
                d_increment: vec![wp - w],
                aux: PairAux::ResampledIndex(i),
            })
        }
        Model::MultiIid { n, d, dist } => {
            let n = *n;
            let d = *d;
            let scale = 1.0 / (n as f64).sqrt();
            let xs: Vec<f64> = (0..n * d).map(|_| dist.sample(&mut rng)).collect();
            let mut w = vec![0.0; d];
            for i in 0..n {
                for k in 0..d {
                    w[k] += xs[i * d + k] * scale;
                }
            }
            let i = rng.gen_range(0..n);
            let mut wp = w.clone();
            for k in 0..d {
                let new = dist.sample(&mut rng);
                wp[k] += (new - xs[i * d + k]) * scale;
            }
            let inc: Vec<f64> = wp.iter().zip(&w).map(|(a, b)| a - b).collect();
            Ok(PairDraw {
                w,
                w_prime: wp,
                d_increment: inc,
                aux: PairAux::ResampledIndex(i),
            })
        }
        Model::CombClt { c, sigma2, noise } => {
            let n = c.nrows();
            let bn2 = comb_variance(c, sigma2)?;
            if bn2 <= 0.0 {
                return Err(Error::Degenerate("CombClt with B_n^2 = 0".into()));
            }
            let bn = bn2.sqrt();
            let perm = random_permutation(n, &mut rng);
            // lazily realize only the array entries the pair touches
            let mut cache: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
            let mut entry = |i: usize, j: usize, rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
                *cache.entry((i, j)).or_insert_with(|| {
                    let sg = sigma2[(i, j)].sqrt();
                    c[(i, j)] + if sg > 0.0 { sg * noise.sample(rng) } else { 0.0 }
                })
            };
            let mut s = 0.0;
            for (i, &pi) in perm.iter().enumerate() {
                s += entry(i, pi, &mut rng);
            }
            let w = s / bn;
            let i = rng.gen_range(0..n);
            let j = {
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                j
            };
            let d_inc = (-entry(i, perm[i], &mut rng) - entry(j, perm[j], &mut rng)
                + entry(i, perm[j], &mut rng)
                + entry(j, perm[i], &mut rng))
                / bn;
            Ok(PairDraw {
                w: vec![w],
                w_prime: vec![w + d_inc],
                d_increment: vec![d_inc],
                aux: PairAux::SwappedPair(i, j),
            })
        }
        Model::HomSum { q, n, entries, dist } => {
            let qfact = factorial(*q) as f64;
            let mut xs: Vec<f64> = (0..*n).map(|_| dist.sample(&mut rng)).collect();
            let w = hom_eval(qfact, entries, &xs);
            let i = rng.gen_range(0..*n);
            xs[i] = dist.sample(&mut rng);
            let wp = hom_eval(qfact, entries, &xs);
            Ok(PairDraw {
                w: vec![w],
                w_prime: vec![wp],
                d_increment: vec![wp - w],
                aux: PairAux::ResampledIndex(i),
            })
        }
        _ => Err(Error::Unsupported(format!(
            "no exchangeable-pair construction for {}",
            model.tag()
        ))),
    }
}

/// Var(S) of the permutation statistic: sum c^2 / (n-1) + sum sigma^2 / n.
pub fn comb_variance(c: &DMatrix<f64>, sigma2: &DMatrix<f64>) -> Result<f64> {
    let n = c.nrows();
    if n < 2 || c.ncols() != n || sigma2.nrows() != n || sigma2.ncols() != n {
        return Err(Error::Validation("c and sigma2 must be square n x n, n >= 2".into()));
    }
    check_centered(c)?;
    let sc: f64 = c.iter().map(|&x| x * x).sum();
    let ss: f64 = sigma2.iter().sum();
    Ok(sc / (n as f64 - 1.0) + ss / n as f64)
}

/// Maximal influence of a homogeneous-sum tensor:
/// max_i sum over ordered tuples starting at i of f^2, i.e.
/// (q-1)! max_i sum over entries containing i of v^2.
pub fn maximal_influence(model: &Model) -> Result<f64> {
    match model {
        Model::HomSum { q, n, entries, .. } => {
            let qm1 = factorial(q - 1) as f64;
            let mut per_index = vec![0.0f64; *n];
            for (idx, v) in entries {
                for &i in idx {
                    per_index[i] += v * v;
                }
            }
            Ok(per_index.iter().fold(0.0f64, |m, &x| m.max(x)) * qm1)
        }
        _ => Err(Error::Unsupported("maximal_influence needs a HomSum model".into())),
    }
}

/// Norms of F and of its square (the order-2 contraction).
#[derive(Clone, Debug)]
pub struct ContractionQ2 {
    pub f_squared: DMatrix<f64>,
    pub op_norm_f: f64,
    pub hs_norm_f: f64,
    pub op_norm_f2: f64,
    pub hs_norm_f2: f64,
}

/// F^2 with operator (largest |eigenvalue|) and Hilbert-Schmidt norms.
/// Accepts any symmetric F (diagonals allowed here).
pub fn contraction_q2(f: &DMatrix<f64>) -> Result<ContractionQ2> {
    let n = f.nrows();
    if f.ncols() != n || n == 0 {
        return Err(Error::Validation("F must be square and nonempty".into()));
    }
    let scale = f.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (f[(i, j)] - f[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Validation("F must be symmetric".into()));
            }
        }
    }
    let eig = f.clone().symmetric_eigen();
    let op_f = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let op_f2 = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l * l));
    let f2 = f * f;
    let hs_f = f.iter().map(|&x| x * x).sum::<f64>().sqrt();
    let hs_f2 = f2.iter().map(|&x| x * x).sum::<f64>().sqrt();
    Ok(ContractionQ2 {
        f_squared: f2,
        op_norm_f: op_f,
        hs_norm_f: hs_f,
        op_norm_f2: op_f2,
        hs_norm_f2: hs_f2,
    })
}

/// Fourth cumulant E W^4 - 3, exact where the model admits it.
#[derive(Clone, Copy, Debug)]
pub struct FourthCumulant {
    pub kappa4: f64,
    pub se: f64,
    pub exact: bool,
}

/// kappa_4(W). GaussChaos2: exact 48 tr(F^4). HomSum with Rademacher
/// summands and n <= 20: exact sign enumeration. Otherwise Monte Carlo with
/// a jackknife standard error.
pub fn fourth_cumulant(model: &Model, reps: usize, seed: u64) -> Result<FourthCumulant> {
    match model {
        Model::GaussChaos2 { f } => {
            let f2 = f * f;
            let tr_f4: f64 = f2.iter().map(|&x| x * x).sum(); // ||F^2||_HS^2
            Ok(FourthCumulant {
                kappa4: 48.0 * tr_f4,
                se: 0.0,
                exact: true,
            })
        }
        Model::HomSum { n, dist, .. } if *n <= 20 && matches!(dist.family(), Family::Rademacher) => {
            let pmf = crate::oracles::enumerate_homsum(model)?;
            let m2 = pmf.moment(2);
            let m4 = pmf.moment(4);
            Ok(FourthCumulant {
                kappa4: m4 - 3.0 * m2 * m2,
                se: 0.0,
                exact: true,
            })
        }
        _ => {
            if model.dim() != 1 {
                return Err(Error::Unsupported(
                    "fourth_cumulant needs a scalar model".into(),
                ));
            }
            let sample = sample_w(model, reps, seed)?;
            let fourth: Vec<f64> = sample.values().iter().map(|w| w * w * w * w).collect();
            let mean4 = fourth.iter().sum::<f64>() / reps as f64;
            Ok(FourthCumulant {
                kappa4: mean4 - 3.0,
                se: jackknife_se_of_mean(&fourth),
                exact: false,
            })
        }
    }
}

/// Jackknife standard error of a sample mean (equals s / sqrt(n) with the
/// n-1 normalization; kept in jackknife form for clarity of intent).
pub(crate) fn jackknife_se_of_mean(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n * (n - 1.0))).sqrt()
}

/// Local-dependence structure statistics.
#[derive(Clone, Debug)]
pub struct DependencyStats {
    pub theta1: usize,
    pub theta2: usize,
    pub group_count: usize,
    pub neighborhoods: Vec<Vec<usize>>,
    pub groups: Vec<Vec<usize>>,
}

/// theta_1 = max |A_i|, theta_2 = max |B_ij| with
/// B_ij = {(k,l) : l in A_k, k or l in A_i union A_j}, and an independence
/// partition: L = m+1 groups for MDep, greedy coloring for GraphDep.
pub fn dependency_stats(model: &Model) -> Result<DependencyStats> {
    let (n, neighborhoods, groups) = match model {
        Model::MDep { n, kernel, .. } => {
            let n = *n;
            let m = kernel.len() - 1;
            let nb: Vec<Vec<usize>> = (0..n)
                .map(|i| (i.saturating_sub(m)..=(i + m).min(n - 1)).collect())
                .collect();
            let l = (m + 1).min(n);
            let mut groups = vec![Vec::new(); l];
            for i in 0..n {
                groups[i % (m + 1).min(n)].push(i);
            }
            (n, nb, groups)
        }
        Model::GraphDep { n, adj, .. } => {
            let n = *n;
            let nb: Vec<Vec<usize>> = (0..n)
                .map(|i| {
                    let mut v = adj[i].clone();
                    v.push(i);
                    v.sort_unstable();
                    v
                })
                .collect();
            // greedy coloring in index order; color count <= deg* + 1
            let mut color = vec![usize::MAX; n];
            let mut count = 0;
            for i in 0..n {
                let used: std::collections::BTreeSet<usize> =
                    adj[i].iter().filter(|&&j| j < i).map(|&j| color[j]).collect();
                let mut c = 0;
                while used.contains(&c) {
                    c += 1;
                }
                color[i] = c;
                count = count.max(c + 1);
            }
            let mut groups = vec![Vec::new(); count];
            for i in 0..n {
                groups[color[i]].push(i);
            }
            (n, nb, groups)
        }
        _ => {
            return Err(Error::Unsupported(
                "dependency_stats needs an MDep or GraphDep model".into(),
            ))
        }
    };
    let theta1 = neighborhoods.iter().map(|a| a.len()).max().unwrap_or(0);
    let sizes: Vec<usize> = neighborhoods.iter().map(|a| a.len()).collect();
    let mut theta2 = 0usize;
    let mut union = Vec::new();
    let mut in_union = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if n > 1 && i == j {
                continue;
            }
            union.clear();
            for &x in neighborhoods[i].iter().chain(neighborhoods[j].iter()) {
                if !in_union[x] {
                    in_union[x] = true;
                    union.push(x);
                }
            }
            // |B_ij| = sum_{k in A_ij} |A_k| + sum_{k not in A_ij} |A_k cap A_ij|
            let mut count = 0usize;
            for (k, nb_k) in neighborhoods.iter().enumerate() {
                if in_union[k] {
                    count += sizes[k];
                } else {
                    count += nb_k.iter().filter(|&&l| in_union[l]).count();
                }
            }
            theta2 = theta2.max(count);
            for &x in &union {
                in_union[x] = false;
            }
        }
    }
    Ok(DependencyStats {
        theta1,
        theta2,
        group_count: groups.len(),
        neighborhoods,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistSpec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn comb_variance_examples() {
        // c = 0, sigma^2 = 1 everywhere: B_n^2 = n^2/n = n
        for n in [2usize, 5, 9] {
            let c = DMatrix::zeros(n, n);
            let s2 = DMatrix::from_element(n, n, 1.0);
            assert!(close(comb_variance(&c, &s2).unwrap(), n as f64, 1e-12));
        }
        let c = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(close(comb_variance(&c, &DMatrix::zeros(2, 2)).unwrap(), 4.0, 1e-15));
    }

    #[test]
    fn comb_variance_rejects_uncentered() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        assert!(comb_variance(&c, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn contraction_submultiplicative_and_edge_cases() {
        let mut rng = crate::rng::rep_rng(12, 0);
        use rand::Rng;
        for _ in 0..10 {
            let n = 6;
            let mut f = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = rng.gen::<f64>() - 0.5;
                    f[(i, j)] = v;
                    f[(j, i)] = v;
                }
            }
            let c = contraction_q2(&f).unwrap();
            assert!(c.hs_norm_f2 <= c.op_norm_f * c.hs_norm_f + 1e-10);
            assert!(c.op_norm_f2 <= c.op_norm_f * c.op_norm_f + 1e-10);
        }
        let zero = contraction_q2(&DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(zero.op_norm_f, 0.0);
        assert_eq!(zero.hs_norm_f2, 0.0);
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(contraction_q2(&asym).is_err());
    }

    #[test]
    fn fourth_cumulant_gaussian_sum_near_zero() {
        let model = Model::iid_sum(8, DistSpec::gaussian()).unwrap();
        let k = fourth_cumulant(&model, 400_000, 33).unwrap();
        assert!(!k.exact);
        assert!(k.kappa4.abs() <= 3.0 * k.se, "kappa4 {} se {}", k.kappa4, k.se);
    }

    #[test]
    fn hom_sum_validation() {
        let d = DistSpec::rademacher();
        // diagonal entry
        assert!(Model::hom_sum(2, 4, vec![(vec![1, 1], 0.5)], d.clone()).is_err());
        // non-increasing tuple
        assert!(Model::hom_sum(2, 4, vec![(vec![2, 1], 0.5)], d.clone()).is_err());
        // duplicate tuples
        let v = 1.0 / 8.0f64.sqrt();
        assert!(Model::hom_sum(2, 4, vec![(vec![0, 1], v), (vec![0, 1], v)], d.clone()).is_err());
        // wrong normalization
        assert!(Model::hom_sum(2, 4, vec![(vec![0, 1], 1.0)], d.clone()).is_err());
        // index out of range
        assert!(Model::hom_sum(2, 4, vec![(vec![0, 7], v)], d).is_err());
    }

    #[test]
    fn gauss_chaos_validation() {
        let v = 1.0 / 8.0f64.sqrt();
        let mut good = DMatrix::zeros(4, 4);
        good[(0, 1)] = v;
        good[(1, 0)] = v;
        good[(2, 3)] = v;
        good[(3, 2)] = v;
        assert!(Model::gauss_chaos2(good.clone()).is_ok());
        let mut diag = good.clone();
        diag[(0, 0)] = 0.1;
        assert!(Model::gauss_chaos2(diag).is_err());
        let mut asym = good.clone();
        asym[(0, 1)] = 2.0 * v;
        assert!(Model::gauss_chaos2(asym).is_err());
        assert!(Model::gauss_chaos2(good.map(|x| x * 2.0)).is_err());
    }

    #[test]
    fn iid_sum_requires_unit_variance() {
        assert!(Model::iid_sum(4, DistSpec::centered_exponential(2.0).unwrap()).is_err());
        assert!(Model::iid_sum(4, DistSpec::centered_exponential(1.0).unwrap()).is_ok());
        assert!(Model::iid_sum(4, DistSpec::uniform_centered(3.0f64.sqrt()).unwrap()).is_ok());
    }

    #[test]
    fn degenerate_comb_errors_at_sampling() {
        let c = DMatrix::zeros(3, 3);
        let model = Model::comb_clt_deterministic(c).unwrap();
        assert!(matches!(sample_w(&model, 10, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn draw_pair_unsupported_models() {
        let model = Model::m_dep(8, vec![0.6, 0.8], DistSpec::gaussian()).unwrap();
        assert!(matches!(draw_pair(&model, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn multivariate_sample_shape_and_moments() {
        let model = Model::multi_iid(16, 3, DistSpec::laplace_unit_var()).unwrap();
        let reps = 200_000;
        let sample = sample_w(&model, reps, 8).unwrap();
        assert_eq!(sample.d, 3);
        assert_eq!(sample.data.len(), reps * 3);
        for k in 0..3 {
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for r in 0..reps {
                let w = sample.row(r)[k];
                m1 += w;
                m2 += w * w;
            }
            m1 /= reps as f64;
            m2 /= reps as f64;
            assert!(m1.abs() < 0.02, "coordinate {k} mean {m1}");
            assert!((m2 - 1.0).abs() < 0.02, "coordinate {k} second moment {m2}");
        }
    }

    #[test]
    fn mdep_and_graph_samplers_standardized() {
        let mdep = Model::m_dep(50, vec![0.4, 0.3, 0.3], DistSpec::laplace_unit_var()).unwrap();
        let graph = Model::graph_dep(20, &[(0, 1), (1, 2), (5, 6)], DistSpec::rademacher()).unwrap();
        for model in [mdep, graph] {
            let reps = 200_000;
            let sample = sample_w(&model, reps, 21).unwrap();
            let m2: f64 = sample.values().iter().map(|w| w * w).sum::<f64>() / reps as f64;
            assert!((m2 - 1.0).abs() < 0.02, "{}: var {m2}", model.tag());
        }
    }

    #[test]
    fn sample_w_thread_count_invariant() {
        let model = Model::comb_clt_deterministic({
            let c = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
            c
        })
        .unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_w(&model, 10_000, 3).unwrap());
        let eight = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| sample_w(&model, 10_000, 3).unwrap());
        assert_eq!(one.data, eight.data);
    }
}
