//! Closed-form bound shapes with all unknown absolute constants set to 1.
//!
//! Every evaluator returns a `BoundReport`: the shape value, the feasibility
//! flags for the stated range conditions, and the proof-side intermediates
//! (p, epsilon, ...). Infeasibility is reported, never thrown: evaluating a
//! bound outside its certified range is still meaningful as a shape.

use crate::error::{Error, Result};
use crate::models::Certificate;
use crate::special::ln_kappa;
use std::collections::BTreeMap;

/// W_p growth profile: W_p(W, Z) <= A max_r p^{alpha_r} Delta_r for p <= p0.
#[derive(Clone, Debug)]
pub struct BoundProfile {
    pub a: f64,
    /// (alpha_r, delta_r) pairs; nonempty.
    pub terms: Vec<(f64, f64)>,
    pub p0: f64,
}

impl BoundProfile {
    pub fn new(a: f64, terms: Vec<(f64, f64)>, p0: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Validation("profile needs at least one term".into()));
        }
        if !(a > 0.0) || !(p0 >= 1.0) {
            return Err(Error::Validation(format!("need A > 0 and p0 >= 1, got A={a}, p0={p0}")));
        }
        for &(al, de) in &terms {
            if al < 0.0 || !(de > 0.0) {
                return Err(Error::Validation(format!(
                    "need alpha >= 0 and delta > 0, got ({al}, {de})"
                )));
            }
        }
        Ok(BoundProfile { a, terms, p0 })
    }

    pub fn single(a: f64, alpha: f64, delta: f64, p0: f64) -> Result<Self> {
        BoundProfile::new(a, vec![(alpha, delta)], p0)
    }

    /// max_r Delta_r.
    pub fn dbar(&self) -> f64 {
        self.terms.iter().map(|&(_, d)| d).fold(0.0, f64::max)
    }
}

/// A bound shape (absolute constants normalized to 1) with range-condition
/// diagnostics.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub shape: f64,
    pub feasible: bool,
    pub violated_conditions: Vec<String>,
    pub range_max_x: f64,
    pub intermediates: BTreeMap<String, f64>,
    /// Always true: shapes are comparable only up to one fitted constant.
    pub constants_normalized: bool,
}

impl BoundReport {
    fn new(shape: f64, range_max_x: f64, violated: Vec<String>, inter: BTreeMap<String, f64>) -> Self {
        BoundReport {
            shape,
            feasible: violated.is_empty(),
            violated_conditions: violated,
            range_max_x,
            intermediates: inter,
            constants_normalized: true,
        }
    }
}

/// Tail-ratio shape (1+x) { max_r (|log dbar| + x^2)^{alpha_r} Delta_r + dbar }
/// from a W_p growth profile, with the proof's p and epsilon reported.
pub fn t4_translate(profile: &BoundProfile, x: f64) -> BoundReport {
    let dbar = profile.dbar();
    let log_dbar_abs = dbar.ln().abs();
    let shape = (1.0 + x)
        * (profile
            .terms
            .iter()
            .map(|&(al, de)| (log_dbar_abs + x * x).powf(al) * de)
            .fold(0.0, f64::max)
            + dbar);

    let p_proof = (1.0 / dbar).ln() + 0.5 * x * x;
    let eps_proof = profile
        .terms
        .iter()
        .map(|&(al, de)| p_proof.max(0.0).powf(al) * de)
        .fold(0.0, f64::max)
        * profile.a
        * std::f64::consts::E;

    let x_delta_cap = profile
        .terms
        .iter()
        .map(|&(al, de)| de.powf(-1.0 / (2.0 * al + 1.0)))
        .fold(f64::INFINITY, f64::min);
    let range_max_x = profile.p0.sqrt().min(x_delta_cap);

    let mut violated = Vec::new();
    if dbar >= std::f64::consts::E.recip() {
        violated.push(format!("dbar = {dbar} >= 1/e (x <= e regime)"));
    }
    if log_dbar_abs > profile.p0 / 2.0 {
        violated.push(format!("|log dbar| = {log_dbar_abs} exceeds p0/2 = {}", profile.p0 / 2.0));
    }
    if x > profile.p0.sqrt() {
        violated.push(format!("x = {x} exceeds sqrt(p0) = {}", profile.p0.sqrt()));
    }
    if x > x_delta_cap {
        violated.push(format!("x = {x} exceeds delta^(-1/(2 alpha + 1)) = {x_delta_cap}"));
    }

    let mut inter = BTreeMap::new();
    inter.insert("p".into(), p_proof);
    inter.insert("epsilon".into(), eps_proof);
    inter.insert("dbar".into(), dbar);
    inter.insert("p0".into(), profile.p0);
    BoundReport::new(shape, range_max_x, violated, inter)
}

/// Multivariate tail-ratio shape (1+x)(|log delta| + d log d + x^2)^alpha delta
/// for P(|W| > x)/P(|Z| > x), d >= 2.
pub fn multi_md_translate(a: f64, alpha: f64, delta: f64, p0: f64, d: u32, x: f64) -> Result<BoundReport> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("multivariate translation needs d >= 2, got {d}")));
    }
    if !(delta > 0.0) || !(a > 0.0) || alpha < 0.0 {
        return Err(Error::InvalidParameter("need delta > 0, A > 0, alpha >= 0".into()));
    }
    let df = d as f64;
    let log_delta_abs = delta.ln().abs();
    let d_log_d = df * df.ln();
    let shape = (1.0 + x) * (log_delta_abs + d_log_d + x * x).powf(alpha) * delta;

    let lk = ln_kappa(d);
    let p_proof = log_delta_abs + lk + 0.5 * x * x;
    let eps_proof = a * p_proof.max(0.0).powf(alpha) * delta * std::f64::consts::E;

    let x_delta_cap = delta.powf(-1.0 / (2.0 * alpha + 1.0));
    let range_max_x = x_delta_cap.min(p0.sqrt());

    let mut violated = Vec::new();
    if log_delta_abs > p0 / 4.0 {
        violated.push(format!("|log delta| = {log_delta_abs} exceeds p0/4 = {}", p0 / 4.0));
    }
    if lk > p0 / 4.0 {
        violated.push(format!("log kappa(d) = {lk} exceeds p0/4 = {}", p0 / 4.0));
    }
    if x > range_max_x {
        violated.push(format!("x = {x} exceeds min(delta^(-1/(2 alpha + 1)), sqrt(p0)) = {range_max_x}"));
    }

    let mut inter = BTreeMap::new();
    inter.insert("p".into(), p_proof);
    inter.insert("epsilon".into(), eps_proof);
    inter.insert("log_kappa_d".into(), lk);
    inter.insert("d_log_d".into(), d_log_d);
    // smallness products for the caller's own B1/B2 caps
    inter.insert("cond_d_dlogd_alpha_delta".into(), df * d_log_d.powf(alpha) * delta);
    inter.insert("cond_d_delta_logdelta_alpha".into(), df * delta * log_delta_abs.powf(alpha));
    Ok(BoundReport::new(shape, range_max_x, violated, inter))
}

/// W_p certificate evaluator on exact conditional moments:
/// d = 1: ||R||_p + sqrt(p) ||E||_p + p sqrt(lambda^{-1} ||E[D^4|G]||_p);
/// d >= 1 adds the d^{1/4} factor on the last term.
pub fn certificate_bound(cert: &Certificate, p: f64) -> Result<BoundReport> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if (p - cert.p).abs() > 1e-12 {
        return Err(Error::MissingInput {
            what: format!("certificate norms at order p = {p} (certificate holds p = {})", cert.p),
            produced_by: "models::exact_pair_conditionals(model, p)".into(),
        });
    }
    let d4_term = p * (cert.d as f64).powf(0.25) * (cert.norm_d4_p / cert.lambda).sqrt();
    let shape = cert.norm_r_p + p.sqrt() * cert.norm_e_p + d4_term;
    let mut inter = BTreeMap::new();
    inter.insert("lambda".into(), cert.lambda);
    inter.insert("term_r".into(), cert.norm_r_p);
    inter.insert("term_e".into(), p.sqrt() * cert.norm_e_p);
    inter.insert("term_d4".into(), d4_term);
    Ok(BoundReport::new(shape, f64::INFINITY, Vec::new(), inter))
}

/// Which application's Delta to build (parameters as the theorems name them;
/// Orlicz norms b/K are passed in, computed by `dist::orlicz_norm` or known
/// analytically).
#[derive(Clone, Debug)]
pub enum Application {
    /// Standardized i.i.d. sums with sub-exponential summands.
    Iid { n: usize, b: f64 },
    /// Combinatorial CLT; bn2 is the array variance B_n^2.
    Comb { n: usize, b: f64, bn2: f64 },
    /// De Jong CLT for homogeneous sums of order q.
    Dejong {
        q: usize,
        kappa4_abs: f64,
        m4_max: f64,
        influence: f64,
        k_psi2: f64,
    },
    /// Bounded quadratic forms: Delta = ||F||_op with a K^4 prefactor.
    Qf { op_norm_f: f64, k_bound: f64 },
    /// Order-2 Gaussian chaos simplified bound: Delta = ||F^2||_HS.
    WienerSimple { hs_norm_f2: f64 },
    /// Multivariate i.i.d. sums, chi tails.
    Chi { n: usize, d: u32, b: f64 },
    /// m-dependent sums.
    Mdep { n: usize, m: usize, b: f64 },
    /// Local dependence, bounded summands.
    LocalBounded {
        n: usize,
        d: u32,
        theta1: f64,
        theta2: f64,
        b_n: f64,
        b_n_prime: f64,
    },
    /// Local dependence, sub-exponential summands with an L-group partition.
    LocalUnbounded {
        n: usize,
        d: u32,
        l_groups: f64,
        theta1: f64,
        theta2: f64,
        b: f64,
    },
}

/// The Delta, alpha, p0, range cap and prefactor to feed `t4_translate`
/// (d = 1) or `multi_md_translate` (d >= 2).
#[derive(Clone, Debug)]
pub struct AppDelta {
    pub delta: f64,
    pub alpha: f64,
    pub p0: f64,
    pub range_max_x: f64,
    /// Profile prefactor A (1 except where the theorem carries K powers).
    pub a: f64,
    pub d: u32,
    pub aux: BTreeMap<String, f64>,
}

impl AppDelta {
    pub fn profile(&self) -> Result<BoundProfile> {
        BoundProfile::single(self.a, self.alpha, self.delta, self.p0)
    }

    /// Translate at x: t4 for d = 1, the chi-reference translation otherwise.
    pub fn translate(&self, x: f64) -> Result<BoundReport> {
        if self.d >= 2 {
            multi_md_translate(self.a, self.alpha, self.delta, self.p0, self.d, x)
        } else {
            Ok(t4_translate(&self.profile()?, x))
        }
    }
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {v}")));
    }
    Ok(v)
}

/// Per-application Delta(s), alpha, p0 and x-range cap.
pub fn app_delta(app: &Application) -> Result<AppDelta> {
    let mut aux = BTreeMap::new();
    Ok(match *app {
        Application::Iid { n, b } => {
            positive(b, "b")?;
            positive(n as f64, "n")?;
            let nf = n as f64;
            let delta = b * b / nf.sqrt();
            let p0 = (nf.sqrt() / (b * b)).powf(2.0 / 3.0);
            aux.insert("b".into(), b);
            AppDelta {
                delta,
                alpha: 1.0,
                p0,
                range_max_x: (nf / b.powi(4)).powf(1.0 / 6.0),
                a: 1.0,
                d: 1,
                aux,
            }
        }
        Application::Comb { n, b, bn2 } => {
            positive(b, "b")?;
            positive(bn2, "B_n^2")?;
            let nf = positive(n as f64, "n")?;
            let delta = nf.sqrt() * b * b / bn2;
            aux.insert("b".into(), b);
            aux.insert("bn2".into(), bn2);
            AppDelta {
                delta,
                alpha: 1.0,
                p0: delta.powf(-2.0 / 3.0),
                range_max_x: delta.powf(-1.0 / 3.0),
                a: 1.0,
                d: 1,
                aux,
            }
        }
        Application::Dejong {
            q,
            kappa4_abs,
            m4_max,
            influence,
            k_psi2,
        } => {
            if q < 2 {
                return Err(Error::InvalidParameter("q must be >= 2".into()));
            }
            positive(k_psi2, "K")?;
            positive(influence, "maximal influence")?;
            if kappa4_abs < 0.0 || m4_max < 1.0 {
                return Err(Error::InvalidParameter(
                    "need |kappa4| >= 0 and M >= 1 (M >= (E X^2)^2 = 1)".into(),
                ));
            }
            let qf = q as f64;
            let log_infl = influence.ln().abs();
            let delta = k_psi2.powf(2.0 * qf)
                * (kappa4_abs + m4_max.powf(qf) * influence * log_infl.powf(2.0 * qf - 2.0).max(1.0))
                    .sqrt();
            positive(delta, "Delta")?;
            aux.insert("kappa4_abs".into(), kappa4_abs);
            aux.insert("influence".into(), influence);
            aux.insert("m4_max".into(), m4_max);
            AppDelta {
                delta,
                alpha: qf,
                p0: influence.powf(-0.5),
                range_max_x: delta.powf(-1.0 / (2.0 * qf + 1.0)),
                a: 1.0,
                d: 1,
                aux,
            }
        }
        Application::Qf { op_norm_f, k_bound } => {
            positive(op_norm_f, "||F||_op")?;
            positive(k_bound, "K")?;
            aux.insert("op_norm_f".into(), op_norm_f);
            AppDelta {
                delta: op_norm_f,
                alpha: 1.0,
                p0: op_norm_f.powf(-2.0 / 3.0),
                range_max_x: op_norm_f.powf(-1.0 / 3.0),
                a: k_bound.powi(4),
                d: 1,
                aux,
            }
        }
        Application::WienerSimple { hs_norm_f2 } => {
            positive(hs_norm_f2, "||F^2||_HS")?;
            aux.insert("hs_norm_f2".into(), hs_norm_f2);
            // q = 2: alpha = (2q-1)/2, range x <= Delta^{-1/(2q)}
            AppDelta {
                delta: hs_norm_f2,
                alpha: 1.5,
                p0: hs_norm_f2.powf(-0.5),
                range_max_x: hs_norm_f2.powf(-0.25),
                a: 1.0,
                d: 1,
                aux,
            }
        }
        Application::Chi { n, d, b } => {
            if d < 2 {
                return Err(Error::InvalidParameter("chi application needs d >= 2".into()));
            }
            positive(b, "b")?;
            let nf = positive(n as f64, "n")?;
            let df = d as f64;
            let delta = df.powf(0.25) * b * b / nf.sqrt();
            aux.insert("b".into(), b);
            aux.insert("smallness_d2_logd_delta".into(), df * df * df.ln() * delta);
            AppDelta {
                delta,
                alpha: 1.0,
                p0: delta.powf(-2.0 / 3.0),
                range_max_x: delta.powf(-1.0 / 3.0),
                a: 1.0,
                d,
                aux,
            }
        }
        Application::Mdep { n, m, b } => {
            positive(b, "b")?;
            positive(m as f64, "m")?;
            let nf = positive(n as f64, "n")?;
            let delta = (m * m) as f64 * b.powi(3) * nf.ln().powi(4) / nf.sqrt();
            aux.insert("b".into(), b);
            aux.insert("m".into(), m as f64);
            AppDelta {
                delta,
                alpha: 1.0,
                p0: delta.powf(-2.0 / 3.0).max(1.0),
                range_max_x: delta.powf(-1.0 / 3.0),
                a: 1.0,
                d: 1,
                aux,
            }
        }
        Application::LocalBounded {
            n,
            d,
            theta1,
            theta2,
            b_n,
            b_n_prime,
        } => {
            positive(theta1, "theta1")?;
            positive(theta2, "theta2")?;
            positive(b_n, "b_n")?;
            positive(b_n_prime, "b_n'")?;
            let nf = positive(n as f64, "n")?;
            let df = d.max(1) as f64;
            let first = if d >= 2 { df } else { 1.0 } * (theta1 * theta2).sqrt() * b_n_prime * b_n_prime;
            let delta = (first + theta1 * theta1 * b_n.powi(3) * nf.ln()) / nf.sqrt();
            aux.insert("theta1".into(), theta1);
            aux.insert("theta2".into(), theta2);
            AppDelta {
                delta,
                alpha: 1.0,
                p0: delta.powf(-2.0 / 3.0).max(1.0),
                range_max_x: delta.powf(-1.0 / 3.0),
                a: 1.0,
                d: d.max(1),
                aux,
            }
        }
        Application::LocalUnbounded {
            n,
            d,
            l_groups,
            theta1,
            theta2,
            b,
        } => {
            positive(theta1, "theta1")?;
            positive(theta2, "theta2")?;
            positive(b, "b")?;
            positive(l_groups, "L")?;
            let nf = positive(n as f64, "n")?;
            let df = d.max(1) as f64;
            let ln_n = nf.ln();
            let delta = (df * l_groups * b * ln_n
                + df * (theta1 * theta2).sqrt() * b * b * ln_n * ln_n
                + df.powf(1.5) * theta1 * theta1 * b.powi(3) * ln_n.powi(4))
                / nf.sqrt();
            aux.insert("theta1".into(), theta1);
            aux.insert("theta2".into(), theta2);
            aux.insert("l_groups".into(), l_groups);
            AppDelta {
                delta,
                alpha: 1.0,
                p0: delta.powf(-2.0 / 3.0).max(1.0),
                range_max_x: delta.powf(-1.0 / 3.0),
                a: 1.0,
                d: d.max(1),
                aux,
            }
        }
    })
}

/// W_p shape for local dependence with bounded summands:
/// p (d (theta1 theta2)^{1/2} b_n'^2 + theta1^2 b_n^3 log n) / sqrt(n),
/// with the p-range 2 <= p <= min(theta1/theta2, c/(theta1^2 b_n^2)) n and
/// the unknown small constant c set to 1 (flagged as constant-dependent).
pub fn local_wp_bound(
    n: f64,
    d: u32,
    theta1: f64,
    theta2: f64,
    b_n: f64,
    b_n_prime: f64,
    p: f64,
) -> Result<BoundReport> {
    positive(theta1, "theta1")?;
    positive(theta2, "theta2")?;
    positive(b_n, "b_n")?;
    positive(b_n_prime, "b_n'")?;
    let nf = positive(n, "n")?;
    let df = d.max(1) as f64;
    let shape = p * (df * (theta1 * theta2).sqrt() * b_n_prime * b_n_prime
        + theta1 * theta1 * b_n.powi(3) * nf.ln())
        / nf.sqrt();
    let p_cap = (theta1 / theta2).min(1.0 / (theta1 * theta1 * b_n * b_n)) * nf;
    let mut violated = Vec::new();
    if p < 2.0 {
        violated.push(format!("p = {p} below the range minimum 2"));
    }
    if p > p_cap {
        violated.push(format!(
            "p = {p} exceeds min(theta1/theta2, c/(theta1^2 b_n^2)) n = {p_cap} (c := 1, constant-dependent)"
        ));
    }
    let mut inter = BTreeMap::new();
    inter.insert("p_cap".into(), p_cap);
    inter.insert("log_n".into(), nf.ln());
    Ok(BoundReport::new(shape, f64::NAN, violated, inter))
}
