//! Exact conditional-moment certificates on fully enumerable instances.
//!
//! For each state of the model we compute E[D|state], E[D^2|state] and
//! E[D^4|state] in closed form over the pair construction, then take L^p
//! norms over the exact law of the state. The linearity residual
//! E[D|state] + lambda (W + R) is tracked against the model's theoretical
//! (lambda, R).

use super::{factorial, Model};
use crate::dist::Family;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Exact conditional-moment data feeding the certificate evaluators.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub lambda: f64,
    /// Moment order the norms were taken at.
    pub p: f64,
    pub norm_r_p: f64,
    pub norm_e_p: f64,
    pub norm_d4_p: f64,
    pub d: usize,
    pub exact: bool,
    /// The constant R of the model's linearity identity (0 except CombClt).
    pub r_theory: f64,
    /// max over states of |E[D|state] + lambda (W + R)|.
    pub max_linearity_residual: f64,
}

const MAX_STATES: usize = 1 << 22;

struct NormAccumulator {
    p: f64,
    r: f64,
    e: f64,
    d4: f64,
    resid: f64,
}

impl NormAccumulator {
    fn new(p: f64) -> Self {
        NormAccumulator {
            p,
            r: 0.0,
            e: 0.0,
            d4: 0.0,
            resid: 0.0,
        }
    }

    fn push(&mut self, prob: f64, w: f64, ed: f64, ed2: f64, ed4: f64, lambda: f64, r_theory: f64) {
        let r_state = -ed / lambda - w;
        let e_state = 0.5 * ed2 / lambda - 1.0;
        self.r += prob * r_state.abs().powf(self.p);
        self.e += prob * e_state.abs().powf(self.p);
        self.d4 += prob * ed4.powf(self.p);
        self.resid = self.resid.max((ed + lambda * (w + r_theory)).abs());
    }

    fn into_certificate(self, lambda: f64, r_theory: f64) -> Certificate {
        Certificate {
            lambda,
            p: self.p,
            norm_r_p: self.r.powf(1.0 / self.p),
            norm_e_p: self.e.powf(1.0 / self.p),
            norm_d4_p: self.d4.powf(1.0 / self.p),
            d: 1,
            exact: true,
            r_theory,
            max_linearity_residual: self.resid,
        }
    }
}

/// Enumerate all states and pair transitions of a small discrete model.
///
/// Supported: IidSum with a lattice summand (n <= 12), CombClt with a
/// deterministic array (n <= 7), HomSum with Rademacher summands (n <= 16).
pub fn exact_pair_conditionals(model: &Model, p: f64) -> Result<Certificate> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("moment order p must be >= 1, got {p}")));
    }
    match model {
        Model::IidSum { n, dist } => iid_lattice(*n, dist, p),
        Model::CombClt { c, sigma2, .. } => {
            if sigma2.iter().any(|&s| s != 0.0) {
                return Err(Error::Unsupported(
                    "exact CombClt conditionals need a deterministic array (sigma^2 = 0)".into(),
                ));
            }
            comb_deterministic(c, p)
        }
        Model::HomSum { q, n, entries, dist } => {
            if !matches!(dist.family(), Family::Rademacher) {
                return Err(Error::Unsupported(
                    "exact HomSum conditionals need Rademacher summands".into(),
                ));
            }
            hom_rademacher(*q, *n, entries, p)
        }
        _ => Err(Error::Unsupported(format!(
            "no exact enumeration for {}",
            model.tag()
        ))),
    }
}

fn iid_lattice(n: usize, dist: &crate::dist::DistSpec, p: f64) -> Result<Certificate> {
    let atoms = match dist.family() {
        Family::Lattice { atoms } => atoms.clone(),
        Family::Rademacher => vec![(-1.0, 0.5), (1.0, 0.5)],
        _ => {
            return Err(Error::Unsupported(
                "exact IidSum conditionals need a lattice summand".into(),
            ))
        }
    };
    if n > 12 {
        return Err(Error::TooLarge(format!("n = {n}, cap is 12")));
    }
    let a = atoms.len();
    let states = (a as u128).pow(n as u32);
    if states > MAX_STATES as u128 {
        return Err(Error::TooLarge(format!(
            "state space has {states} states, cap is {MAX_STATES}"
        )));
    }
    let m2 = dist.moment(2);
    let m3 = dist.moment(3);
    let m4 = dist.moment(4);
    let lambda = 1.0 / n as f64;
    let sqrt_n = (n as f64).sqrt();
    let nf = n as f64;

    let mut acc = NormAccumulator::new(p);
    let mut idx = vec![0usize; n];
    loop {
        let mut prob = 1.0;
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        for &k in &idx {
            let (v, q) = atoms[k];
            prob *= q;
            s1 += v;
            s2 += v * v;
            s3 += v * v * v;
            s4 += v * v * v * v;
        }
        let _ = s3;
        let w = s1 / sqrt_n;
        // D = (X'_I - X_I)/sqrt(n), I uniform, X' a fresh copy
        let ed = -s1 / (nf * sqrt_n);
        let ed2 = (nf * m2 + s2) / (nf * nf);
        let ed4 = (nf * m4 - 4.0 * m3 * s1 + 6.0 * m2 * s2 + s4) / (nf * nf * nf);
        acc.push(prob, w, ed, ed2, ed4, lambda, 0.0);
        // odometer
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(acc.into_certificate(lambda, 0.0));
            }
            idx[pos] += 1;
            if idx[pos] < a {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn comb_deterministic(c: &DMatrix<f64>, p: f64) -> Result<Certificate> {
    let n = c.nrows();
    if n < 2 || c.ncols() != n {
        return Err(Error::Validation("c must be square with n >= 2".into()));
    }
    if n > 7 {
        return Err(Error::TooLarge(format!("n = {n}, cap is 7 ({} permutations)", factorial(7))));
    }
    let bn2 = super::comb_variance(c, &DMatrix::zeros(n, n))?;
    if bn2 <= 0.0 {
        return Err(Error::Degenerate("B_n^2 = 0".into()));
    }
    let bn = bn2.sqrt();
    let y = c.map(|x| x / bn);
    let lambda = 2.0 / (n as f64 - 1.0);
    let r_theory = -y.sum() / n as f64;
    let prob = 1.0 / factorial(n) as f64;
    let pairs = (n * (n - 1) / 2) as f64;

    let mut acc = NormAccumulator::new(p);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let w: f64 = (0..n).map(|i| y[(i, perm[i])]).sum();
        let (mut ed, mut ed2, mut ed4) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let delta = -y[(i, perm[i])] - y[(j, perm[j])] + y[(i, perm[j])] + y[(j, perm[i])];
                ed += delta;
                ed2 += delta * delta;
                ed4 += delta * delta * delta * delta;
            }
        }
        ed /= pairs;
        ed2 /= pairs;
        ed4 /= pairs;
        acc.push(prob, w, ed, ed2, ed4, lambda, r_theory);
        if !next_perm(&mut perm) {
            break;
        }
    }
    Ok(acc.into_certificate(lambda, r_theory))
}

fn next_perm(perm: &mut [usize]) -> bool {
    let n = perm.len();
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn hom_rademacher(q: usize, n: usize, entries: &[(Vec<usize>, f64)], p: f64) -> Result<Certificate> {
    if n > 16 {
        return Err(Error::TooLarge(format!(
            "n = {n} means 2^{n} states, cap is 2^16"
        )));
    }
    let qf = factorial(q) as f64;
    let qm1f = factorial(q - 1) as f64;
    let lambda = q as f64 / n as f64;
    let states = 1usize << n;
    let prob = 1.0 / states as f64;
    let nf = n as f64;
    let qd = q as f64;

    let mut acc = NormAccumulator::new(p);
    let mut influence = vec![0.0f64; n];
    for mask in 0..states {
        let xs: Vec<f64> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
            .collect();
        // per-coordinate derivative polynomials Q_i(x) and W together
        for v in influence.iter_mut() {
            *v = 0.0;
        }
        let mut w = 0.0;
        for (idx, v) in entries {
            let mut sign = 1.0;
            for &i in idx {
                sign *= xs[i];
            }
            w += qf * v * sign;
            for &i in idx {
                // product over the tuple without i; x_i^2 = 1
                influence[i] += qm1f * v * sign * xs[i];
            }
        }
        // D = q (X'_I - X_I) Q_I(X); for Rademacher E(X'-x)^2 = 2, E(X'-x)^4 = 8
        let (mut ed, mut ed2, mut ed4) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let qi = influence[i];
            ed += -xs[i] * qd * qi;
            ed2 += 2.0 * qd * qd * qi * qi;
            ed4 += 8.0 * qd * qd * qd * qd * qi * qi * qi * qi;
        }
        ed /= nf;
        ed2 /= nf;
        ed4 /= nf;
        acc.push(prob, w, ed, ed2, ed4, lambda, 0.0);
    }
    Ok(acc.into_certificate(lambda, 0.0))
}
