//! Exact small-instance laws: lattice convolution, permutation and sign
//! enumeration, and exact tail ratios against normal/chi references.
//!
//! These are the ground truth that Monte Carlo estimates and bound shapes
//! are checked against.

use crate::dist::{DistSpec, Family};
use crate::error::{Error, Result};
use crate::models::{comb_variance, Model};
use crate::special::{chi_upper_tail, normal_upper_tail};
use nalgebra::DMatrix;

const MAX_SUPPORT: usize = 10_000_000;
/// Atom merge tolerance, absolute on the standardized scale.
const MERGE_TOL: f64 = 1e-12;

/// Exact finitely-supported law, atoms sorted by value.
#[derive(Clone, Debug)]
pub struct ExactPmf {
    atoms: Vec<(f64, f64)>,
    model_tag: String,
}

impl ExactPmf {
    /// Build from raw (value, prob) pairs: sorts, merges atoms within
    /// 1e-12, validates nonnegative probabilities summing to 1.
    pub fn from_atoms(mut raw: Vec<(f64, f64)>, model_tag: impl Into<String>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Validation("pmf needs at least one atom".into()));
        }
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (v, p) in raw {
            if !v.is_finite() || !(p >= 0.0) {
                return Err(Error::Validation(format!("bad atom ({v}, {p})")));
            }
            if p == 0.0 {
                continue;
            }
            match atoms.last_mut() {
                Some(last) if v - last.0 <= MERGE_TOL => {
                    // mass-weighted merge keeps the mean exact
                    let w = last.1 + p;
                    last.0 = (last.0 * last.1 + v * p) / w;
                    last.1 = w;
                }
                _ => atoms.push((v, p)),
            }
        }
        let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("pmf mass is {total}, expected 1")));
        }
        Ok(ExactPmf {
            atoms,
            model_tag: model_tag.into(),
        })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| p * v).sum()
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.atoms.iter().map(|&(v, p)| p * v.powi(k as i32)).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|&(v, p)| p * (v - m) * (v - m)).sum()
    }

    /// P(W > x), strict inequality.
    pub fn upper_tail(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .rev()
            .take_while(|&&(v, _)| v > x)
            .map(|&(_, p)| p)
            .sum()
    }

    /// CSV body `value,prob` with round-trip-exact formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,prob\n");
        for &(v, p) in &self.atoms {
            out.push_str(&format!("{:.16e},{:.16e}\n", v, p));
        }
        out
    }
}

/// Exact law of W = (X_1 + ... + X_n)/sqrt(n) for a unit-variance lattice
/// summand, by repeated convolution.
///
/// When the atoms live on an arithmetic progression the convolution runs on
/// exact integer offsets; otherwise values are carried as floats and merged
/// within tolerance at each step.
pub fn convolve_iid_pmf(dist: &DistSpec, n: usize) -> Result<ExactPmf> {
    let atoms = match dist.family() {
        Family::Lattice { atoms } => atoms.clone(),
        Family::Rademacher => vec![(-1.0, 0.5), (1.0, 0.5)],
        _ => {
            return Err(Error::InvalidParameter(
                "convolve_iid_pmf needs a lattice summand".into(),
            ))
        }
    };
    if atoms.len() > 64 {
        return Err(Error::TooLarge(format!("{} atoms, cap is 64", atoms.len())));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if (dist.variance() - 1.0).abs() > 1e-10 {
        return Err(Error::Validation(format!(
            "summand variance is {}, expected 1",
            dist.variance()
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let tag = format!("iid_sum(n={n}, lattice)");

    if let Some((v0, step, offsets)) = integer_lattice(&atoms) {
        // exact integer-offset convolution
        let span: usize = *offsets.iter().max().unwrap();
        let final_len = n
            .checked_mul(span)
            .and_then(|s| s.checked_add(1))
            .ok_or_else(|| Error::TooLarge("support overflow".into()))?;
        if final_len > MAX_SUPPORT {
            return Err(Error::TooLarge(format!(
                "support would have {final_len} atoms, cap is {MAX_SUPPORT}"
            )));
        }
        let base: Vec<f64> = {
            let mut b = vec![0.0; span + 1];
            for (&(_, p), &off) in atoms.iter().zip(offsets.iter()) {
                b[off] += p;
            }
            b
        };
        let mut pmf = base.clone();
        for _ in 1..n {
            let mut next = vec![0.0; pmf.len() + span];
            for (j, &pj) in pmf.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                for (off, &pb) in base.iter().enumerate() {
                    if pb != 0.0 {
                        next[j + off] += pj * pb;
                    }
                }
            }
            pmf = next;
        }
        let raw: Vec<(f64, f64)> = pmf
            .iter()
            .enumerate()
            .filter(|&(_, &p)| p > 0.0)
            .map(|(k, &p)| ((n as f64 * v0 + k as f64 * step) * scale, p))
            .collect();
        return ExactPmf::from_atoms(raw, tag);
    }

    // float path with per-step merging (tolerance mapped back to raw scale)
    let raw_tol = MERGE_TOL / scale;
    let mut pmf: Vec<(f64, f64)> = atoms.clone();
    for _ in 1..n {
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(pmf.len() * atoms.len());
        for &(v, p) in &pmf {
            for &(av, ap) in &atoms {
                next.push((v + av, p * ap));
            }
        }
        next.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (v, p) in next {
            match merged.last_mut() {
                Some(last) if v - last.0 <= raw_tol => {
                    let w = last.1 + p;
                    last.0 = (last.0 * last.1 + v * p) / w;
                    last.1 = w;
                }
                _ => merged.push((v, p)),
            }
        }
        if merged.len() > MAX_SUPPORT {
            return Err(Error::TooLarge(format!(
                "support grew past {MAX_SUPPORT} atoms"
            )));
        }
        pmf = merged;
    }
    ExactPmf::from_atoms(pmf.into_iter().map(|(v, p)| (v * scale, p)).collect(), tag)
}

/// Detect an arithmetic-progression support: returns (v_min, step, offsets)
/// with v_k = v_min + offsets[k] * step exactly within 1e-9 relative.
fn integer_lattice(atoms: &[(f64, f64)]) -> Option<(f64, f64, Vec<usize>)> {
    if atoms.len() == 1 {
        return Some((atoms[0].0, 1.0, vec![0]));
    }
    let v0 = atoms[0].0;
    let mut step = f64::INFINITY;
    for w in atoms.windows(2) {
        let d = w[1].0 - w[0].0;
        if d > 0.0 && d < step {
            step = d;
        }
    }
    let mut offsets = Vec::with_capacity(atoms.len());
    for &(v, _) in atoms {
        let k = ((v - v0) / step).round();
        if k < 0.0 || (v0 + k * step - v).abs() > 1e-9 * (1.0 + v.abs()) || k > 1e6 {
            return None;
        }
        offsets.push(k as usize);
    }
    Some((v0, step, offsets))
}

/// Exact law of W = S/B_n for the permutation statistic with a deterministic
/// array (all sigma^2 = 0), by full enumeration of the n! permutations.
pub fn enumerate_comb(c: &DMatrix<f64>) -> Result<ExactPmf> {
    let n = c.nrows();
    if n != c.ncols() || n < 2 {
        return Err(Error::Validation("c must be square with n >= 2".into()));
    }
    if n > 9 {
        return Err(Error::TooLarge(format!("n = {n} means {} permutations, cap is 9!", factorial(n))));
    }
    let bn2 = comb_variance(c, &DMatrix::zeros(n, n))?;
    if bn2 <= 0.0 {
        return Err(Error::Degenerate("B_n^2 = 0".into()));
    }
    let bn = bn2.sqrt();
    let total = factorial(n);
    let prob = 1.0 / total as f64;
    let mut raw = Vec::with_capacity(total);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let s: f64 = (0..n).map(|i| c[(i, perm[i])]).sum();
        raw.push((s / bn, prob));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    ExactPmf::from_atoms(raw, format!("comb_clt(n={n})"))
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
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

/// Exact law of a Rademacher homogeneous sum over all 2^n sign vectors.
pub fn enumerate_homsum(model: &Model) -> Result<ExactPmf> {
    let (q, n, entries) = match model {
        Model::HomSum { q, n, entries, dist } => {
            if !matches!(dist.family(), Family::Rademacher) {
                return Err(Error::Unsupported(
                    "sign enumeration needs Rademacher summands".into(),
                ));
            }
            (*q, *n, entries)
        }
        _ => return Err(Error::Unsupported("enumerate_homsum needs a HomSum model".into())),
    };
    if n > 20 {
        return Err(Error::TooLarge(format!("n = {n} means 2^{n} states, cap is 2^20")));
    }
    let qfact = factorial(q) as f64;
    let states = 1usize << n;
    let prob = 1.0 / states as f64;
    let mut raw = Vec::with_capacity(states);
    for mask in 0..states {
        let mut w = 0.0;
        for (idx, v) in entries {
            let mut sign = 1.0;
            for &i in idx {
                if mask >> i & 1 == 1 {
                    sign = -sign;
                }
            }
            w += qfact * v * sign;
        }
        raw.push((w, prob));
    }
    ExactPmf::from_atoms(raw, format!("hom_sum(q={q}, n={n})"))
}

#[derive(Clone, Copy, Debug)]
pub enum TailReference {
    Normal,
    Chi(u32),
}

#[derive(Clone, Copy, Debug)]
pub struct TailRatio {
    pub p_w: f64,
    pub p_ref: f64,
    pub log_p_ref: f64,
    pub ratio: f64,
}

/// P(W > x) from the exact law against a reference tail.
///
/// Strict inequality throughout; an atom exactly at x is excluded. When the
/// reference underflows (p_ref < 1e-300) the ratio is reported through
/// `log_p_ref` and the linear ratio saturates.
pub fn exact_tail_ratio(pmf: &ExactPmf, x: f64, reference: TailReference) -> Result<TailRatio> {
    let p_w = pmf.upper_tail(x);
    let tail = match reference {
        TailReference::Normal => normal_upper_tail(x),
        TailReference::Chi(d) => chi_upper_tail(x, d)?,
    };
    let ratio = if tail.value >= 1e-300 {
        p_w / tail.value
    } else if p_w == 0.0 {
        0.0
    } else {
        (p_w.ln() - tail.log_value).exp()
    };
    Ok(TailRatio {
        p_w,
        p_ref: tail.value,
        log_p_ref: tail.log_value,
        ratio,
    })
}
