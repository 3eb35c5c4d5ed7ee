//! Exact and approximate p-Wasserstein distances.
//!
//! 1-D distances use the sorted (quantile) coupling, which is exact for
//! empirical measures. Discrete-vs-normal uses piecewise quadrature over the
//! quantile-function plateaus. Point clouds go through an exact min-cost
//! matching or log-domain Sinkhorn.

mod assignment;
mod sinkhorn;

pub use assignment::wp_assignment;
pub use sinkhorn::wp_sinkhorn;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson_min_depth, depth_for_width};
use crate::special::{normal_density, normal_quantile};

/// How a transport distance was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportMethod {
    Sorted1d,
    QuantileVsNormal,
    DiscreteVsNormal,
    Assignment,
    Sinkhorn,
}

/// A transport distance together with its per-unit-mass plan cost
/// (distance = plan_cost^{1/p} always holds).
#[derive(Clone, Copy, Debug)]
pub struct TransportResult {
    pub distance: f64,
    pub p: f64,
    pub method: TransportMethod,
    pub plan_cost: f64,
    pub iterations: u64,
    /// Sinkhorn only: marginal violation reached tolerance before max_iter.
    pub converged: bool,
}

/// Equal-size point clouds, rows are points.
#[derive(Clone, Debug)]
pub struct Points {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Points {
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 || data.len() != n * d {
            return Err(Error::Validation(format!(
                "point cloud shape mismatch: {} values for {n} x {d}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("point cloud entries must be finite".into()));
        }
        Ok(Points { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Validation("empty point cloud".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Validation("ragged point cloud".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            data.extend_from_slice(r);
        }
        Points::new(data, rows.len(), d)
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Points::new(xs.to_vec(), xs.len(), 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

fn validate_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be a finite real >= 1, got {p}")));
    }
    Ok(())
}

fn validate_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation(format!("{what} must be finite")));
    }
    Ok(())
}

fn abs_pow(d: f64, p: f64) -> f64 {
    let a = d.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Exact W_p between two equal-size 1-D empirical measures: the sorted
/// (quantile) coupling.
pub fn wp_empirical_1d(xs: &[f64], ys: &[f64], p: f64) -> Result<TransportResult> {
    validate_p(p)?;
    if xs.len() != ys.len() {
        return Err(Error::Validation(format!(
            "sample sizes differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::Validation("samples must be nonempty".into()));
    }
    validate_finite(xs, "samples")?;
    validate_finite(ys, "samples")?;
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = a.len() as f64;
    let cost: f64 = a.iter().zip(&b).map(|(x, y)| abs_pow(x - y, p)).sum::<f64>() / n;
    Ok(TransportResult {
        distance: cost.powf(1.0 / p),
        p,
        method: TransportMethod::Sorted1d,
        plan_cost: cost,
        iterations: 0,
        converged: true,
    })
}

/// W_p between an empirical sample and N(0,1): the midpoint-quantile
/// coupling x_(i) vs Phi^{-1}((i - 1/2)/n).
pub fn wp_sample_vs_normal(xs: &[f64], p: f64) -> Result<TransportResult> {
    validate_p(p)?;
    if xs.len() < 2 {
        return Err(Error::Validation("need at least 2 sample points".into()));
    }
    validate_finite(xs, "sample")?;
    let mut a = xs.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = a.len();
    let cost: f64 = a
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let q = normal_quantile((i as f64 + 0.5) / n as f64);
            abs_pow(x - q, p)
        })
        .sum::<f64>()
        / n as f64;
    Ok(TransportResult {
        distance: cost.powf(1.0 / p),
        p,
        method: TransportMethod::QuantileVsNormal,
        plan_cost: cost,
        iterations: 0,
        converged: true,
    })
}

/// Clip for the normal quantile integration range; the mass beyond is below
/// 1e-300 and cannot move the cost at the 1e-9 tolerance.
const Z_CLIP: f64 = 40.0;

/// Exact W_p between a finitely supported law and N(0,1), by quadrature of
/// |v_k - z|^p phi(z) over each quantile plateau.
pub fn wp_discrete_vs_normal(atoms: &[(f64, f64)], p: f64) -> Result<TransportResult> {
    validate_p(p)?;
    if atoms.is_empty() {
        return Err(Error::Validation("pmf must be nonempty".into()));
    }
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = sorted.iter().map(|&(_, q)| q).sum();
    if (total - 1.0).abs() > 1e-12 || sorted.iter().any(|&(v, q)| !v.is_finite() || q < 0.0) {
        return Err(Error::Validation("pmf must have nonnegative mass summing to 1".into()));
    }
    let k = sorted.len();
    let tol_per_segment = 1e-9 / (k as f64 + 1.0);
    let mut cum = 0.0;
    let mut cost = 0.0;
    for (i, &(v, q)) in sorted.iter().enumerate() {
        if q == 0.0 {
            cum += q;
            continue;
        }
        let lo = cum;
        cum += q;
        let hi = if i + 1 == k { 1.0 } else { cum };
        let z_lo = if lo <= 0.0 { -Z_CLIP } else { normal_quantile(lo).max(-Z_CLIP) };
        let z_hi = if hi >= 1.0 { Z_CLIP } else { normal_quantile(hi).min(Z_CLIP) };
        let f = |z: f64| abs_pow(v - z, p) * normal_density(z);
        // forced subdivision: wide outer plateaus hide their mass from the
        // five-point probe otherwise; split at the atom value too, where
        // |v - z|^p has a kink
        let quad = |a: f64, b: f64, t: f64| {
            adaptive_simpson_min_depth(&f, a, b, t, depth_for_width(b - a, 0.5))
        };
        if v > z_lo && v < z_hi {
            cost += quad(z_lo, v, 0.5 * tol_per_segment);
            cost += quad(v, z_hi, 0.5 * tol_per_segment);
        } else {
            cost += quad(z_lo, z_hi, tol_per_segment);
        }
    }
    Ok(TransportResult {
        distance: cost.powf(1.0 / p),
        p,
        method: TransportMethod::DiscreteVsNormal,
        plan_cost: cost,
        iterations: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rep_rng;
    use rand::Rng;

    #[test]
    fn empirical_identical_is_zero() {
        let xs = [0.3, -1.0, 2.5];
        let r = wp_empirical_1d(&xs, &xs, 3.0).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn empirical_translation() {
        let xs = [0.0, 1.0];
        let ys = [2.0, 3.0];
        for p in [1.0, 1.5, 2.0, 4.0] {
            let r = wp_empirical_1d(&xs, &ys, p).unwrap();
            assert!((r.distance - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_sorting_pairs() {
        let r = wp_empirical_1d(&[2.0, 0.0], &[3.0, 1.0], 2.0).unwrap();
        assert!((r.distance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_rejects_bad_inputs() {
        assert!(wp_empirical_1d(&[1.0], &[1.0, 2.0], 2.0).is_err());
        assert!(wp_empirical_1d(&[1.0], &[1.0], 0.5).is_err());
        assert!(wp_empirical_1d(&[f64::NAN], &[1.0], 2.0).is_err());
    }

    #[test]
    fn sample_vs_normal_exact_quantiles() {
        let n = 101;
        let xs: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64))
            .collect();
        let r = wp_sample_vs_normal(&xs, 2.0).unwrap();
        assert!(r.distance < 1e-12);
        // constant shift moves W_1 by exactly the shift
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.7).collect();
        let r1 = wp_sample_vs_normal(&shifted, 1.0).unwrap();
        assert!((r1.distance - 0.7).abs() < 1e-12);
    }

    #[test]
    fn sample_vs_normal_large_gaussian_sample_is_small() {
        let n = 100_000;
        let mut rng = rep_rng(2024, 0);
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                // inverse-CDF sampling keeps this test free of rand_distr internals
                crate::special::normal_quantile(u)
            })
            .collect();
        let r = wp_sample_vs_normal(&xs, 2.0).unwrap();
        assert!(r.distance <= 0.02, "W2 = {}", r.distance);
    }

    #[test]
    fn discrete_point_mass_w1_is_mean_abs_normal() {
        let r = wp_discrete_vs_normal(&[(0.0, 1.0)], 1.0).unwrap();
        let want = (2.0 / std::f64::consts::PI).sqrt();
        assert!((r.distance - want).abs() < 1e-9, "{} vs {want}", r.distance);
    }

    #[test]
    fn discrete_rademacher_w2_closed_form() {
        let r = wp_discrete_vs_normal(&[(-1.0, 0.5), (1.0, 0.5)], 2.0).unwrap();
        let want = (2.0 - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).sqrt();
        assert!((r.distance - want).abs() < 1e-6, "{} vs {want}", r.distance);
    }

    #[test]
    fn discrete_quantile_lattice_refines() {
        // n-point equal-mass midpoint-quantile lattice of N(0,1), W_p
        // strictly decreasing as n doubles
        let mut last = f64::INFINITY;
        for k in 6..=14 {
            let n = 1usize << k;
            let atoms: Vec<(f64, f64)> = (0..n)
                .map(|i| (normal_quantile((i as f64 + 0.5) / n as f64), 1.0 / n as f64))
                .collect();
            let r = wp_discrete_vs_normal(&atoms, 2.0).unwrap();
            assert!(r.distance < last, "n=2^{k}: {} !< {last}", r.distance);
            last = r.distance;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn discrete_rejects_bad_pmf() {
        assert!(wp_discrete_vs_normal(&[], 1.0).is_err());
        assert!(wp_discrete_vs_normal(&[(0.0, 0.7)], 1.0).is_err());
        assert!(wp_discrete_vs_normal(&[(0.0, 1.0)], 0.9).is_err());
    }

    #[test]
    fn monotone_in_p_all_ops() {
        let mut rng = rep_rng(5, 0);
        let xs: Vec<f64> = (0..64).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let ys: Vec<f64> = (0..64).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let ps = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
        let mut last = 0.0;
        for &p in &ps {
            let d = wp_empirical_1d(&xs, &ys, p).unwrap().distance;
            assert!(d >= last - 1e-12);
            last = d;
        }
        last = 0.0;
        for &p in &ps {
            let d = wp_sample_vs_normal(&xs, p).unwrap().distance;
            assert!(d >= last - 1e-12);
            last = d;
        }
        last = 0.0;
        for &p in &ps {
            let d = wp_discrete_vs_normal(&[(-1.5, 0.25), (0.5, 0.75)], p).unwrap().distance;
            assert!(d >= last - 1e-9);
            last = d;
        }
    }

    #[test]
    fn triangle_inequality_1d() {
        let mut rng = rep_rng(6, 0);
        for _ in 0..20 {
            let a: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() * 2.0).collect();
            let b: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() * 3.0 - 1.0).collect();
            let c: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() - 2.0).collect();
            for p in [1.0, 2.0, 3.0] {
                let ab = wp_empirical_1d(&a, &b, p).unwrap().distance;
                let bc = wp_empirical_1d(&b, &c, p).unwrap().distance;
                let ac = wp_empirical_1d(&a, &c, p).unwrap().distance;
                assert!(ac <= ab + bc + 1e-10);
            }
        }
    }
}
