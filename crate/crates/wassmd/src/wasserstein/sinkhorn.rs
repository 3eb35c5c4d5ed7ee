//! Log-domain Sinkhorn on the entropic-regularized transport problem,
//! with epsilon scaling for warm starts and a final rounding step that
//! projects the plan onto the feasible polytope.
//!
//! The reported cost is the unregularized transport cost of the rounded
//! (feasible) plan, so it upper-bounds the exact optimum.

use super::{abs_pow, euclid, Points, TransportMethod, TransportResult};
use crate::error::{Error, Result};

/// L1 marginal-violation tolerance.
const MARGINAL_TOL: f64 = 1e-8;

pub fn wp_sinkhorn(x: &Points, y: &Points, p: f64, epsilon: f64, max_iter: u64) -> Result<TransportResult> {
    super::validate_p(p)?;
    if x.n() != y.n() || x.d() != y.d() {
        return Err(Error::Validation(format!(
            "cloud shapes differ: {}x{} vs {}x{}",
            x.n(),
            x.d(),
            y.n(),
            y.d()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = x.n();
    let mut cost = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = abs_pow(euclid(x.row(i), y.row(j)), p);
        }
    }
    // normalize by the median cost so the temperature is scale-free
    let med = {
        let mut sorted = cost.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted[(sorted.len() - 1) / 2]
    };
    if med <= 0.0 {
        // at least half the pairs coincide; the zero plan cost is optimal
        // only when the clouds are identical multisets, otherwise fall back
        // to the mean as the scale
        let mean = cost.iter().sum::<f64>() / (n * n) as f64;
        if mean == 0.0 {
            return Ok(TransportResult {
                distance: 0.0,
                p,
                method: TransportMethod::Sinkhorn,
                plan_cost: 0.0,
                iterations: 0,
                converged: true,
            });
        }
        return sinkhorn_scaled(&cost, n, p, epsilon / mean, mean, max_iter);
    }
    sinkhorn_scaled(&cost, n, p, epsilon / med, med, max_iter)
}

fn sinkhorn_scaled(
    cost_raw: &[f64],
    n: usize,
    p: f64,
    eps_target: f64,
    scale: f64,
    max_iter: u64,
) -> Result<TransportResult> {
    let cost: Vec<f64> = cost_raw.iter().map(|c| c / scale).collect();
    let a = 1.0 / n as f64; // uniform marginals
    let ln_a = a.ln();
    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; n];
    let mut iterations = 0u64;
    let mut converged = false;

    // epsilon scaling: halve from a unit temperature down to the target
    let mut levels = Vec::new();
    let mut e = eps_target.max(1e-300);
    while e < 1.0 {
        levels.push(e);
        e *= 2.0;
    }
    levels.push(e.min(1.0_f64.max(eps_target)));
    levels.reverse();

    let mut plan = vec![0.0f64; n * n];
    'outer: for (li, &eps) in levels.iter().enumerate() {
        let final_level = li + 1 == levels.len();
        let tol = if final_level { MARGINAL_TOL } else { 1e-3 };
        loop {
            if iterations >= max_iter {
                break 'outer;
            }
            iterations += 1;
            // f update then g update, each a row/column log-sum-exp
            for i in 0..n {
                let row = &cost[i * n..(i + 1) * n];
                let mut m = f64::NEG_INFINITY;
                for j in 0..n {
                    let v = (g[j] - row[j]) / eps;
                    if v > m {
                        m = v;
                    }
                }
                let s: f64 = (0..n).map(|j| ((g[j] - row[j]) / eps - m).exp()).sum();
                f[i] = eps * (ln_a - m - s.ln());
            }
            for j in 0..n {
                let mut m = f64::NEG_INFINITY;
                for i in 0..n {
                    let v = (f[i] - cost[i * n + j]) / eps;
                    if v > m {
                        m = v;
                    }
                }
                let s: f64 = (0..n).map(|i| ((f[i] - cost[i * n + j]) / eps - m).exp()).sum();
                g[j] = eps * (ln_a - m - s.ln());
            }
            // marginal violation of the implied plan
            for i in 0..n {
                for j in 0..n {
                    plan[i * n + j] = ((f[i] + g[j] - cost[i * n + j]) / eps).exp();
                }
            }
            let mut viol = 0.0;
            for i in 0..n {
                let rs: f64 = plan[i * n..(i + 1) * n].iter().sum();
                viol += (rs - a).abs();
            }
            for j in 0..n {
                let cs: f64 = (0..n).map(|i| plan[i * n + j]).sum();
                viol += (cs - a).abs();
            }
            if viol <= tol {
                if final_level {
                    converged = true;
                }
                break;
            }
        }
    }

    round_to_feasible(&mut plan, n, 1.0 / n as f64);
    let plan_cost: f64 = plan
        .iter()
        .zip(cost_raw.iter())
        .map(|(pl, c)| pl * c)
        .sum();
    Ok(TransportResult {
        distance: plan_cost.max(0.0).powf(1.0 / p),
        p,
        method: TransportMethod::Sinkhorn,
        plan_cost,
        iterations,
        converged,
    })
}

/// Project a nonnegative matrix onto the transport polytope with uniform
/// marginals `a` (row and column sums): scale rows down, then columns, then
/// spread the missing mass as a rank-one correction.
fn round_to_feasible(plan: &mut [f64], n: usize, a: f64) {
    for i in 0..n {
        let rs: f64 = plan[i * n..(i + 1) * n].iter().sum();
        if rs > a && rs > 0.0 {
            let r = a / rs;
            for v in &mut plan[i * n..(i + 1) * n] {
                *v *= r;
            }
        }
    }
    let mut col_sums = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            col_sums[j] += plan[i * n + j];
        }
    }
    for j in 0..n {
        if col_sums[j] > a && col_sums[j] > 0.0 {
            let r = a / col_sums[j];
            for i in 0..n {
                plan[i * n + j] *= r;
            }
        }
    }
    let mut row_err = vec![0.0f64; n];
    let mut col_err = vec![0.0f64; n];
    let mut total_err = 0.0;
    for i in 0..n {
        let rs: f64 = plan[i * n..(i + 1) * n].iter().sum();
        row_err[i] = (a - rs).max(0.0);
        total_err += row_err[i];
    }
    for j in 0..n {
        let cs: f64 = (0..n).map(|i| plan[i * n + j]).sum();
        col_err[j] = (a - cs).max(0.0);
    }
    if total_err > 0.0 {
        for i in 0..n {
            if row_err[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                plan[i * n + j] += row_err[i] * col_err[j] / total_err;
            }
        }
    }
}
