//! Exact min-cost perfect matching between equal-weight point clouds
//! (shortest augmenting path / Jonker-Volgenant style, O(n^3)).

use super::{abs_pow, euclid, Points, TransportMethod, TransportResult};
use crate::error::{Error, Result};

/// Dense cost matrices are n^2; this cap keeps them under ~135 MB.
const MAX_N: usize = 4096;

/// Exact W_p between two equal-size clouds: min-cost perfect matching on
/// costs |x_i - y_j|^p. Ties break toward the lowest index, so the cost is
/// deterministic; the reported cost is additionally summed in sorted order
/// so row shuffles reproduce it bit for bit.
pub fn wp_assignment(x: &Points, y: &Points, p: f64) -> Result<TransportResult> {
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
    let n = x.n();
    if n > MAX_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds the assignment cap {MAX_N}")));
    }
    let mut cost = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = abs_pow(euclid(x.row(i), y.row(j)), p);
        }
    }
    let assignment = solve_lap(&cost, n);
    let mut matched: Vec<f64> = (0..n).map(|i| cost[i * n + assignment[i]]).collect();
    matched.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = matched.iter().sum();
    let plan_cost = total / n as f64;
    Ok(TransportResult {
        distance: plan_cost.powf(1.0 / p),
        p,
        method: TransportMethod::Assignment,
        plan_cost,
        iterations: n as u64,
        converged: true,
    })
}

/// Shortest-augmenting-path LAP solver on a dense cost matrix.
/// Returns the column assigned to each row.
pub(crate) fn solve_lap(cost: &[f64], n: usize) -> Vec<usize> {
    let inf = f64::INFINITY;
    // 1-based arrays; p[j] = row matched to column j (0 = free)
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rep_rng;
    use crate::wasserstein::wp_empirical_1d;
    use rand::Rng;

    fn random_cloud(n: usize, d: usize, seed: u64, spread: f64) -> Points {
        let mut rng = rep_rng(seed, 0);
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() * spread - 0.5 * spread).collect();
        Points::new(data, n, d).unwrap()
    }

    #[test]
    fn lap_small_known() {
        let cost = vec![4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve_lap(&cost, 3);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn identity_matching_is_zero() {
        let x = random_cloud(33, 3, 1, 2.0);
        let r = wp_assignment(&x, &x, 2.0).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn translation_gives_shift_norm() {
        for (seed, n, d) in [(2u64, 17usize, 2usize), (3, 40, 5)] {
            let x = random_cloud(n, d, seed, 2.0);
            let v: Vec<f64> = (0..d).map(|k| 0.3 * (k as f64 + 1.0)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| x.row(i).iter().zip(&v).map(|(a, b)| a + b).collect())
                .collect();
            let y = Points::from_rows(&rows).unwrap();
            for p in [1.0, 2.0, 3.0] {
                let r = wp_assignment(&x, &y, p).unwrap();
                assert!((r.distance - norm).abs() < 1e-10, "p={p}: {} vs {norm}", r.distance);
            }
        }
    }

    #[test]
    fn one_dimensional_matches_sorted_coupling() {
        let mut rng = rep_rng(4, 0);
        let xs: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() * 3.0).collect();
        let ys: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() * 3.0 - 1.0).collect();
        for p in [1.0, 2.0, 2.5] {
            let a = wp_assignment(
                &Points::from_scalars(&xs).unwrap(),
                &Points::from_scalars(&ys).unwrap(),
                p,
            )
            .unwrap();
            let b = wp_empirical_1d(&xs, &ys, p).unwrap();
            assert!((a.distance - b.distance).abs() < 1e-10);
        }
    }

    #[test]
    fn permutation_invariance_bitwise() {
        let x = random_cloud(24, 2, 8, 1.0);
        let y = random_cloud(24, 2, 9, 1.0);
        let base = wp_assignment(&x, &y, 2.0).unwrap();
        // rotate rows of x by 7 and of y by 11
        let xr: Vec<Vec<f64>> = (0..24).map(|i| x.row((i + 7) % 24).to_vec()).collect();
        let yr: Vec<Vec<f64>> = (0..24).map(|i| y.row((i + 11) % 24).to_vec()).collect();
        let shuffled = wp_assignment(
            &Points::from_rows(&xr).unwrap(),
            &Points::from_rows(&yr).unwrap(),
            2.0,
        )
        .unwrap();
        assert_eq!(base.distance.to_bits(), shuffled.distance.to_bits());
        assert_eq!(base.plan_cost.to_bits(), shuffled.plan_cost.to_bits());
    }

    #[test]
    fn symmetry() {
        let x = random_cloud(20, 3, 10, 1.5);
        let y = random_cloud(20, 3, 11, 1.5);
        let a = wp_assignment(&x, &y, 2.0).unwrap();
        let b = wp_assignment(&y, &x, 2.0).unwrap();
        assert_eq!(a.distance.to_bits(), b.distance.to_bits());
    }

    #[test]
    fn size_cap_rejected() {
        let x = random_cloud(2, 1, 1, 1.0);
        let y = random_cloud(3, 1, 1, 1.0);
        assert!(wp_assignment(&x, &y, 2.0).is_err());
    }
}
