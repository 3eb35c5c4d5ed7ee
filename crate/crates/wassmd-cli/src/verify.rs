//! The runtime verification suite: every module's invariants checked at
//! desk scale. `wassmd verify [--filter tag]` prints one pass/fail line per
//! check and exits nonzero iff any check fails.

use nalgebra::DMatrix;
use wassmd::bounds::{certificate_bound, t4_translate, BoundProfile};
use wassmd::dist::{orlicz_norm, DistSpec};
use wassmd::models::{
    comb_variance, dependency_stats, draw_pair, exact_pair_conditionals, sample_w, Model,
};
use wassmd::montecarlo::{estimate_tail, ratio_curve, TailMethod};
use wassmd::oracles::{convolve_iid_pmf, enumerate_comb, exact_tail_ratio, TailReference};
use wassmd::special::{chi_density, chi_upper_tail, normal_density, normal_quantile, normal_upper_tail};
use wassmd::stats::ks_statistic;
use wassmd::wasserstein::{
    wp_assignment, wp_discrete_vs_normal, wp_empirical_1d, wp_sample_vs_normal, wp_sinkhorn, Points,
};

pub struct Check {
    pub name: &'static str,
    pub run: fn() -> Result<(), String>,
}

pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn fail(msg: impl Into<String>) -> Result<(), String> {
    Err(msg.into())
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        fail(msg)
    }
}

// ---- core ------------------------------------------------------------

fn core_normal_tail_monotone() -> Result<(), String> {
    // strictness is checked on the log tail: the linear value saturates at
    // 1.0 below x ~ -8.3 where f64 cannot represent 1 - Q(-x)
    let mut last_value = f64::INFINITY;
    let mut last_log = f64::INFINITY;
    for k in 0..=1000 {
        let x = -10.0 + 0.02 * k as f64;
        let t = normal_upper_tail(x);
        ensure(t.value <= last_value, format!("tail value increased at x = {x}"))?;
        ensure(t.log_value < last_log, format!("log tail not strictly decreasing at x = {x}"))?;
        last_value = t.value;
        last_log = t.log_value;
    }
    Ok(())
}

fn core_birnbaum() -> Result<(), String> {
    for k in 0..=1000 {
        let x = 0.01 * k as f64;
        let lhs = normal_density(x) / normal_upper_tail(x).value;
        ensure(lhs <= 1.0 + x + 1e-12, format!("phi/Q = {lhs} > 1 + x at x = {x}"))?;
    }
    Ok(())
}

fn core_chi_tail_monotone() -> Result<(), String> {
    // same convention as the normal tail: strict decrease on the log scale,
    // monotone non-increase on the saturating linear scale
    for d in 1..=16u32 {
        let at0 = chi_upper_tail(0.0, d).map_err(|e| e.to_string())?.value;
        ensure(at0 == 1.0, format!("chi tail at 0 is {at0} for d = {d}"))?;
        let mut last_value = f64::INFINITY;
        let mut last_log = f64::INFINITY;
        for k in 0..=200 {
            let x = 0.05 * k as f64 + 0.05;
            let t = chi_upper_tail(x, d).map_err(|e| e.to_string())?;
            ensure(t.value <= last_value, format!("chi tail increased at x = {x}, d = {d}"))?;
            ensure(
                t.log_value < last_log,
                format!("chi log tail not strictly decreasing at x = {x}, d = {d}"),
            )?;
            last_value = t.value;
            last_log = t.log_value;
        }
    }
    Ok(())
}

fn core_chi_density_ratio() -> Result<(), String> {
    for d in 2..=16u32 {
        for k in 1..=100 {
            let x = 0.1 * k as f64;
            let f = chi_density(x, d).map_err(|e| e.to_string())?;
            let q = chi_upper_tail(x, d).map_err(|e| e.to_string())?.value;
            ensure(f / q <= x * (1.0 + 1e-10), format!("f/Q = {} > x = {x} at d = {d}", f / q))?;
        }
    }
    Ok(())
}

fn core_orlicz_homogeneous() -> Result<(), String> {
    let base = DistSpec::lattice(&[(-1.2, 0.25), (0.4, 0.75)]).map_err(|e| e.to_string())?;
    let t1 = orlicz_norm(&base, 1.0).map_err(|e| e.to_string())?;
    for s in [0.5, 2.0, 7.0] {
        let scaled = DistSpec::lattice(&[(-1.2 * s, 0.25), (0.4 * s, 0.75)]).map_err(|e| e.to_string())?;
        let ts = orlicz_norm(&scaled, 1.0).map_err(|e| e.to_string())?;
        ensure(
            (ts - s * t1).abs() <= 1e-8 * (1.0 + s * t1),
            format!("scaling by {s}: {ts} vs {}", s * t1),
        )?;
    }
    Ok(())
}

// ---- wasserstein -----------------------------------------------------

fn wass_monotone_in_p() -> Result<(), String> {
    let xs: Vec<f64> = (0..48).map(|k| ((k * 37 % 48) as f64 - 23.5) / 10.0).collect();
    let ys: Vec<f64> = (0..48).map(|k| ((k * 29 % 48) as f64 - 20.0) / 9.0).collect();
    let px = Points::from_scalars(&xs).map_err(|e| e.to_string())?;
    let py = Points::from_scalars(&ys).map_err(|e| e.to_string())?;
    let atoms = [(-1.0, 0.5), (1.0, 0.5)];
    let mut prev = [0.0f64; 5];
    for &p in &[1.0, 1.5, 2.0, 3.0, 4.0, 6.0] {
        let ds = [
            wp_empirical_1d(&xs, &ys, p).map_err(|e| e.to_string())?.distance,
            wp_sample_vs_normal(&xs, p).map_err(|e| e.to_string())?.distance,
            wp_discrete_vs_normal(&atoms, p).map_err(|e| e.to_string())?.distance,
            wp_assignment(&px, &py, p).map_err(|e| e.to_string())?.distance,
            wp_sinkhorn(&px, &py, p, 0.05, 5000).map_err(|e| e.to_string())?.distance,
        ];
        for (i, &d) in ds.iter().enumerate() {
            ensure(d >= prev[i] - 1e-9, format!("op {i} not monotone at p = {p}"))?;
        }
        prev = ds;
    }
    Ok(())
}

fn wass_symmetry() -> Result<(), String> {
    let xs: Vec<f64> = (0..32).map(|k| (k as f64 * 0.37).sin()).collect();
    let ys: Vec<f64> = (0..32).map(|k| (k as f64 * 0.53).cos()).collect();
    let a = wp_empirical_1d(&xs, &ys, 2.0).map_err(|e| e.to_string())?;
    let b = wp_empirical_1d(&ys, &xs, 2.0).map_err(|e| e.to_string())?;
    ensure(a.distance == b.distance, "wp_empirical_1d asymmetric")?;
    let px = Points::from_scalars(&xs).map_err(|e| e.to_string())?;
    let py = Points::from_scalars(&ys).map_err(|e| e.to_string())?;
    let c = wp_assignment(&px, &py, 2.0).map_err(|e| e.to_string())?;
    let d = wp_assignment(&py, &px, 2.0).map_err(|e| e.to_string())?;
    ensure(c.distance == d.distance, "wp_assignment asymmetric")
}

fn wass_triangle() -> Result<(), String> {
    for seed in 0..8 {
        let a: Vec<f64> = (0..24).map(|k| ((k * 31 + seed * 7) % 24) as f64 / 6.0).collect();
        let b: Vec<f64> = (0..24).map(|k| ((k * 17 + seed * 11) % 24) as f64 / 5.0 - 1.0).collect();
        let c: Vec<f64> = (0..24).map(|k| ((k * 13 + seed * 3) % 24) as f64 / 7.0 - 2.0).collect();
        for p in [1.0, 2.0] {
            let ab = wp_empirical_1d(&a, &b, p).map_err(|e| e.to_string())?.distance;
            let bc = wp_empirical_1d(&b, &c, p).map_err(|e| e.to_string())?.distance;
            let ac = wp_empirical_1d(&a, &c, p).map_err(|e| e.to_string())?.distance;
            ensure(ac <= ab + bc + 1e-10, format!("triangle violated: {ac} > {ab} + {bc}"))?;
        }
    }
    Ok(())
}

fn wass_assignment_permutation_invariant() -> Result<(), String> {
    let n = 20;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()])
        .collect();
    let rows_y: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![(i as f64 * 0.9).cos(), (i as f64 * 0.4).sin()])
        .collect();
    let base = wp_assignment(
        &Points::from_rows(&rows).map_err(|e| e.to_string())?,
        &Points::from_rows(&rows_y).map_err(|e| e.to_string())?,
        2.0,
    )
    .map_err(|e| e.to_string())?;
    let rot: Vec<Vec<f64>> = (0..n).map(|i| rows[(i + 9) % n].clone()).collect();
    let shuf = wp_assignment(
        &Points::from_rows(&rot).map_err(|e| e.to_string())?,
        &Points::from_rows(&rows_y).map_err(|e| e.to_string())?,
        2.0,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        base.distance.to_bits() == shuf.distance.to_bits(),
        "assignment distance changed under row shuffle",
    )
}

fn wass_quantile_lattice_refines() -> Result<(), String> {
    let mut last = f64::INFINITY;
    for k in 6..=14 {
        let n = 1usize << k;
        let atoms: Vec<(f64, f64)> = (0..n)
            .map(|i| (normal_quantile((i as f64 + 0.5) / n as f64), 1.0 / n as f64))
            .collect();
        let d = wp_discrete_vs_normal(&atoms, 2.0).map_err(|e| e.to_string())?.distance;
        ensure(d < last, format!("not strictly decreasing at n = 2^{k}"))?;
        last = d;
    }
    Ok(())
}

fn wass_sinkhorn_upper_bounds_assignment() -> Result<(), String> {
    for seed in 1..=3u64 {
        let rows_x: Vec<Vec<f64>> = (0..24)
            .map(|i| vec![((i as u64 * 7 + seed) as f64 * 0.61).sin(), ((i as u64 * 3 + seed) as f64 * 0.47).cos()])
            .collect();
        let rows_y: Vec<Vec<f64>> = (0..24)
            .map(|i| vec![((i as u64 * 5 + seed) as f64 * 0.83).cos(), ((i as u64 * 11 + seed) as f64 * 0.29).sin()])
            .collect();
        let x = Points::from_rows(&rows_x).map_err(|e| e.to_string())?;
        let y = Points::from_rows(&rows_y).map_err(|e| e.to_string())?;
        let exact = wp_assignment(&x, &y, 2.0).map_err(|e| e.to_string())?;
        let sk = wp_sinkhorn(&x, &y, 2.0, 0.02, 20_000).map_err(|e| e.to_string())?;
        ensure(
            sk.plan_cost >= exact.plan_cost - 1e-9,
            format!("sinkhorn cost {} beats exact {}", sk.plan_cost, exact.plan_cost),
        )?;
    }
    Ok(())
}

// ---- models ----------------------------------------------------------

fn models_exchangeability() -> Result<(), String> {
    // paired statistic: keep lambda <= ~1/4 so its null sits below the
    // threshold (the coupling correlation is 1 - lambda)
    let reps = 100_000u64;
    let threshold = 1.63 / (reps as f64).sqrt();
    // continuous summands: lattice-valued W makes the paired statistic
    // jump at shared atoms, which the continuous threshold does not cover
    let v8 = 1.0 / 16.0f64.sqrt();
    let models: Vec<Model> = vec![
        Model::iid_sum(6, DistSpec::laplace_unit_var()).map_err(|e| e.to_string())?,
        Model::comb_clt_deterministic(centered_matrix(8)).map_err(|e| e.to_string())?,
        Model::hom_sum(
            2,
            8,
            vec![
                (vec![0, 1], v8),
                (vec![2, 3], v8),
                (vec![4, 5], v8),
                (vec![6, 7], v8),
            ],
            DistSpec::gaussian(),
        )
        .map_err(|e| e.to_string())?,
    ];
    for model in &models {
        let mut u = Vec::with_capacity(reps as usize);
        let mut v = Vec::with_capacity(reps as usize);
        for r in 0..reps {
            let pd = draw_pair(model, r.wrapping_mul(2654435761).wrapping_add(17)).map_err(|e| e.to_string())?;
            u.push(pd.w[0] + 2.0 * pd.w_prime[0]);
            v.push(pd.w_prime[0] + 2.0 * pd.w[0]);
        }
        let ks = ks_statistic(&u, &v);
        ensure(
            ks <= threshold,
            format!("{}: KS = {ks} above {threshold}", model.tag()),
        )?;
    }
    Ok(())
}

fn centered_matrix(n: usize) -> DMatrix<f64> {
    // continuous entries: a modular integer pattern would give S large
    // atoms and break the continuous KS threshold downstream
    use rand::Rng;
    let mut rng = wassmd::rng::rep_rng(0xC0FFEE, n as u64);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
    center(&a)
}

fn center(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let gm = a.sum() / (n * n) as f64;
    let mut c = a.clone();
    for i in 0..n {
        let rm = a.row(i).sum() / n as f64;
        for j in 0..n {
            let cm = a.column(j).sum() / n as f64;
            c[(i, j)] = a[(i, j)] - rm - cm + gm;
        }
    }
    c
}

fn models_exact_linearity() -> Result<(), String> {
    let cases: Vec<Model> = vec![
        Model::iid_sum(6, DistSpec::rademacher()).map_err(|e| e.to_string())?,
        Model::comb_clt_deterministic(centered_matrix(4)).map_err(|e| e.to_string())?,
        Model::hom_sum(
            2,
            6,
            vec![
                (vec![0, 1], 1.0 / 12.0f64.sqrt()),
                (vec![2, 3], 1.0 / 12.0f64.sqrt()),
                (vec![4, 5], 1.0 / 12.0f64.sqrt()),
            ],
            DistSpec::rademacher(),
        )
        .map_err(|e| e.to_string())?,
    ];
    for model in &cases {
        let cert = exact_pair_conditionals(model, 2.0).map_err(|e| e.to_string())?;
        ensure(
            cert.max_linearity_residual <= 1e-12,
            format!("{}: residual {}", model.tag(), cert.max_linearity_residual),
        )?;
    }
    Ok(())
}

fn models_comb_law_moments() -> Result<(), String> {
    let c = centered_matrix(5);
    let pmf = enumerate_comb(&c).map_err(|e| e.to_string())?;
    ensure(pmf.mean().abs() <= 1e-12, format!("mean {}", pmf.mean()))?;
    ensure(
        (pmf.variance() - 1.0).abs() <= 1e-12,
        format!("variance {}", pmf.variance()),
    )
}

fn models_chaos_variance() -> Result<(), String> {
    let f = matched_pairs_chaos(16);
    let model = Model::gauss_chaos2(f).map_err(|e| e.to_string())?;
    let reps = 1_000_000;
    let sample = sample_w(&model, reps, 77).map_err(|e| e.to_string())?;
    let m2: f64 = sample.values().iter().map(|w| w * w).sum::<f64>() / reps as f64;
    let m4: f64 = sample.values().iter().map(|w| w.powi(4)).sum::<f64>() / reps as f64;
    let se = ((m4 - m2 * m2) / reps as f64).sqrt();
    ensure(
        (m2 - 1.0).abs() <= 4.0 * se,
        format!("empirical variance {m2} vs 1 (se {se})"),
    )
}

pub fn matched_pairs_chaos(n: usize) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(n, n);
    let v = 1.0 / (2.0 * n as f64).sqrt();
    for k in 0..n / 2 {
        f[(2 * k, 2 * k + 1)] = v;
        f[(2 * k + 1, 2 * k)] = v;
    }
    f
}

fn models_dependency_groups() -> Result<(), String> {
    let mdep = Model::m_dep(30, vec![0.5, 0.3, 0.2], DistSpec::gaussian()).map_err(|e| e.to_string())?;
    let stats = dependency_stats(&mdep).map_err(|e| e.to_string())?;
    ensure(stats.group_count == 3, format!("L = {} for m = 2", stats.group_count))?;
    for g in &stats.groups {
        for (a, &i) in g.iter().enumerate() {
            for &j in g.iter().skip(a + 1) {
                ensure(
                    (i as i64 - j as i64).unsigned_abs() as usize > 2,
                    format!("group members {i}, {j} are neighbors"),
                )?;
            }
        }
    }
    let graph = Model::graph_dep(
        12,
        &[(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (6, 7), (7, 8), (8, 6)],
        DistSpec::gaussian(),
    )
    .map_err(|e| e.to_string())?;
    let gs = dependency_stats(&graph).map_err(|e| e.to_string())?;
    for g in &gs.groups {
        for (a, &i) in g.iter().enumerate() {
            for &j in g.iter().skip(a + 1) {
                let adjacent = gs.neighborhoods[i].contains(&j);
                ensure(!adjacent, format!("graph group members {i}, {j} adjacent"))?;
            }
        }
    }
    Ok(())
}

// ---- bounds ----------------------------------------------------------

fn bounds_t4_monotone() -> Result<(), String> {
    let profile = BoundProfile::single(1.0, 1.0, 0.02, 1e9).map_err(|e| e.to_string())?;
    let mut last = 0.0;
    for k in 0..=100 {
        let s = t4_translate(&profile, 0.05 * k as f64).shape;
        ensure(s >= last, format!("shape not monotone in x at k = {k}"))?;
        last = s;
    }
    let mut last = 0.0;
    for k in 1..=60 {
        let profile = BoundProfile::single(1.0, 1.0, 1e-4 * k as f64, 1e9).map_err(|e| e.to_string())?;
        let s = t4_translate(&profile, 1.5).shape;
        ensure(s >= last, format!("shape not monotone in delta at k = {k}"))?;
        last = s;
    }
    Ok(())
}

fn bounds_epsilon_power() -> Result<(), String> {
    for &(alpha, delta) in &[(1.0, 1e-3), (2.0, 1e-5), (0.5, 1e-2)] {
        let profile = BoundProfile::single(1.0, alpha, delta, 1e12).map_err(|e| e.to_string())?;
        let cap = t4_translate(&profile, 0.0).range_max_x;
        let target: f64 = delta.powf(1.0 / (2.0 * alpha + 1.0));
        let mut c_fit = 0.0f64;
        for k in 0..=64 {
            let eps = t4_translate(&profile, cap * k as f64 / 64.0).intermediates["epsilon"];
            c_fit = c_fit.max(eps / target);
        }
        for k in 0..=512 {
            let eps = t4_translate(&profile, cap * k as f64 / 512.0).intermediates["epsilon"];
            ensure(eps <= c_fit * target * (1.0 + 1e-9), "epsilon escapes the fitted power")?;
        }
    }
    Ok(())
}

fn bounds_certificate_relabeling() -> Result<(), String> {
    // relabeling the lattice atoms and the tensor entries must not move a
    // bit; the two-atom law (sqrt(3), 1/4), (-1/sqrt(3), 3/4) is mean 0,
    // variance 1
    let hi = 3.0f64.sqrt();
    let lo = -1.0 / 3.0f64.sqrt();
    let mean_fix = 0.25 * hi + 0.75 * lo; // ~1e-17 from rounding
    let d1 = DistSpec::lattice(&[(hi - mean_fix, 0.25), (lo - mean_fix, 0.75)]).map_err(|e| e.to_string())?;
    let d2 = DistSpec::lattice(&[(lo - mean_fix, 0.75), (hi - mean_fix, 0.25)]).map_err(|e| e.to_string())?;
    let c1 = exact_pair_conditionals(&Model::iid_sum(5, d1).map_err(|e| e.to_string())?, 2.0)
        .map_err(|e| e.to_string())?;
    let c2 = exact_pair_conditionals(&Model::iid_sum(5, d2).map_err(|e| e.to_string())?, 2.0)
        .map_err(|e| e.to_string())?;
    let b1 = certificate_bound(&c1, 2.0).map_err(|e| e.to_string())?;
    let b2 = certificate_bound(&c2, 2.0).map_err(|e| e.to_string())?;
    ensure(b1.shape.to_bits() == b2.shape.to_bits(), "certificate changed under atom relabeling")?;

    let v = 1.0 / 8.0f64.sqrt();
    let m1 = Model::hom_sum(2, 4, vec![(vec![0, 1], v), (vec![2, 3], v)], DistSpec::rademacher())
        .map_err(|e| e.to_string())?;
    let m2 = Model::hom_sum(2, 4, vec![(vec![2, 3], v), (vec![0, 1], v)], DistSpec::rademacher())
        .map_err(|e| e.to_string())?;
    let h1 = certificate_bound(&exact_pair_conditionals(&m1, 2.0).map_err(|e| e.to_string())?, 2.0)
        .map_err(|e| e.to_string())?;
    let h2 = certificate_bound(&exact_pair_conditionals(&m2, 2.0).map_err(|e| e.to_string())?, 2.0)
        .map_err(|e| e.to_string())?;
    ensure(h1.shape.to_bits() == h2.shape.to_bits(), "certificate changed under entry relabeling")
}

// ---- oracles ---------------------------------------------------------

fn oracle_convolution_assoc() -> Result<(), String> {
    for (a, b) in [(2usize, 2usize), (1, 3)] {
        let n = a + b;
        let direct = convolve_iid_pmf(&DistSpec::rademacher(), n).map_err(|e| e.to_string())?;
        let pa = convolve_iid_pmf(&DistSpec::rademacher(), a).map_err(|e| e.to_string())?;
        let pb = convolve_iid_pmf(&DistSpec::rademacher(), b).map_err(|e| e.to_string())?;
        let (sa, sb, sn) = ((a as f64).sqrt(), (b as f64).sqrt(), (n as f64).sqrt());
        let mut raw = Vec::new();
        for &(va, qa) in pa.atoms() {
            for &(vb, qb) in pb.atoms() {
                raw.push(((va * sa + vb * sb) / sn, qa * qb));
            }
        }
        let combined = wassmd::oracles::ExactPmf::from_atoms(raw, "assoc").map_err(|e| e.to_string())?;
        ensure(combined.atoms().len() == direct.atoms().len(), "support mismatch")?;
        for (x, y) in combined.atoms().iter().zip(direct.atoms()) {
            ensure((x.0 - y.0).abs() <= 1e-12 && (x.1 - y.1).abs() <= 1e-12, "atom mismatch")?;
        }
    }
    Ok(())
}

fn oracle_mass_and_mean() -> Result<(), String> {
    let pmfs = vec![
        convolve_iid_pmf(&DistSpec::rademacher(), 12).map_err(|e| e.to_string())?,
        enumerate_comb(&centered_matrix(5)).map_err(|e| e.to_string())?,
    ];
    for pmf in &pmfs {
        let mass: f64 = pmf.atoms().iter().map(|&(_, p)| p).sum();
        ensure((mass - 1.0).abs() <= 1e-12, format!("mass {mass}"))?;
        ensure(pmf.mean().abs() <= 1e-12, format!("mean {}", pmf.mean()))?;
    }
    Ok(())
}

fn oracle_tail_ratio_monotone() -> Result<(), String> {
    let pmf = convolve_iid_pmf(&DistSpec::rademacher(), 8).map_err(|e| e.to_string())?;
    let mut last = f64::INFINITY;
    for k in -10..=10 {
        let r = exact_tail_ratio(&pmf, 0.35 * k as f64, TailReference::Normal).map_err(|e| e.to_string())?;
        ensure(r.p_w <= last, "exact tail increased in x")?;
        last = r.p_w;
    }
    Ok(())
}

fn oracle_comb_hand_enumeration() -> Result<(), String> {
    // n = 3 single-cycle pattern, hand enumeration of the 6 permutations
    let a = {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = 1.0;
        a[(1, 2)] = 1.0;
        a[(2, 0)] = 1.0;
        a
    };
    let c = center(&a);
    let pmf = enumerate_comb(&c).map_err(|e| e.to_string())?;
    let bn = comb_variance(&c, &DMatrix::zeros(3, 3)).map_err(|e| e.to_string())?.sqrt();
    let mut hand: Vec<f64> = Vec::new();
    let perms: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for perm in &perms {
        let s: f64 = (0..3).map(|i| c[(i, perm[i])]).sum();
        hand.push(s / bn);
    }
    hand.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut got: Vec<f64> = Vec::new();
    for &(v, p) in pmf.atoms() {
        let copies = (p * 6.0).round() as usize;
        for _ in 0..copies {
            got.push(v);
        }
    }
    ensure(got.len() == 6, format!("expected 6 weighted states, got {}", got.len()))?;
    for (x, y) in hand.iter().zip(&got) {
        ensure((x - y).abs() <= 1e-12, format!("hand {x} vs enumerated {y}"))?;
    }
    Ok(())
}

/// Variance-formula-vs-enumeration agreement; `perturb` multiplies the
/// formula output to let tests inject a fault (1.0 = honest check).
pub fn comb_variance_oracle_check(perturb: f64) -> Result<(), String> {
    for seed in 0..20u64 {
        let n = 3 + (seed % 5) as usize; // 3..=7
        let raw: Vec<f64> = (0..n * n)
            .map(|k| (((k as u64 + 1) * (seed + 3) * 2654435761) % 17) as f64 / 4.0 - 2.0)
            .collect();
        let c = center(&DMatrix::from_row_slice(n, n, &raw));
        let formula = comb_variance(&c, &DMatrix::zeros(n, n)).map_err(|e| e.to_string())? * perturb;
        // independent oracle: raw Var(S) over all n! permutations
        let mut perms: Vec<Vec<usize>> = Vec::new();
        permute((0..n).collect(), 0, &mut perms);
        let svals: Vec<f64> = perms
            .iter()
            .map(|perm| (0..n).map(|i| c[(i, perm[i])]).sum())
            .collect();
        let mean: f64 = svals.iter().sum::<f64>() / svals.len() as f64;
        let var: f64 = svals.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / svals.len() as f64;
        ensure(
            (formula - var).abs() <= 1e-12 * var.max(1.0),
            format!("formula {formula} vs enumerated {var} (n = {n})"),
        )?;
    }
    Ok(())
}

fn permute(mut items: Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k + 1 >= items.len() {
        out.push(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items.clone(), k + 1, out);
        items.swap(k, i);
    }
}

fn oracle_comb_variance() -> Result<(), String> {
    comb_variance_oracle_check(1.0)
}

// ---- montecarlo --------------------------------------------------------

fn mc_determinism_threads() -> Result<(), String> {
    let model = Model::iid_sum(16, DistSpec::laplace_unit_var()).map_err(|e| e.to_string())?;
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_tail(&model, 0.7, 40_000, 5, TailMethod::Plain))
        .map_err(|e| e.to_string())?;
    let eight = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap()
        .install(|| estimate_tail(&model, 0.7, 40_000, 5, TailMethod::Plain))
        .map_err(|e| e.to_string())?;
    ensure(
        one.p_hat.to_bits() == eight.p_hat.to_bits() && one.se.to_bits() == eight.se.to_bits(),
        "thread count changed the estimate",
    )
}

fn mc_tilted_unbiased() -> Result<(), String> {
    let n = 64;
    let model = Model::iid_sum(n, DistSpec::rademacher()).map_err(|e| e.to_string())?;
    let x = (n as f64).powf(1.0 / 6.0);
    let exact = convolve_iid_pmf(&DistSpec::rademacher(), n)
        .map_err(|e| e.to_string())?
        .upper_tail(x);
    let row = estimate_tail(&model, x, 100_000, 5, TailMethod::Tilted).map_err(|e| e.to_string())?;
    ensure(
        (row.p_hat - exact).abs() <= 4.0 * row.se,
        format!("tilted {} vs exact {exact} (se {})", row.p_hat, row.se),
    )
}

fn mc_coverage() -> Result<(), String> {
    let model = Model::iid_sum(4, DistSpec::rademacher()).map_err(|e| e.to_string())?;
    let exact = 0.3125;
    let mut covered = 0;
    let runs = 200;
    for seed in 0..runs {
        let row = estimate_tail(&model, 0.0, 2_000, 1000 + seed, TailMethod::Plain).map_err(|e| e.to_string())?;
        if row.ci_lo <= exact && exact <= row.ci_hi {
            covered += 1;
        }
    }
    ensure(
        covered * 10 >= runs * 9,
        format!("coverage {covered}/{runs} below 90%"),
    )
}

fn mc_ratio_consistency() -> Result<(), String> {
    let model = Model::iid_sum(9, DistSpec::laplace_unit_var()).map_err(|e| e.to_string())?;
    let report = ratio_curve(&model, &[0.0, 0.8, 1.6], 20_000, 3, TailMethod::Plain, None)
        .map_err(|e| e.to_string())?;
    for row in &report.rows {
        let want = row.p_hat / row.p_ref;
        ensure(
            (row.ratio - want).abs() <= 1e-15 * want.abs().max(1.0),
            "ratio inconsistent with p_hat/p_ref",
        )?;
    }
    Ok(())
}

pub fn all_checks() -> Vec<Check> {
    vec![
        Check { name: "core.normal_tail_monotone", run: core_normal_tail_monotone },
        Check { name: "core.birnbaum_ratio", run: core_birnbaum },
        Check { name: "core.chi_tail_monotone", run: core_chi_tail_monotone },
        Check { name: "core.chi_density_ratio", run: core_chi_density_ratio },
        Check { name: "core.orlicz_homogeneous", run: core_orlicz_homogeneous },
        Check { name: "wasserstein.monotone_in_p", run: wass_monotone_in_p },
        Check { name: "wasserstein.symmetry", run: wass_symmetry },
        Check { name: "wasserstein.triangle", run: wass_triangle },
        Check { name: "wasserstein.assignment_permutation_invariant", run: wass_assignment_permutation_invariant },
        Check { name: "wasserstein.quantile_lattice_refines", run: wass_quantile_lattice_refines },
        Check { name: "wasserstein.sinkhorn_upper_bound", run: wass_sinkhorn_upper_bounds_assignment },
        Check { name: "models.exchangeability_ks", run: models_exchangeability },
        Check { name: "models.exact_linearity", run: models_exact_linearity },
        Check { name: "models.comb_law_moments", run: models_comb_law_moments },
        Check { name: "models.chaos_variance", run: models_chaos_variance },
        Check { name: "models.dependency_groups", run: models_dependency_groups },
        Check { name: "bounds.t4_monotone", run: bounds_t4_monotone },
        Check { name: "bounds.epsilon_power_fit", run: bounds_epsilon_power },
        Check { name: "bounds.certificate_relabeling", run: bounds_certificate_relabeling },
        Check { name: "oracles.convolution_associative", run: oracle_convolution_assoc },
        Check { name: "oracles.mass_and_mean", run: oracle_mass_and_mean },
        Check { name: "oracles.tail_ratio_monotone", run: oracle_tail_ratio_monotone },
        Check { name: "oracles.comb_hand_enumeration", run: oracle_comb_hand_enumeration },
        Check { name: "oracles.comb_variance_formula", run: oracle_comb_variance },
        Check { name: "montecarlo.determinism_threads", run: mc_determinism_threads },
        Check { name: "montecarlo.tilted_unbiased", run: mc_tilted_unbiased },
        Check { name: "montecarlo.ci_coverage", run: mc_coverage },
        Check { name: "montecarlo.ratio_consistency", run: mc_ratio_consistency },
    ]
}

/// Run the suite, optionally filtered by a substring of the check name.
pub fn run_suite(filter: Option<&str>) -> Vec<CheckResult> {
    all_checks()
        .into_iter()
        .filter(|c| filter.map_or(true, |f| c.name.contains(f)))
        .map(|c| match (c.run)() {
            Ok(()) => CheckResult {
                name: c.name.into(),
                passed: true,
                detail: String::new(),
            },
            Err(msg) => CheckResult {
                name: c.name.into(),
                passed: false,
                detail: msg,
            },
        })
        .collect()
}
