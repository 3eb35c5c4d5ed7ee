//! Cross-module invariants at desk scale: exchangeability of pair draws,
//! Monte Carlo linearity of the drift, certificate monotonicity, and
//! cross-oracle consistency.

use nalgebra::DMatrix;
use wassmd::bounds::certificate_bound;
use wassmd::dist::DistSpec;
use wassmd::models::{
    draw_pair, exact_pair_conditionals, fourth_cumulant, maximal_influence, sample_w, Model,
};
use wassmd::oracles::enumerate_homsum;
use wassmd::rng::rep_rng;
use wassmd::stats::{ks_statistic, mean_se};

use rand::Rng;

fn perfect_matching_homsum(n: usize) -> Model {
    let v = 1.0 / (2.0 * n as f64).sqrt();
    let entries: Vec<(Vec<usize>, f64)> = (0..n / 2).map(|k| (vec![2 * k, 2 * k + 1], v)).collect();
    Model::hom_sum(2, n, entries, DistSpec::rademacher()).unwrap()
}

fn centered(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rep_rng(seed, 0);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
    let gm = a.sum() / (n * n) as f64;
    DMatrix::from_fn(n, n, |i, j| {
        a[(i, j)] - a.row(i).sum() / n as f64 - a.column(j).sum() / n as f64 + gm
    })
}

#[test]
fn exchangeable_pairs_pass_ks() {
    // paired two-sample statistic: its null scale grows with lambda (the
    // pair coupling weakens), so desk-scale models keep lambda <= ~1/4
    let reps = 100_000u64;
    let threshold = 1.63 / (reps as f64).sqrt();
    let models = vec![
        Model::iid_sum(6, DistSpec::laplace_unit_var()).unwrap(),
        Model::multi_iid(5, 2, DistSpec::gaussian()).unwrap(),
        Model::comb_clt_deterministic(centered(8, 3)).unwrap(),
        perfect_matching_homsum(8),
    ];
    for model in &models {
        let mut u = Vec::with_capacity(reps as usize);
        let mut v = Vec::with_capacity(reps as usize);
        for r in 0..reps {
            let pd = draw_pair(model, r).unwrap();
            // first coordinate suffices for the two-sample comparison
            u.push(pd.w[0] + 2.0 * pd.w_prime[0]);
            v.push(pd.w_prime[0] + 2.0 * pd.w[0]);
        }
        let ks = ks_statistic(&u, &v);
        assert!(ks <= threshold, "{}: KS {ks} > {threshold}", model.tag());
    }
}

#[test]
fn pair_drift_matches_minus_lambda_w() {
    // E D = -lambda E W over many draws, within 4 standard errors
    let cases: Vec<(Model, f64)> = vec![
        (Model::iid_sum(8, DistSpec::centered_exponential(1.0).unwrap()).unwrap(), 1.0 / 8.0),
        (Model::comb_clt_deterministic(centered(5, 9)).unwrap(), 2.0 / 4.0),
        (perfect_matching_homsum(8), 2.0 / 8.0),
    ];
    let reps = 1_000_000u64;
    for (model, lambda) in &cases {
        let mut combo = Vec::with_capacity(reps as usize);
        for r in 0..reps {
            let pd = draw_pair(model, r).unwrap();
            combo.push(pd.d_increment[0] + lambda * pd.w[0]);
        }
        // CombClt has a nonzero constant R = -(1/n) sum Y_ij; fold it in
        let shift = match model {
            Model::CombClt { .. } => {
                let cert = exact_pair_conditionals(model, 2.0).unwrap();
                lambda * cert.r_theory
            }
            _ => 0.0,
        };
        let (mean, se) = mean_se(&combo);
        assert!(
            (mean + shift).abs() <= 4.0 * se,
            "{}: E[D + lambda W] = {mean} (shift {shift}, se {se})",
            model.tag()
        );
    }
}

#[test]
fn certificate_shape_nondecreasing_in_p() {
    let model = Model::iid_sum(6, DistSpec::lattice_standardized(&[(-1.0, 0.3), (0.2, 0.5), (1.5, 0.2)]).unwrap())
        .unwrap();
    let mut last = 0.0;
    for p in [1.0, 2.0, 4.0, 8.0] {
        let cert = exact_pair_conditionals(&model, p).unwrap();
        let shape = certificate_bound(&cert, p).unwrap().shape;
        assert!(shape >= last - 1e-12, "shape decreased at p = {p}");
        last = shape;
    }
}

#[test]
fn homsum_fourth_moment_cross_oracle() {
    // pmf fourth moment = kappa4 + 3 for every n <= 16 matched-pairs tensor
    for n in [4usize, 8, 12, 16] {
        let model = perfect_matching_homsum(n);
        let pmf = enumerate_homsum(&model).unwrap();
        let k4 = fourth_cumulant(&model, 0, 0).unwrap();
        assert!(k4.exact);
        assert!(
            (pmf.moment(4) - (k4.kappa4 + 3.0)).abs() <= 1e-12,
            "n={n}: m4 {} vs kappa4+3 {}",
            pmf.moment(4),
            k4.kappa4 + 3.0
        );
    }
}

#[test]
fn chaos_matched_pairs_law_equals_product_sum() {
    // eigen-route chaos sampler vs the direct product representation
    // W = sum X_{2k-1} X_{2k} / sqrt(n/2), compared by two-sample KS
    let n = 16usize;
    let mut f = DMatrix::zeros(n, n);
    let v = 1.0 / (2.0 * n as f64).sqrt();
    for k in 0..n / 2 {
        f[(2 * k, 2 * k + 1)] = v;
        f[(2 * k + 1, 2 * k)] = v;
    }
    let model = Model::gauss_chaos2(f).unwrap();
    let reps = 100_000;
    let sample = sample_w(&model, reps, 11).unwrap();
    let direct: Vec<f64> = (0..reps as u64)
        .map(|r| {
            let mut rng = rep_rng(1_000_000_007, r);
            let mut s = 0.0;
            for _ in 0..n / 2 {
                let a: f64 = rng.sample(rand_distr::StandardNormal);
                let b: f64 = rng.sample(rand_distr::StandardNormal);
                s += a * b;
            }
            s / ((n / 2) as f64).sqrt()
        })
        .collect();
    let ks = ks_statistic(sample.values(), &direct);
    let threshold = 1.63 * (2.0 / reps as f64).sqrt();
    assert!(ks <= threshold, "KS {ks} > {threshold}");
}

#[test]
fn comb_clt_n2_sampler_is_uniform_pm1() {
    let c = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
    let model = Model::comb_clt_deterministic(c).unwrap();
    let sample = sample_w(&model, 40_000, 5).unwrap();
    let plus = sample.values().iter().filter(|&&w| (w - 1.0).abs() < 1e-12).count();
    let minus = sample.values().iter().filter(|&&w| (w + 1.0).abs() < 1e-12).count();
    assert_eq!(plus + minus, 40_000, "values outside {{-1, +1}}");
    let p = plus as f64 / 40_000.0;
    assert!((p - 0.5).abs() <= 4.0 * (0.25f64 / 40_000.0).sqrt(), "P(W=1) = {p}");
}

#[test]
fn iid_n1_rademacher_is_pm1() {
    let model = Model::iid_sum(1, DistSpec::rademacher()).unwrap();
    let sample = sample_w(&model, 10_000, 3).unwrap();
    assert!(sample.values().iter().all(|&w| w == 1.0 || w == -1.0));
}

#[test]
fn maximal_influence_examples() {
    for n in [2usize, 4, 8, 16] {
        let infl = maximal_influence(&perfect_matching_homsum(n)).unwrap();
        assert!((infl - 1.0 / (2.0 * n as f64)).abs() <= 1e-15);
    }
    // the single-pair tensor with value 1/sqrt(2) has influence 1/2; that
    // tensor is not unit-variance, so check it through quadratic scaling of
    // the standardized n=2 case (value 1/2, influence 1/4)
    let quarter = maximal_influence(&perfect_matching_homsum(2)).unwrap();
    let ratio = (1.0 / 2.0_f64.sqrt()) / 0.5;
    assert!((quarter * ratio * ratio - 0.5).abs() <= 1e-15);
    // standardized tensors never exceed 1/q!
    for n in [4usize, 10] {
        let infl = maximal_influence(&perfect_matching_homsum(n)).unwrap();
        assert!(infl <= 0.5 + 1e-15);
    }
}

#[test]
fn dependency_stats_examples() {
    // independence: theta1 = 1, theta2 = 2
    let indep = Model::m_dep(8, vec![1.0], DistSpec::gaussian()).unwrap();
    let s = wassmd::models::dependency_stats(&indep).unwrap();
    assert_eq!(s.theta1, 1);
    assert_eq!(s.theta2, 2);
    assert_eq!(s.group_count, 1);
    // interior windows: theta1 = 2m+1 for n > 2m, L = m+1
    for m in [1usize, 2, 3] {
        let kernel = vec![1.0; m + 1];
        let model = Model::m_dep(20, kernel, DistSpec::gaussian()).unwrap();
        let s = wassmd::models::dependency_stats(&model).unwrap();
        assert_eq!(s.theta1, 2 * m + 1, "m = {m}");
        assert_eq!(s.group_count, m + 1);
    }
}
