//! Summand distribution specifications.
//!
//! A `DistSpec` is a mean-zero law with analytic moments, log-MGF where it
//! exists, exact-in-law samplers for sums of n i.i.d. copies (plain and
//! exponentially tilted), and psi_alpha Orlicz norms.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, StandardNormal};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Rademacher,
    /// Two-sided exponential with scale `b`; `laplace_unit_var` fixes b = 1/sqrt(2).
    Laplace { b: f64 },
    /// Exp(rate) shifted to mean zero.
    CenteredExponential { rate: f64 },
    /// Uniform on (-half_width, half_width).
    UniformCentered { half_width: f64 },
    /// Standard normal.
    Gaussian,
    /// Finitely supported law, atoms sorted by value.
    Lattice { atoms: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistSpec {
    family: Family,
    variance: f64,
}

impl DistSpec {
    pub fn rademacher() -> Self {
        DistSpec {
            family: Family::Rademacher,
            variance: 1.0,
        }
    }

    /// Laplace scaled to unit variance (scale 1/sqrt(2)).
    pub fn laplace_unit_var() -> Self {
        DistSpec {
            family: Family::Laplace { b: FRAC_1_SQRT_2 },
            variance: 1.0,
        }
    }

    /// Laplace with an explicit scale; density e^{-|x|/b}/(2b).
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn laplace_with_scale(b: f64) -> Self {
        DistSpec {
            family: Family::Laplace { b },
            variance: 2.0 * b * b,
        }
    }

    pub fn centered_exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "centered_exponential rate must be positive, got {rate}"
            )));
        }
        Ok(DistSpec {
            family: Family::CenteredExponential { rate },
            variance: 1.0 / (rate * rate),
        })
    }

    pub fn uniform_centered(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "uniform_centered half_width must be positive, got {half_width}"
            )));
        }
        Ok(DistSpec {
            family: Family::UniformCentered { half_width },
            variance: half_width * half_width / 3.0,
        })
    }

    pub fn gaussian() -> Self {
        DistSpec {
            family: Family::Gaussian,
            variance: 1.0,
        }
    }

    /// Finitely supported law; validates mean 0 (1e-12), probabilities
    /// nonnegative summing to 1 (1e-12), positive variance.
    pub fn lattice(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("lattice needs at least one atom".into()));
        }
        let mut atoms: Vec<(f64, f64)> = points.to_vec();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut total = 0.0;
        let mut mean = 0.0;
        for &(v, p) in &atoms {
            if !v.is_finite() || !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!("bad lattice atom ({v}, {p})")));
            }
            total += p;
            mean += p * v;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "lattice probabilities sum to {total}, expected 1"
            )));
        }
        if mean.abs() > 1e-12 {
            return Err(Error::Validation(format!("lattice mean is {mean}, expected 0")));
        }
        let variance: f64 = atoms.iter().map(|&(v, p)| p * v * v).sum();
        if variance <= 0.0 {
            return Err(Error::Validation("lattice variance must be positive".into()));
        }
        Ok(DistSpec {
            family: Family::Lattice { atoms },
            variance,
        })
    }

    /// Lattice recentred and rescaled to mean 0, variance 1.
    pub fn lattice_standardized(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("lattice needs at least one atom".into()));
        }
        let total: f64 = points.iter().map(|&(_, p)| p).sum();
        if !(total > 0.0) {
            return Err(Error::Validation("lattice total mass must be positive".into()));
        }
        let mean: f64 = points.iter().map(|&(v, p)| p * v).sum::<f64>() / total;
        let var: f64 = points.iter().map(|&(v, p)| p * (v - mean) * (v - mean)).sum::<f64>() / total;
        if !(var > 0.0) {
            return Err(Error::Validation("lattice variance must be positive".into()));
        }
        let sd = var.sqrt();
        let pts: Vec<(f64, f64)> = points.iter().map(|&(v, p)| ((v - mean) / sd, p / total)).collect();
        // exact recentring can leave ~1e-16 residuals; fold them away
        let resid: f64 = pts.iter().map(|&(v, p)| p * v).sum();
        let pts: Vec<(f64, f64)> = pts.iter().map(|&(v, p)| (v - resid, p)).collect();
        DistSpec::lattice(&pts)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Raw moment E X^k for k = 2, 3, 4 (mean is 0 by construction).
    pub fn moment(&self, k: u32) -> f64 {
        match k {
            0 => 1.0,
            1 => 0.0,
            2 => self.variance,
            3 => match &self.family {
                Family::CenteredExponential { rate } => 2.0 / rate.powi(3),
                Family::Lattice { atoms } => atoms.iter().map(|&(v, p)| p * v * v * v).sum(),
                _ => 0.0, // symmetric families
            },
            4 => match &self.family {
                Family::Rademacher => 1.0,
                Family::Laplace { b } => 24.0 * b.powi(4),
                Family::CenteredExponential { rate } => 9.0 / rate.powi(4),
                Family::UniformCentered { half_width } => half_width.powi(4) / 5.0,
                Family::Gaussian => 3.0,
                Family::Lattice { atoms } => atoms.iter().map(|&(v, p)| p * v.powi(4)).sum(),
            },
            _ => panic!("moment order {k} not supported analytically"),
        }
    }

    /// Open domain (lo, hi) of the log-MGF psi(theta) = log E e^{theta X}.
    pub fn theta_domain(&self) -> (f64, f64) {
        match &self.family {
            Family::Rademacher | Family::Gaussian | Family::Lattice { .. } | Family::UniformCentered { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Family::Laplace { b } => (-1.0 / b, 1.0 / b),
            Family::CenteredExponential { rate } => (f64::NEG_INFINITY, *rate),
        }
    }

    /// Range of achievable tilted means (inf psi', sup psi'), open.
    pub fn mean_range(&self) -> (f64, f64) {
        match &self.family {
            Family::Rademacher => (-1.0, 1.0),
            Family::Laplace { .. } | Family::Gaussian => (f64::NEG_INFINITY, f64::INFINITY),
            Family::CenteredExponential { rate } => (-1.0 / rate, f64::INFINITY),
            Family::UniformCentered { half_width } => (-half_width, *half_width),
            Family::Lattice { atoms } => (atoms[0].0, atoms[atoms.len() - 1].0),
        }
    }

    /// Log-MGF; `None` outside the domain.
    pub fn log_mgf(&self, theta: f64) -> Option<f64> {
        let (lo, hi) = self.theta_domain();
        if theta <= lo || theta >= hi {
            return None;
        }
        Some(match &self.family {
            Family::Rademacher => {
                // ln cosh(theta), overflow-safe
                theta.abs() + (-2.0 * theta.abs()).exp().ln_1p() - std::f64::consts::LN_2
            }
            Family::Laplace { b } => -(-(b * theta) * (b * theta)).ln_1p(),
            Family::CenteredExponential { rate } => -theta / rate - (-theta / rate).ln_1p(),
            Family::UniformCentered { half_width } => {
                let z = theta * half_width;
                if z.abs() < 1e-4 {
                    // ln(sinh z / z) = z^2/6 - z^4/180 + O(z^6)
                    z * z / 6.0 - z.powi(4) / 180.0
                } else {
                    (z.sinh() / z).ln()
                }
            }
            Family::Gaussian => 0.5 * theta * theta,
            Family::Lattice { atoms } => {
                let m = atoms
                    .iter()
                    .map(|&(v, _)| theta * v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = atoms.iter().map(|&(v, p)| p * (theta * v - m).exp()).sum();
                m + s.ln()
            }
        })
    }

    /// Derivative of the log-MGF (the tilted mean); `None` outside the domain.
    pub fn log_mgf_prime(&self, theta: f64) -> Option<f64> {
        let (lo, hi) = self.theta_domain();
        if theta <= lo || theta >= hi {
            return None;
        }
        Some(match &self.family {
            Family::Rademacher => theta.tanh(),
            Family::Laplace { b } => 2.0 * b * b * theta / (1.0 - (b * theta) * (b * theta)),
            Family::CenteredExponential { rate } => theta / (rate * (rate - theta)),
            Family::UniformCentered { half_width } => {
                let h = *half_width;
                let z = theta * h;
                if z.abs() < 1e-4 {
                    h * (z / 3.0 - z * z * z / 45.0)
                } else {
                    h / z.tanh() - 1.0 / theta
                }
            }
            Family::Gaussian => theta,
            Family::Lattice { atoms } => {
                let m = atoms
                    .iter()
                    .map(|&(v, _)| theta * v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = atoms.iter().map(|&(v, p)| p * (theta * v - m).exp()).sum();
                let num: f64 = atoms.iter().map(|&(v, p)| p * v * (theta * v - m).exp()).sum();
                num / z
            }
        })
    }

    /// Solve psi'(theta) = target by bisection (tolerance 1e-10).
    pub fn solve_tilt(&self, target: f64) -> Result<f64> {
        let (mlo, mhi) = self.mean_range();
        if target <= mlo || target >= mhi {
            return Err(Error::Range(format!(
                "tilted mean {target} outside the MGF mean range ({mlo}, {mhi})"
            )));
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        let (dlo, dhi) = self.theta_domain();
        // bracket: expand from 0 toward the relevant domain end
        let (mut lo, mut hi);
        if target > 0.0 {
            lo = 0.0;
            hi = 1.0_f64.min(if dhi.is_finite() { dhi * 0.5 } else { 1.0 });
            while self.log_mgf_prime(hi).map_or(false, |m| m < target) {
                hi = if dhi.is_finite() { 0.5 * (hi + dhi) } else { hi * 2.0 };
                if hi > 1e12 {
                    return Err(Error::Range("tilt bracket overflow".into()));
                }
            }
        } else {
            hi = 0.0;
            lo = (-1.0_f64).max(if dlo.is_finite() { dlo * 0.5 } else { -1.0 });
            while self.log_mgf_prime(lo).map_or(false, |m| m > target) {
                lo = if dlo.is_finite() { 0.5 * (lo + dlo) } else { lo * 2.0 };
                if lo < -1e12 {
                    return Err(Error::Range("tilt bracket overflow".into()));
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-10 {
                break;
            }
            match self.log_mgf_prime(mid) {
                Some(m) if m < target => lo = mid,
                _ => hi = mid,
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// One draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::Laplace { b } => {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                b * (e1 - e2)
            }
            Family::CenteredExponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate - 1.0 / rate
            }
            Family::UniformCentered { half_width } => rng.gen_range(-half_width..*half_width),
            Family::Gaussian => StandardNormal.sample(rng),
            Family::Lattice { atoms } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
        }
    }

    /// Sum of n i.i.d. draws, exact in law, O(1) or O(#atoms) per call where
    /// the family admits it.
    pub fn sample_sum<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> f64 {
        match &self.family {
            Family::Rademacher => {
                let k = Binomial::new(n as u64, 0.5).unwrap().sample(rng);
                2.0 * k as f64 - n as f64
            }
            Family::Laplace { b } => b * (gamma_sum(n, rng) - gamma_sum(n, rng)),
            Family::CenteredExponential { rate } => (gamma_sum(n, rng) - n as f64) / rate,
            Family::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                (n as f64).sqrt() * z
            }
            Family::Lattice { atoms } => lattice_sum(atoms, n, rng),
            Family::UniformCentered { .. } => (0..n).map(|_| self.sample(rng)).sum(),
        }
    }

    /// Sum of n i.i.d. draws from the theta-tilted law, exact in law.
    pub fn sample_sum_tilted<R: Rng + ?Sized>(&self, n: usize, theta: f64, rng: &mut R) -> Result<f64> {
        let (dlo, dhi) = self.theta_domain();
        if theta <= dlo || theta >= dhi {
            return Err(Error::Range(format!("theta {theta} outside the MGF domain")));
        }
        Ok(match &self.family {
            Family::Rademacher => {
                let p_plus = 1.0 / (1.0 + (-2.0 * theta).exp());
                let k = Binomial::new(n as u64, p_plus).unwrap().sample(rng);
                2.0 * k as f64 - n as f64
            }
            Family::Laplace { b } => {
                // tilted Laplace = mixture of two exponential sides
                let lam_p = 1.0 / b - theta;
                let lam_m = 1.0 / b + theta;
                let w_plus = lam_m / (lam_p + lam_m);
                let k = Binomial::new(n as u64, w_plus).unwrap().sample(rng) as usize;
                gamma_sum(k, rng) / lam_p - gamma_sum(n - k, rng) / lam_m
            }
            Family::CenteredExponential { rate } => gamma_sum(n, rng) / (rate - theta) - n as f64 / rate,
            Family::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                n as f64 * theta + (n as f64).sqrt() * z
            }
            Family::Lattice { atoms } => {
                let m = atoms
                    .iter()
                    .map(|&(v, _)| theta * v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = atoms.iter().map(|&(v, p)| p * (theta * v - m).exp()).sum();
                let tilted: Vec<(f64, f64)> = atoms
                    .iter()
                    .map(|&(v, p)| (v, p * (theta * v - m).exp() / z))
                    .collect();
                lattice_sum(&tilted, n, rng)
            }
            Family::UniformCentered { half_width } => {
                let h = *half_width;
                let mut s = 0.0;
                for _ in 0..n {
                    let u: f64 = rng.gen();
                    // inverse CDF of density prop. to e^{theta x} on (-h, h)
                    s += if theta.abs() * h < 1e-8 {
                        -h + 2.0 * h * u
                    } else {
                        h + (u + (1.0 - u) * (-2.0 * theta * h).exp()).ln() / theta
                    };
                }
                s
            }
        })
    }

    /// E psi_alpha(|X| / t) with psi_alpha(x) = exp(x^alpha) - 1.
    ///
    /// Closed forms where available (lattice sums; Laplace and exponential at
    /// alpha = 1; Gaussian at alpha = 2), quadrature against the density of
    /// |X| otherwise. Returns +inf when the expectation diverges at this t.
    pub fn psi_alpha_expectation(&self, t: f64, alpha: f64) -> f64 {
        debug_assert!(t > 0.0 && alpha > 0.0);
        let psi = |x: f64| ((x / t).powf(alpha)).min(700.0).exp() - 1.0;
        match &self.family {
            Family::Rademacher => psi(1.0),
            Family::Lattice { atoms } => atoms.iter().map(|&(v, p)| p * psi(v.abs())).sum(),
            Family::Laplace { b } => {
                if alpha == 1.0 {
                    if t <= *b {
                        f64::INFINITY
                    } else {
                        b / (t - b)
                    }
                } else {
                    let b = *b;
                    expect_abs_quadrature(&|x| (-x / b).exp() / b, &psi, self.variance.sqrt(), t)
                }
            }
            Family::CenteredExponential { rate } => {
                let mu = 1.0 / rate;
                if alpha == 1.0 {
                    if t <= mu {
                        f64::INFINITY
                    } else {
                        let s = 1.0 / t;
                        let first = rate * (mu * s).exp() * (1.0 - (-(rate + s) * mu).exp()) / (rate + s);
                        let second = rate * (-mu * s).exp() * (-(rate - s) * mu).exp() / (rate - s);
                        first + second - 1.0
                    }
                } else {
                    let dens = move |x: f64| {
                        if x < mu {
                            rate * ((-(rate) * (mu - x)).exp() + (-(rate) * (mu + x)).exp())
                        } else {
                            rate * (-(rate) * (mu + x)).exp()
                        }
                    };
                    expect_abs_quadrature(&dens, &psi, self.variance.sqrt(), t)
                }
            }
            Family::UniformCentered { half_width } => {
                let h = *half_width;
                if (h / t).powf(alpha) >= 690.0 {
                    // the integrand tops out near e^690 over a set of mass
                    // bounded away from 0; no quadrature needed
                    return f64::INFINITY;
                }
                adaptive_simpson(&|x| psi(x) / h, 0.0, h, 1e-12)
            }
            Family::Gaussian => {
                if alpha == 2.0 {
                    let s = 2.0 / (t * t);
                    if s >= 1.0 {
                        f64::INFINITY
                    } else {
                        1.0 / (1.0 - s).sqrt() - 1.0
                    }
                } else {
                    let dens = |x: f64| 2.0 * (-0.5 * x * x).exp() / crate::special::SQRT_2PI;
                    expect_abs_quadrature(&dens, &psi, 1.0, t)
                }
            }
        }
    }
}

/// Gamma(n, 1) variate; 0 for n = 0.
fn gamma_sum<R: Rng + ?Sized>(n: usize, rng: &mut R) -> f64 {
    if n == 0 {
        return 0.0;
    }
    Gamma::new(n as f64, 1.0).unwrap().sample(rng)
}

/// Sum of n draws from a finite law, via sequential conditional binomials
/// (an exact multinomial decomposition).
fn lattice_sum<R: Rng + ?Sized>(atoms: &[(f64, f64)], n: usize, rng: &mut R) -> f64 {
    let mut remaining = n as u64;
    let mut rem_p = 1.0_f64;
    let mut s = 0.0;
    for (k, &(v, p)) in atoms.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == atoms.len() {
            s += remaining as f64 * v;
            break;
        }
        let cond = (p / rem_p).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, cond).unwrap().sample(rng);
        s += c as f64 * v;
        remaining -= c;
        rem_p = (rem_p - p).max(0.0);
    }
    s
}

/// Integral of psi(x) * dens(x) over x in [0, inf), by doubling segments.
fn expect_abs_quadrature<D: Fn(f64) -> f64, P: Fn(f64) -> f64>(dens: &D, psi: &P, sd: f64, t: f64) -> f64 {
    let f = |x: f64| psi(x) * dens(x);
    let seg = sd.max(t).max(1e-12);
    let mut total = 0.0;
    let mut a = 0.0;
    let mut b = seg;
    for _ in 0..64 {
        let part = adaptive_simpson(&f, a, b, 1e-13);
        total += part;
        if total > 1e9 {
            return f64::INFINITY;
        }
        if part.abs() < 1e-14 * total.abs().max(1.0) && a > 8.0 * seg {
            break;
        }
        a = b;
        b *= 2.0;
    }
    total
}

/// psi_alpha Orlicz norm inf{t > 0 : E psi_alpha(|X|/t) <= 1}, by monotone
/// bisection on t; absolute tolerance 1e-9.
pub fn orlicz_norm(spec: &DistSpec, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    match spec.family() {
        Family::Gaussian if alpha > 2.0 => {
            return Err(Error::Divergent(format!(
                "gaussian psi_{alpha} norm is infinite for alpha > 2"
            )))
        }
        Family::Laplace { .. } | Family::CenteredExponential { .. } if alpha > 1.0 => {
            return Err(Error::Divergent(format!(
                "sub-exponential family has infinite psi_{alpha} norm for alpha > 1"
            )))
        }
        _ => {}
    }
    let sd = spec.variance().sqrt();
    let mut lo = sd * 1e-6;
    let mut hi = sd * 1e6;
    if spec.psi_alpha_expectation(hi, alpha) > 1.0 {
        return Err(Error::Divergent(format!(
            "E psi_{alpha}(|X|/t) > 1 for all t up to {hi:e}"
        )));
    }
    if spec.psi_alpha_expectation(lo, alpha) <= 1.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        if hi - lo <= 1e-9 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if spec.psi_alpha_expectation(mid, alpha) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the upper bracket keeps E psi_alpha(|X|/t) <= 1 at the returned point
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rep_rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (diff {:e})", (a - b).abs());
    }

    #[test]
    fn lattice_validation() {
        assert!(DistSpec::lattice(&[(-1.0, 0.5), (1.0, 0.5)]).is_ok());
        assert!(DistSpec::lattice(&[(-1.0, 0.6), (1.0, 0.5)]).is_err()); // mass 1.1
        assert!(DistSpec::lattice(&[(0.0, 1.0)]).is_err()); // zero variance
        assert!(DistSpec::lattice(&[(1.0, 1.0)]).is_err()); // mean 1
    }

    #[test]
    fn lattice_standardized_has_unit_variance() {
        let d = DistSpec::lattice_standardized(&[(0.0, 0.25), (1.0, 0.5), (3.0, 0.25)]).unwrap();
        assert_close(d.variance(), 1.0, 1e-12);
        assert_close(d.moment(1), 0.0, 1e-12);
    }

    #[test]
    fn orlicz_point_mass_closed_form() {
        // |X| = c a.s.: t = c / ln 2
        for c in [0.5, 1.0, 3.0] {
            let d = DistSpec::lattice(&[(-c, 0.5), (c, 0.5)]).unwrap();
            let t = orlicz_norm(&d, 1.0).unwrap();
            assert_close(t, c / std::f64::consts::LN_2, 1e-8);
        }
    }

    #[test]
    fn orlicz_standard_laplace_is_two() {
        // E e^{|X|/t} = t/(t-1) <= 2 iff t >= 2
        let d = DistSpec::laplace_with_scale(1.0);
        let t = orlicz_norm(&d, 1.0).unwrap();
        assert_close(t, 2.0, 1e-8);
    }

    #[test]
    fn orlicz_unit_var_laplace() {
        let t = orlicz_norm(&DistSpec::laplace_unit_var(), 1.0).unwrap();
        assert_close(t, std::f64::consts::SQRT_2, 1e-8);
    }

    #[test]
    fn orlicz_gaussian_alpha2_closed_form() {
        let t = orlicz_norm(&DistSpec::gaussian(), 2.0).unwrap();
        assert_close(t, (8.0_f64 / 3.0).sqrt(), 1e-8);
    }

    #[test]
    fn orlicz_defining_property_at_solution() {
        for spec in [
            DistSpec::rademacher(),
            DistSpec::laplace_unit_var(),
            DistSpec::centered_exponential(1.0).unwrap(),
            DistSpec::uniform_centered(1.0).unwrap(),
            DistSpec::gaussian(),
        ] {
            let t = orlicz_norm(&spec, 1.0).unwrap();
            let e = spec.psi_alpha_expectation(t, 1.0);
            assert!(e <= 1.0 && e >= 1.0 - 1e-6, "E psi at norm = {e}");
        }
    }

    #[test]
    fn orlicz_rejects_divergent_orders() {
        assert!(matches!(orlicz_norm(&DistSpec::gaussian(), 2.5), Err(Error::Divergent(_))));
        assert!(matches!(
            orlicz_norm(&DistSpec::laplace_unit_var(), 1.5),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn orlicz_quadrature_agrees_with_closed_form_laplace() {
        let d = DistSpec::laplace_with_scale(1.0);
        let e_closed = d.psi_alpha_expectation(2.0, 1.0);
        assert_close(e_closed, 1.0, 1e-12); // closed form t/(t-1)-1 at t=2
        // same expectation through the generic |X|-density quadrature path
        let e_quad = {
            let psi = |x: f64| ((x / 2.0_f64).powf(1.0)).min(700.0).exp() - 1.0;
            expect_abs_quadrature(&|x: f64| (-x).exp(), &psi, d.variance().sqrt(), 2.0)
        };
        assert_close(e_quad, 1.0, 1e-7);
    }

    #[test]
    fn log_mgf_matches_derivative_numerically() {
        for spec in [
            DistSpec::rademacher(),
            DistSpec::laplace_unit_var(),
            DistSpec::centered_exponential(2.0).unwrap(),
            DistSpec::uniform_centered(1.5).unwrap(),
            DistSpec::gaussian(),
            DistSpec::lattice(&[(-2.0, 0.25), (0.0, 0.25), (1.0, 0.5)]).unwrap(),
        ] {
            for theta in [-0.3, -0.05, 0.05, 0.4] {
                if spec.log_mgf(theta).is_none() {
                    continue;
                }
                let h = 1e-6;
                let num = (spec.log_mgf(theta + h).unwrap() - spec.log_mgf(theta - h).unwrap()) / (2.0 * h);
                let ana = spec.log_mgf_prime(theta).unwrap();
                assert_close(num, ana, 1e-6);
            }
        }
    }

    #[test]
    fn psi_second_derivative_is_variance_at_zero() {
        for spec in [
            DistSpec::rademacher(),
            DistSpec::laplace_unit_var(),
            DistSpec::centered_exponential(1.0).unwrap(),
            DistSpec::uniform_centered(2.0).unwrap(),
        ] {
            let h = 1e-5;
            let second = (spec.log_mgf_prime(h).unwrap() - spec.log_mgf_prime(-h).unwrap()) / (2.0 * h);
            assert_close(second, spec.variance(), 1e-5);
        }
    }

    #[test]
    fn solve_tilt_hits_target() {
        for spec in [
            DistSpec::rademacher(),
            DistSpec::laplace_unit_var(),
            DistSpec::centered_exponential(1.0).unwrap(),
            DistSpec::gaussian(),
        ] {
            let theta = spec.solve_tilt(0.42).unwrap();
            assert_close(spec.log_mgf_prime(theta).unwrap(), 0.42, 1e-8);
        }
    }

    #[test]
    fn solve_tilt_rejects_out_of_range() {
        assert!(DistSpec::rademacher().solve_tilt(1.5).is_err());
        assert!(DistSpec::uniform_centered(1.0).unwrap().solve_tilt(-1.2).is_err());
    }

    #[test]
    fn sample_sum_matches_law_of_naive_sum() {
        // first two sample moments of the fast path vs n * dist moments
        for spec in [
            DistSpec::rademacher(),
            DistSpec::laplace_unit_var(),
            DistSpec::centered_exponential(1.0).unwrap(),
            DistSpec::lattice(&[(-1.0, 0.25), (-0.2, 0.25), (0.6, 0.5)]).unwrap(),
        ] {
            let n = 16;
            let reps = 200_000;
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for r in 0..reps {
                let mut rng = rep_rng(99, r);
                let s = spec.sample_sum(n, &mut rng);
                mean += s;
                m2 += s * s;
            }
            mean /= reps as f64;
            m2 /= reps as f64;
            let want_var = n as f64 * spec.variance();
            assert!(mean.abs() < 5.0 * (want_var / reps as f64).sqrt(), "mean {mean}");
            assert!((m2 - want_var).abs() < 0.05 * want_var, "var {m2} want {want_var}");
        }
    }

    #[test]
    fn tilted_sum_mean_matches_psi_prime() {
        let spec = DistSpec::laplace_unit_var();
        let theta = 0.5;
        let n = 32;
        let reps = 200_000;
        let mut mean = 0.0;
        for r in 0..reps {
            let mut rng = rep_rng(7, r);
            mean += spec.sample_sum_tilted(n, theta, &mut rng).unwrap();
        }
        mean /= reps as f64;
        let want = n as f64 * spec.log_mgf_prime(theta).unwrap();
        assert!((mean - want).abs() < 0.05 * want.abs().max(1.0), "{mean} vs {want}");
    }
}
