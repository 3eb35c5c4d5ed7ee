//! Adaptive Simpson quadrature.
//!
//! Used for the discrete-vs-normal transport cost and for Orlicz-norm
//! expectations that have no closed form.

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Classic recursive Simpson with Richardson acceptance (the 1/15 rule).
/// The recursion depth is capped; past the cap the best estimate is taken,
/// which keeps kinked integrands (|v - z|^p at z = v) from looping forever.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_simpson_min_depth(f, a, b, tol, 0)
}

/// `adaptive_simpson` that refuses to accept before `min_depth` bisections.
///
/// The early-acceptance test can be fooled on a wide interval whose mass sits
/// between the five initial probes (a Gaussian bump inside [-40, 0], say);
/// forcing a few levels of subdivision first makes the probe grid fine
/// enough to see it.
pub fn adaptive_simpson_min_depth<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    min_depth: u32,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48, min_depth)
}

/// Relative acceptance floor: huge integrands (an Orlicz expectation past
/// its divergence point, say) terminate without chasing absolute tolerance
/// they can never reach.
const REL_TOL: f64 = 1e-12;

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    min_depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let accept = tol + REL_TOL * (left + right).abs();
    if depth == 0 || (min_depth == 0 && delta.abs() <= 15.0 * accept) {
        return left + right + delta / 15.0;
    }
    let next_min = min_depth.saturating_sub(1);
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, next_min)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, next_min)
}

/// Subdivision depth that brings panels of a `width`-wide interval down to
/// `target` or finer (capped so narrow plateaus stay cheap).
pub fn depth_for_width(width: f64, target: f64) -> u32 {
    if !(width > target) {
        return 0;
    }
    ((width / target).log2().ceil() as u32).min(8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        // Simpson is exact on cubics.
        let v = adaptive_simpson(&|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn integrates_exp() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn handles_kink() {
        // |x - 0.3| over [0,1] = 0.3^2/2 + 0.7^2/2
        let v = adaptive_simpson(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10);
        assert!((v - (0.045 + 0.245)).abs() < 1e-8);
    }

    #[test]
    fn forced_depth_sees_localized_bump() {
        // Gaussian bump at -1.5 inside [-40, 0]: the plain 5-point probe
        // misses it entirely
        let f = |x: f64| (-8.0 * (x + 1.5) * (x + 1.5)).exp();
        let want = (std::f64::consts::PI / 8.0).sqrt();
        let forced = adaptive_simpson_min_depth(&f, -40.0, 0.0, 1e-12, 8);
        assert!((forced - want).abs() < 1e-9, "{forced} vs {want}");
    }
}
