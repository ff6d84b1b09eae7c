//! Quadrature and root bracketing used by the numeric formula mode.

/// Deepest bisection level of [`adaptive_simpson`] before accepting an estimate.
const MAX_DEPTH: u32 = 40;

/// Integrates `f` over `[a, b]` by adaptive Simpson with Richardson
/// correction, to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, m, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // a correction at rounding level cannot be improved by subdividing
    let noise = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= (15.0 * tol).max(noise) || m <= a || b <= m {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates over `[a, b]` piecewise, splitting at every `breakpoint` inside
/// the interval and into `pieces` equal panels per segment. The tolerance is
/// shared out in proportion to panel width.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    pieces: usize,
    tol: f64,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let width = b - a;
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let step = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let x0 = lo + step * k as f64;
            let x1 = if k + 1 == pieces {
                hi
            } else {
                lo + step * (k + 1) as f64
            };
            total += adaptive_simpson(f, x0, x1, tol * (x1 - x0) / width);
        }
    }
    total
}

/// Largest `t` in `[lo, hi]` with `keep(t)` true, for a predicate that holds
/// on a prefix of the interval. Requires `keep(lo)`; returns `hi` if
/// `keep(hi)`. Stops once the bracket is narrower than `tol` or cannot be
/// split further in floating point.
pub fn bisect_last<P: Fn(f64) -> bool>(keep: P, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    debug_assert!(keep(lo));
    if keep(hi) {
        return hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if keep(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
