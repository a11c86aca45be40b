use crate::error::{OrbitaError, Result};

fn midpoint(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > 4.0 * lo {
        (lo * hi).sqrt()
    } else {
        0.5 * (lo + hi)
    }
}

/// Root of `f` on a sign-changing bracket `[lo, hi]`, using Newton steps that fall
/// back to bisection whenever they leave the bracket or stall. `f` returns the value
/// and derivative.
pub(crate) fn safe_newton<F>(mut f: F, lo: f64, hi: f64, guess: Option<f64>, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(OrbitaError::RootNotConverged(format!(
            "no sign change on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    newton_in_bracket(f, lo, hi, flo.signum(), guess, max_iter)
}

/// As [`safe_newton`] when the sign of `f(lo)` is already known.
pub(crate) fn newton_in_bracket<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    lo_sign: f64,
    guess: Option<f64>,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    try_newton_in_bracket(|x| Ok(f(x)), lo, hi, lo_sign, guess, 2.0 * f64::EPSILON, max_iter)
}

/// Bracketed Newton iteration for a fallible `f`, stopping at relative step `xtol`.
pub(crate) fn try_newton_in_bracket<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    lo_sign: f64,
    guess: Option<f64>,
    xtol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut x = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => midpoint(lo, hi),
    };
    let mut dx_old = hi - lo;
    for _ in 0..max_iter {
        let (fx, dfx) = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let use_newton = newton.is_finite()
            && newton > lo
            && newton < hi
            && (2.0 * fx).abs() <= (dx_old * dfx).abs();
        let next = if use_newton { newton } else { midpoint(lo, hi) };
        dx_old = (next - x).abs();
        let tol = xtol * next.abs().max(f64::MIN_POSITIVE);
        if dx_old <= tol || hi - lo <= xtol * lo.abs().max(hi.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(OrbitaError::RootNotConverged(format!(
        "no convergence in {max_iter} iterations on [{lo}, {hi}]"
    )))
}

/// Bisection on a sign change, for functions without a cheap derivative.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> f64
where
    F: FnMut(f64) -> f64,
{
    let lo_sign = f(lo).signum();
    for _ in 0..max_iter {
        let mid = midpoint(lo, hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
