//! Bracketed scalar root finding: bisection to machine width, with an
//! optional Newton polish when the derivative is available.

/// Root of f on [lo, hi]; f(lo) and f(hi) must have opposite signs
/// (either may be zero). Bisects to relative width `rtol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rtol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rtol * mid.abs().max(f64::MIN_POSITIVE) {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Newton refinement from an initial guess, falling back to the guess
/// when iterations stall. Intended as a polish after bracketing.
pub fn newton_polish<F, D>(mut f: F, mut df: D, x0: f64, iters: u32) -> f64
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let mut x = x0;
    for _ in 0..iters {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let xn = x - step;
        if !xn.is_finite() {
            break;
        }
        x = xn;
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn polish_hits_machine_precision() {
        let r0 = bisect(|x| x * x * x + x - 2.0, 0.0, 2.0, 1e-8).unwrap();
        let r = newton_polish(|x| x * x * x + x - 2.0, |x| 3.0 * x * x + 1.0, r0, 8);
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn no_bracket_is_none() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }
}
