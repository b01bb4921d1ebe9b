//! Gauss–Kronrod adaptive quadrature and composite Simpson rules.

/// Kronrod 15-point abscissae (positive half, descending).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod 15-point weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss 7-point weights for abscissae XGK\[1\], XGK\[3\], XGK\[5\], XGK\[7\].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 7/15 panel: returns (K15 value, |K15 − G7| estimate).
pub fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    for j in 0..8 {
        let x = half * XGK[j];
        let (fl, fr) = if j == 7 {
            let fc = f(c);
            (fc, 0.0)
        } else {
            (f(c - x), f(c + x))
        };
        let fsum = fl + fr;
        kron += WGK[j] * fsum;
        if j % 2 == 1 || j == 7 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kron * half, (kron - gauss).abs() * half)
}

/// Adaptive Gauss–Kronrod panels over [a, b] with mixed tolerance.
///
/// Panels are bisected until the local error estimate drops below the
/// proportional share of the requested tolerance.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64, QuadFailure> {
    if a == b {
        return Ok(0.0);
    }
    let (rough, _) = gauss_kronrod_15(&mut f, a, b);
    let tol = atol.max(rtol * rough.abs()).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    // Explicit stack of (lo, hi, tol_share, depth).
    let mut stack = vec![(a, b, tol, 0u32)];
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (val, err) = gauss_kronrod_15(&mut f, lo, hi);
        if !val.is_finite() {
            return Err(QuadFailure::NonFinite { at: 0.5 * (lo + hi) });
        }
        // Accept at the requested share, at the rounding floor of the
        // panel, or when the panel cannot be split further.
        let floor = 8.0 * f64::EPSILON * (val.abs() + rough.abs());
        if err <= t.max(floor) || (hi - lo).abs() <= 1e-15 * (lo.abs() + hi.abs()) {
            total += val;
        } else if depth >= 48 {
            return Err(QuadFailure::NoConvergence { err, tol: t });
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * t, depth + 1));
            stack.push((mid, hi, 0.5 * t, depth + 1));
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuadFailure {
    NonFinite { at: f64 },
    NoConvergence { err: f64, tol: f64 },
}

impl std::fmt::Display for QuadFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuadFailure::NonFinite { at } => write!(f, "integrand non-finite near x = {at}"),
            QuadFailure::NoConvergence { err, tol } => {
                write!(f, "quadrature stalled: err {err:e} > tol {tol:e}")
            }
        }
    }
}

/// Composite Simpson over tabulated nodes, valid on irregular spacing.
///
/// Consecutive node triples are fit with parabolas; a trailing odd
/// interval is integrated from the parabola through the last three
/// nodes. Reduces to classical composite Simpson on uniform grids.
pub fn simpson_irregular(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    }
    let m = n - 1;
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 <= m {
        let (h0, h1) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
        total += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * y[i]
                + (h0 + h1) * (h0 + h1) / (h0 * h1) * y[i + 1]
                + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if i < m {
        // One interval remains: parabola through the last three nodes,
        // integrated over the final interval only.
        let (x0, x1, x2) = (x[m - 2], x[m - 1], x[m]);
        let (f0, f1, f2) = (y[m - 2], y[m - 1], y[m]);
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        let d01 = (f1 - f0) / h0;
        let d012 = ((f2 - f1) / h1 - d01) / (h0 + h1);
        total += f0 * h1 + d01 * (h1 * h1 + 2.0 * h0 * h1) / 2.0
            + d012 * (h1 * h1 * h1 / 3.0 + h0 * h1 * h1 / 2.0);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kronrod_polynomial_exact() {
        let (v, e) = gauss_kronrod_15(&mut |x: f64| x.powi(6) - 2.0 * x + 1.0, -1.0, 3.0);
        let exact = (3f64.powi(7) + 1.0) / 7.0 - (9.0 - 1.0) + 4.0;
        assert!((v - exact).abs() < 1e-12, "v={v} exact={exact}");
        assert!(e < 1e-10);
    }

    #[test]
    fn adaptive_sin() {
        let v = adaptive(|x: f64| x.sin(), 0.0, PI, 1e-13, 1e-15).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_near_singular() {
        // sqrt has unbounded derivative at 0; panels must refine.
        let v = adaptive(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 1e-14).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10, "v={v}");
    }

    #[test]
    fn simpson_uniform_matches_classic() {
        let n = 257;
        let x: Vec<f64> = (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let v = simpson_irregular(&x, &y);
        assert!((v - 2.0).abs() < 1e-9, "v={v}");
    }

    #[test]
    fn simpson_irregular_quadratic_exact() {
        // Parabola must integrate exactly on any node layout, odd panel counts included.
        let x = [0.0, 0.13, 0.5, 0.9, 1.4, 2.0];
        let y: Vec<f64> = x.iter().map(|t| 3.0 * t * t - t + 2.0).collect();
        let v = simpson_irregular(&x, &y);
        let exact = 8.0 - 2.0 + 4.0;
        assert!((v - exact).abs() < 1e-13, "v={v} exact={exact}");
    }

    #[test]
    fn simpson_cubic_convergence() {
        let integrate = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 / (n - 1) as f64).collect();
            let y: Vec<f64> = x.iter().map(|t| (2.0 * t).cos() * t).collect();
            simpson_irregular(&x, &y)
        };
        let exact = {
            // ∫ t cos 2t dt = t sin(2t)/2 + cos(2t)/4
            let f = |t: f64| t * (2.0 * t).sin() / 2.0 + (2.0 * t).cos() / 4.0;
            f(2.0) - f(0.0)
        };
        let e1 = (integrate(65) - exact).abs();
        let e2 = (integrate(129) - exact).abs();
        assert!(e2 < e1 / 8.0, "e1={e1} e2={e2}");
    }
}
