//! Adaptive Dormand–Prince 5(4) integration for scalar initial value
//! problems. The right-hand side may refuse an evaluation (domain exit),
//! which is treated like a rejected step until the step collapses.

pub enum RhsOutcome {
    Value(f64),
    OutOfDomain,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate dy/dt = f(t, y) from (t0, y0) to t1 with error control.
pub fn dopri5<F>(mut f: F, t0: f64, t1: f64, y0: f64, rtol: f64, atol: f64) -> Result<f64, OdeFailure>
where
    F: FnMut(f64, f64) -> RhsOutcome,
{
    if t1 == t0 {
        return Ok(y0);
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = match f(t, y) {
        RhsOutcome::Value(v) => v,
        RhsOutcome::OutOfDomain => return Err(OdeFailure::DomainExit { t }),
    };
    let mut h = (span / 100.0).abs().min(0.1).copysign(span);
    let mut rejects_in_a_row = 0u32;
    let mut steps = 0u64;
    while (t1 - t) * span.signum() > 0.0 {
        steps += 1;
        if steps > 2_000_000 {
            return Err(OdeFailure::TooManySteps);
        }
        if (t + h - t1) * span.signum() > 0.0 {
            h = t1 - t;
        }
        let stage = |f: &mut F, tq: f64, yq: f64| -> Option<f64> {
            match f(tq, yq) {
                RhsOutcome::Value(v) if v.is_finite() => Some(v),
                _ => None,
            }
        };
        let attempt = (|f: &mut F| {
            let k2 = stage(f, t + 0.2 * h, y + h * A21 * k1)?;
            let k3 = stage(f, t + 0.3 * h, y + h * (A31 * k1 + A32 * k2))?;
            let k4 = stage(f, t + 0.8 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
            let k5 = stage(
                f,
                t + 8.0 / 9.0 * h,
                y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
            )?;
            let k6 = stage(
                f,
                t + h,
                y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
            )?;
            let ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
            let k7 = stage(f, t + h, ynew)?;
            let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
            Some((ynew, k7, err))
        })(&mut f);

        match attempt {
            Some((ynew, k7, err)) if ynew.is_finite() => {
                let sc = atol + rtol * y.abs().max(ynew.abs());
                let e = (err / sc).abs();
                if e <= 1.0 {
                    t += h;
                    y = ynew;
                    k1 = k7;
                    rejects_in_a_row = 0;
                    let grow = (0.9 * e.powf(-0.2)).min(5.0).max(0.2);
                    h *= grow;
                } else {
                    h *= (0.9 * e.powf(-0.2)).max(0.1);
                    rejects_in_a_row += 1;
                }
            }
            _ => {
                h *= 0.5;
                rejects_in_a_row += 1;
            }
        }
        // A collapsing step means the solution is pinned at a domain
        // boundary it cannot cross.
        if rejects_in_a_row > 60 || h.abs() < 1e-13 * span.abs() {
            return Err(OdeFailure::DomainExit { t });
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeFailure {
    DomainExit { t: f64 },
    TooManySteps,
}

impl std::fmt::Display for OdeFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OdeFailure::DomainExit { t } => write!(f, "solution left the domain near t = {t}"),
            OdeFailure::TooManySteps => write!(f, "step budget exhausted"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = dopri5(|_, y| RhsOutcome::Value(y), 0.0, 2.0, 1.0, 1e-12, 1e-14).unwrap();
        assert!((y - 2f64.exp()).abs() < 1e-10, "y={y}");
    }

    #[test]
    fn logistic() {
        let y = dopri5(
            |_, y| RhsOutcome::Value(y * (1.0 - y)),
            0.0,
            3.0,
            0.1,
            1e-12,
            1e-14,
        )
        .unwrap();
        let exact = 1.0 / (1.0 + 9.0 * (-3f64).exp());
        assert!((y - exact).abs() < 1e-11, "y={y} exact={exact}");
    }

    #[test]
    fn domain_exit_reported() {
        let r = dopri5(
            |_, y| {
                if y > 5.0 {
                    RhsOutcome::OutOfDomain
                } else {
                    RhsOutcome::Value(y)
                }
            },
            0.0,
            10.0,
            1.0,
            1e-10,
            1e-12,
        );
        assert!(matches!(r, Err(OdeFailure::DomainExit { .. })));
    }
}
