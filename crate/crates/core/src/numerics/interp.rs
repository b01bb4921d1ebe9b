//! Piecewise cubic/quintic Hermite interpolation with supplied slopes,
//! plus a monotonicity safeguard for lookup tables.

/// Cubic Hermite on [x0, x1] with endpoint values and slopes.
#[inline]
pub fn hermite3(x: f64, x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    f0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * h * (t3 - 2.0 * t2 + t)
        + f1 * (-2.0 * t3 + 3.0 * t2)
        + d1 * h * (t3 - t2)
}

/// Derivative of [`hermite3`] with respect to x.
#[inline]
pub fn hermite3_deriv(x: f64, x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    (f0 * (6.0 * t2 - 6.0 * t) + f1 * (6.0 * t - 6.0 * t2)) / h
        + d0 * (3.0 * t2 - 4.0 * t + 1.0)
        + d1 * (3.0 * t2 - 2.0 * t)
}

/// Quintic Hermite on an interval of width h, parameter t ∈ [0, 1],
/// matching values, first and second derivatives at both ends.
#[inline]
pub fn hermite5(t: f64, h: f64, f0: f64, f1: f64, d0: f64, d1: f64, s0: f64, s1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 0.5 * (t3 - 2.0 * t4 + t5);
    f0 * h0 + h * d0 * h1 + h * h * s0 * h2 + f1 * h3 + h * d1 * h4 + h * h * s1 * h5
}

/// Monotone piecewise-cubic table: strictly increasing abscissae,
/// nodal values and slopes. Slopes outside the Fritsch–Carlson box
/// [0, 3Δ] are clamped at construction so every segment is monotone.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    f: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn with_slopes(x: Vec<f64>, f: Vec<f64>, mut d: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == f.len() && f.len() == d.len());
        assert!(x.windows(2).all(|w| w[1] > w[0]), "abscissae must increase");
        for i in 0..x.len() - 1 {
            let delta = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
            if delta == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            for j in [i, i + 1] {
                let a = d[j] / delta;
                if a < 0.0 {
                    d[j] = 0.0;
                } else if a > 3.0 {
                    d[j] = 3.0 * delta;
                }
            }
        }
        MonotoneCubic { x, f, d }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Index of the segment containing x, or None outside the table.
    fn segment(&self, x: f64) -> Option<usize> {
        if x < self.x[0] || x > *self.x.last().unwrap() {
            return None;
        }
        let i = match self.x.partition_point(|&v| v <= x) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        Some(i)
    }

    /// Never extrapolates: None outside [x_first, x_last].
    pub fn eval(&self, x: f64) -> Option<f64> {
        let i = self.segment(x)?;
        Some(hermite3(
            x,
            self.x[i],
            self.x[i + 1],
            self.f[i],
            self.f[i + 1],
            self.d[i],
            self.d[i + 1],
        ))
    }

    pub fn eval_deriv(&self, x: f64) -> Option<f64> {
        let i = self.segment(x)?;
        Some(hermite3_deriv(
            x,
            self.x[i],
            self.x[i + 1],
            self.f[i],
            self.f[i + 1],
            self.d[i],
            self.d[i + 1],
        ))
    }
}
