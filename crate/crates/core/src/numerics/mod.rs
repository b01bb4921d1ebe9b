//! Shared numerical kernels: quadrature, interpolation, ODE stepping,
//! bracketed root finding.

pub mod interp;
pub mod ode;
pub mod quad;
pub mod roots;

/// Surface area of the unit k-sphere in Euclidean (k+1)-space.
///
/// Recurrence ω₀ = 2, ω₁ = 2π, ω_k = 2π ω_{k−2} / (k − 1).
pub fn unit_sphere_area(k: u32) -> f64 {
    match k {
        0 => 2.0,
        1 => std::f64::consts::TAU,
        _ => std::f64::consts::TAU * unit_sphere_area(k - 2) / (k as f64 - 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }
}
