//! Second-order finite-difference stencils on uniform grids.
//!
//! Interior nodes use central differences; the two end nodes use one-sided
//! second-order formulas so the whole field is second-order accurate.

use crate::scalar::Real;

/// First derivative of `f` sampled with spacing `dx`.
pub fn first_derivative<T: Real>(f: &[T], dx: T) -> Vec<T> {
    let n = f.len();
    assert!(n >= 3, "stencil needs at least 3 samples");
    let half = T::lit(0.5) / dx;
    let mut out = vec![T::zero(); n];
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * half;
    }
    let (three, four) = (T::lit(3.0), T::lit(4.0));
    out[0] = (-three * f[0] + four * f[1] - f[2]) * half;
    out[n - 1] = (three * f[n - 1] - four * f[n - 2] + f[n - 3]) * half;
    out
}

/// Second derivative of `f` sampled with spacing `dx`.
///
/// With only three samples the end nodes fall back to the (first-order)
/// central value of the single interior node.
pub fn second_derivative<T: Real>(f: &[T], dx: T) -> Vec<T> {
    let n = f.len();
    assert!(n >= 3, "stencil needs at least 3 samples");
    let inv = T::one() / (dx * dx);
    let two = T::lit(2.0);
    let mut out = vec![T::zero(); n];
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - two * f[i] + f[i - 1]) * inv;
    }
    if n >= 4 {
        let (five, four) = (T::lit(5.0), T::lit(4.0));
        out[0] = (two * f[0] - five * f[1] + four * f[2] - f[3]) * inv;
        out[n - 1] = (two * f[n - 1] - five * f[n - 2] + four * f[n - 3] - f[n - 4]) * inv;
    } else {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}

/// Composite trapezoid rule; end nodes carry half weight.
pub fn trapezoid<T: Real>(f: &[T], dx: T) -> T {
    let n = f.len();
    if n == 0 {
        return T::zero();
    }
    if n == 1 {
        return T::zero();
    }
    let interior = f[1..n - 1].iter().fold(T::zero(), |a, &b| a + b);
    (interior + (f[0] + f[n - 1]) * T::lit(0.5)) * dx
}
