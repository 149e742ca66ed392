//! Uniform midpoint grids on the unit interval.
//!
//! Throughout the crate a resolution-`n` grid means the midpoint nodes
//! `x_i = (i − 1/2)/n` of the uniform partition `P_i = [(i−1)/n, i/n)`.
//! Composite midpoint quadrature on this grid integrates step functions
//! aligned with any partition whose size divides `n` exactly, and never
//! evaluates integrands on cell boundaries where step graphons jump.

use ndarray::Array1;

/// Midpoint node `x_i = (i − 1/2)/n` (zero-based `i`).
pub fn midpoint(n: usize, i: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// All midpoint nodes of the resolution-`n` grid.
pub fn midpoints(n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |i| midpoint(n, i))
}

/// Index of the partition cell containing `x`, clamping the endpoints so that
/// `x = 1` falls in the last cell.
pub fn cell_index(n: usize, x: f64) -> usize {
    let i = (x * n as f64).floor() as isize;
    i.clamp(0, n as isize - 1) as usize
}

/// Index of the midpoint node nearest to `x`.
pub fn nearest_node(n: usize, x: f64) -> usize {
    let i = (x * n as f64 - 0.5).round() as isize;
    i.clamp(0, n as isize - 1) as usize
}
