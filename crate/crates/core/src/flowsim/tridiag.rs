//! Tridiagonal solvers for vector-valued right-hand sides.

use crate::netgeom::Point2;

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. Returns `None` on a vanishing pivot.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[Point2]) -> Option<Vec<Point2>> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![Point2::ZERO; n];
    let mut pivot = diag[0];
    if pivot.abs() < f64::MIN_POSITIVE {
        return None;
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
            return None;
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - d[i - 1] * lower[i]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= next * c[i];
    }
    Some(d)
}

/// Periodic variant: row 0 couples to `x[n-1]` through `lower[0]`, and row
/// `n-1` couples to `x[0]` through `upper[n-1]`.
pub fn solve_cyclic(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[Point2],
) -> Option<Vec<Point2>> {
    let n = diag.len();
    if n < 3 {
        return None;
    }
    // Sherman-Morrison with the correction vector u = (gamma, 0, ..., 0, upper[n-1]).
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;

    let x = solve(lower, &d, upper, rhs)?;
    let mut u = vec![Point2::ZERO; n];
    u[0] = Point2::new(gamma, 0.0);
    u[n - 1] = Point2::new(alpha, 0.0);
    let z = solve(lower, &d, upper, &u)?;

    let fact_num = x[0] + x[n - 1] * (beta / gamma);
    let denom = 1.0 + z[0].x + beta * z[n - 1].x / gamma;
    if denom.abs() < f64::MIN_POSITIVE {
        return None;
    }
    let fact = fact_num / denom;
    Some(x.iter().zip(&z).map(|(&xi, zi)| xi - fact * zi.x).collect())
}
