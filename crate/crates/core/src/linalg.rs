//! Banded solvers used by the implicit steps: scalar Thomas and a 2x2 block
//! variant for the coupled two-species systems.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::real::Real;

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is ignored),
/// `upper[i]` multiplies `x[i+1]` (`upper[n-1]` ignored). On return `rhs`
/// holds the solution.
pub fn solve_tridiagonal<T: Real>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &mut [T],
) -> Result<()> {
    let n = rhs.len();
    if lower.len() != n || diag.len() != n || upper.len() != n {
        return Err(Error::Domain("tridiagonal bands must match rhs length".into()));
    }
    if n == 0 {
        return Ok(());
    }
    let mut c_prime = vec![T::zero(); n];
    let mut denom = diag[0];
    if denom == T::zero() {
        return Err(Error::numerical("zero pivot in tridiagonal solve", 0.0));
    }
    c_prime[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c_prime[i - 1];
        if denom == T::zero() {
            return Err(Error::numerical("zero pivot in tridiagonal solve", 0.0));
        }
        c_prime[i] = upper[i] / denom;
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - lower[i] * prev) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c_prime[i] * next;
    }
    Ok(())
}

/// Block tridiagonal solve with 2x2 blocks (block Thomas, no pivoting
/// across blocks). Same band conventions as [`solve_tridiagonal`].
pub fn solve_block_tridiagonal<T: Real>(
    lower: &[Matrix2<T>],
    diag: &[Matrix2<T>],
    upper: &[Matrix2<T>],
    rhs: &mut [Vector2<T>],
) -> Result<()> {
    let n = rhs.len();
    if lower.len() != n || diag.len() != n || upper.len() != n {
        return Err(Error::Domain("block bands must match rhs length".into()));
    }
    if n == 0 {
        return Ok(());
    }
    let singular = || Error::numerical("singular pivot block in block tridiagonal solve", 0.0);
    let mut c_prime: Vec<Matrix2<T>> = Vec::with_capacity(n);
    let inv = diag[0].try_inverse().ok_or_else(singular)?;
    c_prime.push(inv * upper[0]);
    rhs[0] = inv * rhs[0];
    for i in 1..n {
        let pivot = diag[i] - lower[i] * c_prime[i - 1];
        let inv = pivot.try_inverse().ok_or_else(singular)?;
        c_prime.push(inv * upper[i]);
        let prev = rhs[i - 1];
        rhs[i] = inv * (rhs[i] - lower[i] * prev);
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c_prime[i] * next;
    }
    Ok(())
}

/// Ordinary least-squares line `y = slope * x + intercept`.
pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Option<(T, T)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = T::from_count(n);
    let mean_x = x.iter().fold(T::zero(), |s, &v| s + v) / nf;
    let mean_y = y.iter().fold(T::zero(), |s, &v| s + v) / nf;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        sxx += dx * dx;
        sxy += dx * (yi - mean_y);
    }
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, mean_y - slope * mean_x))
}

/// Piecewise-linear interpolation on a uniform grid starting at `x0`.
/// Arguments outside the grid clamp to the end values.
pub fn interp_uniform<T: Real>(x0: T, spacing: T, values: &[T], x: T) -> T {
    let n = values.len();
    if n == 0 {
        return T::zero();
    }
    let pos = (x - x0) / spacing;
    if pos <= T::zero() {
        return values[0];
    }
    let last = T::from_count(n - 1);
    if pos >= last {
        return values[n - 1];
    }
    let i = pos.floor().as_f64() as usize;
    let i = i.min(n - 2);
    let frac = pos - T::from_count(i);
    values[i] + frac * (values[i + 1] - values[i])
}
