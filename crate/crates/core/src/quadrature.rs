//! Composite Simpson integration.

use crate::error::Result;

/// Composite Simpson rule with `intervals` subintervals (rounded up to even).
pub fn simpson<F>(mut f: F, a: f64, b: f64, intervals: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = intervals.max(2).next_multiple_of(2);
    let h = (b - a) / m as f64;
    let mut sum = f(a)? + f(b)?;
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * k as f64)?;
    }
    Ok(sum * h / 3.0)
}

/// Single Simpson panel on `[a, b]`.
pub(crate) fn simpson_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}
