//! Dense LU with partial pivoting. Circuits here have a handful of unknowns.

use crate::error::EngineError;

/// Solves `a * x = b` in place; `b` holds `x` on return. `a` is row-major `n x n`
/// and is overwritten by its factors.
pub fn lu_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<(), EngineError> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = scale * 1e-15;
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|r| (r, a[r * n + k]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .expect("non-empty pivot range");
        if !(pivot.abs() > tiny) || !pivot.is_finite() {
            return Err(EngineError::Singular { row: k, pivot });
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        for r in k + 1..n {
            let f = a[r * n + k] / pivot;
            if f == 0.0 {
                continue;
            }
            a[r * n + k] = 0.0;
            for c in k + 1..n {
                a[r * n + c] -= f * a[k * n + c];
            }
            b[r] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k * n + c] * b[c];
        }
        b[k] = s / a[k * n + k];
    }
    Ok(())
}
