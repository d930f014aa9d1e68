//! Symmetric tridiagonal eigenvalues by Sturm bisection and general
//! tridiagonal solves with partial pivoting.

/// Number of eigenvalues of the symmetric tridiagonal `(diag, off)` below `x`.
pub(crate) fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` smallest eigenvalues, ascending.
pub(crate) fn lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs());
    (0..k.min(n))
        .map(|idx| {
            let (mut a, mut b) = (lo, hi);
            while b - a > 2.0 * f64::EPSILON * scale {
                let mid = 0.5 * (a + b);
                if sturm_count(diag, off, mid) > idx {
                    b = mid;
                } else {
                    a = mid;
                }
                if mid == a && mid == b {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Solves `T x = rhs` for the tridiagonal `T` with sub-diagonal `lower`, diagonal
/// `diag`, super-diagonal `upper` (Gaussian elimination with partial pivoting).
/// Exactly singular pivots are replaced by a tiny value, as inverse iteration wants.
pub(crate) fn solve_general(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // rows hold up to three upper entries after pivoting: u0 (diagonal), u1, u2
    let mut u0 = diag.to_vec();
    let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { upper[i] } else { 0.0 }).collect();
    let mut u2 = vec![0.0; n];
    let mut b = rhs.to_vec();
    let mut sub: Vec<f64> = lower.to_vec();
    let tiny = f64::EPSILON * diag.iter().fold(0.0, |m: f64, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..n.saturating_sub(1) {
        // candidate rows: i (u0[i], u1[i], u2[i]) and i+1 (sub[i], u0[i+1], u1[i+1])
        if sub[i].abs() > u0[i].abs() {
            let (a0, a1, a2, ab) = (u0[i], u1[i], u2[i], b[i]);
            u0[i] = sub[i];
            u1[i] = u0[i + 1];
            u2[i] = u1[i + 1];
            b[i] = b[i + 1];
            sub[i] = a0;
            u0[i + 1] = a1;
            u1[i + 1] = a2;
            b[i + 1] = ab;
        }
        if u0[i] == 0.0 {
            u0[i] = tiny;
        }
        let m = sub[i] / u0[i];
        u0[i + 1] -= m * u1[i];
        u1[i + 1] -= m * u2[i];
        b[i + 1] -= m * b[i];
    }
    if u0[n - 1] == 0.0 {
        u0[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / u0[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_eigenvalues() {
        // tridiag(-1, 2, -1) of size n: 2 - 2cos(kπ/(n+1))
        let n = 50;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let ev = lowest_eigenvalues(&diag, &off, 5);
        for (k, v) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn pivoted_solve_matches_dense() {
        let lower = [3.0, -1.0, 0.5, 2.0];
        let diag = [0.1, 1.0, -2.0, 0.3, 1.0];
        let upper = [1.0, 4.0, 1.0, -1.0];
        let x = [1.0, -2.0, 0.5, 3.0, -1.0];
        let rhs: Vec<f64> = (0..5)
            .map(|i| {
                diag[i] * x[i]
                    + if i > 0 { lower[i - 1] * x[i - 1] } else { 0.0 }
                    + if i < 4 { upper[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let got = solve_general(&lower, &diag, &upper, &rhs);
        for (a, b) in got.iter().zip(x) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
