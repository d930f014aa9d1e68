//! Cholesky factorization of symmetric positive definite band matrices.

/// Lower band storage: `band[i][k]` holds entry `(i, i − k)` for `k ≤ bw`.
pub(crate) struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<Vec<f64>>,
}

impl BandedCholesky {
    /// Factors the matrix whose lower band is given by `entry(i, j)` for `i − bw ≤ j ≤ i`.
    pub(crate) fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Option<Self> {
        let mut band: Vec<Vec<f64>> = (0..n).map(|i| (0..=bw.min(i)).map(|k| entry(i, i - k)).collect()).collect();
        for i in 0..n {
            for k in (0..=bw.min(i)).rev() {
                let j = i - k;
                let mut s = band[i][k];
                let start = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for m in start..j {
                    s -= band[i][i - m] * band[j][j - m];
                }
                if k == 0 {
                    if !(s > 0.0) {
                        return None;
                    }
                    band[i][0] = s.sqrt();
                } else {
                    band[i][k] = s / band[j][0];
                }
            }
        }
        Some(Self { n, bw, band })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut y = rhs.to_vec();
        for i in 0..self.n {
            let mut s = y[i];
            for m in i.saturating_sub(self.bw)..i {
                s -= self.band[i][i - m] * y[m];
            }
            y[i] = s / self.band[i][0];
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for m in i + 1..(i + self.bw + 1).min(self.n) {
                s -= self.band[m][m - i] * y[m];
            }
            y[i] = s / self.band[i][0];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pentadiagonal_system() {
        let n = 30;
        let entry = |i: usize, j: usize| match i - j {
            0 => 6.0 + i as f64 * 0.1,
            1 => -1.0,
            2 => -0.5,
            _ => 0.0,
        };
        let full = |i: usize, j: usize| if i >= j { entry(i, j) } else { entry(j, i) };
        let ch = BandedCholesky::factor(n, 2, entry).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| (0..n).filter(|j| i.abs_diff(*j) <= 2).map(|j| full(i, j) * x[j]).sum())
            .collect();
        let got = ch.solve(&rhs);
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
