//! The Dirichlet operator `L = −Δ + ∇U·∇` on a grid, its lowest eigenpairs in
//! the `μ` inner product, and functions of `L` built from them.
//!
//! Fluxes run through cell faces weighted by the geometric mean of the two
//! neighbouring densities, so `⟨g, Lf⟩_μ` is exactly the face bilinear form and
//! the operator is self-adjoint in `μ`. Boundary faces carry no flux.

mod banded;
mod tridiag;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{lp_norm, GridFunction, GridId, GridMeasure, TestBank};
use crate::{Error, Result};

use banded::BandedCholesky;

/// Eigenvalues below this are treated as zero by the functional calculus.
pub const ZERO_EIGENVALUE: f64 = 1e-10;
/// Required fraction of `‖f‖²_μ` captured by the retained eigenbasis.
pub const CAPTURE_TOLERANCE: f64 = 1e-8;
/// Residual target `‖Lφ − λφ‖_μ ≤ RESIDUAL_TOLERANCE · max(1, λ)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

const SHIFT: f64 = 0.1;
const CLUSTER_WINDOW: f64 = 1e-3;
const MAX_SUBSPACE_ITERATIONS: usize = 600;

#[derive(Clone, Debug)]
pub struct DirichletOperator {
    grid: GridId,
    dim: usize,
    n: usize,
    h: f64,
    weights: Vec<f64>,
    /// `face[axis][i] = sqrt(w_i w_{i+s})` for the face ahead of node `i`, zero on the last node of a line.
    face: Vec<Vec<f64>>,
}

pub fn assemble_operator(gm: &GridMeasure) -> DirichletOperator {
    let w = gm.weights();
    let n = gm.nodes_per_axis();
    let face = (0..gm.dim())
        .map(|axis| {
            let stride = gm.stride(axis);
            let mut out = vec![0.0; gm.len()];
            for base in gm.lines(axis) {
                for i in 0..n - 1 {
                    let (a, b) = (base + i * stride, base + (i + 1) * stride);
                    out[a] = (w[a] * w[b]).sqrt();
                }
            }
            out
        })
        .collect();
    DirichletOperator { grid: gm.id(), dim: gm.dim(), n, h: gm.spacing(), weights: w.to_vec(), face }
}

impl DirichletOperator {
    pub fn grid(&self) -> GridId {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn stride(&self, axis: usize) -> usize {
        if self.dim == 2 && axis == 0 {
            self.n
        } else {
            1
        }
    }

    /// Visits every interior face as `(i, j, sqrt(w_i w_j))`.
    fn faces(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.face.iter().enumerate().flat_map(move |(axis, fw)| {
            let s = self.stride(axis);
            fw.iter().enumerate().filter(|(_, c)| **c > 0.0).map(move |(i, c)| (i, i + s, *c))
        })
    }

    fn apply_raw(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        let h2 = self.h * self.h;
        for (i, j, c) in self.faces() {
            let flux = c * (f[i] - f[j]) / h2;
            out[i] += flux / self.weights[i];
            out[j] -= flux / self.weights[j];
        }
        out
    }

    fn form_raw(&self, f: &[f64], g: &[f64]) -> f64 {
        let h2 = self.h * self.h;
        self.faces().map(|(i, j, c)| c * (f[j] - f[i]) * (g[j] - g[i]) / h2).sum()
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.grid() == self.grid && f.len() == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        Ok(GridFunction::from_parts(self.grid, self.apply_raw(f.values())))
    }

    /// Face bilinear form `Σ_faces sqrt(w_i w_j)(f_j − f_i)(g_j − g_i)/h²`, equal to `⟨g, Lf⟩_μ`.
    pub fn bilinear(&self, f: &GridFunction, g: &GridFunction) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.form_raw(f.values(), g.values()))
    }

    pub fn dirichlet_form(&self, f: &GridFunction) -> Result<f64> {
        self.bilinear(f, f)
    }

    /// Diagonal of the symmetrized operator `W^{1/2} L W^{-1/2}`; its off-diagonal
    /// entries are `−1/h²` on every interior face.
    fn symmetric_diagonal(&self) -> Vec<f64> {
        let h2 = self.h * self.h;
        let mut d = vec![0.0; self.len()];
        for (i, j, c) in self.faces() {
            d[i] += c / self.weights[i] / h2;
            d[j] += c / self.weights[j] / h2;
        }
        d
    }

    fn symmetric_apply(&self, diag: &[f64], y: &[f64]) -> Vec<f64> {
        let h2 = self.h * self.h;
        let mut out: Vec<f64> = diag.iter().zip(y).map(|(d, v)| d * v).collect();
        for (i, j, _) in self.faces() {
            out[i] -= y[j] / h2;
            out[j] -= y[i] / h2;
        }
        out
    }
}

/// Lowest eigenpairs of `L`, orthonormal in `⟨·,·⟩_μ`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    grid: GridId,
    eigenvalues: Vec<f64>,
    vectors: Vec<GridFunction>,
    residuals: Vec<f64>,
}

impl SpectralData {
    pub fn grid(&self) -> GridId {
        self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[GridFunction] {
        &self.vectors
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `index,lambda,residual` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,lambda,residual\n");
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            out.push_str(&format!("{i},{l:.17e},{r:.6e}\n"));
        }
        out
    }
}

/// Eigenpairs in symmetrized variables `y = sqrt(w) f`, Euclidean-orthonormal.
fn to_spectral_data(op: &DirichletOperator, ys: Vec<Vec<f64>>) -> Result<SpectralData> {
    let sqrt_w: Vec<f64> = op.weights.iter().map(|w| w.sqrt()).collect();
    let mut pairs: Vec<(f64, Vec<f64>)> = ys
        .into_iter()
        .map(|y| {
            let mut f: Vec<f64> = y.iter().zip(&sqrt_w).map(|(v, s)| v / s).collect();
            if f[f.len() - 1] < 0.0 {
                f.iter_mut().for_each(|v| *v = -*v);
            }
            (op.form_raw(&f, &f), f)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sd = SpectralData { grid: op.grid, eigenvalues: Vec::new(), vectors: Vec::new(), residuals: Vec::new() };
    let mut worst: f64 = 0.0;
    for (lambda, f) in pairs {
        let lf = op.apply_raw(&f);
        let res: f64 = lf.iter().zip(&f).zip(&op.weights).map(|((a, b), w)| w * (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(res / lambda.max(1.0));
        sd.eigenvalues.push(lambda);
        sd.residuals.push(res);
        sd.vectors.push(GridFunction::from_parts(op.grid, f));
    }
    if !(worst <= RESIDUAL_TOLERANCE) {
        return Err(Error::ConvergenceFailure { residual: worst });
    }
    Ok(sd)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(y: &mut [f64]) -> f64 {
    let n = dot(y, y).sqrt();
    if n > 0.0 {
        y.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Two passes of Gram-Schmidt against `basis`, then normalization.
fn orthogonalize(y: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(y, b);
            y.iter_mut().zip(b).for_each(|(v, bv)| *v -= c * bv);
        }
    }
    normalize(y)
}

fn start_vector(len: usize, salt: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ salt);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Sturm bisection for the eigenvalues, inverse iteration for the vectors.
fn decompose_1d(op: &DirichletOperator, n_eigs: usize) -> Result<SpectralData> {
    let diag = op.symmetric_diagonal();
    let off = vec![-1.0 / (op.h * op.h); op.len() - 1];
    let lambdas = tridiag::lowest_eigenvalues(&diag, &off, n_eigs);
    let mut kernel: Vec<f64> = op.weights.iter().map(|w| w.sqrt()).collect();
    normalize(&mut kernel);
    let mut ys = vec![kernel];
    for (k, &lambda) in lambdas.iter().enumerate().skip(1) {
        let shifted: Vec<f64> = diag.iter().map(|d| d - lambda).collect();
        // well separated eigenvalues give orthogonal vectors; only clusters and the kernel need projecting out
        let window = CLUSTER_WINDOW * lambda.max(1.0);
        let mut neighbours: Vec<Vec<f64>> = vec![ys[0].clone()];
        neighbours.extend(
            lambdas[1..k].iter().zip(&ys[1..]).filter(|(l, _)| lambda - **l <= window).map(|(_, y)| y.clone()),
        );
        let mut y = start_vector(op.len(), k as u64);
        orthogonalize(&mut y, &neighbours);
        for _ in 0..3 {
            y = tridiag::solve_general(&off, &shifted, &off, &y);
            if !(orthogonalize(&mut y, &neighbours) > 0.0) || y.iter().any(|v| !v.is_finite()) {
                return Err(Error::ConvergenceFailure { residual: f64::INFINITY });
            }
        }
        ys.push(y);
    }
    to_spectral_data(op, ys)
}

/// Shift-invert block subspace iteration on the symmetrized operator with a
/// banded Cholesky factor, followed by Rayleigh-Ritz.
fn decompose_2d(op: &DirichletOperator, n_eigs: usize) -> Result<SpectralData> {
    let len = op.len();
    let diag = op.symmetric_diagonal();
    let h2 = op.h * op.h;
    let bw = op.n;
    let chol = BandedCholesky::factor(len, bw, |i, j| {
        if i == j {
            diag[i] + SHIFT
        } else if (i - j == 1 && i % op.n != 0) || i - j == op.n {
            -1.0 / h2
        } else {
            0.0
        }
    })
    .ok_or(Error::ConvergenceFailure { residual: f64::INFINITY })?;

    let mut kernel: Vec<f64> = op.weights.iter().map(|w| w.sqrt()).collect();
    normalize(&mut kernel);
    let wanted = n_eigs - 1;
    let block = (wanted + (wanted / 2).max(6)).min(len - 1);
    let locked = vec![kernel.clone()];
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(block);
    for b in 0..block {
        let mut v = start_vector(len, 1000 + b as u64);
        let mut basis = locked.clone();
        basis.extend(x.iter().cloned());
        orthogonalize(&mut v, &basis);
        x.push(v);
    }

    let mut worst = f64::INFINITY;
    for it in 0..MAX_SUBSPACE_ITERATIONS {
        let mut y: Vec<Vec<f64>> = Vec::with_capacity(block);
        for v in &x {
            let mut z = chol.solve(v);
            let mut basis = locked.clone();
            basis.extend(y.iter().cloned());
            if !(orthogonalize(&mut z, &basis) > 0.0) {
                return Err(Error::ConvergenceFailure { residual: f64::INFINITY });
            }
            y.push(z);
        }
        let sy: Vec<Vec<f64>> = y.iter().map(|v| op.symmetric_apply(&diag, v)).collect();
        let k = DMatrix::from_fn(block, block, |a, b| 0.5 * (dot(&y[a], &sy[b]) + dot(&y[b], &sy[a])));
        let eig = SymmetricEigen::new(k);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
        x = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; len];
                for (a, ya) in y.iter().enumerate() {
                    let coef = eig.eigenvectors[(a, c)];
                    v.iter_mut().zip(ya).for_each(|(t, s)| *t += coef * s);
                }
                v
            })
            .collect();
        if it % 5 == 4 {
            worst = x[..wanted]
                .iter()
                .zip(&order)
                .map(|(v, &c)| {
                    let theta = eig.eigenvalues[c];
                    let sv = op.symmetric_apply(&diag, v);
                    let r: f64 = sv.iter().zip(v).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
                    r / theta.max(1.0)
                })
                .fold(0.0, f64::max);
            if worst < 0.1 * RESIDUAL_TOLERANCE {
                let mut ys = locked;
                ys.extend(x.into_iter().take(wanted));
                return to_spectral_data(op, ys);
            }
        }
    }
    Err(Error::ConvergenceFailure { residual: worst })
}

/// The `n_eigs` lowest eigenpairs. The constant function is the exact kernel
/// and is always returned first with `λ_0 = 0`.
pub fn spectral_decomposition(op: &DirichletOperator, n_eigs: usize) -> Result<SpectralData> {
    if n_eigs == 0 || n_eigs > op.len() {
        return Err(Error::InvalidArgument(format!("n_eigs = {n_eigs} must be in 1..={}", op.len())));
    }
    if op.dim == 1 {
        decompose_1d(op, n_eigs)
    } else {
        decompose_2d(op, n_eigs)
    }
}

/// Default number of retained eigenpairs for a grid.
pub fn default_n_eigs(gm: &GridMeasure) -> usize {
    if gm.dim() == 1 {
        gm.len().min(4096)
    } else {
        28
    }
}

/// `λ_1`, the inverse of the grid-exact `L_2` Poincaré constant.
pub fn spectral_gap(sd: &SpectralData) -> Result<f64> {
    sd.eigenvalues
        .get(1)
        .copied()
        .ok_or_else(|| Error::InvalidArgument("spectral gap needs at least two eigenvalues".into()))
}

/// Coefficients `⟨f, φ_i⟩_μ` and the captured fraction of `‖f‖²_μ`.
pub fn expand(gm: &GridMeasure, sd: &SpectralData, f: &GridFunction) -> Result<(Vec<f64>, f64)> {
    gm.check(f)?;
    if gm.id() != sd.grid {
        return Err(Error::GridMismatch);
    }
    let w = gm.weights();
    let norm2: f64 = w.iter().zip(f.values()).map(|(w, v)| w * v * v).sum();
    let coefs: Vec<f64> = sd
        .vectors
        .iter()
        .map(|phi| w.iter().zip(f.values().iter().zip(phi.values())).map(|(w, (a, b))| w * a * b).sum())
        .collect();
    let captured = if norm2 == 0.0 { 1.0 } else { coefs.iter().map(|c| c * c).sum::<f64>() / norm2 };
    Ok((coefs, captured))
}

/// `Σ λ_i^s ⟨f, φ_i⟩_μ φ_i`. Eigenvalues below `1e-10` count as zero, with
/// `λ^0 = 1` for every retained mode so that `s = 0` reproduces the projection.
pub fn apply_fractional(gm: &GridMeasure, sd: &SpectralData, f: &GridFunction, s: f64) -> Result<GridFunction> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("power s = {s} must be finite and >= 0")));
    }
    // L^s kills constants for s > 0; removing the mean first keeps roundoff in the
    // kernel coefficient from being amplified by large eigenvalues
    let source = if s > 0.0 { f.shift(-crate::discretize::integrate(gm, f)?) } else { f.clone() };
    let (coefs, captured) = expand(gm, sd, &source)?;
    if captured < 1.0 - CAPTURE_TOLERANCE {
        return Err(Error::BasisDeficit { captured });
    }
    let mut out = vec![0.0; gm.len()];
    for ((lambda, c), phi) in sd.eigenvalues.iter().zip(&coefs).zip(&sd.vectors) {
        let factor = if s == 0.0 {
            1.0
        } else if *lambda < ZERO_EIGENVALUE {
            0.0
        } else {
            lambda.powf(s)
        };
        out.iter_mut().zip(phi.values()).for_each(|(o, p)| *o += factor * c * p);
    }
    Ok(GridFunction::from_parts(sd.grid, out))
}

/// `‖f‖_p + ‖L^{k/2} f‖_p`.
pub fn l_norm(gm: &GridMeasure, sd: &SpectralData, f: &GridFunction, k: u32, p: f64) -> Result<f64> {
    let frac = apply_fractional(gm, sd, f, f64::from(k) / 2.0)?;
    Ok(lp_norm(gm, f, p)? + lp_norm(gm, &frac, p)?)
}

/// Adds `count` members `"eig:rand{i}"`, each a seeded random combination of
/// the eigenvectors `φ_1..φ_8` (fewer if not retained).
pub fn add_eigen_members(bank: &mut TestBank, gm: &GridMeasure, sd: &SpectralData, count: usize) {
    let modes = &sd.vectors[1..sd.len().min(9)];
    if modes.is_empty() {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(bank.seed.wrapping_add(0xe1_9e));
    for i in 0..count {
        let mut v = vec![0.0; gm.len()];
        for (m, phi) in modes.iter().enumerate() {
            let c: f64 = rng.random_range(-1.0..1.0) / (1.0 + m as f64);
            v.iter_mut().zip(phi.values()).for_each(|(t, p)| *t += c * p);
        }
        bank.push(gm, format!("eig:rand{i}"), GridFunction::from_parts(gm.id(), v));
    }
}
