//! Truncated tensor grids carrying the normalized measure `μ`, quadrature,
//! finite-difference derivatives and the weighted Sobolev norms built on them.

mod bank;
pub(crate) mod stencil;

pub use bank::{hermite, make_test_bank, origin_bump, TestBank};

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::potential::PotentialSpec;

/// Largest tolerated estimate of the mass outside the truncation box.
pub const MAX_TAIL: f64 = 1e-8;
/// Highest derivative order provided by the stencils.
pub const MAX_STENCIL_ORDER: u32 = 4;

/// Identity of a grid: FNV-1a hash of its canonical description.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GridId(pub u64);

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Clone, Debug)]
pub struct GridMeasure {
    potential: PotentialSpec,
    dim: usize,
    radius: f64,
    n: usize,
    h: f64,
    axis: Vec<f64>,
    /// `U` at the nodes.
    u: Vec<f64>,
    /// `e^{-(U - min U)}`, the density up to a constant factor.
    rho: Vec<f64>,
    weights: Vec<f64>,
    tail_estimate: f64,
    id: GridId,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    pub id: String,
    pub potential: String,
    pub dim: usize,
    pub radius: f64,
    pub nodes_per_axis: usize,
    pub spacing: f64,
    pub tail_estimate: f64,
}

impl GridMeasure {
    /// Builds the grid with `n` odd nodes per axis on `[-radius, radius]^dim`.
    pub fn build(u: &PotentialSpec, radius: f64, n: usize) -> Result<Self> {
        if n < 33 || n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("nodes per axis must be odd and >= 33, got {n}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        u.validate()?;
        let dim = u.dim;
        let h = 2.0 * radius / (n - 1) as f64;
        let mid = (n - 1) / 2;
        let axis: Vec<f64> = (0..n).map(|i| (i as f64 - mid as f64) * h).collect();
        let points: Vec<[f64; 2]> = if dim == 1 {
            axis.iter().map(|&x| [x, 0.0]).collect()
        } else {
            axis.iter().flat_map(|&x| axis.iter().map(move |&y| [x, y])).collect()
        };
        let uv: Vec<f64> = points.iter().map(|p| u.eval(p)).collect();
        if uv.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotIntegrable("potential is not finite on the grid".into()));
        }
        let u_min = uv.iter().copied().fold(f64::INFINITY, f64::min);
        let rho: Vec<f64> = uv.iter().map(|v| (-(v - u_min)).exp()).collect();
        if rho.contains(&0.0) {
            return Err(Error::InvalidArgument("density underflows at the boundary; reduce the radius".into()));
        }
        let total: f64 = rho.iter().sum();
        let weights: Vec<f64> = rho.iter().map(|r| r / total).collect();
        let description = format!("{}|dim={dim}|R={radius:e}|N={n}", serde_json::to_string(u)?);
        let mut gm = GridMeasure {
            potential: u.clone(),
            dim,
            radius,
            n,
            h,
            axis,
            u: uv,
            rho,
            weights,
            tail_estimate: 0.0,
            id: GridId(fnv1a(description.as_bytes())),
        };
        gm.tail_estimate = gm.estimate_tail(total);
        if !(gm.tail_estimate <= MAX_TAIL) {
            return Err(Error::TailTooHeavy { tail: gm.tail_estimate });
        }
        Ok(gm)
    }

    /// Mass beyond each boundary face, extrapolated with the outermost secant slope
    /// of `U`: each boundary node contributes `ρ / s · h^{dim-1}`.
    fn estimate_tail(&self, total_rho: f64) -> f64 {
        let n = self.n;
        let z = total_rho * self.h.powi(self.dim as i32);
        let mut mass = 0.0;
        for axis in 0..self.dim {
            let stride = self.stride(axis);
            for base in self.lines(axis) {
                for (edge, inner) in [(base, base + stride), (base + (n - 1) * stride, base + (n - 2) * stride)] {
                    let slope = (self.u[edge] - self.u[inner]) / self.h;
                    if slope <= 0.0 {
                        return f64::INFINITY;
                    }
                    mass += self.rho[edge] / slope * self.h.powi(self.dim as i32 - 1);
                }
            }
        }
        mass / z
    }

    /// Same potential and radius with `N → 2N + 1` nodes.
    pub fn refined(&self) -> Result<Self> {
        Self::build(&self.potential, self.radius, 2 * self.n + 1)
    }

    pub fn id(&self) -> GridId {
        self.id
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }
    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn potential_values(&self) -> &[f64] {
        &self.u
    }
    /// Unnormalized density `e^{-(U - min U)}`.
    pub fn density(&self) -> &[f64] {
        &self.rho
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            id: format!("{:016x}", self.id.0),
            potential: self.potential.label(),
            dim: self.dim,
            radius: self.radius,
            nodes_per_axis: self.n,
            spacing: self.h,
            tail_estimate: self.tail_estimate,
        }
    }

    /// Flat-index stride of an axis (axis 0 varies slowest).
    pub fn stride(&self, axis: usize) -> usize {
        if self.dim == 2 && axis == 0 {
            self.n
        } else {
            1
        }
    }

    /// Starting flat index of every grid line running along `axis`.
    pub fn lines(&self, axis: usize) -> Vec<usize> {
        if self.dim == 1 {
            vec![0]
        } else if axis == 0 {
            (0..self.n).collect()
        } else {
            (0..self.n).map(|i| i * self.n).collect()
        }
    }

    pub fn point(&self, index: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.axis[index], 0.0]
        } else {
            [self.axis[index / self.n], self.axis[index % self.n]]
        }
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Samples `f` at every node.
    pub fn function(&self, f: impl Fn(&[f64; 2]) -> f64) -> GridFunction {
        GridFunction { grid: self.id, values: self.points().map(|p| f(&p)).collect() }
    }

    pub fn constant(&self, c: f64) -> GridFunction {
        GridFunction { grid: self.id, values: vec![c; self.len()] }
    }

    pub fn wrap(&self, values: Vec<f64>) -> Result<GridFunction> {
        GridFunction::new(self, values)
    }

    pub fn check(&self, f: &GridFunction) -> Result<()> {
        if f.grid == self.id && f.values.len() == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `Σ w_i v_i` for raw node values.
    pub fn mean_of(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Node values aligned to one `GridMeasure`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: GridId,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(gm: &GridMeasure, values: Vec<f64>) -> Result<Self> {
        if values.len() != gm.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid function has non-finite values".into()));
        }
        Ok(Self { grid: gm.id, values })
    }

    pub(crate) fn from_parts(grid: GridId, values: Vec<f64>) -> Self {
        Self { grid, values }
    }

    pub fn grid(&self) -> GridId {
        self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn shift(&self, a: f64) -> Self {
        self.map(|v| v + a)
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &GridFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with node coordinate columns and a value column.
    pub fn to_csv(&self, gm: &GridMeasure) -> Result<String> {
        gm.check(self)?;
        let mut out = String::from(if gm.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
        for (i, v) in self.values.iter().enumerate() {
            let p = gm.point(i);
            if gm.dim() == 1 {
                writeln!(out, "{},{}", p[0], v).expect("write to string");
            } else {
                writeln!(out, "{},{},{}", p[0], p[1], v).expect("write to string");
            }
        }
        Ok(out)
    }
}

pub fn build_grid(u: &PotentialSpec, radius: f64, n: usize) -> Result<GridMeasure> {
    GridMeasure::build(u, radius, n)
}

/// `μ(f) = Σ w_i f_i`.
pub fn integrate(gm: &GridMeasure, f: &GridFunction) -> Result<f64> {
    gm.check(f)?;
    Ok(gm.mean_of(&f.values))
}

/// `⟨f, g⟩_μ`.
pub fn inner(gm: &GridMeasure, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    gm.check(f)?;
    gm.check(g)?;
    Ok(gm.weights.iter().zip(f.values.iter().zip(&g.values)).map(|(w, (a, b))| w * a * b).sum())
}

/// Applies the order-`order` axis stencil along `axis` to raw node values.
fn apply_axis(gm: &GridMeasure, values: &[f64], axis: usize, order: usize) -> Vec<f64> {
    if order == 0 {
        return values.to_vec();
    }
    let stencils = stencil::axis_stencils(order, gm.n, gm.h);
    let stride = gm.stride(axis);
    let mut out = vec![0.0; values.len()];
    for base in gm.lines(axis) {
        for (i, s) in stencils.iter().enumerate() {
            out[base + i * stride] = s
                .weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * values[base + (s.start + k) * stride])
                .sum();
        }
    }
    out
}

/// `∇^α f` at the nodes via second-order stencils (one-sided near the ends).
pub fn derivative(gm: &GridMeasure, f: &GridFunction, alpha: &MultiIndex) -> Result<GridFunction> {
    gm.check(f)?;
    if alpha.order() > MAX_STENCIL_ORDER {
        return Err(Error::OrderUnsupported { requested: alpha.order() as usize, max: MAX_STENCIL_ORDER as usize });
    }
    if gm.dim == 1 && alpha.0[1] > 0 {
        return Err(Error::InvalidArgument(format!("multi-index {alpha} has a second axis on a 1d grid")));
    }
    let mut values = apply_axis(gm, &f.values, 0, alpha.0[0] as usize);
    if gm.dim == 2 {
        values = apply_axis(gm, &values, 1, alpha.0[1] as usize);
    }
    Ok(GridFunction { grid: f.grid, values })
}

/// Node-based `μ|∇^α f|^p`.
pub fn node_moment(gm: &GridMeasure, f: &GridFunction, alpha: &MultiIndex, p: f64) -> Result<f64> {
    let d = derivative(gm, f, alpha)?;
    Ok(gm.mean_of(&d.values.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>()))
}

/// First differences `(f_{i+1} − f_i)/h` across every face normal to `axis`,
/// paired with face weights `sqrt(w_i w_{i+1})`.
pub(crate) fn face_differences(gm: &GridMeasure, values: &[f64], axis: usize) -> Vec<(f64, f64)> {
    let stride = gm.stride(axis);
    let mut out = Vec::with_capacity(gm.len());
    for base in gm.lines(axis) {
        for i in 0..gm.n - 1 {
            let (a, b) = (base + i * stride, base + (i + 1) * stride);
            out.push(((gm.weights[a] * gm.weights[b]).sqrt(), (values[b] - values[a]) / gm.h));
        }
    }
    out
}

/// `μ|∇^α f|^p`. First-order moments are evaluated on cell faces with the
/// geometric-mean face weight, the same quadrature as the Dirichlet form, so
/// `⟨f, Lf⟩_μ` equals the first-order energy up to roundoff. Higher orders
/// use node values of the stencil derivatives.
pub fn derivative_moment(gm: &GridMeasure, f: &GridFunction, alpha: &MultiIndex, p: f64) -> Result<f64> {
    gm.check(f)?;
    if alpha.order() == 1 {
        let axis = if alpha.0[0] == 1 { 0 } else { 1 };
        if axis >= gm.dim {
            return Err(Error::InvalidArgument(format!("multi-index {alpha} has a second axis on a 1d grid")));
        }
        Ok(face_differences(gm, &f.values, axis).iter().map(|(w, d)| w * d.abs().powf(p)).sum())
    } else {
        node_moment(gm, f, alpha, p)
    }
}

/// `Σ_{|α|=k} μ|∇^α f|^p`.
pub fn energy_k(gm: &GridMeasure, f: &GridFunction, k: u32, p: f64) -> Result<f64> {
    MultiIndex::of_order(gm.dim, k).iter().map(|a| derivative_moment(gm, f, a, p)).sum()
}

/// `(Σ_{|α|=k} μ|∇^α f|^p)^{1/p}`; `k = 0` gives the `L_p(μ)` norm.
pub fn grad_norm_k(gm: &GridMeasure, f: &GridFunction, k: u32, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    Ok(energy_k(gm, f, k, p)?.powf(1.0 / p))
}

pub fn lp_norm(gm: &GridMeasure, f: &GridFunction, p: f64) -> Result<f64> {
    grad_norm_k(gm, f, 0, p)
}

/// `(Σ_{|α|≤m} μ|∇^α f|^p)^{1/p}`.
pub fn sobolev_norm(gm: &GridMeasure, f: &GridFunction, m: u32, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    let total: f64 = (0..=m).map(|k| energy_k(gm, f, k, p)).sum::<Result<f64>>()?;
    Ok(total.powf(1.0 / p))
}

/// `‖f‖_p + ‖∇^k f‖_p`.
pub fn tilde_norm(gm: &GridMeasure, f: &GridFunction, k: u32, p: f64) -> Result<f64> {
    Ok(grad_norm_k(gm, f, 0, p)? + grad_norm_k(gm, f, k, p)?)
}

/// `μ(f² log(f²/μ(f²)))` with `0·log 0 = 0`.
pub fn entropy(gm: &GridMeasure, f: &GridFunction) -> Result<f64> {
    gm.check(f)?;
    let sq: Vec<f64> = f.values.iter().map(|v| v * v).collect();
    let m2 = gm.mean_of(&sq);
    if m2 == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let ent: f64 = gm
        .weights
        .iter()
        .zip(&sq)
        .filter(|(_, s)| **s > 0.0)
        .map(|(w, s)| w * s * (s / m2).ln())
        .sum();
    Ok(ent.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ou(n: usize) -> GridMeasure {
        GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 8.0, n).unwrap()
    }

    #[test]
    fn build_examples() {
        let gm = ou(1025);
        assert!((gm.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(gm.tail_estimate() < 1e-12);
        assert_eq!(gm.point(0)[0], -8.0);
        assert_eq!(gm.point(512)[0], 0.0);
        assert!(gm.weights().iter().all(|w| *w > 0.0));

        let heavy = GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 2.0, 129);
        assert!(matches!(heavy, Err(Error::TailTooHeavy { .. })));
        assert!(GridMeasure::build(&PotentialSpec::even_monomial(4, 1.0, 1), 4.0, 513).is_ok());
        assert!(GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 8.0, 64).is_err());
    }

    #[test]
    fn tail_estimate_tracks_gaussian_mass() {
        // exact mass outside radius 5 for the standard normal is 5.733e-7
        let gm = GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 5.0, 257);
        match gm {
            Err(Error::TailTooHeavy { tail }) => assert!(tail > 4e-7 && tail < 7e-7, "{tail}"),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn integrate_examples() {
        let gm = ou(1025);
        assert!((integrate(&gm, &gm.constant(1.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!(integrate(&gm, &gm.function(|p| p[0])).unwrap().abs() < 1e-12);
        assert!((integrate(&gm, &gm.function(|p| p[0] * p[0])).unwrap() - 1.0).abs() < 1e-8);
        let other = ou(513);
        assert!(matches!(integrate(&gm, &other.constant(1.0)), Err(Error::GridMismatch)));
    }

    #[test]
    fn quadrature_converges() {
        // the Gaussian node sum converges spectrally, so each doubling must shrink the
        // error at least fourfold unless it is already at roundoff
        let errs: Vec<f64> = [33, 65, 129, 257]
            .iter()
            .map(|&n| {
                let gm = GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 8.0, n).unwrap();
                (integrate(&gm, &gm.function(|p| p[0] * p[0])).unwrap() - 1.0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] / 4.0 || w[1] < 1e-13, "{errs:?}");
        }
    }

    #[test]
    fn derivative_examples() {
        let gm = ou(1025);
        let d = derivative(&gm, &gm.function(|p| p[0]), &MultiIndex::new_1d(1)).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let d = derivative(&gm, &gm.function(|p| p[0] * p[0]), &MultiIndex::new_1d(2)).unwrap();
        assert!(d.values().iter().all(|v| (v - 2.0).abs() < 1e-9));
        let d = derivative(&gm, &gm.function(|p| p[0].sin()), &MultiIndex::new_1d(1)).unwrap();
        let h = gm.spacing();
        assert!((d.values()[512] - 1.0).abs() < h * h);
        assert!(matches!(
            derivative(&gm, &gm.constant(1.0), &MultiIndex::new_1d(5)),
            Err(Error::OrderUnsupported { .. })
        ));
    }

    #[test]
    fn derivative_2d_mixed() {
        let gm = GridMeasure::build(&PotentialSpec::gaussian(0.5, 2), 7.0, 65).unwrap();
        let f = gm.function(|p| p[0] * p[0] * p[1]);
        let d = derivative(&gm, &f, &MultiIndex::new_2d(1, 1)).unwrap();
        for (i, v) in d.values().iter().enumerate() {
            assert!((v - 2.0 * gm.point(i)[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn norm_examples() {
        let gm = ou(1025);
        let one = gm.constant(1.0);
        let x = gm.function(|p| p[0]);
        for m in 0..=3 {
            assert!((sobolev_norm(&gm, &one, m, 1.5).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((sobolev_norm(&gm, &x, 1, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-4);
        assert!((sobolev_norm(&gm, &x, 2, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-4);
        assert_eq!(grad_norm_k(&gm, &one, 1, 2.0).unwrap(), 0.0);
        let x2 = gm.function(|p| p[0] * p[0]);
        assert!((grad_norm_k(&gm, &x2, 2, 2.0).unwrap() - 2.0).abs() < 1e-6);
        let x3 = gm.function(|p| p[0].powi(3));
        assert!((grad_norm_k(&gm, &x3, 1, 2.0).unwrap() - 27f64.sqrt()).abs() < 1e-3);
        assert!((tilde_norm(&gm, &one, 1, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((tilde_norm(&gm, &x, 1, 2.0).unwrap() - 2.0).abs() < 1e-4);
        assert!((tilde_norm(&gm, &x, 2, 2.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn face_energy_of_linear_function_is_gaussian_overlap() {
        // Σ sqrt(w_i w_{i+1}) = e^{-h²/8} up to tail mass for the standard normal
        let gm = ou(1025);
        let h = gm.spacing();
        let e = energy_k(&gm, &gm.function(|p| p[0]), 1, 2.0).unwrap();
        assert!((e - (-h * h / 8.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let gm = ou(513);
        assert!(entropy(&gm, &gm.constant(3.0)).unwrap().abs() < 1e-14);
        assert!(matches!(entropy(&gm, &gm.constant(0.0)), Err(Error::ZeroFunction)));

        // two-valued f: 1 on x < 0, 2 on x >= 0
        let f = gm.function(|p| if p[0] < 0.0 { 1.0 } else { 2.0 });
        let (a, b) = gm.weights().iter().zip(gm.points()).fold((0.0, 0.0), |(a, b), (w, p)| {
            if p[0] < 0.0 {
                (a + w, b)
            } else {
                (a, b + w)
            }
        });
        let m2 = a + 4.0 * b;
        let hand = a * (1.0 / m2).ln() + b * 4.0 * (4.0 / m2).ln();
        assert!((entropy(&gm, &f).unwrap() - hand).abs() < 1e-14);

        let coarse = entropy(&gm, &gm.function(|p| p[0])).unwrap();
        let fine_gm = ou(4097);
        let fine = entropy(&fine_gm, &fine_gm.function(|p| p[0])).unwrap();
        assert!(coarse > 0.0 && (coarse - fine).abs() < 1e-4, "{coarse} vs {fine}");
    }

    #[test]
    fn csv_layout() {
        let gm = GridMeasure::build(&PotentialSpec::gaussian(0.5, 2), 7.0, 33).unwrap();
        let csv = gm.function(|p| p[0] + p[1]).to_csv(&gm).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,value");
        assert_eq!(lines.len(), 33 * 33 + 1);
    }

    proptest! {
        #[test]
        fn central_stencils_exact_on_quadratics(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let gm = ou(129);
            let f = gm.function(|p| a + b * p[0] + c * p[0] * p[0]);
            let d1 = derivative(&gm, &f, &MultiIndex::new_1d(1)).unwrap();
            let d2 = derivative(&gm, &f, &MultiIndex::new_1d(2)).unwrap();
            for i in 1..gm.len() - 1 {
                let x = gm.point(i)[0];
                prop_assert!((d1.values()[i] - (b + 2.0 * c * x)).abs() < 1e-9);
                prop_assert!((d2.values()[i] - 2.0 * c).abs() < 1e-9);
            }
        }

        #[test]
        fn sobolev_norm_nondecreasing_in_m(seed in 0u64..50, p in 1.0f64..4.0) {
            let gm = ou(257);
            let bank = make_test_bank(&gm, seed, 8);
            for (_, f) in bank.iter() {
                let norms: Vec<f64> = (0..=4).map(|m| sobolev_norm(&gm, f, m, p).unwrap()).collect();
                prop_assert!(norms.windows(2).all(|w| w[1] >= w[0]));
                for k in 1..=4 {
                    prop_assert!(tilde_norm(&gm, f, k, p).unwrap() <= 2.0 * sobolev_norm(&gm, f, k, p).unwrap());
                }
            }
        }
    }
}
