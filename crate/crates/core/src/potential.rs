//! Potential families `U` for measures `dμ = e^{-U} dx`, their exact partial
//! derivatives, and grid-sup regularity certificates.
//!
//! The radial families are written as `U(x) = G(|x|²)`; partials of the
//! composition are assembled from set partitions of the index list into blocks
//! of size one (`∂_i s = 2x_i`) and two (`∂_ij s = 2δ_ij`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discretize::GridMeasure;
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;

/// Highest derivative order with closed forms for every family.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `a|x|²`
    Gaussian { a: f64 },
    /// `scale·|x|^degree`, degree even
    EvenMonomial { degree: u32, scale: f64 },
    /// `|x|^alpha` outside the ball of radius `delta`, quartic-in-`|x|²` blend inside
    SmoothedPower { alpha: f64, delta: f64 },
    /// `a(|x|² − b)²`
    DoubleWell { a: f64, b: f64 },
    /// `Σ c_α x^α`, keys are multi-index strings such as `"4"` or `"2,2"`
    Polynomial { coefficients: BTreeMap<MultiIndex, f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationKind {
    /// `amplitude·sin(frequency·x_0)`
    Sine { amplitude: f64, frequency: f64 },
    /// `height` on the half-space `x_0 ≥ at`, zero elsewhere
    Step { height: f64, at: f64 },
}

/// A bounded measurable `V` added to the potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundedPerturbation {
    pub kind: PerturbationKind,
}

impl BoundedPerturbation {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self { kind: PerturbationKind::Sine { amplitude, frequency } }
    }

    pub fn step(height: f64, at: f64) -> Self {
        Self { kind: PerturbationKind::Step { height, at } }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.kind {
            PerturbationKind::Sine { amplitude, frequency } => amplitude * (frequency * x[0]).sin(),
            PerturbationKind::Step { height, at } => {
                if x[0] >= at {
                    height
                } else {
                    0.0
                }
            }
        }
    }

    /// Certified `sup V − inf V`.
    pub fn osc_bound(&self) -> f64 {
        match self.kind {
            PerturbationKind::Sine { amplitude, .. } => 2.0 * amplitude.abs(),
            PerturbationKind::Step { height, .. } => height.abs(),
        }
    }

    fn max_order(&self) -> usize {
        match self.kind {
            PerturbationKind::Sine { .. } => MAX_DERIVATIVE_ORDER,
            PerturbationKind::Step { .. } => 0,
        }
    }

    fn partial(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        match self.kind {
            PerturbationKind::Sine { amplitude, frequency } => {
                if alpha.0[1] > 0 {
                    return 0.0;
                }
                let n = alpha.0[0] as i32;
                let phase = f64::from(n) * std::f64::consts::FRAC_PI_2;
                amplitude * frequency.powi(n) * (frequency * x[0] + phase).sin()
            }
            PerturbationKind::Step { .. } => {
                if alpha.order() == 0 {
                    self.eval(x)
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub family: Family,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<BoundedPerturbation>,
}

/// All partials `∇^α U` with `|α| ≤ order` at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Derivatives {
    pub order: usize,
    pub entries: Vec<(MultiIndex, f64)>,
}

impl Derivatives {
    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.entries.iter().find(|(a, _)| a == alpha).map(|(_, v)| *v)
    }

    /// Values of order exactly `k`, in `MultiIndex::of_order` order.
    pub fn of_order(&self, k: u32) -> Vec<f64> {
        self.entries.iter().filter(|(a, _)| a.order() == k).map(|(_, v)| *v).collect()
    }
}

impl PotentialSpec {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        let spec = Self { family, dim, perturbation: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(a: f64, dim: usize) -> Self {
        Self::new(Family::Gaussian { a }, dim).expect("valid gaussian")
    }

    pub fn even_monomial(degree: u32, scale: f64, dim: usize) -> Self {
        Self::new(Family::EvenMonomial { degree, scale }, dim).expect("valid even monomial")
    }

    pub fn smoothed_power(alpha: f64, delta: f64, dim: usize) -> Self {
        Self::new(Family::SmoothedPower { alpha, delta }, dim).expect("valid smoothed power")
    }

    pub fn double_well(a: f64, b: f64, dim: usize) -> Self {
        Self::new(Family::DoubleWell { a, b }, dim).expect("valid double well")
    }

    pub fn with_perturbation(mut self, v: BoundedPerturbation) -> Self {
        self.perturbation = Some(v);
        self
    }

    /// Short human-readable tag used in reports.
    pub fn label(&self) -> String {
        let base = match &self.family {
            Family::Gaussian { a } => format!("gaussian(a={a})"),
            Family::EvenMonomial { degree, scale } => format!("even_monomial({degree},{scale})"),
            Family::SmoothedPower { alpha, delta } => format!("smoothed_power({alpha},{delta})"),
            Family::DoubleWell { a, b } => format!("double_well({a},{b})"),
            Family::Polynomial { coefficients } => format!("polynomial[{} terms]", coefficients.len()),
        };
        match &self.perturbation {
            Some(p) => format!("{base}+V[osc<={}]/{}d", p.osc_bound(), self.dim),
            None => format!("{base}/{}d", self.dim),
        }
    }

    /// Family constraints guaranteeing `∫ e^{-U} < ∞`.
    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::NotIntegrable(format!("dimension {} not in {{1,2}}", self.dim)));
        }
        let bad = |m: &str| Err(Error::NotIntegrable(m.to_string()));
        match &self.family {
            Family::Gaussian { a } if !(*a > 0.0) => bad("gaussian needs a > 0"),
            Family::EvenMonomial { degree, scale } if *degree < 2 || degree % 2 != 0 || !(*scale > 0.0) => {
                bad("even_monomial needs an even degree >= 2 and scale > 0")
            }
            Family::SmoothedPower { alpha, delta } if !(*alpha >= 1.0) || !(*delta > 0.0) => {
                bad("smoothed_power needs alpha >= 1 and delta > 0")
            }
            Family::DoubleWell { a, b } if !(*a > 0.0) || !b.is_finite() => bad("double_well needs a > 0"),
            Family::Polynomial { coefficients } => self.validate_polynomial(coefficients),
            _ => Ok(()),
        }?;
        if let Some(p) = &self.perturbation {
            if !p.osc_bound().is_finite() {
                return bad("perturbation must be bounded");
            }
        }
        Ok(())
    }

    fn validate_polynomial(&self, coefficients: &BTreeMap<MultiIndex, f64>) -> Result<()> {
        if self.dim == 1 && coefficients.keys().any(|a| a.0[1] != 0) {
            return Err(Error::NotIntegrable("1d polynomial uses a second axis".into()));
        }
        let degree = coefficients
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(a, _)| a.order())
            .max()
            .unwrap_or(0);
        if degree < 2 || degree % 2 != 0 {
            return Err(Error::NotIntegrable("leading degree must be even and >= 2".into()));
        }
        // top homogeneous part must be positive on the unit sphere
        let top = |x: &[f64]| -> f64 {
            coefficients.iter().filter(|(a, _)| a.order() == degree).map(|(a, c)| c * a.monomial(x)).sum()
        };
        let directions: Vec<[f64; 2]> = if self.dim == 1 {
            vec![[1.0, 0.0], [-1.0, 0.0]]
        } else {
            (0..720)
                .map(|i| {
                    let t = f64::from(i) * std::f64::consts::PI / 360.0;
                    [t.cos(), t.sin()]
                })
                .collect()
        };
        let size: f64 = coefficients.values().map(|c| c.abs()).sum();
        if directions.iter().all(|d| top(d) > 1e-9 * size) {
            Ok(())
        } else {
            Err(Error::NotIntegrable("polynomial is not semibounded with positive leading part".into()))
        }
    }

    /// Closed-form derivative depth.
    pub fn max_order(&self) -> usize {
        let base = MAX_DERIVATIVE_ORDER;
        match &self.perturbation {
            Some(p) => base.min(p.max_order()),
            None => base,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let base = match &self.family {
            Family::Polynomial { coefficients } => {
                coefficients.iter().map(|(a, c)| c * a.monomial(x)).sum()
            }
            _ => self.radial_profile(self.radius_sq(x), 0),
        };
        base + self.perturbation.as_ref().map_or(0.0, |p| p.eval(x))
    }

    pub fn eval_derivatives(&self, x: &[f64], order: usize) -> Result<Derivatives> {
        if order > self.max_order() {
            return Err(Error::OrderUnsupported { requested: order, max: self.max_order() });
        }
        let entries = MultiIndex::up_to(self.dim, order as u32)
            .into_iter()
            .map(|alpha| (alpha, self.partial(&alpha, x)))
            .collect();
        Ok(Derivatives { order, entries })
    }

    /// `∂^α U(x)`; callers must respect `max_order`.
    pub fn partial(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        let base = match &self.family {
            Family::Polynomial { coefficients } => coefficients
                .iter()
                .filter_map(|(a, c)| a.differentiate(alpha).map(|(k, rest)| c * k * rest.monomial(x)))
                .sum(),
            _ => self.radial_partial(&alpha.axes(), x),
        };
        base + self.perturbation.as_ref().map_or(0.0, |p| p.partial(alpha, x))
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (axis, gi) in g.iter_mut().enumerate().take(self.dim) {
            let mut a = [0u32; 2];
            a[axis] = 1;
            *gi = self.partial(&MultiIndex(a), x);
        }
        g
    }

    pub fn gradient_norm(&self, x: &[f64]) -> f64 {
        let g = self.gradient(x);
        (g[0] * g[0] + g[1] * g[1]).sqrt()
    }

    pub fn hessian(&self, x: &[f64]) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut a = [0u32; 2];
                a[i] += 1;
                a[j] += 1;
                h[i][j] = self.partial(&MultiIndex(a), x);
            }
        }
        h
    }

    /// Frobenius norm of the full order-`k` tensor (ordered index tuples).
    pub fn tensor_norm(&self, x: &[f64], k: u32) -> f64 {
        MultiIndex::of_order(self.dim, k)
            .iter()
            .map(|a| a.multinomial() * self.partial(a, x).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn radius_sq(&self, x: &[f64]) -> f64 {
        x.iter().take(self.dim).map(|v| v * v).sum()
    }

    /// `G^{(j)}(s)` for the radial families.
    fn radial_profile(&self, s: f64, j: usize) -> f64 {
        match &self.family {
            Family::Gaussian { a } => match j {
                0 => a * s,
                1 => *a,
                _ => 0.0,
            },
            Family::EvenMonomial { degree, scale } => {
                let m = degree / 2;
                if j as u32 > m {
                    0.0
                } else {
                    let falling: f64 = (0..j as u32).map(|i| f64::from(m - i)).product();
                    scale * falling * s.powi((m - j as u32) as i32)
                }
            }
            Family::DoubleWell { a, b } => match j {
                0 => a * (s - b).powi(2),
                1 => 2.0 * a * (s - b),
                2 => 2.0 * a,
                _ => 0.0,
            },
            Family::SmoothedPower { alpha, delta } => smoothed_power_profile(*alpha, *delta, s, j),
            Family::Polynomial { .. } => unreachable!("polynomial is not radial"),
        }
    }

    fn radial_partial(&self, axes: &[usize], x: &[f64]) -> f64 {
        let s = self.radius_sq(x);
        let mut total = 0.0;
        for_each_pair_partition(axes, &mut |blocks: &[Block]| {
            let mut term = self.radial_profile(s, blocks.len());
            for b in blocks {
                term *= match *b {
                    Block::Single(i) => 2.0 * x[i],
                    Block::Pair(i, j) => {
                        if i == j {
                            2.0
                        } else {
                            0.0
                        }
                    }
                };
            }
            total += term;
        });
        total
    }
}

/// `s^{α/2}` for `s ≥ δ²`; inside, the order-4 Taylor polynomial in `s` about `δ²`.
/// Being a polynomial in `|x|²`, the blend is smooth at the origin and matches
/// value and four derivatives at `|x| = δ`.
fn smoothed_power_profile(alpha: f64, delta: f64, s: f64, j: usize) -> f64 {
    let beta = alpha / 2.0;
    let s0 = delta * delta;
    // d^i/ds^i s^β at a point
    let power_deriv = |at: f64, i: usize| -> f64 {
        let falling: f64 = (0..i).map(|m| beta - m as f64).product();
        falling * at.powf(beta - i as f64)
    };
    if s >= s0 {
        return power_deriv(s, j);
    }
    let ds = s - s0;
    let mut value = 0.0;
    let mut fact = 1.0;
    for i in j..=4 {
        if i > j {
            fact *= (i - j) as f64;
        }
        value += power_deriv(s0, i) * ds.powi((i - j) as i32) / fact;
    }
    value
}

#[derive(Clone, Copy, Debug)]
enum Block {
    Single(usize),
    Pair(usize, usize),
}

/// Visits every partition of `axes` into blocks of size one or two.
fn for_each_pair_partition(axes: &[usize], visit: &mut dyn FnMut(&[Block])) {
    fn rec(rest: &[usize], acc: &mut Vec<Block>, visit: &mut dyn FnMut(&[Block])) {
        let Some((&first, tail)) = rest.split_first() else {
            visit(acc);
            return;
        };
        acc.push(Block::Single(first));
        rec(tail, acc, visit);
        acc.pop();
        for k in 0..tail.len() {
            let mut remaining = tail.to_vec();
            let partner = remaining.remove(k);
            acc.push(Block::Pair(first, partner));
            rec(&remaining, acc, visit);
            acc.pop();
        }
    }
    rec(axes, &mut Vec::new(), visit);
}

pub fn eval_potential(u: &PotentialSpec, x: &[f64]) -> f64 {
    u.eval(x)
}

pub fn eval_derivatives(u: &PotentialSpec, x: &[f64], order: usize) -> Result<Derivatives> {
    u.eval_derivatives(x, order)
}

/// Points of the grid plus a same-spacing lattice of twice the radius, used to
/// test whether a grid supremum is stable under extension of the truncation.
fn extension_points(gm: &GridMeasure) -> Vec<[f64; 2]> {
    let n = 2 * gm.nodes_per_axis() - 1;
    let r = 2.0 * gm.radius();
    let step = 2.0 * r / (n - 1) as f64;
    let axis: Vec<f64> = (0..n).map(|i| -r + step * i as f64).collect();
    if gm.dim() == 1 {
        axis.iter().map(|&x| [x, 0.0]).collect()
    } else {
        axis.iter().flat_map(|&x| axis.iter().map(move |&y| [x, y])).collect()
    }
}

fn sup_with_arg(points: impl Iterator<Item = [f64; 2]>, f: impl Fn(&[f64; 2]) -> f64) -> (f64, [f64; 2]) {
    let mut best = (f64::NEG_INFINITY, [0.0; 2]);
    for p in points {
        let v = f(&p);
        if v > best.0 || v.is_nan() {
            best = (v, p);
        }
    }
    best
}

/// Relative growth allowed between the grid supremum and the extended supremum.
const EXTENSION_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct ArcReport {
    pub epsilon: f64,
    pub c_min: f64,
    pub satisfied: bool,
    pub argmax_point: [f64; 2],
    pub truncation_radius: f64,
    /// `c` over the doubled-radius lattice divided by `c` on the grid.
    pub extension_ratio: f64,
}

/// `max Σ_{|α|=2} |∇^α U| / (1+|∇U|)^{2−ε}` over the grid nodes.
pub fn check_arc(u: &PotentialSpec, gm: &GridMeasure, epsilon: f64) -> Result<ArcReport> {
    if !(epsilon > 0.0 && epsilon < 2.0) {
        return Err(Error::InvalidArgument(format!("ARC epsilon {epsilon} not in (0,2)")));
    }
    if u.max_order() < 2 {
        return Err(Error::OrderUnsupported { requested: 2, max: u.max_order() });
    }
    let second = MultiIndex::of_order(u.dim, 2);
    let ratio = |x: &[f64; 2]| {
        let num: f64 = second.iter().map(|a| u.partial(a, x).abs()).sum();
        num / (1.0 + u.gradient_norm(x)).powf(2.0 - epsilon)
    };
    let (c_min, argmax_point) = sup_with_arg(gm.points(), ratio);
    let (c_ext, _) = sup_with_arg(extension_points(gm).into_iter(), ratio);
    let extension_ratio = if c_min > 0.0 { c_ext / c_min } else if c_ext > 0.0 { f64::INFINITY } else { 1.0 };
    Ok(ArcReport {
        epsilon,
        c_min,
        satisfied: c_min.is_finite() && extension_ratio <= 1.0 + EXTENSION_TOLERANCE,
        argmax_point,
        truncation_radius: gm.radius(),
        extension_ratio,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AmConstant {
    pub order: u32,
    pub constant: f64,
    pub extension_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmReport {
    pub m: u32,
    pub epsilon: f64,
    /// Order-2 constant with exponent `2−ε`.
    pub k2_constant: f64,
    /// `K_k` for `3 ≤ k ≤ m`.
    pub constants: Vec<AmConstant>,
    pub satisfied: bool,
    pub truncation_radius: f64,
}

impl AmReport {
    pub fn constant(&self, k: u32) -> Option<f64> {
        if k == 2 {
            return Some(self.k2_constant);
        }
        self.constants.iter().find(|c| c.order == k).map(|c| c.constant)
    }
}

/// Grid maxima of `|∇^k U| / (1+|∇U|)^k` for `3 ≤ k ≤ m` (order 2 with exponent `2−ε`).
pub fn check_assumption_am(u: &PotentialSpec, gm: &GridMeasure, m: u32, epsilon: f64) -> Result<AmReport> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!("assumption A_m needs m >= 3, got {m}")));
    }
    if m as usize > u.max_order() {
        return Err(Error::OrderUnsupported { requested: m as usize, max: u.max_order() });
    }
    let ext = extension_points(gm);
    let measure = |k: u32, exponent: f64| -> (f64, f64) {
        let ratio = |x: &[f64; 2]| u.tensor_norm(x, k) / (1.0 + u.gradient_norm(x)).powf(exponent);
        let (c, _) = sup_with_arg(gm.points(), ratio);
        let (c_ext, _) = sup_with_arg(ext.iter().copied(), ratio);
        let r = if c > 0.0 { c_ext / c } else if c_ext > 0.0 { f64::INFINITY } else { 1.0 };
        (c, r)
    };
    let (k2_constant, k2_ratio) = measure(2, 2.0 - epsilon);
    let mut satisfied = k2_constant.is_finite() && k2_ratio <= 1.0 + EXTENSION_TOLERANCE;
    let mut constants = Vec::new();
    for k in 3..=m {
        let (c, r) = measure(k, f64::from(k));
        satisfied &= c.is_finite() && r <= 1.0 + EXTENSION_TOLERANCE;
        constants.push(AmConstant { order: k, constant: c, extension_ratio: r });
    }
    Ok(AmReport { m, epsilon, k2_constant, constants, satisfied, truncation_radius: gm.radius() })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub radii: Vec<f64>,
    /// `η(R) = 1 + inf_{|x| ≥ R} |∇U|` over grid nodes.
    pub eta: Vec<f64>,
    pub monotone_nondecreasing: bool,
    /// Still increasing at the top of the ladder; required by the norm-equivalence hypothesis.
    pub divergent: bool,
    pub truncation_radius: f64,
    pub note: String,
}

pub fn check_gradient_growth(u: &PotentialSpec, gm: &GridMeasure, rungs: usize) -> Result<GrowthReport> {
    if rungs < 4 {
        return Err(Error::InvalidArgument("gradient growth ladder needs at least 4 radii".into()));
    }
    let r_max = gm.radius();
    let radii: Vec<f64> = (1..=rungs).map(|j| r_max * j as f64 / (rungs + 1) as f64).collect();
    let nodes: Vec<(f64, f64)> = gm
        .points()
        .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt(), u.gradient_norm(&p)))
        .collect();
    let eta: Vec<f64> = radii
        .iter()
        .map(|&r| {
            1.0 + nodes
                .iter()
                .filter(|(rad, _)| *rad >= r - 1e-12)
                .map(|(_, g)| *g)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let monotone_nondecreasing = eta.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let last = eta[eta.len() - 1];
    let prev = eta[eta.len() - 2];
    let divergent = monotone_nondecreasing && last - prev > 1e-9 * last;
    let note = if divergent {
        "gradient grows along the ladder".to_string()
    } else {
        "gradient saturates: |grad U| -> infinity is not supported by the grid data".to_string()
    };
    Ok(GrowthReport { radii, eta, monotone_nondecreasing, divergent, truncation_radius: r_max, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn eval_examples() {
        let g = PotentialSpec::gaussian(0.5, 1);
        assert_eq!(g.eval(&[0.0]), 0.0);
        assert_eq!(g.eval(&[2.0]), 2.0);
        let dw = PotentialSpec::double_well(1.0, 1.0, 1);
        assert_eq!(dw.eval(&[1.0]), 0.0);
    }

    #[test]
    fn derivative_examples() {
        let g = PotentialSpec::gaussian(0.5, 1);
        let d = g.eval_derivatives(&[3.0], 2).unwrap();
        assert_eq!(d.of_order(0), vec![4.5]);
        assert_eq!(d.of_order(1), vec![3.0]);
        assert_eq!(d.of_order(2), vec![1.0]);

        let q = PotentialSpec::even_monomial(4, 1.0, 1);
        let d = q.eval_derivatives(&[1.0], 3).unwrap();
        let vals: Vec<f64> = (0..=3).map(|k| d.of_order(k)[0]).collect();
        assert_eq!(vals, vec![1.0, 4.0, 12.0, 24.0]);

        // (x²−1)² = x⁴ − 2x² + 1: value 1, slope 0, curvature −4 at the origin
        let dw = PotentialSpec::double_well(1.0, 1.0, 1);
        let d = dw.eval_derivatives(&[0.0], 2).unwrap();
        assert_eq!((d.of_order(0)[0], d.of_order(1)[0], d.of_order(2)[0]), (1.0, 0.0, -4.0));
    }

    #[test]
    fn order_beyond_depth_is_rejected() {
        let g = PotentialSpec::gaussian(0.5, 1);
        assert!(matches!(g.eval_derivatives(&[0.0], 5), Err(Error::OrderUnsupported { .. })));
        let stepped = g.with_perturbation(BoundedPerturbation::step(0.2, 0.0));
        assert!(matches!(stepped.eval_derivatives(&[0.0], 1), Err(Error::OrderUnsupported { .. })));
    }

    #[test]
    fn invalid_families_are_rejected() {
        assert!(PotentialSpec::new(Family::Gaussian { a: -1.0 }, 1).is_err());
        assert!(PotentialSpec::new(Family::EvenMonomial { degree: 3, scale: 1.0 }, 1).is_err());
        let mut c = BTreeMap::new();
        c.insert(MultiIndex([3, 0]), 1.0);
        assert!(PotentialSpec::new(Family::Polynomial { coefficients: c.clone() }, 1).is_err());
        c.insert(MultiIndex([4, 0]), 1.0);
        assert!(PotentialSpec::new(Family::Polynomial { coefficients: c.clone() }, 1).is_ok());
        // x⁴ alone is not coercive along the y axis
        assert!(PotentialSpec::new(Family::Polynomial { coefficients: c.clone() }, 2).is_err());
        c.insert(MultiIndex([0, 4]), 1.0);
        assert!(PotentialSpec::new(Family::Polynomial { coefficients: c }, 2).is_ok());
    }

    #[test]
    fn smoothed_power_matches_outside_and_is_continuous_at_delta() {
        let u = PotentialSpec::smoothed_power(1.5, 0.3, 1);
        for &x in &[0.3, 0.31, 1.0, 4.0, -2.5] {
            assert!(close(u.eval(&[x]), f64::abs(x).powf(1.5), 1e-14));
        }
        let a = MultiIndex::new_1d;
        for k in 0..=4 {
            let inside = u.partial(&a(k), &[0.3 - 1e-9]);
            let outside = u.partial(&a(k), &[0.3 + 1e-9]);
            assert!(close(inside, outside, 1e-6), "order {k}: {inside} vs {outside}");
        }
        // smooth and even: zero slope at the origin
        assert_eq!(u.partial(&a(1), &[0.0]), 0.0);
    }

    #[test]
    fn radial_two_dimensional_matches_polynomial_expansion() {
        // (x²+y²−1)² expanded as a polynomial
        let mut c = BTreeMap::new();
        for (k, v) in [("4,0", 1.0), ("0,4", 1.0), ("2,2", 2.0), ("2,0", -2.0), ("0,2", -2.0), ("0,0", 1.0)] {
            c.insert(k.parse().unwrap(), v);
        }
        let poly = PotentialSpec::new(Family::Polynomial { coefficients: c }, 2).unwrap();
        let dw = PotentialSpec::double_well(1.0, 1.0, 2);
        let x = [0.7, -1.3];
        for alpha in MultiIndex::up_to(2, 4) {
            assert!(close(poly.partial(&alpha, &x), dw.partial(&alpha, &x), 1e-12), "{alpha}");
        }
    }

    /// Central-difference derivative of `eval` with two Richardson steps.
    fn fd_partial(u: &PotentialSpec, alpha: &MultiIndex, x: &[f64; 2], h: f64) -> f64 {
        fn stencil(order: u32) -> Vec<(i32, f64)> {
            match order {
                0 => vec![(0, 1.0)],
                1 => vec![(-1, -0.5), (1, 0.5)],
                2 => vec![(-1, 1.0), (0, -2.0), (1, 1.0)],
                3 => vec![(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
                4 => vec![(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
                _ => unreachable!(),
            }
        }
        let apply = |h: f64| {
            let mut total = 0.0;
            for (i, ci) in stencil(alpha.0[0]) {
                for (j, cj) in stencil(alpha.0[1]) {
                    let p = [x[0] + f64::from(i) * h, x[1] + f64::from(j) * h];
                    total += ci * cj * u.eval(&p);
                }
            }
            total / h.powi(alpha.order() as i32)
        };
        let (d0, d1, d2) = (apply(h), apply(h / 2.0), apply(h / 4.0));
        let (r0, r1) = ((4.0 * d1 - d0) / 3.0, (4.0 * d2 - d1) / 3.0);
        (16.0 * r1 - r0) / 15.0
    }

    fn families(dim: usize) -> Vec<PotentialSpec> {
        vec![
            PotentialSpec::gaussian(0.7, dim),
            PotentialSpec::even_monomial(4, 1.0, dim),
            PotentialSpec::even_monomial(6, 0.5, dim),
            PotentialSpec::smoothed_power(1.0, 0.1, dim),
            PotentialSpec::smoothed_power(2.5, 0.5, dim),
            PotentialSpec::double_well(1.0, 1.0, dim),
            PotentialSpec::double_well(0.5, 2.0, dim).with_perturbation(BoundedPerturbation::sine(0.3, 1.0)),
        ]
    }

    proptest! {
        #[test]
        fn closed_forms_match_finite_differences(x in -2.5f64..2.5, y in -2.5f64..2.5, two_d in any::<bool>()) {
            let dim = if two_d { 2 } else { 1 };
            let p = [x, if two_d { y } else { 0.0 }];
            for u in families(dim) {
                // keep stencils clear of the smoothing-zone seam
                if let Family::SmoothedPower { delta, .. } = u.family {
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    prop_assume!((r - delta).abs() > 0.05);
                }
                // the smoothing zone sets the length scale of the higher derivatives
                let length = match u.family {
                    Family::SmoothedPower { delta, .. } => (delta.max(p[0].hypot(p[1])) / 2.0).min(1.0),
                    _ => 1.0,
                };
                for alpha in MultiIndex::up_to(dim, 4).iter().filter(|a| a.order() >= 1) {
                    let (h, tol) = if alpha.order() <= 3 { (2e-2 * length, 1e-6) } else { (5e-2 * length, 1e-4) };
                    let exact = u.partial(alpha, &p);
                    let fd = fd_partial(&u, alpha, &p, h);
                    let scale = exact.abs().max(1.0);
                    prop_assert!((exact - fd).abs() <= tol * scale,
                        "{} alpha={} at {:?}: exact {} fd {}", u.label(), alpha, p, exact, fd);
                }
            }
        }

        #[test]
        fn perturbation_stays_within_oscillation(x in -10.0f64..10.0) {
            let base = PotentialSpec::double_well(1.0, 1.0, 1);
            let v = BoundedPerturbation::sine(0.3, 1.7);
            let pert = base.clone().with_perturbation(v.clone());
            prop_assert!((pert.eval(&[x]) - base.eval(&[x])).abs() <= v.osc_bound());
        }
    }

    #[test]
    fn arc_examples() {
        let g = PotentialSpec::gaussian(0.5, 1);
        let gm = GridMeasure::build(&g, 8.0, 257).unwrap();
        let r = check_arc(&g, &gm, 1.0).unwrap();
        assert!(close(r.c_min, 1.0, 1e-12) && r.satisfied);
        assert_eq!(r.argmax_point[0], 0.0);

        let q = PotentialSpec::even_monomial(4, 1.0, 1);
        let gm = GridMeasure::build(&q, 4.0, 513).unwrap();
        let r = check_arc(&q, &gm, 0.5).unwrap();
        // independent scan of 12x²/(1+4|x|³)^{1.5}
        let scan = (0..=4000)
            .map(|i| -4.0 + 8.0 * f64::from(i) / 4000.0)
            .map(|x: f64| 12.0 * x * x / (1.0 + 4.0 * x.abs().powi(3)).powf(1.5))
            .fold(0.0, f64::max);
        assert!(r.satisfied && (r.c_min - scan).abs() < 1e-3 * scan);

        let s = PotentialSpec::smoothed_power(1.0, 0.1, 1);
        let gm = GridMeasure::build(&s, 40.0, 4001).unwrap();
        let r = check_arc(&s, &gm, 1.0).unwrap();
        assert!(r.satisfied && r.argmax_point[0].abs() < 0.1);
    }

    #[test]
    fn arc_flags_growth_with_truncation() {
        // U = x⁴: |U''| grows like x² while (1+|U'|)^{0.5} grows like x^{1.5}
        let q = PotentialSpec::even_monomial(4, 1.0, 1);
        let gm = GridMeasure::build(&q, 4.0, 257).unwrap();
        let r = check_arc(&q, &gm, 1.5).unwrap();
        assert!(!r.satisfied && r.extension_ratio > 1.05);
    }

    #[test]
    fn arc_monotone_in_epsilon() {
        for u in families(1) {
            let radius = match u.family {
                Family::SmoothedPower { alpha, .. } if alpha < 2.0 => 40.0,
                Family::SmoothedPower { .. } => 12.0,
                Family::Gaussian { .. } => 7.0,
                Family::EvenMonomial { degree, .. } if degree > 4 => 3.0,
                _ => 4.0,
            };
            let gm = GridMeasure::build(&u, radius, 129).unwrap();
            let lo = check_arc(&u, &gm, 0.3).unwrap().c_min;
            let hi = check_arc(&u, &gm, 0.9).unwrap().c_min;
            assert!(lo <= hi + 1e-15, "{}", u.label());
        }
    }

    #[test]
    fn assumption_am_examples() {
        let g = PotentialSpec::gaussian(0.5, 1);
        let gm = GridMeasure::build(&g, 8.0, 257).unwrap();
        let r = check_assumption_am(&g, &gm, 4, 1.0).unwrap();
        assert_eq!(r.constant(3), Some(0.0));
        assert_eq!(r.constant(4), Some(0.0));
        assert!(r.satisfied);

        let q = PotentialSpec::even_monomial(4, 1.0, 1);
        let gm = GridMeasure::build(&q, 4.0, 513).unwrap();
        let r = check_assumption_am(&q, &gm, 4, 1.0).unwrap();
        assert!(r.constant(3).unwrap().is_finite() && r.constant(4).unwrap().is_finite());
        assert!(r.satisfied);

        let dw = PotentialSpec::double_well(1.0, 1.0, 1);
        let gm = GridMeasure::build(&dw, 4.0, 513).unwrap();
        let r = check_assumption_am(&dw, &gm, 3, 1.0).unwrap();
        let scan = gm
            .points()
            .map(|p| 24.0 * p[0].abs() / (1.0 + (4.0 * p[0].powi(3) - 4.0 * p[0]).abs()).powi(3))
            .fold(0.0, f64::max);
        assert!(close(r.constant(3).unwrap(), scan, 1e-12));
        assert!(check_assumption_am(&dw, &gm, 2, 1.0).is_err());
    }

    #[test]
    fn gradient_growth_examples() {
        let g = PotentialSpec::gaussian(0.5, 1);
        let gm = GridMeasure::build(&g, 8.0, 257).unwrap();
        let r = check_gradient_growth(&g, &gm, 7).unwrap();
        for (rad, eta) in r.radii.iter().zip(&r.eta) {
            assert!(close(*eta, 1.0 + rad, 1e-12));
        }
        assert!(r.divergent);

        let dw = PotentialSpec::double_well(1.0, 1.0, 1);
        let gm = GridMeasure::build(&dw, 4.0, 513).unwrap();
        let r = check_gradient_growth(&dw, &gm, 7).unwrap();
        let tail: Vec<f64> = r.radii.iter().zip(&r.eta).filter(|(rad, _)| **rad >= 2.0).map(|(_, e)| *e).collect();
        assert!(tail.windows(2).all(|w| w[1] > w[0]) && r.divergent);

        let s = PotentialSpec::smoothed_power(1.0, 0.1, 1);
        let gm = GridMeasure::build(&s, 40.0, 1025).unwrap();
        let r = check_gradient_growth(&s, &gm, 6).unwrap();
        assert!(r.eta.iter().all(|e| close(*e, 2.0, 1e-12)));
        assert!(!r.divergent);
    }
}
