//! Minimizing polynomials in `L_q(μ)`, Orlicz shift and subspace minimizers, and
//! the downhill polynomial built from first-order minimizing constants.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::discretize::{derivative, GridFunction, GridMeasure};
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::orlicz::{luxemburg_norm_of, OrliczSpec};

pub const MAX_ITERATIONS: usize = 500;
pub const STEP_TOLERANCE: f64 = 1e-10;
/// Lower bound on `|r|` inside IRLS weights `|r|^{q-2}`.
pub const IRLS_WEIGHT_FLOOR: f64 = 1e-12;
const UNIQUENESS_TOLERANCE: f64 = 1e-7;

/// Polynomial in monomial coefficients; serializes as `{"i,j": c}` (`{"i": c}` in 1d).
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub dim: usize,
    pub degree: u32,
    coefficients: BTreeMap<MultiIndex, f64>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.coefficients.len()))?;
        for (a, c) in &self.coefficients {
            map.serialize_entry(&a.to_key(self.dim), c)?;
        }
        map.end()
    }
}

impl Polynomial {
    pub fn zero(dim: usize, degree: u32) -> Self {
        Self { dim, degree, coefficients: BTreeMap::new() }
    }

    pub fn from_coefficients(dim: usize, degree: u32, coefficients: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut p = Self::zero(dim, degree);
        for (a, c) in coefficients {
            p.add_term(a, c)?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) -> Result<()> {
        if alpha.order() > self.degree || (self.dim == 1 && alpha.0[1] != 0) {
            return Err(Error::InvalidArgument(format!("monomial {alpha} exceeds degree {}", self.degree)));
        }
        *self.coefficients.entry(alpha).or_insert(0.0) += c;
        Ok(())
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.coefficients.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.coefficients.iter()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|(a, c)| c * a.monomial(x)).sum()
    }

    /// Exact monomial evaluation at the nodes.
    pub fn on_grid(&self, gm: &GridMeasure) -> GridFunction {
        gm.function(|p| self.eval(p))
    }

    /// Largest coefficient difference against `other`.
    pub fn max_coefficient_gap(&self, other: &Polynomial) -> f64 {
        let keys: Vec<&MultiIndex> = self.coefficients.keys().chain(other.coefficients.keys()).collect();
        keys.iter().map(|a| (self.coefficient(a) - other.coefficient(a)).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Minimizer {
    Polynomial(Polynomial),
    Shift(f64),
    /// Coefficients in the caller's basis.
    Combination(Vec<f64>),
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizerResult {
    pub minimizer: Minimizer,
    pub distance: f64,
    pub iterations: usize,
    pub stationarity_residual: f64,
    pub converged: bool,
    /// A second run from a different start reached the same distance.
    pub unique: bool,
    pub notes: Vec<String>,
}

impl MinimizerResult {
    pub fn polynomial(&self) -> Option<&Polynomial> {
        match &self.minimizer {
            Minimizer::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    pub fn shift(&self) -> Option<f64> {
        match self.minimizer {
            Minimizer::Shift(a) => Some(a),
            _ => None,
        }
    }
}

/// μ-orthonormal combinations of raw node vectors; `transform` column `j` holds the
/// raw-basis coefficients of orthonormal vector `j`.
struct OrthoBasis {
    vectors: Vec<Vec<f64>>,
    transform: DMatrix<f64>,
}

fn orthonormalize(gm: &GridMeasure, raw: &[Vec<f64>]) -> Result<OrthoBasis> {
    let w = gm.weights();
    let dot = |a: &[f64], b: &[f64]| -> f64 { w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum() };
    let m = raw.len();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut transform = DMatrix::<f64>::zeros(m, m);
    for (j, r) in raw.iter().enumerate() {
        let original = dot(r, r).sqrt();
        if !(original > 0.0) {
            return Err(Error::DegenerateBasis);
        }
        let mut v = r.clone();
        let mut coeffs = DVector::<f64>::zeros(m);
        coeffs[j] = 1.0;
        // two Gram-Schmidt passes
        for _ in 0..2 {
            for (i, q) in vectors.iter().enumerate() {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                for row in 0..m {
                    coeffs[row] -= c * transform[(row, i)];
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= 1e-10 * original {
            return Err(Error::DegenerateBasis);
        }
        v.iter_mut().for_each(|a| *a /= norm);
        transform.set_column(j, &(coeffs / norm));
        vectors.push(v);
    }
    Ok(OrthoBasis { vectors, transform })
}

fn combine(basis: &[Vec<f64>], c: &DVector<f64>, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (b, cj) in basis.iter().zip(c.iter()) {
        out.iter_mut().zip(b).for_each(|(o, v)| *o += cj * v);
    }
    out
}

/// `μ|r|^q`, gradient and (for Newton) Hessian in orthonormal coordinates.
struct LqProblem<'a> {
    w: &'a [f64],
    f: &'a [f64],
    basis: &'a [Vec<f64>],
    q: f64,
}

impl LqProblem<'_> {
    fn residual(&self, c: &DVector<f64>) -> Vec<f64> {
        let fit = combine(self.basis, c, self.f.len());
        self.f.iter().zip(fit).map(|(a, b)| a - b).collect()
    }

    fn objective(&self, c: &DVector<f64>) -> f64 {
        self.residual(c).iter().zip(self.w).map(|(r, w)| w * r.abs().powf(self.q)).sum()
    }

    fn gradient(&self, r: &[f64]) -> DVector<f64> {
        let m = self.basis.len();
        DVector::from_iterator(
            m,
            self.basis.iter().map(|b| {
                -self.q
                    * self.w.iter().zip(r.iter().zip(b)).map(|(w, (r, e))| w * r.signum() * r.abs().powf(self.q - 1.0) * e).sum::<f64>()
            }),
        )
    }

    /// `Σ w ω e_j e_l` and `Σ w ω f e_j` for node weights `ω`.
    fn weighted_normal_equations(&self, omega: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.basis.len();
        let mut g = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for i in 0..self.f.len() {
            let wo = self.w[i] * omega[i];
            if wo == 0.0 {
                continue;
            }
            for j in 0..m {
                let ej = self.basis[j][i];
                rhs[j] += wo * self.f[i] * ej;
                for l in 0..=j {
                    g[(j, l)] += wo * ej * self.basis[l][i];
                }
            }
        }
        for j in 0..m {
            for l in 0..j {
                g[(l, j)] = g[(j, l)];
            }
        }
        (g, rhs)
    }
}

fn spd_solve(mut a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = a.diagonal().iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    for attempt in 0..6 {
        if let Some(ch) = a.clone().cholesky() {
            return Some(ch.solve(b));
        }
        let ridge = scale.max(f64::MIN_POSITIVE) * 1e-14 * 10f64.powi(2 * attempt);
        for i in 0..a.nrows() {
            a[(i, i)] += ridge;
        }
    }
    None
}

struct RunOutcome {
    c: DVector<f64>,
    iterations: usize,
    converged: bool,
}

fn newton_run(pb: &LqProblem, mut c: DVector<f64>) -> RunOutcome {
    let q = pb.q;
    for it in 1..=MAX_ITERATIONS {
        let r = pb.residual(&c);
        let grad = pb.gradient(&r);
        if grad.norm() == 0.0 {
            return RunOutcome { c, iterations: it, converged: true };
        }
        let omega: Vec<f64> = r.iter().map(|r| q * (q - 1.0) * r.abs().powf(q - 2.0)).collect();
        let (h, _) = pb.weighted_normal_equations(&omega);
        let Some(step) = spd_solve(h, &(-&grad)) else {
            return RunOutcome { c, iterations: it, converged: false };
        };
        let f0 = pb.objective(&c);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        while t > 1e-20 && pb.objective(&(&c + t * &step)) > f0 + 1e-4 * t * slope {
            t *= 0.5;
        }
        let delta = t * step;
        c += &delta;
        if delta.norm() < STEP_TOLERANCE * c.norm().max(1.0) {
            return RunOutcome { c, iterations: it, converged: true };
        }
    }
    RunOutcome { c, iterations: MAX_ITERATIONS, converged: false }
}

fn irls_run(pb: &LqProblem, mut c: DVector<f64>) -> RunOutcome {
    for it in 1..=MAX_ITERATIONS {
        let r = pb.residual(&c);
        let omega: Vec<f64> = r.iter().map(|r| r.abs().max(IRLS_WEIGHT_FLOOR).powf(pb.q - 2.0)).collect();
        let (g, rhs) = pb.weighted_normal_equations(&omega);
        let Some(next) = spd_solve(g, &rhs) else {
            return RunOutcome { c, iterations: it, converged: false };
        };
        let step = (&next - &c).norm();
        c = next;
        if step < STEP_TOLERANCE * c.norm().max(1.0) {
            return RunOutcome { c, iterations: it, converged: true };
        }
    }
    RunOutcome { c, iterations: MAX_ITERATIONS, converged: false }
}

fn check_q(q: f64) -> Result<()> {
    if q > 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::QOutOfRange(q))
    }
}

/// The degree-`(k-1)` polynomial `w` minimizing `μ|f − w|^q`.
pub fn lq_min_polynomial(gm: &GridMeasure, f: &GridFunction, k: u32, q: f64) -> Result<MinimizerResult> {
    check_q(q)?;
    gm.check(f)?;
    if k == 0 {
        return Err(Error::InvalidArgument("order k must be >= 1".into()));
    }
    let monomials = MultiIndex::up_to(gm.dim(), k - 1);
    let raw: Vec<Vec<f64>> = monomials.iter().map(|a| gm.points().map(|p| a.monomial(&p)).collect()).collect();
    let ob = orthonormalize(gm, &raw)?;
    let pb = LqProblem { w: gm.weights(), f: f.values(), basis: &ob.vectors, q };

    let m = monomials.len();
    let (g0, rhs0) = pb.weighted_normal_equations(&vec![1.0; f.len()]);
    let least_squares = spd_solve(g0, &rhs0).ok_or(Error::DegenerateBasis)?;
    let scale = f.values().iter().zip(gm.weights()).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
    let offset = DVector::from_element(m, 0.1 * scale.max(1.0));
    let run = |start: DVector<f64>| if q >= 2.0 { newton_run(&pb, start) } else { irls_run(&pb, start) };
    let first = run(least_squares.clone());
    let second = run(&least_squares + offset);

    let distance = |c: &DVector<f64>| pb.objective(c).powf(1.0 / q);
    let (d1, d2) = (distance(&first.c), distance(&second.c));
    let best = if d2 < d1 { &second } else { &first };
    let residual = pb.gradient(&pb.residual(&best.c)).norm();
    if !first.converged && !second.converged {
        return Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual });
    }

    let raw_coeffs = &ob.transform * &best.c;
    let poly = Polynomial::from_coefficients(gm.dim(), k - 1, monomials.iter().copied().zip(raw_coeffs.iter().copied()))?;
    let mut notes = Vec::new();
    if q < 2.0 {
        notes.push(format!("IRLS with weight floor {IRLS_WEIGHT_FLOOR:e}"));
    }
    Ok(MinimizerResult {
        minimizer: Minimizer::Polynomial(poly),
        distance: d1.min(d2),
        iterations: first.iterations + second.iterations,
        stationarity_residual: residual,
        converged: first.converged && second.converged,
        unique: (d1 - d2).abs() <= UNIQUENESS_TOLERANCE * d1.max(d2).max(1.0),
        notes,
    })
}

/// `‖r − t·b‖_Φ` and `S(t) = μ(Φ′((r − t b)/λ) b)`, decreasing in `t`.
struct LineProblem<'a> {
    gm: &'a GridMeasure,
    r: &'a [f64],
    b: &'a [f64],
    phi: &'a OrliczSpec,
}

impl LineProblem<'_> {
    fn shifted(&self, t: f64) -> Vec<f64> {
        self.r.iter().zip(self.b).map(|(r, b)| r - t * b).collect()
    }

    fn norm(&self, t: f64) -> f64 {
        luxemburg_norm_of(self.gm, &self.shifted(t), self.phi)
    }

    fn slope(&self, t: f64) -> f64 {
        let v = self.shifted(t);
        let lambda = luxemburg_norm_of(self.gm, &v, self.phi);
        if lambda == 0.0 {
            return 0.0;
        }
        self.gm
            .weights()
            .iter()
            .zip(v.iter().zip(self.b))
            .map(|(w, (v, b))| w * self.phi.derivative(v / lambda) * b)
            .sum()
    }

    /// A bracket `[lo, hi]` with `S(lo) ≥ 0 ≥ S(hi)`, grown by doubling from `0`.
    fn bracket(&self) -> (f64, f64) {
        let rmax = self.r.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let bmax = self.b.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let mut step = (rmax / bmax).max(1e-300);
        let s0 = self.slope(0.0);
        let dir = if s0 >= 0.0 { 1.0 } else { -1.0 };
        let mut far = dir * step;
        for _ in 0..200 {
            if self.slope(far) * dir <= 0.0 {
                break;
            }
            step *= 2.0;
            far = dir * step;
        }
        if dir > 0.0 {
            (0.0, far)
        } else {
            (far, 0.0)
        }
    }

    /// Golden-section search on the norm, then bisection on the sign of `S`.
    fn minimize(&self, lo: f64, hi: f64) -> (f64, usize) {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let (mut f1, mut f2) = (self.norm(x1), self.norm(x2));
        let mut iterations = 0;
        while b - a > 1e-4 * (hi - lo) {
            iterations += 1;
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = self.norm(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = self.norm(x2);
            }
        }
        // the golden bracket contains the minimizer; confirm the sign change or fall back
        let (mut a, mut b) = if self.slope(a) >= 0.0 && self.slope(b) <= 0.0 { (a, b) } else { (lo, hi) };
        while b - a > 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            iterations += 1;
            let mid = 0.5 * (a + b);
            let s = self.slope(mid);
            if s == 0.0 {
                return (mid, iterations);
            }
            if s > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if iterations > 10 * MAX_ITERATIONS {
                break;
            }
        }
        let (sa, sb) = (self.slope(a).abs(), self.slope(b).abs());
        (if sa <= sb { a } else { b }, iterations)
    }
}

/// Residual below which the shift minimizer counts as stationary.
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;

/// The constant `a*` minimizing `‖f − a‖_Φ`.
pub fn orlicz_shift_minimizer(gm: &GridMeasure, f: &GridFunction, phi: &OrliczSpec) -> Result<MinimizerResult> {
    gm.check(f)?;
    let (lo, hi) = f.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if hi - lo <= 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
        return Err(Error::ConstantFunction);
    }
    let ones = vec![1.0; f.len()];
    let line = LineProblem { gm, r: f.values(), b: &ones, phi };
    let (a, iterations) = line.minimize(lo, hi);
    let residual = line.slope(a).abs();
    let distance = line.norm(a);
    // independent route: plain bisection on the stationarity condition over [min f, max f]
    let (mut x, mut y) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (x + y);
        if line.slope(mid) > 0.0 {
            x = mid;
        } else {
            y = mid;
        }
        if y - x <= 4.0 * f64::EPSILON * x.abs().max(y.abs()) {
            break;
        }
    }
    let other = line.norm(0.5 * (x + y));
    Ok(MinimizerResult {
        minimizer: Minimizer::Shift(a),
        distance,
        iterations,
        stationarity_residual: residual,
        converged: residual < STATIONARITY_TOLERANCE,
        unique: (distance - other).abs() <= UNIQUENESS_TOLERANCE * distance.max(1.0),
        notes: Vec::new(),
    })
}

/// `h ∈ span(basis)` minimizing `‖f − h‖_Φ` by coordinate descent over a
/// μ-orthonormalized copy of the basis.
pub fn subspace_minimizer(
    gm: &GridMeasure,
    f: &GridFunction,
    phi: &OrliczSpec,
    basis: &[GridFunction],
) -> Result<MinimizerResult> {
    gm.check(f)?;
    if basis.is_empty() {
        return Err(Error::DegenerateBasis);
    }
    for b in basis {
        gm.check(b)?;
    }
    let raw: Vec<Vec<f64>> = basis.iter().map(|b| b.values().to_vec()).collect();
    let ob = orthonormalize(gm, &raw)?;
    let m = basis.len();
    let mut c = DVector::<f64>::zeros(m);
    let mut r = f.values().to_vec();
    let mut iterations = 0;
    let mut converged = false;
    let norm_of = |v: &[f64]| luxemburg_norm_of(gm, v, phi);
    let mut dist = norm_of(&r);
    for _ in 0..MAX_ITERATIONS {
        let mut biggest = 0.0f64;
        for (j, q) in ob.vectors.iter().enumerate() {
            if dist == 0.0 {
                break;
            }
            let line = LineProblem { gm, r: &r, b: q, phi };
            let (lo, hi) = line.bracket();
            let (t, its) = line.minimize(lo, hi);
            iterations += its;
            c[j] += t;
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= t * b);
            biggest = biggest.max(t.abs());
            dist = norm_of(&r);
        }
        if biggest < STEP_TOLERANCE * c.norm().max(1.0) || dist == 0.0 {
            converged = true;
            break;
        }
    }
    let lambda = dist;
    let residual = if lambda == 0.0 {
        0.0
    } else {
        ob.vectors
            .iter()
            .map(|q| {
                gm.weights()
                    .iter()
                    .zip(r.iter().zip(q))
                    .map(|(w, (v, b))| w * phi.derivative(v / lambda) * b)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    };
    let coeffs = &ob.transform * &c;
    Ok(MinimizerResult {
        minimizer: Minimizer::Combination(coeffs.iter().copied().collect()),
        distance: dist,
        iterations,
        stationarity_residual: residual,
        converged,
        unique: true,
        notes: vec!["uniqueness rests on convexity of the norm along the subspace".into()],
    })
}

/// Downhill construction: starting from `P = 0`, for `j = k−1, …, 0` add
/// `Σ_{|α|=j} x^α/α! · M_{1,q}(∇^α(f − P))`; stencil derivatives supply `∇^α`.
pub fn downhill_polynomial(gm: &GridMeasure, f: &GridFunction, k: u32, q: f64) -> Result<Polynomial> {
    check_q(q)?;
    gm.check(f)?;
    if k == 0 || k > 4 {
        return Err(Error::InvalidArgument(format!("downhill order k = {k} not in 1..=4")));
    }
    let mut p = Polynomial::zero(gm.dim(), k - 1);
    for j in (0..k).rev() {
        let remainder = f.sub(&p.on_grid(gm))?;
        let mut level = Vec::new();
        for alpha in MultiIndex::of_order(gm.dim(), j) {
            let d = derivative(gm, &remainder, &alpha)?;
            let constant = lq_min_polynomial(gm, &d, 1, q)?;
            let c = constant.polynomial().map_or(0.0, |poly| poly.coefficient(&MultiIndex::ZERO));
            level.push((alpha, c / alpha.factorial()));
        }
        for (alpha, c) in level {
            p.add_term(alpha, c)?;
        }
    }
    Ok(p)
}
