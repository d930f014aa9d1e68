//! The diffusion semigroup `f_t = e^{−tL} f₀` and decay of higher gradients along it.
//!
//! `L` here is the positive operator `−Δ + ∇U·∇`, so the semigroup contracts.

use serde::{Deserialize, Serialize};

use crate::dirichlet::{expand, spectral_gap, DirichletOperator, SpectralData, CAPTURE_TOLERANCE};
use crate::discretize::{energy_k, integrate, GridFunction, GridMeasure, TestBank};
use crate::verify::{ratio, ConstantKind, InequalityReport, MemberRatio};
use crate::{par, Error, Result};

/// Relative residual at which each Crank–Nicolson step is accepted.
pub const SOLVE_TOLERANCE: f64 = 1e-10;
/// Curve values below this cannot be fitted on a log scale.
pub const FIT_FLOOR: f64 = 1e-13;
const MIN_FIT_POINTS: usize = 5;
/// Relative slack when comparing the late half of an envelope against the early half.
const ENVELOPE_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Spectral,
    CrankNicolson,
}

/// How `e^{−tL}` is applied.
#[derive(Clone, Copy, Debug)]
pub enum Propagator<'a> {
    /// Exact in the retained eigenbasis.
    Spectral { gm: &'a GridMeasure, sd: &'a SpectralData },
    /// Time stepping with `(I + τL/2) f_{n+1} = (I − τL/2) f_n`, `τ ≤ dt`.
    CrankNicolson { op: &'a DirichletOperator, dt: f64 },
}

impl Propagator<'_> {
    pub fn scheme(&self) -> Scheme {
        match self {
            Propagator::Spectral { .. } => Scheme::Spectral,
            Propagator::CrankNicolson { .. } => Scheme::CrankNicolson,
        }
    }
}

/// `e^{−tL} f₀`.
pub fn evolve(prop: &Propagator, f0: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time t = {t} must be finite and >= 0")));
    }
    match *prop {
        Propagator::Spectral { gm, sd } => {
            let coefs = coefficients(gm, sd, f0)?;
            Ok(spectral_at(sd, &coefs, t))
        }
        Propagator::CrankNicolson { op, dt } => crank_nicolson(op, f0, t, dt),
    }
}

fn coefficients(gm: &GridMeasure, sd: &SpectralData, f: &GridFunction) -> Result<Vec<f64>> {
    if sd.grid() != gm.id() {
        return Err(Error::GridMismatch);
    }
    let (coefs, captured) = expand(gm, sd, f)?;
    if captured < 1.0 - CAPTURE_TOLERANCE {
        return Err(Error::BasisDeficit { captured });
    }
    Ok(coefs)
}

fn spectral_at(sd: &SpectralData, coefs: &[f64], t: f64) -> GridFunction {
    let mut out = vec![0.0; sd.eigenvectors()[0].len()];
    for ((lambda, c), phi) in sd.eigenvalues().iter().zip(coefs).zip(sd.eigenvectors()) {
        let a = c * (-lambda * t).exp();
        out.iter_mut().zip(phi.values()).for_each(|(o, p)| *o += a * p);
    }
    GridFunction::from_parts(sd.grid(), out)
}

fn crank_nicolson(op: &DirichletOperator, f0: &GridFunction, t: f64, dt: f64) -> Result<GridFunction> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step dt = {dt} must be positive")));
    }
    let steps = (t / dt).ceil() as usize;
    if steps == 0 {
        op.apply(f0)?;
        return Ok(f0.clone());
    }
    let half = 0.5 * t / steps as f64;
    let w = op.weights();
    let dot = |a: &[f64], b: &[f64]| -> f64 { w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum() };
    let grid = f0.grid();
    let lhs = |x: &[f64]| -> Result<Vec<f64>> {
        let lx = op.apply(&GridFunction::from_parts(grid, x.to_vec()))?;
        Ok(x.iter().zip(lx.values()).map(|(a, b)| a + half * b).collect())
    };
    let mut f = f0.values().to_vec();
    for _ in 0..steps {
        let lf = op.apply(&GridFunction::from_parts(grid, f.clone()))?;
        let rhs: Vec<f64> = f.iter().zip(lf.values()).map(|(a, b)| a - half * b).collect();
        // conjugate gradients in the μ inner product, where I + τL/2 is symmetric
        let target = SOLVE_TOLERANCE * dot(&rhs, &rhs).sqrt();
        let mut x = f;
        let ax = lhs(&x)?;
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut d = r.clone();
        let mut rr = dot(&r, &r);
        let mut iterations = 0;
        while rr.sqrt() > target {
            if iterations >= 10 * x.len() {
                return Err(Error::LinearSolveFailure { residual: rr.sqrt() });
            }
            let ad = lhs(&d)?;
            let alpha = rr / dot(&d, &ad);
            x.iter_mut().zip(&d).for_each(|(x, d)| *x += alpha * d);
            r.iter_mut().zip(&ad).for_each(|(r, a)| *r -= alpha * a);
            let next = dot(&r, &r);
            let beta = next / rr;
            d.iter_mut().zip(&r).for_each(|(d, r)| *d = r + beta * *d);
            rr = next;
            iterations += 1;
        }
        f = x;
    }
    Ok(GridFunction::from_parts(grid, f))
}

/// `μ|∇^k f_t|²` sampled along the semigroup.
#[derive(Clone, Debug, Serialize)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub k: u32,
    pub scheme: Scheme,
    pub fitted_rate: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    /// Root-mean-square residual of the log-linear fit.
    pub fit_residual: Option<f64>,
}

impl DecayCurve {
    /// The last half of the time ladder.
    pub fn default_window(&self) -> (f64, f64) {
        let first = self.times.first().copied().unwrap_or(0.0);
        let last = self.times.last().copied().unwrap_or(0.0);
        (0.5 * (first + last), last)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t:.17e},{v:.17e}\n"));
        }
        out
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    let ordered = times.windows(2).all(|p| p[1] > p[0]);
    if times.is_empty() || !ordered || !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite, nonnegative and strictly increasing".into()));
    }
    Ok(())
}

/// `μ|∇^k f_t|²` at each time, with `f_t` from the spectral scheme.
pub fn decay_curve(gm: &GridMeasure, sd: &SpectralData, f0: &GridFunction, k: u32, times: &[f64]) -> Result<DecayCurve> {
    if k > 3 {
        return Err(Error::InvalidArgument(format!("decay curves support k <= 3, got {k}")));
    }
    check_times(times)?;
    let coefs = coefficients(gm, sd, f0)?;
    let values = times
        .iter()
        .map(|t| energy_k(gm, &spectral_at(sd, &coefs, *t), k, 2.0))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DecayCurve {
        times: times.to_vec(),
        values,
        k,
        scheme: Scheme::Spectral,
        fitted_rate: None,
        fit_window: None,
        fit_residual: None,
    })
}

/// Negated least-squares slope of `ln value` against `t` over `window`.
/// Stores the rate, window and residual on the curve.
pub fn fit_decay_rate(curve: &mut DecayCurve, window: (f64, f64)) -> Result<f64> {
    let points: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(&curve.values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (*t, *v))
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::WindowTooSmall { points: points.len() });
    }
    if let Some((_, v)) = points.iter().find(|(_, v)| !(*v > FIT_FLOOR)) {
        return Err(Error::Underflow { value: *v });
    }
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(t, v)| (t - tm) * (v.ln() - ym)).sum();
    let sxx: f64 = points.iter().map(|(t, _)| (t - tm).powi(2)).sum();
    let slope = sxy / sxx;
    let rms = (points.iter().map(|(t, v)| (v.ln() - ym - slope * (t - tm)).powi(2)).sum::<f64>() / n).sqrt();
    curve.fitted_rate = Some(-slope);
    curve.fit_window = Some(window);
    curve.fit_residual = Some(rms);
    Ok(-slope)
}

/// `value_t · e^{2 m₀ t} / bracket` at every sample.
pub fn envelope_ratios(curve: &DecayCurve, gap: f64, bracket: f64) -> Vec<f64> {
    curve.times.iter().zip(&curve.values).map(|(t, v)| v * (2.0 * gap * t).exp() / bracket).collect()
}

/// Decay envelope `μ|∇^k f_t|² ≤ C′ e^{−2m₀t}(μ|∇^k f₀|² + μ(f₀ − μf₀)²)` over the bank,
/// with `m₀` the spectral gap. The reported constant is the single `C′` covering every
/// member and time; the check is that the late half of the ladder never exceeds what
/// the early half already needed.
pub fn check_decay_envelope(gm: &GridMeasure, sd: &SpectralData, bank: &TestBank, k: u32, times: &[f64]) -> Result<InequalityReport> {
    check_times(times)?;
    let gap = spectral_gap(sd)?;
    let split = times.len() / 2;
    let members: Vec<(&str, &GridFunction)> = bank.nonconstant().collect();
    let rows = par::map(&members, |(name, f)| -> Result<(MemberRatio, f64, f64)> {
        let mean = integrate(gm, f)?;
        let bracket = energy_k(gm, f, k, 2.0)? + energy_k(gm, &f.shift(-mean), 0, 2.0)?;
        let curve = decay_curve(gm, sd, f, k, times)?;
        let ratios = envelope_ratios(&curve, gap, bracket);
        let early = ratios[..split.max(1)].iter().copied().fold(0.0, f64::max);
        let late = ratios[split..].iter().copied().fold(0.0, f64::max);
        Ok((ratio(name, early.max(late) * bracket, bracket), early, late))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let early = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let late = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let table = rows.into_iter().map(|r| r.0).collect();
    let mut report = InequalityReport::new("decay_envelope", gm, ConstantKind::BankSupremum, table, Vec::new())
        .param("k", k)
        .param("t_max", times[times.len() - 1]);
    report.notes.push("semigroup is e^{-tL} with L = -Δ + ∇U·∇ positive".into());
    report.extras.insert("gap".into(), gap);
    report.extras.insert("c_prime".into(), report.empirical_constant);
    report.extras.insert("early_max".into(), early);
    report.extras.insert("late_max".into(), late);
    report.passed &= late <= early * (1.0 + ENVELOPE_SLACK);
    Ok(report)
}
