//! Orlicz functions, Luxemburg norms and doubling constants.

mod iterlog;

pub use iterlog::{
    default_x_grid, e_j, gamma_ladder, log_j, log_star_j, verify_log_lemmas, LemmaId, LogLemmaReport, MAX_LOG_DEPTH,
};

use serde::{Deserialize, Serialize};

use crate::discretize::{GridFunction, GridMeasure};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrliczSpec {
    /// `|t|^p`
    Power { p: f64 },
    /// `|t|^p ∏ (log_j*(|t|))^{p_j}`
    LogPowerStar { p: f64, exponents: Vec<f64> },
    /// `|t| ∏ (log_j(γ_j + |t|))^{p_j}`
    GammaShifted { gammas: Vec<f64>, exponents: Vec<f64> },
    /// `t² log(1 + t²)`
    NFunction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Value,
    Derivative,
    Inverse,
}

impl OrliczSpec {
    pub fn power(p: f64) -> Self {
        OrliczSpec::Power { p }
    }

    pub fn log_power_star(p: f64, exponents: Vec<f64>) -> Self {
        OrliczSpec::LogPowerStar { p, exponents }
    }

    /// Shifted iterated-log function with the minimal admissible ladder for exponent `p`.
    pub fn gamma_shifted_for(p: f64, exponents: Vec<f64>) -> Self {
        OrliczSpec::GammaShifted { gammas: gamma_ladder(p, exponents.len()), exponents }
    }

    /// The Orlicz functions exercised by the experiments and acceptance checks.
    pub fn shipped() -> Vec<OrliczSpec> {
        vec![
            OrliczSpec::power(1.5),
            OrliczSpec::power(2.0),
            OrliczSpec::power(3.0),
            OrliczSpec::NFunction,
            OrliczSpec::GammaShifted { gammas: vec![1.0], exponents: vec![1.0] },
            OrliczSpec::log_power_star(2.0, vec![1.0]),
        ]
    }

    pub fn label(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        match self {
            OrliczSpec::Power { p } => format!("power({p})"),
            OrliczSpec::LogPowerStar { p, exponents } => format!("log_power_star({p};{})", list(exponents)),
            OrliczSpec::GammaShifted { gammas, exponents } => {
                format!("gamma_shifted([{}];[{}])", list(gammas), list(exponents))
            }
            OrliczSpec::NFunction => "n_function".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            OrliczSpec::Power { p } if !(*p >= 1.0) => bad(format!("power exponent {p} < 1")),
            OrliczSpec::LogPowerStar { p, exponents } => {
                if !(*p >= 1.0) || exponents.iter().any(|e| !(*e >= 0.0)) {
                    bad("log_power_star needs p >= 1 and nonnegative exponents".into())
                } else if exponents.len() > MAX_LOG_DEPTH {
                    bad(format!("at most {MAX_LOG_DEPTH} iterated logs are representable"))
                } else {
                    Ok(())
                }
            }
            OrliczSpec::GammaShifted { gammas, exponents } => {
                if gammas.len() != exponents.len() || gammas.is_empty() {
                    return bad("gamma_shifted needs one gamma per exponent".into());
                }
                if exponents.len() > MAX_LOG_DEPTH {
                    return bad(format!("at most {MAX_LOG_DEPTH} iterated logs are representable"));
                }
                if exponents.iter().any(|e| !(*e >= 0.0)) {
                    return bad("gamma_shifted exponents must be nonnegative".into());
                }
                let minimal = gamma_ladder(1.0, gammas.len());
                match gammas.iter().zip(&minimal).position(|(g, m)| !(*g >= *m)) {
                    Some(j) => bad(format!("gamma_{} = {} is below the ladder minimum {}", j + 1, gammas[j], minimal[j])),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let a = t.abs();
        match self {
            OrliczSpec::Power { p } => a.powf(*p),
            OrliczSpec::LogPowerStar { p, exponents } => {
                if a == 0.0 {
                    return 0.0;
                }
                let mut v = a.powf(*p);
                let mut l = a;
                for e in exponents {
                    l = log_star(l);
                    v *= l.powf(*e);
                }
                v
            }
            OrliczSpec::GammaShifted { gammas, exponents } => {
                let theta: f64 = gammas
                    .iter()
                    .zip(exponents)
                    .enumerate()
                    .map(|(j, (g, e))| log_j(j + 1, g + a).powf(*e))
                    .product();
                a * theta
            }
            OrliczSpec::NFunction => a * a * (a * a).ln_1p(),
        }
    }

    /// `Φ′(t)`, odd in `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        let a = t.abs();
        let d = match self {
            OrliczSpec::Power { p } => {
                if a == 0.0 {
                    if *p == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    p * a.powf(p - 1.0)
                }
            }
            OrliczSpec::LogPowerStar { p, exponents } => {
                if a == 0.0 {
                    if *p == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    // Φ′/Φ = p/a + Σ p_j L_j′/L_j with L_j = log_j*, L_j′ = L_{j-1}′·[L_{j-1} > e]/L_{j-1}
                    let mut log_deriv = p / a;
                    let (mut l, mut dl) = (a, 1.0);
                    for e in exponents {
                        dl = if l > std::f64::consts::E { dl / l } else { 0.0 };
                        l = log_star(l);
                        log_deriv += e * dl / l;
                    }
                    self.value(a) * log_deriv
                }
            }
            OrliczSpec::GammaShifted { gammas, exponents } => {
                let n = gammas.len();
                let logs: Vec<f64> = (0..n).map(|j| log_j(j + 1, gammas[j] + a)).collect();
                let theta: f64 = logs.iter().zip(exponents).map(|(l, e)| l.powf(*e)).product();
                if a == 0.0 {
                    theta
                } else {
                    // d/du log_j(u) = 1/(u ∏_{i<j} log_i(u))
                    let mut dtheta = 0.0;
                    for j in 0..n {
                        let u = gammas[j] + a;
                        let dl = 1.0 / (u * (0..j).map(|i| log_j(i + 1, u)).product::<f64>());
                        let others: f64 =
                            (0..n).filter(|&i| i != j).map(|i| logs[i].powf(exponents[i])).product();
                        dtheta += exponents[j] * logs[j].powf(exponents[j] - 1.0) * dl * others;
                    }
                    theta + a * dtheta
                }
            }
            OrliczSpec::NFunction => {
                let s = a * a;
                2.0 * a * s.ln_1p() + 2.0 * a * s / (1.0 + s)
            }
        };
        d.copysign(t)
    }

    /// `Φ^{-1}(y)` for `y ≥ 0` by bisection on a doubling bracket.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.value(hi) < y {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn eval(&self, t: f64, mode: EvalMode) -> Result<f64> {
        match mode {
            EvalMode::Value => Ok(self.value(t)),
            EvalMode::Derivative => Ok(self.derivative(t)),
            EvalMode::Inverse if t >= 0.0 => Ok(self.inverse(t)),
            EvalMode::Inverse => Err(Error::InvalidArgument(format!("inverse needs t >= 0, got {t}"))),
        }
    }
}

/// `max{1, log t}` with `log*(0) = 1`.
pub fn log_star(t: f64) -> f64 {
    if t > std::f64::consts::E {
        t.ln()
    } else {
        1.0
    }
}

pub fn orlicz_eval(phi: &OrliczSpec, t: f64, mode: EvalMode) -> Result<f64> {
    phi.eval(t, mode)
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Default sampling grid for doubling and convexity certificates.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-6, 1e12, 4001)
}

/// `sup Φ(2t)/Φ(t)` over the grid.
pub fn delta2_constant(phi: &OrliczSpec, t_grid: &[f64]) -> f64 {
    t_grid
        .iter()
        .filter(|t| phi.value(**t) > 0.0)
        .map(|&t| phi.value(2.0 * t) / phi.value(t))
        .fold(0.0, f64::max)
}

/// Secant slopes nondecreasing along the grid (relative slack 1e-9), with `Φ(0) = 0`.
pub fn is_convex_on(phi: &OrliczSpec, t_grid: &[f64]) -> bool {
    let mut pts = vec![0.0];
    pts.extend_from_slice(t_grid);
    let vals: Vec<f64> = pts.iter().map(|t| phi.value(*t)).collect();
    let slopes: Vec<f64> = pts.windows(2).zip(vals.windows(2)).map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0])).collect();
    phi.value(0.0) == 0.0 && slopes.windows(2).all(|s| s[1] >= s[0] - 1e-9 * s[0].abs().max(1.0))
}

/// `μΦ(f/λ)`.
pub fn modular(gm: &GridMeasure, values: &[f64], phi: &OrliczSpec, lambda: f64) -> f64 {
    gm.weights().iter().zip(values).map(|(w, v)| w * phi.value(v / lambda)).sum()
}

fn luxemburg_values(gm: &GridMeasure, values: &[f64], phi: &OrliczSpec) -> f64 {
    let top = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if top == 0.0 {
        return 0.0;
    }
    // μΦ(f/λ) ≤ Φ(max|f|/λ) = 1 at λ = max|f|/Φ^{-1}(1)
    let mut hi = top / phi.inverse(1.0);
    let mut lo = hi;
    while modular(gm, values, phi, lo) <= 1.0 {
        hi = lo;
        lo *= 0.5;
    }
    while hi - lo > 1e-13 * hi {
        let mid = (lo * hi).sqrt();
        if modular(gm, values, phi, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `inf{λ > 0 : μΦ(f/λ) ≤ 1}`; zero for the zero function.
pub fn luxemburg_norm(gm: &GridMeasure, f: &GridFunction, phi: &OrliczSpec) -> Result<f64> {
    gm.check(f)?;
    Ok(luxemburg_values(gm, f.values(), phi))
}

/// Luxemburg norm of raw node values (`|f|^p` and similar derived arrays).
pub fn luxemburg_norm_of(gm: &GridMeasure, values: &[f64], phi: &OrliczSpec) -> f64 {
    luxemburg_values(gm, values, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{lp_norm, make_test_bank};
    use crate::potential::PotentialSpec;
    use proptest::prelude::*;

    fn ou(n: usize) -> GridMeasure {
        GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 8.0, n).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p2 = OrliczSpec::power(2.0);
        assert_eq!(p2.eval(3.0, EvalMode::Value).unwrap(), 9.0);
        assert!((p2.eval(9.0, EvalMode::Inverse).unwrap() - 3.0).abs() < 1e-11);
        assert!((OrliczSpec::NFunction.value(1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(p2.eval(-1.0, EvalMode::Inverse).is_err());
        assert_eq!(OrliczSpec::log_power_star(2.0, vec![1.0]).value(0.0), 0.0);
    }

    #[test]
    fn derivatives_match_difference_quotients() {
        let specs = OrliczSpec::shipped()
            .into_iter()
            .chain([
                OrliczSpec::gamma_shifted_for(3.0, vec![1.0, 2.0, 0.5]),
                OrliczSpec::log_power_star(1.5, vec![1.0, 2.0, 1.0]),
            ])
            .collect::<Vec<_>>();
        for phi in specs {
            for &t in &[0.3, 1.0, 2.2, 7.5, 40.0, 3.0e6, 5.0e7] {
                let h = 1e-5 * t;
                let fd = (phi.value(t + h) - phi.value(t - h)) / (2.0 * h);
                let d = phi.derivative(t);
                assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "{} at {t}: {d} vs {fd}", phi.label());
                assert_eq!(phi.derivative(-t), -d);
            }
        }
    }

    #[test]
    fn shipped_functions_are_valid_convex_and_doubling() {
        let grid = default_t_grid();
        for phi in OrliczSpec::shipped() {
            phi.validate().unwrap();
            assert!(is_convex_on(&phi, &grid), "{}", phi.label());
            assert!(delta2_constant(&phi, &grid).is_finite());
        }
    }

    #[test]
    fn delta2_examples() {
        let grid = default_t_grid();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let k = delta2_constant(&OrliczSpec::power(p), &grid);
            assert!((k - 2f64.powf(p)).abs() <= 4.0 * f64::EPSILON * k);
        }
        let k = delta2_constant(&OrliczSpec::log_power_star(2.0, vec![1.0]), &grid);
        let fine = delta2_constant(&OrliczSpec::log_power_star(2.0, vec![1.0]), &log_grid(1e-6, 1e12, 40001));
        assert!((4.0..8.0).contains(&k) && (k - fine).abs() < 1e-3 * fine, "{k} {fine}");
    }

    #[test]
    fn gamma_below_ladder_is_rejected() {
        let bad = OrliczSpec::GammaShifted { gammas: vec![1.0, 2.0], exponents: vec![1.0, 1.0] };
        assert!(bad.validate().is_err());
        assert!(OrliczSpec::gamma_shifted_for(2.0, vec![1.0, 1.0]).validate().is_ok());
    }

    #[test]
    fn luxemburg_examples() {
        let gm = ou(513);
        let bank = make_test_bank(&gm, 3, 8);
        for p in [1.0, 1.5, 2.0, 3.0] {
            for (name, f) in bank.iter() {
                let lux = luxemburg_norm(&gm, f, &OrliczSpec::power(p)).unwrap();
                let lp = lp_norm(&gm, f, p).unwrap();
                assert!((lux - lp).abs() <= 1e-10 * lp, "{name} p={p}: {lux} vs {lp}");
            }
        }
        for phi in OrliczSpec::shipped() {
            let c = luxemburg_norm(&gm, &gm.constant(-2.5), &phi).unwrap();
            assert!((c - 2.5 / phi.inverse(1.0)).abs() < 1e-10, "{}", phi.label());
            let f = bank.get("rand1").unwrap();
            let lam = luxemburg_norm(&gm, f, &phi).unwrap();
            assert!((modular(&gm, f.values(), &phi, lam) - 1.0).abs() < 1e-9);
        }
        assert_eq!(luxemburg_norm(&gm, &gm.constant(0.0), &OrliczSpec::NFunction).unwrap(), 0.0);
    }

    #[test]
    fn luxemburg_n_function_refines() {
        let coarse = ou(1025);
        let fine = ou(10241);
        let a = luxemburg_norm(&coarse, &coarse.function(|p| p[0]), &OrliczSpec::NFunction).unwrap();
        let b = luxemburg_norm(&fine, &fine.function(|p| p[0]), &OrliczSpec::NFunction).unwrap();
        assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
    }

    proptest! {
        #[test]
        fn luxemburg_homogeneous_and_subadditive(s in -20.0f64..20.0, seed in 0u64..20, which in 0usize..6) {
            let gm = ou(257);
            let phi = &OrliczSpec::shipped()[which];
            let bank = make_test_bank(&gm, seed, 8);
            let members: Vec<_> = bank.nonconstant().map(|(_, f)| f.clone()).collect();
            for (i, f) in members.iter().enumerate().step_by(3) {
                let n = luxemburg_norm(&gm, f, phi).unwrap();
                let ns = luxemburg_norm(&gm, &f.scale(s), phi).unwrap();
                prop_assert!((ns - s.abs() * n).abs() <= 1e-10 * ns.max(1e-300));
                let g = &members[(i + 5) % members.len()];
                let sum = luxemburg_norm(&gm, &f.axpy(1.0, g).unwrap(), phi).unwrap();
                let ng = luxemburg_norm(&gm, g, phi).unwrap();
                prop_assert!(sum <= n + ng + 1e-9 * (n + ng));
            }
        }
    }
}
