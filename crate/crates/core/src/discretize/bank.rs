use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{grad_norm_k, GridFunction, GridMeasure};
use crate::multi_index::MultiIndex;

/// Named test functions standing in for "all f" in the inequalities.
#[derive(Clone, Debug, PartialEq)]
pub struct TestBank {
    pub seed: u64,
    members: Vec<(String, GridFunction)>,
}

/// Members below this first-order energy are treated as constant.
const NONCONSTANT_FLOOR: f64 = 1e-10;

impl TestBank {
    pub fn iter(&self) -> impl Iterator<Item = (&str, &GridFunction)> {
        self.members.iter().map(|(n, f)| (n.as_str(), f))
    }

    /// Every member except `"const"`.
    pub fn nonconstant(&self) -> impl Iterator<Item = (&str, &GridFunction)> {
        self.iter().filter(|(n, _)| *n != "const")
    }

    pub fn get(&self, name: &str) -> Option<&GridFunction> {
        self.members.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn names(&self) -> Vec<&str> {
        self.members.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Adds a member unless it is numerically constant on `gm`.
    pub fn push(&mut self, gm: &GridMeasure, name: impl Into<String>, f: GridFunction) -> bool {
        let name = name.into();
        let keep = name == "const" || grad_norm_k(gm, &f, 1, 2.0).is_ok_and(|g| g > NONCONSTANT_FLOOR);
        if keep {
            self.members.push((name, f));
        }
        keep
    }

    /// The same members re-tagged for another grid with identical nodes.
    pub fn transfer(&self, gm: &GridMeasure) -> crate::Result<TestBank> {
        let members = self
            .members
            .iter()
            .map(|(n, f)| Ok((n.clone(), gm.wrap(f.values().to_vec())?)))
            .collect::<crate::Result<_>>()?;
        Ok(TestBank { seed: self.seed, members })
    }

    /// Keeps the members whose names satisfy `pred`.
    pub fn filtered(&self, pred: impl Fn(&str) -> bool) -> TestBank {
        TestBank {
            seed: self.seed,
            members: self.members.iter().filter(|(n, _)| pred(n)).cloned().collect(),
        }
    }
}

/// Probabilists' Hermite polynomial `He_n(x)`.
pub fn hermite(n: u32, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let next = x * b - f64::from(k) * a;
        a = b;
        b = next;
    }
    b
}

/// Deterministic bank: `"const"`, monomials and Hermite polynomials to degree 6,
/// Gaussian-bump products, and `size` seeded random smooth combinations.
/// `exp(−|x|²/width²)`, a probe concentrated at the origin.
pub fn origin_bump(gm: &GridMeasure, width: f64) -> GridFunction {
    gm.function(|p| (-(p[0] * p[0] + p[1] * p[1]) / (width * width)).exp())
}

pub fn make_test_bank(gm: &GridMeasure, seed: u64, size: usize) -> TestBank {
    let mut bank = TestBank { seed, members: Vec::new() };
    bank.push(gm, "const", gm.constant(1.0));
    if gm.dim() == 1 {
        for n in 1..=6u32 {
            bank.push(gm, format!("mono:x^{n}"), gm.function(|p| p[0].powi(n as i32)));
        }
        for n in 1..=6u32 {
            bank.push(gm, format!("herm:He_{n}"), gm.function(|p| hermite(n, p[0])));
        }
    } else {
        for alpha in MultiIndex::up_to(2, 4).into_iter().filter(|a| a.order() >= 1) {
            bank.push(gm, format!("mono:x^{}y^{}", alpha.0[0], alpha.0[1]), gm.function(|p| alpha.monomial(p)));
        }
        for alpha in MultiIndex::up_to(2, 4).into_iter().filter(|a| a.order() >= 1) {
            bank.push(
                gm,
                format!("herm:He_{},{}", alpha.0[0], alpha.0[1]),
                gm.function(|p| hermite(alpha.0[0], p[0]) * hermite(alpha.0[1], p[1])),
            );
        }
    }
    let r2 = |p: &[f64; 2], c: f64| (p[0] - c).powi(2) + p[1] * p[1];
    bank.push(gm, "bump:g(0)", gm.function(|p| (-r2(p, 0.0)).exp()));
    bank.push(gm, "bump:g(1)", gm.function(|p| (-r2(p, 1.0)).exp()));
    bank.push(gm, "bump:x*g(-1)", gm.function(|p| p[0] * (-0.5 * r2(p, -1.0)).exp()));
    bank.push(gm, "bump:x^2*g(0.5)", gm.function(|p| p[0] * p[0] * (-0.5 * r2(p, 0.5)).exp()));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..size {
        let waves: Vec<([f64; 2], f64, f64)> = (0..3)
            .map(|_| {
                let omega = rng.random_range(0.3..2.0);
                let theta: f64 = if gm.dim() == 1 { 0.0 } else { rng.random_range(0.0..std::f64::consts::TAU) };
                let amp = rng.random_range(-1.0..1.0);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                ([omega * theta.cos(), omega * theta.sin()], amp, phase)
            })
            .collect();
        let lin = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        let quad = rng.random_range(-0.3..0.3);
        let f = gm.function(|p| {
            let osc: f64 = waves.iter().map(|(k, a, ph)| a * (k[0] * p[0] + k[1] * p[1] + ph).sin()).sum();
            osc + lin[0] * p[0] + lin[1] * p[1] + quad * p[0] * p[0]
        });
        bank.push(gm, format!("rand{i}"), f);
    }
    bank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn grid() -> GridMeasure {
        GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 8.0, 257).unwrap()
    }

    #[test]
    fn hermite_recursion() {
        assert_eq!(hermite(3, 2.0), 2.0);
        assert_eq!(hermite(4, 1.0), -2.0);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let gm = grid();
        let a = make_test_bank(&gm, 7, 8);
        assert_eq!(a, make_test_bank(&gm, 7, 8));
        let b = make_test_bank(&gm, 8, 8);
        assert_eq!(a.names(), b.names());
        for ((na, fa), (_, fb)) in a.iter().zip(b.iter()) {
            assert_eq!(na.starts_with("rand"), fa != fb, "{na}");
        }
    }

    #[test]
    fn members_are_nonconstant() {
        for gm in [grid(), GridMeasure::build(&PotentialSpec::double_well(1.0, 1.0, 2), 3.5, 41).unwrap()] {
            let bank = make_test_bank(&gm, 1, 10);
            assert!(bank.len() >= 20);
            for (_, f) in bank.nonconstant() {
                assert!(grad_norm_k(&gm, f, 1, 2.0).unwrap() > 1e-10);
            }
        }
    }
}
