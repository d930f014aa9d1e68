//! Empirical constants for the coercive inequalities, estimated as suprema (or
//! infima) of the defining ratio over a test bank, plus grid-exact values where
//! the spectrum provides them.

mod adams;
mod equivalence;
mod norms;
mod poincare;

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::discretize::{GridMeasure, GridSummary};

pub use adams::{check_adams_orlicz_chain, check_revised_adams, check_weighted_bound, WeightMode};
pub use equivalence::{check_condition_c, norm_equivalence_sweep};
pub use norms::{check_luxemburg, check_measure_perturbation, check_minimizer_properties};
pub use poincare::{check_downhill, eigenspace_poincare_sup, estimate_poincare};

pub const REPORT_SCHEMA: &str = "coerce-lab/report-v1";
/// Relative slack for implication checks between measured constants.
pub const DEFAULT_SLACK: f64 = 0.05;
/// Denominators below this mark a member as degenerate for the ratio.
pub const DEGENERATE_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    /// Largest ratio over the bank; a lower bound on the true constant.
    BankSupremum,
    /// Smallest ratio over the bank.
    BankInfimum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberRatio {
    pub member: String,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub inequality: String,
    pub parameters: BTreeMap<String, Value>,
    pub potential: String,
    pub grid: GridSummary,
    pub kind: ConstantKind,
    pub empirical_constant: f64,
    pub witness: Option<String>,
    pub ratios: Vec<MemberRatio>,
    /// Members left out because their denominator vanishes.
    pub skipped: Vec<String>,
    /// `|c_fine / c − 1|` under `N → 2N+1`; filled in by the caller that owns both grids.
    pub refinement_delta: Option<f64>,
    /// Bound the constant is compared against, if the inequality provides one.
    pub bound: Option<f64>,
    pub passed: bool,
    /// Further named constants computed alongside the main one.
    pub extras: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub(crate) fn new(inequality: &str, gm: &GridMeasure, kind: ConstantKind, ratios: Vec<MemberRatio>, skipped: Vec<String>) -> Self {
        let mut report = InequalityReport {
            inequality: inequality.into(),
            parameters: BTreeMap::new(),
            potential: gm.potential().label(),
            grid: gm.summary(),
            kind,
            empirical_constant: f64::NAN,
            witness: None,
            ratios,
            skipped,
            refinement_delta: None,
            bound: None,
            passed: false,
            extras: BTreeMap::new(),
            notes: Vec::new(),
        };
        report.recompute();
        report.passed = report.empirical_constant.is_finite();
        report
    }

    pub(crate) fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.into(), value.into());
        self
    }

    /// Recomputes the constant and witness from the ratio table.
    fn recompute(&mut self) {
        let pick = |a: &MemberRatio, b: &MemberRatio| match self.kind {
            ConstantKind::BankSupremum => a.ratio.total_cmp(&b.ratio),
            ConstantKind::BankInfimum => b.ratio.total_cmp(&a.ratio),
        };
        match self.ratios.iter().max_by(|a, b| pick(a, b)) {
            Some(best) => {
                self.empirical_constant = best.ratio;
                self.witness = Some(best.member.clone());
            }
            None => {
                self.empirical_constant = f64::NAN;
                self.witness = None;
            }
        }
    }

    /// The member ratio that realizes the reported constant.
    pub fn witness_ratio(&self) -> Option<&MemberRatio> {
        let name = self.witness.as_deref()?;
        self.ratios.iter().find(|r| r.member == name)
    }

    /// Records the change of the constant against the same report on the refined grid.
    pub fn set_refinement(&mut self, fine: &InequalityReport) {
        self.refinement_delta = Some(refinement_delta(self.empirical_constant, fine.empirical_constant));
    }

    /// Ratio table as `member,numerator,denominator,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("member,numerator,denominator,ratio\n");
        for r in &self.ratios {
            out.push_str(&format!("{},{:.17e},{:.17e},{:.17e}\n", r.member, r.numerator, r.denominator, r.ratio));
        }
        out
    }
}

/// `|fine / coarse − 1|`, or `0` when both vanish.
pub fn refinement_delta(coarse: f64, fine: f64) -> f64 {
    if coarse == fine {
        0.0
    } else {
        (fine / coarse - 1.0).abs()
    }
}

pub(crate) fn ratio(member: &str, numerator: f64, denominator: f64) -> MemberRatio {
    MemberRatio { member: member.into(), numerator, denominator, ratio: numerator / denominator }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    #[test]
    fn constant_and_witness_follow_the_table() {
        let gm = GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 8.0, 65).unwrap();
        let rows = vec![ratio("a", 1.0, 2.0), ratio("b", 3.0, 2.0), ratio("c", 0.1, 2.0)];
        let sup = InequalityReport::new("t", &gm, ConstantKind::BankSupremum, rows.clone(), vec![]);
        assert_eq!(sup.witness.as_deref(), Some("b"));
        assert_eq!(sup.witness_ratio().unwrap().ratio, sup.empirical_constant);
        let inf = InequalityReport::new("t", &gm, ConstantKind::BankInfimum, rows, vec![]);
        assert_eq!((inf.witness.as_deref(), inf.empirical_constant), (Some("c"), 0.05));
        assert!(inf.to_csv().lines().nth(3).unwrap().starts_with("c,"));
        let empty = InequalityReport::new("t", &gm, ConstantKind::BankSupremum, vec![], vec![]);
        assert!(!empty.passed && empty.witness.is_none());
        assert!((refinement_delta(2.0, 2.1) - 0.05).abs() < 1e-12);
    }
}
