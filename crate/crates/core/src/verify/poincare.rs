use nalgebra::{DMatrix, SymmetricEigen};

use super::{ratio, ConstantKind, InequalityReport, MemberRatio, DEGENERATE_FLOOR};
use crate::dirichlet::{assemble_operator, spectral_decomposition, SpectralData};
use crate::discretize::{derivative, energy_k, lp_norm, GridFunction, GridMeasure, TestBank};
use crate::minimize::{downhill_polynomial, lq_min_polynomial};
use crate::multi_index::MultiIndex;
use crate::{par, Error, Result};

/// Slack on the grid-exact Rayleigh bound for `(k, q) = (1, 2)`.
const RAYLEIGH_SLACK: f64 = 1e-6;

type Row = Result<std::result::Result<MemberRatio, String>>;

/// Evaluates `numerator(f) / Σ_{|α|=k} μ|∇^α f|^q` over the nonconstant members,
/// skipping those whose `k`-th gradient vanishes relative to their size.
fn ratio_table(
    gm: &GridMeasure,
    bank: &TestBank,
    k: u32,
    q: f64,
    numerator: impl Fn(&GridFunction) -> Result<f64> + Sync + Send,
) -> Result<(Vec<MemberRatio>, Vec<String>)> {
    let members: Vec<(&str, &GridFunction)> = bank.nonconstant().collect();
    let rows: Vec<Row> = par::map(&members, |(name, f)| {
        let den = energy_k(gm, f, k, q)?;
        let size = lp_norm(gm, f, q)?.powf(q);
        if den < DEGENERATE_FLOOR * size.max(1.0) {
            return Ok(Err(name.to_string()));
        }
        Ok(Ok(ratio(name, numerator(f)?, den)))
    });
    let mut table = Vec::new();
    let mut skipped = Vec::new();
    for row in rows {
        match row? {
            Ok(r) => table.push(r),
            Err(name) => skipped.push(name),
        }
    }
    Ok((table, skipped))
}

/// Bank supremum of `μ|f − M_{k,q}(f)|^q / Σ_{|α|=k} μ|∇^α f|^q`. For `(k, q) = (1, 2)`
/// the grid-exact constant `1/λ_1` is attached and must dominate the bank value.
pub fn estimate_poincare(gm: &GridMeasure, bank: &TestBank, k: u32, q: f64) -> Result<InequalityReport> {
    let (table, skipped) = ratio_table(gm, bank, k, q, |f| Ok(lq_min_polynomial(gm, f, k, q)?.distance.powf(q)))?;
    let mut report = InequalityReport::new("poincare", gm, ConstantKind::BankSupremum, table, skipped)
        .param("k", k)
        .param("q", q);
    if k == 1 && q == 2.0 {
        let sd = spectral_decomposition(&assemble_operator(gm), 2)?;
        let exact = 1.0 / sd.eigenvalues()[1];
        report.extras.insert("grid_exact".into(), exact);
        report.bound = Some(exact + RAYLEIGH_SLACK);
        report.passed &= report.empirical_constant <= exact + RAYLEIGH_SLACK;
        report.notes.push("grid_exact is 1/λ_1 of the discrete operator".into());
    }
    Ok(report)
}

/// Exact sup of the `(k, 2)` Poincaré ratio over `span{φ_k, …, φ_{k+count−1}}`,
/// solved as a generalized symmetric eigenproblem.
pub fn eigenspace_poincare_sup(gm: &GridMeasure, sd: &SpectralData, k: u32, count: usize) -> Result<f64> {
    let start = k as usize;
    if start + count > sd.len() || count == 0 {
        return Err(Error::InvalidArgument(format!("need eigenvectors {start}..{} but only {} are retained", start + count, sd.len())));
    }
    let phis = &sd.eigenvectors()[start..start + count];
    let residuals: Vec<GridFunction> = phis
        .iter()
        .map(|phi| {
            let m = lq_min_polynomial(gm, phi, k, 2.0)?;
            let poly = m.polynomial().expect("polynomial minimizer");
            phi.sub(&poly.on_grid(gm))
        })
        .collect::<Result<_>>()?;
    let w = gm.weights();
    let dot = |a: &[f64], b: &[f64]| -> f64 { w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum() };
    let a = DMatrix::from_fn(count, count, |i, j| dot(residuals[i].values(), residuals[j].values()));
    let b = if k == 1 {
        let op = assemble_operator(gm);
        let mut b = DMatrix::zeros(count, count);
        for i in 0..count {
            for j in 0..=i {
                let v = op.bilinear(&phis[i], &phis[j])?;
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
        b
    } else {
        let derivs: Vec<Vec<GridFunction>> = phis
            .iter()
            .map(|phi| MultiIndex::of_order(gm.dim(), k).iter().map(|alpha| derivative(gm, phi, alpha)).collect())
            .collect::<Result<_>>()?;
        DMatrix::from_fn(count, count, |i, j| {
            derivs[i].iter().zip(&derivs[j]).map(|(x, y)| dot(x.values(), y.values())).sum()
        })
    };
    let chol = b.cholesky().ok_or(Error::DegenerateBasis)?;
    let l_inv = chol.l().try_inverse().ok_or(Error::DegenerateBasis)?;
    let c = &l_inv * a * l_inv.transpose();
    let c = 0.5 * (&c + c.transpose());
    Ok(SymmetricEigen::new(c).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Checks `μ|f − B_{1,q,1}(f)|^q ≤ Ĉ_{1,q}^k (1 + slack) Σ_{|α|=k} μ|∇^α f|^q` with
/// `Ĉ_{1,q}` this grid's first-order bank constant.
pub fn check_downhill(gm: &GridMeasure, bank: &TestBank, k: u32, q: f64, slack: f64) -> Result<InequalityReport> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("downhill check supports k in 1..=3, got {k}")));
    }
    let first = estimate_poincare(gm, bank, 1, q)?;
    let c1 = first.empirical_constant;
    let (table, skipped) = ratio_table(gm, bank, k, q, |f| {
        let b = downhill_polynomial(gm, f, k, q)?;
        Ok(lp_norm(gm, &f.sub(&b.on_grid(gm))?, q)?.powf(q))
    })?;
    let mut report = InequalityReport::new("downhill", gm, ConstantKind::BankSupremum, table, skipped)
        .param("k", k)
        .param("q", q)
        .param("slack", slack);
    let bound = c1.powi(k as i32) * (1.0 + slack);
    report.extras.insert("c1_hat".into(), c1);
    report.bound = Some(bound);
    let violations: Vec<&str> = report.ratios.iter().filter(|r| !(r.ratio <= bound)).map(|r| r.member.as_str()).collect();
    if !violations.is_empty() {
        report.notes.push(format!("violations: {}", violations.join(", ")));
    }
    report.passed &= violations.is_empty();
    Ok(report)
}
