//! Experiment configs, execution and report files.
//!
//! A run writes `report.json`, one CSV per table and `manifest.json` into the
//! configured output directory. Report bodies are deterministic; wall-times
//! only appear in the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dirichlet::{add_eigen_members, assemble_operator, default_n_eigs, spectral_decomposition, spectral_gap};
use crate::discretize::{make_test_bank, origin_bump, GridMeasure, TestBank};
use crate::evolve::{check_decay_envelope, decay_curve, fit_decay_rate};
use crate::orlicz::{verify_log_lemmas, OrliczSpec};
use crate::potential::{check_arc, check_assumption_am, check_gradient_growth, BoundedPerturbation, PotentialSpec};
use crate::verify::{self, InequalityReport, WeightMode, REPORT_SCHEMA};
use crate::{Error, Result};

pub const MANIFEST_SCHEMA: &str = "coerce-lab/manifest-v1";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Width of the origin probe added to the condition (C) bank.
pub const PROBE_WIDTH: f64 = 0.28;

fn default_slack() -> f64 {
    verify::DEFAULT_SLACK
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_seed() -> u64 {
    7
}
fn default_bank_size() -> usize {
    4
}
fn default_epsilon() -> f64 {
    0.5
}
fn default_am_order() -> u32 {
    4
}
fn default_rungs() -> usize {
    6
}
fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.5, 1.0]
}
fn default_t_max() -> f64 {
    4.0
}
fn default_samples() -> usize {
    41
}
fn default_member() -> String {
    "mono:x^1".into()
}
fn default_x_points() -> usize {
    4000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub radius: f64,
    pub nodes: usize,
    /// Rerun on `N → 2N+1` and record the relative change of every constant.
    #[serde(default)]
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_bank_size")]
    pub size: usize,
}

impl Default for BankConfig {
    fn default() -> Self {
        BankConfig { seed: default_seed(), size: default_bank_size() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Regularity {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_am_order")]
        m: u32,
        #[serde(default = "default_rungs")]
        rungs: usize,
    },
    Poincare { k: u32, q: f64 },
    Downhill { k: u32, q: f64 },
    Weighted { m: u32, p: f64, mode: WeightMode },
    RevisedAdams {
        k: u32,
        p: f64,
        #[serde(default = "default_epsilons")]
        epsilons: Vec<f64>,
    },
    OrliczChain { phi: OrliczSpec, p: f64, k: u32 },
    Perturbation { phi: OrliczSpec, k: u32, q: f64, perturbation: BoundedPerturbation },
    Equivalence { k: u32, p: f64 },
    ConditionC { k: u32 },
    Decay {
        k: u32,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        /// Bank member whose curve gets a fitted rate.
        #[serde(default = "default_member")]
        member: String,
    },
    Lemmas {
        p: f64,
        j_max: usize,
        #[serde(default = "default_x_points")]
        x_points: usize,
    },
    Minimize { phi: OrliczSpec },
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::Regularity { .. } => "regularity",
            Experiment::Poincare { .. } => "poincare",
            Experiment::Downhill { .. } => "downhill",
            Experiment::Weighted { .. } => "weighted",
            Experiment::RevisedAdams { .. } => "revised-adams",
            Experiment::OrliczChain { .. } => "orlicz-chain",
            Experiment::Perturbation { .. } => "perturbation",
            Experiment::Equivalence { .. } => "equivalence",
            Experiment::ConditionC { .. } => "condition-c",
            Experiment::Decay { .. } => "decay",
            Experiment::Lemmas { .. } => "lemmas",
            Experiment::Minimize { .. } => "minimize",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub grid: GridConfig,
    #[serde(default)]
    pub bank: BankConfig,
    pub experiment: Experiment,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Relative slack for checks that compare two measured constants.
    #[serde(default = "default_slack")]
    pub slack: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::ConfigInvalid(msg) => Error::ConfigInvalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            return Err(Error::ConfigInvalid(format!("slack {} must be finite and >= 0", self.slack)));
        }
        if let Experiment::Perturbation { .. } = self.experiment {
            if self.potential.perturbation.is_some() {
                return Err(Error::ConfigInvalid("perturbation experiment needs an unperturbed base potential".into()));
            }
        }
        if let Experiment::Decay { samples, t_max, .. } = self.experiment {
            if samples < 10 || !(t_max > 0.0) {
                return Err(Error::ConfigInvalid("decay needs t_max > 0 and at least 10 samples".into()));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the resolved config, defaults filled in.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Everything an experiment produced, before it touches the file system.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub inequalities: Vec<InequalityReport>,
    pub details: BTreeMap<String, Value>,
    #[serde(skip)]
    pub tables: Vec<(String, String)>,
}

impl RunReport {
    fn new(config: &ExperimentConfig) -> Self {
        RunReport {
            schema: REPORT_SCHEMA.into(),
            experiment: config.experiment.id().into(),
            config: config.clone(),
            passed: true,
            inequalities: Vec::new(),
            details: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    fn push(&mut self, report: InequalityReport) {
        self.passed &= report.passed;
        self.tables.push((format!("{:02}_{}.csv", self.inequalities.len(), report.inequality), report.to_csv()));
        self.inequalities.push(report);
    }

    fn detail(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.details.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn bank_for(config: &ExperimentConfig, gm: &GridMeasure) -> TestBank {
    make_test_bank(gm, config.bank.seed, config.bank.size)
}

fn time_ladder(t_max: f64, samples: usize) -> Vec<f64> {
    (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect()
}

/// Runs the experiment on one grid and collects the reports in memory.
fn execute_on(config: &ExperimentConfig, gm: &GridMeasure) -> Result<RunReport> {
    let mut out = RunReport::new(config);
    let slack = config.slack;
    match &config.experiment {
        Experiment::Regularity { epsilon, m, rungs } => {
            let arc = check_arc(&config.potential, gm, *epsilon)?;
            let am = check_assumption_am(&config.potential, gm, *m, *epsilon)?;
            let growth = check_gradient_growth(&config.potential, gm, *rungs)?;
            out.passed = arc.satisfied && am.satisfied;
            out.detail("arc", &arc)?;
            out.detail("assumption_am", &am)?;
            out.detail("gradient_growth", &growth)?;
        }
        Experiment::Poincare { k, q } => out.push(verify::estimate_poincare(gm, &bank_for(config, gm), *k, *q)?),
        Experiment::Downhill { k, q } => out.push(verify::check_downhill(gm, &bank_for(config, gm), *k, *q, slack)?),
        Experiment::Weighted { m, p, mode } => {
            out.push(verify::check_weighted_bound(gm, &bank_for(config, gm), *m, *p, *mode)?)
        }
        Experiment::RevisedAdams { k, p, epsilons } => {
            out.push(verify::check_revised_adams(gm, &bank_for(config, gm), *k, *p, epsilons)?)
        }
        Experiment::OrliczChain { phi, p, k } => {
            out.push(verify::check_adams_orlicz_chain(gm, &bank_for(config, gm), phi, *p, *k, slack)?)
        }
        Experiment::Perturbation { phi, k, q, perturbation } => {
            let nu = config.potential.clone().with_perturbation(perturbation.clone());
            let gm_nu = GridMeasure::build(&nu, gm.radius(), gm.nodes_per_axis())?;
            out.push(verify::check_measure_perturbation(gm, &gm_nu, &bank_for(config, gm), phi, *k, *q, slack)?);
        }
        Experiment::Equivalence { k, p } => {
            let sd = spectral_decomposition(&assemble_operator(gm), default_n_eigs(gm))?;
            let mut bank = bank_for(config, gm);
            add_eigen_members(&mut bank, gm, &sd, config.bank.size);
            out.push(verify::norm_equivalence_sweep(gm, &sd, &bank, *k, *p)?);
        }
        Experiment::ConditionC { k } => {
            // a narrow probe at the origin sees where the Hessian is least convex
            let mut bank = bank_for(config, gm);
            bank.push(gm, "probe:origin", origin_bump(gm, PROBE_WIDTH));
            out.push(verify::check_condition_c(gm, &bank, *k)?);
        }
        Experiment::Decay { k, t_max, samples, member } => {
            let sd = spectral_decomposition(&assemble_operator(gm), default_n_eigs(gm))?;
            let bank = bank_for(config, gm);
            let times = time_ladder(*t_max, *samples);
            let f0 = bank
                .get(member)
                .ok_or_else(|| Error::ConfigInvalid(format!("bank has no member named {member}")))?;
            let mut curve = decay_curve(gm, &sd, f0, *k, &times)?;
            let window = curve.default_window();
            let rate = fit_decay_rate(&mut curve, window)?;
            let gap = spectral_gap(&sd)?;
            out.tables.push(("decay_curve.csv".into(), curve.to_csv()));
            out.detail("curve", &curve)?;
            out.detail("gap", gap)?;
            out.detail("rate_over_twice_gap", rate / (2.0 * gap))?;
            out.push(check_decay_envelope(gm, &sd, &bank, *k, &times)?);
        }
        Experiment::Lemmas { p, j_max, x_points } => {
            let reports = lemma_reports(*p, *j_max, *x_points);
            out.passed = reports.iter().all(|r| r.passed);
            out.tables.push(("lemmas.csv".into(), lemma_csv(&reports)));
            out.detail("lemmas", &reports)?;
        }
        Experiment::Minimize { phi } => {
            let bank = bank_for(config, gm);
            out.push(verify::check_luxemburg(gm, &bank, phi)?);
            out.push(verify::check_minimizer_properties(gm, &bank, phi)?);
        }
    }
    Ok(out)
}

fn lemma_reports(p: f64, j_max: usize, x_points: usize) -> Vec<crate::orlicz::LogLemmaReport> {
    verify_log_lemmas(p, j_max, &crate::orlicz::default_x_grid(p, x_points))
}

fn lemma_csv(reports: &[crate::orlicz::LogLemmaReport]) -> String {
    let mut csv = String::from("lemma,j,p,empirical_constant,paper_constant,worst_point,passed\n");
    for r in reports {
        let paper = r.paper_constant.map(|c| format!("{c:.17e}")).unwrap_or_default();
        csv.push_str(&format!(
            "{:?},{},{},{:.17e},{paper},{:.17e},{}\n",
            r.lemma, r.j, r.p, r.empirical_constant, r.worst_point, r.passed
        ));
    }
    csv
}

/// Runs the experiment, and again on the refined grid when asked, without writing files.
pub fn execute(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let wrap = |e: Error| Error::Experiment { experiment: config.experiment.id().into(), source: Box::new(e) };
    if let Experiment::Lemmas { .. } = config.experiment {
        // grid-free; the grid config is carried along but not built
        let gm = GridMeasure::build(&PotentialSpec::gaussian(0.5, 1), 8.0, 33).map_err(wrap)?;
        return execute_on(config, &gm).map_err(wrap);
    }
    let gm = GridMeasure::build(&config.potential, config.grid.radius, config.grid.nodes).map_err(wrap)?;
    let mut report = execute_on(config, &gm).map_err(wrap)?;
    if config.grid.refine {
        let fine = execute_on(config, &gm.refined().map_err(wrap)?).map_err(wrap)?;
        for (coarse, fine) in report.inequalities.iter_mut().zip(&fine.inequalities) {
            coarse.set_refinement(fine);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunEntry {
    pub label: String,
    pub experiment: String,
    pub config_hash: String,
    pub report: Option<PathBuf>,
    pub tables: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub passed: bool,
    pub exit_code: i32,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub artifact_version: String,
    pub runs: Vec<RunEntry>,
    pub passed: bool,
}

impl RunManifest {
    fn from_runs(runs: Vec<RunEntry>) -> Self {
        let passed = runs.iter().all(|r| r.passed);
        RunManifest { schema: MANIFEST_SCHEMA.into(), artifact_version: ARTIFACT_VERSION.into(), runs, passed }
    }

    /// `0` when every run passed, `2` if any run hit a config or environment
    /// error, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        self.runs.iter().map(|r| r.exit_code).max().unwrap_or(0)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

/// Executes one config and writes its report and tables under `dir`.
fn run_into(label: &str, config: &ExperimentConfig, dir: &Path) -> RunEntry {
    let start = Instant::now();
    let mut entry = RunEntry {
        label: label.into(),
        experiment: config.experiment.id().into(),
        config_hash: config.hash(),
        report: None,
        tables: Vec::new(),
        wall_time_s: 0.0,
        passed: false,
        exit_code: 2,
        error: None,
    };
    let outcome = execute(config).and_then(|report| {
        fs::create_dir_all(dir)?;
        let path = dir.join("report.json");
        fs::write(&path, report.to_json())?;
        let mut tables = Vec::new();
        for (name, csv) in &report.tables {
            let table = dir.join(name);
            fs::write(&table, csv)?;
            tables.push(table);
        }
        Ok((report.passed, path, tables))
    });
    match outcome {
        Ok((passed, path, tables)) => {
            entry.passed = passed;
            entry.exit_code = if passed { 0 } else { 1 };
            entry.report = Some(path);
            entry.tables = tables;
        }
        Err(e) => {
            entry.exit_code = e.exit_code();
            entry.error = Some(e.to_string());
        }
    }
    entry.wall_time_s = start.elapsed().as_secs_f64();
    entry
}

/// Runs one experiment into `config.output` and writes the manifest next to the report.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let entry = run_into(config.experiment.id(), config, &config.output);
    let manifest = RunManifest::from_runs(vec![entry]);
    manifest.write(&config.output)?;
    Ok(manifest)
}

/// Runs labelled configs that share one output directory; each lands in its own
/// `<output>/<label>/` and a single manifest aggregates them in input order.
/// A failing config is recorded and the rest still run.
pub fn sweep(configs: &[(String, ExperimentConfig)]) -> Result<RunManifest> {
    let Some((_, first)) = configs.first() else {
        return Err(Error::ConfigInvalid("sweep needs at least one config".into()));
    };
    let root = first.output.clone();
    if configs.iter().any(|(_, c)| c.output != root) {
        return Err(Error::ConfigInvalid("sweep configs must share an output directory".into()));
    }
    let mut labels: Vec<&str> = configs.iter().map(|(l, _)| l.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::ConfigInvalid("sweep labels must be unique".into()));
    }
    let runs = crate::par::map(configs, |(label, config)| run_into(label, config, &root.join(label)));
    let manifest = RunManifest::from_runs(runs);
    manifest.write(&root)?;
    Ok(manifest)
}

/// Loads every `*.json` config in `dir` (except a manifest), labelled by file stem, sorted by name.
pub fn load_sweep_dir(dir: &Path) -> Result<Vec<(String, ExperimentConfig)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != "manifest.json"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let label = p.file_stem().and_then(|s| s.to_str()).unwrap_or("config").to_string();
            Ok((label, ExperimentConfig::load(p)?))
        })
        .collect()
}

/// Summary line per run for terminal output.
pub fn summarize(manifest: &RunManifest) -> Vec<String> {
    manifest
        .runs
        .iter()
        .map(|r| {
            let status = match (r.passed, &r.error) {
                (true, _) => "PASS".to_string(),
                (false, Some(e)) => format!("ERROR {e}"),
                (false, None) => "FAIL".to_string(),
            };
            format!("{:<20} {:<14} {:>8.2}s  {status}", r.label, r.experiment, r.wall_time_s)
        })
        .collect()
}

/// Report body for the CLI `lemmas` shortcut, which needs no grid.
pub fn lemmas_only(p: f64, j_max: usize) -> Value {
    let reports = lemma_reports(p, j_max, default_x_points());
    json!({ "passed": reports.iter().all(|r| r.passed), "lemmas": reports })
}
