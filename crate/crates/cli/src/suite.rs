//! The `paper-acceptance` suite: runs every experiment behind the acceptance
//! criteria and aggregates them into one report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use indexlab::tolerances::Tolerances;
use indexlab::trials::{clifford_trials, eigen_trials, k0_trials, TrialSummary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentName};
use crate::error::{CliError, CliResult};
use crate::experiments::{anchor, criterion, run, Context};
use crate::output::{ensure_dir, num, write_bytes, write_outputs, ResultRecord, Table, SCHEMA};

pub const SUITES: [&str; 1] = ["paper-acceptance"];

/// Runtime ceilings in milliseconds.
const SPECTRUM_BUDGET_MS: u64 = 60_000;
const BOTT_INDEX_BUDGET_MS: u64 = 300_000;
const INDEX_THEOREM_BUDGET_MS: u64 = 600_000;

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub out: PathBuf,
    pub jobs: usize,
    pub tol: Tolerances,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            out: PathBuf::from("results"),
            jobs: 1,
            tol: Tolerances::default(),
            seed: 0,
        }
    }
}

/// One experiment of the suite; `id` doubles as its output directory.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub id: String,
    pub config: ExperimentConfig,
}

fn spec(id: &str, experiment: ExperimentName, params: Value) -> RunSpec {
    RunSpec {
        id: id.to_string(),
        config: ExperimentConfig::new(experiment, params),
    }
}

/// Flux pairs for `ℂ ⊕ ℂ`, covering every flux in `−3..=3` in each slot.
pub const PAIR_FLUXES: [(i64, i64); 7] = [(-3, 3), (-2, 1), (-1, 2), (0, -3), (1, -2), (2, 0), (3, -1)];

pub fn paper_acceptance_runs() -> Vec<RunSpec> {
    use ExperimentName as E;
    let mut runs = vec![
        spec("bott-spectrum-t1", E::BottSpectrum, json!({"t": 1.0})),
        spec("bott-spectrum-t4", E::BottSpectrum, json!({"t": 4.0})),
        spec("bott-index-n1", E::BottIndex, json!({"n": 1})),
        spec("bott-index-n2", E::BottIndex, json!({"n": 2})),
        spec("alpha-isometry", E::AlphaIsometry, json!({})),
        spec("b20-homotopy", E::B20Homotopy, json!({})),
        spec("commutator-decay", E::CommutatorDecay, json!({})),
        spec("quantization-convergence", E::QuantizationConvergence, json!({})),
    ];
    for d in -3i64..=3 {
        runs.push(spec(&format!("index-c-{d}"), E::IndexCheck, json!({"algebra": [1], "flux": [d]})));
    }
    for (a, b) in PAIR_FLUXES {
        runs.push(spec(
            &format!("index-cc-{a}-{b}"),
            E::IndexCheck,
            json!({"algebra": [1, 1], "flux": [a, b]}),
        ));
    }
    for d in -3i64..=3 {
        runs.push(spec(&format!("index-m2-{d}"), E::IndexCheck, json!({"algebra": [2], "flux": [d]})));
    }
    runs.extend([
        spec("cayley-index", E::CayleyIndex, json!({"flux": 2})),
        spec("glue-independence", E::GlueIndependence, json!({})),
        spec("lemma45", E::Lemma45, json!({})),
        spec("freeze", E::Freeze, json!({})),
        spec("diffeo-covariance", E::DiffeoCovariance, json!({})),
    ]);
    runs
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub experiment: String,
    pub pass: bool,
    pub paper_anchor: String,
    pub wall_time_ms: u64,
    pub dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub record: Option<ResultRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    /// `"1"`..`"11"`, or the experiment name for supplementary checks.
    pub id: String,
    pub label: String,
    pub anchor: String,
    pub pass: bool,
    pub detail: String,
    pub runs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: String,
    pub pass: bool,
    pub total_wall_time_ms: u64,
    pub criteria: Vec<CriterionResult>,
    pub supplementary: Vec<CriterionResult>,
    pub runs: Vec<RunSummary>,
}

impl SuiteReport {
    pub fn failed(&self) -> Vec<&CriterionResult> {
        self.criteria
            .iter()
            .chain(&self.supplementary)
            .filter(|c| !c.pass)
            .collect()
    }
}

pub fn check_suite_name(name: &str) -> CliResult<()> {
    if SUITES.contains(&name) {
        Ok(())
    } else if name.trim().is_empty() {
        Err(CliError::config("empty suite name"))
    } else {
        Err(CliError::config(format!("unknown suite {name}; expected one of {SUITES:?}")))
    }
}

/// Runs `runs`, then evaluates the criteria. Failures are recorded, not raised;
/// only output errors abort.
pub fn run_suite(name: &str, runs: &[RunSpec], opts: &SuiteOptions) -> CliResult<SuiteReport> {
    check_suite_name(name)?;
    let start = Instant::now();
    ensure_dir(&opts.out)?;
    let ctx = Context::new(opts.tol.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let mut summaries: Vec<RunSummary> = pool.install(|| {
        runs.par_iter()
            .map(|r| execute_one(r, &ctx, &opts.out))
            .collect::<CliResult<Vec<_>>>()
    })?;
    summaries.push(property_suites(&opts.out, &ctx.tol, opts.seed)?);

    let by_id: BTreeMap<&str, &RunSummary> = summaries.iter().map(|s| (s.id.as_str(), s)).collect();
    let criteria = evaluate_criteria(&by_id);
    let supplementary = ["lemma45", "freeze", "diffeo-covariance"]
        .iter()
        .filter_map(|id| by_id.get(id))
        .map(|s| CriterionResult {
            id: s.experiment.clone(),
            label: s.experiment.clone(),
            anchor: s.paper_anchor.clone(),
            pass: s.pass,
            detail: detail(s, &[]),
            runs: vec![s.id.clone()],
        })
        .collect::<Vec<_>>();
    let pass = criteria.iter().chain(&supplementary).all(|c| c.pass)
        && summaries.iter().all(|s| s.pass);
    let report = SuiteReport {
        schema: SCHEMA.to_string(),
        suite: name.to_string(),
        pass,
        total_wall_time_ms: start.elapsed().as_millis() as u64,
        criteria,
        supplementary,
        runs: summaries,
    };
    write_report(&opts.out, &report)?;
    Ok(report)
}

fn execute_one(r: &RunSpec, ctx: &Context, out: &Path) -> CliResult<RunSummary> {
    let dir = out.join(&r.id);
    let start = Instant::now();
    let anchor = anchor(r.config.experiment.as_str());
    match run(&r.config, ctx, &dir) {
        Ok(record) => Ok(RunSummary {
            id: r.id.clone(),
            experiment: record.experiment.clone(),
            pass: record.pass,
            paper_anchor: anchor,
            wall_time_ms: record.wall_time_ms,
            dir,
            error: None,
            record: Some(record),
        }),
        Err(e @ (CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_))) => Err(e),
        Err(e) => Ok(RunSummary {
            id: r.id.clone(),
            experiment: r.config.experiment.to_string(),
            pass: false,
            paper_anchor: anchor,
            wall_time_ms: start.elapsed().as_millis() as u64,
            dir,
            error: Some(e.to_string()),
            record: None,
        }),
    }
}

fn property_suites(out: &Path, tol: &Tolerances, seed: u64) -> CliResult<RunSummary> {
    let start = Instant::now();
    let id = "property-suites";
    let results: Vec<(&str, indexlab::Result<TrialSummary>)> = vec![
        ("clifford", clifford_trials(seed, 100, tol.get("clifford"))),
        ("k0", k0_trials(seed, 100)),
        ("eigen", eigen_trials(seed, 200, 200, tol.get("reconstruction"))),
    ];
    let mut table = Table::new("trials", &["suite", "trials", "failures", "worst"]);
    let mut metrics = BTreeMap::new();
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, r) in results {
        match r {
            Ok(s) => {
                pass &= s.passed();
                metrics.insert(format!("{name}_failures"), s.failures as f64);
                metrics.insert(format!("{name}_worst"), s.worst);
                table.push(vec![name.into(), s.trials.to_string(), s.failures.to_string(), num(s.worst)]);
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    let record = ResultRecord {
        schema: SCHEMA.to_string(),
        experiment: id.to_string(),
        parameters: json!({"seed": seed, "clifford_trials": 100, "k0_trials": 100, "eigen_trials": 200, "eigen_max_dim": 200}),
        seed,
        metrics,
        pass,
        paper_anchor: anchor(id),
        wall_time_ms: start.elapsed().as_millis() as u64,
        notes,
        tables: vec!["trials.csv".into()],
        extra: BTreeMap::new(),
    };
    let dir = out.join(id);
    write_outputs(&dir, &record, &[table])?;
    Ok(RunSummary {
        id: id.to_string(),
        experiment: id.to_string(),
        pass,
        paper_anchor: record.paper_anchor.clone(),
        wall_time_ms: record.wall_time_ms,
        dir,
        error: None,
        record: Some(record),
    })
}

fn metric(s: &RunSummary, key: &str) -> Option<f64> {
    s.record.as_ref().and_then(|r| r.metrics.get(key).copied())
}

fn detail(s: &RunSummary, keys: &[&str]) -> String {
    if let Some(e) = &s.error {
        return format!("{}: error: {e}", s.id);
    }
    let mut out = format!("{}: {}", s.id, if s.pass { "pass" } else { "FAIL" });
    for k in keys {
        if let Some(v) = metric(s, k) {
            let _ = write!(out, ", {k}={v:.4e}");
        }
    }
    let _ = write!(out, ", {:.1} s", s.wall_time_ms as f64 / 1000.0);
    out
}

fn evaluate_criteria(by_id: &BTreeMap<&str, &RunSummary>) -> Vec<CriterionResult> {
    let get = |id: &str| by_id.get(id).copied();
    let flag = |id: &str, key: &str| get(id).and_then(|s| metric(s, key)) == Some(1.0);
    let index_runs: Vec<&RunSummary> = by_id
        .values()
        .copied()
        .filter(|s| s.experiment == ExperimentName::IndexCheck.as_str())
        .collect();

    let make = |id: u32, pass: bool, runs: &[&str], detail: String| {
        let c = criterion(id);
        CriterionResult {
            id: id.to_string(),
            label: c.label,
            anchor: c.anchor,
            pass,
            detail,
            runs: runs.iter().map(|s| s.to_string()).collect(),
        }
    };
    let single = |id: u32, run: &str, keys: &[&str]| {
        let s = get(run);
        make(
            id,
            s.is_some_and(|s| s.pass),
            &[run],
            s.map_or_else(|| format!("{run}: missing"), |s| detail(s, keys)),
        )
    };
    let joined = |ids: &[&str], keys: &[&str]| {
        ids.iter()
            .map(|id| get(id).map_or_else(|| format!("{id}: missing"), |s| detail(s, keys)))
            .collect::<Vec<_>>()
            .join("; ")
    };

    let spectrum = ["bott-spectrum-t1", "bott-spectrum-t4"];
    let c1 = spectrum.iter().all(|id| {
        flag(id, "levels_pass") && get(id).is_some_and(|s| s.wall_time_ms <= SPECTRUM_BUDGET_MS)
    });
    let index = ["bott-index-n1", "bott-index-n2"];
    let index_ms: u64 = index.iter().filter_map(|id| get(id)).map(|s| s.wall_time_ms).sum();
    let c2 = index.iter().all(|id| get(id).is_some_and(|s| s.pass)) && index_ms <= BOTT_INDEX_BUDGET_MS;
    let c3 = flag("bott-spectrum-t1", "kernel_pass");

    let theorem_ms: u64 = index_runs.iter().map(|s| s.wall_time_ms).sum();
    let c8 = index_runs.len() == 21 && index_runs.iter().all(|s| s.pass) && theorem_ms <= INDEX_THEOREM_BUDGET_MS;
    let c9 = index_runs.len() == 21
        && index_runs.iter().all(|s| metric(s, "morphism_eq_analytic") == Some(1.0))
        && get("cayley-index").is_some_and(|s| s.pass);
    let failed_index: Vec<&str> = index_runs.iter().filter(|s| !s.pass).map(|s| s.id.as_str()).collect();
    let index_ids: Vec<&str> = index_runs.iter().map(|s| s.id.as_str()).collect();
    let mut c9_ids = index_ids.clone();
    c9_ids.push("cayley-index");

    vec![
        make(1, c1, &spectrum, joined(&spectrum, &["max_abs_err"])),
        make(2, c2, &index, joined(&index, &["index"])),
        make(
            3,
            c3,
            &["bott-spectrum-t1"],
            joined(&["bott-spectrum-t1"], &["kernel_resolved", "zero_form_weight", "gamma_fitted"]),
        ),
        single(4, "alpha-isometry", &["max_abs_err"]),
        single(5, "b20-homotopy", &["max_norm_s_le_1", "wide_norm"]),
        single(6, "commutator-decay", &["slope", "bound_rows_hold"]),
        single(7, "quantization-convergence", &["last", "control_max"]),
        make(
            8,
            c8,
            &index_ids,
            format!(
                "{} operators, {} failed {:?}, {:.1} s",
                index_runs.len(),
                failed_index.len(),
                failed_index,
                theorem_ms as f64 / 1000.0
            ),
        ),
        make(
            9,
            c9,
            &c9_ids,
            format!(
                "morphism = analytic on {} operators; {}",
                index_runs.iter().filter(|s| metric(s, "morphism_eq_analytic") == Some(1.0)).count(),
                joined(&["cayley-index"], &["unitarity_defect", "involution_defect"])
            ),
        ),
        single(10, "glue-independence", &["last", "module_property_defect"]),
        single(11, "property-suites", &["clifford_worst", "k0_failures", "eigen_worst"]),
    ]
}

fn write_report(out: &Path, report: &SuiteReport) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_bytes(&out.join("report.json"), text.as_bytes())?;
    write_bytes(&out.join("report.md"), render_markdown(report).as_bytes())
}

pub fn render_markdown(report: &SuiteReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} report\n", report.suite);
    let _ = writeln!(
        s,
        "Overall: **{}**. Total runtime {:.1} s.\n",
        if report.pass { "PASS" } else { "FAIL" },
        report.total_wall_time_ms as f64 / 1000.0
    );
    let _ = writeln!(s, "| # | Criterion | Anchor | Result | Detail |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for c in report.criteria.iter().chain(&report.supplementary) {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            c.id,
            c.label,
            c.anchor,
            if c.pass { "pass" } else { "FAIL" },
            c.detail.replace('|', "\\|")
        );
    }
    let failed = report.failed();
    if !failed.is_empty() {
        let _ = writeln!(s, "\nFailed anchors:\n");
        for c in failed {
            let _ = writeln!(s, "- {} ({})", c.anchor, c.label);
        }
    }
    s
}

pub fn summary_line(c: &CriterionResult) -> String {
    format!(
        "[{}] {:>2} {} ({}): {}",
        if c.pass { "PASS" } else { "FAIL" },
        c.id,
        c.label,
        c.anchor,
        c.detail
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert!(check_suite_name("paper-acceptance").is_ok());
        assert!(matches!(check_suite_name(""), Err(CliError::Config(_))));
        assert!(matches!(check_suite_name("other"), Err(CliError::Config(_))));
    }

    #[test]
    fn run_list_covers_every_experiment_and_flux() {
        let runs = paper_acceptance_runs();
        for name in ExperimentName::ALL {
            assert!(runs.iter().any(|r| r.config.experiment == name), "{name}");
        }
        let mut firsts: Vec<i64> = PAIR_FLUXES.iter().map(|p| p.0).collect();
        let mut seconds: Vec<i64> = PAIR_FLUXES.iter().map(|p| p.1).collect();
        firsts.sort();
        seconds.sort();
        assert_eq!(firsts, (-3..=3).collect::<Vec<_>>());
        assert_eq!(seconds, (-3..=3).collect::<Vec<_>>());
        let ids: std::collections::BTreeSet<_> = runs.iter().map(|r| &r.id).collect();
        assert_eq!(ids.len(), runs.len());
    }

    #[test]
    fn failures_are_recorded_and_reported() {
        let dir = tempfile::tempdir().unwrap();
        let runs = vec![
            spec("alpha-isometry", ExperimentName::AlphaIsometry, json!({})),
            spec("broken", ExperimentName::AlphaIsometry, json!({"points": 1})),
        ];
        let opts = SuiteOptions {
            out: dir.path().to_path_buf(),
            ..SuiteOptions::default()
        };
        let report = run_suite("paper-acceptance", &runs, &opts).unwrap();
        assert!(!report.pass);
        let broken = report.runs.iter().find(|r| r.id == "broken").unwrap();
        assert!(broken.error.is_some());
        let c4 = report.criteria.iter().find(|c| c.id == "4").unwrap();
        assert!(c4.pass);
        assert!(report.criteria.iter().find(|c| c.id == "11").unwrap().pass);
        let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
        assert!(md.contains("Failed anchors"));
        assert!(dir.path().join("alpha-isometry/record.json").exists());
    }
}
