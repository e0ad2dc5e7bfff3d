//! Runs the acceptance suite and prints one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use indexlab::tolerances::Tolerances;
use indexlab_cli::suite::{paper_acceptance_runs, run_suite, summary_line, SuiteOptions};

/// Thresholds the criteria are stated with.
const PINNED: &[(&str, f64)] = &[
    ("bott_eigenvalue", 1e-6),
    ("kernel_zero_form", 1e-8),
    ("alpha_isometry", 1e-8),
    ("homotopy_limit", 1e-8),
    ("homotopy_nontrivial", 0.5),
    ("slope_min", -1.15),
    ("slope_max", -0.85),
    ("inequality_slack", 1e-8),
    ("defect", 0.05),
    ("constant_coefficient", 1e-8),
    ("module_property", 1e-12),
    ("clifford", 1e-12),
    ("reconstruction", 1e-10),
    ("t_max", 64.0),
];

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut pinned_ok = true;
    for &(key, value) in PINNED {
        if tol.get(key) != value {
            println!("[FAIL] tolerance {key} = {} (expected {value})", tol.get(key));
            pinned_ok = false;
        }
    }
    println!(
        "[{}] {} pinned tolerances",
        if pinned_ok { "PASS" } else { "FAIL" },
        PINNED.len()
    );

    let out = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let opts = SuiteOptions {
        out: out.clone(),
        tol,
        ..SuiteOptions::default()
    };
    let report = match run_suite("paper-acceptance", &paper_acceptance_runs(), &opts) {
        Ok(r) => r,
        Err(e) => {
            println!("[FAIL] suite aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in report.criteria.iter().chain(&report.supplementary) {
        println!("{}", summary_line(c));
    }
    for r in report.runs.iter().filter(|r| r.error.is_some()) {
        println!("       run {} errored: {}", r.id, r.error.as_deref().unwrap_or(""));
    }
    let pass = pinned_ok && report.pass;
    println!(
        "acceptance: {} ({} criteria, {:.1} s, report in {})",
        if pass { "PASS" } else { "FAIL" },
        report.criteria.len(),
        start.elapsed().as_secs_f64(),
        out.join("report.md").display()
    );
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
