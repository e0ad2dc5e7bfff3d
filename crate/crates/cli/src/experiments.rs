//! The named experiments. Each parses typed parameters, computes, and
//! returns metrics, tables and a pass flag.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use indexlab::bott::{
    bott_index, build_bott, bump, default_gap_tol, homotopy_b20, kernel_report, positive_levels,
    alpha_isometry, OscillatorConfig,
};
use indexlab::cstar::{AMatrix, Algebra};
use indexlab::elliptic::{
    block_indices, freeze_compare, lemma45_decay, quantization_convergence, torus_indices,
    twisted_dirac_block, FirstOrderOp, FluxCache, ScalarFn, TorusIndexSettings,
};
use indexlab::grid::Grid;
use indexlab::linalg::ComplexMatrix;
use indexlab::quantize::{
    commutator_decay, diffeo_covariance, gluing_independence, module_property_defect,
    resolvent_bound_check, wrap_angle, Cover, Diffeo, PhaseFunction,
};
use indexlab::tolerances::Tolerances;
use indexlab::C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{parse_parameters, ExperimentConfig, ExperimentName};
use crate::error::{CliError, CliResult};
use crate::operator_spec::OperatorSpec;
use crate::output::{num, write_outputs, ResultRecord, Table, SCHEMA};

/// Shared state for one run or one suite.
#[derive(Debug)]
pub struct Context {
    pub tol: Tolerances,
    pub cache: Mutex<FluxCache>,
}

impl Context {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            cache: Mutex::new(FluxCache::new()),
        }
    }
}

impl Default for Context {
    fn default() -> Self {
        Self::new(Tolerances::default())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub parameters: Value,
    pub metrics: BTreeMap<String, f64>,
    pub extra: BTreeMap<String, Value>,
    pub pass: bool,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl Outcome {
    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn flag(&mut self, key: &str, v: bool) {
        self.metric(key, if v { 1.0 } else { 0.0 });
    }
}

#[derive(Debug, Deserialize)]
struct AnchorFile {
    experiments: BTreeMap<String, String>,
    criteria: BTreeMap<String, CriterionAnchor>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CriterionAnchor {
    pub label: String,
    pub anchor: String,
}

fn anchors() -> &'static AnchorFile {
    static ANCHORS: OnceLock<AnchorFile> = OnceLock::new();
    ANCHORS.get_or_init(|| {
        serde_json::from_str(include_str!("../data/anchors.json")).expect("anchor table is valid JSON")
    })
}

/// The anchor of a named record; `"plumbing"` when none is registered.
pub fn anchor(name: &str) -> String {
    anchors()
        .experiments
        .get(name)
        .cloned()
        .unwrap_or_else(|| "plumbing".to_string())
}

pub fn criterion(id: u32) -> CriterionAnchor {
    anchors().criteria[&id.to_string()].clone()
}

fn exp_err(name: ExperimentName) -> impl Fn(indexlab::Error) -> CliError {
    move |source| CliError::Experiment {
        experiment: name.to_string(),
        source,
    }
}

fn cfg_err(e: indexlab::Error) -> CliError {
    CliError::config(e.to_string())
}

fn resolvent() -> ScalarFn {
    Arc::new(|x: f64| C64::new(1.0 / (1.0 + x * x), 0.0))
}

fn resolvent_xi(xi: &[f64]) -> C64 {
    C64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0)
}

/// `exp(−1/(1 − u²))` with `u = (x − c)/w` measured around the circle.
fn circle_bump(center: f64, width: f64) -> impl Fn(&[f64]) -> C64 + Send + Sync + Clone {
    move |x: &[f64]| {
        let u = wrap_angle(x[0] - center) / width;
        if u.abs() >= 1.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new((-1.0 / (1.0 - u * u)).exp(), 0.0)
        }
    }
}

fn scalar_field(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<AMatrix> {
    (0..grid.size())
        .map(|p| {
            let v = f(grid.point(p)[0]);
            AMatrix::new(
                Algebra::scalars(),
                1,
                vec![ComplexMatrix::from_diagonal(&[C64::new(v, 0.0)])],
            )
            .expect("scalar coefficient")
        })
        .collect()
}

/// `start, 2·start, …` up to and including `t_max`.
pub fn dyadic_ladder(start: f64, t_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = start;
    while t <= t_max * (1.0 + 1e-12) {
        out.push(t);
        t *= 2.0;
    }
    out
}

fn check_positive(name: ExperimentName, key: &str, values: &[f64]) -> CliResult<()> {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(CliError::config(format!("{name}: {key} must be a non-empty list of positive numbers")));
    }
    Ok(())
}

fn decay_table(name: &str, t: &[f64], values: &[f64]) -> Table {
    let mut table = Table::new(name, &["t", "norm"]);
    for (a, b) in t.iter().zip(values) {
        table.push(vec![num(*a), num(*b)]);
    }
    table
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Runs one experiment without touching the filesystem; block indices are
/// cached in `ctx`.
pub fn execute(cfg: &ExperimentConfig, ctx: &Context) -> CliResult<Outcome> {
    let local = Context {
        tol: cfg.resolve_tolerances(&ctx.tol)?,
        cache: Mutex::new(FluxCache::new()),
    };
    execute_with(cfg, &local, &ctx.cache)
}

fn execute_with(cfg: &ExperimentConfig, ctx: &Context, cache: &Mutex<FluxCache>) -> CliResult<Outcome> {
    let name = cfg.experiment;
    let p = &cfg.parameters;
    match name {
        ExperimentName::BottSpectrum => run_typed(name, p, |q| bott_spectrum(q, ctx)),
        ExperimentName::BottIndex => run_typed(name, p, bott_index_exp),
        ExperimentName::B20Homotopy => run_typed(name, p, |q| b20(q, ctx)),
        ExperimentName::AlphaIsometry => run_typed(name, p, |q| alpha(q, ctx)),
        ExperimentName::CommutatorDecay => run_typed(name, p, |q| commutator(q, ctx)),
        ExperimentName::DiffeoCovariance => run_typed(name, p, |q| diffeo(q, ctx)),
        ExperimentName::GlueIndependence => run_typed(name, p, |q| glue(q, ctx)),
        ExperimentName::Lemma45 => run_typed(name, p, |q| lemma45(q, ctx)),
        ExperimentName::Freeze => run_typed(name, p, |q| freeze(q, ctx)),
        ExperimentName::QuantizationConvergence => run_typed(name, p, |q| quantization(q, ctx)),
        ExperimentName::IndexCheck => run_typed(name, p, |q| index_check(q, cache)),
        ExperimentName::CayleyIndex => run_typed(name, p, |q| cayley(q, ctx)),
    }
}

fn run_typed<P>(
    name: ExperimentName,
    params: &serde_json::Map<String, Value>,
    f: impl FnOnce(P) -> CliResult<Outcome>,
) -> CliResult<Outcome>
where
    P: serde::de::DeserializeOwned + Serialize,
{
    let (typed, echo) = parse_parameters::<P>(name, params)?;
    let mut out = f(typed)?;
    if out.parameters.is_null() {
        out.parameters = echo;
    }
    Ok(out)
}

/// Runs `cfg`, writes its outputs under `dir`, and returns the record.
pub fn run(cfg: &ExperimentConfig, ctx: &Context, dir: &Path) -> CliResult<ResultRecord> {
    let start = Instant::now();
    let out = execute(cfg, ctx)?;
    let record = ResultRecord {
        schema: SCHEMA.to_string(),
        experiment: cfg.experiment.to_string(),
        parameters: out.parameters,
        seed: cfg.seed,
        metrics: out.metrics,
        pass: out.pass,
        paper_anchor: anchor(cfg.experiment.as_str()),
        wall_time_ms: start.elapsed().as_millis() as u64,
        notes: out.notes,
        tables: out.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        extra: out.extra,
    };
    write_outputs(dir, &record, &out.tables)?;
    Ok(record)
}

/// `cfg.output`, or `results/<experiment>` in the working directory.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.as_str()))
}

// ---------------------------------------------------------------- oscillator

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BottSpectrumParams {
    pub n: usize,
    pub t: f64,
    #[serde(rename = "N")]
    pub npts: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub count: usize,
}

impl Default for BottSpectrumParams {
    fn default() -> Self {
        Self {
            n: 1,
            t: 1.0,
            npts: 1024,
            half_width: 10.0,
            count: 10,
        }
    }
}

fn bott_spectrum(p: BottSpectrumParams, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::BottSpectrum;
    if p.n != 1 {
        return Err(CliError::config("bott-spectrum checks the level law for n = 1"));
    }
    let cfg = OscillatorConfig::new(p.n, p.t, p.npts, p.half_width).map_err(cfg_err)?;
    let op = build_bott(&cfg).map_err(exp_err(NAME))?;
    let levels = positive_levels(&op, p.count).map_err(exp_err(NAME))?;
    let kernel = kernel_report(&op).map_err(exp_err(NAME))?;

    let mut out = Outcome::default();
    let mut table = Table::new("levels", &["t", "k", "lambda_measured", "lambda_exact", "abs_err"]);
    for r in &levels {
        table.push(vec![num(p.t), r.k.to_string(), num(r.measured), num(r.exact), num(r.abs_err)]);
    }
    let worst = levels.iter().map(|r| r.abs_err).fold(0.0, f64::max);
    out.metric("max_abs_err", worst);
    out.metric("levels_checked", levels.len() as f64);
    out.metric("kernel_raw_in_window", kernel.raw_in_window as f64);
    out.metric("kernel_resolved", kernel.resolved as f64);
    out.metric("kernel_artifacts", kernel.artifacts as f64);
    out.metric("zero_form_weight", kernel.zero_form_weight);
    out.metric("gamma_fitted", kernel.gamma);
    out.metric("gamma_half_t", p.t / 2.0);
    out.metric("gamma_t", p.t);
    out.metric("gaussian_residual", kernel.gaussian_residual);
    let levels_ok = levels.len() == p.count && worst <= ctx.tol.get("bott_eigenvalue");
    let kernel_ok =
        kernel.resolved == 1 && kernel.zero_form_weight >= 1.0 - ctx.tol.get("kernel_zero_form");
    out.flag("levels_pass", levels_ok);
    out.flag("kernel_pass", kernel_ok);
    out.pass = levels_ok && kernel_ok;
    out.notes.push(format!(
        "{} near-zero modes in the window, {} resolved; the rest live at the periodization seam",
        kernel.raw_in_window, kernel.resolved
    ));
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BottIndexParams {
    pub n: usize,
    pub t: f64,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub npts: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub reversed: bool,
}

impl Default for BottIndexParams {
    fn default() -> Self {
        Self {
            n: 1,
            t: 1.0,
            npts: None,
            half_width: None,
            reversed: false,
        }
    }
}

fn bott_index_exp(mut p: BottIndexParams) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::BottIndex;
    let (n_def, l_def) = if p.n == 2 { (32, 6.0) } else { (1024, 10.0) };
    p.npts.get_or_insert(n_def);
    p.half_width.get_or_insert(l_def);
    let mut cfg = OscillatorConfig::new(p.n, p.t, p.npts.unwrap_or(n_def), p.half_width.unwrap_or(l_def))
        .map_err(cfg_err)?;
    if p.reversed {
        cfg = cfg.reversed();
    }
    let op = build_bott(&cfg).map_err(exp_err(NAME))?;
    let gap_tol = default_gap_tol(&cfg);
    let (index, report) = bott_index(&op, gap_tol).map_err(exp_err(NAME))?;
    let expected = if p.reversed { -1 } else { 1 };
    let mut out = Outcome {
        parameters: serde_json::to_value(&p)?,
        ..Outcome::default()
    };
    out.metric("index", index as f64);
    out.metric("expected", expected as f64);
    out.metric("raw_near_zero", report.raw_near_zero() as f64);
    out.metric("next_singular_value", report.next_singular_value);
    out.metric("gap_tol", gap_tol);
    out.pass = index == expected;
    let mut table = Table::new("near_zero", &["sector", "singular_value"]);
    for v in &report.near_zero_even {
        table.push(vec!["even".into(), num(*v)]);
    }
    for v in &report.near_zero_odd {
        table.push(vec!["odd".into(), num(*v)]);
    }
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct B20Params {
    pub t: f64,
    #[serde(rename = "N")]
    pub npts: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub a: f64,
    pub s: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub a_wide: f64,
}

impl Default for B20Params {
    fn default() -> Self {
        Self {
            t: 1.0,
            npts: 128,
            half_width: 10.0,
            a: 1.0,
            s: vec![1.0, 0.5, 0.25, 0.1],
            x_min: -2.0,
            x_max: 2.0,
            x_points: 41,
            a_wide: 10.0,
        }
    }
}

fn b20(p: B20Params, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::B20Homotopy;
    check_positive(NAME, "s", &p.s)?;
    if p.x_points < 2 || !(p.x_max > p.x_min) {
        return Err(CliError::config("b20-homotopy needs x_points ≥ 2 and x_max > x_min"));
    }
    let cfg = OscillatorConfig::new(1, p.t, p.npts, p.half_width).map_err(cfg_err)?;
    let op = build_bott(&cfg).map_err(exp_err(NAME))?;
    let xs: Vec<f64> = (0..p.x_points)
        .map(|j| p.x_min + (p.x_max - p.x_min) * j as f64 / (p.x_points - 1) as f64)
        .collect();
    let narrow = homotopy_b20(&op, &bump(p.a), p.a, &xs, &p.s).map_err(exp_err(NAME))?;
    let wide = homotopy_b20(&op, &bump(p.a_wide), p.a_wide, &xs, &[1.0]).map_err(exp_err(NAME))?[0];
    let mut out = Outcome::default();
    let mut table = Table::new("homotopy", &["a", "s", "norm"]);
    for (s, v) in p.s.iter().zip(&narrow) {
        table.push(vec![num(p.a), num(*s), num(*v)]);
    }
    table.push(vec![num(p.a_wide), num(1.0), num(wide)]);
    let limit = narrow
        .iter()
        .zip(&p.s)
        .filter(|(_, &s)| s <= 1.0)
        .map(|(v, _)| *v)
        .fold(0.0, f64::max);
    out.metric("max_norm_s_le_1", limit);
    out.metric("wide_norm", wide);
    let limit_ok = limit <= ctx.tol.get("homotopy_limit");
    let wide_ok = wide > ctx.tol.get("homotopy_nontrivial");
    out.flag("limit_pass", limit_ok);
    out.flag("nontrivial_pass", wide_ok);
    out.pass = limit_ok && wide_ok;
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlphaParams {
    pub t: Vec<f64>,
    pub n: Vec<usize>,
    pub points: usize,
    /// Quadrature box half width is `radius_factor / √t`.
    pub radius_factor: f64,
}

impl Default for AlphaParams {
    fn default() -> Self {
        Self {
            t: vec![0.5, 1.0, 4.0],
            n: vec![1, 2],
            points: 801,
            radius_factor: 8.0,
        }
    }
}

fn alpha(p: AlphaParams, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::AlphaIsometry;
    check_positive(NAME, "t", &p.t)?;
    let mut out = Outcome::default();
    let mut table = Table::new("isometry", &["t", "n", "norm", "abs_err"]);
    let mut worst: f64 = 0.0;
    for &t in &p.t {
        for &n in &p.n {
            let r = p.radius_factor / t.sqrt();
            let v = alpha_isometry(t, n, r, p.points, true).map_err(cfg_err)?;
            worst = worst.max((v - 1.0).abs());
            table.push(vec![num(t), n.to_string(), num(v), num((v - 1.0).abs())]);
        }
    }
    out.metric("max_abs_err", worst);
    out.pass = worst <= ctx.tol.get("alpha_isometry");
    out.tables.push(table);
    Ok(out)
}

// -------------------------------------------------------------- quantization

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommutatorParams {
    #[serde(rename = "N")]
    pub npts: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub t: Vec<f64>,
}

impl Default for CommutatorParams {
    fn default() -> Self {
        Self {
            npts: 4096,
            half_width: 16.0,
            t: (1..=128).map(f64::from).collect(),
        }
    }
}

fn commutator(p: CommutatorParams, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::CommutatorDecay;
    check_positive(NAME, "t", &p.t)?;
    let grid = Grid::periodized_line(1, p.npts, p.half_width).map_err(cfg_err)?;
    let f = |x: &[f64]| C64::new(1.0 / (1.0 + x[0] * x[0]), 0.0);
    let report = commutator_decay(&grid, f, resolvent_xi, &p.t).map_err(exp_err(NAME))?;
    let rows = resolvent_bound_check(&grid, f, 0, &p.t).map_err(exp_err(NAME))?;
    let slack = ctx.tol.get("inequality_slack");
    let rows_hold = rows.iter().all(|r| r.holds(slack));
    let (lo, hi) = (ctx.tol.get("slope_min"), ctx.tol.get("slope_max"));
    let slope_ok = (lo..=hi).contains(&report.fit.slope);

    let mut out = Outcome::default();
    let mut table = Table::new("decay", &["t", "norm", "resolvent_plus", "resolvent_minus", "bound"]);
    for (r, v) in rows.iter().zip(&report.table.values) {
        table.push(vec![num(r.t), num(*v), num(r.plus), num(r.minus), num(r.bound)]);
    }
    out.metric("slope", report.fit.slope);
    out.metric("intercept", report.fit.intercept);
    out.metric("r2", report.fit.r_squared);
    out.metric("slope_min", lo);
    out.metric("slope_max", hi);
    out.flag("threshold_pass", slope_ok);
    out.flag("bound_rows_hold", rows_hold);
    out.metric(
        "max_bound_ratio",
        rows.iter().map(|r| r.plus.max(r.minus) / r.bound).fold(0.0, f64::max),
    );
    out.pass = slope_ok && rows_hold;
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffeoParams {
    #[serde(rename = "N")]
    pub npts: usize,
    pub t: Vec<f64>,
    /// `ψ(x) = x + amplitude·sin x`.
    pub amplitude: f64,
}

impl Default for DiffeoParams {
    fn default() -> Self {
        Self {
            npts: 128,
            t: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            amplitude: 0.3,
        }
    }
}

fn diffeo(p: DiffeoParams, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::DiffeoCovariance;
    check_positive(NAME, "t", &p.t)?;
    if p.amplitude.abs() >= 1.0 {
        return Err(CliError::config("diffeo-covariance needs |amplitude| < 1"));
    }
    let grid = Grid::circle(p.npts).map_err(cfg_err)?;
    let f = PhaseFunction::tensor(1, |x| C64::new(1.0 + 0.5 * x[0].cos(), 0.0), resolvent_xi);
    let a = p.amplitude;
    let psi = Diffeo::new(move |x| x + a * x.sin(), move |x| 1.0 + a * x.cos());
    let table = diffeo_covariance(&grid, &f, &psi, &p.t).map_err(exp_err(NAME))?;
    let shift = diffeo_covariance(&grid, &f, &Diffeo::translation(grid.spacing()), &p.t)
        .map_err(exp_err(NAME))?;
    let (first, last) = (table.values[0], *table.values.last().expect("non-empty"));
    let translation = max_of(&shift.values);
    let mut out = Outcome::default();
    out.metric("first", first);
    out.metric("last", last);
    out.metric("translation_defect", translation);
    let decay_ok = last < ctx.tol.get("convergence") && (p.t.len() < 2 || last < 0.5 * first);
    let exact_ok = translation <= ctx.tol.get("constant_coefficient");
    out.flag("decay_pass", decay_ok);
    out.flag("translation_pass", exact_ok);
    out.pass = decay_ok && exact_ok;
    out.tables.push(decay_table("covariance", &table.t, &table.values));
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlueParams {
    #[serde(rename = "N")]
    pub npts: usize,
    pub rotation: f64,
    pub t: Vec<f64>,
}

impl Default for GlueParams {
    fn default() -> Self {
        Self {
            npts: 128,
            rotation: PI / 3.0,
            t: vec![4.0, 8.0, 16.0, 32.0, 64.0],
        }
    }
}

fn glue(p: GlueParams, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::GlueIndependence;
    check_positive(NAME, "t", &p.t)?;
    let grid = Grid::circle(p.npts).map_err(cfg_err)?;
    let first = Cover::two_arcs(&grid, 0.0).map_err(cfg_err)?;
    let second = Cover::two_arcs(&grid, p.rotation).map_err(cfg_err)?;
    let f = PhaseFunction::tensor(
        1,
        |x| C64::new(1.0 + 0.5 * x[0].cos() + 0.3 * (2.0 * x[0]).sin(), 0.0),
        resolvent_xi,
    );
    let table = gluing_independence(&first, &second, &f, &p.t).map_err(exp_err(NAME))?;
    let rho = |x: &[f64]| C64::new(0.5 + 0.25 * x[0].sin(), 0.0);
    let module = p
        .t
        .iter()
        .map(|&t| module_property_defect(&grid, &f, rho, t))
        .collect::<indexlab::Result<Vec<_>>>()
        .map_err(exp_err(NAME))?;
    let (v0, vl) = (table.values[0], *table.values.last().expect("non-empty"));
    let module = max_of(&module);
    let mut out = Outcome::default();
    out.metric("first", v0);
    out.metric("last", vl);
    out.metric("module_property_defect", module);
    let glue_ok = vl < ctx.tol.get("defect") && (p.t.len() < 2 || vl < 0.5 * v0);
    let module_ok = module <= ctx.tol.get("module_property");
    out.flag("glue_pass", glue_ok);
    out.flag("module_pass", module_ok);
    out.pass = glue_ok && module_ok;
    out.tables.push(decay_table("gluing", &table.t, &table.values));
    Ok(out)
}

// ------------------------------------------------------------------ elliptic

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemma45Params {
    #[serde(rename = "N")]
    pub npts: usize,
    pub t: Vec<f64>,
}

impl Default for Lemma45Params {
    fn default() -> Self {
        Self {
            npts: 128,
            t: vec![4.0, 8.0, 16.0, 32.0, 64.0],
        }
    }
}

fn variable_speed(grid: Grid) -> indexlab::Result<FirstOrderOp> {
    FirstOrderOp::variable_speed(grid, |x| 2.0 + x.sin(), |x| x.cos())
}

fn lemma45(p: Lemma45Params, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::Lemma45;
    check_positive(NAME, "t", &p.t)?;
    let grid = Grid::circle(p.npts).map_err(cfg_err)?;
    let op1 = variable_speed(grid.clone()).map_err(exp_err(NAME))?;
    // Order-zero change everywhere, and an order-zero change away from supp φ.
    let op2 = op1
        .perturbed(&scalar_field(&grid, |x| 0.5 * x.cos()))
        .map_err(exp_err(NAME))?;
    let far = circle_bump(PI, 1.0);
    let op3 = op1
        .perturbed(&scalar_field(&grid, |x| 3.0 * far(&[x]).re))
        .map_err(exp_err(NAME))?;
    let phi = circle_bump(0.0, 1.0);
    let r = lemma45_decay(&op1, &op2, &op3, &phi, &resolvent(), &p.t).map_err(exp_err(NAME))?;
    let slack = ctx.tol.get("inequality_slack");
    let rows_hold = r.resolvent_rows.iter().all(|row| row.holds(slack));
    let threshold = ctx.tol.get("defect");
    let last = |v: &[f64]| *v.last().expect("non-empty");
    let parts = [
        ("commutator", &r.commutator.values),
        ("order_zero", &r.order_zero.values),
        ("local", &r.local.values),
    ];
    let mut out = Outcome::default();
    let mut ok = rows_hold;
    for (key, values) in parts {
        out.metric(&format!("{key}_last"), last(values));
        ok &= last(values) < threshold;
    }
    out.flag("resolvent_rows_hold", rows_hold);
    out.pass = ok;
    let mut table = Table::new(
        "lemma45",
        &["t", "commutator", "order_zero", "local", "resolvent_plus", "resolvent_minus", "bound"],
    );
    for (i, row) in r.resolvent_rows.iter().enumerate() {
        table.push(vec![
            num(row.t),
            num(r.commutator.values[i]),
            num(r.order_zero.values[i]),
            num(r.local.values[i]),
            num(row.plus),
            num(row.minus),
            num(row.bound),
        ]);
    }
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreezeParams {
    #[serde(rename = "N")]
    pub npts: usize,
    pub t: f64,
    /// Half widths of the cutoff `φ` around `x₀ = 0`, widest first.
    pub widths: Vec<f64>,
}

impl Default for FreezeParams {
    fn default() -> Self {
        Self {
            npts: 128,
            t: 64.0,
            widths: vec![PI / 2.0, PI / 8.0, PI / 16.0],
        }
    }
}

fn freeze(p: FreezeParams, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::Freeze;
    check_positive(NAME, "widths", &p.widths)?;
    check_positive(NAME, "t", &[p.t])?;
    let grid = Grid::circle(p.npts).map_err(cfg_err)?;
    let op = variable_speed(grid.clone()).map_err(exp_err(NAME))?;
    let control = FirstOrderOp::constant(grid.clone(), &[1.0]).map_err(exp_err(NAME))?;
    let p0 = grid.nearest_index(&[0.0]);
    let f = resolvent();
    let mut table = Table::new("freeze", &["width", "norm", "delta", "control_norm"]);
    let (mut norms, mut control_max) = (Vec::new(), 0.0f64);
    for &w in &p.widths {
        let phi = circle_bump(0.0, w);
        let r = freeze_compare(&op, p0, &phi, &f, p.t).map_err(exp_err(NAME))?;
        let c = freeze_compare(&control, p0, &phi, &f, p.t).map_err(exp_err(NAME))?;
        control_max = control_max.max(c.norm);
        norms.push(r.norm);
        table.push(vec![num(w), num(r.norm), num(r.delta), num(c.norm)]);
    }
    let last = *norms.last().expect("non-empty");
    let mut out = Outcome::default();
    out.metric("last", last);
    out.metric("control_max", control_max);
    let shrink_ok = strictly_decreasing(&norms) && last < ctx.tol.get("freeze");
    let control_ok = control_max <= ctx.tol.get("constant_coefficient");
    out.flag("shrink_pass", shrink_ok);
    out.flag("control_pass", control_ok);
    out.pass = shrink_ok && control_ok;
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantizationParams {
    pub operator: OperatorSpec,
    /// Defaults to the dyadic ladder from 8 to the `t_max` tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    pub control: bool,
}

impl Default for QuantizationParams {
    fn default() -> Self {
        Self {
            operator: OperatorSpec::preset("variable-speed", 256),
            t: None,
            control: true,
        }
    }
}

fn quantization(mut p: QuantizationParams, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::QuantizationConvergence;
    let t_list = p
        .t
        .get_or_insert_with(|| dyadic_ladder(8.0, ctx.tol.get("t_max")))
        .clone();
    check_positive(NAME, "t", &t_list)?;
    let op = p.operator.build()?;
    let one = |_: &[f64]| C64::new(1.0, 0.0);
    let f = resolvent();
    let table = quantization_convergence(&op, &one, &f, &t_list).map_err(exp_err(NAME))?;
    let mut out = Outcome {
        parameters: serde_json::to_value(&p)?,
        ..Outcome::default()
    };
    let last = *table.values.last().expect("non-empty");
    out.metric("t_max", *t_list.last().expect("non-empty"));
    out.metric("last", last);
    let slack = ctx.tol.get("inequality_slack");
    let mut ok = last < ctx.tol.get("defect") && table.is_nonincreasing(slack);
    let mut csv = Table::new("convergence", &["t", "norm", "control_norm"]);
    if p.control {
        let weights = vec![1.0; op.grid().dim()];
        let k = FirstOrderOp::constant(op.grid().clone(), &weights).map_err(exp_err(NAME))?;
        let c = quantization_convergence(&k, &one, &f, &t_list).map_err(exp_err(NAME))?;
        let cmax = max_of(&c.values);
        out.metric("control_max", cmax);
        ok &= cmax <= ctx.tol.get("constant_coefficient");
        for ((t, v), cv) in t_list.iter().zip(&table.values).zip(&c.values) {
            csv.push(vec![num(*t), num(*v), num(*cv)]);
        }
    } else {
        for (t, v) in t_list.iter().zip(&table.values) {
            csv.push(vec![num(*t), num(*v), String::new()]);
        }
    }
    out.flag("nonincreasing", table.is_nonincreasing(slack));
    out.pass = ok;
    out.tables.push(csv);
    Ok(out)
}

// --------------------------------------------------------------------- index

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexCheckParams {
    pub algebra: Vec<usize>,
    pub flux: Vec<i64>,
    #[serde(rename = "N")]
    pub npts: usize,
    pub gap_tol: f64,
    pub t_fraction: f64,
    pub rank_tol: f64,
}

impl Default for IndexCheckParams {
    fn default() -> Self {
        let s = TorusIndexSettings::default();
        Self {
            algebra: vec![1],
            flux: vec![1],
            npts: s.npts,
            gap_tol: s.gap_tol,
            t_fraction: s.t_fraction,
            rank_tol: s.rank_tol,
        }
    }
}

fn index_check(p: IndexCheckParams, cache: &Mutex<FluxCache>) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::IndexCheck;
    let alg = Algebra::new(p.algebra.clone()).map_err(cfg_err)?;
    if p.flux.len() != alg.num_blocks() {
        return Err(CliError::config(format!(
            "{} fluxes for an algebra with {} blocks",
            p.flux.len(),
            alg.num_blocks()
        )));
    }
    let settings = TorusIndexSettings {
        npts: p.npts,
        gap_tol: p.gap_tol,
        t_fraction: p.t_fraction,
        rank_tol: p.rank_tol,
    };
    let idx = {
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        torus_indices(&alg, &p.flux, &settings, &mut guard).map_err(exp_err(NAME))?
    };
    let mut out = Outcome::default();
    out.extra.insert("index_analytic".into(), json!(idx.analytic.components()));
    out.extra.insert("index_topological".into(), json!(idx.topological.components()));
    out.extra.insert("index_morphism".into(), json!(idx.morphism.components()));
    let mut table = Table::new(
        "blocks",
        &["block", "k", "flux", "analytic", "morphism", "gap", "t_small", "raw_near_zero"],
    );
    for (i, ((b, &k), &d)) in idx.blocks.iter().zip(alg.block_sizes()).zip(&p.flux).enumerate() {
        table.push(vec![
            i.to_string(),
            k.to_string(),
            d.to_string(),
            b.analytic.to_string(),
            b.morphism.to_string(),
            num(b.gap),
            num(b.t_small),
            b.raw_near_zero.to_string(),
        ]);
    }
    out.metric("min_gap", idx.blocks.iter().map(|b| b.gap).fold(f64::INFINITY, f64::min));
    out.flag("analytic_eq_topological", idx.analytic == idx.topological);
    out.flag("morphism_eq_analytic", idx.morphism == idx.analytic);
    out.pass = idx.agree();
    out.tables.push(table);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CayleyParams {
    pub flux: i64,
    #[serde(rename = "N")]
    pub npts: usize,
    pub gap_tol: f64,
    pub t_fraction: f64,
    pub rank_tol: f64,
}

impl Default for CayleyParams {
    fn default() -> Self {
        let s = TorusIndexSettings::default();
        Self {
            flux: 1,
            npts: s.npts,
            gap_tol: s.gap_tol,
            t_fraction: s.t_fraction,
            rank_tol: s.rank_tol,
        }
    }
}

fn cayley(p: CayleyParams, ctx: &Context) -> CliResult<Outcome> {
    const NAME: ExperimentName = ExperimentName::CayleyIndex;
    let op = twisted_dirac_block(p.npts, p.flux).map_err(cfg_err)?;
    let b = block_indices(&op, p.gap_tol, p.t_fraction, p.rank_tol).map_err(exp_err(NAME))?;
    let u = op.cayley(b.t_small).map_err(exp_err(NAME))?;
    let n = u.rows();
    let mut unitary = u.adjoint_matmul(&u).map_err(exp_err(NAME))?;
    for i in 0..n {
        unitary[(i, i)] -= C64::new(1.0, 0.0);
    }
    let eps = op.grading_diagonal();
    let mut eu = u.clone();
    for i in 0..n {
        for j in 0..n {
            eu[(i, j)] *= eps[i];
        }
    }
    let mut inv = eu.matmul(&eu).map_err(exp_err(NAME))?;
    for i in 0..n {
        inv[(i, i)] -= C64::new(1.0, 0.0);
    }
    let tol = ctx.tol.get("cayley");
    let (ud, id) = (unitary.max_abs(), inv.max_abs());
    let mut out = Outcome::default();
    out.metric("analytic", b.analytic as f64);
    out.metric("morphism", b.morphism as f64);
    out.metric("topological", p.flux as f64);
    out.metric("gap", b.gap);
    out.metric("t_small", b.t_small);
    out.metric("unitarity_defect", ud);
    out.metric("involution_defect", id);
    out.pass = b.morphism == b.analytic && b.analytic == p.flux && ud <= tol && id <= tol;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(name: ExperimentName, params: Value) -> ExperimentConfig {
        ExperimentConfig::new(name, params)
    }

    #[test]
    fn ladder_is_inclusive() {
        assert_eq!(dyadic_ladder(8.0, 64.0), vec![8.0, 16.0, 32.0, 64.0]);
        assert_eq!(dyadic_ladder(8.0, 32.0), vec![8.0, 16.0, 32.0]);
    }

    #[test]
    fn every_experiment_has_an_anchor() {
        for name in ExperimentName::ALL {
            assert_ne!(anchor(name.as_str()), "plumbing", "{name}");
        }
        assert_eq!(anchor("unknown"), "plumbing");
        for id in 1..=11 {
            assert!(!criterion(id).label.is_empty());
        }
    }

    #[test]
    fn unknown_parameters_are_config_errors() {
        let e = execute(&cfg(ExperimentName::AlphaIsometry, json!({"colour": 1})), &Context::default());
        assert!(matches!(e, Err(CliError::Config(_))));
        let e = execute(&cfg(ExperimentName::BottIndex, json!({"N": 100})), &Context::default());
        assert!(matches!(e, Err(CliError::Config(_))));
    }

    #[test]
    fn alpha_defaults_pass() {
        let out = execute(&cfg(ExperimentName::AlphaIsometry, json!({})), &Context::default()).unwrap();
        assert!(out.pass);
        assert_eq!(out.tables[0].rows.len(), 6);
        assert_eq!(out.parameters["points"], json!(801));
    }

    #[test]
    fn small_bott_index() {
        let out = execute(
            &cfg(ExperimentName::BottIndex, json!({"N": 128, "L": 8.0})),
            &Context::default(),
        )
        .unwrap();
        assert!(out.pass);
        assert_eq!(out.metrics["index"], 1.0);
    }

    #[test]
    fn tolerance_override_changes_verdict() {
        let mut c = cfg(ExperimentName::AlphaIsometry, json!({"t": [1.0], "n": [1]}));
        c.tolerances.insert("alpha_isometry".into(), -1.0);
        assert!(!execute(&c, &Context::default()).unwrap().pass);
    }

    #[test]
    fn index_check_reports_vectors() {
        let out = execute(
            &cfg(ExperimentName::IndexCheck, json!({"algebra": [1, 1], "flux": [1, -1], "N": 12})),
            &Context::default(),
        )
        .unwrap();
        assert!(out.pass);
        assert_eq!(out.extra["index_analytic"], json!([1, -1]));
        assert_eq!(out.extra["index_morphism"], json!([1, -1]));
    }
}
