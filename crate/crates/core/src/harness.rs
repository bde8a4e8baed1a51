//! Scenario files, task dispatch and verification reports.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::localize::{self, LocalizeError};
use crate::polycore::{parse_homogeneous, parse_poly, GaussianRational, PolyError};
use crate::projgeom::{
    BundleSpec, GeomError, Geometry, MetricSpec, ProjPoint, PsiSpec, SectionSpec,
};
use crate::residue::{self, ResidueError, ResidueLedger};

pub const TOOL: &str = "residue-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid polynomial in {field}: {source}")]
    Poly { field: String, source: PolyError },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid scenario: {0}")]
    Geom(#[from] GeomError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Float,
    Exact,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    #[serde(alias = "fs", alias = "fubini-study")]
    FubiniStudy,
    Perturbed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_index: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    EulerJacobi,
    CayleyBacharach,
    GeneralizedCb,
    VirtualResidue,
    LocalMass,
    CurveLocalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Curve factor `f` of the first section component (generalized_cb).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub degrees: Vec<u32>,
    pub section: Vec<String>,
    pub psi: String,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub tasks: Vec<TaskConfig>,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn poly_field(
    text: &str,
    nv: usize,
    field: &str,
) -> Result<crate::polycore::HomogeneousPoly, ScenarioError> {
    parse_poly(text, nv).map_err(|source| ScenarioError::Poly {
        field: field.to_string(),
        source,
    })
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.geometry()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Validates the scenario and builds its geometry.
    pub fn geometry(&self) -> Result<Geometry, ScenarioError> {
        let n = self.n;
        if n == 0 || n > 4 {
            return Err(ScenarioError::Invalid(format!(
                "n must lie in 1..=4, got {n}"
            )));
        }
        if self.degrees.len() != n {
            return Err(ScenarioError::Invalid(format!(
                "{} degrees for n = {n}",
                self.degrees.len()
            )));
        }
        if self.section.len() != n {
            return Err(ScenarioError::Invalid(format!(
                "{} section components for n = {n}",
                self.section.len()
            )));
        }
        let bundle = BundleSpec::new(n, self.degrees.clone())?;
        let comps = self
            .section
            .iter()
            .enumerate()
            .map(|(i, s)| poly_field(s, n + 1, &format!("section[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let section = SectionSpec::new(&bundle, comps)?;
        let h = poly_field(&self.psi, n + 1, "psi")?;
        let expected = bundle.psi_degree();
        if !h.is_zero() && h.degree() as i64 != expected {
            return Err(ScenarioError::Invalid(format!(
                "psi has degree {}, but the degree constraint deg H = sum(d_i) - n - 1 requires {expected}",
                h.degree()
            )));
        }
        let psi = PsiSpec::new(&bundle, h)?;
        let metric = match self.metric.kind {
            MetricKind::FubiniStudy => {
                if self.metric.epsilon.is_some() || self.metric.q.is_some() {
                    return Err(ScenarioError::Invalid(
                        "fubini_study metric takes no epsilon or q".into(),
                    ));
                }
                MetricSpec::FubiniStudy
            }
            MetricKind::Perturbed => {
                let missing =
                    |k: &str| ScenarioError::Invalid(format!("perturbed metric needs `{k}`"));
                let epsilon = self.metric.epsilon.ok_or_else(|| missing("epsilon"))?;
                let q = poly_field(
                    self.metric.q.as_deref().ok_or_else(|| missing("q"))?,
                    n + 1,
                    "metric.q",
                )?;
                let f_index = self.metric.f_index.unwrap_or(0);
                let pair = self
                    .metric
                    .pair
                    .unwrap_or((f_index, if f_index == 0 { 1 } else { 0 }));
                MetricSpec::Perturbed {
                    epsilon,
                    pair,
                    q,
                    f_index,
                }
            }
        };
        for (i, task) in self.tasks.iter().enumerate() {
            validate_task(task, n)
                .map_err(|m| ScenarioError::Invalid(format!("tasks[{i}]: {m}")))?;
        }
        Ok(Geometry::new(bundle, section, psi, metric)?)
    }
}

fn validate_task(task: &TaskConfig, n: usize) -> Result<(), String> {
    if let Some(tol) = task.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(format!("tol must be positive, got {tol}"));
        }
    }
    if let Some(ts) = &task.t {
        if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err("t must be a non-empty list of positive numbers".into());
        }
    }
    if let Some(r) = task.radius {
        if !(r > 0.0 && r.is_finite()) {
            return Err(format!("radius must be positive, got {r}"));
        }
    }
    match task.kind {
        TaskKind::CayleyBacharach | TaskKind::GeneralizedCb | TaskKind::CurveLocalization
            if n != 2 =>
        {
            Err(format!("{:?} needs n = 2", task.kind))
        }
        TaskKind::GeneralizedCb if task.curve.is_none() => {
            Err("generalized_cb needs `curve`".into())
        }
        _ if task.curve.is_some() && task.kind != TaskKind::GeneralizedCb => {
            Err("`curve` is only meaningful for generalized_cb".into())
        }
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    AssumedHypotheses,
    PreconditionFailed,
}

impl Verdict {
    pub fn is_ok(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::AssumedHypotheses)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskReport {
    pub kind: TaskKind,
    pub inputs: TaskConfig,
    pub seed: u64,
    pub verdict: Verdict,
    pub message: String,
    pub result: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub tasks: usize,
    pub passed: usize,
    pub failed: usize,
    pub precondition_failed: usize,
    pub assumed_hypotheses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub tool: String,
    pub version: String,
    pub scenario: Option<String>,
    pub seed: u64,
    pub backend: Backend,
    pub tasks: Vec<TaskReport>,
    pub summary: Summary,
    /// Per-task wall times in seconds; not serialized to JSON.
    #[serde(skip)]
    pub wall_times: Vec<f64>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.tasks.iter().all(|t| t.verdict.is_ok())
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }
}

/// Overrides applied on top of the scenario file.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

pub fn run_scenario(path: &Path, opts: RunOptions) -> Result<VerificationReport, ScenarioError> {
    let scenario = Scenario::load(path)?;
    run(&scenario, opts)
}

fn c2(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

struct Outcome {
    verdict: Verdict,
    message: String,
    result: Value,
}

impl Outcome {
    fn precondition(msg: impl ToString) -> Self {
        Self {
            verdict: Verdict::PreconditionFailed,
            message: msg.to_string(),
            result: Value::Null,
        }
    }

    fn judged(ok: bool, pass: Verdict, message: String, result: Value) -> Self {
        Self {
            verdict: if ok { pass } else { Verdict::Fail },
            message,
            result,
        }
    }
}

fn residue_precondition(e: ResidueError) -> Outcome {
    Outcome::precondition(e)
}

fn localize_precondition(e: LocalizeError) -> Outcome {
    Outcome::precondition(e)
}

/// Runs every task of a validated scenario in order.
pub fn run(scenario: &Scenario, opts: RunOptions) -> Result<VerificationReport, ScenarioError> {
    let geom = scenario.geometry()?;
    let seed = opts.seed.or(scenario.seed).unwrap_or(DEFAULT_SEED);
    let mut tasks = Vec::with_capacity(scenario.tasks.len());
    let mut wall_times = Vec::with_capacity(scenario.tasks.len());
    for task in &scenario.tasks {
        let task_seed = task.seed.unwrap_or(seed);
        let start = std::time::Instant::now();
        let out = run_task(scenario, &geom, task, task_seed, opts);
        wall_times.push(start.elapsed().as_secs_f64());
        tasks.push(TaskReport {
            kind: task.kind,
            inputs: task.clone(),
            seed: task_seed,
            verdict: out.verdict,
            message: out.message,
            result: out.result,
        });
    }
    let count = |v: Verdict| tasks.iter().filter(|t| t.verdict == v).count();
    let summary = Summary {
        tasks: tasks.len(),
        passed: count(Verdict::Pass),
        failed: count(Verdict::Fail),
        precondition_failed: count(Verdict::PreconditionFailed),
        assumed_hypotheses: count(Verdict::AssumedHypotheses),
    };
    Ok(VerificationReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        scenario: scenario.name.clone(),
        seed,
        backend: scenario.backend,
        tasks,
        summary,
        wall_times,
    })
}

fn run_task(
    scenario: &Scenario,
    geom: &Geometry,
    task: &TaskConfig,
    seed: u64,
    opts: RunOptions,
) -> Outcome {
    match task.kind {
        TaskKind::EulerJacobi => euler_jacobi(geom, task, seed),
        TaskKind::CayleyBacharach => cayley_bacharach(scenario, geom, task, seed),
        TaskKind::GeneralizedCb => generalized_cb(geom, task, seed),
        TaskKind::VirtualResidue => virtual_residue(geom, task, seed, opts),
        TaskKind::LocalMass => local_mass(geom, task, seed, opts),
        TaskKind::CurveLocalization => curve_localization(geom, task, seed, opts),
    }
}

fn euler_jacobi(geom: &Geometry, task: &TaskConfig, seed: u64) -> Outcome {
    let tol = task.tol.unwrap_or(1e-8);
    match residue::global_residue_sum(geom, seed) {
        Ok(ledger) => {
            let ok = ledger.relative_vanishing <= tol;
            let msg = format!(
                "{} zeros, relative vanishing {:.3e} (tol {tol:.1e})",
                ledger.entries.len(),
                ledger.relative_vanishing
            );
            Outcome::judged(ok, Verdict::Pass, msg, json!({ "ledger": ledger }))
        }
        Err(e) => residue_precondition(e),
    }
}

fn cayley_bacharach(scenario: &Scenario, geom: &Geometry, task: &TaskConfig, seed: u64) -> Outcome {
    let comps = &geom.section().components;
    match scenario.backend {
        Backend::Float => {
            let tol = task.tol.unwrap_or(1e-8);
            match residue::cayley_bacharach_verify(&comps[0], &comps[1], seed) {
                Ok(r) => {
                    let msg = format!(
                        "{} points, max held-out residual {:.3e} (tol {tol:.1e}), negative control {:.3e}",
                        r.points.len(),
                        r.max_residual,
                        r.negative_control
                    );
                    Outcome::judged(
                        r.max_residual <= tol,
                        Verdict::Pass,
                        msg,
                        json!({ "cayley_bacharach": r }),
                    )
                }
                Err(e) => residue_precondition(e),
            }
        }
        Backend::Exact => {
            let parse = |s: &str| parse_homogeneous::<GaussianRational>(s, 3);
            let (f, g) = match (parse(&scenario.section[0]), parse(&scenario.section[1])) {
                (Ok(f), Ok(g)) => (f, g),
                (Err(e), _) | (_, Err(e)) => return Outcome::precondition(e),
            };
            let pts = match residue::rational_intersection_points(&f, &g, seed, 1_000_000) {
                Ok(p) => p,
                Err(e) => return residue_precondition(e),
            };
            match residue::cayley_bacharach_exact(&f, &g, &pts) {
                Ok(r) => {
                    let msg = format!(
                        "{} rational points, held-out values exactly zero: {}",
                        r.num_points, r.all_zero
                    );
                    let points: Vec<Vec<String>> = pts
                        .iter()
                        .map(|p| p.iter().map(|c| format!("{}+{}i", c.re, c.im)).collect())
                        .collect();
                    Outcome::judged(
                        r.all_zero,
                        Verdict::Pass,
                        msg,
                        json!({ "cayley_bacharach_exact": r, "points": points }),
                    )
                }
                Err(e) => residue_precondition(e),
            }
        }
    }
}

fn generalized_cb(geom: &Geometry, task: &TaskConfig, seed: u64) -> Outcome {
    let tol = task.tol.unwrap_or(1e-8);
    let curve = match parse_poly(task.curve.as_deref().unwrap_or_default(), 3) {
        Ok(c) => c,
        Err(e) => return Outcome::precondition(e),
    };
    match residue::generalized_cb_check(geom.section(), &curve, &geom.psi().h, seed) {
        Ok(r) => {
            let ok = r.psi_divisible_by_curve
                && r.point_ledger.relative_vanishing <= tol
                && r.cb_residual <= tol;
            let msg = format!(
                "{} curve points, {} isolated points, psi divisible by curve: {}, point-ledger vanishing {:.3e}, \
                 CB residual {:.3e} (tol {tol:.1e}); splitting hypothesis assumed",
                r.curve_points,
                r.isolated_points,
                r.psi_divisible_by_curve,
                r.point_ledger.relative_vanishing,
                r.cb_residual
            );
            Outcome::judged(
                ok,
                Verdict::AssumedHypotheses,
                msg,
                json!({ "generalized_cb": r }),
            )
        }
        Err(e) => residue_precondition(e),
    }
}

fn samples_for(task: &TaskConfig, opts: RunOptions, default: usize) -> usize {
    opts.samples.or(task.samples).unwrap_or(default)
}

fn virtual_residue(geom: &Geometry, task: &TaskConfig, seed: u64, opts: RunOptions) -> Outcome {
    let ts = task.t.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let rel = task.tol.unwrap_or(0.05);
    let samples = samples_for(task, opts, 200_000);
    let mut estimates = Vec::new();
    for &t in &ts {
        match localize::virtual_residue_mc(geom, t, samples, seed) {
            Ok(e) => estimates.push(e),
            Err(e) => return localize_precondition(e),
        }
    }
    let ledger = residue::global_residue_sum(geom, seed).ok();
    let scale = ledger.as_ref().map(ResidueLedger::mass);
    let mut failures = Vec::new();
    for e in &estimates {
        if e.value().norm() > 3.0 * e.std_error {
            failures.push(format!(
                "t = {}: |estimate| {:.3e} > 3 sigma {:.3e}",
                e.t,
                e.value().norm(),
                3.0 * e.std_error
            ));
        }
        if let Some(m) = scale {
            if e.std_error > rel * m {
                failures.push(format!(
                    "t = {}: sigma {:.3e} > {rel} * residue mass {m:.3e}",
                    e.t, e.std_error
                ));
            }
        }
    }
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            let bound = 3.0 * a.std_error.hypot(b.std_error);
            if (a.value() - b.value()).norm() > bound {
                failures.push(format!(
                    "t = {} and t = {} disagree beyond combined 3 sigma",
                    a.t, b.t
                ));
            }
        }
    }
    let msg = if failures.is_empty() {
        let worst = estimates
            .iter()
            .map(|e| e.value().norm() / e.std_error.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        format!(
            "{} t values, {samples} samples each, max |estimate|/sigma {worst:.2}",
            estimates.len()
        )
    } else {
        failures.join("; ")
    };
    Outcome::judged(
        failures.is_empty(),
        Verdict::Pass,
        msg,
        json!({ "estimates": estimates, "residue_mass": scale }),
    )
}

fn local_mass(geom: &Geometry, task: &TaskConfig, seed: u64, opts: RunOptions) -> Outcome {
    let t = task
        .t
        .as_ref()
        .and_then(|v| v.first().copied())
        .unwrap_or(0.01);
    let radius = task.radius.unwrap_or(0.5);
    let tol = task.tol.unwrap_or(0.05);
    let samples = samples_for(task, opts, 200_000);
    let ledger = match residue::global_residue_sum(geom, seed) {
        Ok(l) => l,
        Err(e) => return residue_precondition(e),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut var = 0.0;
    for entry in &ledger.entries {
        let p = ProjPoint::from_affine(0, &entry.coordinates());
        let m = match localize::local_mass(geom, &p, t, radius, samples, seed) {
            Ok(m) => m,
            Err(e) => return localize_precondition(e),
        };
        let r = entry.value();
        let rel_err = (m.value() - r).norm() / r.norm().max(f64::MIN_POSITIVE);
        if rel_err > tol {
            failures.push(format!(
                "mass at {:?} off by {:.2}%",
                entry.point,
                100.0 * rel_err
            ));
        }
        total += m.value();
        var += m.std_error * m.std_error;
        rows.push(json!({ "point": entry.point, "residue": entry.value, "mass": m, "relative_error": rel_err }));
    }
    let combined = var.sqrt();
    if total.norm() > 3.0 * combined {
        failures.push(format!(
            "masses sum to {:.3e}, beyond combined 3 sigma {:.3e}",
            total.norm(),
            3.0 * combined
        ));
    }
    let msg = if failures.is_empty() {
        format!(
            "{} balls of radius {radius} at t = {t}, masses match residues within {}%",
            rows.len(),
            100.0 * tol
        )
    } else {
        failures.join("; ")
    };
    Outcome::judged(
        failures.is_empty(),
        Verdict::Pass,
        msg,
        json!({ "masses": rows, "sum": c2(total), "combined_error": combined }),
    )
}

fn curve_localization(geom: &Geometry, task: &TaskConfig, seed: u64, opts: RunOptions) -> Outcome {
    let rel = task.tol.unwrap_or(0.02);
    let samples = samples_for(task, opts, 100_000);
    let term = match localize::curve_localized_term(geom, samples, seed) {
        Ok(t) => t,
        Err(e) => return localize_precondition(e),
    };
    let mut failures = Vec::new();
    match geom.metric() {
        MetricSpec::FubiniStudy => {
            if term.max_abs > 1e-12 {
                failures.push(format!(
                    "FS integrand not pointwise zero: max {:.3e}",
                    term.max_abs
                ));
            }
        }
        MetricSpec::Perturbed { .. } => {
            if term.max_abs <= 1e-4 {
                failures.push(format!(
                    "integrand unexpectedly small: max {:.3e}",
                    term.max_abs
                ));
            }
            if term.std_error > rel * term.l1_mass {
                failures.push(format!(
                    "sigma {:.3e} > {rel} * L1 mass {:.3e}",
                    term.std_error, term.l1_mass
                ));
            }
        }
    }
    if term.value().norm() > 3.0 * term.std_error {
        failures.push(format!(
            "|integral| {:.3e} > 3 sigma {:.3e}",
            term.value().norm(),
            3.0 * term.std_error
        ));
    }
    let msg = if failures.is_empty() {
        format!(
            "{} base samples over {} sheets, |integral| {:.3e}, sigma {:.3e}, max |integrand| {:.3e}, {} rejections",
            term.samples,
            term.sheets,
            term.value().norm(),
            term.std_error,
            term.max_abs,
            term.rejections
        )
    } else {
        failures.join("; ")
    };
    Outcome::judged(
        failures.is_empty(),
        Verdict::Pass,
        msg,
        json!({ "curve_term": term }),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

/// Deterministic serialization of a report.
pub fn emit_report(report: &VerificationReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Text => text_report(report).into_bytes(),
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::AssumedHypotheses => "PASS (hypotheses assumed)",
        Verdict::PreconditionFailed => "PRECONDITION FAILED",
    }
}

fn text_report(r: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", r.tool, r.version);
    if let Some(name) = &r.scenario {
        let _ = writeln!(out, "scenario: {name}");
    }
    let _ = writeln!(out, "seed: {}  backend: {:?}", r.seed, r.backend);
    for (i, t) in r.tasks.iter().enumerate() {
        let time = r
            .wall_times
            .get(i)
            .map(|s| format!(" [{s:.2}s]"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "\n[{}] {:?}: {}{}",
            i + 1,
            t.kind,
            verdict_str(t.verdict),
            time
        );
        let _ = writeln!(out, "    {}", t.message);
        if let Some(ledger) = t.result.get("ledger") {
            if let Ok(ledger) = serde_json::from_value::<LedgerView>(ledger.clone()) {
                let _ = writeln!(out, "    {:<4} {:<52} residue", "#", "zero (chart 0)");
                for (k, e) in ledger.entries.iter().enumerate() {
                    let pt: Vec<String> = e
                        .point
                        .iter()
                        .map(|c| format!("{:+.6e}{:+.6e}i", c[0], c[1]))
                        .collect();
                    let _ = writeln!(
                        out,
                        "    {:<4} {:<52} {:+.12e}{:+.12e}i",
                        k + 1,
                        pt.join(", "),
                        e.value[0],
                        e.value[1]
                    );
                }
                let _ = writeln!(
                    out,
                    "    total {:+.6e}{:+.6e}i",
                    ledger.total[0], ledger.total[1]
                );
            }
        }
    }
    let s = &r.summary;
    let _ = writeln!(
        out,
        "\nsummary: {} tasks, {} passed, {} hypotheses assumed, {} failed, {} precondition failed",
        s.tasks, s.passed, s.assumed_hypotheses, s.failed, s.precondition_failed
    );
    let _ = writeln!(
        out,
        "{}",
        if r.all_passed() {
            "ALL PASSED"
        } else {
            "FAILURES PRESENT"
        }
    );
    out
}

#[derive(Deserialize)]
struct LedgerView {
    entries: Vec<EntryView>,
    total: [f64; 2],
}

#[derive(Deserialize)]
struct EntryView {
    point: Vec<[f64; 2]>,
    value: [f64; 2],
}

/// JSON Schema of the scenario format.
pub fn schema() -> Value {
    let num_list = json!({ "type": "array", "items": { "type": "number", "exclusiveMinimum": 0 }, "minItems": 1 });
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "residue-lab scenario",
        "type": "object",
        "additionalProperties": false,
        "required": ["n", "degrees", "section", "psi"],
        "properties": {
            "name": { "type": "string" },
            "n": { "type": "integer", "minimum": 1, "maximum": 4, "description": "dimension of P^n and rank of V" },
            "degrees": { "type": "array", "items": { "type": "integer", "minimum": 0 }, "description": "V = O(d_1) + ... + O(d_n)" },
            "section": { "type": "array", "items": { "type": "string" }, "description": "homogeneous polynomials in z0..zn, one per summand" },
            "psi": { "type": "string", "description": "homogeneous H of degree sum(d_i) - n - 1" },
            "metric": {
                "type": "object",
                "additionalProperties": false,
                "required": ["kind"],
                "properties": {
                    "kind": { "enum": ["fubini_study", "perturbed"] },
                    "epsilon": { "type": "number", "exclusiveMinimum": 0 },
                    "q": { "type": "string" },
                    "pair": { "type": "array", "items": { "type": "integer" }, "minItems": 2, "maxItems": 2 },
                    "f_index": { "type": "integer", "minimum": 0 }
                }
            },
            "tasks": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": ["kind"],
                    "properties": {
                        "kind": { "enum": ["euler_jacobi", "cayley_bacharach", "generalized_cb", "virtual_residue", "local_mass", "curve_localization"] },
                        "tol": { "type": "number", "exclusiveMinimum": 0 },
                        "t": num_list,
                        "samples": { "type": "integer", "minimum": 1000 },
                        "seed": { "type": "integer", "minimum": 0 },
                        "radius": { "type": "number", "exclusiveMinimum": 0 },
                        "curve": { "type": "string" }
                    }
                }
            },
            "backend": { "enum": ["float", "exact"] },
            "seed": { "type": "integer", "minimum": 0 }
        }
    })
}
