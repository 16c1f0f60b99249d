//! Command-line front end: spec loading, the five verbs, and report output.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use warpsplit::classify::{
    classify_field, curvature_conditions, decomposition_type, gen_gr_check_normalized, Classification, ClassifyError,
    DecompositionType, SignPattern,
};
use warpsplit::expr::parse_constant;
use warpsplit::fixtures::{self, FixtureCheck};
use warpsplit::flow::{leaf_samples, period_group, FlowError, PeriodReport};
use warpsplit::split::{
    reconstruct_and_verify, split_report, GridNode, SplitConfig, SplitError, SplitReport, WarpingTable,
    PERIOD_QUADRATURE_TOLERANCE,
};
use warpsplit::spec::{Problem, SpecFile, Tolerances};

/// Version of the machine-readable report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "warpsplit", version, about = "Product decompositions of pseudo-Riemannian manifolds along a vector field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the flag set of the field at the sample points.
    Classify(RunArgs),
    /// Run the full splitting pipeline and report a verdict.
    Split(RunArgs),
    /// Periods of g(U,·) over the declared loops.
    Periods(RunArgs),
    /// Reconstruct the product metric and check the curvature identities.
    Verify(RunArgs),
    /// List, export or run the built-in fixtures.
    Fixtures(FixtureArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Spec file, or the id or name of a built-in fixture.
    pub spec: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Classification tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed of the sample sequence.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sample points.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Flow-time span as `a,b`; entries may be constants such as `-pi`.
    #[arg(long, allow_hyphen_values = true, value_name = "A,B")]
    pub t_span: Option<String>,
    /// Write the command's table as comma-separated values.
    #[arg(long, value_name = "PATH")]
    pub emit_table: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Run a single fixture by id or name.
    pub name: Option<String>,
    #[arg(long, conflicts_with_all = ["export", "run_all", "name"])]
    pub list: bool,
    /// Write every fixture spec into DIR.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["run_all", "name"])]
    pub export: Option<PathBuf>,
    /// Run every fixture and compare with its expectations.
    #[arg(long, conflicts_with = "name")]
    pub run_all: bool,
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn spec(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_SPEC,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        CliError::numerical(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::NoLeafFunction | FlowError::LeafFunction(_) => CliError::spec(e.to_string()),
            other => CliError::numerical(other.to_string()),
        }
    }
}

impl From<SplitError> for CliError {
    fn from(e: SplitError) -> Self {
        match e {
            SplitError::BasePoint(_) => CliError::spec(e.to_string()),
            other => CliError::numerical(other.to_string()),
        }
    }
}

/// What a command produced: the report text and the exit code.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerances: Option<&'a Tolerances>,
    result: &'a T,
}

fn machine<T: Serialize>(command: &str, problem: Option<&Problem>, result: &T) -> String {
    let env = Envelope {
        schema_version: REPORT_SCHEMA_VERSION,
        tool: "warpsplit",
        version: env!("CARGO_PKG_VERSION"),
        command,
        spec: problem.map(|p| p.name.as_str()),
        seed: problem.map(|p| p.sampling.seed),
        samples: problem.map(|p| p.samples.len()),
        tolerances: problem.map(|p| &p.tolerances),
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("reports always serialize");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Classify(a) => cmd_classify(&a),
        Command::Split(a) => cmd_split(&a),
        Command::Periods(a) => cmd_periods(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Fixtures(a) => cmd_fixtures(&a),
    }
}

/// Reads a spec from a file, falling back to the fixture catalog.
pub fn resolve_spec(key: &str) -> Result<SpecFile, CliError> {
    let path = Path::new(key);
    if path.is_file() {
        return SpecFile::load(path).map_err(|e| CliError::spec(e.to_string()));
    }
    fixtures::find(key)
        .map(|f| f.spec)
        .ok_or_else(|| CliError::spec(format!("`{key}` is neither a spec file nor a fixture")))
}

fn parse_span(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::spec(format!("--t-span expects `a,b` with a < b, got `{text}`"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let a = parse_constant(a).map_err(|_| bad())?;
    let b = parse_constant(b).map_err(|_| bad())?;
    if a >= b || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    Ok((a, b))
}

/// Builds the problem with command-line overrides applied.
pub fn load_problem(key: &str, c: &Common) -> Result<Problem, CliError> {
    let spec = resolve_spec(key)?;
    let mut p = spec.build_with(c.samples, c.seed).map_err(|e| CliError::spec(e.to_string()))?;
    if let Some(tol) = c.tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(CliError::spec(format!("--tol must be positive, got {tol}")));
        }
        p.tolerances.classify = tol;
    }
    if let Some(span) = &c.t_span {
        p.sampling.t_span = parse_span(span)?;
    }
    Ok(p)
}

fn write_table(path: &Path, table: &str) -> Result<(), CliError> {
    std::fs::write(path, table).map_err(|e| CliError {
        code: EXIT_NUMERICAL,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10}")
    } else {
        x.to_string()
    }
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn coordinate_header(p: &Problem) -> String {
    p.manifold.coords.join(",")
}

// ---- classify ----

#[derive(Serialize)]
struct ClassifyResult {
    classification: Classification,
    decomposition: Option<DecompositionType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inconsistency: Option<String>,
}

fn flag_rows(c: &Classification) -> [(&'static str, &warpsplit::classify::FlagResult); 9] {
    [
        ("unit", &c.unit),
        ("pregeodesic", &c.pregeodesic),
        ("geodesic_unit", &c.geodesic_unit),
        ("irrotational", &c.irrotational),
        ("orth_irrotational", &c.orth_irrotational),
        ("conformal", &c.conformal),
        ("orth_conformal", &c.orth_conformal),
        ("parallel", &c.parallel),
        ("grad_div_e_parallel_e", &c.grad_div_e_parallel_e),
    ]
}

fn human_flags(out: &mut String, c: &Classification) {
    let _ = writeln!(out, "samples: {}  tolerance: {}  eps: {}", c.samples, sci(c.tolerance), c.eps);
    for (name, f) in flag_rows(c) {
        let _ = writeln!(
            out,
            "  {name:<22} {:<5}  max residual {}  failures {}",
            f.holds,
            sci(f.max_residual),
            f.failures
        );
    }
}

fn cmd_classify(a: &RunArgs) -> Result<Output, CliError> {
    let p = load_problem(&a.spec, &a.common)?;
    let c = classify_field(&p.manifold, &p.field, &p.samples, p.tolerances.classify)?;
    let (decomposition, inconsistency) = match decomposition_type(&c) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    if let Some(path) = &a.common.emit_table {
        let mut t = String::from("flag,holds,max_residual,failures\n");
        for (name, f) in flag_rows(&c) {
            let _ = writeln!(t, "{name},{},{:e},{}", f.holds, f.max_residual, f.failures);
        }
        write_table(path, &t)?;
    }
    let text = match a.common.format {
        Format::Machine => machine(
            "classify",
            Some(&p),
            &ClassifyResult {
                classification: c,
                decomposition,
                inconsistency,
            },
        ),
        Format::Human => {
            let mut out = format!("{}\n", p.name);
            human_flags(&mut out, &c);
            match (decomposition, inconsistency) {
                (Some(d), _) => {
                    let _ = writeln!(out, "decomposition: {d}");
                }
                (None, Some(e)) => {
                    let _ = writeln!(out, "decomposition: none ({e})");
                }
                _ => {}
            }
            out
        }
    };
    Ok(Output { text, code: EXIT_OK })
}

// ---- split ----

fn warping_csv(p: &Problem, w: &WarpingTable) -> String {
    let mut t = format!("time,leaf,{},f\n", coordinate_header(p));
    for (j, leaf) in w.leaves.iter().enumerate() {
        let coords: Vec<String> = leaf.iter().map(|x| format!("{x:e}")).collect();
        for (k, tk) in w.t.iter().enumerate() {
            let f = w.f[j][k].map(|v| format!("{v:e}")).unwrap_or_else(|| "nan".into());
            let _ = writeln!(t, "{tk:e},{j},{},{f}", coords.join(","));
        }
    }
    t
}

fn human_split(p: &Problem, r: &SplitReport) -> String {
    let mut out = format!("{}\n", p.name);
    let _ = writeln!(out, "verdict: {}", r.verdict.text);
    for reason in &r.verdict.reasons {
        let _ = writeln!(out, "  - {reason}");
    }
    let _ = writeln!(out, "decomposition: {}", r.decomposition);
    if let Some(e) = &r.inconsistency {
        let _ = writeln!(out, "inconsistency: {e}");
    }
    let _ = writeln!(out, "base point: {}", point(&r.base_point));
    match &r.returns {
        Some(ev) if !ev.is_empty() => {
            let _ = writeln!(out, "leaf returns: {} (first at t = {})", ev.len(), num(ev[0].time));
        }
        Some(_) => {
            let _ = writeln!(out, "leaf returns: none up to t = {}", num(r.return_horizon));
        }
        None => {}
    }
    if let Some(note) = &r.returns_note {
        let _ = writeln!(out, "  note: {note}");
    }
    if let Some(m) = &r.monodromy {
        let _ = writeln!(
            out,
            "monodromy: identity {}  max displacement {}  over {} leaf points",
            m.identity,
            sci(m.max_displacement),
            m.samples.len()
        );
    }
    if let Some(w) = &r.warping {
        let _ = writeln!(out, "warping function on the base trajectory:");
        let _ = writeln!(out, "  {:>14} {:>16} {:>16}", "t", "f", "lambda ratio");
        for (k, t) in w.t.iter().enumerate() {
            let show = |v: Option<f64>| v.map(num).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "  {:>14} {:>16} {:>16}", num(*t), show(w.f[0][k]), show(w.lambda_ratio[k]));
        }
    }
    if let Some(rc) = &r.reconstruction {
        let _ = writeln!(
            out,
            "reconstruction ({}): max residual {}  rms {}  nodes {}  unreachable {}",
            rc.model,
            sci(rc.max_residual),
            sci(rc.rms_residual),
            rc.nodes,
            rc.unreachable.len()
        );
    }
    if let Some(e) = &r.reconstruction_error {
        let _ = writeln!(out, "reconstruction failed: {e}");
    }
    if let Some(pr) = &r.periods {
        human_periods(&mut out, pr);
    }
    if let Some(e) = &r.periods_error {
        let _ = writeln!(out, "periods unavailable: {e}");
    }
    out
}

fn cmd_split(a: &RunArgs) -> Result<Output, CliError> {
    let p = load_problem(&a.spec, &a.common)?;
    let cfg = SplitConfig::from_problem(&p);
    let r = split_report(&p.manifold, &p.field, &p.samples, &cfg)?;
    if let Some(path) = &a.common.emit_table {
        let table = match (&r.warping, &r.reconstruction) {
            (Some(w), _) => w,
            (None, Some(rc)) => &rc.table,
            (None, None) => return Err(CliError::numerical("no warping table was produced")),
        };
        write_table(path, &warping_csv(&p, table))?;
    }
    let text = match a.common.format {
        Format::Machine => machine("split", Some(&p), &r),
        Format::Human => human_split(&p, &r),
    };
    Ok(Output { text, code: EXIT_OK })
}

// ---- periods ----

fn human_periods(out: &mut String, r: &PeriodReport) {
    let _ = writeln!(out, "periods: class {}  rank {}", r.class, r.rank);
    for l in &r.loops {
        let v = l.value.map(num).unwrap_or_else(|| "-".into());
        let e = l.error_estimate.map(sci).unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "  {:<16} {v:>16}  error {e}", l.name);
    }
    if let Some(g) = r.generator {
        let _ = writeln!(out, "  generator {}", num(g));
    }
}

fn cmd_periods(a: &RunArgs) -> Result<Output, CliError> {
    let p = load_problem(&a.spec, &a.common)?;
    let r = period_group(
        &p.manifold,
        &p.field,
        &p.samples,
        p.tolerances.classify,
        PERIOD_QUADRATURE_TOLERANCE,
    )?;
    if let Some(path) = &a.common.emit_table {
        let mut t = String::from("loop,value,error_estimate\n");
        for l in &r.loops {
            let v = l.value.map(|v| format!("{v:e}")).unwrap_or_else(|| "nan".into());
            let e = l.error_estimate.map(|v| format!("{v:e}")).unwrap_or_else(|| "nan".into());
            let _ = writeln!(t, "{},{v},{e}", l.name);
        }
        write_table(path, &t)?;
    }
    let text = match a.common.format {
        Format::Machine => machine("periods", Some(&p), &r),
        Format::Human => {
            let mut out = format!("{}\n", p.name);
            human_periods(&mut out, &r);
            out
        }
    };
    Ok(Output { text, code: EXIT_OK })
}

// ---- verify ----

#[derive(Serialize)]
struct ReconstructionSummary {
    model: DecompositionType,
    nodes: usize,
    max_residual: f64,
    rms_residual: f64,
    worst: Option<GridNode>,
    unreachable: usize,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct CurvatureSummary {
    applicable: bool,
    div_u_signs: SignPattern,
    ric_u_signs: SignPattern,
    max_div_residual: f64,
    max_ricci_residual: f64,
}

#[derive(Serialize)]
struct GenGrSummary {
    orth_irrotational: bool,
    divergence_condition: bool,
    ricci_nonnegative: bool,
    equality_case: bool,
    max_equality_residual: f64,
    max_bochner_residual: f64,
    min_cauchy_schwarz_gap: f64,
}

#[derive(Serialize)]
struct VerifyResult {
    decomposition: DecompositionType,
    reconstruction: Option<ReconstructionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reconstruction_error: Option<String>,
    curvature: CurvatureSummary,
    gen_gr: GenGrSummary,
}

fn cmd_verify(a: &RunArgs) -> Result<Output, CliError> {
    let p = load_problem(&a.spec, &a.common)?;
    let (m, u) = (&p.manifold, &p.field);
    let cfg = SplitConfig::from_problem(&p);
    let c = classify_field(m, u, &p.samples, cfg.classify_tol)?;
    let model = decomposition_type(&c)?;
    let base = m
        .normalize(&cfg.base_point)
        .filter(|w| m.domain.admissible(&w.point))
        .ok_or_else(|| CliError::spec(format!("base point {:?} is outside the domain", cfg.base_point)))?
        .point;
    let leaves = if m.leaf_function().is_some() {
        leaf_samples(m, &base, cfg.leaf_points, cfg.seed)?
    } else {
        vec![base]
    };
    let (recon, reconstruction_error) = match reconstruct_and_verify(m, u, &leaves, &cfg.t_grid, model, &cfg.flow) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let cr = curvature_conditions(m, u, &p.samples, cfg.classify_tol)?;
    let gg = gen_gr_check_normalized(m, u, &p.samples, cfg.classify_tol)?;

    if let Some(path) = &a.common.emit_table {
        let rc = recon
            .as_ref()
            .ok_or_else(|| CliError::numerical("no residual grid was produced"))?;
        let mut t = String::from("time,leaf,residual\n");
        for (node, r) in &rc.residuals {
            let _ = writeln!(t, "{:e},{},{r:e}", node.t, node.leaf);
        }
        write_table(path, &t)?;
    }

    let result = VerifyResult {
        decomposition: model,
        reconstruction: recon.as_ref().map(|r| ReconstructionSummary {
            model: r.model,
            nodes: r.nodes,
            max_residual: r.max_residual,
            rms_residual: r.rms_residual,
            worst: r.worst,
            unreachable: r.unreachable.len(),
            tolerance: cfg.reconstruction_tol,
            passed: r.max_residual < cfg.reconstruction_tol,
        }),
        reconstruction_error,
        curvature: CurvatureSummary {
            applicable: cr.applicable,
            div_u_signs: cr.div_u_signs,
            ric_u_signs: cr.ric_u_signs,
            max_div_residual: cr.max_div_residual,
            max_ricci_residual: cr.max_ricci_residual,
        },
        gen_gr: GenGrSummary {
            orth_irrotational: gg.orth_irrotational,
            divergence_condition: gg.divergence_condition,
            ricci_nonnegative: gg.ricci_nonnegative,
            equality_case: gg.equality_case,
            max_equality_residual: gg.max_equality_residual,
            max_bochner_residual: gg.max_bochner_residual,
            min_cauchy_schwarz_gap: gg.min_cauchy_schwarz_gap,
        },
    };
    let text = match a.common.format {
        Format::Machine => machine("verify", Some(&p), &result),
        Format::Human => {
            let mut out = format!("{}\ndecomposition: {}\n", p.name, result.decomposition);
            match &result.reconstruction {
                Some(r) => {
                    let _ = writeln!(
                        out,
                        "reconstruction: max residual {}  rms {}  nodes {}  unreachable {}  {}",
                        sci(r.max_residual),
                        sci(r.rms_residual),
                        r.nodes,
                        r.unreachable,
                        if r.passed { "ok" } else { "above tolerance" }
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "reconstruction failed: {}",
                        result.reconstruction_error.as_deref().unwrap_or("")
                    );
                }
            }
            let cv = &result.curvature;
            let _ = writeln!(
                out,
                "divU identity: max residual {}  signs pos {} neg {} zero {}{}",
                sci(cv.max_div_residual),
                cv.div_u_signs.positive,
                cv.div_u_signs.negative,
                cv.div_u_signs.zero,
                if cv.applicable { "" } else { "  (not closed conformal)" }
            );
            let _ = writeln!(
                out,
                "Ric(U) identity: max residual {}  signs pos {} neg {} zero {}",
                sci(cv.max_ricci_residual),
                cv.ric_u_signs.positive,
                cv.ric_u_signs.negative,
                cv.ric_u_signs.zero
            );
            let g = &result.gen_gr;
            let _ = writeln!(
                out,
                "Bochner residual {}  divergence condition {}  Ric(E) >= 0 {}  equality {}",
                sci(g.max_bochner_residual),
                g.divergence_condition,
                g.ricci_nonnegative,
                g.equality_case
            );
            out
        }
    };
    Ok(Output { text, code: EXIT_OK })
}

// ---- fixtures ----

#[derive(Serialize)]
struct FixtureEntry<'a> {
    id: &'a str,
    name: &'a str,
    decomposition: DecompositionType,
    verdict: String,
    source: &'a str,
}

#[derive(Serialize)]
struct FixtureRun {
    check: Option<FixtureCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    passed: bool,
}

fn check_line(c: &FixtureCheck) -> String {
    let mut s = format!(
        "{} {:<4} {:<26} {}",
        if c.passed() { "PASS" } else { "FAIL" },
        c.id,
        c.name,
        c.verdict_text
    );
    for m in &c.flag_mismatches {
        let _ = write!(s, "; {} expected {} got {}", m.flag, m.expected, m.actual);
    }
    if c.expected_decomposition != c.decomposition {
        let _ = write!(s, "; decomposition expected {} got {}", c.expected_decomposition, c.decomposition);
    }
    if c.expected_verdict != c.verdict {
        let _ = write!(s, "; verdict expected {}", c.expected_verdict);
    }
    s
}

fn run_one(f: &fixtures::Fixture) -> FixtureRun {
    match fixtures::run_fixture(f) {
        Ok((check, _)) => FixtureRun {
            passed: check.passed(),
            check: Some(check),
            error: None,
        },
        Err(e) => FixtureRun {
            check: None,
            error: Some(e.to_string()),
            passed: false,
        },
    }
}

fn human_run(f: &fixtures::Fixture, r: &FixtureRun) -> String {
    match (&r.check, &r.error) {
        (Some(c), _) => check_line(c),
        (None, e) => format!("FAIL {:<4} {:<26} error: {}", f.id, f.name(), e.as_deref().unwrap_or("")),
    }
}

fn export_name(f: &fixtures::Fixture) -> String {
    format!("{}-{}.toml", f.id, f.name())
}

fn cmd_fixtures(a: &FixtureArgs) -> Result<Output, CliError> {
    let catalog = fixtures::catalog();
    if let Some(dir) = &a.export {
        std::fs::create_dir_all(dir).map_err(|e| CliError::spec(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for f in &catalog {
            let path = dir.join(export_name(f));
            write_table(&path, &f.spec.to_toml())?;
            written.push(path.display().to_string());
        }
        let text = match a.format {
            Format::Machine => machine::<Vec<String>>("fixtures", None, &written),
            Format::Human => written.iter().map(|w| format!("{w}\n")).collect(),
        };
        return Ok(Output { text, code: EXIT_OK });
    }
    if a.run_all || a.name.is_some() {
        let selected: Vec<fixtures::Fixture> = match &a.name {
            Some(key) => vec![fixtures::find(key).ok_or_else(|| CliError::spec(format!("no fixture `{key}`")))?],
            None => catalog,
        };
        let runs: Vec<FixtureRun> = selected.iter().map(run_one).collect();
        let code = if runs.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_MISMATCH };
        let text = match a.format {
            Format::Machine => machine("fixtures", None, &runs),
            Format::Human => {
                let mut out: String = selected.iter().zip(&runs).map(|(f, r)| human_run(f, r) + "\n").collect();
                let passed = runs.iter().filter(|r| r.passed).count();
                let _ = writeln!(out, "{passed}/{} fixtures match", runs.len());
                out
            }
        };
        return Ok(Output { text, code });
    }
    let entries: Vec<FixtureEntry> = catalog
        .iter()
        .map(|f| FixtureEntry {
            id: f.id,
            name: f.name(),
            decomposition: f.decomposition,
            verdict: f.verdict.to_string(),
            source: f.source,
        })
        .collect();
    let text = match a.format {
        Format::Machine => machine("fixtures", None, &entries),
        Format::Human => entries
            .iter()
            .map(|e| format!("{:<4} {:<26} {:<13} {}\n", e.id, e.name, e.decomposition, e.verdict))
            .collect(),
    };
    Ok(Output { text, code: EXIT_OK })
}
