use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use cms_core::approx::{
    dichotomy_report, glue_periodic_approximation, DichotomyParams, GlueParams, Typicality,
};
use cms_core::measures::{convex_combo, Measure};
use cms_core::num::{format_rational, int, rat, Mass};
use cms_core::potential::Potential;
use cms_core::properties::{classify, FProperty, RomeStatus, TriState};
use cms_core::symbol::{bar, Symbol, INF};
use cms_core::thermo::{
    dual_vp_check, pressure, s_infinity, FamilySpec, OptimizerParams, PressureMethod,
    PressureParams,
};
use cms_core::topology::{
    diagnose_convergence, weakstar_distance, DiagnoseOptions, LimitClass, MetricConfig,
};
use cms_core::{ApproxError, ShiftPresentation, ThermoError, TopologyError};
use serde::Serialize;
use serde_json::{json, Value};

use crate::input;
use crate::output::{num, opt_num, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Refused or undecided.
    Refused,
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub report: Value,
    pub table: Option<Table>,
}

impl Outcome {
    fn ok<T: Serialize>(report: &T) -> Result<Self> {
        Ok(Outcome {
            status: Status::Success,
            report: serde_json::to_value(report)?,
            table: None,
        })
    }

    fn refused(command: &str, reason: impl ToString) -> Result<Self> {
        Ok(Outcome {
            status: Status::Refused,
            report: json!({ "command": command, "status": "refused", "reason": reason.to_string() }),
            table: None,
        })
    }

    fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// F-property, finite uniform Rome and related facts of a presentation.
    Classify(ClassifyArgs),
    /// Gurevich pressure of a potential.
    Pressure(PressureArgs),
    /// Critical inverse temperature `s∞` of a potential.
    SInfinity(SInfinityArgs),
    /// Convergence diagnosis of a measure sequence.
    Converge(ConvergeArgs),
    /// Periodic approximation of an average of targets by orbit gluing.
    Approximate(ApproximateArgs),
    /// Which branch of the F-property dichotomy the shift falls into.
    Dichotomy(DichotomyArgs),
    /// Numerical check of the dual variational principle.
    Dualvp(DualvpArgs),
    /// Built-in worked examples.
    #[command(subcommand)]
    Demo(Demo),
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub shift: PathBuf,
    /// Search cap for semi-decidable properties.
    #[arg(long, default_value_t = 64)]
    pub cap: usize,
}

#[derive(Args, Debug)]
pub struct PressureArgs {
    #[arg(long)]
    pub shift: PathBuf,
    #[arg(long)]
    pub potential: PathBuf,
    /// auto, truncation, loop, partition or closed_form.
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[arg(long, default_value_t = 256)]
    pub max_symbols: usize,
    #[arg(long, default_value_t = 30)]
    pub period: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct SInfinityArgs {
    #[arg(long)]
    pub shift: PathBuf,
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub shift: PathBuf,
    #[arg(long)]
    pub sequence: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// Symbols enumerated by the metric before the `∞` slot.
    #[arg(long, default_value_t = 16)]
    pub cap: usize,
    /// Normalised limit candidate.
    #[arg(long)]
    pub candidate: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub cauchy_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub additivity_tol: f64,
}

#[derive(Args, Debug)]
pub struct ApproximateArgs {
    #[arg(long)]
    pub shift: PathBuf,
    /// A measure or a list of measures.
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 16)]
    pub cap: usize,
    /// Candidate glued orbits; the closest to the target average is kept.
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct DichotomyArgs {
    #[arg(long)]
    pub shift: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub targets: usize,
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 8)]
    pub cap: usize,
}

#[derive(Args, Debug)]
pub struct DualvpArgs {
    #[arg(long)]
    pub shift: PathBuf,
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long)]
    pub symbols: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
}

#[derive(Subcommand, Debug)]
pub enum Demo {
    /// `Periodic((1,n))` on the full shift: mass 1/2 stays on `[1]` and escapes from every `[1,s]`.
    EscapeFullShift(EscapeArgs),
}

#[derive(Args, Debug)]
pub struct EscapeArgs {
    /// Largest `n`; the table runs over `4, 8, …` up to it.
    #[arg(long, default_value_t = 256)]
    pub n_max: u64,
    /// Columns `[1,s]` for `s ≤ columns`.
    #[arg(long, default_value_t = 8)]
    pub columns: Symbol,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 16)]
    pub cap: usize,
}

pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::Classify(a) => run_classify(a),
        Command::Pressure(a) => run_pressure(a),
        Command::SInfinity(a) => run_s_infinity(a),
        Command::Converge(a) => run_converge(a),
        Command::Approximate(a) => run_approximate(a),
        Command::Dichotomy(a) => run_dichotomy(a),
        Command::Dualvp(a) => run_dualvp(a),
        Command::Demo(Demo::EscapeFullShift(a)) => run_escape_demo(a),
    }
}

fn thermo_refusal(e: &ThermoError) -> bool {
    matches!(
        e,
        ThermoError::Diverged(_)
            | ThermoError::TailSeriesDiverges(_)
            | ThermoError::MethodUnsupported(_)
            | ThermoError::HypothesisViolated(_)
            | ThermoError::PotentialTooDeep(_)
            | ThermoError::NotIrreducible
    )
}

fn approx_refusal(e: &ApproxError) -> bool {
    matches!(
        e,
        ApproxError::FPropertyHolds
            | ApproxError::FPropertyUndecided(_)
            | ApproxError::TargetsNotFinitelySupported
            | ApproxError::ConnectorNotFound { .. }
    )
}

fn run_classify(a: &ClassifyArgs) -> Result<Outcome> {
    let shift = input::shift(&a.shift)?;
    let report = classify(&shift, a.cap)?;
    let undecided = matches!(report.f_property, FProperty::Unknown { .. })
        || matches!(report.finite_uniform_rome, RomeStatus::Unknown { .. })
        || report.finite_entropy == TriState::Unknown
        || report.locally_compact == TriState::Unknown;
    let mut out = Outcome::ok(&report)?;
    if undecided {
        out.status = Status::Refused;
    }
    Ok(out)
}

fn run_pressure(a: &PressureArgs) -> Result<Outcome> {
    let shift = input::shift(&a.shift)?;
    let phi = input::potential(&a.potential)?;
    let Some(method) = PressureMethod::from_name(&a.method) else {
        bail!("unknown pressure method {:?}", a.method);
    };
    let params = PressureParams {
        max_symbols: a.max_symbols,
        cauchy_tol: a.tol,
        period: a.period,
        ..PressureParams::default()
    };
    match pressure(&shift, &phi, method, &params) {
        Ok(est) => {
            let mut table = Table::default()
                .meta("command", "pressure")
                .meta(
                    "method",
                    serde_json::to_value(est.method)?.as_str().unwrap_or(""),
                )
                .meta("cauchy_tol", num(params.cauchy_tol))
                .meta("ceiling", num(params.ceiling))
                .column("size", "truncation size or period")
                .column(
                    "value",
                    format!("estimate at this size; final error bound {:?}", est.bound),
                );
            for s in &est.steps {
                table.push(vec![s.size.to_string(), num(s.value)]);
            }
            Ok(Outcome::ok(&est)?.with_table(table))
        }
        Err(e) if thermo_refusal(&e) => Outcome::refused("pressure", e),
        Err(e) => Err(e.into()),
    }
}

fn run_s_infinity(a: &SInfinityArgs) -> Result<Outcome> {
    let shift = input::shift(&a.shift)?;
    let phi = input::potential(&a.potential)?;
    Outcome::ok(&s_infinity(&shift, &phi, a.tol))
}

#[derive(Serialize)]
struct ConvergeOutput {
    indices: Vec<u64>,
    depth: usize,
    cap: usize,
    report: cms_core::topology::ConvergenceReport,
}

fn run_converge(a: &ConvergeArgs) -> Result<Outcome> {
    let shift = input::shift(&a.shift)?;
    let (indices, seq) = input::sequence(&a.sequence, &shift)?;
    let candidate = a
        .candidate
        .as_ref()
        .map(|p| input::measure(p, &shift))
        .transpose()?;
    let config = MetricConfig::new(&shift, a.cap, a.depth);
    let opts = DiagnoseOptions {
        cauchy_tol: a.cauchy_tol,
        additivity_tol: a.additivity_tol,
        candidate,
    };
    let report = match diagnose_convergence(&seq, &config, &opts) {
        Ok(r) => r,
        Err(e @ (TopologyError::NotConverged(_) | TopologyError::TooShort { .. })) => {
            return Outcome::refused("converge", e)
        }
        Err(e) => return Err(e.into()),
    };
    let shown: Vec<Symbol> = config.alphabet().iter().copied().take(4).collect();
    let mut table = Table::default()
        .meta("command", "converge")
        .meta("depth", a.depth)
        .meta("cap", a.cap)
        .meta("cauchy_tol", num(a.cauchy_tol))
        .meta("additivity_tol", num(a.additivity_tol))
        .column("n", "sequence index");
    for s in &shown {
        table = table.column(&format!("mass_{s}"), "mass of the one-symbol cylinder");
    }
    table = table
        .column(
            "cylinder_to_candidate",
            format!("truncated at depth {} over {} symbols", a.depth, a.cap),
        )
        .column(
            "weakstar_to_candidate",
            format!(
                "truncated at depth {} over {} symbols plus the ∞ slot",
                a.depth, a.cap
            ),
        );
    for (i, (n, mu)) in indices.iter().zip(&seq).enumerate() {
        let mut row = vec![n.to_string()];
        row.extend(shown.iter().map(|&s| num(mu.mass_word(&[s]).to_f64())));
        let d = report.table.get(i);
        row.push(opt_num(d.and_then(|r| r.cylinder_to_candidate)));
        row.push(opt_num(d.and_then(|r| r.weakstar_to_candidate)));
        table.push(row);
    }
    let out = ConvergeOutput {
        indices,
        depth: a.depth,
        cap: a.cap,
        report,
    };
    Ok(Outcome::ok(&out)?.with_table(table))
}

#[derive(Serialize)]
struct ApproximateOutput {
    n: usize,
    seed: u64,
    depth: usize,
    weakstar_to_average: f64,
    tail_bound: f64,
    measure: Measure,
    plan: cms_core::approx::GluingPlan,
}

fn run_approximate(a: &ApproximateArgs) -> Result<Outcome> {
    let shift = input::shift(&a.shift)?;
    let targets = input::measures(&a.targets, &shift)?;
    if targets.is_empty() {
        bail!("{}: no targets", a.targets.display());
    }
    let config = MetricConfig::new(&shift, a.cap, a.depth);
    let params = GlueParams {
        samples: a.samples,
        typicality: Typicality::Metric(config.clone()),
        ..GlueParams::default()
    };
    let (measure, plan) = match glue_periodic_approximation(&shift, &targets, a.n, a.seed, &params)
    {
        Ok(r) => r,
        Err(e) if approx_refusal(&e) => return Outcome::refused("approximate", e),
        Err(e) => return Err(e.into()),
    };
    let k = targets.len() as i64;
    let average = convex_combo(vec![rat(1, k); targets.len()], targets)?;
    let d = weakstar_distance(&measure, &average, &config);
    Outcome::ok(&ApproximateOutput {
        n: a.n,
        seed: a.seed,
        depth: a.depth,
        weakstar_to_average: d.value,
        tail_bound: d.tail_bound,
        measure,
        plan,
    })
}

fn run_dichotomy(a: &DichotomyArgs) -> Result<Outcome> {
    let shift = input::shift(&a.shift)?;
    let params = DichotomyParams {
        targets: a.targets,
        tau: a.tau,
        depth: a.depth,
        alphabet: a.cap,
        seed: a.seed,
        ..DichotomyParams::default()
    };
    match dichotomy_report(&shift, &params) {
        Ok(r) => Outcome::ok(&r),
        Err(e) if approx_refusal(&e) => Outcome::refused("dichotomy", e),
        Err(e) => Err(e.into()),
    }
}

fn run_dualvp(a: &DualvpArgs) -> Result<Outcome> {
    let shift = input::shift(&a.shift)?;
    let phi: Potential = input::potential(&a.potential)?;
    let mu = input::measure(&a.measure, &shift)?;
    let params = OptimizerParams {
        seed: a.seed,
        restarts: a.restarts,
        ..OptimizerParams::default()
    };
    let family = FamilySpec {
        depth: a.depth,
        symbols: a.symbols,
    };
    match dual_vp_check(&shift, &phi, &mu, family, &params) {
        Ok(r) => Outcome::ok(&r),
        Err(e) if thermo_refusal(&e) => Outcome::refused("dualvp", e),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct EscapeRow {
    n: u64,
    /// `μ_n([1])` and `μ_n([1,s])`, exact.
    masses: Vec<String>,
    weakstar_to_limit: f64,
}

#[derive(Serialize)]
struct EscapeDemo {
    sequence: &'static str,
    limit: &'static str,
    columns: Vec<String>,
    depth: usize,
    cap: usize,
    rows: Vec<EscapeRow>,
    classification: LimitClass,
    lambda: f64,
}

fn exact(m: Mass) -> Result<String> {
    match m.exact() {
        Some(r) => Ok(format_rational(r)),
        None => bail!("periodic masses are exact"),
    }
}

/// `mu_1_3` reads as the mass of the cylinder `[1 3]`.
fn cylinder_label(column: &str) -> String {
    let symbols: Vec<&str> = column.split('_').skip(1).collect();
    format!("mass of [{}]", symbols.join(" "))
}

fn run_escape_demo(a: &EscapeArgs) -> Result<Outcome> {
    if a.n_max < 4 {
        bail!("--n-max must be at least 4");
    }
    let full = ShiftPresentation::FullShift;
    let config = MetricConfig::new(&full, a.cap, a.depth);
    let limit = Measure::periodic(&full, &bar(&[1, INF]))?;
    let ns: Vec<u64> = std::iter::successors(Some(4u64), |n| n.checked_mul(2))
        .take_while(|&n| n <= a.n_max)
        .collect();
    let seq: Vec<Measure> = ns
        .iter()
        .map(|&n| Measure::periodic(&full, &cms_core::symbol::lift(&[1, n])))
        .collect::<Result<_, _>>()?;
    let mut columns = vec!["mu_1".to_string()];
    columns.extend((1..=a.columns).map(|s| format!("mu_1_{s}")));
    let mut table = Table::default()
        .meta("command", "demo escape-full-shift")
        .meta("sequence", "Periodic((1,n)) on the full shift")
        .meta("depth", a.depth)
        .meta("cap", a.cap)
        .column("n", "sequence index");
    for c in &columns {
        table = table.column(
            c,
            format!("{}, exact rational, no truncation", cylinder_label(c)),
        );
    }
    table = table.column(
        "weakstar_to_limit",
        format!(
            "distance to Periodic((1,∞)) truncated at depth {} over {} symbols plus the ∞ slot",
            a.depth, a.cap
        ),
    );
    let mut rows = Vec::new();
    for (&n, mu) in ns.iter().zip(&seq) {
        let mut masses = vec![exact(mu.mass_word(&[1]))?];
        for s in 1..=a.columns {
            masses.push(exact(mu.mass_word(&[1, s]))?);
        }
        debug_assert_eq!(masses[0], format_rational(&(int(1) / int(2))));
        let d = weakstar_distance(mu, &limit, &config).value;
        let mut row = vec![n.to_string()];
        row.extend(masses.iter().cloned());
        row.push(num(d));
        table.push(row);
        rows.push(EscapeRow {
            n,
            masses,
            weakstar_to_limit: d,
        });
    }
    let diag = diagnose_convergence(&seq, &config, &DiagnoseOptions::default())?;
    let demo = EscapeDemo {
        sequence: "Periodic((1,n))",
        limit: "Periodic((1,∞))",
        columns,
        depth: a.depth,
        cap: a.cap,
        rows,
        classification: diag.classification,
        lambda: diag.lambda,
    };
    Ok(Outcome::ok(&demo)?.with_table(table))
}
