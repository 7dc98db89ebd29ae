//! Command-line front end: `solve`, `oracle`, `augment` and `validate`.
//!
//! Stdout carries JSON only; diagnostics go to stderr. Failure classes are
//! reported through the exit code:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 1    | unreadable or invalid input               |
//! | 2    | condition R1 violated (trap in the output) |
//! | 3    | oracle enumeration exceeds its caps       |
//! | 4    | numerical failure inside a solver         |

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::augment::{augment, solve_via_augmentation};
use crate::credal::Direction;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::oracle::{brute_force_bounds, simulate_hitting, DEFAULT_STEP_CAP};
use crate::precise::{HittingTimeVector, TransitionMatrix};
use crate::solvers::{check_r1, fixed_point_residual, solve, Method, SolveOptions, SolveReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_R1: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Environment variable capping the worker threads (0 = one per core).
pub const THREADS_ENV: &str = "WIMC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "wimc", version, about = "Expected hitting times for weighted imprecise Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower and/or upper expected hitting times.
    Solve(SolveArgs),
    /// Brute-force bounds over extreme-point matrices, optionally with Monte Carlo checks.
    Oracle(OracleArgs),
    /// Write the unweighted augmented model and its relay-state sidecar.
    Augment(AugmentArgs),
    /// Validate a model and report its size and R1 status.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Lower,
    Upper,
    Both,
}

impl DirectionArg {
    fn directions(self) -> &'static [Direction] {
        match self {
            DirectionArg::Lower => &[Direction::Lower],
            DirectionArg::Upper => &[Direction::Upper],
            DirectionArg::Both => &[Direction::Lower, Direction::Upper],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Policy,
    Value,
    Augmented,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub direction: DirectionArg,
    #[arg(long, value_enum, default_value = "policy")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Include the attaining transition matrices.
    #[arg(long)]
    pub with_matrix: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    pub model: PathBuf,
    /// Monte Carlo trajectories per start state under each attaining matrix.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct AugmentArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Per-state values in state order; `+inf` is written as the string `"inf"`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateValues(pub Vec<(String, f64)>);

impl StateValues {
    pub fn from_vector(m: &Model, h: &HittingTimeVector) -> Self {
        Self(
            m.space()
                .names()
                .iter()
                .cloned()
                .zip(h.iter().copied())
                .collect(),
        )
    }

    pub fn get(&self, state: &str) -> Option<f64> {
        self.0.iter().find(|(s, _)| s == state).map(|(_, v)| *v)
    }
}

impl Serialize for StateValues {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (state, v) in &self.0 {
            if v.is_infinite() && *v > 0.0 {
                map.serialize_entry(state, "inf")?;
            } else {
                map.serialize_entry(state, v)?;
            }
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for StateValues {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ValuesVisitor;

        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Entry {
            Number(f64),
            Text(String),
        }

        impl<'de> Visitor<'de> for ValuesVisitor {
            type Value = StateValues;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from state to number or \"inf\"")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<StateValues, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, Entry>()? {
                    let v = match v {
                        Entry::Number(v) => v,
                        Entry::Text(t) if t == "inf" => f64::INFINITY,
                        Entry::Text(t) => return Err(de::Error::custom(format!("unexpected value `{t}`"))),
                    };
                    out.push((k, v));
                }
                Ok(StateValues(out))
            }
        }

        deserializer.deserialize_map(ValuesVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DirectionTable<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<T>,
}

impl<T> DirectionTable<T> {
    fn set(&mut self, dir: Direction, value: T) {
        match dir {
            Direction::Lower => self.lower = Some(value),
            Direction::Upper => self.upper = Some(value),
        }
    }

    pub fn get(&self, dir: Direction) -> Option<&T> {
        match dir {
            Direction::Lower => self.lower.as_ref(),
            Direction::Upper => self.upper.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub method: String,
    pub iterations: DirectionTable<u64>,
    pub residual: DirectionTable<f64>,
    pub r1: bool,
    pub scale_c: Option<f64>,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub truncated: usize,
}

/// Output document of `solve` and `oracle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub states: Vec<String>,
    pub target: Vec<String>,
    pub results: DirectionTable<StateValues>,
    pub meta: RunMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attaining: Option<DirectionTable<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<DirectionTable<Vec<(String, McEstimate)>>>,
}

impl RunResult {
    fn empty(m: &Model, method: &str) -> Self {
        Self {
            states: m.space().names().to_vec(),
            target: m
                .target()
                .members()
                .iter()
                .map(|&a| m.space().name(a).to_owned())
                .collect(),
            results: DirectionTable::default(),
            meta: RunMeta {
                method: method.to_owned(),
                iterations: DirectionTable::default(),
                residual: DirectionTable::default(),
                r1: true,
                scale_c: None,
                wall_time_s: 0.0,
                seed: None,
            },
            trap: None,
            attaining: None,
            monte_carlo: None,
        }
    }

    fn violated(m: &Model, method: &str) -> Self {
        let mut out = Self::empty(m, method);
        out.meta.r1 = false;
        out.trap = Some(check_r1(m).trap_names(m));
        out
    }
}

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::R1Violated { .. } => EXIT_R1,
        Error::CombinatorialBlowup { .. } => EXIT_BLOWUP,
        Error::SingularSystem { .. } | Error::MaxItersExceeded { .. } | Error::InfeasibleRow(_) => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Model::from_json_str(&text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn matrix_rows(t: &TransitionMatrix) -> Vec<Vec<f64>> {
    t.to_rows()
}

pub fn cmd_solve(args: &SolveArgs) -> Result<RunResult> {
    let m = load_model(&args.model)?;
    let method_name = match args.method {
        MethodArg::Policy => Method::PolicyIteration.as_str(),
        MethodArg::Value => Method::ValueIteration.as_str(),
        MethodArg::Augmented => "augmented",
    };
    if !check_r1(&m).satisfied {
        return Ok(RunResult::violated(&m, method_name));
    }
    let start = Instant::now();
    let mut out = RunResult::empty(&m, method_name);
    let mut attaining = DirectionTable::default();
    for &dir in args.direction.directions() {
        let method = match args.method {
            MethodArg::Value => Method::ValueIteration,
            _ => Method::PolicyIteration,
        };
        let mut opts = SolveOptions::new(method, dir).with_tol(args.tol);
        opts.max_iters = args.max_iters;
        let report: SolveReport = match args.method {
            MethodArg::Augmented => {
                out.meta.scale_c = Some(augment(&m)?.scale());
                solve_via_augmentation(&m, &opts)?
            }
            _ => solve(&m, &opts)?,
        };
        out.results.set(dir, StateValues::from_vector(&m, &report.h));
        out.meta.iterations.set(dir, report.iterations as u64);
        out.meta.residual.set(dir, report.residual);
        attaining.set(dir, matrix_rows(&report.argopt));
    }
    out.meta.wall_time_s = start.elapsed().as_secs_f64();
    if args.with_matrix {
        out.attaining = Some(attaining);
    }
    Ok(out)
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<RunResult> {
    let m = load_model(&args.model)?;
    if !check_r1(&m).satisfied {
        return Ok(RunResult::violated(&m, "brute-force"));
    }
    let start = Instant::now();
    let bounds = brute_force_bounds(&m)?;
    let mut out = RunResult::empty(&m, "brute-force");
    let selections = u64::try_from(bounds.selections).unwrap_or(u64::MAX);
    for (dir, h) in [(Direction::Lower, &bounds.lower), (Direction::Upper, &bounds.upper)] {
        out.results.set(dir, StateValues::from_vector(&m, h));
        out.meta.iterations.set(dir, selections);
        out.meta.residual.set(dir, fixed_point_residual(&m, h, dir));
    }
    out.attaining = Some(DirectionTable {
        lower: Some(matrix_rows(&bounds.argmin)),
        upper: Some(matrix_rows(&bounds.argmax)),
    });
    if let Some(samples) = args.samples {
        out.meta.seed = Some(args.seed);
        let mut mc = DirectionTable::default();
        for (dir, t) in [(Direction::Lower, &bounds.argmin), (Direction::Upper, &bounds.argmax)] {
            let estimates = (0..m.len())
                .map(|x| {
                    let s = simulate_hitting(&m, t, x, samples, args.seed, DEFAULT_STEP_CAP);
                    (
                        m.space().name(x).to_owned(),
                        McEstimate {
                            mean: s.mean,
                            stderr: s.stderr,
                            truncated: s.truncated,
                        },
                    )
                })
                .collect();
            mc.set(dir, estimates);
        }
        out.monte_carlo = Some(mc);
    }
    out.meta.wall_time_s = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Sidecar path next to the augmented model: `out.json` -> `out.sidecar.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "augmented".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.sidecar.json"))
}

pub fn cmd_augment(args: &AugmentArgs) -> Result<serde_json::Value> {
    let m = load_model(&args.model)?;
    let aug = augment(&m)?;
    write_text(&args.out, &aug.model().to_json_pretty())?;
    let sidecar = sidecar_path(&args.out);
    let side = serde_json::to_string_pretty(&aug.sidecar(&m)).expect("sidecar serializes");
    write_text(&sidecar, &side)?;
    Ok(serde_json::json!({
        "model": args.out.display().to_string(),
        "sidecar": sidecar.display().to_string(),
        "states": aug.model().len(),
        "relay_states": aug.edges().len(),
        "scale_c": aug.scale(),
    }))
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<serde_json::Value> {
    let m = load_model(&args.model)?;
    let cert = check_r1(&m);
    Ok(serde_json::json!({
        "valid": true,
        "states": m.len(),
        "support_edges": m.support_graph().len(),
        "target_covers_all": m.target().covers_all(),
        "r1": cert.satisfied,
        "trap": cert.trap_names(&m),
        "model": m.to_raw(),
    }))
}

fn emit(
    value: &impl Serialize,
    out_path: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("results serialize");
    match out_path {
        Some(p) => write_text(p, &text),
        None => writeln!(stdout, "{text}").map_err(|e| Error::Io(e.to_string())),
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = match &cli.command {
        Command::Solve(args) => cmd_solve(args).and_then(|r| {
            emit(&r, args.out.as_deref(), stdout)?;
            Ok(if r.meta.r1 { EXIT_OK } else { EXIT_R1 })
        }),
        Command::Oracle(args) => cmd_oracle(args).and_then(|r| {
            emit(&r, args.out.as_deref(), stdout)?;
            Ok(if r.meta.r1 { EXIT_OK } else { EXIT_R1 })
        }),
        Command::Augment(args) => cmd_augment(args).and_then(|v| {
            emit(&v, None, stdout)?;
            Ok(EXIT_OK)
        }),
        Command::Validate(args) => cmd_validate(args).and_then(|v| {
            if v["target_covers_all"] == serde_json::Value::Bool(true) {
                let _ = writeln!(stderr, "warning: every state is a target; all hitting times are zero");
            }
            emit(&v, args.out.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }),
    };
    match outcome {
        Ok(code) => {
            if code == EXIT_R1 {
                let _ = writeln!(stderr, "error: condition R1 is violated; see \"trap\" in the output");
            }
            code
        }
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            exit_code(&err)
        }
    }
}

/// Sizes the global thread pool from `WIMC_THREADS`; unset or 0 keeps the default.
pub fn configure_threads() {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // a second call in the same process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}
