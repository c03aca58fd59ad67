//! Command-line front end: dynamics solves, ordering benchmarks, DOT export
//! and trajectory planning.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dynfg::dynamics::{recursive, DynamicsProblem};
use dynfg::kinoplan::{self, ModelSource};
use dynfg::{
    DynError, ElimError, JointState, KinoplanError, OrderingChoice, PlanConfig, RobotError, RobotModel, Wrench,
};
use nalgebra::{DVector, Vector6};
use serde::Serialize;
use thiserror::Error;

pub mod bench;
pub mod input;

use input::{parse_gravity, parse_known, parse_ordering, parse_vector_of_len, StateSampler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<ElimError> for CliError {
    fn from(e: ElimError) -> Self {
        match e {
            ElimError::WrongProblemClass { .. } | ElimError::InvalidOrdering(_) => CliError::Input(e.to_string()),
            ElimError::StructurallySingular(_) | ElimError::NumericallySingular { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<DynError> for CliError {
    fn from(e: DynError) -> Self {
        match e {
            DynError::Elim(e) => e.into(),
            DynError::SingularMassMatrix => CliError::Numerical(e.to_string()),
            DynError::Robot(_) | DynError::Graph(_) | DynError::BadKnownSet(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<RobotError> for CliError {
    fn from(e: RobotError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<KinoplanError> for CliError {
    fn from(e: KinoplanError) -> Self {
        match e {
            KinoplanError::Elim(e) => e.into(),
            KinoplanError::DivergedNaN(_) => CliError::Numerical(e.to_string()),
            KinoplanError::Config(_) | KinoplanError::NonSpdSigma | KinoplanError::Robot(_) => {
                CliError::Input(e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemClass {
    Inverse,
    Forward,
    Hybrid,
}

impl ProblemClass {
    pub fn name(self) -> &'static str {
        match self {
            ProblemClass::Inverse => "inverse",
            ProblemClass::Forward => "forward",
            ProblemClass::Hybrid => "hybrid",
        }
    }

    pub fn default_ordering(self) -> OrderingChoice {
        match self {
            ProblemClass::Inverse => OrderingChoice::Rnea,
            ProblemClass::Forward => OrderingChoice::Aba,
            ProblemClass::Hybrid => OrderingChoice::MinDegree,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dynfg", version, about = "Manipulator dynamics by factor-graph elimination")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// Robot description (serial chain URDF).
    #[arg(long, global = true)]
    pub urdf: Option<PathBuf>,
    /// rnea, crba, aba, md, colamd, nd, reverse or custom:<file>.
    #[arg(long, global = true)]
    pub ordering: Option<String>,
    /// Gravity vector in the base frame, e.g. 0,0,-9.81.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gravity: Option<String>,
    /// Seed for any state values not given on the command line.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (directory for `plan`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct StateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub qd: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub qdd: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// External wrench on the tool frame, six values (moment first).
    #[arg(long, allow_hyphen_values = true)]
    pub tool_wrench: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HybridMethod {
    Elimination,
    Featherstone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportWhat {
    Graph,
    Dag,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inverse dynamics: torques from accelerations.
    Id(StateArgs),
    /// Forward dynamics: accelerations from torques.
    Fd(StateArgs),
    /// Hybrid dynamics with a per-joint choice of given quantity.
    Hybrid {
        #[command(flatten)]
        state: StateArgs,
        /// One `qdd:<joint>` or `tau:<joint>` per joint (1-based).
        #[arg(long, num_args = 1.., required = true)]
        known: Vec<String>,
        #[arg(long, value_enum, default_value = "elimination")]
        method: HybridMethod,
    },
    /// Fill counts and median solve times (CSV).
    Bench {
        /// Built-in names (pendulum, r<N>, puma6, cartpole) or URDF paths.
        #[arg(long, value_delimiter = ',')]
        robots: Vec<String>,
        #[arg(long, value_delimiter = ',', value_enum, default_value = "inverse")]
        problems: Vec<ProblemClass>,
        /// Defaults to every ordering applicable to the problem class.
        #[arg(long, value_delimiter = ',')]
        orderings: Vec<String>,
        #[arg(long, default_value_t = bench::MIN_REPETITIONS)]
        repetitions: usize,
    },
    /// Factor graph or elimination DAG as Graphviz DOT.
    Export {
        #[arg(long, value_enum, default_value = "inverse")]
        problem: ProblemClass,
        #[arg(long, value_enum, default_value = "graph")]
        what: ExportWhat,
        /// Hybrid problems only.
        #[arg(long, num_args = 1..)]
        known: Vec<String>,
        /// Also draw the conditioned (given) variables.
        #[arg(long)]
        show_known: bool,
        #[command(flatten)]
        state: StateArgs,
    },
    /// Kinodynamic trajectory optimization from a JSON configuration.
    Plan { config: PathBuf },
}

/// What a command produced. Result text goes to stdout (or `--out`),
/// diagnostics to stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub diagnostics: Vec<String>,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            diagnostics: Vec::new(),
            exit_code: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutput {
    pub robot: String,
    pub problem: &'static str,
    pub method: &'static str,
    pub ordering: Option<String>,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    pub tau: Vec<f64>,
    pub residual_norm: f64,
    pub fill_edges: Option<usize>,
    pub max_frontal: Option<usize>,
}

impl SolveOutput {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("output serializes");
        s.push('\n');
        s
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Id(s) => Outcome::ok(solve(g, s, ProblemClass::Inverse, &[], HybridMethod::Elimination)?.to_json()),
        Command::Fd(s) => Outcome::ok(solve(g, s, ProblemClass::Forward, &[], HybridMethod::Elimination)?.to_json()),
        Command::Hybrid { state, known, method } => {
            Outcome::ok(solve(g, state, ProblemClass::Hybrid, known, *method)?.to_json())
        }
        Command::Bench {
            robots,
            problems,
            orderings,
            repetitions,
        } => cmd_bench(g, robots, problems, orderings, *repetitions)?,
        Command::Export {
            problem,
            what,
            known,
            show_known,
            state,
        } => Outcome::ok(cmd_export(g, state, *problem, *what, known, *show_known)?),
        Command::Plan { config } => return cmd_plan(g, config),
    };
    match &g.out {
        Some(path) => {
            write_file(path, &outcome.stdout)?;
            Ok(Outcome {
                stdout: String::new(),
                ..outcome
            })
        }
        None => Ok(outcome),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn load_model(g: &GlobalArgs, state: &StateArgs) -> Result<RobotModel, CliError> {
    let path = g
        .urdf
        .as_ref()
        .ok_or_else(|| CliError::Input("--urdf is required".into()))?;
    let mut model = input::load_urdf_file(path)?;
    if let Some(s) = &g.gravity {
        model = model.with_gravity(parse_gravity(s)?);
    }
    if let Some(s) = &state.tool_wrench {
        let w = parse_vector_of_len(s, 6, "tool-wrench")?;
        model = model.with_tool_wrench(Wrench(Vector6::from_column_slice(w.as_slice())));
    }
    Ok(model)
}

/// Joint state with every value not given drawn from the seeded sampler.
/// All four vectors are always drawn so a given flag never shifts the others.
fn build_state(
    g: &GlobalArgs,
    s: &StateArgs,
    n: usize,
    problem: ProblemClass,
    known: &[String],
) -> Result<JointState, CliError> {
    let mut sampler = StateSampler::new(g.seed.unwrap_or(0));
    let drawn = [sampler.angles(n), sampler.unit(n), sampler.unit(n), sampler.unit(n)];
    let pick = |arg: &Option<String>, what: &str, d: &DVector<f64>| -> Result<DVector<f64>, CliError> {
        match arg {
            Some(text) => parse_vector_of_len(text, n, what),
            None => Ok(d.clone()),
        }
    };
    let q = pick(&s.q, "q", &drawn[0])?;
    let qd = pick(&s.qd, "qd", &drawn[1])?;
    let qdd = pick(&s.qdd, "qdd", &drawn[2])?;
    let tau = pick(&s.tau, "tau", &drawn[3])?;
    Ok(match problem {
        ProblemClass::Inverse => JointState::inverse(q, qd, qdd),
        ProblemClass::Forward => JointState::forward(q, qd, tau),
        ProblemClass::Hybrid => JointState::hybrid(q, qd, qdd, tau, &parse_known(known, n)?),
    })
}

fn ordering_choice(g: &GlobalArgs, problem: ProblemClass) -> Result<OrderingChoice, CliError> {
    match &g.ordering {
        Some(s) => parse_ordering(s),
        None => Ok(problem.default_ordering()),
    }
}

pub fn solve(
    g: &GlobalArgs,
    s: &StateArgs,
    problem: ProblemClass,
    known: &[String],
    method: HybridMethod,
) -> Result<SolveOutput, CliError> {
    let model = load_model(g, s)?;
    let state = build_state(g, s, model.dof(), problem, known)?;
    let to_vec = |v: &DVector<f64>| v.iter().copied().collect::<Vec<_>>();
    if method == HybridMethod::Featherstone {
        let (qdd, tau) = recursive::featherstone_hybrid(&model, &state)?;
        let check = recursive::rnea(&model, &state.q, &state.qd, &qdd)?;
        return Ok(SolveOutput {
            robot: model.name.clone(),
            problem: problem.name(),
            method: "featherstone",
            ordering: None,
            q: to_vec(&state.q),
            qd: to_vec(&state.qd),
            qdd: to_vec(&qdd),
            tau: to_vec(&tau),
            residual_norm: (check - &tau).norm(),
            fill_edges: None,
            max_frontal: None,
        });
    }
    let choice = ordering_choice(g, problem)?;
    let dp = DynamicsProblem::new(&model, state)?;
    let r = dp.solve(&choice)?;
    Ok(SolveOutput {
        robot: model.name.clone(),
        problem: problem.name(),
        method: "elimination",
        ordering: Some(r.tag.to_string()),
        q: to_vec(&dp.state.q),
        qd: to_vec(&dp.state.qd),
        qdd: to_vec(&r.qdd),
        tau: to_vec(&r.tau),
        residual_norm: r.residual_norm,
        fill_edges: Some(r.stats.fill_edges),
        max_frontal: Some(r.stats.max_frontal),
    })
}

fn cmd_bench(
    g: &GlobalArgs,
    robots: &[String],
    problems: &[ProblemClass],
    orderings: &[String],
    repetitions: usize,
) -> Result<Outcome, CliError> {
    let mut models = Vec::new();
    if let Some(path) = &g.urdf {
        models.push((path.display().to_string(), input::load_urdf_file(path)?));
    }
    for name in robots {
        models.push((name.clone(), input::resolve_robot(name)?));
    }
    if models.is_empty() {
        return Err(CliError::Input("no robots given (use --robots or --urdf)".into()));
    }
    if let Some(s) = &g.gravity {
        let gv = parse_gravity(s)?;
        models = models.into_iter().map(|(n, m)| (n, m.with_gravity(gv))).collect();
    }
    let mut choices = orderings
        .iter()
        .map(|s| parse_ordering(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(s) = &g.ordering {
        choices.push(parse_ordering(s)?);
    }
    let spec = bench::BenchSpec {
        robots: models,
        problems: problems.to_vec(),
        orderings: choices,
        repetitions,
        seed: g.seed.unwrap_or(0),
    };
    let report = bench::run_bench(&spec)?;
    let diagnostics = report
        .trends()
        .into_iter()
        .map(|t| {
            format!(
                "trend {}: {} [{}]",
                t.robot,
                t.claim,
                if t.holds { "holds" } else { "VIOLATED" }
            )
        })
        .collect();
    Ok(Outcome {
        stdout: report.to_csv(),
        diagnostics,
        exit_code: 0,
    })
}

fn cmd_export(
    g: &GlobalArgs,
    s: &StateArgs,
    problem: ProblemClass,
    what: ExportWhat,
    known: &[String],
    show_known: bool,
) -> Result<String, CliError> {
    let model = load_model(g, s)?;
    let n = model.dof();
    // Structure does not depend on the values; zeros unless given.
    let zeros = |arg: &Option<String>| arg.clone().or_else(|| Some(vec!["0"; n].join(",")));
    let s = StateArgs {
        q: zeros(&s.q),
        qd: zeros(&s.qd),
        qdd: zeros(&s.qdd),
        tau: zeros(&s.tau),
        tool_wrench: None,
    };
    let state = build_state(g, &s, n, problem, known)?;
    let dp = DynamicsProblem::new(&model, state)?;
    Ok(match what {
        ExportWhat::Graph => dp.conditioned.to_dot(show_known),
        ExportWhat::Dag => dp.symbolic(&ordering_choice(g, problem)?)?.to_dot(),
    })
}

pub fn load_plan_config(path: &Path) -> Result<PlanConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(PlanConfig::from_json(&text)?)
}

fn cmd_plan(g: &GlobalArgs, config_path: &Path) -> Result<Outcome, CliError> {
    let mut config = load_plan_config(config_path)?;
    if let Some(s) = &g.gravity {
        let v = parse_gravity(s)?;
        config.gravity = Some([v[0], v[1], v[2]]);
    }
    if let Some(p) = &g.urdf {
        config.model = ModelSource::Urdf {
            path: p.display().to_string(),
        };
    }
    config.validate()?;
    let base = if g.urdf.is_some() { None } else { config_path.parent() };
    let model = config.model.load(base)?;
    let result = kinoplan::plan(&model, &config)?;

    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let mut report = result.report.to_json();
    report.push('\n');
    write_file(&dir.join("trajectory.csv"), &result.trajectory.to_csv())?;
    write_file(&dir.join("report.json"), &report)?;

    let r = &result.report;
    let mut diagnostics = vec![format!(
        "{} iterations, cost {:.6e} -> {:.6e} ({:?})",
        r.iterations, r.initial_cost, r.final_cost, r.termination
    )];
    let mut exit_code = 0;
    if !r.converged {
        diagnostics.push(format!("optimizer did not converge ({:?})", r.termination));
        exit_code = 2;
    }
    if !r.goals_met {
        diagnostics.push("goals not met within tolerance".into());
        exit_code = 2;
    }
    Ok(Outcome {
        stdout: report,
        diagnostics,
        exit_code,
    })
}
