//! Kinodynamic trajectory optimization over chained dynamics factor graphs.

pub mod config;
pub mod gp;
pub mod graph;
pub mod optimize;
pub mod residuals;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

pub use config::{Initialization, ModelSource, PlanConfig};
pub use gp::{gp_factor_residual, gp_transition, GpPriorParams};
pub use graph::{build_plan_graph, FactorClass, FactorKind, PlanFactor, PlanKey, PlanProblem, PlanVar, Values};
pub use optimize::{optimize, OptimizeReport, OptimizerOptions, Termination};
pub use residuals::{friction_cone_residual, hinge_limit_residual, min_torque_residual};

use crate::elim::ElimError;
use crate::robot::{RobotError, RobotModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinoplanError {
    #[error("invalid plan configuration: {0}")]
    Config(String),
    #[error("GP covariance is not symmetric positive definite")]
    NonSpdSigma,
    #[error("optimization produced non-finite values at iteration {0}")]
    DivergedNaN(usize),
    #[error(transparent)]
    Elim(#[from] ElimError),
    #[error(transparent)]
    Robot(#[from] RobotError),
}

/// Sampled joint trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub qd: Vec<DVector<f64>>,
    pub qdd: Vec<DVector<f64>>,
    pub tau: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn from_values(problem: &PlanProblem, values: &Values) -> Self {
        let mut t = Trajectory {
            times: Vec::with_capacity(problem.steps),
            q: Vec::new(),
            qd: Vec::new(),
            qdd: Vec::new(),
            tau: Vec::new(),
        };
        for k in 0..problem.steps {
            let [q, qd, qdd, tau] = problem.joint_state(values, k);
            t.times.push(problem.time(k));
            t.q.push(q);
            t.qd.push(qd);
            t.qdd.push(qdd);
            t.tau.push(tau);
        }
        t
    }

    pub fn dof(&self) -> usize {
        self.q.first().map_or(0, |q| q.len())
    }

    /// `t, q…, qd…, qdd…, tau…`, one row per step.
    pub fn to_csv(&self) -> String {
        let n = self.dof();
        let mut s = String::from("t");
        for name in ["q", "qd", "qdd", "tau"] {
            for j in 1..=n {
                write!(s, ",{name}{j}").unwrap();
            }
        }
        s.push('\n');
        for k in 0..self.times.len() {
            write!(s, "{}", self.times[k]).unwrap();
            for col in [&self.q[k], &self.qd[k], &self.qdd[k], &self.tau[k]] {
                for x in col.iter() {
                    write!(s, ",{x}").unwrap();
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoalCheck {
    pub time: f64,
    pub step: usize,
    /// Largest `|q_j − q*_j|` over targeted joints.
    pub position_error: f64,
    /// Largest `|q̇_j|` (zero when the goal does not ask for rest).
    pub velocity: f64,
    pub met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub class_costs: BTreeMap<String, f64>,
    pub max_dynamics_residual: f64,
    pub max_unactuated_torque: f64,
    pub goals: Vec<GoalCheck>,
    pub goals_met: bool,
}

impl PlanReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub problem: PlanProblem,
    pub values: Values,
    pub trajectory: Trajectory,
    pub report: PlanReport,
    pub optimizer: OptimizeReport,
}

pub fn check_goals(problem: &PlanProblem, values: &Values) -> Vec<GoalCheck> {
    let tol = problem.config.goal_tolerance;
    problem
        .config
        .goals
        .iter()
        .map(|g| {
            let step = problem.config.step_at(g.time).min(problem.steps - 1);
            let [q, qd, _, _] = problem.joint_state(values, step);
            let position_error =
                g.q.iter()
                    .enumerate()
                    .filter_map(|(j, t)| t.map(|t| (q[j] - t).abs()))
                    .fold(0.0, f64::max);
            let velocity = if g.at_rest { qd.amax() } else { 0.0 };
            GoalCheck {
                time: g.time,
                step,
                position_error,
                velocity,
                met: position_error < tol && velocity < tol,
            }
        })
        .collect()
}

/// Builds the graph, initializes, optimizes and summarizes.
pub fn plan(model: &RobotModel, config: &PlanConfig) -> Result<PlanResult, KinoplanError> {
    let problem = build_plan_graph(model, config)?;
    let initial = match config.initialization {
        Initialization::LinearToFinalGoal => problem.initial_values(),
        Initialization::ThroughGoals => problem.initial_values_through_goals(),
    };
    let (values, opt) = optimize(&problem, initial, &OptimizerOptions::from(&config.optimizer))?;
    let goals = check_goals(&problem, &values);
    let actuated = config.actuated.clone().unwrap_or_else(|| vec![true; problem.dof()]);
    let trajectory = Trajectory::from_values(&problem, &values);
    let max_unactuated_torque = trajectory
        .tau
        .iter()
        .flat_map(|t| {
            t.iter()
                .enumerate()
                .filter(|(j, _)| !actuated[*j])
                .map(|(_, x)| x.abs())
        })
        .fold(0.0, f64::max);
    let report = PlanReport {
        iterations: opt.iterations,
        converged: opt.converged,
        termination: opt.termination,
        initial_cost: opt.initial_cost,
        final_cost: opt.final_cost,
        class_costs: optimize::class_costs(&problem, &values),
        max_dynamics_residual: problem.max_dynamics_residual(&values),
        max_unactuated_torque,
        goals_met: goals.iter().all(|g| g.met),
        goals,
    };
    Ok(PlanResult {
        problem,
        values,
        trajectory,
        report,
        optimizer: opt,
    })
}
