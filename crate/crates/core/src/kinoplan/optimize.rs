//! Damped Gauss-Newton (Levenberg) on the plan graph, with every linear
//! solve done by variable elimination.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::graph::{PlanKey, PlanProblem, Values};
use super::KinoplanError;
use crate::elim::{self, Ordering};
use crate::fgcore::{FactorLabel, GaussianGraph, LinearFactor};

/// Damping at which a rejected step ends the run.
pub const LAMBDA_MAX: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    pub lambda_initial: f64,
    pub relative_tolerance: f64,
    pub step_tolerance: f64,
    /// Re-solve the link variables from the joint trajectory after every
    /// step, keeping the hard dynamics factors exactly satisfied.
    pub restore_dynamics: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            lambda_initial: 1e-4,
            relative_tolerance: 1e-8,
            step_tolerance: 1e-10,
            restore_dynamics: true,
        }
    }
}

impl From<&super::config::OptimizerSpec> for OptimizerOptions {
    fn from(s: &super::config::OptimizerSpec) -> Self {
        Self {
            max_iterations: s.max_iterations,
            lambda_initial: s.lambda_initial,
            relative_tolerance: s.relative_tolerance,
            step_tolerance: s.step_tolerance,
            restore_dynamics: s.restore_dynamics,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    RelativeDecrease,
    SmallStep,
    /// No damping level produced a cheaper point.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub iterations: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub converged: bool,
    pub termination: Termination,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

/// Keys, Jacobian blocks and negated residual of one linearized factor.
type Linearized = (Vec<PlanKey>, Vec<DMatrix<f64>>, DVector<f64>);

fn linear_system(problem: &PlanProblem, values: &Values) -> Vec<Linearized> {
    // Factors are independent; the ordered collect keeps results identical
    // to a sequential pass.
    problem
        .factors
        .par_iter()
        .map(|f| {
            let (r, jac) = problem.linearize(f, values);
            (f.keys.clone(), jac, -r)
        })
        .collect()
}

fn damped_graph(
    problem: &PlanProblem,
    linear: &[Linearized],
    lambda: f64,
) -> Result<GaussianGraph<PlanKey>, KinoplanError> {
    let mut g = GaussianGraph::new();
    for (k, d) in &problem.dims {
        g.add_variable(*k, *d);
    }
    for (idx, (keys, jac, rhs)) in linear.iter().enumerate() {
        let terms = keys.iter().copied().zip(jac.iter().cloned()).collect();
        g.add_factor(LinearFactor::new(FactorLabel::Linearized, idx, terms, rhs.clone()))
            .map_err(|e| KinoplanError::Config(e.to_string()))?;
    }
    let s = lambda.sqrt();
    for (idx, (k, d)) in problem.dims.iter().enumerate() {
        g.add_factor(LinearFactor::new(
            FactorLabel::Prior,
            idx,
            vec![(*k, DMatrix::identity(*d, *d) * s)],
            DVector::zeros(*d),
        ))
        .map_err(|e| KinoplanError::Config(e.to_string()))?;
    }
    Ok(g)
}

pub fn optimize(
    problem: &PlanProblem,
    initial: Values,
    opts: &OptimizerOptions,
) -> Result<(Values, OptimizeReport), KinoplanError> {
    let mut values = initial;
    if opts.restore_dynamics {
        problem.restore_dynamics(&mut values)?;
    }
    let mut cost = problem.cost(&values);
    if !cost.is_finite() {
        return Err(KinoplanError::DivergedNaN(0));
    }
    let initial_cost = cost;
    let mut history = vec![cost];
    let mut lambda = opts.lambda_initial;
    let mut ordering: Option<Ordering<PlanKey>> = None;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        let linear = linear_system(problem, &values);
        loop {
            let graph = damped_graph(problem, &linear, lambda)?;
            let ord = ordering.get_or_insert_with(|| elim::order_min_degree(&graph));
            let dag = elim::eliminate(&graph, ord)?;
            let delta = elim::back_substitute(&dag)?;
            let step_norm = delta.values().map(|d| d.norm_squared()).sum::<f64>().sqrt();
            if !step_norm.is_finite() {
                return Err(KinoplanError::DivergedNaN(iterations));
            }
            let mut candidate: Values = values.iter().map(|(k, v)| (*k, v + &delta[k])).collect();
            if opts.restore_dynamics {
                problem.restore_dynamics(&mut candidate)?;
            }
            let new_cost = problem.cost(&candidate);
            if new_cost.is_finite() && new_cost < cost {
                let decrease = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                values = candidate;
                cost = new_cost;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-12);
                log::debug!("iteration {iterations}: cost {cost:.6e}, lambda {lambda:.1e}");
                if decrease < opts.relative_tolerance {
                    termination = Termination::RelativeDecrease;
                    break 'outer;
                }
                if step_norm < opts.step_tolerance {
                    termination = Termination::SmallStep;
                    break 'outer;
                }
                break;
            }
            if step_norm < opts.step_tolerance {
                termination = Termination::SmallStep;
                break 'outer;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                termination = Termination::Stalled;
                break 'outer;
            }
        }
    }
    let report = OptimizeReport {
        iterations,
        initial_cost,
        final_cost: cost,
        converged: termination != Termination::MaxIterations,
        termination,
        cost_history: history,
    };
    Ok((values, report))
}

/// Per-class cost with string keys, for reports.
pub fn class_costs(problem: &PlanProblem, values: &Values) -> BTreeMap<String, f64> {
    problem
        .cost_by_class(values)
        .into_iter()
        .map(|(c, v)| (c.name().to_string(), v))
        .collect()
}
