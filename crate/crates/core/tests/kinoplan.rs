use std::collections::BTreeMap;

use dynfg::kinoplan::config::{ContactSpec, GoalSpec, Initialization, ModelSource};
use dynfg::kinoplan::graph::{build_plan_graph, FactorClass, FactorKind, PlanKey, PlanProblem, PlanVar, Values};
use dynfg::kinoplan::optimize::{optimize, OptimizerOptions};
use dynfg::kinoplan::plan;
use dynfg::robot::models;
use dynfg::PlanConfig;
use nalgebra::{DVector, Vector3};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

fn base_config(model: ModelSource, horizon: f64, dt: f64) -> PlanConfig {
    let mut c = PlanConfig::cart_pole_two_goal();
    c.model = model;
    c.horizon = horizon;
    c.dt = dt;
    c.goals.clear();
    c.actuated = None;
    c.initialization = Initialization::LinearToFinalGoal;
    c
}

fn random_values(problem: &PlanProblem, rng: &mut StdRng) -> Values {
    problem
        .dims
        .iter()
        .map(|(k, &d)| {
            let scale = match k.var {
                PlanVar::Q => 4.0,
                PlanVar::Wrench(_) => 3.0,
                _ => 1.0,
            };
            (*k, DVector::from_fn(d, |_, _| rng.random_range(-scale..scale)))
        })
        .collect()
}

/// Points within `margin` of a hinge or friction-cone kink.
fn near_kink(problem: &PlanProblem, values: &Values, margin: f64) -> bool {
    problem.factors.iter().any(|f| match &f.kind {
        FactorKind::JointLimit {
            joint,
            lower,
            upper,
            eps,
            ..
        } => {
            let q = values[&f.keys[0]][joint - 1];
            (q - (lower + eps)).abs() < margin || (q - (upper - eps)).abs() < margin
        }
        FactorKind::Friction { mu, normal, .. } => {
            let w = &values[&f.keys[0]];
            let force = Vector3::new(w[3], w[4], w[5]);
            let n = force.dot(normal);
            let t = (force - normal * n).norm();
            t < margin || (t - mu * n).abs() < margin
        }
        _ => false,
    })
}

fn jacobian_test_problem() -> PlanProblem {
    let mut c = base_config(ModelSource::PlanarChain { links: 2 }, 0.1, 0.05);
    c.gravity = Some([0.0, -9.81, 0.0]);
    c.limits.epsilon = 0.2;
    c.contacts = vec![ContactSpec {
        link: 2,
        mu: 0.5,
        normal: [0.0, 1.0, 0.0],
        alpha: 2.0,
    }];
    c.goals = vec![GoalSpec {
        time: 0.1,
        q: vec![Some(0.5), None],
        at_rest: true,
        sigma: 1e-2,
    }];
    c.actuated = Some(vec![true, false]);
    build_plan_graph(&models::planar_chain(2), &c).unwrap()
}

#[test]
fn analytic_jacobians_match_central_differences() {
    let problem = jacobian_test_problem();
    let classes: std::collections::BTreeSet<_> = problem.factors.iter().map(|f| f.class).collect();
    assert_eq!(classes.len(), 8, "every factor class is exercised");
    let mut rng = StdRng::seed_from_u64(11);
    let mut points = 0;
    while points < 100 {
        let values = random_values(&problem, &mut rng);
        if near_kink(&problem, &values, 1e-3) {
            continue;
        }
        points += 1;
        for f in &problem.factors {
            let (_, jac) = problem.linearize(f, &values);
            for (b, k) in f.keys.iter().enumerate() {
                for c in 0..problem.dims[k] {
                    let h = 1e-6;
                    let mut plus = values.clone();
                    plus.get_mut(k).unwrap()[c] += h;
                    let mut minus = values.clone();
                    minus.get_mut(k).unwrap()[c] -= h;
                    let fd = (problem.residual(f, &plus) - problem.residual(f, &minus)) / (2.0 * h);
                    let col = jac[b].column(c);
                    let scale = jac[b].amax().max(f.weight);
                    let err = (col - &fd).amax();
                    assert!(err <= 1e-5 * scale, "{} d/d{k}[{c}]: {err} (scale {scale})", f.name());
                }
            }
        }
    }
}

#[test]
fn two_step_cart_pole_structure() {
    let mut c = base_config(ModelSource::default(), 0.05, 0.05);
    c.actuated = Some(vec![true, false]);
    let p = build_plan_graph(&models::cart_pole(1.0, 0.3, 0.5), &c).unwrap();
    assert_eq!(p.steps, 2);
    assert_eq!(p.dims.len(), 20);
    assert_eq!(p.dims.values().sum::<usize>(), 2 * (4 * 2 + 3 * 2 * 6));
    let mut counts: BTreeMap<FactorClass, usize> = BTreeMap::new();
    for f in &p.factors {
        *counts.entry(f.class).or_default() += 1;
    }
    let expected: BTreeMap<FactorClass, usize> = [
        (FactorClass::Dynamics, 16),
        (FactorClass::ZeroTorque, 2),
        (FactorClass::MinTorque, 2),
        (FactorClass::JointLimit, 2),
        (FactorClass::GpPrior, 1),
        (FactorClass::InitialState, 1),
    ]
    .into_iter()
    .collect();
    assert_eq!(counts, expected);
    let names: Vec<String> = p.factors.iter().take(9).map(|f| f.name()).collect();
    assert_eq!(
        names,
        [
            "twist1@0",
            "accel1@0",
            "wrench1@0",
            "torque1@0",
            "twist2@0",
            "accel2@0",
            "wrench2@0",
            "torque2@0",
            "zero_torque@0"
        ]
    );
    let gp = p.factors.iter().find(|f| f.class == FactorClass::GpPrior).unwrap();
    let keys: Vec<String> = gp.keys.iter().map(|k| k.to_string()).collect();
    assert_eq!(keys, ["q@0", "qd@0", "qdd@0", "q@1", "qd@1", "qdd@1"]);
    for f in &p.factors {
        assert_eq!(f.weight, if f.class.is_hard() { 1e6 } else { 1.0 });
    }
}

#[test]
fn resting_start_is_already_optimal() {
    // Gravity along the joint axes: holding still needs no torque.
    let mut c = base_config(ModelSource::PlanarChain { links: 2 }, 0.5, 0.05);
    c.goals = vec![GoalSpec {
        time: 0.5,
        q: vec![Some(0.0), Some(0.0)],
        at_rest: true,
        sigma: 1e-3,
    }];
    let r = plan(&models::planar_chain(2), &c).unwrap();
    assert!(r.report.converged);
    assert!(r.report.iterations <= 1, "{}", r.report.iterations);
    assert!(r.report.final_cost < 1e-20);
    assert!(r.report.goals_met);
}

fn reach_config(min_torque: bool) -> PlanConfig {
    let mut c = base_config(ModelSource::PlanarChain { links: 2 }, 1.0, 0.05);
    c.gravity = Some([0.0, -9.81, 0.0]);
    c.min_torque.enabled = min_torque;
    c.goals = vec![GoalSpec {
        time: 1.0,
        q: vec![Some(1.0), Some(-0.5)],
        at_rest: true,
        sigma: 1e-3,
    }];
    c
}

fn torque_energy(r: &dynfg::kinoplan::PlanResult) -> f64 {
    r.trajectory.tau.iter().map(|t| t.norm_squared()).sum()
}

#[test]
fn min_torque_factor_lowers_effort() {
    let model = models::planar_chain(2);
    let with = plan(&model, &reach_config(true)).unwrap();
    let without = plan(&model, &reach_config(false)).unwrap();
    for r in [&with, &without] {
        assert!(r.report.converged, "{:?}", r.report.termination);
        assert!(r.report.goals_met);
        assert!(r.report.max_dynamics_residual < 1e-9);
    }
    let (a, b) = (torque_energy(&with), torque_energy(&without));
    assert!(a <= b, "with {a}, without {b}");
    assert!(b - a > 1e-3 * b, "with {a}, without {b}");
}

#[test]
fn accepted_steps_never_increase_cost() {
    let model = models::planar_chain(2);
    let c = reach_config(true);
    let problem = build_plan_graph(&model, &c).unwrap();
    let (_, report) = optimize(
        &problem,
        problem.initial_values(),
        &OptimizerOptions::from(&c.optimizer),
    )
    .unwrap();
    assert!(report.cost_history.len() >= 2);
    for w in report.cost_history.windows(2) {
        assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
    }
    assert_eq!(report.final_cost, *report.cost_history.last().unwrap());
}

#[test]
fn restored_values_satisfy_dynamics_exactly() {
    let model = models::cart_pole(1.0, 0.3, 0.5);
    let mut c = PlanConfig::cart_pole_two_goal();
    c.horizon = 1.0;
    c.goals.clear();
    let problem = build_plan_graph(&model, &c).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let mut values = random_values(&problem, &mut rng);
    problem.restore_dynamics(&mut values).unwrap();
    assert!(problem.max_dynamics_residual(&values) < 1e-9);
    for k in 0..problem.steps {
        assert!(values[&PlanKey::new(k, PlanVar::Tau)][1].abs() < 1e-9);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let model = models::planar_chain(2);
    let mut c = reach_config(true);
    c.horizon = 0.0;
    assert!(matches!(
        build_plan_graph(&model, &c),
        Err(dynfg::KinoplanError::Config(_))
    ));
    let mut c = reach_config(true);
    c.goals[0].q.pop();
    assert!(build_plan_graph(&model, &c).is_err());
    let mut c = reach_config(true);
    c.contacts.push(ContactSpec {
        link: 3,
        mu: 0.5,
        normal: [0.0, 0.0, 1.0],
        alpha: 1.0,
    });
    assert!(build_plan_graph(&model, &c).is_err());
}
