//! Inverse, forward and hybrid dynamics by factor-graph elimination, plus the
//! classical recursive algorithms they are checked against.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use thiserror::Error;

use crate::elim::{self, DagStats, ElimError, EliminationDag, OrderingChoice, OrderingTag};
use crate::fgcore::{build_dynamics_graph, DynFactorGraph, FgError, VariableKey};
use crate::robot::{JointState, RobotError, RobotModel};
use crate::spatial::{ad, Twist, Wrench};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynError {
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Graph(#[from] FgError),
    #[error(transparent)]
    Elim(#[from] ElimError),
    #[error("joint {0} must have exactly one of acceleration and torque given")]
    BadKnownSet(usize),
    #[error("mass matrix block is singular")]
    SingularMassMatrix,
}

/// Every joint and link quantity after a dynamics solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsResult {
    pub qdd: DVector<f64>,
    pub tau: DVector<f64>,
    pub twists: Vec<Twist>,
    pub accelerations: Vec<Twist>,
    pub wrenches: Vec<Wrench>,
    pub residual_norm: f64,
    pub stats: DagStats,
    pub tag: OrderingTag,
}

/// The conditioned linear graph for one robot state.
#[derive(Debug, Clone)]
pub struct DynamicsProblem<'a> {
    pub model: &'a RobotModel,
    pub state: JointState,
    pub full: DynFactorGraph,
    pub conditioned: DynFactorGraph,
}

impl<'a> DynamicsProblem<'a> {
    pub fn new(model: &'a RobotModel, state: JointState) -> Result<Self, DynError> {
        let n = model.dof();
        state.check(n)?;
        let mut known = BTreeMap::new();
        for i in 0..n {
            match (state.qdd_known[i], state.tau_known[i]) {
                (true, false) => {
                    known.insert(VariableKey::qdd(i + 1), DVector::from_element(1, state.qdd[i]));
                }
                (false, true) => {
                    known.insert(VariableKey::tau(i + 1), DVector::from_element(1, state.tau[i]));
                }
                _ => return Err(DynError::BadKnownSet(i + 1)),
            }
        }
        let full = build_dynamics_graph(model, &state.q, &state.qd)?;
        let conditioned = full.condition(&known)?;
        Ok(Self {
            model,
            state,
            full,
            conditioned,
        })
    }

    pub fn ordering(&self, choice: &OrderingChoice) -> Result<elim::Ordering<VariableKey>, DynError> {
        Ok(choice.compute(&self.conditioned.graph)?)
    }

    pub fn symbolic(&self, choice: &OrderingChoice) -> Result<EliminationDag<VariableKey>, DynError> {
        let o = self.ordering(choice)?;
        Ok(elim::symbolic_eliminate(&self.conditioned.graph, &o)?)
    }

    pub fn solve(&self, choice: &OrderingChoice) -> Result<DynamicsResult, DynError> {
        let o = self.ordering(choice)?;
        let sol = elim::solve(&self.conditioned.graph, &o)?;
        let n = self.model.dof();
        let get = |k: VariableKey| -> DVector<f64> {
            sol.values
                .get(&k)
                .or_else(|| self.conditioned.known.get(&k))
                .cloned()
                .expect("every variable is known or solved")
        };
        let six = |k: VariableKey| Vector6::from_column_slice(get(k).as_slice());
        Ok(DynamicsResult {
            qdd: DVector::from_fn(n, |i, _| get(VariableKey::qdd(i + 1))[0]),
            tau: DVector::from_fn(n, |i, _| get(VariableKey::tau(i + 1))[0]),
            twists: crate::robot::compute_twists(self.model, &self.state.q, &self.state.qd),
            accelerations: (1..=n).map(|i| Twist(six(VariableKey::vdot(i)))).collect(),
            wrenches: (1..=n).map(|i| Wrench(six(VariableKey::wrench(i)))).collect(),
            residual_norm: sol.residual_norm,
            stats: sol.stats,
            tag: sol.tag,
        })
    }
}

pub fn inverse_dynamics(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    ordering: &OrderingChoice,
) -> Result<DynamicsResult, DynError> {
    let state = JointState::inverse(q.clone(), qd.clone(), qdd.clone());
    DynamicsProblem::new(model, state)?.solve(ordering)
}

pub fn forward_dynamics(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    tau: &DVector<f64>,
    ordering: &OrderingChoice,
) -> Result<DynamicsResult, DynError> {
    let state = JointState::forward(q.clone(), qd.clone(), tau.clone());
    DynamicsProblem::new(model, state)?.solve(ordering)
}

pub fn hybrid_dynamics(
    model: &RobotModel,
    state: &JointState,
    ordering: &OrderingChoice,
) -> Result<DynamicsResult, DynError> {
    DynamicsProblem::new(model, state.clone())?.solve(ordering)
}

/// `Σ ½ 𝒱ᵢᵀ𝒢ᵢ𝒱ᵢ`.
pub fn kinetic_energy(model: &RobotModel, q: &DVector<f64>, qd: &DVector<f64>) -> f64 {
    crate::robot::compute_twists(model, q, qd)
        .iter()
        .enumerate()
        .map(|(i, v)| 0.5 * v.0.dot(&(model.inertia(i + 1).matrix() * v.0)))
        .sum()
}

/// Recursive Newton-Euler, composite-rigid-body, articulated-body and
/// Featherstone hybrid algorithms, written directly on the chain without any
/// graph machinery.
pub mod recursive {
    use super::*;
    use crate::fgcore::ChainKinematics;

    #[derive(Debug, Clone, PartialEq)]
    pub struct RneaOutput {
        pub tau: DVector<f64>,
        pub accelerations: Vec<Vector6<f64>>,
        pub wrenches: Vec<Vector6<f64>>,
    }

    fn check_len(model: &RobotModel, vs: &[&DVector<f64>]) -> Result<(), DynError> {
        let n = model.dof();
        if vs.iter().any(|v| v.len() != n) {
            return Err(RobotError::Invalid(format!("vector length does not match {n} joints")).into());
        }
        Ok(())
    }

    pub fn rnea_with(
        model: &RobotModel,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        qdd: &DVector<f64>,
        base_acceleration: &Vector6<f64>,
        tool_wrench: &Vector6<f64>,
    ) -> Result<RneaOutput, DynError> {
        check_len(model, &[q, qd, qdd])?;
        let n = model.dof();
        let kin = ChainKinematics::new(model, q, qd);
        let mut acc = Vec::with_capacity(n);
        let mut prev = *base_acceleration;
        for i in 0..n {
            let a = model.joints[i].axis.vector();
            let v = kin.twists[i];
            let vd = kin.ad_child_parent[i] * prev + a * qdd[i] + ad(&v) * a * qd[i];
            acc.push(vd);
            prev = vd;
        }
        let mut wrenches = vec![Vector6::zeros(); n];
        let mut tau = DVector::zeros(n);
        let mut child = kin.ad_tool.transpose() * tool_wrench;
        for i in (0..n).rev() {
            let g = model.inertia(i + 1).matrix();
            let v = kin.twists[i];
            let f = child + g * acc[i] - ad(&v).transpose() * g * v;
            tau[i] = model.joints[i].axis.vector().dot(&f);
            wrenches[i] = f;
            if i > 0 {
                child = kin.ad_child_parent[i].transpose() * f;
            }
        }
        Ok(RneaOutput {
            tau,
            accelerations: acc,
            wrenches,
        })
    }

    pub fn rnea(
        model: &RobotModel,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        qdd: &DVector<f64>,
    ) -> Result<DVector<f64>, DynError> {
        Ok(rnea_with(model, q, qd, qdd, &model.base_acceleration.0, &model.tool_wrench.0)?.tau)
    }

    /// Joint-space mass matrix by composite rigid-body inertias.
    pub fn crba(model: &RobotModel, q: &DVector<f64>) -> Result<DMatrix<f64>, DynError> {
        check_len(model, &[q])?;
        let n = model.dof();
        let kin = ChainKinematics::new(model, q, &DVector::zeros(n));
        let mut composite: Vec<Matrix6<f64>> = (1..=n).map(|i| *model.inertia(i).matrix()).collect();
        for i in (1..n).rev() {
            let adj = kin.ad_child_parent[i];
            let add = adj.transpose() * composite[i] * adj;
            composite[i - 1] += add;
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut f = composite[i] * model.joints[i].axis.vector();
            m[(i, i)] = model.joints[i].axis.vector().dot(&f);
            for j in (0..i).rev() {
                f = kin.ad_child_parent[j + 1].transpose() * f;
                let v = model.joints[j].axis.vector().dot(&f);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    /// Articulated-body forward dynamics.
    pub fn aba(
        model: &RobotModel,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        tau: &DVector<f64>,
    ) -> Result<DVector<f64>, DynError> {
        check_len(model, &[q, qd, tau])?;
        let n = model.dof();
        let kin = ChainKinematics::new(model, q, qd);
        let axes: Vec<Vector6<f64>> = model.joints.iter().map(|j| *j.axis.vector()).collect();
        let bias_acc: Vec<Vector6<f64>> = (0..n).map(|i| ad(&kin.twists[i]) * axes[i] * qd[i]).collect();
        let mut ia: Vec<Matrix6<f64>> = (1..=n).map(|i| *model.inertia(i).matrix()).collect();
        let mut pa: Vec<Vector6<f64>> = (0..n)
            .map(|i| -(ad(&kin.twists[i]).transpose() * ia[i] * kin.twists[i]))
            .collect();
        pa[n - 1] += kin.ad_tool.transpose() * model.tool_wrench.0;
        let mut u_vec = vec![Vector6::zeros(); n];
        let mut d = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in (0..n).rev() {
            u_vec[i] = ia[i] * axes[i];
            d[i] = axes[i].dot(&u_vec[i]);
            if d[i].abs() < 1e-14 {
                return Err(DynError::SingularMassMatrix);
            }
            u[i] = tau[i] - axes[i].dot(&pa[i]);
            if i > 0 {
                let ia_art = ia[i] - u_vec[i] * u_vec[i].transpose() / d[i];
                let pa_art = pa[i] + ia_art * bias_acc[i] + u_vec[i] * (u[i] / d[i]);
                let adj = kin.ad_child_parent[i];
                let add_i = adj.transpose() * ia_art * adj;
                let add_p = adj.transpose() * pa_art;
                ia[i - 1] += add_i;
                pa[i - 1] += add_p;
            }
        }
        let mut qdd = DVector::zeros(n);
        let mut prev = model.base_acceleration.0;
        for i in 0..n {
            let a = kin.ad_child_parent[i] * prev + bias_acc[i];
            qdd[i] = (u[i] - u_vec[i].dot(&a)) / d[i];
            prev = a + axes[i] * qdd[i];
        }
        Ok(qdd)
    }

    /// Hybrid dynamics: the known-torque joints are solved from the reduced
    /// mass matrix with every known acceleration applied, then the remaining
    /// torques come from one more inverse-dynamics pass.
    pub fn featherstone_hybrid(
        model: &RobotModel,
        state: &JointState,
    ) -> Result<(DVector<f64>, DVector<f64>), DynError> {
        let n = model.dof();
        state.check(n)?;
        for i in 0..n {
            if state.qdd_known[i] == state.tau_known[i] {
                return Err(DynError::BadKnownSet(i + 1));
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| state.tau_known[i]).collect();
        let mut qdd = DVector::from_fn(n, |i, _| if state.qdd_known[i] { state.qdd[i] } else { 0.0 });
        if !free.is_empty() {
            let bias = rnea(model, &state.q, &state.qd, &qdd)?;
            let m = crba(model, &state.q)?;
            let k = free.len();
            let mff = DMatrix::from_fn(k, k, |a, b| m[(free[a], free[b])]);
            let rhs = DVector::from_fn(k, |a, _| state.tau[free[a]] - bias[free[a]]);
            let sol = mff.cholesky().ok_or(DynError::SingularMassMatrix)?.solve(&rhs);
            for (a, &i) in free.iter().enumerate() {
                qdd[i] = sol[a];
            }
        }
        let tau = rnea(model, &state.q, &state.qd, &qdd)?;
        Ok((qdd, tau))
    }
}

#[cfg(test)]
mod tests {
    use super::recursive::*;
    use super::*;
    use crate::robot::models;

    #[test]
    fn pendulum_falls_at_g_when_horizontal() {
        let m = models::pendulum(1.0, 1.0);
        let r = forward_dynamics(
            &m,
            &DVector::zeros(1),
            &DVector::zeros(1),
            &DVector::zeros(1),
            &OrderingChoice::Aba,
        )
        .unwrap();
        assert!((r.qdd[0] + 9.81).abs() < 1e-12, "{}", r.qdd[0]);
        let qdd = aba(&m, &DVector::zeros(1), &DVector::zeros(1), &DVector::zeros(1)).unwrap();
        assert!((qdd[0] + 9.81).abs() < 1e-12);
    }

    #[test]
    fn graph_agrees_with_recursions_on_3r() {
        let m = models::planar_chain(3);
        let q = DVector::from_vec(vec![0.3, -0.7, 1.1]);
        let qd = DVector::from_vec(vec![0.5, 0.2, -0.4]);
        let qdd = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let id = inverse_dynamics(&m, &q, &qd, &qdd, &OrderingChoice::Rnea).unwrap();
        let tau = rnea(&m, &q, &qd, &qdd).unwrap();
        assert!((&id.tau - &tau).amax() < 1e-10);
        let fd = forward_dynamics(&m, &q, &qd, &tau, &OrderingChoice::Crba).unwrap();
        assert!((&fd.qdd - &qdd).amax() < 1e-10);
        let ab = aba(&m, &q, &qd, &tau).unwrap();
        assert!((&ab - &qdd).amax() < 1e-10);
    }

    #[test]
    fn both_known_is_rejected() {
        let m = models::planar_chain(2);
        let mut s = JointState::inverse(DVector::zeros(2), DVector::zeros(2), DVector::zeros(2));
        s.tau_known[1] = true;
        assert_eq!(DynamicsProblem::new(&m, s).unwrap_err(), DynError::BadKnownSet(2));
    }

    #[test]
    fn wrong_ordering_class() {
        let m = models::planar_chain(2);
        let err = forward_dynamics(
            &m,
            &DVector::zeros(2),
            &DVector::zeros(2),
            &DVector::zeros(2),
            &OrderingChoice::Rnea,
        )
        .unwrap_err();
        assert!(matches!(err, DynError::Elim(ElimError::WrongProblemClass { .. })));
    }
}
