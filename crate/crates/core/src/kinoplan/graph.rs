//! Nonlinear trajectory factor graph: one dynamics graph per time step,
//! chained by GP priors, plus soft objectives.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix6, Vector3, Vector6};

use super::config::PlanConfig;
use super::gp::{gp_transition, whitener, GpPriorParams};
use super::residuals::{friction_cone_gradient, friction_cone_residual, hinge_limit_derivative, hinge_limit_residual};
use super::KinoplanError;
use crate::dynamics::recursive::{featherstone_hybrid, rnea_with};
use crate::robot::{compute_twists, JointState, RobotModel};
use crate::spatial::{ad, coad_jacobian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlanVar {
    Q,
    Qd,
    Qdd,
    Tau,
    /// Link twist `𝒱ᵢ`.
    Twist(usize),
    /// Link acceleration `V̇ᵢ`.
    Accel(usize),
    Wrench(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanKey {
    pub step: usize,
    pub var: PlanVar,
}

impl PlanKey {
    pub fn new(step: usize, var: PlanVar) -> Self {
        Self { step, var }
    }
}

impl fmt::Display for PlanKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.step;
        match self.var {
            PlanVar::Q => write!(f, "q@{k}"),
            PlanVar::Qd => write!(f, "qd@{k}"),
            PlanVar::Qdd => write!(f, "qdd@{k}"),
            PlanVar::Tau => write!(f, "tau@{k}"),
            PlanVar::Twist(i) => write!(f, "V{i}@{k}"),
            PlanVar::Accel(i) => write!(f, "Vdot{i}@{k}"),
            PlanVar::Wrench(i) => write!(f, "F{i}@{k}"),
        }
    }
}

pub type Values = BTreeMap<PlanKey, DVector<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorClass {
    Dynamics,
    GpPrior,
    JointLimit,
    MinTorque,
    ZeroTorque,
    Friction,
    Goal,
    InitialState,
}

impl FactorClass {
    pub fn name(self) -> &'static str {
        match self {
            FactorClass::Dynamics => "dynamics",
            FactorClass::GpPrior => "gp_prior",
            FactorClass::JointLimit => "joint_limit",
            FactorClass::MinTorque => "min_torque",
            FactorClass::ZeroTorque => "zero_torque",
            FactorClass::Friction => "friction",
            FactorClass::Goal => "goal",
            FactorClass::InitialState => "initial_state",
        }
    }

    /// Hard classes are equalities realized with the large weight.
    pub fn is_hard(self) -> bool {
        matches!(
            self,
            FactorClass::Dynamics | FactorClass::ZeroTorque | FactorClass::InitialState
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorKind {
    Twist {
        link: usize,
    },
    Accel {
        link: usize,
    },
    Wrench {
        link: usize,
    },
    Torque {
        joint: usize,
    },
    Gp {
        phi: DMatrix<f64>,
        whiten: DMatrix<f64>,
    },
    JointLimit {
        joint: usize,
        lower: f64,
        upper: f64,
        alpha: f64,
        eps: f64,
    },
    MinTorque {
        joints: Vec<usize>,
        sigma: f64,
    },
    ZeroTorque {
        joints: Vec<usize>,
    },
    Friction {
        mu: f64,
        normal: Vector3<f64>,
        alpha: f64,
    },
    /// Rows `(q_j − q*_j)` for targeted joints, then `q̇` when at rest.
    Goal {
        target: Vec<Option<f64>>,
        at_rest: bool,
        sigma: f64,
    },
    InitialState {
        q: DVector<f64>,
        qd: DVector<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanFactor {
    pub class: FactorClass,
    pub step: usize,
    pub kind: FactorKind,
    pub keys: Vec<PlanKey>,
    /// Residual multiplier.
    pub weight: f64,
}

impl PlanFactor {
    pub fn name(&self) -> String {
        let what = match &self.kind {
            FactorKind::Twist { link } => format!("twist{link}"),
            FactorKind::Accel { link } => format!("accel{link}"),
            FactorKind::Wrench { link } => format!("wrench{link}"),
            FactorKind::Torque { joint } => format!("torque{joint}"),
            FactorKind::Gp { .. } => "gp".to_string(),
            FactorKind::JointLimit { joint, .. } => format!("limit{joint}"),
            FactorKind::MinTorque { .. } => "min_torque".to_string(),
            FactorKind::ZeroTorque { .. } => "zero_torque".to_string(),
            FactorKind::Friction { .. } => "friction".to_string(),
            FactorKind::Goal { .. } => "goal".to_string(),
            FactorKind::InitialState { .. } => "initial_state".to_string(),
        };
        format!("{what}@{}", self.step)
    }
}

/// The trajectory problem: model, variables and factors.
#[derive(Debug, Clone)]
pub struct PlanProblem {
    pub model: RobotModel,
    pub config: PlanConfig,
    pub steps: usize,
    pub dt: f64,
    pub dims: BTreeMap<PlanKey, usize>,
    pub factors: Vec<PlanFactor>,
}

fn joint_ad(model: &RobotModel, i: usize, qi: f64) -> Matrix6<f64> {
    model.joint(i).parent_to_child(qi).inverse().adjoint()
}

fn v6(v: &DVector<f64>) -> Vector6<f64> {
    Vector6::from_column_slice(v.as_slice())
}

fn dm6(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

/// A 6×n block whose only non-zero column is `col`.
fn single_column(n: usize, col: usize, v: &Vector6<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(6, n);
    m.set_column(col, v);
    m
}

pub fn build_plan_graph(model: &RobotModel, config: &PlanConfig) -> Result<PlanProblem, KinoplanError> {
    let n = model.dof();
    config.validate_for(n)?;
    let mut model = model.clone();
    if let Some(g) = config.gravity {
        model = model.with_gravity(Vector3::from(g));
    }
    let steps = config.num_steps();
    let dt = config.dt;
    let hard = config.hard_weight;
    let mut dims = BTreeMap::new();
    for k in 0..steps {
        for v in [PlanVar::Q, PlanVar::Qd, PlanVar::Qdd, PlanVar::Tau] {
            dims.insert(PlanKey::new(k, v), n);
        }
        for i in 1..=n {
            for v in [PlanVar::Twist(i), PlanVar::Accel(i), PlanVar::Wrench(i)] {
                dims.insert(PlanKey::new(k, v), 6);
            }
        }
    }
    let actuated = config.actuated.clone().unwrap_or_else(|| vec![true; n]);
    let unactuated: Vec<usize> = (0..n).filter(|&j| !actuated[j]).collect();
    let driven: Vec<usize> = (0..n).filter(|&j| actuated[j]).collect();
    let gp = if config.gp.enabled {
        let params = GpPriorParams::isotropic(n, config.gp.qc)?;
        let (phi, sigma) = gp_transition(dt, &params)?;
        Some((phi, whitener(&sigma)?))
    } else {
        None
    };

    let key = |k: usize, v: PlanVar| PlanKey::new(k, v);
    let mut factors = Vec::new();
    for k in 0..steps {
        let dynamics = |kind: FactorKind, keys: Vec<PlanKey>| PlanFactor {
            class: FactorClass::Dynamics,
            step: k,
            kind,
            keys,
            weight: hard,
        };
        for i in 1..=n {
            let mut keys = vec![key(k, PlanVar::Twist(i))];
            if i > 1 {
                keys.push(key(k, PlanVar::Twist(i - 1)));
            }
            keys.extend([key(k, PlanVar::Q), key(k, PlanVar::Qd)]);
            factors.push(dynamics(FactorKind::Twist { link: i }, keys));

            let mut keys = vec![key(k, PlanVar::Accel(i))];
            if i > 1 {
                keys.push(key(k, PlanVar::Accel(i - 1)));
            }
            keys.extend([
                key(k, PlanVar::Q),
                key(k, PlanVar::Qd),
                key(k, PlanVar::Qdd),
                key(k, PlanVar::Twist(i)),
            ]);
            factors.push(dynamics(FactorKind::Accel { link: i }, keys));

            let mut keys = vec![key(k, PlanVar::Wrench(i))];
            if i < n {
                keys.extend([key(k, PlanVar::Wrench(i + 1)), key(k, PlanVar::Q)]);
            }
            keys.extend([key(k, PlanVar::Accel(i)), key(k, PlanVar::Twist(i))]);
            factors.push(dynamics(FactorKind::Wrench { link: i }, keys));

            factors.push(dynamics(
                FactorKind::Torque { joint: i },
                vec![key(k, PlanVar::Wrench(i)), key(k, PlanVar::Tau)],
            ));
        }
        if !unactuated.is_empty() {
            factors.push(PlanFactor {
                class: FactorClass::ZeroTorque,
                step: k,
                kind: FactorKind::ZeroTorque {
                    joints: unactuated.clone(),
                },
                keys: vec![key(k, PlanVar::Tau)],
                weight: hard,
            });
        }
        if config.min_torque.enabled && !driven.is_empty() {
            factors.push(PlanFactor {
                class: FactorClass::MinTorque,
                step: k,
                kind: FactorKind::MinTorque {
                    joints: driven.clone(),
                    sigma: config.min_torque.sigma,
                },
                keys: vec![key(k, PlanVar::Tau)],
                weight: 1.0,
            });
        }
        if config.limits.enabled {
            for j in 1..=n {
                let joint = model.joint(j);
                if joint.has_finite_limits() {
                    factors.push(PlanFactor {
                        class: FactorClass::JointLimit,
                        step: k,
                        kind: FactorKind::JointLimit {
                            joint: j,
                            lower: joint.lower_limit,
                            upper: joint.upper_limit,
                            alpha: config.limits.alpha,
                            eps: config.limits.epsilon,
                        },
                        keys: vec![key(k, PlanVar::Q)],
                        weight: 1.0,
                    });
                }
            }
        }
        for c in &config.contacts {
            factors.push(PlanFactor {
                class: FactorClass::Friction,
                step: k,
                kind: FactorKind::Friction {
                    mu: c.mu,
                    normal: Vector3::from(c.normal),
                    alpha: c.alpha,
                },
                keys: vec![key(k, PlanVar::Wrench(c.link))],
                weight: 1.0,
            });
        }
        if let Some((phi, whiten)) = &gp {
            if k + 1 < steps {
                factors.push(PlanFactor {
                    class: FactorClass::GpPrior,
                    step: k,
                    kind: FactorKind::Gp {
                        phi: phi.clone(),
                        whiten: whiten.clone(),
                    },
                    keys: vec![
                        key(k, PlanVar::Q),
                        key(k, PlanVar::Qd),
                        key(k, PlanVar::Qdd),
                        key(k + 1, PlanVar::Q),
                        key(k + 1, PlanVar::Qd),
                        key(k + 1, PlanVar::Qdd),
                    ],
                    weight: 1.0,
                });
            }
        }
    }
    let start_q = if config.start.q.is_empty() {
        DVector::zeros(n)
    } else {
        DVector::from_column_slice(&config.start.q)
    };
    let start_qd = if config.start.qd.is_empty() {
        DVector::zeros(n)
    } else {
        DVector::from_column_slice(&config.start.qd)
    };
    factors.push(PlanFactor {
        class: FactorClass::InitialState,
        step: 0,
        kind: FactorKind::InitialState {
            q: start_q,
            qd: start_qd,
        },
        keys: vec![key(0, PlanVar::Q), key(0, PlanVar::Qd)],
        weight: hard,
    });
    for g in &config.goals {
        let k = config.step_at(g.time).min(steps - 1);
        factors.push(PlanFactor {
            class: FactorClass::Goal,
            step: k,
            kind: FactorKind::Goal {
                target: g.q.clone(),
                at_rest: g.at_rest,
                sigma: g.sigma,
            },
            keys: vec![key(k, PlanVar::Q), key(k, PlanVar::Qd)],
            weight: 1.0,
        });
    }
    Ok(PlanProblem {
        model,
        config: config.clone(),
        steps,
        dt,
        dims,
        factors,
    })
}

impl PlanProblem {
    pub fn dof(&self) -> usize {
        self.model.dof()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Weighted residual and its Jacobian blocks, one per key.
    pub fn linearize(&self, f: &PlanFactor, values: &Values) -> (DVector<f64>, Vec<DMatrix<f64>>) {
        let (r, mut jac) = self.raw_linearize(f, values);
        for j in &mut jac {
            *j *= f.weight;
        }
        (r * f.weight, jac)
    }

    /// Weighted residual only.
    pub fn residual(&self, f: &PlanFactor, values: &Values) -> DVector<f64> {
        self.linearize(f, values).0
    }

    fn raw_linearize(&self, f: &PlanFactor, values: &Values) -> (DVector<f64>, Vec<DMatrix<f64>>) {
        let n = self.dof();
        let k = f.step;
        let get = |v: PlanVar| &values[&PlanKey::new(k, v)];
        match &f.kind {
            FactorKind::Twist { link: i } => {
                let i = *i;
                let q = get(PlanVar::Q);
                let qd = get(PlanVar::Qd);
                let a = *self.model.joint(i).axis.vector();
                let adj = joint_ad(&self.model, i, q[i - 1]);
                let prev = if i > 1 {
                    v6(get(PlanVar::Twist(i - 1)))
                } else {
                    Vector6::zeros()
                };
                let moved = adj * prev;
                let r = v6(get(PlanVar::Twist(i))) - moved - a * qd[i - 1];
                let mut jac = vec![DMatrix::identity(6, 6)];
                if i > 1 {
                    jac.push(-dm6(&adj));
                }
                jac.push(single_column(n, i - 1, &(ad(&a) * moved)));
                jac.push(single_column(n, i - 1, &-a));
                (DVector::from_column_slice(r.as_slice()), jac)
            }
            FactorKind::Accel { link: i } => {
                let i = *i;
                let q = get(PlanVar::Q);
                let qd = get(PlanVar::Qd);
                let qdd = get(PlanVar::Qdd);
                let v = v6(get(PlanVar::Twist(i)));
                let a = *self.model.joint(i).axis.vector();
                let adj = joint_ad(&self.model, i, q[i - 1]);
                let prev = if i > 1 {
                    v6(get(PlanVar::Accel(i - 1)))
                } else {
                    self.model.base_acceleration.0
                };
                let moved = adj * prev;
                let r = v6(get(PlanVar::Accel(i))) - moved - a * qdd[i - 1] - ad(&v) * a * qd[i - 1];
                let mut jac = vec![DMatrix::identity(6, 6)];
                if i > 1 {
                    jac.push(-dm6(&adj));
                }
                jac.push(single_column(n, i - 1, &(ad(&a) * moved)));
                jac.push(single_column(n, i - 1, &-(ad(&v) * a)));
                jac.push(single_column(n, i - 1, &-a));
                jac.push(dm6(&(ad(&a) * qd[i - 1])));
                (DVector::from_column_slice(r.as_slice()), jac)
            }
            FactorKind::Wrench { link: i } => {
                let i = *i;
                let g = *self.model.inertia(i).matrix();
                let v = v6(get(PlanVar::Twist(i)));
                let vd = v6(get(PlanVar::Accel(i)));
                let gv = g * v;
                let mut r = v6(get(PlanVar::Wrench(i))) - g * vd + ad(&v).transpose() * gv;
                let mut jac = vec![DMatrix::identity(6, 6)];
                if i < n {
                    let q = get(PlanVar::Q);
                    let child = v6(get(PlanVar::Wrench(i + 1)));
                    let adj = joint_ad(&self.model, i + 1, q[i]);
                    let a_next = *self.model.joint(i + 1).axis.vector();
                    r -= adj.transpose() * child;
                    jac.push(-dm6(&adj.transpose()));
                    let dq = adj.transpose() * ad(&a_next).transpose() * child;
                    jac.push(single_column(n, i, &dq));
                } else {
                    let ad_tool = self.model.tool_offset.inverse().adjoint();
                    r -= ad_tool.transpose() * self.model.tool_wrench.0;
                }
                jac.push(-dm6(&g));
                jac.push(dm6(&(ad(&v).transpose() * g + coad_jacobian(&gv))));
                (DVector::from_column_slice(r.as_slice()), jac)
            }
            FactorKind::Torque { joint: i } => {
                let i = *i;
                let a = *self.model.joint(i).axis.vector();
                let tau = get(PlanVar::Tau);
                let r = a.dot(&v6(get(PlanVar::Wrench(i)))) - tau[i - 1];
                let mut dtau = DMatrix::zeros(1, n);
                dtau[(0, i - 1)] = -1.0;
                (
                    DVector::from_element(1, r),
                    vec![DMatrix::from_row_slice(1, 6, a.as_slice()), dtau],
                )
            }
            FactorKind::Gp { phi, whiten } => {
                let stack = |step: usize| {
                    let mut x = DVector::zeros(3 * n);
                    for (b, v) in [PlanVar::Q, PlanVar::Qd, PlanVar::Qdd].into_iter().enumerate() {
                        x.rows_mut(b * n, n).copy_from(&values[&PlanKey::new(step, v)]);
                    }
                    x
                };
                let x0 = stack(k);
                let x1 = stack(k + 1);
                let r = whiten * (x1 - phi * x0);
                let prev = -(whiten * phi);
                let mut jac = Vec::with_capacity(6);
                for b in 0..3 {
                    jac.push(prev.columns(b * n, n).into_owned());
                }
                for b in 0..3 {
                    jac.push(whiten.columns(b * n, n).into_owned());
                }
                (r, jac)
            }
            FactorKind::JointLimit {
                joint,
                lower,
                upper,
                alpha,
                eps,
            } => {
                let q = get(PlanVar::Q)[joint - 1];
                let mut d = DMatrix::zeros(1, n);
                d[(0, joint - 1)] = hinge_limit_derivative(q, *lower, *upper, *alpha, *eps);
                (
                    DVector::from_element(1, hinge_limit_residual(q, *lower, *upper, *alpha, *eps)),
                    vec![d],
                )
            }
            FactorKind::MinTorque { joints, sigma } => {
                let tau = get(PlanVar::Tau);
                let r = DVector::from_iterator(joints.len(), joints.iter().map(|&j| tau[j] / sigma));
                let mut d = DMatrix::zeros(joints.len(), n);
                for (row, &j) in joints.iter().enumerate() {
                    d[(row, j)] = 1.0 / sigma;
                }
                (r, vec![d])
            }
            FactorKind::ZeroTorque { joints } => {
                let tau = get(PlanVar::Tau);
                let r = DVector::from_iterator(joints.len(), joints.iter().map(|&j| tau[j]));
                let mut d = DMatrix::zeros(joints.len(), n);
                for (row, &j) in joints.iter().enumerate() {
                    d[(row, j)] = 1.0;
                }
                (r, vec![d])
            }
            FactorKind::Friction { mu, normal, alpha } => {
                let w = &values[&f.keys[0]];
                let force = Vector3::new(w[3], w[4], w[5]);
                let g = friction_cone_gradient(&force, normal, *mu) * *alpha;
                let mut d = DMatrix::zeros(1, 6);
                for c in 0..3 {
                    d[(0, 3 + c)] = g[c];
                }
                (
                    DVector::from_element(1, alpha * friction_cone_residual(&force, normal, *mu)),
                    vec![d],
                )
            }
            FactorKind::Goal { target, at_rest, sigma } => {
                let q = get(PlanVar::Q);
                let qd = get(PlanVar::Qd);
                let picked: Vec<(usize, f64)> = target
                    .iter()
                    .enumerate()
                    .filter_map(|(j, t)| t.map(|t| (j, t)))
                    .collect();
                let rows = picked.len() + if *at_rest { n } else { 0 };
                let mut r = DVector::zeros(rows);
                let mut dq = DMatrix::zeros(rows, n);
                let mut dqd = DMatrix::zeros(rows, n);
                for (row, &(j, t)) in picked.iter().enumerate() {
                    r[row] = (q[j] - t) / sigma;
                    dq[(row, j)] = 1.0 / sigma;
                }
                if *at_rest {
                    for j in 0..n {
                        r[picked.len() + j] = qd[j] / sigma;
                        dqd[(picked.len() + j, j)] = 1.0 / sigma;
                    }
                }
                (r, vec![dq, dqd])
            }
            FactorKind::InitialState { q, qd } => {
                let mut r = DVector::zeros(2 * n);
                r.rows_mut(0, n).copy_from(&(get(PlanVar::Q) - q));
                r.rows_mut(n, n).copy_from(&(get(PlanVar::Qd) - qd));
                let mut dq = DMatrix::zeros(2 * n, n);
                let mut dqd = DMatrix::zeros(2 * n, n);
                dq.view_mut((0, 0), (n, n)).fill_with_identity();
                dqd.view_mut((n, 0), (n, n)).fill_with_identity();
                (r, vec![dq, dqd])
            }
        }
    }

    /// `Σ ‖r‖²` over all factors.
    pub fn cost(&self, values: &Values) -> f64 {
        self.factors
            .iter()
            .map(|f| self.residual(f, values).norm_squared())
            .sum()
    }

    pub fn cost_by_class(&self, values: &Values) -> BTreeMap<FactorClass, f64> {
        let mut out = BTreeMap::new();
        for f in &self.factors {
            *out.entry(f.class).or_insert(0.0) += self.residual(f, values).norm_squared();
        }
        out
    }

    /// Largest unweighted residual entry over the hard dynamics factors.
    pub fn max_dynamics_residual(&self, values: &Values) -> f64 {
        self.factors
            .iter()
            .filter(|f| f.class == FactorClass::Dynamics)
            .map(|f| self.raw_linearize(f, values).0.amax())
            .fold(0.0, f64::max)
    }

    /// Joint trajectory with every link variable and torque filled in from
    /// the recursive Newton-Euler pass, so the dynamics factors vanish.
    pub fn seed_values(&self, q: &[DVector<f64>], qd: &[DVector<f64>], qdd: &[DVector<f64>]) -> Values {
        let n = self.dof();
        let mut values = Values::new();
        for k in 0..self.steps {
            let out = rnea_with(
                &self.model,
                &q[k],
                &qd[k],
                &qdd[k],
                &self.model.base_acceleration.0,
                &self.model.tool_wrench.0,
            )
            .expect("trajectory sized for the model");
            let twists = compute_twists(&self.model, &q[k], &qd[k]);
            values.insert(PlanKey::new(k, PlanVar::Q), q[k].clone());
            values.insert(PlanKey::new(k, PlanVar::Qd), qd[k].clone());
            values.insert(PlanKey::new(k, PlanVar::Qdd), qdd[k].clone());
            values.insert(PlanKey::new(k, PlanVar::Tau), out.tau.clone());
            for i in 1..=n {
                let put = |v: &Vector6<f64>| DVector::from_column_slice(v.as_slice());
                values.insert(PlanKey::new(k, PlanVar::Twist(i)), put(&twists[i - 1].0));
                values.insert(PlanKey::new(k, PlanVar::Accel(i)), put(&out.accelerations[i - 1]));
                values.insert(PlanKey::new(k, PlanVar::Wrench(i)), put(&out.wrenches[i - 1]));
            }
        }
        values
    }

    fn start_q(&self) -> DVector<f64> {
        match self
            .factors
            .iter()
            .find(|f| f.class == FactorClass::InitialState)
            .map(|f| &f.kind)
        {
            Some(FactorKind::InitialState { q, .. }) => q.clone(),
            _ => DVector::zeros(self.dof()),
        }
    }

    /// Piecewise-linear joint positions through `(time, q)` knots, held
    /// constant after the last knot.
    fn interpolate(&self, knots: &[(f64, DVector<f64>)]) -> Vec<DVector<f64>> {
        (0..self.steps)
            .map(|k| {
                let t = self.time(k);
                let seg = knots.windows(2).find(|w| t <= w[1].0);
                match seg {
                    Some(w) => {
                        let (t0, q0) = &w[0];
                        let (t1, q1) = &w[1];
                        let s = if t1 > t0 {
                            ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
                        } else {
                            1.0
                        };
                        q0 + (q1 - q0) * s
                    }
                    None => knots.last().expect("start knot").1.clone(),
                }
            })
            .collect()
    }

    fn goal_knots(&self, all_goals: bool) -> Vec<(f64, DVector<f64>)> {
        let n = self.dof();
        let mut goals: Vec<_> = self.config.goals.iter().collect();
        goals.sort_by(|a, b| a.time.total_cmp(&b.time));
        if !all_goals {
            goals = goals.into_iter().last().into_iter().collect();
        }
        let mut knots = vec![(0.0, self.start_q())];
        for g in goals {
            let prev = knots.last().expect("start knot").1.clone();
            knots.push((g.time, DVector::from_fn(n, |j, _| g.q[j].unwrap_or(prev[j]))));
        }
        knots
    }

    fn with_positions(&self, q: &[DVector<f64>]) -> Values {
        let mut values = Values::new();
        for (key, dim) in &self.dims {
            let v = if key.var == PlanVar::Q {
                q[key.step].clone()
            } else {
                DVector::zeros(*dim)
            };
            values.insert(*key, v);
        }
        values
    }

    /// Joint positions linearly interpolated from the start to the last goal
    /// (held afterwards); every other variable zero.
    pub fn initial_values(&self) -> Values {
        self.with_positions(&self.interpolate(&self.goal_knots(false)))
    }

    /// Like [`Self::initial_values`] but passing through every goal in time order.
    pub fn initial_values_through_goals(&self) -> Values {
        self.with_positions(&self.interpolate(&self.goal_knots(true)))
    }

    /// Recomputes every dynamics-determined variable from `(q, q̇, q̈)` so the
    /// hard factors hold exactly. Unactuated joints get zero torque and the
    /// acceleration that goes with it.
    pub fn restore_dynamics(&self, values: &mut Values) -> Result<(), KinoplanError> {
        let n = self.dof();
        let actuated = self.config.actuated.clone().unwrap_or_else(|| vec![true; n]);
        let underactuated = actuated.iter().any(|a| !a);
        for k in 0..self.steps {
            let [q, qd, mut qdd, _] = self.joint_state(values, k);
            if underactuated {
                let state = JointState::hybrid(q.clone(), qd.clone(), qdd.clone(), DVector::zeros(n), &actuated);
                qdd = featherstone_hybrid(&self.model, &state)
                    .map_err(|e| KinoplanError::Config(e.to_string()))?
                    .0;
            }
            let out = rnea_with(
                &self.model,
                &q,
                &qd,
                &qdd,
                &self.model.base_acceleration.0,
                &self.model.tool_wrench.0,
            )
            .map_err(|e| KinoplanError::Config(e.to_string()))?;
            let twists = compute_twists(&self.model, &q, &qd);
            let mut tau = out.tau;
            for j in 0..n {
                if !actuated[j] {
                    tau[j] = 0.0;
                }
            }
            values.insert(PlanKey::new(k, PlanVar::Qdd), qdd);
            values.insert(PlanKey::new(k, PlanVar::Tau), tau);
            for i in 1..=n {
                let put = |v: &Vector6<f64>| DVector::from_column_slice(v.as_slice());
                values.insert(PlanKey::new(k, PlanVar::Twist(i)), put(&twists[i - 1].0));
                values.insert(PlanKey::new(k, PlanVar::Accel(i)), put(&out.accelerations[i - 1]));
                values.insert(PlanKey::new(k, PlanVar::Wrench(i)), put(&out.wrenches[i - 1]));
            }
        }
        Ok(())
    }

    /// `(q, q̇, q̈, τ)` at step `k`.
    pub fn joint_state(&self, values: &Values, k: usize) -> [DVector<f64>; 4] {
        [PlanVar::Q, PlanVar::Qd, PlanVar::Qdd, PlanVar::Tau].map(|v| values[&PlanKey::new(k, v)].clone())
    }
}
