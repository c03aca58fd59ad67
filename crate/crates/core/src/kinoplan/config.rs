//! JSON plan description.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KinoplanError;
use crate::robot::{load_urdf, models, RobotModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    CartPole {
        #[serde(default = "default_cart_mass")]
        cart_mass: f64,
        #[serde(default = "default_pole_mass")]
        pole_mass: f64,
        #[serde(default = "default_pole_length")]
        length: f64,
    },
    PlanarChain {
        links: usize,
    },
    /// Path relative to the configuration file.
    Urdf {
        path: String,
    },
}

impl Default for ModelSource {
    fn default() -> Self {
        ModelSource::CartPole {
            cart_mass: default_cart_mass(),
            pole_mass: default_pole_mass(),
            length: default_pole_length(),
        }
    }
}

fn default_cart_mass() -> f64 {
    1.0
}
fn default_pole_mass() -> f64 {
    0.3
}
fn default_pole_length() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_goal_sigma() -> f64 {
    1e-3
}
fn default_hard_weight() -> f64 {
    1e6
}
fn default_goal_tolerance() -> f64 {
    0.01
}

impl ModelSource {
    pub fn load(&self, base_dir: Option<&Path>) -> Result<RobotModel, KinoplanError> {
        match self {
            ModelSource::CartPole {
                cart_mass,
                pole_mass,
                length,
            } => {
                for (name, v) in [("cart_mass", cart_mass), ("pole_mass", pole_mass), ("length", length)] {
                    if !(*v > 0.0 && v.is_finite()) {
                        return Err(KinoplanError::Config(format!("{name} must be positive")));
                    }
                }
                Ok(models::cart_pole(*cart_mass, *pole_mass, *length))
            }
            ModelSource::PlanarChain { links } => {
                if *links == 0 || *links > 64 {
                    return Err(KinoplanError::Config("planar chain needs 1..=64 links".into()));
                }
                Ok(models::planar_chain(*links))
            }
            ModelSource::Urdf { path } => {
                let full = match base_dir {
                    Some(dir) => dir.join(path),
                    None => Path::new(path).to_path_buf(),
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| KinoplanError::Config(format!("cannot read {}: {e}", full.display())))?;
                Ok(load_urdf(&text)?)
            }
        }
    }
}

/// How the joint trajectory is seeded before optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// Straight line from the start to the last goal, held afterwards.
    #[default]
    LinearToFinalGoal,
    /// Piecewise linear through every goal in time order.
    ThroughGoals,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartState {
    /// Empty means all zeros.
    #[serde(default)]
    pub q: Vec<f64>,
    #[serde(default)]
    pub qd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub time: f64,
    /// `null` leaves a coordinate free.
    pub q: Vec<Option<f64>>,
    /// Also drive every joint velocity to zero.
    #[serde(default = "default_true")]
    pub at_rest: bool,
    #[serde(default = "default_goal_sigma")]
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    /// Isotropic power-spectral density.
    #[serde(default = "GpSpec::default_qc")]
    pub qc: f64,
}

impl GpSpec {
    fn default_qc() -> f64 {
        1.0
    }
}

impl Default for GpSpec {
    fn default() -> Self {
        Self { enabled: true, qc: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "LimitSpec::default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl LimitSpec {
    fn default_alpha() -> f64 {
        10.0
    }
}

impl Default for LimitSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            alpha: 10.0,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinTorqueSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "MinTorqueSpec::default_sigma")]
    pub sigma: f64,
}

impl MinTorqueSpec {
    fn default_sigma() -> f64 {
        10.0
    }
}

impl Default for MinTorqueSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            sigma: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSpec {
    /// 1-based link whose wrench carries the contact force.
    pub link: usize,
    pub mu: f64,
    /// Unit surface normal in the link frame.
    pub normal: [f64; 3],
    #[serde(default = "ContactSpec::default_alpha")]
    pub alpha: f64,
}

impl ContactSpec {
    fn default_alpha() -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default = "OptimizerSpec::default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "OptimizerSpec::default_lambda")]
    pub lambda_initial: f64,
    #[serde(default = "OptimizerSpec::default_rel")]
    pub relative_tolerance: f64,
    #[serde(default = "OptimizerSpec::default_step")]
    pub step_tolerance: f64,
    #[serde(default = "default_true")]
    pub restore_dynamics: bool,
}

impl OptimizerSpec {
    fn default_max_iterations() -> usize {
        500
    }
    fn default_lambda() -> f64 {
        1e-4
    }
    fn default_rel() -> f64 {
        1e-8
    }
    fn default_step() -> f64 {
        1e-10
    }
}

impl Default for OptimizerSpec {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(default)]
    pub model: ModelSource,
    /// Seconds.
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub start: StartState,
    #[serde(default)]
    pub goals: Vec<GoalSpec>,
    /// Per joint; absent means fully actuated.
    #[serde(default)]
    pub actuated: Option<Vec<bool>>,
    #[serde(default)]
    pub gravity: Option<[f64; 3]>,
    #[serde(default)]
    pub gp: GpSpec,
    #[serde(default)]
    pub limits: LimitSpec,
    #[serde(default)]
    pub min_torque: MinTorqueSpec,
    #[serde(default)]
    pub contacts: Vec<ContactSpec>,
    #[serde(default = "default_hard_weight")]
    pub hard_weight: f64,
    #[serde(default)]
    pub initialization: Initialization,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default = "default_goal_tolerance")]
    pub goal_tolerance: f64,
}

impl PlanConfig {
    pub fn from_json(text: &str) -> Result<Self, KinoplanError> {
        serde_json::from_str(text).map_err(|e| KinoplanError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The two-goal cart-pole swing task with default physical parameters.
    pub fn cart_pole_two_goal() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            model: ModelSource::default(),
            horizon: 10.0,
            dt: 0.05,
            start: StartState::default(),
            goals: vec![
                GoalSpec {
                    time: 3.0,
                    q: vec![Some(1.0), Some(pi)],
                    at_rest: true,
                    sigma: default_goal_sigma(),
                },
                GoalSpec {
                    time: 6.0,
                    q: vec![Some(-1.0), Some(-pi)],
                    at_rest: true,
                    sigma: default_goal_sigma(),
                },
            ],
            actuated: Some(vec![true, false]),
            gravity: None,
            gp: GpSpec::default(),
            limits: LimitSpec::default(),
            min_torque: MinTorqueSpec::default(),
            contacts: Vec::new(),
            hard_weight: default_hard_weight(),
            initialization: Initialization::ThroughGoals,
            optimizer: OptimizerSpec::default(),
            goal_tolerance: default_goal_tolerance(),
        }
    }

    /// Number of states, `horizon / dt + 1`.
    pub fn num_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize + 1
    }

    /// Index of the state nearest to time `t`.
    pub fn step_at(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }

    /// Checks everything that does not depend on the robot.
    pub fn validate(&self) -> Result<(), KinoplanError> {
        let bad = |m: String| Err(KinoplanError::Config(m));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.dt) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !positive(self.horizon) || self.horizon / self.dt > 1e6 {
            return bad(format!("horizon {} is not usable with dt {}", self.horizon, self.dt));
        }
        if self.horizon < self.dt || self.num_steps() < 2 {
            return bad("horizon must span at least two steps".into());
        }
        for g in &self.goals {
            if !(g.time >= 0.0 && g.time <= self.horizon + 0.5 * self.dt) {
                return bad(format!("goal time {} is outside the horizon", g.time));
            }
            if !positive(g.sigma) {
                return bad("goal sigma must be positive".into());
            }
            if g.q.iter().flatten().any(|x| !x.is_finite()) {
                return bad("goal coordinates must be finite".into());
            }
        }
        if self.start.q.iter().chain(&self.start.qd).any(|x| !x.is_finite()) {
            return bad("start state must be finite".into());
        }
        if self.gp.enabled && !positive(self.gp.qc) {
            return bad("gp.qc must be positive".into());
        }
        if self.limits.enabled
            && (!positive(self.limits.alpha) || !(self.limits.epsilon >= 0.0) || !self.limits.epsilon.is_finite())
        {
            return bad("limits need alpha > 0 and epsilon >= 0".into());
        }
        if self.min_torque.enabled && !positive(self.min_torque.sigma) {
            return bad("min_torque.sigma must be positive".into());
        }
        for c in &self.contacts {
            let n = nalgebra::Vector3::from(c.normal);
            if !positive(c.mu) || !positive(c.alpha) || !((n.norm() - 1.0).abs() < 1e-9) {
                return bad(format!(
                    "contact on link {} needs mu > 0, alpha > 0 and a unit normal",
                    c.link
                ));
            }
        }
        if let Some(g) = self.gravity {
            if g.iter().any(|x| !x.is_finite()) {
                return bad("gravity must be finite".into());
            }
        }
        if !positive(self.hard_weight) {
            return bad("hard_weight must be positive".into());
        }
        let o = &self.optimizer;
        if o.max_iterations == 0
            || !positive(o.lambda_initial)
            || !(o.relative_tolerance >= 0.0)
            || !(o.step_tolerance >= 0.0)
        {
            return bad("invalid optimizer settings".into());
        }
        if !positive(self.goal_tolerance) {
            return bad("goal_tolerance must be positive".into());
        }
        Ok(())
    }

    /// Checks the parts that depend on the number of joints.
    pub fn validate_for(&self, n: usize) -> Result<(), KinoplanError> {
        self.validate()?;
        let bad = |m: String| Err(KinoplanError::Config(m));
        if !(self.start.q.is_empty() || self.start.q.len() == n)
            || !(self.start.qd.is_empty() || self.start.qd.len() == n)
        {
            return bad(format!("start state must have {n} entries"));
        }
        if self.goals.iter().any(|g| g.q.len() != n) {
            return bad(format!("every goal needs {n} coordinates"));
        }
        if let Some(a) = &self.actuated {
            if a.len() != n {
                return bad(format!("actuated must list {n} joints"));
            }
        }
        if self.contacts.iter().any(|c| c.link == 0 || c.link > n) {
            return bad(format!("contact links must be in 1..={n}"));
        }
        Ok(())
    }
}
