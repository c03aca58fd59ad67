//! Manipulator dynamics as sparse linear factor graphs.
//!
//! The twist, acceleration, wrench and torque relations of a serial chain are
//! expressed as linear factors over per-link unknowns. Inverse, forward and
//! hybrid dynamics become one problem: condition on the knowns, pick an
//! elimination ordering, eliminate into a DAG and back-substitute.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod elim;
pub mod fgcore;
pub mod kinoplan;
pub mod robot;
pub mod spatial;

pub use dynamics::{DynError, DynamicsProblem, DynamicsResult};
pub use elim::{ElimError, Ordering, OrderingChoice, OrderingTag};
pub use fgcore::{FgError, GaussianGraph, VarKind, VariableKey};
pub use kinoplan::{KinoplanError, PlanConfig};
pub use robot::{JointState, RobotError, RobotModel};
pub use spatial::{Pose, SpatialError, SpatialInertia, Twist, Wrench};
