//! Linear factor graphs for one robot configuration.
//!
//! With `q` and `q̇` known, the acceleration, wrench-balance and torque
//! equations are linear in the remaining unknowns (`V̇ᵢ`, `ℱᵢ`, `q̈ᵢ`, `τᵢ`).
//! Each equation becomes one [`LinearFactor`] stored as `A·x = b`, with every
//! known term collected in `b`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use thiserror::Error;

use crate::robot::{compute_twists, RobotModel};
use crate::spatial::{ad, Twist, Wrench};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("variable {0} is not in the graph")]
    UnknownKey(String),
}

/// Anything usable as a variable identifier in a linear graph.
pub trait Key: Clone + Ord + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync {}
impl<T: Clone + Ord + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync> Key for T {}

/// Variable kinds. The declaration order is the tie-break order used by the
/// ordering heuristics (scalar joint variables before spatial ones).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    JointAccel,
    JointTorque,
    TwistAccel,
    Wrench,
    Twist,
}

impl VarKind {
    pub fn dim(self) -> usize {
        match self {
            VarKind::JointAccel | VarKind::JointTorque => 1,
            _ => 6,
        }
    }

    /// Token used in `kind:index` text.
    pub fn token(self) -> &'static str {
        match self {
            VarKind::JointAccel => "qdd",
            VarKind::JointTorque => "tau",
            VarKind::TwistAccel => "vdot",
            VarKind::Wrench => "wrench",
            VarKind::Twist => "twist",
        }
    }

    fn short(self) -> &'static str {
        match self {
            VarKind::JointAccel => "qdd",
            VarKind::JointTorque => "tau",
            VarKind::TwistAccel => "Vdot",
            VarKind::Wrench => "F",
            VarKind::Twist => "V",
        }
    }
}

/// `(kind, index)` with 1-based joint/link index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableKey {
    pub kind: VarKind,
    pub index: usize,
}

impl VariableKey {
    pub fn new(kind: VarKind, index: usize) -> Self {
        Self { kind, index }
    }
    pub fn vdot(i: usize) -> Self {
        Self::new(VarKind::TwistAccel, i)
    }
    pub fn wrench(i: usize) -> Self {
        Self::new(VarKind::Wrench, i)
    }
    pub fn qdd(i: usize) -> Self {
        Self::new(VarKind::JointAccel, i)
    }
    pub fn tau(i: usize) -> Self {
        Self::new(VarKind::JointTorque, i)
    }
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// `kind:index` form, e.g. `tau:3`.
    pub fn to_spec_string(&self) -> String {
        format!("{}:{}", self.kind.token(), self.index)
    }
}

impl fmt::Display for VariableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.short(), self.index)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse variable key `{0}` (expected kind:index with kind in qdd|tau|vdot|wrench|twist)")]
pub struct ParseKeyError(pub String);

impl FromStr for VariableKey {
    type Err = ParseKeyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseKeyError(s.to_string());
        let (kind, index) = s.trim().split_once(':').ok_or_else(err)?;
        let kind = match kind.trim() {
            "qdd" | "a" => VarKind::JointAccel,
            "tau" | "t" => VarKind::JointTorque,
            "vdot" => VarKind::TwistAccel,
            "wrench" | "F" => VarKind::Wrench,
            "twist" | "V" => VarKind::Twist,
            _ => return Err(err()),
        };
        let index: usize = index.trim().parse().map_err(|_| err())?;
        if index == 0 {
            return Err(err());
        }
        Ok(Self { kind, index })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorLabel {
    Twist,
    Acceleration,
    WrenchBalance,
    Torque,
    Prior,
    /// Linearization of a nonlinear factor, or an elimination by-product.
    Linearized,
}

impl FactorLabel {
    pub fn name(self) -> &'static str {
        match self {
            FactorLabel::Twist => "twist",
            FactorLabel::Acceleration => "accel",
            FactorLabel::WrenchBalance => "wrench",
            FactorLabel::Torque => "torque",
            FactorLabel::Prior => "prior",
            FactorLabel::Linearized => "linear",
        }
    }
}

/// One block row `Σ Aₖ·xₖ = b`, scaled by `weight` when evaluating residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFactor<K> {
    pub label: FactorLabel,
    pub index: usize,
    pub terms: Vec<(K, DMatrix<f64>)>,
    pub rhs: DVector<f64>,
    pub weight: f64,
}

impl<K: Key> LinearFactor<K> {
    pub fn new(label: FactorLabel, index: usize, terms: Vec<(K, DMatrix<f64>)>, rhs: DVector<f64>) -> Self {
        Self {
            label,
            index,
            terms,
            rhs,
            weight: 1.0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.iter().map(|(k, _)| k)
    }

    pub fn involves(&self, key: &K) -> bool {
        self.terms.iter().any(|(k, _)| k == key)
    }

    /// Unweighted `A·x − b`.
    pub fn error(&self, values: &BTreeMap<K, DVector<f64>>) -> DVector<f64> {
        let mut r = -self.rhs.clone();
        for (k, a) in &self.terms {
            r += a * &values[k];
        }
        r
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.label.name(), self.index)
    }
}

/// Variables with their dimensions plus the factors over them.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianGraph<K: Key> {
    pub dims: BTreeMap<K, usize>,
    pub factors: Vec<LinearFactor<K>>,
}

impl<K: Key> Default for GaussianGraph<K> {
    fn default() -> Self {
        Self {
            dims: BTreeMap::new(),
            factors: Vec::new(),
        }
    }
}

impl<K: Key> GaussianGraph<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, key: K, dim: usize) {
        self.dims.insert(key, dim);
    }

    /// Adds a factor after checking that every key exists and block shapes agree.
    pub fn add_factor(&mut self, factor: LinearFactor<K>) -> Result<(), FgError> {
        let rows = factor.rows();
        for (k, a) in &factor.terms {
            let dim = *self.dims.get(k).ok_or_else(|| FgError::UnknownKey(k.to_string()))?;
            if a.nrows() != rows || a.ncols() != dim {
                return Err(FgError::DimensionMismatch(format!(
                    "block for {k} in {} is {}x{}, expected {rows}x{dim}",
                    factor.name(),
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        self.factors.push(factor);
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.dims.keys()
    }

    pub fn num_variables(&self) -> usize {
        self.dims.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }

    /// Variables sharing at least one factor with each variable.
    pub fn adjacency(&self) -> BTreeMap<K, BTreeSet<K>> {
        let mut adj: BTreeMap<K, BTreeSet<K>> = self.dims.keys().map(|k| (k.clone(), BTreeSet::new())).collect();
        for f in &self.factors {
            for (a, _) in &f.terms {
                for (b, _) in &f.terms {
                    if a != b {
                        adj.get_mut(a).expect("validated key").insert(b.clone());
                    }
                }
            }
        }
        adj
    }

    /// Euclidean norm of the weighted residual over all factors.
    pub fn residual_norm(&self, values: &BTreeMap<K, DVector<f64>>) -> f64 {
        self.factors
            .iter()
            .map(|f| (f.error(values) * f.weight).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute weighted residual entry over all rows.
    pub fn max_row_residual(&self, values: &BTreeMap<K, DVector<f64>>) -> f64 {
        self.factors
            .iter()
            .map(|f| (f.error(values) * f.weight).amax())
            .fold(0.0, f64::max)
    }
}

/// Dynamics factor graph together with the values of conditioned-out variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DynFactorGraph {
    pub graph: GaussianGraph<VariableKey>,
    pub known: BTreeMap<VariableKey, DVector<f64>>,
    pub dof: usize,
}

fn col(v: &Vector6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 1, v.as_slice())
}

fn mat6(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

fn vec6(v: &Vector6<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

/// Per-configuration quantities shared by the graph builder and the oracles.
#[derive(Debug, Clone)]
pub struct ChainKinematics {
    /// `Ad(T_{i,i−1})` for `i = 1..n` (index `i − 1`).
    pub ad_child_parent: Vec<Matrix6<f64>>,
    pub twists: Vec<Vector6<f64>>,
    /// `Ad(T_{t,n})`, from the last body frame to the tool frame.
    pub ad_tool: Matrix6<f64>,
}

impl ChainKinematics {
    pub fn new(model: &RobotModel, q: &DVector<f64>, qd: &DVector<f64>) -> Self {
        let ad_child_parent = model
            .joints
            .iter()
            .enumerate()
            .map(|(i, j)| j.parent_to_child(q[i]).inverse().adjoint())
            .collect();
        let twists = compute_twists(model, q, qd).into_iter().map(|t| t.0).collect();
        Self {
            ad_child_parent,
            twists,
            ad_tool: model.tool_offset.inverse().adjoint(),
        }
    }
}

/// Builds the unconditioned acceleration / wrench / torque graph using the
/// model's own base acceleration and tool wrench.
pub fn build_dynamics_graph(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
) -> Result<DynFactorGraph, FgError> {
    build_dynamics_graph_with(model, q, qd, &model.base_acceleration, &model.tool_wrench)
}

pub fn build_dynamics_graph_with(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    base_acceleration: &Twist,
    tool_wrench: &Wrench,
) -> Result<DynFactorGraph, FgError> {
    let n = model.dof();
    if q.len() != n || qd.len() != n {
        return Err(FgError::DimensionMismatch(format!(
            "q has {} and qd {} entries for {n} joints",
            q.len(),
            qd.len()
        )));
    }
    let kin = ChainKinematics::new(model, q, qd);
    let mut g = GaussianGraph::new();
    for i in 1..=n {
        g.add_variable(VariableKey::vdot(i), 6);
        g.add_variable(VariableKey::wrench(i), 6);
        g.add_variable(VariableKey::qdd(i), 1);
        g.add_variable(VariableKey::tau(i), 1);
    }
    let eye = DMatrix::<f64>::identity(6, 6);
    for i in 1..=n {
        let axis = model.joint(i).axis.vector();
        let ad_i = &kin.ad_child_parent[i - 1];
        let v_i = &kin.twists[i - 1];

        // V̇ᵢ − Ad·V̇ᵢ₋₁ − 𝒜ᵢq̈ᵢ = [ad_𝒱ᵢ]𝒜ᵢq̇ᵢ
        let mut terms = vec![(VariableKey::vdot(i), eye.clone())];
        let mut rhs = ad(v_i) * axis * qd[i - 1];
        if i > 1 {
            terms.push((VariableKey::vdot(i - 1), -mat6(ad_i)));
        } else {
            rhs += ad_i * base_acceleration.0;
        }
        terms.push((VariableKey::qdd(i), -col(axis)));
        g.add_factor(LinearFactor::new(FactorLabel::Acceleration, i, terms, vec6(&rhs)))?;

        // ℱᵢ − Adᵀ_{i+1,i}ℱᵢ₊₁ − 𝒢ᵢV̇ᵢ = −[ad_𝒱ᵢ]ᵀ𝒢ᵢ𝒱ᵢ
        let gi = model.inertia(i).matrix();
        let mut terms = vec![(VariableKey::wrench(i), eye.clone())];
        let mut rhs = -(ad(v_i).transpose() * gi * v_i);
        if i < n {
            terms.push((VariableKey::wrench(i + 1), -mat6(&kin.ad_child_parent[i].transpose())));
        } else {
            rhs += kin.ad_tool.transpose() * tool_wrench.0;
        }
        terms.push((VariableKey::vdot(i), -mat6(gi)));
        g.add_factor(LinearFactor::new(FactorLabel::WrenchBalance, i, terms, vec6(&rhs)))?;

        // 𝒜ᵢᵀℱᵢ − τᵢ = 0
        let terms = vec![
            (VariableKey::wrench(i), DMatrix::from_row_slice(1, 6, axis.as_slice())),
            (VariableKey::tau(i), DMatrix::from_element(1, 1, -1.0)),
        ];
        g.add_factor(LinearFactor::new(FactorLabel::Torque, i, terms, DVector::zeros(1)))?;
    }
    Ok(DynFactorGraph {
        graph: g,
        known: BTreeMap::new(),
        dof: n,
    })
}

impl DynFactorGraph {
    /// Folds known variables into factor right-hand sides and drops them from
    /// the variable set. Factors left with no unknowns are removed.
    pub fn condition(&self, known: &BTreeMap<VariableKey, DVector<f64>>) -> Result<DynFactorGraph, FgError> {
        for (k, v) in known {
            let dim = *self
                .graph
                .dims
                .get(k)
                .ok_or_else(|| FgError::UnknownKey(k.to_string()))?;
            if v.len() != dim {
                return Err(FgError::DimensionMismatch(format!(
                    "known value for {k} has {} entries, expected {dim}",
                    v.len()
                )));
            }
        }
        let mut out = GaussianGraph::new();
        for (k, d) in &self.graph.dims {
            if !known.contains_key(k) {
                out.add_variable(*k, *d);
            }
        }
        for f in &self.graph.factors {
            let mut rhs = f.rhs.clone();
            let mut terms = Vec::with_capacity(f.terms.len());
            for (k, a) in &f.terms {
                match known.get(k) {
                    Some(x) => rhs -= a * x,
                    None => terms.push((*k, a.clone())),
                }
            }
            if terms.is_empty() {
                continue;
            }
            out.add_factor(LinearFactor {
                label: f.label,
                index: f.index,
                terms,
                rhs,
                weight: f.weight,
            })?;
        }
        let mut all_known = self.known.clone();
        all_known.extend(known.iter().map(|(k, v)| (*k, v.clone())));
        Ok(DynFactorGraph {
            graph: out,
            known: all_known,
            dof: self.dof,
        })
    }

    pub fn unknowns(&self) -> impl Iterator<Item = &VariableKey> {
        self.graph.dims.keys()
    }

    pub fn has_unknown(&self, key: &VariableKey) -> bool {
        self.graph.dims.contains_key(key)
    }

    /// Bipartite DOT: unknowns as ellipses, factors as filled points, and
    /// (when `show_known`) conditioned variables as boxes.
    pub fn to_dot(&self, show_known: bool) -> String {
        let mut s = String::from("graph {\n");
        for k in self.graph.dims.keys() {
            s.push_str(&format!("  \"{k}\" [shape=ellipse];\n"));
        }
        if show_known {
            for k in self.known.keys() {
                s.push_str(&format!("  \"{k}\" [shape=box];\n"));
            }
        }
        for f in &self.graph.factors {
            s.push_str(&format!("  \"{}\" [shape=point, label=\"\"];\n", f.name()));
        }
        for f in &self.graph.factors {
            for k in f.keys() {
                s.push_str(&format!("  \"{}\" -- \"{k}\";\n", f.name()));
            }
        }
        s.push_str("}\n");
        s
    }
}

/// DOT of the complete graph for `n` joints with twist nodes and the known
/// `q`, `q̇` drawn as boxes. Structure only.
pub fn full_graph_dot(n: usize) -> String {
    let mut s = String::from("graph {\n");
    for i in 1..=n {
        for v in ["V", "Vdot", "F", "qdd", "tau"] {
            s.push_str(&format!("  \"{v}{i}\" [shape=ellipse];\n"));
        }
        for v in ["q", "qd"] {
            s.push_str(&format!("  \"{v}{i}\" [shape=box];\n"));
        }
    }
    let mut edges = Vec::new();
    for i in 1..=n {
        let mut twist = vec![format!("V{i}"), format!("q{i}"), format!("qd{i}")];
        let mut accel = vec![
            format!("Vdot{i}"),
            format!("V{i}"),
            format!("q{i}"),
            format!("qd{i}"),
            format!("qdd{i}"),
        ];
        if i > 1 {
            twist.push(format!("V{}", i - 1));
            accel.push(format!("Vdot{}", i - 1));
        }
        let mut wrench = vec![format!("F{i}"), format!("Vdot{i}"), format!("V{i}")];
        if i < n {
            wrench.push(format!("F{}", i + 1));
            wrench.push(format!("q{}", i + 1));
        }
        let torque = vec![format!("F{i}"), format!("tau{i}")];
        for (name, vars) in [
            ("twist", twist),
            ("accel", accel),
            ("wrench", wrench),
            ("torque", torque),
        ] {
            let f = format!("{name}{i}");
            s.push_str(&format!("  \"{f}\" [shape=point, label=\"\"];\n"));
            for v in vars {
                edges.push(format!("  \"{f}\" -- \"{v}\";\n"));
            }
        }
    }
    for e in edges {
        s.push_str(&e);
    }
    s.push_str("}\n");
    s
}

/// Block-sparse matrix form of a graph: one block row per factor, one block
/// column per variable (in key order).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseSystem<K: Key> {
    pub row_dims: Vec<usize>,
    pub col_keys: Vec<K>,
    pub col_dims: Vec<usize>,
    /// `(block_row, block_col, block)`.
    pub blocks: Vec<(usize, usize, DMatrix<f64>)>,
    pub rhs: DVector<f64>,
}

pub fn assemble<K: Key>(graph: &GaussianGraph<K>) -> BlockSparseSystem<K> {
    let col_keys: Vec<K> = graph.dims.keys().cloned().collect();
    let col_dims: Vec<usize> = graph.dims.values().copied().collect();
    let col_of: BTreeMap<&K, usize> = col_keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut blocks = Vec::new();
    let mut rhs = Vec::new();
    let mut row_dims = Vec::new();
    for (r, f) in graph.factors.iter().enumerate() {
        row_dims.push(f.rows());
        for (k, a) in &f.terms {
            blocks.push((r, col_of[k], a * f.weight));
        }
        rhs.extend((&f.rhs * f.weight).iter().copied());
    }
    BlockSparseSystem {
        row_dims,
        col_keys,
        col_dims,
        blocks,
        rhs: DVector::from_vec(rhs),
    }
}

impl<K: Key> BlockSparseSystem<K> {
    pub fn is_empty(&self) -> bool {
        self.row_dims.is_empty() && self.col_keys.is_empty()
    }

    fn offsets(dims: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        out.push(0);
        for d in dims {
            acc += d;
            out.push(acc);
        }
        out
    }

    pub fn col_offsets(&self) -> Vec<usize> {
        Self::offsets(&self.col_dims)
    }

    pub fn to_dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let ro = Self::offsets(&self.row_dims);
        let co = self.col_offsets();
        let mut a = DMatrix::zeros(*ro.last().unwrap(), *co.last().unwrap());
        for (r, c, b) in &self.blocks {
            a.view_mut((ro[*r], co[*c]), (b.nrows(), b.ncols())).copy_from(b);
        }
        (a, self.rhs.clone())
    }

    /// `pattern[r][c]` is true when block `(r, c)` is structurally present.
    pub fn pattern(&self) -> Vec<Vec<bool>> {
        let mut p = vec![vec![false; self.col_keys.len()]; self.row_dims.len()];
        for (r, c, _) in &self.blocks {
            p[*r][*c] = true;
        }
        p
    }

    /// Splits a stacked solution vector back into per-variable values.
    pub fn split(&self, x: &DVector<f64>) -> BTreeMap<K, DVector<f64>> {
        let co = self.col_offsets();
        self.col_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), x.rows(co[i], self.col_dims[i]).into_owned()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::models;

    fn zero_state(n: usize) -> (DVector<f64>, DVector<f64>) {
        (DVector::zeros(n), DVector::zeros(n))
    }

    #[test]
    fn three_link_graph_counts() {
        let m = models::planar_chain(3);
        let (q, qd) = zero_state(3);
        let g = build_dynamics_graph(&m, &q, &qd).unwrap();
        assert_eq!(g.graph.num_variables(), 12);
        assert_eq!(g.graph.num_factors(), 9);
    }

    #[test]
    fn one_link_graph_counts() {
        let m = models::pendulum(1.0, 1.0);
        let (q, qd) = zero_state(1);
        let g = build_dynamics_graph(&m, &q, &qd).unwrap();
        assert_eq!(g.graph.num_variables(), 4);
        assert_eq!(g.graph.num_factors(), 3);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = models::planar_chain(3);
        let r = build_dynamics_graph(&m, &DVector::zeros(2), &DVector::zeros(3));
        assert!(matches!(r, Err(FgError::DimensionMismatch(_))));
    }

    #[test]
    fn conditioning_on_nothing_is_identity() {
        let m = models::planar_chain(2);
        let g = build_dynamics_graph(
            &m,
            &DVector::from_vec(vec![0.3, 0.1]),
            &DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        assert_eq!(g.condition(&BTreeMap::new()).unwrap(), g);
    }

    #[test]
    fn conditioning_rejects_unknown_keys_and_bad_sizes() {
        let m = models::planar_chain(2);
        let (q, qd) = zero_state(2);
        let g = build_dynamics_graph(&m, &q, &qd).unwrap();
        let mut k = BTreeMap::new();
        k.insert(VariableKey::tau(5), DVector::zeros(1));
        assert!(matches!(g.condition(&k), Err(FgError::UnknownKey(_))));
        let mut k = BTreeMap::new();
        k.insert(VariableKey::tau(1), DVector::zeros(2));
        assert!(matches!(g.condition(&k), Err(FgError::DimensionMismatch(_))));
    }

    #[test]
    fn inverse_and_forward_conditioning_leave_nine_groups() {
        let m = models::planar_chain(3);
        let (q, qd) = zero_state(3);
        let g = build_dynamics_graph(&m, &q, &qd).unwrap();
        let qdd: BTreeMap<_, _> = (1..=3).map(|i| (VariableKey::qdd(i), DVector::zeros(1))).collect();
        let id = g.condition(&qdd).unwrap();
        assert_eq!(id.graph.num_factors(), 9);
        assert_eq!(id.graph.num_variables(), 9);
        assert!(id.unknowns().all(|k| k.kind != VarKind::JointAccel));
        let tau: BTreeMap<_, _> = (1..=3).map(|i| (VariableKey::tau(i), DVector::zeros(1))).collect();
        let fd = g.condition(&tau).unwrap();
        assert_eq!(fd.graph.num_factors(), 9);
        assert_eq!(fd.graph.num_variables(), 9);
        assert!(fd.unknowns().all(|k| k.kind != VarKind::JointTorque));
        for f in &fd.graph.factors {
            assert!(f.keys().all(|k| fd.has_unknown(k)));
        }
    }

    #[test]
    fn empty_graph_assembles_to_empty_system() {
        let g: GaussianGraph<VariableKey> = GaussianGraph::new();
        let s = assemble(&g);
        assert!(s.is_empty());
        let (a, b) = s.to_dense();
        assert_eq!((a.nrows(), a.ncols(), b.len()), (0, 0, 0));
    }

    #[test]
    fn key_text_round_trip() {
        for k in [
            VariableKey::tau(3),
            VariableKey::vdot(1),
            VariableKey::wrench(12),
            VariableKey::qdd(2),
        ] {
            assert_eq!(k.to_spec_string().parse::<VariableKey>().unwrap(), k);
        }
        assert!("tau:0".parse::<VariableKey>().is_err());
        assert!("foo:1".parse::<VariableKey>().is_err());
        assert!("tau".parse::<VariableKey>().is_err());
    }

    #[test]
    fn dot_lists_variables_and_factors() {
        let m = models::planar_chain(1);
        let (q, qd) = zero_state(1);
        let g = build_dynamics_graph(&m, &q, &qd).unwrap();
        let dot = g.to_dot(false);
        assert!(dot.starts_with("graph {\n") && dot.ends_with("}\n"));
        assert_eq!(dot.matches("shape=ellipse").count(), 4);
        assert_eq!(dot.matches("shape=point").count(), 3);
        let full = full_graph_dot(3);
        assert_eq!(full.matches("shape=box").count(), 6);
        assert_eq!(full.matches("shape=point").count(), 12);
    }
}
