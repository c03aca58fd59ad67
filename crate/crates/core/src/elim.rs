//! Variable orderings, elimination of a linear factor graph into a DAG, and
//! back-substitution.
//!
//! Eliminating a variable gathers every remaining factor that touches it,
//! stacks their rows and triangularizes them with Householder QR. The top rows
//! give the variable's conditional on its separator (the DAG parents); the
//! remaining rows, if any, become a new factor on the separator. The same
//! kernel covers square and over-determined systems.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::fgcore::{GaussianGraph, Key, ParseKeyError, VarKind, VariableKey};

/// Pivots of the triangular conditional blocks below this are singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Nested dissection hands subgraphs this small to local minimum degree.
pub const ND_LEAF_SIZE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElimError {
    #[error("ordering `{ordering}` does not apply to this graph: {reason}")]
    WrongProblemClass { ordering: &'static str, reason: String },
    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),
    #[error("variable {0} has too few constraints to be eliminated")]
    StructurallySingular(String),
    #[error("variable {key} is numerically singular (pivot {pivot:.3e})")]
    NumericallySingular { key: String, pivot: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrderingTag {
    Rnea,
    Crba,
    Aba,
    MinDegree,
    ColamdLike,
    NestedDissection,
    ReverseIndex,
    Custom,
}

impl OrderingTag {
    pub const ALL: [OrderingTag; 8] = [
        OrderingTag::Rnea,
        OrderingTag::Crba,
        OrderingTag::Aba,
        OrderingTag::MinDegree,
        OrderingTag::ColamdLike,
        OrderingTag::NestedDissection,
        OrderingTag::ReverseIndex,
        OrderingTag::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingTag::Rnea => "rnea",
            OrderingTag::Crba => "crba",
            OrderingTag::Aba => "aba",
            OrderingTag::MinDegree => "md",
            OrderingTag::ColamdLike => "colamd",
            OrderingTag::NestedDissection => "nd",
            OrderingTag::ReverseIndex => "reverse",
            OrderingTag::Custom => "custom",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

impl fmt::Display for OrderingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which ordering to use for a dynamics graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderingChoice {
    Rnea,
    Crba,
    Aba,
    MinDegree,
    ColamdLike,
    NestedDissection,
    ReverseIndex,
    Custom(Vec<VariableKey>),
}

impl OrderingChoice {
    pub fn tag(&self) -> OrderingTag {
        match self {
            OrderingChoice::Rnea => OrderingTag::Rnea,
            OrderingChoice::Crba => OrderingTag::Crba,
            OrderingChoice::Aba => OrderingTag::Aba,
            OrderingChoice::MinDegree => OrderingTag::MinDegree,
            OrderingChoice::ColamdLike => OrderingTag::ColamdLike,
            OrderingChoice::NestedDissection => OrderingTag::NestedDissection,
            OrderingChoice::ReverseIndex => OrderingTag::ReverseIndex,
            OrderingChoice::Custom(_) => OrderingTag::Custom,
        }
    }

    pub fn from_tag(tag: OrderingTag) -> Option<Self> {
        Some(match tag {
            OrderingTag::Rnea => OrderingChoice::Rnea,
            OrderingTag::Crba => OrderingChoice::Crba,
            OrderingTag::Aba => OrderingChoice::Aba,
            OrderingTag::MinDegree => OrderingChoice::MinDegree,
            OrderingTag::ColamdLike => OrderingChoice::ColamdLike,
            OrderingTag::NestedDissection => OrderingChoice::NestedDissection,
            OrderingTag::ReverseIndex => OrderingChoice::ReverseIndex,
            OrderingTag::Custom => return None,
        })
    }

    pub fn compute(&self, graph: &GaussianGraph<VariableKey>) -> Result<Ordering<VariableKey>, ElimError> {
        match self {
            OrderingChoice::Rnea => order_rnea(graph),
            OrderingChoice::Crba => order_crba(graph),
            OrderingChoice::Aba => order_aba(graph),
            OrderingChoice::MinDegree => Ok(order_min_degree(graph)),
            OrderingChoice::ColamdLike => Ok(order_colamd_like(graph)),
            OrderingChoice::NestedDissection => Ok(order_nested_dissection(graph)),
            OrderingChoice::ReverseIndex => Ok(order_reverse_index(graph)),
            OrderingChoice::Custom(keys) => {
                let o = Ordering {
                    keys: keys.clone(),
                    tag: OrderingTag::Custom,
                };
                o.validate(graph)?;
                Ok(o)
            }
        }
    }
}

/// Elimination sequence over every unknown of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering<K> {
    pub keys: Vec<K>,
    pub tag: OrderingTag,
}

impl<K: Key> Ordering<K> {
    /// Checks that the keys are a permutation of the graph's variables.
    pub fn validate(&self, graph: &GaussianGraph<K>) -> Result<(), ElimError> {
        let mut seen = BTreeSet::new();
        for k in &self.keys {
            if !graph.dims.contains_key(k) {
                return Err(ElimError::InvalidOrdering(format!(
                    "{k} is not an unknown of the graph"
                )));
            }
            if !seen.insert(k) {
                return Err(ElimError::InvalidOrdering(format!("{k} appears twice")));
            }
        }
        if seen.len() != graph.dims.len() {
            let missing: Vec<String> = graph
                .dims
                .keys()
                .filter(|k| !seen.contains(k))
                .map(|k| k.to_string())
                .collect();
            return Err(ElimError::InvalidOrdering(format!("missing {}", missing.join(", "))));
        }
        Ok(())
    }
}

/// Reads a custom ordering: one `kind:index` per line, `#` comments allowed.
pub fn parse_ordering_text(text: &str) -> Result<Vec<VariableKey>, ParseKeyError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::parse)
        .collect()
}

// ---------------------------------------------------------------------------
// Classical orderings.

fn chain_length(graph: &GaussianGraph<VariableKey>) -> usize {
    graph.dims.keys().map(|k| k.index).max().unwrap_or(0)
}

fn fixed_ordering(
    graph: &GaussianGraph<VariableKey>,
    tag: OrderingTag,
    keys: Vec<VariableKey>,
) -> Result<Ordering<VariableKey>, ElimError> {
    let o = Ordering { keys, tag };
    o.validate(graph).map_err(|e| ElimError::WrongProblemClass {
        ordering: tag.name(),
        reason: e.to_string(),
    })?;
    Ok(o)
}

/// `τₙ..τ₁, ℱ₁..ℱₙ, V̇ₙ..V̇₁` for inverse-dynamics graphs.
pub fn order_rnea(graph: &GaussianGraph<VariableKey>) -> Result<Ordering<VariableKey>, ElimError> {
    let n = chain_length(graph);
    let keys = (1..=n)
        .rev()
        .map(VariableKey::tau)
        .chain((1..=n).map(VariableKey::wrench))
        .chain((1..=n).rev().map(VariableKey::vdot))
        .collect();
    fixed_ordering(graph, OrderingTag::Rnea, keys)
}

/// `ℱₙ..ℱ₁, V̇ₙ..V̇₁, q̈ₙ..q̈₁` for forward-dynamics graphs.
pub fn order_crba(graph: &GaussianGraph<VariableKey>) -> Result<Ordering<VariableKey>, ElimError> {
    let n = chain_length(graph);
    let keys = (1..=n)
        .rev()
        .map(VariableKey::wrench)
        .chain((1..=n).rev().map(VariableKey::vdot))
        .chain((1..=n).rev().map(VariableKey::qdd))
        .collect();
    fixed_ordering(graph, OrderingTag::Crba, keys)
}

/// `ℱₙ, V̇ₙ, q̈ₙ, …, ℱ₁, V̇₁, q̈₁` for forward-dynamics graphs.
pub fn order_aba(graph: &GaussianGraph<VariableKey>) -> Result<Ordering<VariableKey>, ElimError> {
    let n = chain_length(graph);
    let keys = (1..=n)
        .rev()
        .flat_map(|i| [VariableKey::wrench(i), VariableKey::vdot(i), VariableKey::qdd(i)])
        .collect();
    fixed_ordering(graph, OrderingTag::Aba, keys)
}

pub fn order_reverse_index<K: Key>(graph: &GaussianGraph<K>) -> Ordering<K> {
    Ordering {
        keys: graph.dims.keys().rev().cloned().collect(),
        tag: OrderingTag::ReverseIndex,
    }
}

// ---------------------------------------------------------------------------
// Heuristic orderings. Variables are numbered in key order so that "lowest id"
// is the lexicographic (kind, index) tie-break.

fn key_ids<K: Key>(graph: &GaussianGraph<K>) -> (Vec<K>, BTreeMap<K, usize>) {
    let keys: Vec<K> = graph.dims.keys().cloned().collect();
    let ids = keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    (keys, ids)
}

fn id_adjacency<K: Key>(graph: &GaussianGraph<K>, ids: &BTreeMap<K, usize>) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); ids.len()];
    for f in &graph.factors {
        let fk: Vec<usize> = f.keys().map(|k| ids[k]).collect();
        for &a in &fk {
            for &b in &fk {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    adj
}

/// Greedy minimum degree restricted to `subset`, on the induced subgraph.
fn min_degree_ids(adj: &[BTreeSet<usize>], subset: &[usize]) -> Vec<usize> {
    let members: BTreeSet<usize> = subset.iter().copied().collect();
    let mut local: BTreeMap<usize, BTreeSet<usize>> = subset
        .iter()
        .map(|&v| (v, adj[v].intersection(&members).copied().collect()))
        .collect();
    let mut queue: BTreeSet<(usize, usize)> = local.iter().map(|(&v, n)| (n.len(), v)).collect();
    let mut out = Vec::with_capacity(subset.len());
    while let Some((_, v)) = queue.pop_first() {
        let nbrs = local.remove(&v).expect("queued vertex present");
        out.push(v);
        for &a in &nbrs {
            let set = local.get_mut(&a).expect("neighbour present");
            let before = set.len();
            set.remove(&v);
            for &b in &nbrs {
                if b != a {
                    set.insert(b);
                }
            }
            let after = set.len();
            if before != after {
                queue.remove(&(before, a));
                queue.insert((after, a));
            }
        }
    }
    out
}

/// Greedy minimum degree on the variable adjacency graph, counting degree in
/// variable groups. Ties go to the lowest key.
pub fn order_min_degree<K: Key>(graph: &GaussianGraph<K>) -> Ordering<K> {
    let (keys, ids) = key_ids(graph);
    let adj = id_adjacency(graph, &ids);
    let all: Vec<usize> = (0..keys.len()).collect();
    Ordering {
        keys: min_degree_ids(&adj, &all)
            .into_iter()
            .map(|i| keys[i].clone())
            .collect(),
        tag: OrderingTag::MinDegree,
    }
}

/// Approximate column minimum degree on the factor/variable incidence.
///
/// Each column is scored by `Σ (|row| − 1)` over the rows containing it,
/// capped by the number of other live columns. Row multiplicities are
/// tracked as in numeric elimination: a column whose rows do not outnumber
/// its dimension leaves no merged row behind, and such columns win ties.
pub fn order_colamd_like<K: Key>(graph: &GaussianGraph<K>) -> Ordering<K> {
    let (keys, ids) = key_ids(graph);
    let ncols = keys.len();
    let dims: Vec<usize> = keys.iter().map(|k| graph.dims[k]).collect();
    let mut rows: Vec<Option<(BTreeSet<usize>, usize)>> = graph
        .factors
        .iter()
        .map(|f| Some((f.keys().map(|k| ids[k]).collect(), f.rows())))
        .collect();
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncols];
    for (r, row) in rows.iter().enumerate() {
        for &c in &row.as_ref().expect("fresh row").0 {
            col_rows[c].insert(r);
        }
    }
    type Rows = [Option<(BTreeSet<usize>, usize)>];
    let score = |c: usize, rows: &Rows, col_rows: &[BTreeSet<usize>], alive: usize| {
        let mut s = 0;
        let mut m = 0;
        for &r in &col_rows[c] {
            if let Some((row, nr)) = &rows[r] {
                s += row.len() - 1;
                m += nr;
            }
        }
        (s.min(alive.saturating_sub(1)), usize::from(m > dims[c]))
    };
    let mut alive = ncols;
    let mut scores: Vec<(usize, usize)> = (0..ncols).map(|c| score(c, &rows, &col_rows, alive)).collect();
    let mut queue: BTreeSet<((usize, usize), usize)> = (0..ncols).map(|c| (scores[c], c)).collect();
    let mut done = vec![false; ncols];
    let mut out = Vec::with_capacity(ncols);
    while let Some((_, c)) = queue.pop_first() {
        done[c] = true;
        alive -= 1;
        out.push(keys[c].clone());
        let mut merged = BTreeSet::new();
        let mut m = 0;
        for r in std::mem::take(&mut col_rows[c]) {
            if let Some((row, nr)) = rows[r].take() {
                m += nr;
                for x in row {
                    if x != c {
                        col_rows[x].remove(&r);
                        merged.insert(x);
                    }
                }
            }
        }
        let merged_dim: usize = merged.iter().map(|&x| dims[x]).sum();
        let new_rows = m.saturating_sub(dims[c]).min(merged_dim);
        if new_rows > 0 {
            let r = rows.len();
            for &x in &merged {
                col_rows[x].insert(r);
            }
            rows.push(Some((merged, new_rows)));
        }
        // The cap depends on `alive`, so every live score may move.
        for x in 0..ncols {
            if done[x] {
                continue;
            }
            let s = score(x, &rows, &col_rows, alive);
            if s != scores[x] {
                queue.remove(&(scores[x], x));
                scores[x] = s;
                queue.insert((s, x));
            }
        }
    }
    Ordering {
        keys: out,
        tag: OrderingTag::ColamdLike,
    }
}

fn bfs_levels(adj: &[BTreeSet<usize>], members: &BTreeSet<usize>, start: usize) -> BTreeMap<usize, usize> {
    let mut level = BTreeMap::new();
    level.insert(start, 0);
    let mut q = VecDeque::from([start]);
    while let Some(v) = q.pop_front() {
        let l = level[&v];
        for &w in &adj[v] {
            if members.contains(&w) && !level.contains_key(&w) {
                level.insert(w, l + 1);
                q.push_back(w);
            }
        }
    }
    level
}

fn components(adj: &[BTreeSet<usize>], vertices: &[usize]) -> Vec<Vec<usize>> {
    let members: BTreeSet<usize> = vertices.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &v in vertices {
        if seen.contains(&v) {
            continue;
        }
        let comp: Vec<usize> = bfs_levels(adj, &members, v).into_keys().collect();
        seen.extend(comp.iter().copied());
        out.push(comp);
    }
    out
}

fn dissect(adj: &[BTreeSet<usize>], vertices: Vec<usize>, out: &mut Vec<usize>) {
    for comp in components(adj, &vertices) {
        if comp.len() <= ND_LEAF_SIZE {
            out.extend(min_degree_ids(adj, &comp));
            continue;
        }
        let members: BTreeSet<usize> = comp.iter().copied().collect();
        // Pseudo-peripheral start: two BFS sweeps from the lowest id.
        let mut start = comp[0];
        for _ in 0..2 {
            let lv = bfs_levels(adj, &members, start);
            let max = *lv.values().max().expect("non-empty");
            start = *lv.iter().find(|(_, &l)| l == max).expect("exists").0;
        }
        let levels = bfs_levels(adj, &members, start);
        let depth = *levels.values().max().expect("non-empty");
        if depth < 2 {
            out.extend(min_degree_ids(adj, &comp));
            continue;
        }
        // Smallest separator relative to the smaller side, then best balance.
        let mut best: Option<(usize, usize, usize, usize)> = None;
        for l in 1..depth {
            let sep = levels.values().filter(|&&x| x == l).count();
            let below = levels.values().filter(|&&x| x < l).count();
            let above = levels.values().filter(|&&x| x > l).count();
            let small = below.min(above);
            let imbalance = below.abs_diff(above);
            let better = match best {
                None => true,
                Some((bs, bsmall, bimb, _)) => {
                    let (lhs, rhs) = (sep * bsmall, bs * small);
                    lhs < rhs || (lhs == rhs && imbalance < bimb)
                }
            };
            if better {
                best = Some((sep, small, imbalance, l));
            }
        }
        let cut = best.expect("depth >= 2").3;
        let part = |pred: &dyn Fn(usize) -> bool| -> Vec<usize> {
            levels.iter().filter(|(_, &l)| pred(l)).map(|(&v, _)| v).collect()
        };
        dissect(adj, part(&|l| l < cut), out);
        dissect(adj, part(&|l| l > cut), out);
        out.extend(part(&|l| l == cut));
    }
}

/// Recursive BFS-level bisection; emits the partition tree in post-order
/// (both halves, then the separator).
pub fn order_nested_dissection<K: Key>(graph: &GaussianGraph<K>) -> Ordering<K> {
    let (keys, ids) = key_ids(graph);
    let adj = id_adjacency(graph, &ids);
    let mut out = Vec::with_capacity(keys.len());
    dissect(&adj, (0..keys.len()).collect(), &mut out);
    Ordering {
        keys: out.into_iter().map(|i| keys[i].clone()).collect(),
        tag: OrderingTag::NestedDissection,
    }
}

// ---------------------------------------------------------------------------
// Elimination.

#[derive(Debug, Clone, PartialEq)]
pub struct DagNode<K> {
    pub key: K,
    pub dim: usize,
    /// Conditioning set, in elimination order.
    pub parents: Vec<K>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DagStats {
    /// Total number of parent links.
    pub fill_edges: usize,
    /// Largest clique (node plus parents) in variable groups.
    pub max_frontal: usize,
    /// Largest clique in scalar columns.
    pub max_frontal_dim: usize,
    /// Factors created on separators during elimination.
    pub new_factors: usize,
}

/// `R·x + Σ Sₚ·xₚ = d` for one eliminated variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub r: DMatrix<f64>,
    pub s: Vec<DMatrix<f64>>,
    pub d: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationDag<K> {
    pub nodes: Vec<DagNode<K>>,
    pub stats: DagStats,
    pub tag: OrderingTag,
    /// Present after numeric elimination.
    pub conditionals: Option<Vec<Conditional>>,
}

impl<K: Key> EliminationDag<K> {
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.parents.len()).sum()
    }

    pub fn parents_of(&self, key: &K) -> Option<&[K]> {
        self.nodes.iter().find(|n| &n.key == key).map(|n| n.parents.as_slice())
    }

    /// `digraph` with one node per variable and child → parent edges.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph {\n");
        for n in &self.nodes {
            s.push_str(&format!("  \"{}\";\n", n.key));
        }
        for n in &self.nodes {
            for p in &n.parents {
                s.push_str(&format!("  \"{}\" -> \"{}\";\n", n.key, p));
            }
        }
        s.push_str("}\n");
        s
    }
}

pub fn export_dag_dot<K: Key>(dag: &EliminationDag<K>) -> String {
    dag.to_dot()
}

fn finish_stats<K: Key>(nodes: &[DagNode<K>], new_factors: usize, dims: &BTreeMap<K, usize>) -> DagStats {
    DagStats {
        fill_edges: nodes.iter().map(|n| n.parents.len()).sum(),
        max_frontal: nodes.iter().map(|n| n.parents.len() + 1).max().unwrap_or(0),
        max_frontal_dim: nodes
            .iter()
            .map(|n| n.dim + n.parents.iter().map(|p| dims[p]).sum::<usize>())
            .max()
            .unwrap_or(0),
        new_factors,
    }
}

/// Structure-only elimination. A new factor on the separator is created when
/// the stacked rows outnumber the eliminated variable's dimension.
pub fn symbolic_eliminate<K: Key>(
    graph: &GaussianGraph<K>,
    ordering: &Ordering<K>,
) -> Result<EliminationDag<K>, ElimError> {
    ordering.validate(graph)?;
    let pos: BTreeMap<&K, usize> = ordering.keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let nvars = ordering.keys.len();
    let dims: Vec<usize> = ordering.keys.iter().map(|k| graph.dims[k]).collect();
    // Factors as (variables by elimination position, row count).
    let mut factors: Vec<Option<(BTreeSet<usize>, usize)>> = graph
        .factors
        .iter()
        .map(|f| Some((f.keys().map(|k| pos[k]).collect(), f.rows())))
        .collect();
    let mut var_factors: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    for (fi, f) in factors.iter().enumerate() {
        for &v in &f.as_ref().expect("fresh").0 {
            var_factors[v].push(fi);
        }
    }
    let mut nodes = Vec::with_capacity(nvars);
    let mut new_factors = 0;
    for v in 0..nvars {
        let mut sep = BTreeSet::new();
        let mut rows = 0;
        for fi in std::mem::take(&mut var_factors[v]) {
            if let Some((vars, r)) = factors[fi].take() {
                rows += r;
                sep.extend(vars.into_iter().filter(|&x| x != v));
            }
        }
        if rows < dims[v] {
            return Err(ElimError::StructurallySingular(ordering.keys[v].to_string()));
        }
        let sep_dim: usize = sep.iter().map(|&x| dims[x]).sum();
        let new_rows = (rows - dims[v]).min(sep_dim);
        if new_rows > 0 {
            let fi = factors.len();
            for &x in &sep {
                var_factors[x].push(fi);
            }
            factors.push(Some((sep.clone(), new_rows)));
            new_factors += 1;
        }
        nodes.push(DagNode {
            key: ordering.keys[v].clone(),
            dim: dims[v],
            parents: sep.into_iter().map(|x| ordering.keys[x].clone()).collect(),
        });
    }
    let stats = finish_stats(&nodes, new_factors, &graph.dims);
    Ok(EliminationDag {
        nodes,
        stats,
        tag: ordering.tag,
        conditionals: None,
    })
}

/// In-place Householder triangularization of the first `ncols` columns; the
/// reflections are applied to every column (including any trailing rhs).
fn householder_triangularize(m: &mut DMatrix<f64>, ncols: usize) {
    let rows = m.nrows();
    let total = m.ncols();
    let data = m.as_mut_slice();
    let mut v = vec![0.0; rows];
    for j in 0..rows.min(ncols) {
        let len = rows - j;
        let col = &data[j * rows + j..(j + 1) * rows];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if col[0] > 0.0 { -norm } else { norm };
        v[..len].copy_from_slice(col);
        v[0] -= alpha;
        let vn2: f64 = v[..len].iter().map(|x| x * x).sum();
        if vn2 == 0.0 {
            continue;
        }
        data[j * rows + j] = alpha;
        data[j * rows + j + 1..(j + 1) * rows].fill(0.0);
        for c in j + 1..total {
            let cc = &mut data[c * rows + j..(c + 1) * rows];
            let dot: f64 = cc.iter().zip(&v[..len]).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vn2;
            for (a, b) in cc.iter_mut().zip(&v[..len]) {
                *a -= s * b;
            }
        }
    }
}

struct WorkFactor {
    vars: Vec<usize>,
    a: Vec<DMatrix<f64>>,
    b: DVector<f64>,
}

/// Numeric elimination. Returns a DAG carrying the dense conditionals.
pub fn eliminate<K: Key>(graph: &GaussianGraph<K>, ordering: &Ordering<K>) -> Result<EliminationDag<K>, ElimError> {
    ordering.validate(graph)?;
    let pos: BTreeMap<&K, usize> = ordering.keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let nvars = ordering.keys.len();
    let dims: Vec<usize> = ordering.keys.iter().map(|k| graph.dims[k]).collect();
    let mut factors: Vec<Option<WorkFactor>> = graph
        .factors
        .iter()
        .map(|f| {
            Some(WorkFactor {
                vars: f.keys().map(|k| pos[k]).collect(),
                a: f.terms.iter().map(|(_, a)| a * f.weight).collect(),
                b: &f.rhs * f.weight,
            })
        })
        .collect();
    let mut var_factors: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    for (fi, f) in factors.iter().enumerate() {
        for &v in &f.as_ref().expect("fresh").vars {
            var_factors[v].push(fi);
        }
    }
    let mut nodes = Vec::with_capacity(nvars);
    let mut conditionals = Vec::with_capacity(nvars);
    let mut new_factors = 0;
    for v in 0..nvars {
        let gathered: Vec<WorkFactor> = std::mem::take(&mut var_factors[v])
            .into_iter()
            .filter_map(|fi| factors[fi].take())
            .collect();
        let mut sep: Vec<usize> = gathered
            .iter()
            .flat_map(|f| f.vars.iter().copied())
            .filter(|&x| x != v)
            .collect();
        sep.sort_unstable();
        sep.dedup();
        let mut offsets = Vec::with_capacity(sep.len());
        let mut width = dims[v];
        for &x in &sep {
            offsets.push(width);
            width += dims[x];
        }
        let col_of = |x: usize| {
            if x == v {
                0
            } else {
                offsets[sep.binary_search(&x).expect("in separator")]
            }
        };
        let rows: usize = gathered.iter().map(|f| f.b.len()).sum();
        if rows < dims[v] {
            return Err(ElimError::StructurallySingular(ordering.keys[v].to_string()));
        }
        let mut m = DMatrix::zeros(rows, width + 1);
        let mut r0 = 0;
        for f in &gathered {
            let fr = f.b.len();
            for (x, a) in f.vars.iter().zip(&f.a) {
                m.view_mut((r0, col_of(*x)), (fr, dims[*x])).copy_from(a);
            }
            m.view_mut((r0, width), (fr, 1)).copy_from(&f.b);
            r0 += fr;
        }
        householder_triangularize(&mut m, width);
        let dv = dims[v];
        let r = m.view((0, 0), (dv, dv)).into_owned();
        let pivot = r.diagonal().iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
        if !(pivot >= PIVOT_TOLERANCE) {
            return Err(ElimError::NumericallySingular {
                key: ordering.keys[v].to_string(),
                pivot,
            });
        }
        let s = sep
            .iter()
            .map(|&x| m.view((0, col_of(x)), (dv, dims[x])).into_owned())
            .collect();
        let d = m.view((0, width), (dv, 1)).column(0).into_owned();
        let sep_dim = width - dv;
        let new_rows = (rows - dv).min(sep_dim);
        if new_rows > 0 {
            let fi = factors.len();
            let a = sep
                .iter()
                .map(|&x| m.view((dv, col_of(x)), (new_rows, dims[x])).into_owned())
                .collect();
            let b = m.view((dv, width), (new_rows, 1)).column(0).into_owned();
            for &x in &sep {
                var_factors[x].push(fi);
            }
            factors.push(Some(WorkFactor {
                vars: sep.clone(),
                a,
                b,
            }));
            new_factors += 1;
        }
        nodes.push(DagNode {
            key: ordering.keys[v].clone(),
            dim: dv,
            parents: sep.iter().map(|&x| ordering.keys[x].clone()).collect(),
        });
        conditionals.push(Conditional { r, s, d });
    }
    let stats = finish_stats(&nodes, new_factors, &graph.dims);
    Ok(EliminationDag {
        nodes,
        stats,
        tag: ordering.tag,
        conditionals: Some(conditionals),
    })
}

/// Solves the conditionals in reverse elimination order.
pub fn back_substitute<K: Key>(dag: &EliminationDag<K>) -> Result<BTreeMap<K, DVector<f64>>, ElimError> {
    let conds = dag
        .conditionals
        .as_ref()
        .ok_or_else(|| ElimError::InvalidOrdering("DAG was eliminated symbolically only".into()))?;
    let mut values: BTreeMap<K, DVector<f64>> = BTreeMap::new();
    for (node, c) in dag.nodes.iter().zip(conds).rev() {
        let mut rhs = c.d.clone();
        for (p, s) in node.parents.iter().zip(&c.s) {
            rhs -= s * &values[p];
        }
        let x =
            c.r.solve_upper_triangular(&rhs)
                .ok_or_else(|| ElimError::NumericallySingular {
                    key: node.key.to_string(),
                    pivot: 0.0,
                })?;
        values.insert(node.key.clone(), x);
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<K> {
    pub values: BTreeMap<K, DVector<f64>>,
    /// Euclidean norm of `A·x − b` over the graph that was solved.
    pub residual_norm: f64,
    pub stats: DagStats,
    pub tag: OrderingTag,
}

impl<K: Key> Solution<K> {
    pub fn scalar(&self, key: &K) -> f64 {
        self.values[key][0]
    }
}

/// Eliminate, back-substitute and measure the residual.
pub fn solve<K: Key>(graph: &GaussianGraph<K>, ordering: &Ordering<K>) -> Result<Solution<K>, ElimError> {
    let dag = eliminate(graph, ordering)?;
    let values = back_substitute(&dag)?;
    let residual_norm = graph.residual_norm(&values);
    Ok(Solution {
        values,
        residual_norm,
        stats: dag.stats,
        tag: ordering.tag,
    })
}

/// Key groups per kind, handy for building readable orderings in tests.
pub fn keys_of_kind(graph: &GaussianGraph<VariableKey>, kind: VarKind) -> Vec<VariableKey> {
    graph.dims.keys().filter(|k| k.kind == kind).copied().collect()
}
