//! Spring-network geometry: construction, validation, pruning, mutation.
//!
//! A [`Network`] is a set of 2D nodes (some glued to the world) joined by
//! linear springs ("bonds"). Networks are immutable after construction;
//! every mutation returns a new value, so they can be shared read-only
//! across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice point. Positions are in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub position: [f64; 2],
    pub fixed: bool,
}

/// A linear spring joining nodes `i` and `j`.
///
/// `rest_length` is frozen at build time and never recomputed; training and
/// pruning leave it untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub id: usize,
    pub i: usize,
    pub j: usize,
    /// Spring constant, N/m.
    pub k: f64,
    /// Build-time distance between the endpoints, meters.
    pub rest_length: f64,
}

/// An elastic spring network with box constraints on the spring constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub bonds: Vec<Bond>,
    /// `(k_min, k_max)`, N/m, with `k_min > 0`.
    pub k_bounds: (f64, f64),
}

/// Picks nodes of a generated lattice, used to mark fixed anchors and to
/// name task input/output nodes in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSelector {
    /// Leftmost node of the top row.
    TopLeft,
    /// Rightmost node of the top row.
    TopRight,
    /// Every node of the top row.
    TopRow,
    /// Every node of the bottom row.
    BottomRow,
    /// A node by id.
    Node(usize),
    /// A node by (row, col) in the generated grid; row 0 is the bottom row.
    RowCol { row: usize, col: usize },
}

fn default_spacing() -> f64 {
    0.03
}
fn default_k() -> f64 {
    2.0
}
fn default_k_bounds() -> (f64, f64) {
    (1.5, 2.5)
}
fn default_fixed() -> Vec<NodeSelector> {
    vec![NodeSelector::TopLeft, NodeSelector::TopRight]
}

/// Parameters for [`build_triangular_lattice`].
///
/// The band `k_bounds` defaults to ±25% around `default_k`, the same
/// relative width a 2 mm bond restricted to [1.5, 2.5] mm would have.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    /// Nearest-neighbor distance, meters.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Initial spring constant for every bond, N/m.
    #[serde(default = "default_k")]
    pub default_k: f64,
    #[serde(default = "default_k_bounds")]
    pub k_bounds: (f64, f64),
    #[serde(default = "default_fixed")]
    pub fixed: Vec<NodeSelector>,
    /// When true, odd rows hold `cols - 1` nodes instead of `cols`, which
    /// makes the lattice mirror-symmetric about its vertical center line.
    #[serde(default)]
    pub alternating: bool,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            spacing: default_spacing(),
            default_k: default_k(),
            k_bounds: default_k_bounds(),
            fixed: default_fixed(),
            alternating: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.rows < 2 {
            return Err(Error::InvalidSpec(format!(
                "rows ≥ 2 required, got {}",
                self.rows
            )));
        }
        if self.cols < 2 {
            return Err(Error::InvalidSpec(format!(
                "cols ≥ 2 required, got {}",
                self.cols
            )));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "spacing > 0 required, got {}",
                self.spacing
            )));
        }
        let (lo, hi) = self.k_bounds;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidSpec(format!(
                "k bounds must satisfy 0 < min ≤ max, got ({lo}, {hi})"
            )));
        }
        if !(self.default_k >= lo && self.default_k <= hi) {
            return Err(Error::InvalidSpec(format!(
                "default_k {} outside k bounds ({lo}, {hi})",
                self.default_k
            )));
        }
        Ok(())
    }

    /// Nodes in row `row` (row 0 at the bottom).
    pub fn row_len(&self, row: usize) -> usize {
        if self.alternating && row % 2 == 1 {
            self.cols - 1
        } else {
            self.cols
        }
    }

    /// Dense id of the node at `(row, col)`.
    pub fn node_id(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.rows || col >= self.row_len(row) {
            return Err(Error::InvalidConfig(format!(
                "no node at row {row}, col {col} in a {}x{} lattice",
                self.rows, self.cols
            )));
        }
        Ok((0..row).map(|r| self.row_len(r)).sum::<usize>() + col)
    }

    /// Resolve a selector to concrete node ids against this spec's grid.
    pub fn resolve(&self, sel: &NodeSelector) -> Result<Vec<usize>> {
        let top = self.rows - 1;
        match sel {
            NodeSelector::TopLeft => Ok(vec![self.node_id(top, 0)?]),
            NodeSelector::TopRight => Ok(vec![self.node_id(top, self.row_len(top) - 1)?]),
            NodeSelector::TopRow => (0..self.row_len(top))
                .map(|c| self.node_id(top, c))
                .collect(),
            NodeSelector::BottomRow => (0..self.row_len(0)).map(|c| self.node_id(0, c)).collect(),
            NodeSelector::Node(id) => Ok(vec![*id]),
            NodeSelector::RowCol { row, col } => Ok(vec![self.node_id(*row, *col)?]),
        }
    }
}

/// Build a triangular lattice: rows of equally spaced nodes, odd rows offset
/// by half a spacing, bonds between every nearest-neighbor pair. All bonds
/// start at `default_k`.
pub fn build_triangular_lattice(spec: &LatticeSpec) -> Result<Network> {
    spec.check()?;
    let h = spec.spacing * 3f64.sqrt() / 2.0;

    let mut nodes = Vec::new();
    for r in 0..spec.rows {
        let off = if r % 2 == 1 { spec.spacing / 2.0 } else { 0.0 };
        for c in 0..spec.row_len(r) {
            nodes.push(Node {
                id: nodes.len(),
                position: [off + c as f64 * spec.spacing, r as f64 * h],
                fixed: false,
            });
        }
    }

    for sel in &spec.fixed {
        for id in spec.resolve(sel)? {
            nodes.get_mut(id).ok_or(Error::UnknownNode(id))?.fixed = true;
        }
    }

    // Nearest-neighbor scan; every pair at distance ~spacing gets a bond.
    let tol = spec.spacing * (1.0 + 1e-9);
    let mut bonds = Vec::new();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let dx = nodes[j].position[0] - nodes[i].position[0];
            let dy = nodes[j].position[1] - nodes[i].position[1];
            let dist = (dx * dx + dy * dy).sqrt();
            if dist <= tol {
                bonds.push(Bond {
                    id: bonds.len(),
                    i,
                    j,
                    k: spec.default_k,
                    rest_length: dist,
                });
            }
        }
    }

    Ok(Network {
        nodes,
        bonds,
        k_bounds: spec.k_bounds,
    })
}

/// A broken [`Network`] invariant, naming the rule and the offending entity.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewFixedNodes { found: usize },
    UnreachableNode { node: usize },
    DuplicateBond { i: usize, j: usize },
    SelfLoop { bond: usize },
    StiffnessBelowMin { bond: usize, k: f64 },
    StiffnessAboveMax { bond: usize, k: f64 },
    NonFinitePosition { node: usize },
    NonDenseNodeIds,
    NonDenseBondIds,
    BadNodeRef { bond: usize, node: usize },
    DegenerateRestLength { bond: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TooFewFixedNodes { found } => {
                write!(f, "fewer than 2 fixed nodes (found {found})")
            }
            Violation::UnreachableNode { node } => {
                write!(f, "node {node} not reachable from any fixed node")
            }
            Violation::DuplicateBond { i, j } => write!(f, "duplicate bond ({i},{j})"),
            Violation::SelfLoop { bond } => write!(f, "bond {bond} joins a node to itself"),
            Violation::StiffnessBelowMin { bond, k } => {
                write!(f, "stiffness below k_min on bond {bond} (k = {k})")
            }
            Violation::StiffnessAboveMax { bond, k } => {
                write!(f, "stiffness above k_max on bond {bond} (k = {k})")
            }
            Violation::NonFinitePosition { node } => {
                write!(f, "non-finite position on node {node}")
            }
            Violation::NonDenseNodeIds => write!(f, "node ids are not dense 0..n-1"),
            Violation::NonDenseBondIds => write!(f, "bond ids are not dense 0..m-1"),
            Violation::BadNodeRef { bond, node } => {
                write!(f, "bond {bond} references unknown node {node}")
            }
            Violation::DegenerateRestLength { bond } => {
                write!(f, "bond {bond} has a non-positive rest length")
            }
        }
    }
}

impl Network {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Current spring constants in bond order.
    pub fn stiffness(&self) -> Vec<f64> {
        self.bonds.iter().map(|b| b.k).collect()
    }

    /// A copy of this network with new spring constants.
    pub fn with_stiffness(&self, k: &[f64]) -> Result<Network> {
        if k.len() != self.bonds.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} stiffness values for {} bonds",
                k.len(),
                self.bonds.len()
            )));
        }
        let mut net = self.clone();
        for (bond, &ki) in net.bonds.iter_mut().zip(k) {
            bond.k = ki;
        }
        Ok(net)
    }

    /// Check every structural invariant, reporting all violations found.
    /// Never fails; an empty list means the network is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.nodes.len();

        if self.nodes.iter().enumerate().any(|(i, nd)| nd.id != i) {
            out.push(Violation::NonDenseNodeIds);
        }
        if self.bonds.iter().enumerate().any(|(i, b)| b.id != i) {
            out.push(Violation::NonDenseBondIds);
        }
        for nd in &self.nodes {
            if !nd.position.iter().all(|p| p.is_finite()) {
                out.push(Violation::NonFinitePosition { node: nd.id });
            }
        }

        let fixed = self.nodes.iter().filter(|nd| nd.fixed).count();
        if fixed < 2 {
            out.push(Violation::TooFewFixedNodes { found: fixed });
        }

        let (k_min, k_max) = self.k_bounds;
        let mut seen = std::collections::HashSet::new();
        for b in &self.bonds {
            if b.i >= n {
                out.push(Violation::BadNodeRef {
                    bond: b.id,
                    node: b.i,
                });
                continue;
            }
            if b.j >= n {
                out.push(Violation::BadNodeRef {
                    bond: b.id,
                    node: b.j,
                });
                continue;
            }
            if b.i == b.j {
                out.push(Violation::SelfLoop { bond: b.id });
            }
            if !seen.insert((b.i.min(b.j), b.i.max(b.j))) {
                out.push(Violation::DuplicateBond {
                    i: b.i.min(b.j),
                    j: b.i.max(b.j),
                });
            }
            if b.k < k_min {
                out.push(Violation::StiffnessBelowMin { bond: b.id, k: b.k });
            }
            if b.k > k_max {
                out.push(Violation::StiffnessAboveMax { bond: b.id, k: b.k });
            }
            if !(b.rest_length > 0.0) {
                out.push(Violation::DegenerateRestLength { bond: b.id });
            }
        }

        // Breadth-first reachability from the fixed nodes.
        let mut reach = vec![false; n];
        let mut queue: Vec<usize> = self
            .nodes
            .iter()
            .filter(|nd| nd.fixed)
            .map(|nd| nd.id)
            .collect();
        for &id in &queue {
            reach[id] = true;
        }
        while let Some(v) = queue.pop() {
            for b in &self.bonds {
                if b.i >= n || b.j >= n {
                    continue;
                }
                let other = if b.i == v {
                    b.j
                } else if b.j == v {
                    b.i
                } else {
                    continue;
                };
                if !reach[other] {
                    reach[other] = true;
                    queue.push(other);
                }
            }
        }
        for (id, ok) in reach.iter().enumerate() {
            if !ok {
                out.push(Violation::UnreachableNode { node: id });
            }
        }

        out
    }

    /// Remove one bond, re-densifying bond ids. Returns the new network and
    /// the old-id → new-id mapping (`None` for the pruned bond).
    ///
    /// The result is returned even if the removal disconnects part of the
    /// network; [`Network::validate`] and the statics layer report that.
    pub fn prune_bond(&self, bond_id: usize) -> Result<(Network, Vec<Option<usize>>)> {
        if bond_id >= self.bonds.len() {
            return Err(Error::UnknownBond(bond_id));
        }
        let mut net = self.clone();
        net.bonds.remove(bond_id);
        let mut mapping = Vec::with_capacity(self.bonds.len());
        for (new_id, b) in net.bonds.iter_mut().enumerate() {
            b.id = new_id;
        }
        for old in 0..self.bonds.len() {
            mapping.push(match old.cmp(&bond_id) {
                std::cmp::Ordering::Less => Some(old),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(old - 1),
            });
        }
        Ok((net, mapping))
    }
}
