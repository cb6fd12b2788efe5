//! Linear static equilibrium of spring networks.
//!
//! The pipeline is: reduce fixed degrees of freedom away ([`DofMap`]), build
//! the compatibility matrix `C` mapping nodal displacements to bond
//! elongations, assemble the reduced stiffness matrix `D = CᵀKC`, factor it
//! once, then solve `D u = F` for as many load cases as needed. Elongations
//! `e = C u` come along with every solution; they are the locally measurable
//! quantity the gradient method is built on.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, ZeroModeDiag};
use crate::lattice::Network;

/// Standard gravitational acceleration used for weight/force conversions, m/s².
pub const GRAVITY: f64 = 9.8;

/// Force in newtons exerted by a mass given in grams.
pub fn grams_to_newtons(grams: f64) -> f64 {
    grams * 1e-3 * GRAVITY
}

/// Mass in grams equivalent to a force given in newtons.
pub fn newtons_to_grams(newtons: f64) -> f64 {
    newtons / (1e-3 * GRAVITY)
}

thread_local! {
    static SOLVER_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Total number of linear-system solves performed by this thread so far.
///
/// Every right-hand-side solve counts as one, whether it runs against a
/// fresh factorization or a reused one.
pub fn solver_calls() -> u64 {
    SOLVER_CALLS.with(|c| c.get())
}

fn count_solve() {
    SOLVER_CALLS.with(|c| c.set(c.get() + 1));
}

/// Coordinate axis of a nodal degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

/// Dense numbering of the free degrees of freedom. Fixed nodes simply do not
/// appear; their displacements are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    index: Vec<[Option<usize>; 2]>,
    owners: Vec<(usize, Axis)>,
}

impl DofMap {
    pub fn new(net: &Network) -> Self {
        let mut index = vec![[None, None]; net.nodes.len()];
        let mut owners = Vec::new();
        for node in &net.nodes {
            if node.fixed {
                continue;
            }
            for axis in [Axis::X, Axis::Y] {
                index[node.id][axis.index()] = Some(owners.len());
                owners.push((node.id, axis));
            }
        }
        DofMap { index, owners }
    }

    pub fn n_free(&self) -> usize {
        self.owners.len()
    }

    /// Free-DOF index of `(node, axis)`, or an error if the node is fixed
    /// or unknown.
    pub fn dof(&self, node: usize, axis: Axis) -> Result<usize> {
        self.index.get(node).ok_or(Error::UnknownNode(node))?[axis.index()].ok_or(Error::FixedDof {
            node,
            axis: axis.name(),
        })
    }

    /// `(node, axis)` owning a free-DOF index.
    pub fn owner(&self, dof: usize) -> (usize, Axis) {
        self.owners[dof]
    }
}

/// Sparse compatibility matrix: row `b` maps nodal displacements to the
/// elongation of bond `b`. Each row carries at most four nonzeros, the
/// ±(direction cosines) of the bond tangent on the two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    n_free: usize,
}

/// Build the compatibility matrix of a network over its free DOFs.
///
/// Sign convention: positive elongation means the bond is stretched.
pub fn compatibility_matrix(net: &Network, dofs: &DofMap) -> Result<CompatibilityMatrix> {
    let mut rows = Vec::with_capacity(net.bonds.len());
    for bond in &net.bonds {
        let pi = net.nodes[bond.i].position;
        let pj = net.nodes[bond.j].position;
        let dx = pj[0] - pi[0];
        let dy = pj[1] - pi[1];
        let len = (dx * dx + dy * dy).sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::DegenerateBond(bond.id));
        }
        let t = [dx / len, dy / len];
        let mut row = Vec::with_capacity(4);
        for (axis, tc) in [Axis::X, Axis::Y].into_iter().zip(t) {
            if let Some(d) = dofs.index[bond.j][axis.index()] {
                row.push((d, tc));
            }
            if let Some(d) = dofs.index[bond.i][axis.index()] {
                row.push((d, -tc));
            }
        }
        rows.push(row);
    }
    Ok(CompatibilityMatrix {
        rows,
        n_free: dofs.n_free(),
    })
}

impl CompatibilityMatrix {
    pub fn n_bonds(&self) -> usize {
        self.rows.len()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Nonzeros `(free_dof, coefficient)` of one row.
    pub fn row(&self, bond: usize) -> &[(usize, f64)] {
        &self.rows[bond]
    }

    /// `e = C u`.
    pub fn elongations(&self, u: &DVector<f64>) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(d, c)| c * u[d]).sum())
            .collect()
    }
}

/// Assemble the reduced stiffness matrix `D = Cᵀ diag(k) C`.
///
/// The result is symmetric by construction and positive definite whenever
/// the network has no zero modes.
pub fn assemble_stiffness(c: &CompatibilityMatrix, k: &[f64]) -> Result<DMatrix<f64>> {
    if k.len() != c.rows.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} stiffness values for {} compatibility rows",
            k.len(),
            c.rows.len()
        )));
    }
    let n = c.n_free;
    let mut d = DMatrix::zeros(n, n);
    for (row, &kb) in c.rows.iter().zip(k) {
        for &(di, ci) in row {
            for &(dj, cj) in row {
                d[(di, dj)] += kb * ci * cj;
            }
        }
    }
    Ok(d)
}

/// Where a load came from; adjoint loads are derived from a loss gradient
/// rather than applied externally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    External,
    Adjoint,
}

/// Sparse nodal force vector over free DOFs, newtons. Entries on fixed DOFs
/// cannot be constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadCase {
    entries: Vec<(usize, f64)>,
    pub provenance: Provenance,
}

impl LoadCase {
    /// Build a load from `(node, axis, force)` triples. Forces on the same
    /// DOF accumulate.
    pub fn from_nodal_forces(
        dofs: &DofMap,
        forces: &[(usize, Axis, f64)],
        provenance: Provenance,
    ) -> Result<LoadCase> {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(forces.len());
        for &(node, axis, value) in forces {
            let dof = dofs.dof(node, axis)?;
            match entries.iter_mut().find(|(d, _)| *d == dof) {
                Some((_, v)) => *v += value,
                None => entries.push((dof, value)),
            }
        }
        entries.sort_by_key(|&(d, _)| d);
        Ok(LoadCase {
            entries,
            provenance,
        })
    }

    /// Build a load directly from free-DOF indices.
    pub fn from_dof_entries(entries: Vec<(usize, f64)>, provenance: Provenance) -> LoadCase {
        let mut entries = entries;
        entries.sort_by_key(|&(d, _)| d);
        LoadCase {
            entries,
            provenance,
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dense(&self, n_free: usize) -> DVector<f64> {
        let mut f = DVector::zeros(n_free);
        for &(d, v) in &self.entries {
            f[d] += v;
        }
        f
    }

    /// Pointwise scaling of every entry.
    pub fn scaled(&self, factor: f64) -> LoadCase {
        LoadCase {
            entries: self.entries.iter().map(|&(d, v)| (d, v * factor)).collect(),
            provenance: self.provenance,
        }
    }
}

/// Displacements and elongations of one solved load case.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Displacements over free DOFs, meters.
    pub u: DVector<f64>,
    /// Per-bond elongations `e = C u`, meters.
    pub e: Vec<f64>,
}

/// A network with its stiffness matrix assembled and factored, ready to
/// solve any number of load cases. Immutable; share it freely across
/// threads.
pub struct Operator {
    dofs: DofMap,
    c: CompatibilityMatrix,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Operator {
    /// Assemble and factor the stiffness matrix of `net`.
    ///
    /// Fails with a zero-mode diagnostic when the matrix is not positive
    /// definite (under-constrained or disconnected network).
    pub fn new(net: &Network) -> Result<Operator> {
        let dofs = DofMap::new(net);
        let c = compatibility_matrix(net, &dofs)?;
        let k = net.stiffness();
        let d = assemble_stiffness(&c, &k)?;
        let k_max = k.iter().cloned().fold(0.0, f64::max);

        let chol = match nalgebra::Cholesky::new(d.clone()) {
            Some(chol) => {
                // Guard against a numerically successful factorization of a
                // singular matrix: a vanishing pivot means a zero mode.
                let l = chol.l_dirty();
                let tol = 1e-9 * k_max.max(f64::MIN_POSITIVE);
                let bad = (0..l.nrows()).any(|i| {
                    let p = l[(i, i)];
                    !(p * p > tol) || !p.is_finite()
                });
                if bad {
                    return Err(Error::ZeroMode(zero_mode_diag(&d, k_max)));
                }
                chol
            }
            None => return Err(Error::ZeroMode(zero_mode_diag(&d, k_max))),
        };

        Ok(Operator { dofs, c, chol })
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn compatibility(&self) -> &CompatibilityMatrix {
        &self.c
    }

    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }

    /// Solve one load case. Counts as one solver call.
    pub fn solve(&self, load: &LoadCase) -> Result<Solution> {
        let f = load.dense(self.n_free());
        let u = self.chol.solve(&f);
        count_solve();
        let e = self.c.elongations(&u);
        Ok(Solution { u, e })
    }
}

fn zero_mode_diag(d: &DMatrix<f64>, k_max: f64) -> ZeroModeDiag {
    let tol = 1e-9 * k_max.max(f64::MIN_POSITIVE);
    if d.nrows() == 0 {
        return ZeroModeDiag {
            modes: 0,
            min_eigenvalue: f64::INFINITY,
            tolerance: tol,
        };
    }
    let eig = d.clone().symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let modes = eig.eigenvalues.iter().filter(|&&l| l <= tol).count();
    ZeroModeDiag {
        modes,
        min_eigenvalue: min,
        tolerance: tol,
    }
}

/// Result of a zero-mode scan of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroModeReport {
    pub positive_definite: bool,
    /// Eigenvalues at or below the tolerance.
    pub modes: usize,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    /// A representative null direction when one exists.
    pub null_vector: Option<DVector<f64>>,
}

/// Scan the reduced stiffness matrix for zero modes via a full symmetric
/// eigendecomposition. The tolerance is `1e-9 · max(k)` so the test stays
/// scale-free.
pub fn detect_zero_modes(net: &Network) -> Result<ZeroModeReport> {
    let dofs = DofMap::new(net);
    let c = compatibility_matrix(net, &dofs)?;
    let k = net.stiffness();
    let d = assemble_stiffness(&c, &k)?;
    let k_max = k.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-9 * k_max.max(f64::MIN_POSITIVE);

    if d.nrows() == 0 {
        return Ok(ZeroModeReport {
            positive_definite: true,
            modes: 0,
            min_eigenvalue: f64::INFINITY,
            tolerance: tol,
            null_vector: None,
        });
    }

    let eig = d.symmetric_eigen();
    let mut min = f64::INFINITY;
    let mut min_idx = 0;
    let mut modes = 0;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l < min {
            min = l;
            min_idx = i;
        }
        if l <= tol {
            modes += 1;
        }
    }
    let null_vector = (modes > 0).then(|| eig.eigenvectors.column(min_idx).into_owned());
    Ok(ZeroModeReport {
        positive_definite: modes == 0,
        modes,
        min_eigenvalue: min,
        tolerance: tol,
        null_vector,
    })
}

/// Assemble, factor, and solve a single load case on `net`.
///
/// When several load cases share one network, build an [`Operator`] once
/// and call [`Operator::solve`] repeatedly instead.
pub fn solve_statics(net: &Network, load: &LoadCase) -> Result<Solution> {
    Operator::new(net)?.solve(load)
}
