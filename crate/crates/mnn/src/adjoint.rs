//! Exact loss gradients from two static solves.
//!
//! The forward problem `D u = F` gives elongations `e`; the adjoint problem
//! `D u_adj = −(∂L/∂u)ᵀ` — the same operator driven by the negated loss
//! gradient — gives elongations `e_adj`. The per-bond gradient of the loss
//! with respect to the spring constants is their elementwise product,
//! `∇L = e_adj ∘ e`, so the cost is two solves no matter how many bonds the
//! network has. The factorization is shared between the two solves.

use crate::error::{Error, Result};
use crate::lattice::Network;
use crate::losses::LossSpec;
use crate::statics::{DofMap, LoadCase, Operator, Provenance, Solution};

use nalgebra::DVector;

/// Per-bond loss gradient with the two solution fields it was formed from
/// and the solve accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    /// `∂L/∂k_b` for every bond, in bond order.
    pub grad: Vec<f64>,
    pub forward: Solution,
    /// Present on the adjoint path; finite-difference reports have none.
    pub adjoint: Option<Solution>,
    /// Linear-system solves consumed producing this report.
    pub solves_used: usize,
    /// Loss value at the forward solution (mean over samples for batches).
    pub loss: f64,
}

/// The load driving the backward pass: `−∂L/∂u`, supported only on the
/// loss's output DOFs.
pub fn adjoint_load(spec: &LossSpec, dofs: &DofMap, u: &DVector<f64>) -> Result<LoadCase> {
    let g = spec.gradient(dofs, u)?;
    let entries: Vec<(usize, f64)> = spec
        .output_dofs(dofs)?
        .into_iter()
        .map(|d| (d, -g[d]))
        .collect();
    Ok(LoadCase::from_dof_entries(entries, Provenance::Adjoint))
}

/// Gradient of `spec` with respect to every spring constant of the network
/// behind `op`, using one forward and one adjoint solve.
pub fn gradient_with_operator(
    op: &Operator,
    load: &LoadCase,
    spec: &LossSpec,
) -> Result<GradientReport> {
    let forward = op.solve(load)?;
    let loss = spec.value(op.dofs(), &forward.u)?;
    let back = adjoint_load(spec, op.dofs(), &forward.u)?;
    let adjoint = op.solve(&back)?;
    let grad: Vec<f64> = adjoint
        .e
        .iter()
        .zip(&forward.e)
        .map(|(ea, ef)| ea * ef)
        .collect();
    Ok(GradientReport {
        grad,
        forward,
        adjoint: Some(adjoint),
        solves_used: 2,
        loss,
    })
}

/// Assemble, factor, and run the two-solve gradient on `net`.
pub fn gradient(net: &Network, load: &LoadCase, spec: &LossSpec) -> Result<GradientReport> {
    gradient_with_operator(&Operator::new(net)?, load, spec)
}

/// Mean gradient over a dataset of `(load, loss)` samples.
///
/// One factorization serves the whole batch; each sample still costs its
/// two solves. The report's solution fields hold the last sample's fields,
/// and `loss` is the mean sample loss. Samples are reduced in dataset order.
pub fn batch_gradient_with_operator(
    op: &Operator,
    samples: &[(LoadCase, LossSpec)],
) -> Result<GradientReport> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let m = op.compatibility().n_bonds();
    let mut acc = vec![0.0; m];
    let mut loss_acc = 0.0;
    let mut last = None;
    for (load, spec) in samples {
        let rep = gradient_with_operator(op, load, spec)?;
        for (a, g) in acc.iter_mut().zip(&rep.grad) {
            *a += g;
        }
        loss_acc += rep.loss;
        last = Some(rep);
    }
    let n = samples.len() as f64;
    let last = last.unwrap();
    Ok(GradientReport {
        grad: acc.into_iter().map(|g| g / n).collect(),
        forward: last.forward,
        adjoint: last.adjoint,
        solves_used: 2 * samples.len(),
        loss: loss_acc / n,
    })
}

/// [`batch_gradient_with_operator`] with the factorization built in place.
pub fn batch_gradient(net: &Network, samples: &[(LoadCase, LossSpec)]) -> Result<GradientReport> {
    batch_gradient_with_operator(&Operator::new(net)?, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_triangular_lattice, Bond, LatticeSpec};
    use crate::losses::MseTarget;
    use crate::statics::Axis;
    use crate::testutil::{fan, s1_pinned};

    #[test]
    fn two_bond_instance_matches_closed_form() {
        let net = s1_pinned();
        let dofs = DofMap::new(&net);
        let load =
            LoadCase::from_nodal_forces(&dofs, &[(0, Axis::X, 1.0)], Provenance::External).unwrap();
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::X,
            offset: 0.0,
        };
        let rep = gradient(&net, &load, &spec).unwrap();
        assert_eq!(rep.solves_used, 2);
        // closed form: dL/dk_b = -2 u F / (k0+k1)^2 = -0.25 on both bonds
        assert!((rep.grad[0] + 0.25).abs() < 1e-12);
        assert!((rep.grad[1] + 0.25).abs() < 1e-12);
        assert!(rep.grad[2].abs() < 1e-12);
        let adj = rep.adjoint.unwrap();
        assert!((adj.e[0] + 0.5).abs() < 1e-12);
        assert!((adj.e[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn matches_central_differences_with_per_bond_steps() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let rows = rng.random_range(2..=5);
            let cols = rng.random_range(2..=5);
            let net = build_triangular_lattice(&LatticeSpec::new(rows, cols)).unwrap();
            let (lo, hi) = net.k_bounds;
            let k: Vec<f64> = (0..net.n_bonds())
                .map(|_| rng.random_range(lo..hi))
                .collect();
            let net = net.with_stiffness(&k).unwrap();
            let dofs = DofMap::new(&net);
            let free: Vec<usize> = net
                .nodes
                .iter()
                .filter(|n| !n.fixed)
                .map(|n| n.id)
                .collect();
            let load = LoadCase::from_nodal_forces(
                &dofs,
                &[(
                    free[rng.random_range(0..free.len())],
                    Axis::Y,
                    -rng.random_range(0.05..0.5),
                )],
                Provenance::External,
            )
            .unwrap();
            let spec = LossSpec::Quadratic {
                node: free[rng.random_range(0..free.len())],
                axis: Axis::Y,
                offset: 0.02,
            };
            let adj = gradient(&net, &load, &spec).unwrap();
            let cfg = crate::fd::FdConfig {
                scheme: crate::fd::Scheme::Central,
                delta: 1e-6,
                scale_by_k: true,
            };
            let cen = crate::fd::fd_gradient(&net, &load, &spec, &cfg).unwrap();
            let scale = adj.grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
            let dev = adj
                .grad
                .iter()
                .zip(&cen.grad)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
                / scale;
            assert!(dev <= 1e-6, "{rows}x{cols}: deviation {dev:e}");
        }
    }

    #[test]
    fn zero_load_gives_zero_gradient() {
        let net = build_triangular_lattice(&LatticeSpec::new(3, 3)).unwrap();
        let load = LoadCase::from_dof_entries(vec![], Provenance::External);
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::Y,
            offset: 0.0,
        };
        let rep = gradient(&net, &load, &spec).unwrap();
        assert!(rep.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn minimized_loss_gives_zero_adjoint_load() {
        let net = s1_pinned();
        let dofs = DofMap::new(&net);
        let mut u = DVector::zeros(dofs.n_free());
        u[dofs.dof(0, Axis::X).unwrap()] = 0.5;
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::X,
            offset: -0.5,
        };
        let load = adjoint_load(&spec, &dofs, &u).unwrap();
        assert!(load.entries().iter().all(|&(_, v)| v == 0.0));
        assert_eq!(load.provenance, Provenance::Adjoint);
    }

    #[test]
    fn adjoint_load_support_is_the_output_dofs() {
        let net = build_triangular_lattice(&LatticeSpec::new(3, 4)).unwrap();
        let dofs = DofMap::new(&net);
        let spec = LossSpec::Mse {
            targets: vec![
                MseTarget {
                    node: 0,
                    axis: Axis::Y,
                    target: 0.001,
                },
                MseTarget {
                    node: 3,
                    axis: Axis::X,
                    target: 0.002,
                },
            ],
        };
        let u = DVector::from_element(dofs.n_free(), 0.01);
        let load = adjoint_load(&spec, &dofs, &u).unwrap();
        let mut dofs_in_load: Vec<usize> = load.entries().iter().map(|&(d, _)| d).collect();
        dofs_in_load.sort();
        let mut expected = spec.output_dofs(&dofs).unwrap();
        expected.sort();
        assert_eq!(dofs_in_load, expected);
    }

    #[test]
    fn solve_budget_is_two_regardless_of_bond_count() {
        for m in [5usize, 20, 60] {
            let net = fan(m);
            let dofs = DofMap::new(&net);
            let load =
                LoadCase::from_nodal_forces(&dofs, &[(0, Axis::Y, -0.3)], Provenance::External)
                    .unwrap();
            let spec = LossSpec::Quadratic {
                node: 0,
                axis: Axis::Y,
                offset: 0.01,
            };
            let before = crate::statics::solver_calls();
            let rep = gradient(&net, &load, &spec).unwrap();
            assert_eq!(rep.solves_used, 2);
            assert_eq!(crate::statics::solver_calls() - before, 2);
            assert_eq!(rep.grad.len(), m);
        }
    }

    #[test]
    fn single_sample_batch_equals_gradient() {
        let net = build_triangular_lattice(&LatticeSpec::new(3, 3)).unwrap();
        let dofs = DofMap::new(&net);
        let load = LoadCase::from_nodal_forces(&dofs, &[(1, Axis::Y, -0.2)], Provenance::External)
            .unwrap();
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::Y,
            offset: 0.005,
        };
        let single = gradient(&net, &load, &spec).unwrap();
        let batch = batch_gradient(&net, &[(load.clone(), spec.clone())]).unwrap();
        assert_eq!(single.grad, batch.grad);
        // duplicating the dataset leaves the mean unchanged
        let doubled = batch_gradient(&net, &[(load.clone(), spec.clone()), (load, spec)]).unwrap();
        for (a, b) in single.grad.iter().zip(&doubled.grad) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(doubled.solves_used, 4);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let net = build_triangular_lattice(&LatticeSpec::new(3, 3)).unwrap();
        assert!(matches!(
            batch_gradient(&net, &[]),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn mirrored_samples_give_mirror_symmetric_gradient() {
        // Mirror-symmetric lattice; two samples whose loads and quadratic
        // losses are mirror images. Mirror-image bonds must carry equal
        // gradient components.
        let mut spec = LatticeSpec::new(2, 5);
        spec.spacing = 1.0;
        spec.alternating = true;
        spec.fixed = vec![crate::lattice::NodeSelector::TopRow];
        let net = build_triangular_lattice(&spec).unwrap();
        let dofs = DofMap::new(&net);

        let width = 4.0;
        let mirror_node = |id: usize| -> usize {
            let p = net.nodes[id].position;
            net.nodes
                .iter()
                .find(|n| {
                    (n.position[0] - (width - p[0])).abs() < 1e-9
                        && (n.position[1] - p[1]).abs() < 1e-9
                })
                .unwrap()
                .id
        };
        let mirror_bond = |b: &Bond| -> usize {
            let (mi, mj) = (mirror_node(b.i), mirror_node(b.j));
            net.bonds
                .iter()
                .find(|o| (o.i == mi && o.j == mj) || (o.i == mj && o.j == mi))
                .unwrap()
                .id
        };

        let left = 1usize;
        let right = mirror_node(left);
        let mk = |node: usize| {
            (
                LoadCase::from_nodal_forces(&dofs, &[(node, Axis::Y, -0.5)], Provenance::External)
                    .unwrap(),
                LossSpec::Quadratic {
                    node,
                    axis: Axis::Y,
                    offset: 0.02,
                },
            )
        };
        let rep = batch_gradient(&net, &[mk(left), mk(right)]).unwrap();
        for b in &net.bonds {
            let mb = mirror_bond(b);
            assert!(
                (rep.grad[b.id] - rep.grad[mb]).abs() < 1e-12,
                "bond {} vs mirror {}: {} vs {}",
                b.id,
                mb,
                rep.grad[b.id],
                rep.grad[mb]
            );
        }
    }

    #[test]
    fn descent_step_on_any_single_bond_does_not_increase_loss() {
        let net = build_triangular_lattice(&LatticeSpec::new(3, 4)).unwrap();
        let dofs = DofMap::new(&net);
        let load = LoadCase::from_nodal_forces(&dofs, &[(1, Axis::Y, -0.5)], Provenance::External)
            .unwrap();
        // offset chosen so the residual is positive at the solution
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::Y,
            offset: 0.05,
        };
        let rep = gradient(&net, &load, &spec).unwrap();
        let k_ref = 2.5;
        for alpha in [1e-6 * k_ref, 1e-5 * k_ref] {
            for (b, &g) in rep.grad.iter().enumerate() {
                let mut k = net.stiffness();
                k[b] -= alpha * g;
                let perturbed = net.with_stiffness(&k).unwrap();
                let sol = crate::statics::solve_statics(&perturbed, &load).unwrap();
                let l = spec.value(&dofs, &sol.u).unwrap();
                assert!(
                    l <= rep.loss * (1.0 + 1e-9),
                    "bond {b}: loss rose from {} to {l}",
                    rep.loss
                );
            }
        }
    }
}
