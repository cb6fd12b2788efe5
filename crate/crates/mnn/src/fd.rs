//! Finite-difference gradient baseline.
//!
//! Perturbs one spring constant at a time and re-solves, so the cost grows
//! linearly with the number of bonds: `m + 1` solves for the forward scheme
//! (the unperturbed baseline is shared) and `2m` for the central scheme.
//! Used to validate the two-solve gradient and to reproduce its cost
//! advantage.

use serde::{Deserialize, Serialize};

use crate::adjoint::{self, GradientReport};
use crate::error::{Error, Result};
use crate::lattice::Network;
use crate::losses::LossSpec;
use crate::statics::{LoadCase, Operator};

/// Difference scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `(L(k + δ) − L(k)) / δ`
    Forward,
    /// `(L(k + δ) − L(k − δ)) / (2δ)`
    Central,
}

/// Step configuration for [`fd_gradient`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub scheme: Scheme,
    /// Step size δk, N/m.
    pub delta: f64,
    /// When set, each bond's step is `delta · k_b` instead of `delta`.
    #[serde(default)]
    pub scale_by_k: bool,
}

impl FdConfig {
    pub fn forward(delta: f64) -> Self {
        FdConfig {
            scheme: Scheme::Forward,
            delta,
            scale_by_k: false,
        }
    }

    pub fn central(delta: f64) -> Self {
        FdConfig {
            scheme: Scheme::Central,
            delta,
            scale_by_k: false,
        }
    }

    fn step_for(&self, k: f64) -> f64 {
        if self.scale_by_k {
            self.delta * k
        } else {
            self.delta
        }
    }
}

fn loss_at(net: &Network, load: &LoadCase, spec: &LossSpec, bond: usize) -> Result<f64> {
    let op = Operator::new(net).map_err(|e| match e {
        Error::ZeroMode(diag) => Error::ZeroModeAtPerturbation { bond, diag },
        other => other,
    })?;
    let sol = op.solve(load)?;
    spec.value(op.dofs(), &sol.u)
}

/// Difference-quotient gradient of the loss with respect to every spring
/// constant. Every perturbed point must itself be zero-mode free.
pub fn fd_gradient(
    net: &Network,
    load: &LoadCase,
    spec: &LossSpec,
    cfg: &FdConfig,
) -> Result<GradientReport> {
    if !(cfg.delta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "δk > 0 required, got {}",
            cfg.delta
        )));
    }
    let k0 = net.stiffness();
    for (b, &k) in k0.iter().enumerate() {
        if cfg.scheme == Scheme::Central && k - cfg.step_for(k) < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "central step {} exceeds stiffness {} on bond {}",
                cfg.step_for(k),
                k,
                b
            )));
        }
    }

    let m = k0.len();
    let mut grad = vec![0.0; m];
    let mut solves = 0usize;

    // Baseline, shared across all forward-scheme perturbations.
    let (base_loss, forward) = {
        let op = Operator::new(net)?;
        let sol = op.solve(load)?;
        solves += 1;
        (spec.value(op.dofs(), &sol.u)?, sol)
    };

    for b in 0..m {
        let h = cfg.step_for(k0[b]);
        let mut k_up = k0.clone();
        k_up[b] += h;
        let up = loss_at(&net.with_stiffness(&k_up)?, load, spec, b)?;
        solves += 1;
        match cfg.scheme {
            Scheme::Forward => grad[b] = (up - base_loss) / h,
            Scheme::Central => {
                let mut k_dn = k0.clone();
                k_dn[b] -= h;
                let dn = loss_at(&net.with_stiffness(&k_dn)?, load, spec, b)?;
                solves += 1;
                grad[b] = (up - dn) / (2.0 * h);
            }
        }
    }

    // The central scheme never uses the baseline solve.
    if cfg.scheme == Scheme::Central {
        solves -= 1;
    }

    Ok(GradientReport {
        grad,
        forward,
        adjoint: None,
        solves_used: solves,
        loss: base_loss,
    })
}

/// One row of a step-size sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    /// `max_b |fd_b − ref_b| / max_b |ref_b|` against the two-solve gradient.
    pub max_rel_error: f64,
}

/// Error of the forward difference quotient at each step size, measured
/// against the two-solve gradient as reference.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSweep {
    pub rows: Vec<SweepRow>,
    /// Step with the smallest error.
    pub argmin: SweepRow,
}

/// Sweep the forward-difference step size and tabulate the error against
/// the adjoint gradient.
pub fn step_sweep(
    net: &Network,
    load: &LoadCase,
    spec: &LossSpec,
    steps: &[f64],
) -> Result<StepSweep> {
    if steps.is_empty() {
        return Err(Error::InvalidConfig("step sweep needs ≥ 1 step".into()));
    }
    let reference = adjoint::gradient(net, load, spec)?;
    let scale = reference
        .grad
        .iter()
        .fold(0.0f64, |acc, g| acc.max(g.abs()))
        .max(f64::MIN_POSITIVE);

    let mut rows = Vec::with_capacity(steps.len());
    for &delta in steps {
        let fd = fd_gradient(net, load, spec, &FdConfig::forward(delta))?;
        let err = fd
            .grad
            .iter()
            .zip(&reference.grad)
            .fold(0.0f64, |acc, (f, r)| acc.max((f - r).abs()))
            / scale;
        rows.push(SweepRow {
            delta,
            max_rel_error: err,
        });
    }
    let argmin = *rows
        .iter()
        .min_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .unwrap();
    Ok(StepSweep { rows, argmin })
}

/// Log-spaced steps from `lo` to `hi` inclusive, `per_decade` points per
/// decade.
pub fn log_steps(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(i as f64 / per_decade as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_triangular_lattice, Bond, LatticeSpec, Network, Node};
    use crate::statics::{Axis, DofMap, Provenance};
    use crate::testutil::{fan, s1_pinned};

    fn quadratic_case(net: &Network) -> (LoadCase, LossSpec) {
        let dofs = DofMap::new(net);
        (
            LoadCase::from_nodal_forces(&dofs, &[(0, Axis::X, 1.0)], Provenance::External).unwrap(),
            LossSpec::Quadratic {
                node: 0,
                axis: Axis::X,
                offset: 0.0,
            },
        )
    }

    #[test]
    fn forward_difference_matches_closed_form() {
        let net = s1_pinned();
        let (load, spec) = quadratic_case(&net);
        let rep = fd_gradient(&net, &load, &spec, &FdConfig::forward(1e-6)).unwrap();
        assert!((rep.grad[0] + 0.25).abs() < 1e-6);
        assert!((rep.grad[1] + 0.25).abs() < 1e-6);
        assert!(rep.grad[2].abs() < 1e-6);
        assert_eq!(rep.solves_used, 4); // m + 1
    }

    #[test]
    fn solve_counts_scale_with_bonds() {
        let net = fan(30);
        let dofs = DofMap::new(&net);
        let load = LoadCase::from_nodal_forces(&dofs, &[(0, Axis::Y, -0.2)], Provenance::External)
            .unwrap();
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::Y,
            offset: 0.01,
        };

        let fwd = fd_gradient(&net, &load, &spec, &FdConfig::forward(1e-6)).unwrap();
        assert_eq!(fwd.solves_used, 31);

        let cen = fd_gradient(&net, &load, &spec, &FdConfig::central(1e-6)).unwrap();
        assert_eq!(cen.solves_used, 60);

        let adj = crate::adjoint::gradient(&net, &load, &spec).unwrap();
        assert_eq!(adj.solves_used, 2);
    }

    #[test]
    fn central_beats_forward_at_forward_argmin() {
        let net = build_triangular_lattice(&LatticeSpec::new(3, 3)).unwrap();
        let dofs = DofMap::new(&net);
        let load = LoadCase::from_nodal_forces(&dofs, &[(1, Axis::Y, -0.3)], Provenance::External)
            .unwrap();
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::Y,
            offset: 0.02,
        };
        let sweep = step_sweep(&net, &load, &spec, &log_steps(1e-10, 1e-2, 2)).unwrap();
        let delta = sweep.argmin.delta;

        let reference = crate::adjoint::gradient(&net, &load, &spec).unwrap();
        let scale = reference.grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        let err = |rep: &GradientReport| {
            rep.grad
                .iter()
                .zip(&reference.grad)
                .fold(0.0f64, |a, (f, r)| a.max((f - r).abs()))
                / scale
        };
        let fwd = fd_gradient(&net, &load, &spec, &FdConfig::forward(delta)).unwrap();
        let cen = fd_gradient(&net, &load, &spec, &FdConfig::central(delta)).unwrap();
        assert!(err(&cen) <= err(&fwd));
    }

    #[test]
    fn sweep_has_interior_minimum() {
        let net = build_triangular_lattice(&LatticeSpec::new(3, 3)).unwrap();
        let dofs = DofMap::new(&net);
        let load = LoadCase::from_nodal_forces(&dofs, &[(1, Axis::Y, -0.3)], Provenance::External)
            .unwrap();
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::Y,
            offset: 0.02,
        };
        let sweep = step_sweep(&net, &load, &spec, &log_steps(1e-10, 1e-2, 1)).unwrap();
        let first = sweep.rows.first().unwrap();
        let last = sweep.rows.last().unwrap();
        assert!(sweep.argmin.max_rel_error < first.max_rel_error);
        assert!(sweep.argmin.max_rel_error < last.max_rel_error);
        assert!(sweep.argmin.max_rel_error <= 1e-5);
        // optimal step within two decades of 1e-6 for O(1) stiffness
        assert!(sweep.argmin.delta >= 1e-8 && sweep.argmin.delta <= 1e-4);
    }

    #[test]
    fn central_agrees_with_adjoint_across_seeds() {
        use rand::Rng;
        use rand::SeedableRng;
        for seed in 0u64..5 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut spec = LatticeSpec::new(3, 3);
            spec.fixed = vec![crate::lattice::NodeSelector::TopRow];
            let net = build_triangular_lattice(&spec).unwrap();
            let (lo, hi) = net.k_bounds;
            let k: Vec<f64> = (0..net.n_bonds())
                .map(|_| rng.random_range(lo..hi))
                .collect();
            let net = net.with_stiffness(&k).unwrap();
            let dofs = DofMap::new(&net);
            let load = LoadCase::from_nodal_forces(
                &dofs,
                &[(
                    rng.random_range(0..3),
                    Axis::Y,
                    -rng.random_range(0.05..0.4),
                )],
                Provenance::External,
            )
            .unwrap();
            let spec_loss = LossSpec::Quadratic {
                node: 1,
                axis: Axis::Y,
                offset: 0.02,
            };
            let adj = crate::adjoint::gradient(&net, &load, &spec_loss).unwrap();
            let cen = fd_gradient(&net, &load, &spec_loss, &FdConfig::central(1e-6)).unwrap();
            let scale = adj.grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
            let dev = adj
                .grad
                .iter()
                .zip(&cen.grad)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
                / scale;
            assert!(dev <= 1e-6, "seed {seed}: deviation {dev:e}");
        }
    }

    #[test]
    fn oversized_central_step_is_rejected() {
        let net = s1_pinned();
        let (load, spec) = quadratic_case(&net);
        let err = fd_gradient(&net, &load, &spec, &FdConfig::central(1.5)).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn rigidity_loss_at_perturbed_point_names_the_bond() {
        // two perpendicular bonds on one free node: zeroing either one
        // leaves a zero mode
        let net = Network {
            nodes: vec![
                Node {
                    id: 0,
                    position: [0.0, 0.0],
                    fixed: false,
                },
                Node {
                    id: 1,
                    position: [1.0, 0.0],
                    fixed: true,
                },
                Node {
                    id: 2,
                    position: [0.0, 1.0],
                    fixed: true,
                },
            ],
            bonds: vec![
                Bond {
                    id: 0,
                    i: 0,
                    j: 1,
                    k: 1.0,
                    rest_length: 1.0,
                },
                Bond {
                    id: 1,
                    i: 0,
                    j: 2,
                    k: 1.0,
                    rest_length: 1.0,
                },
            ],
            k_bounds: (0.0, 10.0),
        };
        let dofs = DofMap::new(&net);
        let load =
            LoadCase::from_nodal_forces(&dofs, &[(0, Axis::X, 0.1)], Provenance::External).unwrap();
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::X,
            offset: 0.0,
        };
        let cfg = FdConfig {
            scheme: Scheme::Central,
            delta: 1.0,
            scale_by_k: true,
        };
        match fd_gradient(&net, &load, &spec, &cfg) {
            Err(Error::ZeroModeAtPerturbation { bond: 0, .. }) => {}
            other => panic!("expected zero mode at bond 0, got {other:?}"),
        }
    }
}
