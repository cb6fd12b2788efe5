//! Mechanical neural networks: linear-elastic spring networks trained by
//! in situ backpropagation.
//!
//! A spring network responds to nodal forces with nodal displacements
//! through static equilibrium, `D u = F`. Treating the per-bond spring
//! constants as learnable parameters turns the structure into a machine:
//! the gradient of any loss over the displacements is obtained from just
//! two solves — the forward problem and an adjoint problem driven from the
//! output nodes — as the elementwise product of the two elongation fields.
//! Adam steps under box constraints on the spring constants do the rest.
//!
//! The crate covers the full workflow:
//!
//! - [`lattice`] — build, validate, prune triangular spring lattices
//! - [`statics`] — assemble, factor, and solve the equilibrium problem
//! - [`losses`] — quadratic / mean-squared-error / cross-entropy losses
//!   with analytic gradients
//! - [`adjoint`] — the two-solve gradient
//! - [`fd`] — finite-difference baseline for validation and cost comparison
//! - [`trainer`] — Adam with projection onto stiffness bounds
//! - [`tasks`] — behavior shaping, synthetic linear regression, and Iris
//!   classification
//! - [`io`] / [`render`] — file formats, run manifests, SVG drawings
//!
//! Start with the runnable examples (`cargo run --example in_situ_gradient`)
//! or the `mnn` command-line tool.

pub mod adjoint;
pub mod error;
pub mod fd;
pub mod io;
pub mod lattice;
pub mod losses;
pub mod presets;
pub mod render;
pub mod statics;
pub mod tasks;
pub mod trainer;

#[cfg(test)]
pub(crate) mod testutil;

pub use adjoint::{adjoint_load, batch_gradient, gradient, GradientReport};
pub use error::{Error, Result};
pub use fd::{fd_gradient, step_sweep, FdConfig, Scheme};
pub use lattice::{build_triangular_lattice, Bond, LatticeSpec, Network, Node, NodeSelector};
pub use losses::{LossSpec, MseTarget};
pub use statics::{
    detect_zero_modes, solve_statics, solver_calls, Axis, DofMap, LoadCase, Operator, Provenance,
    Solution,
};
pub use tasks::{BehaviorTask, IrisTask, RegressionTask, Sample, Task};
pub use trainer::{retrain, train, AdamState, TrainConfig, TrainRecord};
