//! Why the two-solve gradient beats difference quotients.
//!
//! Left: the forward-difference error against the exact gradient traces a
//! U-curve over the step size — roundoff error below the optimum,
//! truncation error above it. Right: the solve count of the difference
//! quotient grows linearly with the bond count while the two-solve path
//! stays at 2.
//!
//! ```bash
//! cargo run --release --example step_size_sweep
//! ```

use mnn::fd::{fd_gradient, log_steps, step_sweep, FdConfig};
use mnn::lattice::{build_triangular_lattice, LatticeSpec, NodeSelector};
use mnn::losses::LossSpec;
use mnn::statics::{Axis, DofMap, LoadCase, Provenance};
use mnn::{adjoint, Error};

fn main() -> Result<(), Error> {
    let mut spec = LatticeSpec::new(3, 3);
    spec.fixed = vec![NodeSelector::TopRow];
    let net = build_triangular_lattice(&spec)?;
    let dofs = DofMap::new(&net);
    let load = LoadCase::from_nodal_forces(&dofs, &[(1, Axis::Y, -0.294)], Provenance::External)?;
    let loss = LossSpec::Quadratic {
        node: 0,
        axis: Axis::Y,
        offset: 0.02,
    };

    let sweep = step_sweep(&net, &load, &loss, &log_steps(1e-10, 1e-2, 2))?;
    println!("delta_k [N/m]   max relative error");
    for row in &sweep.rows {
        let marker = if row.delta == sweep.argmin.delta {
            "  <- best"
        } else {
            ""
        };
        println!("{:>12.3e}   {:.3e}{marker}", row.delta, row.max_rel_error);
    }
    println!();

    println!("bonds   two-solve   forward diff   central diff");
    for cols in [3usize, 5, 8] {
        let mut s = LatticeSpec::new(3, cols);
        s.fixed = vec![NodeSelector::TopRow];
        let n = build_triangular_lattice(&s)?;
        let d = DofMap::new(&n);
        let l = LoadCase::from_nodal_forces(&d, &[(1, Axis::Y, -0.294)], Provenance::External)?;
        let q = LossSpec::Quadratic {
            node: 0,
            axis: Axis::Y,
            offset: 0.02,
        };
        let adj = adjoint::gradient(&n, &l, &q)?;
        let fwd = fd_gradient(&n, &l, &q, &FdConfig::forward(1e-6))?;
        let cen = fd_gradient(&n, &l, &q, &FdConfig::central(1e-6))?;
        println!(
            "{:5}   {:9}   {:12}   {:12}",
            n.n_bonds(),
            adj.solves_used,
            fwd.solves_used,
            cen.solves_used
        );
    }
    Ok(())
}
