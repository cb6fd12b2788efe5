//! The two-solve gradient, end to end.
//!
//! Builds the standard lattice, applies a 10 g weight, and computes the
//! gradient of a quadratic loss on a remote node's vertical displacement:
//! one forward solve for the elongations `e`, one adjoint solve (driven by
//! the negated loss gradient at the output node) for `e_adj`, and the
//! per-bond gradient is `e_adj ∘ e`. A central-difference check and the
//! solve accounting run alongside.
//!
//! ```bash
//! cargo run --release --example in_situ_gradient
//! ```

use mnn::adjoint;
use mnn::fd::{fd_gradient, FdConfig};
use mnn::lattice::build_triangular_lattice;
use mnn::losses::LossSpec;
use mnn::statics::{grams_to_newtons, newtons_to_grams, Axis, DofMap, LoadCase, Provenance};
use mnn::{presets, Error};

fn main() -> Result<(), Error> {
    let net = build_triangular_lattice(&presets::lattice())?;
    let dofs = DofMap::new(&net);

    // 10 g hung on a bottom node; loss on the vertical displacement of a
    // node four columns to its left
    let input = 7;
    let output = 3;
    let load = LoadCase::from_nodal_forces(
        &dofs,
        &[(input, Axis::Y, -grams_to_newtons(10.0))],
        Provenance::External,
    )?;
    let loss = LossSpec::Quadratic {
        node: output,
        axis: Axis::Y,
        offset: 0.025,
    };

    let rep = adjoint::gradient(&net, &load, &loss)?;
    let u_out = rep.forward.u[dofs.dof(output, Axis::Y)?];
    let adj = rep.adjoint.as_ref().expect("adjoint path");
    let adj_force = -2.0 * (u_out + 0.025);

    println!(
        "forward solve: u_y(output node {output}) = {:.4} mm",
        u_out * 1e3
    );
    println!(
        "adjoint load at the output node: {:.5} N (a {:.2} g weight)",
        adj_force,
        newtons_to_grams(adj_force.abs())
    );
    println!("loss L = (u + 0.025)^2 = {:.6e}\n", rep.loss);

    println!("bond    e [mm]      e_adj [mm]   grad = e_adj*e");
    for b in (0..net.n_bonds()).step_by(14) {
        println!(
            "{b:4}  {:+.6}   {:+.6}   {:+.3e}",
            rep.forward.e[b] * 1e3,
            adj.e[b] * 1e3,
            rep.grad[b]
        );
    }

    // independent check: central differences, one bond at a time
    let fd = fd_gradient(
        &net,
        &load,
        &loss,
        &FdConfig::central(1e-6 * net.k_bounds.1),
    )?;
    let scale = rep.grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let dev = rep
        .grad
        .iter()
        .zip(&fd.grad)
        .fold(0.0f64, |a, (g, f)| a.max((g - f).abs()))
        / scale;
    println!("\nmax relative deviation from central differences: {dev:.3e}");
    println!(
        "solves used: {} (two-solve path) vs {} (central differences over {} bonds)",
        rep.solves_used,
        fd.solves_used,
        net.n_bonds()
    );
    Ok(())
}
