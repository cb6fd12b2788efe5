//! Mechanical stability under damage.
//!
//! Removes bonds from a small lattice one at a time and watches the
//! stiffness spectrum: most removals leave the network solvable, but
//! stripping a corner node's second bond frees it to swing — a zero mode
//! — and the static problem becomes singular.
//!
//! ```bash
//! cargo run --release --example zero_modes
//! ```

use mnn::lattice::{build_triangular_lattice, LatticeSpec, NodeSelector};
use mnn::statics::detect_zero_modes;
use mnn::Error;

fn main() -> Result<(), Error> {
    let mut spec = LatticeSpec::new(3, 4);
    spec.fixed = vec![NodeSelector::TopRow];
    let net = build_triangular_lattice(&spec)?;
    println!(
        "3x4 lattice, top row glued: {} nodes, {} bonds",
        net.n_nodes(),
        net.n_bonds()
    );

    let report = detect_zero_modes(&net)?;
    println!(
        "intact: positive definite = {}, smallest eigenvalue {:.3e}\n",
        report.positive_definite, report.min_eigenvalue
    );

    // strip the bottom-left corner node bond by bond
    let corner = 0;
    let incident: Vec<usize> = net
        .bonds
        .iter()
        .filter(|b| b.i == corner || b.j == corner)
        .map(|b| b.id)
        .collect();
    println!("bonds holding corner node {corner}: {incident:?}");

    let mut current = net;
    for (step, bond) in incident.iter().enumerate().rev() {
        let (next, _) = current.prune_bond(*bond).unwrap();
        current = next;
        let report = detect_zero_modes(&current)?;
        println!(
            "after removing bond {bond}: {} zero mode(s), min eigenvalue {:+.3e}",
            report.modes, report.min_eigenvalue
        );
        if let Some(v) = &report.null_vector {
            let (node, axis) = {
                let dofs = mnn::statics::DofMap::new(&current);
                let idx = v
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .unwrap()
                    .0;
                dofs.owner(idx)
            };
            println!(
                "  dominant null direction: node {node}, {} axis",
                axis.name()
            );
        }
        let _ = step;
    }
    Ok(())
}
