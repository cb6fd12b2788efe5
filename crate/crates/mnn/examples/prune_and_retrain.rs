//! Damage and recovery.
//!
//! Trains the Iris classifier, ranks the bonds by the magnitude of the
//! loss gradient over the training split, and prunes the most important
//! one. The stored model degrades sharply; retraining the damaged network
//! recovers most of the lost accuracy.
//!
//! ```bash
//! cargo run --release --example prune_and_retrain
//! ```

use mnn::adjoint::batch_gradient;
use mnn::lattice::build_triangular_lattice;
use mnn::statics::DofMap;
use mnn::tasks::evaluate_classification;
use mnn::trainer::{retrain, train};
use mnn::{presets, Error};

fn main() -> Result<(), Error> {
    let seed = 0;
    let scenario = presets::iris(seed);
    let net = build_triangular_lattice(&scenario.lattice)?;

    let (trained, record) = train(&net, &scenario.task, &scenario.train)?;
    let acc_before = record.history.last().unwrap().metric;
    println!("trained classifier: test accuracy {acc_before:.3}");

    // gradient saliency over the training split
    let dofs = DofMap::new(&trained);
    let samples = scenario.task.samples(&trained, &dofs, seed)?;
    let train_set: Vec<_> = record
        .train_indices
        .iter()
        .map(|&i| (samples[i].load.clone(), samples[i].loss.clone()))
        .collect();
    let test_set: Vec<_> = record
        .test_indices
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    let rep = batch_gradient(&trained, &train_set)?;

    let mut ranked: Vec<usize> = (0..rep.grad.len()).collect();
    ranked.sort_by(|&a, &b| rep.grad[b].abs().total_cmp(&rep.grad[a].abs()));
    println!("most important bonds by |∇L|: {:?}", &ranked[..5]);

    // prune the highest-impact bond that leaves the network solvable
    let mut pruned = None;
    for &bond in &ranked {
        let (candidate, _) = trained.prune_bond(bond)?;
        match evaluate_classification(&candidate, &test_set) {
            Ok(eval) => {
                pruned = Some((bond, candidate, eval.accuracy));
                break;
            }
            Err(err) => println!("bond {bond} cannot be pruned: {err}"),
        }
    }
    let (bond, damaged, acc_pruned) = pruned.expect("some bond is prunable");
    println!(
        "pruned bond {bond}: test accuracy {acc_pruned:.3} ({:+.1} points)",
        (acc_pruned - acc_before) * 100.0
    );

    let (_, rec2) = retrain(&damaged, &scenario.task, &scenario.train)?;
    let acc_after = rec2.history.last().unwrap().metric;
    println!(
        "retrained damaged network: test accuracy {acc_after:.3} (recovered {:+.1} points)",
        (acc_after - acc_pruned) * 100.0
    );
    Ok(())
}
