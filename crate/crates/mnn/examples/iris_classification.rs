//! Iris flower classification on a spring network.
//!
//! Each of the four flower features scales a weight hung from its own
//! input node; the predicted species is the output node with the largest
//! horizontal swing. Trains on a seeded 70/30 split and reports accuracy
//! per class.
//!
//! ```bash
//! cargo run --release --example iris_classification
//! ```

use mnn::io::history_csv;
use mnn::lattice::build_triangular_lattice;
use mnn::statics::DofMap;
use mnn::tasks::{evaluate_classification, IRIS_CLASSES};
use mnn::trainer::train;
use mnn::{presets, Error};

fn main() -> Result<(), Error> {
    let out_dir = std::path::Path::new("out/iris");
    std::fs::create_dir_all(out_dir)?;

    let scenario = presets::iris(0);
    let net = build_triangular_lattice(&scenario.lattice)?;
    let (trained, record) = train(&net, &scenario.task, &scenario.train)?;

    let dofs = DofMap::new(&trained);
    let samples = scenario
        .task
        .samples(&trained, &dofs, scenario.train.seed)?;
    let test: Vec<_> = record
        .test_indices
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    let eval = evaluate_classification(&trained, &test)?;

    println!(
        "training loss {:.4} -> {:.4} over {} epochs",
        record.history.first().unwrap().loss_train,
        record.history.last().unwrap().loss_train,
        record.history.len()
    );
    println!(
        "test accuracy: {:.3} ({} / {} flowers)",
        eval.accuracy, eval.n_correct, eval.n_total
    );

    // per-class breakdown on the held-out split
    let mut per_class = [[0usize; 2]; 3]; // [correct, total]
    for (sample, &pred) in test.iter().zip(&eval.predictions) {
        let mnn::losses::LossSpec::CrossEntropy { label, .. } = &sample.loss else {
            unreachable!()
        };
        per_class[*label][1] += 1;
        if pred == *label {
            per_class[*label][0] += 1;
        }
    }
    for (class, [correct, total]) in IRIS_CLASSES.iter().zip(per_class) {
        println!("  {class:<11} {correct:>2} / {total}");
    }

    std::fs::write(out_dir.join("history.csv"), history_csv(&record))?;
    println!("history in {}", out_dir.display());
    Ok(())
}
