//! Linear regression with a spring network.
//!
//! Two output nodes learn to trace prescribed lines under a varying
//! downward force: the right node sinks straight down (no horizontal
//! motion, slope 0.016 m/N) while the left node moves on a 4:1
//! vertical-to-horizontal line. Runs the clean dataset and a noisy one.
//!
//! Writes training histories under `out/regression/`.
//!
//! ```bash
//! cargo run --release --example linear_regression
//! ```

use mnn::io::history_csv;
use mnn::lattice::build_triangular_lattice;
use mnn::tasks::{evaluate_regression, gen_regression_dataset, Task};
use mnn::trainer::train;
use mnn::{presets, Error};

fn main() -> Result<(), Error> {
    let out_dir = std::path::Path::new("out/regression");
    std::fs::create_dir_all(out_dir)?;
    let targets = [0.0, 0.016, 0.004, 0.016];

    for (sigma, name) in [(0.0, "clean"), (1e-4, "noisy")] {
        let scenario = presets::regression(sigma, 0);
        let net = build_triangular_lattice(&scenario.lattice)?;
        let Task::Regression(task) = &scenario.task else {
            unreachable!()
        };

        let (trained, record) = train(&net, &scenario.task, &scenario.train)?;
        let eval = evaluate_regression(&trained, task, &task.evaluation_sweep())?;
        let ds = gen_regression_dataset(task, scenario.train.seed);
        let on_data = evaluate_regression(&trained, task, &ds)?;

        println!("{name} dataset (σ = {sigma:.0e} m):");
        println!("  output        target [m/N]   fitted [m/N]");
        for (label, j) in [
            ("right out", 0),
            ("right down", 1),
            ("left out", 2),
            ("left down", 3),
        ] {
            println!(
                "  {label:<12}  {:>10.4}   {:+.6}",
                targets[j], eval.slopes[j]
            );
        }
        println!(
            "  dataset MSE = {:.3e} m², loss {:.3e} -> {:.3e} over {} epochs\n",
            on_data.mse,
            record.history.first().unwrap().loss_train,
            record.history.last().unwrap().loss_train,
            record.history.len()
        );
        std::fs::write(
            out_dir.join(format!("history_{name}.csv")),
            history_csv(&record),
        )?;
    }
    println!("histories in {}", out_dir.display());
    Ok(())
}
