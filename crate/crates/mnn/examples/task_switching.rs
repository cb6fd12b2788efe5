//! Retrain one network across tasks: classification → regression →
//! classification, each stage warm-started from the previous stage's
//! spring constants. The physical system keeps switching jobs without
//! being rebuilt.
//!
//! ```bash
//! cargo run --release --example task_switching
//! ```

use mnn::lattice::build_triangular_lattice;
use mnn::tasks::{evaluate_regression, Task};
use mnn::trainer::{retrain, train};
use mnn::{presets, Error};

fn main() -> Result<(), Error> {
    let seed = 0;
    let iris = presets::iris(seed);
    let regression = presets::regression(0.0, seed);
    let net = build_triangular_lattice(&iris.lattice)?;

    println!("stage 1: Iris classification from the uniform lattice");
    let (net1, rec1) = train(&net, &iris.task, &iris.train)?;
    println!(
        "  test accuracy {:.3} after {} epochs",
        rec1.history.last().unwrap().metric,
        rec1.history.len()
    );

    println!("stage 2: linear regression, warm-started from the classifier");
    let (net2, rec2) = retrain(&net1, &regression.task, &regression.train)?;
    let Task::Regression(rt) = &regression.task else {
        unreachable!()
    };
    let eval = evaluate_regression(&net2, rt, &rt.evaluation_sweep())?;
    println!(
        "  fitted slopes ({:+.6}, {:+.6}, {:+.6}, {:+.6}) m/N after {} epochs",
        eval.slopes[0],
        eval.slopes[1],
        eval.slopes[2],
        eval.slopes[3],
        rec2.history.len()
    );

    println!("stage 3: Iris classification again, warm-started from the regressor");
    let (_, rec3) = retrain(&net2, &iris.task, &iris.train)?;
    println!(
        "  test accuracy {:.3} after {} epochs",
        rec3.history.last().unwrap().metric,
        rec3.history.len()
    );
    Ok(())
}
