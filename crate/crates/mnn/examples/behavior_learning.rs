//! Teach a symmetric lattice to favor one output node.
//!
//! Before training, the two output nodes sit mirror-symmetric around the
//! loaded center node and move identically. Cross-entropy over their
//! vertical displacement magnitudes pushes the labeled node to move more;
//! training the mirrored label produces the mirrored network.
//!
//! Writes SVG drawings of the trained networks under `out/behavior/`.
//!
//! ```bash
//! cargo run --release --example behavior_learning
//! ```

use mnn::io::network_to_string;
use mnn::lattice::build_triangular_lattice;
use mnn::render::{render_svg, RenderOptions};
use mnn::tasks::{evaluate_behavior, BehaviorLabel, Task};
use mnn::trainer::train;
use mnn::{presets, Error};

fn main() -> Result<(), Error> {
    let out_dir = std::path::Path::new("out/behavior");
    std::fs::create_dir_all(out_dir)?;

    for (label, name) in [
        (BehaviorLabel::Left, "left"),
        (BehaviorLabel::Right, "right"),
    ] {
        let scenario = presets::behavior(label, 0);
        let net = build_triangular_lattice(&scenario.lattice)?;
        let Task::Behavior(task) = &scenario.task else {
            unreachable!()
        };

        let before = evaluate_behavior(&net, task)?;
        let (trained, record) = train(&net, &scenario.task, &scenario.train)?;
        let after = evaluate_behavior(&trained, task)?;

        println!("label = {name}");
        println!(
            "  before: u_Ly = {:+.4} mm, u_Ry = {:+.4} mm, |Δ| = {:.2e} mm",
            before.u_left_y * 1e3,
            before.u_right_y * 1e3,
            before.delta_abs * 1e3
        );
        println!(
            "  after:  u_Ly = {:+.4} mm, u_Ry = {:+.4} mm, |Δ| = {:.4} mm",
            after.u_left_y * 1e3,
            after.u_right_y * 1e3,
            after.delta_abs * 1e3
        );
        println!(
            "  loss: {:.4} -> {:.4} over {} epochs\n",
            record.history.first().unwrap().loss_train,
            record.history.last().unwrap().loss_train,
            record.history.len()
        );

        let opts = RenderOptions {
            inputs: vec![task.input],
            outputs: vec![task.left, task.right],
        };
        std::fs::write(
            out_dir.join(format!("{name}.svg")),
            render_svg(&trained, &opts),
        )?;
        std::fs::write(
            out_dir.join(format!("{name}.json")),
            network_to_string(&trained),
        )?;
    }
    println!("trained networks and drawings in {}", out_dir.display());
    Ok(())
}
