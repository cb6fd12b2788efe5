//! Command-line front end: build lattices, solve load cases, compute and
//! check gradients, sweep finite-difference steps, train, evaluate, prune,
//! and render networks.
//!
//! Exit codes: 0 on success, 1 on runtime/model errors (zero modes,
//! solver failures), 2 on usage/configuration errors.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use mnn::error::Error;
use mnn::io::{self, RunManifest, TaskFile};
use mnn::lattice::{build_triangular_lattice, LatticeSpec, Network};
use mnn::render::{render_svg, RenderOptions};
use mnn::statics::{solver_calls, Axis, DofMap, LoadCase, Operator, Provenance};
use mnn::tasks::{evaluate_behavior, evaluate_classification, evaluate_regression, Task};
use mnn::trainer::train;
use mnn::{adjoint, fd};

#[derive(Parser)]
#[command(
    name = "mnn",
    about = "Elastic spring networks trained by in situ backpropagation",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Override the seed from the task config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Task configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory artifacts are written to.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Relative tolerance used by grad-check.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a network file from a lattice spec (or the config's lattice).
    Build {
        /// Lattice spec file (JSON). Defaults to the config's `lattice`.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Solve one static load case and write displacements and elongations.
    Solve {
        #[arg(long)]
        net: PathBuf,
        /// Node the force acts on.
        #[arg(long)]
        node: usize,
        /// Horizontal force, newtons.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        fx: f64,
        /// Vertical force, newtons (negative = downward).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        fy: f64,
    },
    /// Two-solve gradient of a task sample; writes bond_id,e,e_adj,grad.
    Grad {
        #[arg(long)]
        net: Option<PathBuf>,
        /// Dataset sample index the gradient is taken at.
        #[arg(long, default_value_t = 0)]
        sample: usize,
    },
    /// Compare the two-solve gradient against central differences.
    GradCheck {
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        sample: usize,
    },
    /// Error of the forward difference quotient across step sizes.
    SweepFd {
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        sample: usize,
        /// Sweep range as lo:hi:steps_per_decade.
        #[arg(long, default_value = "1e-10:1e-2:2")]
        steps: String,
    },
    /// Train the configured task; writes the trained network and history.
    Train {
        /// Warm-start network file; defaults to the config's lattice.
        #[arg(long)]
        net: Option<PathBuf>,
    },
    /// Evaluate a network on the configured task.
    Eval {
        #[arg(long)]
        net: PathBuf,
    },
    /// Remove one bond and write the re-densified network.
    Prune {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        bond: usize,
    },
    /// Draw a network as SVG; marker roles come from the config when given.
    Render {
        #[arg(long)]
        net: PathBuf,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidSpec(_)
        | Error::InvalidConfig(_)
        | Error::Parse { .. }
        | Error::Json(_)
        | Error::UnknownBond(_)
        | Error::UnknownNode(_)
        | Error::FixedDof { .. } => 2,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    let started = io::unix_ms();
    match run(&cli, started) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

struct Ctx {
    out: PathBuf,
    command: String,
    inputs: Vec<Vec<u8>>,
    artifacts: Vec<String>,
    seed: Option<u64>,
    started: u128,
}

impl Ctx {
    fn new(cli: &Cli, started: u128) -> Result<Self, Error> {
        std::fs::create_dir_all(&cli.out)?;
        Ok(Ctx {
            out: cli.out.clone(),
            command: std::env::args().collect::<Vec<_>>().join(" "),
            inputs: Vec::new(),
            artifacts: Vec::new(),
            seed: cli.seed,
            started,
        })
    }

    fn read_input(&mut self, path: &Path) -> Result<String, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(text.clone().into_bytes());
        Ok(text)
    }

    fn write_artifact(&mut self, name: &str, content: &str) -> Result<PathBuf, Error> {
        let path = self.out.join(name);
        std::fs::write(&path, content)?;
        self.artifacts.push(path.display().to_string());
        Ok(path)
    }

    fn finish(&self) -> Result<(), Error> {
        let chunks: Vec<&[u8]> = self.inputs.iter().map(|v| v.as_slice()).collect();
        let manifest = RunManifest {
            command: self.command.clone(),
            config_hash: io::content_hash(&chunks),
            seed: self.seed,
            started_unix_ms: self.started,
            finished_unix_ms: io::unix_ms(),
            solver_calls: solver_calls(),
            artifacts: self.artifacts.clone(),
        };
        manifest.write_atomic(&self.out.join("manifest.json"))
    }
}

fn load_task_file(ctx: &mut Ctx, cli: &Cli) -> Result<TaskFile, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("this command needs --config <task.json>".into()))?;
    let text = ctx.read_input(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn load_net(ctx: &mut Ctx, path: &Path) -> Result<Network, Error> {
    let text = ctx.read_input(path)?;
    io::network_from_str(&text)
}

/// The network a task runs on: an explicit file wins over the config's
/// lattice.
fn task_network(ctx: &mut Ctx, file: &TaskFile, net: &Option<PathBuf>) -> Result<Network, Error> {
    match net {
        Some(path) => load_net(ctx, path),
        None => file.network()?.ok_or_else(|| {
            Error::InvalidConfig("config has no lattice; pass --net <network.json>".into())
        }),
    }
}

fn task_sample(
    file: &TaskFile,
    net: &Network,
    seed: u64,
    index: usize,
) -> Result<(LoadCase, mnn::losses::LossSpec), Error> {
    let task = file.to_task()?;
    let dofs = DofMap::new(net);
    let samples = task.samples(net, &dofs, seed)?;
    let sample = samples.get(index).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "sample index {index} out of range ({} samples)",
            samples.len()
        ))
    })?;
    Ok((sample.load.clone(), sample.loss.clone()))
}

fn parse_steps(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidConfig(format!(
            "steps must be lo:hi:per_decade, got {text:?}"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad step bound {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad step bound {:?}", parts[1])))?;
    let per: usize = parts[2]
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad per-decade count {:?}", parts[2])))?;
    if !(lo > 0.0 && hi > lo && per > 0) {
        return Err(Error::InvalidConfig(
            "steps need 0 < lo < hi and per_decade ≥ 1".into(),
        ));
    }
    Ok(fd::log_steps(lo, hi, per))
}

fn run(cli: &Cli, started: u128) -> Result<(), Error> {
    let mut ctx = Ctx::new(cli, started)?;
    match &cli.cmd {
        Cmd::Build { spec } => {
            let lattice: LatticeSpec = match spec {
                Some(path) => serde_json::from_str(&ctx.read_input(path)?)?,
                None => {
                    let file = load_task_file(&mut ctx, cli)?;
                    file.lattice.ok_or_else(|| {
                        Error::InvalidConfig("config has no lattice section".into())
                    })?
                }
            };
            let net = build_triangular_lattice(&lattice)?;
            for v in net.validate() {
                eprintln!("warning: {v}");
            }
            let path = ctx.write_artifact("network.json", &io::network_to_string(&net))?;
            println!(
                "built network: {} nodes, {} bonds -> {}",
                net.n_nodes(),
                net.n_bonds(),
                path.display()
            );
        }

        Cmd::Solve { net, node, fx, fy } => {
            let network = load_net(&mut ctx, net)?;
            let op = Operator::new(&network)?;
            let mut forces = Vec::new();
            if *fx != 0.0 {
                forces.push((*node, Axis::X, *fx));
            }
            if *fy != 0.0 {
                forces.push((*node, Axis::Y, *fy));
            }
            let load = LoadCase::from_nodal_forces(op.dofs(), &forces, Provenance::External)?;
            let sol = op.solve(&load)?;
            ctx.write_artifact(
                "displacements.csv",
                &io::solution_csv(&network, op.dofs(), &sol),
            )?;
            ctx.write_artifact("elongations.csv", &io::elongation_csv(&sol))?;
            println!(
                "solved: max |u| = {:.6e} m over {} free DOFs",
                sol.u.amax(),
                op.n_free()
            );
        }

        Cmd::Grad { net, sample } => {
            let file = load_task_file(&mut ctx, cli)?;
            let network = task_network(&mut ctx, &file, net)?;
            let seed = cli.seed.or(file.train.seed).unwrap_or(0);
            let (load, loss) = task_sample(&file, &network, seed, *sample)?;
            let rep = adjoint::gradient(&network, &load, &loss)?;
            let path = ctx.write_artifact("gradient.csv", &io::gradient_csv(&rep)?)?;
            println!(
                "gradient over {} bonds in {} solves -> {}",
                rep.grad.len(),
                rep.solves_used,
                path.display()
            );
        }

        Cmd::GradCheck { net, sample } => {
            let file = load_task_file(&mut ctx, cli)?;
            let network = task_network(&mut ctx, &file, net)?;
            let seed = cli.seed.or(file.train.seed).unwrap_or(0);
            let (load, loss) = task_sample(&file, &network, seed, *sample)?;
            let reference = adjoint::gradient(&network, &load, &loss)?;
            let delta = 1e-6 * network.k_bounds.1;
            let fd_rep = fd::fd_gradient(&network, &load, &loss, &fd::FdConfig::central(delta))?;
            let scale = reference
                .grad
                .iter()
                .fold(0.0f64, |a, g| a.max(g.abs()))
                .max(f64::MIN_POSITIVE);
            let deviation = fd_rep
                .grad
                .iter()
                .zip(&reference.grad)
                .fold(0.0f64, |a, (f, r)| a.max((f - r).abs()))
                / scale;
            println!(
                "max relative deviation (two-solve vs central δk = {delta:.3e}): {deviation:.3e} (tolerance {:.3e})",
                cli.tolerance
            );
            ctx.finish()?;
            if !(deviation <= cli.tolerance) {
                std::process::exit(1);
            }
            return Ok(());
        }

        Cmd::SweepFd { net, sample, steps } => {
            let file = load_task_file(&mut ctx, cli)?;
            let network = task_network(&mut ctx, &file, net)?;
            let seed = cli.seed.or(file.train.seed).unwrap_or(0);
            let (load, loss) = task_sample(&file, &network, seed, *sample)?;
            let grid = parse_steps(steps)?;
            let sweep = fd::step_sweep(&network, &load, &loss, &grid)?;
            let path = ctx.write_artifact("sweep.csv", &io::sweep_csv(&sweep))?;
            println!(
                "swept {} steps; best δk = {:.3e} with error {:.3e} -> {}",
                sweep.rows.len(),
                sweep.argmin.delta,
                sweep.argmin.max_rel_error,
                path.display()
            );
        }

        Cmd::Train { net } => {
            let file = load_task_file(&mut ctx, cli)?;
            let network = task_network(&mut ctx, &file, net)?;
            let task = file.to_task()?;
            let cfg = file.train_config(cli.seed);
            let (trained, record) = train(&network, &task, &cfg)?;
            ctx.write_artifact("trained.json", &io::network_to_string(&trained))?;
            ctx.write_artifact("history.csv", &io::history_csv(&record))?;
            let last = record.history.last().expect("epochs ≥ 1");
            println!(
                "trained {} epochs (α = {}, seed {}): loss {:.6e} -> {:.6e}, metric {:.4}, {} gradient solves",
                record.history.len(),
                cfg.alpha,
                cfg.seed,
                record.history.first().unwrap().loss_train,
                last.loss_train,
                last.metric,
                record.solves_used
            );
        }

        Cmd::Eval { net } => {
            let file = load_task_file(&mut ctx, cli)?;
            let network = load_net(&mut ctx, net)?;
            let task = file.to_task()?;
            let seed = cli.seed.or(file.train.seed).unwrap_or(0);
            let summary = match &task {
                Task::Behavior(t) => {
                    let ev = evaluate_behavior(&network, t)?;
                    println!(
                        "behavior: u_left_y = {:.6e} m, u_right_y = {:.6e} m, |Δu_y| = {:.6e} m",
                        ev.u_left_y, ev.u_right_y, ev.delta_abs
                    );
                    serde_json::json!({
                        "task": "behavior",
                        "u_left_y": ev.u_left_y,
                        "u_right_y": ev.u_right_y,
                        "delta_abs": ev.delta_abs,
                    })
                }
                Task::Regression(t) => {
                    let ev = evaluate_regression(&network, t, &t.evaluation_sweep())?;
                    println!(
                        "regression sweep: slopes = ({:.6}, {:.6}, {:.6}, {:.6}) m/N, mse = {:.6e}",
                        ev.slopes[0], ev.slopes[1], ev.slopes[2], ev.slopes[3], ev.mse
                    );
                    serde_json::json!({
                        "task": "regression",
                        "slopes": ev.slopes,
                        "mse": ev.mse,
                        "r2": ev.r2,
                    })
                }
                Task::Iris(_) => {
                    let dofs = DofMap::new(&network);
                    let samples = task.samples(&network, &dofs, seed)?;
                    let ev = evaluate_classification(&network, &samples)?;
                    println!(
                        "classification: accuracy {:.4} ({} / {} correct)",
                        ev.accuracy, ev.n_correct, ev.n_total
                    );
                    serde_json::json!({
                        "task": "iris",
                        "accuracy": ev.accuracy,
                        "n_correct": ev.n_correct,
                        "n_total": ev.n_total,
                    })
                }
            };
            ctx.write_artifact("eval.json", &format!("{summary:#}\n"))?;
        }

        Cmd::Prune { net, bond } => {
            let network = load_net(&mut ctx, net)?;
            let (pruned, mapping) = network.prune_bond(*bond)?;
            for v in pruned.validate() {
                eprintln!("warning: {v}");
            }
            let path = ctx.write_artifact("pruned.json", &io::network_to_string(&pruned))?;
            let mut map_csv = String::from("old_id,new_id\n");
            for (old, new) in mapping.iter().enumerate() {
                map_csv.push_str(&format!(
                    "{},{}\n",
                    old,
                    new.map(|n| n.to_string()).unwrap_or_default()
                ));
            }
            ctx.write_artifact("bond_map.csv", &map_csv)?;
            println!(
                "pruned bond {bond}: {} bonds remain -> {}",
                pruned.n_bonds(),
                path.display()
            );
        }

        Cmd::Render { net } => {
            let network = load_net(&mut ctx, net)?;
            let mut opts = RenderOptions::default();
            if cli.config.is_some() {
                let file = load_task_file(&mut ctx, cli)?;
                match file.to_task()? {
                    Task::Behavior(t) => {
                        opts.inputs = vec![t.input];
                        opts.outputs = vec![t.left, t.right];
                    }
                    Task::Regression(t) => {
                        opts.inputs = vec![t.input];
                        opts.outputs = vec![t.left, t.right];
                    }
                    Task::Iris(t) => {
                        opts.inputs = t.inputs.to_vec();
                        opts.outputs = t.outputs.to_vec();
                    }
                }
            }
            let path = ctx.write_artifact("network.svg", &render_svg(&network, &opts))?;
            println!("rendered {} bonds -> {}", network.n_bonds(), path.display());
        }
    }
    ctx.finish()
}
