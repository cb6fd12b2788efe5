//! File formats: network files, task configuration files, CSV reports, and
//! run manifests.
//!
//! Network files are JSON with a fixed key order and 17-significant-digit
//! floats, so writing the same network twice produces byte-identical files
//! and every value round-trips exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adjoint::GradientReport;
use crate::error::{Error, Result};
use crate::fd::StepSweep;
use crate::lattice::{Bond, LatticeSpec, Network, Node, NodeSelector};
use crate::statics::{grams_to_newtons, DofMap, Solution};
use crate::tasks::{BehaviorLabel, BehaviorTask, IrisSource, IrisTask, RegressionTask, Task};
use crate::trainer::{TrainConfig, TrainRecord};

/// 17 significant digits: enough to reproduce any f64 exactly.
fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// Network file
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NodeRec {
    id: usize,
    x: f64,
    y: f64,
    fixed: bool,
}

#[derive(Serialize, Deserialize)]
struct BondRec {
    id: usize,
    i: usize,
    j: usize,
    k: f64,
    rest_length: f64,
}

#[derive(Serialize, Deserialize)]
struct BoundsRec {
    min: f64,
    max: f64,
}

#[derive(Serialize, Deserialize)]
struct UnitsRec {
    length: String,
    stiffness: String,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeRec>,
    bonds: Vec<BondRec>,
    k_bounds: BoundsRec,
    units: UnitsRec,
}

/// Serialize a network deterministically.
pub fn network_to_string(net: &Network) -> String {
    let mut s = String::new();
    s.push_str("{\n  \"nodes\": [\n");
    for (idx, n) in net.nodes.iter().enumerate() {
        s.push_str(&format!(
            "    {{\"id\": {}, \"x\": {}, \"y\": {}, \"fixed\": {}}}{}\n",
            n.id,
            f17(n.position[0]),
            f17(n.position[1]),
            n.fixed,
            if idx + 1 < net.nodes.len() { "," } else { "" }
        ));
    }
    s.push_str("  ],\n  \"bonds\": [\n");
    for (idx, b) in net.bonds.iter().enumerate() {
        s.push_str(&format!(
            "    {{\"id\": {}, \"i\": {}, \"j\": {}, \"k\": {}, \"rest_length\": {}}}{}\n",
            b.id,
            b.i,
            b.j,
            f17(b.k),
            f17(b.rest_length),
            if idx + 1 < net.bonds.len() { "," } else { "" }
        ));
    }
    s.push_str(&format!(
        "  ],\n  \"k_bounds\": {{\"min\": {}, \"max\": {}}},\n",
        f17(net.k_bounds.0),
        f17(net.k_bounds.1)
    ));
    s.push_str("  \"units\": {\"length\": \"m\", \"stiffness\": \"N/m\"}\n}\n");
    s
}

pub fn network_from_str(text: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text)?;
    Ok(Network {
        nodes: file
            .nodes
            .into_iter()
            .map(|n| Node {
                id: n.id,
                position: [n.x, n.y],
                fixed: n.fixed,
            })
            .collect(),
        bonds: file
            .bonds
            .into_iter()
            .map(|b| Bond {
                id: b.id,
                i: b.i,
                j: b.j,
                k: b.k,
                rest_length: b.rest_length,
            })
            .collect(),
        k_bounds: (file.k_bounds.min, file.k_bounds.max),
    })
}

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, network_to_string(net))?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<Network> {
    network_from_str(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Task configuration file
// ---------------------------------------------------------------------------

fn default_behavior_force() -> f64 {
    grams_to_newtons(5.0)
}
fn default_gamma() -> f64 {
    1000.0
}
fn default_slopes() -> [f64; 4] {
    RegressionTask::DEFAULT_SLOPES
}
fn default_n_samples() -> usize {
    100
}
fn default_f_max() -> f64 {
    RegressionTask::default_f_max()
}
fn default_iris_gain() -> f64 {
    // one gram of force per feature unit puts the largest feature near 8 g
    grams_to_newtons(1.0)
}

/// Task description with node selectors instead of raw ids, as written in
/// configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task_type", rename_all = "snake_case")]
pub enum TaskDef {
    Behavior {
        input: NodeSelector,
        left: NodeSelector,
        right: NodeSelector,
        label: BehaviorLabel,
        #[serde(default = "default_behavior_force")]
        force: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Regression {
        input: NodeSelector,
        right: NodeSelector,
        left: NodeSelector,
        #[serde(default = "default_slopes")]
        slopes: [f64; 4],
        #[serde(default = "default_n_samples")]
        n_samples: usize,
        #[serde(default = "default_f_max")]
        f_max: f64,
        #[serde(default)]
        noise_sigma: f64,
    },
    Iris {
        inputs: [NodeSelector; 4],
        outputs: [NodeSelector; 3],
        #[serde(default = "default_iris_gain")]
        force_gain: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        round_to_grams: bool,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
}

impl TaskDef {
    /// Per-task learning-rate defaults: 0.005 for behavior, 0.1 for
    /// regression, 0.006 for classification.
    pub fn default_alpha(&self) -> f64 {
        match self {
            TaskDef::Behavior { .. } => 0.005,
            TaskDef::Regression { .. } => 0.1,
            TaskDef::Iris { .. } => 0.006,
        }
    }

    pub fn default_epochs(&self) -> usize {
        match self {
            TaskDef::Behavior { .. } => 2000,
            TaskDef::Regression { .. } => 5000,
            TaskDef::Iris { .. } => 100,
        }
    }
}

/// Optional training overrides in a task file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub epochs: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub split: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub k_bounds: Option<(f64, f64)>,
}

/// A complete task configuration: the lattice to build (optional when a
/// network file is supplied separately), the task, and training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFile {
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    pub task: TaskDef,
    #[serde(default)]
    pub train: TrainSettings,
}

impl TaskFile {
    pub fn load(path: &Path) -> Result<TaskFile> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_string_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Build the network described by the embedded lattice spec, if any.
    pub fn network(&self) -> Result<Option<Network>> {
        self.lattice
            .as_ref()
            .map(crate::lattice::build_triangular_lattice)
            .transpose()
    }

    fn one(&self, sel: &NodeSelector) -> Result<usize> {
        let ids = match (&self.lattice, sel) {
            (Some(spec), s) => spec.resolve(s)?,
            (None, NodeSelector::Node(id)) => vec![*id],
            (None, other) => {
                return Err(Error::InvalidConfig(format!(
                    "selector {other:?} needs a lattice spec in the config"
                )))
            }
        };
        if ids.len() != 1 {
            return Err(Error::InvalidConfig(format!(
                "selector {sel:?} must name exactly one node, matched {}",
                ids.len()
            )));
        }
        Ok(ids[0])
    }

    /// Resolve node selectors into a concrete task.
    pub fn to_task(&self) -> Result<Task> {
        Ok(match &self.task {
            TaskDef::Behavior {
                input,
                left,
                right,
                label,
                force,
                gamma,
            } => Task::Behavior(BehaviorTask {
                input: self.one(input)?,
                force: *force,
                left: self.one(left)?,
                right: self.one(right)?,
                label: *label,
                gamma: *gamma,
            }),
            TaskDef::Regression {
                input,
                right,
                left,
                slopes,
                n_samples,
                f_max,
                noise_sigma,
            } => Task::Regression(RegressionTask {
                input: self.one(input)?,
                right: self.one(right)?,
                left: self.one(left)?,
                slopes: *slopes,
                n_samples: *n_samples,
                f_max: *f_max,
                noise_sigma: *noise_sigma,
            }),
            TaskDef::Iris {
                inputs,
                outputs,
                force_gain,
                gamma,
                round_to_grams,
                csv,
            } => {
                let mut input_ids = [0usize; 4];
                for (slot, sel) in input_ids.iter_mut().zip(inputs) {
                    *slot = self.one(sel)?;
                }
                let mut output_ids = [0usize; 3];
                for (slot, sel) in output_ids.iter_mut().zip(outputs) {
                    *slot = self.one(sel)?;
                }
                Task::Iris(IrisTask {
                    inputs: input_ids,
                    outputs: output_ids,
                    gain: *force_gain,
                    gamma: *gamma,
                    round_to_grams: *round_to_grams,
                    source: csv
                        .as_ref()
                        .map(|p| IrisSource::Path(p.clone()))
                        .unwrap_or(IrisSource::Bundled),
                })
            }
        })
    }

    /// Build the training configuration, applying per-task defaults where
    /// the file leaves settings out.
    pub fn train_config(&self, seed_override: Option<u64>) -> TrainConfig {
        let mut cfg = TrainConfig::new(
            self.train
                .epochs
                .unwrap_or_else(|| self.task.default_epochs()),
            self.train
                .alpha
                .unwrap_or_else(|| self.task.default_alpha()),
            seed_override.or(self.train.seed).unwrap_or(0),
        );
        if let Some(split) = self.train.split {
            cfg.split = split;
        }
        if let Some(b1) = self.train.beta1 {
            cfg.beta1 = b1;
        }
        if let Some(b2) = self.train.beta2 {
            cfg.beta2 = b2;
        }
        if let Some(eps) = self.train.epsilon {
            cfg.epsilon = eps;
        }
        cfg.k_bounds = self.train.k_bounds;
        cfg
    }
}

// ---------------------------------------------------------------------------
// CSV reports
// ---------------------------------------------------------------------------

/// `epoch,loss_train,loss_test,metric` — one row per epoch.
pub fn history_csv(record: &TrainRecord) -> String {
    let mut s = String::from("epoch,loss_train,loss_test,metric\n");
    for (epoch, row) in record.history.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{},{}\n",
            epoch, row.loss_train, row.loss_test, row.metric
        ));
    }
    s
}

/// `bond_id,e,e_adj,grad` — the two elongation fields and their product.
pub fn gradient_csv(rep: &GradientReport) -> Result<String> {
    let adjoint = rep
        .adjoint
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("gradient report carries no adjoint field".into()))?;
    let mut s = String::from("bond_id,e,e_adj,grad\n");
    for (b, g) in rep.grad.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{},{}\n",
            b, rep.forward.e[b], adjoint.e[b], g
        ));
    }
    Ok(s)
}

/// `delta_k,max_rel_error` — one row per sweep step.
pub fn sweep_csv(sweep: &StepSweep) -> String {
    let mut s = String::from("delta_k,max_rel_error\n");
    for row in &sweep.rows {
        s.push_str(&format!("{},{}\n", row.delta, row.max_rel_error));
    }
    s
}

/// `node,ux,uy` over all nodes (fixed nodes report zero).
pub fn solution_csv(net: &Network, dofs: &DofMap, sol: &Solution) -> String {
    let mut s = String::from("node,ux,uy\n");
    for n in &net.nodes {
        let ux = dofs
            .dof(n.id, crate::statics::Axis::X)
            .map(|d| sol.u[d])
            .unwrap_or(0.0);
        let uy = dofs
            .dof(n.id, crate::statics::Axis::Y)
            .map(|d| sol.u[d])
            .unwrap_or(0.0);
        s.push_str(&format!("{},{},{}\n", n.id, ux, uy));
    }
    s
}

/// `bond_id,e` elongations of one solution.
pub fn elongation_csv(sol: &Solution) -> String {
    let mut s = String::from("bond_id,e\n");
    for (b, e) in sol.e.iter().enumerate() {
        s.push_str(&format!("{},{}\n", b, e));
    }
    s
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Reproducibility record written at the end of every CLI run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over all input files, hex.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub solver_calls: u64,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    /// Write via a temp file and rename, so a manifest is either complete
    /// or absent.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// Content hash over a list of byte chunks (input files, argument strings).
pub fn content_hash(chunks: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for c in chunks {
        hasher.update((c.len() as u64).to_le_bytes());
        hasher.update(c);
    }
    format!("{:x}", hasher.finalize())
}

pub fn unix_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_triangular_lattice, LatticeSpec};

    #[test]
    fn network_file_roundtrips_bit_exactly() {
        let mut net = build_triangular_lattice(&LatticeSpec::new(3, 4)).unwrap();
        net.bonds[2].k = 1.730283492837465;
        let text = network_to_string(&net);
        let back = network_from_str(&text).unwrap();
        assert_eq!(net, back);
        // and writing again is byte-identical
        assert_eq!(text, network_to_string(&back));
    }

    #[test]
    fn task_file_roundtrips_and_resolves() {
        let mut spec = LatticeSpec::new(4, 7);
        spec.alternating = true;
        spec.fixed = vec![NodeSelector::TopRow];
        let file = TaskFile {
            lattice: Some(spec),
            task: TaskDef::Behavior {
                input: NodeSelector::RowCol { row: 0, col: 3 },
                left: NodeSelector::RowCol { row: 0, col: 0 },
                right: NodeSelector::RowCol { row: 0, col: 6 },
                label: BehaviorLabel::Left,
                force: default_behavior_force(),
                gamma: 1000.0,
            },
            train: TrainSettings::default(),
        };
        let text = file.to_string_pretty().unwrap();
        let back: TaskFile = serde_json::from_str(&text).unwrap();
        assert_eq!(file, back);
        let task = back.to_task().unwrap();
        let Task::Behavior(t) = task else { panic!() };
        assert_eq!(t.input, 3);
        assert_eq!(t.left, 0);
        assert_eq!(t.right, 6);
        let cfg = back.train_config(None);
        assert_eq!(cfg.alpha, 0.005);
        assert_eq!(cfg.epochs, 2000);
    }

    #[test]
    fn selector_needs_lattice_context() {
        let file = TaskFile {
            lattice: None,
            task: TaskDef::Behavior {
                input: NodeSelector::RowCol { row: 0, col: 3 },
                left: NodeSelector::Node(0),
                right: NodeSelector::Node(1),
                label: BehaviorLabel::Left,
                force: 0.049,
                gamma: 1000.0,
            },
            train: TrainSettings::default(),
        };
        assert!(file.to_task().is_err());
    }

    #[test]
    fn content_hash_is_stable_and_length_sensitive() {
        let a = content_hash(&[b"abc", b"def"]);
        let b = content_hash(&[b"abc", b"def"]);
        let c = content_hash(&[b"abcd", b"ef"]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
