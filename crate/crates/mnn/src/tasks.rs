//! Task definitions: behavior shaping, synthetic linear regression, and
//! Iris flower classification.
//!
//! A task turns into a dataset of [`Sample`]s — one load case paired with
//! one loss — plus an evaluation metric. Forces are applied downward (−y);
//! reported output displacements use a measurement frame where "down" and
//! "toward +x" are positive, so regression targets match the convention
//! `u = slope · F` with positive slopes.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Network;
use crate::losses::{LossSpec, MseTarget};
use crate::statics::{grams_to_newtons, Axis, DofMap, LoadCase, Operator, Provenance};

/// One training sample: a load case and the loss judged on its response.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub load: LoadCase,
    pub loss: LossSpec,
}

/// Which output node a behavior task favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorLabel {
    Left,
    Right,
}

/// Push one node down, and train the network so the labeled output node
/// moves more than its counterpart. Cross-entropy over the two vertical
/// displacement magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTask {
    pub input: usize,
    /// Downward force magnitude, N.
    pub force: f64,
    pub left: usize,
    pub right: usize,
    pub label: BehaviorLabel,
    /// Softmax displacement scale, 1/m.
    pub gamma: f64,
}

impl BehaviorTask {
    /// The default input force: a 5 g weight.
    pub fn default_force() -> f64 {
        grams_to_newtons(5.0)
    }
}

/// Train two output nodes to trace prescribed lines under a varying
/// downward force at one input node.
///
/// `slopes` are `(right_x, right_y, left_x, left_y)` in m/N, in the
/// measurement frame: vertical displacements count positive downward,
/// horizontal displacements positive away from the input node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTask {
    pub input: usize,
    pub right: usize,
    pub left: usize,
    pub slopes: [f64; 4],
    pub n_samples: usize,
    /// Largest sampled force, N.
    pub f_max: f64,
    /// Gaussian noise added to the targets, meters. Zero for a clean set.
    pub noise_sigma: f64,
}

impl RegressionTask {
    pub const DEFAULT_SLOPES: [f64; 4] = [0.0, 0.016, 0.004, 0.016];

    /// The default force range maxes out at a 12 g weight.
    pub fn default_f_max() -> f64 {
        grams_to_newtons(12.0)
    }

    pub fn new(input: usize, right: usize, left: usize) -> Self {
        RegressionTask {
            input,
            right,
            left,
            slopes: Self::DEFAULT_SLOPES,
            n_samples: 100,
            f_max: Self::default_f_max(),
            noise_sigma: 0.0,
        }
    }

    /// The evaluation grid: forces from 0 to 12 g in 2 g increments, with
    /// noise-free targets.
    pub fn evaluation_sweep(&self) -> RegressionDataset {
        let forces: Vec<f64> = (0..=6).map(|i| grams_to_newtons(2.0 * i as f64)).collect();
        let targets = forces
            .iter()
            .map(|&f| {
                [
                    self.slopes[0] * f,
                    self.slopes[1] * f,
                    self.slopes[2] * f,
                    self.slopes[3] * f,
                ]
            })
            .collect();
        RegressionDataset { forces, targets }
    }
}

/// Where Iris measurements come from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrisSource {
    /// The copy shipped with this crate.
    #[default]
    Bundled,
    /// A CSV file with 4 numeric feature columns and a label column.
    Path(PathBuf),
}

/// Classify Iris flowers: each of the four features scales a downward
/// force on its own input node, and the predicted class is the output node
/// with the largest horizontal displacement magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrisTask {
    pub inputs: [usize; 4],
    pub outputs: [usize; 3],
    /// Force per feature unit, N.
    pub gain: f64,
    /// Softmax displacement scale, 1/m.
    pub gamma: f64,
    /// Round each force to a whole number of grams, as a bench experiment
    /// with physical weights would.
    #[serde(default)]
    pub round_to_grams: bool,
    #[serde(default)]
    pub source: IrisSource,
}

/// A task bundled with everything needed to generate its dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Behavior(BehaviorTask),
    Regression(RegressionTask),
    Iris(IrisTask),
}

// ---------------------------------------------------------------------------
// Regression dataset
// ---------------------------------------------------------------------------

/// Synthetic regression data: per sample one input force and the four
/// target output displacements `(right_x, right_y, left_x, left_y)` in the
/// measurement frame, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub forces: Vec<f64>,
    pub targets: Vec<[f64; 4]>,
}

/// Draw `task.n_samples` forces uniformly from `[0, f_max]` and build the
/// targets `slope · F (+ noise)`. Deterministic for a given seed.
pub fn gen_regression_dataset(task: &RegressionTask, seed: u64) -> RegressionDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if task.noise_sigma > 0.0 {
        Some(Normal::new(0.0, task.noise_sigma).expect("sigma ≥ 0"))
    } else {
        None
    };
    let mut forces = Vec::with_capacity(task.n_samples);
    let mut targets = Vec::with_capacity(task.n_samples);
    for _ in 0..task.n_samples {
        let f: f64 = rng.random_range(0.0..task.f_max);
        let mut t = [
            task.slopes[0] * f,
            task.slopes[1] * f,
            task.slopes[2] * f,
            task.slopes[3] * f,
        ];
        if let Some(n) = &noise {
            for v in &mut t {
                *v += n.sample(&mut rng);
            }
        }
        forces.push(f);
        targets.push(t);
    }
    RegressionDataset { forces, targets }
}

// ---------------------------------------------------------------------------
// Iris ingestion
// ---------------------------------------------------------------------------

pub const IRIS_CLASSES: [&str; 3] = ["setosa", "versicolor", "virginica"];

const BUNDLED_IRIS: &str = include_str!("../data/iris.csv");

/// Parsed Iris measurements: rows of four features (cm) and a class index
/// into [`IRIS_CLASSES`].
#[derive(Debug, Clone, PartialEq)]
pub struct IrisData {
    pub features: Vec<[f64; 4]>,
    pub labels: Vec<usize>,
}

impl IrisData {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Render back to the CSV format [`load_iris`] reads.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (f, &l) in self.features.iter().zip(&self.labels) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                f[0], f[1], f[2], f[3], IRIS_CLASSES[l]
            ));
        }
        out
    }
}

fn parse_iris(text: &str, origin: &str) -> Result<IrisData> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        // allow one header line
        if idx == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: line_no,
                msg: format!("expected 5 comma-separated fields, found {}", fields.len()),
            });
        }
        let mut row = [0.0; 4];
        for (slot, field) in row.iter_mut().zip(&fields[..4]) {
            *slot = field.parse::<f64>().map_err(|_| Error::Parse {
                path: origin.to_string(),
                line: line_no,
                msg: format!("not a number: {field:?}"),
            })?;
        }
        let name = fields[4].to_ascii_lowercase();
        let name = name.strip_prefix("iris-").unwrap_or(&name);
        let label = IRIS_CLASSES
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: line_no,
                msg: format!("unknown label {:?}", fields[4]),
            })?;
        features.push(row);
        labels.push(label);
    }
    if features.is_empty() {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: 1,
            msg: "no data rows".to_string(),
        });
    }
    Ok(IrisData { features, labels })
}

/// Read an Iris CSV: four numeric columns plus a label column, with an
/// optional header line. Labels may carry the `Iris-` prefix.
pub fn load_iris(path: &Path) -> Result<IrisData> {
    let text = std::fs::read_to_string(path)?;
    parse_iris(&text, &path.display().to_string())
}

/// The 150-flower copy shipped with the crate.
pub fn bundled_iris() -> IrisData {
    parse_iris(BUNDLED_IRIS, "bundled iris.csv").expect("bundled dataset parses")
}

impl IrisSource {
    pub fn load(&self) -> Result<IrisData> {
        match self {
            IrisSource::Bundled => Ok(bundled_iris()),
            IrisSource::Path(p) => load_iris(p),
        }
    }
}

/// Map feature vectors to per-node downward force magnitudes,
/// `force = gain · feature`, optionally rounded to whole grams.
pub fn scale_features_to_forces(
    features: &[[f64; 4]],
    gain: f64,
    round_to_grams: bool,
) -> Result<Vec<[f64; 4]>> {
    if !(gain > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "gain > 0 required, got {gain}"
        )));
    }
    features
        .iter()
        .map(|row| {
            let mut forces = [0.0; 4];
            for (f, &feat) in forces.iter_mut().zip(row) {
                if feat < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "negative feature value {feat}"
                    )));
                }
                let mut force = gain * feat;
                if round_to_grams {
                    force = grams_to_newtons(crate::statics::newtons_to_grams(force).round());
                }
                *f = force;
            }
            Ok(forces)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Sample generation
// ---------------------------------------------------------------------------

/// Sign of the horizontal measurement at `node`: displacements away from
/// the input node count positive.
fn outward_sign(net: &Network, input: usize, node: usize) -> f64 {
    if net.nodes[node].position[0] < net.nodes[input].position[0] {
        -1.0
    } else {
        1.0
    }
}

impl Task {
    /// Build the full dataset of this task against a network's DOF layout.
    /// Deterministic for a given seed.
    pub fn samples(&self, net: &Network, dofs: &DofMap, seed: u64) -> Result<Vec<Sample>> {
        match self {
            Task::Behavior(t) => {
                let load = LoadCase::from_nodal_forces(
                    dofs,
                    &[(t.input, Axis::Y, -t.force)],
                    Provenance::External,
                )?;
                let label = match t.label {
                    BehaviorLabel::Left => 0,
                    BehaviorLabel::Right => 1,
                };
                let loss = LossSpec::CrossEntropy {
                    outputs: vec![(t.left, Axis::Y), (t.right, Axis::Y)],
                    label,
                    gamma: t.gamma,
                };
                Ok(vec![Sample { load, loss }])
            }
            Task::Regression(t) => {
                let ds = gen_regression_dataset(t, seed);
                let sign_r = outward_sign(net, t.input, t.right);
                let sign_l = outward_sign(net, t.input, t.left);
                ds.forces
                    .iter()
                    .zip(&ds.targets)
                    .map(|(&f, m)| {
                        let load = LoadCase::from_nodal_forces(
                            dofs,
                            &[(t.input, Axis::Y, -f)],
                            Provenance::External,
                        )?;
                        let loss = LossSpec::Mse {
                            targets: measurement_to_solver_targets(t, m, sign_r, sign_l),
                        };
                        Ok(Sample { load, loss })
                    })
                    .collect()
            }
            Task::Iris(t) => {
                let data = t.source.load()?;
                let forces = scale_features_to_forces(&data.features, t.gain, t.round_to_grams)?;
                forces
                    .iter()
                    .zip(&data.labels)
                    .map(|(f, &label)| {
                        let nodal: Vec<(usize, Axis, f64)> = t
                            .inputs
                            .iter()
                            .zip(f)
                            .map(|(&node, &force)| (node, Axis::Y, -force))
                            .collect();
                        let load = LoadCase::from_nodal_forces(dofs, &nodal, Provenance::External)?;
                        let loss = LossSpec::CrossEntropy {
                            outputs: t.outputs.iter().map(|&n| (n, Axis::X)).collect(),
                            label,
                            gamma: t.gamma,
                        };
                        Ok(Sample { load, loss })
                    })
                    .collect()
            }
        }
    }

    /// Mean loss and task metric over a sample set: `|Δu_y|` for behavior,
    /// relative-error accuracy for regression, classification accuracy for
    /// Iris. One solve per sample.
    pub fn test_stats(&self, op: &Operator, samples: &[Sample]) -> Result<(f64, f64)> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut loss_acc = 0.0;
        match self {
            Task::Behavior(t) => {
                let sample = &samples[0];
                let sol = op.solve(&sample.load)?;
                let loss = sample.loss.value(op.dofs(), &sol.u)?;
                let uy_l = sol.u[op.dofs().dof(t.left, Axis::Y)?];
                let uy_r = sol.u[op.dofs().dof(t.right, Axis::Y)?];
                Ok((loss, (uy_l - uy_r).abs()))
            }
            Task::Regression(_) => {
                let mut res_sq = 0.0;
                let mut targ_sq = 0.0;
                for s in samples {
                    let sol = op.solve(&s.load)?;
                    loss_acc += s.loss.value(op.dofs(), &sol.u)?;
                    if let LossSpec::Mse { targets } = &s.loss {
                        for t in targets {
                            let d = op.dofs().dof(t.node, t.axis)?;
                            res_sq += (sol.u[d] - t.target).powi(2);
                            targ_sq += t.target.powi(2);
                        }
                    }
                }
                let rel = (res_sq / targ_sq.max(f64::MIN_POSITIVE)).sqrt();
                Ok((loss_acc / samples.len() as f64, (1.0 - rel).max(0.0)))
            }
            Task::Iris(_) => {
                let mut correct = 0usize;
                for s in samples {
                    let sol = op.solve(&s.load)?;
                    loss_acc += s.loss.value(op.dofs(), &sol.u)?;
                    if let LossSpec::CrossEntropy { outputs, label, .. } = &s.loss {
                        if predict(op.dofs(), &sol.u, outputs)? == *label {
                            correct += 1;
                        }
                    }
                }
                Ok((
                    loss_acc / samples.len() as f64,
                    correct as f64 / samples.len() as f64,
                ))
            }
        }
    }
}

fn measurement_to_solver_targets(
    t: &RegressionTask,
    m: &[f64; 4],
    sign_r: f64,
    sign_l: f64,
) -> Vec<MseTarget> {
    // measurement frame: (right_out, right_down, left_out, left_down);
    // solver y points up, solver x carries the outward sign
    vec![
        MseTarget {
            node: t.right,
            axis: Axis::X,
            target: sign_r * m[0],
        },
        MseTarget {
            node: t.right,
            axis: Axis::Y,
            target: -m[1],
        },
        MseTarget {
            node: t.left,
            axis: Axis::X,
            target: sign_l * m[2],
        },
        MseTarget {
            node: t.left,
            axis: Axis::Y,
            target: -m[3],
        },
    ]
}

/// Index of the output DOF with the largest displacement magnitude; ties
/// break toward the lowest class index.
fn predict(dofs: &DofMap, u: &nalgebra::DVector<f64>, outputs: &[(usize, Axis)]) -> Result<usize> {
    let mut best = 0usize;
    let mut best_mag = f64::NEG_INFINITY;
    for (c, &(node, axis)) in outputs.iter().enumerate() {
        let mag = u[dofs.dof(node, axis)?].abs();
        if mag > best_mag {
            best_mag = mag;
            best = c;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Outcome of one behavior evaluation, solver frame (y up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorEval {
    pub u_left_y: f64,
    pub u_right_y: f64,
    /// `|u_left_y − u_right_y|`
    pub delta_abs: f64,
}

/// One solve at the behavior task's input force.
pub fn evaluate_behavior(net: &Network, task: &BehaviorTask) -> Result<BehaviorEval> {
    let op = Operator::new(net)?;
    let load = LoadCase::from_nodal_forces(
        op.dofs(),
        &[(task.input, Axis::Y, -task.force)],
        Provenance::External,
    )?;
    let sol = op.solve(&load)?;
    let u_left_y = sol.u[op.dofs().dof(task.left, Axis::Y)?];
    let u_right_y = sol.u[op.dofs().dof(task.right, Axis::Y)?];
    Ok(BehaviorEval {
        u_left_y,
        u_right_y,
        delta_abs: (u_left_y - u_right_y).abs(),
    })
}

/// Per-class decision outcome over a classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationEval {
    pub accuracy: f64,
    pub n_correct: usize,
    pub n_total: usize,
    pub predictions: Vec<usize>,
}

/// Solve every sample and take the predicted class as the output node with
/// the largest displacement magnitude (lowest index wins ties).
pub fn evaluate_classification(net: &Network, samples: &[Sample]) -> Result<ClassificationEval> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let op = Operator::new(net)?;
    let mut predictions = Vec::with_capacity(samples.len());
    let mut n_correct = 0usize;
    for s in samples {
        let LossSpec::CrossEntropy { outputs, label, .. } = &s.loss else {
            return Err(Error::InvalidConfig(
                "classification evaluation needs cross-entropy samples".into(),
            ));
        };
        let sol = op.solve(&s.load)?;
        let pred = predict(op.dofs(), &sol.u, outputs)?;
        if pred == *label {
            n_correct += 1;
        }
        predictions.push(pred);
    }
    Ok(ClassificationEval {
        accuracy: n_correct as f64 / samples.len() as f64,
        n_correct,
        n_total: samples.len(),
        predictions,
    })
}

/// Regression fit quality: dataset MSE, per-output fitted slopes (m/N,
/// measurement frame, least squares through the origin), and per-output R²
/// of the fitted line against the dataset targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionEval {
    pub mse: f64,
    pub slopes: [f64; 4],
    pub r2: [f64; 4],
}

/// Sweep the dataset's forces through the network and fit each output's
/// displacement-vs-force slope.
pub fn evaluate_regression(
    net: &Network,
    task: &RegressionTask,
    ds: &RegressionDataset,
) -> Result<RegressionEval> {
    if ds.forces.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let op = Operator::new(net)?;
    let d_rx = op.dofs().dof(task.right, Axis::X)?;
    let d_ry = op.dofs().dof(task.right, Axis::Y)?;
    let d_lx = op.dofs().dof(task.left, Axis::X)?;
    let d_ly = op.dofs().dof(task.left, Axis::Y)?;
    let sign_r = outward_sign(net, task.input, task.right);
    let sign_l = outward_sign(net, task.input, task.left);

    let mut measured = Vec::with_capacity(ds.forces.len());
    for &f in &ds.forces {
        let load = LoadCase::from_nodal_forces(
            op.dofs(),
            &[(task.input, Axis::Y, -f)],
            Provenance::External,
        )?;
        let sol = op.solve(&load)?;
        measured.push([
            sign_r * sol.u[d_rx],
            -sol.u[d_ry],
            sign_l * sol.u[d_lx],
            -sol.u[d_ly],
        ]);
    }

    let mut mse = 0.0;
    let mut slopes = [0.0; 4];
    let mut r2 = [0.0; 4];
    let ff: f64 = ds.forces.iter().map(|f| f * f).sum();
    for j in 0..4 {
        let fm: f64 = ds.forces.iter().zip(&measured).map(|(f, m)| f * m[j]).sum();
        slopes[j] = if ff > 0.0 { fm / ff } else { 0.0 };

        let mean_t: f64 = ds.targets.iter().map(|t| t[j]).sum::<f64>() / ds.targets.len() as f64;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        for (f, t) in ds.forces.iter().zip(&ds.targets) {
            ss_res += (t[j] - slopes[j] * f).powi(2);
            ss_tot += (t[j] - mean_t).powi(2);
        }
        r2[j] = if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            1.0
        };
    }
    for (m, t) in measured.iter().zip(&ds.targets) {
        for j in 0..4 {
            mse += (m[j] - t[j]).powi(2);
        }
    }
    mse /= (4 * ds.forces.len()) as f64;

    Ok(RegressionEval { mse, slopes, r2 })
}
