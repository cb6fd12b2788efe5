//! Loss functions over nodal displacements, with analytic gradients.
//!
//! Every loss knows its own `∂L/∂u`, which is dense over the free DOFs but
//! nonzero only at the declared output DOFs. That support property is what
//! lets the backward pass run as a second static solve driven from the
//! output nodes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statics::{Axis, DofMap};

fn default_gamma() -> f64 {
    1000.0
}

/// One target entry of an [`LossSpec::Mse`] loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseTarget {
    pub node: usize,
    pub axis: Axis,
    /// Target displacement, meters.
    pub target: f64,
}

/// Declarative loss over nodal displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    /// `L = (u + offset)²` at one DOF.
    Quadratic {
        node: usize,
        axis: Axis,
        /// Offset added to the displacement, meters.
        offset: f64,
    },
    /// Mean squared error over a list of target displacements:
    /// `L = (1/N) Σ (u_j − target_j)²`.
    Mse { targets: Vec<MseTarget> },
    /// Softmax cross-entropy over displacement magnitudes:
    /// `p_c = exp(γ|u_c|) / Σ exp(γ|u_c|)`, `L = −ln p_label`.
    ///
    /// `gamma` (1/m) sets the displacement scale entering the logits.
    CrossEntropy {
        outputs: Vec<(usize, Axis)>,
        /// Index into `outputs` of the labeled class.
        label: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
}

/// Evaluated loss: scalar value and dense gradient over free DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub grad: DVector<f64>,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl LossSpec {
    /// Free-DOF indices this loss reads (its output DOFs).
    pub fn output_dofs(&self, dofs: &DofMap) -> Result<Vec<usize>> {
        match self {
            LossSpec::Quadratic { node, axis, .. } => Ok(vec![dofs.dof(*node, *axis)?]),
            LossSpec::Mse { targets } => targets.iter().map(|t| dofs.dof(t.node, t.axis)).collect(),
            LossSpec::CrossEntropy { outputs, .. } => outputs
                .iter()
                .map(|&(node, axis)| dofs.dof(node, axis))
                .collect(),
        }
    }

    fn check(&self, dofs: &DofMap) -> Result<Vec<usize>> {
        let out = self.output_dofs(dofs)?;
        match self {
            LossSpec::Mse { targets } => {
                if targets.is_empty() {
                    return Err(Error::InvalidConfig("MSE loss needs ≥ 1 target".into()));
                }
            }
            LossSpec::CrossEntropy {
                outputs,
                label,
                gamma,
            } => {
                if outputs.is_empty() {
                    return Err(Error::InvalidConfig(
                        "cross-entropy loss needs ≥ 1 output".into(),
                    ));
                }
                if *label >= outputs.len() {
                    return Err(Error::InvalidConfig(format!(
                        "label {} out of range for {} outputs",
                        label,
                        outputs.len()
                    )));
                }
                if !(*gamma > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "gamma > 0 required, got {gamma}"
                    )));
                }
            }
            LossSpec::Quadratic { .. } => {}
        }
        Ok(out)
    }

    /// Softmax probabilities of a cross-entropy loss at displacement `u`.
    pub fn probabilities(&self, dofs: &DofMap, u: &DVector<f64>) -> Result<Vec<f64>> {
        let out = self.check(dofs)?;
        match self {
            LossSpec::CrossEntropy { gamma, .. } => Ok(softmax(
                &out.iter().map(|&d| gamma * u[d].abs()).collect::<Vec<_>>(),
            )),
            _ => Err(Error::InvalidConfig(
                "probabilities are only defined for cross-entropy losses".into(),
            )),
        }
    }

    /// Loss value at displacement `u`.
    pub fn value(&self, dofs: &DofMap, u: &DVector<f64>) -> Result<f64> {
        let out = self.check(dofs)?;
        Ok(match self {
            LossSpec::Quadratic { offset, .. } => {
                let r = u[out[0]] + offset;
                r * r
            }
            LossSpec::Mse { targets } => {
                let n = targets.len() as f64;
                targets
                    .iter()
                    .zip(&out)
                    .map(|(t, &d)| {
                        let r = u[d] - t.target;
                        r * r
                    })
                    .sum::<f64>()
                    / n
            }
            LossSpec::CrossEntropy { label, gamma, .. } => {
                let z: Vec<f64> = out.iter().map(|&d| gamma * u[d].abs()).collect();
                let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = z.iter().map(|&zi| (zi - zmax).exp()).sum::<f64>().ln() + zmax;
                lse - z[*label]
            }
        })
    }

    /// Analytic `∂L/∂u` at displacement `u`, dense over free DOFs.
    ///
    /// `sign(0)` is taken as 0 in the cross-entropy case, so a DOF sitting
    /// exactly at zero displacement contributes no adjoint load.
    pub fn gradient(&self, dofs: &DofMap, u: &DVector<f64>) -> Result<DVector<f64>> {
        let out = self.check(dofs)?;
        let mut g = DVector::zeros(u.len());
        match self {
            LossSpec::Quadratic { offset, .. } => {
                g[out[0]] = 2.0 * (u[out[0]] + offset);
            }
            LossSpec::Mse { targets } => {
                let n = targets.len() as f64;
                for (t, &d) in targets.iter().zip(&out) {
                    g[d] = 2.0 / n * (u[d] - t.target);
                }
            }
            LossSpec::CrossEntropy { label, gamma, .. } => {
                let z: Vec<f64> = out.iter().map(|&d| gamma * u[d].abs()).collect();
                let p = softmax(&z);
                for (c, &d) in out.iter().enumerate() {
                    let y = if c == *label { 1.0 } else { 0.0 };
                    g[d] = gamma * (p[c] - y) * sign(u[d]);
                }
            }
        }
        Ok(g)
    }

    /// Value and gradient together.
    pub fn eval(&self, dofs: &DofMap, u: &DVector<f64>) -> Result<LossEval> {
        Ok(LossEval {
            value: self.value(dofs, u)?,
            grad: self.gradient(dofs, u)?,
        })
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&zi| (zi - zmax).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_triangular_lattice, LatticeSpec};
    use crate::statics::DofMap;

    fn lattice_dofs() -> DofMap {
        DofMap::new(&build_triangular_lattice(&LatticeSpec::new(3, 3)).unwrap())
    }

    /// Central finite difference of the loss value over the output DOFs.
    fn fd_in_u(spec: &LossSpec, dofs: &DofMap, u: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(u.len());
        for d in spec.output_dofs(dofs).unwrap() {
            let h = 1e-8 * u[d].abs().max(1.0);
            let mut up = u.clone();
            let mut dn = u.clone();
            up[d] += h;
            dn[d] -= h;
            g[d] = (spec.value(dofs, &up).unwrap() - spec.value(dofs, &dn).unwrap()) / (2.0 * h);
        }
        g
    }

    #[test]
    fn quadratic_vanishes_when_offset_met() {
        let dofs = lattice_dofs();
        let spec = LossSpec::Quadratic {
            node: 0,
            axis: Axis::Y,
            offset: 0.025,
        };
        let mut u = DVector::zeros(dofs.n_free());
        u[dofs.dof(0, Axis::Y).unwrap()] = -0.025;
        assert_eq!(spec.value(&dofs, &u).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_cross_entropy_is_ln_two() {
        let dofs = lattice_dofs();
        let spec = LossSpec::CrossEntropy {
            outputs: vec![(0, Axis::Y), (2, Axis::Y)],
            label: 0,
            gamma: 1000.0,
        };
        let mut u = DVector::zeros(dofs.n_free());
        u[dofs.dof(0, Axis::Y).unwrap()] = -0.004;
        u[dofs.dof(2, Axis::Y).unwrap()] = 0.004;
        let v = spec.value(&dofs, &u).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_hand_computed_case() {
        // logits (2, 1), label on the first: L = -ln(1/(1+e^-1))
        let dofs = lattice_dofs();
        let spec = LossSpec::CrossEntropy {
            outputs: vec![(0, Axis::X), (1, Axis::X)],
            label: 0,
            gamma: 1.0,
        };
        let mut u = DVector::zeros(dofs.n_free());
        u[dofs.dof(0, Axis::X).unwrap()] = 2.0;
        u[dofs.dof(1, Axis::X).unwrap()] = 1.0;
        let v = spec.value(&dofs, &u).unwrap();
        let p = 1.0 / (1.0 + (-1f64).exp());
        assert!((v + p.ln()).abs() < 1e-12);
        assert!((v - 0.3133).abs() < 1e-4);
    }

    #[test]
    fn quadratic_gradient_matches_weight_conversion() {
        let dofs = lattice_dofs();
        let spec = LossSpec::Quadratic {
            node: 1,
            axis: Axis::Y,
            offset: 0.025,
        };
        let mut u = DVector::zeros(dofs.n_free());
        let d = dofs.dof(1, Axis::Y).unwrap();
        u[d] = -0.00082;
        let g = spec.gradient(&dofs, &u).unwrap();
        assert!((g[d] - 0.04836).abs() < 1e-15);
        // the corresponding adjoint weight is about 5 g
        assert!((crate::statics::newtons_to_grams(g[d]) - 4.935).abs() < 1e-3);
    }

    #[test]
    fn mse_gradient_vanishes_at_targets() {
        let dofs = lattice_dofs();
        let spec = LossSpec::Mse {
            targets: vec![
                MseTarget {
                    node: 0,
                    axis: Axis::X,
                    target: 0.001,
                },
                MseTarget {
                    node: 2,
                    axis: Axis::Y,
                    target: -0.002,
                },
            ],
        };
        let mut u = DVector::zeros(dofs.n_free());
        u[dofs.dof(0, Axis::X).unwrap()] = 0.001;
        u[dofs.dof(2, Axis::Y).unwrap()] = -0.002;
        let g = spec.gradient(&dofs, &u).unwrap();
        assert_eq!(g.amax(), 0.0);
    }

    #[test]
    fn cross_entropy_sign_zero_convention() {
        let dofs = lattice_dofs();
        let spec = LossSpec::CrossEntropy {
            outputs: vec![(0, Axis::Y), (2, Axis::Y)],
            label: 0,
            gamma: 1000.0,
        };
        let mut u = DVector::zeros(dofs.n_free());
        u[dofs.dof(2, Axis::Y).unwrap()] = 0.001;
        let g = spec.gradient(&dofs, &u).unwrap();
        // labeled output sits exactly at zero: its gradient entry is zero
        assert_eq!(g[dofs.dof(0, Axis::Y).unwrap()], 0.0);
        assert!(g[dofs.dof(2, Axis::Y).unwrap()] != 0.0);
    }

    #[test]
    fn gradient_support_is_the_declared_outputs() {
        let dofs = lattice_dofs();
        let spec = LossSpec::Mse {
            targets: vec![MseTarget {
                node: 1,
                axis: Axis::Y,
                target: 0.01,
            }],
        };
        let u = DVector::from_element(dofs.n_free(), 0.003);
        let g = spec.gradient(&dofs, &u).unwrap();
        let out = spec.output_dofs(&dofs).unwrap();
        for d in 0..dofs.n_free() {
            if !out.contains(&d) {
                assert_eq!(g[d], 0.0);
            }
        }
    }

    #[test]
    fn missing_dof_is_an_error() {
        let net = build_triangular_lattice(&LatticeSpec::new(2, 2)).unwrap();
        let dofs = DofMap::new(&net);
        let top = net.nodes.iter().find(|n| n.fixed).unwrap().id;
        let spec = LossSpec::Quadratic {
            node: top,
            axis: Axis::Y,
            offset: 0.0,
        };
        let u = DVector::zeros(dofs.n_free());
        assert!(spec.value(&dofs, &u).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let dofs = lattice_dofs();
        let specs = vec![
            LossSpec::Quadratic {
                node: 0,
                axis: Axis::Y,
                offset: 0.025,
            },
            LossSpec::Mse {
                targets: vec![
                    MseTarget {
                        node: 0,
                        axis: Axis::X,
                        target: 0.004,
                    },
                    MseTarget {
                        node: 1,
                        axis: Axis::Y,
                        target: -0.002,
                    },
                    MseTarget {
                        node: 2,
                        axis: Axis::Y,
                        target: 0.001,
                    },
                ],
            },
            LossSpec::CrossEntropy {
                outputs: vec![(0, Axis::X), (1, Axis::X), (2, Axis::X)],
                label: 1,
                gamma: 300.0,
            },
        ];
        let mut u = DVector::zeros(dofs.n_free());
        for (i, v) in u.iter_mut().enumerate() {
            *v = 0.002 + 0.0015 * (i as f64 * 0.7).sin();
        }
        for spec in specs {
            let g = spec.gradient(&dofs, &u).unwrap();
            let fd = fd_in_u(&spec, &dofs, &u);
            let denom = g.amax().max(1e-12);
            assert!(
                (&g - &fd).amax() / denom < 1e-7,
                "gradient mismatch for {spec:?}"
            );
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn softmax_probabilities_sum_to_one(
                vals in proptest::collection::vec(-0.02f64..0.02, 3),
                gamma in 1.0f64..2000.0,
            ) {
                let dofs = lattice_dofs();
                let spec = LossSpec::CrossEntropy {
                    outputs: vec![(0, Axis::X), (1, Axis::X), (2, Axis::X)],
                    label: 0,
                    gamma,
                };
                let mut u = DVector::zeros(dofs.n_free());
                for (i, v) in vals.iter().enumerate() {
                    u[dofs.dof(i, Axis::X).unwrap()] = *v;
                }
                let p = spec.probabilities(&dofs, &u).unwrap();
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn labeled_magnitude_growth_decreases_cross_entropy(
                base in 0.001f64..0.01,
                other in 0.001f64..0.01,
                bump in 0.0001f64..0.01,
            ) {
                let dofs = lattice_dofs();
                let spec = LossSpec::CrossEntropy {
                    outputs: vec![(0, Axis::Y), (2, Axis::Y)],
                    label: 0,
                    gamma: 100.0,
                };
                let mut u = DVector::zeros(dofs.n_free());
                u[dofs.dof(0, Axis::Y).unwrap()] = -base;
                u[dofs.dof(2, Axis::Y).unwrap()] = other;
                let before = spec.value(&dofs, &u).unwrap();
                u[dofs.dof(0, Axis::Y).unwrap()] = -(base + bump);
                let after = spec.value(&dofs, &u).unwrap();
                prop_assert!(after < before);
            }

            #[test]
            fn analytic_gradient_matches_fd(
                vals in proptest::collection::vec(0.001f64..0.02, 4),
                signs in proptest::collection::vec(prop::bool::ANY, 4),
                which in 0usize..3,
            ) {
                let dofs = lattice_dofs();
                let spec = match which {
                    0 => LossSpec::Quadratic { node: 0, axis: Axis::Y, offset: 0.025 },
                    1 => LossSpec::Mse {
                        targets: vec![
                            MseTarget { node: 0, axis: Axis::X, target: 0.004 },
                            MseTarget { node: 1, axis: Axis::Y, target: 0.0016 },
                        ],
                    },
                    _ => LossSpec::CrossEntropy {
                        outputs: vec![(0, Axis::Y), (1, Axis::Y), (2, Axis::Y)],
                        label: 2,
                        gamma: 250.0,
                    },
                };
                let mut u = DVector::zeros(dofs.n_free());
                for (i, (v, s)) in vals.iter().zip(&signs).enumerate() {
                    u[i] = if *s { *v } else { -*v };
                }
                let g = spec.gradient(&dofs, &u).unwrap();
                let fd = fd_in_u(&spec, &dofs, &u);
                let denom = g.amax().max(1e-9);
                prop_assert!((&g - &fd).amax() / denom < 1e-6);
            }
        }
    }
}
