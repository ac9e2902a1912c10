use ndarray::{Array1, Array2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "dim")]
pub enum TaskKind {
    Classification(usize),
    Regression(usize),
}

impl TaskKind {
    pub fn output_dim(self) -> usize {
        match self {
            TaskKind::Classification(nc) | TaskKind::Regression(nc) => nc,
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, TaskKind::Classification(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        LayerSpec {
            in_dim,
            out_dim,
            activation,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Shape (in_dim, out_dim); column u holds the incoming weights of unit u.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(spec: LayerSpec, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (spec.in_dim + spec.out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("valid glorot bound");
        let weights =
            Array2::from_shape_fn((spec.in_dim, spec.out_dim), |_| dist.sample(rng));
        DenseLayer {
            weights,
            bias: Array1::zeros(spec.out_dim),
            activation: spec.activation,
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights);
        z += &self.bias;
        self.activation.apply(&mut z);
        z
    }
}

/// Post-activation values of every hidden layer, one matrix per layer with
/// one row per evaluated example.
#[derive(Debug, Clone)]
pub struct ActivationTrace {
    pub hidden: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseNetwork {
    pub layers: Vec<DenseLayer>,
    pub task: TaskKind,
}

impl DenseNetwork {
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn hidden_count(&self) -> usize {
        self.layers.len() - 1
    }

    /// Layer widths including input and output: [D, h1, ..., NC].
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(|l| l.out_dim()));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidLayer {
                index: 0,
                reason: "network has no layers".into(),
            });
        }
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.in_dim() == 0 || layer.out_dim() == 0 {
                return Err(Error::InvalidLayer {
                    index: i,
                    reason: "zero-sized layer".into(),
                });
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::InvalidLayer {
                    index: i,
                    reason: format!(
                        "bias length {} != output dim {}",
                        layer.bias.len(),
                        layer.out_dim()
                    ),
                });
            }
            if layer.activation == Activation::Softmax && i != last {
                return Err(Error::InvalidLayer {
                    index: i,
                    reason: "softmax is only permitted on the final layer".into(),
                });
            }
            if layer.weights.iter().any(|v| !v.is_finite())
                || layer.bias.iter().any(|v| !v.is_finite())
            {
                return Err(Error::InvalidLayer {
                    index: i,
                    reason: "non-finite weight or bias".into(),
                });
            }
            if i + 1 < self.layers.len() && layer.out_dim() != self.layers[i + 1].in_dim() {
                return Err(Error::ShapeChain {
                    index: i,
                    out: layer.out_dim(),
                    next_in: self.layers[i + 1].in_dim(),
                });
            }
        }
        if self.output_dim() != self.task.output_dim() {
            return Err(Error::InvalidLayer {
                index: last,
                reason: format!(
                    "output dim {} != task dim {}",
                    self.output_dim(),
                    self.task.output_dim()
                ),
            });
        }
        Ok(())
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::InputDim {
                got: x.ncols(),
                expected: self.input_dim(),
            });
        }
        for (row, r) in x.rows().into_iter().enumerate() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput { row });
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            a = layer.forward(&a);
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(a)
    }

    /// Same computation as `forward`, additionally returning every hidden
    /// unit's post-activation value per example.
    pub fn forward_capture(&self, x: &Array2<f64>) -> Result<(Array2<f64>, ActivationTrace)> {
        self.check_input(x)?;
        let mut hidden = Vec::with_capacity(self.hidden_count());
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            a = layer.forward(&a);
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            if i + 1 < self.layers.len() {
                hidden.push(a.clone());
            }
        }
        Ok((a, ActivationTrace { hidden }))
    }
}

/// Builds a network with seeded Glorot-uniform weights and zero biases.
/// The same (spec, seed) pair always produces bit-identical weights.
pub fn init_network(specs: &[LayerSpec], task: TaskKind, seed: u64) -> Result<DenseNetwork> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = specs
        .iter()
        .map(|s| DenseLayer::glorot(*s, &mut rng))
        .collect();
    let net = DenseNetwork { layers, task };
    net.validate()?;
    Ok(net)
}
