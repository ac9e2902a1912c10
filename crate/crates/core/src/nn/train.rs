use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::network::DenseNetwork;
use crate::data::{Dataset, SplitName};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr } | Optimizer::Adam { lr, .. } => lr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    CrossEntropy,
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub loss: Loss,
    pub early_stopping_patience: Option<usize>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidTrainConfig("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidTrainConfig("batch_size must be positive".into()));
        }
        // lr == 0 is tolerated so a no-op training pass stays expressible
        if self.optimizer.lr() < 0.0 {
            return Err(Error::InvalidTrainConfig("learning rate must be >= 0".into()));
        }
        if let Some(p) = self.early_stopping_patience {
            if p == 0 || p > self.epochs {
                return Err(Error::InvalidTrainConfig(
                    "patience must be in 1..=epochs".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub stopped_epoch: usize,
}

pub struct LayerGrad {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

const LOG_CLAMP: f64 = 1e-12;

/// Mean loss over a batch. Cross-entropy averages over examples; MSE
/// averages over every output entry.
pub fn loss_value(outputs: &Array2<f64>, targets: &Array2<f64>, loss: Loss) -> f64 {
    let n = outputs.nrows() as f64;
    match loss {
        Loss::CrossEntropy => {
            let mut total = 0.0;
            for (o, t) in outputs.rows().into_iter().zip(targets.rows()) {
                for (ov, tv) in o.iter().zip(t.iter()) {
                    if *tv != 0.0 {
                        total -= tv * ov.max(LOG_CLAMP).ln();
                    }
                }
            }
            total / n
        }
        Loss::Mse => {
            let diff = outputs - targets;
            diff.iter().map(|v| v * v).sum::<f64>() / (n * outputs.ncols() as f64)
        }
    }
}

/// Forward + backward over one batch; returns the batch loss and the
/// gradient of the mean loss wrt every weight and bias.
pub fn loss_and_grads(
    net: &DenseNetwork,
    x: &Array2<f64>,
    y: &Array2<f64>,
    loss: Loss,
) -> Result<(f64, Vec<LayerGrad>)> {
    let n = x.nrows() as f64;
    let last = net.layers.len() - 1;
    let out_act = net.layers[last].activation;
    if loss == Loss::CrossEntropy && out_act != Activation::Softmax {
        return Err(Error::InvalidTrainConfig(
            "cross-entropy requires a softmax output layer".into(),
        ));
    }
    if loss == Loss::Mse && out_act == Activation::Softmax {
        return Err(Error::InvalidTrainConfig(
            "mse with softmax output is not supported".into(),
        ));
    }

    // forward, keeping every activation
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(net.layers.len() + 1);
    acts.push(x.clone());
    for layer in &net.layers {
        let a = layer.forward(acts.last().unwrap());
        acts.push(a);
    }
    let outputs = acts.last().unwrap();
    let value = loss_value(outputs, y, loss);

    // delta at the output, already folded through the output activation
    let mut delta: Array2<f64> = match loss {
        // softmax + cross-entropy jointly: dL/dz = (a - y)/n
        Loss::CrossEntropy => (outputs - y) / n,
        Loss::Mse => {
            let m = outputs.ncols() as f64;
            let mut d = (outputs - y) * (2.0 / (n * m));
            d.zip_mut_with(outputs, |dv, av| {
                *dv *= out_act.derivative_from_output(*av);
            });
            d
        }
    };

    let mut grads: Vec<LayerGrad> = Vec::with_capacity(net.layers.len());
    for i in (0..net.layers.len()).rev() {
        let gw = acts[i].t().dot(&delta);
        let gb = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut prev = delta.dot(&net.layers[i].weights.t());
            let act = net.layers[i - 1].activation;
            prev.zip_mut_with(&acts[i], |dv, av| *dv *= act.derivative_from_output(*av));
            delta = prev;
        }
        grads.push(LayerGrad { w: gw, b: gb });
    }
    grads.reverse();
    Ok((value, grads))
}

struct AdamState {
    m: Vec<LayerGrad>,
    v: Vec<LayerGrad>,
    t: u64,
}

impl AdamState {
    fn new(net: &DenseNetwork) -> Self {
        let zero = |net: &DenseNetwork| {
            net.layers
                .iter()
                .map(|l| LayerGrad {
                    w: Array2::zeros(l.weights.dim()),
                    b: Array1::zeros(l.bias.len()),
                })
                .collect()
        };
        AdamState {
            m: zero(net),
            v: zero(net),
            t: 0,
        }
    }
}

fn apply_gradients(
    net: &mut DenseNetwork,
    grads: &[LayerGrad],
    optimizer: &Optimizer,
    adam: &mut Option<AdamState>,
) {
    match *optimizer {
        Optimizer::Sgd { lr } => {
            for (layer, g) in net.layers.iter_mut().zip(grads) {
                layer.weights.zip_mut_with(&g.w, |w, gw| *w -= lr * gw);
                layer.bias.zip_mut_with(&g.b, |b, gb| *b -= lr * gb);
            }
        }
        Optimizer::Adam {
            lr,
            beta1,
            beta2,
            eps,
        } => {
            let state = adam.as_mut().expect("adam state initialized");
            state.t += 1;
            let bc1 = 1.0 - beta1.powi(state.t as i32);
            let bc2 = 1.0 - beta2.powi(state.t as i32);
            for i in 0..grads.len() {
                let layer = &mut net.layers[i];
                let g = &grads[i];
                let m = &mut state.m[i];
                let v = &mut state.v[i];
                m.w.zip_mut_with(&g.w, |m, g| *m = beta1 * *m + (1.0 - beta1) * g);
                v.w.zip_mut_with(&g.w, |v, g| *v = beta2 * *v + (1.0 - beta2) * g * g);
                m.b.zip_mut_with(&g.b, |m, g| *m = beta1 * *m + (1.0 - beta1) * g);
                v.b.zip_mut_with(&g.b, |v, g| *v = beta2 * *v + (1.0 - beta2) * g * g);
                ndarray::Zip::from(&mut layer.weights)
                    .and(&m.w)
                    .and(&v.w)
                    .for_each(|w, &mw, &vw| {
                        *w -= lr * (mw / bc1) / ((vw / bc2).sqrt() + eps);
                    });
                ndarray::Zip::from(&mut layer.bias)
                    .and(&m.b)
                    .and(&v.b)
                    .for_each(|b, &mb, &vb| {
                        *b -= lr * (mb / bc1) / ((vb / bc2).sqrt() + eps);
                    });
            }
        }
    }
}

/// Mini-batch training with a seeded per-epoch shuffle. Early stopping
/// monitors validation loss when a patience is configured (validation
/// split required in that case; otherwise train loss is monitored).
pub fn train(net: &mut DenseNetwork, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.splits.train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    let (train_x, train_y) = data.rows(SplitName::Train);
    if train_x.ncols() != net.input_dim() {
        return Err(Error::InputDim {
            got: train_x.ncols(),
            expected: net.input_dim(),
        });
    }
    let has_val = !data.splits.validation.is_empty();
    let (val_x, val_y) = if has_val {
        data.rows(SplitName::Validation)
    } else {
        (train_x.clone(), train_y.clone())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_x.nrows()).collect();
    let mut adam = match cfg.optimizer {
        Optimizer::Adam { .. } => Some(AdamState::new(net)),
        Optimizer::Sgd { .. } => None,
    };

    let mut report = TrainReport {
        train_losses: Vec::with_capacity(cfg.epochs),
        val_losses: Vec::with_capacity(cfg.epochs),
        stopped_epoch: cfg.epochs,
    };
    let mut best_val = f64::INFINITY;
    let mut since_best = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let bx = train_x.select(Axis(0), chunk);
            let by = train_y.select(Axis(0), chunk);
            let (loss, grads) = loss_and_grads(net, &bx, &by, cfg.loss)?;
            if !loss.is_finite() {
                return Err(Error::TrainDiverged { epoch });
            }
            apply_gradients(net, &grads, &cfg.optimizer, &mut adam);
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        report.train_losses.push(epoch_loss / seen as f64);

        let val_out = net.forward(&val_x)?;
        let val_loss = loss_value(&val_out, &val_y, cfg.loss);
        if !val_loss.is_finite() {
            return Err(Error::TrainDiverged { epoch });
        }
        report.val_losses.push(val_loss);

        if let Some(patience) = cfg.early_stopping_patience {
            if val_loss < best_val - 1e-12 {
                best_val = val_loss;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    report.stopped_epoch = epoch + 1;
                    break;
                }
            }
        }
    }
    if report.stopped_epoch > report.train_losses.len() {
        report.stopped_epoch = report.train_losses.len();
    }
    Ok(report)
}
