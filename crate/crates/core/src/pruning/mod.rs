//! Useful-unit selection and network rebuild.
//!
//! A hidden unit is kept when the standard deviation of its activation over
//! the evaluation set exceeds epsilon. Discarded units are compensated by
//! folding their mean activation into downstream biases; layers losing every
//! unit are removed and their neighbours bridged.

mod rebuild;

pub use rebuild::{params_from_widths, rebuild_network};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::DenseNetwork;

/// Per-hidden-unit activation statistics over an evaluation set
/// (population mean and population standard deviation).
#[derive(Debug, Clone)]
pub struct UnitStats {
    pub mean: Vec<Array1<f64>>,
    pub std: Vec<Array1<f64>>,
}

impl UnitStats {
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.mean.iter().map(|m| m.len()).collect()
    }
}

/// One forward-capture pass over evalData; column (l, u) of the trace is
/// exactly the output of the per-unit subnet ending at (l, u), so this is
/// the cheap route to the same statistics.
pub fn capture_unit_stats(net: &DenseNetwork, eval_data: &Array2<f64>) -> Result<UnitStats> {
    if eval_data.nrows() == 0 {
        return Err(Error::Data("empty evalData".into()));
    }
    let (_, trace) = net.forward_capture(eval_data)?;
    let n = eval_data.nrows() as f64;
    let mut mean = Vec::with_capacity(trace.hidden.len());
    let mut std = Vec::with_capacity(trace.hidden.len());
    for layer in &trace.hidden {
        let m: Array1<f64> = layer.sum_axis(ndarray::Axis(0)) / n;
        let mut v: Array1<f64> = Array1::zeros(layer.ncols());
        for row in layer.rows() {
            for (j, x) in row.iter().enumerate() {
                let d = x - m[j];
                v[j] += d * d;
            }
        }
        v.mapv_inplace(|x| (x / n).sqrt());
        mean.push(m);
        std.push(v);
    }
    Ok(UnitStats { mean, std })
}

/// Builds the truncated network whose single output unit is hidden unit
/// (layer, unit) and evaluates it per evalData row. The production path is
/// `capture_unit_stats`; this form is kept as an independent oracle.
pub fn subnet_output(
    net: &DenseNetwork,
    layer: usize,
    unit: usize,
    eval_data: &Array2<f64>,
) -> Result<Array1<f64>> {
    if layer >= net.hidden_count() || unit >= net.layers[layer].out_dim() {
        return Err(Error::UnitIndex { layer, unit });
    }
    let full = &net.layers[layer];
    let mut sub = DenseNetwork {
        layers: net.layers[..layer].to_vec(),
        task: crate::nn::TaskKind::Regression(1),
    };
    let head = crate::nn::DenseLayer {
        weights: full
            .weights
            .column(unit)
            .to_owned()
            .insert_axis(ndarray::Axis(1)),
        bias: ndarray::array![full.bias[unit]],
        activation: full.activation,
    };
    sub.layers.push(head);
    let out = sub.forward(eval_data)?;
    Ok(out.column(0).to_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompensationMode {
    /// Fold each discarded unit's mean into downstream biases through the
    /// downstream weights; preserves the function exactly for constant
    /// units.
    Weighted,
    /// Add the per-layer scalar bias accumulator to every bias of the next
    /// surviving layer.
    Literal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrunePlan {
    /// Keep-mask per hidden layer. Input and output layers are never
    /// masked.
    pub keep: Vec<Vec<bool>>,
    /// Scalar bias accumulator per hidden layer: sum of discarded means,
    /// plus any carry from fully collapsed predecessors.
    pub bias_extra: Vec<f64>,
    /// Carry left over when trailing layers collapse.
    pub accumulated_bias_carry: f64,
    /// Indices of hidden layers whose mask is all-false.
    pub collapsed_layers: Vec<usize>,
    pub epsilon: f64,
    pub compensation_mode: CompensationMode,
    /// Mean activation per hidden unit, needed for compensation.
    pub unit_means: Vec<Vec<f64>>,
}

impl PrunePlan {
    pub fn kept_widths(&self) -> Vec<usize> {
        self.keep
            .iter()
            .map(|m| m.iter().filter(|&&k| k).count())
            .collect()
    }

    pub fn kept_total(&self) -> usize {
        self.kept_widths().iter().sum()
    }
}

/// Threshold selection: keep unit (l, u) iff std[l][u] > epsilon. Bias
/// accumulators follow the layer-wise carry rule: a layer keeping at least
/// one unit absorbs the pending carry, a fully discarded layer forwards it.
pub fn select_useful_units(
    stats: &UnitStats,
    epsilon: f64,
    mode: CompensationMode,
) -> Result<PrunePlan> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let mut plan = PrunePlan {
        keep: Vec::with_capacity(stats.std.len()),
        bias_extra: Vec::with_capacity(stats.std.len()),
        accumulated_bias_carry: 0.0,
        collapsed_layers: Vec::new(),
        epsilon,
        compensation_mode: mode,
        unit_means: stats.mean.iter().map(|m| m.to_vec()).collect(),
    };
    let mut carry = 0.0;
    for (l, (std, mean)) in stats.std.iter().zip(&stats.mean).enumerate() {
        let mask: Vec<bool> = std.iter().map(|&s| s > epsilon).collect();
        let layer_sum: f64 = mask
            .iter()
            .zip(mean.iter())
            .filter(|(k, _)| !**k)
            .map(|(_, m)| m)
            .sum();
        if mask.iter().any(|&k| k) {
            plan.bias_extra.push(layer_sum + carry);
            carry = 0.0;
        } else {
            plan.bias_extra.push(0.0);
            carry += layer_sum;
            plan.collapsed_layers.push(l);
        }
        plan.keep.push(mask);
    }
    plan.accumulated_bias_carry = carry;
    Ok(plan)
}
