use ndarray::{Array1, Array2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{DenseLayer, DenseNetwork};

use super::{CompensationMode, PrunePlan};

/// Builds the pruned network described by a plan. Kept units retain their
/// incoming weights restricted to kept predecessors; discarded units are
/// bias-compensated; fully collapsed layers are removed and their
/// neighbours bridged with fresh seeded Glorot-uniform weights. Input and
/// output dimensions never change.
pub fn rebuild_network(
    net: &DenseNetwork,
    plan: &PrunePlan,
    seed: u64,
) -> Result<DenseNetwork> {
    let h = net.hidden_count();
    if plan.keep.len() != h {
        return Err(Error::PlanMismatch(format!(
            "plan covers {} layers, network has {} hidden layers{}",
            plan.keep.len(),
            h,
            if plan.keep.len() == net.layers.len() {
                " (output layer must not be masked)"
            } else {
                ""
            }
        )));
    }
    for (l, mask) in plan.keep.iter().enumerate() {
        if mask.len() != net.layers[l].out_dim() {
            return Err(Error::PlanMismatch(format!(
                "layer {l}: mask length {} != width {}",
                mask.len(),
                net.layers[l].out_dim()
            )));
        }
        if plan.unit_means[l].len() != mask.len() {
            return Err(Error::PlanMismatch(format!("layer {l}: means length mismatch")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut new_layers: Vec<DenseLayer> = Vec::with_capacity(net.layers.len());
    // original index of each surviving layer, for literal-mode bias_extra
    let mut survivors: Vec<usize> = Vec::new();

    // kept unit indices of the previous original layer (input units at start)
    let mut prev_kept: Vec<usize> = (0..net.input_dim()).collect();
    let mut prev_surviving_width = net.input_dim();
    let mut bridge_pending = false;
    // discarded units of the immediately previous original layer
    let mut prev_discarded: Vec<(usize, f64)> = Vec::new();

    for l in 0..net.layers.len() {
        let layer = &net.layers[l];
        let kept_idx: Vec<usize> = if l < h {
            plan.keep[l]
                .iter()
                .enumerate()
                .filter(|(_, &k)| k)
                .map(|(u, _)| u)
                .collect()
        } else {
            (0..layer.out_dim()).collect()
        };

        if kept_idx.is_empty() {
            bridge_pending = true;
            prev_discarded = (0..layer.out_dim())
                .map(|u| (u, plan.unit_means[l][u]))
                .collect();
            continue;
        }

        let mut bias = Array1::from_iter(kept_idx.iter().map(|&u| layer.bias[u]));
        if plan.compensation_mode == CompensationMode::Weighted && !prev_discarded.is_empty() {
            for &(j, m) in &prev_discarded {
                for (c, &u) in kept_idx.iter().enumerate() {
                    bias[c] += layer.weights[[j, u]] * m;
                }
            }
        }

        let weights = if bridge_pending {
            let limit = (6.0 / (prev_surviving_width + kept_idx.len()) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("valid glorot bound");
            Array2::from_shape_fn((prev_surviving_width, kept_idx.len()), |_| {
                dist.sample(&mut rng)
            })
        } else {
            Array2::from_shape_fn((prev_kept.len(), kept_idx.len()), |(r, c)| {
                layer.weights[[prev_kept[r], kept_idx[c]]]
            })
        };

        new_layers.push(DenseLayer {
            weights,
            bias,
            activation: layer.activation,
        });
        survivors.push(l);

        bridge_pending = false;
        prev_surviving_width = kept_idx.len();
        if l < h {
            prev_discarded = plan.keep[l]
                .iter()
                .enumerate()
                .filter(|(_, &k)| !k)
                .map(|(u, _)| (u, plan.unit_means[l][u]))
                .collect();
        }
        prev_kept = kept_idx;
    }

    if plan.compensation_mode == CompensationMode::Literal {
        // each surviving hidden layer's accumulator lands on the next
        // surviving layer; a trailing carry has no consumer and is dropped
        for w in 0..survivors.len() - 1 {
            let src = survivors[w];
            if src < h && plan.bias_extra[src] != 0.0 {
                new_layers[w + 1].bias += plan.bias_extra[src];
            }
        }
    }

    let rebuilt = DenseNetwork {
        layers: new_layers,
        task: net.task,
    };
    rebuilt.validate()?;
    Ok(rebuilt)
}

/// Closed-form parameter count for kept widths [D, k1, ..., km, NC]
/// (collapsed layers omitted): sum of k_{i-1}*k_i + k_i.
pub fn params_from_widths(widths: &[usize]) -> usize {
    widths
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum()
}
