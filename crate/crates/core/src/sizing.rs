//! Topology of the general model: the parameter budget equals the dataset's
//! example count and every hidden layer gets the same width.
//!
//! Two widths are offered. `Paper` evaluates the published closed form,
//! which omits the hidden-to-hidden weight terms. `Exact` budgets the true
//! rectangular parameter count instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, LayerSpec, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizingMode {
    Paper,
    Exact,
}

#[derive(Debug, Clone, Copy)]
pub struct SizingInput {
    /// Target parameter budget.
    pub np: usize,
    /// Input dimension.
    pub d: usize,
    /// Hidden layer count.
    pub nl: usize,
    /// Output dimension / class count.
    pub nc: usize,
    pub mode: SizingMode,
}

impl SizingInput {
    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.nl == 0 || self.nc == 0 {
            return Err(Error::InvalidSizing(
                "dimensions and layer count must be >= 1".into(),
            ));
        }
        if self.np <= self.nc {
            return Err(Error::BudgetBelowOutput {
                np: self.np,
                nc: self.nc,
            });
        }
        Ok(())
    }
}

/// Closed-form parameter count used by the paper sizing mode:
/// D·NU + NL·NU·NC + NL·NU + NC.
pub fn paper_param_count(nu: usize, d: usize, nl: usize, nc: usize) -> usize {
    d * nu + nl * nu * nc + nl * nu + nc
}

/// True parameter count of a rectangular net D -> NU^NL -> NC.
pub fn true_param_count(nu: usize, d: usize, nl: usize, nc: usize) -> usize {
    d * nu + nu + (nl - 1) * (nu * nu + nu) + nu * nc + nc
}

/// Uniform hidden-layer width for the requested budget, clamped to >= 1.
pub fn compute_layer_width(s: SizingInput) -> Result<usize> {
    s.validate()?;
    let nu = match s.mode {
        SizingMode::Paper => (s.np - s.nc) / (s.d + s.nl * (s.nc + 1)),
        SizingMode::Exact => {
            // largest NU with true count <= NP; count is strictly
            // increasing in NU, so binary search after doubling
            let mut hi = 1usize;
            while true_param_count(hi, s.d, s.nl, s.nc) <= s.np {
                hi *= 2;
            }
            let mut lo = 0usize;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if true_param_count(mid, s.d, s.nl, s.nc) <= s.np {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    Ok(nu.max(1))
}

/// General-model spec for a dataset: input D, NL rectangular hidden layers
/// sized from NP = example count, output NC. Hidden activations are relu;
/// the output is softmax for classification and identity for regression.
pub fn build_general_spec(
    n_examples: usize,
    d: usize,
    nl: usize,
    task: TaskKind,
    mode: SizingMode,
) -> Result<Vec<LayerSpec>> {
    let nc = task.output_dim();
    let nu = compute_layer_width(SizingInput {
        np: n_examples,
        d,
        nl,
        nc,
        mode,
    })?;
    let out_act = if task.is_classification() {
        Activation::Softmax
    } else {
        Activation::Identity
    };
    let mut specs = Vec::with_capacity(nl + 1);
    let mut in_dim = d;
    for _ in 0..nl {
        specs.push(LayerSpec::new(in_dim, nu, Activation::Relu));
        in_dim = nu;
    }
    specs.push(LayerSpec::new(in_dim, nc, out_act));
    Ok(specs)
}
