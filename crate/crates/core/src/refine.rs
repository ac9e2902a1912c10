//! End-to-end pipeline: general model construction, full training,
//! variability pruning, rebuild, light retraining, and the
//! same-topology-from-scratch control run.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitName};
use crate::error::{Error, Result};
use crate::metrics::{classification_metrics, compression_report, regression_metrics};
use crate::nn::{init_network, train, DenseNetwork, LayerSpec, TrainConfig};
use crate::pruning::{
    capture_unit_stats, rebuild_network, select_useful_units, CompensationMode, PrunePlan,
};
use crate::sizing::{build_general_spec, SizingMode};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineConfig {
    pub epsilon: f64,
    /// Fraction of the original epoch budget used for retraining; the
    /// retrain epoch count is rounded up and never below 1.
    pub retrain_fraction: f64,
    pub compensation: CompensationMode,
    pub train: TrainConfig,
    pub hidden_layers: usize,
    pub sizing_mode: SizingMode,
    pub seed: u64,
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidEpsilon(self.epsilon));
        }
        if !(self.retrain_fraction > 0.0 && self.retrain_fraction <= 1.0) {
            return Err(Error::Config {
                field: "retrain_fraction".into(),
                reason: "must be in (0, 1]".into(),
            });
        }
        if self.hidden_layers == 0 {
            return Err(Error::Config {
                field: "hidden_layers".into(),
                reason: "must be >= 1".into(),
            });
        }
        self.train.validate()
    }

    pub fn retrain_epochs(&self) -> usize {
        ((self.retrain_fraction * self.train.epochs as f64).ceil() as usize).max(1)
    }
}

/// Metrics of one pipeline stage; classification and regression fields are
/// mutually exclusive.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageMetrics {
    pub accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub binary_f1: Option<f64>,
    pub auc: Option<f64>,
    pub mse: Option<f64>,
    pub mae: Option<f64>,
}

impl StageMetrics {
    /// Headline number for tables: accuracy for classification, MSE for
    /// regression.
    pub fn headline(&self) -> f64 {
        self.accuracy.or(self.mse).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub epsilon: f64,
    pub original: StageMetrics,
    pub pruned_without_retrain: StageMetrics,
    pub refined: StageMetrics,
    pub params_original: usize,
    pub params_pruned: usize,
    pub reduction_percent: f64,
    pub layers_original: usize,
    pub layers_pruned: usize,
    /// Widths including input and output.
    pub original_widths: Vec<usize>,
    pub pruned_widths: Vec<usize>,
    pub collapsed_layers: Vec<usize>,
    pub retrain_epochs: usize,
    pub seed: u64,
    pub compensation: CompensationMode,
    /// Every hidden layer collapsed and retraining could not recover.
    pub degenerate: bool,
}

/// splitmix64 over (seed, stream): every randomized stage of one experiment
/// draws from its own derived seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(stream.wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(0x94d049bb133111eb);
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58476d1ce4e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    z
}

/// Test-split metrics for a trained network.
pub fn evaluate(net: &DenseNetwork, data: &Dataset, split: SplitName) -> Result<StageMetrics> {
    let (x, y) = data.rows(split);
    if x.nrows() == 0 {
        return Err(Error::EmptySplit(match split {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }));
    }
    let out = net.forward(&x)?;
    let mut m = StageMetrics::default();
    if data.task.is_classification() {
        let labels = data.labels(split);
        let cm = classification_metrics(&out, &labels)?;
        m.accuracy = Some(cm.accuracy);
        m.macro_f1 = Some(cm.macro_f1);
        m.binary_f1 = cm.binary_f1;
        m.auc = cm.auc;
    } else {
        let rm = regression_metrics(&out, &y)?;
        m.mse = Some(rm.mse);
        m.mae = Some(rm.mae);
    }
    Ok(m)
}

fn retrain_config(cfg: &RefineConfig) -> TrainConfig {
    let epochs = cfg.retrain_epochs();
    let mut t = cfg.train.clone();
    t.epochs = epochs;
    t.early_stopping_patience = t.early_stopping_patience.map(|p| p.min(epochs));
    t.seed = derive_seed(cfg.seed, 2);
    t
}

/// Sizes and trains the general model for a dataset (the first two steps
/// of the pipeline). Shared by `odf2nna` and the epsilon sweep, which
/// trains once and refines many times.
pub fn train_general(data: &Dataset, cfg: &RefineConfig) -> Result<DenseNetwork> {
    cfg.validate()?;
    let specs = build_general_spec(
        data.n(),
        data.feature_dim(),
        cfg.hidden_layers,
        data.task,
        cfg.sizing_mode,
    )?;
    let mut net = init_network(&specs, data.task, derive_seed(cfg.seed, 0))?;
    let mut full = cfg.train.clone();
    full.seed = derive_seed(cfg.seed, 1);
    train(&mut net, data, &full)?;
    Ok(net)
}

/// Full pipeline: size and train the general model, then prune and refine
/// it. Returns the refined network and the three-stage record.
pub fn odf2nna(data: &Dataset, cfg: &RefineConfig) -> Result<(DenseNetwork, ExperimentRecord)> {
    let net = train_general(data, cfg)?;
    refine_existing(&net, data, cfg)
}

/// Prune-and-refine for an already trained network (general model
/// construction and full training skipped).
pub fn refine_existing(
    net: &DenseNetwork,
    data: &Dataset,
    cfg: &RefineConfig,
) -> Result<(DenseNetwork, ExperimentRecord)> {
    cfg.validate()?;
    if data.splits.validation.is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    let original_metrics = evaluate(net, data, SplitName::Test)?;

    // unit statistics come from the validation split, never the test set
    let (eval_x, _) = data.rows(SplitName::Validation);
    let stats = capture_unit_stats(net, &eval_x)?;
    let plan = select_useful_units(&stats, cfg.epsilon, cfg.compensation)?;
    let nothing_pruned = plan.keep.iter().flatten().all(|&k| k);

    let rebuilt = rebuild_network(net, &plan, derive_seed(cfg.seed, 3))?;
    let pruned_metrics = if nothing_pruned {
        // identical network; reuse the measurement so OR == PWR exactly
        original_metrics.clone()
    } else {
        evaluate(&rebuilt, data, SplitName::Test)?
    };

    let mut refined = rebuilt.clone();
    train(&mut refined, data, &retrain_config(cfg))?;
    let refined_metrics = evaluate(&refined, data, SplitName::Test)?;

    let report = compression_report(net, &refined)?;
    let degenerate = degenerate_outcome(&plan, net, &refined_metrics, &original_metrics);
    let record = ExperimentRecord {
        epsilon: cfg.epsilon,
        original: original_metrics,
        pruned_without_retrain: pruned_metrics,
        refined: refined_metrics,
        params_original: report.original_params,
        params_pruned: report.pruned_params,
        reduction_percent: report.reduction_percent,
        layers_original: net.layers.len(),
        layers_pruned: refined.layers.len(),
        original_widths: net.widths(),
        pruned_widths: refined.widths(),
        collapsed_layers: plan.collapsed_layers.clone(),
        retrain_epochs: cfg.retrain_epochs(),
        seed: cfg.seed,
        compensation: cfg.compensation,
        degenerate,
    };
    Ok((refined, record))
}

// Full collapse is reported, not rejected: the epsilon sweep needs to show
// where the method breaks down.
fn degenerate_outcome(
    plan: &PrunePlan,
    net: &DenseNetwork,
    refined: &StageMetrics,
    original: &StageMetrics,
) -> bool {
    if plan.collapsed_layers.len() < net.hidden_count() {
        return false;
    }
    match (refined.accuracy, original.accuracy) {
        (Some(r), Some(o)) => r < o * 0.5,
        _ => match (refined.mse, original.mse) {
            (Some(r), Some(o)) => r > o * 10.0,
            _ => false,
        },
    }
}

/// Control experiment: a fresh network with the refined topology trained
/// from scratch with the ORIGINAL full epoch budget and hyperparameters.
pub fn scratch_control(
    record: &ExperimentRecord,
    data: &Dataset,
    base: &TrainConfig,
) -> Result<StageMetrics> {
    let widths = &record.pruned_widths;
    if widths.len() < 2 {
        return Err(Error::Config {
            field: "record.pruned_widths".into(),
            reason: "record does not carry a topology".into(),
        });
    }
    let out_act = if data.task.is_classification() {
        crate::nn::Activation::Softmax
    } else {
        crate::nn::Activation::Identity
    };
    let mut specs = Vec::new();
    for w in widths.windows(2) {
        specs.push(LayerSpec::new(w[0], w[1], crate::nn::Activation::Relu));
    }
    specs.last_mut().unwrap().activation = out_act;
    let mut net = init_network(&specs, data.task, derive_seed(record.seed, 4))?;
    let mut cfg = base.clone();
    cfg.seed = derive_seed(record.seed, 5);
    train(&mut net, data, &cfg)?;
    evaluate(&net, data, SplitName::Test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synth_classification, ClassSynthKind};
    use crate::nn::{Loss, Optimizer};
    use crate::pruning::CompensationMode;
    use crate::sizing::SizingMode;

    fn blob_data(seed: u64) -> Dataset {
        let ds = synth_classification(ClassSynthKind::Blobs { classes: 3 }, 300, 6, 0.8, seed)
            .unwrap();
        split(&ds, (0.6, 0.2, 0.2), true, seed).unwrap()
    }

    fn base_cfg(epsilon: f64) -> RefineConfig {
        RefineConfig {
            epsilon,
            retrain_fraction: 0.15,
            compensation: CompensationMode::Weighted,
            train: TrainConfig {
                epochs: 60,
                batch_size: 16,
                optimizer: Optimizer::adam(5e-3),
                loss: Loss::CrossEntropy,
                early_stopping_patience: None,
                seed: 0,
            },
            hidden_layers: 2,
            sizing_mode: SizingMode::Exact,
            seed: 7,
        }
    }

    #[test]
    fn tiny_epsilon_is_a_no_op_prune() {
        // tanh hidden units are almost surely non-constant, so an epsilon
        // below every activation std must keep the whole network
        let data = blob_data(1);
        let net = init_network(
            &[
                LayerSpec::new(6, 10, crate::nn::Activation::Tanh),
                LayerSpec::new(10, 8, crate::nn::Activation::Tanh),
                LayerSpec::new(8, 3, crate::nn::Activation::Softmax),
            ],
            data.task,
            21,
        )
        .unwrap();
        let (_, record) = refine_existing(&net, &data, &base_cfg(1e-9)).unwrap();
        assert_eq!(record.reduction_percent, 0.0);
        assert_eq!(
            record.original.accuracy.unwrap(),
            record.pruned_without_retrain.accuracy.unwrap()
        );
        assert_eq!(record.params_original, record.params_pruned);
    }

    #[test]
    fn record_parameter_accounting_is_consistent() {
        let data = blob_data(2);
        let (refined, record) = odf2nna(&data, &base_cfg(0.05)).unwrap();
        assert_eq!(record.params_pruned, refined.param_count());
        let expect =
            100.0 * (1.0 - record.params_pruned as f64 / record.params_original as f64);
        assert!((record.reduction_percent - expect).abs() < 1e-9);
        assert!(record.params_pruned <= record.params_original);
        // retraining never alters topology
        assert_eq!(record.pruned_widths, refined.widths());
    }

    #[test]
    fn epsilon_sweep_has_non_increasing_params() {
        let data = blob_data(3);
        let cfg = base_cfg(0.01);
        let specs = build_general_spec(
            data.n(),
            data.feature_dim(),
            cfg.hidden_layers,
            data.task,
            cfg.sizing_mode,
        )
        .unwrap();
        let mut net = init_network(&specs, data.task, derive_seed(cfg.seed, 0)).unwrap();
        let mut full = cfg.train.clone();
        full.seed = derive_seed(cfg.seed, 1);
        train(&mut net, &data, &full).unwrap();
        let mut last = usize::MAX;
        for eps in [0.01, 0.05, 0.1, 0.2, 0.4, 0.8] {
            let mut c = cfg.clone();
            c.epsilon = eps;
            let (_, record) = refine_existing(&net, &data, &c).unwrap();
            assert!(record.params_pruned <= last, "eps={eps}");
            last = record.params_pruned;
        }
    }

    #[test]
    fn pipeline_is_deterministic_per_seed() {
        let data = blob_data(4);
        let cfg = base_cfg(0.05);
        let (_, a) = odf2nna(&data, &cfg).unwrap();
        let (_, b) = odf2nna(&data, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn scratch_control_is_deterministic() {
        let data = blob_data(5);
        let (_, record) = odf2nna(&data, &base_cfg(0.05)).unwrap();
        let base = base_cfg(0.05).train;
        let a = scratch_control(&record, &data, &base).unwrap();
        let b = scratch_control(&record, &data, &base).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
    }

    #[test]
    fn retrain_epoch_rounding() {
        let mut cfg = base_cfg(0.1);
        cfg.train.epochs = 10;
        cfg.retrain_fraction = 0.15;
        assert_eq!(cfg.retrain_epochs(), 2);
        cfg.train.epochs = 3;
        assert_eq!(cfg.retrain_epochs(), 1);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = base_cfg(0.0);
        assert!(cfg.validate().is_err());
        cfg.epsilon = 0.1;
        cfg.retrain_fraction = 0.0;
        assert!(cfg.validate().is_err());
    }
}
