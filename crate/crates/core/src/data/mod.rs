//! Dataset ingestion, splitting, normalization and synthetic generation.

mod csv_load;
mod synth;

pub use csv_load::{load_csv, CsvSchema, CsvTask, TargetColumn};
pub use synth::{synth_classification, synth_regression, ClassSynthKind, SynthKind};

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &[usize] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub task: TaskKind,
    pub splits: Splits,
    pub feature_names: Option<Vec<String>>,
    /// For classification: original target labels in class-id order.
    pub class_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>, task: TaskKind) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::Data(format!(
                "feature rows {} != target rows {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::Data("empty dataset".into()));
        }
        if y.ncols() != task.output_dim() {
            return Err(Error::Data(format!(
                "target has {} columns, task expects {}",
                y.ncols(),
                task.output_dim()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in dataset".into()));
        }
        Ok(Dataset {
            x,
            y,
            task,
            splits: Splits::default(),
            feature_names: None,
            class_names: None,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.y.ncols()
    }

    pub fn rows(&self, name: SplitName) -> (Array2<f64>, Array2<f64>) {
        let idx = self.splits.get(name);
        (self.x.select(Axis(0), idx), self.y.select(Axis(0), idx))
    }

    /// Class ids (argmax of one-hot rows) for a split; classification only.
    pub fn labels(&self, name: SplitName) -> Vec<usize> {
        self.splits
            .get(name)
            .iter()
            .map(|&i| argmax(&self.y.row(i).to_owned()))
            .collect()
    }
}

fn argmax(row: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

fn floor_frac(f: f64, n: usize) -> usize {
    (f * n as f64 + 1e-9).floor() as usize
}

/// Deterministic seeded split into train/validation/test index lists.
/// Stratified mode preserves per-class proportions within ±1 example.
pub fn split(
    ds: &Dataset,
    fractions: (f64, f64, f64),
    stratified: bool,
    seed: u64,
) -> Result<Dataset> {
    let (ft, fv, fe) = fractions;
    if ft <= 0.0 || fv <= 0.0 || fe <= 0.0 {
        return Err(Error::Data("split fractions must be positive".into()));
    }
    if (ft + fv + fe - 1.0).abs() > 1e-9 {
        return Err(Error::Data("split fractions must sum to 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Splits::default();
    if stratified && ds.task.is_classification() {
        let nc = ds.output_dim();
        for class in 0..nc {
            let mut idx: Vec<usize> = (0..ds.n())
                .filter(|&i| argmax(&ds.y.row(i).to_owned()) == class)
                .collect();
            idx.shuffle(&mut rng);
            let nt = floor_frac(ft, idx.len());
            let nv = floor_frac(fv, idx.len());
            splits.train.extend(&idx[..nt]);
            splits.validation.extend(&idx[nt..nt + nv]);
            splits.test.extend(&idx[nt + nv..]);
        }
        splits.train.sort_unstable();
        splits.validation.sort_unstable();
        splits.test.sort_unstable();
    } else {
        let mut idx: Vec<usize> = (0..ds.n()).collect();
        idx.shuffle(&mut rng);
        let nt = floor_frac(ft, ds.n());
        let nv = floor_frac(fv, ds.n());
        splits.train = idx[..nt].to_vec();
        splits.validation = idx[nt..nt + nv].to_vec();
        splits.test = idx[nt + nv..].to_vec();
    }
    if splits.train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if splits.validation.is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    if splits.test.is_empty() {
        return Err(Error::EmptySplit("test"));
    }
    let mut out = ds.clone();
    out.splits = splits;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMethod {
    Zscore,
    Minmax,
}

/// Per-feature affine transform: x' = (x - offset) / scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scaler {
    pub method: NormalizeMethod,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn apply(&self, x: &mut Array2<f64>) {
        for mut row in x.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.offset[j]) / self.scale[j];
            }
        }
    }
}

/// Fits scaler statistics on the train split only and applies the transform
/// to every row of the dataset.
pub fn normalize(ds: &Dataset, method: NormalizeMethod) -> Result<(Dataset, Scaler)> {
    if ds.splits.train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    let (train_x, _) = ds.rows(SplitName::Train);
    let d = ds.feature_dim();
    let mut offset = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        let col = train_x.column(j);
        match method {
            NormalizeMethod::Zscore => {
                let mean = col.mean().unwrap();
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / col.len() as f64;
                let sd = var.sqrt();
                if sd > 0.0 {
                    offset[j] = mean;
                    scale[j] = sd;
                }
            }
            NormalizeMethod::Minmax => {
                let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if max > min {
                    offset[j] = min;
                    scale[j] = max - min;
                }
            }
        }
    }
    let scaler = Scaler {
        method,
        offset,
        scale,
    };
    let mut out = ds.clone();
    scaler.apply(&mut out.x);
    Ok((out, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_classification(n: usize, minority_every: usize) -> Dataset {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        let y = Array2::from_shape_fn((n, 2), |(i, j)| {
            let class = usize::from(i % minority_every == 0);
            if j == class {
                1.0
            } else {
                0.0
            }
        });
        Dataset::new(x, y, TaskKind::Classification(2)).unwrap()
    }

    #[test]
    fn split_sizes_match_fractions() {
        let ds = toy_classification(10, 10);
        let ds = split(&ds, (0.6, 0.2, 0.2), false, 1).unwrap();
        assert_eq!(ds.splits.train.len(), 6);
        assert_eq!(ds.splits.validation.len(), 2);
        assert_eq!(ds.splits.test.len(), 2);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy_classification(50, 5);
        let a = split(&ds, (0.6, 0.2, 0.2), true, 42).unwrap();
        let b = split(&ds, (0.6, 0.2, 0.2), true, 42).unwrap();
        assert_eq!(a.splits, b.splits);
    }

    #[test]
    fn splits_are_disjoint_and_cover() {
        let ds = toy_classification(53, 4);
        let ds = split(&ds, (0.6, 0.2, 0.2), true, 9).unwrap();
        let mut all: Vec<usize> = ds
            .splits
            .train
            .iter()
            .chain(&ds.splits.validation)
            .chain(&ds.splits.test)
            .cloned()
            .collect();
        all.sort_unstable();
        let deduped: Vec<usize> = (0..53).collect();
        assert_eq!(all, deduped);
    }

    #[test]
    fn stratified_split_preserves_imbalanced_ratio() {
        // 90/10 imbalance: each split stays within ±1 of the global
        // per-class ratio.
        let ds = toy_classification(100, 10);
        let ds = split(&ds, (0.6, 0.2, 0.2), true, 3).unwrap();
        for (name, frac) in [
            (SplitName::Train, 0.6),
            (SplitName::Validation, 0.2),
            (SplitName::Test, 0.2),
        ] {
            let minority = ds
                .labels(name)
                .iter()
                .filter(|&&c| c == 1)
                .count() as f64;
            let expected = 10.0 * frac;
            assert!(
                (minority - expected).abs() <= 1.0,
                "{name:?}: {minority} vs {expected}"
            );
        }
    }

    #[test]
    fn empty_split_rejected() {
        let ds = toy_classification(3, 3);
        assert!(matches!(
            split(&ds, (0.98, 0.01, 0.01), false, 0),
            Err(Error::EmptySplit(_))
        ));
    }

    #[test]
    fn minmax_maps_train_range_to_unit() {
        let x = array![[0.0, 5.0], [10.0, 5.0], [5.0, 5.0]];
        let y = array![[0.0], [1.0], [0.5]];
        let mut ds = Dataset::new(x, y, TaskKind::Regression(1)).unwrap();
        ds.splits = Splits {
            train: vec![0, 1],
            validation: vec![2],
            test: vec![2],
        };
        let (norm, scaler) = normalize(&ds, NormalizeMethod::Minmax).unwrap();
        assert_eq!(norm.x[[0, 0]], 0.0);
        assert_eq!(norm.x[[1, 0]], 1.0);
        // constant feature passes through unchanged
        assert_eq!(norm.x[[0, 1]], 5.0);
        // stored scaler reproduces the normalized train split
        let mut again = ds.x.clone();
        scaler.apply(&mut again);
        assert_eq!(again, norm.x);
    }

    #[test]
    fn zscore_statistics_come_from_train_only() {
        let x = array![[0.0], [2.0], [100.0]];
        let y = array![[0.0], [1.0], [2.0]];
        let mut ds = Dataset::new(x, y, TaskKind::Regression(1)).unwrap();
        ds.splits = Splits {
            train: vec![0, 1],
            validation: vec![2],
            test: vec![2],
        };
        let (norm, _) = normalize(&ds, NormalizeMethod::Zscore).unwrap();
        // train mean 1, sd 1 -> rows 0/1 map to -1/+1 regardless of row 2
        assert!((norm.x[[0, 0]] + 1.0).abs() < 1e-12);
        assert!((norm.x[[1, 0]] - 1.0).abs() < 1e-12);
        assert!((norm.x[[2, 0]] - 99.0).abs() < 1e-12);
    }

    #[test]
    fn dataset_json_round_trip_is_exact() {
        let ds = split(&toy_classification(20, 4), (0.6, 0.2, 0.2), true, 7).unwrap();
        let text = serde_json::to_string(&ds).unwrap();
        let back: Dataset = serde_json::from_str(&text).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
        assert_eq!(back.splits, ds.splits);
    }
}
