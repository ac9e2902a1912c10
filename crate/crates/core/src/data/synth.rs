use ndarray::Array2;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::TaskKind;

use super::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// y = w.x + b over 5 uniform features.
    Linear,
    /// Three regimes over x0 with large level jumps; a constant predictor
    /// is far worse than a small MLP.
    Piecewise,
    /// sin/quadratic/linear mix over 10 features, 5 informative.
    FriedmanLike,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller from two uniforms; keeps rand_distr out of the deps.
    let u = Uniform::new(f64::MIN_POSITIVE, 1.0f64).unwrap();
    let a: f64 = u.sample(rng);
    let b: f64 = u.sample(rng);
    (-2.0 * a.ln()).sqrt() * (std::f64::consts::TAU * b).cos()
}

/// Deterministic synthetic regression datasets with targets min-max scaled
/// to the unit interval.
pub fn synth_regression(kind: SynthKind, n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n < 30 {
        return Err(Error::Data(format!("synthetic dataset needs n >= 30, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0).unwrap();
    let d = match kind {
        SynthKind::Linear => 5,
        SynthKind::Piecewise => 4,
        SynthKind::FriedmanLike => 10,
    };
    let x = Array2::from_shape_fn((n, d), |_| unit.sample(&mut rng));
    let mut y_raw = Vec::with_capacity(n);
    for i in 0..n {
        let r = x.row(i);
        let v = match kind {
            SynthKind::Linear => {
                2.0 * r[0] - 1.5 * r[1] + 0.5 * r[2] + 3.0 * r[3] - 0.25 * r[4] + 0.7
            }
            SynthKind::Piecewise => {
                if r[0] < 0.33 {
                    r[1]
                } else if r[0] < 0.66 {
                    5.0 - 2.0 * r[2]
                } else {
                    10.0 + 3.0 * r[3]
                }
            }
            SynthKind::FriedmanLike => {
                10.0 * (std::f64::consts::PI * r[0] * r[1]).sin()
                    + 20.0 * (r[2] - 0.5).powi(2)
                    + 10.0 * r[3]
                    + 5.0 * r[4]
            }
        };
        y_raw.push(v + noise_sd * gauss(&mut rng));
    }
    let min = y_raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = y_raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if max > min { max - min } else { 1.0 };
    let y = Array2::from_shape_fn((n, 1), |(i, _)| (y_raw[i] - min) / span);
    Dataset::new(x, y, TaskKind::Regression(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassSynthKind {
    /// Gaussian blobs around per-class centers; linearly separable for
    /// small noise.
    Blobs { classes: usize },
    /// Binary label from the sign product of the first `relevant` features;
    /// the remaining features are nuisance.
    SignParity { relevant: usize },
    /// One dense prototype pattern per class plus pixel noise.
    Prototypes { classes: usize },
}

/// Deterministic synthetic classification datasets (one-hot targets).
pub fn synth_classification(
    kind: ClassSynthKind,
    n: usize,
    d: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 30 {
        return Err(Error::Data(format!("synthetic dataset needs n >= 30, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0).unwrap();
    let sym = Uniform::new(-1.0f64, 1.0).unwrap();
    let nc = match kind {
        ClassSynthKind::Blobs { classes } | ClassSynthKind::Prototypes { classes } => classes,
        ClassSynthKind::SignParity { .. } => 2,
    };
    if nc < 2 {
        return Err(Error::Data("need at least 2 classes".into()));
    }
    let mut x = Array2::zeros((n, d));
    let mut labels = vec![0usize; n];
    match kind {
        ClassSynthKind::Blobs { classes } => {
            let centers =
                Array2::from_shape_fn((classes, d), |_| 4.0 * sym.sample(&mut rng));
            for i in 0..n {
                let c = i % classes;
                labels[i] = c;
                for j in 0..d {
                    x[[i, j]] = centers[[c, j]] + noise_sd * gauss(&mut rng);
                }
            }
        }
        ClassSynthKind::SignParity { relevant } => {
            if relevant == 0 || relevant > d {
                return Err(Error::Data(format!(
                    "relevant features {relevant} out of range for d={d}"
                )));
            }
            for i in 0..n {
                let mut prod = 1.0;
                for j in 0..d {
                    x[[i, j]] = sym.sample(&mut rng);
                    if j < relevant {
                        prod *= x[[i, j]].signum();
                    }
                }
                labels[i] = usize::from(prod > 0.0);
                for j in 0..d {
                    x[[i, j]] += noise_sd * gauss(&mut rng);
                }
            }
        }
        ClassSynthKind::Prototypes { classes } => {
            let protos = Array2::from_shape_fn((classes, d), |_| {
                if unit.sample(&mut rng) < 0.25 {
                    unit.sample(&mut rng)
                } else {
                    0.0
                }
            });
            for i in 0..n {
                let c = i % classes;
                labels[i] = c;
                let intensity = 0.7 + 0.6 * unit.sample(&mut rng);
                for j in 0..d {
                    x[[i, j]] =
                        (protos[[c, j]] * intensity + noise_sd * gauss(&mut rng)).clamp(0.0, 1.0);
                }
            }
        }
    }
    let y = Array2::from_shape_fn((n, nc), |(i, j)| f64::from(labels[i] == j));
    Dataset::new(x, y, TaskKind::Classification(nc))
}
