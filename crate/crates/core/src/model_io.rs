//! Versioned model container. Binary is the default encoding (magic,
//! version, task, per-layer shapes and row-major weights, trailing sha256);
//! a JSON text encoding with full round-trip precision exists for diffing.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, DenseNetwork, TaskKind};

const MAGIC: &[u8; 4] = b"ODFN";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelEncoding {
    Binary,
    Text,
}

#[derive(Serialize, Deserialize)]
struct TextLayer {
    in_dim: usize,
    out_dim: usize,
    activation: String,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TextModel {
    version: u32,
    task: TaskKind,
    layers: Vec<TextLayer>,
}

fn encode_binary(net: &DenseNetwork) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let (tag, nc) = match net.task {
        TaskKind::Classification(nc) => (0u8, nc),
        TaskKind::Regression(nc) => (1u8, nc),
    };
    buf.push(tag);
    buf.extend_from_slice(&(nc as u32).to_le_bytes());
    buf.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
    for layer in &net.layers {
        buf.extend_from_slice(&(layer.in_dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(layer.out_dim() as u32).to_le_bytes());
        let act = match layer.activation {
            Activation::Relu => 0u8,
            Activation::Sigmoid => 1,
            Activation::Tanh => 2,
            Activation::Softmax => 3,
            Activation::Identity => 4,
        };
        buf.push(act);
        for v in layer.weights.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in layer.bias.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::ModelFormat("truncated file".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode_binary(data: &[u8]) -> Result<DenseNetwork> {
    if data.len() < 32 + 4 {
        return Err(Error::ModelFormat("truncated file".into()));
    }
    let (body, checksum) = data.split_at(data.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != checksum {
        return Err(Error::ModelFormat("checksum failure".into()));
    }
    let mut c = Cursor { data: body, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::ModelFormat(format!(
            "version mismatch: file v{version}, supported v{VERSION}"
        )));
    }
    let tag = c.u8()?;
    let nc = c.u32()? as usize;
    let task = match tag {
        0 => TaskKind::Classification(nc),
        1 => TaskKind::Regression(nc),
        other => return Err(Error::ModelFormat(format!("unknown task tag {other}"))),
    };
    let count = c.u32()? as usize;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let in_dim = c.u32()? as usize;
        let out_dim = c.u32()? as usize;
        let act = match c.u8()? {
            0 => Activation::Relu,
            1 => Activation::Sigmoid,
            2 => Activation::Tanh,
            3 => Activation::Softmax,
            4 => Activation::Identity,
            other => {
                return Err(Error::ModelFormat(format!(
                    "layer {i}: unknown activation tag {other}"
                )))
            }
        };
        let mut weights = Array2::zeros((in_dim, out_dim));
        for v in weights.iter_mut() {
            *v = c.f64()?;
        }
        let mut bias = Array1::zeros(out_dim);
        for v in bias.iter_mut() {
            *v = c.f64()?;
        }
        layers.push(DenseLayer {
            weights,
            bias,
            activation: act,
        });
    }
    let net = DenseNetwork { layers, task };
    net.validate()
        .map_err(|e| Error::ModelFormat(format!("shape inconsistency: {e}")))?;
    Ok(net)
}

fn encode_text(net: &DenseNetwork) -> String {
    let model = TextModel {
        version: VERSION,
        task: net.task,
        layers: net
            .layers
            .iter()
            .map(|l| TextLayer {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                activation: l.activation.name().to_string(),
                weights: l.weights.iter().cloned().collect(),
                bias: l.bias.to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&model).expect("model serializes")
}

fn decode_text(text: &str) -> Result<DenseNetwork> {
    let model: TextModel =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(format!("bad json: {e}")))?;
    if model.version != VERSION {
        return Err(Error::ModelFormat(format!(
            "version mismatch: file v{}, supported v{VERSION}",
            model.version
        )));
    }
    let mut layers = Vec::with_capacity(model.layers.len());
    for (i, l) in model.layers.into_iter().enumerate() {
        let activation = Activation::parse(&l.activation).ok_or_else(|| {
            Error::ModelFormat(format!("layer {i}: unknown activation `{}`", l.activation))
        })?;
        if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
            return Err(Error::ModelFormat(format!(
                "layer {i}: weight/bias lengths do not match dims {}x{}",
                l.in_dim, l.out_dim
            )));
        }
        layers.push(DenseLayer {
            weights: Array2::from_shape_vec((l.in_dim, l.out_dim), l.weights).unwrap(),
            bias: Array1::from(l.bias),
            activation,
        });
    }
    let net = DenseNetwork {
        layers,
        task: model.task,
    };
    net.validate()
        .map_err(|e| Error::ModelFormat(format!("shape inconsistency: {e}")))?;
    Ok(net)
}

/// Atomic write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile_in(dir)?;
    tmp.1
        .write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    drop(tmp.1);
    fs::rename(&tmp.0, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

fn tempfile_in(dir: &Path) -> Result<(std::path::PathBuf, fs::File)> {
    for i in 0..1000 {
        let candidate = dir.join(format!(
            ".tmp-{}-{i}",
            std::process::id()
        ));
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&candidate)
        {
            Ok(f) => return Ok((candidate, f)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(dir.display().to_string(), e)),
        }
    }
    Err(Error::ModelFormat("could not allocate temp file".into()))
}

pub fn save_model(path: impl AsRef<Path>, net: &DenseNetwork, encoding: ModelEncoding) -> Result<()> {
    let path = path.as_ref();
    let bytes = match encoding {
        ModelEncoding::Binary => encode_binary(net),
        ModelEncoding::Text => encode_text(net).into_bytes(),
    };
    write_atomic(path, &bytes)
}

/// Loads either encoding, detected from the leading magic bytes.
pub fn load_model(path: impl AsRef<Path>) -> Result<DenseNetwork> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if data.starts_with(MAGIC) {
        decode_binary(&data)
    } else {
        let text = String::from_utf8(data)
            .map_err(|_| Error::ModelFormat("neither binary magic nor utf-8 text".into()))?;
        decode_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_network, LayerSpec};

    fn sample_net() -> DenseNetwork {
        init_network(
            &[
                LayerSpec::new(4, 7, Activation::Relu),
                LayerSpec::new(7, 3, Activation::Softmax),
            ],
            TaskKind::Classification(3),
            42,
        )
        .unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let net = sample_net();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_model(&path, &net, ModelEncoding::Binary).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.task, net.task);
        for (a, b) in back.layers.iter().zip(&net.layers) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
            assert_eq!(a.activation, b.activation);
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let net = sample_net();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &net, ModelEncoding::Text).unwrap();
        let back = load_model(&path).unwrap();
        for (a, b) in back.layers.iter().zip(&net.layers) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
        }
    }

    #[test]
    fn truncated_binary_fails_checksum() {
        let net = sample_net();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_model(&path, &net, ModelEncoding::Binary).unwrap();
        let mut data = fs::read(&path).unwrap();
        data.truncate(data.len() - 5);
        fs::write(&path, &data).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("checksum") || err.to_string().contains("truncated"));
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let net = sample_net();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_model(&path, &net, ModelEncoding::Binary).unwrap();
        let mut data = fs::read(&path).unwrap();
        let mid = data.len() / 2;
        data[mid] ^= 0xff;
        fs::write(&path, &data).unwrap();
        assert!(load_model(&path)
            .unwrap_err()
            .to_string()
            .contains("checksum"));
    }

    #[test]
    fn dim_mismatch_in_text_names_layer() {
        let net = sample_net();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &net, ModelEncoding::Text).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let bad = text.replacen("\"out_dim\": 7", "\"out_dim\": 6", 1);
        fs::write(&path, bad).unwrap();
        let err = load_model(&path).unwrap_err().to_string();
        assert!(err.contains("layer 0") || err.contains("shape"), "{err}");
    }

    #[test]
    fn version_mismatch_rejected() {
        let net = sample_net();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &net, ModelEncoding::Text).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let bad = text.replacen("\"version\": 1", "\"version\": 99", 1);
        fs::write(&path, bad).unwrap();
        assert!(load_model(&path)
            .unwrap_err()
            .to_string()
            .contains("version mismatch"));
    }
}
