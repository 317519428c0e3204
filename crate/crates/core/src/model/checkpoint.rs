//! Self-describing JSON checkpoints for desk-scale classifiers.
//!
//! Tensors are stored as base64 of little-endian IEEE-754 `f64` values in
//! row-major order, each with its name and shape.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DeskEncoder, EncoderConfig, ModelError, PairClassifier, PairEncoder, ParamSet, Vocab};

pub const FORMAT: &str = "medsim-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: [usize; 2],
    data: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassifierMeta {
    threshold: f64,
    max_tokens: usize,
    epochs_trained: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Archive {
    format: String,
    version: u32,
    byte_order: String,
    dtype: String,
    encoder: EncoderConfig,
    classifier: ClassifierMeta,
    vocab: Vec<String>,
    encoder_tensors: Vec<TensorRecord>,
    head_tensors: Vec<TensorRecord>,
}

fn encode_tensors(params: &ParamSet) -> Vec<TensorRecord> {
    params
        .iter()
        .map(|(name, t)| {
            let mut bytes = Vec::with_capacity(t.len() * 8);
            for v in t.iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            TensorRecord {
                name: name.to_string(),
                shape: [t.nrows(), t.ncols()],
                data: STANDARD.encode(bytes),
            }
        })
        .collect()
}

fn decode_tensors(records: &[TensorRecord]) -> Result<ParamSet, ModelError> {
    let mut ps = ParamSet::new();
    for r in records {
        let bytes = STANDARD
            .decode(&r.data)
            .map_err(|e| ModelError::Checkpoint(format!("tensor {}: {e}", r.name)))?;
        let expected = r.shape[0] * r.shape[1] * 8;
        if bytes.len() != expected {
            return Err(ModelError::Checkpoint(format!(
                "tensor {}: {} bytes for shape {:?}",
                r.name,
                bytes.len(),
                r.shape
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let t = Array2::from_shape_vec((r.shape[0], r.shape[1]), values)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        ps.push(r.name.clone(), t);
    }
    Ok(ps)
}

pub fn to_bytes(model: &PairClassifier<DeskEncoder>) -> Vec<u8> {
    let archive = Archive {
        format: FORMAT.into(),
        version: VERSION,
        byte_order: "little".into(),
        dtype: "f64".into(),
        encoder: model.encoder.config().clone(),
        classifier: ClassifierMeta {
            threshold: model.threshold,
            max_tokens: model.max_tokens,
            epochs_trained: model.epochs_trained,
        },
        vocab: model.encoder.vocab().tokens().to_vec(),
        encoder_tensors: encode_tensors(model.encoder.params()),
        head_tensors: encode_tensors(&model.head),
    };
    serde_json::to_vec(&archive).expect("archive serializes")
}

pub fn from_bytes(bytes: &[u8]) -> Result<PairClassifier<DeskEncoder>, ModelError> {
    let archive: Archive = serde_json::from_slice(bytes).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    if archive.format != FORMAT {
        return Err(ModelError::Checkpoint(format!("unknown format `{}`", archive.format)));
    }
    if archive.version != VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported version {}", archive.version)));
    }
    if archive.byte_order != "little" || archive.dtype != "f64" {
        return Err(ModelError::Checkpoint(format!(
            "unsupported encoding {} {}",
            archive.byte_order, archive.dtype
        )));
    }
    let vocab = Vocab::from_tokens(archive.vocab);
    let params = decode_tensors(&archive.encoder_tensors)?;
    let encoder = DeskEncoder::from_parts(archive.encoder, vocab, params).map_err(ModelError::Checkpoint)?;
    let head = decode_tensors(&archive.head_tensors)?;
    let width = encoder.output_width();
    if head.len() != 2 || head.get(0).shape() != [width, 2] || head.get(1).shape() != [1, 2] {
        return Err(ModelError::Checkpoint("head shape mismatch".into()));
    }
    Ok(PairClassifier {
        encoder,
        head,
        threshold: archive.classifier.threshold,
        max_tokens: archive.classifier.max_tokens,
        epochs_trained: archive.classifier.epochs_trained,
    })
}

pub fn save(model: &PairClassifier<DeskEncoder>, path: &Path) -> Result<(), ModelError> {
    fs::write(path, to_bytes(model)).map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<PairClassifier<DeskEncoder>, ModelError> {
    let bytes = fs::read(path).map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?;
    from_bytes(&bytes)
}

/// Short content hash identifying a set of weights.
pub fn fingerprint(model: &PairClassifier<DeskEncoder>) -> String {
    let digest = Sha256::digest(to_bytes(model));
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("desk-v{VERSION}-{hex}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::desk_classifier;

    #[test]
    fn round_trip_is_exact() {
        let mut m = desk_classifier(EncoderConfig::default(), ["fever and rash", "cough"]);
        m.threshold = 0.7;
        m.epochs_trained = 3;
        let back = from_bytes(&to_bytes(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let m = desk_classifier(EncoderConfig::default(), ["fever"]);
        let mut v: serde_json::Value = serde_json::from_slice(&to_bytes(&m)).unwrap();
        v["version"] = 2.into();
        let err = from_bytes(&serde_json::to_vec(&v).unwrap()).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn truncated_tensor_is_rejected() {
        let m = desk_classifier(EncoderConfig::default(), ["fever"]);
        let mut v: serde_json::Value = serde_json::from_slice(&to_bytes(&m)).unwrap();
        v["encoder_tensors"][0]["shape"][0] = 99.into();
        assert!(from_bytes(&serde_json::to_vec(&v).unwrap()).is_err());
    }
}
