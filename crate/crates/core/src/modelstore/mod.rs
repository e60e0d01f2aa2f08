//! Versioned `.mdx` model files.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `MDXMODEL`                        |
//! | 8      | 4    | format version (`u32`)                  |
//! | 12     | 1    | mode code                               |
//! | 13     | 8    | payload length in bytes (`u64`)         |
//! | 21     | 4    | CRC-32 (IEEE) of the payload            |
//! | 25     | n    | payload                                 |
//!
//! The payload repeats the mode code, then holds the preset id, class names,
//! preprocessing state and the model. Encoding is canonical: the same artifact always yields the same
//! bytes. See `docs/mdx-format.md` for the field-by-field payload layout.

mod codec;

use std::path::Path;

use codec::{Reader, Writer};

use crate::cnn::CnnModel;
use crate::presets::{InputKind, Mode};
use crate::stacking::StackedModel;
use crate::tabular::{FeatureSchema, KnnImputer, OneHotEncoder, StandardScaler};
use crate::{Error, Result};

pub const MAGIC: [u8; 8] = *b"MDXMODEL";
pub const FORMAT_VERSION: u32 = 1;
pub const FILE_EXTENSION: &str = "mdx";
const HEADER_LEN: usize = 25;

/// Transforms fitted on tabular training data, replayed at inference.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularState {
    /// Input columns expected from callers, in model order (the keep-list).
    pub schema: FeatureSchema,
    pub encoder: OneHotEncoder,
    /// Fitted on encoded rows; `None` when the training data had no gaps.
    pub imputer: Option<KnnImputer>,
    pub scaler: StandardScaler,
}

/// How an incoming image is brought to the network's input size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImagePipeline {
    /// Bilinear resize only (rasterized spectra).
    Resize,
    /// Otsu binarization, hull crop, then resize (scanned reports).
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preprocessing {
    /// Keyed numeric inputs, or the features extracted from an audio clip.
    Tabular(TabularState),
    Image { side: usize, pipeline: ImagePipeline },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Stack(StackedModel),
    Cnn(CnnModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub mode: Mode,
    pub preset_id: String,
    pub class_names: Vec<String>,
    pub preprocessing: Preprocessing,
    pub payload: Payload,
}

impl ModelArtifact {
    fn check_kind(&self) -> Result<()> {
        let ok = match (self.mode.input_kind(), &self.preprocessing, &self.payload) {
            (InputKind::Tabular | InputKind::Audio, Preprocessing::Tabular(_), Payload::Stack(_)) => true,
            (InputKind::Image, Preprocessing::Image { side, .. }, Payload::Cnn(m)) => {
                m.input_shape == [*side, *side, 1]
            }
            _ => false,
        };
        let classes = match &self.payload {
            Payload::Stack(m) => m.n_classes,
            Payload::Cnn(m) => m.n_classes,
        };
        let width_ok = match (&self.preprocessing, &self.payload) {
            (Preprocessing::Tabular(t), Payload::Stack(m)) => {
                t.encoder.output_schema().width() == m.n_features
                    && t.scaler.mean.len() == m.n_features
                    && t.imputer.as_ref().is_none_or(|i| i.width() == m.n_features)
            }
            _ => true,
        };
        if !ok || !width_ok || classes != self.class_names.len() {
            return Err(Error::Malformed(format!("payload does not match mode {}", self.mode)));
        }
        Ok(())
    }

    fn encode_payload(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.u8(self.mode.code());
        w.put(&self.preset_id);
        w.put(&self.class_names);
        match &self.preprocessing {
            Preprocessing::Tabular(t) => {
                w.u8(0);
                w.put(&t.schema);
                w.put(&t.encoder);
                w.put(&t.imputer);
                w.put(&t.scaler);
            }
            Preprocessing::Image { side, pipeline } => {
                w.u8(1);
                w.put(side);
                w.u8(match pipeline {
                    ImagePipeline::Resize => 0,
                    ImagePipeline::Report => 1,
                });
            }
        }
        match &self.payload {
            Payload::Stack(m) => {
                w.u8(0);
                w.put(m);
            }
            Payload::Cnn(m) => {
                w.u8(1);
                w.put(m);
            }
        }
        w.buf
    }

    fn decode_payload(mode: Mode, bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.u8()? != mode.code() {
            return Err(Error::Malformed("header mode does not match the payload".into()));
        }
        let preset_id = r.get()?;
        let class_names = r.get()?;
        let preprocessing = match r.u8()? {
            0 => {
                let schema: FeatureSchema = r.get()?;
                let encoder: OneHotEncoder = r.get()?;
                if encoder.input_schema().feature_names != schema.feature_names {
                    return Err(Error::Malformed("encoder input does not match the schema".into()));
                }
                Preprocessing::Tabular(TabularState { schema, encoder, imputer: r.get()?, scaler: r.get()? })
            }
            1 => {
                let side = r.get()?;
                let pipeline = match r.u8()? {
                    0 => ImagePipeline::Resize,
                    1 => ImagePipeline::Report,
                    t => return Err(Error::Malformed(format!("bad image pipeline {t}"))),
                };
                Preprocessing::Image { side, pipeline }
            }
            t => return Err(Error::Malformed(format!("bad preprocessing tag {t}"))),
        };
        let payload = match r.u8()? {
            0 => Payload::Stack(r.get()?),
            1 => Payload::Cnn(r.get()?),
            t => return Err(Error::Malformed(format!("bad payload tag {t}"))),
        };
        r.finish()?;
        let artifact = Self { mode, preset_id, class_names, preprocessing, payload };
        artifact.check_kind()?;
        Ok(artifact)
    }

    /// Complete file contents.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check_kind()?;
        let payload = self.encode_payload();
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.mode.code());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Ok(parse(bytes)?.0)
    }

    /// CRC-32 of the encoded payload.
    pub fn checksum(&self) -> u32 {
        crc32fast::hash(&self.encode_payload())
    }
}

/// Artifact plus the checksum stored in its header.
fn parse(bytes: &[u8]) -> Result<(ModelArtifact, u32)> {
    if bytes.is_empty() {
        return Err(Error::Malformed("empty file".into()));
    }
    let n = bytes.len().min(MAGIC.len());
    if bytes[..n] != MAGIC[..n] {
        return Err(Error::NotAModelFile);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Malformed("truncated header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version > FORMAT_VERSION {
        return Err(Error::UnsupportedVersion { found: version, supported: FORMAT_VERSION });
    }
    if version == 0 {
        return Err(Error::Malformed("format version 0".into()));
    }
    let mode = Mode::from_code(bytes[12]).ok_or_else(|| Error::Malformed(format!("unknown mode code {}", bytes[12])))?;
    let len = u64::from_le_bytes(bytes[13..21].try_into().expect("8 bytes"));
    let stored = u32::from_le_bytes(bytes[21..25].try_into().expect("4 bytes"));
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != len {
        return Err(Error::Malformed(format!("payload is {} bytes, header says {len}", payload.len())));
    }
    let computed = crc32fast::hash(payload);
    if computed != stored {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    Ok((ModelArtifact::decode_payload(mode, payload)?, stored))
}

/// A loaded artifact with its identifying version string.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub artifact: ModelArtifact,
    pub checksum: u32,
}

impl LoadedModel {
    /// `<preset id>-<crc32 hex>`.
    pub fn version(&self) -> String {
        format!("{}-{:08x}", self.artifact.preset_id, self.checksum)
    }
}

pub fn save(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    std::fs::write(path, artifact.to_bytes()?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ModelArtifact> {
    Ok(load_with_checksum(path)?.artifact)
}

pub fn load_with_checksum(path: &Path) -> Result<LoadedModel> {
    let bytes = std::fs::read(path)?;
    let (artifact, checksum) = parse(&bytes)?;
    Ok(LoadedModel { artifact, checksum })
}

pub fn from_bytes_with_checksum(bytes: &[u8]) -> Result<LoadedModel> {
    let (artifact, checksum) = parse(bytes)?;
    Ok(LoadedModel { artifact, checksum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{default_architecture, Tensor};
    use crate::learners::LearnerKind;
    use crate::stacking::{fit_stack_dense, StackSpec};
    use crate::tabular::{FeatureFrame, FeatureSchema};
    use crate::Matrix;

    fn stack_artifact() -> (ModelArtifact, Matrix) {
        let rows: Vec<Vec<f64>> =
            (0..40).map(|i| vec![(i % 2) as f64 * 3.0 + (i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let x = Matrix::from_rows(&rows);
        let bases = [LearnerKind::RandomForest, LearnerKind::GradientBoostedTrees, LearnerKind::SvmRbf];
        let mut spec = StackSpec::new(&bases, LearnerKind::GaussianNaiveBayes, 3);
        if let crate::learners::Hyperparameters::Forest(p) = &mut spec.base_specs[0].params {
            p.n_estimators = 20;
        }
        let model = fit_stack_dense(&spec, &x, &y, 2).unwrap();
        let schema = FeatureSchema::numeric(2, &["COVID-negative", "COVID-positive"]);
        let frame = FeatureFrame::from_matrix(schema.clone(), &x, Some(y)).unwrap();
        let encoder = OneHotEncoder::fit(&frame).unwrap();
        let artifact = ModelArtifact {
            mode: Mode::Blood5,
            preset_id: "exp32".into(),
            class_names: schema.class_names.clone(),
            preprocessing: Preprocessing::Tabular(TabularState {
                schema,
                encoder,
                imputer: Some(KnnImputer::fit(&frame, 5).unwrap()),
                scaler: StandardScaler::fit(&frame).unwrap(),
            }),
            payload: Payload::Stack(model),
        };
        (artifact, x)
    }

    fn cnn_artifact() -> ModelArtifact {
        ModelArtifact {
            mode: Mode::Raman,
            preset_id: "exp4".into(),
            class_names: vec!["a".into(), "b".into()],
            preprocessing: Preprocessing::Image { side: 16, pipeline: ImagePipeline::Resize },
            payload: Payload::Cnn(CnnModel::new([16, 16, 1], &default_architecture(2), 1).unwrap()),
        }
    }

    #[test]
    fn stack_round_trip_reproduces_predictions() {
        let (artifact, probe) = stack_artifact();
        let back = ModelArtifact::from_bytes(&artifact.to_bytes().unwrap()).unwrap();
        assert_eq!(back, artifact);
        let (Payload::Stack(a), Payload::Stack(b)) = (&artifact.payload, &back.payload) else { unreachable!() };
        let pa = a.predict_proba_dense(&probe).unwrap();
        let pb = b.predict_proba_dense(&probe).unwrap();
        assert!(pa.as_slice().iter().zip(pb.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn cnn_round_trip_and_canonical_bytes() {
        let artifact = cnn_artifact();
        let bytes = artifact.to_bytes().unwrap();
        assert_eq!(bytes, artifact.to_bytes().unwrap());
        let back = ModelArtifact::from_bytes(&bytes).unwrap();
        let Payload::Cnn(m) = &back.payload else { unreachable!() };
        let x = Tensor::new(vec![16, 16, 1], (0..256).map(|i| (i % 5) as f64 / 4.0).collect()).unwrap();
        let Payload::Cnn(orig) = &artifact.payload else { unreachable!() };
        assert_eq!(m.forward(&x).unwrap(), orig.forward(&x).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mdx");
        let artifact = cnn_artifact();
        save(&artifact, &path).unwrap();
        let loaded = load_with_checksum(&path).unwrap();
        assert_eq!(loaded.artifact, artifact);
        assert_eq!(loaded.checksum, artifact.checksum());
        assert!(loaded.version().starts_with("exp4-"));
    }

    #[test]
    fn corrupt_payload_byte_is_a_checksum_error() {
        let mut bytes = cnn_artifact().to_bytes().unwrap();
        let i = bytes.len() - 10;
        bytes[i] ^= 0x40;
        assert!(matches!(ModelArtifact::from_bytes(&bytes), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn header_errors() {
        let bytes = cnn_artifact().to_bytes().unwrap();
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(ModelArtifact::from_bytes(&wrong), Err(Error::NotAModelFile)));
        assert!(matches!(ModelArtifact::from_bytes(b"PK\x03\x04"), Err(Error::NotAModelFile)));
        let mut newer = bytes.clone();
        newer[8..12].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        assert!(matches!(
            ModelArtifact::from_bytes(&newer),
            Err(Error::UnsupportedVersion { found, supported }) if found == FORMAT_VERSION + 1 && supported == FORMAT_VERSION
        ));
        assert!(matches!(ModelArtifact::from_bytes(&[]), Err(Error::Malformed(_))));
        assert!(matches!(ModelArtifact::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Malformed(_))));
        assert!(matches!(ModelArtifact::from_bytes(&bytes[..12]), Err(Error::Malformed(_))));
    }

    #[test]
    fn mode_must_match_payload() {
        let mut a = cnn_artifact();
        a.mode = Mode::Symptoms;
        assert!(a.to_bytes().is_err());
        let mut bytes = cnn_artifact().to_bytes().unwrap();
        bytes[12] = Mode::Cough.code();
        assert!(matches!(ModelArtifact::from_bytes(&bytes), Err(Error::Malformed(_))));
    }

    #[test]
    fn every_header_bit_flip_is_rejected() {
        let bytes = cnn_artifact().to_bytes().unwrap();
        for i in 0..HEADER_LEN {
            for bit in 0..8 {
                let mut bad = bytes.clone();
                bad[i] ^= 1 << bit;
                assert!(ModelArtifact::from_bytes(&bad).is_err(), "byte {i} bit {bit}");
            }
        }
    }

    #[test]
    fn every_truncation_is_rejected_cleanly() {
        let (artifact, _) = stack_artifact();
        let bytes = artifact.to_bytes().unwrap();
        for cut in (0..bytes.len()).step_by(97) {
            assert!(ModelArtifact::from_bytes(&bytes[..cut]).is_err());
        }
    }
}
