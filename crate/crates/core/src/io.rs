//! Explanation documents: a versioned JSON serialization of explanation
//! batches tied to the dataset they were computed on.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Dataset, ExplanationVector, QoiKind, Subject};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

/// Identifies a dataset by shape, names and a hash of its values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFingerprint {
    pub n: usize,
    pub d: usize,
    pub feature_names: Vec<String>,
    /// Hex SHA-256 over the little-endian `f64` bits of every value, row-major.
    pub content_hash: String,
}

impl DatasetFingerprint {
    pub fn of<T: Scalar>(dataset: &Dataset<T>) -> Self {
        let mut h = Sha256::new();
        for row in dataset.rows() {
            for &x in row {
                h.update(x.as_f64().to_bits().to_le_bytes());
            }
        }
        let content_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        DatasetFingerprint {
            n: dataset.n(),
            d: dataset.d(),
            feature_names: dataset.feature_names().to_vec(),
            content_hash,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner_id: Option<String>,
    pub contributions: Vec<f64>,
    pub baseline: f64,
    pub reconstruction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationDocument {
    pub schema_version: u32,
    pub dataset: Option<DatasetFingerprint>,
    pub qoi: QoiKind,
    pub options: String,
    pub records: Vec<Record>,
}

impl ExplanationDocument {
    /// Builds a document; all explanations must share `qoi` and options.
    pub fn new<T: Scalar>(
        expls: &[ExplanationVector<T>],
        qoi: QoiKind,
        options: &str,
        dataset: Option<&Dataset<T>>,
    ) -> Result<Self> {
        let mut records = Vec::with_capacity(expls.len());
        for e in expls {
            if e.qoi != qoi || e.options_fingerprint != options {
                return Err(Error::validation("explanations mix qois or engine options"));
            }
            let id = |i: usize| dataset.and_then(|ds| ds.id(i)).map(str::to_string);
            records.push(Record {
                index: e.subject.item(),
                partner: e.subject.partner(),
                id: id(e.subject.item()),
                partner_id: e.subject.partner().and_then(id),
                contributions: e.contributions.iter().map(|c| c.as_f64()).collect(),
                baseline: e.baseline.as_f64(),
                reconstruction: e.reconstruction.as_f64(),
            });
        }
        Ok(ExplanationDocument {
            schema_version: SCHEMA_VERSION,
            dataset: dataset.map(DatasetFingerprint::of),
            qoi,
            options: options.to_string(),
            records,
        })
    }

    pub fn explanations<T: Scalar>(&self) -> Vec<ExplanationVector<T>> {
        self.records
            .iter()
            .map(|r| ExplanationVector {
                contributions: r.contributions.iter().map(|&c| T::lit(c)).collect(),
                qoi: self.qoi,
                subject: match r.partner {
                    Some(partner) => Subject::Pair {
                        item: r.index,
                        partner,
                    },
                    None => Subject::Item(r.index),
                },
                baseline: T::lit(r.baseline),
                reconstruction: T::lit(r.reconstruction),
                options_fingerprint: self.options.clone(),
            })
            .collect()
    }

    /// Errors unless the document was computed on `dataset`.
    pub fn check_dataset<T: Scalar>(&self, dataset: &Dataset<T>) -> Result<()> {
        match &self.dataset {
            Some(fp) if *fp == DatasetFingerprint::of(dataset) => Ok(()),
            Some(_) => Err(Error::validation(
                "dataset fingerprint does not match the explanation document",
            )),
            None => Err(Error::validation("explanation document has no dataset fingerprint")),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(Error::Schema(format!(
                    "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(Error::Schema("missing schema_version".into())),
        }
        let doc: ExplanationDocument =
            serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
        for r in &doc.records {
            let finite = r.contributions.iter().chain([&r.baseline, &r.reconstruction]).all(|x| x.is_finite());
            if !finite {
                return Err(Error::Schema(format!("record {} has non-finite values", r.index)));
            }
            if let Some(fp) = &doc.dataset {
                if r.contributions.len() != fp.d || r.index >= fp.n || r.partner.is_some_and(|p| p >= fp.n) {
                    return Err(Error::Schema(format!("record {} does not fit the dataset", r.index)));
                }
            }
        }
        Ok(doc)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Writes a batch as a document without a dataset fingerprint. The QoI and
/// options are taken from the first explanation (score / empty when none).
pub fn write_explanations<T: Scalar>(expls: &[ExplanationVector<T>], path: impl AsRef<Path>) -> Result<()> {
    let (qoi, options) = expls
        .first()
        .map_or((QoiKind::Score, ""), |e| (e.qoi, e.options_fingerprint.as_str()));
    ExplanationDocument::new(expls, qoi, options, None)?.write(path)
}

pub fn read_explanations<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<ExplanationVector<T>>> {
    Ok(ExplanationDocument::read(path)?.explanations())
}
