//! Vector collections and the text vector-file format.
//!
//! One vector per line: `<utterance-id> [<class-id>] <v1> ... <vp>`. The
//! class column is present in labeled files (training data) and omitted in
//! unlabeled ones (enrollment/test vectors). Whether a file is labeled is
//! detected from its first data line: a second token that parses as a number
//! is taken as the first vector component, so class ids must not look like
//! numbers. `#` starts a comment.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::textio;

#[derive(Debug, Clone)]
pub struct VectorRecord {
    pub utt: String,
    pub class: Option<String>,
    pub vector: DVector<f64>,
}

/// An ordered collection of vectors with unique utterance ids.
#[derive(Debug, Clone)]
pub struct VectorSet {
    dim: usize,
    records: Vec<VectorRecord>,
    index: HashMap<String, usize>,
}

impl VectorSet {
    pub fn from_records(records: Vec<VectorRecord>) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::EmptyDataset);
        };
        let dim = first.vector.len();
        let mut index = HashMap::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            if rec.vector.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: rec.vector.len() });
            }
            if index.insert(rec.utt.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate utterance id '{}'", rec.utt)));
            }
        }
        Ok(VectorSet { dim, records, index })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let lines = textio::read_data_lines(path)?;
        let Some((_, first)) = lines.first() else {
            return Err(Error::parse(path, 1, "no vectors in file"));
        };
        let toks: Vec<&str> = first.split_whitespace().collect();
        let labeled = toks.len() >= 2 && toks[1].parse::<f64>().is_err();
        let mut records = Vec::with_capacity(lines.len());
        for (lineno, line) in &lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let skip = if labeled { 2 } else { 1 };
            if toks.len() <= skip {
                return Err(Error::parse(path, *lineno, "missing vector components"));
            }
            let mut vals = Vec::with_capacity(toks.len() - skip);
            for tok in &toks[skip..] {
                vals.push(textio::parse_f64(path, *lineno, tok)?);
            }
            records.push(VectorRecord {
                utt: toks[0].to_string(),
                class: labeled.then(|| toks[1].to_string()),
                vector: DVector::from_vec(vals),
            });
        }
        Self::from_records(records).map_err(|e| match e {
            Error::DimensionMismatch { expected, got } => Error::parse(
                path,
                0,
                format!("inconsistent vector dimensions ({got} after {expected})"),
            ),
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&rec.utt);
            if let Some(class) = &rec.class {
                out.push(' ');
                out.push_str(class);
            }
            for v in rec.vector.iter() {
                out.push(' ');
                out.push_str(&textio::fmt_full(*v));
            }
            out.push('\n');
        }
        textio::write_file(path, &out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[VectorRecord] {
        &self.records
    }

    pub fn get(&self, utt: &str) -> Option<&DVector<f64>> {
        self.index.get(utt).map(|&i| &self.records[i].vector)
    }

    pub fn is_labeled(&self) -> bool {
        self.records.iter().all(|r| r.class.is_some())
    }

    /// Applies `f` to every vector, keeping ids and labels.
    pub fn map_vectors(&self, mut f: impl FnMut(&DVector<f64>) -> Result<DVector<f64>>) -> Result<Self> {
        let mut records = Vec::with_capacity(self.records.len());
        for rec in &self.records {
            records.push(VectorRecord {
                utt: rec.utt.clone(),
                class: rec.class.clone(),
                vector: f(&rec.vector)?,
            });
        }
        Self::from_records(records)
    }

    /// Groups records by class label, preserving first-appearance order.
    pub fn to_labeled(&self) -> Result<LabeledDataset> {
        if !self.is_labeled() {
            return Err(Error::InvalidArgument("vector set has no class labels".into()));
        }
        LabeledDataset::from_entries(
            self.records
                .iter()
                .map(|r| (r.class.clone().unwrap(), r.vector.clone())),
        )
    }
}

/// Samples for one class.
#[derive(Debug, Clone)]
pub struct ClassSamples {
    pub label: String,
    pub vectors: Vec<DVector<f64>>,
}

/// Labeled training data: at least two distinct classes, every class
/// non-empty, all vectors the same dimension. The invariants are enforced at
/// construction so the statistics and training code can rely on them.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    dim: usize,
    classes: Vec<ClassSamples>,
}

impl LabeledDataset {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, DVector<f64>)>) -> Result<Self> {
        let mut classes: Vec<ClassSamples> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut dim = None;
        for (label, vector) in entries {
            let d = *dim.get_or_insert(vector.len());
            if vector.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: vector.len() });
            }
            match index.get(&label) {
                Some(&i) => classes[i].vectors.push(vector),
                None => {
                    index.insert(label.clone(), classes.len());
                    classes.push(ClassSamples { label, vectors: vec![vector] });
                }
            }
        }
        if classes.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if classes.len() < 2 {
            return Err(Error::TooFewClasses(classes.len()));
        }
        Ok(LabeledDataset { dim: dim.unwrap(), classes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total_samples(&self) -> usize {
        self.classes.iter().map(|c| c.vectors.len()).sum()
    }

    pub fn classes(&self) -> &[ClassSamples] {
        &self.classes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.vectors.len()).collect()
    }

    pub fn min_class_size(&self) -> usize {
        self.classes.iter().map(|c| c.vectors.len()).min().unwrap_or(0)
    }
}
