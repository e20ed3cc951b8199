//! Fisher LDA front end: project vectors onto the directions that maximize
//! between-class over within-class scatter. The basis diagonalizes both
//! scatters (rows are orthonormal under the within metric), so a full-rank
//! projection is just an invertible change of basis and leaves downstream
//! PLDA scores unchanged.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::{LabeledDataset, VectorSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::stats::accumulate_stats;
use crate::textio;
use crate::WITHIN_EIGEN_FLOOR;

#[derive(Debug, Clone)]
pub struct LdaProjection {
    mean: DVector<f64>,
    /// `d_out x d_in`; row i is the i-th discriminant direction.
    basis: DMatrix<f64>,
}

impl LdaProjection {
    pub fn d_in(&self) -> usize {
        self.basis.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.basis.nrows()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.d_in() {
            return Err(Error::DimensionMismatch { expected: self.d_in(), got: x.len() });
        }
        Ok(&self.basis * (x - &self.mean))
    }

    /// Projects a whole set, keeping utterance ids and labels.
    pub fn apply_set(&self, set: &VectorSet) -> Result<VectorSet> {
        set.map_vectors(|v| self.apply(v))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("lda-projection v1\n");
        let _ = writeln!(out, "d_in {}", self.d_in());
        let _ = writeln!(out, "d_out {}", self.d_out());
        push_vec(&mut out, "mean", &self.mean);
        for i in 0..self.d_out() {
            push_vec(&mut out, "basis_row", &self.basis.row(i).transpose());
        }
        textio::write_file(path, &out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let lines = textio::read_data_lines(path)?;
        let mut it = lines.iter();
        let header = it.next().ok_or_else(|| Error::parse(path, 1, "empty projection file"))?;
        if header.1 != "lda-projection v1" {
            return Err(Error::parse(path, header.0, "not an lda projection file"));
        }
        let mut d_in = None;
        let mut d_out = None;
        let mut mean = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in it {
            let mut toks = line.split_whitespace();
            let key = toks.next().unwrap();
            let rest: Vec<&str> = toks.collect();
            match key {
                "d_in" => d_in = Some(textio::parse_usize(path, *lineno, rest[0])?),
                "d_out" => d_out = Some(textio::parse_usize(path, *lineno, rest[0])?),
                "mean" => {
                    let mut v = Vec::with_capacity(rest.len());
                    for t in &rest {
                        v.push(textio::parse_f64(path, *lineno, t)?);
                    }
                    mean = Some(DVector::from_vec(v));
                }
                "basis_row" => {
                    let mut v = Vec::with_capacity(rest.len());
                    for t in &rest {
                        v.push(textio::parse_f64(path, *lineno, t)?);
                    }
                    rows.push(v);
                }
                other => return Err(Error::parse(path, *lineno, format!("unknown projection key '{other}'"))),
            }
        }
        let d_in = d_in.ok_or_else(|| Error::parse(path, 0, "missing 'd_in'"))?;
        let d_out = d_out.ok_or_else(|| Error::parse(path, 0, "missing 'd_out'"))?;
        let mean = mean.ok_or_else(|| Error::parse(path, 0, "missing 'mean'"))?;
        if mean.len() != d_in || rows.len() != d_out || rows.iter().any(|r| r.len() != d_in) {
            return Err(Error::parse(path, 0, "inconsistent projection dimensions"));
        }
        let mut basis = DMatrix::zeros(d_out, d_in);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                basis[(i, j)] = v;
            }
        }
        Ok(LdaProjection { mean, basis })
    }
}

fn push_vec(out: &mut String, key: &str, v: &DVector<f64>) {
    out.push_str(key);
    for x in v.iter() {
        out.push(' ');
        out.push_str(&textio::fmt_full(*x));
    }
    out.push('\n');
}

/// Fits the projection on labeled data. `d_out == d_in` is allowed as a
/// whitening rotation pass-through; otherwise `d_out <= min(d_in, K - 1)`,
/// the rank limit of the between-class scatter.
pub fn fit_lda(data: &LabeledDataset, d_out: usize) -> Result<LdaProjection> {
    let d_in = data.dim();
    let k = data.num_classes();
    if d_out == 0 {
        return Err(Error::InvalidArgument("d_out must be at least 1".into()));
    }
    if d_out != d_in {
        let limit = d_in.min(k - 1);
        if d_out > limit {
            return Err(Error::LdaDimension { requested: d_out, limit, dim: d_in, classes: k });
        }
    }
    let stats = accumulate_stats(data);
    let wh = linalg::whiten(&stats.within_scatter, WITHIN_EIGEN_FLOOR)?;
    let mut b = &wh.transform * &stats.between_scatter * wh.transform.transpose();
    linalg::symmetrize(&mut b);
    let (_, vectors) = linalg::sym_eigen_desc(&b);
    let basis = vectors.columns(0, d_out).transpose() * &wh.transform;
    Ok(LdaProjection { mean: stats.global_mean, basis })
}
