//! The sample container shared by every module: an `n x d` matrix of
//! observations stored row-major, one row per time point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeries {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl MultiSeries {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Dimension("series must have at least one column".into()));
        }
        if data.len() != n * d {
            return Err(Error::Dimension(format!(
                "expected {} values for {n}x{d}, got {}",
                n * d,
                data.len()
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, d, data: vec![0.0; n * d] }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::Dimension(format!("row {i} has {} columns, expected {d}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), d, data)
    }

    /// Single-column series.
    pub fn from_column(values: &[f64]) -> Self {
        Self { n: values.len(), d: 1, data: values.to_vec() }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.d..(t + 1) * self.d]
    }

    #[inline]
    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.d..(t + 1) * self.d]
    }

    #[inline]
    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.data[t * self.d + j]
    }

    #[inline]
    pub fn set(&mut self, t: usize, j: usize, v: f64) {
        self.data[t * self.d + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Rows `start..end` as a new series.
    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.n, "row range {start}..{end} out of bounds for {}", self.n);
        Self { n: end - start, d: self.d, data: self.data[start * self.d..end * self.d].to_vec() }
    }

    /// Columns `start..end` as a new series.
    pub fn slice_cols(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.d {
            return Err(Error::Dimension(format!("column range {start}..{end} invalid for {} columns", self.d)));
        }
        let w = end - start;
        let mut data = Vec::with_capacity(self.n * w);
        for r in self.rows() {
            data.extend_from_slice(&r[start..end]);
        }
        Ok(Self { n: self.n, d: w, data })
    }

    /// Fails on the first NaN or infinite entry.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite { row: pos / self.d, col: pos % self.d }),
            None => Ok(()),
        }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (acc, v) in m.iter_mut().zip(r) {
                *acc += v;
            }
        }
        let n = self.n as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Sample covariance with divisor `n`.
    pub fn covariance(&self) -> Vec<f64> {
        let mean = self.column_means();
        let d = self.d;
        let mut c = vec![0.0; d * d];
        for r in self.rows() {
            for i in 0..d {
                let di = r[i] - mean[i];
                for j in i..d {
                    c[i * d + j] += di * (r[j] - mean[j]);
                }
            }
        }
        let n = self.n as f64;
        for i in 0..d {
            for j in i..d {
                c[i * d + j] /= n;
                c[j * d + i] = c[i * d + j];
            }
        }
        c
    }
}
