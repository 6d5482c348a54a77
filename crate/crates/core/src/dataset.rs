//! Observation datasets and their delimited-text serialization.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::scalar::Scalar;

/// Ordered observations of the scoring function. Each point is the
/// concatenation `[theta, alpha]` in normalized coordinates; `noise_std` is
/// the observation noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<S> {
    points: Vec<Vec<S>>,
    values: Vec<S>,
    noise_std: S,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(points: Vec<Vec<S>>, values: Vec<S>, noise_std: S) -> Result<Self> {
        check_dim(points.len(), values.len())?;
        if let Some(first) = points.first() {
            let d = first.len();
            for p in &points {
                check_dim(d, p.len())?;
                check_finite(p, "dataset point")?;
            }
        }
        check_finite(&values, "dataset value")?;
        if !(noise_std >= S::zero()) {
            return Err(Error::InvalidArgument(format!(
                "noise_std must be nonnegative, got {noise_std}"
            )));
        }
        Ok(Dataset {
            points,
            values,
            noise_std,
        })
    }

    pub fn empty(noise_std: S) -> Self {
        Dataset {
            points: Vec::new(),
            values: Vec::new(),
            noise_std,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Input dimension, or `None` for an empty dataset.
    pub fn input_dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn noise_std(&self) -> S {
        self.noise_std
    }

    pub fn set_noise_std(&mut self, noise_std: S) {
        self.noise_std = noise_std;
    }

    pub fn push(&mut self, point: Vec<S>, value: S) -> Result<()> {
        if let Some(d) = self.input_dim() {
            check_dim(d, point.len())?;
        }
        check_finite(&point, "dataset point")?;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "dataset value",
            });
        }
        self.points.push(point);
        self.values.push(value);
        Ok(())
    }

    /// Mean of the observed values; zero for an empty dataset.
    pub fn values_mean(&self) -> S {
        if self.is_empty() {
            return S::zero();
        }
        self.values.iter().copied().sum::<S>() / S::from_usize(self.len())
    }

    /// Copy with every value shifted by `delta`.
    pub fn with_shifted_values(&self, delta: S) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v += delta;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[S], S)> {
        self.points
            .iter()
            .map(Vec::as_slice)
            .zip(self.values.iter().copied())
    }

    /// Write as delimited text with a header row. Columns are
    /// `theta_1..theta_{d_theta}, alpha_1..alpha_{d_alpha}, y`; the two
    /// dimensions must add up to the point dimension and are recorded by the
    /// caller's config, not the file itself.
    pub fn write_delimited<W: Write>(&self, w: &mut W, d_theta: usize, d_alpha: usize) -> std::io::Result<()> {
        if let Some(d) = self.input_dim() {
            assert_eq!(d, d_theta + d_alpha, "column split does not match data");
        }
        let mut header: Vec<String> = (1..=d_theta).map(|i| format!("theta_{i}")).collect();
        header.extend((1..=d_alpha).map(|i| format!("alpha_{i}")));
        header.push("y".into());
        writeln!(w, "{}", header.join(","))?;
        for (p, y) in self.iter() {
            for v in p {
                write!(w, "{v},")?;
            }
            writeln!(w, "{y}")?;
        }
        Ok(())
    }

    /// Read a file produced by [`Dataset::write_delimited`]. The dimensions
    /// come from the caller's config; the header is checked against them.
    /// Lines starting with `#` (provenance headers) are skipped.
    pub fn read_delimited<R: BufRead>(
        r: &mut R,
        d_theta: usize,
        d_alpha: usize,
        noise_std: S,
    ) -> Result<Self> {
        let d = d_theta + d_alpha;
        let mut lines = r
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.starts_with('#')));
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("dataset file is empty".into()))?
            .map_err(|e| Error::InvalidArgument(format!("dataset read failed: {e}")))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() != d + 1 || cols.last() != Some(&"y") {
            return Err(Error::InvalidArgument(format!(
                "dataset header has {} columns, config declares {} inputs plus y",
                cols.len(),
                d
            )));
        }
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::InvalidArgument(format!("dataset read failed: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .trim()
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    Error::InvalidArgument(format!("dataset row {}: {e}", lineno + 2))
                })?;
            if fields.len() != d + 1 {
                return Err(Error::InvalidArgument(format!(
                    "dataset row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    d + 1
                )));
            }
            points.push(fields[..d].iter().map(|&v| S::from_f64(v)).collect());
            values.push(S::from_f64(fields[d]));
        }
        Dataset::new(points, values, noise_std)
    }
}
