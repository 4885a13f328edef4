//! Quasi-uniform projection directions on the unit hypersphere.
//!
//! Points of the Hammersley set in `[0, 1)^(N-1)` are mapped to hyperspherical
//! angles (the first coordinate becomes the final, azimuthal angle in
//! `[0, 2π)`, the rest become polar angles in `[0, π)`) and then to unit
//! vectors in `R^N`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{MemdError, Result};
use crate::fixed_point::CsdConstant;

/// Default number of directions.
pub const DEFAULT_DIRECTIONS: usize = 8;

/// Digit-reversal of `index` in `base`, read as a fraction in `[0, 1)`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    debug_assert!(base >= 2);
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut result = 0.0;
    while index > 0 {
        result += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    result
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Point `index` of the `count`-point Hammersley set in `dim` dimensions.
pub fn hammersley_point(index: usize, count: usize, dim: usize) -> Vec<f64> {
    assert!(index < count, "Hammersley index {index} out of range {count}");
    let mut point = Vec::with_capacity(dim);
    if dim == 0 {
        return point;
    }
    point.push(index as f64 / count as f64);
    for base in first_primes(dim - 1) {
        point.push(radical_inverse(index as u64, base));
    }
    point
}

/// Maps a point of the unit cube `[0,1)^(N-1)` to a unit vector in `R^N`.
fn cube_to_sphere(point: &[f64]) -> Vec<f64> {
    let n_angles = point.len();
    let mut angles = Vec::with_capacity(n_angles);
    for j in 0..n_angles {
        if j + 1 == n_angles {
            angles.push(2.0 * PI * point[0]);
        } else {
            angles.push(PI * point[j + 1]);
        }
    }
    let mut v = Vec::with_capacity(n_angles + 1);
    let mut sin_prod = 1.0;
    for theta in &angles {
        v.push(sin_prod * theta.cos());
        sin_prod *= theta.sin();
    }
    v.push(sin_prod);
    v
}

/// A fixed set of unit direction vectors plus their signed-digit encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    n_channels: usize,
    vectors: Vec<Vec<f64>>,
    quantized: Vec<Vec<CsdConstant>>,
}

impl DirectionSet {
    /// `n_directions` Hammersley directions on the sphere in `R^n_channels`.
    pub fn hammersley(n_channels: usize, n_directions: usize) -> Result<Self> {
        if n_channels < 2 {
            return Err(MemdError::Config(format!(
                "direction sets need at least 2 channels, got {n_channels}"
            )));
        }
        if n_directions < 1 {
            return Err(MemdError::Config("need at least one direction".into()));
        }
        let vectors = (0..n_directions)
            .map(|k| cube_to_sphere(&hammersley_point(k, n_directions, n_channels - 1)))
            .collect();
        Self::from_vectors(vectors)
    }

    /// Builds a set from explicit rows; each row must have unit norm.
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let n_channels = vectors.first().map(Vec::len).unwrap_or(0);
        if vectors.is_empty() || n_channels < 2 {
            return Err(MemdError::Config(
                "direction set needs at least one row of at least 2 coefficients".into(),
            ));
        }
        for (k, row) in vectors.iter().enumerate() {
            if row.len() != n_channels {
                return Err(MemdError::DimensionMismatch {
                    expected: n_channels,
                    got: row.len(),
                });
            }
            let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
                return Err(MemdError::Config(format!(
                    "direction {k} has norm {norm}, expected 1"
                )));
            }
        }
        let quantized = vectors
            .iter()
            .map(|row| row.iter().map(|&a| CsdConstant::new(a)).collect())
            .collect();
        Ok(Self {
            n_channels,
            vectors,
            quantized,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_directions(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn quantized(&self, k: usize) -> &[CsdConstant] {
        &self.quantized[k]
    }

    /// CSV text: a header `a1,...,aN` then one row per direction.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.n_channels).map(|i| format!("a{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.vectors {
            let cells: Vec<String> = row.iter().map(|a| format!("{a:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut vectors = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record.map_err(|e| MemdError::Parse {
                row: r + 2,
                column: 0,
                message: e.to_string(),
            })?;
            let row = record
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    cell.parse::<f64>().map_err(|e| MemdError::Parse {
                        row: r + 2,
                        column: c + 1,
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            vectors.push(row);
        }
        Self::from_vectors(vectors)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

/// Smallest angle (radians) between any two rows.
pub fn min_pairwise_angle(vectors: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
            best = best.min(dot.clamp(-1.0, 1.0).acos());
        }
    }
    best
}
