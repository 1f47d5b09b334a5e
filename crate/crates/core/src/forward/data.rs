//! Synthetic data and simple binary/CSV storage of vectors and matrices.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};

/// Noise standard deviation, absolute or relative to the largest noiseless
/// datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    Absolute(f64),
    /// Fraction of `max |b*|`, e.g. `0.04` for 4 %.
    Relative(f64),
}

impl NoiseLevel {
    pub fn sigma(&self, clean: &[f64]) -> f64 {
        match *self {
            NoiseLevel::Absolute(s) => s,
            NoiseLevel::Relative(f) => f * clean.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            NoiseLevel::Absolute(s) | NoiseLevel::Relative(s) => s,
        };
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("noise level must be non-negative, got {v}")))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticData {
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
}

/// `b = b* + σ ξ` with `ξ` standard normal drawn from a seeded ChaCha stream.
pub fn add_noise(clean: Vec<f64>, level: NoiseLevel, seed: u64) -> Result<SyntheticData> {
    level.validate()?;
    let sigma = level.sigma(&clean);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = clean
        .iter()
        .map(|&b| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            b + sigma * xi
        })
        .collect();
    Ok(SyntheticData {
        clean,
        noisy,
        sigma,
        seed,
    })
}

const MAGIC: &[u8; 8] = b"ABMSHMAT";

/// Writes `magic, rows (u64 LE), cols (u64 LE), row-major f64 LE`.
pub fn write_matrix_bin<W: Write>(w: &mut W, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            context: "binary matrix payload",
            expected: rows * cols,
            got: data.len(),
        });
    }
    w.write_all(MAGIC)?;
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    for x in data {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix_bin<R: Read>(r: &mut R) -> Result<(usize, usize, Vec<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "bad magic in binary matrix file".into(),
        });
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let n = rows.checked_mul(cols).ok_or_else(|| Error::Parse {
        line: 0,
        message: "matrix dimensions overflow".into(),
    })?;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    Ok((rows, cols, data))
}

/// One value per line, full precision.
pub fn write_vector_csv<W: Write>(w: &mut W, header: &str, v: &[f64]) -> Result<()> {
    writeln!(w, "{header}")?;
    for x in v {
        writeln!(w, "{x:.17e}")?;
    }
    Ok(())
}

pub fn read_vector_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if i == 0 || s.is_empty() {
            continue;
        }
        out.push(s.parse().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{e}: '{s}'"),
        })?);
    }
    Ok(out)
}
