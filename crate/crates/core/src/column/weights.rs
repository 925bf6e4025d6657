use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ColumnConfig, ResponseKind};
use crate::error::{Error, Result};

/// Integer synaptic weights of a column, one row of `p` entries per neuron.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightMatrix {
    q: usize,
    p: usize,
    w_max: u32,
    data: Vec<u32>,
}

impl WeightMatrix {
    pub fn from_rows(rows: Vec<Vec<u32>>, w_max: u32) -> Result<Self> {
        let q = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if q == 0 || p == 0 {
            return Err(Error::shape("weight matrix must be at least 1x1"));
        }
        if let Some(j) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::shape(format!(
                "row {j} has {} entries, expected {p}",
                rows[j].len()
            )));
        }
        let data: Vec<u32> = rows.into_iter().flatten().collect();
        if let Some(&w) = data.iter().find(|&&w| w > w_max) {
            return Err(Error::Range(format!("weight {w} exceeds w_max {w_max}")));
        }
        Ok(WeightMatrix { q, p, w_max, data })
    }

    pub fn constant(q: usize, p: usize, value: u32, w_max: u32) -> Result<Self> {
        Self::from_rows(vec![vec![value; p]; q], w_max)
    }

    /// Uniform integer weights in `0..=w_max`.
    pub fn uniform(q: usize, p: usize, w_max: u32, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..q)
            .map(|_| (0..p).map(|_| rng.random_range(0..=w_max)).collect())
            .collect();
        Self::from_rows(rows, w_max)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn w_max(&self) -> u32 {
        self.w_max
    }

    pub fn row(&self, j: usize) -> &[u32] {
        &self.data[j * self.p..(j + 1) * self.p]
    }

    pub fn get(&self, j: usize, i: usize) -> u32 {
        self.data[j * self.p + i]
    }

    pub(crate) fn adjust(&mut self, j: usize, i: usize, delta: i8) {
        let w = &mut self.data[j * self.p + i];
        *w = match delta {
            d if d > 0 => (*w + 1).min(self.w_max),
            d if d < 0 => w.saturating_sub(1),
            _ => *w,
        };
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks(self.p)
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.rows().map(<[u32]>::to_vec).collect()
    }

    pub fn max_weight(&self) -> u32 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    /// Plain-text body: one line per neuron, space-separated integers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let mut first = true;
            for w in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{w}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str, w_max: u32) -> Result<Self> {
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(idx, line)| {
                line.split_whitespace()
                    .map(|f| {
                        f.parse::<u32>().map_err(|_| Error::Parse {
                            line: idx + 1,
                            field: f.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows, w_max)
    }
}

/// Sidecar metadata stored next to a weight file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightHeader {
    pub p: usize,
    pub q: usize,
    pub w_max: u32,
    pub theta: u32,
    pub response: ResponseKind,
}

impl WeightHeader {
    pub fn sidecar_path(weights: &Path) -> PathBuf {
        let mut name = weights.as_os_str().to_owned();
        name.push(".header.json");
        PathBuf::from(name)
    }
}

pub fn write_weights(path: impl AsRef<Path>, w: &WeightMatrix, cfg: &ColumnConfig) -> Result<()> {
    let path = path.as_ref();
    let header = WeightHeader {
        p: w.p(),
        q: w.q(),
        w_max: w.w_max(),
        theta: cfg.theta,
        response: cfg.response,
    };
    std::fs::write(path, w.to_text()).map_err(|e| Error::io(path, e))?;
    let sidecar = WeightHeader::sidecar_path(path);
    let json = serde_json::to_string_pretty(&header)? + "\n";
    std::fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))?;
    Ok(())
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<(WeightMatrix, WeightHeader)> {
    let path = path.as_ref();
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(p.to_path_buf()),
            _ => Error::io(p, e),
        })
    };
    let header: WeightHeader = serde_json::from_str(&read(&WeightHeader::sidecar_path(path))?)?;
    let w = WeightMatrix::parse_text(&read(path)?, header.w_max)?;
    if w.p() != header.p || w.q() != header.q {
        return Err(Error::shape(format!(
            "weight file is {}x{}, header says {}x{}",
            w.q(),
            w.p(),
            header.q,
            header.p
        )));
    }
    Ok((w, header))
}
