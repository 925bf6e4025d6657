//! Time-series ingestion and intensity-to-latency spike encoding.
//!
//! Datasets follow the UCR archive layout: one sample per row, class label
//! first, then the observations. Each observation becomes one input line of a
//! column, so a column's `p` equals the series length.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Field separator of a UCR-style text file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UcrFormat {
    Tsv,
    Csv,
}

impl UcrFormat {
    fn separator(self) -> char {
        match self {
            UcrFormat::Tsv => '\t',
            UcrFormat::Csv => ',',
        }
    }

    /// Guess the format from a file extension, defaulting to TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => UcrFormat::Csv,
            _ => UcrFormat::Tsv,
        }
    }
}

impl FromStr for UcrFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(UcrFormat::Tsv),
            "csv" => Ok(UcrFormat::Csv),
            other => Err(Error::config(format!("unknown dataset format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Dense class id in `0..num_classes`.
    pub label: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    samples: Vec<Sample>,
    series_len: usize,
    /// Original label of each dense class id, ascending.
    class_labels: Vec<i64>,
}

impl TimeSeriesDataset {
    /// Build a dataset from raw `(label, values)` rows, remapping labels to
    /// dense ids by ascending original value.
    pub fn from_rows(rows: Vec<(i64, Vec<f64>)>) -> Result<Self> {
        let series_len = match rows.first() {
            Some((_, v)) => v.len(),
            None => return Err(Error::EmptyDataset),
        };
        if series_len == 0 {
            return Err(Error::Format {
                line: 1,
                msg: "row has a label but no observations".into(),
            });
        }
        let mut dense = BTreeMap::new();
        for (idx, (label, values)) in rows.iter().enumerate() {
            if values.len() != series_len {
                return Err(Error::Format {
                    line: idx + 1,
                    msg: format!("expected {series_len} observations, found {}", values.len()),
                });
            }
            dense.insert(*label, 0usize);
        }
        for (id, slot) in dense.values_mut().enumerate() {
            *slot = id;
        }
        let class_labels = dense.keys().copied().collect();
        let samples = rows
            .into_iter()
            .map(|(label, values)| Sample {
                label: dense[&label],
                values,
            })
            .collect();
        Ok(TimeSeriesDataset {
            samples,
            series_len,
            class_labels,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_labels(&self) -> &[i64] {
        &self.class_labels
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Render back to UCR text using the original labels.
    pub fn to_ucr_string(&self, format: UcrFormat) -> String {
        let sep = format.separator();
        let mut out = String::new();
        for s in &self.samples {
            write!(out, "{}", self.class_labels[s.label]).unwrap();
            for v in &s.values {
                write!(out, "{sep}{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn parse_label(field: &str, line: usize) -> Result<i64> {
    if let Ok(v) = field.parse::<i64>() {
        return Ok(v);
    }
    // Some archive files store labels as floats such as `1.0000000e+00`.
    match field.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(Error::Parse {
            line,
            field: field.to_string(),
        }),
    }
}

/// Parse UCR-formatted text. Blank lines are ignored.
pub fn parse_ucr(text: &str, format: UcrFormat) -> Result<TimeSeriesDataset> {
    let sep = format.separator();
    let mut rows = Vec::new();
    let mut first_len = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(sep).map(str::trim);
        let label = parse_label(fields.next().unwrap_or_default(), line_no)?;
        let values = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    field: f.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        match first_len {
            None => first_len = Some(values.len()),
            Some(n) if n != values.len() => {
                return Err(Error::Format {
                    line: line_no,
                    msg: format!("expected {n} observations, found {}", values.len()),
                })
            }
            Some(_) => {}
        }
        rows.push((label, values));
    }
    TimeSeriesDataset::from_rows(rows)
}

pub fn load_ucr(path: impl AsRef<Path>, format: UcrFormat) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    parse_ucr(&text, format)
}

/// Two-class dataset whose prototypes differ in which half of the series is
/// high: class 0 is `1.0` on the first half and `0.0` on the second, class 1
/// the reverse. Gaussian noise with std `noise` is added to every point and
/// classes are drawn uniformly.
pub fn synthetic_two_class(n: usize, len: usize, noise: f64, seed: u64) -> Result<TimeSeriesDataset> {
    if n == 0 || len == 0 {
        return Err(Error::EmptyDataset);
    }
    let gauss = Normal::new(0.0, noise).map_err(|e| Error::config(format!("noise {noise}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let class = rng.random_range(0..2i64);
            let values = (0..len)
                .map(|i| {
                    let high = (i < len / 2) == (class == 0);
                    f64::from(u8::from(high)) + gauss.sample(&mut rng)
                })
                .collect();
            (class, values)
        })
        .collect();
    TimeSeriesDataset::from_rows(rows)
}

/// Z-normalize with the population standard deviation. A constant series maps
/// to all zeros.
pub fn znormalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || !std.is_finite() {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    /// Larger observations spike earlier.
    #[default]
    HighEarly,
    LowEarly,
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high-early" => Ok(Polarity::HighEarly),
            "low-early" => Ok(Polarity::LowEarly),
            other => Err(Error::config(format!("unknown polarity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    /// Input temporal resolution: spike times fall in `0..t_in`.
    pub t_in: u32,
    #[serde(default)]
    pub znorm: bool,
    #[serde(default)]
    pub polarity: Polarity,
}

impl EncoderConfig {
    pub fn new(t_in: u32, znorm: bool, polarity: Polarity) -> Result<Self> {
        let cfg = EncoderConfig { t_in, znorm, polarity };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_in < 2 {
            return Err(Error::config(format!(
                "encoder t_in must be at least 2, got {}",
                self.t_in
            )));
        }
        Ok(())
    }
}

/// Spike times of a bundle of lines within one processing window; `None`
/// means the line stays silent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpikeVolley {
    times: Vec<Option<u32>>,
    window: u32,
}

impl SpikeVolley {
    pub fn new(times: Vec<Option<u32>>, window: u32) -> Result<Self> {
        if let Some(t) = times.iter().flatten().find(|&&t| t >= window) {
            return Err(Error::Range(format!("spike time {t} outside window 0..{window}")));
        }
        Ok(SpikeVolley { times, window })
    }

    pub fn silent(len: usize, window: u32) -> Self {
        SpikeVolley {
            times: vec![None; len],
            window,
        }
    }

    pub fn times(&self) -> &[Option<u32>] {
        &self.times
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn get(&self, line: usize) -> Option<u32> {
        self.times.get(line).copied().flatten()
    }

    /// Earliest spike time over all lines.
    pub fn earliest(&self) -> Option<u32> {
        self.times.iter().flatten().copied().min()
    }

    pub fn spike_count(&self) -> usize {
        self.times.iter().filter(|t| t.is_some()).count()
    }

    pub fn into_times(self) -> Vec<Option<u32>> {
        self.times
    }
}

/// Linear intensity-to-latency code with round-half-up. Every line spikes
/// exactly once; a constant series spikes everywhere at time 0.
pub fn encode(values: &[f64], cfg: &EncoderConfig) -> Result<SpikeVolley> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let normalized;
    let values = if cfg.znorm {
        normalized = znormalize(values)?;
        &normalized[..]
    } else {
        values
    };
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    let last = (cfg.t_in - 1) as f64;
    let times = values
        .iter()
        .map(|&v| {
            if span <= 0.0 || !span.is_finite() {
                return Some(0);
            }
            let frac = match cfg.polarity {
                Polarity::HighEarly => (hi - v) / span,
                Polarity::LowEarly => (v - lo) / span,
            };
            let t = (frac * last + 0.5).floor().clamp(0.0, last);
            Some(t as u32)
        })
        .collect();
    Ok(SpikeVolley {
        times,
        window: cfg.t_in,
    })
}
