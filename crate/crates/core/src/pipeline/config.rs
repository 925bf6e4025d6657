use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::column::{ColumnConfig, ResponseKind, StdpParams, TieBreak, WtaConfig};
use crate::error::{Error, Result};
use crate::rtl::Library;
use crate::tsdata::{EncoderConfig, Polarity, UcrFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Train,
    Eval,
    Genrtl,
    Forecast,
}

impl Stage {
    pub const ORDER: [Stage; 4] = [Stage::Train, Stage::Eval, Stage::Genrtl, Stage::Forecast];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Genrtl => "genrtl",
            Stage::Forecast => "forecast",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ORDER
            .into_iter()
            .find(|st| st.as_str() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown stage `{s}`")))
    }
}

/// Parse a comma-separated stage list; an empty string means no stages.
pub fn parse_stages(list: &str) -> Result<Vec<Stage>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Option<UcrFormat>,
    #[serde(default)]
    pub name: Option<String>,
}

impl DatasetSection {
    pub fn format(&self) -> UcrFormat {
        self.format.unwrap_or_else(|| UcrFormat::from_path(&self.path))
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
    }
}

fn default_w_max() -> u32 {
    7
}

fn default_window() -> u32 {
    32
}

/// Column settings; `p` defaults to the dataset series length and `theta` is
/// only required by stages that simulate or emit the column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSection {
    #[serde(default)]
    pub p: Option<usize>,
    pub q: usize,
    #[serde(default)]
    pub theta: Option<u32>,
    #[serde(default = "default_w_max")]
    pub w_max: u32,
    #[serde(default = "default_window")]
    pub window: u32,
    #[serde(default)]
    pub response: ResponseKind,
    #[serde(default)]
    pub lif_leak_shift: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StdpSection {
    pub u_capture: f64,
    pub u_backoff: f64,
    pub u_search: f64,
    /// Defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "kind", deny_unknown_fields)]
pub enum InitSection {
    /// Uniform weights from the run seed.
    #[default]
    Uniform,
    Constant {
        value: u32,
    },
}

fn default_kmeans_iters() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default = "default_kmeans_iters")]
    pub kmeans_iters: usize,
    #[serde(default = "default_true")]
    pub kmeans_znorm: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            kmeans_iters: default_kmeans_iters(),
            kmeans_znorm: true,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_design() -> String {
    "tnn_column".into()
}

fn default_library() -> Library {
    Library::Tnn7
}

fn default_clock() -> f64 {
    1.0
}

fn default_tb_vectors() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareSection {
    #[serde(default = "default_design")]
    pub design: String,
    #[serde(default = "default_library")]
    pub library: Library,
    #[serde(default)]
    pub macro_mode: bool,
    #[serde(default = "default_clock")]
    pub clock_period_ns: f64,
    #[serde(default)]
    pub weight_bits: Option<u32>,
    #[serde(default)]
    pub time_bits: Option<u32>,
    /// Dataset samples encoded into testbench vectors.
    #[serde(default = "default_tb_vectors")]
    pub tb_vectors: usize,
    /// Library-root variables substituted into flow scripts.
    #[serde(default)]
    pub env: BTreeMap<String, String>,
}

impl Default for HardwareSection {
    fn default() -> Self {
        HardwareSection {
            design: default_design(),
            library: default_library(),
            macro_mode: false,
            clock_period_ns: default_clock(),
            weight_bits: None,
            time_bits: None,
            tb_vectors: default_tb_vectors(),
            env: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ForecastSection {
    /// Model files from `fit-forecast`; the published trend lines are used
    /// when absent.
    #[serde(default)]
    pub area_model: Option<PathBuf>,
    #[serde(default)]
    pub leakage_model: Option<PathBuf>,
}

fn default_epochs() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("tnngen-out")
}

/// Declarative description of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Results store; defaults to `results.jsonl` inside `out`.
    #[serde(default)]
    pub store: Option<PathBuf>,
    /// Pre-trained weights for runs without a train stage.
    #[serde(default)]
    pub weights: Option<PathBuf>,
    #[serde(default)]
    pub dataset: Option<DatasetSection>,
    #[serde(default)]
    pub encoder: Option<EncoderConfig>,
    #[serde(default)]
    pub column: Option<ColumnSection>,
    #[serde(default)]
    pub wta: Option<WtaConfig>,
    #[serde(default)]
    pub stdp: Option<StdpSection>,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub hardware: HardwareSection,
    #[serde(default)]
    pub forecast: ForecastSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: default_out(),
            stages: Vec::new(),
            epochs: default_epochs(),
            store: None,
            weights: None,
            dataset: None,
            encoder: None,
            column: None,
            wta: None,
            stdp: None,
            init: InitSection::default(),
            eval: EvalSection::default(),
            hardware: HardwareSection::default(),
            forecast: ForecastSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Load a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        for p in [
            self.store.as_mut(),
            self.weights.as_mut(),
            self.dataset.as_mut().map(|d| &mut d.path),
            self.forecast.area_model.as_mut(),
            self.forecast.leakage_model.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn store_path(&self) -> PathBuf {
        self.store.clone().unwrap_or_else(|| self.out.join("results.jsonl"))
    }

    /// Requested stages, deduplicated, in execution order.
    pub fn ordered_stages(&self) -> Vec<Stage> {
        Stage::ORDER.into_iter().filter(|s| self.stages.contains(s)).collect()
    }

    /// Check that every requested stage has what it needs.
    pub fn validate(&self) -> Result<()> {
        let stages = self.ordered_stages();
        let has = |s| stages.contains(&s);
        let weights_available = has(Stage::Train) || self.weights.is_some();
        for stage in &stages {
            match stage {
                Stage::Train | Stage::Eval => {
                    if self.dataset.is_none() {
                        return Err(Error::config(format!("stage `{}` needs a [dataset]", stage.as_str())));
                    }
                    if self.encoder.is_none() {
                        return Err(Error::config(format!("stage `{}` needs an [encoder]", stage.as_str())));
                    }
                }
                _ => {}
            }
            match stage {
                Stage::Train if self.stdp.is_none() => {
                    return Err(Error::config("stage `train` needs an [stdp] section"));
                }
                Stage::Eval | Stage::Genrtl if !weights_available => {
                    return Err(Error::config(format!(
                        "stage `{}` needs weights: add the train stage or set `weights`",
                        stage.as_str()
                    )));
                }
                _ => {}
            }
            if *stage != Stage::Forecast || self.dataset.is_none() {
                let col = self
                    .column
                    .as_ref()
                    .ok_or_else(|| Error::config(format!("stage `{}` needs a [column]", stage.as_str())))?;
                if *stage != Stage::Forecast && col.theta.is_none() {
                    return Err(Error::config(format!("stage `{}` needs column.theta", stage.as_str())));
                }
                if col.p.is_none() && self.dataset.is_none() {
                    return Err(Error::config(format!(
                        "stage `{}` needs column.p or a dataset",
                        stage.as_str()
                    )));
                }
            }
        }
        if let Some(enc) = &self.encoder {
            enc.validate()?;
        }
        if self.hardware.macro_mode && self.hardware.library != Library::Tnn7 {
            return Err(Error::config("hardware.macro_mode requires library = \"tnn7\""));
        }
        Ok(())
    }

    pub fn wta(&self) -> WtaConfig {
        self.wta.unwrap_or(WtaConfig {
            k: 1,
            tie_break: TieBreak::LowestIndex,
        })
    }

    pub fn stdp_params(&self) -> Option<StdpParams> {
        self.stdp.as_ref().map(|s| StdpParams {
            u_capture: s.u_capture,
            u_backoff: s.u_backoff,
            u_search: s.u_search,
            seed: s.seed.unwrap_or(self.seed),
        })
    }

    pub fn encoder(&self) -> EncoderConfig {
        self.encoder.unwrap_or(EncoderConfig {
            t_in: 8,
            znorm: false,
            polarity: Polarity::HighEarly,
        })
    }

    /// Column config with `p` resolved; requires `theta`.
    pub fn column_config(&self, series_len: Option<usize>) -> Result<ColumnConfig> {
        let col = self
            .column
            .as_ref()
            .ok_or_else(|| Error::config("missing [column] section"))?;
        let p = self.resolve_p(series_len)?;
        let cfg = ColumnConfig {
            p,
            q: col.q,
            theta: col.theta.ok_or_else(|| Error::config("missing column.theta"))?,
            w_max: col.w_max,
            window: col.window,
            response: col.response,
            lif_leak_shift: col.lif_leak_shift,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_p(&self, series_len: Option<usize>) -> Result<usize> {
        let configured = self.column.as_ref().and_then(|c| c.p);
        match (configured, series_len) {
            (Some(p), Some(n)) if p != n => Err(Error::config(format!(
                "column.p = {p} but the dataset series length is {n}"
            ))),
            (Some(p), _) => Ok(p),
            (None, Some(n)) => Ok(n),
            (None, None) => Err(Error::config("column.p is not set and there is no dataset")),
        }
    }

    /// SHA-256 of the canonical JSON form: object keys are sorted, so the
    /// hash does not depend on field order in the source file.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("json value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_toml_str("seeed = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = RunConfig::from_toml_str("[column]\nq = 2\nthetta = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn hash_ignores_field_order() {
        let a = RunConfig::from_toml_str("seed = 3\nepochs = 2\n[column]\nq = 2\np = 4\n").unwrap();
        let b = RunConfig::from_toml_str("epochs = 2\nseed = 3\n[column]\np = 4\nq = 2\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::from_toml_str("epochs = 2\nseed = 4\n[column]\np = 4\nq = 2\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn stage_dependencies() {
        let mut cfg = RunConfig {
            stages: vec![Stage::Eval],
            dataset: Some(DatasetSection {
                path: "x.tsv".into(),
                format: None,
                name: None,
            }),
            encoder: Some(EncoderConfig::new(8, false, Polarity::HighEarly).unwrap()),
            column: Some(ColumnSection {
                p: None,
                q: 2,
                theta: Some(3),
                w_max: 7,
                window: 16,
                response: ResponseKind::RampNoLeak,
                lif_leak_shift: 0,
            }),
            ..RunConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.weights = Some("w.txt".into());
        cfg.validate().unwrap();

        let forecast_only = RunConfig {
            stages: vec![Stage::Forecast],
            ..RunConfig::default()
        };
        assert!(forecast_only.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn stage_list() {
        assert_eq!(parse_stages("train, eval").unwrap(), vec![Stage::Train, Stage::Eval]);
        assert!(parse_stages("").unwrap().is_empty());
        assert!(parse_stages("train,deploy").is_err());
    }
}
