//! Declarative runs: load a config, execute the requested stages, write
//! artifacts and append a record to the results store.

mod config;
mod store;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

pub use config::{
    parse_stages, ColumnSection, DatasetSection, EvalSection, ForecastSection, HardwareSection, InitSection, RunConfig,
    Stage, StdpSection,
};
pub use store::{append_record, read_store, render, report, ForecastValues, ReportFormat, ResultsRecord, RunStatus};

use crate::cluster::{kmeans, rand_index, ClusterReport, Partition};
use crate::column::{
    infer, read_weights, train_unsupervised, write_weights, ColumnConfig, StdpParams, WeightInit, WeightMatrix,
};
use crate::error::{Error, Result};
use crate::forecast::{reference, seeded_models, ForecastReport, Metric, RegressionModel};
use crate::rtl::{
    generate_column_rtl, generate_flow_scripts_with_env, generate_testbench, HardwareConfig, Library, ModuleCount,
};
use crate::tsdata::{encode, load_ucr, TimeSeriesDataset};

/// Contents of `manifest.json` next to the emitted RTL.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RtlManifest {
    pub design: String,
    pub library: Library,
    pub macro_mode: bool,
    pub p: usize,
    pub q: usize,
    pub synapse_count: u64,
    pub weight_bits: u32,
    pub time_bits: u32,
    pub testbench_vectors: usize,
    pub modules: Vec<ModuleCount>,
    pub files: Vec<String>,
    pub env: BTreeMap<String, String>,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    dataset: Option<TimeSeriesDataset>,
    weights: Option<WeightMatrix>,
    artifacts: Vec<String>,
    record: ResultsRecord,
}

impl Run<'_> {
    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.cfg.out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(rel.to_string());
        Ok(())
    }

    fn column(&self) -> Result<ColumnConfig> {
        self.cfg
            .column_config(self.dataset.as_ref().map(TimeSeriesDataset::series_len))
    }

    fn dataset(&self) -> Result<&TimeSeriesDataset> {
        self.dataset.as_ref().ok_or_else(|| Error::config("no dataset loaded"))
    }

    fn weights(&self) -> Result<&WeightMatrix> {
        self.weights
            .as_ref()
            .ok_or_else(|| Error::config("no weights available"))
    }

    fn stage(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Train => self.train(),
            Stage::Eval => self.eval(),
            Stage::Genrtl => self.genrtl(),
            Stage::Forecast => self.forecast(),
        }
    }

    fn train(&mut self) -> Result<()> {
        let col = self.column()?;
        let params = self.cfg.stdp_params().ok_or_else(|| Error::config("missing [stdp]"))?;
        let init = match self.cfg.init {
            InitSection::Uniform => WeightInit::Uniform { seed: self.cfg.seed },
            InitSection::Constant { value } => WeightInit::Constant(value),
        };
        let w = train_unsupervised(
            self.dataset()?,
            &self.cfg.encoder(),
            &col,
            &self.cfg.wta(),
            &params,
            self.cfg.epochs,
            &init,
        )?;
        let path = self.cfg.out.join("weights.txt");
        std::fs::create_dir_all(&self.cfg.out).map_err(|e| Error::io(&self.cfg.out, e))?;
        write_weights(&path, &w, &col)?;
        self.artifacts.push("weights.txt".into());
        self.artifacts.push("weights.txt.header.json".into());
        self.weights = Some(w);
        Ok(())
    }

    fn eval(&mut self) -> Result<()> {
        let col = self.column()?;
        let ds = self.dataset()?;
        let inference = infer(ds, &self.cfg.encoder(), &col, self.weights()?, &self.cfg.wta())?;
        let truth = Partition::new(ds.labels());
        let ri = rand_index(&truth, &Partition::from_optional(&inference.assignments))?;
        let k = ds.num_classes();
        let baseline = kmeans(
            ds,
            k,
            self.cfg.seed,
            self.cfg.eval.kmeans_iters,
            self.cfg.eval.kmeans_znorm,
        )?;
        let baseline_ri = rand_index(&truth, &baseline)?;
        let label = format!(
            "{}x{} theta={} w_max={} window={} {}",
            col.p, col.q, col.theta, col.w_max, col.window, col.response
        );
        let name = self.record.dataset.clone().unwrap_or_default();
        let report = ClusterReport::new(name, label, ri, baseline_ri);

        let assignments: String = inference
            .assignments
            .iter()
            .map(|a| a.map_or_else(|| "-".to_string(), |j| j.to_string()) + "\n")
            .collect();
        let json = serde_json::to_string_pretty(&report)? + "\n";
        self.write("cluster_report.json", &json)?;
        self.write("assignments.txt", &assignments)?;
        self.record.cycles_per_sample = Some(inference.cycles_per_sample);
        self.record.cluster = Some(report);
        Ok(())
    }

    fn hardware(&self, col: &ColumnConfig) -> HardwareConfig {
        let h = &self.cfg.hardware;
        let mut hw = HardwareConfig::for_column(h.design.clone(), col, h.library);
        hw.macro_mode = h.macro_mode;
        hw.clock_period_ns = h.clock_period_ns;
        if let Some(b) = h.weight_bits {
            hw.weight_bits = b;
        }
        if let Some(b) = h.time_bits {
            hw.time_bits = b;
        }
        hw.stdp = self
            .cfg
            .stdp_params()
            .unwrap_or(StdpParams::deterministic(self.cfg.seed));
        hw
    }

    fn genrtl(&mut self) -> Result<()> {
        let col = self.column()?;
        let hw = self.hardware(&col);
        let w = self.weights()?.clone();
        let bundle = generate_column_rtl(&hw, &w)?;
        let stimuli = match &self.dataset {
            Some(ds) => {
                let enc = self.cfg.encoder();
                ds.samples()
                    .iter()
                    .take(self.cfg.hardware.tb_vectors)
                    .map(|s| encode(&s.values, &enc))
                    .collect::<Result<Vec<_>>>()?
            }
            None => Vec::new(),
        };
        let tb = generate_testbench(&hw, &w, &stimuli)?;
        let flow = generate_flow_scripts_with_env(&hw, &self.cfg.hardware.env)?;

        let mut files = Vec::new();
        for (name, text) in &bundle.files {
            let rel = format!("rtl/{name}");
            self.write(&rel, text)?;
            files.push(rel);
        }
        let tb_rel = format!("rtl/{}_tb.v", hw.design);
        self.write(&tb_rel, &tb)?;
        files.push(tb_rel);
        for (name, text) in &flow.files {
            let rel = format!("rtl/{name}");
            self.write(&rel, text)?;
            files.push(rel);
        }
        let manifest = RtlManifest {
            design: hw.design.clone(),
            library: hw.library,
            macro_mode: hw.macro_mode,
            p: hw.p,
            q: hw.q,
            synapse_count: hw.synapse_count(),
            weight_bits: hw.weight_bits,
            time_bits: hw.time_bits,
            testbench_vectors: stimuli.len(),
            modules: bundle.manifest.clone(),
            files,
            env: flow.env,
        };
        let json = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write("rtl/manifest.json", &json)
    }

    fn forecast(&mut self) -> Result<()> {
        let q = self
            .cfg
            .column
            .as_ref()
            .ok_or_else(|| Error::config("missing [column]"))?
            .q;
        let p = self
            .cfg
            .resolve_p(self.dataset.as_ref().map(TimeSeriesDataset::series_len))?;
        let count = crate::rtl::synapse_count(p as u64, q as u64);
        let (seed_area, seed_leak) = seeded_models();
        let area = load_model(self.cfg.forecast.area_model.as_deref(), seed_area, Metric::AreaUm2)?;
        let leak = load_model(self.cfg.forecast.leakage_model.as_deref(), seed_leak, Metric::LeakageUw)?;

        let name = self
            .record
            .dataset
            .clone()
            .unwrap_or_else(|| self.cfg.hardware.design.clone());
        let published = reference::by_synapse_count(count);
        let mut area_report = ForecastReport::new(&area);
        let mut leak_report = ForecastReport::new(&leak);
        area_report.push(
            &name,
            count,
            published.and_then(|d| d.actual(Metric::AreaUm2, area.library)),
        );
        leak_report.push(
            &name,
            count,
            published.and_then(|d| d.actual(Metric::LeakageUw, leak.library)),
        );

        let (a, l) = (&area_report.rows[0], &leak_report.rows[0]);
        self.record.forecast = Some(ForecastValues {
            library: area.library,
            area_um2: a.forecast,
            leakage_uw: l.forecast,
            small_design: a.small_design || l.small_design,
        });

        #[derive(Serialize)]
        struct Both<'a> {
            area: &'a ForecastReport,
            leakage: &'a ForecastReport,
        }
        let json = serde_json::to_string_pretty(&Both {
            area: &area_report,
            leakage: &leak_report,
        })? + "\n";
        self.write("forecast.json", &json)?;
        self.write("forecast_area.csv", &area_report.to_csv())?;
        self.write("forecast_leakage.csv", &leak_report.to_csv())?;
        self.write("forecast_area_plot.dat", &area_report.plot_data())
    }
}

fn load_model(path: Option<&Path>, seeded: RegressionModel, metric: Metric) -> Result<RegressionModel> {
    let Some(path) = path else {
        return Ok(seeded);
    };
    let model = RegressionModel::load(path)?;
    if model.metric != metric {
        return Err(Error::config(format!(
            "{} holds a {} model, expected {}",
            path.display(),
            model.metric.as_str(),
            metric.as_str()
        )));
    }
    Ok(model)
}

/// Validate the config, load its inputs and execute the requested stages in
/// dependency order, then append a record to the results store.
///
/// Problems found before any stage runs come back unwrapped; a failing stage
/// is still recorded in the store and returned as [`Error::Stage`].
pub fn run(cfg: &RunConfig) -> Result<ResultsRecord> {
    cfg.validate()?;
    let stages = cfg.ordered_stages();
    let needs_data = stages.iter().any(|s| *s != Stage::Forecast) || cfg.column.as_ref().is_some_and(|c| c.p.is_none());
    let dataset = match (&cfg.dataset, needs_data) {
        (Some(d), true) => Some(load_ucr(&d.path, d.format())?),
        _ => None,
    };
    let series_len = dataset.as_ref().map(TimeSeriesDataset::series_len);
    let p = match cfg.column {
        Some(_) => cfg.resolve_p(series_len).ok(),
        None => None,
    };
    if cfg.column.is_some() && series_len.is_some() {
        cfg.resolve_p(series_len)?;
    }
    let q = cfg.column.as_ref().map(|c| c.q);

    let weights = match (&cfg.weights, stages.contains(&Stage::Train)) {
        (Some(path), false) if stages.iter().any(|s| matches!(s, Stage::Eval | Stage::Genrtl)) => {
            let (w, header) = read_weights(path)?;
            let col = cfg.column_config(series_len)?;
            if header.p != col.p || header.q != col.q || header.w_max != col.w_max {
                return Err(Error::config(format!(
                    "weights {} are {}x{} with w_max {}, config wants {}x{} with w_max {}",
                    path.display(),
                    header.q,
                    header.p,
                    header.w_max,
                    col.q,
                    col.p,
                    col.w_max
                )));
            }
            Some(w)
        }
        _ => None,
    };

    let record = ResultsRecord {
        run_id: String::new(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config_hash: cfg.hash(),
        status: RunStatus::Success,
        failed_stage: None,
        error: None,
        stages: stages.iter().map(|s| s.as_str().to_string()).collect(),
        dataset: cfg.dataset.as_ref().map(DatasetSection::display_name),
        p,
        q,
        synapse_count: p.zip(q).map(|(p, q)| crate::rtl::synapse_count(p as u64, q as u64)),
        cluster: None,
        cycles_per_sample: None,
        forecast: None,
        artifacts: Vec::new(),
    };
    let mut state = Run {
        cfg,
        dataset,
        weights,
        artifacts: Vec::new(),
        record,
    };

    let mut failure = None;
    for stage in stages {
        if let Err(e) = state.stage(stage) {
            failure = Some(Error::Stage {
                stage: stage.as_str(),
                source: Box::new(e),
            });
            break;
        }
    }
    let mut record = state.record;
    record.artifacts = state.artifacts;
    if let Some(Error::Stage { stage, source }) = &failure {
        record.status = RunStatus::Failed;
        record.failed_stage = Some(stage.to_string());
        record.error = Some(source.to_string());
    }
    append_record(&cfg.store_path(), &mut record)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(record),
    }
}

/// `(synapse_count, value)` pairs from a two-column CSV. A first line that
/// does not parse as numbers is taken as a header.
pub fn parse_points_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format {
            line: n + 1,
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(n + 1, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(Error::Format {
                line,
                msg: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => points.push((x, y)),
            _ if n == 0 => continue,
            (Err(_), _) => {
                return Err(Error::Parse {
                    line,
                    field: rec[0].to_string(),
                })
            }
            (_, Err(_)) => {
                return Err(Error::Parse {
                    line,
                    field: rec[1].to_string(),
                })
            }
        }
    }
    Ok(points)
}

pub fn load_points_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    parse_points_csv(&text)
}
