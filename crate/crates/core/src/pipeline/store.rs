use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterReport;
use crate::error::{Error, Result};
use crate::rtl::Library;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Success,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastValues {
    pub library: Library,
    pub area_um2: f64,
    pub leakage_uw: f64,
    /// The linear model went negative; the design is below its useful range.
    pub small_design: bool,
}

/// One line of the results store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRecord {
    pub run_id: String,
    pub timestamp: String,
    pub config_hash: String,
    pub status: RunStatus,
    #[serde(default)]
    pub failed_stage: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
    pub stages: Vec<String>,
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub synapse_count: Option<u64>,
    #[serde(default)]
    pub cluster: Option<ClusterReport>,
    #[serde(default)]
    pub cycles_per_sample: Option<u32>,
    #[serde(default)]
    pub forecast: Option<ForecastValues>,
    /// Files written by the run, relative to its output directory.
    pub artifacts: Vec<String>,
}

impl ResultsRecord {
    /// Copy with run id and timestamp blanked, for comparing reruns.
    pub fn without_identity(&self) -> ResultsRecord {
        ResultsRecord {
            run_id: String::new(),
            timestamp: String::new(),
            ..self.clone()
        }
    }
}

/// Append `record` to the JSON-lines store under an exclusive file lock,
/// assigning the next sequential run id. Existing lines are never rewritten.
pub fn append_record(store: &Path, record: &mut ResultsRecord) -> Result<()> {
    if let Some(dir) = store.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut file = OpenOptions::new()
        .read(true)
        .append(true)
        .create(true)
        .open(store)
        .map_err(|e| Error::io(store, e))?;
    file.lock().map_err(|e| Error::io(store, e))?;
    let result = append_locked(&mut file, store, record);
    let _ = file.unlock();
    result
}

fn append_locked(file: &mut File, store: &Path, record: &mut ResultsRecord) -> Result<()> {
    file.seek(SeekFrom::Start(0)).map_err(|e| Error::io(store, e))?;
    let mut existing = 0usize;
    let mut ends_with_newline = true;
    for line in BufReader::new(&*file).split(b'\n') {
        let line = line.map_err(|e| Error::io(store, e))?;
        if !line.iter().all(u8::is_ascii_whitespace) {
            existing += 1;
        }
    }
    let len = file.metadata().map_err(|e| Error::io(store, e))?.len();
    if len > 0 {
        use std::io::Read;
        let mut last = [0u8];
        file.seek(SeekFrom::Start(len - 1)).map_err(|e| Error::io(store, e))?;
        file.read_exact(&mut last).map_err(|e| Error::io(store, e))?;
        ends_with_newline = last[0] == b'\n';
    }
    record.run_id = format!("run-{:06}", existing + 1);
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    if !ends_with_newline {
        line.insert(0, '\n');
    }
    file.write_all(line.as_bytes()).map_err(|e| Error::io(store, e))?;
    file.flush().map_err(|e| Error::io(store, e))
}

pub fn read_store(store: &Path) -> Result<Vec<ResultsRecord>> {
    let text = std::fs::read_to_string(store).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(store.to_path_buf()),
        _ => Error::io(store, e),
    })?;
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ResultsRecord = serde_json::from_str(line).map_err(|e| Error::Format {
            line: n + 1,
            msg: e.to_string(),
        })?;
        records.push(rec);
    }
    records.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::config(format!("unknown report format `{s}` (table, csv, json)"))),
        }
    }
}

const COLUMNS: [&str; 11] = [
    "run_id",
    "status",
    "dataset",
    "p",
    "q",
    "synapses",
    "rand_index",
    "baseline_ri",
    "normalized",
    "fc_area_um2",
    "fc_leakage_uw",
];

fn cells(r: &ResultsRecord) -> [String; 11] {
    let num = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
    let int = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
    let status = match r.status {
        RunStatus::Success => "success",
        RunStatus::Failed => "failed",
    };
    [
        r.run_id.clone(),
        status.to_string(),
        r.dataset.clone().unwrap_or_default(),
        int(r.p.map(|v| v as u64)),
        int(r.q.map(|v| v as u64)),
        int(r.synapse_count),
        num(r.cluster.as_ref().map(|c| c.rand_index)),
        num(r.cluster.as_ref().map(|c| c.baseline_rand_index)),
        num(r.cluster.as_ref().and_then(|c| c.normalized)),
        r.forecast
            .as_ref()
            .map(|f| format!("{:.2}", f.area_um2))
            .unwrap_or_default(),
        r.forecast
            .as_ref()
            .map(|f| format!("{:.3}", f.leakage_uw))
            .unwrap_or_default(),
    ]
}

/// Render every record in the store, ordered by run id.
pub fn report(store: &Path, format: ReportFormat) -> Result<String> {
    let records = read_store(store)?;
    render(&records, format)
}

pub fn render(records: &[ResultsRecord], format: ReportFormat) -> Result<String> {
    let rows: Vec<[String; 11]> = records.iter().map(cells).collect();
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(records)?;
            out.push('\n');
        }
        ReportFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            let header = wtr.write_record(COLUMNS);
            header
                .and_then(|_| rows.iter().try_for_each(|r| wtr.write_record(r)))
                .map_err(|e| Error::config(format!("csv: {e}")))?;
            let bytes = wtr.into_inner().map_err(|e| Error::config(format!("csv: {e}")))?;
            out = String::from_utf8(bytes).expect("csv is utf-8");
        }
        ReportFormat::Table => {
            let mut widths = COLUMNS.map(str::len);
            for row in &rows {
                for (w, c) in widths.iter_mut().zip(row) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |out: &mut String, cols: &[&str]| {
                let padded: Vec<String> = cols.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
                writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
            };
            line(&mut out, &COLUMNS);
            for row in &rows {
                let cols: Vec<&str> = row.iter().map(String::as_str).collect();
                line(&mut out, &cols);
            }
        }
    }
    Ok(out)
}
