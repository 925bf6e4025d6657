//! Python bindings. Weight matrices cross the boundary as lists of rows and
//! spike volleys as lists of `int | None`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tnngen_core::cluster::{self, Partition};
use tnngen_core::column::{
    self, ColumnConfig, ResponseKind, SimMode, StdpParams, TieBreak, WeightInit, WeightMatrix, WtaConfig,
};
use tnngen_core::forecast::{self, Metric};
use tnngen_core::pipeline::{self, ReportFormat, RunConfig};
use tnngen_core::rtl::{self, HardwareConfig, Library};
use tnngen_core::tsdata::{self, EncoderConfig, Polarity, SpikeVolley, TimeSeriesDataset, UcrFormat};
use tnngen_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::NotFound(p) => PyFileNotFoundError::new_err(p.display().to_string()),
        Error::Stage { .. } | Error::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for tnngen_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn volley(times: Vec<Option<u32>>, window: u32) -> PyResult<SpikeVolley> {
    SpikeVolley::new(times, window).py()
}

/// A labelled UCR-style dataset.
#[pyclass(name = "Dataset", module = "tnngen", frozen)]
struct PyDataset {
    inner: TimeSeriesDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(labels: Vec<i64>, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        if labels.len() != rows.len() {
            return Err(PyValueError::new_err("labels and rows differ in length"));
        }
        let inner = TimeSeriesDataset::from_rows(labels.into_iter().zip(rows).collect()).py()?;
        Ok(PyDataset { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn series_len(&self) -> usize {
        self.inner.series_len()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    /// Dense class index per sample.
    fn labels(&self) -> Vec<usize> {
        self.inner.labels()
    }

    /// Original label values, indexed by dense class.
    fn class_labels(&self) -> Vec<i64> {
        self.inner.class_labels().to_vec()
    }

    fn values(&self, index: usize) -> PyResult<Vec<f64>> {
        self.inner
            .samples()
            .get(index)
            .map(|s| s.values.clone())
            .ok_or_else(|| PyValueError::new_err("sample index out of range"))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(samples={}, series_len={}, classes={})",
            self.inner.len(),
            self.inner.series_len(),
            self.inner.num_classes()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (path, format=None))]
fn load_ucr(path: PathBuf, format: Option<&str>) -> PyResult<PyDataset> {
    let fmt = match format {
        Some(f) => f.parse::<UcrFormat>().py()?,
        None => UcrFormat::from_path(&path),
    };
    Ok(PyDataset {
        inner: tsdata::load_ucr(&path, fmt).py()?,
    })
}

/// Two-class set: class 0 high on the first half, class 1 on the second.
#[pyfunction]
#[pyo3(signature = (n, length, noise=0.3, seed=0))]
fn synthetic_two_class(n: usize, length: usize, noise: f64, seed: u64) -> PyResult<PyDataset> {
    Ok(PyDataset {
        inner: tsdata::synthetic_two_class(n, length, noise, seed).py()?,
    })
}

#[pyfunction]
fn znormalize(values: Vec<f64>) -> PyResult<Vec<f64>> {
    tsdata::znormalize(&values).py()
}

/// Encode one series into spike times in `0..t_in`.
#[pyfunction]
#[pyo3(signature = (values, t_in, znorm=false, polarity="high-early"))]
fn encode(values: Vec<f64>, t_in: u32, znorm: bool, polarity: &str) -> PyResult<Vec<Option<u32>>> {
    let cfg = EncoderConfig::new(t_in, znorm, polarity.parse::<Polarity>().py()?).py()?;
    Ok(tsdata::encode(&values, &cfg).py()?.into_times())
}

#[allow(clippy::too_many_arguments)]
fn column_config(
    weights: &[Vec<u32>],
    theta: u32,
    window: u32,
    w_max: u32,
    response: &str,
    lif_leak_shift: u32,
) -> PyResult<(ColumnConfig, WeightMatrix)> {
    let w = WeightMatrix::from_rows(weights.to_vec(), w_max).py()?;
    let cfg = ColumnConfig {
        p: w.p(),
        q: w.q(),
        theta,
        w_max,
        window,
        response: response.parse::<ResponseKind>().py()?,
        lif_leak_shift,
    };
    cfg.validate().py()?;
    Ok((cfg, w))
}

/// Spike time of one neuron, or None.
#[pyfunction]
#[pyo3(signature = (weights, inputs, theta, window, response="ramp-no-leak", lif_leak_shift=0, hybrid=true))]
fn neuron_response(
    weights: Vec<u32>,
    inputs: Vec<Option<u32>>,
    theta: u32,
    window: u32,
    response: &str,
    lif_leak_shift: u32,
    hybrid: bool,
) -> PyResult<Option<u32>> {
    let kind = response.parse::<ResponseKind>().py()?;
    let input_window = inputs.iter().flatten().max().map_or(1, |t| t + 1);
    let inputs = volley(inputs, input_window)?;
    let f = if hybrid {
        column::neuron_response_hybrid
    } else {
        column::neuron_response
    };
    f(kind, &weights, &inputs, theta, window, lif_leak_shift).py()
}

/// Output spike times of every neuron in a column.
#[pyfunction]
#[pyo3(signature = (weights, inputs, theta, window, w_max=7, response="ramp-no-leak", lif_leak_shift=0, hybrid=true))]
#[allow(clippy::too_many_arguments)]
fn simulate_column(
    weights: Vec<Vec<u32>>,
    inputs: Vec<Option<u32>>,
    theta: u32,
    window: u32,
    w_max: u32,
    response: &str,
    lif_leak_shift: u32,
    hybrid: bool,
) -> PyResult<Vec<Option<u32>>> {
    let (cfg, w) = column_config(&weights, theta, window, w_max, response, lif_leak_shift)?;
    let input_window = inputs.iter().flatten().max().map_or(1, |t| t + 1);
    let mode = if hybrid {
        SimMode::Hybrid
    } else {
        SimMode::CycleAccurate
    };
    let out = column::simulate_column(&cfg, &w, &volley(inputs, input_window)?, mode).py()?;
    Ok(out.into_times())
}

/// Keep the `k` earliest spikes.
#[pyfunction]
#[pyo3(signature = (times, k=1, tie_break="lowest-index", seed=0))]
fn wta_inhibit(times: Vec<Option<u32>>, k: usize, tie_break: &str, seed: u64) -> PyResult<Vec<Option<u32>>> {
    let window = times.iter().flatten().max().map_or(1, |t| t + 1);
    let wta = WtaConfig {
        k,
        tie_break: tie_break.parse::<TieBreak>().py()?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(column::wta_inhibit(&volley(times, window)?, &wta, &mut rng)
        .py()?
        .into_times())
}

/// One STDP update; returns the new weight rows.
#[pyfunction]
#[pyo3(signature = (weights, inputs, winners, w_max, u_capture=1.0, u_backoff=1.0, u_search=1.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn stdp_update(
    weights: Vec<Vec<u32>>,
    inputs: Vec<Option<u32>>,
    winners: Vec<Option<u32>>,
    w_max: u32,
    u_capture: f64,
    u_backoff: f64,
    u_search: f64,
    seed: u64,
) -> PyResult<Vec<Vec<u32>>> {
    let w = WeightMatrix::from_rows(weights, w_max).py()?;
    let window = inputs.iter().chain(&winners).flatten().max().map_or(1, |t| t + 1);
    let params = StdpParams {
        u_capture,
        u_backoff,
        u_search,
        seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = column::stdp_update(
        &w,
        &volley(inputs, window)?,
        &volley(winners, window)?,
        &params,
        &mut rng,
    )
    .py()?;
    Ok(out.to_rows())
}

/// Unsupervised STDP training over a dataset; returns weight rows.
#[pyfunction]
#[pyo3(signature = (dataset, q, theta, t_in, window, w_max=7, epochs=1, response="ramp-no-leak", lif_leak_shift=0,
                    znorm=false, k=1, u_capture=1.0, u_backoff=1.0, u_search=1.0, seed=0, init=None))]
#[allow(clippy::too_many_arguments)]
fn train(
    dataset: &PyDataset,
    q: usize,
    theta: u32,
    t_in: u32,
    window: u32,
    w_max: u32,
    epochs: usize,
    response: &str,
    lif_leak_shift: u32,
    znorm: bool,
    k: usize,
    u_capture: f64,
    u_backoff: f64,
    u_search: f64,
    seed: u64,
    init: Option<Vec<Vec<u32>>>,
) -> PyResult<Vec<Vec<u32>>> {
    let cfg = ColumnConfig {
        p: dataset.inner.series_len(),
        q,
        theta,
        w_max,
        window,
        response: response.parse::<ResponseKind>().py()?,
        lif_leak_shift,
    };
    let enc = EncoderConfig::new(t_in, znorm, Polarity::HighEarly).py()?;
    let wta = WtaConfig {
        k,
        tie_break: TieBreak::LowestIndex,
    };
    let params = StdpParams {
        u_capture,
        u_backoff,
        u_search,
        seed,
    };
    let init = match init {
        Some(rows) => WeightInit::Matrix(WeightMatrix::from_rows(rows, w_max).py()?),
        None => WeightInit::Uniform { seed },
    };
    let w = column::train_unsupervised(&dataset.inner, &enc, &cfg, &wta, &params, epochs, &init).py()?;
    Ok(w.to_rows())
}

/// Winning neuron per sample (None when no neuron fires).
#[pyfunction]
#[pyo3(signature = (dataset, weights, theta, t_in, window, w_max=7, response="ramp-no-leak", lif_leak_shift=0, znorm=false))]
#[allow(clippy::too_many_arguments)]
fn infer(
    dataset: &PyDataset,
    weights: Vec<Vec<u32>>,
    theta: u32,
    t_in: u32,
    window: u32,
    w_max: u32,
    response: &str,
    lif_leak_shift: u32,
    znorm: bool,
) -> PyResult<Vec<Option<usize>>> {
    let (cfg, w) = column_config(&weights, theta, window, w_max, response, lif_leak_shift)?;
    let enc = EncoderConfig::new(t_in, znorm, Polarity::HighEarly).py()?;
    let out = column::infer(&dataset.inner, &enc, &cfg, &w, &WtaConfig::default()).py()?;
    Ok(out.assignments)
}

/// Rand index of two labelings. `None` entries count as one shared cluster.
#[pyfunction]
fn rand_index(truth: Vec<Option<usize>>, pred: Vec<Option<usize>>) -> PyResult<f64> {
    cluster::rand_index(&Partition::from_optional(&truth), &Partition::from_optional(&pred)).py()
}

#[pyfunction]
fn normalized_rand(method_ri: f64, baseline_ri: f64) -> PyResult<f64> {
    cluster::normalized_rand(method_ri, baseline_ri).py()
}

#[pyfunction]
#[pyo3(signature = (dataset, k, seed=0, max_iters=100, znorm=true))]
fn kmeans(dataset: &PyDataset, k: usize, seed: u64, max_iters: usize, znorm: bool) -> PyResult<Vec<usize>> {
    Ok(cluster::kmeans(&dataset.inner, k, seed, max_iters, znorm)
        .py()?
        .assignments)
}

#[pyfunction]
fn synapse_count(p: u64, q: u64) -> u64 {
    rtl::synapse_count(p, q)
}

/// `(area_um2, leakage_uW)` from the seeded TNN7 trend lines.
#[pyfunction]
fn forecast_ppa(synapse_count: u64) -> (f64, f64) {
    let (area, leak) = forecast::seeded_models();
    (area.predict(synapse_count), leak.predict(synapse_count))
}

/// Least-squares `(slope, intercept)` through `(synapse_count, value)` points.
#[pyfunction]
#[pyo3(signature = (points, metric="area", library="tnn7"))]
fn fit_forecast(points: Vec<(f64, f64)>, metric: &str, library: &str) -> PyResult<(f64, f64)> {
    let m = forecast::fit(
        &points,
        metric.parse::<Metric>().py()?,
        library.parse::<Library>().py()?,
    )
    .py()?;
    Ok((m.slope, m.intercept))
}

#[pyfunction]
fn forecast_error(forecast: f64, actual: f64) -> PyResult<f64> {
    forecast::forecast_error(forecast, actual).py()
}

/// Verilog for a trained column: `{file name: source}`, including the
/// testbench when `stimuli` are given.
#[pyfunction]
#[pyo3(signature = (weights, theta, window, w_max=7, design="tnn_column", library="tnn7", macro_mode=false,
                    response="ramp-no-leak", lif_leak_shift=0, stimuli=None))]
#[allow(clippy::too_many_arguments)]
fn generate_rtl(
    weights: Vec<Vec<u32>>,
    theta: u32,
    window: u32,
    w_max: u32,
    design: &str,
    library: &str,
    macro_mode: bool,
    response: &str,
    lif_leak_shift: u32,
    stimuli: Option<Vec<Vec<Option<u32>>>>,
) -> PyResult<BTreeMap<String, String>> {
    let (cfg, w) = column_config(&weights, theta, window, w_max, response, lif_leak_shift)?;
    let mut hw = HardwareConfig::for_column(design, &cfg, library.parse::<Library>().py()?);
    hw.macro_mode = macro_mode;
    let mut files = rtl::generate_column_rtl(&hw, &w).py()?.files;
    if let Some(stimuli) = stimuli {
        let vols = stimuli
            .into_iter()
            .map(|s| {
                let win = s.iter().flatten().max().map_or(1, |t| t + 1);
                volley(s, win)
            })
            .collect::<PyResult<Vec<_>>>()?;
        files.insert(format!("{design}_tb.v"), rtl::generate_testbench(&hw, &w, &vols).py()?);
    }
    for (name, text) in rtl::generate_flow_scripts(&hw).py()?.files {
        files.insert(name, text);
    }
    Ok(files)
}

/// Execute a TOML run config; returns the results record as JSON text.
#[pyfunction]
#[pyo3(signature = (config, out=None, seed=None))]
fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> PyResult<String> {
    let mut cfg = RunConfig::load(&config).py()?;
    if let Some(out) = out {
        cfg.out = out;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let record = pipeline::run(&cfg).py()?;
    serde_json::to_string(&record).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
#[pyo3(signature = (store, format="table"))]
fn report(store: PathBuf, format: &str) -> PyResult<String> {
    pipeline::report(&store, format.parse::<ReportFormat>().py()?).py()
}

#[pymodule]
fn tnngen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(load_ucr, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_two_class, m)?)?;
    m.add_function(wrap_pyfunction!(znormalize, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(neuron_response, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_column, m)?)?;
    m.add_function(wrap_pyfunction!(wta_inhibit, m)?)?;
    m.add_function(wrap_pyfunction!(stdp_update, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_rand, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(synapse_count, m)?)?;
    m.add_function(wrap_pyfunction!(forecast_ppa, m)?)?;
    m.add_function(wrap_pyfunction!(fit_forecast, m)?)?;
    m.add_function(wrap_pyfunction!(forecast_error, m)?)?;
    m.add_function(wrap_pyfunction!(generate_rtl, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    Ok(())
}
