//! Linear forecasting of post-layout area and leakage from synapse count.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rtl::Library;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "area_um2")]
    AreaUm2,
    #[serde(rename = "leakage_uW")]
    LeakageUw,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AreaUm2 => "area_um2",
            Metric::LeakageUw => "leakage_uW",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "area" | "area_um2" => Ok(Metric::AreaUm2),
            "leakage" | "leakage_uW" | "leakage_uw" => Ok(Metric::LeakageUw),
            other => Err(Error::config(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionModel {
    pub slope: f64,
    pub intercept: f64,
    pub metric: Metric,
    pub library: Library,
    #[serde(default)]
    pub note: String,
}

impl RegressionModel {
    pub fn predict(&self, synapse_count: u64) -> f64 {
        self.slope * synapse_count as f64 + self.intercept
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        let model: RegressionModel = serde_json::from_str(&text)?;
        if !model.slope.is_finite() || !model.intercept.is_finite() {
            return Err(Error::Range("model coefficients must be finite".into()));
        }
        Ok(model)
    }
}

/// Published 7nm TNN7 trend lines: `(area, leakage)`.
pub fn seeded_models() -> (RegressionModel, RegressionModel) {
    let note = "published TNN7 post-layout trend line";
    (
        RegressionModel {
            slope: 5.56,
            intercept: -94.9,
            metric: Metric::AreaUm2,
            library: Library::Tnn7,
            note: note.into(),
        },
        RegressionModel {
            slope: 0.00541,
            intercept: -0.725,
            metric: Metric::LeakageUw,
            library: Library::Tnn7,
            note: note.into(),
        },
    )
}

pub fn predict(model: &RegressionModel, synapse_count: u64) -> f64 {
    model.predict(synapse_count)
}

/// Ordinary least squares over `(synapse_count, value)` points.
pub fn fit(points: &[(f64, f64)], metric: Metric, library: Library) -> Result<RegressionModel> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit(points[0].0));
    }
    let slope = sxy / sxx;
    Ok(RegressionModel {
        slope,
        intercept: mean_y - slope * mean_x,
        metric,
        library,
        note: format!("least-squares fit over {} points", points.len()),
    })
}

/// Signed relative error in percent: `100 * (forecast - actual) / actual`.
pub fn forecast_error(forecast: f64, actual: f64) -> Result<f64> {
    if actual == 0.0 {
        return Err(Error::DegenerateActual);
    }
    Ok(100.0 * (forecast - actual) / actual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub name: String,
    pub synapse_count: u64,
    pub forecast: f64,
    pub actual: Option<f64>,
    pub error_percent: Option<f64>,
    /// Set when the line extrapolates below zero for a very small design.
    pub small_design: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub metric: Metric,
    pub library: Library,
    pub slope: f64,
    pub intercept: f64,
    pub rows: Vec<ForecastRow>,
}

impl ForecastReport {
    pub fn new(model: &RegressionModel) -> Self {
        ForecastReport {
            metric: model.metric,
            library: model.library,
            slope: model.slope,
            intercept: model.intercept,
            rows: Vec::new(),
        }
    }

    /// Forecast one design; the error is filled in only when an actual value
    /// is known and non-zero.
    pub fn push(&mut self, name: impl Into<String>, synapse_count: u64, actual: Option<f64>) {
        let forecast = self.slope * synapse_count as f64 + self.intercept;
        self.rows.push(ForecastRow {
            name: name.into(),
            synapse_count,
            forecast,
            actual,
            error_percent: actual.and_then(|a| forecast_error(forecast, a).ok()),
            small_design: forecast < 0.0,
        });
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        wtr.write_record([
            "name",
            "synapse_count",
            "forecast",
            "actual",
            "error_percent",
            "small_design",
        ])
        .expect("in-memory csv write");
        for r in &self.rows {
            wtr.serialize(r).expect("in-memory csv write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Scatter points of known actuals followed by the two trendline
    /// endpoints, for external plotting.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("# series x y\n");
        for r in &self.rows {
            if let Some(a) = r.actual {
                writeln!(out, "actual {} {}", r.synapse_count, a).unwrap();
            }
        }
        let xs = self.rows.iter().map(|r| r.synapse_count);
        if let (Some(lo), Some(hi)) = (xs.clone().min(), xs.max()) {
            for x in [lo, hi] {
                writeln!(out, "trend {} {}", x, self.slope * x as f64 + self.intercept).unwrap();
            }
        }
        out
    }
}

/// Published column configurations and their post-layout results.
pub mod reference {
    use super::{Library, Metric};

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Design {
        pub name: &'static str,
        pub p: u64,
        pub q: u64,
        pub tnn7_area_um2: f64,
        pub tnn7_leakage_uw: f64,
        pub asap7_area_um2: f64,
        pub asap7_leakage_uw: f64,
        pub freepdk45_area_um2: f64,
        pub freepdk45_leakage_mw: f64,
        /// Published forecast area.
        pub fc_area_um2: f64,
        /// Published forecast leakage; omitted for the two smallest designs.
        pub fc_leakage_uw: Option<f64>,
        /// Published clustering rand index of the TNN column.
        pub tnn_rand_index: f64,
    }

    impl Design {
        pub fn synapse_count(&self) -> u64 {
            self.p * self.q
        }

        /// Post-layout result for one library, with leakage in uW.
        pub fn actual(&self, metric: Metric, library: Library) -> Option<f64> {
            Some(match (metric, library) {
                (Metric::AreaUm2, Library::Tnn7) => self.tnn7_area_um2,
                (Metric::AreaUm2, Library::Asap7) => self.asap7_area_um2,
                (Metric::AreaUm2, Library::Freepdk45) => self.freepdk45_area_um2,
                (Metric::LeakageUw, Library::Tnn7) => self.tnn7_leakage_uw,
                (Metric::LeakageUw, Library::Asap7) => self.asap7_leakage_uw,
                (Metric::LeakageUw, Library::Freepdk45) => self.freepdk45_leakage_mw * 1000.0,
            })
        }
    }

    /// `(synapse_count, actual)` for every published design.
    pub fn points(metric: Metric, library: Library) -> Vec<(f64, f64)> {
        DESIGNS
            .iter()
            .filter_map(|d| d.actual(metric, library).map(|a| (d.synapse_count() as f64, a)))
            .collect()
    }

    macro_rules! design {
        ($name:expr, $p:expr, $q:expr, $ta:expr, $tl:expr, $aa:expr, $al:expr, $fa:expr, $fl:expr, $fca:expr, $fcl:expr, $ri:expr) => {
            Design {
                name: $name,
                p: $p,
                q: $q,
                tnn7_area_um2: $ta,
                tnn7_leakage_uw: $tl,
                asap7_area_um2: $aa,
                asap7_leakage_uw: $al,
                freepdk45_area_um2: $fa,
                freepdk45_leakage_mw: $fl,
                fc_area_um2: $fca,
                fc_leakage_uw: $fcl,
                tnn_rand_index: $ri,
            }
        };
    }

    #[allow(clippy::approx_constant)]
    pub const DESIGNS: [Design; 7] = [
        design!(
            "SonyAIBORobotSurface2",
            65,
            2,
            692.06,
            0.57,
            1028.67,
            0.961,
            14284.466,
            0.299,
            627.9,
            None,
            0.6066
        ),
        design!("ECG200", 96, 2, 1015.8, 0.84, 1513.05, 1.41, 21036.08, 0.442, 972.62, None, 0.6648),
        design!(
            "Wafer",
            152,
            2,
            1608.52,
            1.34,
            2394.01,
            2.26,
            33868.98,
            0.717,
            1595.34,
            Some(0.92),
            0.555
        ),
        design!(
            "ToeSegmentation2",
            343,
            2,
            3682.63,
            3.14,
            5388.72,
            5.09,
            75654.82,
            1.59,
            3719.26,
            Some(2.98),
            0.6683
        ),
        design!(
            "Lightning2",
            637,
            2,
            6860.68,
            5.84,
            10184.45,
            9.81,
            140502.84,
            2.95,
            6988.54,
            Some(6.16),
            0.577
        ),
        design!(
            "Beef",
            470,
            5,
            12634.83,
            11.06,
            18298.1,
            17.4,
            259167.4,
            5.452,
            12971.1,
            Some(11.98),
            0.731
        ),
        design!(
            "WordSynonyms",
            270,
            25,
            35303.88,
            31.13,
            51158.20,
            46.69,
            744422.4,
            15.66,
            37435.1,
            Some(35.77),
            0.8473
        ),
    ];

    pub fn by_synapse_count(count: u64) -> Option<&'static Design> {
        DESIGNS.iter().find(|d| d.synapse_count() == count)
    }
}
