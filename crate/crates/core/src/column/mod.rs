//! Functional model of a p×q temporal neural network column.
//!
//! A column has `q` neurons, each with `p` integer-weighted synapses fed by the
//! same input volley. Neurons integrate incoming spikes according to a
//! response function and emit at most one output spike per window. Lateral
//! inhibition (WTA) keeps the earliest spikes and STDP adjusts weights from
//! the relative timing of input and winning output spikes.

mod network;
mod response;
mod stdp;
mod train;
mod weights;
mod wta;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use network::{simulate_network, ColumnSpec, NetworkConfig};
pub use response::{neuron_response, neuron_response_hybrid, simulate_column, SimMode};
pub use stdp::{stdp_update, stdp_update_in_place, StdpParams};
pub use train::{infer, train_unsupervised, train_unsupervised_with, Inference, WeightInit};
pub use weights::{read_weights, write_weights, WeightHeader, WeightMatrix};
pub use wta::{wta_inhibit, TieBreak, WtaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseKind {
    /// Each input contributes a ramp rising one unit per cycle, capped at its weight.
    #[default]
    RampNoLeak,
    /// Each input contributes its full weight from the arrival cycle on.
    StepNoLeak,
    /// Leaky integrate-and-fire with a right-shift leak per cycle.
    Lif,
}

impl ResponseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::RampNoLeak => "ramp-no-leak",
            ResponseKind::StepNoLeak => "step-no-leak",
            ResponseKind::Lif => "lif",
        }
    }
}

impl FromStr for ResponseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramp-no-leak" | "rnl" => Ok(ResponseKind::RampNoLeak),
            "step-no-leak" | "snl" => Ok(ResponseKind::StepNoLeak),
            "lif" => Ok(ResponseKind::Lif),
            other => Err(Error::config(format!("unknown response kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ResponseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnConfig {
    /// Synapses per neuron.
    pub p: usize,
    /// Neurons in the column.
    pub q: usize,
    pub theta: u32,
    pub w_max: u32,
    /// Simulated cycles per sample.
    pub window: u32,
    #[serde(default)]
    pub response: ResponseKind,
    #[serde(default)]
    pub lif_leak_shift: u32,
}

impl ColumnConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.p >= 1, "p"),
            (self.q >= 1, "q"),
            (self.theta >= 1, "theta"),
            (self.w_max >= 1, "w_max"),
            (self.window >= 1, "window"),
        ];
        for (ok, name) in checks {
            if !ok {
                return Err(Error::config(format!("column {name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn synapse_count(&self) -> usize {
        self.p * self.q
    }
}
