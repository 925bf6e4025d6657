//! Verilog and flow-script generation for a trained column.
//!
//! The emitted column is a single-clock design. A `start` pulse opens a
//! processing window of `window` cycles; during cycle `t` the caller raises
//! `spike_in[i]` if input line `i` spikes at time `t`. Each neuron latches the
//! first cycle its potential reaches `theta`; the WTA block records the
//! earliest firing neuron (lowest index on ties). One cycle after the window
//! closes `done` pulses and, when `learn_en` is high, every synapse applies
//! its STDP update.

mod flow;
mod testbench;
mod verilog;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::column::{ColumnConfig, ResponseKind, StdpParams, WeightMatrix};
use crate::error::{Error, Result};

pub use flow::{generate_flow_scripts, generate_flow_scripts_with_env, FlowScriptBundle};
pub use testbench::{generate_testbench, TB_FAIL_PREFIX, TB_PASS_PREFIX};
pub use verilog::generate_column_rtl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Library {
    Freepdk45,
    Asap7,
    Tnn7,
}

impl Library {
    pub const ALL: [Library; 3] = [Library::Freepdk45, Library::Asap7, Library::Tnn7];

    pub fn as_str(self) -> &'static str {
        match self {
            Library::Freepdk45 => "freepdk45",
            Library::Asap7 => "asap7",
            Library::Tnn7 => "tnn7",
        }
    }

    /// Environment variable naming the library installation root.
    pub fn root_var(self) -> &'static str {
        match self {
            Library::Freepdk45 => "FREEPDK45_ROOT",
            Library::Asap7 => "ASAP7_ROOT",
            Library::Tnn7 => "TNN7_ROOT",
        }
    }
}

impl fmt::Display for Library {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Library {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Library::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unsupported library `{s}`")))
    }
}

/// Number of synapses (and synapse instances) in a p×q column.
pub fn synapse_count(p: u64, q: u64) -> u64 {
    p * q
}

/// Minimum bit width able to hold `max_value`, never below 1.
pub fn bits_for(max_value: u64) -> u32 {
    (64 - max_value.leading_zeros()).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardwareConfig {
    /// Top-level module name; also the stem of emitted file names.
    pub design: String,
    pub p: usize,
    pub q: usize,
    pub theta: u32,
    pub w_max: u32,
    pub window: u32,
    pub response: ResponseKind,
    pub lif_leak_shift: u32,
    pub weight_bits: u32,
    /// Width of time codes; the all-ones code is the no-spike sentinel and
    /// must lie outside `0..window`.
    pub time_bits: u32,
    pub library: Library,
    /// Replace the WTA and STDP blocks with TNN7 macro cells.
    pub macro_mode: bool,
    pub clock_period_ns: f64,
    pub stdp: StdpParams,
}

impl HardwareConfig {
    pub fn for_column(design: impl Into<String>, cfg: &ColumnConfig, library: Library) -> Self {
        HardwareConfig {
            design: design.into(),
            p: cfg.p,
            q: cfg.q,
            theta: cfg.theta,
            w_max: cfg.w_max,
            window: cfg.window,
            response: cfg.response,
            lif_leak_shift: cfg.lif_leak_shift,
            weight_bits: bits_for(cfg.w_max as u64),
            time_bits: bits_for(cfg.window as u64),
            library,
            macro_mode: false,
            clock_period_ns: 1.0,
            stdp: StdpParams::deterministic(0),
        }
    }

    pub fn column_config(&self) -> ColumnConfig {
        ColumnConfig {
            p: self.p,
            q: self.q,
            theta: self.theta,
            w_max: self.w_max,
            window: self.window,
            response: self.response,
            lif_leak_shift: self.lif_leak_shift,
        }
    }

    pub fn synapse_count(&self) -> u64 {
        synapse_count(self.p as u64, self.q as u64)
    }

    /// Time code meaning "no spike".
    pub fn no_spike(&self) -> u64 {
        (1u64 << self.time_bits) - 1
    }

    pub fn index_bits(&self) -> u32 {
        bits_for(self.q.saturating_sub(1) as u64)
    }

    pub(crate) fn potential_bits(&self) -> u32 {
        let max_sum = self.p as u64 * ((1u64 << self.weight_bits) - 1);
        bits_for(self.theta as u64 + max_sum)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::shape(format!(
                "column must be at least 1x1, got p={} q={}",
                self.p, self.q
            )));
        }
        let ident_ok = self
            .design
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && self.design.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ident_ok {
            return Err(Error::config(format!(
                "design name `{}` is not a Verilog identifier",
                self.design
            )));
        }
        if !(1..=31).contains(&self.weight_bits) || !(1..=31).contains(&self.time_bits) {
            return Err(Error::config("weight_bits and time_bits must be in 1..=31"));
        }
        if self.theta == 0 || self.w_max == 0 || self.window == 0 {
            return Err(Error::config("theta, w_max and window must be at least 1"));
        }
        if self.w_max as u64 > (1u64 << self.weight_bits) - 1 {
            return Err(Error::Range(format!(
                "w_max {} does not fit in {} weight bits",
                self.w_max, self.weight_bits
            )));
        }
        if self.window as u64 > self.no_spike() {
            return Err(Error::config(format!(
                "window {} needs more than {} time bits to keep a no-spike code",
                self.window, self.time_bits
            )));
        }
        if self.macro_mode && self.library != Library::Tnn7 {
            return Err(Error::config("macro mode requires the tnn7 library"));
        }
        if !(self.clock_period_ns > 0.0 && self.clock_period_ns.is_finite()) {
            return Err(Error::config("clock period must be positive"));
        }
        self.stdp.validate()
    }

    pub(crate) fn check_weights(&self, w: &WeightMatrix) -> Result<()> {
        if w.q() != self.q || w.p() != self.p {
            return Err(Error::shape(format!(
                "weight matrix is {}x{}, hardware column is {}x{}",
                w.q(),
                w.p(),
                self.q,
                self.p
            )));
        }
        let limit = (1u64 << self.weight_bits) - 1;
        if w.max_weight() as u64 > limit || w.max_weight() > self.w_max {
            return Err(Error::Range(format!(
                "weight {} does not fit in {} bits / w_max {}",
                w.max_weight(),
                self.weight_bits,
                self.w_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleCount {
    pub module: String,
    pub instances: u64,
}

/// Emitted Verilog sources keyed by file name, plus instance counts per
/// module type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtlBundle {
    pub files: BTreeMap<String, String>,
    pub manifest: Vec<ModuleCount>,
}

impl RtlBundle {
    pub fn instances_of(&self, module: &str) -> u64 {
        self.manifest
            .iter()
            .filter(|m| m.module == module)
            .map(|m| m.instances)
            .sum()
    }
}
