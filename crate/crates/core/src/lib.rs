//! Temporal neural network (TNN) column toolkit: spike encoding, column
//! simulation and STDP training, clustering evaluation, Verilog and flow
//! script generation, and synapse-count based PPA forecasting.

pub mod cluster;
pub mod column;
pub mod error;
pub mod forecast;
pub mod pipeline;
pub mod rtl;
pub mod tsdata;

pub use error::{Error, Result};
