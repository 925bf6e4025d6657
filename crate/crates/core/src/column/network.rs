use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{simulate_column, wta_inhibit, ColumnConfig, SimMode, WeightMatrix, WtaConfig};
use crate::error::{Error, Result};
use crate::tsdata::SpikeVolley;

/// One column of a layer and where its `p` input lines come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub config: ColumnConfig,
    pub wta: WtaConfig,
    /// `inputs[i]` is the previous-layer output line (or network input line
    /// for layer 0) feeding synapse `i`.
    pub inputs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layers: Vec<Vec<ColumnSpec>>,
}

impl NetworkConfig {
    /// Single layer holding one column wired straight to the input lines.
    pub fn single(config: ColumnConfig, wta: WtaConfig) -> Self {
        NetworkConfig {
            layers: vec![vec![ColumnSpec {
                config,
                wta,
                inputs: (0..config.p).collect(),
            }]],
        }
    }

    pub fn validate(&self, input_lines: usize) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::config("network has no layers"));
        }
        let mut available = input_lines;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.is_empty() {
                return Err(Error::config(format!("layer {l} has no columns")));
            }
            for (c, col) in layer.iter().enumerate() {
                col.config.validate()?;
                if col.inputs.len() != col.config.p {
                    return Err(Error::config(format!(
                        "layer {l} column {c}: {} connections for p={}",
                        col.inputs.len(),
                        col.config.p
                    )));
                }
                if let Some(&bad) = col.inputs.iter().find(|&&i| i >= available) {
                    return Err(Error::config(format!(
                        "layer {l} column {c}: connection to line {bad}, only {available} lines available"
                    )));
                }
            }
            available = layer.iter().map(|c| c.config.q).sum();
        }
        Ok(())
    }
}

/// Run every layer in order: simulate and inhibit each column, concatenate the
/// column outputs, and route them into the next layer.
pub fn simulate_network<R: Rng + ?Sized>(
    net: &NetworkConfig,
    weights: &[Vec<WeightMatrix>],
    inputs: &SpikeVolley,
    rng: &mut R,
) -> Result<SpikeVolley> {
    net.validate(inputs.len())?;
    if weights.len() != net.layers.len() || weights.iter().zip(&net.layers).any(|(w, l)| w.len() != l.len()) {
        return Err(Error::shape("one weight matrix per column is required"));
    }
    let mut current = inputs.clone();
    for (layer, layer_weights) in net.layers.iter().zip(weights) {
        let mut times = Vec::new();
        let mut window = 0;
        for (col, w) in layer.iter().zip(layer_weights) {
            let routed: Vec<Option<u32>> = col.inputs.iter().map(|&i| current.get(i)).collect();
            let routed = SpikeVolley::new(routed, current.window())?;
            let out = simulate_column(&col.config, w, &routed, SimMode::Hybrid)?;
            let won = wta_inhibit(&out, &col.wta, rng)?;
            window = window.max(won.window());
            times.extend_from_slice(won.times());
        }
        current = SpikeVolley::new(times, window)?;
    }
    Ok(current)
}
