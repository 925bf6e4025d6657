use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    simulate_column, stdp_update_in_place, wta_inhibit, ColumnConfig, SimMode, StdpParams, WeightMatrix, WtaConfig,
};
use crate::error::{Error, Result};
use crate::tsdata::{encode, EncoderConfig, SpikeVolley, TimeSeriesDataset};

#[derive(Debug, Clone, PartialEq)]
pub enum WeightInit {
    /// Uniform integers in `0..=w_max`.
    Uniform {
        seed: u64,
    },
    Constant(u32),
    Matrix(WeightMatrix),
}

impl WeightInit {
    fn build(&self, cfg: &ColumnConfig) -> Result<WeightMatrix> {
        let w = match self {
            WeightInit::Uniform { seed } => WeightMatrix::uniform(cfg.q, cfg.p, cfg.w_max, *seed)?,
            WeightInit::Constant(v) => WeightMatrix::constant(cfg.q, cfg.p, *v, cfg.w_max)?,
            WeightInit::Matrix(m) => m.clone(),
        };
        check_weights(cfg, &w)?;
        Ok(w)
    }
}

fn check_weights(cfg: &ColumnConfig, w: &WeightMatrix) -> Result<()> {
    if w.q() != cfg.q || w.p() != cfg.p {
        return Err(Error::shape(format!(
            "weight matrix is {}x{}, column is {}x{}",
            w.q(),
            w.p(),
            cfg.q,
            cfg.p
        )));
    }
    if w.w_max() != cfg.w_max {
        return Err(Error::config(format!(
            "weight matrix w_max {} differs from column w_max {}",
            w.w_max(),
            cfg.w_max
        )));
    }
    Ok(())
}

fn encode_all(dataset: &TimeSeriesDataset, enc: &EncoderConfig, cfg: &ColumnConfig) -> Result<Vec<SpikeVolley>> {
    enc.validate()?;
    cfg.validate()?;
    if cfg.p != dataset.series_len() {
        return Err(Error::shape(format!(
            "column has p={} synapses but series length is {}",
            cfg.p,
            dataset.series_len()
        )));
    }
    dataset.samples().iter().map(|s| encode(&s.values, enc)).collect()
}

pub fn train_unsupervised(
    dataset: &TimeSeriesDataset,
    enc: &EncoderConfig,
    cfg: &ColumnConfig,
    wta: &WtaConfig,
    params: &StdpParams,
    epochs: usize,
    init: &WeightInit,
) -> Result<WeightMatrix> {
    train_unsupervised_with(dataset, enc, cfg, wta, params, epochs, init, |_, _| {})
}

/// Like [`train_unsupervised`], calling `observer(step, &weights)` after every
/// sample update. `step` counts samples across epochs.
#[allow(clippy::too_many_arguments)]
pub fn train_unsupervised_with(
    dataset: &TimeSeriesDataset,
    enc: &EncoderConfig,
    cfg: &ColumnConfig,
    wta: &WtaConfig,
    params: &StdpParams,
    epochs: usize,
    init: &WeightInit,
    mut observer: impl FnMut(usize, &WeightMatrix),
) -> Result<WeightMatrix> {
    params.validate()?;
    let volleys = encode_all(dataset, enc, cfg)?;
    let mut w = init.build(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut step = 0;
    for _ in 0..epochs {
        for input in &volleys {
            let out = simulate_column(cfg, &w, input, SimMode::Hybrid)?;
            let winners = wta_inhibit(&out, wta, &mut rng)?;
            stdp_update_in_place(&mut w, input, &winners, params, &mut rng)?;
            observer(step, &w);
            step += 1;
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inference {
    /// Index of the single earliest-spiking neuron per sample.
    pub assignments: Vec<Option<usize>>,
    /// Encoding window plus processing window.
    pub cycles_per_sample: u32,
}

/// Cluster every sample with a 1-winner column. Samples are evaluated in
/// parallel; seeded-random tie-breaks use a per-sample stream.
pub fn infer(
    dataset: &TimeSeriesDataset,
    enc: &EncoderConfig,
    cfg: &ColumnConfig,
    w: &WeightMatrix,
    wta: &WtaConfig,
) -> Result<Inference> {
    check_weights(cfg, w)?;
    let volleys = encode_all(dataset, enc, cfg)?;
    let one = WtaConfig { k: 1, ..*wta };
    let assignments = volleys
        .par_iter()
        .enumerate()
        .map(|(idx, input)| {
            let out = simulate_column(cfg, w, input, SimMode::Hybrid)?;
            let mut rng = ChaCha8Rng::seed_from_u64(idx as u64);
            let won = wta_inhibit(&out, &one, &mut rng)?;
            Ok(won.times().iter().position(Option::is_some))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Inference {
        assignments,
        cycles_per_sample: enc.t_in + cfg.window,
    })
}
