use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsdata::SpikeVolley;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    SeededRandom,
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowest-index" => Ok(TieBreak::LowestIndex),
            "seeded-random" => Ok(TieBreak::SeededRandom),
            other => Err(Error::config(format!("unknown tie-break `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WtaConfig {
    pub k: usize,
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl Default for WtaConfig {
    fn default() -> Self {
        WtaConfig {
            k: 1,
            tie_break: TieBreak::LowestIndex,
        }
    }
}

/// Lateral inhibition: keep the `k` earliest spikes, silence the rest.
///
/// The rng is consumed only for [`TieBreak::SeededRandom`].
pub fn wta_inhibit<R: Rng + ?Sized>(outputs: &SpikeVolley, wta: &WtaConfig, rng: &mut R) -> Result<SpikeVolley> {
    let q = outputs.len();
    if wta.k == 0 || wta.k > q {
        return Err(Error::config(format!("winner count k={} must be in 1..={q}", wta.k)));
    }
    let mut order: Vec<usize> = (0..q).filter(|&j| outputs.get(j).is_some()).collect();
    if wta.tie_break == TieBreak::SeededRandom {
        order.shuffle(rng);
    }
    // Stable: equal times keep index order (or the shuffled order).
    order.sort_by_key(|&j| outputs.get(j));
    let mut times = vec![None; q];
    for &j in order.iter().take(wta.k) {
        times[j] = outputs.get(j);
    }
    SpikeVolley::new(times, outputs.window())
}
