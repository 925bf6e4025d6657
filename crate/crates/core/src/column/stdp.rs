use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WeightMatrix;
use crate::error::{Error, Result};
use crate::tsdata::SpikeVolley;

/// Bernoulli probabilities of the three STDP cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StdpParams {
    /// Input at or before the output spike: potentiate.
    pub u_capture: f64,
    /// Input after the output spike, or output without input: depress.
    pub u_backoff: f64,
    /// Input without output spike: potentiate.
    pub u_search: f64,
    #[serde(default)]
    pub seed: u64,
}

impl StdpParams {
    pub fn deterministic(seed: u64) -> Self {
        StdpParams {
            u_capture: 1.0,
            u_backoff: 1.0,
            u_search: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, u) in [
            ("u_capture", self.u_capture),
            ("u_backoff", self.u_backoff),
            ("u_search", self.u_search),
        ] {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::config(format!("{name}={u} is not a probability")));
            }
        }
        Ok(())
    }
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random_bool(p)
    }
}

/// Apply one unsupervised STDP step in place. `winners` is the post-WTA
/// output volley; neurons without a winning spike take the "no output" cases.
pub fn stdp_update_in_place<R: Rng + ?Sized>(
    w: &mut WeightMatrix,
    inputs: &SpikeVolley,
    winners: &SpikeVolley,
    params: &StdpParams,
    rng: &mut R,
) -> Result<()> {
    params.validate()?;
    if inputs.len() != w.p() || winners.len() != w.q() {
        return Err(Error::shape(format!(
            "stdp on {}x{} weights with {} inputs and {} outputs",
            w.q(),
            w.p(),
            inputs.len(),
            winners.len()
        )));
    }
    for j in 0..w.q() {
        let y = winners.get(j);
        for i in 0..w.p() {
            let delta = match (inputs.get(i), y) {
                (Some(x), Some(y)) if x <= y => bernoulli(rng, params.u_capture) as i8,
                (Some(_), Some(_)) => -(bernoulli(rng, params.u_backoff) as i8),
                (Some(_), None) => bernoulli(rng, params.u_search) as i8,
                (None, Some(_)) => -(bernoulli(rng, params.u_backoff) as i8),
                (None, None) => 0,
            };
            w.adjust(j, i, delta);
        }
    }
    Ok(())
}

pub fn stdp_update<R: Rng + ?Sized>(
    w: &WeightMatrix,
    inputs: &SpikeVolley,
    winners: &SpikeVolley,
    params: &StdpParams,
    rng: &mut R,
) -> Result<WeightMatrix> {
    let mut next = w.clone();
    stdp_update_in_place(&mut next, inputs, winners, params, rng)?;
    Ok(next)
}
