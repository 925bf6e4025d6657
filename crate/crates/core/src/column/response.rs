use serde::{Deserialize, Serialize};

use super::{ColumnConfig, ResponseKind, WeightMatrix};
use crate::error::{Error, Result};
use crate::tsdata::SpikeVolley;

/// How [`simulate_column`] advances time. Both modes produce identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    /// Evaluate the membrane potential at every cycle of the window.
    CycleAccurate,
    /// Jump between input events, stepping cycle by cycle only while a leaky
    /// potential is still decaying.
    #[default]
    Hybrid,
}

fn check_shape(weights: &[u32], inputs: &SpikeVolley) -> Result<()> {
    if weights.len() != inputs.len() {
        return Err(Error::shape(format!(
            "{} weights but {} input lines",
            weights.len(),
            inputs.len()
        )));
    }
    Ok(())
}

fn leak(potential: u64, shift: u32) -> u64 {
    potential - potential.checked_shr(shift).unwrap_or(0)
}

/// Reference model: evaluate the potential at every cycle of `0..window` and
/// return the first cycle where it reaches `theta`.
pub fn neuron_response(
    response: ResponseKind,
    weights: &[u32],
    inputs: &SpikeVolley,
    theta: u32,
    window: u32,
    lif_leak_shift: u32,
) -> Result<Option<u32>> {
    check_shape(weights, inputs)?;
    let theta = theta as u64;
    let mut lif_potential = 0u64;
    for t in 0..window {
        let potential = match response {
            ResponseKind::RampNoLeak => inputs
                .times()
                .iter()
                .zip(weights)
                .filter_map(|(s, &w)| s.filter(|&s| s <= t).map(|s| (t - s).min(w) as u64))
                .sum(),
            ResponseKind::StepNoLeak => inputs
                .times()
                .iter()
                .zip(weights)
                .filter(|(s, _)| matches!(s, Some(s) if *s <= t))
                .map(|(_, &w)| w as u64)
                .sum(),
            ResponseKind::Lif => {
                let arriving: u64 = inputs
                    .times()
                    .iter()
                    .zip(weights)
                    .filter(|(s, _)| **s == Some(t))
                    .map(|(_, &w)| w as u64)
                    .sum();
                lif_potential = if t == 0 {
                    arriving
                } else {
                    leak(lif_potential, lif_leak_shift) + arriving
                };
                lif_potential
            }
        };
        if potential >= theta {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Input events `(time, weight)` inside the window with non-zero weight,
/// sorted by time.
fn events(weights: &[u32], inputs: &SpikeVolley, window: u32) -> Vec<(u32, u64)> {
    let mut ev: Vec<(u32, u64)> = inputs
        .times()
        .iter()
        .zip(weights)
        .filter_map(|(s, &w)| match s {
            Some(s) if *s < window && w > 0 => Some((*s, w as u64)),
            _ => None,
        })
        .collect();
    ev.sort_unstable();
    ev
}

fn ramp_hybrid(ev: &[(u32, u64)], theta: u64, window: u32) -> Option<u32> {
    // The potential is piecewise linear with breakpoints where ramps start
    // (s) and saturate (s + w).
    let mut breaks: Vec<u64> = ev
        .iter()
        .flat_map(|&(s, w)| [s as u64, s as u64 + w])
        .filter(|&b| b < window as u64)
        .collect();
    breaks.sort_unstable();
    breaks.dedup();
    for (idx, &b) in breaks.iter().enumerate() {
        let next = breaks.get(idx + 1).copied().unwrap_or(window as u64);
        let mut potential = 0u64;
        let mut slope = 0u64;
        for &(s, w) in ev {
            let s = s as u64;
            if s <= b {
                potential += (b - s).min(w);
                if b < s + w {
                    slope += 1;
                }
            }
        }
        if potential >= theta {
            return Some(b as u32);
        }
        if slope > 0 {
            let t = b + (theta - potential).div_ceil(slope);
            if t < next {
                return Some(t as u32);
            }
        }
    }
    None
}

fn step_hybrid(ev: &[(u32, u64)], theta: u64) -> Option<u32> {
    let mut potential = 0u64;
    for &(s, w) in ev {
        potential += w;
        if potential >= theta {
            return Some(s);
        }
    }
    None
}

fn lif_hybrid(ev: &[(u32, u64)], theta: u64, shift: u32) -> Option<u32> {
    let mut grouped: Vec<(u32, u64)> = Vec::with_capacity(ev.len());
    for &(s, w) in ev {
        match grouped.last_mut() {
            Some((t, acc)) if *t == s => *acc += w,
            _ => grouped.push((s, w)),
        }
    }
    // Between events the potential only decays, so a crossing can only happen
    // on an event cycle. Decay is stepped until it reaches a fixed point.
    let mut potential = 0u64;
    let mut t = 0u32;
    for (idx, &(s, w)) in grouped.iter().enumerate() {
        if idx > 0 {
            while t + 1 < s {
                let next = leak(potential, shift);
                if next == potential {
                    break;
                }
                potential = next;
                t += 1;
            }
            potential = leak(potential, shift);
        }
        potential += w;
        t = s;
        if potential >= theta {
            return Some(s);
        }
    }
    None
}

/// Event-driven evaluation of the same response as [`neuron_response`].
pub fn neuron_response_hybrid(
    response: ResponseKind,
    weights: &[u32],
    inputs: &SpikeVolley,
    theta: u32,
    window: u32,
    lif_leak_shift: u32,
) -> Result<Option<u32>> {
    check_shape(weights, inputs)?;
    let ev = events(weights, inputs, window);
    let theta = theta as u64;
    Ok(match response {
        ResponseKind::RampNoLeak => ramp_hybrid(&ev, theta, window),
        ResponseKind::StepNoLeak => step_hybrid(&ev, theta),
        ResponseKind::Lif => lif_hybrid(&ev, theta, lif_leak_shift),
    })
}

/// Pre-inhibition output volley of every neuron in the column.
pub fn simulate_column(
    cfg: &ColumnConfig,
    w: &WeightMatrix,
    inputs: &SpikeVolley,
    mode: SimMode,
) -> Result<SpikeVolley> {
    cfg.validate()?;
    if w.q() != cfg.q || w.p() != cfg.p {
        return Err(Error::shape(format!(
            "weight matrix is {}x{}, column is {}x{}",
            w.q(),
            w.p(),
            cfg.q,
            cfg.p
        )));
    }
    if inputs.len() != cfg.p {
        return Err(Error::shape(format!(
            "input volley has {} lines, column expects {}",
            inputs.len(),
            cfg.p
        )));
    }
    let eval = match mode {
        SimMode::CycleAccurate => neuron_response,
        SimMode::Hybrid => neuron_response_hybrid,
    };
    let times = (0..cfg.q)
        .map(|j| {
            eval(
                cfg.response,
                w.row(j),
                inputs,
                cfg.theta,
                cfg.window,
                cfg.lif_leak_shift,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    SpikeVolley::new(times, cfg.window)
}
