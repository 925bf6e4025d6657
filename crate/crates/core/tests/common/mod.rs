#![allow(dead_code)]

pub mod rtlcheck;
pub mod vscan;

use tnngen_core::column::ResponseKind;

/// Rand index by direct enumeration of all pairs.
pub fn brute_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

/// Neuron modelled the way the hardware computes it: per-synapse state
/// updated once per cycle, potential compared after the update.
pub fn register_level_neuron(
    kind: ResponseKind,
    weights: &[u32],
    inputs: &[Option<u32>],
    theta: u32,
    window: u32,
    shift: u32,
) -> Option<u32> {
    // Ramp synapses count up by one per cycle after their spike, to w.
    let mut ramp = vec![0u64; weights.len()];
    let mut seen = vec![false; weights.len()];
    let mut pot = 0u64;
    for t in 0..window {
        let mut arrivals = 0u64;
        for (i, &w) in weights.iter().enumerate() {
            let arrive = inputs[i] == Some(t);
            if seen[i] && ramp[i] < w as u64 {
                ramp[i] += 1;
            }
            if arrive {
                seen[i] = true;
                arrivals += w as u64;
            }
        }
        let total = match kind {
            ResponseKind::RampNoLeak => ramp.iter().sum(),
            ResponseKind::StepNoLeak => weights
                .iter()
                .zip(&seen)
                .filter(|(_, s)| **s)
                .map(|(w, _)| *w as u64)
                .sum(),
            ResponseKind::Lif => {
                let kept = if shift >= 64 { pot } else { pot - (pot >> shift) };
                pot = kept + arrivals;
                pot
            }
        };
        if total >= theta as u64 {
            return Some(t);
        }
    }
    None
}

/// Probability-one STDP rule written out per synapse.
pub fn stdp_rule(w: u32, w_max: u32, x: Option<u32>, y: Option<u32>) -> u32 {
    match (x, y) {
        (Some(s), Some(o)) if s <= o => (w + 1).min(w_max),
        (Some(_), Some(_)) => w.saturating_sub(1),
        (Some(_), None) => (w + 1).min(w_max),
        (None, Some(_)) => w.saturating_sub(1),
        (None, None) => w,
    }
}
