//! Random hardware configurations and the checks run on their emitted RTL.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use tnngen_core::column::{neuron_response_hybrid, ResponseKind, StdpParams, WeightMatrix};
use tnngen_core::rtl::{generate_column_rtl, generate_flow_scripts, generate_testbench, HardwareConfig, Library};
use tnngen_core::tsdata::SpikeVolley;

use super::vscan;

pub struct Case {
    pub hw: HardwareConfig,
    pub weights: WeightMatrix,
    pub stimuli: Vec<SpikeVolley>,
}

pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.random_range(1..=12);
    let q = rng.random_range(1..=6);
    let w_max = rng.random_range(1..=15);
    let window: u32 = rng.random_range(1..=24);
    let response = [ResponseKind::RampNoLeak, ResponseKind::StepNoLeak, ResponseKind::Lif][rng.random_range(0..3)];
    let library = Library::ALL[rng.random_range(0..3)];
    let cfg = tnngen_core::column::ColumnConfig {
        p,
        q,
        theta: rng.random_range(1..=(p as u32 * w_max).max(2)),
        w_max,
        window,
        response,
        lif_leak_shift: rng.random_range(0..4),
    };
    let mut hw = HardwareConfig::for_column(format!("col_{seed}"), &cfg, library);
    hw.macro_mode = library == Library::Tnn7 && rng.random_bool(0.5);
    hw.stdp = StdpParams {
        u_capture: rng.random_range(0.0..=1.0),
        u_backoff: rng.random_range(0.0..=1.0),
        u_search: rng.random_range(0.0..=1.0),
        seed,
    };
    let weights = WeightMatrix::uniform(q, p, w_max, seed).unwrap();
    let stimuli = (0..rng.random_range(0..6))
        .map(|_| {
            let t = (0..p)
                .map(|_| rng.random_bool(0.8).then(|| rng.random_range(0..window + 2)))
                .collect();
            SpikeVolley::new(t, window + 2).unwrap()
        })
        .collect();
    Case { hw, weights, stimuli }
}

/// Expected (time, winner) per vector read back out of a testbench.
pub fn parse_expectations(tb: &str, q: usize, no_spike: u64) -> Vec<(Vec<Option<u32>>, Option<usize>)> {
    let time_re = Regex::new(r"exp_time\[(\d+)\] = \d+'d(\d+);").unwrap();
    let win_re = Regex::new(r"exp_winner\[(\d+)\] = \d+'d(\d+);").unwrap();
    let valid_re = Regex::new(r"exp_winner_valid\[(\d+)\] = 1'b([01]);").unwrap();
    let nv = valid_re.captures_iter(tb).count();
    let mut out = vec![(vec![None; q], None); nv];
    for c in time_re.captures_iter(tb) {
        let k: usize = c[1].parse().unwrap();
        let v: u64 = c[2].parse().unwrap();
        out[k / q].0[k % q] = (v != no_spike).then_some(v as u32);
    }
    let mut winners = vec![0usize; nv];
    for c in win_re.captures_iter(tb) {
        winners[c[1].parse::<usize>().unwrap()] = c[2].parse().unwrap();
    }
    for c in valid_re.captures_iter(tb) {
        let v: usize = c[1].parse().unwrap();
        out[v].1 = (&c[2] == "1").then_some(winners[v]);
    }
    out
}

/// Emit the bundle, testbench and flow scripts for one case and check them.
pub fn check_case(case: &Case) -> Result<(), String> {
    let Case { hw, weights, stimuli } = case;
    let err = |e: tnngen_core::Error| e.to_string();
    let bundle = generate_column_rtl(hw, weights).map_err(err)?;
    if bundle != generate_column_rtl(hw, weights).map_err(err)? {
        return Err("bundle differs between emissions".into());
    }
    let tb = generate_testbench(hw, weights, stimuli).map_err(err)?;
    if tb != generate_testbench(hw, weights, stimuli).map_err(err)? {
        return Err("testbench differs between emissions".into());
    }
    let flow = generate_flow_scripts(hw).map_err(err)?;
    if flow != generate_flow_scripts(hw).map_err(err)? {
        return Err("flow scripts differ between emissions".into());
    }

    let mut sources: Vec<&str> = bundle.files.values().map(String::as_str).collect();
    sources.push(&tb);
    let scan = vscan::scan(&sources)?;
    let top = scan.module(&hw.design).ok_or("top module missing")?;
    let n = hw.p * hw.q;
    let syn = format!("{}_synapse", hw.design);
    if top.count_of(&syn) != n || bundle.instances_of(&syn) != n as u64 {
        return Err(format!(
            "synapse instances: scanned {}, manifest {}, expected {n}",
            top.count_of(&syn),
            bundle.instances_of(&syn)
        ));
    }
    let stdp = if hw.macro_mode {
        "tnn7_stdp_cell".to_string()
    } else {
        format!("{}_stdp", hw.design)
    };
    let stdp_scanned: usize = scan.modules.iter().map(|m| m.count_of(&stdp)).sum();
    if stdp_scanned != n || bundle.instances_of(&stdp) != n as u64 {
        return Err(format!("stdp instances: scanned {stdp_scanned}, expected {n}"));
    }
    let neuron = format!("{}_neuron", hw.design);
    if top.count_of(&neuron) != hw.q || bundle.instances_of(&neuron) != hw.q as u64 {
        return Err("neuron instance count differs from q".into());
    }
    for (i, j) in (0..hw.p).flat_map(|i| (0..hw.q).map(move |j| (i, j))) {
        let inst = format!("u_syn_{j}_{i}");
        if !top.instances.iter().any(|(t, name)| *t == syn && *name == inst) {
            return Err(format!("missing synapse instance {inst}"));
        }
    }
    if hw.macro_mode != bundle.files.contains_key("tnn7_macros_bb.v") {
        return Err("macro stub file presence does not match macro mode".into());
    }

    let expected = parse_expectations(&tb, hw.q, hw.no_spike());
    if expected.len() != stimuli.len() {
        return Err(format!(
            "{} vectors in testbench, {} stimuli",
            expected.len(),
            stimuli.len()
        ));
    }
    for (v, (stim, (times, winner))) in stimuli.iter().zip(&expected).enumerate() {
        let model: Vec<Option<u32>> = (0..hw.q)
            .map(|j| {
                neuron_response_hybrid(
                    hw.response,
                    weights.row(j),
                    stim,
                    hw.theta,
                    hw.window,
                    hw.lif_leak_shift,
                )
                .unwrap()
            })
            .collect();
        if *times != model {
            return Err(format!("vector {v}: testbench times {times:?}, model {model:?}"));
        }
        let first = model
            .iter()
            .enumerate()
            .filter_map(|(j, t)| t.map(|t| (t, j)))
            .min()
            .map(|(_, j)| j);
        if *winner != first {
            return Err(format!("vector {v}: testbench winner {winner:?}, model {first:?}"));
        }
    }
    for (name, text) in &flow.files {
        if !text.contains(&hw.design) && name != "constraints.sdc" {
            return Err(format!("{name} does not mention the design"));
        }
    }
    Ok(())
}
