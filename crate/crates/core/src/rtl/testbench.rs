use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::verilog::lit;
use super::HardwareConfig;
use crate::column::{simulate_column, wta_inhibit, SimMode, WeightMatrix, WtaConfig};
use crate::error::{Error, Result};
use crate::tsdata::SpikeVolley;

pub const TB_PASS_PREFIX: &str = "PASS";
pub const TB_FAIL_PREFIX: &str = "FAIL";

/// Self-checking testbench for the column emitted by
/// [`generate_column_rtl`](super::generate_column_rtl). Expected spike times
/// and winners come from the functional simulator and are written out as
/// literal assignments.
pub fn generate_testbench(hw: &HardwareConfig, w: &WeightMatrix, stimuli: &[SpikeVolley]) -> Result<String> {
    hw.validate()?;
    hw.check_weights(w)?;
    if let Some(bad) = stimuli.iter().position(|s| s.len() != hw.p) {
        return Err(Error::shape(format!(
            "stimulus {bad} has {} lines, column expects {}",
            stimuli[bad].len(),
            hw.p
        )));
    }
    let cfg = hw.column_config();
    let wta = WtaConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut expected = Vec::with_capacity(stimuli.len());
    for s in stimuli {
        let out = simulate_column(&cfg, w, s, SimMode::CycleAccurate)?;
        let won = wta_inhibit(&out, &wta, &mut rng)?;
        expected.push((out, won.times().iter().position(Option::is_some)));
    }

    let d = &hw.design;
    let (p, q) = (hw.p, hw.q);
    let (tb, ib) = (hw.time_bits, hw.index_bits());
    let nv = stimuli.len();
    let no_spike = hw.no_spike();
    let code = |t: Option<u32>| lit(tb, t.map_or(no_spike, |t| t as u64));
    let half = hw.clock_period_ns / 2.0;

    let mut out = String::new();
    writeln!(
        out,
        "// Self-checking testbench for {d}: {nv} vectors, expected values from the functional model."
    )
    .unwrap();
    writeln!(out, "// No-spike code: {}", lit(tb, no_spike)).unwrap();
    out.push_str("`timescale 1ns/1ps\n\n");
    writeln!(out, "module {d}_tb;").unwrap();
    out.push_str("    reg clk;\n    reg rst;\n    reg start;\n    reg learn_en;\n");
    writeln!(out, "    reg [{}:0] spike_in;", p - 1).unwrap();
    writeln!(out, "    wire [{}:0] spike_times;", q as u64 * tb as u64 - 1).unwrap();
    writeln!(out, "    wire [{}:0] winner;", ib - 1).unwrap();
    out.push_str("    wire winner_valid;\n    wire busy;\n    wire done;\n    integer errors;\n");
    writeln!(
        out,
        "\n    {d} dut (.clk(clk), .rst(rst), .start(start), .learn_en(learn_en), .spike_in(spike_in), .spike_times(spike_times), .winner(winner), .winner_valid(winner_valid), .busy(busy), .done(done));\n"
    )
    .unwrap();
    writeln!(out, "    always #{half} clk = ~clk;\n").unwrap();

    if nv == 0 {
        out.push_str("    initial begin\n        clk = 1'b0;\n        rst = 1'b1;\n        start = 1'b0;\n");
        out.push_str("        learn_en = 1'b0;\n        spike_in = 0;\n        errors = 0;\n");
        writeln!(out, "        $display(\"{TB_PASS_PREFIX} 0 vectors\");").unwrap();
        out.push_str("        $finish;\n    end\nendmodule\n");
        return Ok(out);
    }

    writeln!(out, "    reg [{}:0] stim_time [0:{}];", tb - 1, nv * p - 1).unwrap();
    writeln!(out, "    reg [{}:0] exp_time [0:{}];", tb - 1, nv * q - 1).unwrap();
    writeln!(out, "    reg [{}:0] exp_winner [0:{}];", ib - 1, nv - 1).unwrap();
    writeln!(out, "    reg exp_winner_valid [0:{}];", nv - 1).unwrap();
    out.push_str("    integer v;\n    integer i;\n    integer j;\n    integer cyc;\n\n");

    out.push_str("    initial begin\n");
    for (v, (stim, (times, winner))) in stimuli.iter().zip(&expected).enumerate() {
        writeln!(out, "        // vector {v}").unwrap();
        for i in 0..p {
            // Inputs beyond the window never reach the column.
            let t = stim.get(i).filter(|&t| t < hw.window);
            writeln!(out, "        stim_time[{}] = {};", v * p + i, code(t)).unwrap();
        }
        for j in 0..q {
            writeln!(out, "        exp_time[{}] = {};", v * q + j, code(times.get(j))).unwrap();
        }
        writeln!(
            out,
            "        exp_winner[{v}] = {};",
            lit(ib, winner.unwrap_or(0) as u64)
        )
        .unwrap();
        writeln!(out, "        exp_winner_valid[{v}] = 1'b{};", winner.is_some() as u8).unwrap();
    }
    out.push_str("    end\n\n");

    out.push_str("    initial begin\n");
    out.push_str("        clk = 1'b0;\n        rst = 1'b1;\n        start = 1'b0;\n        learn_en = 1'b0;\n");
    out.push_str("        spike_in = 0;\n        errors = 0;\n");
    out.push_str("        repeat (2) @(negedge clk);\n        rst = 1'b0;\n");
    writeln!(out, "        for (v = 0; v < {nv}; v = v + 1) begin").unwrap();
    out.push_str("            @(negedge clk);\n            start = 1'b1;\n            @(negedge clk);\n            start = 1'b0;\n");
    writeln!(
        out,
        "            for (cyc = 0; cyc < {}; cyc = cyc + 1) begin",
        hw.window
    )
    .unwrap();
    writeln!(out, "                for (i = 0; i < {p}; i = i + 1) begin").unwrap();
    writeln!(
        out,
        "                    spike_in[i] = (stim_time[v * {p} + i] == cyc);"
    )
    .unwrap();
    out.push_str("                end\n                @(negedge clk);\n            end\n");
    out.push_str("            spike_in = 0;\n");
    writeln!(out, "            for (j = 0; j < {q}; j = j + 1) begin").unwrap();
    writeln!(
        out,
        "                if (spike_times[j * {tb} +: {tb}] !== exp_time[v * {q} + j]) begin"
    )
    .unwrap();
    writeln!(
        out,
        "                    $display(\"{TB_FAIL_PREFIX} vector %0d neuron %0d expected %0d got %0d\", v, j, exp_time[v * {q} + j], spike_times[j * {tb} +: {tb}]);"
    )
    .unwrap();
    out.push_str("                    errors = errors + 1;\n                end\n            end\n");
    out.push_str("            if ((winner_valid !== exp_winner_valid[v]) || (exp_winner_valid[v] && (winner !== exp_winner[v]))) begin\n");
    writeln!(
        out,
        "                $display(\"{TB_FAIL_PREFIX} vector %0d winner expected %0d/%0d got %0d/%0d\", v, exp_winner_valid[v], exp_winner[v], winner_valid, winner);"
    )
    .unwrap();
    out.push_str("                errors = errors + 1;\n            end\n        end\n");
    out.push_str("        if (errors == 0) begin\n");
    writeln!(out, "            $display(\"{TB_PASS_PREFIX} %0d vectors\", {nv});").unwrap();
    out.push_str("        end else begin\n");
    writeln!(
        out,
        "            $display(\"{TB_FAIL_PREFIX} %0d mismatches\", errors);"
    )
    .unwrap();
    out.push_str("        end\n        $finish;\n    end\nendmodule\n");
    Ok(out)
}
