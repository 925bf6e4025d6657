use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{HardwareConfig, ModuleCount, RtlBundle};
use crate::column::{ResponseKind, StdpParams, WeightMatrix};
use crate::error::Result;

pub(crate) const MACRO_WTA: &str = "tnn7_wta_cell";
pub(crate) const MACRO_STDP: &str = "tnn7_stdp_cell";
pub(crate) const MACRO_STUB_FILE: &str = "tnn7_macros_bb.v";

/// `width'dvalue`
pub(crate) fn lit(width: u32, value: u64) -> String {
    format!("{width}'d{value}")
}

/// `[hi:lo]` slice of the `idx`-th `width`-bit field.
fn field(idx: usize, width: u32) -> String {
    let lo = idx as u64 * width as u64;
    format!("[{}:{}]", lo + width as u64 - 1, lo)
}

/// Bernoulli probability as a 9-bit threshold against an 8-bit random draw.
fn threshold(u: f64) -> u64 {
    (u * 256.0).round().clamp(0.0, 256.0) as u64
}

fn stdp_params(stdp: &StdpParams) -> String {
    format!(
        "#(.TH_CAPTURE({}), .TH_BACKOFF({}), .TH_SEARCH({}))",
        lit(9, threshold(stdp.u_capture)),
        lit(9, threshold(stdp.u_backoff)),
        lit(9, threshold(stdp.u_search))
    )
}

fn header(out: &mut String, hw: &HardwareConfig) {
    writeln!(
        out,
        "// {} : {}x{} temporal neural network column",
        hw.design, hw.p, hw.q
    )
    .unwrap();
    writeln!(
        out,
        "// response={} theta={} w_max={} window={} library={}{}",
        hw.response,
        hw.theta,
        hw.w_max,
        hw.window,
        hw.library,
        if hw.macro_mode { " (macro cells)" } else { "" }
    )
    .unwrap();
    out.push_str("`timescale 1ns/1ps\n\n");
}

fn synapse_module(out: &mut String, hw: &HardwareConfig) {
    let d = &hw.design;
    let wb = hw.weight_bits;
    let wr = format!("[{}:0]", wb - 1);
    let ramp = hw.response == ResponseKind::RampNoLeak;
    writeln!(out, "module {d}_synapse #(").unwrap();
    writeln!(out, "    parameter {wr} W_INIT = {}", lit(wb, 0)).unwrap();
    out.push_str(") (\n");
    for port in ["clk", "rst", "start", "run", "spike_in", "post_fired", "inc", "dec"] {
        writeln!(out, "    input wire {port},").unwrap();
    }
    writeln!(out, "    output wire {wr} resp,").unwrap();
    out.push_str("    output reg seen,\n    output reg early\n);\n");
    writeln!(out, "    localparam {wr} W_MAX = {};", lit(wb, hw.w_max as u64)).unwrap();
    writeln!(out, "    reg {wr} weight;").unwrap();
    out.push_str("    wire arrive = run & spike_in & ~seen;\n");
    match hw.response {
        ResponseKind::RampNoLeak => {
            writeln!(out, "    reg {wr} ramp;").unwrap();
            out.push_str("    assign resp = ramp;\n");
        }
        ResponseKind::StepNoLeak => {
            writeln!(out, "    assign resp = (arrive | seen) ? weight : {};", lit(wb, 0)).unwrap();
        }
        ResponseKind::Lif => {
            writeln!(out, "    assign resp = arrive ? weight : {};", lit(wb, 0)).unwrap();
        }
    }
    out.push_str("\n    always @(posedge clk) begin\n");
    out.push_str("        if (rst) begin\n");
    out.push_str("            weight <= W_INIT;\n            seen <= 1'b0;\n            early <= 1'b0;\n");
    if ramp {
        writeln!(out, "            ramp <= {};", lit(wb, 0)).unwrap();
    }
    out.push_str("        end else begin\n");
    out.push_str("            if (start) begin\n                seen <= 1'b0;\n                early <= 1'b0;\n");
    if ramp {
        writeln!(out, "                ramp <= {};", lit(wb, 0)).unwrap();
    }
    out.push_str("            end else if (arrive) begin\n");
    out.push_str("                seen <= 1'b1;\n                early <= ~post_fired;\n            end\n");
    if ramp {
        out.push_str("            if (run & ~start & (arrive | seen) & (ramp < weight)) begin\n");
        out.push_str("                ramp <= ramp + 1'b1;\n            end\n");
    }
    out.push_str("            if (inc & (weight != W_MAX)) begin\n                weight <= weight + 1'b1;\n");
    writeln!(out, "            end else if (dec & (weight != {})) begin", lit(wb, 0)).unwrap();
    out.push_str("                weight <= weight - 1'b1;\n            end\n");
    out.push_str("        end\n    end\nendmodule\n\n");
}

fn neuron_module(out: &mut String, hw: &HardwareConfig) {
    let d = &hw.design;
    let tb = hw.time_bits;
    let pb = hw.potential_bits();
    let tr = format!("[{}:0]", tb - 1);
    let pr = format!("[{}:0]", pb - 1);
    writeln!(out, "module {d}_neuron (").unwrap();
    for port in ["clk", "rst", "start", "run"] {
        writeln!(out, "    input wire {port},").unwrap();
    }
    writeln!(out, "    input wire {tr} t,").unwrap();
    writeln!(
        out,
        "    input wire [{}:0] resp_bus,",
        hw.p as u64 * hw.weight_bits as u64 - 1
    )
    .unwrap();
    out.push_str("    output wire fire_now,\n    output reg fired,\n");
    writeln!(out, "    output wire {tr} spike_time\n);").unwrap();
    writeln!(out, "    localparam {pr} THETA = {};", lit(pb, hw.theta as u64)).unwrap();
    writeln!(out, "    localparam {tr} NO_SPIKE = {};", lit(tb, hw.no_spike())).unwrap();
    writeln!(out, "    reg {pr} sum;").unwrap();
    writeln!(out, "    reg {tr} time_q;").unwrap();
    out.push_str("    integer i;\n\n    always @(*) begin\n");
    writeln!(out, "        sum = {};", lit(pb, 0)).unwrap();
    writeln!(out, "        for (i = 0; i < {}; i = i + 1) begin", hw.p).unwrap();
    writeln!(out, "            sum = sum + resp_bus[i * {0} +: {0}];", hw.weight_bits).unwrap();
    out.push_str("        end\n    end\n\n");
    let lif = hw.response == ResponseKind::Lif;
    if lif {
        writeln!(out, "    reg {pr} pot_q;").unwrap();
        writeln!(
            out,
            "    wire {pr} pot = pot_q - (pot_q >> {}) + sum;",
            hw.lif_leak_shift
        )
        .unwrap();
    } else {
        writeln!(out, "    wire {pr} pot = sum;").unwrap();
    }
    out.push_str("    assign fire_now = run & ~fired & (pot >= THETA);\n");
    out.push_str("    assign spike_time = fired ? time_q : NO_SPIKE;\n\n");
    out.push_str("    always @(posedge clk) begin\n        if (rst | start) begin\n");
    writeln!(out, "            fired <= 1'b0;\n            time_q <= {};", lit(tb, 0)).unwrap();
    if lif {
        writeln!(out, "            pot_q <= {};", lit(pb, 0)).unwrap();
    }
    out.push_str("        end else if (run) begin\n");
    if lif {
        out.push_str("            pot_q <= pot;\n");
    }
    out.push_str("            if (fire_now) begin\n                fired <= 1'b1;\n                time_q <= t;\n            end\n");
    out.push_str("        end\n    end\nendmodule\n\n");
}

fn wta_module(out: &mut String, hw: &HardwareConfig) -> u64 {
    let d = &hw.design;
    let ib = hw.index_bits();
    let ir = format!("[{}:0]", ib - 1);
    let q = hw.q;
    writeln!(out, "module {d}_wta (").unwrap();
    out.push_str("    input wire clk,\n    input wire rst,\n    input wire start,\n");
    writeln!(out, "    input wire [{}:0] fire_now,", q - 1).unwrap();
    writeln!(out, "    output reg {ir} winner,\n    output reg winner_valid\n);").unwrap();
    writeln!(out, "    reg {ir} pick;").unwrap();
    out.push_str("    reg any;\n    integer j;\n");
    let macro_cells = if hw.macro_mode {
        writeln!(out, "    wire [{q}:0] inhibit;").unwrap();
        writeln!(out, "    wire [{}:0] win;", q - 1).unwrap();
        out.push_str("    assign inhibit[0] = winner_valid;\n");
        for j in 0..q {
            writeln!(
                out,
                "    {MACRO_WTA} u_cell_{j} (.fire(fire_now[{j}]), .inhibit_in(inhibit[{j}]), .win(win[{j}]), .inhibit_out(inhibit[{}]));",
                j + 1
            )
            .unwrap();
        }
        out.push_str("\n    always @(*) begin\n");
        writeln!(out, "        pick = {};\n        any = 1'b0;", lit(ib, 0)).unwrap();
        writeln!(out, "        for (j = 0; j < {q}; j = j + 1) begin").unwrap();
        out.push_str(
            "            if (win[j]) begin\n                pick = j;\n                any = 1'b1;\n            end\n",
        );
        out.push_str("        end\n    end\n");
        q as u64
    } else {
        // Priority scan from the top so the lowest firing index wins.
        out.push_str("\n    always @(*) begin\n");
        writeln!(out, "        pick = {};\n        any = 1'b0;", lit(ib, 0)).unwrap();
        writeln!(out, "        for (j = {}; j >= 0; j = j - 1) begin", q - 1).unwrap();
        out.push_str("            if (fire_now[j]) begin\n                pick = j;\n                any = 1'b1;\n            end\n");
        out.push_str("        end\n    end\n");
        0
    };
    out.push_str("\n    always @(posedge clk) begin\n        if (rst | start) begin\n");
    writeln!(
        out,
        "            winner <= {};\n            winner_valid <= 1'b0;",
        lit(ib, 0)
    )
    .unwrap();
    out.push_str("        end else if (any & ~winner_valid) begin\n");
    out.push_str("            winner <= pick;\n            winner_valid <= 1'b1;\n        end\n    end\nendmodule\n\n");
    macro_cells
}

fn stdp_module(out: &mut String, hw: &HardwareConfig) {
    writeln!(out, "module {}_stdp #(", hw.design).unwrap();
    for (name, sep) in [("TH_CAPTURE", ","), ("TH_BACKOFF", ","), ("TH_SEARCH", "")] {
        writeln!(out, "    parameter [8:0] {name} = {}{sep}", lit(9, 256)).unwrap();
    }
    out.push_str(") (\n");
    for port in ["x", "y", "early", "update"] {
        writeln!(out, "    input wire {port},").unwrap();
    }
    out.push_str("    input wire [7:0] rnd,\n    output wire inc,\n    output wire dec\n);\n");
    out.push_str("    wire pass_capture = {1'b0, rnd} < TH_CAPTURE;\n");
    out.push_str("    wire pass_backoff = {1'b0, rnd} < TH_BACKOFF;\n");
    out.push_str("    wire pass_search = {1'b0, rnd} < TH_SEARCH;\n");
    out.push_str("    assign inc = update & ((x & y & early & pass_capture) | (x & ~y & pass_search));\n");
    out.push_str("    assign dec = update & ((x & y & ~early & pass_backoff) | (~x & y & pass_backoff));\n");
    out.push_str("endmodule\n\n");
}

fn top_module(out: &mut String, hw: &HardwareConfig, w: &WeightMatrix) {
    let d = &hw.design;
    let (p, q) = (hw.p, hw.q);
    let n = p * q;
    let (wb, tb, ib) = (hw.weight_bits, hw.time_bits, hw.index_bits());
    let tr = format!("[{}:0]", tb - 1);
    writeln!(out, "module {d} (").unwrap();
    for port in ["clk", "rst", "start", "learn_en"] {
        writeln!(out, "    input wire {port},").unwrap();
    }
    writeln!(out, "    input wire [{}:0] spike_in,", p - 1).unwrap();
    writeln!(out, "    output wire [{}:0] spike_times,", q as u64 * tb as u64 - 1).unwrap();
    writeln!(out, "    output wire [{}:0] winner,", ib - 1).unwrap();
    out.push_str("    output wire winner_valid,\n    output reg busy,\n    output reg done\n);\n");
    writeln!(
        out,
        "    localparam {tr} LAST_CYCLE = {};",
        lit(tb, hw.window as u64 - 1)
    )
    .unwrap();
    writeln!(out, "    reg {tr} t;").unwrap();
    out.push_str("    reg [31:0] lfsr;\n    wire update = done & learn_en;\n");
    for name in ["fire_now", "fired", "row_won"] {
        writeln!(out, "    wire [{}:0] {name};", q - 1).unwrap();
    }
    for name in ["seen", "early", "inc", "dec"] {
        writeln!(out, "    wire [{}:0] {name};", n - 1).unwrap();
    }
    writeln!(out, "    wire [{}:0] resp;", n as u64 * wb as u64 - 1).unwrap();

    out.push_str("\n    always @(posedge clk) begin\n        if (rst) begin\n");
    writeln!(out, "            t <= {};", lit(tb, 0)).unwrap();
    out.push_str("            busy <= 1'b0;\n            done <= 1'b0;\n            lfsr <= 32'hace1ace1;\n");
    out.push_str("        end else begin\n");
    out.push_str("            lfsr <= {lfsr[30:0], lfsr[31] ^ lfsr[21] ^ lfsr[1] ^ lfsr[0]};\n");
    out.push_str("            if (start) begin\n");
    writeln!(out, "                t <= {};", lit(tb, 0)).unwrap();
    out.push_str("                busy <= 1'b1;\n                done <= 1'b0;\n");
    out.push_str("            end else if (busy) begin\n");
    out.push_str("                if (t == LAST_CYCLE) begin\n                    busy <= 1'b0;\n                    done <= 1'b1;\n");
    out.push_str("                end else begin\n                    t <= t + 1'b1;\n                end\n");
    out.push_str("            end else begin\n                done <= 1'b0;\n            end\n");
    out.push_str("        end\n    end\n\n");

    for j in 0..q {
        writeln!(
            out,
            "    assign row_won[{j}] = winner_valid & (winner == {});",
            lit(ib, j as u64)
        )
        .unwrap();
    }
    out.push('\n');
    writeln!(
        out,
        "    {d}_wta u_wta (.clk(clk), .rst(rst), .start(start), .fire_now(fire_now), .winner(winner), .winner_valid(winner_valid));"
    )
    .unwrap();

    let stdp_module = if hw.macro_mode {
        MACRO_STDP.to_string()
    } else {
        format!("{d}_stdp")
    };
    let stdp_params = stdp_params(&hw.stdp);
    for j in 0..q {
        out.push('\n');
        writeln!(
            out,
            "    {d}_neuron u_neuron_{j} (.clk(clk), .rst(rst), .start(start), .run(busy), .t(t), .resp_bus(resp{}), .fire_now(fire_now[{j}]), .fired(fired[{j}]), .spike_time(spike_times{}));",
            field(j, p as u32 * wb),
            field(j, tb)
        )
        .unwrap();
        for i in 0..p {
            let k = j * p + i;
            writeln!(
                out,
                "    {d}_synapse #(.W_INIT({})) u_syn_{j}_{i} (.clk(clk), .rst(rst), .start(start), .run(busy), .spike_in(spike_in[{i}]), .post_fired(fired[{j}]), .inc(inc[{k}]), .dec(dec[{k}]), .resp(resp{}), .seen(seen[{k}]), .early(early[{k}]));",
                lit(wb, w.get(j, i) as u64),
                field(k, wb)
            )
            .unwrap();
            let off = k % 25;
            writeln!(
                out,
                "    {stdp_module} {stdp_params} u_stdp_{j}_{i} (.x(seen[{k}]), .y(row_won[{j}]), .early(early[{k}]), .update(update), .rnd(lfsr[{}:{off}]), .inc(inc[{k}]), .dec(dec[{k}]));",
                off + 7
            )
            .unwrap();
        }
    }
    out.push_str("endmodule\n");
}

fn macro_stubs() -> String {
    let mut out =
        String::from("// Black-box interfaces of the TNN7 macro cells used in macro mode.\n`timescale 1ns/1ps\n\n");
    writeln!(out, "(* blackbox *)\nmodule {MACRO_WTA} (").unwrap();
    out.push_str("    input wire fire,\n    input wire inhibit_in,\n    output wire win,\n    output wire inhibit_out\n);\nendmodule\n\n");
    writeln!(out, "(* blackbox *)\nmodule {MACRO_STDP} #(").unwrap();
    for (name, sep) in [("TH_CAPTURE", ","), ("TH_BACKOFF", ","), ("TH_SEARCH", "")] {
        writeln!(out, "    parameter [8:0] {name} = {}{sep}", lit(9, 256)).unwrap();
    }
    out.push_str(") (\n    input wire x,\n    input wire y,\n    input wire early,\n    input wire update,\n");
    out.push_str("    input wire [7:0] rnd,\n    output wire inc,\n    output wire dec\n);\nendmodule\n");
    out
}

/// Emit the column RTL with the trained weights as synapse reset values.
pub fn generate_column_rtl(hw: &HardwareConfig, w: &WeightMatrix) -> Result<RtlBundle> {
    hw.validate()?;
    hw.check_weights(w)?;
    let d = &hw.design;
    let n = hw.synapse_count();

    let mut text = String::new();
    header(&mut text, hw);
    synapse_module(&mut text, hw);
    neuron_module(&mut text, hw);
    let wta_cells = wta_module(&mut text, hw);
    if !hw.macro_mode {
        stdp_module(&mut text, hw);
    }
    top_module(&mut text, hw, w);

    let mut files = BTreeMap::new();
    files.insert(format!("{d}.v"), text);
    let mut manifest = vec![
        ModuleCount {
            module: d.clone(),
            instances: 1,
        },
        ModuleCount {
            module: format!("{d}_synapse"),
            instances: n,
        },
        ModuleCount {
            module: format!("{d}_neuron"),
            instances: hw.q as u64,
        },
        ModuleCount {
            module: format!("{d}_wta"),
            instances: 1,
        },
    ];
    if hw.macro_mode {
        files.insert(MACRO_STUB_FILE.to_string(), macro_stubs());
        manifest.push(ModuleCount {
            module: MACRO_WTA.into(),
            instances: wta_cells,
        });
        manifest.push(ModuleCount {
            module: MACRO_STDP.into(),
            instances: n,
        });
    } else {
        manifest.push(ModuleCount {
            module: format!("{d}_stdp"),
            instances: n,
        });
    }
    Ok(RtlBundle { files, manifest })
}
