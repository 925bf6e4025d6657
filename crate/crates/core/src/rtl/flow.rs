use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::verilog::MACRO_STUB_FILE;
use super::{HardwareConfig, Library};
use crate::error::Result;

/// Synthesis, place-and-route and constraint scripts for one library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowScriptBundle {
    pub library: Library,
    pub files: BTreeMap<String, String>,
    /// Library-root variables and the value substituted for each; unresolved
    /// variables are left as run-time `$::env(...)` lookups.
    pub env: BTreeMap<String, String>,
}

pub fn generate_flow_scripts(hw: &HardwareConfig) -> Result<FlowScriptBundle> {
    generate_flow_scripts_with_env(hw, &BTreeMap::new())
}

/// Instantiate the flow templates. `env` may supply a concrete value for the
/// library root variable (`FREEPDK45_ROOT`, `ASAP7_ROOT` or `TNN7_ROOT`).
pub fn generate_flow_scripts_with_env(hw: &HardwareConfig, env: &BTreeMap<String, String>) -> Result<FlowScriptBundle> {
    hw.validate()?;
    let var = hw.library.root_var();
    let root = match env.get(var) {
        Some(v) => format!("\"{v}\""),
        None => format!("$::env({var})"),
    };
    let recorded = env.get(var).cloned().unwrap_or_else(|| format!("${var}"));

    let mut files = BTreeMap::new();
    files.insert("constraints.sdc".to_string(), constraints(hw));
    files.insert("synth.tcl".to_string(), synth(hw, &root));
    files.insert("pnr.tcl".to_string(), pnr(hw, &root));
    Ok(FlowScriptBundle {
        library: hw.library,
        files,
        env: BTreeMap::from([(var.to_string(), recorded)]),
    })
}

fn constraints(hw: &HardwareConfig) -> String {
    let mut out = String::new();
    writeln!(out, "# Timing constraints for {} ({})", hw.design, hw.library).unwrap();
    writeln!(
        out,
        "create_clock -name clk -period {} [get_ports clk]",
        hw.clock_period_ns
    )
    .unwrap();
    let io = hw.clock_period_ns * 0.2;
    writeln!(
        out,
        "set_input_delay {io} -clock clk [remove_from_collection [all_inputs] [get_ports clk]]"
    )
    .unwrap();
    writeln!(out, "set_output_delay {io} -clock clk [all_outputs]").unwrap();
    out.push_str("set_load 0.01 [all_outputs]\n");
    out
}

fn synth(hw: &HardwareConfig, root: &str) -> String {
    let d = &hw.design;
    let lib = hw.library;
    let mut out = String::new();
    writeln!(out, "# Logic synthesis of {d} targeting {lib}").unwrap();
    writeln!(out, "set DESIGN {d}").unwrap();
    writeln!(out, "set LIB_ROOT {root}").unwrap();
    out.push_str("set_db init_lib_search_path [list $LIB_ROOT/lib]\n");
    if hw.macro_mode {
        out.push_str("set_db library [concat [glob $LIB_ROOT/lib/*.lib] [glob $LIB_ROOT/macros/*.lib]]\n");
        writeln!(out, "read_hdl {MACRO_STUB_FILE}").unwrap();
    } else {
        out.push_str("set_db library [glob $LIB_ROOT/lib/*.lib]\n");
    }
    writeln!(out, "read_hdl {d}.v").unwrap();
    out.push_str("elaborate $DESIGN\n");
    out.push_str("read_sdc constraints.sdc\n");
    out.push_str("syn_generic\nsyn_map\nsyn_opt\n");
    out.push_str("file mkdir reports\n");
    out.push_str("report_area > reports/synth_area.rpt\n");
    out.push_str("report_power > reports/synth_power.rpt\n");
    out.push_str("report_timing > reports/synth_timing.rpt\n");
    out.push_str("write_hdl > ${DESIGN}_netlist.v\n");
    out.push_str("write_sdc > ${DESIGN}_synth.sdc\n");
    out.push_str("exit\n");
    out
}

fn pnr(hw: &HardwareConfig, root: &str) -> String {
    let d = &hw.design;
    let lib = hw.library;
    let mut out = String::new();
    writeln!(out, "# Place and route of {d} targeting {lib}").unwrap();
    writeln!(out, "set DESIGN {d}").unwrap();
    writeln!(out, "set LIB_ROOT {root}").unwrap();
    if hw.macro_mode {
        out.push_str("set init_lef_file [concat [glob $LIB_ROOT/lef/*.lef] [glob $LIB_ROOT/macros/*.lef]]\n");
        out.push_str("set MACRO_LIBS [glob $LIB_ROOT/macros/*.lib]\n");
    } else {
        out.push_str("set init_lef_file [glob $LIB_ROOT/lef/*.lef]\n");
    }
    out.push_str("set init_verilog ${DESIGN}_netlist.v\n");
    out.push_str("set init_top_cell $DESIGN\n");
    out.push_str("set init_pwr_net VDD\nset init_gnd_net VSS\n");
    out.push_str("init_design\n");
    out.push_str("floorPlan -r 1.0 0.7 2 2 2 2\n");
    out.push_str("globalNetConnect VDD -type pgpin -pin VDD -all\n");
    out.push_str("globalNetConnect VSS -type pgpin -pin VSS -all\n");
    out.push_str("place_design\n");
    out.push_str("place_opt_design\n");
    out.push_str("routeDesign\n");
    out.push_str("file mkdir reports\n");
    out.push_str("report_area > reports/pnr_area.rpt\n");
    out.push_str("report_power -leakage > reports/pnr_leakage.rpt\n");
    out.push_str("saveNetlist ${DESIGN}_pnr.v\n");
    out.push_str("exit\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::column::{ColumnConfig, ResponseKind};

    fn hw(library: Library, macro_mode: bool) -> HardwareConfig {
        let cfg = ColumnConfig {
            p: 4,
            q: 2,
            theta: 4,
            w_max: 7,
            window: 8,
            response: ResponseKind::RampNoLeak,
            lif_leak_shift: 0,
        };
        let mut hw = HardwareConfig::for_column("col", &cfg, library);
        hw.macro_mode = macro_mode;
        hw
    }

    fn libraries_named(text: &str) -> Vec<Library> {
        let lower = text.to_lowercase();
        Library::ALL
            .into_iter()
            .filter(|l| lower.contains(l.as_str()))
            .collect()
    }

    #[test]
    fn freepdk45_token() {
        let b = generate_flow_scripts(&hw(Library::Freepdk45, false)).unwrap();
        assert!(b.files["synth.tcl"].contains("freepdk45"));
    }

    #[test]
    fn tnn7_macro_reference() {
        let b = generate_flow_scripts(&hw(Library::Tnn7, true)).unwrap();
        assert!(b.files["pnr.tcl"].contains("$LIB_ROOT/macros/*.lef"));
        let plain = generate_flow_scripts(&hw(Library::Tnn7, false)).unwrap();
        assert!(!plain.files["pnr.tcl"].contains("macros"));
    }

    #[test]
    fn one_library_per_script() {
        for lib in Library::ALL {
            for macro_mode in [false, lib == Library::Tnn7] {
                let b = generate_flow_scripts(&hw(lib, macro_mode)).unwrap();
                for name in ["synth.tcl", "pnr.tcl", "constraints.sdc"] {
                    assert_eq!(libraries_named(&b.files[name]), vec![lib], "{name}");
                }
            }
        }
    }

    #[test]
    fn env_substitution() {
        let env = BTreeMap::from([("ASAP7_ROOT".to_string(), "/pdk/asap7".to_string())]);
        let b = generate_flow_scripts_with_env(&hw(Library::Asap7, false), &env).unwrap();
        assert!(b.files["synth.tcl"].contains("set LIB_ROOT \"/pdk/asap7\""));
        assert_eq!(b.env["ASAP7_ROOT"], "/pdk/asap7");
        let b = generate_flow_scripts(&hw(Library::Asap7, false)).unwrap();
        assert!(b.files["synth.tcl"].contains("$::env(ASAP7_ROOT)"));
    }
}
