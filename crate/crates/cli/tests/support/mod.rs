// SPDX-License-Identifier: Apache-2.0

//! CLI invocations shared by the integration and acceptance tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

pub fn faultline(args: &[&str], out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_faultline"));
    cmd.args(args).env_remove("FAULTLINE_OUT");
    if matches!(args.first(), Some(&"run") | Some(&"emit")) {
        cmd.arg("--out").arg(out);
    }
    cmd.output().expect("binary runs")
}

/// (args, expected exit code). Each invocation is run into a fresh directory.
pub fn invocations() -> Vec<(Vec<String>, i32)> {
    let f = fixture;
    let b = |net: &str, prog: &str, extra: &[&str], cmd: &str| {
        let mut v = vec![cmd.to_string(), f(&format!("{net}.netlist.json")), f(&format!("{prog}.program.json"))];
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };
    let pass_csv = f("inverter_pass.csv");
    let fail_csv = f("inverter_fail.csv");
    vec![
        (b("add16", "add16", &[], "run"), 0),
        (b("add16", "add16_print", &[], "run"), 0),
        (b("reset_reg", "reset", &["--trace"], "run"), 0),
        (b("ready", "ready", &[], "run"), 0),
        (b("ready", "ready", &["--max-loop-iters", "3"], "run"), 2),
        (b("alu", "alu", &["--target", "formal", "--bound", "4", "--k", "2"], "run"), 0),
        (b("alu", "alu", &["--target", "formal", "--bound", "4"], "run"), 0),
        (b("alu_swapped", "alu", &["--target", "formal", "--bound", "4"], "run"), 1),
        (b("counter3", "counter3", &["--target", "formal", "--bound", "8"], "run"), 1),
        (b("alu", "alu", &["--target", "random", "--seed", "0xA1"], "run"), 0),
        (b("alu", "alu", &["--target", "random", "--seed", "0xA2", "--strategy", "solver"], "run"), 0),
        (b("alu_swapped", "alu", &["--target", "random", "--seed", "0xA1"], "run"), 1),
        (b("alu_swapped", "alu", &["--target", "random", "--seed", "0xA2", "--strategy", "solver"], "run"), 1),
        (b("inverter", "inverter", &["--target", "spice-check", "--results", &pass_csv], "run"), 0),
        (b("inverter", "inverter", &["--target", "spice-check", "--results", &fail_csv], "run"), 1),
        (b("add16", "add16", &["--target", "sv", "--dialect", "iverilog"], "emit"), 0),
        (b("ready", "ready", &["--target", "sv", "--dialect", "commercial-a"], "emit"), 0),
        (b("add16", "add16_print", &["--target", "cxx"], "emit"), 0),
        (b("inverter", "inverter", &["--target", "spice-emit"], "emit"), 0),
        (b("alu", "alu", &["--target", "formal", "--bound", "1"], "emit"), 0),
    ]
}

pub fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    if let Ok(rd) = fs::read_dir(dir) {
        for e in rd {
            let e = e.unwrap();
            m.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap());
        }
    }
    m
}
