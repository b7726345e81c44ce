// SPDX-License-Identifier: Apache-2.0

//! Fixture bundles shared by the integration tests. Netlists are checked-in
//! JSON; programs are recorded here with the builder and compared against the
//! checked-in program files by `fixtures.rs`.

#![allow(dead_code)]

pub mod explicit;
pub mod oracles;
pub mod randnet;

use std::path::PathBuf;

use faultline::circuit::{parse_netlist, CircuitDecl, HierRef};
use faultline::expr::Expr;
use faultline::ir::ActionProgram;
use faultline::tester::Tester;

pub fn fixture_dir() -> PathBuf {
    // Resolves from either workspace crate.
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn golden_dir() -> PathBuf {
    fixture_dir().join("golden")
}

pub fn netlist(name: &str) -> CircuitDecl {
    let path = fixture_dir().join(format!("{name}.netlist.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_netlist(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Compare `actual` with a checked-in file, rewriting it when
/// `UPDATE_GOLDENS=1`.
pub fn check_golden(rel: &str, actual: &str) {
    let path = fixture_dir().join(rel);
    if std::env::var("UPDATE_GOLDENS").as_deref() == Ok("1") {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDENS=1 to create)", path.display()));
    assert!(expected == actual, "{} differs from the generated text:\n{actual}", path.display());
}

fn clk() -> Option<HierRef> {
    Some(HierRef::port("clk"))
}

pub fn add16_program(c: &CircuitDecl, expected: u64) -> ActionProgram {
    let mut t = Tester::new(c, None).unwrap();
    t.poke("in0", 3u32).unwrap();
    t.poke("in1", 2u32).unwrap();
    t.eval();
    t.expect("out", expected).unwrap();
    t.finalize().unwrap()
}

pub fn print_program(c: &CircuitDecl) -> ActionProgram {
    let mut t = Tester::new(c, None).unwrap();
    t.poke("in0", 3u32).unwrap();
    t.poke("in1", 2u32).unwrap();
    t.eval();
    let args = vec![t.peek("in0").unwrap(), t.peek("in1").unwrap(), t.peek("out").unwrap()];
    t.print("in0=%d in1=%x out=%b\n", args).unwrap();
    t.expect("out", 5u32).unwrap();
    t.finalize().unwrap()
}

/// Load a value, then pulse reset; `explicit` names the reset port instead of
/// discovering it by type.
pub fn reset_program(c: &CircuitDecl, explicit: bool) -> ActionProgram {
    let mut t = Tester::new(c, clk()).unwrap();
    t.poke("rstn", 1u32).unwrap();
    t.poke("d", 5u32).unwrap();
    t.eval();
    t.step(2).unwrap();
    t.expect("q", 5u32).unwrap();
    t.reset_sequence(explicit.then(|| HierRef::port("rstn"))).unwrap();
    t.expect("q", 9u32).unwrap();
    t.finalize().unwrap()
}

pub fn ready_program(c: &CircuitDecl) -> ActionProgram {
    let mut t = Tester::new(c, clk()).unwrap();
    t.eval();
    let ready = t.peek("ready").unwrap();
    {
        let mut body = t.begin_while(ready).unwrap();
        body.expect("ready", 1u32).unwrap();
        body.step(2).unwrap();
    }
    t.expect("count", 5u32).unwrap();
    t.finalize().unwrap()
}

/// Configure the opcode register for addition, then constrain the operands so
/// the sum cannot overflow and require the result to dominate both.
pub fn alu_program(c: &CircuitDecl) -> ActionProgram {
    let mut t = Tester::new(c, clk()).unwrap();
    t.poke("opcode_en", 1u32).unwrap();
    t.poke("opcode", 0u32).unwrap();
    t.step(2).unwrap();
    t.poke("opcode_en", 0u32).unwrap();
    t.step(2).unwrap();
    t.assume_with("a", |a| a.ult(Expr::constant(8u32, 4))).unwrap();
    t.assume_with("b", |b| b.ult(Expr::constant(8u32, 4))).unwrap();
    let (a, b, out) = (t.port_var("a").unwrap(), t.port_var("b").unwrap(), t.port_var("c").unwrap());
    t.guarantee(out.clone().uge(a).logical_and(out.uge(b))).unwrap();
    t.finalize().unwrap()
}

pub fn inverter_program(c: &CircuitDecl) -> ActionProgram {
    let mut t = Tester::new(c, None).unwrap();
    t.poke("I", 1u32).unwrap();
    t.eval();
    t.expect("O", 0u32).unwrap();
    t.poke("I", 0u32).unwrap();
    t.eval();
    t.expect("O", 1u32).unwrap();
    t.finalize().unwrap()
}

/// Free-running counter with the claim that it never reaches 7.
pub fn counter_program(c: &CircuitDecl) -> ActionProgram {
    let mut t = Tester::new(c, clk()).unwrap();
    t.assume_with("en", |en| en.equal(Expr::constant(1u32, 1))).unwrap();
    let count = t.port_var("count").unwrap();
    t.guarantee(count.not_equal(Expr::constant(7u32, 3))).unwrap();
    t.finalize().unwrap()
}

/// Every (netlist, program file, builder) bundle.
pub fn bundles() -> Vec<(&'static str, &'static str, ActionProgram)> {
    let add = netlist("add16");
    vec![
        ("add16", "add16", add16_program(&add, 5)),
        ("add16", "add16_print", print_program(&add)),
        ("reset_reg", "reset", reset_program(&netlist("reset_reg"), false)),
        ("ready", "ready", ready_program(&netlist("ready"))),
        ("alu", "alu", alu_program(&netlist("alu"))),
        ("inverter", "inverter", inverter_program(&netlist("inverter"))),
        ("counter3", "counter3", counter_program(&netlist("counter3"))),
    ]
}

pub fn add_netlist(width: u32) -> String {
    format!(
        r#"{{"name": "Add{width}", "ports": [
            {{"name": "in0", "dir": "input", "type": {{"bv": {width}}}}},
            {{"name": "in1", "dir": "input", "type": {{"bv": {width}}}}},
            {{"name": "out", "dir": "output", "type": {{"bv": {width}}}}}],
           "instances": [{{"name": "add", "kind": "add", "params": {{"width": {width}}}}}],
           "nets": [{{"from": "in0", "to": ["add.in0"]}}, {{"from": "in1", "to": ["add.in1"]}},
                    {{"from": "add.out", "to": ["out"]}}]}}"#
    )
}

/// Host-loop unrolled random test: the mask comes from port introspection.
pub fn unrolled(c: &CircuitDecl, seed: &str) -> ActionProgram {
    let width = c.port_width("in0").unwrap();
    let n: u64 = if width >= 64 { u64::MAX } else { (1 << width) - 1 };
    let mut rng = faultline::random::Rng::new(faultline::random::parse_seed(seed));
    let mut t = Tester::new(c, None).unwrap();
    for _ in 0..32 {
        let (i0, i1) = (rng.next_u64() & n, rng.next_u64() & n);
        t.poke("in0", i0).unwrap();
        t.poke("in1", i1).unwrap();
        t.eval();
        t.expect("out", i0.wrapping_add(i1) & n).unwrap();
    }
    t.finalize().unwrap()
}

/// Poke assignments in a C++ harness: skips the zero initializers and clock
/// toggles, which never take a `UINT64_C` or expression operand.
pub fn cxx_poke_count(text: &str) -> usize {
    text.lines()
        .map(str::trim)
        .filter(|l| l.starts_with("__fl_top->") && l.contains(" = ") && !l.ends_with(" = 0;") && !l.contains(" = !"))
        .count()
}
