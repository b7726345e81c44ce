// SPDX-License-Identifier: Apache-2.0

mod common;

use faultline::circuit::{parse_netlist, HierRef};
use faultline::random::Rng;
use faultline::report::FailureCode;
use faultline::sim::Simulator;
use faultline::{RunOptions, SimModel, Tester, Verdict};
use num_bigint::BigUint;

fn run(net: &str, p: &faultline::ActionProgram, opts: RunOptions) -> faultline::TestReport {
    let c = common::netlist(net);
    SimModel::compile(&c).unwrap().run(p, opts).unwrap()
}

#[test]
fn add16_passes_and_mutant_reports_observed() {
    let c = common::netlist("add16");
    let ok = run("add16", &common::add16_program(&c, 5), RunOptions::default());
    assert_eq!(ok.verdict, Verdict::Pass);
    assert_eq!(ok.actions_executed, 4);

    let bad = run("add16", &common::add16_program(&c, 6), RunOptions::default());
    assert_eq!(bad.verdict, Verdict::Fail);
    let f = &bad.failures[0];
    assert_eq!(f.code, FailureCode::ExpectMismatch);
    assert_eq!(f.path, "root[3]");
    assert_eq!(f.observed.as_deref(), Some("5"));
    assert_eq!(f.expected.as_deref(), Some("6"));
}

#[test]
fn pokes_are_invisible_until_eval() {
    let c = common::netlist("add16");
    let mut t = Tester::new(&c, None).unwrap();
    t.poke("in0", 3u32).unwrap();
    t.poke("in1", 2u32).unwrap();
    t.expect("out", 5u32).unwrap();
    let r = run("add16", &t.finalize().unwrap(), RunOptions::default());
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.failures[0].observed.as_deref(), Some("0"));
}

#[test]
fn print_output_is_captured() {
    let c = common::netlist("add16");
    let r = run("add16", &common::print_program(&c), RunOptions::default());
    assert!(r.passed());
    assert_eq!(r.prints, "in0=3 in1=0002 out=0000000000000101\n");
}

#[test]
fn reset_sequence_is_port_discovery_invariant() {
    let c = common::netlist("reset_reg");
    let explicit = common::reset_program(&c, true);
    let auto = common::reset_program(&c, false);
    assert_eq!(explicit.serialize(), auto.serialize());
    let r = run("reset_reg", &auto, RunOptions::default());
    assert!(r.passed(), "{r:?}");
}

#[test]
fn registers_start_at_reset_value_and_hold_under_reset() {
    let c = common::netlist("reset_reg");
    let mut t = Tester::new(&c, Some(HierRef::port("clk"))).unwrap();
    // rstn is still 0 here, so the register stays in reset across the edge.
    t.poke("d", 3u32).unwrap();
    t.eval();
    t.step(2).unwrap();
    t.expect("q", 9u32).unwrap();
    assert!(run("reset_reg", &t.finalize().unwrap(), RunOptions::default()).passed());
}

#[test]
fn ready_loop_runs_five_cycles() {
    let c = common::netlist("ready");
    let p = common::ready_program(&c);
    let model = SimModel::compile(&c).unwrap();
    let mut sim = Simulator::new(&model);
    let mut report = faultline::TestReport::new("interp");
    sim.execute(&p.actions, "root", RunOptions::default(), &mut report);
    let report = report.finish();
    assert!(report.passed(), "{report:?}");
    // Five iterations of step(2): ten half periods.
    assert_eq!(sim.time(), 10);
    assert_eq!(sim.read(&HierRef::port("count")).unwrap(), BigUint::from(5u32));

    let guarded = model
        .run(
            &p,
            RunOptions {
                max_loop_iters: 3,
                ..RunOptions::default()
            },
        )
        .unwrap();
    assert_eq!(guarded.verdict, Verdict::Error);
    let exact = model
        .run(
            &p,
            RunOptions {
                max_loop_iters: 5,
                ..RunOptions::default()
            },
        )
        .unwrap();
    assert!(exact.passed());
}

#[test]
fn unrolled_random_test_is_flat_and_passes() {
    let c = common::netlist("add16");
    let p = common::unrolled(&c, "0xF4ULT");
    assert_eq!(p.actions.len(), 32 * 4);
    assert!(!p.has_control_flow());
    assert!(run("add16", &p, RunOptions::default()).passed());
    assert_eq!(common::unrolled(&c, "0xF4ULT"), p);
    for width in [1, 4, 8, 16, 32] {
        let c = parse_netlist(&common::add_netlist(width)).unwrap();
        let p = common::unrolled(&c, "0xF4ULT");
        let r = SimModel::compile(&c).unwrap().run(&p, RunOptions::default()).unwrap();
        assert!(r.passed(), "width {width}: {r:?}");
    }
}

#[test]
fn exhaustive_sweeps_match_dag_evaluation() {
    let mut rng = Rng::new(0x5eed);
    for i in 0..50 {
        let net = common::randnet::random_netlist(&mut rng, i, 12);
        assert!(net.total_input_width() <= 12);
        let c = parse_netlist(&net.json).unwrap_or_else(|e| panic!("{e}\n{}", net.json));
        let model = SimModel::compile(&c).unwrap();
        let mut sim = Simulator::new(&model);
        let total = net.total_input_width();
        for combo in 0u64..(1 << total) {
            let mut values = Vec::new();
            let mut shift = 0;
            for (name, w) in &net.inputs {
                let v = (combo >> shift) & ((1 << w) - 1);
                shift += w;
                values.push(v);
                sim.poke(name, BigUint::from(v)).unwrap();
            }
            sim.eval();
            let oracle = net.eval(&values);
            for (name, node) in &net.outputs {
                let got = sim.read(&HierRef::port(name)).unwrap();
                assert_eq!(got, BigUint::from(oracle[*node]), "{name} of\n{}\ninputs {values:?}", net.json);
            }
        }
    }
}
