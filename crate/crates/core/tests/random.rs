// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;

use faultline::expr::Expr;
use faultline::formal::{bmc, encode_ts, lower_prefix, BmcResult};
use faultline::random::{
    run_constrained_random, sample_rejection, sample_solver, Assignment, Rng, SampleError, SamplingPlan, Strategy,
};
use faultline::{SimModel, Tester, Verdict};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

const REJECT: Strategy = Strategy::Rejection { max_tries: 1000 };

fn one_port(pred: Expr, n: usize, strategy: Strategy) -> SamplingPlan {
    SamplingPlan::new(vec![("a".into(), 16)], vec![("a".into(), pred)], n, strategy).unwrap()
}

fn a16() -> Expr {
    Expr::var("a", 16)
}

fn value(s: &Assignment, port: &str) -> u64 {
    s[port].to_u64().unwrap()
}

#[test]
fn rejection_respects_the_bound() {
    let plan = one_port(a16().ult(Expr::constant(32768u32, 16)), 100, REJECT);
    let samples = sample_rejection(&plan, &mut Rng::new(7)).unwrap();
    assert_eq!(samples.len(), 100);
    assert!(samples.iter().all(|s| value(s, "a") < 32768));
    assert!(samples.iter().all(|s| plan.satisfied(s).unwrap()));
}

#[test]
fn tautology_accepts_the_first_draw() {
    let plan = one_port(a16().ule(Expr::constant(65535u32, 16)), 3, Strategy::Rejection { max_tries: 1 });
    let samples = sample_rejection(&plan, &mut Rng::new(11)).unwrap();
    let mut rng = Rng::new(11);
    let direct: Vec<BigUint> = (0..3).map(|_| rng.bits(16)).collect();
    let got: Vec<BigUint> = samples.iter().map(|s| s["a"].clone()).collect();
    assert_eq!(got, direct);
}

#[test]
fn narrow_predicate_exhausts_tries() {
    let plan = one_port(a16().equal(Expr::constant(0u32, 16)), 5, Strategy::Rejection { max_tries: 10 });
    let err = sample_rejection(&plan, &mut Rng::new(1)).unwrap_err();
    assert!(matches!(err, SampleError::Exhausted { tries: 10, .. }), "{err}");
    // True acceptance is 2^-16; ten draws almost surely see none.
    assert!(err.acceptance_estimate().unwrap() < 0.01);
}

#[test]
fn solver_enumerates_small_spaces_exactly() {
    let plan = one_port(a16().ult(Expr::constant(4u32, 16)), 10, Strategy::Solver);
    let samples = sample_solver(&plan, &mut Rng::new(5)).unwrap();
    let values: BTreeSet<u64> = samples.iter().map(|s| value(s, "a")).collect();
    assert_eq!(samples.len(), 4);
    assert_eq!(values, BTreeSet::from([0, 1, 2, 3]));

    let unsat = one_port(a16().ult(Expr::constant(0u32, 16)), 1, Strategy::Solver);
    assert!(matches!(sample_solver(&unsat, &mut Rng::new(5)), Err(SampleError::Unsat)));
}

#[test]
fn solver_samples_are_distinct_and_admissible() {
    let a = Expr::var("a", 8);
    let b = Expr::var("b", 8);
    let plan = SamplingPlan::new(
        vec![("a".into(), 8), ("b".into(), 8)],
        vec![
            ("a".into(), a.clone().ult(b.clone())),
            ("b".into(), b.ult(Expr::constant(40u32, 8))),
        ],
        200,
        Strategy::Solver,
    )
    .unwrap();
    let samples = sample_solver(&plan, &mut Rng::new(9)).unwrap();
    assert_eq!(samples.len(), 200);
    let distinct: BTreeSet<_> = samples.iter().collect();
    assert_eq!(distinct.len(), 200);
    assert!(samples.iter().all(|s| plan.satisfied(s).unwrap()));

    // The same relational plan is out of reach for rejection sampling.
    let rej = SamplingPlan { strategy: REJECT, ..plan };
    assert!(matches!(sample_rejection(&rej, &mut Rng::new(9)), Err(SampleError::Relational { .. })));
}

#[test]
fn sampling_is_deterministic_per_seed() {
    for strategy in [REJECT, Strategy::Solver] {
        let plan = one_port(a16().ult(Expr::constant(1000u32, 16)), 50, strategy);
        let x = plan.sample(&mut Rng::new(42)).unwrap();
        let y = plan.sample(&mut Rng::new(42)).unwrap();
        let z = plan.sample(&mut Rng::new(43)).unwrap();
        assert_eq!(x, y);
        assert_ne!(x, z);
    }
}

#[test]
fn zero_samples_is_rejected() {
    assert!(matches!(
        SamplingPlan::new(vec![("a".into(), 16)], vec![], 0, REJECT),
        Err(SampleError::ZeroSamples)
    ));
    let c = common::netlist("alu");
    let model = SimModel::compile(&c).unwrap();
    assert!(run_constrained_random(&common::alu_program(&c), &model, 0, 1, REJECT).is_err());
}

#[test]
fn program_without_guarantee_is_rejected() {
    let c = common::netlist("add16");
    let mut t = Tester::new(&c, None).unwrap();
    t.assume_with("in0", |x| x.ult(Expr::constant(5u32, 16))).unwrap();
    let model = SimModel::compile(&c).unwrap();
    assert!(run_constrained_random(&t.finalize().unwrap(), &model, 10, 1, REJECT).is_err());
}

/// Frozen seeds for the ALU campaigns.
pub const SEEDS: [(Strategy, u64); 2] = [(REJECT, 0xA1), (Strategy::Solver, 0xA2)];

#[test]
fn correct_alu_passes_both_strategies() {
    let c = common::netlist("alu");
    let model = SimModel::compile(&c).unwrap();
    let p = common::alu_program(&c);
    for (strategy, seed) in SEEDS {
        let r = run_constrained_random(&p, &model, 100, seed, strategy).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", strategy.name());
        assert_eq!(r.seed, Some(seed));
        // The admissible space has 64 points, so the solver stops there.
        let drawn = if strategy == Strategy::Solver { 64 } else { 100 };
        // Five prefix actions, then one guarantee check per sample.
        assert_eq!(r.actions_executed, 5 + drawn);
        assert_eq!(r.status.as_deref(), Some(format!("{drawn} {} samples", strategy.name()).as_str()));
    }
}

/// Parse `a=.. b=..` out of a failure message.
fn operands(message: &str) -> (u32, u32) {
    let inner = message.split('(').nth(1).unwrap().split(')').next().unwrap();
    let mut a = None;
    let mut b = None;
    for kv in inner.split(' ') {
        let (k, v) = kv.split_once('=').unwrap();
        match k {
            "a" => a = v.parse().ok(),
            "b" => b = v.parse().ok(),
            _ => {}
        }
    }
    (a.unwrap(), b.unwrap())
}

#[test]
fn swapped_alu_fails_and_bmc_confirms() {
    let bad = common::netlist("alu_swapped");
    let model = SimModel::compile(&bad).unwrap();
    let p = common::alu_program(&bad);
    for (strategy, seed) in SEEDS {
        let r = run_constrained_random(&p, &model, 100, seed, strategy).unwrap();
        assert_eq!(r.verdict, Verdict::Fail, "{}", strategy.name());
        assert!(!r.failures.is_empty());
        for f in &r.failures {
            let (a, b) = operands(&f.message);
            let out = a.wrapping_sub(b) & 15;
            assert!(a < 8 && b < 8 && !(out >= a && out >= b), "{}", f.message);
        }
        // Pin the first violating sample and let bmc confirm it.
        let (a, b) = operands(&r.failures[0].message);
        let mut t = Tester::new(&bad, Some(faultline::HierRef::port("clk"))).unwrap();
        t.poke("opcode_en", 1u32).unwrap();
        t.poke("opcode", 0u32).unwrap();
        t.step(2).unwrap();
        t.poke("opcode_en", 0u32).unwrap();
        t.step(2).unwrap();
        t.assume_with("a", |x| x.equal(Expr::constant(a, 4))).unwrap();
        t.assume_with("b", |x| x.equal(Expr::constant(b, 4))).unwrap();
        let (va, vb, vc) = (t.port_var("a").unwrap(), t.port_var("b").unwrap(), t.port_var("c").unwrap());
        t.guarantee(vc.clone().uge(va).logical_and(vc.uge(vb))).unwrap();
        let pinned = t.finalize().unwrap();
        let ts = lower_prefix(&pinned, &bad, &encode_ts(&bad).unwrap()).unwrap();
        assert!(matches!(bmc(&ts, 0).unwrap(), BmcResult::Counterexample(_)));
    }
}

#[test]
fn random_reports_are_reproducible() {
    let bad = common::netlist("alu_swapped");
    let model = SimModel::compile(&bad).unwrap();
    let p = common::alu_program(&bad);
    for (strategy, seed) in SEEDS {
        let x = run_constrained_random(&p, &model, 100, seed, strategy).unwrap();
        let y = run_constrained_random(&p, &model, 100, seed, strategy).unwrap();
        assert_eq!(x.to_json(), y.to_json());
    }
}
