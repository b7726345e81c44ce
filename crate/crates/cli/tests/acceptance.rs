// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria. Each prints one PASS/FAIL line with its elapsed time
//! against a pinned limit. Runs without the test harness so the table is
//! always printed; exits nonzero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::time::{Duration, Instant};

use faultline::circuit::parse_netlist;
use faultline::codegen::{emit_cxx, emit_sv, EmitOptions, SvDialect};
use faultline::formal::{self, bmc, encode_ts, lower_prefix, replay, BmcResult, FormalOptions};
use faultline::random::{run_constrained_random, Rng, Strategy};
use faultline::report::FailureCode;
use faultline::sim::Simulator;
use faultline::spice::{check_results, compile_pwl, AnalogTiming, SpiceError, WaveformTable};
use faultline::{HierRef, RunOptions, SimModel, Tester, Verdict};
use num_bigint::BigUint;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

/// Every comparison below is exact; only wall-clock limits are tolerances.
const SECOND: Duration = Duration::from_secs(1);
/// Per-check budget for each random-vs-formal sub-check.
const CAMPAIGN_LIMIT: Duration = Duration::from_secs(60);
const RANDOM_SEEDS: [(Strategy, u64); 2] = [(Strategy::Rejection { max_tries: 1000 }, 0xA1), (Strategy::Solver, 0xA2)];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(c: &faultline::CircuitDecl, p: &faultline::ActionProgram, opts: RunOptions) -> Result<faultline::TestReport, String> {
    SimModel::compile(c).map_err(|e| e.to_string())?.run(p, opts).map_err(|e| e.to_string())
}

fn listing_fidelity() -> Outcome {
    let c = common::netlist("add16");
    let ok = run(&c, &common::add16_program(&c, 5), RunOptions::default())?;
    ensure(ok.verdict == Verdict::Pass, || format!("expected pass: {:?}", ok.failures))?;
    let bad = run(&c, &common::add16_program(&c, 6), RunOptions::default())?;
    let f = bad.failures.first().ok_or("mutant produced no failure")?;
    ensure(bad.verdict == Verdict::Fail && f.observed.as_deref() == Some("5"), || format!("{f:?}"))?;
    Ok("pass, mutant observed=5".into())
}

fn unrolled_random() -> Outcome {
    let c = common::netlist("add16");
    let p = common::unrolled(&c, "0xF4ULT");
    ensure(p.actions.len() == 32 * 4 && !p.has_control_flow(), || format!("{} actions", p.actions.len()))?;
    ensure(run(&c, &p, RunOptions::default())?.passed(), || "16-bit run failed".into())?;
    for width in [1, 4, 8, 16, 32] {
        let c = parse_netlist(&common::add_netlist(width)).map_err(|e| e.to_string())?;
        let r = run(&c, &common::unrolled(&c, "0xF4ULT"), RunOptions::default())?;
        ensure(r.passed(), || format!("width {width}: {:?}", r.failures))?;
    }
    Ok("128 flat actions; widths 1,4,8,16,32 pass".into())
}

fn reset_semantics() -> Outcome {
    let c = common::netlist("reset_reg");
    let (explicit, auto) = (common::reset_program(&c, true), common::reset_program(&c, false));
    ensure(explicit.serialize() == auto.serialize(), || "serializations differ".into())?;
    let r = run(&c, &auto, RunOptions::default())?;
    ensure(r.passed(), || format!("{:?}", r.failures))?;
    Ok("explicit == auto-discovered; q reaches 9".into())
}

fn while_loop() -> Outcome {
    let c = common::netlist("ready");
    let p = common::ready_program(&c);
    let model = SimModel::compile(&c).map_err(|e| e.to_string())?;
    let mut sim = Simulator::new(&model);
    let mut report = faultline::TestReport::new("interp");
    sim.execute(&p.actions, "root", RunOptions::default(), &mut report);
    let report = report.finish();
    ensure(report.passed(), || format!("{:?}", report.failures))?;
    // count starts at 0 and ready = count < 5, so five iterations of step(2).
    ensure(sim.time() == 10, || format!("time {}", sim.time()))?;
    let count = sim.read(&HierRef::port("count")).map_err(|e| e.to_string())?;
    ensure(count == BigUint::from(5u32), || format!("count {count}"))?;
    let guarded = model
        .run(&p, RunOptions { max_loop_iters: 3, ..RunOptions::default() })
        .map_err(|e| e.to_string())?;
    ensure(guarded.verdict == Verdict::Error, || format!("guarded verdict {:?}", guarded.verdict))?;
    Ok("5 cycles, count=5; guard 3 -> error".into())
}

fn timed<T>(label: &str, f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    let start = Instant::now();
    let v = f()?;
    let dt = start.elapsed();
    ensure(dt < CAMPAIGN_LIMIT, || format!("{label} took {dt:?}"))?;
    Ok(v)
}

fn random_vs_formal() -> Outcome {
    let (c, bad) = (common::netlist("alu"), common::netlist("alu_swapped"));
    let p = common::alu_program(&c);
    let e = |e: &dyn std::fmt::Display| e.to_string();
    timed("k-induction", || {
        let r = formal::check(&p, &c, FormalOptions { bound: 0, k: Some(2) }).map_err(|x| e(&x))?;
        ensure(r.status.as_deref() == Some("proved"), || format!("status {:?}", r.status))
    })?;
    timed("bmc", || {
        let ts = lower_prefix(&p, &c, &encode_ts(&c).map_err(|x| e(&x))?).map_err(|x| e(&x))?;
        let r = bmc(&ts, 4).map_err(|x| e(&x))?;
        ensure(matches!(r, BmcResult::NoCexUpTo(4)), || format!("{r:?}"))
    })?;
    for (circuit, want) in [(&c, Verdict::Pass), (&bad, Verdict::Fail)] {
        let model = SimModel::compile(circuit).map_err(|x| e(&x))?;
        for (strategy, seed) in RANDOM_SEEDS {
            timed(strategy.name(), || {
                let r = run_constrained_random(&p, &model, 100, seed, strategy).map_err(|x| e(&x))?;
                ensure(r.verdict == want, || format!("{} on {}: {:?}", strategy.name(), circuit.name(), r.verdict))
            })?;
        }
    }
    let depth = timed("swapped bmc", || {
        let ts = lower_prefix(&p, &bad, &encode_ts(&bad).map_err(|x| e(&x))?).map_err(|x| e(&x))?;
        match bmc(&ts, 4).map_err(|x| e(&x))? {
            BmcResult::Counterexample(cex) => {
                let model = SimModel::compile(&bad).map_err(|x| e(&x))?;
                ensure(replay(&cex, &p, &model).map_err(|x| e(&x))?, || "replay does not violate".into())?;
                Ok(cex.depth)
            }
            other => Err(format!("no counterexample: {other:?}")),
        }
    })?;
    Ok(format!("proved; bmc(4) clean; random pass/fail as expected; swapped cex depth {depth} replays"))
}

fn formal_oracles() -> Outcome {
    let mut pairs = 0;
    for w in 1..=4u32 {
        for op in common::oracles::OPS {
            if op == "slice" && w == 1 {
                continue;
            }
            pairs += common::oracles::blast_agrees(op, w)?;
        }
    }
    let mut rng = Rng::new(3);
    for _ in 0..200 {
        let (n, clauses) = common::oracles::random_3cnf(&mut rng);
        common::oracles::sat_agrees(n, &clauses)?;
    }
    let bounds = common::oracles::bmc_agrees_with_explicit()?;
    Ok(format!("{pairs} operator cases; 200 CNFs; {bounds} bmc bounds"))
}

fn interpreter_oracle() -> Outcome {
    let mut rng = Rng::new(0x5eed);
    let mut expects = 0;
    for i in 0..50 {
        let net = common::randnet::random_netlist(&mut rng, i, 12);
        ensure(net.total_input_width() <= 12, || format!("net {i} too wide"))?;
        let c = parse_netlist(&net.json).map_err(|e| e.to_string())?;
        let mut t = Tester::new(&c, None).map_err(|e| e.to_string())?;
        for combo in 0u64..(1 << net.total_input_width()) {
            let mut values = Vec::new();
            let mut shift = 0;
            for (name, w) in &net.inputs {
                let v = (combo >> shift) & ((1 << w) - 1);
                shift += w;
                values.push(v);
                t.poke(name.as_str(), v).map_err(|e| e.to_string())?;
            }
            t.eval();
            let oracle = net.eval(&values);
            for (name, node) in &net.outputs {
                t.expect(name.as_str(), oracle[*node]).map_err(|e| e.to_string())?;
                expects += 1;
            }
        }
        let p = t.finalize().map_err(|e| e.to_string())?;
        let r = run(&c, &p, RunOptions::default())?;
        ensure(r.passed(), || format!("net {i}: {:?}\n{}", r.failures.first(), net.json))?;
    }
    Ok(format!("50 netlists, {expects} expects"))
}

fn emission_goldens() -> Outcome {
    let add = common::netlist("add16");
    let ready = common::netlist("ready");
    let cases = [
        ("add16", &add, common::add16_program(&add, 5)),
        ("ready", &ready, common::ready_program(&ready)),
        ("print", &add, common::print_program(&add)),
    ];
    let golden = |rel: String, text: &str| -> Result<(), String> {
        let path = common::golden_dir().join(&rel);
        let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure(want == text, || format!("{rel} differs"))
    };
    let mut files = 0;
    for (name, c, p) in &cases {
        for d in SvDialect::builtin_names() {
            let dialect = SvDialect::builtin(d).ok_or("missing dialect")?;
            let tb = emit_sv(p, c, &dialect, EmitOptions::default()).map_err(|e| e.to_string())?;
            golden(format!("{name}.{d}.sv"), &tb.text)?;
            let body = &tb.text[tb.text.find("initial begin").ok_or("no initial block")?..];
            let assigns = body
                .lines()
                .filter(|l| c.ports().iter().any(|port| l.trim().starts_with(&format!("{} = ", port.name))))
                .count();
            let counts = [
                (assigns, p.count("poke")),
                (body.matches(" !== ").count(), p.count("expect")),
                (body.matches("while (").count(), p.count("while")),
            ];
            ensure(counts.iter().all(|(a, b)| a == b), || format!("{name}.{d}: {counts:?}"))?;
            files += 1;
        }
        let cpp = emit_cxx(p, c, EmitOptions::default()).map_err(|e| e.to_string())?;
        golden(format!("{name}.cpp"), &cpp.text)?;
        let counts = [
            (common::cxx_poke_count(&cpp.text), p.count("poke")),
            (cpp.text.matches("++__fl_errors;").count(), p.count("expect")),
            (cpp.text.matches("while (").count(), p.count("while")),
        ];
        ensure(counts.iter().all(|(a, b)| a == b), || format!("{name}.cpp: {counts:?}"))?;
        files += 1;
    }
    Ok(format!("{files} files byte-identical; counts match"))
}

fn spice_path() -> Outcome {
    let c = common::netlist("inverter");
    let mut t = Tester::new(&c, None).map_err(|e| e.to_string())?;
    t.poke("I", 1u32).map_err(|e| e.to_string())?;
    t.eval();
    t.poke("I", 0u32).map_err(|e| e.to_string())?;
    t.eval();
    let p = t.finalize().map_err(|e| e.to_string())?;
    let timing = AnalogTiming {
        clock_period: 20e-9,
        transition_time: 1e-9,
        ..AnalogTiming::default()
    };
    let waves = compile_pwl(&p, &c, &timing).map_err(|e| e.to_string())?;
    let want = [(0.0, 0.0), (10e-9, 0.0), (11e-9, 1.0), (20e-9, 1.0), (21e-9, 0.0)];
    ensure(waves.len() == 1 && waves["I"].points == want, || format!("{waves:?}"))?;

    let p = common::inverter_program(&c);
    let t = AnalogTiming::default();
    let table = |o: f64| {
        format!("time,v(I),v(O)\n0,0,1\n9e-9,1,{}\n10e-9,1,{}\n14e-9,0,1\n15e-9,0,1\n20e-9,0,1\n", o - 0.01, o + 0.01)
    };
    let check = |csv: &str| {
        let data = WaveformTable::from_csv(csv).map_err(|e| e.to_string())?;
        Ok::<_, String>(check_results(&data, &p, &c, &t))
    };
    let r = check(&table(0.02))?.map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Pass, || format!("low: {:?}", r.failures))?;
    let r = check(&table(0.98))?.map_err(|e| e.to_string())?;
    ensure(r.failures.first().map(|f| f.code) == Some(FailureCode::LogicMismatch), || format!("high: {r:?}"))?;
    let r = check(&table(0.5))?.map_err(|e| e.to_string())?;
    ensure(r.failures.first().map(|f| f.code) == Some(FailureCode::IndeterminateLevel), || format!("mid: {r:?}"))?;
    let r = check("time,v(I)\n0,0\n20e-9,0\n")?;
    ensure(matches!(r, Err(SpiceError::MissingSignal(ref s)) if s == "O"), || format!("missing: {r:?}"))?;

    let (passes, fails) = common::oracles::spice_equivalence(10)?;
    Ok(format!("points exact; 4 CSV verdicts; 10 programs equivalent ({passes} pass, {fails} fail)"))
}

fn determinism() -> Outcome {
    let all = support::invocations();
    for (args, _) in &all {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let dirs = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
        let (a, b) = (support::faultline(&args, dirs.0.path()), support::faultline(&args, dirs.1.path()));
        ensure(a.status.code() == b.status.code(), || format!("{args:?}: exit codes differ"))?;
        let (fa, fb) = (support::files(dirs.0.path()), support::files(dirs.1.path()));
        ensure(!fa.is_empty() && fa == fb, || format!("{args:?}: outputs differ"))?;
    }
    Ok(format!("{} invocations byte-identical", all.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("listing fidelity", SECOND, listing_fidelity),
        ("unrolled random test", 5 * SECOND, unrolled_random),
        ("reset semantics", SECOND, reset_semantics),
        ("dynamic while loop", SECOND, while_loop),
        ("random vs formal", 6 * CAMPAIGN_LIMIT, random_vs_formal),
        ("formal core oracles", 120 * SECOND, formal_oracles),
        ("interpreter oracle", 60 * SECOND, interpreter_oracle),
        ("emission goldens", 5 * SECOND, emission_goldens),
        ("spice path", 5 * SECOND, spice_path),
        ("determinism", Duration::MAX, determinism),
    ];
    let mut failed = Vec::new();
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let dt = start.elapsed();
        let limit_text = if limit == Duration::MAX { "none".to_string() } else { format!("{limit:?}") };
        let (ok, detail) = match outcome {
            Ok(d) if dt <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over time limit")),
            Err(e) => (false, e),
        };
        println!("{} {name} [{:.3}s, limit {limit_text}] {detail}", if ok { "PASS" } else { "FAIL" }, dt.as_secs_f64());
        if !ok {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
