// SPDX-License-Identifier: Apache-2.0

//! Independent oracles: integer operator semantics, brute-force SAT, the
//! explicit-state model of small fixtures, and random straight-line programs.

use faultline::circuit::{CircuitDecl, PortType};
use faultline::expr::Expr;
use faultline::formal::blast::{blast_bits, model_value, BlastEnv};
use faultline::formal::cnf::CnfFormula;
use faultline::formal::sat::{solve_clauses, Lit, SatResult};
use faultline::formal::term::{BinaryOp, TermArena, UnaryOp, VarId};
use faultline::formal::{bmc, encode_ts, lower_prefix, replay, BmcResult};
use faultline::random::Rng;
use faultline::{ActionProgram, HierRef, SimModel, Tester};
use num_bigint::BigUint;

pub const OPS: [&str; 18] = [
    "add", "sub", "mul", "and", "or", "xor", "shl", "lshr", "eq", "ult", "ule", "bitnot", "neg", "redor", "concat",
    "slice", "zext", "mux",
];

fn mask(w: u32) -> u64 {
    (1 << w) - 1
}

/// Integer semantics for each operator, independent of the encoder.
pub fn reference(op: &str, a: u64, b: u64, w: u32) -> u64 {
    let m = mask(w);
    match op {
        "add" => (a + b) & m,
        "sub" => a.wrapping_sub(b) & m,
        "mul" => (a * b) & m,
        "and" => a & b,
        "or" => a | b,
        "xor" => a ^ b,
        "shl" if b >= u64::from(w) => 0,
        "shl" => (a << b) & m,
        "lshr" if b >= u64::from(w) => 0,
        "lshr" => a >> b,
        "eq" => u64::from(a == b),
        "ult" => u64::from(a < b),
        "ule" => u64::from(a <= b),
        "bitnot" => !a & m,
        "neg" => a.wrapping_neg() & m,
        "redor" => u64::from(a != 0),
        "concat" => (b << w) | a,
        "slice" => (a >> 1) & mask(w - 1),
        "zext" => a,
        "mux" if b & 1 == 1 => a,
        "mux" => !a & m,
        _ => unreachable!("{op}"),
    }
}

/// Bit-blast `op` at width `w` and check every operand pair: the solver's
/// model must equal the integer result, and no other output is satisfiable.
/// Returns the number of pairs checked.
pub fn blast_agrees(op: &str, w: u32) -> Result<u64, String> {
    let mut arena = TermArena::new();
    let (va, vb) = (VarId(0), VarId(1));
    let a = arena.var(va, w);
    let b = arena.var(vb, w);
    let t = match op {
        "add" => arena.binary(BinaryOp::Add, a, b),
        "sub" => arena.binary(BinaryOp::Sub, a, b),
        "mul" => arena.binary(BinaryOp::Mul, a, b),
        "and" => arena.binary(BinaryOp::And, a, b),
        "or" => arena.binary(BinaryOp::Or, a, b),
        "xor" => arena.binary(BinaryOp::Xor, a, b),
        "shl" => arena.binary(BinaryOp::Shl, a, b),
        "lshr" => arena.binary(BinaryOp::Lshr, a, b),
        "eq" => arena.binary(BinaryOp::Eq, a, b),
        "ult" => arena.binary(BinaryOp::Ult, a, b),
        "ule" => arena.binary(BinaryOp::Ule, a, b),
        "bitnot" => arena.unary(UnaryOp::BitNot, a),
        "neg" => arena.unary(UnaryOp::Neg, a),
        "redor" => arena.unary(UnaryOp::RedOr, a),
        "concat" => arena.concat(b, a),
        "slice" => arena.slice(a, 1, w - 1),
        "zext" => arena.zext(a, w + 2),
        _ => {
            let sel = arena.slice(b, 0, 0);
            let na = arena.unary(UnaryOp::BitNot, a);
            arena.mux(sel, a, na)
        }
    };
    let mut cnf = CnfFormula::new();
    let mut env = BlastEnv::new();
    let abits: Vec<Lit> = (0..w).map(|_| cnf.new_lit()).collect();
    let bbits: Vec<Lit> = (0..w).map(|_| cnf.new_lit()).collect();
    env.bind(va, abits.clone());
    env.bind(vb, bbits.clone());
    let out = blast_bits(&arena, t, &mut cnf, &mut env);
    let pin = |bits: &[Lit], v: u64| -> Vec<Lit> {
        bits.iter().enumerate().map(|(i, l)| if (v >> i) & 1 == 1 { *l } else { !*l }).collect()
    };
    let mut checked = 0;
    for x in 0..1u64 << w {
        for y in 0..1u64 << w {
            let mut assumptions = pin(&abits, x);
            assumptions.extend(pin(&bbits, y));
            let expected = reference(op, x, y, w);
            let model = match solve_clauses(cnf.num_vars(), cnf.clauses(), &assumptions) {
                SatResult::Sat(m) => m,
                SatResult::Unsat => return Err(format!("{op} w{w}: unsat for {x},{y}")),
            };
            let got = model_value(&model, &out);
            if got != BigUint::from(expected) {
                return Err(format!("{op} w{w} {x},{y}: got {got}, want {expected}"));
            }
            let mut diff = cnf.clone();
            diff.add_clause(pin(&out, expected).into_iter().map(|l| !l).collect());
            if solve_clauses(diff.num_vars(), diff.clauses(), &assumptions).is_sat() {
                return Err(format!("{op} w{w} {x},{y}: output not functionally determined"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Uniform random 3-CNF over `3..=20` variables with clause ratio in [3, 6).
pub fn random_3cnf(rng: &mut Rng) -> (u32, Vec<Vec<i32>>) {
    let n = 3 + rng.below(18) as u32;
    let m = (f64::from(n) * (3.0 + rng.below(30) as f64 / 10.0)) as usize;
    let clauses = (0..m)
        .map(|_| {
            (0..3)
                .map(|_| {
                    let v = 1 + rng.below(u64::from(n)) as i32;
                    if rng.next_bool() {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    (n, clauses)
}

pub fn brute_force(n: u32, clauses: &[Vec<i32>]) -> bool {
    (0u32..1 << n).any(|m| {
        clauses
            .iter()
            .all(|cl| cl.iter().any(|&l| ((m >> (l.unsigned_abs() - 1)) & 1 == 1) == (l > 0)))
    })
}

/// Solve with the CDCL solver and compare with enumeration. A model must
/// satisfy every clause. Returns satisfiability.
pub fn sat_agrees(n: u32, clauses: &[Vec<i32>]) -> Result<bool, String> {
    let lits: Vec<Vec<Lit>> = clauses.iter().map(|c| c.iter().map(|&d| Lit::from_dimacs(d)).collect()).collect();
    let expected = brute_force(n, clauses);
    match solve_clauses(n, &lits, &[]) {
        SatResult::Sat(model) => {
            if !expected {
                return Err(format!("solver found a model for an unsatisfiable formula {clauses:?}"));
            }
            let ok = clauses
                .iter()
                .all(|cl| cl.iter().any(|&l| model[(l.unsigned_abs() - 1) as usize] == (l > 0)));
            ok.then_some(true).ok_or_else(|| format!("model violates a clause of {clauses:?}"))
        }
        SatResult::Unsat if expected => Err(format!("solver says unsat for satisfiable {clauses:?}")),
        SatResult::Unsat => Ok(false),
    }
}

/// Fixture programs whose transition systems have few relevant bits.
pub fn small_systems() -> Vec<(CircuitDecl, ActionProgram)> {
    let (c, bad) = (super::netlist("alu"), super::netlist("alu_swapped"));
    let p = super::alu_program(&c);
    let mut out = vec![(c, p.clone()), (bad, p)];
    let counter = super::netlist("counter3");
    out.push((counter.clone(), super::counter_program(&counter)));
    // Free enable: the counter may stall.
    let mut t = Tester::new(&counter, Some(HierRef::port("clk"))).unwrap();
    t.assume_with("en", |en| en.ule(Expr::constant(1u32, 1))).unwrap();
    let cnt = t.port_var("count").unwrap();
    t.guarantee(cnt.ult(Expr::constant(5u32, 3))).unwrap();
    let prog = t.finalize().unwrap();
    out.push((counter, prog));
    let reg = super::netlist("reset_reg");
    let mut t = Tester::new(&reg, Some(HierRef::port("clk"))).unwrap();
    t.poke("rstn", 1u32).unwrap();
    t.eval();
    t.assume_with("d", |d| d.ule(Expr::constant(15u32, 4))).unwrap();
    let q = t.port_var("q").unwrap();
    t.guarantee(q.not_equal(Expr::constant(12u32, 4))).unwrap();
    let prog = t.finalize().unwrap();
    out.push((reg, prog));
    out
}

/// Compare bmc with explicit enumeration at every bound up to 12 whose
/// relevant state and input bits total at most 16. Returns the number of
/// (system, bound) pairs compared.
pub fn bmc_agrees_with_explicit() -> Result<usize, String> {
    let mut checked = 0;
    for (c, p) in small_systems() {
        let ts = lower_prefix(&p, &c, &encode_ts(&c).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let model = SimModel::compile(&c).map_err(|e| e.to_string())?;
        for bound in 0..=12 {
            if super::explicit::relevant_bits(&c, &p, bound) > 16 {
                break;
            }
            let oracle = super::explicit::shallowest_violation(&c, &p, bound);
            let got = match bmc(&ts, bound).map_err(|e| e.to_string())? {
                BmcResult::NoCexUpTo(b) if b == bound => None,
                BmcResult::NoCexUpTo(b) => return Err(format!("{}: asked for bound {bound}, got {b}", c.name())),
                BmcResult::Counterexample(cex) => {
                    if !replay(&cex, &p, &model).map_err(|e| e.to_string())? {
                        return Err(format!("{}: counterexample does not replay", c.name()));
                    }
                    Some(cex.depth)
                }
            };
            if got != oracle {
                return Err(format!("{} bound {bound}: bmc {got:?}, explicit {oracle:?}", c.name()));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Random straight-line program: pokes, evals, steps and expects with
/// random constants, so some expects fail.
pub fn random_program(c: &CircuitDecl, rng: &mut Rng) -> ActionProgram {
    let clock = c.clock_port().map(|p| HierRef::port(&p.name));
    let has_clock = clock.is_some();
    let mut t = Tester::new(c, clock).unwrap();
    let inputs: Vec<_> = c
        .ports()
        .iter()
        .filter(|p| p.is_input() && p.ptype != PortType::Clock)
        .collect();
    let outputs: Vec<_> = c.ports().iter().filter(|p| !p.is_input()).collect();
    for _ in 0..(10 + rng.below(20)) {
        match rng.below(5) {
            0 | 1 if !inputs.is_empty() => {
                let p = inputs[rng.below(inputs.len() as u64) as usize];
                t.poke(p.name.as_str(), rng.bits(p.width())).unwrap();
            }
            2 => t.eval(),
            3 if has_clock => t.step(1 + rng.below(2)).unwrap(),
            _ => {
                let p = outputs[rng.below(outputs.len() as u64) as usize];
                // Small values so that expects on narrow outputs pass often.
                let v = rng.bits(p.width().min(2));
                t.expect(p.name.as_str(), v).unwrap();
            }
        }
    }
    t.finalize().unwrap()
}

/// Ideal analog waveforms for `n` random programs, checked through a CSV
/// round trip, must give the interpreter's verdict and failure paths.
/// Expects are corrected from observed values so both verdicts occur.
/// Returns (passing, failing) program counts.
pub fn spice_equivalence(n: usize) -> Result<(usize, usize), String> {
    use faultline::spice::{check_results, ideal_waveforms, AnalogTiming, WaveformTable};
    use faultline::{Action, RunOptions, Verdict};

    let mut rng = Rng::new(0x5917);
    let circuits = ["alu", "counter3", "reset_reg", "add16", "inverter"];
    let (mut passes, mut fails) = (0, 0);
    for i in 0..n {
        let c = super::netlist(circuits[i % circuits.len()]);
        let model = SimModel::compile(&c).map_err(|e| e.to_string())?;
        let mut p = random_program(&c, &mut rng);
        // Fix every failing expect in even programs and about half in odd ones.
        let first = model.run(&p, RunOptions::default()).map_err(|e| e.to_string())?;
        for f in &first.failures {
            if i % 2 == 0 || rng.next_bool() {
                let idx: usize = f.path.trim_start_matches("root[").trim_end_matches(']').parse().unwrap();
                if let Action::Expect { value, .. } = &mut p.actions[idx] {
                    let w = value.width().unwrap();
                    *value = Expr::constant(f.observed.as_deref().unwrap().parse::<u64>().unwrap(), w);
                }
            }
        }
        let digital = model.run(&p, RunOptions::default()).map_err(|e| e.to_string())?;
        let t = AnalogTiming::default();
        let table = ideal_waveforms(&p, &model, &t).map_err(|e| e.to_string())?;
        let table = WaveformTable::from_csv(&table.to_csv()).map_err(|e| e.to_string())?;
        let analog = check_results(&table, &p, &c, &t).map_err(|e| e.to_string())?;
        let paths = |r: &faultline::TestReport| r.failures.iter().map(|f| f.path.clone()).collect::<Vec<_>>();
        if analog.verdict != digital.verdict || paths(&analog) != paths(&digital) {
            return Err(format!(
                "{} program {i}: analog {:?} {:?}, digital {:?} {:?}",
                c.name(),
                analog.verdict,
                paths(&analog),
                digital.verdict,
                paths(&digital)
            ));
        }
        match digital.verdict {
            Verdict::Pass => passes += 1,
            _ => fails += 1,
        }
    }
    Ok((passes, fails))
}
