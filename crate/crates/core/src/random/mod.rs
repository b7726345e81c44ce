// SPDX-License-Identifier: Apache-2.0

//! Constrained-random stimulus: assumptions choose input values, guarantees
//! are checked on the interpreter after each sample.

pub mod rng;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::circuit::{CircuitDecl, PortType};
use crate::expr::{EvalError, Expr};
use crate::formal::blast::{bitblast, model_value, BlastEnv};
use crate::formal::cnf::CnfFormula;
use crate::formal::sat::{SatResult, Solver, Var};
use crate::formal::term::{TermArena, VarId};
use crate::formal::FormalError;
use crate::ir::{child_path, validate_program, Action, ActionProgram};
use crate::report::{Failure, FailureCode, TestReport};
use crate::sim::{RunOptions, SimModel, Simulator};

pub use rng::{parse_seed, Rng};

/// One sampled value per port.
pub type Assignment = BTreeMap<String, BigUint>;

pub const DEFAULT_MAX_TRIES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Draw uniformly and retry until the port's predicates hold.
    Rejection { max_tries: u64 },
    /// SAT enumeration with random decision polarity and blocking clauses.
    Solver,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Rejection {
            max_tries: DEFAULT_MAX_TRIES,
        }
    }
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Rejection { .. } => "rejection",
            Strategy::Solver => "solver",
        }
    }
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("`{0}` is not a constrainable input port")]
    NotInput(String),
    #[error("assumption on `{port}` mentions `{other}`; relational assumptions need the solver strategy")]
    Relational { port: String, other: String },
    #[error("no value for `{port}` satisfied its assumptions in {tries} tries (acceptance estimate {accepted}/{attempts})")]
    Exhausted {
        port: String,
        tries: u64,
        accepted: u64,
        attempts: u64,
    },
    #[error("assumptions are unsatisfiable")]
    Unsat,
    #[error(transparent)]
    Formal(#[from] FormalError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl SampleError {
    /// Observed acceptance rate for an exhausted rejection run.
    pub fn acceptance_estimate(&self) -> Option<f64> {
        match self {
            SampleError::Exhausted { accepted, attempts, .. } => Some(*accepted as f64 / (*attempts).max(1) as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    /// Sampled input ports with their widths, in interface order.
    pub ports: Vec<(String, u32)>,
    /// Predicates keyed by the port they constrain.
    pub assumptions: Vec<(String, Expr)>,
    pub samples: usize,
    pub strategy: Strategy,
}

impl SamplingPlan {
    /// Plan for the constraint suffix of a program: every input port that an
    /// assumption or guarantee mentions is sampled.
    pub fn from_program(
        p: &ActionProgram,
        c: &CircuitDecl,
        samples: usize,
        strategy: Strategy,
    ) -> Result<SamplingPlan, SampleError> {
        let is_input = |n: &str| c.port(n).is_some_and(|(_, p)| p.is_input() && p.ptype != PortType::Clock);
        let (_, suffix) = p.split_constraints();
        let mut used = BTreeSet::new();
        let mut assumptions = Vec::new();
        for a in suffix {
            match a {
                Action::Assume { target, pred } => {
                    let name = target.to_string();
                    if !is_input(&name) {
                        return Err(SampleError::NotInput(name));
                    }
                    used.insert(name.clone());
                    used.extend(pred.vars().into_keys());
                    assumptions.push((name, pred.clone()));
                }
                Action::Guarantee { pred } => {
                    used.extend(pred.vars().into_keys().filter(|v| is_input(v)));
                }
                _ => {}
            }
        }
        for n in &used {
            if !is_input(n) {
                return Err(SampleError::NotInput(n.clone()));
            }
        }
        let ports = c
            .ports()
            .iter()
            .filter(|p| used.contains(&p.name))
            .map(|p| (p.name.clone(), p.width()))
            .collect();
        SamplingPlan::new(ports, assumptions, samples, strategy)
    }

    pub fn new(
        ports: Vec<(String, u32)>,
        assumptions: Vec<(String, Expr)>,
        samples: usize,
        strategy: Strategy,
    ) -> Result<SamplingPlan, SampleError> {
        if samples == 0 {
            return Err(SampleError::ZeroSamples);
        }
        for (port, _) in &assumptions {
            if !ports.iter().any(|(n, _)| n == port) {
                return Err(SampleError::NotInput(port.clone()));
            }
        }
        Ok(SamplingPlan {
            ports,
            assumptions,
            samples,
            strategy,
        })
    }

    pub fn sample(&self, rng: &mut Rng) -> Result<Vec<Assignment>, SampleError> {
        match self.strategy {
            Strategy::Rejection { .. } => sample_rejection(self, rng),
            Strategy::Solver => sample_solver(self, rng),
        }
    }

    /// Whether an assignment satisfies every assumption.
    pub fn satisfied(&self, a: &Assignment) -> Result<bool, SampleError> {
        for (_, pred) in &self.assumptions {
            if pred.eval(a)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Per-port rejection sampling. Predicates may mention only their own port.
pub fn sample_rejection(plan: &SamplingPlan, rng: &mut Rng) -> Result<Vec<Assignment>, SampleError> {
    let max_tries = match plan.strategy {
        Strategy::Rejection { max_tries } => max_tries,
        Strategy::Solver => DEFAULT_MAX_TRIES,
    };
    for (port, pred) in &plan.assumptions {
        if let Some(other) = pred.vars().into_keys().find(|v| v != port) {
            return Err(SampleError::Relational {
                port: port.clone(),
                other,
            });
        }
    }
    let mut attempts = vec![0u64; plan.ports.len()];
    let mut accepted = vec![0u64; plan.ports.len()];
    let mut out = Vec::with_capacity(plan.samples);
    for _ in 0..plan.samples {
        let mut sample = Assignment::new();
        for (k, (port, width)) in plan.ports.iter().enumerate() {
            let preds: Vec<&Expr> = plan
                .assumptions
                .iter()
                .filter(|(p, _)| p == port)
                .map(|(_, e)| e)
                .collect();
            let mut tries = 0;
            let value = loop {
                if tries == max_tries {
                    return Err(SampleError::Exhausted {
                        port: port.clone(),
                        tries,
                        accepted: accepted[k],
                        attempts: attempts[k],
                    });
                }
                tries += 1;
                attempts[k] += 1;
                let v = rng.bits(*width);
                let env: Assignment = [(port.clone(), v.clone())].into();
                let mut ok = true;
                for pred in &preds {
                    if pred.eval(&env)?.is_zero() {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    accepted[k] += 1;
                    break v;
                }
            };
            sample.insert(port.clone(), value);
        }
        out.push(sample);
    }
    Ok(out)
}

/// Solver-based sampling: each sample is a SAT model found with random
/// decision polarity, then blocked. Returns fewer than requested samples
/// when the solution space runs out.
pub fn sample_solver(plan: &SamplingPlan, rng: &mut Rng) -> Result<Vec<Assignment>, SampleError> {
    let mut arena = TermArena::new();
    let vars: Vec<VarId> = (0..plan.ports.len() as u32).map(VarId).collect();
    let mut roots = Vec::new();
    for (_, pred) in &plan.assumptions {
        let mut bind = |arena: &mut TermArena, name: &str, _w: u32| {
            let k = plan
                .ports
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| FormalError::UnknownVar(name.to_string()))?;
            Ok(arena.var(vars[k], plan.ports[k].1))
        };
        roots.push(arena.from_expr(pred, &mut bind)?);
    }
    let mut cnf = CnfFormula::new();
    let mut env = BlastEnv::new();
    let port_bits: Vec<_> = plan
        .ports
        .iter()
        .zip(&vars)
        .map(|((_, w), v)| {
            let bits: Vec<_> = (0..*w).map(|_| cnf.new_lit()).collect();
            env.bind(*v, bits.clone());
            bits
        })
        .collect();
    for r in roots {
        let t = if arena.width(r) == 1 {
            r
        } else {
            arena.unary(crate::formal::term::UnaryOp::RedOr, r)
        };
        let l = bitblast(&arena, t, &mut cnf, &mut env);
        cnf.assert_lit(l);
    }
    let mut solver = Solver::new();
    solver.ensure_vars(cnf.num_vars());
    for c in cnf.clauses() {
        solver.add_clause(c);
    }
    let mut out = Vec::new();
    while out.len() < plan.samples {
        for v in 1..cnf.num_vars() {
            solver.set_phase(Var(v), rng.next_bool());
        }
        let SatResult::Sat(model) = solver.solve(&[]) else {
            break;
        };
        let mut sample = Assignment::new();
        let mut block = Vec::new();
        for ((name, _), bits) in plan.ports.iter().zip(&port_bits) {
            sample.insert(name.clone(), model_value(&model, bits));
            for &l in bits {
                let holds = model[l.var().0 as usize] == l.is_positive();
                block.push(if holds { !l } else { l });
            }
        }
        out.push(sample);
        if !solver.add_clause(&block) {
            break;
        }
    }
    if out.is_empty() {
        return Err(SampleError::Unsat);
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum RandomError {
    #[error("program is not a constrained-random program: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

fn describe(a: &Assignment) -> String {
    a.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

/// Execute the concrete prefix once, then poke each sample, eval, and check
/// every guarantee with port variables bound to current port values.
pub fn run_constrained_random(
    p: &ActionProgram,
    model: &SimModel,
    samples: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<TestReport, RandomError> {
    if samples == 0 {
        return Err(SampleError::ZeroSamples.into());
    }
    let c = model.circuit();
    let diags = validate_program(p, c);
    if !diags.is_empty() {
        let text: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(RandomError::Invalid(text.join("; ")));
    }
    let (prefix, suffix) = p.split_constraints();
    if let Some(a) = suffix.iter().find(|a| !a.is_constraint()) {
        return Err(RandomError::Invalid(format!("`{}` after the first constraint", a.kind())));
    }
    let guarantees: Vec<(String, &Expr)> = suffix
        .iter()
        .enumerate()
        .filter_map(|(i, a)| match a {
            Action::Guarantee { pred } => Some((child_path("", "root", prefix.len() + i), pred)),
            _ => None,
        })
        .collect();
    let assumes = suffix.iter().filter(|a| matches!(a, Action::Assume { .. })).count();
    if assumes == 0 || guarantees.is_empty() {
        return Err(RandomError::Invalid("needs at least one assume and one guarantee".to_string()));
    }
    let plan = SamplingPlan::from_program(p, c, samples, strategy)?;
    let mut rng = Rng::new(seed);
    let drawn = plan.sample(&mut rng)?;

    let mut report = TestReport::new("random");
    report.seed = Some(seed);
    let mut sim = Simulator::new(model);
    sim.execute(prefix, "root", RunOptions::default(), &mut report);
    if !report.errors.is_empty() {
        return Ok(report.finish());
    }
    for (k, sample) in drawn.iter().enumerate() {
        for (port, v) in sample {
            sim.poke(port, v.clone()).map_err(|e| RandomError::Invalid(e.to_string()))?;
        }
        sim.eval();
        let bindings = sim.port_bindings();
        for (path, pred) in &guarantees {
            report.actions_executed += 1;
            let v = sim.eval_expr(pred, &bindings).map_err(SampleError::from)?;
            if v.is_zero() {
                report.failures.push(Failure {
                    path: path.clone(),
                    code: FailureCode::GuaranteeViolated,
                    signal: None,
                    observed: Some(describe(&bindings)),
                    expected: None,
                    time: sim.time(),
                    message: format!("sample {k} ({}) violates {pred}", describe(sample)),
                });
            }
        }
    }
    report.status = Some(format!("{} {} samples", drawn.len(), strategy.name()));
    Ok(report.finish())
}
