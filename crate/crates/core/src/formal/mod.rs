// SPDX-License-Identifier: Apache-2.0

//! Formal target: transition-system encoding, bit-blasting, a CDCL SAT
//! solver, bounded model checking and k-induction.
//!
//! ```
//! use faultline::formal::sat::{solve_clauses, Lit, SatResult};
//!
//! let x = Lit::from_dimacs(1);
//! let y = Lit::from_dimacs(2);
//! let r = solve_clauses(2, &[vec![x, y], vec![!x]], &[]);
//! assert_eq!(r, SatResult::Sat(vec![false, true]));
//! ```

pub mod blast;
pub mod bmc;
pub mod cnf;
pub mod sat;
pub mod smtlib;
pub mod term;
pub mod ts;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CircuitDecl, PortType};
use crate::ir::{child_path, Action, ActionProgram, Diagnostic};
use crate::report::{Failure, FailureCode, TestReport};
use crate::sim::{RunOptions, SimModel, Simulator};

pub use bmc::{bmc, k_induction, BmcResult, KindResult};
pub use smtlib::emit_smtlib;
pub use ts::{encode_ts, lower_prefix, TransitionSystem};

#[derive(Debug, Error)]
pub enum FormalError {
    #[error("combinational cycle through {}", .0.join(", "))]
    CombinationalCycle(Vec<String>),
    #[error("multiplication of width {0} exceeds the formal limit of 16 bits")]
    MulTooWide(u32),
    #[error("unsupported in a formal program: {0}")]
    Unsupported(String),
    #[error("{0}: poke value must be a constant")]
    NonConstantPoke(String),
    #[error("unknown variable `{0}` in a constraint")]
    UnknownVar(String),
    #[error("transition system has no properties")]
    NoProperties,
    #[error("program does not validate: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("replay failed: {0}")]
    Replay(String),
}

/// A violating trace. Step `i` assigns every input and state variable in
/// frame `i` (decimal strings); the property fails in the last frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub property: String,
    pub depth: u32,
    pub steps: Vec<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormalOptions {
    pub bound: u32,
    /// Also attempt a k-induction proof.
    pub k: Option<u32>,
}

impl Default for FormalOptions {
    fn default() -> Self {
        FormalOptions { bound: 4, k: None }
    }
}

/// Replay a counterexample through the interpreter. Returns whether the
/// named guarantee is violated in the final frame.
pub fn replay(cex: &Counterexample, p: &ActionProgram, model: &SimModel) -> Result<bool, FormalError> {
    let c = model.circuit();
    let (prefix, suffix) = p.split_constraints();
    let pred = suffix
        .iter()
        .enumerate()
        .find_map(|(i, a)| match a {
            Action::Guarantee { pred } if child_path("", "root", prefix.len() + i) == cex.property => Some(pred),
            _ => None,
        })
        .ok_or_else(|| FormalError::Replay(format!("no guarantee at `{}`", cex.property)))?;
    let mut sim = Simulator::new(model);
    let mut report = TestReport::new("replay");
    sim.execute(prefix, "root", RunOptions::default(), &mut report);
    if !report.errors.is_empty() {
        return Err(FormalError::Replay(report.errors.join("; ")));
    }
    for (f, step) in cex.steps.iter().enumerate() {
        for (name, value) in step {
            let is_input = c
                .port(name)
                .is_some_and(|(_, p)| p.is_input() && p.ptype != PortType::Clock);
            if is_input {
                let v: BigUint = value
                    .parse()
                    .map_err(|_| FormalError::Replay(format!("bad value `{value}` for `{name}`")))?;
                sim.poke(name, v).map_err(|e| FormalError::Replay(e.to_string()))?;
            }
        }
        sim.eval();
        if f as u32 == cex.depth {
            let v = sim
                .eval_expr(pred, &sim.port_bindings())
                .map_err(|e| FormalError::Replay(e.to_string()))?;
            return Ok(v.is_zero());
        }
        sim.step(2);
    }
    Err(FormalError::Replay("counterexample shorter than its depth".to_string()))
}

/// Run the formal target: bmc up to `bound`, then optionally k-induction.
pub fn check(p: &ActionProgram, c: &CircuitDecl, opts: FormalOptions) -> Result<TestReport, FormalError> {
    let ts = lower_prefix(p, c, &encode_ts(c)?)?;
    let mut report = TestReport::new("formal");
    report.actions_executed = p.actions.len() as u64;
    let cex = match bmc(&ts, opts.bound)? {
        BmcResult::Counterexample(cex) => Some(cex),
        BmcResult::NoCexUpTo(_) => match opts.k {
            Some(k) => match k_induction(&ts, k)? {
                KindResult::Proved { .. } => {
                    report.status = Some("proved".to_string());
                    None
                }
                KindResult::Unknown { .. } => {
                    report.status = Some("no-cex-up-to-bound".to_string());
                    None
                }
                KindResult::Counterexample(cex) => Some(cex),
            },
            None => {
                report.status = Some("no-cex-up-to-bound".to_string());
                None
            }
        },
    };
    if let Some(cex) = cex {
        report.status = Some("counterexample".to_string());
        report.failures.push(Failure {
            path: cex.property.clone(),
            code: FailureCode::Counterexample,
            signal: None,
            observed: None,
            expected: None,
            time: u64::from(cex.depth) * 2,
            message: format!("guarantee {} violated at depth {}", cex.property, cex.depth),
        });
        report.counterexample = Some(cex);
    }
    Ok(report.finish())
}
