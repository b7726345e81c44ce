// SPDX-License-Identifier: Apache-2.0

//! Bounded model checking and k-induction over an incremental unrolling.

use std::collections::BTreeMap;

use super::blast::{blast_bits, const_bits, model_value, BlastEnv};
use super::cnf::CnfFormula;
use super::sat::{Lit, SatResult, Solver};
use super::term::TermId;
use super::ts::TransitionSystem;
use super::{Counterexample, FormalError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BmcResult {
    NoCexUpTo(u32),
    Counterexample(Counterexample),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KindResult {
    Proved { k: u32 },
    Unknown { k: u32 },
    Counterexample(Counterexample),
}

/// Time-frame expansion of a transition system kept in sync with an
/// incremental solver.
struct Unroller<'t> {
    ts: &'t TransitionSystem,
    cnf: CnfFormula,
    solver: Solver,
    synced: usize,
    frames: Vec<BlastEnv>,
}

impl<'t> Unroller<'t> {
    /// Frame 0 starts in the initial state, or in an arbitrary state when
    /// `with_init` is false.
    fn new(ts: &'t TransitionSystem, with_init: bool) -> Unroller<'t> {
        let mut u = Unroller {
            ts,
            cnf: CnfFormula::new(),
            solver: Solver::new(),
            synced: 0,
            frames: Vec::new(),
        };
        let mut env = BlastEnv::new();
        for s in &ts.states {
            let bits = if with_init {
                const_bits(&u.cnf, &s.init, s.width)
            } else {
                (0..s.width).map(|_| u.cnf.new_lit()).collect()
            };
            env.bind(s.var, bits);
        }
        u.bind_inputs(&mut env);
        u.frames.push(env);
        u
    }

    fn bind_inputs(&mut self, env: &mut BlastEnv) {
        for i in &self.ts.inputs {
            let bits = (0..i.width).map(|_| self.cnf.new_lit()).collect();
            env.bind(i.var, bits);
        }
    }

    fn depth(&self) -> usize {
        self.frames.len() - 1
    }

    fn push_frame(&mut self) {
        let last = self.depth();
        let nexts: Vec<(super::term::VarId, Vec<Lit>)> = self
            .ts
            .states
            .iter()
            .map(|s| (s.var, self.bits(last, s.next)))
            .collect();
        let mut env = BlastEnv::new();
        for (var, bits) in nexts {
            env.bind(var, bits);
        }
        self.bind_inputs(&mut env);
        self.frames.push(env);
    }

    fn bits(&mut self, frame: usize, t: TermId) -> Vec<Lit> {
        blast_bits(&self.ts.arena, t, &mut self.cnf, &mut self.frames[frame])
    }

    fn lit(&mut self, frame: usize, t: TermId) -> Lit {
        self.bits(frame, t)[0]
    }

    fn assert_constraints(&mut self, frame: usize) {
        for k in 0..self.ts.constraints.len() {
            let l = self.lit(frame, self.ts.constraints[k]);
            self.cnf.assert_lit(l);
        }
    }

    fn assert_properties(&mut self, frame: usize) {
        for k in 0..self.ts.properties.len() {
            let l = self.lit(frame, self.ts.properties[k].term);
            self.cnf.assert_lit(l);
        }
    }

    /// Literal for "state `k` equals its initial value" in `frame`.
    fn state_at_init(&mut self, frame: usize, k: usize) -> Lit {
        let s = &self.ts.states[k];
        let bits = self.frames[frame].vars[&s.var].clone();
        let want = const_bits(&self.cnf, &s.init, s.width);
        let eqs: Vec<Lit> = bits.iter().zip(&want).map(|(&a, &b)| self.cnf.xnor(a, b)).collect();
        self.cnf.and_all(eqs)
    }

    fn solve(&mut self, assumptions: &[Lit]) -> SatResult {
        self.solver.ensure_vars(self.cnf.num_vars());
        for c in &self.cnf.clauses()[self.synced..] {
            self.solver.add_clause(c);
        }
        self.synced = self.cnf.clauses().len();
        self.solver.solve(assumptions)
    }

    fn counterexample(&self, model: &[bool], property: &str) -> Counterexample {
        let steps = self
            .frames
            .iter()
            .map(|env| {
                let mut step = BTreeMap::new();
                for i in &self.ts.inputs {
                    step.insert(i.name.clone(), model_value(model, &env.vars[&i.var]).to_string());
                }
                for s in &self.ts.states {
                    step.insert(s.name.clone(), model_value(model, &env.vars[&s.var]).to_string());
                }
                step
            })
            .collect();
        Counterexample {
            property: property.to_string(),
            depth: self.depth() as u32,
            steps,
        }
    }
}

/// Check every property at depths `0..=bound` from the initial state and
/// return the shallowest violation.
pub fn bmc(ts: &TransitionSystem, bound: u32) -> Result<BmcResult, FormalError> {
    if ts.properties.is_empty() {
        return Err(FormalError::NoProperties);
    }
    let mut u = Unroller::new(ts, true);
    for d in 0..=bound as usize {
        if d > 0 {
            u.push_frame();
        }
        u.assert_constraints(d);
        for p in &ts.properties {
            let l = u.lit(d, p.term);
            if let SatResult::Sat(model) = u.solve(&[!l]) {
                return Ok(BmcResult::Counterexample(u.counterexample(&model, &p.name)));
            }
        }
    }
    Ok(BmcResult::NoCexUpTo(bound))
}

/// States that keep their initial value in every reachable frame, found by
/// Houdini-style pruning of the candidates `state == init`.
pub fn stable_states(ts: &TransitionSystem) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..ts.states.len()).collect();
    loop {
        let mut u = Unroller::new(ts, false);
        u.assert_constraints(0);
        for &k in &cand {
            let l = u.state_at_init(0, k);
            u.cnf.assert_lit(l);
        }
        u.push_frame();
        let before = cand.len();
        let mut keep = Vec::new();
        for &k in &cand {
            let l = u.state_at_init(1, k);
            if !u.solve(&[!l]).is_sat() {
                keep.push(k);
            }
        }
        cand = keep;
        if cand.len() == before {
            return cand;
        }
    }
}

/// k-induction: the base case is `bmc(ts, k - 1)`; the step shows that `k`
/// consecutive property-satisfying frames force the next one. The step is
/// strengthened with the invariants from [`stable_states`].
pub fn k_induction(ts: &TransitionSystem, k: u32) -> Result<KindResult, FormalError> {
    if k == 0 {
        return Err(FormalError::Unsupported("k-induction needs k >= 1".to_string()));
    }
    if let BmcResult::Counterexample(cex) = bmc(ts, k - 1)? {
        return Ok(KindResult::Counterexample(cex));
    }
    let stable = stable_states(ts);
    let mut u = Unroller::new(ts, false);
    for f in 0..=k as usize {
        if f > 0 {
            u.push_frame();
        }
        u.assert_constraints(f);
        for &s in &stable {
            let l = u.state_at_init(f, s);
            u.cnf.assert_lit(l);
        }
        if f < k as usize {
            u.assert_properties(f);
        }
    }
    for p in &ts.properties {
        let l = u.lit(k as usize, p.term);
        if u.solve(&[!l]).is_sat() {
            return Ok(KindResult::Unknown { k });
        }
    }
    Ok(KindResult::Proved { k })
}
