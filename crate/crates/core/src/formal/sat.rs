// SPDX-License-Identifier: Apache-2.0

//! CDCL SAT solver: two watched literals, first-UIP clause learning,
//! activity-based branching with saved phases, no restarts.

use std::fmt;
use std::ops::Not;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

/// A literal: variable index and polarity packed as `2 * var + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(var.0 << 1 | u32::from(!positive))
    }

    pub fn positive(var: Var) -> Lit {
        Lit::new(var, true)
    }

    /// DIMACS convention: `3` is variable 2 positive, `-1` is variable 0
    /// negated. Zero is not a literal.
    pub fn from_dimacs(d: i32) -> Lit {
        assert_ne!(d, 0, "0 is not a DIMACS literal");
        Lit::new(Var(d.unsigned_abs() - 1), d > 0)
    }

    pub fn to_dimacs(self) -> i32 {
        let v = self.var().0 as i32 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// One value per variable.
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn model(&self) -> Option<&[bool]> {
        match self {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat => None,
        }
    }
}

const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

fn lit_value(assigns: &[i8], l: Lit) -> i8 {
    let v = assigns[l.var().0 as usize];
    if l.is_positive() {
        v
    } else {
        -v
    }
}

#[derive(Debug, Clone, Default)]
pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    ok: bool,
    conflicts: u64,
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            var_inc: 1.0,
            ok: true,
            ..Solver::default()
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars());
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(None);
        self.phase.push(false);
        self.activity.push(0.0);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    pub fn ensure_vars(&mut self, n: u32) {
        while self.num_vars() < n {
            self.new_var();
        }
    }

    /// Preferred polarity the next time `v` is chosen as a decision.
    pub fn set_phase(&mut self, v: Var, positive: bool) {
        self.phase[v.0 as usize] = positive;
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn value(&self, l: Lit) -> i8 {
        lit_value(&self.assigns, l)
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var().0 as usize;
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = if l.is_positive() { TRUE } else { FALSE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let keep = self.trail_lim[level as usize];
        for l in self.trail.drain(keep..) {
            let v = l.var().0 as usize;
            self.phase[v] = l.is_positive();
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
        }
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    /// Add a clause. Returns false once the clause set is known unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        if let Some(max) = lits.iter().map(|l| l.var().0 + 1).max() {
            self.ensure_vars(max);
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        if c.iter().any(|&l| self.value(l) == TRUE) {
            return true;
        }
        c.retain(|&l| self.value(l) != FALSE);
        match c.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(c);
            }
        }
        self.ok
    }

    fn attach(&mut self, c: Vec<Lit>) -> usize {
        let ci = self.clauses.len();
        self.watches[c[0].index()].push(ci);
        self.watches[c[1].index()].push(ci);
        self.clauses.push(c);
        ci
    }

    /// Unit propagation; returns a conflicting clause index.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let falsified = !p;
            let mut ws = std::mem::take(&mut self.watches[falsified.index()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let c = &mut self.clauses[ci];
                if c[0] == falsified {
                    c.swap(0, 1);
                }
                if lit_value(&self.assigns, c[0]) == TRUE {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    if lit_value(&self.assigns, c[k]) != FALSE {
                        c.swap(1, k);
                        self.watches[c[1].index()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = ci;
                j += 1;
                let first = c[0];
                if lit_value(&self.assigns, first) == FALSE {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, Some(ci));
                }
            }
            ws.truncate(j);
            self.watches[falsified.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut seen = vec![false; self.assigns.len()];
        let mut learnt = vec![Lit(0)];
        let mut pending = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            for k in 0..self.clauses[confl].len() {
                let q = self.clauses[confl][k];
                if Some(q.var()) == p.map(|l| l.var()) {
                    continue;
                }
                let v = q.var().0 as usize;
                if !seen[v] && self.level[v] > 0 {
                    seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= self.decision_level() {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if seen[self.trail[idx].var().0 as usize] {
                    break;
                }
            }
            let l = self.trail[idx];
            seen[l.var().0 as usize] = false;
            p = Some(l);
            pending -= 1;
            if pending == 0 {
                break;
            }
            confl = self.reason[l.var().0 as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict has a UIP");
        let mut back = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var().0 as usize] > self.level[learnt[best].var().0 as usize] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            back = self.level[learnt[1].var().0 as usize];
        }
        self.var_inc /= 0.95;
        (learnt, back)
    }

    fn pick_branch(&self) -> Option<Lit> {
        let mut best: Option<usize> = None;
        for v in 0..self.assigns.len() {
            if self.assigns[v] == UNDEF && best.is_none_or(|b| self.activity[v] > self.activity[b]) {
                best = Some(v);
            }
        }
        best.map(|v| Lit::new(Var(v as u32), self.phase[v]))
    }

    /// Solve under assumptions. The solver stays usable afterwards; more
    /// clauses may be added and `solve` called again.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SatResult {
        if !self.ok {
            return SatResult::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().0 + 1).max() {
            self.ensure_vars(max);
        }
        let result = self.search(assumptions);
        self.cancel_until(0);
        result
    }

    fn search(&mut self, assumptions: &[Lit]) -> SatResult {
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SatResult::Unsat;
                }
                let (learnt, back) = self.analyze(confl);
                self.cancel_until(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let asserting = learnt[0];
                    let ci = self.attach(learnt);
                    self.enqueue(asserting, Some(ci));
                }
                continue;
            }
            let level = self.decision_level() as usize;
            let next = if level < assumptions.len() {
                let a = assumptions[level];
                match self.value(a) {
                    TRUE => {
                        self.trail_lim.push(self.trail.len());
                        continue;
                    }
                    FALSE => return SatResult::Unsat,
                    _ => a,
                }
            } else {
                match self.pick_branch() {
                    Some(l) => l,
                    None => {
                        let model = self.assigns.iter().map(|&v| v == TRUE).collect();
                        return SatResult::Sat(model);
                    }
                }
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, None);
        }
    }
}

/// One-shot solve of a clause list.
pub fn solve_clauses(num_vars: u32, clauses: &[Vec<Lit>], assumptions: &[Lit]) -> SatResult {
    let mut s = Solver::new();
    s.ensure_vars(num_vars);
    for c in clauses {
        if !s.add_clause(c) {
            return SatResult::Unsat;
        }
    }
    s.solve(assumptions)
}
