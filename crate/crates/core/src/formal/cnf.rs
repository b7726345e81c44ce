// SPDX-License-Identifier: Apache-2.0

//! Tseitin gate construction over a growing clause list.

use std::collections::HashMap;

use super::sat::{Lit, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Gate {
    And,
    Xor,
}

/// Clause database with a dedicated constant-true variable (variable 0).
/// Gates fold constants and share structurally identical subterms.
#[derive(Debug, Clone)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    strash: HashMap<(Gate, Lit, Lit), Lit>,
}

impl Default for CnfFormula {
    fn default() -> Self {
        CnfFormula::new()
    }
}

impl CnfFormula {
    pub fn new() -> CnfFormula {
        let mut f = CnfFormula {
            num_vars: 1,
            clauses: Vec::new(),
            strash: HashMap::new(),
        };
        f.clauses.push(vec![f.true_lit()]);
        f
    }

    pub fn true_lit(&self) -> Lit {
        Lit::positive(Var(0))
    }

    pub fn false_lit(&self) -> Lit {
        !self.true_lit()
    }

    pub fn constant(&self, b: bool) -> Lit {
        if b {
            self.true_lit()
        } else {
            self.false_lit()
        }
    }

    fn const_value(&self, l: Lit) -> Option<bool> {
        if l == self.true_lit() {
            Some(true)
        } else if l == self.false_lit() {
            Some(false)
        } else {
            None
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn new_lit(&mut self) -> Lit {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        Lit::positive(v)
    }

    pub fn add_clause(&mut self, lits: Vec<Lit>) {
        debug_assert!(!lits.is_empty(), "empty clause");
        debug_assert!(lits.iter().all(|l| l.var().0 < self.num_vars));
        self.clauses.push(lits);
    }

    /// Force `l` true.
    pub fn assert_lit(&mut self, l: Lit) {
        self.add_clause(vec![l]);
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        match (self.const_value(a), self.const_value(b)) {
            (Some(false), _) | (_, Some(false)) => return self.false_lit(),
            (Some(true), _) => return b,
            (_, Some(true)) => return a,
            _ => {}
        }
        if a == b {
            return a;
        }
        if a == !b {
            return self.false_lit();
        }
        let key = (Gate::And, a.min(b), a.max(b));
        if let Some(&g) = self.strash.get(&key) {
            return g;
        }
        let g = self.new_lit();
        self.add_clause(vec![!g, a]);
        self.add_clause(vec![!g, b]);
        self.add_clause(vec![g, !a, !b]);
        self.strash.insert(key, g);
        g
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        match (self.const_value(a), self.const_value(b)) {
            (Some(x), _) => return if x { !b } else { b },
            (_, Some(y)) => return if y { !a } else { a },
            _ => {}
        }
        if a == b {
            return self.false_lit();
        }
        if a == !b {
            return self.true_lit();
        }
        // Normalize polarity so that x^y, !x^y and x^!y share one gate.
        let flip = !a.is_positive() ^ !b.is_positive();
        let (pa, pb) = (Lit::positive(a.var()), Lit::positive(b.var()));
        let key = (Gate::Xor, pa.min(pb), pa.max(pb));
        let g = match self.strash.get(&key) {
            Some(&g) => g,
            None => {
                let g = self.new_lit();
                self.add_clause(vec![!g, pa, pb]);
                self.add_clause(vec![!g, !pa, !pb]);
                self.add_clause(vec![g, !pa, pb]);
                self.add_clause(vec![g, pa, !pb]);
                self.strash.insert(key, g);
                g
            }
        };
        if flip {
            !g
        } else {
            g
        }
    }

    pub fn xnor(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    /// `s ? t : e`
    pub fn mux(&mut self, s: Lit, t: Lit, e: Lit) -> Lit {
        match self.const_value(s) {
            Some(true) => return t,
            Some(false) => return e,
            None => {}
        }
        if t == e {
            return t;
        }
        let st = self.and(s, t);
        let se = self.and(!s, e);
        self.or(st, se)
    }

    pub fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        let mut acc = self.true_lit();
        for l in lits {
            acc = self.and(acc, l);
        }
        acc
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        let mut acc = self.false_lit();
        for l in lits {
            acc = self.or(acc, l);
        }
        acc
    }

    /// Majority of three, the carry of a full adder.
    pub fn maj(&mut self, a: Lit, b: Lit, c: Lit) -> Lit {
        let ab = self.and(a, b);
        let x = self.xor(a, b);
        let cx = self.and(c, x);
        self.or(ab, cx)
    }
}
