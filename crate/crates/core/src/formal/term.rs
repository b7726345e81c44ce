// SPDX-License-Identifier: Apache-2.0

//! Hash-consed bitvector terms.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::bits;
use crate::expr::{self, Binop, Expr, Unop};

use super::FormalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

/// Index of a variable; its meaning (state, input, sample port) is up to the
/// owner of the arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    BitNot,
    Neg,
    /// 1 iff any bit is set.
    RedOr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Lshr,
    Eq,
    Ult,
    Ule,
}

impl BinaryOp {
    pub fn is_predicate(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ult | BinaryOp::Ule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const { value: BigUint, width: u32 },
    Var { var: VarId, width: u32 },
    Unary { op: UnaryOp, arg: TermId },
    Binary { op: BinaryOp, a: TermId, b: TermId },
    /// `sel ? then : other`
    Mux { sel: TermId, then: TermId, other: TermId },
    /// `{hi, lo}`
    Concat { hi: TermId, lo: TermId },
    Slice { arg: TermId, lo: u32, hi: u32 },
    Zext { arg: TermId, width: u32 },
}

/// Largest multiplier width accepted on the formal path.
pub const MAX_MUL_WIDTH: u32 = 16;

#[derive(Debug, Clone, Default)]
pub struct TermArena {
    terms: Vec<Term>,
    widths: Vec<u32>,
    index: HashMap<Term, TermId>,
}

impl TermArena {
    pub fn new() -> TermArena {
        TermArena::default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, t: TermId) -> &Term {
        &self.terms[t.0 as usize]
    }

    pub fn width(&self, t: TermId) -> u32 {
        self.widths[t.0 as usize]
    }

    fn intern(&mut self, term: Term) -> TermId {
        if let Some(id) = self.index.get(&term) {
            return *id;
        }
        let width = match &term {
            Term::Const { width, .. } | Term::Var { width, .. } | Term::Zext { width, .. } => *width,
            Term::Unary { op: UnaryOp::RedOr, .. } => 1,
            Term::Unary { arg, .. } => self.width(*arg),
            Term::Binary { op, a, .. } => {
                if op.is_predicate() {
                    1
                } else {
                    self.width(*a)
                }
            }
            Term::Mux { then, .. } => self.width(*then),
            Term::Concat { hi, lo } => self.width(*hi) + self.width(*lo),
            Term::Slice { lo, hi, .. } => hi - lo + 1,
        };
        let id = TermId(self.terms.len() as u32);
        self.terms.push(term.clone());
        self.widths.push(width);
        self.index.insert(term, id);
        id
    }

    pub fn constant(&mut self, value: BigUint, width: u32) -> TermId {
        let value = bits::truncate(&value, width);
        self.intern(Term::Const { value, width })
    }

    pub fn bool_const(&mut self, b: bool) -> TermId {
        self.constant(bits::from_bool(b), 1)
    }

    pub fn var(&mut self, var: VarId, width: u32) -> TermId {
        self.intern(Term::Var { var, width })
    }

    pub fn unary(&mut self, op: UnaryOp, arg: TermId) -> TermId {
        self.intern(Term::Unary { op, arg })
    }

    pub fn binary(&mut self, op: BinaryOp, a: TermId, b: TermId) -> TermId {
        debug_assert_eq!(self.width(a), self.width(b), "{op:?} operand widths");
        self.intern(Term::Binary { op, a, b })
    }

    pub fn mux(&mut self, sel: TermId, then: TermId, other: TermId) -> TermId {
        self.intern(Term::Mux { sel, then, other })
    }

    pub fn concat(&mut self, hi: TermId, lo: TermId) -> TermId {
        self.intern(Term::Concat { hi, lo })
    }

    pub fn slice(&mut self, arg: TermId, lo: u32, hi: u32) -> TermId {
        self.intern(Term::Slice { arg, lo, hi })
    }

    pub fn zext(&mut self, arg: TermId, width: u32) -> TermId {
        if self.width(arg) == width {
            return arg;
        }
        self.intern(Term::Zext { arg, width })
    }

    pub fn not(&mut self, t: TermId) -> TermId {
        self.unary(UnaryOp::BitNot, t)
    }

    pub fn and(&mut self, a: TermId, b: TermId) -> TermId {
        self.binary(BinaryOp::And, a, b)
    }

    pub fn eq(&mut self, a: TermId, b: TermId) -> TermId {
        self.binary(BinaryOp::Eq, a, b)
    }

    /// Translate an expression. `var` supplies the term for each bound
    /// variable; peeks are rejected.
    pub fn from_expr(
        &mut self,
        e: &Expr,
        var: &mut dyn FnMut(&mut TermArena, &str, u32) -> Result<TermId, FormalError>,
    ) -> Result<TermId, FormalError> {
        Ok(match e {
            Expr::Const { value, width } => self.constant(value.clone(), *width),
            Expr::Var { name, width } => var(self, name, *width)?,
            Expr::Peek { target, .. } => return Err(FormalError::Unsupported(format!("peek of `{target}` in a formal predicate"))),
            Expr::Zext { arg, width } => {
                let a = self.from_expr(arg, var)?;
                self.zext(a, *width)
            }
            Expr::Unop { op, arg } => {
                let a = self.from_expr(arg, var)?;
                match op {
                    Unop::BitNot => self.unary(UnaryOp::BitNot, a),
                    Unop::Neg => self.unary(UnaryOp::Neg, a),
                    Unop::Not => {
                        let r = self.unary(UnaryOp::RedOr, a);
                        self.not(r)
                    }
                }
            }
            Expr::Binop { op, lhs, rhs } => {
                let a = self.from_expr(lhs, var)?;
                let b = self.from_expr(rhs, var)?;
                match op {
                    Binop::Add => self.binary(BinaryOp::Add, a, b),
                    Binop::Sub => self.binary(BinaryOp::Sub, a, b),
                    Binop::Mul => {
                        let w = self.width(a);
                        if w > MAX_MUL_WIDTH {
                            return Err(FormalError::MulTooWide(w));
                        }
                        self.binary(BinaryOp::Mul, a, b)
                    }
                    Binop::And => self.binary(BinaryOp::And, a, b),
                    Binop::Or => self.binary(BinaryOp::Or, a, b),
                    Binop::Xor => self.binary(BinaryOp::Xor, a, b),
                    Binop::Shl => self.binary(BinaryOp::Shl, a, b),
                    Binop::Lshr => self.binary(BinaryOp::Lshr, a, b),
                    Binop::Eq => self.binary(BinaryOp::Eq, a, b),
                    Binop::Neq => {
                        let e = self.binary(BinaryOp::Eq, a, b);
                        self.not(e)
                    }
                    Binop::Ult => self.binary(BinaryOp::Ult, a, b),
                    Binop::Ule => self.binary(BinaryOp::Ule, a, b),
                    Binop::Ugt => self.binary(BinaryOp::Ult, b, a),
                    Binop::Uge => self.binary(BinaryOp::Ule, b, a),
                    Binop::LogicalAnd | Binop::LogicalOr => {
                        let ra = self.unary(UnaryOp::RedOr, a);
                        let rb = self.unary(UnaryOp::RedOr, b);
                        let op = if *op == Binop::LogicalAnd {
                            BinaryOp::And
                        } else {
                            BinaryOp::Or
                        };
                        self.binary(op, ra, rb)
                    }
                }
            }
        })
    }

    /// Concrete evaluation of `t` under a variable assignment.
    pub fn eval(&self, t: TermId, vars: &dyn Fn(VarId) -> BigUint) -> BigUint {
        let mut memo: HashMap<TermId, BigUint> = HashMap::new();
        self.eval_memo(t, vars, &mut memo)
    }

    pub fn eval_memo(&self, t: TermId, vars: &dyn Fn(VarId) -> BigUint, memo: &mut HashMap<TermId, BigUint>) -> BigUint {
        if let Some(v) = memo.get(&t) {
            return v.clone();
        }
        let w = self.width(t);
        let v = match self.get(t) {
            Term::Const { value, .. } => value.clone(),
            Term::Var { var, width } => bits::truncate(&vars(*var), *width),
            Term::Unary { op, arg } => {
                let a = self.eval_memo(*arg, vars, memo);
                let aw = self.width(*arg);
                match op {
                    UnaryOp::BitNot => a ^ bits::mask(aw),
                    UnaryOp::Neg => bits::truncate(&((BigUint::one() << aw as usize) - a), aw),
                    UnaryOp::RedOr => bits::from_bool(!a.is_zero()),
                }
            }
            Term::Binary { op, a, b } => {
                let x = self.eval_memo(*a, vars, memo);
                let y = self.eval_memo(*b, vars, memo);
                let aw = self.width(*a);
                let op = match op {
                    BinaryOp::Add => Binop::Add,
                    BinaryOp::Sub => Binop::Sub,
                    BinaryOp::Mul => Binop::Mul,
                    BinaryOp::And => Binop::And,
                    BinaryOp::Or => Binop::Or,
                    BinaryOp::Xor => Binop::Xor,
                    BinaryOp::Shl => Binop::Shl,
                    BinaryOp::Lshr => Binop::Lshr,
                    BinaryOp::Eq => Binop::Eq,
                    BinaryOp::Ult => Binop::Ult,
                    BinaryOp::Ule => Binop::Ule,
                };
                expr::apply_binop(op, &x, &y, aw)
            }
            Term::Mux { sel, then, other } => {
                if self.eval_memo(*sel, vars, memo).is_zero() {
                    self.eval_memo(*other, vars, memo)
                } else {
                    self.eval_memo(*then, vars, memo)
                }
            }
            Term::Concat { hi, lo } => {
                let h = self.eval_memo(*hi, vars, memo);
                let l = self.eval_memo(*lo, vars, memo);
                (h << self.width(*lo) as usize) | l
            }
            Term::Slice { arg, lo, .. } => {
                let a = self.eval_memo(*arg, vars, memo);
                bits::truncate(&(a >> *lo as usize), w)
            }
            Term::Zext { arg, .. } => self.eval_memo(*arg, vars, memo),
        };
        memo.insert(t, v.clone());
        v
    }

    /// Variables reachable from `t`.
    pub fn support(&self, t: TermId) -> Vec<VarId> {
        let mut seen = vec![false; self.terms.len()];
        let mut out = Vec::new();
        let mut stack = vec![t];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n.0 as usize], true) {
                continue;
            }
            match self.get(n) {
                Term::Var { var, .. } => out.push(*var),
                Term::Const { .. } => {}
                Term::Unary { arg, .. } | Term::Slice { arg, .. } | Term::Zext { arg, .. } => stack.push(*arg),
                Term::Binary { a, b, .. } => stack.extend([*a, *b]),
                Term::Mux { sel, then, other } => stack.extend([*sel, *then, *other]),
                Term::Concat { hi, lo } => stack.extend([*hi, *lo]),
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Terms reachable from `roots` in topological (operands first) order.
    pub fn cone(&self, roots: &[TermId]) -> Vec<TermId> {
        let mut seen = vec![false; self.terms.len()];
        let mut out = Vec::new();
        fn visit(arena: &TermArena, t: TermId, seen: &mut Vec<bool>, out: &mut Vec<TermId>) {
            if std::mem::replace(&mut seen[t.0 as usize], true) {
                return;
            }
            match arena.get(t) {
                Term::Const { .. } | Term::Var { .. } => {}
                Term::Unary { arg, .. } | Term::Slice { arg, .. } | Term::Zext { arg, .. } => visit(arena, *arg, seen, out),
                Term::Binary { a, b, .. } => {
                    visit(arena, *a, seen, out);
                    visit(arena, *b, seen, out);
                }
                Term::Mux { sel, then, other } => {
                    visit(arena, *sel, seen, out);
                    visit(arena, *then, seen, out);
                    visit(arena, *other, seen, out);
                }
                Term::Concat { hi, lo } => {
                    visit(arena, *hi, seen, out);
                    visit(arena, *lo, seen, out);
                }
            }
            out.push(t);
        }
        for r in roots {
            visit(self, *r, &mut seen, &mut out);
        }
        out
    }
}
