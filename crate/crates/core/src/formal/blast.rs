// SPDX-License-Identifier: Apache-2.0

//! Bit-blasting of bitvector terms into CNF. Bits are least significant
//! first.

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::bits;

use super::cnf::CnfFormula;
use super::sat::Lit;
use super::term::{BinaryOp, Term, TermArena, TermId, UnaryOp, VarId};

/// Per-instance bindings: bits for each variable plus a cache of blasted
/// terms. One environment per unrolled time frame.
#[derive(Debug, Clone, Default)]
pub struct BlastEnv {
    pub vars: HashMap<VarId, Vec<Lit>>,
    cache: HashMap<TermId, Vec<Lit>>,
}

impl BlastEnv {
    pub fn new() -> BlastEnv {
        BlastEnv::default()
    }

    pub fn bind(&mut self, var: VarId, bits: Vec<Lit>) {
        self.vars.insert(var, bits);
    }
}

/// Literal equivalent to the width-1 term `f`.
pub fn bitblast(arena: &TermArena, f: TermId, cnf: &mut CnfFormula, env: &mut BlastEnv) -> Lit {
    debug_assert_eq!(arena.width(f), 1);
    blast_bits(arena, f, cnf, env)[0]
}

pub fn blast_bits(arena: &TermArena, t: TermId, cnf: &mut CnfFormula, env: &mut BlastEnv) -> Vec<Lit> {
    if let Some(b) = env.cache.get(&t) {
        return b.clone();
    }
    for n in arena.cone(&[t]) {
        if env.cache.contains_key(&n) {
            continue;
        }
        let b = blast_node(arena, n, cnf, env);
        debug_assert_eq!(b.len(), arena.width(n) as usize);
        env.cache.insert(n, b);
    }
    env.cache[&t].clone()
}

pub fn const_bits(cnf: &CnfFormula, value: &BigUint, width: u32) -> Vec<Lit> {
    (0..width).map(|i| cnf.constant(bits::bit(value, i))).collect()
}

/// Read a value back from a model.
pub fn model_value(model: &[bool], lits: &[Lit]) -> BigUint {
    bits::from_bits(lits.iter().map(|l| model[l.var().0 as usize] == l.is_positive()))
}

fn blast_node(arena: &TermArena, n: TermId, cnf: &mut CnfFormula, env: &mut BlastEnv) -> Vec<Lit> {
    let get = |t: &TermId| env.cache[t].clone();
    match arena.get(n) {
        Term::Const { value, width } => const_bits(cnf, value, *width),
        Term::Var { var, width } => {
            if let Some(b) = env.vars.get(var) {
                debug_assert_eq!(b.len(), *width as usize);
                return b.clone();
            }
            let b: Vec<Lit> = (0..*width).map(|_| cnf.new_lit()).collect();
            env.vars.insert(*var, b.clone());
            b
        }
        Term::Unary { op, arg } => {
            let a = get(arg);
            match op {
                UnaryOp::BitNot => a.iter().map(|&l| !l).collect(),
                UnaryOp::Neg => {
                    let zero = vec![cnf.false_lit(); a.len()];
                    sub(cnf, &zero, &a)
                }
                UnaryOp::RedOr => vec![cnf.or_all(a)],
            }
        }
        Term::Binary { op, a, b } => {
            let (x, y) = (get(a), get(b));
            match op {
                BinaryOp::Add => add(cnf, &x, &y, cnf.false_lit()),
                BinaryOp::Sub => sub(cnf, &x, &y),
                BinaryOp::Mul => mul(cnf, &x, &y),
                BinaryOp::And => x.iter().zip(&y).map(|(&p, &q)| cnf.and(p, q)).collect(),
                BinaryOp::Or => x.iter().zip(&y).map(|(&p, &q)| cnf.or(p, q)).collect(),
                BinaryOp::Xor => x.iter().zip(&y).map(|(&p, &q)| cnf.xor(p, q)).collect(),
                BinaryOp::Shl => shift(cnf, &x, &y, true),
                BinaryOp::Lshr => shift(cnf, &x, &y, false),
                BinaryOp::Eq => vec![equal(cnf, &x, &y)],
                BinaryOp::Ult => vec![ult(cnf, &x, &y)],
                BinaryOp::Ule => vec![!ult(cnf, &y, &x)],
            }
        }
        Term::Mux { sel, then, other } => {
            let s = get(sel)[0];
            let (t, e) = (get(then), get(other));
            t.iter().zip(&e).map(|(&p, &q)| cnf.mux(s, p, q)).collect()
        }
        Term::Concat { hi, lo } => {
            let mut out = get(lo);
            out.extend(get(hi));
            out
        }
        Term::Slice { arg, lo, hi } => get(arg)[*lo as usize..=*hi as usize].to_vec(),
        Term::Zext { arg, width } => {
            let mut out = get(arg);
            out.resize(*width as usize, cnf.false_lit());
            out
        }
    }
}

/// Ripple-carry adder, result truncated to the operand width.
fn add(cnf: &mut CnfFormula, x: &[Lit], y: &[Lit], carry_in: Lit) -> Vec<Lit> {
    let mut carry = carry_in;
    let mut out = Vec::with_capacity(x.len());
    for (&a, &b) in x.iter().zip(y) {
        let ab = cnf.xor(a, b);
        out.push(cnf.xor(ab, carry));
        carry = cnf.maj(a, b, carry);
    }
    out
}

/// `x - y` as `x + !y + 1`.
fn sub(cnf: &mut CnfFormula, x: &[Lit], y: &[Lit]) -> Vec<Lit> {
    let ny: Vec<Lit> = y.iter().map(|&l| !l).collect();
    let one = cnf.true_lit();
    add(cnf, x, &ny, one)
}

/// Shift-and-add multiplier.
fn mul(cnf: &mut CnfFormula, x: &[Lit], y: &[Lit]) -> Vec<Lit> {
    let w = x.len();
    let mut acc = vec![cnf.false_lit(); w];
    for (i, &yi) in y.iter().enumerate() {
        let mut partial = vec![cnf.false_lit(); w];
        for j in i..w {
            partial[j] = cnf.and(x[j - i], yi);
        }
        let zero = cnf.false_lit();
        acc = add(cnf, &acc, &partial, zero);
    }
    acc
}

/// Barrel shifter: stage `j` shifts by `2^j` when amount bit `j` is set.
/// Amount bits at or beyond the width clear the result.
fn shift(cnf: &mut CnfFormula, x: &[Lit], amount: &[Lit], left: bool) -> Vec<Lit> {
    let w = x.len();
    let zero = cnf.false_lit();
    let mut cur = x.to_vec();
    for (j, &s) in amount.iter().enumerate() {
        let dist = 1usize.checked_shl(j as u32).filter(|d| *d < w);
        let Some(d) = dist else {
            cur = cur.iter().map(|&l| cnf.and(!s, l)).collect();
            continue;
        };
        let shifted: Vec<Lit> = (0..w)
            .map(|i| {
                if left {
                    if i >= d {
                        cur[i - d]
                    } else {
                        zero
                    }
                } else if i + d < w {
                    cur[i + d]
                } else {
                    zero
                }
            })
            .collect();
        cur = cur
            .iter()
            .zip(&shifted)
            .map(|(&keep, &moved)| cnf.mux(s, moved, keep))
            .collect();
    }
    cur
}

fn equal(cnf: &mut CnfFormula, x: &[Lit], y: &[Lit]) -> Lit {
    let bits: Vec<Lit> = x.iter().zip(y).map(|(&a, &b)| cnf.xnor(a, b)).collect();
    cnf.and_all(bits)
}

/// Unsigned less-than by a comparison chain from the least significant bit.
fn ult(cnf: &mut CnfFormula, x: &[Lit], y: &[Lit]) -> Lit {
    let mut lt = cnf.false_lit();
    for (&a, &b) in x.iter().zip(y) {
        let strictly = cnf.and(!a, b);
        let same = cnf.xnor(a, b);
        let keep = cnf.and(same, lt);
        lt = cnf.or(strictly, keep);
    }
    lt
}
