// SPDX-License-Identifier: Apache-2.0

//! Unrolled QF_BV documents for external solvers, one per property.

use std::fmt::Write;

use num_bigint::BigUint;

use super::term::{BinaryOp, Term, TermArena, TermId, UnaryOp};
use super::ts::TransitionSystem;

fn bv(value: &BigUint, width: u32) -> String {
    format!("(_ bv{value} {width})")
}

fn sort(width: u32) -> String {
    format!("(_ BitVec {width})")
}

fn term_name(t: TermId, frame: usize) -> String {
    format!("t{}@{}", t.0, frame)
}

fn var_name(name: &str, frame: usize) -> String {
    format!("|{name}@{frame}|")
}

/// Right-hand side of a `define-fun` for `t` in `frame`.
fn rhs(ts: &TransitionSystem, arena: &TermArena, t: TermId, frame: usize) -> String {
    let n = |x: &TermId| term_name(*x, frame);
    let as_bv = |cond: String| format!("(ite {cond} #b1 #b0)");
    match arena.get(t) {
        Term::Const { value, width } => bv(value, *width),
        Term::Var { var, .. } => {
            if let Some(s) = ts.states.iter().find(|s| s.var == *var) {
                var_name(&s.name, frame)
            } else if let Some(i) = ts.inputs.iter().find(|i| i.var == *var) {
                var_name(&i.name, frame)
            } else {
                var_name(&format!("v{}", var.0), frame)
            }
        }
        Term::Unary { op, arg } => match op {
            UnaryOp::BitNot => format!("(bvnot {})", n(arg)),
            UnaryOp::Neg => format!("(bvneg {})", n(arg)),
            UnaryOp::RedOr => {
                let w = arena.width(*arg);
                as_bv(format!("(distinct {} {})", n(arg), bv(&BigUint::default(), w)))
            }
        },
        Term::Binary { op, a, b } => {
            let f = match op {
                BinaryOp::Add => "bvadd",
                BinaryOp::Sub => "bvsub",
                BinaryOp::Mul => "bvmul",
                BinaryOp::And => "bvand",
                BinaryOp::Or => "bvor",
                BinaryOp::Xor => "bvxor",
                BinaryOp::Shl => "bvshl",
                BinaryOp::Lshr => "bvlshr",
                BinaryOp::Eq => return as_bv(format!("(= {} {})", n(a), n(b))),
                BinaryOp::Ult => return as_bv(format!("(bvult {} {})", n(a), n(b))),
                BinaryOp::Ule => return as_bv(format!("(bvule {} {})", n(a), n(b))),
            };
            format!("({f} {} {})", n(a), n(b))
        }
        Term::Mux { sel, then, other } => format!("(ite (= {} #b1) {} {})", n(sel), n(then), n(other)),
        Term::Concat { hi, lo } => format!("(concat {} {})", n(hi), n(lo)),
        Term::Slice { arg, lo, hi } => format!("((_ extract {hi} {lo}) {})", n(arg)),
        Term::Zext { arg, width } => {
            format!("((_ zero_extend {}) {})", width - arena.width(*arg), n(arg))
        }
    }
}

/// One document per property: state and inputs per frame, the unrolled
/// transition, constraints in every frame, and the negated property as a
/// disjunction over frames `0..=bound`.
pub fn emit_smtlib(ts: &TransitionSystem, bound: u32) -> Vec<(String, String)> {
    let arena = &ts.arena;
    ts.properties
        .iter()
        .map(|p| {
            let mut out = String::new();
            writeln!(out, "; property {}", p.name).unwrap();
            writeln!(out, "(set-logic QF_BV)").unwrap();
            writeln!(out, "(set-option :produce-models true)").unwrap();
            let mut roots: Vec<TermId> = ts.states.iter().map(|s| s.next).collect();
            roots.extend(&ts.constraints);
            roots.push(p.term);
            let cone = arena.cone(&roots);
            for frame in 0..=bound as usize {
                for s in &ts.states {
                    if frame == 0 {
                        writeln!(
                            out,
                            "(define-fun {} () {} {})",
                            var_name(&s.name, 0),
                            sort(s.width),
                            bv(&s.init, s.width)
                        )
                        .unwrap();
                    } else {
                        writeln!(
                            out,
                            "(define-fun {} () {} {})",
                            var_name(&s.name, frame),
                            sort(s.width),
                            term_name(s.next, frame - 1)
                        )
                        .unwrap();
                    }
                }
                for i in &ts.inputs {
                    writeln!(out, "(declare-fun {} () {})", var_name(&i.name, frame), sort(i.width)).unwrap();
                }
                for &t in &cone {
                    writeln!(
                        out,
                        "(define-fun {} () {} {})",
                        term_name(t, frame),
                        sort(arena.width(t)),
                        rhs(ts, arena, t, frame)
                    )
                    .unwrap();
                }
                for &c in &ts.constraints {
                    writeln!(out, "(assert (= {} #b1))", term_name(c, frame)).unwrap();
                }
            }
            let violations: Vec<String> = (0..=bound as usize)
                .map(|f| format!("(= {} #b0)", term_name(p.term, f)))
                .collect();
            if violations.len() == 1 {
                writeln!(out, "(assert {})", violations[0]).unwrap();
            } else {
                writeln!(out, "(assert (or {}))", violations.join(" ")).unwrap();
            }
            writeln!(out, "(check-sat)").unwrap();
            writeln!(out, "(get-model)").unwrap();
            (p.name.clone(), out)
        })
        .collect()
}
