// SPDX-License-Identifier: Apache-2.0

//! SystemVerilog testbench: one initial block drives the DUT.
//!
//! Pokes are blocking assignments, an eval is `#1;`, and each step unit is a
//! nonblocking clock toggle followed by `#1;` so pending pokes settle before
//! the edge. Every arithmetic result carries an explicit size cast.

use crate::circuit::{CircuitDecl, PortType};
use crate::expr::{Binop, Expr, Unop};
use crate::ir::{child_path, walk, Action, ActionProgram};

use super::{escape, line, peek_path, precheck, CodegenError, EmitOptions, EmittedTestbench, FileIoStyle, SvDialect};

pub(crate) fn sv_expr(c: &CircuitDecl, e: &Expr) -> String {
    let w = e.width().unwrap_or(1);
    match e {
        Expr::Const { value, width } => format!("{width}'d{value}"),
        Expr::Peek { target, .. } => peek_path(c, target),
        Expr::Var { name, width } => format!("{width}'({name})"),
        Expr::Zext { arg, width } => format!("{width}'({})", sv_expr(c, arg)),
        Expr::Unop { op, arg } => {
            let a = sv_expr(c, arg);
            match op {
                Unop::Not => format!("(!{a})"),
                Unop::Neg => format!("{w}'(-{a})"),
                Unop::BitNot => format!("{w}'(~{a})"),
            }
        }
        Expr::Binop { op, lhs, rhs } => {
            let (a, b) = (sv_expr(c, lhs), sv_expr(c, rhs));
            let sym = match op {
                Binop::Add => "+",
                Binop::Sub => "-",
                Binop::Mul => "*",
                Binop::And => "&",
                Binop::Or => "|",
                Binop::Xor => "^",
                Binop::Shl => "<<",
                Binop::Lshr => ">>",
                Binop::Eq => "==",
                Binop::Neq => "!=",
                Binop::Ult => "<",
                Binop::Ule => "<=",
                Binop::Ugt => ">",
                Binop::Uge => ">=",
                Binop::LogicalAnd => "&&",
                Binop::LogicalOr => "||",
            };
            if op.is_boolean() {
                format!("({a} {sym} {b})")
            } else {
                format!("{w}'({a} {sym} {b})")
            }
        }
    }
}

/// Map `%d`/`%x`/`%b` to Verilog conversions.
fn sv_format(format: &str) -> String {
    let mut out = String::new();
    let mut chars = format.chars();
    while let Some(ch) = chars.next() {
        if ch != '%' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('d') => out.push_str("%0d"),
            Some('x') => out.push_str("%h"),
            Some('b') => out.push_str("%b"),
            Some('%') => out.push_str("%%"),
            Some(other) => {
                out.push('%');
                out.push(other);
            }
            None => out.push('%'),
        }
    }
    escape(&out)
}

struct Emitter<'a> {
    c: &'a CircuitDecl,
    clock: Option<String>,
    opts: EmitOptions,
    out: String,
}

impl Emitter<'_> {
    fn block(&mut self, actions: &[Action], parent: &str, field: &str, depth: usize) {
        for (i, a) in actions.iter().enumerate() {
            let path = child_path(parent, field, i);
            self.action(a, &path, depth);
        }
    }

    fn action(&mut self, a: &Action, path: &str, depth: usize) {
        let c = self.c;
        match a {
            Action::Poke { target, value } => {
                line(&mut self.out, depth, &format!("{target} = {};", sv_expr(c, value)));
            }
            Action::Eval => line(&mut self.out, depth, "#1;"),
            Action::Step { n } => {
                let clk = self.clock.clone().unwrap_or_default();
                for _ in 0..*n {
                    line(&mut self.out, depth, &format!("{clk} <= ~{clk};"));
                    line(&mut self.out, depth, "#1;");
                }
            }
            Action::Expect { target, value } => {
                let sig = peek_path(c, target);
                let v = sv_expr(c, value);
                line(&mut self.out, depth, &format!("if ({sig} !== {v}) begin"));
                let msg = escape(&format!("{path}: expected {target} == %0d, observed %0d"));
                if self.opts.fail_fast {
                    line(&mut self.out, depth + 1, &format!("$fatal(1, \"{msg}\", {v}, {sig});"));
                } else {
                    line(&mut self.out, depth + 1, &format!("$error(\"{msg}\", {v}, {sig});"));
                    line(&mut self.out, depth + 1, "__fl_errors = __fl_errors + 1;");
                }
                line(&mut self.out, depth, "end");
            }
            Action::Print { format, args } => {
                let mut parts = vec![format!("\"{}\"", sv_format(format))];
                parts.extend(args.iter().map(|e| sv_expr(c, e)));
                line(&mut self.out, depth, &format!("$write({});", parts.join(", ")));
            }
            Action::While { cond, body } => {
                line(&mut self.out, depth, &format!("while ({}) begin", sv_expr(c, cond)));
                self.block(body, path, "body", depth + 1);
                line(&mut self.out, depth, "end");
            }
            Action::If {
                cond,
                then_body,
                else_body,
            } => {
                line(&mut self.out, depth, &format!("if ({}) begin", sv_expr(c, cond)));
                self.block(then_body, path, "then", depth + 1);
                if else_body.is_empty() {
                    line(&mut self.out, depth, "end");
                } else {
                    line(&mut self.out, depth, "end else begin");
                    self.block(else_body, path, "else", depth + 1);
                    line(&mut self.out, depth, "end");
                }
            }
            Action::For { count, var, body } => {
                line(
                    &mut self.out,
                    depth,
                    &format!("for ({var} = 0; {var} < {count}; {var} = {var} + 1) begin"),
                );
                self.block(body, path, "body", depth + 1);
                line(&mut self.out, depth, "end");
            }
            Action::Assume { .. } | Action::Guarantee { .. } => unreachable!("rejected by precheck"),
        }
    }
}

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

pub fn emit_sv(
    p: &ActionProgram,
    c: &CircuitDecl,
    d: &SvDialect,
    opts: EmitOptions,
) -> Result<EmittedTestbench, CodegenError> {
    precheck(p, c)?;
    d.validate()?;
    let tb = format!("{}_tb", c.name());
    let mut out = String::new();
    line(&mut out, 0, &format!("// Testbench for {}, generated from an action program.", c.name()));
    line(&mut out, 0, &format!("`timescale {}", d.timescale));
    line(&mut out, 0, &format!("module {tb};"));
    for port in c.ports() {
        let w = port.width();
        if port.is_input() {
            line(&mut out, 1, &format!("reg {}{} = {w}'d0;", range(w), port.name));
        } else {
            line(&mut out, 1, &format!("wire {}{};", range(w), port.name));
        }
    }
    line(&mut out, 1, "integer __fl_errors = 0;");
    line(&mut out, 1, "integer __fl_fd;");
    let mut vars = Vec::new();
    walk(&p.actions, &mut |a| {
        if let Action::For { var, .. } = a {
            if !vars.contains(var) {
                vars.push(var.clone());
            }
        }
    });
    for v in &vars {
        line(&mut out, 1, &format!("integer {v};"));
    }
    out.push('\n');
    line(&mut out, 1, &format!("{} __fl_dut (", c.name()));
    let conns: Vec<String> = c.ports().iter().map(|p| format!(".{0}({0})", p.name)).collect();
    for (i, conn) in conns.iter().enumerate() {
        let sep = if i + 1 < conns.len() { "," } else { "" };
        line(&mut out, 2, &format!("{conn}{sep}"));
    }
    line(&mut out, 1, ");");
    out.push('\n');
    line(&mut out, 1, "initial begin");
    line(&mut out, 2, &d.waveform(&tb, c.name()));
    let clock = c
        .ports()
        .iter()
        .find(|p| p.ptype == PortType::Clock)
        .map(|p| p.name.clone());
    let mut em = Emitter {
        c,
        clock,
        opts,
        out,
    };
    em.block(&p.actions, "", "root", 2);
    let mut out = em.out;
    let result = format!("{tb}.result");
    match d.file_io_style {
        FileIoStyle::Standard => line(&mut out, 2, &format!("__fl_fd = $fopen(\"{result}\", \"w\");")),
        FileIoStyle::NonstandardIverilog => line(&mut out, 2, &format!("__fl_fd = $fopen(\"{result}\");")),
    }
    line(&mut out, 2, "$fdisplay(__fl_fd, \"errors %0d\", __fl_errors);");
    line(&mut out, 2, "$fclose(__fl_fd);");
    line(&mut out, 2, "if (__fl_errors != 0) $fatal(1, \"%0d expect failure(s)\", __fl_errors);");
    line(&mut out, 2, "$finish;");
    line(&mut out, 1, "end");
    line(&mut out, 0, "endmodule");
    Ok(EmittedTestbench {
        text: out,
        language: "systemverilog".to_string(),
        entry: format!("{tb}.sv"),
    })
}
