// SPDX-License-Identifier: Apache-2.0

//! C++ harness for a Verilated model `V<circuit>`. Values are carried as
//! `uint64_t` and masked to their width after every operation.

use crate::circuit::{CircuitDecl, PortType};
use crate::expr::{Binop, Expr, Unop};
use crate::ir::{child_path, Action, ActionProgram};

use super::{escape, line, precheck, CodegenError, EmitOptions, EmittedTestbench};

fn mask(width: u32) -> String {
    if width >= 64 {
        "UINT64_MAX".to_string()
    } else {
        format!("UINT64_C({:#x})", (1u64 << width) - 1)
    }
}

fn cxx_expr(e: &Expr, path: &str) -> Result<String, CodegenError> {
    let w = e.width().unwrap_or(1);
    Ok(match e {
        Expr::Const { value, .. } => format!("UINT64_C({value})"),
        Expr::Peek { target, .. } => match target.as_port() {
            Some(p) => format!("static_cast<uint64_t>(__fl_top->{p})"),
            None => {
                return Err(CodegenError::Unsupported {
                    path: path.to_string(),
                    message: format!("peek of internal signal `{target}` in the C++ harness"),
                })
            }
        },
        Expr::Var { name, .. } => format!("({name} & {})", mask(w)),
        Expr::Zext { arg, .. } => cxx_expr(arg, path)?,
        Expr::Unop { op, arg } => {
            let a = cxx_expr(arg, path)?;
            match op {
                Unop::Not => format!("static_cast<uint64_t>(!{a})"),
                Unop::Neg => format!("((UINT64_C(0) - {a}) & {})", mask(w)),
                Unop::BitNot => format!("(~{a} & {})", mask(w)),
            }
        }
        Expr::Binop { op, lhs, rhs } => {
            let (a, b) = (cxx_expr(lhs, path)?, cxx_expr(rhs, path)?);
            let m = mask(w);
            match op {
                Binop::Add => format!("(({a} + {b}) & {m})"),
                Binop::Sub => format!("(({a} - {b}) & {m})"),
                Binop::Mul => format!("(({a} * {b}) & {m})"),
                Binop::And => format!("({a} & {b})"),
                Binop::Or => format!("({a} | {b})"),
                Binop::Xor => format!("({a} ^ {b})"),
                Binop::Shl => format!("({b} >= {w} ? UINT64_C(0) : (({a} << {b}) & {m}))"),
                Binop::Lshr => format!("({b} >= {w} ? UINT64_C(0) : ({a} >> {b}))"),
                _ => {
                    let sym = match op {
                        Binop::Eq => "==",
                        Binop::Neq => "!=",
                        Binop::Ult => "<",
                        Binop::Ule => "<=",
                        Binop::Ugt => ">",
                        Binop::Uge => ">=",
                        Binop::LogicalAnd => "&&",
                        _ => "||",
                    };
                    format!("static_cast<uint64_t>({a} {sym} {b})")
                }
            }
        }
    })
}

struct Emitter {
    clock: Option<String>,
    opts: EmitOptions,
    out: String,
}

impl Emitter {
    fn block(&mut self, actions: &[Action], parent: &str, field: &str, depth: usize) -> Result<(), CodegenError> {
        for (i, a) in actions.iter().enumerate() {
            let path = child_path(parent, field, i);
            self.action(a, &path, depth)?;
        }
        Ok(())
    }

    fn action(&mut self, a: &Action, path: &str, depth: usize) -> Result<(), CodegenError> {
        let out = &mut self.out;
        match a {
            Action::Poke { target, value } => {
                line(out, depth, &format!("__fl_top->{target} = {};", cxx_expr(value, path)?));
            }
            Action::Eval => line(out, depth, "__fl_top->eval();"),
            Action::Step { n } => {
                let clk = self.clock.clone().unwrap_or_default();
                for _ in 0..*n {
                    line(out, depth, &format!("__fl_top->{clk} = !__fl_top->{clk};"));
                    line(out, depth, "__fl_top->eval();");
                }
            }
            Action::Expect { target, value } => {
                let Some(port) = target.as_port() else {
                    return Err(CodegenError::Unsupported {
                        path: path.to_string(),
                        message: format!("expect on internal signal `{target}` in the C++ harness"),
                    });
                };
                let sig = format!("static_cast<uint64_t>(__fl_top->{port})");
                let v = cxx_expr(value, path)?;
                line(out, depth, &format!("if ({sig} != {v}) {{"));
                let msg = escape(&format!("{path}: expected {target} == %llu, observed %llu\n"));
                line(
                    out,
                    depth + 1,
                    &format!(
                        "std::fprintf(stderr, \"{msg}\", static_cast<unsigned long long>({v}), static_cast<unsigned long long>({sig}));"
                    ),
                );
                line(out, depth + 1, "++__fl_errors;");
                if self.opts.fail_fast {
                    line(out, depth + 1, "return __fl_errors;");
                }
                line(out, depth, "}");
            }
            Action::Print { format, args } => {
                let mut fmt = String::new();
                let mut vals = Vec::new();
                let mut next = args.iter();
                let mut chars = format.chars();
                while let Some(ch) = chars.next() {
                    if ch != '%' {
                        fmt.push(ch);
                        continue;
                    }
                    match chars.next() {
                        Some('%') => fmt.push_str("%%"),
                        Some(conv) => {
                            let e = next.next().expect("arity validated");
                            let w = e.width().unwrap_or(1);
                            let v = cxx_expr(e, path)?;
                            match conv {
                                'd' => {
                                    fmt.push_str("%llu");
                                    vals.push(format!("static_cast<unsigned long long>({v})"));
                                }
                                'x' => {
                                    fmt.push_str(&format!("%0{}llx", w.div_ceil(4)));
                                    vals.push(format!("static_cast<unsigned long long>({v})"));
                                }
                                _ => {
                                    fmt.push_str("%s");
                                    vals.push(format!("__fl_bin({v}, {w}).c_str()"));
                                }
                            }
                        }
                        None => {}
                    }
                }
                let mut parts = vec![format!("\"{}\"", escape(&fmt))];
                parts.extend(vals);
                line(out, depth, &format!("std::printf({});", parts.join(", ")));
            }
            Action::While { cond, body } => {
                line(out, depth, &format!("while ({}) {{", cxx_expr(cond, path)?));
                self.block(body, path, "body", depth + 1)?;
                line(&mut self.out, depth, "}");
            }
            Action::If {
                cond,
                then_body,
                else_body,
            } => {
                line(out, depth, &format!("if ({}) {{", cxx_expr(cond, path)?));
                self.block(then_body, path, "then", depth + 1)?;
                if else_body.is_empty() {
                    line(&mut self.out, depth, "}");
                } else {
                    line(&mut self.out, depth, "} else {");
                    self.block(else_body, path, "else", depth + 1)?;
                    line(&mut self.out, depth, "}");
                }
            }
            Action::For { count, var, body } => {
                line(
                    out,
                    depth,
                    &format!("for (uint64_t {var} = 0; {var} < UINT64_C({count}); ++{var}) {{"),
                );
                self.block(body, path, "body", depth + 1)?;
                line(&mut self.out, depth, "}");
            }
            Action::Assume { .. } | Action::Guarantee { .. } => unreachable!("rejected by precheck"),
        }
        Ok(())
    }
}

pub fn emit_cxx(p: &ActionProgram, c: &CircuitDecl, opts: EmitOptions) -> Result<EmittedTestbench, CodegenError> {
    precheck(p, c)?;
    for port in c.ports() {
        if port.width() > 64 {
            return Err(CodegenError::TooWide {
                name: port.name.clone(),
                width: port.width(),
            });
        }
    }
    let model = format!("V{}", c.name());
    let mut out = String::new();
    line(&mut out, 0, &format!("// Harness for {}, generated from an action program.", c.name()));
    line(&mut out, 0, "#include <cstdint>");
    line(&mut out, 0, "#include <cstdio>");
    line(&mut out, 0, "#include <memory>");
    line(&mut out, 0, "#include <string>");
    line(&mut out, 0, "");
    line(&mut out, 0, &format!("#include \"{model}.h\""));
    line(&mut out, 0, "#include \"verilated.h\"");
    line(&mut out, 0, "");
    line(&mut out, 0, "static std::string __fl_bin(uint64_t v, unsigned w) {");
    line(&mut out, 1, "std::string s(w, '0');");
    line(&mut out, 1, "for (unsigned i = 0; i < w; ++i) {");
    line(&mut out, 2, "if ((v >> i) & 1) s[w - 1 - i] = '1';");
    line(&mut out, 1, "}");
    line(&mut out, 1, "return s;");
    line(&mut out, 0, "}");
    line(&mut out, 0, "");
    line(&mut out, 0, "int main(int argc, char **argv) {");
    line(&mut out, 1, "Verilated::commandArgs(argc, argv);");
    line(&mut out, 1, &format!("auto __fl_top = std::make_unique<{model}>();"));
    line(&mut out, 1, "int __fl_errors = 0;");
    for port in c.ports().iter().filter(|p| p.is_input()) {
        line(&mut out, 1, &format!("__fl_top->{} = 0;", port.name));
    }
    line(&mut out, 1, "__fl_top->eval();");
    let clock = c
        .ports()
        .iter()
        .find(|p| p.ptype == PortType::Clock)
        .map(|p| p.name.clone());
    let mut em = Emitter {
        clock,
        opts,
        out,
    };
    em.block(&p.actions, "", "root", 1)?;
    let mut out = em.out;
    line(&mut out, 1, "__fl_top->final();");
    line(&mut out, 1, "return __fl_errors;");
    line(&mut out, 0, "}");
    Ok(EmittedTestbench {
        text: out,
        language: "cpp".to_string(),
        entry: format!("{}_tb.cpp", c.name()),
    })
}
