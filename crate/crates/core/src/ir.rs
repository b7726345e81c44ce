// SPDX-License-Identifier: Apache-2.0

//! The actions IR: a tree of recorded test actions plus the identity of the
//! circuit it was recorded against.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits;
use crate::circuit::{CircuitDecl, HierRef, PortType, RefTarget};
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Poke {
        target: HierRef,
        value: Expr,
    },
    Expect {
        target: HierRef,
        value: Expr,
    },
    Eval,
    Step {
        n: u64,
    },
    Print {
        format: String,
        args: Vec<Expr>,
    },
    While {
        cond: Expr,
        body: Vec<Action>,
    },
    If {
        cond: Expr,
        then_body: Vec<Action>,
        else_body: Vec<Action>,
    },
    For {
        count: u64,
        var: String,
        body: Vec<Action>,
    },
    Assume {
        target: HierRef,
        pred: Expr,
    },
    Guarantee {
        pred: Expr,
    },
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::Poke { .. } => "poke",
            Action::Expect { .. } => "expect",
            Action::Eval => "eval",
            Action::Step { .. } => "step",
            Action::Print { .. } => "print",
            Action::While { .. } => "while",
            Action::If { .. } => "if",
            Action::For { .. } => "for",
            Action::Assume { .. } => "assume",
            Action::Guarantee { .. } => "guarantee",
        }
    }

    pub fn is_control_flow(&self) -> bool {
        matches!(self, Action::While { .. } | Action::If { .. } | Action::For { .. })
    }

    pub fn is_constraint(&self) -> bool {
        matches!(self, Action::Assume { .. } | Action::Guarantee { .. })
    }
}

/// A recorded, validated test program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionProgram {
    pub circuit: String,
    pub digest: String,
    pub clock: Option<HierRef>,
    pub actions: Vec<Action>,
}

/// Hash of the ordered `(name, dir, kind, width)` interface tuples.
pub fn interface_digest(c: &CircuitDecl) -> String {
    let mut h = Sha256::new();
    for p in c.ports() {
        h.update(format!("{},{},{},{}\n", p.name, p.dir.as_str(), p.ptype.kind_name(), p.width()));
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Error)]
pub enum IrError {
    #[error("malformed action program: {0}")]
    Malformed(String),
    #[error("action program failed validation:\n{}", render(.0))]
    Invalid(Vec<Diagnostic>),
}

fn render(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl ActionProgram {
    pub fn new(c: &CircuitDecl, clock: Option<HierRef>, actions: Vec<Action>) -> ActionProgram {
        ActionProgram {
            circuit: c.name().to_string(),
            digest: interface_digest(c),
            clock,
            actions,
        }
    }

    /// Canonical compact JSON. Equal programs produce identical bytes.
    pub fn serialize(&self) -> String {
        serde_json::to_string(self).expect("action programs serialize")
    }

    pub fn deserialize(text: &str, c: &CircuitDecl) -> Result<ActionProgram, IrError> {
        let p: ActionProgram =
            serde_json::from_str(text).map_err(|e| IrError::Malformed(e.to_string()))?;
        let diags = validate_program(&p, c);
        if diags.is_empty() {
            Ok(p)
        } else {
            Err(IrError::Invalid(diags))
        }
    }

    /// Number of actions of a kind, counted through every nested body.
    pub fn count(&self, kind: &str) -> usize {
        let mut n = 0;
        walk(&self.actions, &mut |a| {
            if a.kind() == kind {
                n += 1;
            }
        });
        n
    }

    pub fn has_control_flow(&self) -> bool {
        self.actions.iter().any(Action::is_control_flow)
    }

    /// Maximum nesting depth of control-flow bodies (0 for a flat program).
    pub fn depth(&self) -> usize {
        fn depth(actions: &[Action]) -> usize {
            actions
                .iter()
                .map(|a| match a {
                    Action::While { body, .. } | Action::For { body, .. } => 1 + depth(body),
                    Action::If {
                        then_body,
                        else_body,
                        ..
                    } => 1 + depth(then_body).max(depth(else_body)),
                    _ => 0,
                })
                .max()
                .unwrap_or(0)
        }
        depth(&self.actions)
    }

    /// Split into the concrete prefix and the trailing assume/guarantee block.
    pub fn split_constraints(&self) -> (&[Action], &[Action]) {
        let idx = self
            .actions
            .iter()
            .position(Action::is_constraint)
            .unwrap_or(self.actions.len());
        self.actions.split_at(idx)
    }
}

/// Pre-order walk over an action tree.
pub fn walk(actions: &[Action], f: &mut dyn FnMut(&Action)) {
    for a in actions {
        f(a);
        match a {
            Action::While { body, .. } | Action::For { body, .. } => walk(body, f),
            Action::If {
                then_body,
                else_body,
                ..
            } => {
                walk(then_body, f);
                walk(else_body, f);
            }
            _ => {}
        }
    }
}

/// Path of a child action, e.g. `root[3].body[1]`.
pub fn child_path(parent: &str, field: &str, index: usize) -> String {
    if parent.is_empty() {
        format!("{field}[{index}]")
    } else {
        format!("{parent}.{field}[{index}]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagCode {
    CircuitMismatch,
    DigestMismatch,
    BadClock,
    NoClock,
    Unresolved,
    NotInput,
    WidthMismatch,
    BadExpr,
    NotBoolean,
    UnboundVar,
    PrintArity,
    PeekInPredicate,
    UnknownPort,
    BadCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub code: DiagCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{:?}] {}", self.path, self.code, self.message)
    }
}

/// Count `%d`, `%x` and `%b` placeholders; `%%` is a literal percent.
pub fn placeholder_count(format: &str) -> Result<usize, String> {
    let mut n = 0;
    let mut chars = format.chars();
    while let Some(c) = chars.next() {
        if c == '%' {
            match chars.next() {
                Some('d' | 'x' | 'b') => n += 1,
                Some('%') => {}
                Some(other) => return Err(format!("unsupported conversion `%{other}`")),
                None => return Err("dangling `%` at end of format".into()),
            }
        }
    }
    Ok(n)
}

struct Validator<'c> {
    c: &'c CircuitDecl,
    has_clock: bool,
    diags: Vec<Diagnostic>,
    loop_vars: Vec<(String, u32)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ExprContext {
    /// Ordinary action operand: peeks and loop indices allowed.
    Body,
    /// Assumption: vars name input ports.
    Assume,
    /// Guarantee: vars name any data port.
    Guarantee,
}

impl<'c> Validator<'c> {
    fn push(&mut self, path: &str, code: DiagCode, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            path: path.to_string(),
            code,
            message: message.into(),
        });
    }

    /// Returns the expression width when it is well formed.
    fn check_expr(&mut self, path: &str, e: &Expr, ctx: ExprContext) -> Option<u32> {
        let before = self.diags.len();
        let mut problems = Vec::new();
        e.visit(&mut |node| match node {
            Expr::Peek { target, width } => {
                if ctx != ExprContext::Body {
                    problems.push((
                        DiagCode::PeekInPredicate,
                        format!("peek of `{target}` inside an assumption or guarantee"),
                    ));
                    return;
                }
                match self.c.resolve(target) {
                    Ok(r) if r.width == *width => {}
                    Ok(r) => problems.push((
                        DiagCode::WidthMismatch,
                        format!("peek of `{target}` declares {width} bits, signal has {}", r.width),
                    )),
                    Err(err) => problems.push((DiagCode::Unresolved, err.to_string())),
                }
            }
            Expr::Var { name, width } => match ctx {
                ExprContext::Body => match self.loop_vars.iter().rev().find(|(n, _)| n == name) {
                    Some((_, w)) if w == width => {}
                    Some((_, w)) => problems.push((
                        DiagCode::WidthMismatch,
                        format!("loop index `{name}` is {w} bits, used as {width}"),
                    )),
                    None => problems.push((
                        DiagCode::UnboundVar,
                        format!("variable `{name}` is not a loop index in scope"),
                    )),
                },
                ExprContext::Assume | ExprContext::Guarantee => match self.c.port(name) {
                    Some((_, p))
                        if matches!(p.ptype, PortType::Clock)
                            || (ctx == ExprContext::Assume && !p.is_input()) =>
                    {
                        problems.push((
                            DiagCode::UnknownPort,
                            format!("`{name}` is not a constrainable port here"),
                        ))
                    }
                    Some((_, p)) if p.width() != *width => problems.push((
                        DiagCode::WidthMismatch,
                        format!("variable `{name}` is {width} bits but port is {}", p.width()),
                    )),
                    Some(_) => {}
                    None => problems.push((
                        DiagCode::UnknownPort,
                        format!("variable `{name}` does not name a port"),
                    )),
                },
            },
            _ => {}
        });
        for (code, msg) in problems {
            self.push(path, code, msg);
        }
        match e.width() {
            Ok(w) if self.diags.len() == before => Some(w),
            Ok(_) => None,
            Err(err) => {
                self.push(path, DiagCode::BadExpr, err.to_string());
                None
            }
        }
    }

    fn check_bool(&mut self, path: &str, e: &Expr, ctx: ExprContext) {
        if let Some(w) = self.check_expr(path, e, ctx) {
            if w != 1 {
                self.push(path, DiagCode::NotBoolean, format!("condition is {w} bits wide"));
            }
        }
    }

    fn check_input_port(&mut self, path: &str, target: &HierRef) -> Option<u32> {
        match self.c.resolve(target) {
            Ok(r) => match r.target {
                RefTarget::Port(i) if self.c.ports()[i].is_input() => {
                    if self.c.ports()[i].ptype == PortType::Clock {
                        self.push(path, DiagCode::NotInput, format!("clock `{target}` is driven by step"));
                        None
                    } else {
                        Some(r.width)
                    }
                }
                _ => {
                    self.push(path, DiagCode::NotInput, format!("`{target}` is not an input port"));
                    None
                }
            },
            Err(e) => {
                self.push(path, DiagCode::Unresolved, e.to_string());
                None
            }
        }
    }

    fn block(&mut self, parent: &str, field: &str, actions: &[Action]) {
        for (i, a) in actions.iter().enumerate() {
            let path = child_path(parent, field, i);
            self.action(&path, a);
        }
    }

    fn action(&mut self, path: &str, a: &Action) {
        match a {
            Action::Poke { target, value } => {
                let port_width = self.check_input_port(path, target);
                let value_width = self.check_expr(path, value, ExprContext::Body);
                if let (Some(p), Some(v)) = (port_width, value_width) {
                    if p != v {
                        self.push(
                            path,
                            DiagCode::WidthMismatch,
                            format!("poke of {v}-bit value into {p}-bit `{target}`"),
                        );
                    }
                }
            }
            Action::Expect { target, value } => {
                let sig_width = match self.c.resolve(target) {
                    Ok(r) => Some(r.width),
                    Err(e) => {
                        self.push(path, DiagCode::Unresolved, e.to_string());
                        None
                    }
                };
                let value_width = self.check_expr(path, value, ExprContext::Body);
                if let (Some(s), Some(v)) = (sig_width, value_width) {
                    if s != v {
                        self.push(
                            path,
                            DiagCode::WidthMismatch,
                            format!("expect of {v}-bit value on {s}-bit `{target}`"),
                        );
                    }
                }
            }
            Action::Eval => {}
            Action::Step { n } => {
                if *n == 0 {
                    self.push(path, DiagCode::BadCount, "step count must be positive");
                }
                if !self.has_clock {
                    self.push(path, DiagCode::NoClock, "step requires a clock");
                }
            }
            Action::Print { format, args } => {
                match placeholder_count(format) {
                    Ok(n) if n == args.len() => {}
                    Ok(n) => self.push(
                        path,
                        DiagCode::PrintArity,
                        format!("format has {n} placeholder(s) but {} argument(s)", args.len()),
                    ),
                    Err(e) => self.push(path, DiagCode::PrintArity, e),
                }
                for e in args {
                    self.check_expr(path, e, ExprContext::Body);
                }
            }
            Action::While { cond, body } => {
                self.check_bool(path, cond, ExprContext::Body);
                self.block(path, "body", body);
            }
            Action::If {
                cond,
                then_body,
                else_body,
            } => {
                self.check_bool(path, cond, ExprContext::Body);
                self.block(path, "then", then_body);
                self.block(path, "else", else_body);
            }
            Action::For { count, var, body } => {
                if self.loop_vars.iter().any(|(n, _)| n == var) {
                    self.push(path, DiagCode::BadExpr, format!("loop index `{var}` shadows an outer index"));
                }
                self.loop_vars.push((var.clone(), bits::index_width(*count)));
                self.block(path, "body", body);
                self.loop_vars.pop();
            }
            Action::Assume { target, pred } => {
                if let Some(w) = self.check_input_port(path, target) {
                    let own = target.to_string();
                    if let Some(vw) = pred.vars().get(&own) {
                        if *vw != w {
                            self.push(path, DiagCode::WidthMismatch, "assumption variable width differs from port");
                        }
                    }
                }
                self.check_bool(path, pred, ExprContext::Assume);
            }
            Action::Guarantee { pred } => self.check_bool(path, pred, ExprContext::Guarantee),
        }
    }
}

/// Check a program against a circuit. Empty iff well formed.
pub fn validate_program(p: &ActionProgram, c: &CircuitDecl) -> Vec<Diagnostic> {
    let mut v = Validator {
        c,
        has_clock: false,
        diags: Vec::new(),
        loop_vars: Vec::new(),
    };
    if p.circuit != c.name() {
        v.push(
            "program",
            DiagCode::CircuitMismatch,
            format!("recorded against `{}`, checked against `{}`", p.circuit, c.name()),
        );
    }
    let digest = interface_digest(c);
    if p.digest != digest {
        v.push(
            "program",
            DiagCode::DigestMismatch,
            format!("interface digest {} does not match circuit digest {digest}", p.digest),
        );
    }
    if let Some(clk) = &p.clock {
        match c.resolve(clk) {
            Ok(r) => match r.target {
                RefTarget::Port(i) if c.ports()[i].ptype == PortType::Clock => v.has_clock = true,
                _ => v.push("program.clock", DiagCode::BadClock, format!("`{clk}` is not a clock port")),
            },
            Err(e) => v.push("program.clock", DiagCode::BadClock, e.to_string()),
        }
    }
    v.block("", "root", &p.actions);
    v.diags
}

/// Variables of a set of expressions, merged by name.
pub fn merged_vars<'a>(exprs: impl IntoIterator<Item = &'a Expr>) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    for e in exprs {
        out.extend(e.vars());
    }
    out
}
