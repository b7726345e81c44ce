// SPDX-License-Identifier: Apache-2.0

//! Text emitters: SystemVerilog and Verilator-style C++ testbenches, plus a
//! structural Verilog printer for the DUT.

mod cxx;
mod dialect;
mod sv;
mod verilog;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{CircuitDecl, Endpoint, HierRef, SignalId};
use crate::ir::{validate_program, walk, Action, ActionProgram};

pub use cxx::emit_cxx;
pub use dialect::{FileIoStyle, SvDialect};
pub use sv::emit_sv;
pub use verilog::emit_verilog;

/// Prefix reserved for generated identifiers.
pub const RESERVED_PREFIX: &str = "__fl_";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmittedTestbench {
    pub text: String,
    /// `systemverilog`, `cpp`, `verilog` or `spice`.
    pub language: String,
    /// Suggested file name.
    pub entry: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmitOptions {
    /// Abort on the first expect mismatch.
    pub fail_fast: bool,
}

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("program does not validate: {0}")]
    Invalid(String),
    #[error("{path}: `{kind}` must be lowered by the random target before emission")]
    ResidualConstraint { path: String, kind: String },
    #[error("identifier `{0}` collides with a generated or reserved name")]
    Collision(String),
    #[error("port `{name}` is {width} bits; the C++ harness supports at most 64")]
    TooWide { name: String, width: u32 },
    #[error("{path}: {message}")]
    Unsupported { path: String, message: String },
    #[error("dialect: {0}")]
    Dialect(String),
}

const KEYWORDS: &[&str] = &[
    "always", "always_comb", "always_ff", "and", "assign", "begin", "bit", "buf", "byte", "case", "class", "const",
    "default", "do", "else", "end", "endcase", "endfunction", "endmodule", "endtask", "enum", "final", "for",
    "forever", "function", "if", "initial", "inout", "input", "int", "integer", "logic", "longint", "module",
    "nand", "negedge", "nor", "not", "or", "output", "parameter", "posedge", "real", "reg", "repeat", "return",
    "shortint", "signed", "string", "task", "time", "type", "unsigned", "void", "while", "wire", "xor",
    // C++ names the harness relies on.
    "auto", "bool", "break", "char", "continue", "delete", "double", "float", "long", "main", "namespace", "new",
    "short", "static", "struct", "switch", "this", "union", "using",
];

/// Reject circuit identifiers that could collide with generated names.
pub(crate) fn check_names(c: &CircuitDecl, p: &ActionProgram) -> Result<(), CodegenError> {
    let bad = |n: &str| n.starts_with(RESERVED_PREFIX) || KEYWORDS.contains(&n);
    let mut names: Vec<&str> = vec![c.name()];
    names.extend(c.ports().iter().map(|p| p.name.as_str()));
    for n in names {
        if bad(n) {
            return Err(CodegenError::Collision(n.to_string()));
        }
    }
    // Instances only surface as `<inst>_<pin>` wires, so keywords are harmless there;
    // what matters is that no derived wire shadows a port or another wire.
    let mut seen: std::collections::HashSet<String> = c.ports().iter().map(|p| p.name.clone()).collect();
    for (i, inst) in c.instances().iter().enumerate() {
        if inst.name.starts_with(RESERVED_PREFIX) {
            return Err(CodegenError::Collision(inst.name.clone()));
        }
        for (k, s) in c.signals().iter().enumerate() {
            if matches!(s.driver, Endpoint::Pin { inst: j, .. } if j == i) {
                let w = signal_wire(c, SignalId(k));
                if !seen.insert(w.clone()) {
                    return Err(CodegenError::Collision(w));
                }
            }
        }
    }
    let mut err = None;
    walk(&p.actions, &mut |a| {
        if let Action::For { var, .. } = a {
            let clash = KEYWORDS.contains(&var.as_str())
                || c.port(var).is_some()
                || c.instance(var).is_some()
                || var == c.name();
            if clash && err.is_none() {
                err = Some(CodegenError::Collision(var.clone()));
            }
        }
    });
    err.map_or(Ok(()), Err)
}

pub(crate) fn precheck(p: &ActionProgram, c: &CircuitDecl) -> Result<(), CodegenError> {
    let diags = validate_program(p, c);
    if !diags.is_empty() {
        let text: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(CodegenError::Invalid(text.join("; ")));
    }
    if let Some((path, kind)) = first_constraint(&p.actions, "") {
        return Err(CodegenError::ResidualConstraint { path, kind });
    }
    check_names(c, p)
}

fn first_constraint(actions: &[Action], parent: &str) -> Option<(String, String)> {
    let field = if parent.is_empty() { "root" } else { "body" };
    for (i, a) in actions.iter().enumerate() {
        let path = crate::ir::child_path(parent, field, i);
        if a.is_constraint() {
            return Some((path, a.kind().to_string()));
        }
        let nested = match a {
            Action::While { body, .. } | Action::For { body, .. } => first_constraint(body, &path),
            Action::If {
                then_body,
                else_body,
                ..
            } => first_constraint(then_body, &path).or_else(|| first_constraint(else_body, &path)),
            _ => None,
        };
        if nested.is_some() {
            return nested;
        }
    }
    None
}

/// Name of a signal in the structural DUT: the port name for inputs,
/// `inst_pin` for instance outputs.
pub(crate) fn signal_wire(c: &CircuitDecl, s: SignalId) -> String {
    match &c.signals()[s.0].driver {
        Endpoint::Port(i) => c.ports()[*i].name.clone(),
        Endpoint::Pin { inst, pin } => format!("{}_{}", c.instances()[*inst].name, pin),
    }
}

/// Testbench-side expression for a peek.
pub(crate) fn peek_path(c: &CircuitDecl, target: &HierRef) -> String {
    if let Some(port) = target.as_port() {
        return port.to_string();
    }
    let r = c.resolve(target).expect("validated reference");
    format!("__fl_dut.{}", signal_wire(c, r.signal))
}

/// Escape text for a C or Verilog string literal.
pub(crate) fn escape(s: &str) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Append `text` at `depth` levels of two-space indentation.
pub(crate) fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(text);
    out.push('\n');
}
