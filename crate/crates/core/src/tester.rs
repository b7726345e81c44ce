// SPDX-License-Identifier: Apache-2.0

//! The recording frontend.
//!
//! A [`Tester`] is the first stage of a staged test: host code calls its
//! methods and each call appends one action to the program under
//! construction. Host-language loops therefore unroll into flat action
//! sequences, while [`Tester::begin_while`], [`Tester::begin_if`] and
//! [`Tester::begin_for`] record a single control-flow node whose body is
//! executed by the target runtime.
//!
//! ```
//! use faultline::{circuit::parse_netlist, tester::Tester};
//! # let json = r#"{"name": "Add16", "ports": [
//! #   {"name": "in0", "dir": "input", "type": {"bv": 16}},
//! #   {"name": "in1", "dir": "input", "type": {"bv": 16}},
//! #   {"name": "out", "dir": "output", "type": {"bv": 16}}],
//! #   "instances": [{"name": "add", "kind": "add", "params": {"width": 16}}],
//! #   "nets": [{"from": "in0", "to": ["add.in0"]}, {"from": "in1", "to": ["add.in1"]},
//! #            {"from": "add.out", "to": ["out"]}]}"#;
//! let add16 = parse_netlist(json).unwrap();
//! let mut t = Tester::new(&add16, None).unwrap();
//! t.poke("in0", 3).unwrap();
//! t.poke("in1", 2).unwrap();
//! t.eval();
//! t.expect("out", 5).unwrap();
//! let program = t.finalize().unwrap();
//! assert_eq!(program.actions.len(), 4);
//! ```

use std::collections::BTreeSet;
use std::ops::{Deref, DerefMut};

use num_bigint::BigUint;
use thiserror::Error;

use crate::bits;
use crate::circuit::{CircuitDecl, HierRef, PortKind, PortType, RefTarget, ResolveError};
use crate::expr::{Expr, ExprError};
use crate::ir::{placeholder_count, Action, ActionProgram};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TesterError {
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error("invalid path: {0}")]
    BadPath(String),
    #[error("`{0}` is not a clock port")]
    NotClock(String),
    #[error("`{0}` is not a pokeable input port")]
    NotInput(String),
    #[error("value {value} is out of range for {width}-bit `{target}`")]
    OutOfRange {
        target: String,
        value: String,
        width: u32,
    },
    #[error("`{target}` is {expected} bits but the value is {found} bits")]
    WidthMismatch {
        target: String,
        expected: u32,
        found: u32,
    },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("no clock configured; step and wait actions need one")]
    NoClock,
    #[error("condition must be 1 bit wide, got {0} bits")]
    NotBoolean(u32),
    #[error("print format has {placeholders} placeholder(s) but {args} argument(s)")]
    PrintArity { placeholders: usize, args: usize },
    #[error("bad print format: {0}")]
    Format(String),
    #[error("circuit has no async_reset_n port")]
    NoResetPort,
    #[error("circuit has {0} async_reset_n ports; pass one explicitly")]
    MultipleResetPorts(usize),
    #[error("unclosed `{0}` scope")]
    UnclosedScope(&'static str),
    #[error("no open control-flow scope")]
    NoOpenScope,
    #[error("`{0}` does not name a port of the circuit")]
    UnknownPort(String),
    #[error("variable `{0}` is only meaningful inside a loop or a predicate")]
    UnboundVar(String),
    #[error("assumptions and guarantees cannot peek at signals")]
    PeekInPredicate,
    #[error("assumption on `{target}` has more than one free variable: {vars:?}")]
    AmbiguousAssumption { target: String, vars: Vec<String> },
}

pub type Result<T, E = TesterError> = std::result::Result<T, E>;

/// Anything naming a signal: `"out"`, `"ff.Q"` or a [`HierRef`].
pub trait ToRef {
    fn to_ref(&self) -> Result<HierRef>;
}

impl ToRef for str {
    fn to_ref(&self) -> Result<HierRef> {
        self.parse().map_err(TesterError::BadPath)
    }
}

impl ToRef for &str {
    fn to_ref(&self) -> Result<HierRef> {
        (*self).to_ref()
    }
}

impl ToRef for String {
    fn to_ref(&self) -> Result<HierRef> {
        self.as_str().to_ref()
    }
}

impl ToRef for HierRef {
    fn to_ref(&self) -> Result<HierRef> {
        Ok(self.clone())
    }
}

impl ToRef for &HierRef {
    fn to_ref(&self) -> Result<HierRef> {
        Ok((*self).clone())
    }
}

/// Value operand for poke and expect: an integer literal or an expression.
#[derive(Debug, Clone)]
pub enum Operand {
    Int(BigUint),
    Negative(i128),
    Expr(Expr),
}

macro_rules! operand_from_unsigned {
    ($($t:ty),*) => {$(
        impl From<$t> for Operand {
            fn from(v: $t) -> Operand { Operand::Int(BigUint::from(v)) }
        }
    )*};
}
macro_rules! operand_from_signed {
    ($($t:ty),*) => {$(
        impl From<$t> for Operand {
            fn from(v: $t) -> Operand {
                if v < 0 { Operand::Negative(v as i128) } else { Operand::Int(BigUint::from(v as u128)) }
            }
        }
    )*};
}
operand_from_unsigned!(u8, u16, u32, u64, u128, usize);
operand_from_signed!(i32, i64);

impl From<BigUint> for Operand {
    fn from(v: BigUint) -> Operand {
        Operand::Int(v)
    }
}

impl From<Expr> for Operand {
    fn from(e: Expr) -> Operand {
        Operand::Expr(e)
    }
}

impl From<&Expr> for Operand {
    fn from(e: &Expr) -> Operand {
        Operand::Expr(e.clone())
    }
}

#[derive(Debug)]
enum Frame {
    While {
        cond: Expr,
        body: Vec<Action>,
    },
    If {
        cond: Expr,
        then_body: Vec<Action>,
        else_body: Vec<Action>,
        in_else: bool,
    },
    For {
        count: u64,
        var: String,
        body: Vec<Action>,
    },
}

impl Frame {
    fn name(&self) -> &'static str {
        match self {
            Frame::While { .. } => "while",
            Frame::If { .. } => "if",
            Frame::For { .. } => "for",
        }
    }
}

/// Records actions against one circuit.
#[derive(Debug)]
pub struct Tester<'c> {
    circuit: &'c CircuitDecl,
    clock: Option<HierRef>,
    root: Vec<Action>,
    scopes: Vec<Frame>,
    loops: usize,
}

impl<'c> Tester<'c> {
    pub fn new(circuit: &'c CircuitDecl, clock: Option<HierRef>) -> Result<Tester<'c>> {
        if let Some(clk) = &clock {
            let r = circuit.resolve(clk)?;
            match r.target {
                RefTarget::Port(i) if circuit.ports()[i].ptype == PortType::Clock => {}
                _ => return Err(TesterError::NotClock(clk.to_string())),
            }
        }
        Ok(Tester {
            circuit,
            clock,
            root: Vec::new(),
            scopes: Vec::new(),
            loops: 0,
        })
    }

    pub fn circuit(&self) -> &'c CircuitDecl {
        self.circuit
    }

    pub fn clock(&self) -> Option<&HierRef> {
        self.clock.as_ref()
    }

    fn current(&mut self) -> &mut Vec<Action> {
        match self.scopes.last_mut() {
            None => &mut self.root,
            Some(Frame::While { body, .. }) | Some(Frame::For { body, .. }) => body,
            Some(Frame::If {
                then_body,
                else_body,
                in_else,
                ..
            }) => {
                if *in_else {
                    else_body
                } else {
                    then_body
                }
            }
        }
    }

    fn record(&mut self, a: Action) {
        self.current().push(a);
    }

    fn open_loop_vars(&self) -> BTreeSet<&str> {
        self.scopes
            .iter()
            .filter_map(|f| match f {
                Frame::For { var, .. } => Some(var.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Width-check an action operand; variables must be open loop indices.
    fn check_body_expr(&self, e: &Expr) -> Result<u32> {
        let open = self.open_loop_vars();
        if let Some(name) = e.vars().keys().find(|n| !open.contains(n.as_str())) {
            return Err(TesterError::UnboundVar(name.clone()));
        }
        Ok(e.width()?)
    }

    fn operand(&self, target: &HierRef, width: u32, v: Operand) -> Result<Expr> {
        match v {
            Operand::Int(value) => {
                if !bits::fits(&value, width) {
                    return Err(TesterError::OutOfRange {
                        target: target.to_string(),
                        value: value.to_string(),
                        width,
                    });
                }
                Ok(Expr::Const { value, width })
            }
            Operand::Negative(v) => Err(TesterError::OutOfRange {
                target: target.to_string(),
                value: v.to_string(),
                width,
            }),
            Operand::Expr(e) => {
                let w = self.check_body_expr(&e)?;
                if w == width {
                    return Ok(e);
                }
                // Loop indices are minimal-width and widen to their context.
                if let Expr::Var { name, .. } = &e {
                    if w < width && self.open_loop_vars().contains(name.as_str()) {
                        return Ok(e.zext(width));
                    }
                }
                Err(TesterError::WidthMismatch {
                    target: target.to_string(),
                    expected: width,
                    found: w,
                })
            }
        }
    }

    fn input_port(&self, target: &HierRef) -> Result<u32> {
        let r = self.circuit.resolve(target)?;
        match r.target {
            RefTarget::Port(i) => {
                let p = &self.circuit.ports()[i];
                if p.is_input() && p.ptype != PortType::Clock {
                    Ok(r.width)
                } else {
                    Err(TesterError::NotInput(target.to_string()))
                }
            }
            RefTarget::Pin { .. } => Err(TesterError::NotInput(target.to_string())),
        }
    }

    /// Drive an input port. The value takes effect at the next eval or step.
    pub fn poke(&mut self, target: impl ToRef, value: impl Into<Operand>) -> Result<()> {
        let target = target.to_ref()?;
        let width = self.input_port(&target)?;
        let value = self.operand(&target, width, value.into())?;
        self.record(Action::Poke { target, value });
        Ok(())
    }

    /// Symbolic reference to a signal's value in the current simulation
    /// state. Records nothing.
    pub fn peek(&self, target: impl ToRef) -> Result<Expr> {
        let target = target.to_ref()?;
        let r = self.circuit.resolve(&target)?;
        Ok(Expr::Peek {
            target,
            width: r.width,
        })
    }

    pub fn expect(&mut self, target: impl ToRef, value: impl Into<Operand>) -> Result<()> {
        let target = target.to_ref()?;
        let r = self.circuit.resolve(&target)?;
        let value = self.operand(&target, r.width, value.into())?;
        self.record(Action::Expect { target, value });
        Ok(())
    }

    pub fn eval(&mut self) {
        self.record(Action::Eval);
    }

    /// Invert the clock `n` times; a full cycle is `step(2)`.
    pub fn step(&mut self, n: u64) -> Result<()> {
        if self.clock.is_none() {
            return Err(TesterError::NoClock);
        }
        if n == 0 {
            return Err(TesterError::Format("step count must be positive".into()));
        }
        self.record(Action::Step { n });
        Ok(())
    }

    /// Record a runtime print. Supports `%d`, `%x` and `%b`.
    pub fn print(&mut self, format: &str, args: Vec<Expr>) -> Result<()> {
        let placeholders = placeholder_count(format).map_err(TesterError::Format)?;
        if placeholders != args.len() {
            return Err(TesterError::PrintArity {
                placeholders,
                args: args.len(),
            });
        }
        for a in &args {
            self.check_body_expr(a)?;
        }
        self.record(Action::Print {
            format: format.to_string(),
            args,
        });
        Ok(())
    }

    fn condition(&self, cond: &Expr) -> Result<()> {
        let w = self.check_body_expr(cond)?;
        if w != 1 {
            return Err(TesterError::NotBoolean(w));
        }
        Ok(())
    }

    /// Open a `while` body on the scope stack. Prefer [`Tester::begin_while`].
    pub fn open_while(&mut self, cond: Expr) -> Result<()> {
        self.condition(&cond)?;
        self.scopes.push(Frame::While {
            cond,
            body: Vec::new(),
        });
        Ok(())
    }

    pub fn open_if(&mut self, cond: Expr) -> Result<()> {
        self.condition(&cond)?;
        self.scopes.push(Frame::If {
            cond,
            then_body: Vec::new(),
            else_body: Vec::new(),
            in_else: false,
        });
        Ok(())
    }

    /// Switch the innermost open `if` to its else branch.
    pub fn open_else(&mut self) -> Result<()> {
        match self.scopes.last_mut() {
            Some(Frame::If { in_else, .. }) => {
                *in_else = true;
                Ok(())
            }
            _ => Err(TesterError::NoOpenScope),
        }
    }

    /// Open a `for` body; returns the loop index variable.
    pub fn open_for(&mut self, count: u64) -> Expr {
        let var = format!("__fl_i{}", self.loops);
        self.loops += 1;
        let width = bits::index_width(count);
        self.scopes.push(Frame::For {
            count,
            var: var.clone(),
            body: Vec::new(),
        });
        Expr::var(var, width)
    }

    /// Close the innermost open control-flow scope.
    pub fn close(&mut self) -> Result<()> {
        let frame = self.scopes.pop().ok_or(TesterError::NoOpenScope)?;
        let action = match frame {
            Frame::While { cond, body } => Action::While { cond, body },
            Frame::If {
                cond,
                then_body,
                else_body,
                ..
            } => Action::If {
                cond,
                then_body,
                else_body,
            },
            Frame::For { count, var, body } => Action::For { count, var, body },
        };
        self.record(action);
        Ok(())
    }

    /// Record a `while` loop. Actions recorded through the returned scope go
    /// into the loop body; the body closes when the scope is dropped.
    pub fn begin_while(&mut self, cond: Expr) -> Result<Scope<'_, 'c>> {
        self.open_while(cond)?;
        Ok(Scope::new(self))
    }

    /// Record an `if`. The scope starts in the then-branch; call
    /// [`Scope::otherwise`] to move to the else-branch.
    pub fn begin_if(&mut self, cond: Expr) -> Result<Scope<'_, 'c>> {
        self.open_if(cond)?;
        Ok(Scope::new(self))
    }

    /// Record a `for` loop of `count` iterations with its index variable.
    pub fn begin_for(&mut self, count: u64) -> (Scope<'_, 'c>, Expr) {
        let index = self.open_for(count);
        (Scope::new(self), index)
    }

    fn wait_loop(&mut self, cond: Expr) -> Result<()> {
        self.open_while(cond)?;
        self.step(1)?;
        self.close()
    }

    /// Step until `target` is zero.
    pub fn wait_until_low(&mut self, target: impl ToRef) -> Result<()> {
        if self.clock.is_none() {
            return Err(TesterError::NoClock);
        }
        let p = self.peek(target)?;
        let w = p.width()?;
        self.wait_loop(p.not_equal(Expr::constant(0u32, w)))
    }

    /// Step until `target` goes from 0 to 1: wait for it to be low, then for
    /// it to become nonzero.
    pub fn wait_until_posedge(&mut self, target: impl ToRef) -> Result<()> {
        if self.clock.is_none() {
            return Err(TesterError::NoClock);
        }
        let target = target.to_ref()?;
        let p = self.peek(&target)?;
        let w = p.width()?;
        self.wait_loop(p.clone().not_equal(Expr::constant(0u32, w)))?;
        self.wait_loop(p.equal(Expr::constant(0u32, w)))
    }

    /// Step until `cond` holds.
    pub fn wait_on(&mut self, cond: Expr) -> Result<()> {
        if self.clock.is_none() {
            return Err(TesterError::NoClock);
        }
        self.condition(&cond)?;
        self.wait_loop(cond.logical_not())
    }

    /// Variable standing for a port inside an assumption or guarantee.
    pub fn port_var(&self, name: &str) -> Result<Expr> {
        let (_, p) = self
            .circuit
            .port(name)
            .ok_or_else(|| TesterError::UnknownPort(name.to_string()))?;
        Ok(Expr::var(name, p.width()))
    }

    /// Constrain an input port. The predicate may use one free variable for
    /// the port itself (any name) and variables named after other input
    /// ports for relational constraints.
    pub fn assume(&mut self, target: impl ToRef, pred: Expr) -> Result<()> {
        let target = target.to_ref()?;
        let width = self.input_port(&target)?;
        let port_name = target.to_string();
        if !pred.peeks().is_empty() {
            return Err(TesterError::PeekInPredicate);
        }
        let vars = pred.vars();
        let free: Vec<String> = vars
            .keys()
            .filter(|n| {
                **n != port_name
                    && !self
                        .circuit
                        .port(n)
                        .map(|(_, p)| p.is_input() && p.ptype != PortType::Clock)
                        .unwrap_or(false)
            })
            .cloned()
            .collect();
        if free.len() > 1 {
            return Err(TesterError::AmbiguousAssumption {
                target: port_name,
                vars: free,
            });
        }
        let pred = match free.first() {
            Some(name) if vars.contains_key(&port_name) => {
                return Err(TesterError::AmbiguousAssumption {
                    target: port_name,
                    vars: vec![name.clone(), target.to_string()],
                })
            }
            Some(name) => {
                let name = name.clone();
                pred.rename_vars(&|n| if n == name { port_name.clone() } else { n.to_string() })
            }
            None => pred,
        };
        for (name, w) in pred.vars() {
            let expected = if name == port_name {
                width
            } else {
                self.circuit.port_width(&name)?
            };
            if w != expected {
                return Err(TesterError::WidthMismatch {
                    target: name,
                    expected,
                    found: w,
                });
            }
        }
        self.condition_pred(&pred)?;
        self.record(Action::Assume { target, pred });
        Ok(())
    }

    /// [`Tester::assume`] with the port variable supplied to a closure.
    pub fn assume_with(&mut self, target: impl ToRef, f: impl FnOnce(Expr) -> Expr) -> Result<()> {
        let target = target.to_ref()?;
        let width = self.input_port(&target)?;
        let pred = f(Expr::var(target.to_string(), width));
        self.assume(target, pred)
    }

    /// Assert a property over port variables (see [`Tester::port_var`]).
    pub fn guarantee(&mut self, pred: Expr) -> Result<()> {
        if !pred.peeks().is_empty() {
            return Err(TesterError::PeekInPredicate);
        }
        for (name, w) in pred.vars() {
            let (_, p) = self
                .circuit
                .port(&name)
                .ok_or_else(|| TesterError::UnknownPort(name.clone()))?;
            if p.ptype == PortType::Clock {
                return Err(TesterError::UnknownPort(name));
            }
            if p.width() != w {
                return Err(TesterError::WidthMismatch {
                    target: name,
                    expected: p.width(),
                    found: w,
                });
            }
        }
        self.condition_pred(&pred)?;
        self.record(Action::Guarantee { pred });
        Ok(())
    }

    fn condition_pred(&self, pred: &Expr) -> Result<()> {
        let w = pred.width()?;
        if w != 1 {
            return Err(TesterError::NotBoolean(w));
        }
        Ok(())
    }

    /// Asynchronous active-low reset pulse. Without an explicit port the
    /// circuit must have exactly one `async_reset_n` port.
    pub fn reset_sequence(&mut self, reset: Option<HierRef>) -> Result<()> {
        let target = match reset {
            Some(r) => r,
            None => {
                let found = self.circuit.find_ports_by_type(PortKind::AsyncResetN);
                match found.as_slice() {
                    [] => return Err(TesterError::NoResetPort),
                    [one] => HierRef::port(&one.name),
                    many => return Err(TesterError::MultipleResetPorts(many.len())),
                }
            }
        };
        for level in [1u32, 0, 1] {
            self.poke(&target, level)?;
            self.eval();
        }
        Ok(())
    }

    pub fn finalize(self) -> Result<ActionProgram> {
        if let Some(frame) = self.scopes.last() {
            return Err(TesterError::UnclosedScope(frame.name()));
        }
        Ok(ActionProgram::new(self.circuit, self.clock, self.root))
    }
}

/// A control-flow body under construction. Dereferences to the [`Tester`];
/// dropping it closes the body.
pub struct Scope<'t, 'c> {
    tester: &'t mut Tester<'c>,
    depth: usize,
}

impl<'t, 'c> Scope<'t, 'c> {
    fn new(tester: &'t mut Tester<'c>) -> Scope<'t, 'c> {
        let depth = tester.scopes.len();
        Scope { tester, depth }
    }

    /// Continue recording into the else-branch of this `if`.
    pub fn otherwise(&mut self) -> Result<()> {
        if self.tester.scopes.len() != self.depth {
            return Err(TesterError::NoOpenScope);
        }
        self.tester.open_else()
    }
}

impl<'c> Deref for Scope<'_, 'c> {
    type Target = Tester<'c>;

    fn deref(&self) -> &Tester<'c> {
        self.tester
    }
}

impl<'c> DerefMut for Scope<'_, 'c> {
    fn deref_mut(&mut self) -> &mut Tester<'c> {
        self.tester
    }
}

impl Drop for Scope<'_, '_> {
    fn drop(&mut self) {
        while self.tester.scopes.len() >= self.depth && !self.tester.scopes.is_empty() {
            let _ = self.tester.close();
        }
    }
}
