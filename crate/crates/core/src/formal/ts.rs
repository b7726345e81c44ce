// SPDX-License-Identifier: Apache-2.0

//! Bitvector transition systems. One transition is one full clock cycle;
//! the clock itself is implicit.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::bits;
use crate::circuit::{self, CircuitDecl, PortType, Primitive, SignalId};
use crate::ir::{child_path, validate_program, Action, ActionProgram};
use crate::sim::{input_signals, levelize, output_signal, SimError};

use super::term::{BinaryOp, TermArena, TermId, UnaryOp, VarId, MAX_MUL_WIDTH};
use super::FormalError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVar {
    /// Register instance name.
    pub name: String,
    pub width: u32,
    pub var: VarId,
    /// Initial value: the reset value, or the post-configuration value once
    /// a prefix has been lowered.
    pub init: BigUint,
    pub next: TermId,
    /// Active-low asynchronous reset input, if any.
    pub reset: Option<TermId>,
    pub reset_value: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputVar {
    /// Input port name.
    pub name: String,
    pub width: u32,
    pub var: VarId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub term: TermId,
}

#[derive(Debug, Clone)]
pub struct TransitionSystem {
    pub arena: TermArena,
    pub states: Vec<StateVar>,
    pub inputs: Vec<InputVar>,
    /// Value of each circuit signal within a frame, indexed by signal id.
    pub signals: Vec<TermId>,
    /// Term observed at each interface port, keyed by port name.
    pub ports: BTreeMap<String, TermId>,
    /// Invariant constraints, asserted in every frame.
    pub constraints: Vec<TermId>,
    pub properties: Vec<Property>,
    /// Inputs that lowering left unconstrained by pinning.
    pub symbolic_inputs: BTreeSet<String>,
}

impl TransitionSystem {
    pub fn state(&self, name: &str) -> Option<&StateVar> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn input(&self, name: &str) -> Option<&InputVar> {
        self.inputs.iter().find(|s| s.name == name)
    }

    /// Total bits of state plus one frame of inputs.
    pub fn frame_bits(&self) -> u32 {
        self.states.iter().map(|s| s.width).sum::<u32>() + self.inputs.iter().map(|i| i.width).sum::<u32>()
    }

    /// Concrete successor state and port values for one frame.
    pub fn simulate_frame(
        &self,
        state: &[BigUint],
        inputs: &[BigUint],
    ) -> (Vec<BigUint>, HashMap<TermId, BigUint>) {
        let mut vals: HashMap<VarId, BigUint> = HashMap::new();
        for (s, v) in self.states.iter().zip(state) {
            vals.insert(s.var, v.clone());
        }
        for (i, v) in self.inputs.iter().zip(inputs) {
            vals.insert(i.var, v.clone());
        }
        let lookup = |v: VarId| vals.get(&v).cloned().unwrap_or_default();
        let mut memo = HashMap::new();
        let next = self
            .states
            .iter()
            .map(|s| self.arena.eval_memo(s.next, &lookup, &mut memo))
            .collect();
        (next, memo)
    }

    /// Evaluate any term in a frame.
    pub fn eval(&self, t: TermId, state: &[BigUint], inputs: &[BigUint]) -> BigUint {
        let mut vals: HashMap<VarId, BigUint> = HashMap::new();
        for (s, v) in self.states.iter().zip(state) {
            vals.insert(s.var, v.clone());
        }
        for (i, v) in self.inputs.iter().zip(inputs) {
            vals.insert(i.var, v.clone());
        }
        self.arena.eval(t, &|v| vals.get(&v).cloned().unwrap_or_default())
    }
}

fn cycle(e: SimError) -> FormalError {
    match e {
        SimError::CombinationalCycle(names) => FormalError::CombinationalCycle(names),
        other => FormalError::Unsupported(other.to_string()),
    }
}

/// Encode a circuit: registers become state, combinational logic becomes
/// functions, non-clock inputs become input variables.
pub fn encode_ts(c: &CircuitDecl) -> Result<TransitionSystem, FormalError> {
    let order = levelize(c).map_err(cycle)?;
    let mut arena = TermArena::new();
    let mut next_var = 0u32;
    let mut fresh = || {
        next_var += 1;
        VarId(next_var - 1)
    };
    let unset = TermId(u32::MAX);
    let mut signals = vec![unset; c.signals().len()];
    let mut inputs = Vec::new();
    let mut rstn_inputs: HashMap<SignalId, TermId> = HashMap::new();
    for (i, p) in c.ports().iter().enumerate() {
        if !p.is_input() {
            continue;
        }
        let sig = c.port_signal(i);
        if p.ptype == PortType::Clock {
            signals[sig.0] = arena.bool_const(false);
            continue;
        }
        let var = fresh();
        let t = arena.var(var, p.width());
        signals[sig.0] = t;
        if p.ptype == PortType::AsyncResetN {
            rstn_inputs.insert(sig, t);
        }
        inputs.push(InputVar {
            name: p.name.clone(),
            width: p.width(),
            var,
        });
    }
    // Register outputs: the stored value, overridden while reset is low.
    let mut regs = Vec::new();
    for (i, inst) in c.instances().iter().enumerate() {
        let Primitive::Register {
            width,
            async_reset_n,
            reset_value,
        } = &inst.prim
        else {
            continue;
        };
        let var = fresh();
        let stored = arena.var(var, *width);
        let reset_term = arena.constant(reset_value.clone(), *width);
        let rstn = if *async_reset_n {
            let s = c.pin_signal(i, "rstn").expect("rstn pin");
            Some(rstn_inputs[&s])
        } else {
            None
        };
        let q = match rstn {
            Some(r) => arena.mux(r, stored, reset_term),
            None => stored,
        };
        signals[c.pin_signal(i, "Q").expect("Q pin").0] = q;
        regs.push((i, var, *width, reset_value.clone(), reset_term, rstn));
    }
    for inst in order {
        let prim = &c.instances()[inst].prim;
        let ins: Vec<TermId> = input_signals(c, inst).iter().map(|s| signals[s.0]).collect();
        let out = match prim {
            Primitive::Const { width, value } => arena.constant(value.clone(), *width),
            Primitive::Binary { op, width } => {
                let op = match op {
                    circuit::BinaryOp::Add => BinaryOp::Add,
                    circuit::BinaryOp::Sub => BinaryOp::Sub,
                    circuit::BinaryOp::Mul => {
                        if *width > MAX_MUL_WIDTH {
                            return Err(FormalError::MulTooWide(*width));
                        }
                        BinaryOp::Mul
                    }
                    circuit::BinaryOp::And => BinaryOp::And,
                    circuit::BinaryOp::Or => BinaryOp::Or,
                    circuit::BinaryOp::Xor => BinaryOp::Xor,
                    circuit::BinaryOp::Shl => BinaryOp::Shl,
                    circuit::BinaryOp::Lshr => BinaryOp::Lshr,
                };
                arena.binary(op, ins[0], ins[1])
            }
            Primitive::Compare { op, .. } => {
                let op = match op {
                    circuit::CompareOp::Eq => BinaryOp::Eq,
                    circuit::CompareOp::Ult => BinaryOp::Ult,
                    circuit::CompareOp::Ule => BinaryOp::Ule,
                };
                arena.binary(op, ins[0], ins[1])
            }
            Primitive::Unary { op, .. } => match op {
                circuit::UnaryOp::Not => arena.unary(UnaryOp::BitNot, ins[0]),
                circuit::UnaryOp::Neg => arena.unary(UnaryOp::Neg, ins[0]),
            },
            Primitive::Mux { .. } => arena.mux(ins[0], ins[2], ins[1]),
            Primitive::Concat { .. } => arena.concat(ins[1], ins[0]),
            Primitive::Slice { lo, hi, .. } => arena.slice(ins[0], *lo, *hi),
            Primitive::Register { .. } => unreachable!("levelize skips registers"),
        };
        signals[output_signal(c, inst).0] = out;
    }
    let mut states = Vec::new();
    for (i, var, width, reset_value, reset_term, rstn) in regs {
        let d = signals[c.pin_signal(i, "D").expect("D pin").0];
        let next = match rstn {
            Some(r) => arena.mux(r, d, reset_term),
            None => d,
        };
        states.push(StateVar {
            name: c.instances()[i].name.clone(),
            width,
            var,
            init: reset_value.clone(),
            next,
            reset: rstn,
            reset_value,
        });
    }
    let ports = c
        .ports()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.clone(), signals[c.port_signal(i).0]))
        .collect();
    Ok(TransitionSystem {
        arena,
        states,
        inputs,
        signals,
        ports,
        constraints: Vec::new(),
        properties: Vec::new(),
        symbolic_inputs: BTreeSet::new(),
    })
}

/// Concrete state of a circuit under prefix execution.
struct Concrete<'t> {
    ts: &'t TransitionSystem,
    state: Vec<BigUint>,
    inputs: Vec<BigUint>,
    clock_high: bool,
}

impl Concrete<'_> {
    /// Registers with a low reset input take their reset value at once.
    fn settle(&mut self) {
        for (k, s) in self.ts.states.iter().enumerate() {
            if let Some(r) = s.reset {
                if self.ts.eval(r, &self.state, &self.inputs).is_zero() {
                    self.state[k] = s.reset_value.clone();
                }
            }
        }
    }
}

/// Execute the configuration prefix concretely, make the resulting state
/// the initial state, and turn the constraint suffix into constraints and
/// properties.
pub fn lower_prefix(p: &ActionProgram, c: &CircuitDecl, ts: &TransitionSystem) -> Result<TransitionSystem, FormalError> {
    let diags = validate_program(p, c);
    if !diags.is_empty() {
        return Err(FormalError::Invalid(diags));
    }
    let (prefix, suffix) = p.split_constraints();
    let mut out = ts.clone();
    let mut conc = Concrete {
        ts,
        state: ts.states.iter().map(|s| s.init.clone()).collect(),
        inputs: vec![BigUint::zero(); ts.inputs.len()],
        clock_high: false,
    };
    let mut pending: Vec<(usize, BigUint)> = Vec::new();
    for (i, a) in prefix.iter().enumerate() {
        let path = child_path("", "root", i);
        match a {
            Action::Poke { target, value } => {
                let name = target.as_port().unwrap_or_default();
                let idx = ts
                    .inputs
                    .iter()
                    .position(|inp| inp.name == name)
                    .ok_or_else(|| FormalError::Unsupported(format!("{path}: poke of `{target}`")))?;
                if !value.vars().is_empty() || !value.peeks().is_empty() {
                    return Err(FormalError::NonConstantPoke(path));
                }
                let v = value
                    .eval(&BTreeMap::new())
                    .map_err(|e| FormalError::Unsupported(format!("{path}: {e}")))?;
                pending.push((idx, v));
            }
            Action::Eval => {
                for (idx, v) in pending.drain(..) {
                    conc.inputs[idx] = v;
                }
                conc.settle();
            }
            Action::Step { n } => {
                for _ in 0..*n {
                    for (idx, v) in pending.drain(..) {
                        conc.inputs[idx] = v;
                    }
                    conc.settle();
                    conc.clock_high = !conc.clock_high;
                    if conc.clock_high {
                        let (next, _) = ts.simulate_frame(&conc.state, &conc.inputs);
                        conc.state = next;
                    }
                }
            }
            other => {
                return Err(FormalError::Unsupported(format!(
                    "{path}: `{}` before the constraints",
                    other.kind()
                )))
            }
        }
    }
    for (idx, v) in pending.drain(..) {
        conc.inputs[idx] = v;
    }
    conc.settle();
    for (s, v) in out.states.iter_mut().zip(&conc.state) {
        s.init = v.clone();
    }

    // Inputs mentioned by the constraints stay free; the rest hold their
    // last poked value.
    let mut symbolic = BTreeSet::new();
    for (i, a) in suffix.iter().enumerate() {
        let path = child_path("", "root", prefix.len() + i);
        match a {
            Action::Assume { target, pred } => {
                symbolic.insert(target.as_port().unwrap_or_default().to_string());
                symbolic.extend(pred.vars().into_keys().filter(|v| ts.input(v).is_some()));
            }
            Action::Guarantee { pred } => {
                symbolic.extend(pred.vars().into_keys().filter(|v| ts.input(v).is_some()));
            }
            other => {
                return Err(FormalError::Unsupported(format!(
                    "{path}: `{}` after the constraints",
                    other.kind()
                )))
            }
        }
    }
    for (k, inp) in ts.inputs.iter().enumerate() {
        if symbolic.contains(&inp.name) {
            continue;
        }
        let t = out.arena.var(inp.var, inp.width);
        let held = out.arena.constant(conc.inputs[k].clone(), inp.width);
        let pin = out.arena.eq(t, held);
        out.constraints.push(pin);
    }
    let ports = out.ports.clone();
    let inputs = out.inputs.clone();
    for (i, a) in suffix.iter().enumerate() {
        let path = child_path("", "root", prefix.len() + i);
        let mut bind = |arena: &mut TermArena, name: &str, width: u32| -> Result<TermId, FormalError> {
            if let Some(inp) = inputs.iter().find(|x| x.name == name) {
                return Ok(arena.var(inp.var, inp.width));
            }
            let t = *ports.get(name).ok_or_else(|| FormalError::UnknownVar(name.to_string()))?;
            debug_assert_eq!(arena.width(t), width);
            Ok(t)
        };
        match a {
            Action::Assume { pred, .. } => {
                let t = out.arena.from_expr(pred, &mut bind)?;
                let t = truthy(&mut out.arena, t);
                out.constraints.push(t);
            }
            Action::Guarantee { pred } => {
                let t = out.arena.from_expr(pred, &mut bind)?;
                let t = truthy(&mut out.arena, t);
                out.properties.push(Property { name: path, term: t });
            }
            _ => unreachable!("checked above"),
        }
    }
    out.symbolic_inputs = symbolic;
    Ok(out)
}

fn truthy(arena: &mut TermArena, t: TermId) -> TermId {
    if arena.width(t) == 1 {
        t
    } else {
        arena.unary(UnaryOp::RedOr, t)
    }
}

/// Bits of a value, for building concrete assignments in tests and tools.
pub fn value_bits(v: &BigUint, width: u32) -> Vec<bool> {
    (0..width).map(|i| bits::bit(v, i)).collect()
}
