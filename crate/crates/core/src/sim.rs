// SPDX-License-Identifier: Apache-2.0

//! In-process RTL interpreter.
//!
//! [`SimModel::compile`] levelizes the combinational instances of a circuit;
//! a [`Simulator`] holds the mutable value store for one run. Pokes are
//! pending until the next eval or step. Each step unit inverts the clock and,
//! on a rising edge, latches every register from its `D` input.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::bits;
use crate::circuit::{
    BinaryOp, CircuitDecl, CompareOp, Endpoint, HierRef, PortType, Primitive, RefTarget, SignalId,
    UnaryOp,
};
use crate::expr::{self, Binop, Env, EvalError, Expr};
use crate::ir::{child_path, placeholder_count, validate_program, Action, ActionProgram, Diagnostic};
use crate::report::{Failure, FailureCode, TestReport, TraceEvent};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("combinational cycle through {}", .0.join(", "))]
    CombinationalCycle(Vec<String>),
    #[error("program does not validate against circuit `{circuit}`: {}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid {
        circuit: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("`{0}` is not an input port")]
    NotInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub fail_fast: bool,
    /// Iteration limit for each execution of a `while` loop.
    pub max_loop_iters: u64,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            fail_fast: false,
            max_loop_iters: 1_000_000,
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    inst: usize,
    inputs: Vec<SignalId>,
    output: SignalId,
}

#[derive(Debug, Clone)]
struct Reg {
    d: SignalId,
    q: SignalId,
    rstn: Option<SignalId>,
    reset_value: BigUint,
}

/// Levelized circuit, immutable and shareable between runs.
#[derive(Debug, Clone)]
pub struct SimModel {
    circuit: CircuitDecl,
    nodes: Vec<Node>,
    regs: Vec<Reg>,
}

pub(crate) fn input_signals(c: &CircuitDecl, inst: usize) -> Vec<SignalId> {
    c.instances()[inst]
        .prim
        .pins()
        .into_iter()
        .filter(|p| p.dir == crate::circuit::PinDir::In)
        .map(|p| c.pin_signal(inst, p.name).expect("validated pin"))
        .collect()
}

pub(crate) fn output_signal(c: &CircuitDecl, inst: usize) -> SignalId {
    let prim = &c.instances()[inst].prim;
    let out = prim
        .pins()
        .into_iter()
        .find(|p| p.dir == crate::circuit::PinDir::Out)
        .expect("every primitive has an output");
    c.pin_signal(inst, out.name).expect("validated pin")
}

impl SimModel {
    pub fn compile(c: &CircuitDecl) -> Result<SimModel, SimError> {
        let order = levelize(c)?;
        let nodes = order
            .into_iter()
            .map(|inst| Node {
                inst,
                inputs: input_signals(c, inst),
                output: output_signal(c, inst),
            })
            .collect();
        let regs = c
            .instances()
            .iter()
            .enumerate()
            .filter_map(|(i, inst)| match &inst.prim {
                Primitive::Register {
                    async_reset_n,
                    reset_value,
                    ..
                } => Some(Reg {
                    d: c.pin_signal(i, "D").expect("D"),
                    q: c.pin_signal(i, "Q").expect("Q"),
                    rstn: if *async_reset_n {
                        c.pin_signal(i, "rstn")
                    } else {
                        None
                    },
                    reset_value: reset_value.clone(),
                }),
                _ => None,
            })
            .collect();
        Ok(SimModel {
            circuit: c.clone(),
            nodes,
            regs,
        })
    }

    pub fn circuit(&self) -> &CircuitDecl {
        &self.circuit
    }

    /// Number of combinational nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Instance names in evaluation order.
    pub fn order(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .map(|n| self.circuit.instances()[n.inst].name.as_str())
            .collect()
    }

    /// Validate `p` against this model's circuit and execute it.
    pub fn run(&self, p: &ActionProgram, opts: RunOptions) -> Result<TestReport, SimError> {
        let diagnostics = validate_program(p, &self.circuit);
        if !diagnostics.is_empty() {
            return Err(SimError::Invalid {
                circuit: self.circuit.name().to_string(),
                diagnostics,
            });
        }
        let mut sim = Simulator::new(self);
        let mut report = TestReport::new("interp");
        sim.execute(&p.actions, "root", opts, &mut report);
        Ok(report.finish())
    }
}

/// Topological order of combinational instances (registers break cycles).
pub(crate) fn levelize(c: &CircuitDecl) -> Result<Vec<usize>, SimError> {
    let comb: Vec<usize> = (0..c.instances().len())
        .filter(|&i| !c.instances()[i].prim.is_register())
        .collect();
    let driver_of = |s: SignalId| -> Option<usize> {
        match &c.signals()[s.0].driver {
            Endpoint::Pin { inst, .. } if !c.instances()[*inst].prim.is_register() => Some(*inst),
            _ => None,
        }
    };
    let mut preds: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut succs: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &i in &comb {
        preds.entry(i).or_default();
        succs.entry(i).or_default();
    }
    for &i in &comb {
        for s in input_signals(c, i) {
            if let Some(j) = driver_of(s) {
                preds.get_mut(&i).unwrap().insert(j);
                succs.get_mut(&j).unwrap().insert(i);
            }
        }
    }
    let mut indegree: BTreeMap<usize, usize> = preds.iter().map(|(k, v)| (*k, v.len())).collect();
    let mut ready: BTreeSet<usize> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(k, _)| *k)
        .collect();
    let mut order = Vec::with_capacity(comb.len());
    while let Some(&n) = ready.iter().next() {
        ready.remove(&n);
        order.push(n);
        for &m in &succs[&n] {
            let d = indegree.get_mut(&m).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(m);
            }
        }
    }
    if order.len() == comb.len() {
        return Ok(order);
    }
    // Peel off nodes that merely hang off a cycle.
    let done: BTreeSet<usize> = order.into_iter().collect();
    let mut left: BTreeSet<usize> = comb.into_iter().filter(|i| !done.contains(i)).collect();
    loop {
        let dangling: Vec<usize> = left
            .iter()
            .copied()
            .filter(|n| succs[n].iter().all(|m| !left.contains(m)))
            .collect();
        if dangling.is_empty() {
            break;
        }
        for n in dangling {
            left.remove(&n);
        }
    }
    Err(SimError::CombinationalCycle(
        left.into_iter()
            .map(|i| c.instances()[i].name.clone())
            .collect(),
    ))
}

/// Evaluate one combinational primitive.
pub fn eval_primitive(prim: &Primitive, inputs: &[&BigUint]) -> BigUint {
    match prim {
        Primitive::Const { value, .. } => value.clone(),
        Primitive::Binary { op, width } => {
            let op = match op {
                BinaryOp::Add => Binop::Add,
                BinaryOp::Sub => Binop::Sub,
                BinaryOp::Mul => Binop::Mul,
                BinaryOp::And => Binop::And,
                BinaryOp::Or => Binop::Or,
                BinaryOp::Xor => Binop::Xor,
                BinaryOp::Shl => Binop::Shl,
                BinaryOp::Lshr => Binop::Lshr,
            };
            expr::apply_binop(op, inputs[0], inputs[1], *width)
        }
        Primitive::Compare { op, width } => {
            let op = match op {
                CompareOp::Eq => Binop::Eq,
                CompareOp::Ult => Binop::Ult,
                CompareOp::Ule => Binop::Ule,
            };
            expr::apply_binop(op, inputs[0], inputs[1], *width)
        }
        Primitive::Unary { op, width } => match op {
            UnaryOp::Not => inputs[0] ^ bits::mask(*width),
            UnaryOp::Neg => expr::apply_binop(Binop::Sub, &BigUint::zero(), inputs[0], *width),
        },
        Primitive::Mux { .. } => {
            if inputs[0].is_zero() {
                inputs[1].clone()
            } else {
                inputs[2].clone()
            }
        }
        Primitive::Concat { lo_width, .. } => (inputs[1] << *lo_width as usize) | inputs[0],
        Primitive::Slice { lo, hi, .. } => bits::truncate(&(inputs[0] >> *lo as usize), hi - lo + 1),
        Primitive::Register { .. } => unreachable!("registers are not combinational"),
    }
}

enum Flow {
    Continue,
    Stop,
}

/// Mutable value store for one run of a [`SimModel`].
pub struct Simulator<'m> {
    model: &'m SimModel,
    values: Vec<BigUint>,
    pending: BTreeMap<usize, BigUint>,
    clock: bool,
    clock_signal: Option<SignalId>,
    time: u64,
    loop_vars: Vec<(String, BigUint)>,
    last_trace: Vec<BigUint>,
}

struct ExprEnv<'a, 'm> {
    sim: &'a Simulator<'m>,
    bindings: &'a BTreeMap<String, BigUint>,
}

impl Env for ExprEnv<'_, '_> {
    fn peek(&self, target: &HierRef) -> Result<BigUint, EvalError> {
        self.sim
            .read(target)
            .map_err(|_| EvalError::Peek(target.to_string()))
    }

    fn var(&self, name: &str) -> Result<BigUint, EvalError> {
        if let Some(v) = self.bindings.get(name) {
            return Ok(v.clone());
        }
        self.sim
            .loop_vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| EvalError::UnboundVar(name.to_string()))
    }
}

impl<'m> Simulator<'m> {
    /// Fresh state: inputs and clock low, registers at their reset values,
    /// combinational logic settled.
    pub fn new(model: &'m SimModel) -> Simulator<'m> {
        let c = &model.circuit;
        let values = vec![BigUint::zero(); c.signals().len()];
        let clock_signal = c
            .ports()
            .iter()
            .position(|p| p.ptype == PortType::Clock)
            .map(|i| c.port_signal(i));
        let mut sim = Simulator {
            model,
            values,
            pending: BTreeMap::new(),
            clock: false,
            clock_signal,
            time: 0,
            loop_vars: Vec::new(),
            last_trace: Vec::new(),
        };
        for r in &model.regs {
            sim.values[r.q.0] = r.reset_value.clone();
        }
        sim.propagate();
        sim.last_trace = sim.port_values();
        sim
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    fn port_values(&self) -> Vec<BigUint> {
        let c = &self.model.circuit;
        (0..c.ports().len())
            .map(|i| self.values[c.port_signal(i).0].clone())
            .collect()
    }

    fn propagate(&mut self) {
        let c = &self.model.circuit;
        for node in &self.model.nodes {
            let ins: Vec<&BigUint> = node.inputs.iter().map(|s| &self.values[s.0]).collect();
            let out = eval_primitive(&c.instances()[node.inst].prim, &ins);
            self.values[node.output.0] = out;
        }
    }

    fn apply_pending(&mut self) {
        let c = &self.model.circuit;
        for (port, v) in std::mem::take(&mut self.pending) {
            self.values[c.port_signal(port).0] = v;
        }
    }

    fn apply_async_reset(&mut self) {
        for r in &self.model.regs {
            if let Some(rstn) = r.rstn {
                if self.values[rstn.0].is_zero() {
                    self.values[r.q.0] = r.reset_value.clone();
                }
            }
        }
    }

    /// Schedule an input value; it takes effect at the next eval or step.
    pub fn poke(&mut self, port: &str, value: BigUint) -> Result<(), SimError> {
        let (idx, p) = self
            .model
            .circuit
            .port(port)
            .filter(|(_, p)| p.is_input() && p.ptype != PortType::Clock)
            .ok_or_else(|| SimError::NotInput(port.to_string()))?;
        self.pending.insert(idx, bits::truncate(&value, p.width()));
        Ok(())
    }

    pub fn eval(&mut self) {
        self.apply_pending();
        self.apply_async_reset();
        self.propagate();
    }

    /// Invert the clock once. Pending pokes settle before the edge.
    pub fn step_once(&mut self) {
        self.eval();
        self.clock = !self.clock;
        if let Some(clk) = self.clock_signal {
            self.values[clk.0] = bits::from_bool(self.clock);
        }
        if self.clock {
            let next: Vec<BigUint> = self
                .model
                .regs
                .iter()
                .map(|r| self.values[r.d.0].clone())
                .collect();
            for (r, v) in self.model.regs.iter().zip(next) {
                self.values[r.q.0] = v;
            }
            self.apply_async_reset();
        }
        self.propagate();
        self.time += 1;
    }

    pub fn step(&mut self, n: u64) {
        for _ in 0..n {
            self.step_once();
        }
    }

    /// Current (propagated) value of a signal.
    pub fn read(&self, target: &HierRef) -> Result<BigUint, SimError> {
        let r = self
            .model
            .circuit
            .resolve(target)
            .map_err(|e| SimError::Eval(EvalError::Peek(e.to_string())))?;
        Ok(self.values[r.signal.0].clone())
    }

    pub fn read_port(&self, index: usize) -> &BigUint {
        &self.values[self.model.circuit.port_signal(index).0]
    }

    /// Every interface port's current value, keyed by port name.
    pub fn port_bindings(&self) -> BTreeMap<String, BigUint> {
        let c = &self.model.circuit;
        c.ports()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), self.read_port(i).clone()))
            .collect()
    }

    pub fn eval_expr(&self, e: &Expr, bindings: &BTreeMap<String, BigUint>) -> Result<BigUint, EvalError> {
        e.eval(&ExprEnv {
            sim: self,
            bindings,
        })
    }

    fn record_trace(&mut self, report: &mut TestReport) {
        let now = self.port_values();
        let c = &self.model.circuit;
        for (i, (old, new)) in self.last_trace.iter().zip(&now).enumerate() {
            if old != new {
                report.trace.push(TraceEvent {
                    time: self.time,
                    signal: c.ports()[i].name.clone(),
                    value: new.to_string(),
                });
            }
        }
        self.last_trace = now;
    }

    /// Execute a block of actions, appending outcomes to `report`. Stops
    /// early on fail-fast failures and runaway loops.
    pub fn execute(&mut self, actions: &[Action], field: &str, opts: RunOptions, report: &mut TestReport) {
        let _ = self.block(actions, "", field, opts, report);
    }

    fn block(
        &mut self,
        actions: &[Action],
        parent: &str,
        field: &str,
        opts: RunOptions,
        report: &mut TestReport,
    ) -> Flow {
        for (i, a) in actions.iter().enumerate() {
            let path = child_path(parent, field, i);
            if let Flow::Stop = self.action(a, &path, opts, report) {
                return Flow::Stop;
            }
        }
        Flow::Continue
    }

    fn eval_or_error(&self, e: &Expr, path: &str, report: &mut TestReport) -> Option<BigUint> {
        match self.eval_expr(e, &BTreeMap::new()) {
            Ok(v) => Some(v),
            Err(err) => {
                report.errors.push(format!("{path}: {err}"));
                None
            }
        }
    }

    fn condition(&self, cond: &Expr, path: &str, report: &mut TestReport) -> Option<bool> {
        self.eval_or_error(cond, path, report).map(|v| !v.is_zero())
    }

    fn action(&mut self, a: &Action, path: &str, opts: RunOptions, report: &mut TestReport) -> Flow {
        report.actions_executed += 1;
        match a {
            Action::Poke { target, value } => {
                let Some(v) = self.eval_or_error(value, path, report) else {
                    return Flow::Stop;
                };
                let port = target.as_port().unwrap_or_default().to_string();
                if let Err(e) = self.poke(&port, v) {
                    report.errors.push(format!("{path}: {e}"));
                    return Flow::Stop;
                }
            }
            Action::Eval => {
                self.eval();
                if opts.trace {
                    self.record_trace(report);
                }
            }
            Action::Step { n } => {
                for _ in 0..*n {
                    self.step_once();
                    if opts.trace {
                        self.record_trace(report);
                    }
                }
            }
            Action::Expect { target, value } => {
                let Some(expected) = self.eval_or_error(value, path, report) else {
                    return Flow::Stop;
                };
                let observed = match self.read(target) {
                    Ok(v) => v,
                    Err(e) => {
                        report.errors.push(format!("{path}: {e}"));
                        return Flow::Stop;
                    }
                };
                if observed != expected {
                    report.failures.push(Failure {
                        path: path.to_string(),
                        code: FailureCode::ExpectMismatch,
                        signal: Some(target.to_string()),
                        observed: Some(observed.to_string()),
                        expected: Some(expected.to_string()),
                        time: self.time,
                        message: format!("expected {target} == {expected}, observed {observed}"),
                    });
                    if opts.fail_fast {
                        return Flow::Stop;
                    }
                }
            }
            Action::Print { format, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for e in args {
                    let Some(v) = self.eval_or_error(e, path, report) else {
                        return Flow::Stop;
                    };
                    vals.push((v, e.width().unwrap_or(1)));
                }
                report.prints.push_str(&format_print(format, &vals));
            }
            Action::While { cond, body } => {
                let mut iterations = 0u64;
                loop {
                    let Some(holds) = self.condition(cond, path, report) else {
                        return Flow::Stop;
                    };
                    if !holds {
                        break;
                    }
                    if iterations == opts.max_loop_iters {
                        report.errors.push(format!(
                            "{path}: runaway loop, condition still true after {iterations} iterations"
                        ));
                        return Flow::Stop;
                    }
                    iterations += 1;
                    if let Flow::Stop = self.block(body, path, "body", opts, report) {
                        return Flow::Stop;
                    }
                }
            }
            Action::If {
                cond,
                then_body,
                else_body,
            } => {
                let Some(holds) = self.condition(cond, path, report) else {
                    return Flow::Stop;
                };
                let (field, body) = if holds {
                    ("then", then_body)
                } else {
                    ("else", else_body)
                };
                return self.block(body, path, field, opts, report);
            }
            Action::For { count, var, body } => {
                for i in 0..*count {
                    self.loop_vars.push((var.clone(), BigUint::from(i)));
                    let flow = self.block(body, path, "body", opts, report);
                    self.loop_vars.pop();
                    if let Flow::Stop = flow {
                        return Flow::Stop;
                    }
                }
            }
            Action::Assume { .. } | Action::Guarantee { .. } => {
                report.errors.push(format!(
                    "{path}: {} needs the random or formal target",
                    a.kind()
                ));
                return Flow::Stop;
            }
        }
        Flow::Continue
    }
}

/// Render a print format. `%x` and `%b` are zero-padded to the argument width.
pub fn format_print(format: &str, args: &[(BigUint, u32)]) -> String {
    debug_assert_eq!(placeholder_count(format).ok(), Some(args.len()));
    let mut out = String::new();
    let mut next = args.iter();
    let mut chars = format.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('%') => out.push('%'),
            Some(conv) => {
                let (v, w) = next.next().expect("arity checked");
                match conv {
                    'd' => out.push_str(&v.to_string()),
                    'x' => {
                        let digits = w.div_ceil(4) as usize;
                        out.push_str(&format!("{:0>digits$}", v.to_str_radix(16)));
                    }
                    _ => {
                        let digits = *w as usize;
                        out.push_str(&format!("{:0>digits$}", v.to_str_radix(2)));
                    }
                }
            }
            None => {}
        }
    }
    out
}

/// Resolve a reference to the interface port index it names, if any.
pub fn port_index(c: &CircuitDecl, target: &HierRef) -> Option<usize> {
    match c.resolve(target).ok()?.target {
        RefTarget::Port(i) => Some(i),
        _ => None,
    }
}

/// Convert a small value for display or indexing.
pub fn to_u64(v: &BigUint) -> Option<u64> {
    v.to_u64()
}
