// SPDX-License-Identifier: Apache-2.0

//! Explicit-state model checking by brute force over input sequences, using
//! the interpreter as the transition relation.

use std::collections::BTreeSet;

use faultline::circuit::{CircuitDecl, PortType};
use faultline::ir::{Action, ActionProgram};
use faultline::sim::Simulator;
use faultline::{RunOptions, SimModel, TestReport};
use num_bigint::BigUint;
use num_traits::Zero;

/// Inputs the constraints mention, in port order, with their widths.
pub fn symbolic_inputs(c: &CircuitDecl, p: &ActionProgram) -> Vec<(String, u32)> {
    let (_, suffix) = p.split_constraints();
    let mut names = BTreeSet::new();
    for a in suffix {
        match a {
            Action::Assume { target, pred } => {
                names.insert(target.to_string());
                names.extend(pred.vars().into_keys());
            }
            Action::Guarantee { pred } => names.extend(pred.vars().into_keys()),
            _ => {}
        }
    }
    c.ports()
        .iter()
        .filter(|p| p.is_input() && p.ptype != PortType::Clock && names.contains(&p.name))
        .map(|p| (p.name.clone(), p.width()))
        .collect()
}

/// Register bits plus symbolic input bits over `bound + 1` frames.
pub fn relevant_bits(c: &CircuitDecl, p: &ActionProgram, bound: u32) -> u32 {
    let state: u32 = c
        .instances()
        .iter()
        .filter(|i| i.prim.is_register())
        .map(|i| i.prim.output_width())
        .sum();
    let inputs: u32 = symbolic_inputs(c, p).iter().map(|(_, w)| w).sum();
    state + inputs * (bound + 1)
}

/// Input valuations for one frame that satisfy every assumption.
fn frame_choices(c: &CircuitDecl, p: &ActionProgram, model: &SimModel) -> Vec<Vec<u64>> {
    let syms = symbolic_inputs(c, p);
    let total: u32 = syms.iter().map(|(_, w)| w).sum();
    let (_, suffix) = p.split_constraints();
    let sim = Simulator::new(model);
    let mut out = Vec::new();
    for combo in 0u64..(1 << total) {
        let mut values = Vec::new();
        let mut bindings = sim.port_bindings();
        let mut shift = 0;
        for (name, w) in &syms {
            let v = (combo >> shift) & ((1 << w) - 1);
            shift += w;
            values.push(v);
            bindings.insert(name.clone(), BigUint::from(v));
        }
        let ok = suffix.iter().all(|a| match a {
            Action::Assume { pred, .. } => !sim.eval_expr(pred, &bindings).unwrap().is_zero(),
            _ => true,
        });
        if ok {
            out.push(values);
        }
    }
    out
}

/// Does the input sequence violate a guarantee in its last frame?
fn violates(c: &CircuitDecl, p: &ActionProgram, model: &SimModel, seq: &[&Vec<u64>]) -> bool {
    let syms = symbolic_inputs(c, p);
    let (prefix, suffix) = p.split_constraints();
    let mut sim = Simulator::new(model);
    let mut report = TestReport::new("oracle");
    sim.execute(prefix, "root", RunOptions::default(), &mut report);
    for (f, frame) in seq.iter().enumerate() {
        for ((name, _), v) in syms.iter().zip(frame.iter()) {
            sim.poke(name, BigUint::from(*v)).unwrap();
        }
        sim.eval();
        if f + 1 == seq.len() {
            let b = sim.port_bindings();
            return suffix.iter().any(|a| match a {
                Action::Guarantee { pred } => sim.eval_expr(pred, &b).unwrap().is_zero(),
                _ => false,
            });
        }
        sim.step(2);
    }
    unreachable!("empty sequence")
}

/// Shallowest depth `<= bound` at which some admissible input sequence
/// violates a guarantee.
pub fn shallowest_violation(c: &CircuitDecl, p: &ActionProgram, bound: u32) -> Option<u32> {
    let model = SimModel::compile(c).unwrap();
    let choices = frame_choices(c, p, &model);
    let mut seqs: Vec<Vec<&Vec<u64>>> = vec![Vec::new()];
    for depth in 0..=bound {
        let mut next = Vec::with_capacity(seqs.len() * choices.len());
        for s in &seqs {
            for ch in &choices {
                let mut t = s.clone();
                t.push(ch);
                next.push(t);
            }
        }
        if next.iter().any(|s| violates(c, p, &model, s)) {
            return Some(depth);
        }
        seqs = next;
    }
    None
}
