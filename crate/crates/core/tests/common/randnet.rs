// SPDX-License-Identifier: Apache-2.0

//! Random combinational netlists plus a direct evaluator of the same DAG that
//! shares no code with the simulator.

use std::collections::BTreeMap;

use faultline::random::Rng;
use serde_json::json;

#[derive(Debug, Clone)]
pub enum Node {
    Input(usize),
    Const(u64),
    Bin(&'static str, usize, usize),
    Cmp(&'static str, usize, usize),
    Un(&'static str, usize),
    Mux(usize, usize, usize),
    Concat(usize, usize),
    Slice(usize, u32, u32),
}

#[derive(Debug, Clone)]
pub struct RandNet {
    pub json: String,
    /// (name, width) of each input port, in order.
    pub inputs: Vec<(String, u32)>,
    /// (name, node index) of each output port.
    pub outputs: Vec<(String, usize)>,
    pub nodes: Vec<(Node, u32)>,
}

fn mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

impl RandNet {
    pub fn total_input_width(&self) -> u32 {
        self.inputs.iter().map(|(_, w)| w).sum()
    }

    /// Evaluate every node for one input assignment.
    pub fn eval(&self, inputs: &[u64]) -> Vec<u64> {
        let mut v: Vec<u64> = Vec::with_capacity(self.nodes.len());
        for (node, w) in &self.nodes {
            let m = mask(*w);
            let x = match *node {
                Node::Input(i) => inputs[i] & m,
                Node::Const(c) => c,
                Node::Bin(op, a, b) => {
                    let (a, b) = (v[a], v[b]);
                    match op {
                        "add" => a.wrapping_add(b) & m,
                        "sub" => a.wrapping_sub(b) & m,
                        "mul" => a.wrapping_mul(b) & m,
                        "and" => a & b,
                        "or" => a | b,
                        "xor" => a ^ b,
                        "shl" => {
                            if b >= u64::from(*w) {
                                0
                            } else {
                                (a << b) & m
                            }
                        }
                        _ => {
                            if b >= u64::from(*w) {
                                0
                            } else {
                                a >> b
                            }
                        }
                    }
                }
                Node::Cmp(op, a, b) => {
                    let (a, b) = (v[a], v[b]);
                    u64::from(match op {
                        "eq" => a == b,
                        "ult" => a < b,
                        _ => a <= b,
                    })
                }
                Node::Un(op, a) => match op {
                    "not" => !v[a] & m,
                    _ => v[a].wrapping_neg() & m,
                },
                Node::Mux(s, a, b) => {
                    if v[s] == 1 {
                        v[b]
                    } else {
                        v[a]
                    }
                }
                Node::Concat(lo, hi) => (v[hi] << self.nodes[lo].1) | v[lo],
                Node::Slice(a, lo, hi) => (v[a] >> lo) & mask(hi - lo + 1),
            };
            v.push(x);
        }
        v
    }
}

const BINS: &[&str] = &["add", "sub", "mul", "and", "or", "xor", "shl", "lshr"];
const CMPS: &[&str] = &["eq", "ult", "ule"];

/// A random netlist whose inputs total at most `max_input_width` bits.
pub fn random_netlist(rng: &mut Rng, index: usize, max_input_width: u32) -> RandNet {
    let mut nodes: Vec<(Node, u32)> = Vec::new();
    // Endpoint name of each node's output.
    let mut drivers: Vec<String> = Vec::new();
    let mut sinks: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut instances = Vec::new();
    let mut ports = Vec::new();
    let mut inputs = Vec::new();

    let n_inputs = 1 + rng.below(3) as usize;
    let mut budget = max_input_width;
    for i in 0..n_inputs {
        let left = (n_inputs - i - 1) as u32;
        let w = 1 + rng.below(u64::from((budget - left).min(6))) as u32;
        budget -= w;
        let name = format!("i{i}");
        ports.push(json!({"name": name, "dir": "input", "type": {"bv": w}}));
        inputs.push((name.clone(), w));
        nodes.push((Node::Input(i), w));
        drivers.push(name);
    }

    let mut next_inst = 0usize;
    let mut add_inst = |nodes: &mut Vec<(Node, u32)>,
                        drivers: &mut Vec<String>,
                        sinks: &mut BTreeMap<usize, Vec<String>>,
                        kind: &str,
                        params: serde_json::Value,
                        pins: &[(&str, usize)],
                        node: Node,
                        w: u32|
     -> usize {
        let name = format!("g{next_inst}");
        next_inst += 1;
        for (pin, src) in pins {
            sinks.entry(*src).or_default().push(format!("{name}.{pin}"));
        }
        instances.push(json!({"name": name, "kind": kind, "params": params}));
        nodes.push((node, w));
        drivers.push(format!("{name}.out"));
        nodes.len() - 1
    };

    let gates = 3 + rng.below(8) as usize;
    for _ in 0..gates {
        let a = rng.below(nodes.len() as u64) as usize;
        let wa = nodes[a].1;
        // Partner of width `w`: an existing node or a fresh constant.
        let mut partner = |rng: &mut Rng,
                           nodes: &mut Vec<(Node, u32)>,
                           drivers: &mut Vec<String>,
                           sinks: &mut BTreeMap<usize, Vec<String>>,
                           w: u32|
         -> usize {
            let same: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].1 == w).collect();
            if !same.is_empty() && rng.below(4) != 0 {
                same[rng.below(same.len() as u64) as usize]
            } else {
                let value = rng.next_u64() & mask(w);
                add_inst(
                    nodes,
                    drivers,
                    sinks,
                    "const",
                    json!({"width": w, "value": value}),
                    &[],
                    Node::Const(value),
                    w,
                )
            }
        };
        match rng.below(6) {
            0 | 1 => {
                let op = BINS[rng.below(BINS.len() as u64) as usize];
                let b = partner(rng, &mut nodes, &mut drivers, &mut sinks, wa);
                add_inst(
                    &mut nodes,
                    &mut drivers,
                    &mut sinks,
                    op,
                    json!({"width": wa}),
                    &[("in0", a), ("in1", b)],
                    Node::Bin(op, a, b),
                    wa,
                );
            }
            2 => {
                let op = CMPS[rng.below(CMPS.len() as u64) as usize];
                let b = partner(rng, &mut nodes, &mut drivers, &mut sinks, wa);
                add_inst(
                    &mut nodes,
                    &mut drivers,
                    &mut sinks,
                    op,
                    json!({"width": wa}),
                    &[("in0", a), ("in1", b)],
                    Node::Cmp(op, a, b),
                    1,
                );
            }
            3 => {
                let op = if rng.next_bool() { "not" } else { "neg" };
                add_inst(
                    &mut nodes,
                    &mut drivers,
                    &mut sinks,
                    op,
                    json!({"width": wa}),
                    &[("in", a)],
                    Node::Un(op, a),
                    wa,
                );
            }
            4 => {
                let s = partner(rng, &mut nodes, &mut drivers, &mut sinks, 1);
                let b = partner(rng, &mut nodes, &mut drivers, &mut sinks, wa);
                add_inst(
                    &mut nodes,
                    &mut drivers,
                    &mut sinks,
                    "mux",
                    json!({"width": wa}),
                    &[("sel", s), ("in0", a), ("in1", b)],
                    Node::Mux(s, a, b),
                    wa,
                );
            }
            _ => {
                if rng.next_bool() && wa < 32 {
                    let hi = rng.below(nodes.len() as u64) as usize;
                    let wh = nodes[hi].1;
                    add_inst(
                        &mut nodes,
                        &mut drivers,
                        &mut sinks,
                        "concat",
                        json!({"lo_width": wa, "hi_width": wh}),
                        &[("in0", a), ("in1", hi)],
                        Node::Concat(a, hi),
                        wa + wh,
                    );
                } else {
                    let lo = rng.below(u64::from(wa)) as u32;
                    let hi = lo + rng.below(u64::from(wa - lo)) as u32;
                    add_inst(
                        &mut nodes,
                        &mut drivers,
                        &mut sinks,
                        "slice",
                        json!({"width": wa, "lo": lo, "hi": hi}),
                        &[("in", a)],
                        Node::Slice(a, lo, hi),
                        hi - lo + 1,
                    );
                }
            }
        }
    }

    // Expose the last one to three nodes, plus one random earlier node.
    let mut outputs = Vec::new();
    let n = nodes.len();
    let mut picks: Vec<usize> = (n.saturating_sub(1 + rng.below(3) as usize)..n).collect();
    picks.push(rng.below(n as u64) as usize);
    for (k, node) in picks.into_iter().enumerate() {
        let name = format!("o{k}");
        ports.push(json!({"name": name, "dir": "output", "type": {"bv": nodes[node].1}}));
        sinks.entry(node).or_default().push(name.clone());
        outputs.push((name, node));
    }
    let nets: Vec<serde_json::Value> = sinks
        .into_iter()
        .map(|(src, to)| json!({"from": drivers[src], "to": to}))
        .collect();
    let doc = json!({
        "name": format!("Rand{index}"),
        "ports": ports,
        "instances": instances,
        "nets": nets,
    });
    RandNet {
        json: serde_json::to_string_pretty(&doc).unwrap(),
        inputs,
        outputs,
        nodes,
    }
}
