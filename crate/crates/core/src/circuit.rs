// SPDX-License-Identifier: Apache-2.0

//! Introspectable structural netlists.
//!
//! A [`CircuitDecl`] is a flat list of interface ports, primitive instances and
//! nets. It is parsed from JSON, validated once, and is immutable afterwards.
//! Every readable point in the circuit (an input port or an instance output
//! pin) drives exactly one *signal*; [`CircuitDecl::resolve`] maps hierarchical
//! references onto those signals so that backends can share one value model.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("malformed netlist JSON: {0}")]
    Json(String),
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid identifier `{name}` at `{path}`")]
    InvalidIdentifier { path: String, name: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("instance `{instance}`: unknown primitive kind `{kind}`")]
    UnknownPrimitive { instance: String, kind: String },
    #[error("instance `{instance}`: {message}")]
    InvalidParam { instance: String, message: String },
    #[error("net endpoint `{0}` does not exist")]
    UnknownEndpoint(String),
    #[error("`{0}` cannot drive a net")]
    NotADriver(String),
    #[error("`{0}` cannot be driven by a net")]
    NotASink(String),
    #[error("width mismatch: `{from}` is {from_width} bits but sink `{to}` is {to_width} bits")]
    WidthMismatch {
        from: String,
        to: String,
        from_width: u32,
        to_width: u32,
    },
    #[error("sink `{0}` has multiple drivers")]
    MultipleDrivers(String),
    #[error("sink `{0}` is not driven")]
    Undriven(String),
    #[error("{0}")]
    ClockDomain(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolveError {
    #[error("unknown port `{0}`")]
    UnknownPort(String),
    #[error("cannot resolve `{path}`: no `{segment}` at segment {index}")]
    Unresolvable {
        path: String,
        segment: String,
        index: usize,
    },
}

/// Kind of an interface port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortType {
    Bit,
    BitVector(u32),
    Clock,
    /// Active-low asynchronous reset.
    AsyncResetN,
}

/// Port kind without width, used for introspection queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortKind {
    Bit,
    BitVector,
    Clock,
    AsyncResetN,
}

impl PortType {
    pub fn width(self) -> u32 {
        match self {
            PortType::BitVector(w) => w,
            _ => 1,
        }
    }

    pub fn kind(self) -> PortKind {
        match self {
            PortType::Bit => PortKind::Bit,
            PortType::BitVector(_) => PortKind::BitVector,
            PortType::Clock => PortKind::Clock,
            PortType::AsyncResetN => PortKind::AsyncResetN,
        }
    }

    pub fn kind_name(self) -> &'static str {
        match self {
            PortType::Bit => "bit",
            PortType::BitVector(_) => "bv",
            PortType::Clock => "clock",
            PortType::AsyncResetN => "async_reset_n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub dir: Direction,
    pub ptype: PortType,
}

impl Port {
    pub fn width(&self) -> u32 {
        self.ptype.width()
    }

    pub fn is_input(&self) -> bool {
        self.dir == Direction::Input
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Lshr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ult,
    Ule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

/// Primitive cell kinds. Arithmetic is unsigned modulo `2^width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Primitive {
    Const { width: u32, value: BigUint },
    Binary { op: BinaryOp, width: u32 },
    Compare { op: CompareOp, width: u32 },
    Unary { op: UnaryOp, width: u32 },
    /// `out = sel ? in1 : in0`
    Mux { width: u32 },
    Register {
        width: u32,
        async_reset_n: bool,
        reset_value: BigUint,
    },
    /// `out = {in1, in0}`; `in0` holds the low bits.
    Concat { lo_width: u32, hi_width: u32 },
    /// `out = in[hi:lo]`
    Slice { width: u32, lo: u32, hi: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinDir {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PinSpec {
    pub name: &'static str,
    pub dir: PinDir,
    pub width: u32,
}

const fn pin(name: &'static str, dir: PinDir, width: u32) -> PinSpec {
    PinSpec { name, dir, width }
}

impl Primitive {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Primitive::Const { .. } => "const",
            Primitive::Binary { op, .. } => match op {
                BinaryOp::Add => "add",
                BinaryOp::Sub => "sub",
                BinaryOp::Mul => "mul",
                BinaryOp::And => "and",
                BinaryOp::Or => "or",
                BinaryOp::Xor => "xor",
                BinaryOp::Shl => "shl",
                BinaryOp::Lshr => "lshr",
            },
            Primitive::Compare { op, .. } => match op {
                CompareOp::Eq => "eq",
                CompareOp::Ult => "ult",
                CompareOp::Ule => "ule",
            },
            Primitive::Unary { op, .. } => match op {
                UnaryOp::Not => "not",
                UnaryOp::Neg => "neg",
            },
            Primitive::Mux { .. } => "mux",
            Primitive::Register { .. } => "register",
            Primitive::Concat { .. } => "concat",
            Primitive::Slice { .. } => "slice",
        }
    }

    pub fn pins(&self) -> Vec<PinSpec> {
        use PinDir::*;
        match *self {
            Primitive::Const { width, .. } => vec![pin("out", Out, width)],
            Primitive::Binary { width, .. } => {
                vec![pin("in0", In, width), pin("in1", In, width), pin("out", Out, width)]
            }
            Primitive::Compare { width, .. } => {
                vec![pin("in0", In, width), pin("in1", In, width), pin("out", Out, 1)]
            }
            Primitive::Unary { width, .. } => vec![pin("in", In, width), pin("out", Out, width)],
            Primitive::Mux { width } => vec![
                pin("sel", In, 1),
                pin("in0", In, width),
                pin("in1", In, width),
                pin("out", Out, width),
            ],
            Primitive::Register {
                width,
                async_reset_n,
                ..
            } => {
                let mut pins = vec![pin("D", In, width), pin("clk", In, 1)];
                if async_reset_n {
                    pins.push(pin("rstn", In, 1));
                }
                pins.push(pin("Q", Out, width));
                pins
            }
            Primitive::Concat { lo_width, hi_width } => vec![
                pin("in0", In, lo_width),
                pin("in1", In, hi_width),
                pin("out", Out, lo_width + hi_width),
            ],
            Primitive::Slice { width, lo, hi } => {
                vec![pin("in", In, width), pin("out", Out, hi - lo + 1)]
            }
        }
    }

    pub fn pin(&self, name: &str) -> Option<PinSpec> {
        self.pins().into_iter().find(|p| p.name == name)
    }

    pub fn is_register(&self) -> bool {
        matches!(self, Primitive::Register { .. })
    }

    pub fn output_width(&self) -> u32 {
        self.pins()
            .into_iter()
            .find(|p| p.dir == PinDir::Out)
            .map(|p| p.width)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub prim: Primitive,
}

/// A port or an instance pin.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    Port(usize),
    Pin { inst: usize, pin: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub from: Endpoint,
    pub to: Vec<Endpoint>,
}

/// Index into [`CircuitDecl::signals`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalId(pub usize);

/// A value-carrying point: one per input port and per instance output pin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signal {
    pub driver: Endpoint,
    pub width: u32,
    pub name: String,
}

/// Hierarchical reference such as `out` or `ff.Q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HierRef(Vec<String>);

impl HierRef {
    pub fn new<S: Into<String>>(segments: impl IntoIterator<Item = S>) -> HierRef {
        let path: Vec<String> = segments.into_iter().map(Into::into).collect();
        assert!(!path.is_empty(), "hierarchical reference must be nonempty");
        HierRef(path)
    }

    pub fn port(name: impl Into<String>) -> HierRef {
        HierRef(vec![name.into()])
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    /// The port name for depth-1 references.
    pub fn as_port(&self) -> Option<&str> {
        match self.0.as_slice() {
            [name] => Some(name),
            _ => None,
        }
    }

    pub fn leaf(&self) -> &str {
        self.0.last().expect("nonempty")
    }
}

impl fmt::Display for HierRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

impl FromStr for HierRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let segs: Vec<String> = s.split('.').map(str::to_string).collect();
        if segs.iter().any(|seg| !is_identifier(seg)) {
            return Err(format!("invalid hierarchical path `{s}`"));
        }
        Ok(HierRef(segs))
    }
}

impl From<&str> for HierRef {
    /// Panics on malformed paths; use `str::parse` for fallible conversion.
    fn from(s: &str) -> HierRef {
        s.parse().unwrap_or_else(|e: String| panic!("{e}"))
    }
}

impl From<&HierRef> for HierRef {
    fn from(r: &HierRef) -> HierRef {
        r.clone()
    }
}

impl Serialize for HierRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HierRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What a resolved reference points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefTarget {
    Port(usize),
    Pin { inst: usize, pin: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolved {
    pub width: u32,
    pub signal: SignalId,
    pub target: RefTarget,
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Validated structural netlist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitDecl {
    name: String,
    ports: Vec<Port>,
    instances: Vec<Instance>,
    nets: Vec<Net>,
    signals: Vec<Signal>,
    port_signal: Vec<SignalId>,
    pin_signal: HashMap<(usize, &'static str), SignalId>,
}

impl CircuitDecl {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn port(&self, name: &str) -> Option<(usize, &Port)> {
        self.ports.iter().enumerate().find(|(_, p)| p.name == name)
    }

    pub fn instance(&self, name: &str) -> Option<(usize, &Instance)> {
        self.instances.iter().enumerate().find(|(_, i)| i.name == name)
    }

    pub fn port_width(&self, name: &str) -> Result<u32, ResolveError> {
        self.port(name)
            .map(|(_, p)| p.width())
            .ok_or_else(|| ResolveError::UnknownPort(name.to_string()))
    }

    /// Interface ports of the given kind, in declaration order.
    pub fn find_ports_by_type(&self, kind: PortKind) -> Vec<&Port> {
        self.ports.iter().filter(|p| p.ptype.kind() == kind).collect()
    }

    /// Signal observed at an interface port. For outputs this is the signal
    /// driving the port.
    pub fn port_signal(&self, index: usize) -> SignalId {
        self.port_signal[index]
    }

    /// Signal observed at an instance pin (its own signal for outputs, the
    /// driving signal for inputs).
    pub fn pin_signal(&self, inst: usize, pin: &str) -> Option<SignalId> {
        let spec = self.instances.get(inst)?.prim.pin(pin)?;
        self.pin_signal.get(&(inst, spec.name)).copied()
    }

    pub fn endpoint_name(&self, ep: &Endpoint) -> String {
        match ep {
            Endpoint::Port(i) => self.ports[*i].name.clone(),
            Endpoint::Pin { inst, pin } => format!("{}.{}", self.instances[*inst].name, pin),
        }
    }

    pub fn resolve(&self, r: &HierRef) -> Result<Resolved, ResolveError> {
        let segs = r.segments();
        let unresolvable = |index: usize| ResolveError::Unresolvable {
            path: r.to_string(),
            segment: segs[index].clone(),
            index,
        };
        match segs {
            [port] => {
                let (idx, p) = self.port(port).ok_or_else(|| unresolvable(0))?;
                Ok(Resolved {
                    width: p.width(),
                    signal: self.port_signal[idx],
                    target: RefTarget::Port(idx),
                })
            }
            [inst, pin_name] => {
                let (idx, instance) = self.instance(inst).ok_or_else(|| unresolvable(0))?;
                let spec = instance.prim.pin(pin_name).ok_or_else(|| unresolvable(1))?;
                let signal = self.pin_signal[&(idx, spec.name)];
                Ok(Resolved {
                    width: spec.width,
                    signal,
                    target: RefTarget::Pin {
                        inst: idx,
                        pin: spec.name,
                    },
                })
            }
            _ => {
                // Depth > 2: one level of primitive instances only.
                if self.instance(&segs[0]).is_none() {
                    Err(unresolvable(0))
                } else if self
                    .instance(&segs[0])
                    .and_then(|(_, i)| i.prim.pin(&segs[1]))
                    .is_none()
                {
                    Err(unresolvable(1))
                } else {
                    Err(unresolvable(2))
                }
            }
        }
    }

    pub fn clock_port(&self) -> Option<&Port> {
        self.ports.iter().find(|p| p.ptype == PortType::Clock)
    }

    pub fn has_registers(&self) -> bool {
        self.instances.iter().any(|i| i.prim.is_register())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("netlist serializes")
    }

    fn to_doc(&self) -> NetlistDoc {
        NetlistDoc {
            name: self.name.clone(),
            ports: self
                .ports
                .iter()
                .map(|p| PortDoc {
                    name: p.name.clone(),
                    dir: p.dir,
                    ty: match p.ptype {
                        PortType::Bit => TypeDoc::Named(NamedType::Bit),
                        PortType::Clock => TypeDoc::Named(NamedType::Clock),
                        PortType::AsyncResetN => TypeDoc::Named(NamedType::AsyncResetN),
                        PortType::BitVector(w) => TypeDoc::Bv { bv: w },
                    },
                })
                .collect(),
            instances: self
                .instances
                .iter()
                .map(|i| InstanceDoc {
                    name: i.name.clone(),
                    kind: i.prim.kind_name().to_string(),
                    params: params_doc(&i.prim),
                })
                .collect(),
            nets: self
                .nets
                .iter()
                .map(|n| NetDoc {
                    from: self.endpoint_name(&n.from),
                    to: n.to.iter().map(|e| self.endpoint_name(e)).collect(),
                })
                .collect(),
        }
    }
}

fn big_to_json(v: &BigUint) -> serde_json::Value {
    match v.to_u64() {
        Some(n) => serde_json::Value::from(n),
        None => serde_json::Value::from(v.to_string()),
    }
}

fn params_doc(prim: &Primitive) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    match prim {
        Primitive::Const { width, value } => {
            m.insert("width".into(), (*width).into());
            m.insert("value".into(), big_to_json(value));
        }
        Primitive::Binary { width, .. }
        | Primitive::Compare { width, .. }
        | Primitive::Unary { width, .. }
        | Primitive::Mux { width } => {
            m.insert("width".into(), (*width).into());
        }
        Primitive::Register {
            width,
            async_reset_n,
            reset_value,
        } => {
            m.insert("width".into(), (*width).into());
            m.insert("async_reset_n".into(), (*async_reset_n).into());
            m.insert("reset_value".into(), big_to_json(reset_value));
        }
        Primitive::Concat { lo_width, hi_width } => {
            m.insert("lo_width".into(), (*lo_width).into());
            m.insert("hi_width".into(), (*hi_width).into());
        }
        Primitive::Slice { width, lo, hi } => {
            m.insert("width".into(), (*width).into());
            m.insert("lo".into(), (*lo).into());
            m.insert("hi".into(), (*hi).into());
        }
    }
    m
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetlistDoc {
    name: String,
    ports: Vec<PortDoc>,
    #[serde(default)]
    instances: Vec<InstanceDoc>,
    #[serde(default)]
    nets: Vec<NetDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortDoc {
    name: String,
    dir: Direction,
    #[serde(rename = "type")]
    ty: TypeDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TypeDoc {
    Named(NamedType),
    Bv { bv: u32 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NamedType {
    Bit,
    Clock,
    AsyncResetN,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    name: String,
    kind: String,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetDoc {
    from: String,
    to: Vec<String>,
}

/// Parse and validate a netlist JSON document.
pub fn parse_netlist(text: &str) -> Result<CircuitDecl, NetlistError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: NetlistDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            NetlistError::Json(inner.to_string())
        } else {
            NetlistError::Schema {
                path,
                message: inner.to_string(),
            }
        }
    })?;
    build(doc)
}

struct ParamReader<'a> {
    instance: &'a str,
    params: &'a serde_json::Map<String, serde_json::Value>,
    used: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn err(&self, message: String) -> NetlistError {
        NetlistError::InvalidParam {
            instance: self.instance.to_string(),
            message,
        }
    }

    fn big(&mut self, key: &'static str) -> Result<Option<BigUint>, NetlistError> {
        self.used.push(key);
        match self.params.get(key) {
            None => Ok(None),
            Some(serde_json::Value::Number(n)) => n
                .as_u64()
                .map(|v| Some(BigUint::from(v)))
                .ok_or_else(|| self.err(format!("param `{key}` must be a non-negative integer"))),
            Some(serde_json::Value::String(s)) => bits::parse_literal(s)
                .map(Some)
                .ok_or_else(|| self.err(format!("param `{key}` is not an integer literal"))),
            Some(_) => Err(self.err(format!("param `{key}` must be an integer"))),
        }
    }

    fn uint(&mut self, key: &'static str) -> Result<u32, NetlistError> {
        let v = self
            .big(key)?
            .ok_or_else(|| self.err(format!("missing param `{key}`")))?;
        v.to_u32()
            .ok_or_else(|| self.err(format!("param `{key}` is too large")))
    }

    fn width(&mut self, key: &'static str) -> Result<u32, NetlistError> {
        let w = self.uint(key)?;
        if w == 0 {
            return Err(self.err(format!("param `{key}` must be at least 1")));
        }
        Ok(w)
    }

    fn flag(&mut self, key: &'static str) -> Result<bool, NetlistError> {
        self.used.push(key);
        match self.params.get(key) {
            None => Ok(false),
            Some(serde_json::Value::Bool(b)) => Ok(*b),
            Some(_) => Err(self.err(format!("param `{key}` must be a boolean"))),
        }
    }

    fn finish(self) -> Result<(), NetlistError> {
        for key in self.params.keys() {
            if !self.used.contains(&key.as_str()) {
                return Err(self.err(format!("unknown param `{key}`")));
            }
        }
        Ok(())
    }
}

fn parse_primitive(inst: &InstanceDoc) -> Result<Primitive, NetlistError> {
    let mut r = ParamReader {
        instance: &inst.name,
        params: &inst.params,
        used: Vec::new(),
    };
    let prim = match inst.kind.as_str() {
        "const" => {
            let width = r.width("width")?;
            let value = r.big("value")?.unwrap_or_default();
            if !bits::fits(&value, width) {
                return Err(r.err(format!("value {value} does not fit in {width} bits")));
            }
            Primitive::Const { width, value }
        }
        "add" | "sub" | "mul" | "and" | "or" | "xor" | "shl" | "lshr" => {
            let op = match inst.kind.as_str() {
                "add" => BinaryOp::Add,
                "sub" => BinaryOp::Sub,
                "mul" => BinaryOp::Mul,
                "and" => BinaryOp::And,
                "or" => BinaryOp::Or,
                "xor" => BinaryOp::Xor,
                "shl" => BinaryOp::Shl,
                _ => BinaryOp::Lshr,
            };
            Primitive::Binary {
                op,
                width: r.width("width")?,
            }
        }
        "eq" | "ult" | "ule" => {
            let op = match inst.kind.as_str() {
                "eq" => CompareOp::Eq,
                "ult" => CompareOp::Ult,
                _ => CompareOp::Ule,
            };
            Primitive::Compare {
                op,
                width: r.width("width")?,
            }
        }
        "not" | "neg" => Primitive::Unary {
            op: if inst.kind == "not" {
                UnaryOp::Not
            } else {
                UnaryOp::Neg
            },
            width: r.width("width")?,
        },
        "mux" => Primitive::Mux {
            width: r.width("width")?,
        },
        "register" => {
            let width = r.width("width")?;
            let async_reset_n = r.flag("async_reset_n")?;
            let reset_value = r.big("reset_value")?.unwrap_or_else(BigUint::zero);
            if !bits::fits(&reset_value, width) {
                return Err(r.err(format!("reset_value {reset_value} does not fit in {width} bits")));
            }
            Primitive::Register {
                width,
                async_reset_n,
                reset_value,
            }
        }
        "concat" => Primitive::Concat {
            lo_width: r.width("lo_width")?,
            hi_width: r.width("hi_width")?,
        },
        "slice" => {
            let width = r.width("width")?;
            let lo = r.uint("lo")?;
            let hi = r.uint("hi")?;
            if lo > hi || hi >= width {
                return Err(r.err(format!("slice [{hi}:{lo}] out of range for width {width}")));
            }
            Primitive::Slice { width, lo, hi }
        }
        other => {
            return Err(NetlistError::UnknownPrimitive {
                instance: inst.name.clone(),
                kind: other.to_string(),
            })
        }
    };
    r.finish()?;
    Ok(prim)
}

fn build(doc: NetlistDoc) -> Result<CircuitDecl, NetlistError> {
    if !is_identifier(&doc.name) {
        return Err(NetlistError::InvalidIdentifier {
            path: "name".into(),
            name: doc.name,
        });
    }

    let mut ports = Vec::with_capacity(doc.ports.len());
    for (i, p) in doc.ports.iter().enumerate() {
        if !is_identifier(&p.name) {
            return Err(NetlistError::InvalidIdentifier {
                path: format!("ports[{i}].name"),
                name: p.name.clone(),
            });
        }
        if ports.iter().any(|q: &Port| q.name == p.name) {
            return Err(NetlistError::DuplicateName(p.name.clone()));
        }
        let ptype = match p.ty {
            TypeDoc::Named(NamedType::Bit) => PortType::Bit,
            TypeDoc::Named(NamedType::Clock) => PortType::Clock,
            TypeDoc::Named(NamedType::AsyncResetN) => PortType::AsyncResetN,
            TypeDoc::Bv { bv: 0 } => {
                return Err(NetlistError::Schema {
                    path: format!("ports[{i}].type.bv"),
                    message: "bit-vector width must be at least 1".into(),
                })
            }
            TypeDoc::Bv { bv } => PortType::BitVector(bv),
        };
        if matches!(ptype, PortType::Clock | PortType::AsyncResetN) && p.dir != Direction::Input {
            return Err(NetlistError::ClockDomain(format!(
                "port `{}` of type {} must be an input",
                p.name,
                ptype.kind_name()
            )));
        }
        ports.push(Port {
            name: p.name.clone(),
            dir: p.dir,
            ptype,
        });
    }

    let mut instances: Vec<Instance> = Vec::with_capacity(doc.instances.len());
    for (i, inst) in doc.instances.iter().enumerate() {
        if !is_identifier(&inst.name) {
            return Err(NetlistError::InvalidIdentifier {
                path: format!("instances[{i}].name"),
                name: inst.name.clone(),
            });
        }
        if instances.iter().any(|q| q.name == inst.name) {
            return Err(NetlistError::DuplicateName(inst.name.clone()));
        }
        instances.push(Instance {
            name: inst.name.clone(),
            prim: parse_primitive(inst)?,
        });
    }

    let lookup = |text: &str| -> Result<(Endpoint, u32, bool), NetlistError> {
        // Returns (endpoint, width, is_driver).
        let segs: Vec<&str> = text.split('.').collect();
        match segs.as_slice() {
            [name] => ports
                .iter()
                .position(|p| p.name == *name)
                .map(|idx| (Endpoint::Port(idx), ports[idx].width(), ports[idx].is_input()))
                .ok_or_else(|| NetlistError::UnknownEndpoint(text.to_string())),
            [inst, pin_name] => {
                let idx = instances
                    .iter()
                    .position(|i| i.name == *inst)
                    .ok_or_else(|| NetlistError::UnknownEndpoint(text.to_string()))?;
                let spec = instances[idx]
                    .prim
                    .pin(pin_name)
                    .ok_or_else(|| NetlistError::UnknownEndpoint(text.to_string()))?;
                Ok((
                    Endpoint::Pin {
                        inst: idx,
                        pin: spec.name,
                    },
                    spec.width,
                    spec.dir == PinDir::Out,
                ))
            }
            _ => Err(NetlistError::UnknownEndpoint(text.to_string())),
        }
    };

    let mut nets = Vec::with_capacity(doc.nets.len());
    let mut sink_driver: HashMap<Endpoint, Endpoint> = HashMap::new();
    for n in &doc.nets {
        let (from, from_width, is_driver) = lookup(&n.from)?;
        if !is_driver {
            return Err(NetlistError::NotADriver(n.from.clone()));
        }
        let mut to = Vec::with_capacity(n.to.len());
        for t in &n.to {
            let (sink, width, sink_is_driver) = lookup(t)?;
            if sink_is_driver {
                return Err(NetlistError::NotASink(t.clone()));
            }
            if width != from_width {
                return Err(NetlistError::WidthMismatch {
                    from: n.from.clone(),
                    to: t.clone(),
                    from_width,
                    to_width: width,
                });
            }
            if sink_driver.insert(sink.clone(), from.clone()).is_some() {
                return Err(NetlistError::MultipleDrivers(t.clone()));
            }
            to.push(sink);
        }
        nets.push(Net { from, to });
    }

    // Every sink must be driven.
    let name_of = |ep: &Endpoint| match ep {
        Endpoint::Port(i) => ports[*i].name.clone(),
        Endpoint::Pin { inst, pin } => format!("{}.{}", instances[*inst].name, pin),
    };
    let mut sinks = Vec::new();
    for (idx, p) in ports.iter().enumerate() {
        if !p.is_input() {
            sinks.push(Endpoint::Port(idx));
        }
    }
    for (idx, inst) in instances.iter().enumerate() {
        for spec in inst.prim.pins() {
            if spec.dir == PinDir::In {
                sinks.push(Endpoint::Pin {
                    inst: idx,
                    pin: spec.name,
                });
            }
        }
    }
    for s in &sinks {
        if !sink_driver.contains_key(s) {
            return Err(NetlistError::Undriven(name_of(s)));
        }
    }

    // Clock and reset discipline.
    let clocks: Vec<usize> = ports
        .iter()
        .enumerate()
        .filter(|(_, p)| p.ptype == PortType::Clock)
        .map(|(i, _)| i)
        .collect();
    let has_registers = instances.iter().any(|i| i.prim.is_register());
    if has_registers && clocks.len() != 1 {
        return Err(NetlistError::ClockDomain(format!(
            "circuits with registers need exactly one clock port, found {}",
            clocks.len()
        )));
    }
    for (sink, driver) in &sink_driver {
        let driver_type = match driver {
            Endpoint::Port(i) => Some(ports[*i].ptype),
            _ => None,
        };
        let sink_pin = match sink {
            Endpoint::Pin { pin, .. } => Some(*pin),
            _ => None,
        };
        let is_clock = driver_type == Some(PortType::Clock);
        let is_reset = driver_type == Some(PortType::AsyncResetN);
        match sink_pin {
            Some("clk") if !is_clock => {
                return Err(NetlistError::ClockDomain(format!(
                    "register clock pin `{}` must be driven by the clock port",
                    name_of(sink)
                )))
            }
            Some("rstn") if !is_reset => {
                return Err(NetlistError::ClockDomain(format!(
                    "register reset pin `{}` must be driven by an async_reset_n port",
                    name_of(sink)
                )))
            }
            Some("clk") | Some("rstn") => {}
            _ if is_clock || is_reset => {
                return Err(NetlistError::ClockDomain(format!(
                    "`{}` may only drive register {} pins, not `{}`",
                    name_of(driver),
                    if is_clock { "clk" } else { "rstn" },
                    name_of(sink)
                )))
            }
            _ => {}
        }
    }

    // Signals: one per input port, one per instance output pin.
    let mut signals = Vec::new();
    let mut driver_signal: HashMap<Endpoint, SignalId> = HashMap::new();
    for (idx, p) in ports.iter().enumerate() {
        if p.is_input() {
            let ep = Endpoint::Port(idx);
            driver_signal.insert(ep.clone(), SignalId(signals.len()));
            signals.push(Signal {
                driver: ep,
                width: p.width(),
                name: p.name.clone(),
            });
        }
    }
    for (idx, inst) in instances.iter().enumerate() {
        for spec in inst.prim.pins() {
            if spec.dir == PinDir::Out {
                let ep = Endpoint::Pin {
                    inst: idx,
                    pin: spec.name,
                };
                driver_signal.insert(ep.clone(), SignalId(signals.len()));
                signals.push(Signal {
                    driver: ep,
                    width: spec.width,
                    name: format!("{}.{}", inst.name, spec.name),
                });
            }
        }
    }
    let signal_of = |ep: &Endpoint| -> SignalId {
        match driver_signal.get(ep) {
            Some(s) => *s,
            None => driver_signal[&sink_driver[ep]],
        }
    };
    let port_signal: Vec<SignalId> = (0..ports.len())
        .map(|i| signal_of(&Endpoint::Port(i)))
        .collect();
    let mut pin_signal = HashMap::new();
    for (idx, inst) in instances.iter().enumerate() {
        for spec in inst.prim.pins() {
            let ep = Endpoint::Pin {
                inst: idx,
                pin: spec.name,
            };
            pin_signal.insert((idx, spec.name), signal_of(&ep));
        }
    }

    Ok(CircuitDecl {
        name: doc.name,
        ports,
        instances,
        nets,
        signals,
        port_signal,
        pin_signal,
    })
}
