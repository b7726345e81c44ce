// SPDX-License-Identifier: Apache-2.0

//! Symbolic expressions over peeked signals, bound variables and constants.
//!
//! Expressions are plain trees. Building them never touches a program; width
//! checking happens when an expression is handed to an action.

use std::collections::BTreeMap;
use std::fmt;
use std::ops;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bits;
use crate::circuit::HierRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unop {
    /// Logical not: 1 iff the operand is zero.
    Not,
    Neg,
    BitNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Binop {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Lshr,
    Eq,
    Neq,
    Ult,
    Ule,
    Ugt,
    Uge,
    LogicalAnd,
    LogicalOr,
}

impl Unop {
    pub fn name(self) -> &'static str {
        match self {
            Unop::Not => "not",
            Unop::Neg => "neg",
            Unop::BitNot => "bitnot",
        }
    }

    fn from_name(s: &str) -> Option<Unop> {
        Some(match s {
            "not" => Unop::Not,
            "neg" => Unop::Neg,
            "bitnot" => Unop::BitNot,
            _ => return None,
        })
    }
}

impl Binop {
    pub const ALL: [Binop; 16] = [
        Binop::Add,
        Binop::Sub,
        Binop::Mul,
        Binop::And,
        Binop::Or,
        Binop::Xor,
        Binop::Shl,
        Binop::Lshr,
        Binop::Eq,
        Binop::Neq,
        Binop::Ult,
        Binop::Ule,
        Binop::Ugt,
        Binop::Uge,
        Binop::LogicalAnd,
        Binop::LogicalOr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Binop::Add => "add",
            Binop::Sub => "sub",
            Binop::Mul => "mul",
            Binop::And => "and",
            Binop::Or => "or",
            Binop::Xor => "xor",
            Binop::Shl => "shl",
            Binop::Lshr => "lshr",
            Binop::Eq => "eq",
            Binop::Neq => "neq",
            Binop::Ult => "ult",
            Binop::Ule => "ule",
            Binop::Ugt => "ugt",
            Binop::Uge => "uge",
            Binop::LogicalAnd => "land",
            Binop::LogicalOr => "lor",
        }
    }

    fn from_name(s: &str) -> Option<Binop> {
        Binop::ALL.into_iter().find(|op| op.name() == s)
    }

    /// Comparison and logical operators produce a single bit.
    pub fn is_boolean(self) -> bool {
        matches!(
            self,
            Binop::Eq
                | Binop::Neq
                | Binop::Ult
                | Binop::Ule
                | Binop::Ugt
                | Binop::Uge
                | Binop::LogicalAnd
                | Binop::LogicalOr
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const { value: BigUint, width: u32 },
    Peek { target: HierRef, width: u32 },
    Var { name: String, width: u32 },
    Unop { op: Unop, arg: Box<Expr> },
    Binop { op: Binop, lhs: Box<Expr>, rhs: Box<Expr> },
    /// Zero extension to a wider width.
    Zext { arg: Box<Expr>, width: u32 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("operands of `{op}` have different widths ({lhs} vs {rhs})")]
    OperandWidths { op: &'static str, lhs: u32, rhs: u32 },
    #[error("constant {value} does not fit in {width} bits")]
    ConstantRange { value: BigUint, width: u32 },
    #[error("zero-width expression")]
    ZeroWidth,
    #[error("cannot zero-extend {from} bits to {to} bits")]
    Narrowing { from: u32, to: u32 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("cannot read `{0}`")]
    Peek(String),
}

/// Values visible to an expression during evaluation.
pub trait Env {
    fn peek(&self, target: &HierRef) -> Result<BigUint, EvalError>;
    fn var(&self, name: &str) -> Result<BigUint, EvalError>;
}

/// Bound variables only; every peek fails.
impl Env for BTreeMap<String, BigUint> {
    fn peek(&self, target: &HierRef) -> Result<BigUint, EvalError> {
        Err(EvalError::Peek(target.to_string()))
    }

    fn var(&self, name: &str) -> Result<BigUint, EvalError> {
        self.get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVar(name.to_string()))
    }
}

impl Expr {
    pub fn constant(value: impl Into<BigUint>, width: u32) -> Expr {
        Expr::Const {
            value: value.into(),
            width,
        }
    }

    pub fn var(name: impl Into<String>, width: u32) -> Expr {
        Expr::Var {
            name: name.into(),
            width,
        }
    }

    pub fn truth() -> Expr {
        Expr::constant(1u32, 1)
    }

    fn binop(self, op: Binop, rhs: Expr) -> Expr {
        Expr::Binop {
            op,
            lhs: Box::new(self),
            rhs: Box::new(rhs),
        }
    }

    pub fn equal(self, rhs: Expr) -> Expr {
        self.binop(Binop::Eq, rhs)
    }

    pub fn not_equal(self, rhs: Expr) -> Expr {
        self.binop(Binop::Neq, rhs)
    }

    pub fn ult(self, rhs: Expr) -> Expr {
        self.binop(Binop::Ult, rhs)
    }

    pub fn ule(self, rhs: Expr) -> Expr {
        self.binop(Binop::Ule, rhs)
    }

    pub fn ugt(self, rhs: Expr) -> Expr {
        self.binop(Binop::Ugt, rhs)
    }

    pub fn uge(self, rhs: Expr) -> Expr {
        self.binop(Binop::Uge, rhs)
    }

    pub fn logical_and(self, rhs: Expr) -> Expr {
        self.binop(Binop::LogicalAnd, rhs)
    }

    pub fn logical_or(self, rhs: Expr) -> Expr {
        self.binop(Binop::LogicalOr, rhs)
    }

    pub fn logical_not(self) -> Expr {
        Expr::Unop {
            op: Unop::Not,
            arg: Box::new(self),
        }
    }

    pub fn zext(self, width: u32) -> Expr {
        Expr::Zext {
            arg: Box::new(self),
            width,
        }
    }

    pub fn apply(op: Binop, lhs: Expr, rhs: Expr) -> Expr {
        lhs.binop(op, rhs)
    }

    /// Width-check the tree and return its result width.
    pub fn width(&self) -> Result<u32, ExprError> {
        match self {
            Expr::Const { value, width } => {
                if *width == 0 {
                    return Err(ExprError::ZeroWidth);
                }
                if !bits::fits(value, *width) {
                    return Err(ExprError::ConstantRange {
                        value: value.clone(),
                        width: *width,
                    });
                }
                Ok(*width)
            }
            Expr::Peek { width, .. } | Expr::Var { width, .. } => {
                if *width == 0 {
                    Err(ExprError::ZeroWidth)
                } else {
                    Ok(*width)
                }
            }
            Expr::Unop { op, arg } => {
                let w = arg.width()?;
                Ok(if *op == Unop::Not { 1 } else { w })
            }
            Expr::Binop { op, lhs, rhs } => {
                let (l, r) = (lhs.width()?, rhs.width()?);
                if l != r {
                    return Err(ExprError::OperandWidths {
                        op: op.name(),
                        lhs: l,
                        rhs: r,
                    });
                }
                Ok(if op.is_boolean() { 1 } else { l })
            }
            Expr::Zext { arg, width } => {
                let w = arg.width()?;
                if w > *width {
                    return Err(ExprError::Narrowing { from: w, to: *width });
                }
                Ok(*width)
            }
        }
    }

    pub fn eval(&self, env: &dyn Env) -> Result<BigUint, EvalError> {
        Ok(match self {
            Expr::Const { value, .. } => value.clone(),
            Expr::Peek { target, width } => bits::truncate(&env.peek(target)?, *width),
            Expr::Var { name, width } => bits::truncate(&env.var(name)?, *width),
            Expr::Zext { arg, .. } => arg.eval(env)?,
            Expr::Unop { op, arg } => {
                let v = arg.eval(env)?;
                let w = arg.width().unwrap_or(1);
                match op {
                    Unop::Not => bits::from_bool(v.is_zero()),
                    Unop::Neg => bits::truncate(&((BigUint::one() << w as usize) - v), w),
                    Unop::BitNot => v ^ bits::mask(w),
                }
            }
            Expr::Binop { op, lhs, rhs } => {
                let a = lhs.eval(env)?;
                let b = rhs.eval(env)?;
                let w = lhs.width().unwrap_or(1);
                apply_binop(*op, &a, &b, w)
            }
        })
    }

    /// Bound variables with their widths, sorted by name.
    pub fn vars(&self) -> BTreeMap<String, u32> {
        let mut out = BTreeMap::new();
        self.visit(&mut |e| {
            if let Expr::Var { name, width } = e {
                out.insert(name.clone(), *width);
            }
        });
        out
    }

    pub fn peeks(&self) -> Vec<(HierRef, u32)> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Peek { target, width } = e {
                out.push((target.clone(), *width));
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Unop { arg, .. } | Expr::Zext { arg, .. } => arg.visit(f),
            Expr::Binop { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            _ => {}
        }
    }

    /// Rename bound variables through `f`.
    pub fn rename_vars(&self, f: &dyn Fn(&str) -> String) -> Expr {
        match self {
            Expr::Var { name, width } => Expr::Var {
                name: f(name),
                width: *width,
            },
            Expr::Unop { op, arg } => Expr::Unop {
                op: *op,
                arg: Box::new(arg.rename_vars(f)),
            },
            Expr::Binop { op, lhs, rhs } => Expr::Binop {
                op: *op,
                lhs: Box::new(lhs.rename_vars(f)),
                rhs: Box::new(rhs.rename_vars(f)),
            },
            Expr::Zext { arg, width } => Expr::Zext {
                arg: Box::new(arg.rename_vars(f)),
                width: *width,
            },
            other => other.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Expr::Const { value, width } => {
                json!({"op": "const", "value": value.to_string(), "width": width})
            }
            Expr::Peek { target, width } => {
                json!({"op": "peek", "path": target.to_string(), "width": width})
            }
            Expr::Var { name, width } => json!({"op": "var", "name": name, "width": width}),
            Expr::Unop { op, arg } => json!({"op": op.name(), "args": [arg.to_json()]}),
            Expr::Binop { op, lhs, rhs } => {
                json!({"op": op.name(), "args": [lhs.to_json(), rhs.to_json()]})
            }
            Expr::Zext { arg, width } => {
                json!({"op": "zext", "width": width, "args": [arg.to_json()]})
            }
        }
    }

    pub fn from_json(v: &Value) -> Result<Expr, String> {
        let obj = v.as_object().ok_or("expression must be an object")?;
        let op = obj
            .get("op")
            .and_then(Value::as_str)
            .ok_or("expression is missing `op`")?;
        let width = || -> Result<u32, String> {
            obj.get("width")
                .and_then(Value::as_u64)
                .and_then(|w| w.to_u32())
                .ok_or_else(|| format!("`{op}` needs an integer `width`"))
        };
        let args = || -> Result<Vec<Expr>, String> {
            obj.get("args")
                .and_then(Value::as_array)
                .ok_or_else(|| format!("`{op}` needs an `args` array"))?
                .iter()
                .map(Expr::from_json)
                .collect()
        };
        let arity = |args: Vec<Expr>, n: usize| -> Result<Vec<Expr>, String> {
            if args.len() == n {
                Ok(args)
            } else {
                Err(format!("`{op}` takes {n} argument(s), got {}", args.len()))
            }
        };
        match op {
            "const" => {
                let value = match obj.get("value") {
                    Some(Value::String(s)) => bits::parse_literal(s),
                    Some(Value::Number(n)) => n.as_u64().map(BigUint::from),
                    _ => None,
                }
                .ok_or("`const` needs an unsigned `value`")?;
                Ok(Expr::Const {
                    value,
                    width: width()?,
                })
            }
            "peek" => {
                let path = obj
                    .get("path")
                    .and_then(Value::as_str)
                    .ok_or("`peek` needs a `path`")?;
                Ok(Expr::Peek {
                    target: path.parse()?,
                    width: width()?,
                })
            }
            "var" => {
                let name = obj
                    .get("name")
                    .and_then(Value::as_str)
                    .ok_or("`var` needs a `name`")?;
                Ok(Expr::Var {
                    name: name.to_string(),
                    width: width()?,
                })
            }
            "zext" => {
                let mut a = arity(args()?, 1)?;
                Ok(Expr::Zext {
                    arg: Box::new(a.remove(0)),
                    width: width()?,
                })
            }
            other => {
                if let Some(u) = Unop::from_name(other) {
                    let mut a = arity(args()?, 1)?;
                    Ok(Expr::Unop {
                        op: u,
                        arg: Box::new(a.remove(0)),
                    })
                } else if let Some(b) = Binop::from_name(other) {
                    let mut a = arity(args()?, 2)?;
                    let rhs = a.remove(1);
                    let lhs = a.remove(0);
                    Ok(lhs.binop(b, rhs))
                } else {
                    Err(format!("unknown operator `{other}`"))
                }
            }
        }
    }
}

/// Integer semantics of a binary operator at operand width `w`.
pub fn apply_binop(op: Binop, a: &BigUint, b: &BigUint, w: u32) -> BigUint {
    let modulus = || BigUint::one() << w as usize;
    match op {
        Binop::Add => bits::truncate(&(a + b), w),
        Binop::Sub => bits::truncate(&(a + modulus() - b), w),
        Binop::Mul => bits::truncate(&(a * b), w),
        Binop::And => a & b,
        Binop::Or => a | b,
        Binop::Xor => a ^ b,
        Binop::Shl => match b.to_u32() {
            Some(s) if s < w => bits::truncate(&(a << s as usize), w),
            _ => BigUint::zero(),
        },
        Binop::Lshr => match b.to_u32() {
            Some(s) if s < w => a >> s as usize,
            _ => BigUint::zero(),
        },
        Binop::Eq => bits::from_bool(a == b),
        Binop::Neq => bits::from_bool(a != b),
        Binop::Ult => bits::from_bool(a < b),
        Binop::Ule => bits::from_bool(a <= b),
        Binop::Ugt => bits::from_bool(a > b),
        Binop::Uge => bits::from_bool(a >= b),
        Binop::LogicalAnd => bits::from_bool(!a.is_zero() && !b.is_zero()),
        Binop::LogicalOr => bits::from_bool(!a.is_zero() || !b.is_zero()),
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Expr::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const { value, width } => write!(f, "{width}'d{value}"),
            Expr::Peek { target, .. } => write!(f, "peek({target})"),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Unop { op, arg } => write!(f, "{}({arg})", op.name()),
            Expr::Binop { op, lhs, rhs } => write!(f, "{}({lhs}, {rhs})", op.name()),
            Expr::Zext { arg, width } => write!(f, "zext{width}({arg})"),
        }
    }
}

macro_rules! binop_trait {
    ($trait:ident, $method:ident, $op:expr) => {
        impl ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.binop($op, rhs)
            }
        }
    };
}

binop_trait!(Add, add, Binop::Add);
binop_trait!(Sub, sub, Binop::Sub);
binop_trait!(Mul, mul, Binop::Mul);
binop_trait!(BitAnd, bitand, Binop::And);
binop_trait!(BitOr, bitor, Binop::Or);
binop_trait!(BitXor, bitxor, Binop::Xor);
binop_trait!(Shl, shl, Binop::Shl);
binop_trait!(Shr, shr, Binop::Lshr);

/// `!e` is bitwise inversion, matching `~` on a peeked port.
impl ops::Not for Expr {
    type Output = Expr;
    fn not(self) -> Expr {
        Expr::Unop {
            op: Unop::BitNot,
            arg: Box::new(self),
        }
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Unop {
            op: Unop::Neg,
            arg: Box::new(self),
        }
    }
}
