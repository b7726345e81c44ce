// SPDX-License-Identifier: Apache-2.0

//! Staged hardware test construction and execution.
//!
//! A [`tester::Tester`] records poke/expect/eval/step actions against a
//! [`circuit::CircuitDecl`] into an [`ir::ActionProgram`]. Programs run on the
//! in-process interpreter ([`sim`]), lower to SystemVerilog or C++
//! testbenches ([`codegen`]), SPICE decks ([`spice`]), a transition system for
//! model checking ([`formal`]), or constrained-random campaigns ([`random`]).

pub mod bits;
pub mod circuit;
pub mod codegen;
pub mod expr;
pub mod formal;
pub mod ir;
pub mod random;
pub mod report;
pub mod sim;
pub mod spice;
pub mod tester;

pub use circuit::{parse_netlist, CircuitDecl, HierRef, PortKind, PortType};
pub use expr::Expr;
pub use ir::{validate_program, Action, ActionProgram};
pub use report::{TestReport, Verdict};
pub use sim::{RunOptions, SimModel};
pub use tester::Tester;
