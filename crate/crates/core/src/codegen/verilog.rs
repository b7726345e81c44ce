// SPDX-License-Identifier: Apache-2.0

//! Minimal structural Verilog for a netlist, for end-to-end manual runs.

use crate::circuit::{BinaryOp, CircuitDecl, CompareOp, Direction, Primitive, UnaryOp};
use crate::sim::{input_signals, output_signal};

use super::{check_names, line, signal_wire, CodegenError, EmittedTestbench};

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

pub fn emit_verilog(c: &CircuitDecl) -> Result<EmittedTestbench, CodegenError> {
    let empty = crate::ir::ActionProgram::new(c, None, Vec::new());
    check_names(c, &empty)?;
    let mut out = String::new();
    line(&mut out, 0, &format!("module {} (", c.name()));
    let ports = c.ports();
    for (i, p) in ports.iter().enumerate() {
        let dir = match p.dir {
            Direction::Input => "input",
            Direction::Output => "output",
        };
        let sep = if i + 1 < ports.len() { "," } else { "" };
        line(&mut out, 1, &format!("{dir} wire {}{}{sep}", range(p.width()), p.name));
    }
    line(&mut out, 0, ");");
    for (i, inst) in c.instances().iter().enumerate() {
        let o = output_signal(c, i);
        let kind = if inst.prim.is_register() { "reg" } else { "wire" };
        line(
            &mut out,
            1,
            &format!("{kind} {}{};", range(c.signals()[o.0].width), signal_wire(c, o)),
        );
    }
    for (i, inst) in c.instances().iter().enumerate() {
        let o = signal_wire(c, output_signal(c, i));
        let ins: Vec<String> = input_signals(c, i).iter().map(|s| signal_wire(c, *s)).collect();
        let rhs = match &inst.prim {
            Primitive::Const { width, value } => format!("{width}'d{value}"),
            Primitive::Binary { op, .. } => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::And => "&",
                    BinaryOp::Or => "|",
                    BinaryOp::Xor => "^",
                    BinaryOp::Shl => "<<",
                    BinaryOp::Lshr => ">>",
                };
                format!("{} {sym} {}", ins[0], ins[1])
            }
            Primitive::Compare { op, .. } => {
                let sym = match op {
                    CompareOp::Eq => "==",
                    CompareOp::Ult => "<",
                    CompareOp::Ule => "<=",
                };
                format!("{} {sym} {}", ins[0], ins[1])
            }
            Primitive::Unary { op, .. } => match op {
                UnaryOp::Not => format!("~{}", ins[0]),
                UnaryOp::Neg => format!("-{}", ins[0]),
            },
            Primitive::Mux { .. } => format!("{} ? {} : {}", ins[0], ins[2], ins[1]),
            Primitive::Concat { .. } => format!("{{{}, {}}}", ins[1], ins[0]),
            Primitive::Slice { lo, hi, .. } => {
                if lo == hi {
                    format!("{}[{lo}]", ins[0])
                } else {
                    format!("{}[{hi}:{lo}]", ins[0])
                }
            }
            Primitive::Register {
                width,
                async_reset_n,
                reset_value,
            } => {
                let (d, clk) = (&ins[0], &ins[1]);
                if *async_reset_n {
                    let rstn = &ins[2];
                    line(
                        &mut out,
                        1,
                        &format!("always @(posedge {clk} or negedge {rstn}) {o} <= !{rstn} ? {width}'d{reset_value} : {d};"),
                    );
                } else {
                    line(&mut out, 1, &format!("always @(posedge {clk}) {o} <= {d};"));
                }
                line(&mut out, 1, &format!("initial {o} = {width}'d{reset_value};"));
                continue;
            }
        };
        line(&mut out, 1, &format!("assign {o} = {rhs};"));
    }
    for (i, p) in ports.iter().enumerate() {
        if p.dir == Direction::Output {
            line(&mut out, 1, &format!("assign {} = {};", p.name, signal_wire(c, c.port_signal(i))));
        }
    }
    line(&mut out, 0, "endmodule");
    Ok(EmittedTestbench {
        text: out,
        language: "verilog".to_string(),
        entry: format!("{}.v", c.name()),
    })
}
