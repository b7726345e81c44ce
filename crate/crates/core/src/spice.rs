// SPDX-License-Identifier: Apache-2.0

//! Analog testbenches: pokes become piecewise-linear sources, expects become
//! threshold checks over sampled waveform data.
//!
//! Time is kept in integer femtoseconds. A virtual cursor starts one window
//! (half a clock period) after time zero; every Eval and every Step unit
//! opens a new window at the cursor and advances it by one window. Pokes
//! ramp at the cursor. A Step unit toggles the clock half way through its
//! window. Expects sample the most recent window at its settle fraction.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits;
use crate::circuit::{CircuitDecl, PortType};
use crate::codegen::EmittedTestbench;
use crate::ir::{child_path, validate_program, Action, ActionProgram};
use crate::report::{Failure, FailureCode, TestReport};
use crate::sim::{SimModel, Simulator};

const FS_PER_S: f64 = 1e15;

#[derive(Debug, Error)]
pub enum SpiceError {
    #[error("{path}: `{kind}` is not supported on the SPICE target")]
    Unsupported { path: String, kind: String },
    #[error("{path}: value must be a constant")]
    NonConstant { path: String },
    #[error("{path}: `{target}` is not an input port")]
    NotInput { path: String, target: String },
    #[error("{path}: `{target}` is not an interface port")]
    NotPort { path: String, target: String },
    #[error("invalid timing: {0}")]
    Timing(String),
    #[error("program does not validate: {0}")]
    Invalid(String),
    #[error("waveform data has no column for `{0}`")]
    MissingSignal(String),
    #[error("sample time {time:e} s is outside the data range [{start:e}, {end:e}]")]
    OutOfRange { time: f64, start: f64, end: f64 },
    #[error("waveform data: {0}")]
    Data(String),
}

/// Analog timing and level parameters (seconds, volts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalogTiming {
    pub clock_period: f64,
    pub transition_time: f64,
    pub settle_fraction: f64,
    pub vdd: f64,
    pub vil: f64,
    pub vih: f64,
    pub vol_max: f64,
    pub voh_min: f64,
}

impl Default for AnalogTiming {
    fn default() -> Self {
        AnalogTiming {
            clock_period: 10e-9,
            transition_time: 0.1e-9,
            settle_fraction: 0.9,
            vdd: 1.0,
            vil: 0.3,
            vih: 0.7,
            vol_max: 0.1,
            voh_min: 0.9,
        }
    }
}

fn to_fs(seconds: f64) -> u64 {
    (seconds * FS_PER_S).round() as u64
}

fn to_seconds(fs: u64) -> f64 {
    fs as f64 / FS_PER_S
}

impl AnalogTiming {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SpiceError> {
        let bad = |m: &str| Err(SpiceError::Timing(m.to_string()));
        if !(self.clock_period > 0.0) {
            return bad("clock_period must be positive");
        }
        if !(self.transition_time > 0.0 && self.transition_time < self.clock_period / 2.0) {
            return bad("transition_time must be positive and shorter than half a clock period");
        }
        if !(self.settle_fraction > 0.0 && self.settle_fraction < 1.0) {
            return bad("settle_fraction must lie strictly between 0 and 1");
        }
        if !(0.0 <= self.vol_max && self.vol_max < self.voh_min && self.voh_min <= self.vdd) {
            return bad("need 0 <= vol_max < voh_min <= vdd");
        }
        if !(0.0 <= self.vil && self.vil < self.vih && self.vih <= self.vdd) {
            return bad("need 0 <= vil < vih <= vdd");
        }
        Ok(())
    }

    /// Parse a TOML or JSON timing file; missing fields keep their defaults.
    pub fn from_config(text: &str) -> Result<AnalogTiming, SpiceError> {
        let t: AnalogTiming = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| SpiceError::Timing(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| SpiceError::Timing(e.to_string()))?
        };
        t.validate()?;
        Ok(t)
    }

    fn window_fs(&self) -> u64 {
        to_fs(self.clock_period / 2.0)
    }

    fn transition_fs(&self) -> u64 {
        to_fs(self.transition_time)
    }

    fn settle_fs(&self) -> u64 {
        (self.window_fs() as f64 * self.settle_fraction).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PwlWaveform {
    /// `(seconds, volts)`, strictly increasing in time.
    pub points: Vec<(f64, f64)>,
}

/// SPICE node name for bit `bit` of a port.
pub fn node_name(port: &str, width: u32, bit: u32) -> String {
    if width == 1 {
        port.to_string()
    } else {
        format!("{port}_{bit}")
    }
}

/// An expect lowered to a sampling instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCheck {
    pub path: String,
    pub port: String,
    pub width: u32,
    pub expected: BigUint,
    pub time_fs: u64,
    /// Index of the window being sampled (0 is the leading window).
    pub window: u64,
}

/// Result of the shared cursor walk.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Input-bit node names with `(fs, level)` points, in port and bit order.
    pub waves: Vec<(String, Vec<(u64, bool)>)>,
    pub checks: Vec<SampleCheck>,
    /// Start of each window in femtoseconds.
    pub windows: Vec<u64>,
    /// Cursor after the last action.
    pub end_fs: u64,
}

struct Cursor<'a> {
    c: &'a CircuitDecl,
    timing: &'a AnalogTiming,
    now: u64,
    windows: Vec<u64>,
    levels: BTreeMap<String, bool>,
    points: BTreeMap<String, Vec<(u64, bool)>>,
}

impl Cursor<'_> {
    fn drive(&mut self, node: &str, level: bool, at: u64) {
        let tr = self.timing.transition_fs();
        let pts = self.points.get_mut(node).expect("input node");
        let cur = self.levels[node];
        // A second poke in the same window retargets the pending ramp.
        if let Some(&(t, _)) = pts.last() {
            if t == at + tr {
                pts.last_mut().unwrap().1 = level;
                self.levels.insert(node.to_string(), level);
                return;
            }
        }
        if cur == level {
            return;
        }
        pts.push((at, cur));
        pts.push((at + tr, level));
        self.levels.insert(node.to_string(), level);
    }

    fn open_window(&mut self) {
        self.windows.push(self.now);
        self.now += self.timing.window_fs();
    }
}

/// Walk the program once, producing input waveforms and expect sample times.
/// Both [`compile_pwl`] and [`check_results`] use this routine.
pub fn schedule(p: &ActionProgram, c: &CircuitDecl, t: &AnalogTiming) -> Result<Schedule, SpiceError> {
    t.validate()?;
    let diags = validate_program(p, c);
    if !diags.is_empty() {
        let text: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(SpiceError::Invalid(text.join("; ")));
    }
    let mut cur = Cursor {
        c,
        timing: t,
        now: t.window_fs(),
        windows: vec![0],
        levels: BTreeMap::new(),
        points: BTreeMap::new(),
    };
    let mut order = Vec::new();
    for port in c.ports().iter().filter(|p| p.is_input()) {
        for b in 0..port.width() {
            let n = node_name(&port.name, port.width(), b);
            cur.levels.insert(n.clone(), false);
            cur.points.insert(n.clone(), vec![(0, false)]);
            order.push(n);
        }
    }
    let clock = c.clock_port().map(|p| p.name.clone());
    let mut checks = Vec::new();
    for (i, a) in p.actions.iter().enumerate() {
        let path = child_path("", "root", i);
        let constant = |e: &crate::expr::Expr| -> Result<BigUint, SpiceError> {
            if !e.vars().is_empty() || !e.peeks().is_empty() {
                return Err(SpiceError::NonConstant { path: path.clone() });
            }
            e.eval(&BTreeMap::new())
                .map_err(|_| SpiceError::NonConstant { path: path.clone() })
        };
        match a {
            Action::Poke { target, value } => {
                let v = constant(value)?;
                let name = target.as_port().unwrap_or_default();
                let port = cur
                    .c
                    .port(name)
                    .map(|(_, p)| p)
                    .filter(|p| p.is_input())
                    .ok_or_else(|| SpiceError::NotInput {
                        path: path.clone(),
                        target: target.to_string(),
                    })?;
                let (w, pname) = (port.width(), port.name.clone());
                for b in 0..w {
                    let at = cur.now;
                    cur.drive(&node_name(&pname, w, b), bits::bit(&v, b), at);
                }
            }
            Action::Eval => cur.open_window(),
            Action::Step { n } => {
                for _ in 0..*n {
                    if let Some(clk) = &clock {
                        let level = !cur.levels[clk];
                        let at = cur.now + t.window_fs() / 2;
                        cur.drive(clk, level, at);
                    }
                    cur.open_window();
                }
            }
            Action::Expect { target, value } => {
                let expected = constant(value)?;
                let name = target.as_port().unwrap_or_default();
                let port = cur.c.port(name).map(|(_, p)| p).ok_or_else(|| SpiceError::NotPort {
                    path: path.clone(),
                    target: target.to_string(),
                })?;
                let start = *cur.windows.last().unwrap();
                checks.push(SampleCheck {
                    path: path.clone(),
                    port: port.name.clone(),
                    width: port.width(),
                    expected,
                    time_fs: start + t.settle_fs(),
                    window: cur.windows.len() as u64 - 1,
                });
            }
            other => {
                return Err(SpiceError::Unsupported {
                    path,
                    kind: other.kind().to_string(),
                })
            }
        }
    }
    let Cursor {
        now, windows, mut points, ..
    } = cur;
    let waves = order
        .into_iter()
        .map(|n| {
            let pts = points.remove(&n).unwrap();
            (n, pts)
        })
        .collect();
    Ok(Schedule {
        waves,
        checks,
        windows,
        end_fs: now,
    })
}

/// Piecewise-linear source per input bit, keyed by node name.
pub fn compile_pwl(
    p: &ActionProgram,
    c: &CircuitDecl,
    t: &AnalogTiming,
) -> Result<BTreeMap<String, PwlWaveform>, SpiceError> {
    let s = schedule(p, c, t)?;
    Ok(s.waves
        .into_iter()
        .map(|(n, pts)| {
            let points = pts
                .into_iter()
                .map(|(fs, level)| (to_seconds(fs), if level { t.vdd } else { 0.0 }))
                .collect();
            (n, PwlWaveform { points })
        })
        .collect())
}

/// Render a femtosecond time with an exact engineering suffix.
pub fn format_time(fs: u64) -> String {
    if fs == 0 {
        "0".to_string()
    } else if fs.is_multiple_of(1_000_000) {
        format!("{}n", fs / 1_000_000)
    } else if fs.is_multiple_of(1_000) {
        format!("{}p", fs / 1_000)
    } else {
        format!("{fs}f")
    }
}

/// SPICE deck driving the DUT subcircuit from the program's waveforms.
pub fn emit_spice_tb(
    p: &ActionProgram,
    c: &CircuitDecl,
    t: &AnalogTiming,
    netlist_include_path: &str,
) -> Result<EmittedTestbench, SpiceError> {
    let s = schedule(p, c, t)?;
    let volts = |level: bool| if level { format!("{}", t.vdd) } else { "0".to_string() };
    let mut out = String::new();
    writeln!(out, "* testbench for {}", c.name()).unwrap();
    writeln!(out, ".include \"{netlist_include_path}\"").unwrap();
    writeln!(out, "VVDD vdd 0 DC {}", t.vdd).unwrap();
    for (node, pts) in &s.waves {
        if pts.len() == 1 {
            writeln!(out, "V{node} {node} 0 DC {}", volts(pts[0].1)).unwrap();
        } else {
            let body: Vec<String> = pts
                .iter()
                .map(|(fs, l)| format!("{} {}", format_time(*fs), volts(*l)))
                .collect();
            writeln!(out, "V{node} {node} 0 PWL({})", body.join(" ")).unwrap();
        }
    }
    let mut pins = Vec::new();
    for port in c.ports() {
        for b in 0..port.width() {
            pins.push(node_name(&port.name, port.width(), b));
        }
    }
    writeln!(out, "X__fl_dut {} vdd 0 {}", pins.join(" "), c.name()).unwrap();
    let end = s.end_fs + t.window_fs();
    writeln!(out, ".tran {} {}", format_time(t.transition_fs()), format_time(end)).unwrap();
    let mut saved: Vec<String> = Vec::new();
    for chk in &s.checks {
        for b in 0..chk.width {
            let n = format!("v({})", node_name(&chk.port, chk.width, b));
            if !saved.contains(&n) {
                saved.push(n);
            }
        }
    }
    if !saved.is_empty() {
        writeln!(out, ".save {}", saved.join(" ")).unwrap();
    }
    writeln!(out, ".end").unwrap();
    Ok(EmittedTestbench {
        text: out,
        language: "spice".to_string(),
        entry: format!("{}_tb.sp", c.name()),
    })
}

/// Sampled node voltages; the first column is time in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformTable {
    pub signals: Vec<String>,
    pub times: Vec<f64>,
    /// `columns[k][row]` is the voltage of `signals[k]`.
    pub columns: Vec<Vec<f64>>,
}

impl WaveformTable {
    /// Parse CSV with a header row. Column names may be bare node names or
    /// wrapped as `v(node)`.
    pub fn from_csv(text: &str) -> Result<WaveformTable, SpiceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| SpiceError::Data(e.to_string()))?.clone();
        if headers.is_empty() {
            return Err(SpiceError::Data("no header".to_string()));
        }
        let signals: Vec<String> = headers
            .iter()
            .skip(1)
            .map(|h| {
                let l = h.to_ascii_lowercase();
                if l.starts_with("v(") && h.ends_with(')') {
                    h[2..h.len() - 1].to_string()
                } else {
                    h.to_string()
                }
            })
            .collect();
        let mut times = Vec::new();
        let mut columns = vec![Vec::new(); signals.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| SpiceError::Data(e.to_string()))?;
            let num = |k: usize| -> Result<f64, SpiceError> {
                rec.get(k)
                    .ok_or_else(|| SpiceError::Data(format!("row {row}: missing field {k}")))?
                    .parse::<f64>()
                    .map_err(|e| SpiceError::Data(format!("row {row}: {e}")))
            };
            let t = num(0)?;
            if times.last().is_some_and(|&prev| t < prev) {
                return Err(SpiceError::Data(format!("row {row}: time goes backwards")));
            }
            times.push(t);
            for (k, col) in columns.iter_mut().enumerate() {
                col.push(num(k + 1)?);
            }
        }
        if times.is_empty() {
            return Err(SpiceError::Data("no rows".to_string()));
        }
        Ok(WaveformTable {
            signals,
            times,
            columns,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for s in &self.signals {
            write!(out, ",v({s})").unwrap();
        }
        out.push('\n');
        for (r, t) in self.times.iter().enumerate() {
            write!(out, "{t:e}").unwrap();
            for col in &self.columns {
                write!(out, ",{}", col[r]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Linear interpolation of `signal` at `time`.
    pub fn sample(&self, signal: &str, time: f64) -> Result<f64, SpiceError> {
        let k = self
            .signals
            .iter()
            .position(|s| s == signal)
            .ok_or_else(|| SpiceError::MissingSignal(signal.to_string()))?;
        let (start, end) = (self.times[0], *self.times.last().unwrap());
        let tol = 1e-18;
        if time < start - tol || time > end + tol {
            return Err(SpiceError::OutOfRange { time, start, end });
        }
        let col = &self.columns[k];
        let i = self.times.partition_point(|&t| t <= time);
        if i == 0 {
            return Ok(col[0]);
        }
        if i >= self.times.len() {
            return Ok(*col.last().unwrap());
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (col[i - 1], col[i]);
        if t1 == t0 {
            return Ok(v1);
        }
        Ok(v0 + (v1 - v0) * (time - t0) / (t1 - t0))
    }
}

/// Check every expect against sampled data.
pub fn check_results(
    data: &WaveformTable,
    p: &ActionProgram,
    c: &CircuitDecl,
    t: &AnalogTiming,
) -> Result<TestReport, SpiceError> {
    let s = schedule(p, c, t)?;
    let mut report = TestReport::new("spice");
    report.actions_executed = p.actions.len() as u64;
    for chk in &s.checks {
        let time = to_seconds(chk.time_fs);
        let mut word = Some(BigUint::zero());
        for b in 0..chk.width {
            let node = node_name(&chk.port, chk.width, b);
            let v = data.sample(&node, time)?;
            let bit = if v >= t.voh_min {
                true
            } else if v <= t.vol_max {
                false
            } else {
                report.failures.push(Failure {
                    path: chk.path.clone(),
                    code: FailureCode::IndeterminateLevel,
                    signal: Some(node.clone()),
                    observed: Some(format!("{v}")),
                    expected: Some(format!("{}", u8::from(bits::bit(&chk.expected, b)))),
                    time: chk.window,
                    message: format!("{node} at {v} V is between {} V and {} V at {time:e} s", t.vol_max, t.voh_min),
                });
                word = None;
                continue;
            };
            if let Some(w) = word.as_mut() {
                if bit {
                    *w |= BigUint::from(1u8) << b as usize;
                }
            }
        }
        if let Some(w) = word {
            if w != chk.expected {
                report.failures.push(Failure {
                    path: chk.path.clone(),
                    code: FailureCode::LogicMismatch,
                    signal: Some(chk.port.clone()),
                    observed: Some(w.to_string()),
                    expected: Some(chk.expected.to_string()),
                    time: chk.window,
                    message: format!("expected {} == {}, observed {w} at {time:e} s", chk.port, chk.expected),
                });
            }
        }
    }
    Ok(report.finish())
}

/// Ideal waveform data for a program: the interpreter supplies port values,
/// levels are exactly 0 or vdd, and one row is recorded at the sample
/// instant of every window.
pub fn ideal_waveforms(p: &ActionProgram, model: &SimModel, t: &AnalogTiming) -> Result<WaveformTable, SpiceError> {
    let c = model.circuit();
    let s = schedule(p, c, t)?;
    let mut sim = Simulator::new(model);
    let mut signals = Vec::new();
    for port in c.ports() {
        for b in 0..port.width() {
            signals.push(node_name(&port.name, port.width(), b));
        }
    }
    let mut times = Vec::new();
    let mut columns = vec![Vec::new(); signals.len()];
    let mut record = |sim: &Simulator, window_start: u64| {
        times.push(to_seconds(window_start + t.settle_fs()));
        let mut k = 0;
        for (i, port) in c.ports().iter().enumerate() {
            let v = sim.read_port(i);
            for b in 0..port.width() {
                columns[k].push(if bits::bit(v, b) { t.vdd } else { 0.0 });
                k += 1;
            }
        }
    };
    let mut windows = s.windows.iter().copied();
    record(&sim, windows.next().unwrap());
    for a in &p.actions {
        match a {
            Action::Poke { target, value } => {
                let v = value.eval(&BTreeMap::new()).map_err(|e| SpiceError::Data(e.to_string()))?;
                let port = target.as_port().unwrap_or_default();
                if c.port(port).is_some_and(|(_, p)| p.ptype == PortType::Clock) {
                    continue;
                }
                sim.poke(port, v).map_err(|e| SpiceError::Data(e.to_string()))?;
            }
            Action::Eval => {
                sim.eval();
                record(&sim, windows.next().unwrap());
            }
            Action::Step { n } => {
                for _ in 0..*n {
                    sim.step_once();
                    record(&sim, windows.next().unwrap());
                }
            }
            _ => {}
        }
    }
    Ok(WaveformTable {
        signals,
        times,
        columns,
    })
}
