// SPDX-License-Identifier: Apache-2.0

//! `faultline` command-line driver.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use faultline::codegen::{emit_cxx, emit_sv, emit_verilog, EmitOptions, SvDialect};
use faultline::formal::{self, FormalOptions};
use faultline::random::{parse_seed, run_constrained_random, Strategy};
use faultline::spice::{check_results, emit_spice_tb, AnalogTiming, WaveformTable};
use faultline::{parse_netlist, validate_program, ActionProgram, CircuitDecl, RunOptions, SimModel, TestReport, Verdict};

#[derive(Parser)]
#[command(name = "faultline", version, about = "Run, emit and check hardware test programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a program and write a JSON report.
    Run(Opts),
    /// Write testbench, deck or SMT-LIB files for external tools.
    Emit(Opts),
    /// Parse and validate a netlist/program bundle.
    Validate(Bundle),
}

#[derive(Args)]
struct Bundle {
    /// Netlist JSON file.
    netlist: PathBuf,
    /// Action program JSON file.
    program: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Interp,
    Sv,
    Cxx,
    Formal,
    Random,
    SpiceEmit,
    SpiceCheck,
}

impl Target {
    fn name(self) -> &'static str {
        match self {
            Target::Interp => "interp",
            Target::Sv => "sv",
            Target::Cxx => "cxx",
            Target::Formal => "formal",
            Target::Random => "random",
            Target::SpiceEmit => "spice-emit",
            Target::SpiceCheck => "spice-check",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Rejection,
    Solver,
}

#[derive(Args)]
struct Opts {
    #[command(flatten)]
    bundle: Bundle,
    #[arg(long, value_enum, default_value = "interp")]
    target: Target,
    /// Built-in SV dialect name or a dialect config file.
    #[arg(long, default_value = "generic")]
    dialect: String,
    /// BMC unrolling depth.
    #[arg(long, default_value_t = 4)]
    bound: u32,
    /// Attempt a k-induction proof with this k after bmc.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Decimal, 0x-hex, or any string (hashed).
    #[arg(long, default_value = "0")]
    seed: String,
    #[arg(long, value_enum, default_value = "rejection")]
    strategy: StrategyArg,
    /// Analog timing config (TOML).
    #[arg(long)]
    timing: Option<PathBuf>,
    #[arg(long)]
    fail_fast: bool,
    /// Iteration guard for each `while` loop on the interpreter.
    #[arg(long, default_value_t = 1_000_000)]
    max_loop_iters: u64,
    /// Record a value-change trace in interpreter reports.
    #[arg(long)]
    trace: bool,
    /// Simulator results CSV for spice-check.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Path written into the deck's `.include` line.
    #[arg(long)]
    include: Option<String>,
    #[arg(long, env = "FAULTLINE_OUT", default_value = "faultline-out")]
    out: PathBuf,
}

fn load(b: &Bundle) -> Result<(CircuitDecl, ActionProgram)> {
    let text = fs::read_to_string(&b.netlist).with_context(|| format!("reading {}", b.netlist.display()))?;
    let c = parse_netlist(&text).with_context(|| format!("parsing {}", b.netlist.display()))?;
    let text = fs::read_to_string(&b.program).with_context(|| format!("reading {}", b.program.display()))?;
    let p = ActionProgram::deserialize(&text, &c).with_context(|| format!("parsing {}", b.program.display()))?;
    let diags = validate_program(&p, &c);
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        bail!("program does not validate:\n  {}", lines.join("\n  "));
    }
    Ok((c, p))
}

fn timing(o: &Opts) -> Result<AnalogTiming> {
    match &o.timing {
        None => Ok(AnalogTiming::default()),
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(AnalogTiming::from_config(&text)?)
        }
    }
}

fn dialect(name: &str) -> Result<SvDialect> {
    if let Some(d) = SvDialect::builtin(name) {
        return Ok(d);
    }
    let text = fs::read_to_string(name)
        .with_context(|| format!("`{name}` is neither a built-in dialect ({}) nor a readable file", SvDialect::builtin_names().join(", ")))?;
    Ok(SvDialect::from_config(&text)?)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn run(o: &Opts) -> Result<TestReport> {
    let (c, p) = load(&o.bundle)?;
    let report = match o.target {
        Target::Interp => {
            let model = SimModel::compile(&c)?;
            let opts = RunOptions {
                fail_fast: o.fail_fast,
                max_loop_iters: o.max_loop_iters,
                trace: o.trace,
            };
            model.run(&p, opts)?
        }
        Target::Formal => formal::check(&p, &c, FormalOptions { bound: o.bound, k: o.k })?,
        Target::Random => {
            let model = SimModel::compile(&c)?;
            let strategy = match o.strategy {
                StrategyArg::Rejection => Strategy::default(),
                StrategyArg::Solver => Strategy::Solver,
            };
            run_constrained_random(&p, &model, o.samples, parse_seed(&o.seed), strategy)?
        }
        Target::SpiceCheck => {
            let path = o.results.as_ref().ok_or_else(|| anyhow!("spice-check needs --results <csv>"))?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            check_results(&WaveformTable::from_csv(&text)?, &p, &c, &timing(o)?)?
        }
        Target::Sv | Target::Cxx | Target::SpiceEmit => {
            bail!("target `{}` only produces files; use `faultline emit`", o.target.name())
        }
    };
    let name = format!("{}_{}_report.json", c.name(), o.target.name());
    write(&o.out, &name, &(report.to_json() + "\n"))?;
    Ok(report)
}

fn emit(o: &Opts) -> Result<Vec<PathBuf>> {
    let (c, p) = load(&o.bundle)?;
    let opts = EmitOptions { fail_fast: o.fail_fast };
    let mut files = Vec::new();
    match o.target {
        Target::Sv | Target::Cxx => {
            let tb = if o.target == Target::Sv {
                emit_sv(&p, &c, &dialect(&o.dialect)?, opts)?
            } else {
                emit_cxx(&p, &c, opts)?
            };
            files.push(write(&o.out, &tb.entry, &tb.text)?);
            let dut = emit_verilog(&c)?;
            files.push(write(&o.out, &dut.entry, &dut.text)?);
        }
        Target::SpiceEmit => {
            let include = o.include.clone().unwrap_or_else(|| format!("{}.sp", c.name()));
            let tb = emit_spice_tb(&p, &c, &timing(o)?, &include)?;
            files.push(write(&o.out, &tb.entry, &tb.text)?);
        }
        Target::Formal => {
            let ts = formal::lower_prefix(&p, &c, &formal::encode_ts(&c)?)?;
            for (i, (_, text)) in formal::emit_smtlib(&ts, o.bound).iter().enumerate() {
                files.push(write(&o.out, &format!("{}_prop{i}.smt2", c.name()), text)?);
            }
        }
        Target::Interp | Target::Random | Target::SpiceCheck => {
            bail!("target `{}` has nothing to emit; use `faultline run`", o.target.name())
        }
    }
    Ok(files)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.cmd {
        Cmd::Run(o) => run(o).map(|r| {
            let status = r.status.as_deref().map(|s| format!(" ({s})")).unwrap_or_default();
            println!("{}: {:?}{status}", o.target.name(), r.verdict);
            match r.verdict {
                Verdict::Pass => 0,
                Verdict::Fail => 1,
                Verdict::Error => {
                    for e in &r.errors {
                        eprintln!("error: {e}");
                    }
                    2
                }
            }
        }),
        Cmd::Emit(o) => emit(o).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
            0
        }),
        Cmd::Validate(b) => load(b).map(|(c, p)| {
            println!("ok: {} ({} actions)", c.name(), p.actions.len());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
