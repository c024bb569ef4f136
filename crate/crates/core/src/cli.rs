//! Command surface of the `vesicle` binary.
//!
//! Exit codes: 0 on success, 1 when `compare` finds a mismatch, 2 on usage
//! errors and malformed input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::constructions::{
    compare_machine, compare_system, compile_pbrm_to_pv_sequ, compile_rm_to_pv_smax,
    compile_rm_to_uptpv, compile_tpv_to_pbrm, Comparison, Construction,
};
use crate::dot::emit_dot;
use crate::ptpv::{ptpv_enumerate, ptpv_enumerate_traced};
use crate::regmach::machine_enumerate;
use crate::search::{ResultSet, SearchBudget};
use crate::text::{parse_machine, parse_system, print_machine, print_ptpv, print_tpv, SystemFile};
use crate::tpv::{tpv_enumerate, tpv_enumerate_traced, DerivationMode, OutputStrategy};
use crate::trace::{render_ptpv_trace, render_tpv_trace};

#[derive(Parser, Debug)]
#[command(
    name = "vesicle",
    version,
    about = "Vesicle systems, register machines and the compilers between them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate the vectors a register machine generates.
    RunMachine {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        max_steps: u64,
        /// Bound on the register sum.
        #[arg(long)]
        max_sum: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate the vectors a (polarized) vesicle system generates.
    RunSystem {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum)]
        strategy: Strategy,
        #[arg(long)]
        max_steps: u64,
        /// Bound on the multiset size.
        #[arg(long)]
        max_size: u64,
        /// Print one witness derivation per result.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Translate a machine into a system, or a system into a machine (thm4).
    Compile {
        #[arg(long)]
        construction: Construction,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Output strategy the system is built for (thm1, thm2).
        #[arg(long, value_enum)]
        strategy: Option<Strategy>,
    },
    /// Compile and check that both sides generate the same vectors.
    Compare {
        #[arg(long)]
        construction: Construction,
        /// Machine source (thm1, thm2, thm5).
        #[arg(long, required_unless_present = "system")]
        machine: Option<PathBuf>,
        /// System source (thm4).
        #[arg(long, conflicts_with = "machine")]
        system: Option<PathBuf>,
        /// Machine-side step budget (thm1, thm2, thm5).
        #[arg(long, default_value_t = 20)]
        machine_steps: u64,
        /// Machine-side register-sum budget (thm1, thm2, thm5).
        #[arg(long, default_value_t = 32)]
        machine_sum: u64,
        /// Step budget for both runs (thm4).
        #[arg(long, default_value_t = 1000)]
        max_steps: u64,
        /// Size budget for both runs (thm4).
        #[arg(long, default_value_t = 64)]
        max_size: u64,
        #[arg(long, value_enum)]
        strategy: Option<Strategy>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the communication graph of a system.
    Graph {
        #[arg(long)]
        system: PathBuf,
        /// Graphviz output (the only format).
        #[arg(long)]
        dot: bool,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Common {
    /// Visited-state cap.
    #[arg(long, default_value_t = 1_000_000)]
    max_states: u64,
    /// Worker threads used to expand each search layer.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequ,
    Smax,
}

impl From<Mode> for DerivationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Sequ => DerivationMode::Sequ,
            Mode::Smax => DerivationMode::Smax,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Halt,
    Term,
    HaltTerm,
}

impl From<Strategy> for OutputStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Halt => OutputStrategy::Halt,
            Strategy::Term => OutputStrategy::Term,
            Strategy::HaltTerm => OutputStrategy::HaltTerm,
        }
    }
}

/// Failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn budget(steps: u64, size: u64, common: &Common) -> Result<SearchBudget, Failure> {
    SearchBudget::new(steps, size, common.max_states).map_err(|e| usage(e.to_string()))
}

fn load_machine(path: &Path) -> Result<crate::regmach::MachineProgram, Failure> {
    parse_machine(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<SystemFile, Failure> {
    parse_system(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| usage(e.to_string()))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::RunMachine {
            program,
            max_steps,
            max_sum,
            common,
        } => {
            let p = load_machine(&program)?;
            let results =
                machine_enumerate(&p, &budget(max_steps, max_sum, &common)?, common.workers);
            emit(out, &results.render())?;
        }
        Command::RunSystem {
            system,
            mode,
            strategy,
            max_steps,
            max_size,
            trace,
            common,
        } => {
            let file = load_system(&system)?;
            let b = budget(max_steps, max_size, &common)?;
            let (mode, strategy) = (mode.into(), strategy.into());
            let (results, traces) = match (&file, trace) {
                (SystemFile::Plain(sys), false) => (
                    tpv_enumerate(sys, mode, strategy, &b, common.workers),
                    Vec::new(),
                ),
                (SystemFile::Polarized(sys), false) => (
                    ptpv_enumerate(sys, mode, strategy, &b, common.workers),
                    Vec::new(),
                ),
                (SystemFile::Plain(sys), true) => {
                    let (results, witnesses) =
                        tpv_enumerate_traced(sys, mode, strategy, &b, common.workers);
                    let rendered = witnesses
                        .iter()
                        .map(|(v, path)| render_tpv_trace(sys, mode, path).map(|t| (v.clone(), t)))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| Failure {
                            code: 1,
                            message: e.to_string(),
                        })?;
                    (results, rendered)
                }
                (SystemFile::Polarized(sys), true) => {
                    let (results, witnesses) =
                        ptpv_enumerate_traced(sys, mode, strategy, &b, common.workers);
                    let rendered = witnesses
                        .iter()
                        .map(|(v, path)| render_ptpv_trace(sys, mode, path).map(|t| (v.clone(), t)))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| Failure {
                            code: 1,
                            message: e.to_string(),
                        })?;
                    (results, rendered)
                }
            };
            emit(out, &results.render())?;
            for (v, t) in traces {
                let v: Vec<String> = v.iter().map(u64::to_string).collect();
                emit(out, &format!("# trace: {}\n{t}", v.join(" ")))?;
            }
        }
        Command::Compile {
            construction,
            input,
            out: path,
            strategy,
        } => {
            let strategy = strategy.map_or(construction.default_strategy(), Into::into);
            let compile_error = |e: crate::constructions::CompileError| usage(e.to_string());
            let text = match construction {
                Construction::Thm1 => print_tpv(
                    &compile_rm_to_pv_smax(&load_machine(&input)?, strategy)
                        .map_err(compile_error)?,
                ),
                Construction::Thm2 => print_tpv(
                    &compile_pbrm_to_pv_sequ(&load_machine(&input)?, strategy)
                        .map_err(compile_error)?,
                ),
                Construction::Thm5 => {
                    print_ptpv(&compile_rm_to_uptpv(&load_machine(&input)?).map_err(compile_error)?)
                }
                Construction::Thm4 => match load_system(&input)? {
                    SystemFile::Plain(sys) => {
                        print_machine(&compile_tpv_to_pbrm(&sys).map_err(compile_error)?)
                    }
                    SystemFile::Polarized(_) => {
                        return Err(usage("thm4 takes a system without polarizations"))
                    }
                },
            };
            write_file(&path, &text)?;
        }
        Command::Compare {
            construction,
            machine,
            system,
            machine_steps,
            machine_sum,
            max_steps,
            max_size,
            strategy,
            common,
        } => {
            let cmp = match construction {
                Construction::Thm4 => {
                    let path =
                        system.ok_or_else(|| usage("thm4 compares a system: pass --system"))?;
                    let SystemFile::Plain(sys) = load_system(&path)? else {
                        return Err(usage("thm4 takes a system without polarizations"));
                    };
                    compare_system(&sys, &budget(max_steps, max_size, &common)?, common.workers)
                }
                _ => {
                    let path = machine.ok_or_else(|| {
                        usage(format!("{construction} compares a machine: pass --machine"))
                    })?;
                    let p = load_machine(&path)?;
                    let b = budget(machine_steps, machine_sum, &common)?;
                    compare_machine(
                        construction,
                        &p,
                        strategy.map(Into::into),
                        &b,
                        common.workers,
                    )
                }
            }
            .map_err(|e| usage(e.to_string()))?;
            emit(out, &report(&cmp))?;
            return Ok(if cmp.agrees() { 0 } else { 1 });
        }
        Command::Graph { system, dot: _ } => {
            let file = load_system(&system)?;
            emit(out, &emit_dot(&file))?;
        }
    }
    Ok(0)
}

fn summary(name: &str, r: &ResultSet) -> String {
    format!(
        "# {name}: {} results, complete: {}\n",
        r.len(),
        r.complete()
    )
}

fn vector(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

/// Human-readable comparison report; mismatches list the symmetric difference.
pub fn report(cmp: &Comparison) -> String {
    let b = &cmp.system_budget;
    let mut out = format!("# construction: {}\n", cmp.construction);
    out.push_str(&format!(
        "# system budget: max_steps {} max_size {} max_states {}\n",
        b.max_steps, b.max_state_size, b.max_states
    ));
    out.push_str(&summary("reference", &cmp.reference));
    out.push_str(&summary("expected", &cmp.expected));
    out.push_str(&summary("system", &cmp.system));
    for v in &cmp.system.vectors {
        out.push_str(&vector(v));
        out.push('\n');
    }
    for v in cmp.missing() {
        out.push_str(&format!("missing: {}\n", vector(&v)));
    }
    for v in cmp.unexpected() {
        out.push_str(&format!("unexpected: {}\n", vector(&v)));
    }
    out.push_str(if cmp.agrees() {
        "equal\n"
    } else {
        "mismatch\n"
    });
    out
}
