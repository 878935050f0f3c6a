use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ratchetlab::equivalence::{
    forward_epsilon_machine, merge, predictive_partition, retrodictive_partition, reverse_epsilon_machine,
};
use ratchetlab::machine::{time_reverse, word_distribution, Machine, Word};
use ratchetlab::qmachine::{build_qmachine, build_reverse_qmachine, PhaseTable, QMachine};
use ratchetlab::quantum::{dpi_saturation_check, DensityOperator, KrausChannel};
use ratchetlab::report::{analyze, quantum_section, render_quantum_text, render_text, AnalysisOptions, QuantumSection};
use ratchetlab::{Error, Limits};

#[derive(Parser)]
#[command(name = "ratchetlab", version, about = "Thermodynamic analysis of hidden Markov generators and their quantum implementations")]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for randomized numerics.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Temperature in kelvin; text output then also shows joules.
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum MergeMode {
    Retrodictive,
    Predictive,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmMode {
    Forward,
    Reverse,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a machine and run the full classical and quantum analysis.
    Analyze {
        path: PathBuf,
        #[arg(long, default_value_t = 6)]
        t_max: usize,
        /// Word length for the quantum theorem cross-checks.
        #[arg(long, default_value_t = 4)]
        t_check: usize,
        /// Directory for dissipation traces as CSV.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a forward (or reverse) q-machine from an epsilon-machine.
    Qmachine {
        path: PathBuf,
        #[arg(long)]
        reverse: bool,
        /// JSON phase table indexed [symbol][state].
        #[arg(long)]
        phases: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        t_max: usize,
        #[arg(long, default_value_t = 4)]
        t_check: usize,
        /// Where to write the q-machine artifact.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge states by retrodictive or predictive equivalence.
    Merge {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: MergeMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-reverse a machine.
    Reverse {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List words with nonzero probability as CSV.
    Words {
        path: PathBuf,
        #[arg(long)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the forward or reverse epsilon-machine.
    Em {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: EmMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check saturation of the data processing inequality and Petz recovery.
    PetzCheck {
        /// JSON object with `rho`, `sigma` and `kraus`.
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PetzInput {
    rho: DensityOperator,
    sigma: DensityOperator,
    kraus: KrausChannel,
}

#[derive(Serialize)]
struct QMachineOutput<'a> {
    qmachine: &'a QMachine,
    report: &'a QuantumSection,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn load_machine(path: &Path) -> Result<(Machine, String), Failure> {
    let text = read(path)?;
    let machine = Machine::from_json(&text).map_err(|e| {
        let f = Failure::from(e);
        Failure { code: f.code, message: format!("{}: {}", path.display(), f.message) }
    })?;
    Ok((machine, text))
}

fn emit(out: Option<&Path>, content: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, content).map_err(|e| Failure { code: 2, message: format!("{}: {e}", p.display()) }),
        None => {
            let mut stdout = io::stdout().lock();
            let newline = if content.ends_with('\n') { "" } else { "\n" };
            match stdout.write_all(content.as_bytes()).and_then(|_| stdout.write_all(newline.as_bytes())) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::from(e).into()),
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Error::from(e).into())
}

fn run(cli: Cli) -> CliResult {
    let limits = Limits::from_env();
    match cli.command {
        Command::Analyze { path, t_max, t_check, csv_dir, out } => {
            let (machine, text) = load_machine(&path)?;
            let options = AnalysisOptions { t_max, t_check, seed: cli.seed, limits };
            let report = analyze(&machine, text.as_bytes(), &options);
            let rendered = match cli.format {
                Format::Json => to_json(&report)?,
                Format::Text => render_text(&report, cli.temperature),
            };
            emit(out.as_deref(), &rendered)?;
            if let Some(dir) = csv_dir {
                fs::create_dir_all(&dir).map_err(Error::from)?;
                let traces = [
                    ("classical", report.classical.as_ref().and_then(|s| s.computed()).map(|c| &c.dissipation)),
                    ("forward_quantum", report.forward_quantum.as_ref().and_then(|s| s.computed()).map(|q| &q.dissipation)),
                    ("reverse_quantum", report.reverse_quantum.as_ref().and_then(|s| s.computed()).map(|q| &q.dissipation)),
                ];
                for (name, trace) in traces {
                    if let Some(trace) = trace {
                        fs::write(dir.join(format!("{name}.csv")), trace.to_csv()?).map_err(Error::from)?;
                    }
                }
            }
            if !report.is_valid() {
                return Err(Failure { code: 2, message: format!("{}: machine failed validation", path.display()) });
            }
            Ok(())
        }
        Command::Qmachine { path, reverse, phases, t_max, t_check, out } => {
            let (machine, _) = load_machine(&path)?;
            let phases = match phases {
                Some(p) => serde_json::from_str::<PhaseTable>(&read(&p)?)
                    .map_err(|e| Failure { code: 2, message: format!("{}: {e}", p.display()) })?,
                None => PhaseTable::zeros(machine.num_symbols(), machine.num_states()),
            };
            let qm = if reverse {
                build_reverse_qmachine(&machine, &phases)?
            } else {
                build_qmachine(&machine, &phases)?
            };
            let options = AnalysisOptions { t_max, t_check, seed: cli.seed, limits };
            let section = quantum_section(&qm, &options)?;
            match out {
                Some(p) => {
                    emit(Some(&p), &qm.to_json())?;
                    let rendered = match cli.format {
                        Format::Json => to_json(&section)?,
                        Format::Text => render_quantum_text(qm_title(reverse), &section, cli.temperature),
                    };
                    emit(None, &rendered)
                }
                None => match cli.format {
                    Format::Json => emit(None, &to_json(&QMachineOutput { qmachine: &qm, report: &section })?),
                    Format::Text => emit(None, &render_quantum_text(qm_title(reverse), &section, cli.temperature)),
                },
            }
        }
        Command::Merge { path, mode, out } => {
            let (machine, _) = load_machine(&path)?;
            let partition = match mode {
                MergeMode::Retrodictive => retrodictive_partition(&machine)?,
                MergeMode::Predictive => predictive_partition(&machine)?,
            };
            emit(out.as_deref(), &merge(&machine, &partition)?.to_json())
        }
        Command::Reverse { path, out } => {
            let (machine, _) = load_machine(&path)?;
            emit(out.as_deref(), &time_reverse(&machine)?.to_json())
        }
        Command::Words { path, max_len, out } => {
            let (machine, _) = load_machine(&path)?;
            let mut writer = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure { code: 1, message: e.to_string() };
            writer.write_record(["length", "word", "probability"]).map_err(csv_err)?;
            for len in 1..=max_len {
                let probs = word_distribution(&machine, len, &limits)?;
                for (index, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        let word = Word::from_index(index, len, machine.num_symbols());
                        writer
                            .write_record([len.to_string(), machine.format_word(&word), format!("{p:e}")])
                            .map_err(csv_err)?;
                    }
                }
            }
            let bytes = writer.into_inner().map_err(|e| Failure { code: 1, message: e.to_string() })?;
            emit(out.as_deref(), &String::from_utf8_lossy(&bytes))
        }
        Command::Em { path, mode, out } => {
            let (machine, _) = load_machine(&path)?;
            let em = match mode {
                EmMode::Forward => forward_epsilon_machine(&machine, &limits)?,
                EmMode::Reverse => reverse_epsilon_machine(&machine, &limits)?,
            };
            emit(out.as_deref(), &em.to_json())
        }
        Command::PetzCheck { path, out } => {
            let input: PetzInput = serde_json::from_str(&read(&path)?)
                .map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })?;
            let check = dpi_saturation_check(&input.rho, &input.sigma, &input.kraus)?;
            emit(out.as_deref(), &to_json(&check)?)
        }
    }
}

fn qm_title(reverse: bool) -> &'static str {
    if reverse {
        "reverse q-machine"
    } else {
        "forward q-machine"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
