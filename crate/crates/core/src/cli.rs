//! Command-line front end. `run` is the whole program minus process exit,
//! so it can be driven in-process.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::accelerator::{Accelerator, RunReport};
use crate::config::{Backend, SimConfig};
use crate::device::{self, IvSample, MemristorState};
use crate::error::{Error, Result};
use crate::gates::{self, GateReport};
use crate::keccak::{self, Variant};
use crate::metrics::{self, EnergyLedger, RunMetrics};
use crate::vectors::{self, Malformed};

/// Exit status for a run where every requested check passed.
pub const EXIT_OK: i32 = 0;
/// Exit status for a digest mismatch or failed gate check.
pub const EXIT_FAILED: i32 = 1;
/// Exit status for bad arguments, configuration or I/O.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "imc-sha3",
    version,
    about = "In-memory SHA3 accelerator simulator"
)]
pub struct Cli {
    /// TOML file of overrides applied on top of the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// sha3-256 or sha3-512.
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    /// logical or logical+analog.
    #[arg(long, global = true)]
    pub backend: Option<Backend>,
    /// Write a JSON report to this path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Record A and NA at every round boundary.
    #[arg(long, global = true)]
    pub debug_rounds: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hash a file, stdin (`-` or no argument) or a literal string.
    Hash {
        input: Option<PathBuf>,
        /// Hash this string instead of reading input.
        #[arg(long, short, conflicts_with = "input")]
        string: Option<String>,
        /// Treat the input as hex text.
        #[arg(long)]
        hex: bool,
        /// Write the cycle trace as CSV.
        #[arg(long)]
        trace_csv: Option<PathBuf>,
        /// Write the per-row energy ledger as CSV (needs the analog backend).
        #[arg(long)]
        energy_csv: Option<PathBuf>,
        /// Print cycle, area, throughput and comparison figures to stderr.
        #[arg(long)]
        metrics: bool,
    },
    /// Check every record of a known-answer file.
    Verify { file: PathBuf },
    /// Exhaustive and sampled truth-table checks of the analog gates.
    ValidateGates {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use the literal device parameter set instead of the calibrated one.
        #[arg(long)]
        literal_device: bool,
    },
    /// Drive one memristor with a waveform and write t,v,i,w samples as CSV.
    DeviceSweep {
        #[arg(long, value_enum, default_value_t = Waveform::Sine)]
        waveform: Waveform,
        #[arg(long, default_value_t = 1.2)]
        amplitude: f64,
        /// Sinusoid frequency in Hz.
        #[arg(long, default_value_t = 1e8)]
        frequency: f64,
        #[arg(long, default_value_t = 1e-11)]
        dt: f64,
        /// Sinusoid sample count.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Square-train samples per half period.
        #[arg(long, default_value_t = 100)]
        half_period: usize,
        #[arg(long, default_value_t = 4)]
        periods: usize,
        /// Initial state variable in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        initial_w: f64,
        #[arg(long)]
        literal_device: bool,
        /// Output path; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the comparison table with this simulator's row for one block.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Waveform {
    Sine,
    Zero,
    Square,
}

#[derive(Debug, Serialize)]
struct HashReport<'a> {
    run: &'a RunReport,
    metrics: &'a RunMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordFailure {
    pub line: usize,
    pub len_bits: usize,
    pub expected: String,
    pub accelerator: String,
    pub reference: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub file: String,
    pub records: usize,
    pub passed: usize,
    pub failures: Vec<RecordFailure>,
    pub malformed: Vec<Malformed>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.malformed.is_empty()
    }
}

/// Checks every record of a known-answer text against both the accelerator
/// and the reference. The variant of each record comes from `forced`, or
/// else from its digest length, or else from the accelerator's config.
pub fn verify_text(
    acc: &Accelerator,
    text: &str,
    forced: Option<Variant>,
    name: &str,
) -> Result<VerifyReport> {
    let kat = vectors::parse_kat(text);
    let fallback = acc.config().variant;
    let check = |r: &vectors::KatRecord| -> Result<Option<RecordFailure>> {
        let variant = forced.unwrap_or(match r.md.len() {
            32 => Variant::Sha3_256,
            64 => Variant::Sha3_512,
            _ => fallback,
        });
        let (got, _) = acc.hash_with(&r.msg, variant)?;
        let reference = keccak::sha3_digest(&r.msg, variant);
        Ok((got != r.md || reference != r.md).then(|| RecordFailure {
            line: r.line,
            len_bits: r.len_bits,
            expected: hex::encode(&r.md),
            accelerator: hex::encode(&got),
            reference: hex::encode(&reference),
        }))
    };

    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(16);
    let chunk = kat.records.len().div_ceil(threads).max(1);
    let results: Vec<Result<Vec<RecordFailure>>> = std::thread::scope(|s| {
        let handles: Vec<_> = kat
            .records
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().filter_map(|r| check(r).transpose()).collect()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verify worker panicked"))
            .collect()
    });
    let mut failures = Vec::new();
    for r in results {
        failures.extend(r?);
    }
    Ok(VerifyReport {
        file: name.to_string(),
        records: kat.records.len(),
        passed: kat.records.len() - failures.len(),
        failures,
        malformed: kat.malformed,
    })
}

/// Samples of the named waveform at spacing `dt`.
pub fn waveform_samples(
    waveform: Waveform,
    amplitude: f64,
    frequency: f64,
    dt: f64,
    samples: usize,
    half_period: usize,
    periods: usize,
) -> Vec<f64> {
    match waveform {
        Waveform::Sine => device::sinusoid(amplitude, frequency, dt, samples),
        Waveform::Zero => device::sinusoid(0.0, frequency, dt, samples),
        Waveform::Square => device::square_train(amplitude, half_period, periods),
    }
}

pub fn sweep_csv(samples: &[IvSample]) -> String {
    let mut out = String::from("t,v,i,w\n");
    for s in samples {
        out.push_str(&format!("{:e},{:e},{:e},{:e}\n", s.t, s.v, s.i, s.w));
    }
    out
}

fn load_config(cli: &Cli) -> Result<SimConfig> {
    let mut config = match &cli.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(v) = cli.variant {
        config.variant = v;
    }
    if let Some(b) = cli.backend {
        config.backend = b;
    }
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

fn read_input(input: &Option<PathBuf>, stdin: &mut dyn Read) -> Result<Vec<u8>> {
    match input {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
        }
        _ => {
            let mut buf = Vec::new();
            stdin.read_to_end(&mut buf)?;
            Ok(buf)
        }
    }
}

fn execute(
    cli: &Cli,
    stdin: &mut dyn Read,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let config = load_config(cli)?;
    let io = |e: std::io::Error| Error::Io(e.to_string());
    match &cli.command {
        Command::Hash {
            input,
            string,
            hex,
            trace_csv,
            energy_csv,
            metrics,
        } => {
            let raw = match string {
                Some(s) => s.clone().into_bytes(),
                None => read_input(input, stdin)?,
            };
            let message = if *hex {
                let text = String::from_utf8_lossy(&raw);
                let text: String = text.split_whitespace().collect();
                hex::decode(text).map_err(|e| Error::Parse(format!("input is not hex: {e}")))?
            } else {
                raw
            };
            if energy_csv.is_some() && config.backend != Backend::LogicalAnalog {
                return Err(Error::InvalidConfig(
                    "--energy-csv needs --backend logical+analog".into(),
                ));
            }
            let acc = Accelerator::new(config.clone())?.with_debug_rounds(cli.debug_rounds);
            let (digest, run) = acc.hash_message(&message)?;
            let run_metrics = RunMetrics::new(&config, &run)?;
            writeln!(out, "{}", hex::encode(&digest)).map_err(io)?;
            if !run.matches_reference {
                writeln!(
                    err,
                    "error: digest differs from the reference implementation"
                )
                .map_err(io)?;
            }
            if *metrics {
                let cs = &run_metrics.control_storage_per_block;
                writeln!(
                    err,
                    "blocks: {}  total cycles: {}",
                    run.blocks, run.total_cycles
                )
                .map_err(io)?;
                writeln!(
                    err,
                    "cycles per block: {}  control storage: {} bits ({:.3} KB)",
                    run_metrics.cycles_per_block, cs.bits, cs.kb
                )
                .map_err(io)?;
                writeln!(
                    err,
                    "throughput: {:.4} Gbps  area: {:.3} KB crossbar + {:.3} KB gates/routing",
                    run_metrics.throughput_bps / 1e9,
                    run_metrics.crossbar_kb,
                    run_metrics.gates_and_routing_kb
                )
                .map_err(io)?;
                if let Some(e) = &run_metrics.energy {
                    write!(err, "{}", e.to_csv(Some(&config.energy_reference))).map_err(io)?;
                }
                let rows = metrics::comparison_table(&config, Some(&run_metrics));
                write!(err, "{}", metrics::render_comparison(&rows)).map_err(io)?;
            }
            if let Some(p) = trace_csv {
                write_file(p, &run.trace.to_csv())?;
            }
            if let Some(p) = energy_csv {
                let ledger = match &run_metrics.energy {
                    Some(l) => l.clone(),
                    None => EnergyLedger::from_analog(
                        run.analog
                            .as_ref()
                            .ok_or_else(|| Error::MissingTrace("analog".into()))?,
                    )?,
                };
                write_file(p, &ledger.to_csv(Some(&config.energy_reference)))?;
            }
            if let Some(p) = &cli.report {
                write_json(
                    p,
                    &HashReport {
                        run: &run,
                        metrics: &run_metrics,
                    },
                )?;
            }
            Ok(if run.matches_reference {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
        Command::Verify { file } => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| Error::Io(format!("{}: {e}", file.display())))?;
            let acc = Accelerator::new(config)?;
            let report = verify_text(&acc, &text, cli.variant, &file.display().to_string())?;
            for m in &report.malformed {
                writeln!(err, "line {}: malformed record: {}", m.line, m.reason).map_err(io)?;
            }
            for f in &report.failures {
                writeln!(
                    out,
                    "line {}: FAIL len={} expected={} accelerator={} reference={}",
                    f.line, f.len_bits, f.expected, f.accelerator, f.reference
                )
                .map_err(io)?;
            }
            if report.records == 0 && report.malformed.is_empty() {
                writeln!(err, "warning: {} contains no records", file.display()).map_err(io)?;
            }
            writeln!(
                out,
                "{}/{} records passed, {} failed, {} malformed",
                report.passed,
                report.records,
                report.failures.len(),
                report.malformed.len()
            )
            .map_err(io)?;
            if let Some(p) = &cli.report {
                write_json(p, &report)?;
            }
            Ok(if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
        Command::ValidateGates {
            seed,
            literal_device,
        } => {
            let config = if *literal_device {
                config.with_literal_device()
            } else {
                config
            };
            config.validate()?;
            let reports: Vec<GateReport> = gates::validate_all(&config.electrical(), *seed)?;
            writeln!(
                out,
                "{:<14} {:>6} {:>10} {:>12} {:>12} {:>9} {:>8}",
                "gate", "cases", "mismatch", "max drift", "max i_rev", "disturb", "result"
            )
            .map_err(io)?;
            for r in &reports {
                writeln!(
                    out,
                    "{:<14} {:>6} {:>10} {:>12.3e} {:>12.3e} {:>9} {:>8}",
                    r.kind.name(),
                    r.domain,
                    r.mismatches,
                    r.max_read_drift,
                    r.max_reverse_current,
                    r.disturb_violations,
                    if r.passed { "pass" } else { "FAIL" }
                )
                .map_err(io)?;
            }
            if let Some(p) = &cli.report {
                write_json(p, &reports)?;
            }
            Ok(if reports.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
        Command::DeviceSweep {
            waveform,
            amplitude,
            frequency,
            dt,
            samples,
            half_period,
            periods,
            initial_w,
            literal_device,
            out: path,
        } => {
            let params = if *literal_device {
                config.literal_device
            } else {
                config.device
            };
            params.validate()?;
            if dt.is_nan() || *dt <= 0.0 {
                return Err(Error::InvalidConfig("dt must be positive".into()));
            }
            let wave = waveform_samples(
                *waveform,
                *amplitude,
                *frequency,
                *dt,
                *samples,
                *half_period,
                *periods,
            );
            let sweep = device::iv_sweep(&params, MemristorState::new(*initial_w), &wave, *dt);
            let csv = sweep_csv(&sweep);
            match path {
                Some(p) => write_file(p, &csv)?,
                None => out.write_all(csv.as_bytes()).map_err(io)?,
            }
            Ok(EXIT_OK)
        }
        Command::Compare => {
            let acc = Accelerator::new(config.clone())?;
            let block = vec![0u8; config.variant.rate_bytes() - 1];
            let (_, run) = acc.hash_message(&block)?;
            let m = RunMetrics::new(&config, &run)?;
            let rows = metrics::comparison_table(&config, Some(&m));
            write!(out, "{}", metrics::render_comparison(&rows)).map_err(io)?;
            if let Some(p) = &cli.report {
                write_json(p, &rows)?;
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_ERROR;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    match execute(&cli, stdin, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
