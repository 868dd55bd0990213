//! `pec`: assemble, disassemble, run and calibrate programs for the
//! controller simulator.
//!
//! Exit codes: 0 success, 1 input/output or assembly error, 2 illegal opcode,
//! 3 peripheral overflow, 64 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pec::config::{parse_injections, Config};
use pec::isa::{assemble, disassemble, RomImage};
use pec::machine::{CycleRecord, Machine, MachineError, StopReason};
use pec::peripherals::IoEvent;
use pec::power::{calibrate, estimate, ActivityTrace, CalibrationTargets};

#[derive(Parser)]
#[command(
    name = "pec",
    version,
    about = "Cycle-level simulator of a 16-bit embedded controller"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a source file into a 256-line hex ROM image.
    Asm {
        source: PathBuf,
        /// Output image; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Disassemble a hex ROM image to standard output.
    Disasm { image: PathBuf },
    /// Simulate a program and report its power.
    Run(RunArgs),
    /// Fit capacitances so a program reproduces target power figures.
    Calibrate(CalibrateArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// ROM image (`.hex`) or assembly source (`.asm`).
    #[arg(long)]
    rom: PathBuf,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_cycles: u64,
    /// Keep running after the program branches to itself.
    #[arg(long)]
    no_halt: bool,
    /// Clock every module on every cycle.
    #[arg(long)]
    no_gating: bool,
    /// Oscillator control word; overrides the configured clock.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=15))]
    osc: Option<u8>,
    /// Settings layered over the calibrated defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-cycle module enables as CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Power report; CSV when the name ends in `.csv`, text otherwise.
    #[arg(long)]
    report_out: Option<PathBuf>,
    /// Peripheral events as CSV.
    #[arg(long)]
    events_out: Option<PathBuf>,
    /// Stimulus script of `<cycle> port1 <hex>` style lines.
    #[arg(long)]
    inject: Option<PathBuf>,
    /// Leave the generation time out of the text report header.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(clap::Args)]
struct CalibrateArgs {
    /// Program to calibrate on; the built-in reference benchmark by default.
    #[arg(long)]
    rom: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = CalibrationTargets::REFERENCE.ungated_mw)]
    ungated_mw: f64,
    #[arg(long, default_value_t = CalibrationTargets::REFERENCE.gated_mw)]
    gated_mw: f64,
    #[arg(long, default_value_t = CalibrationTargets::REFERENCE.mw_per_mhz)]
    mw_per_mhz: f64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_cycles: u64,
    /// Output config; standard output when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    IllegalOpcode(String),
    Peripheral(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::IllegalOpcode(_) => 2,
            Failure::Peripheral(_) => 3,
            Failure::Usage(_) => 64,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::IllegalOpcode(m) | Failure::Peripheral(m) | Failure::Usage(m) => m,
        }
    }
}

impl From<MachineError> for Failure {
    fn from(e: MachineError) -> Self {
        match e {
            MachineError::IllegalOpcode { .. } => Failure::IllegalOpcode(e.to_string()),
            MachineError::Peripheral { .. } => Failure::Peripheral(e.to_string()),
            MachineError::NoCycles => Failure::Usage(e.to_string()),
            MachineError::Idle => Failure::Input(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Asm { source, out } => cmd_asm(&source, out.as_deref()),
        Command::Disasm { image } => cmd_disasm(&image),
        Command::Run(args) => cmd_run(&args),
        Command::Calibrate(args) => cmd_calibrate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_rom(path: &Path) -> Result<RomImage> {
    let text = read(path)?;
    let input = |e: &dyn std::fmt::Display| Failure::Input(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|ext| ext == "asm") {
        assemble(&text).map(|a| a.image).map_err(|e| input(&e))
    } else {
        RomImage::from_hex(&text).map_err(|e| input(&e))
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let mut cfg = Config::default();
    if let Some(path) = path {
        cfg.apply(&read(path)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(cfg)
}

fn cmd_asm(source: &Path, out: Option<&Path>) -> Result<()> {
    let text = read(source)?;
    let asm = assemble(&text).map_err(|e| Failure::Input(format!("{}: {e}", source.display())))?;
    emit(out, &asm.image.to_hex())
}

fn cmd_disasm(image: &Path) -> Result<()> {
    let text = read(image)?;
    let rom = RomImage::from_hex(&text).map_err(|e| Failure::Input(format!("{}: {e}", image.display())))?;
    print!("{}", disassemble(&rom));
    Ok(())
}

fn csv<T>(header: &str, rows: &[T], row: impl Fn(&T) -> String) -> String {
    let mut out = String::with_capacity(rows.len() * 40);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(&row(r));
        out.push('\n');
    }
    out
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let rom = load_rom(&args.rom)?;
    let mut cfg = load_config(args.config.as_deref())?;
    if args.osc.is_some() {
        cfg.osc_control_word = args.osc;
    }
    let injections = match &args.inject {
        Some(path) => parse_injections(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        None => Vec::new(),
    };

    let mut machine = Machine::with_options(rom, cfg.machine_options(!args.no_gating));
    let outcome = machine.run_with(args.max_cycles, !args.no_halt, &injections)?;
    let trace = ActivityTrace::from_records(&outcome.trace);
    let report = estimate(&trace, &cfg.power_config()).map_err(|e| Failure::Input(e.to_string()))?;

    if let Some(path) = &args.trace_out {
        write(
            path,
            &csv(CycleRecord::CSV_HEADER, &outcome.trace, CycleRecord::csv_row),
        )?;
    }
    if let Some(path) = &args.events_out {
        write(path, &csv(IoEvent::CSV_HEADER, machine.events(), IoEvent::csv_row))?;
    }
    if let Some(path) = &args.report_out {
        let text = if path.extension().is_some_and(|ext| ext == "csv") {
            report.to_csv()
        } else {
            let mut header = format!("# pec power report: {}\n", args.rom.display());
            if !args.no_timestamp {
                header.push_str(&format!("# generated {}\n", chrono::Local::now().to_rfc3339()));
            }
            header + &report.to_text() + &report.summary_line() + "\n"
        };
        write(path, &text)?;
    }

    let stop = match outcome.stop {
        StopReason::SelfLoop => "self-loop",
        StopReason::CycleLimit => "cycle limit",
    };
    let state = machine.state();
    println!(
        "stopped      {stop} at pc {:#04X} after {} cycles",
        state.pc, state.cycles
    );
    print!("{}", report.to_text());
    println!("{}", report.summary_line());
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let base = load_config(args.config.as_deref())?;
    let rom = match &args.rom {
        Some(path) => load_rom(path)?,
        None => pec::reference::image(),
    };
    let mut machine = Machine::with_options(rom, base.machine_options(true));
    let outcome = machine.run(args.max_cycles, true)?;
    let targets = CalibrationTargets {
        ungated_mw: args.ungated_mw,
        gated_mw: args.gated_mw,
        mw_per_mhz: args.mw_per_mhz,
    };
    let power = calibrate(
        &ActivityTrace::from_records(&outcome.trace),
        targets,
        base.power.vdd,
        base.power.vswing,
    )
    .map_err(|e| Failure::Input(e.to_string()))?;
    let cfg = Config { power, ..base };
    emit(args.out.as_deref(), &cfg.to_text())
}
