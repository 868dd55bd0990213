//! The reference benchmark and the calibration it anchors.

use crate::config::Config;
use crate::isa::{assemble, RomImage};
use crate::machine::{Machine, MachineError, MachineOptions, RunOutcome};
use crate::power::{calibrate, ActivityTrace, CalibrationTargets, PowerConfig, PowerError};

pub const SOURCE: &str = include_str!("../assets/reference.asm");

/// Generous bound; the program parks itself long before this.
pub const MAX_CYCLES: u64 = 10_000;

pub fn image() -> RomImage {
    assemble(SOURCE).expect("reference program assembles").image
}

/// Runs the benchmark to its final self-loop.
pub fn run(options: MachineOptions) -> Result<(Machine, RunOutcome), MachineError> {
    let mut machine = Machine::with_options(image(), options);
    let outcome = machine.run(MAX_CYCLES, true)?;
    Ok((machine, outcome))
}

/// Module activity of a gated run under `options.policy`.
pub fn activity(options: MachineOptions) -> ActivityTrace {
    let (_, outcome) = run(MachineOptions {
        gating: true,
        ..options
    })
    .expect("reference program runs");
    ActivityTrace::from_records(&outcome.trace)
}

/// Fits capacitances so the benchmark hits the published operating point.
pub fn calibrate_reference(vdd: f64, vswing: f64) -> Result<PowerConfig, PowerError> {
    calibrate(
        &activity(MachineOptions::default()),
        CalibrationTargets::REFERENCE,
        vdd,
        vswing,
    )
}

/// Text of `assets/default.conf` as produced by a fresh calibration.
pub fn default_config_text() -> String {
    let base = Config::uncalibrated();
    let power = calibrate_reference(base.power.vdd, base.power.vswing).expect("reference targets are feasible");
    let cfg = Config { power, ..base };
    let mut out = String::from(
        "# Calibrated on the reference benchmark (assets/reference.asm) with the\n\
         # default gating policy. Regenerate with PEC_BLESS=1 cargo test -p pec-core default_conf.\n\
         #\n\
         # power.freq_mhz is the operating point implied by 273 mW at 3.62 mW/MHz;\n\
         # set osc.control_word to clock from the oscillator instead.\n",
    );
    out.push_str(&cfg.to_text());
    out
}
