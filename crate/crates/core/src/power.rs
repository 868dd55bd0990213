//! Activity-based dynamic power.
//!
//! Each clocked block charges and discharges its switched capacitance once
//! per cycle it receives a clock, so its average power is
//!
//! ```text
//! P(m) = f * C(m) * Vdd * Vswing * duty(m)
//! ```
//!
//! where `duty(m)` is the fraction of cycles in which the block's clock was
//! enabled. The control path is never gated and always has duty 1. The
//! ungated baseline is the same sum with every duty set to 1.
//!
//! Per-block capacitances are not measured; [`calibrate`] derives them from a
//! reference trace and target totals.

use std::fmt::{self, Write as _};

use crate::control::{Module, ModuleSet};
use crate::machine::CycleRecord;

/// A row of the capacitance table: the always-on control path or one of the
/// gated modules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Control,
    Gated(Module),
}

impl Domain {
    pub const ALL: [Domain; Module::COUNT + 1] = [
        Domain::Control,
        Domain::Gated(Module::RegFile),
        Domain::Gated(Module::Alu),
        Domain::Gated(Module::Ram),
        Domain::Gated(Module::Rom),
        Domain::Gated(Module::Port0),
        Domain::Gated(Module::Port1),
        Domain::Gated(Module::Uart),
        Domain::Gated(Module::SevenSeg),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Control => "control",
            Domain::Gated(m) => m.name(),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Effective switched capacitance per domain, in farads.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CapTable {
    pub control: f64,
    pub modules: [f64; Module::COUNT],
}

impl CapTable {
    pub fn get(&self, d: Domain) -> f64 {
        match d {
            Domain::Control => self.control,
            Domain::Gated(m) => self.modules[m.index()],
        }
    }

    pub fn set(&mut self, d: Domain, farads: f64) {
        match d {
            Domain::Control => self.control = farads,
            Domain::Gated(m) => self.modules[m.index()] = farads,
        }
    }

    pub fn total(&self) -> f64 {
        self.control + self.modules.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    /// Supply voltage, volts.
    pub vdd: f64,
    /// Output swing, volts.
    pub vswing: f64,
    /// Clock frequency, Hz.
    pub freq_hz: f64,
    pub caps: CapTable,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PowerError {
    #[error("activity trace is empty")]
    EmptyTrace,
    #[error("invalid power configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible calibration targets: {0}")]
    InfeasibleTargets(String),
}

impl PowerConfig {
    pub const DEFAULT_VDD: f64 = 2.4;

    pub fn validate(&self) -> Result<(), PowerError> {
        let bad = |msg: String| Err(PowerError::InvalidConfig(msg));
        for (name, v) in [("vdd", self.vdd), ("vswing", self.vswing), ("frequency", self.freq_hz)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.vswing > self.vdd {
            return bad(format!("vswing {} exceeds vdd {}", self.vswing, self.vdd));
        }
        for d in Domain::ALL {
            let c = self.caps.get(d);
            if !(c.is_finite() && c >= 0.0) {
                return bad(format!("capacitance of {d} must be non-negative, got {c}"));
            }
        }
        Ok(())
    }

    /// Energy drawn per cycle with every clock running, in joules.
    pub fn energy_per_cycle(&self) -> f64 {
        self.caps.total() * self.vdd * self.vswing
    }

    pub fn with_frequency(self, freq_hz: f64) -> PowerConfig {
        PowerConfig { freq_hz, ..self }
    }
}

/// Ungated power per MHz of clock, in mW/MHz. Independent of the configured
/// frequency.
pub fn power_per_mhz(config: &PowerConfig) -> f64 {
    // J/cycle * 1e6 cycles/s per MHz * 1e3 mW/W
    config.energy_per_cycle() * 1e9
}

/// Per-cycle clock-enable vectors of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActivityTrace {
    enables: Vec<ModuleSet>,
}

impl ActivityTrace {
    pub fn new(enables: Vec<ModuleSet>) -> ActivityTrace {
        ActivityTrace { enables }
    }

    pub fn from_records(records: &[CycleRecord]) -> ActivityTrace {
        records.iter().map(|r| r.signals.clock_enable).collect()
    }

    pub fn push(&mut self, enables: ModuleSet) {
        self.enables.push(enables);
    }

    pub fn total_cycles(&self) -> u64 {
        self.enables.len() as u64
    }

    pub fn enables(&self) -> &[ModuleSet] {
        &self.enables
    }

    pub fn enabled_cycles(&self, m: Module) -> u64 {
        self.enables.iter().filter(|e| e.contains(m)).count() as u64
    }

    pub fn duty(&self, d: Domain) -> f64 {
        match d {
            Domain::Control => 1.0,
            Domain::Gated(_) if self.enables.is_empty() => 0.0,
            Domain::Gated(m) => self.enabled_cycles(m) as f64 / self.enables.len() as f64,
        }
    }
}

impl FromIterator<ModuleSet> for ActivityTrace {
    fn from_iter<I: IntoIterator<Item = ModuleSet>>(iter: I) -> Self {
        ActivityTrace {
            enables: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainPower {
    pub domain: Domain,
    pub duty: f64,
    pub mw_gated: f64,
    pub mw_ungated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub freq_hz: f64,
    pub total_cycles: u64,
    /// Control first, then the gated modules in [`Module::ALL`] order.
    pub per_domain: Vec<DomainPower>,
    pub total_gated_mw: f64,
    pub total_ungated_mw: f64,
    pub savings_percent: f64,
    pub mw_per_mhz_ungated: f64,
}

impl PowerReport {
    pub fn domain(&self, d: Domain) -> &DomainPower {
        self.per_domain
            .iter()
            .find(|p| p.domain == d)
            .expect("every domain is reported")
    }

    pub const CSV_HEADER: &'static str = "module,duty,mw_gated,mw_ungated";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.per_domain {
            writeln!(out, "{},{:.6},{:.6},{:.6}", p.domain, p.duty, p.mw_gated, p.mw_ungated).unwrap();
        }
        writeln!(out, "total,,{:.6},{:.6}", self.total_gated_mw, self.total_ungated_mw).unwrap();
        out
    }

    /// The one-line summary printed after a run.
    pub fn summary_line(&self) -> String {
        format!(
            "gated={:.2} ungated={:.2} savings={:.2}%",
            self.total_gated_mw, self.total_ungated_mw, self.savings_percent
        )
    }

    /// Human-readable table, without any header lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "clock        {:.3} MHz", self.freq_hz / 1e6).unwrap();
        writeln!(out, "cycles       {}", self.total_cycles).unwrap();
        writeln!(
            out,
            "{:<10} {:>8} {:>12} {:>12}",
            "module", "duty", "gated mW", "ungated mW"
        )
        .unwrap();
        for p in &self.per_domain {
            writeln!(
                out,
                "{:<10} {:>8.4} {:>12.3} {:>12.3}",
                p.domain.name(),
                p.duty,
                p.mw_gated,
                p.mw_ungated
            )
            .unwrap();
        }
        writeln!(
            out,
            "{:<10} {:>8} {:>12.3} {:>12.3}",
            "total", "", self.total_gated_mw, self.total_ungated_mw
        )
        .unwrap();
        writeln!(out, "savings      {:.2}%", self.savings_percent).unwrap();
        writeln!(out, "ungated      {:.4} mW/MHz", self.mw_per_mhz_ungated).unwrap();
        out
    }
}

/// Average power of every domain over `trace`.
pub fn estimate(trace: &ActivityTrace, config: &PowerConfig) -> Result<PowerReport, PowerError> {
    if trace.total_cycles() == 0 {
        return Err(PowerError::EmptyTrace);
    }
    config.validate()?;
    let scale = config.freq_hz * config.vdd * config.vswing * 1e3;
    let per_domain: Vec<DomainPower> = Domain::ALL
        .into_iter()
        .map(|domain| {
            let duty = trace.duty(domain);
            let full = scale * config.caps.get(domain);
            DomainPower {
                domain,
                duty,
                mw_gated: full * duty,
                mw_ungated: full,
            }
        })
        .collect();
    let total_gated_mw: f64 = per_domain.iter().map(|p| p.mw_gated).sum();
    let total_ungated_mw: f64 = per_domain.iter().map(|p| p.mw_ungated).sum();
    let savings_percent = if total_ungated_mw > 0.0 {
        100.0 * (1.0 - total_gated_mw / total_ungated_mw)
    } else {
        0.0
    };
    Ok(PowerReport {
        freq_hz: config.freq_hz,
        total_cycles: trace.total_cycles(),
        per_domain,
        total_gated_mw,
        total_ungated_mw,
        savings_percent,
        mw_per_mhz_ungated: power_per_mhz(config),
    })
}

/// Relative capacitance of the gated modules, used to split the gated share
/// among them. The RAM array dominates, the byte-wide ports are small.
pub const MODULE_CAP_WEIGHTS: [(Module, f64); Module::COUNT] = [
    (Module::RegFile, 0.16),
    (Module::Alu, 0.14),
    (Module::Ram, 0.30),
    (Module::Rom, 0.14),
    (Module::Port0, 0.04),
    (Module::Port1, 0.04),
    (Module::Uart, 0.12),
    (Module::SevenSeg, 0.06),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTargets {
    pub ungated_mw: f64,
    pub gated_mw: f64,
    /// Ungated power per MHz; fixes the reference clock frequency as
    /// `ungated_mw / mw_per_mhz`.
    pub mw_per_mhz: f64,
}

impl CalibrationTargets {
    /// The controller's published operating point.
    pub const REFERENCE: CalibrationTargets = CalibrationTargets {
        ungated_mw: 273.0,
        gated_mw: 182.0,
        mw_per_mhz: 3.62,
    };

    pub fn reference_freq_hz(&self) -> f64 {
        self.ungated_mw / self.mw_per_mhz * 1e6
    }
}

/// Fits a capacitance table so that [`estimate`] on `trace` reproduces both
/// targets.
///
/// The total capacitance follows from `mw_per_mhz`. What remains is one
/// degree of freedom: the share `a` of capacitance in the always-on control
/// path. The gated modules split `1 - a` by [`MODULE_CAP_WEIGHTS`]; with `D`
/// their weighted duty on the trace, the gated/ungated ratio is
/// `a + (1 - a) * D`, which is solved for `a`.
pub fn calibrate(
    trace: &ActivityTrace,
    targets: CalibrationTargets,
    vdd: f64,
    vswing: f64,
) -> Result<PowerConfig, PowerError> {
    if trace.total_cycles() == 0 {
        return Err(PowerError::EmptyTrace);
    }
    let infeasible = |msg: String| Err(PowerError::InfeasibleTargets(msg));
    let CalibrationTargets {
        ungated_mw,
        gated_mw,
        mw_per_mhz,
    } = targets;
    for (name, v) in [("ungated", ungated_mw), ("gated", gated_mw), ("mW/MHz", mw_per_mhz)] {
        if !(v.is_finite() && v > 0.0) {
            return infeasible(format!("{name} target must be positive, got {v}"));
        }
    }
    if gated_mw > ungated_mw {
        return infeasible(format!("gated {gated_mw} mW exceeds ungated {ungated_mw} mW"));
    }
    let ratio = gated_mw / ungated_mw;
    let weighted_duty: f64 = MODULE_CAP_WEIGHTS
        .iter()
        .map(|(m, w)| w * trace.duty(Domain::Gated(*m)))
        .sum();

    let control_share = if ratio == 1.0 {
        1.0
    } else if weighted_duty >= 1.0 {
        return infeasible("every module is active on every cycle, so gating cannot save power".into());
    } else {
        (ratio - weighted_duty) / (1.0 - weighted_duty)
    };
    if control_share < 0.0 {
        return infeasible(format!(
            "gated/ungated ratio {ratio:.4} is below the trace's weighted module duty {weighted_duty:.4}"
        ));
    }

    let total_cap = mw_per_mhz * 1e-9 / (vdd * vswing);
    let mut caps = CapTable {
        control: control_share * total_cap,
        ..CapTable::default()
    };
    for (m, w) in MODULE_CAP_WEIGHTS {
        caps.set(Domain::Gated(m), (1.0 - control_share) * w * total_cap);
    }
    let config = PowerConfig {
        vdd,
        vswing,
        freq_hz: targets.reference_freq_hz(),
        caps,
    };
    config.validate()?;
    Ok(config)
}
