//! Plain-text configuration and injection scripts.
//!
//! Config files are `key = value` lines; `#` starts a comment. Recognised
//! keys:
//!
//! | key                        | value                                  |
//! |----------------------------|----------------------------------------|
//! | `osc.control_word`         | `0..=15`, clocks the run from the oscillator |
//! | `power.vdd`                | supply volts                           |
//! | `power.vswing`             | swing volts                            |
//! | `power.freq_mhz`           | clock used when no control word is set |
//! | `power.cap.<domain>`       | farads, `<domain>` = `control` or a module |
//! | `gate.<OPCODE>.<module>`   | `on` / `off`, overrides an execute row |
//! | `uart.baud_divisor`        | cycles per byte, at least 1            |
//! | `uart.rx_to_port1`         | `true` / `false`                       |
//!
//! Later lines override earlier ones, and a file only needs the keys it
//! changes: [`Config::apply`] layers it over an existing configuration.

use std::fmt::Write as _;
use std::num::NonZeroU32;

use crate::clocking::OscillatorSetting;
use crate::control::{GatingPolicy, Module};
use crate::isa::Opcode;
use crate::machine::{InjectAction, Injection, MachineOptions};
use crate::peripherals::UartModel;
use crate::power::{CapTable, Domain, PowerConfig};

/// The committed calibrated configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../assets/default.conf");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub osc_control_word: Option<u8>,
    pub power: PowerConfig,
    pub policy: GatingPolicy,
    pub uart_divisor: NonZeroU32,
    pub uart_rx_to_port1: bool,
}

impl Config {
    /// Electrical defaults with an empty capacitance table.
    pub fn uncalibrated() -> Config {
        Config {
            osc_control_word: None,
            power: PowerConfig {
                vdd: PowerConfig::DEFAULT_VDD,
                vswing: PowerConfig::DEFAULT_VDD,
                freq_hz: 100e6,
                caps: CapTable::default(),
            },
            policy: GatingPolicy::default(),
            uart_divisor: NonZeroU32::new(UartModel::DEFAULT_DIVISOR).unwrap(),
            uart_rx_to_port1: false,
        }
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Applies every assignment in `text` on top of `self`.
    pub fn apply(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError { line, message };
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
            self.set(key, value).map_err(err)?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["osc", "control_word"] => {
                let w: u8 = parse(value)?;
                OscillatorSetting::new(w).map_err(|e| e.to_string())?;
                self.osc_control_word = Some(w);
            }
            ["power", "vdd"] => self.power.vdd = parse(value)?,
            ["power", "vswing"] => self.power.vswing = parse(value)?,
            ["power", "freq_mhz"] => self.power.freq_hz = parse::<f64>(value)? * 1e6,
            ["power", "cap", domain] => {
                let d = Domain::ALL
                    .into_iter()
                    .find(|d| d.name() == *domain)
                    .ok_or_else(|| format!("unknown power domain `{domain}`"))?;
                self.power.caps.set(d, parse(value)?);
            }
            ["gate", opcode, module] => {
                let op: Opcode = opcode.parse().map_err(|e: crate::isa::UnknownMnemonic| e.to_string())?;
                let m: Module = module
                    .parse()
                    .map_err(|e: crate::control::UnknownModule| e.to_string())?;
                let on = match value {
                    "on" => true,
                    "off" => false,
                    _ => return Err(format!("expected `on` or `off`, found `{value}`")),
                };
                self.policy.set(op, m, on);
            }
            ["uart", "baud_divisor"] => {
                self.uart_divisor = NonZeroU32::new(parse(value)?).ok_or("baud divisor must be at least 1")?;
            }
            ["uart", "rx_to_port1"] => self.uart_rx_to_port1 = parse(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Power parameters for a run; the oscillator, when configured, sets the
    /// clock.
    pub fn power_config(&self) -> PowerConfig {
        match self.osc_control_word {
            Some(w) => self
                .power
                .with_frequency(OscillatorSetting::new(w).expect("validated on parse").frequency()),
            None => self.power,
        }
    }

    pub fn machine_options(&self, gating: bool) -> MachineOptions {
        let mut policy = self.policy.clone();
        if self.uart_rx_to_port1 {
            policy.set(Opcode::Port1, Module::Uart, true);
        }
        MachineOptions {
            policy,
            gating,
            uart_divisor: self.uart_divisor,
            uart_rx_to_port1: self.uart_rx_to_port1,
        }
    }

    /// Serialises every setting; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(w) = self.osc_control_word {
            writeln!(out, "osc.control_word = {w}").unwrap();
        }
        writeln!(out, "power.vdd = {:?}", self.power.vdd).unwrap();
        writeln!(out, "power.vswing = {:?}", self.power.vswing).unwrap();
        writeln!(out, "power.freq_mhz = {:?}", self.power.freq_hz / 1e6).unwrap();
        for d in Domain::ALL {
            writeln!(out, "power.cap.{} = {:e}", d.name(), self.power.caps.get(d)).unwrap();
        }
        writeln!(out, "uart.baud_divisor = {}", self.uart_divisor).unwrap();
        writeln!(out, "uart.rx_to_port1 = {}", self.uart_rx_to_port1).unwrap();
        let default = GatingPolicy::default();
        for op in Opcode::ALL {
            for m in Module::ALL {
                let on = self.policy.execute_row(op).contains(m);
                if on != default.execute_row(op).contains(m) {
                    writeln!(out, "gate.{op}.{m} = {}", if on { "on" } else { "off" }).unwrap();
                }
            }
        }
        out
    }
}

impl Default for Config {
    /// The committed calibrated configuration.
    fn default() -> Self {
        let mut cfg = Config::uncalibrated();
        cfg.apply(DEFAULT_CONFIG).expect("committed default config parses");
        cfg
    }
}

fn parse<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value `{value}`"))
}

/// Parses an injection script: `<cycle> port1 <hex>`, `<cycle> uart_rx <hex>`,
/// `<cycle> irq`, `<cycle> sleep` or `<cycle> reset`, one per line. The
/// result is sorted by cycle, keeping file order within a cycle.
pub fn parse_injections(text: &str) -> Result<Vec<Injection>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError { line, message };
        let fields: Vec<&str> = content.split_whitespace().collect();
        let cycle: u64 = fields[0]
            .parse()
            .map_err(|_| err(format!("invalid cycle `{}`", fields[0])))?;
        let hex = |s: &str| {
            u8::from_str_radix(s.trim_start_matches("0x").trim_start_matches("0X"), 16)
                .map_err(|_| err(format!("invalid byte `{s}`")))
        };
        let action = match fields[1..] {
            ["port1", v] => InjectAction::Port1(hex(v)?),
            ["uart_rx", v] => InjectAction::UartRx(hex(v)?),
            ["irq"] => InjectAction::Interrupt,
            ["sleep"] => InjectAction::Sleep,
            ["reset"] => InjectAction::Reset,
            _ => return Err(err(format!("unrecognised injection `{content}`"))),
        };
        out.push(Injection { cycle, action });
    }
    out.sort_by_key(|inj| inj.cycle);
    Ok(out)
}
