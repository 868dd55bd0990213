//! The control unit.
//!
//! It is split the way the hardware is: [`next_state`] and
//! [`output_signals`] form the combinational process that looks at the
//! current state and inputs, and [`latch_state`] is the clocked process
//! that stores the next state on the edge. Clock gating lives here too:
//! every cycle the control unit emits one clock-enable bit per gated module,
//! taken from a [`GatingPolicy`].

use std::fmt;
use std::str::FromStr;

use crate::isa::Opcode;

/// A block of the datapath with its own gated clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Module {
    RegFile,
    Alu,
    Ram,
    Rom,
    Port0,
    Port1,
    Uart,
    SevenSeg,
}

impl Module {
    pub const COUNT: usize = 8;

    /// Column order used by traces and reports.
    pub const ALL: [Module; Module::COUNT] = [
        Module::RegFile,
        Module::Alu,
        Module::Ram,
        Module::Rom,
        Module::Port0,
        Module::Port1,
        Module::Uart,
        Module::SevenSeg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Module::RegFile => "regfile",
            Module::Alu => "alu",
            Module::Ram => "ram",
            Module::Rom => "rom",
            Module::Port0 => "port0",
            Module::Port1 => "port1",
            Module::Uart => "uart",
            Module::SevenSeg => "sevenseg",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown module `{0}`")]
pub struct UnknownModule(pub String);

impl FromStr for Module {
    type Err = UnknownModule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Module::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownModule(s.to_string()))
    }
}

/// A set of modules, one bit per [`Module`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModuleSet(u8);

impl ModuleSet {
    pub const EMPTY: ModuleSet = ModuleSet(0);
    pub const ALL: ModuleSet = ModuleSet(0xFF);

    pub fn from_bits(bits: u8) -> ModuleSet {
        ModuleSet(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, m: Module) -> bool {
        self.0 & (1 << m.index()) != 0
    }

    pub fn insert(&mut self, m: Module) {
        self.0 |= 1 << m.index();
    }

    pub fn remove(&mut self, m: Module) {
        self.0 &= !(1 << m.index());
    }

    pub fn with(mut self, m: Module) -> ModuleSet {
        self.insert(m);
        self
    }

    pub fn union(self, other: ModuleSet) -> ModuleSet {
        ModuleSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Module> {
        Module::ALL.into_iter().filter(move |m| self.contains(*m))
    }
}

impl FromIterator<Module> for ModuleSet {
    fn from_iter<I: IntoIterator<Item = Module>>(iter: I) -> Self {
        let mut set = ModuleSet::EMPTY;
        for m in iter {
            set.insert(m);
        }
        set
    }
}

impl<const N: usize> From<[Module; N]> for ModuleSet {
    fn from(modules: [Module; N]) -> Self {
        modules.into_iter().collect()
    }
}

impl fmt::Debug for ModuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsmState {
    Reset1,
    Reset2,
    Fetch,
    Decode,
    Execute,
    Idle,
}

impl FsmState {
    pub const ALL: [FsmState; 6] = [
        FsmState::Reset1,
        FsmState::Reset2,
        FsmState::Fetch,
        FsmState::Decode,
        FsmState::Execute,
        FsmState::Idle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FsmState::Reset1 => "reset1",
            FsmState::Reset2 => "reset2",
            FsmState::Fetch => "fetch",
            FsmState::Decode => "decode",
            FsmState::Execute => "execute",
            FsmState::Idle => "idle",
        }
    }
}

impl fmt::Display for FsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// External inputs sampled by the control unit each cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ControlInputs {
    pub reset: bool,
    pub interrupt: bool,
    /// Host request to park in idle once the current instruction retires.
    pub sleep: bool,
}

/// Combinational next-state function.
///
/// `reset` wins over everything. The instruction cycle is
/// fetch, decode, execute; idle is left only by `interrupt` (or `reset`).
pub fn next_state(current: FsmState, _opcode: Opcode, inputs: ControlInputs) -> FsmState {
    if inputs.reset {
        return FsmState::Reset1;
    }
    match current {
        FsmState::Reset1 => FsmState::Reset2,
        FsmState::Reset2 => FsmState::Fetch,
        FsmState::Fetch => FsmState::Decode,
        FsmState::Decode => FsmState::Execute,
        FsmState::Execute if inputs.sleep => FsmState::Idle,
        FsmState::Execute => FsmState::Fetch,
        FsmState::Idle if inputs.interrupt => FsmState::Fetch,
        FsmState::Idle => FsmState::Idle,
    }
}

/// The sequential process: the state register loads its input on the edge.
pub fn latch_state(next: FsmState) -> FsmState {
    next
}

/// Per-cycle outputs of the control unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ControlSignals {
    pub clock_enable: ModuleSet,
    pub reg_write: bool,
    pub mem_read: bool,
    pub mem_write: bool,
    pub pc_load: bool,
    pub flag_write: bool,
}

impl ControlSignals {
    /// The same controls with every module clock running.
    pub fn ungated(self) -> ControlSignals {
        ControlSignals {
            clock_enable: ModuleSet::ALL,
            ..self
        }
    }

    pub fn enabled(&self, m: Module) -> bool {
        self.clock_enable.contains(m)
    }
}

/// Which modules receive a clock in each (state, opcode) pair.
///
/// Fetch always clocks the ROM; decode, reset and idle clock nothing
/// beyond the (never gated) control path. Execute rows are per opcode and
/// can be overridden.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GatingPolicy {
    execute: [ModuleSet; 32],
}

impl GatingPolicy {
    /// The minimal set of modules each instruction needs while executing.
    pub fn required(opcode: Opcode) -> ModuleSet {
        use Module::{Alu, Ram, RegFile, SevenSeg, Uart};
        match opcode {
            Opcode::Nop => ModuleSet::EMPTY,
            Opcode::Load | Opcode::Store => [RegFile, Ram].into(),
            Opcode::Loadi | Opcode::Move | Opcode::Zero => [RegFile].into(),
            Opcode::Port0 => [RegFile, Module::Port0].into(),
            Opcode::Port1 => [RegFile, Module::Port1].into(),
            Opcode::B7s => [RegFile, SevenSeg].into(),
            Opcode::Uarts => [RegFile, Uart].into(),
            op if op.is_alu() => [RegFile, Alu].into(),
            op if op.is_register_branch() => [RegFile].into(),
            _ => ModuleSet::EMPTY,
        }
    }

    pub fn execute_row(&self, opcode: Opcode) -> ModuleSet {
        self.execute[opcode.code() as usize]
    }

    pub fn set(&mut self, opcode: Opcode, module: Module, on: bool) {
        let row = &mut self.execute[opcode.code() as usize];
        if on {
            row.insert(module);
        } else {
            row.remove(module);
        }
    }

    pub fn enabled(&self, state: FsmState, opcode: Opcode) -> ModuleSet {
        match state {
            FsmState::Fetch => ModuleSet::EMPTY.with(Module::Rom),
            FsmState::Execute => self.execute_row(opcode),
            FsmState::Reset1 | FsmState::Reset2 | FsmState::Decode | FsmState::Idle => ModuleSet::EMPTY,
        }
    }
}

impl Default for GatingPolicy {
    fn default() -> Self {
        let mut execute = [ModuleSet::EMPTY; 32];
        for op in Opcode::ALL {
            execute[op.code() as usize] = GatingPolicy::required(op);
        }
        GatingPolicy { execute }
    }
}

/// Combinational output function.
///
/// `requests` are clock requests from modules with work in flight (a
/// transmitting UART); they are honoured in every state but idle, where
/// all module clocks stop.
pub fn output_signals(current: FsmState, opcode: Opcode, policy: &GatingPolicy, requests: ModuleSet) -> ControlSignals {
    let mut clock_enable = policy.enabled(current, opcode);
    if current != FsmState::Idle {
        clock_enable = clock_enable.union(requests);
    }
    if current != FsmState::Execute {
        return ControlSignals {
            clock_enable,
            ..ControlSignals::default()
        };
    }
    ControlSignals {
        clock_enable,
        reg_write: opcode.writes_register(),
        mem_read: opcode == Opcode::Load,
        mem_write: opcode == Opcode::Store,
        pc_load: opcode.is_branch(),
        flag_write: opcode.writes_flags(),
    }
}
