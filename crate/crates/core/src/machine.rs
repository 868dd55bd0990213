//! Architectural state and cycle-level execution.
//!
//! [`Machine::tick`] advances one clock cycle: the control unit produces
//! its signals for the current FSM state, every module whose clock is
//! enabled does its work, and the state register latches the next state.
//! An instruction takes three cycles (fetch, decode, execute).
//!
//! A module whose clock is gated does not change state. That holds even for
//! a policy that gates a module an instruction needs: the write is lost, as
//! it would be in hardware.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::num::NonZeroU32;

use crate::control::{
    latch_state, next_state, output_signals, ControlInputs, ControlSignals, FsmState, GatingPolicy, Module, ModuleSet,
};
use crate::isa::{decode, Instruction, Opcode, RomImage, NUM_REGS};
use crate::peripherals::{Device, Direction, IoEvent, Peripherals, PortOp, UartError, UartModel};

pub const RAM_WORDS: usize = 1024;

/// Condition flags, written by ALU operations and `ZERO`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Flags {
    /// Last result was zero.
    pub z: bool,
    /// Last `SUB`/`DEC` borrowed (unsigned minuend < subtrahend).
    pub l: bool,
}

/// Programmer-visible state.
///
/// Direct addresses are 8 bits wide, so `LOAD`/`STORE` reach the first 256
/// RAM words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MachineState {
    pub regs: [u16; NUM_REGS],
    pub pc: u8,
    pub flags: Flags,
    pub ram: Box<[u16; RAM_WORDS]>,
    pub rom: RomImage,
    pub cycles: u64,
}

impl MachineState {
    pub fn new(rom: RomImage) -> MachineState {
        MachineState {
            regs: [0; NUM_REGS],
            pc: 0,
            flags: Flags::default(),
            ram: Box::new([0; RAM_WORDS]),
            rom,
            cycles: 0,
        }
    }

    /// Clears registers, flags and PC. RAM, ROM and the cycle count are kept.
    pub fn reset(&mut self) {
        self.regs = [0; NUM_REGS];
        self.pc = 0;
        self.flags = Flags::default();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MachineError {
    #[error("cycle {cycle}: illegal opcode in word {word:#06X} at pc {pc:#04X}")]
    IllegalOpcode { cycle: u64, pc: u8, word: u16 },
    #[error("cycle {cycle}: {source} at pc {pc:#04X}")]
    Peripheral {
        cycle: u64,
        pc: u8,
        #[source]
        source: UartError,
    },
    #[error("controller is idle; an interrupt or reset is needed to resume")]
    Idle,
    #[error("cycle budget must be at least 1")]
    NoCycles,
}

/// Construction-time options.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineOptions {
    pub policy: GatingPolicy,
    /// When false every module clock runs every cycle.
    pub gating: bool,
    pub uart_divisor: NonZeroU32,
    /// `PORT1` reads the UART receive FIFO when it holds data.
    pub uart_rx_to_port1: bool,
}

impl Default for MachineOptions {
    fn default() -> Self {
        MachineOptions {
            policy: GatingPolicy::default(),
            gating: true,
            uart_divisor: NonZeroU32::new(UartModel::DEFAULT_DIVISOR).unwrap(),
            uart_rx_to_port1: false,
        }
    }
}

/// One row of the cycle trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CycleRecord {
    pub cycle: u64,
    pub pc: u8,
    pub fsm: FsmState,
    /// Opcode of the instruction in flight, if any.
    pub opcode: Option<Opcode>,
    pub signals: ControlSignals,
}

impl CycleRecord {
    pub const CSV_HEADER: &'static str = "cycle,pc,fsm_state,opcode,regfile,alu,ram,rom,port0,port1,uart,sevenseg";

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{:02X},{},{}",
            self.cycle,
            self.pc,
            self.fsm,
            self.opcode.map_or("-", Opcode::mnemonic)
        );
        for m in Module::ALL {
            row.push_str(if self.signals.enabled(m) { ",1" } else { ",0" });
        }
        row
    }
}

/// An instruction leaving the execute stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Retired {
    pub instr: Instruction,
    pub pc_before: u8,
    pub pc_after: u8,
}

impl Retired {
    /// `loop: BI loop` and its register-indirect twin.
    pub fn is_self_loop(&self) -> bool {
        matches!(self.instr.opcode, Opcode::Bi | Opcode::Bch) && self.pc_after == self.pc_before
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tick {
    pub record: CycleRecord,
    pub retired: Option<Retired>,
}

/// Result of executing one whole instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub executed: Instruction,
    pub pc_before: u8,
    pub pc_after: u8,
    /// Union of the clock enables over the instruction's cycles.
    pub modules_active: ModuleSet,
    pub io_events: Vec<IoEvent>,
}

/// Host-side stimulus applied just before a given cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub cycle: u64,
    pub action: InjectAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectAction {
    Port1(u8),
    UartRx(u8),
    Interrupt,
    Sleep,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    CycleLimit,
    SelfLoop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub stop: StopReason,
    pub trace: Vec<CycleRecord>,
}

/// The controller: datapath, control unit and peripherals.
#[derive(Debug, Clone)]
pub struct Machine {
    state: MachineState,
    io: Peripherals,
    fsm: FsmState,
    /// Decoded instruction held by the control path.
    ir: Instruction,
    /// Output registers of the clocked blocks.
    rom_out: u16,
    ram_out: u16,
    alu_out: u16,
    alu_borrow: bool,
    options: MachineOptions,
    interrupt_pending: bool,
    sleep_pending: bool,
    events: Vec<IoEvent>,
}

impl Machine {
    pub fn new(rom: RomImage) -> Machine {
        Machine::with_options(rom, MachineOptions::default())
    }

    /// A freshly powered machine, sitting in `reset1`.
    pub fn with_options(rom: RomImage, options: MachineOptions) -> Machine {
        Machine {
            state: MachineState::new(rom),
            io: Peripherals {
                uart: UartModel::new(options.uart_divisor),
                ..Peripherals::default()
            },
            fsm: FsmState::Reset1,
            ir: Instruction::NOP,
            rom_out: 0,
            ram_out: 0,
            alu_out: 0,
            alu_borrow: false,
            options,
            interrupt_pending: false,
            sleep_pending: false,
            events: Vec::new(),
        }
    }

    pub fn state(&self) -> &MachineState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut MachineState {
        &mut self.state
    }

    pub fn io(&self) -> &Peripherals {
        &self.io
    }

    pub fn io_mut(&mut self) -> &mut Peripherals {
        &mut self.io
    }

    pub fn fsm(&self) -> FsmState {
        self.fsm
    }

    pub fn options(&self) -> &MachineOptions {
        &self.options
    }

    pub fn events(&self) -> &[IoEvent] {
        &self.events
    }

    /// Asserts reset. Registers, flags, PC and the peripheral output latches
    /// clear immediately; the control unit goes to `reset1`.
    pub fn reset(&mut self) {
        self.state.reset();
        self.fsm = latch_state(next_state(
            self.fsm,
            self.ir.opcode,
            ControlInputs {
                reset: true,
                ..ControlInputs::default()
            },
        ));
        self.ir = Instruction::NOP;
        self.rom_out = 0;
        self.ram_out = 0;
        self.alu_out = 0;
        self.alu_borrow = false;
        self.io.ports.port0_latch = 0;
        self.io.ports.port1_sample = 0;
        self.io.sevenseg = Default::default();
        self.io.uart.reset();
        self.interrupt_pending = false;
        self.sleep_pending = false;
    }

    /// Raises the interrupt line for the next cycle. Only an idle controller
    /// reacts to it.
    pub fn interrupt(&mut self) {
        self.interrupt_pending = true;
    }

    /// Parks the controller in idle after the current instruction.
    pub fn request_idle(&mut self) {
        self.sleep_pending = true;
    }

    pub fn inject(&mut self, action: InjectAction) -> Result<(), MachineError> {
        match action {
            InjectAction::Port1(v) => self.io.ports.port1_input = v,
            InjectAction::UartRx(v) => self.io.uart.inject_rx(v).map_err(|source| MachineError::Peripheral {
                cycle: self.state.cycles,
                pc: self.state.pc,
                source,
            })?,
            InjectAction::Interrupt => self.interrupt(),
            InjectAction::Sleep => self.request_idle(),
            InjectAction::Reset => self.reset(),
        }
        Ok(())
    }

    /// Hash of the state owned by one module, for checking that gated
    /// modules hold still.
    pub fn module_fingerprint(&self, module: Module) -> u64 {
        let mut h = DefaultHasher::new();
        match module {
            Module::RegFile => self.state.regs.hash(&mut h),
            Module::Alu => (self.alu_out, self.alu_borrow).hash(&mut h),
            Module::Ram => (&self.state.ram, self.ram_out).hash(&mut h),
            Module::Rom => self.rom_out.hash(&mut h),
            Module::Port0 => self.io.ports.port0_latch.hash(&mut h),
            Module::Port1 => self.io.ports.port1_sample.hash(&mut h),
            Module::Uart => self.io.uart.hash(&mut h),
            Module::SevenSeg => self.io.sevenseg.hash(&mut h),
        }
        h.finish()
    }

    /// Advances one clock cycle.
    pub fn tick(&mut self) -> Result<Tick, MachineError> {
        let cycle = self.state.cycles;
        let pc = self.state.pc;
        let fsm = self.fsm;

        let requests = if self.io.uart.is_transmitting() {
            ModuleSet::EMPTY.with(Module::Uart)
        } else {
            ModuleSet::EMPTY
        };
        let mut signals = output_signals(fsm, self.ir.opcode, &self.options.policy, requests);
        if !self.options.gating {
            signals = signals.ungated();
        }

        if signals.enabled(Module::Uart) {
            for byte in self.io.uart.tick(1) {
                self.events.push(IoEvent {
                    cycle,
                    device: Device::Uart,
                    direction: Direction::Out,
                    value: byte,
                });
            }
        }

        let mut opcode = None;
        let mut retired = None;
        match fsm {
            FsmState::Fetch => {
                if signals.enabled(Module::Rom) {
                    self.rom_out = self.state.rom.word(pc);
                }
                opcode = Opcode::from_code((self.rom_out >> 11) as u8);
            }
            FsmState::Decode => {
                self.ir = decode(self.rom_out).map_err(|e| MachineError::IllegalOpcode {
                    cycle,
                    pc,
                    word: e.word,
                })?;
                opcode = Some(self.ir.opcode);
            }
            FsmState::Execute => {
                opcode = Some(self.ir.opcode);
                self.execute(&signals, cycle)?;
                retired = Some(Retired {
                    instr: self.ir,
                    pc_before: pc,
                    pc_after: self.state.pc,
                });
            }
            FsmState::Reset1 | FsmState::Reset2 | FsmState::Idle => {}
        }

        let inputs = ControlInputs {
            reset: false,
            interrupt: std::mem::take(&mut self.interrupt_pending),
            sleep: self.sleep_pending,
        };
        self.fsm = latch_state(next_state(fsm, self.ir.opcode, inputs));
        if self.fsm == FsmState::Idle {
            self.sleep_pending = false;
        }
        self.state.cycles += 1;

        Ok(Tick {
            record: CycleRecord {
                cycle,
                pc,
                fsm,
                opcode,
                signals,
            },
            retired,
        })
    }

    fn execute(&mut self, s: &ControlSignals, cycle: u64) -> Result<(), MachineError> {
        let Instruction {
            opcode,
            rd,
            rs,
            operand,
        } = self.ir;
        let rd = rd.index();
        let a = self.state.regs[rd];
        let b = self.state.regs[rs.index()];
        let pc = self.state.pc;
        let mut next_pc = pc.wrapping_add(1);
        let flags = self.state.flags;

        match opcode {
            Opcode::Nop => {}
            Opcode::Load => {
                if s.enabled(Module::Ram) {
                    self.ram_out = self.state.ram[operand as usize];
                }
                self.write_reg(s, rd, self.ram_out);
            }
            Opcode::Store => {
                if s.enabled(Module::Ram) {
                    self.state.ram[operand as usize] = a;
                }
            }
            Opcode::Move => self.write_reg(s, rd, b),
            Opcode::Loadi => self.write_reg(s, rd, operand as u16),
            Opcode::Zero => {
                self.write_reg(s, rd, 0);
                self.state.flags.z = true;
            }
            op if op.is_alu() => {
                if s.enabled(Module::Alu) {
                    (self.alu_out, self.alu_borrow) = alu(op, a, b);
                }
                self.write_reg(s, rd, self.alu_out);
                self.state.flags.z = self.alu_out == 0;
                if matches!(op, Opcode::Sub | Opcode::Dec) {
                    self.state.flags.l = self.alu_borrow;
                }
            }
            op if op.is_branch() => {
                let taken = match op {
                    Opcode::Bi | Opcode::Bch => true,
                    Opcode::Bgti | Opcode::Bgt => !flags.z && !flags.l,
                    Opcode::Beq => flags.z,
                    Opcode::Bneq => !flags.z,
                    Opcode::Blt => flags.l,
                    Opcode::Blte => flags.l || flags.z,
                    _ => unreachable!(),
                };
                if taken {
                    next_pc = if op.is_register_branch() { a as u8 } else { operand };
                }
            }
            Opcode::Port0 => {
                if s.enabled(Module::Port0) {
                    let ev = self.io.ports.access(PortOp::Write0(a as u8), cycle);
                    self.events.push(ev);
                }
            }
            Opcode::Port1 => {
                if s.enabled(Module::Port1) {
                    let rx = (self.options.uart_rx_to_port1 && s.enabled(Module::Uart))
                        .then(|| self.io.uart.receive())
                        .flatten();
                    let ev = match rx {
                        Some(byte) => {
                            self.io.ports.port1_sample = byte;
                            IoEvent {
                                cycle,
                                device: Device::Uart,
                                direction: Direction::In,
                                value: byte,
                            }
                        }
                        None => self.io.ports.access(PortOp::Read1, cycle),
                    };
                    self.events.push(ev);
                }
                self.write_reg(s, rd, self.io.ports.port1_sample as u16);
            }
            Opcode::B7s => {
                if s.enabled(Module::SevenSeg) {
                    let pattern = self.io.sevenseg.drive(a);
                    self.events.push(IoEvent {
                        cycle,
                        device: Device::SevenSeg,
                        direction: Direction::Out,
                        value: pattern,
                    });
                }
            }
            Opcode::Uarts => {
                if s.enabled(Module::Uart) {
                    self.io
                        .uart
                        .send(a as u8)
                        .map_err(|source| MachineError::Peripheral { cycle, pc, source })?;
                }
            }
            _ => unreachable!("every opcode is handled above"),
        }
        self.state.pc = next_pc;
        Ok(())
    }

    fn write_reg(&mut self, s: &ControlSignals, rd: usize, value: u16) {
        if s.enabled(Module::RegFile) {
            self.state.regs[rd] = value;
        }
    }

    /// Runs until one instruction retires.
    pub fn step(&mut self) -> Result<StepOutcome, MachineError> {
        if self.fsm == FsmState::Idle {
            return Err(MachineError::Idle);
        }
        let first_event = self.events.len();
        let mut active = ModuleSet::EMPTY;
        loop {
            let t = self.tick()?;
            active = active.union(t.record.signals.clock_enable);
            if let Some(r) = t.retired {
                return Ok(StepOutcome {
                    executed: r.instr,
                    pc_before: r.pc_before,
                    pc_after: r.pc_after,
                    modules_active: active,
                    io_events: self.events[first_event..].to_vec(),
                });
            }
            if self.fsm == FsmState::Idle {
                return Err(MachineError::Idle);
            }
        }
    }

    /// Runs for at most `max_cycles` cycles.
    ///
    /// ```
    /// use pec::isa::assemble;
    /// use pec::machine::{Machine, StopReason};
    ///
    /// let rom = assemble("LOADI R0, 0\nINC R0\nINC R0\nhalt: BI halt").unwrap().image;
    /// let mut m = Machine::new(rom);
    /// let out = m.run(1_000, true).unwrap();
    /// assert_eq!(out.stop, StopReason::SelfLoop);
    /// assert_eq!(m.state().regs[0], 2);
    /// ```
    pub fn run(&mut self, max_cycles: u64, halt_on_self_loop: bool) -> Result<RunOutcome, MachineError> {
        self.run_with(max_cycles, halt_on_self_loop, &[])
    }

    /// Like [`Machine::run`], applying each injection just before the cycle
    /// it names. Injections must be sorted by cycle.
    pub fn run_with(
        &mut self,
        max_cycles: u64,
        halt_on_self_loop: bool,
        injections: &[Injection],
    ) -> Result<RunOutcome, MachineError> {
        if max_cycles == 0 {
            return Err(MachineError::NoCycles);
        }
        let start = self.state.cycles;
        let mut trace = Vec::new();
        let mut pending = injections.iter().skip_while(|inj| inj.cycle < start).peekable();
        while self.state.cycles - start < max_cycles {
            while let Some(inj) = pending.next_if(|inj| inj.cycle <= self.state.cycles) {
                self.inject(inj.action)?;
            }
            let t = self.tick()?;
            trace.push(t.record);
            if halt_on_self_loop && t.retired.is_some_and(|r| r.is_self_loop()) {
                return Ok(RunOutcome {
                    stop: StopReason::SelfLoop,
                    trace,
                });
            }
        }
        Ok(RunOutcome {
            stop: StopReason::CycleLimit,
            trace,
        })
    }
}

/// Result and borrow of one ALU operation.
fn alu(op: Opcode, a: u16, b: u16) -> (u16, bool) {
    match op {
        Opcode::Inc => (a.wrapping_add(1), false),
        Opcode::Dec => (a.wrapping_sub(1), a == 0),
        Opcode::And => (a & b, false),
        Opcode::Or => (a | b, false),
        Opcode::Xor => (a ^ b, false),
        Opcode::Not => (!a, false),
        Opcode::Add => (a.wrapping_add(b), false),
        Opcode::Sub => a.overflowing_sub(b),
        Opcode::Shl => (a << 1, false),
        Opcode::Shr => (a >> 1, false),
        Opcode::Ror => (a.rotate_right(1), false),
        Opcode::Rol => (a.rotate_left(1), false),
        _ => unreachable!("{op} is not an ALU operation"),
    }
}
