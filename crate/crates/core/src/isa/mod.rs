//! Instruction set: opcodes, the 16-bit instruction word, ROM images and the
//! assembler/disassembler pair.
//!
//! Every instruction is one 16-bit word in direct addressing mode. The
//! opcode sits in the top five bits, the destination register in the next
//! three, and the low byte carries either a source register (in bits 7..5)
//! or an 8-bit immediate / direct RAM or ROM address.

mod asm;
mod disasm;
mod opcode;
mod rom;

use std::fmt;

pub use asm::{assemble, AsmError, AsmErrorKind, Assembly, SymbolTable};
pub use disasm::{disassemble, disassemble_word};
pub use opcode::{Format, Opcode, UnknownMnemonic};
pub use rom::{ImageError, RomImage, ROM_WORDS};

/// Number of general purpose registers.
pub const NUM_REGS: usize = 8;

/// A general purpose register index, always below [`NUM_REGS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Reg(u8);

impl Reg {
    pub const R0: Reg = Reg(0);

    pub fn new(index: u8) -> Option<Reg> {
        ((index as usize) < NUM_REGS).then_some(Reg(index))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

/// A decoded instruction.
///
/// Fields not used by the opcode's [`Format`] are zero in canonical form;
/// [`decode`] always produces canonical instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub opcode: Opcode,
    pub rd: Reg,
    pub rs: Reg,
    pub operand: u8,
}

impl Instruction {
    pub const NOP: Instruction = Instruction {
        opcode: Opcode::Nop,
        rd: Reg::R0,
        rs: Reg::R0,
        operand: 0,
    };

    /// Builds the canonical instruction for `opcode`, dropping any field
    /// its format does not use.
    pub fn new(opcode: Opcode, rd: Reg, rs: Reg, operand: u8) -> Instruction {
        let format = opcode.format();
        Instruction {
            opcode,
            rd: if format.uses_rd() { rd } else { Reg::R0 },
            rs: if format.uses_rs() { rs } else { Reg::R0 },
            operand: if format.uses_operand() { operand } else { 0 },
        }
    }

    pub fn reg_reg(opcode: Opcode, rd: Reg, rs: Reg) -> Instruction {
        Instruction::new(opcode, rd, rs, 0)
    }

    pub fn reg(opcode: Opcode, rd: Reg) -> Instruction {
        Instruction::new(opcode, rd, Reg::R0, 0)
    }

    pub fn reg_imm(opcode: Opcode, rd: Reg, operand: u8) -> Instruction {
        Instruction::new(opcode, rd, Reg::R0, operand)
    }

    pub fn imm(opcode: Opcode, operand: u8) -> Instruction {
        Instruction::new(opcode, Reg::R0, Reg::R0, operand)
    }

    pub fn is_canonical(&self) -> bool {
        *self == Instruction::new(self.opcode, self.rd, self.rs, self.operand)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = self.opcode;
        match op.format() {
            Format::RegReg => write!(f, "{op} {}, {}", self.rd, self.rs),
            Format::Reg => write!(f, "{op} {}", self.rd),
            Format::RegImm => write!(f, "{op} {}, 0x{:02X}", self.rd, self.operand),
            Format::Imm if op == Opcode::Nop && self.operand == 0 => f.write_str("NOP"),
            Format::Imm => write!(f, "{op} 0x{:02X}", self.operand),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("illegal opcode {code:#07b} in word {word:#06X}")]
pub struct IllegalOpcode {
    pub word: u16,
    pub code: u8,
}

/// Packs an instruction into its 16-bit word. Unused fields encode as zero.
pub fn encode(instr: &Instruction) -> u16 {
    let format = instr.opcode.format();
    let mut word = (instr.opcode.code() as u16) << 11;
    if format.uses_rd() {
        word |= (instr.rd.0 as u16) << 8;
    }
    if format.uses_rs() {
        word |= (instr.rs.0 as u16) << 5;
    }
    if format.uses_operand() {
        word |= instr.operand as u16;
    }
    word
}

/// Unpacks a word. Bits outside the opcode's format are ignored.
pub fn decode(word: u16) -> Result<Instruction, IllegalOpcode> {
    let code = (word >> 11) as u8;
    let opcode = Opcode::from_code(code).ok_or(IllegalOpcode { word, code })?;
    let rd = Reg(((word >> 8) & 0x7) as u8);
    let rs = Reg(((word >> 5) & 0x7) as u8);
    Ok(Instruction::new(opcode, rd, rs, (word & 0xFF) as u8))
}
