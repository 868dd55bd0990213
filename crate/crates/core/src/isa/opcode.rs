use std::fmt;
use std::str::FromStr;

/// Operand layout of an instruction word.
///
/// ```text
///  15    11 10   8 7    5 4     0
/// | opcode |  rd  |  rs  | 00000 |   RegReg
/// | opcode |  rd  |    00000000   |   Reg
/// | opcode |  rd  |   operand8    |   RegImm
/// | opcode |  000 |   operand8    |   Imm
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    RegReg,
    Reg,
    RegImm,
    Imm,
}

impl Format {
    pub fn uses_rd(self) -> bool {
        !matches!(self, Format::Imm)
    }

    pub fn uses_rs(self) -> bool {
        matches!(self, Format::RegReg)
    }

    pub fn uses_operand(self) -> bool {
        matches!(self, Format::RegImm | Format::Imm)
    }
}

macro_rules! opcodes {
    ($($variant:ident = $code:literal, $mnemonic:literal, $format:ident;)*) => {
        /// The 5-bit operation code of an instruction.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u8)]
        pub enum Opcode {
            $($variant = $code,)*
        }

        impl Opcode {
            pub const ALL: [Opcode; 30] = [$(Opcode::$variant,)*];

            pub fn from_code(code: u8) -> Option<Opcode> {
                match code {
                    $($code => Some(Opcode::$variant),)*
                    _ => None,
                }
            }

            pub fn mnemonic(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $mnemonic,)*
                }
            }

            pub fn format(self) -> Format {
                match self {
                    $(Opcode::$variant => Format::$format,)*
                }
            }
        }
    };
}

opcodes! {
    Nop   = 0b00000, "NOP",   Imm;
    Load  = 0b00001, "LOAD",  RegImm;
    Store = 0b00010, "STORE", RegImm;
    Move  = 0b00011, "MOVE",  RegReg;
    Loadi = 0b00100, "LOADI", RegImm;
    Bi    = 0b00101, "BI",    Imm;
    Bgti  = 0b00110, "BGTI",  Imm;
    Inc   = 0b00111, "INC",   Reg;
    Dec   = 0b01000, "DEC",   Reg;
    And   = 0b01001, "AND",   RegReg;
    Or    = 0b01010, "OR",    RegReg;
    Xor   = 0b01011, "XOR",   RegReg;
    Not   = 0b01100, "NOT",   Reg;
    Add   = 0b01101, "ADD",   RegReg;
    Sub   = 0b01110, "SUB",   RegReg;
    Zero  = 0b01111, "ZERO",  Reg;
    Port0 = 0b10000, "PORT0", Reg;
    Blt   = 0b10001, "BLT",   Reg;
    Bneq  = 0b10010, "BNEQ",  Reg;
    Port1 = 0b10011, "PORT1", Reg;
    Bgt   = 0b10100, "BGT",   Reg;
    Bch   = 0b10110, "BCH",   Reg;
    Beq   = 0b10111, "BEQ",   Reg;
    B7s   = 0b11000, "B7S",   Reg;
    Blte  = 0b11001, "BLTE",  Reg;
    Shl   = 0b11010, "SHL",   Reg;
    Shr   = 0b11011, "SHR",   Reg;
    Ror   = 0b11100, "ROR",   Reg;
    Rol   = 0b11101, "ROL",   Reg;
    Uarts = 0b11110, "UARTS", Reg;
}

impl Opcode {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_branch(self) -> bool {
        matches!(
            self,
            Opcode::Bi
                | Opcode::Bgti
                | Opcode::Bch
                | Opcode::Beq
                | Opcode::Bneq
                | Opcode::Bgt
                | Opcode::Blt
                | Opcode::Blte
        )
    }

    /// Branches whose target is taken from a register rather than the operand.
    pub fn is_register_branch(self) -> bool {
        self.is_branch() && self.format() == Format::Reg
    }

    /// Operations computed by the ALU. `ZERO` writes a constant and bypasses it.
    pub fn is_alu(self) -> bool {
        matches!(
            self,
            Opcode::Inc
                | Opcode::Dec
                | Opcode::And
                | Opcode::Or
                | Opcode::Xor
                | Opcode::Not
                | Opcode::Add
                | Opcode::Sub
                | Opcode::Shl
                | Opcode::Shr
                | Opcode::Ror
                | Opcode::Rol
        )
    }

    /// Operations that update the condition flags.
    pub fn writes_flags(self) -> bool {
        self.is_alu() || self == Opcode::Zero
    }

    pub fn writes_register(self) -> bool {
        self.writes_flags() || matches!(self, Opcode::Load | Opcode::Move | Opcode::Loadi | Opcode::Port1)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mnemonic `{0}`")]
pub struct UnknownMnemonic(pub String);

impl FromStr for Opcode {
    type Err = UnknownMnemonic;

    /// Mnemonics are case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Opcode::ALL
            .iter()
            .copied()
            .find(|op| op.mnemonic().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownMnemonic(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn table_is_a_bijection() {
        let codes: HashSet<u8> = Opcode::ALL.iter().map(|op| op.code()).collect();
        let names: HashSet<&str> = Opcode::ALL.iter().map(|op| op.mnemonic()).collect();
        assert_eq!(codes.len(), 30);
        assert_eq!(names.len(), 30);
        for op in Opcode::ALL {
            assert!(op.code() < 32);
            assert_eq!(Opcode::from_code(op.code()), Some(op));
            assert_eq!(op.mnemonic().parse::<Opcode>().unwrap(), op);
        }
    }

    #[test]
    fn gaps_in_the_table() {
        assert_eq!(Opcode::from_code(0b10101), None);
        assert_eq!(Opcode::from_code(0b11111), None);
        let missing: Vec<u8> = (0..32).filter(|c| Opcode::from_code(*c).is_none()).collect();
        assert_eq!(missing, vec![0b10101, 0b11111]);
    }

    #[test]
    fn selected_codes() {
        assert_eq!(Opcode::Nop.code(), 0b00000);
        assert_eq!(Opcode::Loadi.code(), 0b00100);
        assert_eq!(Opcode::Add.code(), 0b01101);
        assert_eq!(Opcode::Bch.code(), 0b10110);
        assert_eq!(Opcode::Rol.code(), 0b11101);
        assert_eq!(Opcode::Uarts.code(), 0b11110);
    }

    #[test]
    fn mnemonic_parse_ignores_case() {
        assert_eq!("ldi".parse::<Opcode>(), Err(UnknownMnemonic("ldi".into())));
        assert_eq!("b7s".parse::<Opcode>().unwrap(), Opcode::B7s);
    }

    #[test]
    fn format_classes() {
        let reg_reg: Vec<_> = Opcode::ALL
            .into_iter()
            .filter(|op| op.format() == Format::RegReg)
            .collect();
        assert_eq!(
            reg_reg,
            [
                Opcode::Move,
                Opcode::And,
                Opcode::Or,
                Opcode::Xor,
                Opcode::Add,
                Opcode::Sub
            ]
        );
        let imm: Vec<_> = Opcode::ALL
            .into_iter()
            .filter(|op| op.format() == Format::Imm)
            .collect();
        assert_eq!(imm, [Opcode::Nop, Opcode::Bi, Opcode::Bgti]);
        assert_eq!(Opcode::ALL.iter().filter(|op| op.is_branch()).count(), 8);
    }
}
