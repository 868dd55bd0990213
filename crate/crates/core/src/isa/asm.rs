//! Two-pass assembler.
//!
//! Pass one walks the source, assigns an address to every statement and
//! records label definitions. Pass two resolves operands against the symbol
//! table and encodes each statement into the ROM image.

use std::collections::BTreeMap;
use std::fmt;

use super::{encode, Format, Instruction, Opcode, Reg, RomImage, NUM_REGS, ROM_WORDS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AsmErrorKind {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("operand {value} out of range (maximum {max})")]
    OperandOutOfRange { value: String, max: u32 },
    #[error("program too large: address {0} is past the end of ROM")]
    ProgramTooLarge(u32),
    #[error("address {0:#04X} is written twice")]
    Overlap(u16),
    #[error("{0}")]
    Syntax(String),
}

/// An assembler diagnostic with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsmError {
    pub line: usize,
    pub column: usize,
    pub kind: AsmErrorKind,
}

impl fmt::Display for AsmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {} (column {})", self.line, self.kind, self.column)
    }
}

impl std::error::Error for AsmError {}

/// Label name to ROM address. An address of 256 marks a label placed after
/// the last word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable(BTreeMap<String, u16>);

impl SymbolTable {
    pub fn get(&self, label: &str) -> Option<u16> {
        self.0.get(label).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u16)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembly {
    pub image: RomImage,
    pub symbols: SymbolTable,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

#[derive(Debug)]
enum Body<'a> {
    Instr(Opcode, Vec<Token<'a>>),
    Word(Token<'a>),
}

#[derive(Debug)]
struct Stmt<'a> {
    line: usize,
    col: usize,
    addr: u16,
    body: Body<'a>,
}

/// Assembles source text into a full ROM image.
///
/// ```
/// let asm = pec::isa::assemble("loop: BI loop").unwrap();
/// assert_eq!(asm.image.word(0), 0b00101_000_0000_0000);
/// assert_eq!(asm.symbols.get("loop"), Some(0));
/// ```
pub fn assemble(source: &str) -> Result<Assembly, AsmError> {
    let (stmts, symbols) = first_pass(source)?;
    let mut image = RomImage::default();
    for stmt in &stmts {
        let word = match &stmt.body {
            Body::Instr(op, operands) => encode(&build(*op, operands, stmt, &symbols)?),
            Body::Word(tok) => resolve(*tok, &symbols, stmt.line, 0xFFFF)? as u16,
        };
        image.words_mut()[stmt.addr as usize] = word;
    }
    Ok(Assembly { image, symbols })
}

fn first_pass(source: &str) -> Result<(Vec<Stmt<'_>>, SymbolTable), AsmError> {
    let mut symbols = BTreeMap::new();
    let mut stmts = Vec::new();
    let mut written = [false; ROM_WORDS];
    let mut lc: u32 = 0;

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let err = |col: usize, kind| AsmError {
            line,
            column: col,
            kind,
        };
        let code = raw.split(';').next().unwrap_or("");
        let mut rest = Token { text: code, col: 1 };

        // Leading `label:` definitions.
        loop {
            rest = skip_ws(rest);
            let Some(colon) = rest.text.find(':') else { break };
            let name = rest.text[..colon].trim_end();
            if !is_identifier(name) {
                break;
            }
            if is_register_name(name) {
                return Err(err(
                    rest.col,
                    AsmErrorKind::Syntax(format!("`{name}` is a register, not a label")),
                ));
            }
            if symbols.insert(name.to_string(), lc as u16).is_some() {
                return Err(err(rest.col, AsmErrorKind::DuplicateLabel(name.to_string())));
            }
            rest = advance(rest, colon + 1);
        }
        rest = skip_ws(rest);
        if rest.text.trim().is_empty() {
            continue;
        }

        let head_len = rest.text.find(char::is_whitespace).unwrap_or(rest.text.len());
        let head = Token {
            text: &rest.text[..head_len],
            col: rest.col,
        };
        let operands = split_operands(advance(rest, head_len), line)?;

        if let Some(directive) = head.text.strip_prefix('.') {
            let single = match operands.as_slice() {
                [tok] => Ok(*tok),
                _ => Err(err(
                    head.col,
                    AsmErrorKind::Syntax(format!(".{directive} takes one operand")),
                )),
            };
            match directive.to_ascii_lowercase().as_str() {
                "org" => {
                    let tok = single?;
                    let value = parse_number(tok, line, (ROM_WORDS - 1) as u32)?.ok_or_else(|| {
                        err(
                            tok.col,
                            AsmErrorKind::Syntax(format!("expected an address, found `{}`", tok.text)),
                        )
                    })?;
                    lc = value;
                }
                "word" => {
                    let tok = single?;
                    emit(&mut stmts, &mut written, &mut lc, line, head.col, Body::Word(tok))?;
                }
                _ => return Err(err(head.col, AsmErrorKind::UnknownDirective(head.text.to_string()))),
            }
            continue;
        }

        let op: Opcode = head
            .text
            .parse()
            .map_err(|_| err(head.col, AsmErrorKind::UnknownMnemonic(head.text.to_string())))?;
        emit(
            &mut stmts,
            &mut written,
            &mut lc,
            line,
            head.col,
            Body::Instr(op, operands),
        )?;
    }
    Ok((stmts, SymbolTable(symbols)))
}

fn emit<'a>(
    stmts: &mut Vec<Stmt<'a>>,
    written: &mut [bool; ROM_WORDS],
    lc: &mut u32,
    line: usize,
    col: usize,
    body: Body<'a>,
) -> Result<(), AsmError> {
    let addr = *lc;
    if addr as usize >= ROM_WORDS {
        return Err(AsmError {
            line,
            column: col,
            kind: AsmErrorKind::ProgramTooLarge(addr),
        });
    }
    if std::mem::replace(&mut written[addr as usize], true) {
        return Err(AsmError {
            line,
            column: col,
            kind: AsmErrorKind::Overlap(addr as u16),
        });
    }
    stmts.push(Stmt {
        line,
        col,
        addr: addr as u16,
        body,
    });
    *lc += 1;
    Ok(())
}

fn build(op: Opcode, operands: &[Token<'_>], stmt: &Stmt<'_>, symbols: &SymbolTable) -> Result<Instruction, AsmError> {
    let line = stmt.line;
    let arity = |n: &[usize]| {
        if n.contains(&operands.len()) {
            Ok(())
        } else {
            let want = match n {
                [0, 1] => "at most one operand".to_string(),
                [1] => "one operand".to_string(),
                _ => format!("{} operands", n[0]),
            };
            Err(AsmError {
                line,
                column: stmt.col,
                kind: AsmErrorKind::Syntax(format!("{op} takes {want}, found {}", operands.len())),
            })
        }
    };
    let operand8 = |tok| resolve(tok, symbols, line, 0xFF).map(|v| v as u8);
    Ok(match op.format() {
        Format::RegReg => {
            arity(&[2])?;
            Instruction::reg_reg(op, register(operands[0], line)?, register(operands[1], line)?)
        }
        Format::Reg => {
            arity(&[1])?;
            Instruction::reg(op, register(operands[0], line)?)
        }
        Format::RegImm => {
            arity(&[2])?;
            Instruction::reg_imm(op, register(operands[0], line)?, operand8(operands[1])?)
        }
        Format::Imm if op == Opcode::Nop => {
            arity(&[0, 1])?;
            let value = operands.first().map(|t| operand8(*t)).transpose()?;
            Instruction::imm(op, value.unwrap_or(0))
        }
        Format::Imm => {
            arity(&[1])?;
            Instruction::imm(op, operand8(operands[0])?)
        }
    })
}

fn register(tok: Token<'_>, line: usize) -> Result<Reg, AsmError> {
    let err = |kind| AsmError {
        line,
        column: tok.col,
        kind,
    };
    let digits = tok
        .text
        .strip_prefix(['R', 'r'])
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| {
            err(AsmErrorKind::Syntax(format!(
                "expected a register R0-R7, found `{}`",
                tok.text
            )))
        })?;
    digits.parse::<u8>().ok().and_then(Reg::new).ok_or_else(|| {
        err(AsmErrorKind::OperandOutOfRange {
            value: tok.text.to_string(),
            max: NUM_REGS as u32 - 1,
        })
    })
}

/// A numeric literal or label reference, checked against `max`.
fn resolve(tok: Token<'_>, symbols: &SymbolTable, line: usize, max: u32) -> Result<u32, AsmError> {
    if let Some(value) = parse_number(tok, line, max)? {
        return Ok(value);
    }
    let err = |kind| AsmError {
        line,
        column: tok.col,
        kind,
    };
    if !is_identifier(tok.text) {
        return Err(err(AsmErrorKind::Syntax(format!(
            "expected a number or label, found `{}`",
            tok.text
        ))));
    }
    let addr = symbols
        .get(tok.text)
        .ok_or_else(|| err(AsmErrorKind::UndefinedLabel(tok.text.to_string())))?;
    if addr as u32 > max {
        return Err(err(AsmErrorKind::OperandOutOfRange {
            value: format!("{} ({addr})", tok.text),
            max,
        }));
    }
    Ok(addr as u32)
}

/// `Ok(None)` when the token is not a numeric literal at all.
fn parse_number(tok: Token<'_>, line: usize, max: u32) -> Result<Option<u32>, AsmError> {
    let text = tok.text;
    let (digits, radix) = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => (hex, 16),
        None if text.starts_with(|c: char| c.is_ascii_digit()) => (text, 10),
        None => return Ok(None),
    };
    let err = |kind| AsmError {
        line,
        column: tok.col,
        kind,
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_digit(radix)) {
        return Err(err(AsmErrorKind::Syntax(format!("malformed number `{text}`"))));
    }
    match u64::from_str_radix(digits, radix) {
        Ok(v) if v <= max as u64 => Ok(Some(v as u32)),
        _ => Err(err(AsmErrorKind::OperandOutOfRange {
            value: text.to_string(),
            max,
        })),
    }
}

fn split_operands(rest: Token<'_>, line: usize) -> Result<Vec<Token<'_>>, AsmError> {
    if rest.text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut offset = 0;
    for part in rest.text.split(',') {
        let lead = part.len() - part.trim_start().len();
        let tok = Token {
            text: part.trim(),
            col: rest.col + offset + lead,
        };
        if tok.text.is_empty() || tok.text.contains(char::is_whitespace) {
            return Err(AsmError {
                line,
                column: tok.col,
                kind: AsmErrorKind::Syntax("malformed operand list".into()),
            });
        }
        out.push(tok);
        offset += part.len() + 1;
    }
    Ok(out)
}

fn skip_ws(tok: Token<'_>) -> Token<'_> {
    let trimmed = tok.text.trim_start();
    Token {
        text: trimmed,
        col: tok.col + (tok.text.len() - trimmed.len()),
    }
}

fn advance(tok: Token<'_>, n: usize) -> Token<'_> {
    Token {
        text: &tok.text[n..],
        col: tok.col + n,
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_register_name(s: &str) -> bool {
    s.strip_prefix(['R', 'r'])
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}
