use std::fmt::Write as _;

use super::{decode, encode, RomImage};

/// Renders one word. Words that do not decode, or that carry bits outside
/// their format, become `.word` so the text reassembles to the same word.
pub fn disassemble_word(word: u16) -> String {
    match decode(word) {
        Ok(instr) if encode(&instr) == word => instr.to_string(),
        _ => format!(".word 0x{word:04X}"),
    }
}

/// One line per ROM word, in address order.
pub fn disassemble(image: &RomImage) -> String {
    let mut out = String::new();
    for w in image.words() {
        writeln!(out, "{}", disassemble_word(*w)).unwrap();
    }
    out
}
