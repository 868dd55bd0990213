use std::fmt::Write as _;

/// Number of 16-bit words in the instruction ROM.
pub const ROM_WORDS: usize = 256;

/// The full contents of the instruction ROM. Unprogrammed words hold `NOP`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RomImage {
    words: [u16; ROM_WORDS],
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("expected {ROM_WORDS} words, found {0}")]
    WrongLength(usize),
    #[error("line {line}: malformed word `{text}` (expected 4 hex digits)")]
    Malformed { line: usize, text: String },
}

impl RomImage {
    pub fn new(words: [u16; ROM_WORDS]) -> RomImage {
        RomImage { words }
    }

    /// Builds an image from a program prefix, padding the rest with `NOP`.
    /// Returns `None` if the program does not fit.
    pub fn from_prefix(program: &[u16]) -> Option<RomImage> {
        if program.len() > ROM_WORDS {
            return None;
        }
        let mut words = [0; ROM_WORDS];
        words[..program.len()].copy_from_slice(program);
        Some(RomImage { words })
    }

    pub fn words(&self) -> &[u16; ROM_WORDS] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u16; ROM_WORDS] {
        &mut self.words
    }

    pub fn word(&self, addr: u8) -> u16 {
        self.words[addr as usize]
    }

    /// Parses the image file format: exactly 256 lines of four hex digits,
    /// most significant nibble first. A trailing newline is optional.
    pub fn from_hex(text: &str) -> Result<RomImage, ImageError> {
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() != ROM_WORDS {
            return Err(ImageError::WrongLength(lines.len()));
        }
        let mut words = [0; ROM_WORDS];
        for (i, raw) in lines.iter().enumerate() {
            let line = raw.trim();
            let ok = line.len() == 4 && line.bytes().all(|b| b.is_ascii_hexdigit());
            words[i] = ok
                .then(|| u16::from_str_radix(line, 16).ok())
                .flatten()
                .ok_or_else(|| ImageError::Malformed {
                    line: i + 1,
                    text: line.to_string(),
                })?;
        }
        Ok(RomImage { words })
    }

    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(ROM_WORDS * 5);
        for w in &self.words {
            writeln!(out, "{w:04X}").unwrap();
        }
        out
    }
}

impl Default for RomImage {
    fn default() -> Self {
        RomImage { words: [0; ROM_WORDS] }
    }
}

impl std::fmt::Debug for RomImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let used = self.words.iter().rposition(|w| *w != 0).map_or(0, |i| i + 1);
        f.debug_struct("RomImage")
            .field("words", &&self.words[..used])
            .finish_non_exhaustive()
    }
}
