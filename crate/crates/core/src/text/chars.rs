use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercase letters, digits, space and common ASCII punctuation (69 symbols).
pub const DEFAULT_ALPHABET: &str =
    "abcdefghijklmnopqrstuvwxyz0123456789 -,;.!?:'\"/\\|_@#$%^&*~`+=<>()[]{}";

pub const DEFAULT_MAX_LEN: usize = 280;

/// Ordered character set for quantization; index `i` maps to symbol `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: &str) -> Result<Self> {
        let mut seen = Vec::new();
        for c in symbols.chars() {
            if seen.contains(&c) {
                return Err(Error::Config(format!("alphabet repeats {c:?}")));
            }
            seen.push(c);
        }
        if seen.is_empty() {
            return Err(Error::Config("alphabet is empty".into()));
        }
        Ok(Alphabet { symbols: seen })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// 1-based index of `c`, or 0 when absent.
    pub fn index_of(&self, c: char) -> u16 {
        self.symbols
            .iter()
            .position(|&s| s == c)
            .map_or(0, |i| (i + 1) as u16)
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::new(DEFAULT_ALPHABET).expect("default alphabet is valid")
    }
}

impl TryFrom<String> for Alphabet {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Alphabet::new(&s)
    }
}

impl From<Alphabet> for String {
    fn from(a: Alphabet) -> String {
        a.symbols.into_iter().collect()
    }
}

/// Fixed-length character indices; 0 marks padding or out-of-alphabet symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharSequence {
    indices: Vec<u16>,
}

impl CharSequence {
    pub fn from_indices(indices: Vec<u16>) -> Self {
        CharSequence { indices }
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Lowercase `text`, map each character into `alphabet`, truncate or pad to `max_len`.
pub fn quantize_chars(text: &str, alphabet: &Alphabet, max_len: usize) -> CharSequence {
    let mut indices: Vec<u16> = text
        .chars()
        .flat_map(char::to_lowercase)
        .take(max_len)
        .map(|c| alphabet.index_of(c))
        .collect();
    indices.resize(max_len, 0);
    CharSequence { indices }
}
