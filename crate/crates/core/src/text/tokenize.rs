//! Rule-based social media tokenizer.
//!
//! URLs, mentions, hashtags and emoticons are kept whole. Everything else is
//! split into word runs and punctuation runs. Tokens are lowercased except
//! URLs, whose paths are case-sensitive.

use std::sync::LazyLock;

use regex::Regex;

/// An ordered list of non-empty tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        TokenSequence { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

// NOTE: alternation order matters, earlier branches win at a given offset.
static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?x)
        (?P<url>(?i:https?://|www\.)\S+)
      | (?P<emoticon>
            [<>]?[:;=8][\-o\*']?[\)\]\(\[dDpP/\\:\}\{@\|]
          | [\)\]\(\[dDpP/\\\}\{@\|][\-o\*']?[:;=8]
          | <3
          | \^_?\^
        )
      | (?P<mention>@\w+)
      | (?P<hashtag>\#\w+)
      | (?P<word>[\p{L}\p{N}_]+(?:['’\-][\p{L}\p{N}_]+)*)
      | (?P<punct>[\p{P}\p{S}]+?)
      | (?P<other>\S)
    "#,
    )
    .expect("token pattern compiles")
});

static URL_TRAILING: &[char] = &['.', ',', '!', '?', ';', ':', ')', ']', '"', '\'', '…'];

/// Split `text` into tokens.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for caps in TOKEN_RE.captures_iter(text) {
        if let Some(m) = caps.name("url") {
            let raw = m.as_str();
            let trimmed = raw.trim_end_matches(URL_TRAILING);
            if trimmed.is_empty() {
                push_punct(&mut tokens, raw);
                continue;
            }
            tokens.push(trimmed.to_string());
            if trimmed.len() < raw.len() {
                push_punct(&mut tokens, &raw[trimmed.len()..]);
            }
        } else if let Some(m) = caps.name("punct") {
            push_punct(&mut tokens, m.as_str());
        } else {
            let m = caps.get(0).expect("whole match");
            tokens.push(m.as_str().to_lowercase());
        }
    }
    merge_repeated_punct(&mut tokens);
    TokenSequence::new(tokens)
}

/// True if the token looks like a URL (kept case-sensitive by the tokenizer).
pub fn is_url(token: &str) -> bool {
    let lower = token.get(..8).unwrap_or(token).to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn push_punct(tokens: &mut Vec<String>, s: &str) {
    for c in s.chars() {
        tokens.push(c.to_string());
    }
}

// "!!!" and "..." become one token each, as social media text uses runs for emphasis.
fn merge_repeated_punct(tokens: &mut Vec<String>) {
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    for t in tokens.drain(..) {
        let single_punct = |s: &str| {
            let mut cs = s.chars();
            matches!((cs.next(), cs.next()), (Some(c), None) if c.is_ascii_punctuation())
        };
        if let Some(last) = out.last_mut() {
            let last_char = last.chars().next();
            if single_punct(&t)
                && last.chars().all(|c| Some(c) == last_char)
                && last_char == t.chars().next()
            {
                last.push_str(&t);
                continue;
            }
        }
        out.push(t);
    }
    *tokens = out;
}
