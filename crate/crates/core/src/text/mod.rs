//! Tokenization, character quantization, embedding tables and vector similarity.

mod chars;
mod embedding;
mod tokenize;

pub use chars::{quantize_chars, Alphabet, CharSequence, DEFAULT_ALPHABET, DEFAULT_MAX_LEN};
pub use embedding::{cosine, load_embeddings, parse_embeddings, EmbeddingTable, DEFAULT_DIMENSION};
pub use tokenize::{is_url, tokenize, TokenSequence};
