//! Byte-level BPE tokenizer in the style used by contrastive text encoders.
//!
//! Text is whitespace-normalized and lowercased, split into words, mapped
//! byte-by-byte onto printable characters, then merged greedily by merge
//! rank. Word-final symbols carry a `</w>` suffix.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const END_OF_WORD: &str = "</w>";
const SPECIAL_TOKENS: [&str; 2] = ["<|startoftext|>", "<|endoftext|>"];

/// The reversible byte to printable-character table.
pub fn bytes_to_unicode() -> [char; 256] {
    let printable = |b: u32| {
        (b'!' as u32..=b'~' as u32).contains(&b)
            || (0xA1..=0xAC).contains(&b)
            || (0xAE..=0xFF).contains(&b)
    };
    let mut table = ['\0'; 256];
    let mut extra = 0;
    for b in 0..256u32 {
        let c = if printable(b) {
            b
        } else {
            extra += 1;
            255 + extra
        };
        table[b as usize] = char::from_u32(c).expect("below surrogate range");
    }
    table
}

/// Parses a merges file: one `left right` pair per line, optional
/// `#version` header, blank lines ignored.
pub fn parse_merges(text: &str) -> Result<Vec<(String, String)>> {
    let mut merges = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() || (n == 0 && line.starts_with("#version")) {
            continue;
        }
        let mut parts = line.split(' ');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                merges.push((a.to_string(), b.to_string()))
            }
            _ => {
                return Err(Error::Tokenizer(format!(
                    "malformed merge on line {}: {line:?}",
                    n + 1
                )))
            }
        }
    }
    Ok(merges)
}

/// Merge ranks, vocabulary and framing ids for one text encoder.
#[derive(Debug, Clone)]
pub struct TokenizerAssets {
    ranks: BTreeMap<(String, String), usize>,
    vocab: BTreeMap<String, u32>,
    byte_encoder: [char; 256],
    context_length: usize,
    sot_id: u32,
    eot_id: u32,
}

impl TokenizerAssets {
    pub fn new(
        merges: Vec<(String, String)>,
        vocab: BTreeMap<String, u32>,
        context_length: usize,
        sot_id: u32,
        eot_id: u32,
    ) -> Result<Self> {
        if context_length < 2 {
            return Err(Error::Tokenizer(format!(
                "context length {context_length} < 2"
            )));
        }
        if sot_id == eot_id {
            return Err(Error::Tokenizer("start and end ids coincide".into()));
        }
        let byte_encoder = bytes_to_unicode();
        for c in byte_encoder {
            let mut s = String::from(c);
            if !vocab.contains_key(&s) {
                return Err(Error::Tokenizer(format!(
                    "vocabulary lacks byte symbol {s:?}"
                )));
            }
            s.push_str(END_OF_WORD);
            if !vocab.contains_key(&s) {
                return Err(Error::Tokenizer(format!(
                    "vocabulary lacks byte symbol {s:?}"
                )));
            }
        }
        let mut ranks = BTreeMap::new();
        for (rank, (a, b)) in merges.into_iter().enumerate() {
            let joined = format!("{a}{b}");
            if !vocab.contains_key(&joined) {
                return Err(Error::Tokenizer(format!(
                    "vocabulary lacks merge product {joined:?}"
                )));
            }
            ranks.entry((a, b)).or_insert(rank);
        }
        Ok(Self {
            ranks,
            vocab,
            byte_encoder,
            context_length,
            sot_id,
            eot_id,
        })
    }

    /// Builds the vocabulary the standard way: byte symbols, their word-final
    /// forms, one entry per merge, then the two framing tokens.
    pub fn from_merges(merges: Vec<(String, String)>, context_length: usize) -> Result<Self> {
        // printable bytes map to themselves and the rest to U+0100 upwards,
        // so ordering by character gives the conventional layout
        let mut byte_chars = bytes_to_unicode();
        byte_chars.sort_unstable();
        let mut symbols: Vec<String> = byte_chars.iter().map(|c| String::from(*c)).collect();
        symbols.extend(byte_chars.iter().map(|c| format!("{c}{END_OF_WORD}")));
        symbols.extend(merges.iter().map(|(a, b)| format!("{a}{b}")));
        symbols.extend(SPECIAL_TOKENS.iter().map(|s| s.to_string()));
        let mut vocab = BTreeMap::new();
        for (i, s) in symbols.into_iter().enumerate() {
            vocab.entry(s).or_insert(i as u32);
        }
        let sot = vocab[SPECIAL_TOKENS[0]];
        let eot = vocab[SPECIAL_TOKENS[1]];
        Self::new(merges, vocab, context_length, sot, eot)
    }

    pub fn context_length(&self) -> usize {
        self.context_length
    }

    pub fn sot_id(&self) -> u32 {
        self.sot_id
    }

    pub fn eot_id(&self) -> u32 {
        self.eot_id
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// BPE ids of `text` without framing or padding.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let cleaned = normalize(text);
        let mut ids = Vec::new();
        for word in split_words(&cleaned) {
            if let Some(&id) = SPECIAL_TOKENS.contains(&word).then(|| &self.vocab[word]) {
                ids.push(id);
                continue;
            }
            let mapped: String = word
                .bytes()
                .map(|b| self.byte_encoder[b as usize])
                .collect();
            for piece in self.bpe(&mapped) {
                // every reachable symbol is in the vocabulary (checked in `new`)
                ids.push(self.vocab[&piece]);
            }
        }
        ids
    }

    /// Fixed-length encoder input: start id, tokens, end id, zero padding.
    /// Overlong inputs are truncated with the end id kept in the last slot.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let mut seq = vec![self.sot_id];
        seq.extend(self.encode(text));
        seq.push(self.eot_id);
        if seq.len() > self.context_length {
            seq.truncate(self.context_length);
            seq[self.context_length - 1] = self.eot_id;
        }
        seq.resize(self.context_length, 0);
        seq
    }

    fn bpe(&self, word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        let mut parts: Vec<String> = chars.iter().map(|c| String::from(*c)).collect();
        if let Some(last) = parts.last_mut() {
            last.push_str(END_OF_WORD);
        }
        while parts.len() > 1 {
            let best = parts
                .windows(2)
                .filter_map(|w| {
                    self.ranks
                        .get(&(w[0].clone(), w[1].clone()))
                        .map(|&r| (r, (w[0].clone(), w[1].clone())))
                })
                .min_by_key(|(r, _)| *r);
            let Some((_, (first, second))) = best else {
                break;
            };
            let mut merged = Vec::with_capacity(parts.len());
            let mut i = 0;
            while i < parts.len() {
                if i + 1 < parts.len() && parts[i] == first && parts[i + 1] == second {
                    merged.push(format!("{first}{second}"));
                    i += 2;
                } else {
                    merged.push(core::mem::take(&mut parts[i]));
                    i += 1;
                }
            }
            parts = merged;
        }
        parts
    }
}

/// Collapses whitespace runs, trims, and lowercases.
fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out.to_lowercase()
}

/// Word splitting equivalent to the usual pattern: framing tokens, English
/// contractions, letter runs, single digits, and runs of other symbols.
fn split_words(text: &str) -> Vec<&str> {
    const CONTRACTIONS: [&str; 7] = ["'s", "'t", "'re", "'ve", "'m", "'ll", "'d"];
    let mut words = Vec::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
            continue;
        }
        let len = if let Some(s) = SPECIAL_TOKENS.iter().find(|s| rest.starts_with(*s)) {
            s.len()
        } else if let Some(s) = CONTRACTIONS.iter().find(|s| rest.starts_with(*s)) {
            s.len()
        } else if c.is_alphabetic() {
            rest.find(|ch: char| !ch.is_alphabetic())
                .unwrap_or(rest.len())
        } else if c.is_numeric() {
            c.len_utf8()
        } else {
            rest.find(|ch: char| ch.is_whitespace() || ch.is_alphabetic() || ch.is_numeric())
                .unwrap_or(rest.len())
        };
        words.push(&rest[..len]);
        rest = &rest[len..];
    }
    words
}
