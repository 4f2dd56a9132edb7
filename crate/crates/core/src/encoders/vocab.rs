use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
/// Reserved token substituted for entity words by the mask label schemes.
pub const MASK_TOKEN: &str = "[mask]";

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;
pub const MASK_INDEX: usize = 2;

/// Number of capitalization classes: lower, title, upper, other.
pub const CASE_CLASSES: usize = 4;

/// Capitalization class of a surface token.
pub fn case_class(token: &str) -> usize {
    let letters: Vec<char> = token.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() || letters.iter().all(|c| c.is_lowercase()) {
        0
    } else if letters.iter().all(|c| c.is_uppercase()) {
        if letters.len() == 1 {
            1
        } else {
            2
        }
    } else if letters[0].is_uppercase() && letters[1..].iter().all(|c| c.is_lowercase()) {
        1
    } else {
        3
    }
}

/// Dense token index with the specials `<pad>`, `<unk>`, `[mask]` first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    lowercase: bool,
}

impl Vocabulary {
    fn with_specials(lowercase: bool) -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
            lowercase,
        };
        for s in [PAD_TOKEN, UNK_TOKEN, MASK_TOKEN] {
            v.push(s.to_string());
        }
        v
    }

    fn push(&mut self, token: String) {
        if !self.index.contains_key(&token) {
            self.index.insert(token.clone(), self.tokens.len());
            self.tokens.push(token);
        }
    }

    /// Corpus tokens seen at least `min_freq` times (in order of first
    /// appearance), then `extra` words regardless of frequency.
    pub fn build<'a, I, E, S>(sentences: I, min_freq: usize, extra: E, lowercase: bool) -> Self
    where
        I: IntoIterator<Item = &'a Sentence>,
        E: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Self::with_specials(lowercase);
        let mut order = Vec::new();
        let mut freq: HashMap<String, usize> = HashMap::new();
        for s in sentences {
            for t in &s.tokens {
                let key = v.normalize(t);
                let c = freq.entry(key.clone()).or_insert(0);
                if *c == 0 {
                    order.push(key);
                }
                *c += 1;
            }
        }
        for key in order {
            if freq[&key] >= min_freq.max(1) {
                v.push(key);
            }
        }
        for w in extra {
            let key = v.normalize(w.as_ref());
            v.push(key);
        }
        v
    }

    pub fn from_tokens(tokens: Vec<String>, lowercase: bool) -> Result<Self> {
        let mut v = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
            lowercase,
        };
        for t in tokens {
            if v.index.contains_key(&t) {
                return Err(Error::Format(format!("duplicate vocabulary entry `{t}`")));
            }
            v.push(t);
        }
        if v.tokens.get(PAD_INDEX).map(String::as_str) != Some(PAD_TOKEN)
            || v.tokens.get(UNK_INDEX).map(String::as_str) != Some(UNK_TOKEN)
            || v.tokens.get(MASK_INDEX).map(String::as_str) != Some(MASK_TOKEN)
        {
            return Err(Error::Format("vocabulary does not start with the special tokens".into()));
        }
        Ok(v)
    }

    fn normalize(&self, token: &str) -> String {
        if self.lowercase {
            token.to_lowercase()
        } else {
            token.to_string()
        }
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        if token == MASK_TOKEN {
            return Some(MASK_INDEX);
        }
        self.index.get(&self.normalize(token)).copied()
    }

    /// Index of `token`, or the unknown index.
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK_INDEX)
    }

    pub fn lookup_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    /// One token per line, specials included.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R, lowercase: bool) -> Result<Self> {
        let tokens = r.lines().collect::<std::io::Result<Vec<_>>>()?;
        Self::from_tokens(tokens, lowercase)
    }
}
