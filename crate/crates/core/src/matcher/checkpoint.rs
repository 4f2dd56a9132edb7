//! Binary checkpoint and label-cache files.
//!
//! Layout (all integers little-endian `u64` unless noted):
//!
//! ```text
//! magic "LSNER1" | version u32 | kind u8 (0 model, 1 label cache)
//! model: config echo | vocabulary | taxonomy | label inputs | sections
//! cache: metadata | taxonomy hash | taxonomy | sections
//! string   = len, UTF-8 bytes
//! section  = name string, rows, cols, rows*cols f64
//! ```

use std::io::{Read, Write};

use crate::corpus::LabelTaxonomy;
use crate::encoders::{LabelInput, Vocabulary};
use crate::error::{Error, Result};
use crate::numeric::{ParamStore, RealMatrix};

use super::cache::LabelCache;
use super::config::{parse_entries, render_entries, ModelConfig};
use super::model::ModelState;

pub const MAGIC: &[u8; 6] = b"LSNER1";
pub const FORMAT_VERSION: u32 = 1;
const KIND_MODEL: u8 = 0;
const KIND_CACHE: u8 = 1;
const MAX_STRING: u64 = 1 << 30;

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.inner.write_all(&v.to_le_bytes())?)
    }

    fn usize(&mut self, v: usize) -> Result<()> {
        self.u64(v as u64)
    }

    fn str(&mut self, s: &str) -> Result<()> {
        self.usize(s.len())?;
        Ok(self.inner.write_all(s.as_bytes())?)
    }

    fn strings(&mut self, items: &[String]) -> Result<()> {
        self.usize(items.len())?;
        items.iter().try_for_each(|s| self.str(s))
    }

    fn section(&mut self, name: &str, m: &RealMatrix) -> Result<()> {
        self.str(name)?;
        self.usize(m.rows())?;
        self.usize(m.cols())?;
        let mut buf = Vec::with_capacity(m.data().len() * 8);
        for v in m.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        Ok(self.inner.write_all(&buf)?)
    }

    fn header(&mut self, kind: u8) -> Result<()> {
        self.inner.write_all(MAGIC)?;
        self.inner.write_all(&FORMAT_VERSION.to_le_bytes())?;
        Ok(self.inner.write_all(&[kind])?)
    }
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
        Ok(b)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn len(&mut self, what: &str) -> Result<usize> {
        let n = self.u64()?;
        if n > MAX_STRING {
            return Err(Error::Format(format!("implausible {what} length {n}")));
        }
        Ok(n as usize)
    }

    fn str(&mut self) -> Result<String> {
        let n = self.len("string")?;
        let mut buf = vec![0u8; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated string: {e}")))?;
        String::from_utf8(buf).map_err(|_| Error::Format("string is not UTF-8".into()))
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.len("list")?;
        (0..n).map(|_| self.str()).collect()
    }

    fn section(&mut self) -> Result<(String, RealMatrix)> {
        let name = self.str()?;
        let rows = self.len("rows")?;
        let cols = self.len("cols")?;
        let count = rows
            .checked_mul(cols)
            .filter(|&c| c as u64 <= MAX_STRING)
            .ok_or_else(|| Error::Format(format!("section `{name}` is too large")))?;
        let mut buf = vec![0u8; count * 8];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated section `{name}`: {e}")))?;
        let data = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok((name, RealMatrix::new(rows, cols, data)?))
    }

    fn header(&mut self, kind: u8) -> Result<()> {
        let magic: [u8; 6] = self.bytes()?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic, not an lsner file".into()));
        }
        let version = u32::from_le_bytes(self.bytes()?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let [found] = self.bytes::<1>()?;
        if found != kind {
            let name = |k| if k == KIND_MODEL { "model checkpoint" } else { "label cache" };
            return Err(Error::Format(format!(
                "expected a {}, found a {}",
                name(kind),
                name(found)
            )));
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        let mut rest = [0u8; 1];
        match self.inner.read(&mut rest)? {
            0 => Ok(()),
            _ => Err(Error::Format("trailing bytes after the last section".into())),
        }
    }
}

fn write_inputs<W: Write>(w: &mut Writer<W>, inputs: &[LabelInput]) -> Result<()> {
    w.usize(inputs.len())?;
    for input in inputs {
        match input {
            LabelInput::Name(words) => {
                w.inner.write_all(&[0])?;
                w.strings(words)?;
            }
            LabelInput::Contexts(sentences) => {
                w.inner.write_all(&[1])?;
                w.usize(sentences.len())?;
                for s in sentences {
                    w.strings(s)?;
                }
            }
        }
    }
    Ok(())
}

fn read_inputs<R: Read>(r: &mut Reader<R>) -> Result<Vec<LabelInput>> {
    let n = r.len("label list")?;
    (0..n)
        .map(|_| {
            let [tag] = r.bytes::<1>()?;
            match tag {
                0 => Ok(LabelInput::Name(r.strings()?)),
                1 => {
                    let k = r.len("context list")?;
                    Ok(LabelInput::Contexts((0..k).map(|_| r.strings()).collect::<Result<_>>()?))
                }
                t => Err(Error::Format(format!("unknown label input tag {t}"))),
            }
        })
        .collect()
}

/// Config echo: model keys first, then the model's extra echo lines.
fn config_echo(m: &ModelState) -> String {
    let mut entries = m.config.entries();
    entries.extend(m.echo.iter().cloned());
    render_entries(&entries)
}

pub fn write_checkpoint<W: Write>(w: W, m: &ModelState) -> Result<()> {
    let mut w = Writer { inner: w };
    w.header(KIND_MODEL)?;
    w.str(&config_echo(m))?;
    w.strings(m.vocab.tokens())?;
    w.str(&m.taxonomy.to_file_string())?;
    write_inputs(&mut w, &m.label_inputs)?;
    w.usize(m.store.len())?;
    for g in m.store.groups() {
        w.section(&g.name, &g.values)?;
    }
    Ok(w.inner.flush()?)
}

pub fn checkpoint_bytes(m: &ModelState) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, m)?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<ModelState> {
    let mut r = Reader { inner: r };
    r.header(KIND_MODEL)?;
    let echo_text = r.str()?;
    let mut config = ModelConfig::default();
    let mut echo = Vec::new();
    for line in echo_text.lines() {
        let map = parse_entries(line)?;
        for (k, v) in map {
            if !config.set(&k, &v)? {
                echo.push((k, v));
            }
        }
    }
    let vocab = Vocabulary::from_tokens(r.strings()?, config.lowercase)?;
    let taxonomy = LabelTaxonomy::parse_str(&r.str()?)?;
    let inputs = read_inputs(&mut r)?;
    let n = r.len("section list")?;
    let mut store = ParamStore::new();
    for _ in 0..n {
        let (name, values) = r.section()?;
        values.ensure_finite("checkpoint")?;
        store.insert(name, values)?;
    }
    r.finish()?;
    ModelState::assemble(config, vocab, store, taxonomy, inputs, echo)
}

pub fn write_label_cache<W: Write>(w: W, c: &LabelCache) -> Result<()> {
    let mut w = Writer { inner: w };
    w.header(KIND_CACHE)?;
    w.str(&render_entries(&c.metadata))?;
    w.str(&c.taxonomy_hash)?;
    w.str(&c.taxonomy.to_file_string())?;
    w.usize(1)?;
    w.section("labels", &c.matrix)?;
    Ok(w.inner.flush()?)
}

pub fn read_label_cache<R: Read>(r: R) -> Result<LabelCache> {
    let mut r = Reader { inner: r };
    r.header(KIND_CACHE)?;
    let meta_text = r.str()?;
    let mut metadata = Vec::new();
    for line in meta_text.lines() {
        metadata.extend(parse_entries(line)?);
    }
    let taxonomy_hash = r.str()?;
    let taxonomy = LabelTaxonomy::parse_str(&r.str()?)?;
    if taxonomy.hash() != taxonomy_hash {
        return Err(Error::Format("label cache taxonomy does not match its hash".into()));
    }
    if r.len("section list")? != 1 {
        return Err(Error::Format("label cache must hold exactly one section".into()));
    }
    let (name, matrix) = r.section()?;
    if name != "labels" {
        return Err(Error::Format(format!("unexpected cache section `{name}`")));
    }
    r.finish()?;
    Ok(LabelCache {
        taxonomy_hash,
        taxonomy,
        matrix,
        metadata,
    })
}
