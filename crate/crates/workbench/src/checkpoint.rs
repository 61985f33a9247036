//! Binary checkpoint codec.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "CASE" | version u32 | manifest (u32 len + UTF-8 `key = value` lines)
//! | context vocabulary | seed vocabulary   (u32 count, then u32 len + bytes each)
//! | lexicon (u32 count, then u32 len + bytes + u64 frequency each)
//! | params (u32 count, then u32 name len + name + u32 rank + u32 dims + f32 values each)
//! | CRC32 of everything before it
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use case_core::corpus::{TermLexicon, Vocabulary};
use case_core::encoders::HyperParams;
use case_core::model::{CaseModel, ModelConfig};
use case_core::numerics::{ParamStore, Scalar, Tensor};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CASE";
pub const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

/// Hex SHA-256 prefix of newline-joined items.
pub fn list_hash<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for it in items {
        h.update(it.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn lexicon_hash(lex: &TermLexicon) -> String {
    let lines: Vec<String> = lex.entries().map(|(t, f)| format!("{t}\t{f}")).collect();
    list_hash(lines.iter().map(String::as_str))
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| bad("value does not fit in 32 bits"))?;
        self.0.extend_from_slice(&v.to_le_bytes());
        Ok(())
    }

    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.u32(b.len())?;
        self.0.extend_from_slice(b);
        Ok(())
    }

    fn strings<'a>(&mut self, items: impl ExactSizeIterator<Item = &'a str>) -> Result<()> {
        self.u32(items.len())?;
        for s in items {
            self.bytes(s.as_bytes())?;
        }
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len()).ok_or_else(|| bad("truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| bad("invalid UTF-8"))
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.u32()?;
        (0..n).map(|_| self.string()).collect()
    }
}

/// Everything a checkpoint holds besides the tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries.get(key).map(String::as_str).ok_or_else(|| bad(format!("manifest lacks `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse().map_err(|_| bad(format!("manifest value `{key} = {v}` is malformed")))
    }

    fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn from_text(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once(" = ").ok_or_else(|| bad(format!("bad manifest line `{line}`")))?;
            entries.insert(k.to_string(), v.to_string());
        }
        Ok(Manifest { entries })
    }
}

fn model_manifest<F: Scalar>(model: &CaseModel<F>, extra: &[(String, String)]) -> Manifest {
    let c = model.config();
    let mut entries: BTreeMap<String, String> = [
        ("encoder", c.encoder.to_string()),
        ("attention", c.attention.to_string()),
        ("dim", c.hp.dim.to_string()),
        ("attn_dim", c.hp.attn_dim.to_string()),
        ("max_len", c.hp.max_len.to_string()),
        ("pos_dim", c.hp.pos_dim.to_string()),
        ("cnn_window", c.hp.cnn_window.to_string()),
        ("cnn_filters", c.hp.cnn_filters.to_string()),
        ("min_freq", c.min_freq.to_string()),
        ("init_scale", c.init_scale.to_string()),
        ("context_vocab_hash", list_hash(model.context_vocab().words().iter().map(String::as_str))),
        ("seed_vocab_hash", list_hash(model.seed_vocab().words().iter().map(String::as_str))),
        ("lexicon_hash", lexicon_hash(model.lexicon())),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    for (k, v) in extra {
        entries.insert(k.clone(), v.clone());
    }
    Manifest { entries }
}

/// Serializes a model; `extra` adds manifest entries such as the run's
/// config hash.
pub fn encode<F: Scalar>(model: &CaseModel<F>, extra: &[(String, String)]) -> Result<Vec<u8>> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION as usize)?;
    w.bytes(model_manifest(model, extra).render().as_bytes())?;
    w.strings(model.context_vocab().words().iter().map(String::as_str))?;
    w.strings(model.seed_vocab().words().iter().map(String::as_str))?;
    w.u32(model.lexicon().len())?;
    for (t, f) in model.lexicon().entries() {
        w.bytes(t.as_bytes())?;
        w.0.extend_from_slice(&(f as u64).to_le_bytes());
    }
    let params = model.params();
    w.u32(params.len())?;
    for id in params.ids() {
        w.bytes(params.name(id).as_bytes())?;
        let t = params.value(id);
        w.u32(t.shape().len())?;
        for &d in t.shape() {
            w.u32(d)?;
        }
        for v in t.as_slice() {
            w.0.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&w.0);
    w.0.extend_from_slice(&crc.to_le_bytes());
    Ok(w.0)
}

/// Parses and verifies a checkpoint.
pub fn decode(bytes: &[u8]) -> Result<(CaseModel<f32>, Manifest)> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(bad("not a CASE checkpoint"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(bad("CRC mismatch"));
    }
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let manifest = Manifest::from_text(&r.string()?)?;
    let ctx_words = r.strings()?;
    let seed_words = r.strings()?;
    let n = r.u32()?;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let t = r.string()?;
        entries.push((t, r.u64()? as usize));
    }
    let mut store = ParamStore::new();
    for _ in 0..r.u32()? {
        let name = r.string()?;
        let rank = r.u32()?;
        let shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let raw = r.take(len.checked_mul(4).ok_or_else(|| bad("tensor too large"))?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        store.add(&name, Tensor::from_vec(&shape, data)?)?;
    }
    if r.pos != body.len() {
        return Err(bad("trailing bytes"));
    }

    let ctx_vocab = Vocabulary::from_word_list(ctx_words)?;
    let seed_vocab = Vocabulary::from_word_list(seed_words)?;
    let lexicon = TermLexicon::from_ranked(entries)?;
    let checks = [
        ("context_vocab_hash", list_hash(ctx_vocab.words().iter().map(String::as_str))),
        ("seed_vocab_hash", list_hash(seed_vocab.words().iter().map(String::as_str))),
        ("lexicon_hash", lexicon_hash(&lexicon)),
    ];
    for (key, want) in checks {
        if manifest.get(key)? != want {
            return Err(bad(format!("{key} does not match the stored tables")));
        }
    }
    let config = ModelConfig {
        encoder: manifest.get("encoder")?.parse()?,
        attention: manifest.get("attention")?.parse()?,
        hp: HyperParams {
            dim: manifest.parse("dim")?,
            attn_dim: manifest.parse("attn_dim")?,
            max_len: manifest.parse("max_len")?,
            pos_dim: manifest.parse("pos_dim")?,
            cnn_window: manifest.parse("cnn_window")?,
            cnn_filters: manifest.parse("cnn_filters")?,
        },
        min_freq: manifest.parse("min_freq")?,
        init_scale: manifest.parse("init_scale")?,
    };
    let model = CaseModel::from_parts(config, ctx_vocab, seed_vocab, lexicon, store)?;
    Ok((model, manifest))
}

pub fn save<F: Scalar>(path: &Path, model: &CaseModel<F>, extra: &[(String, String)]) -> Result<()> {
    std::fs::write(path, encode(model, extra)?).map_err(crate::at(path))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(CaseModel<f32>, Manifest)> {
    decode(&std::fs::read(path).map_err(crate::at(path))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use case_core::corpus::AnnotatedSentence;
    use case_core::encoders::{AttentionKind, EncoderKind};

    fn model() -> CaseModel<f32> {
        let recs: Vec<AnnotatedSentence> = (0..4)
            .map(|i| AnnotatedSentence {
                id: format!("r{i}"),
                context: ["a", "PLACEHOLDER", "b"].map(String::from).to_vec(),
                terms: ["x", "y_z", "w"].map(String::from).to_vec(),
                hypernym_span: None,
            })
            .collect();
        let cfg = ModelConfig {
            encoder: EncoderKind::Cnn,
            attention: AttentionKind::TransDot,
            hp: HyperParams { dim: 4, attn_dim: 3, cnn_filters: 5, ..Default::default() },
            min_freq: 1,
            init_scale: 0.05,
        };
        CaseModel::build(&recs, cfg, None, 3).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = encode(&m, &[("config_hash".into(), "abc".into())]).unwrap();
        let (back, manifest) = decode(&bytes).unwrap();
        assert_eq!(manifest.get("config_hash").unwrap(), "abc");
        assert_eq!(back.params(), m.params());
        assert_eq!(back.lexicon(), m.lexicon());
        assert_eq!(encode(&back, &[("config_hash".into(), "abc".into())]).unwrap(), bytes);
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode(&model(), &[]).unwrap();
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(matches!(decode(&flipped), Err(Error::Checkpoint(m)) if m.contains("CRC")));
        assert!(decode(&bytes[..bytes.len() - 9]).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode(&magic).is_err());
    }

    #[test]
    fn tampered_tables_are_rejected() {
        let bytes = encode(&model(), &[("lexicon_hash".into(), "0000".into())]).unwrap();
        assert!(matches!(decode(&bytes), Err(Error::Checkpoint(m)) if m.contains("lexicon_hash")));
    }
}
