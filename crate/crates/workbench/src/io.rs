//! Text formats: raw sentences, the record TSV, precision tables and
//! embedding tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use case_core::corpus::{AnnotatedSentence, PatternId, PrecisionTable, RawSentence, Vocabulary};
use case_core::embeddings::{DualEmbedding, Side};
use case_core::numerics::Tensor;

use crate::{Error, Result};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let f = File::open(path).map_err(crate::at(path))?;
    Ok(BufReader::new(f).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

/// One sentence per non-blank line; ids are `s<line number>`.
pub fn read_raw(path: &Path) -> Result<Vec<RawSentence>> {
    let mut out = Vec::new();
    for (n, line) in lines(path)? {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(RawSentence::from_text(format!("s{n}"), &line));
        }
    }
    Ok(out)
}

/// `pattern_id<TAB>precision` lines; `#` starts a comment line.
pub fn read_precisions(path: &Path) -> Result<PrecisionTable> {
    let mut table = PrecisionTable::new();
    for (n, line) in lines(path)? {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, p) = line.split_once('\t').ok_or_else(|| parse_err(path, n, "expected pattern<TAB>precision"))?;
        let id: PatternId = id.trim().parse().map_err(|e: case_core::Error| parse_err(path, n, e.to_string()))?;
        let p: f64 = p.trim().parse().map_err(|_| parse_err(path, n, format!("bad precision `{p}`")))?;
        table.set(id, p).map_err(|e| parse_err(path, n, e.to_string()))?;
    }
    Ok(table)
}

pub fn write_precisions(path: &Path, table: &PrecisionTable) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(crate::at(path))?);
    for (id, p) in table.iter() {
        writeln!(w, "{id}\t{p}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_record(rec: &AnnotatedSentence) -> String {
    let span = match &rec.hypernym_span {
        Some(r) => format!("{}:{}", r.start, r.end),
        None => "-".into(),
    };
    format!("{}\t{}\t{}\t{}", rec.id, rec.context.join(" "), rec.terms.join("|"), span)
}

pub fn parse_record(line: &str) -> std::result::Result<AnnotatedSentence, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
    }
    let hypernym_span = match fields[3] {
        "-" => None,
        s => {
            let (a, b) = s.split_once(':').ok_or_else(|| format!("bad span `{s}`"))?;
            let a: usize = a.parse().map_err(|_| format!("bad span `{s}`"))?;
            let b: usize = b.parse().map_err(|_| format!("bad span `{s}`"))?;
            Some(a..b)
        }
    };
    let rec = AnnotatedSentence {
        id: fields[0].to_string(),
        context: fields[1].split(' ').filter(|t| !t.is_empty()).map(String::from).collect(),
        terms: fields[2].split('|').filter(|t| !t.is_empty()).map(String::from).collect(),
        hypernym_span,
    };
    rec.validate().map_err(|e| e.to_string())?;
    Ok(rec)
}

/// Writes records as TSV. `header` lines are written first, each prefixed
/// with `# `.
pub fn write_corpus(path: &Path, records: &[AnnotatedSentence], header: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(crate::at(path))?);
    for h in header {
        writeln!(w, "# {h}")?;
    }
    for rec in records {
        writeln!(w, "{}", format_record(rec))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a record TSV, skipping `#` lines.
pub fn read_corpus(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    for (n, line) in lines(path)? {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_record(&line).map_err(|m| parse_err(path, n, m))?);
    }
    Ok(out)
}

/// Paths of the IN table, OUT table and metadata for an embedding prefix.
pub fn embedding_paths(prefix: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".in.txt"), with(".out.txt"), with(".meta"))
}

fn write_table(path: &Path, vocab: &Vocabulary, table: &Tensor<f32>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(crate::at(path))?);
    writeln!(w, "{} {}", table.rows(), table.cols())?;
    for (i, word) in vocab.words().iter().enumerate() {
        write!(w, "{word}")?;
        for v in table.row(i) {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table(path: &Path) -> Result<(Vec<String>, Tensor<f32>)> {
    let mut it = lines(path)?;
    let (_, first) = it.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let first = first?;
    let dims: Vec<usize> = first.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| parse_err(path, 1, "expected `|V| d`"))?;
    let [rows, d] = dims[..] else {
        return Err(parse_err(path, 1, "expected `|V| d`"));
    };
    let mut words = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * d);
    for (n, line) in it {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        words.push(parts.next().unwrap_or_default().to_string());
        let before = data.len();
        for p in parts {
            data.push(p.parse::<f32>().map_err(|_| parse_err(path, n, format!("bad value `{p}`")))?);
        }
        if data.len() - before != d {
            return Err(parse_err(path, n, format!("expected {d} values")));
        }
    }
    if words.len() != rows {
        return Err(parse_err(path, rows + 1, format!("expected {rows} rows, found {}", words.len())));
    }
    Ok((words, Tensor::from_vec(&[rows, d], data)?))
}

/// Writes `prefix.in.txt`, `prefix.out.txt` and a `prefix.meta` holding
/// `meta` lines.
pub fn write_embeddings(prefix: &Path, emb: &DualEmbedding, meta: &[String]) -> Result<()> {
    let (pin, pout, pmeta) = embedding_paths(prefix);
    write_table(&pin, emb.vocab(), emb.table(Side::In))?;
    write_table(&pout, emb.vocab(), emb.table(Side::Out))?;
    std::fs::write(&pmeta, meta.iter().map(|l| format!("{l}\n")).collect::<String>()).map_err(crate::at(&pmeta))?;
    Ok(())
}

pub fn read_embeddings(prefix: &Path) -> Result<DualEmbedding> {
    let (pin, pout, _) = embedding_paths(prefix);
    let (words, input) = read_table(&pin)?;
    let (out_words, output) = read_table(&pout)?;
    if words != out_words {
        return Err(parse_err(&pout, 1, "IN and OUT tables list different words"));
    }
    Ok(DualEmbedding::new(Vocabulary::from_word_list(words)?, input, output)?)
}
