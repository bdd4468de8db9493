//! word2vec embedding files, naive tokenization, and encoding of token
//! sequences as fixed-size embedding matrices.
//!
//! Vectors are stored as 32-bit floats exactly as read from disk (so binary
//! round trips are byte-identical) and widened to 64-bit only when a sentence
//! is encoded for the network.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write as _};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::nn::Tensor;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("file truncated at entry {entry} of {declared}")]
    Truncated { entry: usize, declared: usize },
    #[error("token {token:?}: expected {expected} components, got {got}")]
    DimensionMismatch {
        token: String,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty token at entry {entry}")]
    EmptyToken { entry: usize },
    #[error("max_len must be at least 1")]
    BadMaxLen,
}

/// On-disk layout of an embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Binary,
    Text,
}

/// Token-to-vector map with a fixed dimension; iteration follows file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: Vec<(String, Vec<f32>)>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    /// Build from `(token, vector)` entries. Duplicate tokens keep the first
    /// occurrence and log a warning.
    pub fn from_entries(
        dimension: usize,
        raw: Vec<(String, Vec<f32>)>,
    ) -> Result<EmbeddingTable, EmbeddingError> {
        let mut entries = Vec::with_capacity(raw.len());
        let mut index = HashMap::with_capacity(raw.len());
        for (i, (token, vector)) in raw.into_iter().enumerate() {
            if token.is_empty() {
                return Err(EmbeddingError::EmptyToken { entry: i + 1 });
            }
            if vector.len() != dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    token,
                    expected: dimension,
                    got: vector.len(),
                });
            }
            if index.contains_key(&token) {
                log::warn!("duplicate token {token:?} in embedding file, keeping first");
                continue;
            }
            index.insert(token.clone(), entries.len());
            entries.push((token, vector));
        }
        Ok(EmbeddingTable {
            dimension,
            entries,
            index,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.entries[i].1.as_slice())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(t, _)| t.as_str())
    }

    /// Read a word2vec file in either convention.
    pub fn load(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingTable, EmbeddingError> {
        match format {
            EmbeddingFormat::Binary => load_binary(path),
            EmbeddingFormat::Text => load_text(path),
        }
    }

    /// Write the table back out; a binary write of a binary load is
    /// byte-identical.
    pub fn write(&self, path: &Path, format: EmbeddingFormat) -> Result<(), EmbeddingError> {
        match format {
            EmbeddingFormat::Binary => write_binary(self, path),
            EmbeddingFormat::Text => write_text(self, path),
        }
    }
}

fn parse_header(line: &str) -> Result<(usize, usize), EmbeddingError> {
    let mut parts = line.split_whitespace();
    let vocab = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| EmbeddingError::BadHeader(format!("cannot parse vocab size in {line:?}")))?;
    let dim = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| EmbeddingError::BadHeader(format!("cannot parse dimension in {line:?}")))?;
    if parts.next().is_some() {
        return Err(EmbeddingError::BadHeader(format!(
            "unexpected extra header fields in {line:?}"
        )));
    }
    if dim == 0 {
        return Err(EmbeddingError::BadHeader("dimension must be positive".into()));
    }
    Ok((vocab, dim))
}

fn load_binary(path: &Path) -> Result<EmbeddingTable, EmbeddingError> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header = Vec::new();
    r.read_until(b'\n', &mut header)?;
    let header = String::from_utf8(header)
        .map_err(|e| EmbeddingError::BadHeader(format!("header is not UTF-8: {e}")))?;
    let (vocab, dim) = parse_header(header.trim_end())?;

    let mut raw = Vec::with_capacity(vocab);
    for entry in 0..vocab {
        let token = match read_binary_token(&mut r) {
            Ok(Some(t)) => t,
            Ok(None) => {
                return Err(EmbeddingError::Truncated {
                    entry: entry + 1,
                    declared: vocab,
                })
            }
            Err(e) => return Err(e),
        };
        let mut vector = vec![0.0f32; dim];
        r.read_f32_into::<LittleEndian>(&mut vector)
            .map_err(|_| EmbeddingError::Truncated {
                entry: entry + 1,
                declared: vocab,
            })?;
        raw.push((token, vector));
    }
    EmbeddingTable::from_entries(dim, raw)
}

/// Read one space-terminated token, skipping newline separators left over
/// from the previous entry. `Ok(None)` means clean end of file.
fn read_binary_token<R: Read>(r: &mut R) -> Result<Option<String>, EmbeddingError> {
    let mut bytes = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        match r.read(&mut byte)? {
            0 => {
                return if bytes.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some(to_token(bytes)?))
                }
            }
            _ => match byte[0] {
                b'\n' if bytes.is_empty() => continue,
                b' ' => return Ok(Some(to_token(bytes)?)),
                b => bytes.push(b),
            },
        }
    }
}

fn to_token(bytes: Vec<u8>) -> Result<String, EmbeddingError> {
    String::from_utf8(bytes).map_err(|e| EmbeddingError::BadHeader(format!(
        "token is not UTF-8: {e}"
    )))
}

fn write_binary(table: &EmbeddingTable, path: &Path) -> Result<(), EmbeddingError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write!(w, "{} {}\n", table.len(), table.dimension())?;
    for (token, vector) in &table.entries {
        w.write_all(token.as_bytes())?;
        w.write_all(b" ")?;
        for &v in vector {
            w.write_f32::<LittleEndian>(v)?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn load_text(path: &Path) -> Result<EmbeddingTable, EmbeddingError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| {
        EmbeddingError::BadHeader("empty file".into())
    })?;
    let (vocab, dim) = parse_header(header?.trim_end())?;
    let mut raw = Vec::with_capacity(vocab);
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut parts = line.split_whitespace();
        let token = parts
            .next()
            .ok_or_else(|| EmbeddingError::Parse {
                line: lineno,
                message: "missing token".into(),
            })?
            .to_string();
        let vector: Vec<f32> = parts
            .map(|p| {
                p.parse::<f32>().map_err(|e| EmbeddingError::Parse {
                    line: lineno,
                    message: format!("bad float {p:?}: {e}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if vector.len() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                token,
                expected: dim,
                got: vector.len(),
            });
        }
        raw.push((token, vector));
        if raw.len() == vocab {
            break;
        }
    }
    if raw.len() < vocab {
        return Err(EmbeddingError::Truncated {
            entry: raw.len() + 1,
            declared: vocab,
        });
    }
    EmbeddingTable::from_entries(dim, raw)
}

fn write_text(table: &EmbeddingTable, path: &Path) -> Result<(), EmbeddingError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{} {}", table.len(), table.dimension())?;
    for (token, vector) in &table.entries {
        write!(w, "{token}")?;
        for &v in vector {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Lowercase, split on whitespace, strip leading/trailing non-alphanumeric
/// characters per token, drop empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

/// A sentence as a padded `max_len x dimension` embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSentence {
    pub matrix: Tensor,
    pub valid_length: usize,
}

/// Look up each token (out-of-vocabulary tokens become zero rows), truncate
/// to `max_len`, and zero-pad the rest.
pub fn encode(
    tokens: &[String],
    table: &EmbeddingTable,
    max_len: usize,
) -> Result<EncodedSentence, EmbeddingError> {
    if max_len == 0 {
        return Err(EmbeddingError::BadMaxLen);
    }
    let dim = table.dimension();
    let mut matrix = Tensor::zeros(&[max_len, dim]);
    let valid_length = tokens.len().min(max_len);
    for (i, token) in tokens.iter().take(max_len).enumerate() {
        if let Some(vector) = table.get(token) {
            let row = &mut matrix.data_mut()[i * dim..(i + 1) * dim];
            for (dst, &src) in row.iter_mut().zip(vector) {
                *dst = src as f64;
            }
        }
    }
    Ok(EncodedSentence {
        matrix,
        valid_length,
    })
}
