//! File formats.
//!
//! EMB1 layout (all integers little-endian):
//!
//! | offset | size      | content                                   |
//! |--------|-----------|-------------------------------------------|
//! | 0      | 4         | magic `EMB1`                              |
//! | 4      | 4         | `n` as u32                                |
//! | 8      | 4         | `dim` as u32                              |
//! | 12     | 1         | label flag, 0 or 1                        |
//! | 13     | 4 n dim   | f32 payload, row-major                    |
//! | ...    | 4 n       | i32 labels, present iff the flag is 1     |
//!
//! CSV input has one instance per line. A header is optional; when present
//! and its last column is `label`, that column is parsed as integer labels.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::embedding::EmbeddingSet;
use crate::error::{Result, UcfError};

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 13;

/// Matrix exactly as stored on disk, before any normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<f64>,
    pub labels: Option<Vec<i32>>,
}

/// Embeddings plus the ground-truth ids stored alongside them, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddings {
    pub set: EmbeddingSet,
    pub labels: Option<Vec<i32>>,
}

pub fn encode_emb1(n: usize, dim: usize, data: &[f64], labels: Option<&[i32]>) -> Result<Vec<u8>> {
    if data.len() != n * dim {
        return Err(UcfError::Shape {
            expected: n * dim,
            got: data.len(),
        });
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(UcfError::LengthMismatch(n, l.len()));
        }
    }
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| UcfError::BadParam(format!("{v} does not fit in u32")))
    };
    let mut out =
        Vec::with_capacity(HEADER_LEN + 4 * data.len() + labels.map_or(0, |l| 4 * l.len()));
    out.extend_from_slice(EMB1_MAGIC);
    out.extend_from_slice(&to_u32(n)?.to_le_bytes());
    out.extend_from_slice(&to_u32(dim)?.to_le_bytes());
    out.push(u8::from(labels.is_some()));
    for &x in data {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    if let Some(l) = labels {
        for &v in l {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_emb1(bytes: &[u8]) -> Result<RawMatrix> {
    let malformed = |offset: usize, reason: &str| UcfError::Malformed {
        offset,
        reason: reason.to_string(),
    };
    if bytes.len() < 4 || &bytes[..4] != EMB1_MAGIC {
        return Err(malformed(0, "missing EMB1 magic"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(malformed(bytes.len(), "truncated header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (n, dim, flag) = (word(4), word(8), bytes[12]);
    if flag > 1 {
        return Err(UcfError::UnsupportedVersion(u32::from(flag)));
    }
    let payload_end = n
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| malformed(4, "n * dim overflows"))?;
    let end = if flag == 1 {
        payload_end + 4 * n
    } else {
        payload_end
    };
    if bytes.len() < end {
        return Err(malformed(bytes.len(), "truncated payload"));
    }
    if bytes.len() > end {
        return Err(malformed(end, "trailing bytes"));
    }
    let data = bytes[HEADER_LEN..payload_end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let labels = (flag == 1).then(|| {
        bytes[payload_end..end]
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    });
    Ok(RawMatrix {
        n,
        dim,
        data,
        labels,
    })
}

pub fn write_emb1(
    path: &Path,
    n: usize,
    dim: usize,
    data: &[f64],
    labels: Option<&[i32]>,
) -> Result<()> {
    let bytes = encode_emb1(n, dim, data, labels)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn write_embeddings(path: &Path, emb: &EmbeddingSet, labels: Option<&[i32]>) -> Result<()> {
    write_emb1(path, emb.n(), emb.dim(), emb.as_slice(), labels)
}

pub fn read_emb1_raw(path: &Path) -> Result<RawMatrix> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_emb1(&bytes)
}

pub fn parse_csv<R: Read>(reader: R) -> Result<RawMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut labels: Option<Vec<i32>> = None;
    let mut dim = None;
    let mut n = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| UcfError::Malformed {
            offset: e.position().map_or(0, |p| p.byte() as usize),
            reason: e.to_string(),
        })?;
        let offset = record.position().map_or(0, |p| p.byte() as usize);
        if line == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            // header line
            if record.iter().next_back() == Some("label") {
                labels = Some(Vec::new());
            }
            continue;
        }
        let feature_cols = record.len() - usize::from(labels.is_some());
        match dim {
            None => dim = Some(feature_cols),
            Some(d) if d != feature_cols => {
                return Err(UcfError::Malformed {
                    offset,
                    reason: format!("expected {d} feature columns, found {feature_cols}"),
                })
            }
            _ => {}
        }
        for field in record.iter().take(feature_cols) {
            data.push(field.parse::<f64>().map_err(|_| UcfError::Malformed {
                offset,
                reason: format!("`{field}` is not a number"),
            })?);
        }
        if let Some(l) = labels.as_mut() {
            let field = &record[feature_cols];
            l.push(field.parse().map_err(|_| UcfError::Malformed {
                offset,
                reason: format!("`{field}` is not an integer label"),
            })?);
        }
        n += 1;
    }
    Ok(RawMatrix {
        n,
        dim: dim.unwrap_or(0),
        data,
        labels,
    })
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads EMB1 or CSV (by extension) without normalizing.
pub fn read_raw(path: &Path) -> Result<RawMatrix> {
    if is_csv(path) {
        parse_csv(BufReader::new(File::open(path)?))
    } else {
        read_emb1_raw(path)
    }
}

/// Reads EMB1 or CSV (by extension). Rows that are already unit-norm are
/// kept bit-for-bit; otherwise every row is normalized.
pub fn read_embeddings(path: &Path) -> Result<LabeledEmbeddings> {
    let raw = read_raw(path)?;
    Ok(LabeledEmbeddings {
        set: EmbeddingSet::from_raw(raw.n, raw.dim, raw.data)?,
        labels: raw.labels,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
