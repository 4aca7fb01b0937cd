//! Pretrained word vectors and per-individual name vectors.
//!
//! Tables are read from the common text vector format: a header line
//! `"<count> <dimension>"` followed by one `token v1 v2 ... vd` line per
//! entry. Tokens are normalized (trimmed, surrounding punctuation removed,
//! lowercased) both when stored and when looked up.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Lowercases a token and strips surrounding whitespace and punctuation.
pub fn normalize_token(token: &str) -> String {
    token
        .trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .to_lowercase()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dimension,
            entries: BTreeMap::new(),
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

    /// Stores a vector under the normalized token. When two raw tokens
    /// normalize to the same key the first one wins and `false` is returned.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding vector"));
        }
        let key = normalize_token(token);
        if key.is_empty() {
            return Err(Error::InvalidParameter(format!("token {token:?} is empty after normalization")));
        }
        if self.entries.contains_key(&key) {
            return Ok(false);
        }
        self.entries.insert(key, vector);
        Ok(true)
    }

    /// Looks up a token after normalization. Absent tokens yield `None`.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(&normalize_token(token)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Parses a whole vector file held in memory.
    pub fn parse_str(text: &str, allowlist: Option<&BTreeSet<String>>) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let mut loader = EmbeddingLoader::new(header, allowlist)?;
        for (i, line) in lines.enumerate() {
            loader.feed(i + 2, line)?;
        }
        Ok(loader.finish())
    }
}

/// Streaming parser for the text vector format, fed one line at a time.
#[derive(Debug)]
pub struct EmbeddingLoader {
    declared_count: usize,
    allowlist: Option<BTreeSet<String>>,
    table: EmbeddingTable,
}

impl EmbeddingLoader {
    /// Starts a load from the header line `"<count> <dimension>"`.
    pub fn new(header: &str, allowlist: Option<&BTreeSet<String>>) -> Result<Self> {
        let (declared_count, dimension) = parse_header(header)?;
        Ok(Self {
            declared_count,
            allowlist: allowlist.map(|set| set.iter().map(|t| normalize_token(t)).collect()),
            table: EmbeddingTable::new(dimension).map_err(|_| Error::Parse {
                line: 1,
                message: "dimension must be positive".into(),
            })?,
        })
    }

    pub fn dimension(&self) -> usize {
        self.table.dimension
    }

    pub fn declared_count(&self) -> usize {
        self.declared_count
    }

    /// Parses one entry line. Blank lines are ignored; lines whose token is
    /// not in the allowlist are skipped without parsing their components.
    pub fn feed(&mut self, line_no: usize, line: &str) -> Result<()> {
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else {
            return Ok(());
        };
        let key = normalize_token(token);
        if key.is_empty() {
            return Ok(());
        }
        if let Some(allow) = &self.allowlist {
            if !allow.contains(&key) {
                return Ok(());
            }
        }
        let dim = self.table.dimension;
        let mut vector = Vec::with_capacity(dim);
        for part in parts {
            let v: f64 = part.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid number {part:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite component {part:?}"),
                });
            }
            vector.push(v);
        }
        if vector.len() != dim {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {dim} components, found {}", vector.len()),
            });
        }
        self.table.entries.entry(key).or_insert(vector);
        Ok(())
    }

    pub fn finish(self) -> EmbeddingTable {
        self.table
    }
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let bad = |message: String| Error::Parse { line: 1, message };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(bad(format!("expected \"<count> <dimension>\", got {header:?}")));
    }
    let count = fields[0]
        .parse::<usize>()
        .map_err(|_| bad(format!("invalid count {:?}", fields[0])))?;
    let dim = fields[1]
        .parse::<usize>()
        .map_err(|_| bad(format!("invalid dimension {:?}", fields[1])))?;
    if dim == 0 {
        return Err(bad("dimension must be positive".to_string()));
    }
    Ok((count, dim))
}

/// Which of the two name tokens contributed to a [`NameVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coverage {
    BothFound,
    FirstOnly,
    LastOnly,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NameVector {
    pub vector: Vec<f64>,
    pub coverage: Coverage,
}

impl NameVector {
    /// Records with no embedded name are excluded from every penalty.
    pub fn is_included(&self) -> bool {
        self.coverage != Coverage::None
    }
}

/// Mean of the first- and last-name embeddings. A single found token is
/// used as is; with neither found the result is a zero vector with
/// [`Coverage::None`]. Empty or missing tokens count as absent.
pub fn name_vector(table: &EmbeddingTable, first: Option<&str>, last: Option<&str>) -> NameVector {
    let lookup = |t: Option<&str>| t.and_then(|t| table.get(t));
    match (lookup(first), lookup(last)) {
        (Some(f), Some(l)) => NameVector {
            vector: f.iter().zip(l).map(|(a, b)| 0.5 * (a + b)).collect(),
            coverage: Coverage::BothFound,
        },
        (Some(f), None) => NameVector {
            vector: f.to_vec(),
            coverage: Coverage::FirstOnly,
        },
        (None, Some(l)) => NameVector {
            vector: l.to_vec(),
            coverage: Coverage::LastOnly,
        },
        (None, None) => NameVector {
            vector: vec![0.0; table.dimension],
            coverage: Coverage::None,
        },
    }
}
