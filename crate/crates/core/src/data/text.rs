//! Bag-of-words presence vectors with frequency-based vocabulary pruning,
//! and scrubbing of first names and gendered words.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::embeddings::normalize_token;
use crate::features::FeatureMatrix;
use crate::{Error, Result};

/// Words removed by [`scrub`] besides the record's first name.
pub const SCRUB_WORDS: [&str; 11] = ["he", "she", "her", "his", "him", "hers", "himself", "herself", "mr", "mrs", "ms"];

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(document: &str) -> Vec<String> {
    document
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Removes, token by token and ignoring case and surrounding punctuation,
/// the given first name and every word in [`SCRUB_WORDS`]. Remaining tokens
/// are rejoined with single spaces.
pub fn scrub(document: &str, first_name: Option<&str>) -> String {
    let name = first_name.map(normalize_token).filter(|n| !n.is_empty());
    let kept: Vec<&str> = document
        .split_whitespace()
        .filter(|tok| {
            let norm = normalize_token(tok);
            !(SCRUB_WORDS.contains(&norm.as_str()) || name.as_deref() == Some(norm.as_str()))
        })
        .collect();
    kept.join(" ")
}

/// Sorted, duplicate-free list of word types.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let mut tokens: Vec<String> = tokens.into_iter().collect();
        tokens.sort();
        tokens.dedup();
        Self { tokens }
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

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.tokens.binary_search_by(|t| t.as_str().cmp(token)).ok()
    }

    /// Binary presence matrix over this vocabulary.
    pub fn transform<S: AsRef<str>>(&self, documents: &[S]) -> FeatureMatrix {
        let mut m = FeatureMatrix::new(self.len());
        for doc in documents {
            let mut idx: Vec<usize> = tokenize(doc.as_ref()).iter().filter_map(|t| self.index_of(t)).collect();
            idx.sort_unstable();
            idx.dedup();
            let entries: Vec<(usize, f64)> = idx.into_iter().map(|j| (j, 1.0)).collect();
            m.push_sparse(&entries).expect("indices sorted and in range");
        }
        m
    }
}

/// Builds a vocabulary and presence features. The `top_fraction` most
/// common types by document frequency are dropped first (ties broken
/// alphabetically, `floor(top_fraction * types)` of them), then every type
/// with fewer than `min_count` total occurrences.
pub fn vectorize_text<S: AsRef<str>>(documents: &[S], min_count: usize, top_fraction: f64) -> Result<(FeatureMatrix, Vocabulary)> {
    if min_count == 0 {
        return Err(Error::InvalidParameter("min_count must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&top_fraction) {
        return Err(Error::InvalidParameter(format!("top_fraction must lie in [0, 1), got {top_fraction}")));
    }
    // token -> (document frequency, total count)
    let mut freq: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for doc in documents {
        let mut tokens = tokenize(doc.as_ref());
        for t in &tokens {
            freq.entry(t.clone()).or_insert((0, 0)).1 += 1;
        }
        tokens.sort_unstable();
        tokens.dedup();
        for t in tokens {
            freq.get_mut(&t).expect("counted above").0 += 1;
        }
    }
    let mut by_df: Vec<(&String, usize)> = freq.iter().map(|(t, &(df, _))| (t, df)).collect();
    by_df.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let n_drop = (top_fraction * by_df.len() as f64) as usize;
    let kept = by_df[n_drop..]
        .iter()
        .filter(|(t, _)| freq[*t].1 >= min_count)
        .map(|(t, _)| t.to_string());
    let vocab = Vocabulary::from_tokens(kept);
    if vocab.is_empty() {
        return Err(Error::Empty("vocabulary after pruning"));
    }
    let features = vocab.transform(documents);
    Ok((features, vocab))
}
