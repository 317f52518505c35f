//! TF-IDF over question text, the generic fallback representation.
//!
//! Conventions (fixed for reproducibility): lowercase alphanumeric tokens,
//! vocabulary capped at the top 512 terms by training-fold document frequency
//! (min document frequency 2, ties broken lexicographically), sublinear term
//! frequency `1 + ln(tf)`, inverse document frequency `ln(N / df)`, and L2
//! normalization of the final vector.

use std::collections::{BTreeMap, BTreeSet};

pub const MAX_VOCAB: usize = 512;
pub const MIN_DOC_FREQ: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    /// term -> (vocab index, idf)
    vocab: BTreeMap<String, (usize, f64)>,
    n_documents: usize,
}

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

impl TfIdfModel {
    pub fn fit<'a>(documents: impl Iterator<Item = &'a str>) -> TfIdfModel {
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_documents = 0usize;
        for doc in documents {
            n_documents += 1;
            let unique: BTreeSet<String> = tokenize(doc).into_iter().collect();
            for term in unique {
                *doc_freq.entry(term).or_insert(0) += 1;
            }
        }

        let mut ranked: Vec<(String, usize)> = doc_freq
            .into_iter()
            .filter(|(_, df)| *df >= MIN_DOC_FREQ)
            .collect();
        // Highest document frequency first; lexicographic tie-break.
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(MAX_VOCAB);
        ranked.sort_by(|a, b| a.0.cmp(&b.0));

        let vocab = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (term, df))| {
                let idf = (n_documents as f64 / df as f64).ln();
                (term, (i, idf))
            })
            .collect();
        TfIdfModel { vocab, n_documents }
    }

    pub fn dimension(&self) -> usize {
        self.vocab.len()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    /// Ordered vocabulary terms.
    pub fn terms(&self) -> Vec<&str> {
        let mut v: Vec<(&str, usize)> = self.vocab.iter().map(|(t, (i, _))| (t.as_str(), *i)).collect();
        v.sort_by_key(|(_, i)| *i);
        v.into_iter().map(|(t, _)| t).collect()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocab.get(term).map(|(_, idf)| *idf)
    }

    /// L2-normalized sublinear tf-idf vector.
    pub fn transform(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.vocab.len()];
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let tokens = tokenize(text);
        for t in &tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        for (term, count) in counts {
            if let Some((idx, idf)) = self.vocab.get(term) {
                v[*idx] = (1.0 + (count as f64).ln()) * idf;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }
}
