//! Retrieval ranking, average precision and CMC.

use crate::diffmath::euclidean;
use crate::error::{Error, Result};

/// Ranks at which CMC is reported.
pub const CMC_RANKS: [usize; 3] = [1, 5, 20];

/// Mean over relevant positions of precision at that position; `None` without any relevant item.
pub fn average_precision(relevance: &[bool]) -> Option<f64> {
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (pos, &rel) in relevance.iter().enumerate() {
        if rel {
            hits += 1;
            acc += hits as f64 / (pos + 1) as f64;
        }
    }
    (hits > 0).then(|| acc / hits as f64)
}

/// 1-based position of the first relevant item.
pub fn first_hit(relevance: &[bool]) -> Option<usize> {
    relevance.iter().position(|&r| r).map(|p| p + 1)
}

/// Fraction of queries whose first hit is at or before each rank in `ks`.
pub fn cmc(first_hits: &[usize], ks: &[usize]) -> Result<Vec<f64>> {
    if first_hits.is_empty() {
        return Err(Error::argument("cmc over zero queries"));
    }
    Ok(ks
        .iter()
        .map(|&k| first_hits.iter().filter(|&&h| h <= k).count() as f64 / first_hits.len() as f64)
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingSet {
    pub embeddings: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub cameras: Vec<u32>,
}

impl EmbeddingSet {
    pub fn push(&mut self, embedding: Vec<f64>, label: u32, camera: u32) {
        self.embeddings.push(embedding);
        self.labels.push(label);
        self.cameras.push(camera);
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    /// Scales every embedding to unit Euclidean norm (zero vectors stay zero).
    pub fn l2_normalized(&self) -> EmbeddingSet {
        let embeddings = self
            .embeddings
            .iter()
            .map(|e| {
                let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    e.iter().map(|v| v / norm).collect()
                } else {
                    e.clone()
                }
            })
            .collect();
        EmbeddingSet {
            embeddings,
            ..self.clone()
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.labels.len() != self.embeddings.len() || self.cameras.len() != self.embeddings.len() {
            return Err(Error::argument(format!("{what}: embeddings, labels and cameras differ in length")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RetrievalSet {
    pub query: EmbeddingSet,
    pub gallery: EmbeddingSet,
}

/// Gallery order for one query, excluding same-identity same-camera items.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub relevance: Vec<bool>,
}

pub fn retrieve(set: &RetrievalSet) -> Result<Vec<Ranking>> {
    set.query.validate("query")?;
    set.gallery.validate("gallery")?;
    if set.gallery.is_empty() {
        return Err(Error::argument("retrieval needs a nonempty gallery"));
    }
    let dim = set.gallery.embeddings[0].len();
    if let Some(bad) = set
        .query
        .embeddings
        .iter()
        .chain(&set.gallery.embeddings)
        .find(|e| e.len() != dim)
    {
        return Err(Error::argument(format!(
            "embedding dimension mismatch: {} vs {dim}",
            bad.len()
        )));
    }
    let mut out = Vec::with_capacity(set.query.len());
    for (q, emb) in set.query.embeddings.iter().enumerate() {
        let (ql, qc) = (set.query.labels[q], set.query.cameras[q]);
        let mut scored: Vec<(f64, usize)> = (0..set.gallery.len())
            .filter(|&g| !(set.gallery.labels[g] == ql && set.gallery.cameras[g] == qc))
            .map(|g| (euclidean(emb, &set.gallery.embeddings[g]), g))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let order: Vec<usize> = scored.into_iter().map(|(_, g)| g).collect();
        let relevance = order.iter().map(|&g| set.gallery.labels[g] == ql).collect();
        out.push(Ranking { order, relevance });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub map: f64,
    pub rank1: f64,
    pub rank5: f64,
    pub rank20: f64,
    pub queries: usize,
    /// Queries without any relevant gallery item, excluded from every figure.
    pub skipped: usize,
}

pub fn evaluate(set: &RetrievalSet) -> Result<Metrics> {
    let rankings = retrieve(set)?;
    let mut aps = Vec::new();
    let mut hits = Vec::new();
    for r in &rankings {
        if let (Some(ap), Some(hit)) = (average_precision(&r.relevance), first_hit(&r.relevance)) {
            aps.push(ap);
            hits.push(hit);
        }
    }
    let skipped = rankings.len() - aps.len();
    if skipped > 0 {
        log::warn!("{skipped} queries have no relevant gallery item and were excluded");
    }
    if aps.is_empty() {
        return Err(Error::Evaluation("no query has a relevant gallery item".into()));
    }
    let curve = cmc(&hits, &CMC_RANKS)?;
    Ok(Metrics {
        map: aps.iter().sum::<f64>() / aps.len() as f64,
        rank1: curve[0],
        rank5: curve[1],
        rank20: curve[2],
        queries: aps.len(),
        skipped,
    })
}
