//! Comprehensiveness: how closely each POI's guidance tracks its source post.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::Plan;

use super::MetricsError;

/// Text similarity in `[-1, 1]`.
pub trait SimilarityProvider {
    fn similarity(&self, a: &str, b: &str) -> Result<f64, MetricsError>;
}

/// Cosine similarity of term-frequency vectors after case folding and
/// punctuation stripping.
#[derive(Debug, Clone, Copy, Default)]
pub struct TermFrequencyCosine;

pub fn term_frequencies(text: &str) -> BTreeMap<String, f64> {
    let folded: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let mut tf = BTreeMap::new();
    for token in folded.split_whitespace() {
        *tf.entry(token.to_string()).or_insert(0.0) += 1.0;
    }
    tf
}

impl SimilarityProvider for TermFrequencyCosine {
    fn similarity(&self, a: &str, b: &str) -> Result<f64, MetricsError> {
        let (ta, tb) = (term_frequencies(a), term_frequencies(b));
        let norm = |t: &BTreeMap<String, f64>| t.values().map(|v| v * v).sum::<f64>().sqrt();
        let (na, nb) = (norm(&ta), norm(&tb));
        if na == 0.0 || nb == 0.0 {
            return Ok(0.0);
        }
        let dot: f64 = ta
            .iter()
            .filter_map(|(k, v)| tb.get(k).map(|w| v * w))
            .sum();
        Ok((dot / (na * nb)).min(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiSimilarity {
    pub poi: String,
    pub similarity: f64,
    pub missing_post: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CphResult {
    pub score: f64,
    pub per_poi: Vec<PoiSimilarity>,
}

impl CphResult {
    pub fn flagged(&self) -> impl Iterator<Item = &str> {
        self.per_poi
            .iter()
            .filter(|p| p.missing_post)
            .map(|p| p.poi.as_str())
    }
}

/// Mean guidance-to-post similarity over the plan's POIs, scaled to 0-100.
///
/// Each catalog POI carrying guidance counts once, with its guidance blocks
/// joined in plan order. Posts are keyed by POI id. A POI without a post
/// scores 0 and is flagged; negative similarities count as 0.
pub fn cph(
    plan: &Plan,
    posts: &BTreeMap<String, String>,
    sim: &dyn SimilarityProvider,
) -> Result<CphResult, MetricsError> {
    let mut guidance: Vec<(String, Vec<&str>)> = Vec::new();
    for entry in &plan.entries {
        let (Some(id), Some(text)) = (&entry.poi_id, entry.guidance.as_deref()) else {
            continue;
        };
        if text.trim().is_empty() {
            continue;
        }
        match guidance.iter_mut().find(|(poi, _)| poi == id) {
            Some((_, texts)) => texts.push(text),
            None => guidance.push((id.clone(), vec![text])),
        }
    }
    if guidance.is_empty() {
        return Err(MetricsError::Argument(
            "plan has no POI with guidance".into(),
        ));
    }
    let mut per_poi = Vec::with_capacity(guidance.len());
    for (poi, texts) in guidance {
        let result = match posts.get(&poi) {
            Some(post) => {
                let similarity = sim.similarity(&texts.join("\n"), post)?.max(0.0);
                PoiSimilarity {
                    poi,
                    similarity,
                    missing_post: false,
                }
            }
            None => PoiSimilarity {
                poi,
                similarity: 0.0,
                missing_post: true,
            },
        };
        per_poi.push(result);
    }
    let score = 100.0 * per_poi.iter().map(|p| p.similarity).sum::<f64>() / per_poi.len() as f64;
    Ok(CphResult { score, per_poi })
}
