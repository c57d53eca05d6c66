//! Weighted aggregation of criterion scores and final ordering.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::CriterionScores;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid weights ({coverage}, {acceptance}, {detail}, {specialization}): each must lie in [0, 1] and they must sum to 1")]
pub struct InvalidWeights {
    pub coverage: f64,
    pub acceptance: f64,
    pub detail: f64,
    pub specialization: f64,
}

/// Criterion weights; always valid once constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct Weights {
    coverage: f64,
    acceptance: f64,
    detail: f64,
    specialization: f64,
}

#[derive(Serialize, Deserialize)]
struct RawWeights {
    coverage: f64,
    acceptance: f64,
    detail: f64,
    specialization: f64,
}

impl TryFrom<RawWeights> for Weights {
    type Error = InvalidWeights;
    fn try_from(r: RawWeights) -> Result<Self, Self::Error> {
        Weights::new(r.coverage, r.acceptance, r.detail, r.specialization)
    }
}

impl From<Weights> for RawWeights {
    fn from(w: Weights) -> Self {
        RawWeights {
            coverage: w.coverage,
            acceptance: w.acceptance,
            detail: w.detail,
            specialization: w.specialization,
        }
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            coverage: 0.55,
            acceptance: 0.15,
            detail: 0.15,
            specialization: 0.15,
        }
    }
}

impl Weights {
    pub fn new(
        coverage: f64,
        acceptance: f64,
        detail: f64,
        specialization: f64,
    ) -> Result<Self, InvalidWeights> {
        let all = [coverage, acceptance, detail, specialization];
        let in_range = all.iter().all(|w| (0.0..=1.0).contains(w));
        let sum: f64 = all.iter().sum();
        if !in_range || (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(InvalidWeights {
                coverage,
                acceptance,
                detail,
                specialization,
            });
        }
        Ok(Self {
            coverage,
            acceptance,
            detail,
            specialization,
        })
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }
    pub fn detail(&self) -> f64 {
        self.detail
    }
    pub fn specialization(&self) -> f64 {
        self.specialization
    }
}

pub fn aggregate(scores: &CriterionScores, w: &Weights) -> f64 {
    w.coverage * scores.coverage
        + w.acceptance * scores.acceptance
        + w.detail * scores.detail
        + w.specialization * scores.specialization
}

/// 0 to 100 criterion values relative to the other returned entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DisplayScores {
    pub coverage: u8,
    pub acceptance: u8,
    pub detail: u8,
    pub specialization: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    /// One acronym for single ontologies, 2.. for sets; ascending order.
    pub members: Vec<String>,
    pub final_score: f64,
    pub criterion_scores: CriterionScores,
    pub display_scores: DisplayScores,
    pub annotation_count: usize,
    /// Share of the set's coverage contributed by each member (sets only).
    pub contributions: Option<BTreeMap<String, f64>>,
    /// Raw legacy score, when ranked by the legacy algorithm.
    pub legacy_score: Option<f64>,
}

impl RankedEntry {
    pub fn selected_annotations(&self) -> &[crate::annotator::Annotation] {
        &self.criterion_scores.selected_annotations
    }
}

fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then(
            b.criterion_scores
                .raw_coverage_sum
                .total_cmp(&a.criterion_scores.raw_coverage_sum),
        )
        .then(a.members.len().cmp(&b.members.len()))
        .then_with(|| a.members.cmp(&b.members))
}

/// Sorts by final score (ties: higher raw coverage, fewer members, acronyms),
/// truncates to `ranking_size` and fills in display scores.
pub fn rank(mut entries: Vec<RankedEntry>, ranking_size: usize) -> Vec<RankedEntry> {
    entries.sort_by(rank_order);
    entries.truncate(ranking_size);
    let column = |f: fn(&CriterionScores) -> f64, entries: &[RankedEntry]| -> Vec<u8> {
        let values: Vec<f64> = entries.iter().map(|e| f(&e.criterion_scores)).collect();
        min_max_display(&values)
    };
    let coverage = column(|s| s.coverage, &entries);
    let acceptance = column(|s| s.acceptance, &entries);
    let detail = column(|s| s.detail, &entries);
    let specialization = column(|s| s.specialization, &entries);
    for (i, entry) in entries.iter_mut().enumerate() {
        entry.display_scores = DisplayScores {
            coverage: coverage[i],
            acceptance: acceptance[i],
            detail: detail[i],
            specialization: specialization[i],
        };
    }
    entries
}

/// Min-max maps `values` onto 0..=100; a constant column maps to 100.
pub fn min_max_display(values: &[f64]) -> Vec<u8> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|&v| {
            if max - min <= 0.0 {
                100
            } else {
                ((v - min) / (max - min) * 100.0).round().clamp(0.0, 100.0) as u8
            }
        })
        .collect()
}
