//! The four evaluation criteria (coverage, acceptance, detail, specialization)
//! and the legacy single-formula score.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::{Annotation, MatchType};
use crate::corpus::{AcceptanceTable, ClassRecord, OntologyRepository};

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CriteriaError {
    #[error("no ontology annotates the input")]
    ZeroNormalizer,
    #[error("invalid scoring constants: {0}")]
    InvalidConstants(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConstants {
    pub pref_score: f64,
    pub syn_score: f64,
    pub multiword_bonus: f64,
    pub legacy_pref: f64,
    pub legacy_syn: f64,
    pub k_d: u32,
    pub k_s: u32,
    pub k_p: u32,
    pub w_presence: f64,
    pub w_visits: f64,
    pub presence_repo_weights: BTreeMap<String, f64>,
    pub visits_repo_weights: BTreeMap<String, f64>,
}

impl Default for ScoringConstants {
    fn default() -> Self {
        Self {
            pref_score: 10.0,
            syn_score: 5.0,
            multiword_bonus: 3.0,
            legacy_pref: 10.0,
            legacy_syn: 8.0,
            k_d: 1,
            k_s: 3,
            k_p: 17,
            w_presence: 0.5,
            w_visits: 0.5,
            presence_repo_weights: BTreeMap::from([("UMLS".to_string(), 1.0)]),
            visits_repo_weights: BTreeMap::from([("BioPortal".to_string(), 1.0)]),
        }
    }
}

impl ScoringConstants {
    pub fn validate(&self) -> Result<(), CriteriaError> {
        let bad = |msg: String| Err(CriteriaError::InvalidConstants(msg));
        if self.k_d == 0 || self.k_s == 0 || self.k_p == 0 {
            return bad("k_d, k_s and k_p must be positive".into());
        }
        let scores = [
            self.pref_score,
            self.syn_score,
            self.multiword_bonus,
            self.legacy_pref,
            self.legacy_syn,
        ];
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return bad("annotation scores must be finite and non-negative".into());
        }
        if !unit(self.w_presence) || !unit(self.w_visits) {
            return bad("w_presence and w_visits must lie in [0, 1]".into());
        }
        if (self.w_presence + self.w_visits - 1.0).abs() > WEIGHT_TOLERANCE {
            return bad("w_presence + w_visits must equal 1".into());
        }
        for (name, map) in [
            ("presence_repo_weights", &self.presence_repo_weights),
            ("visits_repo_weights", &self.visits_repo_weights),
        ] {
            if map.values().any(|w| !unit(*w)) {
                return bad(format!("{name} entries must lie in [0, 1]"));
            }
            let sum: f64 = map.values().sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return bad(format!("{name} must sum to 1 (got {sum})"));
            }
        }
        Ok(())
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Per-candidate criterion values. Normalized fields lie in [0, 1].
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CriterionScores {
    pub coverage: f64,
    pub acceptance: f64,
    pub detail: f64,
    pub specialization: f64,
    pub raw_coverage_sum: f64,
    pub raw_specialization: f64,
    /// Pairwise non-overlapping, ordered by span start.
    pub selected_annotations: Vec<Annotation>,
}

/// `(type score + multi-word bonus) * annotated words`.
pub fn annotation_score_v2(a: &Annotation, c: &ScoringConstants) -> f64 {
    let type_score = match a.match_type {
        MatchType::Pref => c.pref_score,
        MatchType::Syn => c.syn_score,
    };
    let bonus = if a.annotated_words > 1 {
        c.multiword_bonus
    } else {
        0.0
    };
    (type_score + bonus) * a.annotated_words as f64
}

pub fn annotation_score_v1(a: &Annotation, c: &ScoringConstants) -> f64 {
    match a.match_type {
        MatchType::Pref => c.legacy_pref,
        MatchType::Syn => c.legacy_syn,
    }
}

/// Selection priority: score desc, start asc, length desc, PREF first,
/// ontology asc, class id asc.
pub fn selection_order(a: &Annotation, b: &Annotation, c: &ScoringConstants) -> Ordering {
    annotation_score_v2(b, c)
        .total_cmp(&annotation_score_v2(a, c))
        .then(a.start_word_index.cmp(&b.start_word_index))
        .then(b.span_len().cmp(&a.span_len()))
        .then(a.match_type.cmp(&b.match_type))
        .then_with(|| a.ontology_acronym.cmp(&b.ontology_acronym))
        .then_with(|| a.class_id.cmp(&b.class_id))
}

/// Greedy non-overlapping selection; returns indices into `annotations`
/// ordered by span start.
pub fn select_indices(annotations: &[Annotation], c: &ScoringConstants) -> Vec<usize> {
    let mut order: Vec<usize> = (0..annotations.len()).collect();
    order.sort_by(|&i, &j| selection_order(&annotations[i], &annotations[j], c));
    let width = annotations
        .iter()
        .map(|a| a.end_word_index + 1)
        .max()
        .unwrap_or(0);
    let mut occupied = vec![false; width];
    let mut chosen = Vec::new();
    for i in order {
        let a = &annotations[i];
        let span = &mut occupied[a.start_word_index..=a.end_word_index];
        if span.iter().any(|&taken| taken) {
            continue;
        }
        span.fill(true);
        chosen.push(i);
    }
    chosen.sort_by_key(|&i| annotations[i].start_word_index);
    chosen
}

/// Keeps, for each text fragment, only the highest-priority annotation.
pub fn select_annotations(annotations: &[Annotation], c: &ScoringConstants) -> Vec<Annotation> {
    select_indices(annotations, c)
        .into_iter()
        .map(|i| annotations[i].clone())
        .collect()
}

pub fn score_sum(annotations: &[Annotation], c: &ScoringConstants) -> f64 {
    annotations.iter().map(|a| annotation_score_v2(a, c)).sum()
}

/// Score sum of the selection over the union of every candidate's annotations.
pub fn global_normalizer(all_candidates: &[Annotation], c: &ScoringConstants) -> f64 {
    select_indices(all_candidates, c)
        .into_iter()
        .map(|i| annotation_score_v2(&all_candidates[i], c))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageScore {
    pub normalized: f64,
    pub raw: f64,
    pub selected: Vec<Annotation>,
}

pub fn coverage_score(
    annotations: &[Annotation],
    global_normalizer: f64,
    c: &ScoringConstants,
) -> Result<CoverageScore, CriteriaError> {
    if global_normalizer.is_nan() || global_normalizer <= 0.0 {
        return Err(CriteriaError::ZeroNormalizer);
    }
    let selected = select_annotations(annotations, c);
    let raw = score_sum(&selected, c);
    Ok(CoverageScore {
        normalized: (raw / global_normalizer).clamp(0.0, 1.0),
        raw,
        selected,
    })
}

/// Maximum visits per visits-repository, over a fixed population of
/// ontologies. Computed once so acceptance is independent of the input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VisitMaxima(BTreeMap<String, u64>);

impl VisitMaxima {
    pub fn compute<'a>(
        table: &AcceptanceTable,
        acronyms: impl IntoIterator<Item = &'a str>,
        c: &ScoringConstants,
    ) -> Self {
        let acronyms: Vec<&str> = acronyms.into_iter().collect();
        Self(
            c.visits_repo_weights
                .keys()
                .map(|repo| {
                    let max = acronyms
                        .iter()
                        .map(|a| table.visits(a, repo))
                        .max()
                        .unwrap_or(0);
                    (repo.clone(), max)
                })
                .collect(),
        )
    }

    pub fn get(&self, repository: &str) -> u64 {
        self.0.get(repository).copied().unwrap_or(0)
    }
}

pub fn acceptance_score(
    acronym: &str,
    table: &AcceptanceTable,
    maxima: &VisitMaxima,
    c: &ScoringConstants,
) -> f64 {
    let presence: f64 = c
        .presence_repo_weights
        .iter()
        .filter(|(repo, _)| table.presence(acronym, repo))
        .map(|(_, w)| w)
        .sum();
    let visits: f64 = c
        .visits_repo_weights
        .iter()
        .map(|(repo, w)| {
            let max = maxima.get(repo);
            if max == 0 {
                0.0
            } else {
                w * table.visits(acronym, repo) as f64 / max as f64
            }
        })
        .sum();
    (c.w_presence * presence + c.w_visits * visits).clamp(0.0, 1.0)
}

fn capped_ratio(count: u32, threshold: u32) -> f64 {
    (f64::from(count) / f64::from(threshold)).min(1.0)
}

/// Detail of one matched class: mean of the capped definition, synonym and
/// property ratios.
pub fn class_detail(class: &ClassRecord, c: &ScoringConstants) -> f64 {
    (capped_ratio(class.definitions_count, c.k_d)
        + capped_ratio(class.synonyms.len() as u32, c.k_s)
        + capped_ratio(class.properties_count, c.k_p))
        / 3.0
}

/// Mean class detail over the selected annotations; 0 when there are none.
pub fn detail_score(
    selected: &[Annotation],
    repository: &OntologyRepository,
    c: &ScoringConstants,
) -> f64 {
    if selected.is_empty() {
        return 0.0;
    }
    let total: f64 = selected
        .iter()
        .map(|a| {
            repository
                .class(&a.ontology_acronym, &a.class_id)
                .map_or(0.0, |class| class_detail(class, c))
        })
        .sum();
    total / selected.len() as f64
}

fn level_of(a: &Annotation, repository: &OntologyRepository) -> f64 {
    repository
        .class(&a.ontology_acronym, &a.class_id)
        .map_or(1.0, |class| f64::from(class.hierarchy_level))
}

/// Unnormalized specialization over all annotations of one ontology.
pub fn specialization_raw(
    annotations: &[Annotation],
    repository: &OntologyRepository,
    ontology_size: usize,
    c: &ScoringConstants,
) -> f64 {
    debug_assert!(ontology_size >= 2);
    let sum: f64 = annotations
        .iter()
        .map(|a| annotation_score_v2(a, c) + 2.0 * level_of(a, repository))
        .sum();
    sum / (ontology_size as f64).log10()
}

/// Divides each value by the maximum; all zeros stay zero.
pub fn normalize_by_max(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0_f64, f64::max);
    values
        .iter()
        .map(|v| {
            if max > 0.0 {
                (v / max).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// The legacy score: `Σ(type score + 2·level) / log10(|o|)` over all annotations.
pub fn legacy_score_v1(
    annotations: &[Annotation],
    repository: &OntologyRepository,
    ontology_size: usize,
    c: &ScoringConstants,
) -> f64 {
    if annotations.is_empty() {
        return 0.0;
    }
    let sum: f64 = annotations
        .iter()
        .map(|a| annotation_score_v1(a, c) + 2.0 * level_of(a, repository))
        .sum();
    sum / (ontology_size as f64).log10()
}
