//! The recommendation pipeline and its HTTP front end.
//!
//! [`Engine`] owns the read-only repository, term index and acceptance table.
//! A request runs annotate → per-ontology criteria → (optionally) sets → rank.

pub mod http;
pub mod wire;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::{
    annotate_keyword_input, annotate_keyword_input_partial, annotate_text, tokenize, Annotation,
    KeywordLayout, TermIndex,
};
use crate::config::{clamp_set_size, ConfigError, RecommenderConfig};
use crate::corpus::{
    load_acceptance, load_repository, AcceptanceTable, CorpusError, OntologyRepository,
};
use crate::criteria::{
    acceptance_score, coverage_score, detail_score, global_normalizer, legacy_score_v1,
    normalize_by_max, specialization_raw, CriterionScores, VisitMaxima,
};
use crate::ranker::{aggregate, rank, DisplayScores, InvalidWeights, RankedEntry, Weights};
use crate::sets::{enumerate_sets, prune_set, score_set, MemberData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputType {
    #[default]
    Text,
    Keywords,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputType {
    #[default]
    Ontologies,
    Sets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    V2,
    V1,
}

/// Request body of `POST /recommend`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendRequest {
    pub input: String,
    #[serde(default)]
    pub input_type: InputType,
    #[serde(default)]
    pub output_type: OutputType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ws: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_elements_set: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ontologies: Option<Vec<String>>,
    #[serde(default)]
    pub algorithm: Algorithm,
}

impl RecommendRequest {
    pub fn text(input: impl Into<String>) -> Self {
        Self {
            input: input.into(),
            ..Default::default()
        }
    }

    pub fn keywords(input: impl Into<String>) -> Self {
        Self {
            input: input.into(),
            input_type: InputType::Keywords,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RecommendError {
    #[error(transparent)]
    InvalidWeights(#[from] InvalidWeights),
    #[error("unknown ontologies in filter: {}", .0.join(", "))]
    UnknownOntologyFilter(Vec<String>),
    #[error("input is empty")]
    EmptyInput,
    #[error("the legacy algorithm only ranks single ontologies")]
    UnsupportedOutput,
}

impl RecommendError {
    /// Stable error code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidWeights(_) => "InvalidWeights",
            Self::UnknownOntologyFilter(_) => "UnknownOntologyFilter",
            Self::EmptyInput => "EmptyInput",
            Self::UnsupportedOutput => "UnsupportedOutput",
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Result of one request, with everything the wire format and the evaluation
/// harness need.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub input_type: InputType,
    pub output_type: OutputType,
    pub algorithm: Algorithm,
    pub ranking: Vec<RankedEntry>,
    /// Selection over the union of all candidates' (v2) annotations.
    pub union_selection: Vec<Annotation>,
    pub global_normalizer: f64,
    pub word_count: usize,
    /// Keyword word spans in keyword mode.
    pub keyword_spans: Option<Vec<Option<(usize, usize)>>>,
}

/// Per-ontology evaluation inside one request.
#[derive(Debug, Clone)]
struct SingleEval {
    acronym: String,
    annotations: Vec<Annotation>,
    scores: CriterionScores,
    legacy_score: f64,
    legacy_count: usize,
}

pub struct Engine {
    repository: OntologyRepository,
    acceptance: AcceptanceTable,
    index: TermIndex,
    config: RecommenderConfig,
    acceptance_scores: BTreeMap<String, f64>,
}

impl Engine {
    pub fn new(
        repository: OntologyRepository,
        acceptance: AcceptanceTable,
        config: RecommenderConfig,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let c = &config.constants;
        acceptance.check_repositories(
            c.presence_repo_weights.keys().map(String::as_str),
            c.visits_repo_weights.keys().map(String::as_str),
        )?;
        let maxima = VisitMaxima::compute(&acceptance, repository.acronyms(), c);
        let acceptance_scores = repository
            .acronyms()
            .map(|a| (a.to_string(), acceptance_score(a, &acceptance, &maxima, c)))
            .collect();
        let index = TermIndex::build(&repository);
        Ok(Self {
            repository,
            acceptance,
            index,
            config,
            acceptance_scores,
        })
    }

    pub fn from_files(
        corpus: impl AsRef<Path>,
        acceptance: Option<&Path>,
        config: RecommenderConfig,
    ) -> Result<Self, EngineError> {
        let repository = load_repository(corpus)?;
        let acceptance = match acceptance {
            Some(path) => load_acceptance(path)?,
            None => AcceptanceTable::default(),
        };
        Self::new(repository, acceptance, config)
    }

    pub fn repository(&self) -> &OntologyRepository {
        &self.repository
    }

    pub fn acceptance_table(&self) -> &AcceptanceTable {
        &self.acceptance
    }

    pub fn index(&self) -> &TermIndex {
        &self.index
    }

    pub fn config(&self) -> &RecommenderConfig {
        &self.config
    }

    pub fn acceptance_of(&self, acronym: &str) -> f64 {
        self.acceptance_scores.get(acronym).copied().unwrap_or(0.0)
    }

    fn weights_for(&self, req: &RecommendRequest) -> Result<Weights, InvalidWeights> {
        let d = self.config.weights;
        Weights::new(
            req.wc.unwrap_or(d.coverage()),
            req.wa.unwrap_or(d.acceptance()),
            req.wd.unwrap_or(d.detail()),
            req.ws.unwrap_or(d.specialization()),
        )
    }

    fn candidate_filter(
        &self,
        req: &RecommendRequest,
    ) -> Result<Option<BTreeSet<String>>, RecommendError> {
        let Some(list) = &req.ontologies else {
            return Ok(None);
        };
        let wanted: BTreeSet<String> = list
            .iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let unknown: Vec<String> = wanted
            .iter()
            .filter(|a| !self.repository.contains(a))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(RecommendError::UnknownOntologyFilter(unknown));
        }
        Ok((!wanted.is_empty()).then_some(wanted))
    }

    pub fn recommend(&self, req: &RecommendRequest) -> Result<Recommendation, RecommendError> {
        if req.input.trim().is_empty() {
            return Err(RecommendError::EmptyInput);
        }
        let weights = self.weights_for(req)?;
        let filter = self.candidate_filter(req)?;
        if req.algorithm == Algorithm::V1 && req.output_type == OutputType::Sets {
            return Err(RecommendError::UnsupportedOutput);
        }
        let c = &self.config.constants;

        let (annotations, legacy_annotations, word_count, keyword_spans) = match req.input_type {
            InputType::Text => {
                let anns = annotate_text(&self.index, &req.input);
                (anns, None, tokenize(&req.input).len(), None)
            }
            InputType::Keywords => {
                let layout = KeywordLayout::from_raw(&req.input);
                let anns = annotate_keyword_input(&self.index, &req.input);
                // The legacy algorithm never discarded partial keyword matches.
                let legacy = (req.algorithm == Algorithm::V1)
                    .then(|| annotate_keyword_input_partial(&self.index, &req.input));
                (anns, legacy, layout.tokens.len(), Some(layout.spans))
            }
        };

        let in_pool = |a: &Annotation| {
            filter
                .as_ref()
                .is_none_or(|f| f.contains(&a.ontology_acronym))
        };
        let annotations: Vec<Annotation> = annotations.into_iter().filter(|a| in_pool(a)).collect();
        let union_selection = crate::criteria::select_annotations(&annotations, c);
        let normalizer = global_normalizer(&annotations, c);

        let mut recommendation = Recommendation {
            input_type: req.input_type,
            output_type: req.output_type,
            algorithm: req.algorithm,
            ranking: Vec::new(),
            union_selection,
            global_normalizer: normalizer,
            word_count,
            keyword_spans,
        };

        let mut legacy_groups = legacy_annotations
            .map(|anns| group_by_ontology(anns.into_iter().filter(|a| in_pool(a))));
        let groups = group_by_ontology(annotations);
        let mut evals = Vec::new();
        if normalizer > 0.0 {
            evals = self.evaluate_singles(groups, normalizer, legacy_groups.as_mut());
        }

        recommendation.ranking = match (req.algorithm, req.output_type) {
            (Algorithm::V1, _) => {
                // Legacy keyword mode may annotate ontologies that v2 discards.
                if let Some(extra) = legacy_groups {
                    evals.extend(self.legacy_only(extra));
                }
                self.legacy_ranking(evals)
            }
            (Algorithm::V2, OutputType::Ontologies) => self.single_ranking(evals, &weights),
            (Algorithm::V2, OutputType::Sets) => {
                let max = clamp_set_size(req.max_elements_set.unwrap_or(self.config.max_set_size));
                self.set_ranking(evals, &weights, normalizer, max)
            }
        };
        Ok(recommendation)
    }

    fn evaluate_singles(
        &self,
        groups: BTreeMap<String, Vec<Annotation>>,
        normalizer: f64,
        mut legacy_groups: Option<&mut BTreeMap<String, Vec<Annotation>>>,
    ) -> Vec<SingleEval> {
        let c = &self.config.constants;
        let mut evals: Vec<SingleEval> = groups
            .into_iter()
            .map(|(acronym, annotations)| {
                let size = self.repository.ontology_size(&acronym).unwrap_or(2);
                let coverage = coverage_score(&annotations, normalizer, c)
                    .expect("normalizer checked positive");
                let detail = detail_score(&coverage.selected, &self.repository, c);
                let raw_spec = specialization_raw(&annotations, &self.repository, size, c);
                let legacy_source = legacy_groups
                    .as_deref_mut()
                    .and_then(|g| g.remove(&acronym))
                    .unwrap_or_else(|| annotations.clone());
                let legacy_score = legacy_score_v1(&legacy_source, &self.repository, size, c);
                let legacy_count = legacy_source.len();
                SingleEval {
                    scores: CriterionScores {
                        coverage: coverage.normalized,
                        acceptance: self.acceptance_of(&acronym),
                        detail,
                        specialization: 0.0,
                        raw_coverage_sum: coverage.raw,
                        raw_specialization: raw_spec,
                        selected_annotations: coverage.selected,
                    },
                    acronym,
                    annotations,
                    legacy_score,
                    legacy_count,
                }
            })
            .collect();
        let raws: Vec<f64> = evals.iter().map(|e| e.scores.raw_specialization).collect();
        for (e, norm) in evals.iter_mut().zip(normalize_by_max(&raws)) {
            e.scores.specialization = norm;
        }
        evals
    }

    /// Ontologies that only have partial keyword matches: scored by the
    /// legacy formula alone.
    fn legacy_only(&self, groups: BTreeMap<String, Vec<Annotation>>) -> Vec<SingleEval> {
        let c = &self.config.constants;
        groups
            .into_iter()
            .map(|(acronym, annotations)| {
                let size = self.repository.ontology_size(&acronym).unwrap_or(2);
                let legacy_score = legacy_score_v1(&annotations, &self.repository, size, c);
                SingleEval {
                    scores: CriterionScores {
                        acceptance: self.acceptance_of(&acronym),
                        selected_annotations: crate::criteria::select_annotations(&annotations, c),
                        ..Default::default()
                    },
                    acronym,
                    legacy_count: annotations.len(),
                    annotations,
                    legacy_score,
                }
            })
            .collect()
    }

    fn single_ranking(&self, evals: Vec<SingleEval>, weights: &Weights) -> Vec<RankedEntry> {
        let entries = evals
            .into_iter()
            .map(|e| RankedEntry {
                members: vec![e.acronym],
                final_score: aggregate(&e.scores, weights),
                criterion_scores: e.scores,
                display_scores: DisplayScores::default(),
                annotation_count: e.annotations.len(),
                contributions: None,
                legacy_score: None,
            })
            .collect();
        rank(entries, self.config.ranking_size)
    }

    fn legacy_ranking(&self, evals: Vec<SingleEval>) -> Vec<RankedEntry> {
        let max = evals.iter().map(|e| e.legacy_score).fold(0.0_f64, f64::max);
        let entries = evals
            .into_iter()
            .map(|e| RankedEntry {
                members: vec![e.acronym],
                final_score: if max > 0.0 { e.legacy_score / max } else { 0.0 },
                criterion_scores: e.scores,
                display_scores: DisplayScores::default(),
                annotation_count: e.legacy_count,
                contributions: None,
                legacy_score: Some(e.legacy_score),
            })
            .collect();
        rank(entries, self.config.ranking_size)
    }

    fn set_ranking(
        &self,
        evals: Vec<SingleEval>,
        weights: &Weights,
        normalizer: f64,
        max_set_size: usize,
    ) -> Vec<RankedEntry> {
        let c = &self.config.constants;
        let candidates: Vec<String> = self
            .single_ranking(evals.clone(), weights)
            .into_iter()
            .map(|e| e.members[0].clone())
            .collect();
        let data: BTreeMap<String, MemberData> = evals
            .into_iter()
            .filter(|e| candidates.contains(&e.acronym))
            .map(|e| {
                let covered_words = e
                    .scores
                    .selected_annotations
                    .iter()
                    .flat_map(|a| a.start_word_index..=a.end_word_index)
                    .collect();
                let member = MemberData {
                    annotations: e.annotations,
                    covered_words,
                    acceptance: e.scores.acceptance,
                    specialization: e.scores.specialization,
                    raw_specialization: e.scores.raw_specialization,
                };
                (e.acronym, member)
            })
            .collect();
        let covered: BTreeMap<String, BTreeSet<usize>> = data
            .iter()
            .map(|(k, v)| (k.clone(), v.covered_words.clone()))
            .collect();
        let surviving: Vec<Vec<String>> = enumerate_sets(&candidates, max_set_size)
            .into_iter()
            .filter(|members| prune_set(members, &covered))
            .collect();
        let entries: Vec<RankedEntry> = surviving
            .par_iter()
            .map(|members| {
                let set = score_set(members, &data, normalizer, &self.repository, c);
                RankedEntry {
                    members: set.members,
                    final_score: aggregate(&set.set_scores, weights),
                    criterion_scores: set.set_scores,
                    display_scores: DisplayScores::default(),
                    annotation_count: set.annotation_count,
                    contributions: Some(set.contributions),
                    legacy_score: None,
                }
            })
            .collect();
        rank(entries, self.config.ranking_size)
    }
}

fn group_by_ontology(
    annotations: impl IntoIterator<Item = Annotation>,
) -> BTreeMap<String, Vec<Annotation>> {
    let mut groups: BTreeMap<String, Vec<Annotation>> = BTreeMap::new();
    for a in annotations {
        groups
            .entry(a.ontology_acronym.clone())
            .or_default()
            .push(a);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn engine(repo: OntologyRepository) -> Engine {
        let acceptance = fixtures::uniform_acceptance(&repo);
        Engine::new(repo, acceptance, RecommenderConfig::default()).unwrap()
    }

    #[test]
    fn thrombocyte_end_to_end() {
        let e = engine(fixtures::thrombocyte_repository());
        let rec = e
            .recommend(&RecommendRequest::text(fixtures::THROMBOCYTE_INPUT))
            .unwrap();
        assert_eq!(rec.ranking.len(), 1);
        let top = &rec.ranking[0];
        assert_eq!(top.display_scores.coverage, 100);
        assert_eq!(top.selected_annotations().len(), 2);
        assert_eq!(top.criterion_scores.raw_coverage_sum, 31.0);
        assert_eq!(top.annotation_count, 6);
        assert_eq!(rec.global_normalizer, 31.0);
    }

    #[test]
    fn sets_need_two_ontologies() {
        let e = engine(fixtures::thrombocyte_repository());
        let req = RecommendRequest {
            output_type: OutputType::Sets,
            ..RecommendRequest::text(fixtures::THROMBOCYTE_INPUT)
        };
        assert!(e.recommend(&req).unwrap().ranking.is_empty());
    }

    #[test]
    fn request_validation() {
        let e = engine(fixtures::thrombocyte_repository());
        let req = RecommendRequest {
            wc: Some(0.5),
            wa: Some(0.1),
            wd: Some(0.15),
            ws: Some(0.15),
            ..RecommendRequest::text("blood")
        };
        assert!(matches!(
            e.recommend(&req),
            Err(RecommendError::InvalidWeights(_))
        ));
        assert_eq!(
            e.recommend(&RecommendRequest::text("   ")),
            Err(RecommendError::EmptyInput)
        );
        let req = RecommendRequest {
            ontologies: Some(vec!["NOPE".into()]),
            ..RecommendRequest::text("blood")
        };
        assert_eq!(
            e.recommend(&req),
            Err(RecommendError::UnknownOntologyFilter(vec!["NOPE".into()]))
        );
        let req = RecommendRequest {
            algorithm: Algorithm::V1,
            output_type: OutputType::Sets,
            ..RecommendRequest::text("blood")
        };
        assert_eq!(e.recommend(&req), Err(RecommendError::UnsupportedOutput));
    }

    #[test]
    fn nothing_annotated_gives_empty_ranking() {
        let e = engine(fixtures::thrombocyte_repository());
        let rec = e
            .recommend(&RecommendRequest::text("zebra giraffe"))
            .unwrap();
        assert!(rec.ranking.is_empty());
        assert_eq!(rec.global_normalizer, 0.0);
    }

    #[test]
    fn filter_restricts_candidates() {
        let e = engine(fixtures::ehda_repository());
        let req = RecommendRequest {
            ontologies: Some(vec!["EHDA".into()]),
            ..RecommendRequest::text(fixtures::MELANOMA_INPUT)
        };
        let rec = e.recommend(&req).unwrap();
        assert_eq!(rec.ranking.len(), 1);
        assert_eq!(rec.ranking[0].members, ["EHDA"]);
        // Normalizer restricted to the filtered pool: EHDA is now best.
        assert_eq!(rec.ranking[0].criterion_scores.coverage, 1.0);
    }

    #[test]
    fn ehda_pathology() {
        let e = engine(fixtures::ehda_repository());
        let v2 = e
            .recommend(&RecommendRequest::text(fixtures::MELANOMA_INPUT))
            .unwrap();
        assert_eq!(v2.ranking[0].members, ["NCIT"]);
        let v1 = e
            .recommend(&RecommendRequest {
                algorithm: Algorithm::V1,
                ..RecommendRequest::text(fixtures::MELANOMA_INPUT)
            })
            .unwrap();
        assert_eq!(v1.ranking[0].members, ["EHDA"]);
        assert_eq!(v1.ranking[0].annotation_count, 15);
    }

    #[test]
    fn multiword_keywords() {
        let e = engine(fixtures::multiword_repository());
        let v2 = e
            .recommend(&RecommendRequest::keywords(fixtures::MULTIWORD_KEYWORDS))
            .unwrap();
        assert_eq!(v2.ranking.len(), 1);
        assert_eq!(v2.ranking[0].members, ["SNOMEDCT"]);
        let v1 = e
            .recommend(&RecommendRequest {
                algorithm: Algorithm::V1,
                ..RecommendRequest::keywords(fixtures::MULTIWORD_KEYWORDS)
            })
            .unwrap();
        assert_eq!(v1.ranking[0].members, ["SWEET"]);
    }

    #[test]
    fn penicillin_sets() {
        let repo = fixtures::penicillin_repository(200, 80);
        let e = engine(repo);
        let req = RecommendRequest {
            output_type: OutputType::Sets,
            ..RecommendRequest::text(fixtures::PENICILLIN_INPUT)
        };
        let rec = e.recommend(&req).unwrap();
        assert_eq!(rec.ranking.len(), 1);
        let set = &rec.ranking[0];
        assert_eq!(set.members, ["O1", "O2"]);
        assert_eq!(set.criterion_scores.raw_coverage_sum, 25.0);
        assert_eq!(set.criterion_scores.coverage, 1.0);
        let sum: f64 = set.contributions.as_ref().unwrap().values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
