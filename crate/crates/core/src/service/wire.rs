//! JSON response format. Scores are written with exactly four decimals and
//! all maps are ordered, so a response is byte-stable for a fixed input.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use super::{Algorithm, Engine, InputType, OutputType, RecommendError, Recommendation};
use crate::annotator::{Annotation, MatchType};
use crate::criteria::annotation_score_v2;

/// A number serialized with four decimal places.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed4(pub f64);

impl Serialize for Fixed4 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite score"));
        }
        // `+ 0.0` folds -0.0 into 0.0.
        let text = format!("{:.4}", self.0 + 0.0);
        let text = if text == "-0.0000" {
            "0.0000".to_string()
        } else {
            text
        };
        RawValue::from_string(text)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

#[derive(Debug, Serialize)]
pub struct RecommendResponse {
    pub input_type: InputType,
    pub output_type: OutputType,
    pub algorithm: Algorithm,
    pub ranking: Vec<WireEntry>,
}

#[derive(Debug, Serialize)]
pub struct CriterionValue {
    pub score: Fixed4,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<Fixed4>,
    pub display: u8,
}

#[derive(Debug, Serialize)]
pub struct WireEntry {
    pub position: usize,
    pub ontologies: Vec<String>,
    pub final_score: Fixed4,
    pub coverage: CriterionValue,
    pub acceptance: CriterionValue,
    pub detail: CriterionValue,
    pub specialization: CriterionValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contributions: Option<BTreeMap<String, Fixed4>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub legacy_score: Option<Fixed4>,
    pub annotation_count: usize,
    pub annotations: Vec<WireAnnotation>,
}

#[derive(Debug, Serialize)]
pub struct WireAnnotation {
    pub ontology: String,
    pub class_id: String,
    pub pref_label: String,
    pub match_type: MatchType,
    pub text: String,
    pub from_word: usize,
    pub to_word: usize,
    pub words: usize,
    /// Character offsets into the input, end exclusive.
    pub from: usize,
    pub to: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keyword: Option<usize>,
    pub score: Fixed4,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody<'a> {
    pub error: &'a str,
    pub message: String,
}

impl<'a> From<&'a RecommendError> for ErrorBody<'a> {
    fn from(e: &'a RecommendError) -> Self {
        ErrorBody {
            error: e.code(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub ontologies: usize,
}

impl RecommendResponse {
    pub fn new(engine: &Engine, rec: &Recommendation) -> Self {
        let c = &engine.config().constants;
        let wire_annotation = |a: &Annotation| WireAnnotation {
            ontology: a.ontology_acronym.clone(),
            class_id: a.class_id.clone(),
            pref_label: engine
                .repository()
                .class(&a.ontology_acronym, &a.class_id)
                .map(|cl| cl.preferred_label.clone())
                .unwrap_or_default(),
            match_type: a.match_type,
            text: a.matched_text.clone(),
            from_word: a.start_word_index,
            to_word: a.end_word_index,
            words: a.annotated_words,
            from: a.char_start,
            to: a.char_end,
            keyword: a.keyword_index,
            score: Fixed4(annotation_score_v2(a, c)),
        };
        let ranking = rec
            .ranking
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let s = &e.criterion_scores;
                let d = e.display_scores;
                WireEntry {
                    position: i + 1,
                    ontologies: e.members.clone(),
                    final_score: Fixed4(e.final_score),
                    coverage: CriterionValue {
                        score: Fixed4(s.coverage),
                        raw: Some(Fixed4(s.raw_coverage_sum)),
                        display: d.coverage,
                    },
                    acceptance: CriterionValue {
                        score: Fixed4(s.acceptance),
                        raw: None,
                        display: d.acceptance,
                    },
                    detail: CriterionValue {
                        score: Fixed4(s.detail),
                        raw: None,
                        display: d.detail,
                    },
                    specialization: CriterionValue {
                        score: Fixed4(s.specialization),
                        raw: Some(Fixed4(s.raw_specialization)),
                        display: d.specialization,
                    },
                    contributions: e
                        .contributions
                        .as_ref()
                        .map(|m| m.iter().map(|(k, v)| (k.clone(), Fixed4(*v))).collect()),
                    legacy_score: e.legacy_score.map(Fixed4),
                    annotation_count: e.annotation_count,
                    annotations: s.selected_annotations.iter().map(wire_annotation).collect(),
                }
            })
            .collect();
        Self {
            input_type: rec.input_type,
            output_type: rec.output_type,
            algorithm: rec.algorithm,
            ranking,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("response is always serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed4_formatting() {
        let json = serde_json::to_string(&vec![
            Fixed4(1.0),
            Fixed4(26.0 / 31.0),
            Fixed4(-0.0),
            Fixed4(0.00004),
        ])
        .unwrap();
        assert_eq!(json, "[1.0000,0.8387,0.0000,0.0000]");
        assert!(serde_json::to_string(&Fixed4(f64::NAN)).is_err());
    }
}
