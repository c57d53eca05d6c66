//! Ontology sets: combinations of 2..=N candidates scored jointly.
//!
//! A set's coverage comes from the greedy selection over the union of its
//! members' annotations. Each member's share of that coverage (its score mass
//! among the selected annotations) weights the other three criteria.

use std::collections::{BTreeMap, BTreeSet};

use crate::annotator::Annotation;
use crate::corpus::OntologyRepository;
use crate::criteria::{
    annotation_score_v2, detail_score, select_indices, CriterionScores, ScoringConstants,
};

#[derive(Debug, Clone, PartialEq)]
pub struct OntologySet {
    /// Distinct acronyms in ascending order.
    pub members: Vec<String>,
    pub set_scores: CriterionScores,
    pub contributions: BTreeMap<String, f64>,
    /// Detail of each member computed over its winning annotations only.
    pub member_details: BTreeMap<String, f64>,
    pub annotation_count: usize,
}

/// What a set needs to know about one candidate ontology.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberData {
    /// All annotations of the ontology.
    pub annotations: Vec<Annotation>,
    /// Word positions covered by the ontology's own selected annotations.
    pub covered_words: BTreeSet<usize>,
    pub acceptance: f64,
    /// Normalized specialization from the single-ontology pool.
    pub specialization: f64,
    pub raw_specialization: f64,
}

/// All subsets of size 2..=`max_set_size`, members ascending, enumerated by
/// size and then lexicographically.
pub fn enumerate_sets(candidates: &[String], max_set_size: usize) -> Vec<Vec<String>> {
    let mut pool: Vec<String> = candidates.to_vec();
    pool.sort();
    pool.dedup();
    let mut out = Vec::new();
    for size in 2..=max_set_size.min(pool.len()) {
        let mut current = Vec::with_capacity(size);
        combinations(&pool, size, 0, &mut current, &mut out);
    }
    out
}

fn combinations(
    pool: &[String],
    size: usize,
    from: usize,
    current: &mut Vec<String>,
    out: &mut Vec<Vec<String>>,
) {
    if current.len() == size {
        out.push(current.clone());
        return;
    }
    let needed = size - current.len();
    for i in from..=pool.len() - needed {
        current.push(pool[i].clone());
        combinations(pool, size, i + 1, current, out);
        current.pop();
    }
}

/// False when some member covers nothing beyond what the others cover; such a
/// set can never improve on the smaller set without that member.
pub fn prune_set(members: &[String], covered: &BTreeMap<String, BTreeSet<usize>>) -> bool {
    let empty = BTreeSet::new();
    let words = |m: &String| covered.get(m).unwrap_or(&empty);
    members.iter().enumerate().all(|(i, member)| {
        let others: BTreeSet<usize> = members
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, m)| words(m).iter().copied())
            .collect();
        !words(member).is_subset(&others)
    })
}

pub fn score_set(
    members: &[String],
    data: &BTreeMap<String, MemberData>,
    global_normalizer: f64,
    repository: &OntologyRepository,
    c: &ScoringConstants,
) -> OntologySet {
    let union: Vec<Annotation> = members
        .iter()
        .filter_map(|m| data.get(m))
        .flat_map(|d| d.annotations.iter().cloned())
        .collect();
    let selected: Vec<Annotation> = select_indices(&union, c)
        .into_iter()
        .map(|i| union[i].clone())
        .collect();

    let mut mass: BTreeMap<&str, f64> = members.iter().map(|m| (m.as_str(), 0.0)).collect();
    for a in &selected {
        *mass.entry(a.ontology_acronym.as_str()).or_default() += annotation_score_v2(a, c);
    }
    let raw: f64 = mass.values().sum();
    let contributions: BTreeMap<String, f64> = mass
        .iter()
        .map(|(m, s)| (m.to_string(), if raw > 0.0 { s / raw } else { 0.0 }))
        .collect();

    let member_details: BTreeMap<String, f64> = members
        .iter()
        .map(|m| {
            let winning: Vec<Annotation> = selected
                .iter()
                .filter(|a| &a.ontology_acronym == m)
                .cloned()
                .collect();
            (m.clone(), detail_score(&winning, repository, c))
        })
        .collect();

    let weighted = |f: &dyn Fn(&str) -> f64| -> f64 {
        contributions
            .iter()
            .map(|(m, share)| share * f(m))
            .sum::<f64>()
            .clamp(0.0, f64::MAX)
    };
    let field = |m: &str, f: fn(&MemberData) -> f64| data.get(m).map_or(0.0, f);
    let acceptance = weighted(&|m| field(m, |d| d.acceptance)).min(1.0);
    let specialization = weighted(&|m| field(m, |d| d.specialization)).min(1.0);
    let raw_specialization = weighted(&|m| field(m, |d| d.raw_specialization));
    let detail = weighted(&|m| member_details[m]).min(1.0);

    let coverage = if global_normalizer > 0.0 {
        (raw / global_normalizer).clamp(0.0, 1.0)
    } else {
        0.0
    };
    OntologySet {
        members: members.to_vec(),
        set_scores: CriterionScores {
            coverage,
            acceptance,
            detail,
            specialization,
            raw_coverage_sum: raw,
            raw_specialization,
            selected_annotations: selected,
        },
        contributions,
        member_details,
        annotation_count: union.len(),
    }
}
