//! Desk-scale evaluation: runs every fixture input through the legacy
//! algorithm, the current one and the set output, and reports top-1 coverage
//! and timing per dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::annotator::Annotation;
use crate::config::RecommenderConfig;
use crate::service::{
    Algorithm, Engine, EngineError, InputType, OutputType, RecommendError, RecommendRequest,
    Recommendation,
};

/// Top-1 coverage below this percentage counts as a poor recommendation.
pub const LOW_COVERAGE_PERCENT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("input has no annotatable words")]
    NoAnnotatableWords,
    #[error("ranking is empty")]
    EmptyRanking,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no fixture inputs under {0}")]
    MissingFixtures(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{file}: {source}")]
    Recommend {
        file: String,
        #[source]
        source: RecommendError,
    },
}

/// Percentage of the annotatable word positions that `top` covers. The
/// annotatable positions are the ones covered by the selection over every
/// ontology's annotations.
pub fn text_coverage(
    top: &[Annotation],
    union_selection: &[Annotation],
) -> Result<f64, CoverageError> {
    let positions = |anns: &[Annotation]| -> BTreeSet<usize> {
        anns.iter()
            .flat_map(|a| a.start_word_index..=a.end_word_index)
            .collect()
    };
    let annotatable = positions(union_selection);
    if annotatable.is_empty() {
        return Err(CoverageError::NoAnnotatableWords);
    }
    let covered = positions(top).intersection(&annotatable).count();
    Ok(100.0 * covered as f64 / annotatable.len() as f64)
}

/// Percentage of keywords that some annotation in `top` spans completely.
pub fn keyword_coverage(
    top: &[Annotation],
    spans: &[Option<(usize, usize)>],
) -> Result<f64, CoverageError> {
    if spans.is_empty() {
        return Err(CoverageError::NoAnnotatableWords);
    }
    let covered = spans
        .iter()
        .enumerate()
        .filter(|(k, span)| {
            span.is_some_and(|(s, e)| {
                top.iter().any(|a| {
                    a.keyword_index == Some(*k) && a.start_word_index == s && a.end_word_index == e
                })
            })
        })
        .count();
    Ok(100.0 * covered as f64 / spans.len() as f64)
}

/// Coverage of the top-ranked entry, as a percentage.
pub fn top1_coverage(rec: &Recommendation) -> Result<f64, CoverageError> {
    let top = rec.ranking.first().ok_or(CoverageError::EmptyRanking)?;
    let selected = &top.criterion_scores.selected_annotations;
    match (rec.input_type, &rec.keyword_spans) {
        (InputType::Keywords, Some(spans)) => keyword_coverage(selected, spans),
        _ => text_coverage(selected, &rec.union_selection),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    V1,
    V2,
    V2Sets,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::V1, Variant::V2, Variant::V2Sets];

    pub fn label(self) -> &'static str {
        match self {
            Variant::V1 => "v1",
            Variant::V2 => "v2",
            Variant::V2Sets => "v2-sets",
        }
    }

    fn request(self, input_type: InputType, input: &str) -> RecommendRequest {
        let mut req = RecommendRequest {
            input: input.to_string(),
            input_type,
            ..Default::default()
        };
        match self {
            Variant::V1 => req.algorithm = Algorithm::V1,
            Variant::V2 => {}
            Variant::V2Sets => req.output_type = OutputType::Sets,
        }
        req
    }
}

/// One input file of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureInput {
    pub input_type: InputType,
    pub dataset: String,
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VariantStats {
    /// Percentage of scored inputs whose top-1 coverage is below the threshold.
    pub low_coverage_percent: f64,
    pub mean_coverage: f64,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRow {
    pub dataset: String,
    pub inputs: usize,
    /// Inputs without annotatable words; left out of every mean.
    pub excluded: usize,
    /// Mean input length in words.
    pub mean_length: f64,
    pub variants: BTreeMap<Variant, VariantStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputTypeTable {
    pub input_type: InputType,
    pub rows: Vec<DatasetRow>,
    /// Unweighted mean of the dataset rows.
    pub mean: DatasetRow,
}

/// Per-input measurement kept for aggregate checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputResult {
    pub input_type: InputType,
    pub dataset: String,
    pub name: String,
    pub words: usize,
    /// Top-1 coverage per variant; `None` when the input was excluded.
    pub coverage: Option<BTreeMap<Variant, f64>>,
    pub seconds: BTreeMap<Variant, f64>,
    pub top: BTreeMap<Variant, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tables: Vec<InputTypeTable>,
    pub inputs: Vec<InputResult>,
}

impl Report {
    /// Mean top-1 coverage of `variant` over every scored input.
    pub fn overall_mean_coverage(&self, variant: Variant) -> f64 {
        mean(
            self.inputs
                .iter()
                .filter_map(|r| r.coverage.as_ref().map(|c| c[&variant])),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for table in &self.tables {
            let title = match table.input_type {
                InputType::Text => "Text inputs",
                InputType::Keywords => "Keyword inputs",
            };
            let _ = writeln!(out, "{title}");
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>6} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} | {:>9} {:>9} {:>9}",
                "dataset",
                "length",
                "n",
                "<20% v1",
                "<20% v2",
                "<20% set",
                "cov v1",
                "cov v2",
                "cov set",
                "sec v1",
                "sec v2",
                "sec set"
            );
            for row in table.rows.iter().chain(std::iter::once(&table.mean)) {
                let _ = write!(
                    out,
                    "{:<12} {:>8.1} {:>6} |",
                    row.dataset, row.mean_length, row.inputs
                );
                for v in Variant::ALL {
                    let _ = write!(out, " {:>7.1}%", row.variants[&v].low_coverage_percent);
                }
                let _ = write!(out, " |");
                for v in Variant::ALL {
                    let _ = write!(out, " {:>7.1}%", row.variants[&v].mean_coverage);
                }
                let _ = write!(out, " |");
                for v in Variant::ALL {
                    let _ = write!(out, " {:>9.5}", row.variants[&v].mean_seconds);
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Runs one input through all variants. An empty set ranking (fewer than two
/// useful ontologies) falls back to the single-ontology answer.
pub fn evaluate_input(
    engine: &Engine,
    input: &FixtureInput,
) -> Result<InputResult, RecommendError> {
    let mut coverage = BTreeMap::new();
    let mut seconds = BTreeMap::new();
    let mut top = BTreeMap::new();
    let mut excluded = false;
    let mut words = 0;
    let mut single: Option<Recommendation> = None;
    for v in Variant::ALL {
        let started = Instant::now();
        let mut rec = engine.recommend(&v.request(input.input_type, &input.text))?;
        seconds.insert(v, started.elapsed().as_secs_f64());
        words = rec.word_count;
        if v == Variant::V2Sets && rec.ranking.is_empty() {
            if let Some(s) = &single {
                rec.ranking = s.ranking.clone();
            }
        }
        match top1_coverage(&rec) {
            Ok(c) => {
                coverage.insert(v, c);
            }
            Err(_) => excluded = true,
        }
        top.insert(
            v,
            rec.ranking
                .first()
                .map(|e| e.members.clone())
                .unwrap_or_default(),
        );
        if v == Variant::V2 {
            single = Some(rec);
        }
    }
    Ok(InputResult {
        input_type: input.input_type,
        dataset: input.dataset.clone(),
        name: input.name.clone(),
        words,
        coverage: (!excluded).then_some(coverage),
        seconds,
        top,
    })
}

fn summarize(dataset: &str, results: &[&InputResult]) -> DatasetRow {
    let scored: Vec<&BTreeMap<Variant, f64>> =
        results.iter().filter_map(|r| r.coverage.as_ref()).collect();
    let variants = Variant::ALL
        .into_iter()
        .map(|v| {
            let low = scored
                .iter()
                .filter(|c| c[&v] < LOW_COVERAGE_PERCENT)
                .count();
            let stats = VariantStats {
                low_coverage_percent: if scored.is_empty() {
                    0.0
                } else {
                    100.0 * low as f64 / scored.len() as f64
                },
                mean_coverage: mean(scored.iter().map(|c| c[&v])),
                mean_seconds: mean(results.iter().map(|r| r.seconds[&v])),
            };
            (v, stats)
        })
        .collect();
    DatasetRow {
        dataset: dataset.to_string(),
        inputs: results.len(),
        excluded: results.len() - scored.len(),
        mean_length: mean(results.iter().map(|r| r.words as f64)),
        variants,
    }
}

fn mean_row(rows: &[DatasetRow]) -> DatasetRow {
    let variants = Variant::ALL
        .into_iter()
        .map(|v| {
            let stats = VariantStats {
                low_coverage_percent: mean(
                    rows.iter().map(|r| r.variants[&v].low_coverage_percent),
                ),
                mean_coverage: mean(rows.iter().map(|r| r.variants[&v].mean_coverage)),
                mean_seconds: mean(rows.iter().map(|r| r.variants[&v].mean_seconds)),
            };
            (v, stats)
        })
        .collect();
    DatasetRow {
        dataset: "Mean".to_string(),
        inputs: rows.iter().map(|r| r.inputs).sum(),
        excluded: rows.iter().map(|r| r.excluded).sum(),
        mean_length: mean(rows.iter().map(|r| r.mean_length)),
        variants,
    }
}

pub fn evaluate_inputs(engine: &Engine, inputs: &[FixtureInput]) -> Result<Report, HarnessError> {
    let results = inputs
        .iter()
        .map(|input| {
            evaluate_input(engine, input).map_err(|source| HarnessError::Recommend {
                file: format!("{}/{}", input.dataset, input.name),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut tables = Vec::new();
    for input_type in [InputType::Text, InputType::Keywords] {
        let mut by_dataset: BTreeMap<&str, Vec<&InputResult>> = BTreeMap::new();
        for r in results.iter().filter(|r| r.input_type == input_type) {
            by_dataset.entry(&r.dataset).or_default().push(r);
        }
        if by_dataset.is_empty() {
            continue;
        }
        let rows: Vec<DatasetRow> = by_dataset.iter().map(|(d, rs)| summarize(d, rs)).collect();
        let mean = mean_row(&rows);
        tables.push(InputTypeTable {
            input_type,
            rows,
            mean,
        });
    }
    Ok(Report {
        tables,
        inputs: results,
    })
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let entries = fs::read_dir(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    Ok(paths)
}

/// Reads `<fixtures_dir>/{text,keywords}/<dataset>/<file>`, one input per file.
pub fn load_fixtures(fixtures_dir: &Path) -> Result<Vec<FixtureInput>, HarnessError> {
    let mut inputs = Vec::new();
    for (dir_name, input_type) in [("text", InputType::Text), ("keywords", InputType::Keywords)] {
        let type_dir = fixtures_dir.join(dir_name);
        if !type_dir.is_dir() {
            continue;
        }
        for dataset_dir in read_dir_sorted(&type_dir)?
            .into_iter()
            .filter(|p| p.is_dir())
        {
            let dataset = dataset_dir
                .file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            for file in read_dir_sorted(&dataset_dir)?
                .into_iter()
                .filter(|p| p.is_file())
            {
                let text = fs::read_to_string(&file).map_err(|source| HarnessError::Io {
                    path: file.display().to_string(),
                    source,
                })?;
                inputs.push(FixtureInput {
                    input_type,
                    dataset: dataset.clone(),
                    name: file
                        .file_name()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned(),
                    text: text.trim().to_string(),
                });
            }
        }
    }
    if inputs.is_empty() {
        return Err(HarnessError::MissingFixtures(
            fixtures_dir.display().to_string(),
        ));
    }
    Ok(inputs)
}

/// Loads `corpus.jsonl` (and `acceptance.json` when present) from
/// `corpus_dir` and evaluates every input under `fixtures_dir`.
pub fn run_experiment(
    corpus_dir: &Path,
    fixtures_dir: &Path,
    config: RecommenderConfig,
) -> Result<Report, HarnessError> {
    let inputs = load_fixtures(fixtures_dir)?;
    let acceptance = corpus_dir.join("acceptance.json");
    let engine = Engine::from_files(
        corpus_dir.join("corpus.jsonl"),
        acceptance.is_file().then_some(acceptance.as_path()),
        config,
    )?;
    evaluate_inputs(&engine, &inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::MatchType;
    use crate::criteria::tests::ann;
    use crate::fixtures;

    fn kw(start: usize, end: usize, k: usize) -> Annotation {
        let mut a = ann("O", "x", MatchType::Pref, start, end);
        a.keyword_index = Some(k);
        a
    }

    #[test]
    fn full_text_coverage_is_100() {
        let union = vec![
            ann("A", "x", MatchType::Pref, 0, 1),
            ann("B", "y", MatchType::Pref, 3, 3),
        ];
        assert_eq!(text_coverage(&union, &union), Ok(100.0));
    }

    #[test]
    fn two_of_seven_is_low() {
        let union: Vec<Annotation> = (0..7)
            .map(|i| ann("U", "u", MatchType::Pref, i, i))
            .collect();
        let c = text_coverage(&union[..2], &union).unwrap();
        assert!((c - 200.0 / 7.0).abs() < 1e-12);
        let c = text_coverage(&union[..1], &union).unwrap();
        assert!(c < LOW_COVERAGE_PERCENT);
    }

    #[test]
    fn seventeen_of_twenty_one_keywords() {
        let spans: Vec<Option<(usize, usize)>> = (0..21).map(|k| Some((k, k))).collect();
        let top: Vec<Annotation> = (0..17).map(|k| kw(k, k, k)).collect();
        let c = keyword_coverage(&top, &spans).unwrap();
        assert!((c - 80.95).abs() < 0.005, "{c}");
    }

    #[test]
    fn partial_keyword_match_does_not_count() {
        let spans = vec![Some((0, 2)), Some((3, 3))];
        let top = vec![kw(0, 1, 0), kw(3, 3, 1)];
        assert_eq!(keyword_coverage(&top, &spans), Ok(50.0));
    }

    #[test]
    fn nothing_annotatable_is_an_exclusion() {
        assert_eq!(
            text_coverage(&[], &[]),
            Err(CoverageError::NoAnnotatableWords)
        );
        assert_eq!(
            keyword_coverage(&[], &[]),
            Err(CoverageError::NoAnnotatableWords)
        );
    }

    #[test]
    fn empty_fixture_dir_is_missing_fixtures() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_fixtures(dir.path()),
            Err(HarnessError::MissingFixtures(_))
        ));
    }

    #[test]
    fn pathology_fixture_v1_vs_v2() {
        let repo = fixtures::ehda_repository();
        let acceptance = fixtures::uniform_acceptance(&repo);
        let engine = Engine::new(repo, acceptance, RecommenderConfig::default()).unwrap();
        let input = FixtureInput {
            input_type: InputType::Text,
            dataset: "pathology".into(),
            name: "melanoma.txt".into(),
            text: fixtures::MELANOMA_INPUT.into(),
        };
        let r = evaluate_input(&engine, &input).unwrap();
        assert_eq!(r.top[&Variant::V1], ["EHDA"]);
        assert_eq!(r.top[&Variant::V2], ["NCIT"]);
        let cov = r.coverage.unwrap();
        assert!(cov[&Variant::V2] > cov[&Variant::V1]);
    }

    #[test]
    fn bundled_suite_report_shape() {
        let dir = tempfile::tempdir().unwrap();
        fixtures::bundled_suite().write_to(dir.path()).unwrap();
        let report = run_experiment(dir.path(), dir.path(), RecommenderConfig::default()).unwrap();
        assert_eq!(report.tables.len(), 2);
        assert_eq!(report.tables[0].rows.len(), 3);
        let table = report.to_table();
        assert!(
            table.contains("Text inputs")
                && table.contains("Keyword inputs")
                && table.contains("Mean")
        );
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(json["tables"][0]["rows"][0]["variants"]["v2-sets"]["mean_coverage"].is_number());
    }
}
