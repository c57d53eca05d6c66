//! Ontology repository and acceptance data.
//!
//! The repository is read from a JSON-Lines file with one class per line:
//!
//! ```text
//! {"ontology":"SNOMEDCT","class_id":"C123","pref_label":"blood cell","synonyms":["hemocyte"],"definitions":1,"properties":4,"hierarchy_level":7}
//! ```
//!
//! A class may carry `parent_id` instead of `hierarchy_level`; the level is then
//! derived from the parent chain (roots are level 1). An explicit level wins when
//! both are present.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate class {class_id} in ontology {ontology}")]
    DuplicateClass { ontology: String, class_id: String },
    #[error("repository contains no classes")]
    EmptyRepository,
    #[error("ontology {acronym} has {class_count} class(es); at least 2 are required")]
    SingletonOntology { acronym: String, class_count: usize },
    #[error("unknown ontology {0}")]
    UnknownOntology(String),
    #[error("negative visit count for {acronym} in repository {repository}")]
    NegativeVisits { acronym: String, repository: String },
    #[error("class {class_id} in {ontology} references unknown parent {parent_id}")]
    UnknownParent {
        ontology: String,
        class_id: String,
        parent_id: String,
    },
    #[error("parent chain of class {class_id} in {ontology} contains a cycle")]
    HierarchyCycle { ontology: String, class_id: String },
    #[error("acceptance data for {acronym} names undeclared repository {repository}")]
    UndeclaredRepository { acronym: String, repository: String },
}

/// One ontology class with the metadata the scorers consume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub ontology_acronym: String,
    pub class_id: String,
    pub preferred_label: String,
    pub synonyms: Vec<String>,
    pub definitions_count: u32,
    pub properties_count: u32,
    /// Depth in the subsumption tree, root = 1.
    pub hierarchy_level: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyRecord {
    pub acronym: String,
    /// Sorted by `class_id`.
    classes: Vec<ClassRecord>,
    by_id: HashMap<String, usize>,
}

impl OntologyRecord {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassRecord] {
        &self.classes
    }

    pub fn class(&self, class_id: &str) -> Option<&ClassRecord> {
        self.by_id.get(class_id).map(|&i| &self.classes[i])
    }
}

/// A class line as it appears in the corpus file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CorpusLine {
    pub ontology: String,
    pub class_id: String,
    pub pref_label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub definitions: u32,
    #[serde(default)]
    pub properties: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy_level: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
}

/// Immutable, read-only collection of ontologies keyed by acronym.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyRepository {
    ontologies: BTreeMap<String, OntologyRecord>,
}

impl OntologyRepository {
    /// Builds a repository from parsed corpus lines. Line numbers in errors are
    /// 1-based positions in `lines`.
    pub fn from_lines(lines: Vec<CorpusLine>) -> Result<Self, CorpusError> {
        Self::from_numbered(lines.into_iter().enumerate().map(|(i, l)| (i + 1, l)))
    }

    fn from_numbered(
        lines: impl IntoIterator<Item = (usize, CorpusLine)>,
    ) -> Result<Self, CorpusError> {
        let mut grouped: BTreeMap<String, BTreeMap<String, (usize, CorpusLine)>> = BTreeMap::new();
        for (line_no, line) in lines {
            validate_line(line_no, &line)?;
            let classes = grouped.entry(line.ontology.clone()).or_default();
            if classes.contains_key(&line.class_id) {
                return Err(CorpusError::DuplicateClass {
                    ontology: line.ontology,
                    class_id: line.class_id,
                });
            }
            classes.insert(line.class_id.clone(), (line_no, line));
        }
        if grouped.is_empty() {
            return Err(CorpusError::EmptyRepository);
        }

        let mut ontologies = BTreeMap::new();
        for (acronym, lines) in grouped {
            if lines.len() < 2 {
                return Err(CorpusError::SingletonOntology {
                    acronym,
                    class_count: lines.len(),
                });
            }
            let levels = resolve_levels(&acronym, &lines)?;
            let classes: Vec<ClassRecord> = lines
                .into_values()
                .map(|(_, line)| ClassRecord {
                    hierarchy_level: levels[&line.class_id],
                    ontology_acronym: line.ontology,
                    class_id: line.class_id,
                    preferred_label: line.pref_label.trim().to_string(),
                    synonyms: line.synonyms,
                    definitions_count: line.definitions,
                    properties_count: line.properties,
                })
                .collect();
            let by_id = classes
                .iter()
                .enumerate()
                .map(|(i, c)| (c.class_id.clone(), i))
                .collect();
            ontologies.insert(
                acronym.clone(),
                OntologyRecord {
                    acronym,
                    classes,
                    by_id,
                },
            );
        }
        Ok(Self { ontologies })
    }

    pub fn ontology(&self, acronym: &str) -> Result<&OntologyRecord, CorpusError> {
        self.ontologies
            .get(acronym)
            .ok_or_else(|| CorpusError::UnknownOntology(acronym.to_string()))
    }

    /// Number of classes `|o|` of an ontology.
    pub fn ontology_size(&self, acronym: &str) -> Result<usize, CorpusError> {
        self.ontology(acronym).map(OntologyRecord::class_count)
    }

    pub fn class(&self, acronym: &str, class_id: &str) -> Option<&ClassRecord> {
        self.ontologies.get(acronym)?.class(class_id)
    }

    pub fn contains(&self, acronym: &str) -> bool {
        self.ontologies.contains_key(acronym)
    }

    /// Ontologies in ascending acronym order.
    pub fn ontologies(&self) -> impl Iterator<Item = &OntologyRecord> {
        self.ontologies.values()
    }

    pub fn acronyms(&self) -> impl Iterator<Item = &str> {
        self.ontologies.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.ontologies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ontologies.is_empty()
    }
}

fn validate_line(line_no: usize, line: &CorpusLine) -> Result<(), CorpusError> {
    let malformed = |reason: &str| CorpusError::MalformedRecord {
        line: line_no,
        reason: reason.to_string(),
    };
    if line.ontology.trim().is_empty() {
        return Err(malformed("empty ontology acronym"));
    }
    if line.class_id.trim().is_empty() {
        return Err(malformed("empty class_id"));
    }
    if line.pref_label.trim().is_empty() {
        return Err(malformed("empty pref_label"));
    }
    if line.hierarchy_level == Some(0) {
        return Err(malformed("hierarchy_level must be >= 1"));
    }
    Ok(())
}

/// Computes the level of every class: explicit levels as given, otherwise
/// parent level + 1, and 1 for classes with neither.
fn resolve_levels(
    acronym: &str,
    lines: &BTreeMap<String, (usize, CorpusLine)>,
) -> Result<HashMap<String, u32>, CorpusError> {
    let mut levels: HashMap<String, u32> = HashMap::with_capacity(lines.len());
    for (id, (_, line)) in lines {
        match (line.hierarchy_level, &line.parent_id) {
            (Some(level), _) => {
                levels.insert(id.clone(), level);
            }
            (None, None) => {
                levels.insert(id.clone(), 1);
            }
            (None, Some(parent)) if !lines.contains_key(parent) => {
                return Err(CorpusError::UnknownParent {
                    ontology: acronym.to_string(),
                    class_id: id.clone(),
                    parent_id: parent.clone(),
                });
            }
            (None, Some(_)) => {}
        }
    }

    // Walk each unresolved chain up to the first resolved ancestor.
    for start in lines.keys() {
        if levels.contains_key(start) {
            continue;
        }
        let mut chain: Vec<&str> = Vec::new();
        let mut on_chain: BTreeSet<&str> = BTreeSet::new();
        let mut cursor = start.as_str();
        let base = loop {
            if let Some(&level) = levels.get(cursor) {
                break level;
            }
            if !on_chain.insert(cursor) {
                return Err(CorpusError::HierarchyCycle {
                    ontology: acronym.to_string(),
                    class_id: start.clone(),
                });
            }
            chain.push(cursor);
            // Unresolved entries always have a known parent (checked above).
            cursor = lines[cursor].1.parent_id.as_deref().unwrap_or_default();
        };
        for (depth, id) in chain.iter().rev().enumerate() {
            levels.insert((*id).to_string(), base + depth as u32 + 1);
        }
    }
    Ok(levels)
}

/// Reads a JSON-Lines corpus file. Blank lines are ignored.
pub fn load_repository(path: impl AsRef<Path>) -> Result<OntologyRepository, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut lines = Vec::new();
    for (i, raw) in BufReader::new(file).lines().enumerate() {
        let raw = raw.map_err(io_err)?;
        if raw.trim().is_empty() {
            continue;
        }
        let line: CorpusLine =
            serde_json::from_str(&raw).map_err(|e| CorpusError::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
        lines.push((i + 1, line));
    }
    OntologyRepository::from_numbered(lines)
}

/// Presence and visit data for one ontology.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceRecord {
    #[serde(default)]
    pub present_in: BTreeSet<String>,
    #[serde(default)]
    pub visits: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AcceptanceTable {
    records: BTreeMap<String, AcceptanceRecord>,
}

static EMPTY_RECORD: AcceptanceRecord = AcceptanceRecord {
    present_in: BTreeSet::new(),
    visits: BTreeMap::new(),
};

impl AcceptanceTable {
    pub fn new(records: BTreeMap<String, AcceptanceRecord>) -> Self {
        Self { records }
    }

    /// Parses the acceptance JSON object.
    pub fn from_json(json: &str) -> Result<Self, CorpusError> {
        #[derive(Deserialize)]
        struct RawRecord {
            #[serde(default)]
            present_in: BTreeSet<String>,
            #[serde(default)]
            visits: BTreeMap<String, i64>,
        }
        let raw: BTreeMap<String, RawRecord> =
            serde_json::from_str(json).map_err(|e| CorpusError::MalformedRecord {
                line: e.line(),
                reason: e.to_string(),
            })?;
        let mut records = BTreeMap::new();
        for (acronym, rec) in raw {
            let mut visits = BTreeMap::new();
            for (repository, count) in rec.visits {
                let count = u64::try_from(count).map_err(|_| CorpusError::NegativeVisits {
                    acronym: acronym.clone(),
                    repository: repository.clone(),
                })?;
                visits.insert(repository, count);
            }
            records.insert(
                acronym,
                AcceptanceRecord {
                    present_in: rec.present_in,
                    visits,
                },
            );
        }
        Ok(Self { records })
    }

    /// Record for `acronym`; ontologies missing from the data get an empty record.
    pub fn record(&self, acronym: &str) -> &AcceptanceRecord {
        self.records.get(acronym).unwrap_or(&EMPTY_RECORD)
    }

    pub fn presence(&self, acronym: &str, repository: &str) -> bool {
        self.record(acronym).present_in.contains(repository)
    }

    pub fn visits(&self, acronym: &str, repository: &str) -> u64 {
        self.record(acronym)
            .visits
            .get(repository)
            .copied()
            .unwrap_or(0)
    }

    pub fn records(&self) -> impl Iterator<Item = (&str, &AcceptanceRecord)> {
        self.records.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Fails if any record names a repository outside the declared lists.
    pub fn check_repositories<'a>(
        &self,
        presence_repos: impl IntoIterator<Item = &'a str> + Clone,
        visits_repos: impl IntoIterator<Item = &'a str> + Clone,
    ) -> Result<(), CorpusError> {
        let presence: BTreeSet<&str> = presence_repos.into_iter().collect();
        let visits: BTreeSet<&str> = visits_repos.into_iter().collect();
        for (acronym, rec) in &self.records {
            let undeclared = rec
                .present_in
                .iter()
                .find(|r| !presence.contains(r.as_str()))
                .or_else(|| rec.visits.keys().find(|r| !visits.contains(r.as_str())));
            if let Some(repository) = undeclared {
                return Err(CorpusError::UndeclaredRepository {
                    acronym: acronym.clone(),
                    repository: repository.clone(),
                });
            }
        }
        Ok(())
    }
}

pub fn load_acceptance(path: impl AsRef<Path>) -> Result<AcceptanceTable, CorpusError> {
    let path = path.as_ref();
    let json = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    AcceptanceTable::from_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn line(ontology: &str, id: &str, label: &str) -> CorpusLine {
        CorpusLine {
            ontology: ontology.into(),
            class_id: id.into(),
            pref_label: label.into(),
            hierarchy_level: Some(1),
            ..Default::default()
        }
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_three_classes() {
        let f = write_tmp(concat!(
            r#"{"ontology":"O1","class_id":"a","pref_label":"alpha","hierarchy_level":1}"#,
            "\n",
            r#"{"ontology":"O1","class_id":"b","pref_label":"beta","synonyms":["b"],"definitions":2,"parent_id":"a"}"#,
            "\n\n",
            r#"{"ontology":"O1","class_id":"c","pref_label":"gamma","parent_id":"b"}"#,
            "\n",
        ));
        let repo = load_repository(f.path()).unwrap();
        assert_eq!(repo.len(), 1);
        assert_eq!(repo.ontology_size("O1").unwrap(), 3);
        assert_eq!(repo.class("O1", "c").unwrap().hierarchy_level, 3);
        assert_eq!(repo.class("O1", "b").unwrap().definitions_count, 2);
    }

    #[test]
    fn empty_file_is_rejected() {
        let f = write_tmp("\n  \n");
        assert!(matches!(
            load_repository(f.path()),
            Err(CorpusError::EmptyRepository)
        ));
    }

    #[test]
    fn duplicate_class_is_rejected() {
        let err = OntologyRepository::from_lines(vec![line("O1", "x", "a"), line("O1", "x", "b")])
            .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateClass { .. }));
    }

    #[test]
    fn singleton_ontology_is_rejected() {
        let err = OntologyRepository::from_lines(vec![
            line("O1", "x", "a"),
            line("O1", "y", "b"),
            line("O2", "z", "c"),
        ])
        .unwrap_err();
        assert!(
            matches!(err, CorpusError::SingletonOntology { ref acronym, .. } if acronym == "O2")
        );
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_tmp(concat!(
            r#"{"ontology":"O1","class_id":"a","pref_label":"alpha"}"#,
            "\n",
            r#"{"ontology":"O1","class_id":"b","pref_label":"  "}"#,
            "\n"
        ));
        match load_repository(f.path()) {
            Err(CorpusError::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("{not json}\n");
        assert!(matches!(
            load_repository(f.path()),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn zero_level_is_malformed() {
        let mut bad = line("O1", "x", "a");
        bad.hierarchy_level = Some(0);
        let err = OntologyRepository::from_lines(vec![bad, line("O1", "y", "b")]).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { line: 1, .. }));
    }

    #[test]
    fn explicit_level_wins_over_parent() {
        let mut child = line("O1", "c", "child");
        child.parent_id = Some("r".into());
        child.hierarchy_level = Some(9);
        let mut grandchild = line("O1", "g", "grandchild");
        grandchild.hierarchy_level = None;
        grandchild.parent_id = Some("c".into());
        let repo = OntologyRepository::from_lines(vec![line("O1", "r", "root"), child, grandchild])
            .unwrap();
        assert_eq!(repo.class("O1", "c").unwrap().hierarchy_level, 9);
        assert_eq!(repo.class("O1", "g").unwrap().hierarchy_level, 10);
    }

    #[test]
    fn parent_errors() {
        let mut orphan = line("O1", "c", "child");
        orphan.hierarchy_level = None;
        orphan.parent_id = Some("missing".into());
        let err =
            OntologyRepository::from_lines(vec![line("O1", "r", "root"), orphan]).unwrap_err();
        assert!(matches!(err, CorpusError::UnknownParent { .. }));

        let mut a = line("O1", "a", "a");
        a.hierarchy_level = None;
        a.parent_id = Some("b".into());
        let mut b = line("O1", "b", "b");
        b.hierarchy_level = None;
        b.parent_id = Some("a".into());
        let err = OntologyRepository::from_lines(vec![a, b]).unwrap_err();
        assert!(matches!(err, CorpusError::HierarchyCycle { .. }));
    }

    #[test]
    fn load_order_does_not_matter() {
        let lines = vec![
            line("O2", "b", "beta"),
            line("O1", "a", "alpha"),
            line("O2", "a", "alpha"),
            line("O1", "z", "zeta"),
        ];
        let mut reversed = lines.clone();
        reversed.reverse();
        assert_eq!(
            OntologyRepository::from_lines(lines).unwrap(),
            OntologyRepository::from_lines(reversed).unwrap()
        );
    }

    #[test]
    fn unknown_ontology_size() {
        let repo = OntologyRepository::from_lines(vec![line("O1", "a", "a"), line("O1", "b", "b")])
            .unwrap();
        assert!(matches!(
            repo.ontology_size("XYZ"),
            Err(CorpusError::UnknownOntology(ref a)) if a == "XYZ"
        ));
    }

    #[test]
    fn acceptance_read_back_and_defaults() {
        let table = AcceptanceTable::from_json(
            r#"{"SNOMEDCT": {"present_in":["UMLS"], "visits":{"BioPortal": 10000}}}"#,
        )
        .unwrap();
        assert!(table.presence("SNOMEDCT", "UMLS"));
        assert_eq!(table.visits("SNOMEDCT", "BioPortal"), 10000);
        let missing = table.record("NOPE");
        assert!(missing.present_in.is_empty());
        assert!(missing.visits.is_empty());
        assert_eq!(table.visits("NOPE", "BioPortal"), 0);
    }

    #[test]
    fn acceptance_rejects_negative_visits() {
        let err = AcceptanceTable::from_json(r#"{"X": {"visits":{"BioPortal": -5}}}"#).unwrap_err();
        assert!(matches!(err, CorpusError::NegativeVisits { .. }));
        let err = AcceptanceTable::from_json(r#"["X"]"#).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { .. }));
    }

    #[test]
    fn acceptance_repository_check() {
        let table = AcceptanceTable::from_json(
            r#"{"A": {"present_in":["UMLS"], "visits":{"BioPortal": 3}}, "B": {"present_in":["OBO"]}}"#,
        )
        .unwrap();
        assert!(matches!(
            table.check_repositories(["UMLS"], ["BioPortal"]),
            Err(CorpusError::UndeclaredRepository { ref repository, .. }) if repository == "OBO"
        ));
        assert!(table
            .check_repositories(["UMLS", "OBO"], ["BioPortal"])
            .is_ok());
    }
}
