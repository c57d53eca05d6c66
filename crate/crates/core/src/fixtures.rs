//! Small hand-built corpora and seeded random generators.
//!
//! The hand-built corpora mirror well-known recommendation scenarios: the
//! thrombocyte sentence, the penicillin/tonsillitis pair, an ontology with many
//! duplicate classes for two common words, and a multi-word keyword that most
//! ontologies only match in part. They back the unit tests, the acceptance
//! suite and the bundled evaluation suite under `fixtures/suite`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AcceptanceRecord, AcceptanceTable, CorpusLine, OntologyRepository};

pub const THROMBOCYTE_INPUT: &str = "A thrombocyte is a kind of blood cell";
pub const PENICILLIN_INPUT: &str = "Penicillin is an antibiotic used to treat tonsillitis";
pub const MELANOMA_INPUT: &str = "Melanoma is a malignant tumor of melanocytes which are found \
     predominantly in skin but also in the bowel and the eye";
pub const MULTIWORD_KEYWORDS: &str = "embryonic cardiac structure";

#[derive(Debug, Clone, Copy)]
struct ClassSpec<'a> {
    id: &'a str,
    label: &'a str,
    synonyms: &'a [&'a str],
    definitions: u32,
    properties: u32,
    level: u32,
}

const fn class<'a>(
    id: &'a str,
    label: &'a str,
    synonyms: &'a [&'a str],
    level: u32,
) -> ClassSpec<'a> {
    ClassSpec {
        id,
        label,
        synonyms,
        definitions: 0,
        properties: 0,
        level,
    }
}

fn lines_for(ontology: &str, classes: &[ClassSpec]) -> Vec<CorpusLine> {
    classes
        .iter()
        .map(|c| CorpusLine {
            ontology: ontology.to_string(),
            class_id: c.id.to_string(),
            pref_label: c.label.to_string(),
            synonyms: c.synonyms.iter().map(|s| s.to_string()).collect(),
            definitions: c.definitions,
            properties: c.properties,
            hierarchy_level: Some(c.level),
            parent_id: None,
        })
        .collect()
}

/// Pads `lines` of `ontology` with unmatched filler classes up to `size`.
fn pad(mut lines: Vec<CorpusLine>, ontology: &str, size: usize) -> Vec<CorpusLine> {
    let have = lines.iter().filter(|l| l.ontology == ontology).count();
    let tag = ontology.to_lowercase();
    for i in have..size {
        lines.push(CorpusLine {
            ontology: ontology.to_string(),
            class_id: format!("{ontology}:filler{i}"),
            pref_label: format!("{tag} reserved concept {i}"),
            hierarchy_level: Some(1),
            ..Default::default()
        });
    }
    lines
}

/// SNOMEDCT classes that annotate the thrombocyte sentence.
pub fn thrombocyte_lines() -> Vec<CorpusLine> {
    lines_for(
        "SNOMEDCT",
        &[
            class("SNOMEDCT:16378004", "platelet", &["thrombocyte"], 5),
            class("SNOMEDCT:41597004", "blood cell", &[], 4),
            class("SNOMEDCT:87612001", "blood", &[], 3),
            class("SNOMEDCT:4421005", "cell structure", &["cell"], 3),
            class("SNOMEDCT:362837007", "entire cell", &["cell"], 4),
            class("SNOMEDCT:4421006", "cell", &[], 2),
        ],
    )
}

pub fn thrombocyte_repository() -> OntologyRepository {
    OntologyRepository::from_lines(thrombocyte_lines()).expect("valid fixture")
}

/// Two ontologies for the penicillin sentence, with the class metadata used
/// in the detail and specialization examples. O1 and O2 are padded to the
/// requested sizes (120 000 and 800 reproduce the published sizes).
pub fn penicillin_lines(o1_size: usize, o2_size: usize) -> Vec<CorpusLine> {
    let o1 = lines_for(
        "O1",
        &[
            ClassSpec {
                definitions: 1,
                properties: 7,
                ..class(
                    "O1:penicillin",
                    "penicillin",
                    &["penicillin antibacterial", "pcn"],
                    5,
                )
            },
            ClassSpec {
                definitions: 1,
                properties: 16,
                ..class(
                    "O1:antibacterial",
                    "antibacterial agent",
                    &[
                        "antibiotic",
                        "antibacterial",
                        "antimicrobial agent",
                        "antibiotic agent",
                        "antibacterial drug",
                        "bactericidal agent",
                        "antibiotic drug",
                    ],
                    3,
                )
            },
        ],
    );
    let o2 = lines_for(
        "O2",
        &[
            ClassSpec {
                properties: 3,
                ..class("O2:penicillin-g", "penicillin g", &["penicillin"], 6)
            },
            ClassSpec {
                properties: 2,
                ..class("O2:tonsillitis", "tonsillitis", &[], 12)
            },
        ],
    );
    let mut lines = pad(o1, "O1", o1_size);
    lines.extend(pad(o2, "O2", o2_size));
    lines
}

pub fn penicillin_repository(o1_size: usize, o2_size: usize) -> OntologyRepository {
    OntologyRepository::from_lines(penicillin_lines(o1_size, o2_size)).expect("valid fixture")
}

/// EHDA holds 11 `eye` and 4 `skin` classes; NCIT covers six distinct terms
/// of the melanoma sentence once each. Both have 100 classes.
pub fn ehda_lines() -> Vec<CorpusLine> {
    let ehda_ids: Vec<String> = (0..15).map(|i| format!("EHDA:{}", 3800 + i)).collect();
    let mut ehda: Vec<ClassSpec> = Vec::new();
    for (i, id) in ehda_ids.iter().enumerate() {
        let label = if i < 11 { "eye" } else { "skin" };
        ehda.push(class(id, label, &[], 3));
    }
    let mut lines = pad(lines_for("EHDA", &ehda), "EHDA", 100);
    let ncit = lines_for(
        "NCIT",
        &[
            class("NCIT:C3224", "melanoma", &[], 3),
            class("NCIT:C9305", "malignant tumor", &["malignant neoplasm"], 3),
            class("NCIT:C12535", "melanocytes", &[], 3),
            class("NCIT:C12470", "skin", &[], 3),
            class("NCIT:C12379", "bowel", &[], 3),
            class("NCIT:C12401", "eye", &[], 3),
        ],
    );
    lines.extend(pad(ncit, "NCIT", 100));
    lines
}

pub fn ehda_repository() -> OntologyRepository {
    OntologyRepository::from_lines(ehda_lines()).expect("valid fixture")
}

/// SWEET has three `structure` classes and is small; NCIT matches each word
/// separately; HUPSON matches two words; SNOMEDCT holds the exact phrase.
pub fn multiword_lines() -> Vec<CorpusLine> {
    let mut lines = pad(
        lines_for(
            "SWEET",
            &[
                class("SWEET:structure", "structure", &[], 2),
                class("SWEET:structure-2", "structure", &[], 3),
                class("SWEET:structure-3", "structure", &[], 3),
            ],
        ),
        "SWEET",
        45,
    );
    lines.extend(pad(
        lines_for(
            "NCIT",
            &[
                class("NCIT:C-embryonic", "embryonic", &[], 2),
                class("NCIT:C-cardiac", "cardiac", &[], 2),
                class("NCIT:C-structure", "structure", &[], 2),
            ],
        ),
        "NCIT",
        900,
    ));
    lines.extend(pad(
        lines_for(
            "HUPSON",
            &[
                class("HUPSON:cardiac", "cardiac", &[], 2),
                class("HUPSON:structure", "structure", &[], 2),
            ],
        ),
        "HUPSON",
        300,
    ));
    lines.extend(pad(
        lines_for(
            "SNOMEDCT",
            &[class(
                "SNOMEDCT:embryonic-cardiac-structure",
                "embryonic cardiac structure",
                &[],
                4,
            )],
        ),
        "SNOMEDCT",
        2000,
    ));
    lines
}

pub fn multiword_repository() -> OntologyRepository {
    OntologyRepository::from_lines(multiword_lines()).expect("valid fixture")
}

/// Every ontology present in UMLS with equal visits, so acceptance is uniform.
pub fn uniform_acceptance(repository: &OntologyRepository) -> AcceptanceTable {
    AcceptanceTable::new(
        repository
            .acronyms()
            .map(|a| {
                (
                    a.to_string(),
                    AcceptanceRecord {
                        present_in: ["UMLS".to_string()].into(),
                        visits: [("BioPortal".to_string(), 1000)].into(),
                    },
                )
            })
            .collect(),
    )
}

/// Parameters for [`random_corpus`].
#[derive(Debug, Clone, Copy)]
pub struct RandomCorpusSpec {
    pub ontologies: usize,
    pub classes_per_ontology: usize,
    pub vocabulary: usize,
    pub max_label_words: usize,
}

impl Default for RandomCorpusSpec {
    fn default() -> Self {
        Self {
            ontologies: 10,
            classes_per_ontology: 30,
            vocabulary: 200,
            max_label_words: 3,
        }
    }
}

pub fn random_word(i: usize) -> String {
    format!("w{i}")
}

/// Seeded random corpus; ontology acronyms are `RND000`, `RND001`, ...
pub fn random_corpus(seed: u64, spec: RandomCorpusSpec) -> Vec<CorpusLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(spec.ontologies * spec.classes_per_ontology);
    let label = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(1..=spec.max_label_words.max(1));
        (0..n)
            .map(|_| random_word(rng.gen_range(0..spec.vocabulary)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for o in 0..spec.ontologies {
        let acronym = format!("RND{o:03}");
        for c in 0..spec.classes_per_ontology.max(2) {
            let pref = label(&mut rng);
            let synonyms = (0..rng.gen_range(0..=2)).map(|_| label(&mut rng)).collect();
            lines.push(CorpusLine {
                ontology: acronym.clone(),
                class_id: format!("{acronym}:{c}"),
                pref_label: pref,
                synonyms,
                definitions: rng.gen_range(0..=2),
                properties: rng.gen_range(0..=20),
                hierarchy_level: Some(rng.gen_range(1..=10)),
                parent_id: None,
            });
        }
    }
    lines
}

/// Random presence/visits for every acronym in `repository`.
pub fn random_acceptance(seed: u64, repository: &OntologyRepository) -> AcceptanceTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AcceptanceTable::new(
        repository
            .acronyms()
            .map(|a| {
                let mut rec = AcceptanceRecord::default();
                if rng.gen_bool(0.5) {
                    rec.present_in.insert("UMLS".into());
                }
                if rng.gen_bool(0.8) {
                    rec.visits
                        .insert("BioPortal".into(), rng.gen_range(0..100_000));
                }
                (a.to_string(), rec)
            })
            .collect(),
    )
}

/// Random text of `words` words over the random vocabulary mixed with filler.
pub fn random_text(seed: u64, words: usize, vocabulary: usize) -> String {
    const FILLER: [&str; 6] = ["the", "of", "and", "with", "in", "a"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..words)
        .map(|_| {
            if rng.gen_bool(0.3) {
                FILLER.choose(&mut rng).unwrap().to_string()
            } else {
                random_word(rng.gen_range(0..vocabulary))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Comma-separated random keywords of 1..=3 words each.
pub fn random_keywords(seed: u64, keywords: usize, vocabulary: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..keywords)
        .map(|_| {
            let n = rng.gen_range(1..=3);
            (0..n)
                .map(|_| random_word(rng.gen_range(0..vocabulary)))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// The bundled evaluation suite: one shared corpus plus input files grouped
/// by input type and dataset.
#[derive(Debug, Clone)]
pub struct Suite {
    pub corpus: Vec<CorpusLine>,
    pub acceptance: AcceptanceTable,
    /// (input type dir, dataset, file name, contents)
    pub inputs: Vec<(&'static str, String, String, String)>,
}

pub fn bundled_suite() -> Suite {
    let mut corpus = thrombocyte_lines();
    corpus.extend(penicillin_lines(1200, 80));
    // The melanoma and multi-word fixtures share NCIT; merge their classes.
    let mut merged: BTreeMap<(String, String), CorpusLine> = BTreeMap::new();
    for line in ehda_lines().into_iter().chain(multiword_lines()) {
        merged.insert((line.ontology.clone(), line.class_id.clone()), line);
    }
    // SNOMEDCT filler from the multi-word fixture tops it up; keep its
    // thrombocyte classes.
    corpus.extend(merged.into_values());
    let random_spec = RandomCorpusSpec::default();
    corpus.extend(random_corpus(7, random_spec));

    let repository = OntologyRepository::from_lines(corpus.clone()).expect("valid suite");
    let acceptance = random_acceptance(11, &repository);

    let mut inputs = Vec::new();
    let mut add = |kind: &'static str, dataset: &str, name: String, text: String| {
        inputs.push((kind, dataset.to_string(), name, text));
    };
    add(
        "text",
        "pathology",
        "melanoma.txt".into(),
        MELANOMA_INPUT.into(),
    );
    add(
        "text",
        "pathology",
        "melanoma-short.txt".into(),
        "A melanoma of the eye and a malignant tumor of the skin and bowel".into(),
    );
    add(
        "text",
        "pathology",
        "eye-skin.txt".into(),
        "Melanocytes occur in the skin, the bowel and the eye; melanoma arises from melanocytes"
            .into(),
    );
    add(
        "text",
        "worked",
        "thrombocyte.txt".into(),
        THROMBOCYTE_INPUT.into(),
    );
    add(
        "text",
        "worked",
        "penicillin.txt".into(),
        PENICILLIN_INPUT.into(),
    );
    add(
        "text",
        "worked",
        "mixed.txt".into(),
        "Penicillin treats tonsillitis; a thrombocyte is a blood cell found in the bowel".into(),
    );
    for i in 0..5u64 {
        add(
            "text",
            "synthetic",
            format!("random-{i}.txt"),
            random_text(100 + i, 60, random_spec.vocabulary),
        );
    }
    add(
        "keywords",
        "multiword",
        "ecs.txt".into(),
        MULTIWORD_KEYWORDS.into(),
    );
    add(
        "keywords",
        "multiword",
        "ecs-melanoma.txt".into(),
        "embryonic cardiac structure, melanoma, malignant tumor".into(),
    );
    add(
        "keywords",
        "multiword",
        "ecs-blood.txt".into(),
        "embryonic cardiac structure, blood cell, thrombocyte".into(),
    );
    add(
        "keywords",
        "clinical",
        "derm.txt".into(),
        "melanoma, skin, eye, bowel, melanocytes".into(),
    );
    add(
        "keywords",
        "clinical",
        "infection.txt".into(),
        "penicillin, antibiotic, tonsillitis, blood".into(),
    );
    for i in 0..5u64 {
        add(
            "keywords",
            "synthetic",
            format!("random-{i}.txt"),
            random_keywords(200 + i, 8, random_spec.vocabulary),
        );
    }
    Suite {
        corpus,
        acceptance,
        inputs,
    }
}

impl Suite {
    /// Writes `corpus.jsonl`, `acceptance.json` and `<type>/<dataset>/<file>`
    /// under `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_corpus(&dir.join("corpus.jsonl"), &self.corpus)?;
        write_acceptance(&dir.join("acceptance.json"), &self.acceptance)?;
        for (kind, dataset, name, text) in &self.inputs {
            let d = dir.join(kind).join(dataset);
            fs::create_dir_all(&d)?;
            fs::write(d.join(name), format!("{text}\n"))?;
        }
        Ok(())
    }
}

pub fn write_corpus(path: &Path, lines: &[CorpusLine]) -> io::Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_acceptance(path: &Path, table: &AcceptanceTable) -> io::Result<()> {
    let map: BTreeMap<&str, &AcceptanceRecord> = table.records().collect();
    let mut json = serde_json::to_string_pretty(&map)?;
    json.push('\n');
    fs::write(path, json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        assert_eq!(
            thrombocyte_repository().ontology_size("SNOMEDCT").unwrap(),
            6
        );
        let r = ehda_repository();
        assert_eq!(r.ontology_size("EHDA").unwrap(), 100);
        assert_eq!(r.ontology_size("NCIT").unwrap(), 100);
        assert_eq!(multiword_repository().len(), 4);
    }

    #[test]
    fn penicillin_sizes() {
        let r = penicillin_repository(120_000, 800);
        assert_eq!(r.ontology_size("O1").unwrap(), 120_000);
        assert_eq!(r.ontology_size("O2").unwrap(), 800);
        let antibiotic = r.class("O1", "O1:antibacterial").unwrap();
        assert_eq!(antibiotic.synonyms.len(), 7);
    }

    #[test]
    fn random_generators_are_seeded() {
        let spec = RandomCorpusSpec::default();
        assert_eq!(random_corpus(3, spec).len(), 300);
        assert_eq!(
            serde_json::to_string(&random_corpus(3, spec)).unwrap(),
            serde_json::to_string(&random_corpus(3, spec)).unwrap()
        );
        assert_eq!(random_text(1, 50, 100), random_text(1, 50, 100));
        assert_ne!(random_text(1, 50, 100), random_text(2, 50, 100));
    }

    #[test]
    fn bundled_suite_loads() {
        let suite = bundled_suite();
        let repo = OntologyRepository::from_lines(suite.corpus.clone()).unwrap();
        assert!(repo.contains("EHDA") && repo.contains("SWEET") && repo.contains("O1"));
        assert_eq!(
            repo.class("SNOMEDCT", "SNOMEDCT:16378004")
                .unwrap()
                .synonyms,
            vec!["thrombocyte".to_string()]
        );
    }

    #[test]
    fn checked_in_suite_matches_generator() {
        let dir = tempfile::tempdir().unwrap();
        bundled_suite().write_to(dir.path()).unwrap();
        let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/suite");
        for entry in walk(dir.path()) {
            let rel = entry.strip_prefix(dir.path()).unwrap();
            let expected = fs::read(&entry).unwrap();
            let actual = fs::read(shipped.join(rel)).unwrap_or_else(|_| {
                panic!(
                    "missing {}; regenerate with `ontorec evaluate --write-suite`",
                    rel.display()
                )
            });
            assert!(expected == actual, "{} is stale", rel.display());
        }
    }

    fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
        let mut out = Vec::new();
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                out.extend(walk(&path));
            } else {
                out.push(path);
            }
        }
        out
    }
}
