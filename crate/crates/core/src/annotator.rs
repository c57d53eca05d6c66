//! Dictionary annotator: a token trie over every preferred label and synonym
//! in the repository, matched against tokenized input.
//!
//! Matching is exact on lowercased token sequences. Every occurrence of every
//! indexed pattern is reported, including nested and overlapping matches; the
//! scorers decide which annotations count.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::OntologyRepository;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased, non-empty, no whitespace.
    pub text: String,
    pub start_word_index: usize,
    pub byte_start: usize,
    pub byte_end: usize,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MatchType {
    Pref,
    Syn,
}

/// A matched span of the input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub ontology_acronym: String,
    pub class_id: String,
    pub match_type: MatchType,
    /// Inclusive word index span.
    pub start_word_index: usize,
    pub end_word_index: usize,
    pub annotated_words: usize,
    /// Surface text of the span as it appears in the input.
    pub matched_text: String,
    /// Character (Unicode scalar) offsets into the input, end exclusive.
    pub char_start: usize,
    pub char_end: usize,
    /// Set in keyword mode: the keyword this annotation fully covers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword_index: Option<usize>,
}

impl Annotation {
    pub fn overlaps(&self, other: &Annotation) -> bool {
        self.start_word_index <= other.end_word_index
            && other.start_word_index <= self.end_word_index
    }

    pub fn span_len(&self) -> usize {
        self.end_word_index - self.start_word_index + 1
    }

    fn canonical_key(&self) -> (usize, usize, &str, &str, MatchType) {
        (
            self.start_word_index,
            self.end_word_index,
            &self.ontology_acronym,
            &self.class_id,
            self.match_type,
        )
    }
}

/// Sorts annotations by (span start, span end, ontology, class_id, match type).
pub fn sort_canonical(annotations: &mut [Annotation]) {
    annotations.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
}

/// Splits on anything that is not alphanumeric and lowercases the pieces.
pub fn tokenize(input: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    let mut char_pos = 0;
    let push = |tokens: &mut Vec<Token>, (bs, cs): (usize, usize), be: usize, ce: usize| {
        tokens.push(Token {
            text: input[bs..be].to_lowercase(),
            start_word_index: tokens.len(),
            byte_start: bs,
            byte_end: be,
            char_start: cs,
            char_end: ce,
        });
    };
    for (byte_pos, ch) in input.char_indices() {
        if ch.is_alphanumeric() {
            current.get_or_insert((byte_pos, char_pos));
        } else if let Some(start) = current.take() {
            push(&mut tokens, start, byte_pos, char_pos);
        }
        char_pos += 1;
    }
    if let Some(start) = current {
        push(&mut tokens, start, input.len(), char_pos);
    }
    tokens
}

/// Comma-separated keywords, trimmed, empties dropped. Returns each keyword
/// with its byte offset in `input`.
pub fn split_keywords(input: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for piece in input.split(',') {
        let trimmed = piece.trim_start();
        let lead = piece.len() - trimmed.len();
        let trimmed = trimmed.trim_end();
        if !trimmed.is_empty() {
            out.push((offset + lead, trimmed));
        }
        offset += piece.len() + 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub ontology_acronym: Arc<str>,
    pub class_id: Arc<str>,
    pub match_type: MatchType,
}

/// Token trie over all labels and synonyms. Immutable once built.
#[derive(Debug, Clone)]
pub struct TermIndex {
    vocab: HashMap<String, u32>,
    /// (node, token id) -> child node. Node 0 is the root.
    edges: HashMap<(u32, u32), u32>,
    /// Entries terminating at each node.
    terminals: Vec<Vec<u32>>,
    entries: Vec<IndexEntry>,
}

impl TermIndex {
    pub fn build(repository: &OntologyRepository) -> Self {
        let mut index = TermIndex {
            vocab: HashMap::new(),
            edges: HashMap::new(),
            terminals: vec![Vec::new()],
            entries: Vec::new(),
        };
        for ontology in repository.ontologies() {
            let acronym: Arc<str> = Arc::from(ontology.acronym.as_str());
            for class in ontology.classes() {
                let class_id: Arc<str> = Arc::from(class.class_id.as_str());
                let labels = std::iter::once((&class.preferred_label, MatchType::Pref))
                    .chain(class.synonyms.iter().map(|s| (s, MatchType::Syn)));
                for (label, match_type) in labels {
                    let entry = IndexEntry {
                        ontology_acronym: acronym.clone(),
                        class_id: class_id.clone(),
                        match_type,
                    };
                    index.insert(label, entry);
                }
            }
        }
        index
    }

    fn insert(&mut self, label: &str, entry: IndexEntry) {
        let tokens = tokenize(label);
        if tokens.is_empty() {
            return;
        }
        let mut node = 0u32;
        for token in tokens {
            let next_id = self.vocab.len() as u32;
            let tok = *self.vocab.entry(token.text).or_insert(next_id);
            node = match self.edges.get(&(node, tok)) {
                Some(&child) => child,
                None => {
                    let child = self.terminals.len() as u32;
                    self.terminals.push(Vec::new());
                    self.edges.insert((node, tok), child);
                    child
                }
            };
        }
        // A class listing the same label twice (e.g. differing only in case)
        // yields one pattern.
        let terminals = &self.terminals[node as usize];
        if terminals.iter().any(|&e| self.entries[e as usize] == entry) {
            return;
        }
        let id = self.entries.len() as u32;
        self.entries.push(entry);
        self.terminals[node as usize].push(id);
    }

    /// Entries whose normalized pattern equals the tokenization of `pattern`.
    pub fn lookup(&self, pattern: &str) -> Vec<&IndexEntry> {
        let mut node = 0u32;
        for token in tokenize(pattern) {
            let Some(&tok) = self.vocab.get(&token.text) else {
                return Vec::new();
            };
            match self.edges.get(&(node, tok)) {
                Some(&child) => node = child,
                None => return Vec::new(),
            }
        }
        if node == 0 {
            return Vec::new();
        }
        self.terminals[node as usize]
            .iter()
            .map(|&e| &self.entries[e as usize])
            .collect()
    }

    pub fn pattern_count(&self) -> usize {
        self.entries.len()
    }

    /// Emits every match starting anywhere in `tokens`. `accept` receives
    /// (start, end) token positions inclusive and decides whether to keep it.
    fn scan(
        &self,
        tokens: &[Token],
        source: &str,
        keyword_index: Option<usize>,
        accept: impl Fn(usize, usize) -> bool,
        out: &mut Vec<Annotation>,
    ) {
        let ids: Vec<Option<u32>> = tokens
            .iter()
            .map(|t| self.vocab.get(&t.text).copied())
            .collect();
        for start in 0..tokens.len() {
            let mut node = 0u32;
            for end in start..tokens.len() {
                let Some(tok) = ids[end] else { break };
                let Some(&child) = self.edges.get(&(node, tok)) else {
                    break;
                };
                node = child;
                let terminals = &self.terminals[node as usize];
                if terminals.is_empty() || !accept(start, end) {
                    continue;
                }
                let (first, last) = (&tokens[start], &tokens[end]);
                for &e in terminals {
                    let entry = &self.entries[e as usize];
                    out.push(Annotation {
                        ontology_acronym: entry.ontology_acronym.to_string(),
                        class_id: entry.class_id.to_string(),
                        match_type: entry.match_type,
                        start_word_index: first.start_word_index,
                        end_word_index: last.start_word_index,
                        annotated_words: end - start + 1,
                        matched_text: source[first.byte_start..last.byte_end].to_string(),
                        char_start: first.char_start,
                        char_end: last.char_end,
                        keyword_index,
                    });
                }
            }
        }
    }
}

/// All annotations of `text`, in canonical order.
pub fn annotate_text(index: &TermIndex, text: &str) -> Vec<Annotation> {
    let tokens = tokenize(text);
    let mut out = Vec::new();
    index.scan(&tokens, text, None, |_, _| true, &mut out);
    sort_canonical(&mut out);
    out
}

/// Token layout of a keyword input: one token stream with global word indices,
/// plus the token range of each keyword.
#[derive(Debug, Clone)]
pub struct KeywordLayout {
    pub tokens: Vec<Token>,
    /// Inclusive word span per keyword; `None` for keywords without tokens.
    pub spans: Vec<Option<(usize, usize)>>,
}

impl KeywordLayout {
    /// Tokenizes a raw comma-separated keyword string. Offsets refer to `raw`.
    pub fn from_raw(raw: &str) -> Self {
        let mut tokens = Vec::new();
        let mut spans = Vec::new();
        for (offset, keyword) in split_keywords(raw) {
            let char_offset = raw[..offset].chars().count();
            let first = tokens.len();
            for mut t in tokenize(keyword) {
                t.start_word_index += first;
                t.byte_start += offset;
                t.byte_end += offset;
                t.char_start += char_offset;
                t.char_end += char_offset;
                tokens.push(t);
            }
            spans.push((tokens.len() > first).then(|| (first, tokens.len() - 1)));
        }
        Self { tokens, spans }
    }

    pub fn keyword_count(&self) -> usize {
        self.spans.len()
    }
}

fn annotate_layout(
    index: &TermIndex,
    raw: &str,
    layout: &KeywordLayout,
    full_only: bool,
) -> Vec<Annotation> {
    let mut out = Vec::new();
    for (k, span) in layout.spans.iter().enumerate() {
        let Some((first, last)) = *span else { continue };
        let tokens = &layout.tokens[first..=last];
        let len = tokens.len();
        index.scan(
            tokens,
            raw,
            Some(k),
            |s, e| !full_only || (s == 0 && e + 1 == len),
            &mut out,
        );
    }
    sort_canonical(&mut out);
    out
}

/// Keyword-mode annotation over a raw comma-separated string: only annotations
/// spanning a whole keyword are returned.
pub fn annotate_keyword_input(index: &TermIndex, raw: &str) -> Vec<Annotation> {
    annotate_layout(index, raw, &KeywordLayout::from_raw(raw), true)
}

/// Like [`annotate_keyword_input`] but keeps partial matches inside each
/// keyword. This is how the legacy scorer saw keyword input.
pub fn annotate_keyword_input_partial(index: &TermIndex, raw: &str) -> Vec<Annotation> {
    annotate_layout(index, raw, &KeywordLayout::from_raw(raw), false)
}

/// Keyword-mode annotation over already split keywords.
pub fn annotate_keywords<S: AsRef<str>>(index: &TermIndex, keywords: &[S]) -> Vec<Annotation> {
    let joined = keywords
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(",");
    annotate_keyword_input(index, &joined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusLine, OntologyRepository};
    use crate::fixtures;

    fn repo(classes: &[(&str, &str, &str, &[&str])]) -> OntologyRepository {
        OntologyRepository::from_lines(
            classes
                .iter()
                .map(|(o, id, label, syns)| CorpusLine {
                    ontology: o.to_string(),
                    class_id: id.to_string(),
                    pref_label: label.to_string(),
                    synonyms: syns.iter().map(|s| s.to_string()).collect(),
                    hierarchy_level: Some(1),
                    ..Default::default()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tokenize_examples() {
        let tokens = tokenize("A thrombocyte is a kind of blood cell");
        assert_eq!(tokens.len(), 8);
        assert_eq!(tokens[6].text, "blood");
        assert_eq!(tokens[6].start_word_index, 6);
        assert!(tokenize("").is_empty());
        let texts: Vec<_> = tokenize("embryonic  cardiac-structure")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(texts, ["embryonic", "cardiac", "structure"]);
    }

    #[test]
    fn tokenize_offsets_are_unicode_aware() {
        let input = "Ärzte: Größe!";
        let tokens = tokenize(input);
        assert_eq!(tokens.len(), 2);
        assert_eq!(tokens[1].text, "größe");
        assert_eq!(&input[tokens[1].byte_start..tokens[1].byte_end], "Größe");
        assert_eq!((tokens[1].char_start, tokens[1].char_end), (7, 12));
    }

    #[test]
    fn split_keywords_trims_and_drops_empty() {
        let kws = split_keywords(" melanoma ,, skin cancer,  ");
        assert_eq!(kws, vec![(1, "melanoma"), (13, "skin cancer")]);
    }

    #[test]
    fn index_answers_labels_and_synonyms() {
        let r = repo(&[
            ("O1", "c1", "blood cell", &["hemocyte"]),
            ("O1", "c2", "cell", &["cell"]),
        ]);
        let index = TermIndex::build(&r);
        assert_eq!(index.lookup("Blood  Cell").len(), 1);
        assert_eq!(index.lookup("hemocyte")[0].match_type, MatchType::Syn);
        let cell = index.lookup("cell");
        assert_eq!(cell.len(), 2);
        assert!(cell.iter().any(|e| e.match_type == MatchType::Pref));
        assert!(cell.iter().any(|e| e.match_type == MatchType::Syn));
        assert!(index.lookup("blood").is_empty());
    }

    #[test]
    fn eleven_eye_classes_are_all_retained() {
        let classes: Vec<(String, String)> = (0..11)
            .map(|i| (format!("E{i}"), "eye".to_string()))
            .collect();
        let mut spec: Vec<(&str, &str, &str, &[&str])> = classes
            .iter()
            .map(|(id, l)| ("EHDA", id.as_str(), l.as_str(), &[][..]))
            .collect();
        spec.push(("OTHER", "x", "eye", &[]));
        spec.push(("OTHER", "y", "ear", &[]));
        let index = TermIndex::build(&repo(&spec));
        let hits = index.lookup("eye");
        assert_eq!(
            hits.iter()
                .filter(|e| &*e.ontology_acronym == "EHDA")
                .count(),
            11
        );
    }

    #[test]
    fn thrombocyte_annotations() {
        let r = fixtures::thrombocyte_repository();
        let index = TermIndex::build(&r);
        let anns = annotate_text(&index, fixtures::THROMBOCYTE_INPUT);
        let summary: Vec<(&str, MatchType, usize, usize)> = anns
            .iter()
            .map(|a| {
                (
                    a.matched_text.as_str(),
                    a.match_type,
                    a.start_word_index,
                    a.end_word_index,
                )
            })
            .collect();
        assert_eq!(anns.len(), 6);
        assert_eq!(
            summary
                .iter()
                .filter(|s| s.0 == "thrombocyte" && s.1 == MatchType::Syn)
                .count(),
            1
        );
        assert_eq!(
            summary
                .iter()
                .filter(|s| s.0 == "blood cell" && s.1 == MatchType::Pref)
                .count(),
            1
        );
        assert_eq!(
            summary
                .iter()
                .filter(|s| s.0 == "blood" && s.1 == MatchType::Pref)
                .count(),
            1
        );
        assert_eq!(
            summary
                .iter()
                .filter(|s| s.0 == "cell" && s.1 == MatchType::Syn)
                .count(),
            2
        );
        assert_eq!(
            summary
                .iter()
                .filter(|s| s.0 == "cell" && s.1 == MatchType::Pref)
                .count(),
            1
        );
        let blood_cell = anns
            .iter()
            .find(|a| a.matched_text == "blood cell")
            .unwrap();
        assert_eq!(blood_cell.annotated_words, 2);
        assert_eq!((blood_cell.char_start, blood_cell.char_end), (27, 37));
    }

    #[test]
    fn repeated_terms_are_annotated_each_time() {
        let index = TermIndex::build(&repo(&[("O", "s", "skin", &[]), ("O", "t", "tail", &[])]));
        assert_eq!(annotate_text(&index, "skin and more skin").len(), 2);
        assert!(annotate_text(&index, "nothing relevant here").is_empty());
    }

    #[test]
    fn no_stemming() {
        let index = TermIndex::build(&repo(&[
            ("O", "l", "leukocyte", &[]),
            ("O", "t", "tail", &[]),
        ]));
        assert!(annotate_text(&index, "leukocytes").is_empty());
    }

    #[test]
    fn hyphenated_text_matches_spaced_pattern() {
        let index = TermIndex::build(&repo(&[
            ("O", "c", "cardiac structure", &[]),
            ("O", "t", "tail", &[]),
        ]));
        let anns = annotate_text(&index, "embryonic cardiac-structure");
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].matched_text, "cardiac-structure");
    }

    #[test]
    fn keyword_partial_matches_are_discarded() {
        let index = TermIndex::build(&repo(&[
            ("SWEET", "s", "structure", &[]),
            ("SWEET", "t", "tail", &[]),
            ("SNOMEDCT", "e", "embryonic cardiac structure", &[]),
            ("SNOMEDCT", "m", "melanoma", &[]),
        ]));
        let anns = annotate_keywords(&index, &["embryonic cardiac structure"]);
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].ontology_acronym, "SNOMEDCT");
        assert_eq!(anns[0].match_type, MatchType::Pref);
        assert_eq!(anns[0].annotated_words, 3);
        assert_eq!(anns[0].keyword_index, Some(0));

        let melanoma = annotate_keywords(&index, &["melanoma"]);
        assert_eq!(melanoma.len(), 1);
        assert_eq!(melanoma[0].match_type, MatchType::Pref);

        let partial = annotate_keyword_input_partial(&index, "embryonic cardiac structure");
        assert!(partial.iter().any(|a| a.ontology_acronym == "SWEET"));
    }

    #[test]
    fn keywords_do_not_match_across_commas() {
        let index = TermIndex::build(&repo(&[
            ("O", "a", "skin cancer", &[]),
            ("O", "b", "skin", &[]),
        ]));
        let anns = annotate_keyword_input(&index, "skin, cancer");
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].class_id, "b");
        assert_eq!(anns[0].matched_text, "skin");
        let layout = KeywordLayout::from_raw("skin, cancer");
        assert_eq!(layout.spans, vec![Some((0, 0)), Some((1, 1))]);
    }

    #[test]
    fn keyword_offsets_refer_to_raw_input() {
        let index = TermIndex::build(&repo(&[
            ("O", "a", "melanoma", &[]),
            ("O", "b", "skin", &[]),
        ]));
        let raw = "skin,   Melanoma ";
        let anns = annotate_keyword_input(&index, raw);
        let m = anns.iter().find(|a| a.class_id == "a").unwrap();
        assert_eq!(m.matched_text, "Melanoma");
        assert_eq!(m.start_word_index, 1);
        assert_eq!(m.keyword_index, Some(1));
        let chars: Vec<char> = raw.chars().collect();
        assert_eq!(
            chars[m.char_start..m.char_end].iter().collect::<String>(),
            "Melanoma"
        );
    }
}
