//! In-memory positional index over a local document collection.
//!
//! Counting is at document level: a document either contains a pattern or it
//! does not, however many times the pattern occurs.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::CorpusError;
use crate::model::Count;
use crate::query::{normalize, Query, TermPattern};

type DocOrd = u32;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Posting {
    doc: DocOrd,
    positions: Vec<u32>,
}

/// Token postings sorted by document ordinal. The presence set of a token is
/// the `doc` column of its postings, so membership can never disagree with
/// the positional data.
#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    doc_ids: Vec<String>,
    postings: HashMap<String, Vec<Posting>>,
    token_occurrences: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexStats {
    pub documents: u64,
    pub distinct_tokens: u64,
    pub token_occurrences: u64,
}

impl CorpusIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_docs(&self) -> Count {
        Count::new(self.doc_ids.len() as u64).expect("document count fits in a Count")
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            documents: self.doc_ids.len() as u64,
            distinct_tokens: self.postings.len() as u64,
            token_occurrences: self.token_occurrences,
        }
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    fn add(&mut self, doc: Document, seen: &mut HashSet<String>) -> Result<(), CorpusError> {
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateDocId(doc.id));
        }
        let ord =
            DocOrd::try_from(self.doc_ids.len()).map_err(|_| CorpusError::TooManyDocuments)?;
        self.doc_ids.push(doc.id);

        let mut local: HashMap<String, Vec<u32>> = HashMap::new();
        for (pos, token) in normalize(&doc.text).into_iter().enumerate() {
            let pos = u32::try_from(pos).map_err(|_| CorpusError::TooManyDocuments)?;
            local.entry(token).or_default().push(pos);
            self.token_occurrences += 1;
        }
        for (token, positions) in local {
            self.postings.entry(token).or_default().push(Posting {
                doc: ord,
                positions,
            });
        }
        Ok(())
    }

    /// Appends `other` after `self`, renumbering its documents. Counts do not
    /// depend on the numbering, so merge order never changes any answer.
    pub fn merge(mut self, other: CorpusIndex) -> Result<CorpusIndex, CorpusError> {
        let seen: HashSet<&str> = self.doc_ids.iter().map(String::as_str).collect();
        if let Some(dup) = other.doc_ids.iter().find(|id| seen.contains(id.as_str())) {
            return Err(CorpusError::DuplicateDocId(dup.clone()));
        }
        let offset =
            DocOrd::try_from(self.doc_ids.len()).map_err(|_| CorpusError::TooManyDocuments)?;
        if (self.doc_ids.len() + other.doc_ids.len()) > DocOrd::MAX as usize {
            return Err(CorpusError::TooManyDocuments);
        }
        self.doc_ids.extend(other.doc_ids);
        self.token_occurrences += other.token_occurrences;
        for (token, list) in other.postings {
            self.postings
                .entry(token)
                .or_default()
                .extend(list.into_iter().map(|p| Posting {
                    doc: p.doc + offset,
                    positions: p.positions,
                }));
        }
        Ok(self)
    }

    fn postings(&self, token: &str) -> &[Posting] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Sorted ordinals of the documents matching `pattern`.
    fn matching_docs(&self, pattern: &TermPattern) -> Vec<DocOrd> {
        match pattern {
            TermPattern::Word(w) => self.postings(w).iter().map(|p| p.doc).collect(),
            TermPattern::Phrase(tokens) => self.phrase_docs(tokens),
        }
    }

    fn phrase_docs(&self, tokens: &[String]) -> Vec<DocOrd> {
        let lists: Vec<&[Posting]> = tokens.iter().map(|t| self.postings(t)).collect();
        if lists.iter().any(|l| l.is_empty()) {
            return Vec::new();
        }
        let mut cursors = vec![0usize; lists.len()];
        let mut out = Vec::new();
        // Leapfrog intersection on doc ordinals, then a positional check.
        'outer: loop {
            let mut target = 0;
            for (list, &c) in lists.iter().zip(&cursors) {
                match list.get(c) {
                    Some(p) => target = target.max(p.doc),
                    None => break 'outer,
                }
            }
            let mut aligned = true;
            for (list, c) in lists.iter().zip(cursors.iter_mut()) {
                *c += list[*c..].partition_point(|p| p.doc < target);
                match list.get(*c) {
                    Some(p) if p.doc == target => {}
                    Some(_) => aligned = false,
                    None => break 'outer,
                }
            }
            if !aligned {
                continue;
            }
            let here: Vec<&Posting> = lists.iter().zip(&cursors).map(|(l, &c)| &l[c]).collect();
            if phrase_at(&here) {
                out.push(target);
            }
            for c in cursors.iter_mut() {
                *c += 1;
            }
        }
        out
    }

    pub fn count(&self, query: &Query) -> Count {
        let n = match query {
            Query::Pattern(p) => self.matching_docs(p).len(),
            Query::And(p, q) => {
                let (a, b) = (self.matching_docs(p), self.matching_docs(q));
                intersection_len(&a, &b)
            }
            Query::AndNot(p, q) => {
                let (a, b) = (self.matching_docs(p), self.matching_docs(q));
                a.len() - intersection_len(&a, &b)
            }
        };
        Count::new(n as u64).expect("document count fits in a Count")
    }
}

/// True when some start position of the first token is followed by each
/// later token at exactly the next position.
fn phrase_at(postings: &[&Posting]) -> bool {
    postings[0].positions.iter().any(|&start| {
        postings[1..].iter().enumerate().all(|(i, p)| {
            start
                .checked_add(i as u32 + 1)
                .is_some_and(|want| p.positions.binary_search(&want).is_ok())
        })
    })
}

fn intersection_len(a: &[DocOrd], b: &[DocOrd]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Builds an index from a stream of documents.
pub fn build_index<I>(documents: I) -> Result<CorpusIndex, CorpusError>
where
    I: IntoIterator<Item = Document>,
{
    let mut index = CorpusIndex::new();
    let mut seen = HashSet::new();
    for doc in documents {
        index.add(doc, &mut seen)?;
    }
    Ok(index)
}

/// Builds partial indexes over chunks in parallel and merges them.
pub fn build_index_parallel(
    documents: Vec<Document>,
    chunk_size: usize,
) -> Result<CorpusIndex, CorpusError> {
    let chunk_size = chunk_size.max(1);
    let chunks: Vec<Vec<Document>> = {
        let mut docs = documents.into_iter().peekable();
        let mut out = Vec::new();
        while docs.peek().is_some() {
            out.push(docs.by_ref().take(chunk_size).collect());
        }
        out
    };
    chunks
        .into_par_iter()
        .map(build_index)
        .try_reduce(CorpusIndex::new, CorpusIndex::merge)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line with string fields `id` and `text`.
    Jsonl,
    /// A directory tree of text files; the relative path is the id.
    Directory,
}

impl CorpusFormat {
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            CorpusFormat::Directory
        } else {
            CorpusFormat::Jsonl
        }
    }
}

pub fn read_jsonl_corpus(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Reads every regular file under `root`, sorted by relative path.
pub fn read_directory_corpus(root: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: e
                .path()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| root.to_path_buf()),
            source: e.into(),
        })?;
        if entry.file_type().is_file() {
            files.push(entry.into_path());
        }
    }
    files.sort();
    files
        .into_iter()
        .map(|path| {
            let bytes = fs::read(&path).map_err(|source| CorpusError::Io {
                path: path.clone(),
                source,
            })?;
            let id = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            Ok(Document::new(id, String::from_utf8_lossy(&bytes)))
        })
        .collect()
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<CorpusIndex, CorpusError> {
    let docs = match format {
        CorpusFormat::Jsonl => read_jsonl_corpus(path)?,
        CorpusFormat::Directory => read_directory_corpus(path)?,
    };
    build_index_parallel(docs, 1024)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> TermPattern {
        TermPattern::word(s).unwrap()
    }

    fn p(s: &str) -> TermPattern {
        TermPattern::from_text(s).unwrap()
    }

    fn corpus(texts: &[&str]) -> CorpusIndex {
        build_index(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Document::new(format!("d{i}"), *t)),
        )
        .unwrap()
    }

    #[test]
    fn empty_corpus_counts_zero() {
        let idx = corpus(&[]);
        assert_eq!(idx.total_docs(), Count::ZERO);
        assert_eq!(idx.count(&Query::Pattern(w("a"))), Count::ZERO);
        assert_eq!(idx.count(&Query::AndNot(w("a"), w("b"))), Count::ZERO);
    }

    #[test]
    fn three_document_examples() {
        let idx = corpus(&["a b", "b c", "a c"]);
        assert_eq!(idx.count(&Query::Pattern(w("a"))).get(), 2);
        assert_eq!(idx.count(&Query::And(w("a"), w("c"))).get(), 1);
        assert_eq!(idx.count(&Query::AndNot(w("a"), w("c"))).get(), 1);
    }

    #[test]
    fn phrase_examples() {
        let idx = corpus(&["my pet fish", "pet store", "fish market"]);
        assert_eq!(idx.count(&Query::Pattern(p("pet fish"))).get(), 1);
        assert_eq!(idx.count(&Query::And(w("pet"), w("fish"))).get(), 1);
        assert_eq!(idx.count(&Query::Pattern(w("pet"))).get(), 2);
    }

    #[test]
    fn phrase_adjacency_is_strict_and_ordered() {
        let idx = corpus(&[
            "fish pet",
            "pet big fish",
            "a pet-fish here",
            "pet pet fish",
        ]);
        assert_eq!(idx.count(&Query::Pattern(p("pet fish"))).get(), 2);
        assert_eq!(idx.count(&Query::Pattern(p("pet pet fish"))).get(), 1);
        assert_eq!(idx.count(&Query::Pattern(p("fish pet"))).get(), 1);
    }

    #[test]
    fn counts_are_document_frequencies() {
        let idx = corpus(&["guppy guppy guppy", "Guppy"]);
        assert_eq!(idx.count(&Query::Pattern(w("guppy"))).get(), 2);
        assert_eq!(idx.stats().token_occurrences, 4);
        assert_eq!(idx.stats().distinct_tokens, 1);
    }

    #[test]
    fn self_negation_is_empty() {
        let idx = corpus(&["a b", "a", "b a b"]);
        for pat in [w("a"), w("b"), p("a b")] {
            assert_eq!(idx.count(&Query::AndNot(pat.clone(), pat)), Count::ZERO);
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = build_index([Document::new("x", "a"), Document::new("x", "b")]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateDocId(id) if id == "x"));

        let left = build_index([Document::new("x", "a")]).unwrap();
        let right = build_index([Document::new("x", "b")]).unwrap();
        assert!(matches!(
            left.merge(right),
            Err(CorpusError::DuplicateDocId(_))
        ));
    }

    #[test]
    fn parallel_build_matches_sequential() {
        let docs: Vec<Document> = (0..57)
            .map(|i| {
                Document::new(
                    format!("{i}"),
                    format!("t{} t{} pet fish t{}", i % 3, i % 5, i % 7),
                )
            })
            .collect();
        let seq = build_index(docs.clone()).unwrap();
        let par = build_index_parallel(docs, 4).unwrap();
        assert_eq!(seq.total_docs(), par.total_docs());
        for q in ["t1", "t2 t4", "t1 -t3", "\"pet fish\" t0", "\"fish t2\""] {
            let q: Query = q.parse().unwrap();
            assert_eq!(seq.count(&q), par.count(&q), "{q}");
        }
    }

    #[test]
    fn directory_corpus_uses_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("b.txt"), "Pet-Fish").unwrap();
        fs::write(dir.path().join("sub/a.txt"), "guppy").unwrap();
        let docs = read_directory_corpus(dir.path()).unwrap();
        let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["b.txt", "sub/a.txt"]);
    }

    #[test]
    fn jsonl_corpus_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(&path, "{\"id\":\"1\",\"text\":\"a\"}\n\n{\"id\":2}\n").unwrap();
        match read_jsonl_corpus(&path) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
