//! Triples, vocabularies and the split-level graph model.
//!
//! Files are plain `head<TAB>relation<TAB>tail` lines. Ids are assigned in
//! order of first appearance, scanning train, then valid, then test, so the
//! same three files always produce the same ids.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub const fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

/// String <-> id bijection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    names: IndexSet<String>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab::new();
        for name in names {
            vocab.intern(&name.into());
        }
        vocab
    }

    /// Returns the id of `name`, assigning the next free id if it is new.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(id) = self.names.get_index_of(name) {
            return id;
        }
        self.names.insert_full(name.to_string()).0
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.names.get_index_of(name)
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get_index(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Parses triple lines into borrowed `[head, relation, tail]` name triples.
///
/// Blank lines and a trailing `\r` are tolerated; any other line must have
/// exactly three non-empty tab-separated fields.
pub fn parse_triple_lines<'a>(source_name: &str, text: &'a str) -> Result<Vec<[&'a str; 3]>> {
    let mut out = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                source_name,
                idx + 1,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(source_name, idx + 1, "empty field"));
        }
        out.push([fields[0], fields[1], fields[2]]);
    }
    Ok(out)
}

/// What happened while building a graph from named triples.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub duplicates_train: usize,
    pub duplicates_valid: usize,
    pub duplicates_test: usize,
    /// Entities that never occur in train.
    pub unseen_entities: Vec<String>,
    /// Relations that never occur in train.
    pub unseen_relations: Vec<String>,
}

impl LoadReport {
    pub fn log(&self) {
        log::info!(
            "dedup: train={} valid={} test={}",
            self.duplicates_train,
            self.duplicates_valid,
            self.duplicates_test
        );
        if !self.unseen_entities.is_empty() || !self.unseen_relations.is_empty() {
            log::warn!(
                "{} entities and {} relations appear only in valid/test",
                self.unseen_entities.len(),
                self.unseen_relations.len()
            );
        }
    }
}

/// Vocabularies, the three splits and the known-positive index.
///
/// Immutable once built. The train split never carries noise labels; those
/// live in [`crate::noise::NoiseLabels`], which no training code accepts.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entities: Vocab,
    relations: Vocab,
    train: Vec<Triple>,
    valid: Vec<Triple>,
    test: Vec<Triple>,
    known: HashSet<Triple>,
    by_relation: Vec<Vec<usize>>,
}

fn dedup(triples: Vec<Triple>) -> (Vec<Triple>, usize) {
    let mut seen = HashSet::with_capacity(triples.len());
    let before = triples.len();
    let kept: Vec<Triple> = triples.into_iter().filter(|t| seen.insert(*t)).collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

impl KnowledgeGraph {
    /// Builds a graph from named triples, deduplicating within each split.
    pub fn from_named(
        train: &[[&str; 3]],
        valid: &[[&str; 3]],
        test: &[[&str; 3]],
    ) -> (Self, LoadReport) {
        let mut entities = Vocab::new();
        let mut relations = Vocab::new();
        let mut intern = |rows: &[[&str; 3]]| -> Vec<Triple> {
            rows.iter()
                .map(|[h, r, t]| {
                    let head = entities.intern(h);
                    let relation = relations.intern(r);
                    let tail = entities.intern(t);
                    Triple::new(head, relation, tail)
                })
                .collect()
        };
        let train = intern(train);
        let valid = intern(valid);
        let test = intern(test);

        let (train, duplicates_train) = dedup(train);
        let (valid, duplicates_valid) = dedup(valid);
        let (test, duplicates_test) = dedup(test);

        let mut in_train_ent = vec![false; entities.len()];
        let mut in_train_rel = vec![false; relations.len()];
        for t in &train {
            in_train_ent[t.head] = true;
            in_train_ent[t.tail] = true;
            in_train_rel[t.relation] = true;
        }
        let unseen_entities = (0..entities.len())
            .filter(|&e| !in_train_ent[e])
            .map(|e| entities.name(e).unwrap_or_default().to_string())
            .collect();
        let unseen_relations = (0..relations.len())
            .filter(|&r| !in_train_rel[r])
            .map(|r| relations.name(r).unwrap_or_default().to_string())
            .collect();

        let report = LoadReport {
            duplicates_train,
            duplicates_valid,
            duplicates_test,
            unseen_entities,
            unseen_relations,
        };
        (
            Self::assemble(entities, relations, train, valid, test),
            report,
        )
    }

    /// Builds a graph directly from ids; names are `e{i}` and `r{i}`.
    ///
    /// Fails if an id is out of range or a split holds a duplicate.
    pub fn from_ids(
        num_entities: usize,
        num_relations: usize,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        let entities = Vocab::from_names((0..num_entities).map(|i| format!("e{i}")));
        let relations = Vocab::from_names((0..num_relations).map(|i| format!("r{i}")));
        Self::with_vocab(entities, relations, train, valid, test)
    }

    /// Builds a graph over existing vocabularies.
    pub fn with_vocab(
        entities: Vocab,
        relations: Vocab,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        for (split, triples) in [("train", &train), ("valid", &valid), ("test", &test)] {
            let mut seen = HashSet::with_capacity(triples.len());
            for t in triples {
                if t.head >= entities.len()
                    || t.tail >= entities.len()
                    || t.relation >= relations.len()
                {
                    return Err(Error::invalid(format!("{split}: {t:?} out of range")));
                }
                if !seen.insert(*t) {
                    return Err(Error::invalid(format!("{split}: duplicate {t:?}")));
                }
            }
        }
        Ok(Self::assemble(entities, relations, train, valid, test))
    }

    fn assemble(
        entities: Vocab,
        relations: Vocab,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        let known: HashSet<Triple> = train.iter().chain(&valid).chain(&test).copied().collect();
        let mut by_relation = vec![Vec::new(); relations.len()];
        for (pos, t) in train.iter().enumerate() {
            by_relation[t.relation].push(pos);
        }
        KnowledgeGraph {
            entities,
            relations,
            train,
            valid,
            test,
            known,
            by_relation,
        }
    }

    /// Same vocabularies and valid/test, different train split.
    pub fn with_train(&self, train: Vec<Triple>) -> Result<Self> {
        Self::with_vocab(
            self.entities.clone(),
            self.relations.clone(),
            train,
            self.valid.clone(),
            self.test.clone(),
        )
    }

    pub fn entities(&self) -> &Vocab {
        &self.entities
    }

    pub fn relations(&self) -> &Vocab {
        &self.relations
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn train(&self) -> &[Triple] {
        &self.train
    }

    pub fn valid(&self) -> &[Triple] {
        &self.valid
    }

    pub fn test(&self) -> &[Triple] {
        &self.test
    }

    /// Membership in train ∪ valid ∪ test.
    pub fn is_known(&self, t: &Triple) -> bool {
        self.known.contains(t)
    }

    pub fn known(&self) -> &HashSet<Triple> {
        &self.known
    }

    /// Positions in `train()` of the triples with relation `r`, in stored order.
    pub fn relation_positions(&self, r: usize) -> &[usize] {
        self.by_relation.get(r).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The train triples of relation `r`, in stored order.
    pub fn triples_of_relation(&self, r: usize) -> Vec<Triple> {
        self.relation_positions(r)
            .iter()
            .map(|&p| self.train[p])
            .collect()
    }

    /// Renders triples back to TSV using this graph's names.
    pub fn to_tsv(&self, triples: &[Triple]) -> String {
        let mut out = String::new();
        for t in triples {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                self.entities.name(t.head).unwrap_or("?"),
                self.relations.name(t.relation).unwrap_or("?"),
                self.entities.name(t.tail).unwrap_or("?"),
            );
        }
        out
    }

    /// Writes `train.txt`, `valid.txt` and `test.txt` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, split) in [
            (TRAIN_FILE, &self.train),
            (VALID_FILE, &self.valid),
            (TEST_FILE, &self.test),
        ] {
            let path = dir.join(name);
            fs::write(&path, self.to_tsv(split)).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

pub const TRAIN_FILE: &str = "train.txt";
pub const VALID_FILE: &str = "valid.txt";
pub const TEST_FILE: &str = "test.txt";

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| {
        Error::parse(
            &path.display().to_string(),
            0,
            format!("invalid UTF-8 at byte {}", e.utf8_error().valid_up_to()),
        )
    })
}

/// Loads the three split files and builds the graph.
pub fn load_graph(
    train_path: &Path,
    valid_path: &Path,
    test_path: &Path,
) -> Result<(KnowledgeGraph, LoadReport)> {
    let train_text = read_text(train_path)?;
    let valid_text = read_text(valid_path)?;
    let test_text = read_text(test_path)?;
    let train = parse_triple_lines(&train_path.display().to_string(), &train_text)?;
    let valid = parse_triple_lines(&valid_path.display().to_string(), &valid_text)?;
    let test = parse_triple_lines(&test_path.display().to_string(), &test_text)?;
    let (graph, report) = KnowledgeGraph::from_named(&train, &valid, &test);
    log::info!(
        "loaded |E|={} |R|={} train={} valid={} test={}",
        graph.num_entities(),
        graph.num_relations(),
        graph.train().len(),
        graph.valid().len(),
        graph.test().len()
    );
    report.log();
    Ok((graph, report))
}

/// Loads `train.txt`, `valid.txt`, `test.txt` from a directory.
pub fn load_dir(dir: &Path) -> Result<(KnowledgeGraph, LoadReport)> {
    load_graph(
        &dir.join(TRAIN_FILE),
        &dir.join(VALID_FILE),
        &dir.join(TEST_FILE),
    )
}
