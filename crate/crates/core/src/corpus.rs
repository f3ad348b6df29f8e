//! Paragraph-level evidence corpus.
//!
//! Raw pages are cleaned with configurable regex rules, split into source
//! paragraphs on newlines and greedily merged until a chunk grows past the
//! merge threshold. Every chunk is prefixed with its page title and chunks
//! shorter than the minimum length are dropped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError};

pub const TITLE_SEPARATOR: &str = "\n";
pub const DEFAULT_MERGE_THRESHOLD: usize = 1000;
pub const DEFAULT_MIN_LEN: usize = 70;

const DEFAULT_RULES: &str = include_str!("../rules/default_clean.toml");

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid cleaning rule {name:?}: {source}")]
    Rule { name: String, source: regex::Error },
    #[error("cannot parse cleaning rules: {0}")]
    RuleFile(#[from] toml::de::Error),
    #[error("duplicate paragraph id {0}")]
    DuplicateParagraph(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

/// One extracted page as it comes out of the dump (`{"id","title","text"}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    #[serde(rename = "id")]
    pub page_id: String,
    pub title: String,
    #[serde(rename = "text")]
    pub body: String,
}

/// A retrievable evidence unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "ParagraphRecord", into = "ParagraphRecord")]
pub struct Paragraph {
    pub para_id: String,
    pub page_id: String,
    pub page_title: String,
    pub ordinal: usize,
    pub text: String,
    pub char_len: usize,
}

#[derive(Serialize, Deserialize)]
struct ParagraphRecord {
    para_id: String,
    page_id: String,
    page_title: String,
    ordinal: usize,
    text: String,
}

impl From<ParagraphRecord> for Paragraph {
    fn from(r: ParagraphRecord) -> Self {
        let char_len = r.text.chars().count();
        Paragraph {
            para_id: r.para_id,
            page_id: r.page_id,
            page_title: r.page_title,
            ordinal: r.ordinal,
            text: r.text,
            char_len,
        }
    }
}

impl From<Paragraph> for ParagraphRecord {
    fn from(p: Paragraph) -> Self {
        ParagraphRecord {
            para_id: p.para_id,
            page_id: p.page_id,
            page_title: p.page_title,
            ordinal: p.ordinal,
            text: p.text,
        }
    }
}

impl Paragraph {
    pub fn new(page_id: &str, page_title: &str, ordinal: usize, body: &str) -> Self {
        let text = format!("{page_title}{TITLE_SEPARATOR}{body}");
        Paragraph {
            para_id: para_id(page_id, ordinal),
            page_id: page_id.to_string(),
            page_title: page_title.to_string(),
            ordinal,
            char_len: text.chars().count(),
            text,
        }
    }

    /// The merged chunk without its title prefix.
    pub fn body(&self) -> &str {
        self.text
            .strip_prefix(self.page_title.as_str())
            .and_then(|rest| rest.strip_prefix(TITLE_SEPARATOR))
            .unwrap_or(&self.text)
    }

    pub fn is_lead_section(&self) -> bool {
        self.ordinal == 0
    }
}

pub fn para_id(page_id: &str, ordinal: usize) -> String {
    format!("{page_id}_{ordinal}")
}

#[derive(Debug, Clone, Deserialize)]
struct RuleSpec {
    name: String,
    pattern: String,
    #[serde(default)]
    replace: String,
}

#[derive(Debug, Deserialize)]
struct RuleFile {
    #[serde(default)]
    rule: Vec<RuleSpec>,
}

#[derive(Debug, Clone)]
struct CleanRule {
    name: String,
    regex: Regex,
    replace: String,
}

/// Ordered regex substitutions removing residual markup.
#[derive(Debug, Clone)]
pub struct CleanRules {
    rules: Vec<CleanRule>,
}

impl CleanRules {
    pub fn from_toml(src: &str) -> Result<Self, CorpusError> {
        let file: RuleFile = toml::from_str(src)?;
        let rules = file
            .rule
            .into_iter()
            .map(|r| {
                let regex = Regex::new(&r.pattern).map_err(|source| CorpusError::Rule {
                    name: r.name.clone(),
                    source,
                })?;
                Ok(CleanRule {
                    name: r.name,
                    regex,
                    replace: r.replace,
                })
            })
            .collect::<Result<_, CorpusError>>()?;
        Ok(CleanRules { rules })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let src = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&src)
    }

    pub fn empty() -> Self {
        CleanRules { rules: Vec::new() }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.name.as_str())
    }
}

impl Default for CleanRules {
    fn default() -> Self {
        Self::from_toml(DEFAULT_RULES).expect("bundled cleaning rules are valid")
    }
}

/// Applies the pattern rules, then normalizes paragraph boundaries: trailing
/// whitespace is trimmed from each line and blank lines are dropped, so the
/// cleaned body is exactly its source paragraphs joined by `\n`.
pub fn clean_page(raw: &RawPage, rules: &CleanRules) -> RawPage {
    let mut body = raw.body.clone();
    for rule in &rules.rules {
        if let std::borrow::Cow::Owned(s) = rule.regex.replace_all(&body, rule.replace.as_str()) {
            body = s;
        }
    }
    let body = source_paragraphs(&body).collect::<Vec<_>>().join("\n");
    RawPage {
        page_id: raw.page_id.clone(),
        title: raw.title.clone(),
        body,
    }
}

fn source_paragraphs(body: &str) -> impl Iterator<Item = &str> {
    body.lines().map(str::trim_end).filter(|l| !l.trim().is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkConfig {
    pub merge_threshold: usize,
    pub min_len: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            min_len: DEFAULT_MIN_LEN,
        }
    }
}

/// Greedily merges the source paragraphs of a cleaned page.
///
/// A source paragraph is appended to the open chunk; once the chunk length
/// (in characters, `\n` joins included) is strictly greater than the merge
/// threshold the chunk is emitted. Paragraphs are never split. Chunks whose
/// title-prefixed text is shorter than `min_len` are dropped; ordinals count
/// the kept chunks only.
pub fn chunk_page(page: &RawPage, cfg: ChunkConfig) -> Vec<Paragraph> {
    let mut chunks: Vec<String> = Vec::new();
    let mut open = String::new();
    let mut open_len = 0usize;
    for para in source_paragraphs(&page.body) {
        if !open.is_empty() {
            open.push('\n');
            open_len += 1;
        }
        open.push_str(para);
        open_len += para.chars().count();
        if open_len > cfg.merge_threshold {
            chunks.push(std::mem::take(&mut open));
            open_len = 0;
        }
    }
    if !open.is_empty() {
        chunks.push(open);
    }

    let title_len = page.title.chars().count() + TITLE_SEPARATOR.chars().count();
    chunks
        .iter()
        .filter(|c| title_len + c.chars().count() >= cfg.min_len)
        .enumerate()
        .map(|(ordinal, body)| Paragraph::new(&page.page_id, &page.title, ordinal, body))
        .collect()
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub corpus_id: String,
    pub language: String,
    pub chunk: ChunkConfig,
    pub drop_top_duplicates: usize,
    pub rules: CleanRules,
}

impl IngestConfig {
    pub fn new(corpus_id: impl Into<String>, language: impl Into<String>) -> Self {
        IngestConfig {
            corpus_id: corpus_id.into(),
            language: language.into(),
            chunk: ChunkConfig::default(),
            drop_top_duplicates: 0,
            rules: CleanRules::default(),
        }
    }
}

/// Ordered paragraph collection with id and page lookups. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub corpus_id: String,
    pub language: String,
    paragraphs: Vec<Paragraph>,
    by_id: HashMap<String, usize>,
    page_index: BTreeMap<String, Vec<String>>,
}

impl Corpus {
    /// Builds lookups over already-chunked paragraphs. Paragraphs of one page
    /// are indexed in ordinal order.
    pub fn from_paragraphs(
        corpus_id: impl Into<String>,
        language: impl Into<String>,
        paragraphs: Vec<Paragraph>,
    ) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(paragraphs.len());
        let mut pages: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        for (i, p) in paragraphs.iter().enumerate() {
            if by_id.insert(p.para_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateParagraph(p.para_id.clone()));
            }
            pages
                .entry(p.page_id.clone())
                .or_default()
                .push((p.ordinal, p.para_id.clone()));
        }
        let page_index = pages
            .into_iter()
            .map(|(page, mut ids)| {
                ids.sort();
                (page, ids.into_iter().map(|(_, id)| id).collect())
            })
            .collect();
        Ok(Corpus {
            corpus_id: corpus_id.into(),
            language: language.into(),
            paragraphs,
            by_id,
            page_index,
        })
    }

    pub fn paragraphs(&self) -> &[Paragraph] {
        &self.paragraphs
    }

    pub fn len(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    pub fn get(&self, para_id: &str) -> Option<&Paragraph> {
        self.by_id.get(para_id).map(|&i| &self.paragraphs[i])
    }

    pub fn page_index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.page_index
    }

    /// Paragraphs of a page in ordinal order, or `None` for an unknown page.
    pub fn page(&self, page_id: &str) -> Option<Vec<&Paragraph>> {
        self.page_index
            .get(page_id)
            .map(|ids| ids.iter().filter_map(|id| self.get(id)).collect())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        Ok(jsonl::write(path, &self.paragraphs)?)
    }

    pub fn read_jsonl(
        path: &Path,
        corpus_id: impl Into<String>,
        language: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let paragraphs: Vec<Paragraph> = jsonl::read(path)?;
        Self::from_paragraphs(corpus_id, language, paragraphs)
    }
}

/// Cleans, deduplicates (by title) and chunks pages into a corpus, then
/// optionally removes the `drop_top_duplicates` most frequent repeated chunk
/// bodies corpus-wide.
pub fn build_corpus<I>(pages: I, cfg: &IngestConfig) -> Corpus
where
    I: IntoIterator<Item = RawPage>,
{
    let mut seen_titles = HashSet::new();
    let mut seen_ids = HashSet::new();
    let unique: Vec<RawPage> = pages
        .into_iter()
        .filter(|p| {
            if p.title.trim().is_empty() {
                tracing::warn!(page_id = %p.page_id, "skipping page without title");
                return false;
            }
            seen_titles.insert(p.title.clone()) && seen_ids.insert(p.page_id.clone())
        })
        .collect();

    let per_page: Vec<Vec<Paragraph>> = unique
        .par_iter()
        .map(|p| chunk_page(&clean_page(p, &cfg.rules), cfg.chunk))
        .collect();

    let mut paragraphs: Vec<Paragraph> = per_page.into_iter().flatten().collect();
    if cfg.drop_top_duplicates > 0 {
        let dropped = top_duplicates(&paragraphs, cfg.drop_top_duplicates);
        paragraphs.retain(|p| !dropped.contains(p.body()));
    }
    Corpus::from_paragraphs(cfg.corpus_id.clone(), cfg.language.clone(), paragraphs)
        .expect("page ids are unique, so paragraph ids are unique")
}

/// The `limit` most frequent chunk bodies occurring more than once, ties
/// broken by text.
fn top_duplicates(paragraphs: &[Paragraph], limit: usize) -> HashSet<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for p in paragraphs {
        *counts.entry(p.body()).or_default() += 1;
    }
    let mut repeated: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c > 1).collect();
    repeated.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    repeated
        .into_iter()
        .take(limit)
        .map(|(t, _)| t.to_string())
        .collect()
}

/// Reads every file under `dir` (recursively, in path order) as page JSONL.
pub fn read_dump(dir: &Path) -> Result<Vec<RawPage>, CorpusError> {
    let mut files = Vec::new();
    collect_files(dir, &mut files)?;
    files.sort();
    let mut pages = Vec::new();
    for f in files {
        pages.extend(jsonl::read::<RawPage>(&f)?);
    }
    Ok(pages)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if path.is_file() {
            out.push(path);
        }
    }
    Ok(())
}
