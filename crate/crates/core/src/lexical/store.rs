//! On-disk index format: a single `index.jsonl` inside the index directory.
//!
//! ```text
//! {"format":"factsearch-bm25","version":1,"doc_count":N,"term_count":M}
//! {"doc":"<para_id>","len":<tokens>}            × N, ascending para_id
//! {"term":"<term>","postings":[[doc,tf],...]}   × M, ascending term
//! ```
//! `doc` in a posting is the zero-based position in the document table.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{InvertedIndex, Posting};

pub const INDEX_FILE: &str = "index.jsonl";
pub const INDEX_FORMAT: &str = "factsearch-bm25";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IndexStoreError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed index line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("unsupported index header: format {format:?} version {version}")]
    Header { format: String, version: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    doc_count: usize,
    term_count: usize,
}

#[derive(Serialize, Deserialize)]
struct DocLine {
    doc: String,
    len: u32,
}

#[derive(Serialize, Deserialize)]
struct TermLine {
    term: String,
    postings: Vec<(u32, u32)>,
}

pub fn save_index(index: &InvertedIndex, dir: &Path) -> Result<PathBuf, IndexStoreError> {
    fs::create_dir_all(dir).map_err(|source| IndexStoreError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(INDEX_FILE);
    let io = |source| IndexStoreError::Io {
        path: path.clone(),
        source,
    };
    let mut w = BufWriter::new(File::create(&path).map_err(io)?);
    write_line(
        &mut w,
        &Header {
            format: INDEX_FORMAT.into(),
            version: INDEX_VERSION,
            doc_count: index.doc_ids.len(),
            term_count: index.postings.len(),
        },
    )
    .map_err(io)?;
    for (id, &len) in index.doc_ids.iter().zip(&index.doc_lengths) {
        write_line(&mut w, &DocLine { doc: id.clone(), len }).map_err(io)?;
    }
    let mut terms: Vec<&String> = index.postings.keys().collect();
    terms.sort();
    for term in terms {
        let postings = index.postings[term].iter().map(|p| (p.doc, p.tf)).collect();
        write_line(
            &mut w,
            &TermLine {
                term: term.clone(),
                postings,
            },
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(path)
}

fn write_line<T: Serialize, W: Write>(w: &mut W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

pub fn load_index(dir: &Path) -> Result<InvertedIndex, IndexStoreError> {
    let path = if dir.is_dir() { dir.join(INDEX_FILE) } else { dir.to_path_buf() };
    let file = File::open(&path).map_err(|source| IndexStoreError::Io {
        path: path.clone(),
        source,
    })?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), IndexStoreError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((_, Err(source))) => Err(IndexStoreError::Io {
                path: path.clone(),
                source,
            }),
            None => Err(IndexStoreError::Corrupt(format!("unexpected end of file, expected {what}"))),
        }
    };
    let (line, s) = next("header")?;
    let header: Header = serde_json::from_str(&s).map_err(|source| IndexStoreError::Parse { line, source })?;
    if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
        return Err(IndexStoreError::Header {
            format: header.format,
            version: header.version,
        });
    }

    let mut doc_ids = Vec::with_capacity(header.doc_count);
    let mut doc_lengths = Vec::with_capacity(header.doc_count);
    for _ in 0..header.doc_count {
        let (line, s) = next("document line")?;
        let d: DocLine = serde_json::from_str(&s).map_err(|source| IndexStoreError::Parse { line, source })?;
        if doc_ids.last().is_some_and(|prev: &String| prev >= &d.doc) {
            return Err(IndexStoreError::Corrupt(format!("documents out of order at line {line}")));
        }
        doc_ids.push(d.doc);
        doc_lengths.push(d.len);
    }

    let mut postings = HashMap::with_capacity(header.term_count);
    for _ in 0..header.term_count {
        let (line, s) = next("term line")?;
        let t: TermLine = serde_json::from_str(&s).map_err(|source| IndexStoreError::Parse { line, source })?;
        if t.postings.iter().any(|&(doc, _)| doc as usize >= doc_ids.len()) {
            return Err(IndexStoreError::Corrupt(format!("posting out of range for term {:?}", t.term)));
        }
        let list = t.postings.into_iter().map(|(doc, tf)| Posting { doc, tf }).collect();
        postings.insert(t.term, list);
    }
    Ok(InvertedIndex::from_parts(doc_ids, doc_lengths, postings))
}
