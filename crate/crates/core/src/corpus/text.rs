use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splits text into tokens and joins them back. `detokenize(tokenize(x))`
/// must tokenize to the same sequence.
pub trait Tokenizer: Send + Sync {
    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str>;
    fn detokenize(&self, tokens: &[&str]) -> String;
}

/// Maximal runs of non-whitespace; joined with single spaces.
#[derive(Clone, Copy, Debug, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str> {
        text.split_whitespace().collect()
    }

    fn detokenize(&self, tokens: &[&str]) -> String {
        tokens.join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// A half-open token span `[token_start, token_end)` of a document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub chunk_id: String,
    pub token_start: usize,
    pub token_end: usize,
    pub text: String,
}

/// Anything that names a token span of a document.
pub trait TokenSpan {
    fn doc_id(&self) -> &str;
    fn token_start(&self) -> usize;
    fn token_end(&self) -> usize;
}

impl TokenSpan for Chunk {
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn token_start(&self) -> usize {
        self.token_start
    }
    fn token_end(&self) -> usize {
        self.token_end
    }
}

/// True iff both spans belong to one document and one contains the other.
pub fn containment_check(query: &impl TokenSpan, top: &impl TokenSpan) -> bool {
    if query.doc_id() != top.doc_id() {
        return false;
    }
    let (qs, qe) = (query.token_start(), query.token_end());
    let (ts, te) = (top.token_start(), top.token_end());
    (qs <= ts && te <= qe) || (ts <= qs && qe <= te)
}

/// Chunks of one granularity, in document then position order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSet {
    pub granularity: usize,
    pub chunks: Vec<Chunk>,
}

impl ChunkSet {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// One JSON chunk per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for c in &self.chunks {
            serde_json::to_writer(&mut out, c)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a manifest written by `write_jsonl`; the granularity is the
    /// longest chunk.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let chunks: Vec<Chunk> = read_jsonl_lines(path)?;
        let granularity = chunks.iter().map(|c| c.token_end - c.token_start).max().unwrap_or(0);
        Ok(Self { granularity, chunks })
    }
}

pub(crate) fn read_jsonl_lines<R: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Contiguous, non-overlapping windows of `granularity` tokens; the last
/// window holds the remainder.
pub fn chunk_text(document: &Document, granularity: usize, tokenizer: &dyn Tokenizer) -> Result<ChunkSet> {
    if granularity == 0 {
        return Err(Error::invalid("chunk granularity must be at least 1 token"));
    }
    let tokens = tokenizer.tokenize(&document.text);
    if tokens.is_empty() {
        return Err(Error::invalid(format!("document {:?} has no tokens", document.id)));
    }
    let chunks = tokens
        .chunks(granularity)
        .enumerate()
        .map(|(i, window)| {
            let start = i * granularity;
            Chunk {
                doc_id: document.id.clone(),
                chunk_id: format!("{}:{}:{}", document.id, granularity, i),
                token_start: start,
                token_end: start + window.len(),
                text: tokenizer.detokenize(window),
            }
        })
        .collect();
    Ok(ChunkSet { granularity, chunks })
}

/// Chunks every document at one granularity.
pub fn chunk_corpus(documents: &[Document], granularity: usize, tokenizer: &dyn Tokenizer) -> Result<ChunkSet> {
    if documents.is_empty() {
        return Err(Error::invalid("corpus has no documents"));
    }
    let mut chunks = Vec::new();
    for d in documents {
        chunks.extend(chunk_text(d, granularity, tokenizer)?.chunks);
    }
    Ok(ChunkSet { granularity, chunks })
}

/// Every visible regular file of `dir` as a document named by its file
/// stem, sorted by name.
pub fn read_corpus_dir(dir: &Path) -> Result<Vec<Document>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut docs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if hidden || !path.is_file() {
            continue;
        }
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Error::invalid(format!("cannot name document {}", path.display())))?;
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        docs.push(Document { id, text });
    }
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = docs.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::invalid(format!("two files share the document id {:?}", w[0].id)));
    }
    if docs.is_empty() {
        return Err(Error::invalid(format!("no documents in {}", dir.display())));
    }
    Ok(docs)
}

/// Writes documents as `<id>.txt` files.
pub fn write_corpus_dir(dir: &Path, documents: &[Document]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for d in documents {
        let path = dir.join(format!("{}.txt", d.id));
        fs::write(&path, &d.text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(n_tokens: usize) -> Document {
        Document {
            id: "d".into(),
            text: (0..n_tokens).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" "),
        }
    }

    fn span(doc_id: &str, s: usize, e: usize) -> Chunk {
        Chunk {
            doc_id: doc_id.into(),
            chunk_id: String::new(),
            token_start: s,
            token_end: e,
            text: String::new(),
        }
    }

    #[test]
    fn thousand_tokens() {
        let d = doc(1000);
        let fine = chunk_text(&d, 250, &WhitespaceTokenizer).unwrap();
        assert_eq!(fine.len(), 4);
        let coarse = chunk_text(&d, 750, &WhitespaceTokenizer).unwrap();
        let spans: Vec<_> = coarse.chunks.iter().map(|c| (c.token_start, c.token_end)).collect();
        assert_eq!(spans, vec![(0, 750), (750, 1000)]);
        assert_eq!(coarse.chunks[1].chunk_id, "d:750:1");
    }

    #[test]
    fn empty_document_is_rejected() {
        let d = Document {
            id: "e".into(),
            text: "  \n ".into(),
        };
        assert!(chunk_text(&d, 10, &WhitespaceTokenizer).is_err());
        assert!(chunk_text(&doc(3), 0, &WhitespaceTokenizer).is_err());
        assert!(chunk_corpus(&[], 10, &WhitespaceTokenizer).is_err());
    }

    #[test]
    fn containment() {
        assert!(containment_check(&span("a", 0, 750), &span("a", 0, 250)));
        assert!(containment_check(&span("a", 250, 500), &span("a", 0, 750)));
        assert!(!containment_check(&span("a", 0, 250), &span("a", 250, 1000)));
        assert!(!containment_check(&span("a", 0, 750), &span("b", 0, 250)));
    }

    #[test]
    fn corpus_dir_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let docs = vec![
            Document {
                id: "b".into(),
                text: "x y".into(),
            },
            Document {
                id: "a".into(),
                text: "z".into(),
            },
        ];
        write_corpus_dir(dir.path(), &docs).unwrap();
        fs::write(dir.path().join(".hidden"), "q").unwrap();
        let read = read_corpus_dir(dir.path()).unwrap();
        assert_eq!(read.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert!(read_corpus_dir(&dir.path().join("missing")).is_err());
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let set = chunk_text(&doc(30), 7, &WhitespaceTokenizer).unwrap();
        let path = dir.path().join("c.jsonl");
        set.write_jsonl(&path).unwrap();
        assert_eq!(ChunkSet::read_jsonl(&path).unwrap(), set);
    }

    proptest! {
        #[test]
        fn chunks_tile_the_document(words in proptest::collection::vec("[a-z]{1,6}", 1..400), t in 1usize..120) {
            let d = Document { id: "p".into(), text: words.join("  \n") };
            let set = chunk_text(&d, t, &WhitespaceTokenizer).unwrap();
            let mut next = 0;
            let mut tokens: Vec<String> = Vec::new();
            for (i, c) in set.chunks.iter().enumerate() {
                prop_assert_eq!(c.token_start, next);
                if i + 1 < set.len() {
                    prop_assert_eq!(c.token_end - c.token_start, t);
                }
                next = c.token_end;
                tokens.extend(c.text.split_whitespace().map(str::to_owned));
            }
            prop_assert_eq!(next, words.len());
            prop_assert_eq!(tokens, words);
        }
    }
}
