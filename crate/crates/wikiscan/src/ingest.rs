//! Corpus files: JSONL (one article object per line) and MediaWiki XML
//! export dumps.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use quick_xml::events::Event;
use serde::{Deserialize, Serialize};
use wikiscan_core::{ArticleMetadata, ArticleRecord, BotRegistry, MetaField, TopEditor};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    Jsonl,
    MediawikiXml,
}

impl CorpusFormat {
    /// `.xml` means a MediaWiki dump, anything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("xml") => CorpusFormat::MediawikiXml,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "mediawiki-xml" | "xml" => Ok(CorpusFormat::MediawikiXml),
            _ => Err(Error::config(format!("unknown corpus format `{s}` (jsonl, mediawiki-xml)"))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct RawEditor {
    #[serde(alias = "user")]
    username: String,
    #[serde(alias = "count", alias = "edits")]
    edit_count: u64,
}

#[derive(Debug, Default, Deserialize)]
struct RawMetadata {
    total_edits: Option<u64>,
    total_editors: Option<u64>,
    top_editors: Option<Vec<RawEditor>>,
    total_bytes: Option<u64>,
    total_characters: Option<u64>,
    total_words: Option<u64>,
    creator_name: Option<String>,
    creation_date: Option<String>,
    #[serde(default)]
    missing: BTreeSet<MetaField>,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    page_id: u64,
    title: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    metadata: Option<RawMetadata>,
}

/// Accepts `YYYY-MM-DD` or any timestamp that starts with one.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let head = s.trim().get(..10)?;
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

fn metadata_from_raw(raw: Option<RawMetadata>) -> std::result::Result<ArticleMetadata, String> {
    let Some(raw) = raw else {
        return Ok(ArticleMetadata { missing: MetaField::ALL.into_iter().collect(), ..Default::default() });
    };
    let mut m = ArticleMetadata { missing: raw.missing, ..Default::default() };
    macro_rules! take {
        ($field:ident, $tag:expr) => {
            match raw.$field {
                Some(v) => m.$field = v,
                None => {
                    m.missing.insert($tag);
                }
            }
        };
    }
    take!(total_edits, MetaField::TotalEdits);
    take!(total_editors, MetaField::TotalEditors);
    take!(total_bytes, MetaField::TotalBytes);
    take!(total_characters, MetaField::TotalCharacters);
    take!(total_words, MetaField::TotalWords);
    take!(creator_name, MetaField::CreatorName);
    match raw.top_editors {
        Some(list) => m.top_editors = list.into_iter().map(|e| TopEditor::new(e.username, e.edit_count)).collect(),
        None => {
            m.missing.insert(MetaField::TopEditors);
        }
    }
    match raw.creation_date {
        Some(s) => m.creation_date = parse_date(&s).ok_or_else(|| format!("bad creation_date `{s}`"))?,
        None => {
            m.missing.insert(MetaField::CreationDate);
        }
    }
    m.validate().map_err(|e| e.to_string())?;
    Ok(m)
}

fn parse_line(line: &str) -> std::result::Result<ArticleRecord, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.page_id == 0 {
        return Err("page_id must be >= 1".into());
    }
    if raw.title.trim().is_empty() {
        return Err("empty title".into());
    }
    Ok(ArticleRecord { page_id: raw.page_id, title: raw.title, text: raw.text, metadata: metadata_from_raw(raw.metadata)? })
}

/// Streaming JSONL reader. Bad lines come out as [`Error::Record`] and the
/// stream goes on.
pub struct JsonlReader<R> {
    path: PathBuf,
    lines: std::io::Lines<R>,
    line: u64,
    seen: HashSet<u64>,
}

impl<R: BufRead> JsonlReader<R> {
    pub fn new(path: impl Into<PathBuf>, reader: R) -> Self {
        JsonlReader { path: path.into(), lines: reader.lines(), line: 0, seen: HashSet::new() }
    }
}

impl<R: BufRead> Iterator for JsonlReader<R> {
    type Item = Result<ArticleRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            if line.trim().is_empty() {
                continue;
            }
            let rec = parse_line(&line).and_then(|r| {
                if self.seen.insert(r.page_id) {
                    Ok(r)
                } else {
                    Err(format!("duplicate page_id {}", r.page_id))
                }
            });
            return Some(rec.map_err(|message| Error::Record { path: self.path.clone(), line: self.line, message }));
        }
    }
}

#[derive(Default)]
struct PageBuilder {
    title: String,
    ns: Option<i64>,
    id: Option<u64>,
    text: String,
}

/// Reads `<page>` elements from a MediaWiki XML export, keeping namespace 0
/// pages with non-empty text. Metadata is not present in dumps, so every
/// field is flagged missing.
pub struct XmlReader<R> {
    path: PathBuf,
    reader: quick_xml::Reader<R>,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> XmlReader<R> {
    pub fn new(path: impl Into<PathBuf>, reader: R) -> Self {
        let mut reader = quick_xml::Reader::from_reader(reader);
        reader.config_mut().trim_text(false);
        XmlReader { path: path.into(), reader, buf: Vec::new(), done: false }
    }

    fn fail(&mut self, message: String) -> Error {
        self.done = true;
        Error::Record { path: self.path.clone(), line: self.reader.buffer_position(), message }
    }

    fn next_page(&mut self) -> Result<Option<PageBuilder>> {
        let mut page: Option<PageBuilder> = None;
        // Element path below <page>, e.g. ["revision", "text"].
        let mut stack: Vec<Vec<u8>> = Vec::new();
        loop {
            self.buf.clear();
            let ev = self.reader.read_event_into(&mut self.buf).map_err(|e| e.to_string());
            let ev = match ev {
                Ok(ev) => ev,
                Err(e) => return Err(self.fail(e)),
            };
            match ev {
                Event::Start(s) => {
                    let name = s.local_name().as_ref().to_vec();
                    if page.is_none() {
                        if name == b"page" {
                            page = Some(PageBuilder::default());
                        }
                    } else {
                        stack.push(name);
                    }
                }
                Event::End(e) => {
                    if page.is_some() {
                        if stack.is_empty() && e.local_name().as_ref() == b"page" {
                            return Ok(page);
                        }
                        stack.pop();
                    }
                }
                Event::Text(t) => {
                    if let Some(p) = page.as_mut() {
                        let s = match t.decode().map(|c| c.into_owned()) {
                            Ok(s) => s,
                            Err(e) => return Err(self.fail(e.to_string())),
                        };
                        push_text(p, &stack, &s);
                    }
                }
                Event::GeneralRef(r) => {
                    if let Some(p) = page.as_mut() {
                        let name = String::from_utf8_lossy(r.as_ref()).into_owned();
                        let resolved = match name.as_str() {
                            "amp" => "&".to_string(),
                            "lt" => "<".to_string(),
                            "gt" => ">".to_string(),
                            "quot" => "\"".to_string(),
                            "apos" => "'".to_string(),
                            n => match r.resolve_char_ref() {
                                Ok(Some(c)) => c.to_string(),
                                _ => format!("&{n};"),
                            },
                        };
                        push_text(p, &stack, &resolved);
                    }
                }
                Event::CData(c) => {
                    if let Some(p) = page.as_mut() {
                        push_text(p, &stack, &String::from_utf8_lossy(&c));
                    }
                }
                Event::Eof => {
                    if page.is_some() {
                        return Err(self.fail("unexpected end of file inside <page>".into()));
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }
}

fn push_text(p: &mut PageBuilder, stack: &[Vec<u8>], s: &str) {
    match stack {
        [t] if t == b"title" => p.title.push_str(s),
        [t] if t == b"ns" => p.ns = s.trim().parse().ok().or(p.ns),
        [t] if t == b"id" => p.id = s.trim().parse().ok().or(p.id),
        [r, t] if r == b"revision" && t == b"text" => p.text.push_str(s),
        _ => {}
    }
}

impl<R: BufRead> Iterator for XmlReader<R> {
    type Item = Result<ArticleRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.next_page() {
                Err(e) => return Some(Err(e)),
                Ok(None) => self.done = true,
                Ok(Some(p)) => {
                    if p.ns != Some(0) || p.text.trim().is_empty() {
                        continue;
                    }
                    let Some(page_id) = p.id.filter(|&i| i > 0) else {
                        return Some(Err(self.fail_soft("main-namespace page without an id")));
                    };
                    return Some(Ok(ArticleRecord {
                        page_id,
                        title: p.title,
                        text: p.text,
                        metadata: ArticleMetadata { missing: MetaField::ALL.into_iter().collect(), ..Default::default() },
                    }));
                }
            }
        }
        None
    }
}

impl<R> XmlReader<R> {
    fn fail_soft(&self, message: &str) -> Error {
        Error::Record { path: self.path.clone(), line: self.reader.buffer_position(), message: message.into() }
    }
}

pub type CorpusStream = Box<dyn Iterator<Item = Result<ArticleRecord>>>;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Opens a corpus for streaming. Only an unreadable file is fatal here.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<CorpusStream> {
    let r = open(path)?;
    Ok(match format {
        CorpusFormat::Jsonl => Box::new(JsonlReader::new(path, r)),
        CorpusFormat::MediawikiXml => Box::new(XmlReader::new(path, r)),
    })
}

/// Loaded records plus the per-record errors met on the way.
pub struct Loaded {
    pub records: Vec<ArticleRecord>,
    pub errors: Vec<Error>,
}

pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Loaded> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for r in load_corpus(path, format)? {
        match r {
            Ok(rec) => records.push(rec),
            Err(e @ Error::Io { .. }) => return Err(e),
            Err(e) => errors.push(e),
        }
    }
    Ok(Loaded { records, errors })
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a JSONL file of any deserializable type, failing on the first bad
/// line.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.into(),
            line: i as u64 + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn load_bot_registry(path: &Path) -> Result<BotRegistry> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BotRegistry::parse(&text).map_err(|e| Error::Record { path: path.into(), line: 1, message: e.to_string() })
}
