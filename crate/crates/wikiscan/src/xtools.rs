//! XTools `articleinfo` client: live HTTP with an on-disk cache, or pure
//! fixture-directory lookups.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS};
use serde_json::Value;
use tokio::sync::Semaphore;
use wikiscan_core::{ArticleMetadata, MetaField, TopEditor};

use crate::error::{Error, Result};
use crate::ingest::parse_date;

/// Characters escaped in fixture file names; everything else, Arabic
/// script included, is kept as is.
const FILE_UNSAFE: &AsciiSet = &CONTROLS.add(b'/').add(b'\\').add(b'%').add(b':').add(b'*').add(b'?').add(b'"').add(b'<').add(b'>').add(b'|');

/// Path segment escaping for URLs.
const SEGMENT: &AsciiSet = &CONTROLS
    .add(b' ')
    .add(b'"')
    .add(b'#')
    .add(b'%')
    .add(b'/')
    .add(b'<')
    .add(b'>')
    .add(b'?')
    .add(b'`')
    .add(b'{')
    .add(b'}')
    .add(b'[')
    .add(b']')
    .add(b'^')
    .add(b'|')
    .add(b'\\');

/// MediaWiki page-name form: spaces become underscores.
pub fn wiki_key(title: &str) -> String {
    title.trim().replace(' ', "_")
}

pub fn encode_segment(title: &str) -> String {
    utf8_percent_encode(&wiki_key(title), SEGMENT).to_string()
}

pub fn fixture_path(dir: &Path, title: &str) -> PathBuf {
    dir.join(format!("{}.json", utf8_percent_encode(&wiki_key(title), FILE_UNSAFE)))
}

/// `{base}/wiki/{title}` with the title percent-encoded.
pub fn page_url(wiki_base: &str, title: &str) -> String {
    format!("{}/wiki/{}", wiki_base.trim_end_matches('/'), encode_segment(title))
}

fn number(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64().or_else(|| n.as_f64().filter(|f| *f >= 0.0 && f.fract() == 0.0).map(|f| f as u64)),
        Value::String(s) => s.trim().replace(',', "").parse().ok(),
        _ => None,
    }
}

fn pick<'a>(obj: &'a serde_json::Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| obj.get(*k)).filter(|v| !v.is_null())
}

/// Maps an articleinfo document onto [`ArticleMetadata`]. Edits, editors,
/// creator and creation date are required; top editors and the three size
/// fields are flagged missing when absent.
pub fn parse_articleinfo(title: &str, body: &str) -> Result<ArticleMetadata> {
    let doc: Value = serde_json::from_str(body).map_err(|e| Error::Fetch { title: title.into(), message: format!("invalid JSON: {e}") })?;
    let obj = doc.as_object().ok_or(Error::Schema { title: title.into(), field: "<object>" })?;
    let schema = |field: &'static str| Error::Schema { title: title.into(), field };
    let required_num = |keys: &[&str], field: &'static str| pick(obj, keys).and_then(number).ok_or_else(|| schema(field));

    let mut m = ArticleMetadata {
        total_edits: required_num(&["revisions", "total_edits"], "revisions")?,
        total_editors: required_num(&["editors", "total_editors"], "editors")?,
        creator_name: pick(obj, &["author", "creator", "creator_name"])
            .and_then(Value::as_str)
            .ok_or_else(|| schema("author"))?
            .to_string(),
        creation_date: pick(obj, &["created_at", "creation_date"])
            .and_then(Value::as_str)
            .and_then(parse_date)
            .ok_or_else(|| schema("created_at"))?,
        ..Default::default()
    };
    let mut optional = |keys: &[&str], field: MetaField| -> Result<u64> {
        match pick(obj, keys) {
            None => {
                m.missing.insert(field);
                Ok(0)
            }
            Some(v) => number(v).ok_or_else(|| schema(field.name())),
        }
    };
    let bytes = optional(&["bytes", "length", "total_bytes"], MetaField::TotalBytes)?;
    let chars = optional(&["characters", "chars", "total_characters"], MetaField::TotalCharacters)?;
    let words = optional(&["words", "total_words"], MetaField::TotalWords)?;
    m.total_bytes = bytes;
    m.total_characters = chars;
    m.total_words = words;
    match pick(obj, &["top_editors", "topeditors"]) {
        None => {
            m.missing.insert(MetaField::TopEditors);
        }
        Some(Value::Array(list)) => {
            for e in list {
                let user = e
                    .get("username")
                    .or_else(|| e.get("user"))
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema("top_editors.username"))?;
                let count = e
                    .get("count")
                    .or_else(|| e.get("edit_count"))
                    .or_else(|| e.get("edits"))
                    .and_then(number)
                    .ok_or_else(|| schema("top_editors.count"))?;
                m.top_editors.push(TopEditor::new(user, count));
            }
        }
        Some(_) => return Err(schema("top_editors")),
    }
    Ok(m)
}

/// Fixture-mode lookup: pure, no network.
pub fn fetch_fixture(dir: &Path, title: &str) -> Result<ArticleMetadata> {
    let path = fixture_path(dir, title);
    let body = std::fs::read_to_string(&path).map_err(|e| Error::Fetch {
        title: title.into(),
        message: format!("no fixture at {}: {e}", path.display()),
    })?;
    parse_articleinfo(title, &body)
}

#[derive(Debug, Clone)]
pub struct LiveClient {
    pub base_url: String,
    pub project: String,
    pub cache_dir: Option<PathBuf>,
    client: reqwest::Client,
    limit: Arc<Semaphore>,
}

impl LiveClient {
    pub fn new(base_url: impl Into<String>, project: impl Into<String>, cache_dir: Option<PathBuf>, concurrency: usize) -> Result<Self> {
        let client = reqwest::Client::builder()
            .user_agent(concat!("wikiscan/", env!("CARGO_PKG_VERSION")))
            .timeout(std::time::Duration::from_secs(30))
            .build()
            .map_err(|e| Error::config(format!("HTTP client: {e}")))?;
        Ok(LiveClient {
            base_url: base_url.into(),
            project: project.into(),
            cache_dir,
            client,
            limit: Arc::new(Semaphore::new(concurrency.max(1))),
        })
    }

    pub fn url(&self, title: &str) -> String {
        format!("{}/api/page/articleinfo/{}/{}", self.base_url.trim_end_matches('/'), self.project, encode_segment(title))
    }

    pub async fn fetch(&self, title: &str) -> Result<ArticleMetadata> {
        let fetch_err = |message: String| Error::Fetch { title: title.into(), message };
        let _permit = self.limit.acquire().await.map_err(|e| fetch_err(e.to_string()))?;
        let resp = self.client.get(self.url(title)).send().await.map_err(|e| fetch_err(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(fetch_err(format!("HTTP {}", resp.status())));
        }
        let body = resp.text().await.map_err(|e| fetch_err(e.to_string()))?;
        let meta = parse_articleinfo(title, &body)?;
        if let Some(dir) = &self.cache_dir {
            cache_once(&fixture_path(dir, title), &body);
        }
        Ok(meta)
    }
}

/// Writes the response unless a cached copy already exists. Cache failures
/// are not fatal to the fetch.
fn cache_once(path: &Path, body: &str) {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    if let Ok(mut f) = std::fs::OpenOptions::new().write(true).create_new(true).open(path) {
        let _ = f.write_all(body.as_bytes());
    }
}

/// Where scan-time metadata comes from.
#[derive(Debug, Clone)]
pub enum MetadataSource {
    /// Metadata embedded in the loaded corpus.
    Corpus,
    FixtureDir(PathBuf),
    Live(LiveClient),
}

impl MetadataSource {
    pub fn is_network(&self) -> bool {
        matches!(self, MetadataSource::Live(_))
    }
}
