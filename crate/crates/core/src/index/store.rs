use std::cmp::Ordering;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embed::{dot, Embedder, EmbedderError};
use super::render::{render_entity, EntityKind, EntityRendering, RenderConfig};
use crate::ontology::{EntityRef, Ontology};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[derive(Default)]
pub struct IndexConfig {
    pub render: RenderConfig,
    /// Also index data and object properties, not only classes.
    pub index_properties: bool,
    pub source_id: String,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub rendering: EntityRendering,
    pub vector: Vec<f64>,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SemanticIndex {
    pub embedder_id: String,
    pub dimension: usize,
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchFilter {
    pub kind: Option<EntityKind>,
    pub source_id: Option<String>,
}

impl SearchFilter {
    pub fn classes() -> Self {
        Self { kind: Some(EntityKind::Class), source_id: None }
    }

    fn admits(&self, e: &IndexEntry) -> bool {
        self.kind.is_none_or(|k| k == e.rendering.kind) && self.source_id.as_ref().is_none_or(|s| s == &e.source_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub entity_id: String,
    pub kind: EntityKind,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("embedding {entity} failed: {source}")]
    Embed { entity: String, source: EmbedderError },
    #[error(transparent)]
    Embedder(#[from] EmbedderError),
    #[error("the index has no entries matching the filter")]
    EmptyIndex,
    #[error("query vector has dimension {got}, index has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("index file {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("index file {path}: {message}")]
    Io { path: String, message: String },
}

/// One entry per class, then (optionally) per data and object property, in
/// class id order.
pub fn build_index(onto: &Ontology, embedder: &dyn Embedder, cfg: &IndexConfig) -> Result<SemanticIndex, IndexError> {
    let mut refs = Vec::new();
    for class in onto.classes.values() {
        if cfg.index_properties {
            refs.extend(EntityRef::class_with_properties(class));
        } else {
            refs.push(EntityRef::class(&class.id));
        }
    }
    let renderings: Vec<EntityRendering> =
        refs.iter().map(|r| render_entity(onto, r, &cfg.render).expect("refs come from the ontology")).collect();
    let texts: Vec<String> = renderings.iter().map(|r| r.text.clone()).collect();
    let vectors = if texts.is_empty() {
        Vec::new()
    } else {
        embedder.embed(&texts).map_err(|source| IndexError::Embed {
            entity: renderings.first().map(|r| r.entity_id.clone()).unwrap_or_default(),
            source,
        })?
    };
    if vectors.len() != renderings.len() {
        return Err(IndexError::Embedder(EmbedderError(format!(
            "expected {} vectors, got {}",
            renderings.len(),
            vectors.len()
        ))));
    }
    let dimension = embedder.dimension();
    let mut entries = Vec::with_capacity(renderings.len());
    for (rendering, vector) in renderings.into_iter().zip(vectors) {
        if vector.len() != dimension {
            return Err(IndexError::Embed {
                entity: rendering.entity_id,
                source: EmbedderError(format!("expected dimension {dimension}, got {}", vector.len())),
            });
        }
        entries.push(IndexEntry { rendering, vector, source_id: cfg.source_id.clone() });
    }
    Ok(SemanticIndex { embedder_id: embedder.id(), dimension, entries })
}

fn rank(a: &SearchHit, b: &SearchHit) -> Ordering {
    b.similarity.total_cmp(&a.similarity).then_with(|| a.entity_id.cmp(&b.entity_id))
}

impl SemanticIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact top-k by cosine similarity, ties broken by ascending entity id.
    pub fn search_vector(&self, query: &[f64], k: usize, filter: &SearchFilter) -> Result<Vec<SearchHit>, IndexError> {
        if query.len() != self.dimension {
            return Err(IndexError::Dimension { expected: self.dimension, got: query.len() });
        }
        let mut hits: Vec<SearchHit> = self
            .entries
            .iter()
            .filter(|e| filter.admits(e))
            .map(|e| SearchHit {
                entity_id: e.rendering.entity_id.clone(),
                kind: e.rendering.kind,
                similarity: dot(&e.vector, query).clamp(-1.0, 1.0),
            })
            .collect();
        if hits.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        let k = k.min(hits.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        if k < hits.len() {
            hits.select_nth_unstable_by(k - 1, rank);
            hits.truncate(k);
        }
        hits.sort_by(rank);
        Ok(hits)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let header = serde_json::json!({
            "embedder_id": self.embedder_id,
            "dimension": self.dimension,
            "count": self.entries.len(),
        });
        writeln!(w, "{header}")?;
        for e in &self.entries {
            writeln!(w, "{}", serde_json::to_string(e).expect("entries serialize"))?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_from(r: impl BufRead, path: &str) -> Result<Self, IndexError> {
        let corrupt = |message: String| IndexError::Corrupt { path: path.to_string(), message };
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| corrupt("missing header".into()))?
            .map_err(|e| IndexError::Io { path: path.to_string(), message: e.to_string() })?;
        #[derive(Deserialize)]
        struct Header {
            embedder_id: String,
            dimension: usize,
            count: usize,
        }
        let h: Header = serde_json::from_str(&header).map_err(|e| corrupt(format!("bad header: {e}")))?;
        let mut entries = Vec::with_capacity(h.count);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| IndexError::Io { path: path.to_string(), message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let e: IndexEntry = serde_json::from_str(&line).map_err(|e| corrupt(format!("entry {}: {e}", i + 1)))?;
            if e.vector.len() != h.dimension {
                return Err(corrupt(format!("entry {} has dimension {}", i + 1, e.vector.len())));
            }
            entries.push(e);
        }
        if entries.len() != h.count {
            return Err(corrupt(format!("header says {} entries, found {}", h.count, entries.len())));
        }
        Ok(Self { embedder_id: h.embedder_id, dimension: h.dimension, entries })
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let f = std::fs::File::open(path)
            .map_err(|e| IndexError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::read_from(std::io::BufReader::new(f), &path.display().to_string())
    }
}

/// Embeds `query` and returns the top `k` entries.
pub fn knn_search(
    index: &SemanticIndex,
    embedder: &dyn Embedder,
    query: &str,
    k: usize,
    filter: &SearchFilter,
) -> Result<Vec<SearchHit>, IndexError> {
    let v = embedder.embed_one(query)?;
    index.search_vector(&v, k, filter)
}
