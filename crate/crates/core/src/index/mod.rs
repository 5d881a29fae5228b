//! Semantic search over ontology entities and question-driven selection of
//! the sub-ontology used to ground a prompt.

mod embed;
mod render;
mod store;
mod subonto;
mod terms;

pub(crate) use embed::fnv1a;
pub use embed::{dot, normalize, word_tokens, DeterministicHashEmbedder, Embedder, EmbedderError, RemoteEmbedder};
pub use render::{render_entity, EntityKind, EntityRendering, RenderConfig, UnknownEntityError};
pub use store::{build_index, knn_search, IndexConfig, IndexEntry, IndexError, SearchFilter, SearchHit, SemanticIndex};
pub use subonto::{expand, seed_scores, select_sub_ontology, shortest_path, Budget, SearchError, SubOntology};
pub use terms::{extract_terms, is_stopword};
