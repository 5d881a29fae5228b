//! Versioned, tenant-scoped storage of data sources and their artifacts.
//!
//! Layout under the catalog root:
//!
//! ```text
//! catalog.manifest                 JSON list of source records
//! sources/<id>/v<N>/ontology.onto
//! sources/<id>/v<N>/bindings.bind
//! sources/<id>/v<N>/schema.sql
//! sources/<id>/v<N>/index.jsonl    (optional)
//! ```
//!
//! A version directory is assembled under a temporary name and renamed into
//! place before the manifest (itself replaced by rename) mentions it, so an
//! interrupted publish never disturbs the previous latest version.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::ConnectionDescriptor;
use crate::index::SemanticIndex;
use crate::ontology::{deserialize_bindings, deserialize_ontology, serialize_bindings, serialize_ontology, BindingSet, Ontology};
use crate::physical::{parse_ddl, PhysicalModel};

pub const MANIFEST: &str = "catalog.manifest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionEntry {
    pub version: u32,
    pub ontology_ref: String,
    pub bindings_ref: String,
    pub schema_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_ref: Option<String>,
    pub created_at: DateTime<Utc>,
    /// Artifact path -> FNV-1a digest of its bytes, checked on resolve.
    pub checksums: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSourceRecord {
    pub id: String,
    pub name: String,
    pub connection: Option<ConnectionDescriptor>,
    pub tenant: String,
    pub collection: String,
    pub versions: Vec<VersionEntry>,
    pub created_at: DateTime<Utc>,
}

impl DataSourceRecord {
    pub fn latest(&self) -> Option<&VersionEntry> {
        self.versions.last()
    }

    pub fn version(&self, v: u32) -> Option<&VersionEntry> {
        self.versions.iter().find(|e| e.version == v)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    records: Vec<DataSourceRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("a source named {name:?} already exists for tenant {tenant:?}")]
    DuplicateName { tenant: String, name: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("storage error: {0}")]
    Storage(String),
    #[error("corrupt artifact {path}: {message}")]
    Corrupt { path: String, message: String },
}

fn storage(context: impl std::fmt::Display) -> impl FnOnce(std::io::Error) -> CatalogError {
    move |e| CatalogError::Storage(format!("{context}: {e}"))
}

/// Everything published as one version.
#[derive(Debug, Clone, Copy)]
pub struct Artifacts<'a> {
    pub ontology: &'a Ontology,
    pub bindings: &'a BindingSet,
    pub physical: &'a PhysicalModel,
    pub index: Option<&'a SemanticIndex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub record: DataSourceRecord,
    pub version: VersionEntry,
    pub ontology: Ontology,
    pub bindings: BindingSet,
    pub physical: PhysicalModel,
    pub index: Option<SemanticIndex>,
}

pub struct Catalog {
    root: PathBuf,
    manifest_lock: Mutex<()>,
}

fn digest(bytes: &[u8]) -> String {
    format!("{:016x}", crate::index::fnv1a(bytes))
}

/// Writes `bytes` to a sibling temp file, syncs, then renames over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CatalogError> {
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    let mut f = File::create(&tmp).map_err(storage(tmp.display()))?;
    f.write_all(bytes).map_err(storage(tmp.display()))?;
    f.sync_all().map_err(storage(tmp.display()))?;
    fs::rename(&tmp, path).map_err(storage(path.display()))
}

/// Exclusive advisory lock held until dropped.
struct FileLock(File);

impl FileLock {
    fn acquire(path: &Path) -> Result<Self, CatalogError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(storage(dir.display()))?;
        }
        let f = File::options().create(true).truncate(false).write(true).open(path).map_err(storage(path.display()))?;
        f.lock().map_err(storage(path.display()))?;
        Ok(Self(f))
    }
}

impl Drop for FileLock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

impl Catalog {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CatalogError> {
        let root = root.into();
        fs::create_dir_all(root.join("sources")).map_err(storage(root.display()))?;
        Ok(Self { root, manifest_lock: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn read_manifest(&self) -> Result<Manifest, CatalogError> {
        let path = self.root.join(MANIFEST);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| CatalogError::Corrupt { path: path.display().to_string(), message: e.to_string() }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(e) => Err(CatalogError::Storage(format!("{}: {e}", path.display()))),
        }
    }

    /// Read-modify-write of the manifest under both the in-process and the
    /// on-disk lock.
    fn update_manifest<T>(&self, f: impl FnOnce(&mut Manifest) -> Result<T, CatalogError>) -> Result<T, CatalogError> {
        let _guard = self.manifest_lock.lock().unwrap_or_else(|p| p.into_inner());
        let _lock = FileLock::acquire(&self.root.join(".manifest.lock"))?;
        let mut manifest = self.read_manifest()?;
        let out = f(&mut manifest)?;
        let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.root.join(MANIFEST), &bytes)?;
        Ok(out)
    }

    pub fn register_source(
        &self,
        name: &str,
        connection: Option<ConnectionDescriptor>,
        tenant: &str,
        collection: &str,
    ) -> Result<DataSourceRecord, CatalogError> {
        self.update_manifest(|m| {
            if m.records.iter().any(|r| r.tenant == tenant && r.name == name) {
                return Err(CatalogError::DuplicateName { tenant: tenant.into(), name: name.into() });
            }
            let record = DataSourceRecord {
                id: uuid::Uuid::new_v4().to_string(),
                name: name.into(),
                connection,
                tenant: tenant.into(),
                collection: collection.into(),
                versions: Vec::new(),
                created_at: Utc::now(),
            };
            m.records.push(record.clone());
            Ok(record)
        })
    }

    pub fn list_sources(&self, tenant: &str, collection: Option<&str>) -> Result<Vec<DataSourceRecord>, CatalogError> {
        Ok(self
            .read_manifest()?
            .records
            .into_iter()
            .filter(|r| r.tenant == tenant && collection.is_none_or(|c| r.collection == c))
            .collect())
    }

    /// A record visible to `tenant`, by id or by name.
    pub fn find(&self, tenant: &str, id_or_name: &str) -> Result<DataSourceRecord, CatalogError> {
        self.read_manifest()?
            .records
            .into_iter()
            .find(|r| r.tenant == tenant && (r.id == id_or_name || r.name == id_or_name))
            .ok_or_else(|| CatalogError::NotFound(format!("source {id_or_name}")))
    }

    pub fn publish_version(&self, tenant: &str, id: &str, artifacts: Artifacts<'_>) -> Result<VersionEntry, CatalogError> {
        let record = self.find(tenant, id)?;
        let id = record.id.as_str();
        let source_dir = self.root.join("sources").join(id);
        let _lock = FileLock::acquire(&source_dir.join(".lock"))?;

        // Re-read under the source lock: another writer may have published.
        let record = self.find(tenant, id)?;
        let version = record.latest().map_or(1, |v| v.version + 1);
        let final_dir = source_dir.join(format!("v{version}"));
        if final_dir.exists() {
            // Left behind by a publish that died before the manifest update.
            let aside = source_dir.join(format!("v{version}.orphan-{}", uuid::Uuid::new_v4().simple()));
            fs::rename(&final_dir, &aside).map_err(storage(final_dir.display()))?;
        }
        let tmp_dir = source_dir.join(format!(".v{version}.tmp-{}", uuid::Uuid::new_v4().simple()));
        fs::create_dir_all(&tmp_dir).map_err(storage(tmp_dir.display()))?;

        let rel = |file: &str| format!("sources/{id}/v{version}/{file}");
        let mut files: Vec<(&str, Vec<u8>)> = vec![
            ("ontology.onto", serialize_ontology(artifacts.ontology).into_bytes()),
            ("bindings.bind", serialize_bindings(artifacts.bindings).into_bytes()),
            ("schema.sql", artifacts.physical.to_ddl().into_bytes()),
        ];
        if let Some(index) = artifacts.index {
            files.push(("index.jsonl", index.to_bytes()));
        }
        let mut checksums = BTreeMap::new();
        for (name, bytes) in &files {
            let path = tmp_dir.join(name);
            let mut f = File::create(&path).map_err(storage(path.display()))?;
            f.write_all(bytes).map_err(storage(path.display()))?;
            f.sync_all().map_err(storage(path.display()))?;
            checksums.insert(rel(name), digest(bytes));
        }
        fs::rename(&tmp_dir, &final_dir).map_err(storage(final_dir.display()))?;

        let entry = VersionEntry {
            version,
            ontology_ref: rel("ontology.onto"),
            bindings_ref: rel("bindings.bind"),
            schema_ref: rel("schema.sql"),
            index_ref: artifacts.index.map(|_| rel("index.jsonl")),
            created_at: Utc::now(),
            checksums,
        };
        self.update_manifest(|m| {
            let r = m
                .records
                .iter_mut()
                .find(|r| r.id == id)
                .ok_or_else(|| CatalogError::NotFound(format!("source {id}")))?;
            r.versions.push(entry.clone());
            Ok(())
        })?;
        Ok(entry)
    }

    fn read_artifact(&self, entry: &VersionEntry, rel: &str) -> Result<String, CatalogError> {
        let path = self.root.join(rel);
        let shown = path.display().to_string();
        let bytes = fs::read(&path).map_err(|e| CatalogError::Corrupt { path: shown.clone(), message: e.to_string() })?;
        if let Some(expected) = entry.checksums.get(rel) {
            if &digest(&bytes) != expected {
                return Err(CatalogError::Corrupt { path: shown, message: "checksum mismatch".into() });
            }
        }
        String::from_utf8(bytes).map_err(|e| CatalogError::Corrupt { path: shown, message: e.to_string() })
    }

    /// Loads a version (latest when `version` is `None`).
    pub fn resolve(&self, tenant: &str, id: &str, version: Option<u32>) -> Result<Resolved, CatalogError> {
        let record = self.find(tenant, id)?;
        let entry = match version {
            Some(v) => record.version(v),
            None => record.latest(),
        }
        .cloned()
        .ok_or_else(|| CatalogError::NotFound(format!("version {} of source {id}", version.map_or("latest".into(), |v| v.to_string()))))?;

        let corrupt = |rel: &str, message: String| CatalogError::Corrupt {
            path: self.root.join(rel).display().to_string(),
            message,
        };
        let ontology = deserialize_ontology(&self.read_artifact(&entry, &entry.ontology_ref)?)
            .map_err(|e| corrupt(&entry.ontology_ref, e.to_string()))?;
        let bindings = deserialize_bindings(&self.read_artifact(&entry, &entry.bindings_ref)?)
            .map_err(|e| corrupt(&entry.bindings_ref, e.to_string()))?;
        let mut physical = parse_ddl(&self.read_artifact(&entry, &entry.schema_ref)?)
            .map_err(|e| corrupt(&entry.schema_ref, e.to_string()))?;
        physical.source_id = record.id.clone();
        let index = match &entry.index_ref {
            None => None,
            Some(rel) => {
                let text = self.read_artifact(&entry, rel)?;
                Some(SemanticIndex::read_from(text.as_bytes(), rel).map_err(|e| corrupt(rel, e.to_string()))?)
            }
        };
        Ok(Resolved { record, version: entry, ontology, bindings, physical, index })
    }
}
