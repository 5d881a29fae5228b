use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::embed::Embedder;
use super::store::{IndexError, SearchFilter, SemanticIndex};
use super::terms::extract_terms;
use crate::ontology::{EntityRef, Ontology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub max_classes: usize,
    /// Longest admissible path, in edges.
    pub max_path_len: usize,
    pub seed_k: usize,
    pub min_sim: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_classes: 12, max_path_len: 4, seed_k: 3, min_sim: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubOntology {
    /// Selected class ids, sorted.
    pub classes: Vec<String>,
    pub seed_classes: Vec<String>,
    pub included_paths: Vec<Vec<String>>,
    pub scores: BTreeMap<String, f64>,
    pub terms: Vec<String>,
}

impl SubOntology {
    /// The selected classes with their properties; object properties leading
    /// outside the selection are dropped.
    pub fn ontology(&self, onto: &Ontology) -> Ontology {
        onto.restrict(self.classes.iter().map(String::as_str))
    }

    /// Every entity of the selected fragment, ready for grounding.
    pub fn entity_refs(&self, onto: &Ontology) -> Vec<EntityRef> {
        self.ontology(onto).classes.values().flat_map(EntityRef::class_with_properties).collect()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.classes.iter().any(|c| c == id)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("no ontology entity is similar enough to the question (terms: {})", .terms.join(", "))]
    NoSeed { terms: Vec<String> },
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Best similarity per class over the top `seed_k` hits of every term. A
/// property hit counts for its owning class.
pub fn seed_scores(
    index: &SemanticIndex,
    embedder: &dyn Embedder,
    onto: &Ontology,
    terms: &[String],
    budget: &Budget,
) -> Result<BTreeMap<String, f64>, IndexError> {
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    if terms.is_empty() {
        return Ok(scores);
    }
    let vectors = embedder.embed(terms)?;
    for v in vectors {
        for hit in index.search_vector(&v, budget.seed_k.max(1), &SearchFilter::default())? {
            if hit.similarity < budget.min_sim {
                continue;
            }
            let class = hit.entity_id.split_once('.').map(|(c, _)| c).unwrap_or(&hit.entity_id);
            if !onto.classes.contains_key(class) {
                continue;
            }
            let best = scores.entry(class.to_string()).or_insert(f64::NEG_INFINITY);
            *best = best.max(hit.similarity);
        }
    }
    Ok(scores)
}

/// Shortest undirected path from `a` to `b`; neighbors are visited in id
/// order so the result is deterministic.
pub fn shortest_path(adj: &BTreeMap<&str, Vec<&str>>, a: &str, b: &str) -> Option<Vec<String>> {
    if !adj.contains_key(a) || !adj.contains_key(b) {
        return None;
    }
    let mut prev: BTreeMap<&str, &str> = BTreeMap::new();
    let mut seen: BTreeSet<&str> = BTreeSet::from([a]);
    let mut queue = VecDeque::from([a]);
    while let Some(cur) = queue.pop_front() {
        if cur == b {
            let mut path = vec![b.to_string()];
            let mut at = b;
            while let Some(p) = prev.get(at) {
                path.push(p.to_string());
                at = p;
            }
            path.reverse();
            return Some(path);
        }
        for &n in &adj[cur] {
            if seen.insert(n) {
                prev.insert(n, cur);
                queue.push_back(n);
            }
        }
    }
    None
}

/// Grows the seed set along shortest seed-to-seed paths. Pairs are taken by
/// descending min(score), ties by pair id. Unreachable pairs are skipped; the
/// first pair whose path is too long or would overflow the class budget ends
/// the expansion, which keeps the result monotone in both limits.
pub fn expand(onto: &Ontology, scores: &BTreeMap<String, f64>, budget: &Budget) -> SubOntology {
    let mut ranked: Vec<(&String, f64)> = scores.iter().map(|(k, v)| (k, *v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(budget.max_classes);
    let seeds: BTreeMap<&str, f64> = ranked.iter().map(|(k, v)| (k.as_str(), *v)).collect();

    let mut pairs: Vec<(f64, &str, &str)> = Vec::new();
    let ids: Vec<&str> = seeds.keys().copied().collect();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            pairs.push((seeds[a].min(seeds[b]), a, b));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then_with(|| (x.1, x.2).cmp(&(y.1, y.2))));

    let adj = onto.adjacency();
    let mut classes: BTreeSet<String> = ids.iter().map(|s| s.to_string()).collect();
    let mut paths = Vec::new();
    for (_, a, b) in pairs {
        let Some(path) = shortest_path(&adj, a, b) else { continue };
        if path.len() - 1 > budget.max_path_len {
            break;
        }
        let fresh = path.iter().filter(|c| !classes.contains(*c)).count();
        if classes.len() + fresh > budget.max_classes {
            break;
        }
        classes.extend(path.iter().cloned());
        paths.push(path);
    }

    SubOntology {
        classes: classes.into_iter().collect(),
        seed_classes: ids.iter().map(|s| s.to_string()).collect(),
        included_paths: paths,
        scores: seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        terms: Vec::new(),
    }
}

pub fn select_sub_ontology(
    index: &SemanticIndex,
    embedder: &dyn Embedder,
    onto: &Ontology,
    question: &str,
    budget: &Budget,
) -> Result<SubOntology, SearchError> {
    let terms = extract_terms(question);
    let scores = seed_scores(index, embedder, onto, &terms, budget)?;
    if scores.is_empty() {
        return Err(SearchError::NoSeed { terms });
    }
    let mut sub = expand(onto, &scores, budget);
    sub.terms = terms;
    Ok(sub)
}
