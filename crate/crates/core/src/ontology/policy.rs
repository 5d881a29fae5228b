//! Refinement policies: a condition selecting classes plus one action applied
//! to every selected class.
//!
//! Conditions are evaluated against the input ontology before any action
//! runs, so a policy never observes its own partial effects.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::RegexBuilder;
use serde::Serialize;

use super::model::{BindingSet, ClassBinding, Ontology, OntologyClass};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    /// Class id or label ends with `suffix` (case-insensitive). With
    /// `linked_stem`, the class must also be linked to the class named by the
    /// remaining stem, e.g. `FileProperties` linked to `File`.
    SuffixMatch { suffix: String, linked_stem: bool },
    RegexMatch(String),
    /// Matches classes whose id, or any of whose property names, is a key.
    RenameMap(BTreeMap<String, String>),
    /// Number of object-property edges touching the class, both directions.
    DegreeEquals(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    DeleteClass,
    /// `None` takes the new name from a rename-map condition.
    RenameClass(Option<String>),
    /// `None` renames every property listed in a rename-map condition.
    RenameProperty(Option<(String, String)>),
    MergeClasses(String),
    /// Explicit (new class id, property names) groups covering every property.
    PartitionClass(Vec<(String, Vec<String>)>),
    RemoveProperty(String),
    CollapseToReferencing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementPolicy {
    pub name: String,
    pub condition: Condition,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("policy {policy}: {first} and {second} would share one identifier")]
    Conflict { policy: String, first: String, second: String },
    #[error("policy {policy}: {message}")]
    Invalid { policy: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("policy #{index} failed: {source}")]
pub struct PolicySequenceError {
    pub index: usize,
    #[source]
    pub source: PolicyError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrailEntry {
    pub index: usize,
    pub policy: String,
    pub matched: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub ontology: Ontology,
    pub bindings: BindingSet,
    pub trail: Vec<TrailEntry>,
}

pub fn apply_policy(
    onto: &Ontology,
    bind: &BindingSet,
    policy: &RefinementPolicy,
) -> Result<(Ontology, BindingSet), PolicyError> {
    apply_policy_traced(onto, bind, policy).map(|(o, b, _)| (o, b))
}

/// Like [`apply_policy`], also returning the ids of the matched classes.
pub fn apply_policy_traced(
    onto: &Ontology,
    bind: &BindingSet,
    policy: &RefinementPolicy,
) -> Result<(Ontology, BindingSet, Vec<String>), PolicyError> {
    let mut matched = Vec::new();
    for class in onto.classes.values() {
        if condition_matches(&policy.condition, class, onto).map_err(|m| invalid(policy, m))? {
            matched.push(class.id.clone());
        }
    }
    let mut work = Work { onto: onto.clone(), bind: bind.clone(), policy };
    for id in &matched {
        if work.onto.classes.contains_key(id) {
            work.apply(id)?;
        }
    }
    Ok((work.onto, work.bind, matched))
}

pub fn apply_policies(
    onto: &Ontology,
    bind: &BindingSet,
    policies: &[RefinementPolicy],
) -> Result<Refinement, PolicySequenceError> {
    let mut out = Refinement { ontology: onto.clone(), bindings: bind.clone(), trail: Vec::new() };
    for (index, policy) in policies.iter().enumerate() {
        let (o, b, matched) = apply_policy_traced(&out.ontology, &out.bindings, policy)
            .map_err(|source| PolicySequenceError { index, source })?;
        out.ontology = o;
        out.bindings = b;
        out.trail.push(TrailEntry { index, policy: policy.name.clone(), matched });
    }
    Ok(out)
}

fn invalid(policy: &RefinementPolicy, message: impl Into<String>) -> PolicyError {
    PolicyError::Invalid { policy: policy.name.clone(), message: message.into() }
}

fn ends_with_ci(s: &str, suffix: &str) -> Option<usize> {
    let (s_l, suf_l) = (s.to_ascii_lowercase(), suffix.to_ascii_lowercase());
    (s_l.len() > suf_l.len() && s_l.ends_with(&suf_l)).then(|| s.len() - suffix.len())
}

fn condition_matches(cond: &Condition, class: &OntologyClass, onto: &Ontology) -> Result<bool, String> {
    Ok(match cond {
        Condition::SuffixMatch { suffix, linked_stem } => {
            let stem = ends_with_ci(&class.id, suffix)
                .map(|n| &class.id[..n])
                .or_else(|| ends_with_ci(&class.label, suffix).map(|n| &class.label[..n]));
            match stem {
                None => false,
                Some(_) if !linked_stem => true,
                Some(stem) => onto.linked_classes(&class.id).iter().any(|l| l.eq_ignore_ascii_case(stem)),
            }
        }
        Condition::RegexMatch(pattern) => {
            let re = RegexBuilder::new(pattern)
                .case_insensitive(true)
                .build()
                .map_err(|e| format!("invalid regex {pattern:?}: {e}"))?;
            re.is_match(&class.id) || re.is_match(&class.label)
        }
        Condition::RenameMap(map) => {
            let hit = |name: &str| map.keys().any(|k| k.eq_ignore_ascii_case(name));
            hit(&class.id) || class.property_names().any(hit)
        }
        Condition::DegreeEquals(n) => {
            let out = class.object_properties.len();
            let inbound = onto
                .classes
                .values()
                .filter(|c| c.id != class.id)
                .flat_map(|c| &c.object_properties)
                .filter(|op| op.target == class.id)
                .count();
            out + inbound == *n
        }
    })
}

struct Work<'p> {
    onto: Ontology,
    bind: BindingSet,
    policy: &'p RefinementPolicy,
}

impl Work<'_> {
    fn conflict(&self, first: impl Into<String>, second: impl Into<String>) -> PolicyError {
        PolicyError::Conflict { policy: self.policy.name.clone(), first: first.into(), second: second.into() }
    }

    fn invalid(&self, message: impl Into<String>) -> PolicyError {
        invalid(self.policy, message)
    }

    fn rename_map(&self) -> Option<&BTreeMap<String, String>> {
        match &self.policy.condition {
            Condition::RenameMap(m) => Some(m),
            _ => None,
        }
    }

    fn class_binding(&mut self, id: &str) -> &mut ClassBinding {
        self.bind.classes.entry(id.to_string()).or_insert_with(|| ClassBinding::new(""))
    }

    fn apply(&mut self, id: &str) -> Result<(), PolicyError> {
        match &self.policy.action {
            Action::DeleteClass => {
                self.delete_class(id);
                Ok(())
            }
            Action::RenameClass(Some(new)) => self.rename_class(id, new),
            Action::RenameClass(None) => {
                let map = self.rename_map().ok_or_else(|| self.invalid("rename_class without a name needs a rename-map condition"))?;
                match map.iter().find(|(k, _)| k.eq_ignore_ascii_case(id)) {
                    Some((_, new)) => self.rename_class(id, &new.clone()),
                    None => Ok(()),
                }
            }
            Action::RenameProperty(Some((old, new))) => self.rename_property(id, old, new),
            Action::RenameProperty(None) => {
                let map = self
                    .rename_map()
                    .ok_or_else(|| self.invalid("rename_property without names needs a rename-map condition"))?
                    .clone();
                for (old, new) in &map {
                    self.rename_property(id, old, new)?;
                }
                Ok(())
            }
            Action::MergeClasses(target) => self.merge(id, target),
            Action::PartitionClass(groups) => self.partition(id, groups),
            Action::RemoveProperty(name) => {
                self.remove_property(id, name);
                Ok(())
            }
            Action::CollapseToReferencing => self.collapse(id),
        }
    }

    fn delete_class(&mut self, id: &str) {
        self.onto.classes.remove(id);
        self.bind.classes.remove(id);
        let ids: Vec<String> = self.onto.classes.keys().cloned().collect();
        for x in ids {
            let class = self.onto.classes.get_mut(&x).expect("listed");
            let dropped: Vec<String> =
                class.object_properties.iter().filter(|op| op.target == id).map(|op| op.name.clone()).collect();
            class.object_properties.retain(|op| op.target != id);
            if let Some(b) = self.bind.classes.get_mut(&x) {
                b.objects.retain(|o| !dropped.contains(&o.property));
            }
        }
    }

    fn remove_property(&mut self, id: &str, name: &str) {
        let class = self.onto.classes.get_mut(id).expect("caller checked");
        class.data_properties.retain(|p| !p.name.eq_ignore_ascii_case(name));
        class.object_properties.retain(|p| !p.name.eq_ignore_ascii_case(name));
        let b = self.class_binding(id);
        b.properties.retain(|p| !p.property.eq_ignore_ascii_case(name));
        b.objects.retain(|p| !p.property.eq_ignore_ascii_case(name));
    }

    fn rename_property(&mut self, id: &str, old: &str, new: &str) -> Result<(), PolicyError> {
        let class = self.onto.classes.get_mut(id).expect("caller checked");
        let Some(current) = class.property_names().find(|n| n.eq_ignore_ascii_case(old)).map(str::to_string) else {
            return Ok(());
        };
        if current == new {
            return Ok(());
        }
        if !new.eq_ignore_ascii_case(&current) && class.has_property(new) {
            return Err(self.conflict(format!("{id}.{current}"), format!("{id}.{new}")));
        }
        for p in &mut class.data_properties {
            if p.name == current {
                p.name = new.to_string();
            }
        }
        for p in &mut class.object_properties {
            if p.name == current {
                p.name = new.to_string();
            }
        }
        let b = self.class_binding(id);
        for p in &mut b.properties {
            if p.property == current {
                p.property = new.to_string();
            }
        }
        for o in &mut b.objects {
            if o.property == current {
                o.property = new.to_string();
            }
        }
        Ok(())
    }

    /// Points every object property aimed at `old` to `new`, renaming the
    /// default `has_<old>` name along the way.
    fn retarget(&mut self, old: &str, new: &str) -> Result<(), PolicyError> {
        let ids: Vec<String> = self.onto.classes.keys().cloned().collect();
        let default_name = format!("has_{old}");
        for x in ids {
            let renames: Vec<String> = {
                let class = self.onto.classes.get_mut(&x).expect("listed");
                let mut renames = Vec::new();
                for op in &mut class.object_properties {
                    if op.target == old {
                        op.target = new.to_string();
                        if op.name == default_name {
                            renames.push(op.name.clone());
                        }
                    }
                }
                renames
            };
            for name in renames {
                self.rename_property(&x, &name, &format!("has_{new}"))?;
            }
        }
        Ok(())
    }

    fn rename_class(&mut self, id: &str, new: &str) -> Result<(), PolicyError> {
        if id == new {
            return Ok(());
        }
        if let Some(existing) = self.onto.classes.keys().find(|k| k.eq_ignore_ascii_case(new) && k.as_str() != id) {
            return Err(self.conflict(id, existing.clone()));
        }
        let mut class = self.onto.classes.remove(id).expect("caller checked");
        class.id = new.to_string();
        class.label = new.to_string();
        self.onto.insert(class);
        if let Some(b) = self.bind.classes.remove(id) {
            self.bind.classes.insert(new.to_string(), b);
        }
        self.retarget(id, new)
    }

    fn merge(&mut self, id: &str, target: &str) -> Result<(), PolicyError> {
        if id == target {
            return Ok(());
        }
        let Some(t) = self.onto.classes.get(target) else {
            return Err(self.invalid(format!("merge target {target} does not exist")));
        };
        let c = &self.onto.classes[id];
        if signature(c) != signature(t) {
            return Err(self.invalid(format!("merge requires identical property signatures ({id} vs {target})")));
        }
        self.onto.classes.remove(id);
        self.bind.classes.remove(id);
        self.retarget(id, target)
    }

    fn partition(&mut self, id: &str, groups: &[(String, Vec<String>)]) -> Result<(), PolicyError> {
        let class = self.onto.classes[id].clone();
        let binding = self.bind.classes.get(id).cloned().unwrap_or_else(|| ClassBinding::new(""));
        if groups.is_empty() {
            return Err(self.invalid("partition_class needs at least one group"));
        }
        let mut seen = BTreeSet::new();
        for (_, props) in groups {
            for p in props {
                if !class.has_property(p) {
                    return Err(self.invalid(format!("{id} has no property {p}")));
                }
                if !seen.insert(p.to_ascii_lowercase()) {
                    return Err(self.invalid(format!("property {p} appears in two groups")));
                }
            }
        }
        if let Some(missing) = class.property_names().find(|n| !seen.contains(&n.to_ascii_lowercase())) {
            return Err(self.invalid(format!("property {id}.{missing} is not assigned to a group")));
        }
        let mut new_ids: Vec<&str> = Vec::new();
        for (gid, _) in groups {
            let clash = self.onto.classes.keys().find(|k| k.eq_ignore_ascii_case(gid) && k.as_str() != id);
            if let Some(existing) = clash {
                return Err(self.conflict(gid.clone(), existing.clone()));
            }
            if let Some(prev) = new_ids.iter().find(|p| p.eq_ignore_ascii_case(gid)) {
                return Err(self.conflict(gid.clone(), prev.to_string()));
            }
            new_ids.push(gid);
        }

        self.onto.classes.remove(id);
        self.bind.classes.remove(id);
        for (gid, props) in groups {
            let in_group = |n: &str| props.iter().any(|p| p.eq_ignore_ascii_case(n));
            let mut part = OntologyClass::new(gid, gid);
            part.annotations = class.annotations.clone();
            part.data_properties = class.data_properties.iter().filter(|p| in_group(&p.name)).cloned().collect();
            part.object_properties = class.object_properties.iter().filter(|p| in_group(&p.name)).cloned().collect();
            let mut b = ClassBinding::new(&binding.table);
            b.joins = binding.joins.clone();
            b.properties = binding.properties.iter().filter(|p| in_group(&p.property)).cloned().collect();
            b.objects = binding.objects.iter().filter(|p| in_group(&p.property)).cloned().collect();
            self.onto.insert(part);
            self.bind.classes.insert(gid.clone(), b);
        }
        self.retarget(id, &groups[0].0)
    }

    /// Folds `id` into every class linked to it. Each linked class gains a join
    /// to the collapsed table and copies of its properties, bound to the
    /// original columns.
    fn collapse(&mut self, id: &str) -> Result<(), PolicyError> {
        let linked: Vec<String> = self.onto.linked_classes(id).into_iter().map(str::to_string).collect();
        if linked.is_empty() {
            return Err(self.invalid(format!("class {id} has no linked class to collapse into")));
        }
        let cc = self.onto.classes[id].clone();
        let cb = self.bind.classes.get(id).cloned().unwrap_or_else(|| ClassBinding::new(""));

        for x in &linked {
            let xc = self.onto.classes[x].clone();
            let inbound = xc.object_properties.iter().find(|op| op.target == id);
            let link = match inbound {
                Some(op) => self.bind.classes.get(x).and_then(|b| b.object(&op.name)).map(|o| o.join.clone()),
                None => cc
                    .object_properties
                    .iter()
                    .find(|op| op.target == *x)
                    .and_then(|op| cb.object(&op.name))
                    .map(|o| o.join.reversed()),
            };
            let link = link.ok_or_else(|| self.invalid(format!("no bound join between {x} and {id}")))?;

            let dropped: Vec<String> =
                xc.object_properties.iter().filter(|op| op.target == id).map(|op| op.name.clone()).collect();
            let mut xc = xc;
            xc.object_properties.retain(|op| op.target != id);
            let mut xb = self.bind.classes.get(x).cloned().unwrap_or_else(|| ClassBinding::new(""));
            xb.objects.retain(|o| !dropped.contains(&o.property));
            xb.joins.push(link.clone());
            xb.joins.extend(cb.joins.iter().cloned());

            for dp in &cc.data_properties {
                let Some(pb) = cb.property(&dp.name) else { continue };
                let mirrored = pb.table.eq_ignore_ascii_case(&link.to_table)
                    && link.to_columns.iter().position(|c| c.eq_ignore_ascii_case(&pb.column)).is_some_and(|i| {
                        let mirror = &link.from_columns[i];
                        xb.properties.iter().any(|p| {
                            p.table.eq_ignore_ascii_case(&link.from_table) && p.column.eq_ignore_ascii_case(mirror)
                        })
                    });
                if mirrored {
                    continue;
                }
                if xc.has_property(&dp.name) {
                    return Err(self.conflict(format!("{x}.{}", dp.name), format!("{id}.{}", dp.name)));
                }
                xc.data_properties.push(dp.clone());
                xb.properties.push(pb.clone());
            }
            for op in &cc.object_properties {
                if op.target == *x || op.target == id {
                    continue;
                }
                let Some(ob) = cb.object(&op.name) else { continue };
                if xc.has_property(&op.name) {
                    return Err(self.conflict(format!("{x}.{}", op.name), format!("{id}.{}", op.name)));
                }
                xc.object_properties.push(op.clone());
                xb.objects.push(ob.clone());
            }
            self.onto.insert(xc);
            self.bind.classes.insert(x.clone(), xb);
        }
        self.onto.classes.remove(id);
        self.bind.classes.remove(id);
        Ok(())
    }
}

fn signature(c: &OntologyClass) -> (BTreeSet<(String, String)>, BTreeSet<(String, String)>) {
    let data = c.data_properties.iter().map(|p| (p.name.to_ascii_lowercase(), p.sql_type.to_string())).collect();
    let objects = c.object_properties.iter().map(|p| (p.name.to_ascii_lowercase(), p.target.clone())).collect();
    (data, objects)
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::SuffixMatch { suffix, linked_stem: false } => write!(f, "suffix-match({suffix})"),
            Condition::SuffixMatch { suffix, linked_stem: true } => write!(f, "suffix-match({suffix}, linked)"),
            Condition::RegexMatch(p) => write!(f, "regex-match({p})"),
            Condition::RenameMap(m) => {
                let pairs: Vec<String> = m.iter().map(|(k, v)| format!("{k} => {v}")).collect();
                write!(f, "rename-map({})", pairs.join(", "))
            }
            Condition::DegreeEquals(n) => write!(f, "degree-equals({n})"),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::DeleteClass => f.write_str("delete_class"),
            Action::RenameClass(None) => f.write_str("rename_class"),
            Action::RenameClass(Some(n)) => write!(f, "rename_class({n})"),
            Action::RenameProperty(None) => f.write_str("rename_property"),
            Action::RenameProperty(Some((a, b))) => write!(f, "rename_property({a}, {b})"),
            Action::MergeClasses(t) => write!(f, "merge_classes({t})"),
            Action::PartitionClass(groups) => {
                let g: Vec<String> = groups.iter().map(|(id, ps)| format!("{id}: {}", ps.join(", "))).collect();
                write!(f, "partition_class({})", g.join("; "))
            }
            Action::RemoveProperty(n) => write!(f, "remove_property({n})"),
            Action::CollapseToReferencing => f.write_str("collapse_to_referencing"),
        }
    }
}

impl fmt::Display for RefinementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "name: {}\ncondition: {}\naction: {}", self.name, self.condition, self.action)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("policy file line {line}: {message}")]
pub struct PolicyParseError {
    pub line: usize,
    pub message: String,
}

/// Splits `head(args)` into `(head, Some(args))`, or `(text, None)`.
fn call(text: &str) -> Result<(String, Option<&str>), String> {
    let text = text.trim();
    match text.find('(') {
        None => Ok((text.replace('-', "_").to_ascii_lowercase(), None)),
        Some(open) => {
            let inner = text[open + 1..].strip_suffix(')').ok_or_else(|| format!("missing `)` in {text:?}"))?;
            Ok((text[..open].trim().replace('-', "_").to_ascii_lowercase(), Some(inner.trim())))
        }
    }
}

fn split_args(s: &str) -> Vec<String> {
    s.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect()
}

pub fn parse_condition(text: &str) -> Result<Condition, String> {
    let (head, args) = call(text)?;
    let args = args.ok_or_else(|| format!("condition {head} needs arguments"))?;
    match head.as_str() {
        "suffix_match" => {
            let parts = split_args(args);
            match parts.as_slice() {
                [s] => Ok(Condition::SuffixMatch { suffix: s.clone(), linked_stem: false }),
                [s, l] if l.eq_ignore_ascii_case("linked") => {
                    Ok(Condition::SuffixMatch { suffix: s.clone(), linked_stem: true })
                }
                _ => Err("suffix-match takes a suffix and an optional `linked` flag".into()),
            }
        }
        "regex_match" => {
            regex::Regex::new(args).map_err(|e| format!("invalid regex: {e}"))?;
            Ok(Condition::RegexMatch(args.to_string()))
        }
        "rename_map" => {
            let mut map = BTreeMap::new();
            for pair in split_args(args) {
                let (k, v) = pair.split_once("=>").ok_or_else(|| format!("expected `old => new`, found {pair:?}"))?;
                let (k, v) = (k.trim(), v.trim());
                if k.is_empty() || v.is_empty() {
                    return Err(format!("empty name in {pair:?}"));
                }
                map.insert(k.to_string(), v.to_string());
            }
            if map.is_empty() {
                return Err("rename-map needs at least one entry".into());
            }
            Ok(Condition::RenameMap(map))
        }
        "degree_equals" => {
            args.parse().map(Condition::DegreeEquals).map_err(|_| format!("degree-equals needs a count, found {args:?}"))
        }
        other => Err(format!("unknown condition {other}")),
    }
}

pub fn parse_action(text: &str) -> Result<Action, String> {
    let (head, args) = call(text)?;
    let one = |what: &str| -> Result<String, String> {
        match args.map(split_args).as_deref() {
            Some([a]) => Ok(a.clone()),
            _ => Err(format!("{head} takes one {what}")),
        }
    };
    match head.as_str() {
        "delete_class" if args.is_none() => Ok(Action::DeleteClass),
        "collapse_to_referencing" if args.is_none() => Ok(Action::CollapseToReferencing),
        "rename_class" => match args {
            None => Ok(Action::RenameClass(None)),
            Some(_) => one("name").map(|n| Action::RenameClass(Some(n))),
        },
        "rename_property" => match args.map(split_args).as_deref() {
            None => Ok(Action::RenameProperty(None)),
            Some([a, b]) => Ok(Action::RenameProperty(Some((a.clone(), b.clone())))),
            Some(_) => Err("rename_property takes (old, new)".into()),
        },
        "merge_classes" => one("target class").map(Action::MergeClasses),
        "remove_property" => one("property name").map(Action::RemoveProperty),
        "partition_class" => {
            let args = args.ok_or("partition_class needs groups")?;
            let mut groups = Vec::new();
            for g in args.split(';') {
                let (id, props) = g.split_once(':').ok_or_else(|| format!("expected `class: props`, found {g:?}"))?;
                let props = split_args(props);
                if id.trim().is_empty() || props.is_empty() {
                    return Err(format!("empty group {g:?}"));
                }
                groups.push((id.trim().to_string(), props));
            }
            Ok(Action::PartitionClass(groups))
        }
        other => Err(format!("unknown action {other}")),
    }
}

/// Reads `key: value` documents separated by `---` lines. Keys are `name`,
/// `condition` and `action`; `#` starts a comment line.
pub fn parse_policies(text: &str) -> Result<Vec<RefinementPolicy>, PolicyParseError> {
    let mut out = Vec::new();
    let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut doc_start = 1;

    let mut flush = |fields: &mut BTreeMap<String, (usize, String)>, start: usize| -> Result<(), PolicyParseError> {
        if fields.is_empty() {
            return Ok(());
        }
        let get = |k: &str| {
            fields.get(k).cloned().ok_or_else(|| PolicyParseError { line: start, message: format!("policy is missing `{k}`") })
        };
        let (_, name) = get("name")?;
        let (cl, ct) = get("condition")?;
        let (al, at) = get("action")?;
        let condition = parse_condition(&ct).map_err(|message| PolicyParseError { line: cl, message })?;
        let action = parse_action(&at).map_err(|message| PolicyParseError { line: al, message })?;
        out.push(RefinementPolicy { name, condition, action });
        fields.clear();
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line == "---" {
            flush(&mut fields, doc_start)?;
            doc_start = line_no + 1;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| PolicyParseError { line: line_no, message: format!("expected `key: value`, found {line:?}") })?;
        let key = k.trim().to_ascii_lowercase();
        if !matches!(key.as_str(), "name" | "condition" | "action") {
            return Err(PolicyParseError { line: line_no, message: format!("unknown key {key}") });
        }
        if fields.insert(key.clone(), (line_no, v.trim().to_string())).is_some() {
            return Err(PolicyParseError { line: line_no, message: format!("duplicate key {key}") });
        }
    }
    flush(&mut fields, doc_start)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ontology::derive_ontology;
    use crate::physical::parse_ddl;

    fn files() -> (Ontology, BindingSet) {
        derive_ontology(&parse_ddl(fixtures::FILES_DDL).unwrap()).unwrap()
    }

    fn collapse() -> RefinementPolicy {
        RefinementPolicy {
            name: "collapse-properties".into(),
            condition: Condition::SuffixMatch { suffix: "Properties".into(), linked_stem: true },
            action: Action::CollapseToReferencing,
        }
    }

    fn hindi() -> RefinementPolicy {
        RefinementPolicy {
            name: "translate".into(),
            condition: Condition::RenameMap([("saptaah_ka_din".to_string(), "day_of_the_week".to_string())].into()),
            action: Action::RenameProperty(None),
        }
    }

    #[test]
    fn collapse_folds_properties_into_file() {
        let (onto, bind) = files();
        let (o, b) = apply_policy(&onto, &bind, &collapse()).unwrap();
        assert!(o.class("fileproperties").is_none());
        assert!(b.class("fileproperties").is_none());
        let file = o.class("file").unwrap();
        let names: Vec<_> = file.data_properties.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["FileID", "Name", "Path", "SizeBytes", "MimeType", "Owner"]);
        let fb = b.class("file").unwrap();
        for p in ["SizeBytes", "MimeType", "Owner"] {
            let pb = fb.property(p).unwrap();
            assert_eq!((pb.table.as_str(), pb.column.as_str()), ("FileProperties", p));
        }
        assert_eq!(fb.joins.len(), 1);
        assert_eq!(o.class("accesslog"), onto.class("accesslog"));
        assert_eq!(b.reachable_columns(), bind.reachable_columns());
    }

    #[test]
    fn rename_map_keeps_the_original_column() {
        let (onto, bind) = files();
        let (o, b) = apply_policy(&onto, &bind, &hindi()).unwrap();
        let log = o.class("accesslog").unwrap();
        assert!(log.data_property("day_of_the_week").is_some());
        assert!(log.data_property("saptaah_ka_din").is_none());
        let pb = b.class("accesslog").unwrap().property("day_of_the_week").unwrap();
        assert_eq!(pb.column, "saptaah_ka_din");
        // a second run no longer matches
        assert_eq!(apply_policy(&o, &b, &hindi()).unwrap(), (o, b));
    }

    #[test]
    fn non_matching_policy_is_identity() {
        let (onto, bind) = files();
        let p = RefinementPolicy {
            name: "none".into(),
            condition: Condition::RegexMatch("^nothing_here$".into()),
            action: Action::DeleteClass,
        };
        assert_eq!(apply_policy(&onto, &bind, &p).unwrap(), (onto, bind));
    }

    #[test]
    fn sequences_compose_and_record_a_trail() {
        let (onto, bind) = files();
        let r = apply_policies(&onto, &bind, &[collapse(), hindi()]).unwrap();
        let (o1, b1) = apply_policy(&onto, &bind, &collapse()).unwrap();
        let (o2, b2) = apply_policy(&o1, &b1, &hindi()).unwrap();
        assert_eq!((r.ontology.clone(), r.bindings.clone()), (o2, b2));
        assert_eq!(r.trail.len(), 2);
        assert_eq!(r.trail[0].matched, ["fileproperties"]);
        assert_eq!(r.trail[1].matched, ["accesslog"]);

        let id = apply_policies(&onto, &bind, &[]).unwrap();
        assert_eq!((id.ontology, id.bindings), (onto, bind));
    }

    #[test]
    fn rename_chain_is_order_sensitive() {
        let (onto, bind) = files();
        let rename = |from: &str, to: &str| RefinementPolicy {
            name: format!("{from}->{to}"),
            condition: Condition::RegexMatch(format!("^{from}$")),
            action: Action::RenameClass(Some(to.into())),
        };
        let r = apply_policies(&onto, &bind, &[rename("file", "b"), rename("b", "c")]).unwrap();
        assert!(r.ontology.class("c").is_some());
        assert!(r.ontology.class("file").is_none());
        assert_eq!(r.ontology.class("accesslog").unwrap().object_properties[0].target, "c");
        assert_eq!(r.ontology.class("accesslog").unwrap().object_properties[0].name, "has_c");
        let r = apply_policies(&onto, &bind, &[rename("b", "c"), rename("file", "b")]).unwrap();
        assert!(r.ontology.class("b").is_some());
        assert!(r.ontology.class("c").is_none());
    }

    #[test]
    fn collisions_report_both_ids() {
        let (onto, bind) = files();
        let p = RefinementPolicy {
            name: "clash".into(),
            condition: Condition::RegexMatch("^accesslog$".into()),
            action: Action::RenameClass(Some("file".into())),
        };
        match apply_policy(&onto, &bind, &p).unwrap_err() {
            PolicyError::Conflict { first, second, .. } => assert_eq!((first.as_str(), second.as_str()), ("accesslog", "file")),
            e => panic!("unexpected {e:?}"),
        }
        let err = apply_policies(&onto, &bind, &[hindi(), p]).unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn delete_leaves_no_dangling_bindings() {
        let (onto, bind) = files();
        let p = RefinementPolicy {
            name: "drop".into(),
            condition: Condition::RegexMatch("^file$".into()),
            action: Action::DeleteClass,
        };
        let (o, b) = apply_policy(&onto, &bind, &p).unwrap();
        assert!(o.classes.values().all(|c| c.object_properties.iter().all(|op| o.classes.contains_key(&op.target))));
        assert!(b.object_bindings().count() == 0);
    }

    #[test]
    fn merge_needs_identical_signatures() {
        let ddl = "CREATE TABLE Customer (ID int, Name varchar);\nCREATE TABLE Client (ID int, Name varchar);\nCREATE TABLE Lead (ID int);";
        let (onto, bind) = derive_ontology(&parse_ddl(ddl).unwrap()).unwrap();
        let merge = |re: &str| RefinementPolicy {
            name: "merge".into(),
            condition: Condition::RegexMatch(re.into()),
            action: Action::MergeClasses("customer".into()),
        };
        let (o, _) = apply_policy(&onto, &bind, &merge("^client$")).unwrap();
        assert_eq!(o.classes.len(), 2);
        assert!(matches!(apply_policy(&onto, &bind, &merge("^lead$")), Err(PolicyError::Invalid { .. })));
    }

    #[test]
    fn partition_splits_properties() {
        let (onto, bind) = files();
        let p = RefinementPolicy {
            name: "split".into(),
            condition: Condition::RegexMatch("^file$".into()),
            action: Action::PartitionClass(vec![
                ("file".into(), vec!["FileID".into(), "Name".into()]),
                ("filelocation".into(), vec!["Path".into()]),
            ]),
        };
        let (o, b) = apply_policy(&onto, &bind, &p).unwrap();
        assert_eq!(o.class("filelocation").unwrap().data_properties.len(), 1);
        assert_eq!(b.class("filelocation").unwrap().property("Path").unwrap().table, "File");
        assert_eq!(o.class("file").unwrap().data_properties.len(), 2);
    }

    #[test]
    fn degree_condition() {
        let (onto, bind) = files();
        let p = RefinementPolicy {
            name: "hubs".into(),
            condition: Condition::DegreeEquals(2),
            action: Action::RemoveProperty("Path".into()),
        };
        let (_, _, matched) = apply_policy_traced(&onto, &bind, &p).unwrap();
        assert_eq!(matched, ["file"]);
    }

    #[test]
    fn policy_file_round_trip() {
        let text = "name: collapse-properties\ncondition: suffix-match(Properties, linked)\naction: collapse_to_referencing\n---\n# translate\nname: translate\ncondition: rename-map(saptaah_ka_din => day_of_the_week)\naction: rename_property\n";
        let ps = parse_policies(text).unwrap();
        assert_eq!(ps, vec![collapse(), hindi()]);
        let again = ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("\n---\n");
        assert_eq!(parse_policies(&again).unwrap(), ps);
        let e = parse_policies("name: x\ncondition: sparkle(3)\naction: delete_class").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_policies("name: x\naction: delete_class").is_err());
    }
}
