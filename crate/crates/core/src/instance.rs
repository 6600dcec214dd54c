//! JSON instance format.
//!
//! ```json
//! {
//!   "name": "tiny",
//!   "elements": ["a", "b", "c"],
//!   "objective": {"type": "coverage", "covers": {"a": ["x"], "b": ["x", "y"]}, "weights": {"y": 2}},
//!   "matroid": {"type": "uniform", "k": 2}
//! }
//! ```
//!
//! Objectives: `coverage` (`covers`: element → items, optional `weights`: item → weight, default
//! 1), `cut` (`edges`: `[u, v]` or `[u, v, w]` over elements), `modular` (`weights`: element →
//! weight, every element listed). Matroids: `uniform` (`k`), `partition` (`parts`: list of
//! `{"elements": [...], "capacity": c}` covering every element once), `graphic` (`edges`:
//! element → `[vertex, vertex]`). All weights are non-negative integers.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{SubsetMask, MAX_ELEMENTS};
use crate::matroids::{build_matroid, rank, IndependenceOracle, MatroidSpec};
use crate::oracles::{build_objective, ObjectiveSpec, ValueOracle};

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(default)]
    name: Option<String>,
    elements: Vec<String>,
    objective: RawObjective,
    matroid: RawMatroid,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawObjective {
    Coverage {
        covers: BTreeMap<String, Vec<String>>,
        #[serde(default)]
        weights: BTreeMap<String, i64>,
    },
    Cut {
        edges: Vec<RawCutEdge>,
    },
    Modular {
        weights: BTreeMap<String, i64>,
    },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum RawCutEdge {
    Weighted(String, String, i64),
    Unit(String, String),
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawMatroid {
    Uniform { k: usize },
    Partition { parts: Vec<RawPart> },
    Graphic { edges: BTreeMap<String, (String, String)> },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawPart {
    elements: Vec<String>,
    capacity: usize,
}

/// A validated instance with element names resolved to ids `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub name: String,
    pub elements: Vec<String>,
    pub objective: ObjectiveSpec,
    pub matroid: MatroidSpec,
    rank: usize,
}

impl Instance {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut inst = Self::from_json_str(&text)?;
        if inst.name.is_empty() {
            inst.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(inst)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawInstance = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::schema(if path == "." { "instance".into() } else { path }, e.into_inner().to_string())
        })?;
        Self::from_raw(raw)
    }

    /// Builds an instance from resolved specs; element names default to `e0, e1, ..`.
    pub fn from_specs(name: &str, objective: ObjectiveSpec, matroid: MatroidSpec) -> Result<Self> {
        let n = objective.n();
        let elements = (0..n).map(|i| format!("e{i}")).collect();
        Self::validated(name.to_string(), elements, objective, matroid)
    }

    /// Serializes back to the input schema. Coverage items become `i0, i1, ..` and graph
    /// vertices `v0, v1, ..`. Loading the output gives the same objective values and independent
    /// sets, though item and vertex numbering may change.
    pub fn to_json(&self) -> String {
        let name = |u: &usize| self.elements[*u].clone();
        let objective = match &self.objective {
            ObjectiveSpec::Coverage { covers, item_weights } => RawObjective::Coverage {
                covers: covers
                    .iter()
                    .enumerate()
                    .map(|(u, items)| (name(&u), items.iter().map(|i| format!("i{i}")).collect()))
                    .collect(),
                weights: item_weights
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| covers.iter().any(|c| c.contains(i)))
                    .map(|(i, w)| (format!("i{i}"), *w))
                    .collect(),
            },
            ObjectiveSpec::Cut { edges, .. } => RawObjective::Cut {
                edges: edges
                    .iter()
                    .map(|(a, b, w)| RawCutEdge::Weighted(name(a), name(b), *w))
                    .collect(),
            },
            ObjectiveSpec::Modular { weights } => RawObjective::Modular {
                weights: weights.iter().enumerate().map(|(u, w)| (name(&u), *w)).collect(),
            },
        };
        let matroid = match &self.matroid {
            MatroidSpec::Uniform { k, .. } => RawMatroid::Uniform { k: *k },
            MatroidSpec::Partition { parts, .. } => RawMatroid::Partition {
                parts: parts
                    .iter()
                    .map(|(elems, cap)| RawPart {
                        elements: elems.iter().map(name).collect(),
                        capacity: *cap,
                    })
                    .collect(),
            },
            MatroidSpec::Graphic { edges } => RawMatroid::Graphic {
                edges: edges
                    .iter()
                    .enumerate()
                    .map(|(u, (a, b))| (name(&u), (format!("v{a}"), format!("v{b}"))))
                    .collect(),
            },
        };
        let raw = RawInstance {
            name: Some(self.name.clone()),
            elements: self.elements.clone(),
            objective,
            matroid,
        };
        serde_json::to_string_pretty(&raw).expect("instance serializes")
    }

    fn from_raw(raw: RawInstance) -> Result<Self> {
        let elements = raw.elements;
        let mut ids = HashMap::new();
        for (i, e) in elements.iter().enumerate() {
            if ids.insert(e.as_str(), i).is_some() {
                return Err(Error::schema(format!("elements[{i}]"), format!("duplicate element `{e}`")));
            }
        }
        let id = |field: String, e: &str| -> Result<usize> {
            ids.get(e)
                .copied()
                .ok_or_else(|| Error::schema(field, format!("unknown element `{e}`")))
        };

        let objective = match raw.objective {
            RawObjective::Coverage { covers, weights } => {
                let mut item_ids: HashMap<String, usize> = HashMap::new();
                let mut item_weights = Vec::new();
                let mut per_element = vec![Vec::new(); elements.len()];
                for (e, items) in &covers {
                    let u = id(format!("objective.covers.{e}"), e)?;
                    for it in items {
                        let next = item_ids.len();
                        let k = *item_ids.entry(it.clone()).or_insert_with(|| {
                            item_weights.push(1);
                            next
                        });
                        per_element[u].push(k);
                    }
                }
                for (it, &w) in &weights {
                    let field = format!("objective.weights.{it}");
                    let k = *item_ids
                        .get(it)
                        .ok_or_else(|| Error::schema(field.clone(), "item is not covered by any element"))?;
                    if w < 0 {
                        return Err(Error::schema(field, "item weights must be non-negative"));
                    }
                    item_weights[k] = w;
                }
                ObjectiveSpec::Coverage {
                    covers: per_element,
                    item_weights,
                }
            }
            RawObjective::Cut { edges } => {
                let mut out = Vec::with_capacity(edges.len());
                for (i, e) in edges.iter().enumerate() {
                    let field = format!("objective.edges[{i}]");
                    let (a, b, w) = match e {
                        RawCutEdge::Weighted(a, b, w) => (a, b, *w),
                        RawCutEdge::Unit(a, b) => (a, b, 1),
                    };
                    if w < 0 {
                        return Err(Error::schema(field, "edge weights must be non-negative"));
                    }
                    out.push((id(field.clone(), a)?, id(field, b)?, w));
                }
                ObjectiveSpec::Cut {
                    n: elements.len(),
                    edges: out,
                }
            }
            RawObjective::Modular { weights } => {
                let mut w = vec![None; elements.len()];
                for (e, &v) in &weights {
                    let field = format!("objective.weights.{e}");
                    let u = id(field.clone(), e)?;
                    if v < 0 {
                        return Err(Error::schema(field, "weights must be non-negative"));
                    }
                    w[u] = Some(v);
                }
                let mut weights = Vec::with_capacity(elements.len());
                for (u, v) in w.into_iter().enumerate() {
                    weights.push(v.ok_or_else(|| {
                        Error::schema(format!("objective.weights.{}", elements[u]), "missing weight")
                    })?);
                }
                ObjectiveSpec::Modular { weights }
            }
        };

        let matroid = match raw.matroid {
            RawMatroid::Uniform { k } => MatroidSpec::Uniform { n: elements.len(), k },
            RawMatroid::Partition { parts } => {
                let mut out = Vec::with_capacity(parts.len());
                for (i, p) in parts.iter().enumerate() {
                    let members = p
                        .elements
                        .iter()
                        .map(|e| id(format!("matroid.parts[{i}].elements"), e))
                        .collect::<Result<Vec<_>>>()?;
                    out.push((members, p.capacity));
                }
                MatroidSpec::Partition {
                    n: elements.len(),
                    parts: out,
                }
            }
            RawMatroid::Graphic { edges } => {
                let mut vertex_ids: HashMap<String, usize> = HashMap::new();
                let mut vid = |v: &str| {
                    let next = vertex_ids.len();
                    *vertex_ids.entry(v.to_string()).or_insert(next)
                };
                let mut out = vec![None; elements.len()];
                for (e, (a, b)) in &edges {
                    let u = id(format!("matroid.edges.{e}"), e)?;
                    out[u] = Some((vid(a), vid(b)));
                }
                let mut list = Vec::with_capacity(elements.len());
                for (u, e) in out.into_iter().enumerate() {
                    list.push(e.ok_or_else(|| {
                        Error::schema(format!("matroid.edges.{}", elements[u]), "missing edge endpoints")
                    })?);
                }
                MatroidSpec::Graphic { edges: list }
            }
        };
        Self::validated(raw.name.unwrap_or_default(), elements, objective, matroid)
    }

    fn validated(name: String, elements: Vec<String>, objective: ObjectiveSpec, matroid: MatroidSpec) -> Result<Self> {
        let n = elements.len();
        if objective.n() != n || matroid.n() != n {
            return Err(Error::schema(
                "elements",
                format!(
                    "{n} elements but the objective covers {} and the matroid {}",
                    objective.n(),
                    matroid.n()
                ),
            ));
        }
        if n > MAX_ELEMENTS {
            return Err(Error::capability(format!("{n} elements exceed {MAX_ELEMENTS}")));
        }
        build_objective(&objective)?;
        let m = build_matroid(&matroid)?;
        let r = rank(&m, m.ground());
        if n + r > MAX_ELEMENTS {
            return Err(Error::capability(format!(
                "n + rank = {} exceeds {MAX_ELEMENTS} (one dummy element per unit of rank)",
                n + r
            )));
        }
        Ok(Instance {
            name,
            elements,
            objective,
            matroid,
            rank: r,
        })
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn objective_oracle(&self) -> Box<dyn ValueOracle> {
        build_objective(&self.objective).expect("validated at load time")
    }

    pub fn matroid_oracle(&self) -> Box<dyn IndependenceOracle> {
        build_matroid(&self.matroid).expect("validated at load time")
    }

    /// Names of the original elements in `set`, ascending by id. Dummies are skipped.
    pub fn names(&self, set: SubsetMask) -> Vec<String> {
        set.iter()
            .filter(|&u| u < self.n())
            .map(|u| self.elements[u].clone())
            .collect()
    }
}
