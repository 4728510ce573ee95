//! Layered knowledge graph.
//!
//! Nodes live on exactly one level of abstraction. Edges connect nodes on the
//! same level, except for the reserved [`ABSTRACTS`] relation which links a
//! node to one on the next level up. Every relation is registered with a
//! symmetry class: antisymmetric relations are stored exactly as asserted and
//! never gain an inverse, symmetric relations are stored once in canonical
//! order and match either argument order on query.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::truth::{combine, Stamp, TruthError, TruthValue};

/// Innate antisymmetric relation.
pub const DISTINCTION: &str = "distinction";
/// Innate symmetric relation.
pub const SIMILARITY: &str = "similarity";
/// The only relation allowed to cross levels (level n to level n+1).
pub const ABSTRACTS: &str = "abstracts";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("layer violation: {relation}({from}, {to}) joins {from_layer} to {to_layer}")]
    LayerViolation {
        relation: String,
        from: String,
        to: String,
        from_layer: Layer,
        to_layer: Layer,
    },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("registry conflict: `{0}` registered with a different definition")]
    RegistryConflict(String),
    #[error("`{0}` is reserved")]
    ReservedRelation(String),
    #[error("node `{0}` differs between merged graphs")]
    NodeConflict(String),
    #[error("invalid edge {relation}({from}, {to}): {source}")]
    InvalidEdge {
        relation: String,
        from: String,
        to: String,
        source: TruthError,
    },
    #[error("graph json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    L0,
    L1,
    L2,
    #[serde(rename = "Lstar")]
    LStar,
}

impl Layer {
    /// The level directly above, for the levels `abstracts` may climb.
    pub fn next(self) -> Option<Layer> {
        match self {
            Layer::L0 => Some(Layer::L1),
            Layer::L1 => Some(Layer::L2),
            Layer::L2 | Layer::LStar => None,
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::L0 => "L0",
            Layer::L1 => "L1",
            Layer::L2 => "L2",
            Layer::LStar => "Lstar",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationType {
    pub name: String,
    pub symmetry: Symmetry,
    pub layer: Layer,
}

impl RelationType {
    pub fn new(name: impl Into<String>, symmetry: Symmetry, layer: Layer) -> Self {
        RelationType {
            name: name.into(),
            symmetry,
            layer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Percept,
    Attribute,
    Concept,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub layer: Layer,
    pub kind: NodeKind,
    #[serde(default)]
    pub payload: BTreeMap<String, f64>,
}

impl Node {
    pub fn new(id: impl Into<String>, layer: Layer, kind: NodeKind) -> Self {
        Node {
            id: id.into(),
            layer,
            kind,
            payload: BTreeMap::new(),
        }
    }

    pub fn with_payload(mut self, payload: BTreeMap<String, f64>) -> Self {
        self.payload = payload;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub relation: String,
    pub from: String,
    pub to: String,
    pub tv: TruthValue,
    pub stamp: Stamp,
}

impl Edge {
    pub fn new(
        relation: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        tv: TruthValue,
        stamp: Stamp,
    ) -> Self {
        Edge {
            relation: relation.into(),
            from: from.into(),
            to: to.into(),
            tv,
            stamp,
        }
    }

    fn key(&self) -> EdgeKey {
        (self.relation.clone(), self.from.clone(), self.to.clone())
    }
}

type EdgeKey = (String, String, String);

/// One broken invariant found by [`LayeredGraph::audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditViolation {
    DanglingEdge(String, String, String),
    CrossLayer(String, String, String),
    UnregisteredRelation(String),
    NonCanonicalSymmetric(String, String, String),
    EmptyStamp(String, String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredGraph {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<EdgeKey, Edge>,
    registry: BTreeMap<String, RelationType>,
}

impl Default for LayeredGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl LayeredGraph {
    /// Empty graph holding only the innate relations.
    pub fn new() -> Self {
        let mut registry = BTreeMap::new();
        for rel in [
            RelationType::new(DISTINCTION, Symmetry::Antisymmetric, Layer::L1),
            RelationType::new(SIMILARITY, Symmetry::Symmetric, Layer::L1),
        ] {
            registry.insert(rel.name.clone(), rel);
        }
        LayeredGraph {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            registry,
        }
    }

    /// Register a relation. Re-registering an identical definition is a
    /// no-op; changing its symmetry class or layer is a conflict.
    pub fn register(&mut self, rel: RelationType) -> Result<(), GraphError> {
        if rel.name == ABSTRACTS {
            return Err(GraphError::ReservedRelation(rel.name));
        }
        match self.registry.get(&rel.name) {
            Some(existing) if *existing != rel => Err(GraphError::RegistryConflict(rel.name)),
            Some(_) => Ok(()),
            None => {
                self.registry.insert(rel.name.clone(), rel);
                Ok(())
            }
        }
    }

    pub fn relation(&self, name: &str) -> Option<&RelationType> {
        self.registry.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationType> {
        self.registry.values()
    }

    fn symmetry_of(&self, name: &str) -> Option<Symmetry> {
        if name == ABSTRACTS {
            Some(Symmetry::Antisymmetric)
        } else {
            self.registry.get(name).map(|r| r.symmetry)
        }
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateNode(node.id));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges in `(relation, from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn check_edge(&self, e: &Edge) -> Result<Symmetry, GraphError> {
        let symmetry = self
            .symmetry_of(&e.relation)
            .ok_or_else(|| GraphError::UnknownRelation(e.relation.clone()))?;
        let from = self
            .nodes
            .get(&e.from)
            .ok_or_else(|| GraphError::UnknownNode(e.from.clone()))?;
        let to = self
            .nodes
            .get(&e.to)
            .ok_or_else(|| GraphError::UnknownNode(e.to.clone()))?;
        let ok = if e.relation == ABSTRACTS {
            from.layer.next() == Some(to.layer)
        } else {
            from.layer == to.layer
        };
        if !ok {
            return Err(GraphError::LayerViolation {
                relation: e.relation.clone(),
                from: e.from.clone(),
                to: e.to.clone(),
                from_layer: from.layer,
                to_layer: to.layer,
            });
        }
        if e.stamp.is_empty() {
            return Err(GraphError::InvalidEdge {
                relation: e.relation.clone(),
                from: e.from.clone(),
                to: e.to.clone(),
                source: TruthError::EmptyStamp,
            });
        }
        Ok(symmetry)
    }

    /// Insert an edge. An existing edge with the same identity is revised
    /// with the new evidence, or on shared evidence the stronger one is kept.
    pub fn assert_edge(&mut self, mut e: Edge) -> Result<(), GraphError> {
        if self.check_edge(&e)? == Symmetry::Symmetric && e.from > e.to {
            std::mem::swap(&mut e.from, &mut e.to);
        }
        match self.edges.get_mut(&e.key()) {
            Some(existing) => {
                let (tv, stamp) = combine(existing.tv, &existing.stamp, e.tv, &e.stamp);
                existing.tv = tv;
                existing.stamp = stamp;
            }
            None => {
                self.edges.insert(e.key(), e);
            }
        }
        Ok(())
    }

    /// Look up `relation(a, b)`; symmetric relations match either order.
    pub fn query(&self, relation: &str, a: &str, b: &str) -> Option<&Edge> {
        let key = |x: &str, y: &str| (relation.to_string(), x.to_string(), y.to_string());
        match self.symmetry_of(relation)? {
            Symmetry::Symmetric if a > b => self.edges.get(&key(b, a)),
            _ => self.edges.get(&key(a, b)),
        }
    }

    pub fn remove_edge(&mut self, relation: &str, from: &str, to: &str) -> Option<Edge> {
        let (from, to) = match self.symmetry_of(relation) {
            Some(Symmetry::Symmetric) if from > to => (to, from),
            _ => (from, to),
        };
        self.edges
            .remove(&(relation.to_string(), from.to_string(), to.to_string()))
    }

    /// Full structural check; empty means every invariant holds.
    pub fn audit(&self) -> Vec<AuditViolation> {
        let mut out = Vec::new();
        for e in self.edges.values() {
            let triple = || (e.relation.clone(), e.from.clone(), e.to.clone());
            let Some(symmetry) = self.symmetry_of(&e.relation) else {
                out.push(AuditViolation::UnregisteredRelation(e.relation.clone()));
                continue;
            };
            match (self.nodes.get(&e.from), self.nodes.get(&e.to)) {
                (Some(a), Some(b)) => {
                    let ok = if e.relation == ABSTRACTS {
                        a.layer.next() == Some(b.layer)
                    } else {
                        a.layer == b.layer
                    };
                    if !ok {
                        let (r, f, t) = triple();
                        out.push(AuditViolation::CrossLayer(r, f, t));
                    }
                }
                _ => {
                    let (r, f, t) = triple();
                    out.push(AuditViolation::DanglingEdge(r, f, t));
                }
            }
            if symmetry == Symmetry::Symmetric && e.from > e.to {
                let (r, f, t) = triple();
                out.push(AuditViolation::NonCanonicalSymmetric(r, f, t));
            }
            if e.stamp.is_empty() {
                let (r, f, t) = triple();
                out.push(AuditViolation::EmptyStamp(r, f, t));
            }
        }
        out
    }

    /// Subgraph on `ids`: those nodes plus every edge with both ends inside.
    pub fn induced(&self, ids: &BTreeSet<&str>) -> LayeredGraph {
        LayeredGraph {
            nodes: self
                .nodes
                .iter()
                .filter(|(id, _)| ids.contains(id.as_str()))
                .map(|(id, n)| (id.clone(), n.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|(_, e)| ids.contains(e.from.as_str()) && ids.contains(e.to.as_str()))
                .map(|(k, e)| (k.clone(), e.clone()))
                .collect(),
            registry: self.registry.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDoc {
            nodes: self.nodes.values().cloned().collect(),
            edges: self
                .edges
                .values()
                .map(|e| EdgeDoc {
                    relation: e.relation.clone(),
                    from: e.from.clone(),
                    to: e.to.clone(),
                    f: e.tv.frequency(),
                    c: e.tv.confidence(),
                    stamp: e.stamp.ids().collect(),
                })
                .collect(),
            relations: self.registry.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        let mut g = LayeredGraph::new();
        for rel in doc.relations {
            g.register(rel)?;
        }
        for node in doc.nodes {
            g.add_node(node)?;
        }
        for e in doc.edges {
            let tv = TruthValue::new(e.f, e.c).map_err(|source| GraphError::InvalidEdge {
                relation: e.relation.clone(),
                from: e.from.clone(),
                to: e.to.clone(),
                source,
            })?;
            g.assert_edge(Edge::new(e.relation, e.from, e.to, tv, e.stamp.into_iter().collect()))?;
        }
        Ok(g)
    }

    /// Graphviz rendering; edge labels read `relation f;c`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph kg {\n  rankdir=LR;\n");
        for n in self.nodes.values() {
            let _ = writeln!(
                out,
                "  \"{}\" [label=\"{}\\n{}\"];",
                escape(&n.id),
                escape(&n.id),
                n.layer
            );
        }
        for e in self.edges.values() {
            let dir = match self.symmetry_of(&e.relation) {
                Some(Symmetry::Symmetric) => ", dir=none",
                _ => "",
            };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{} {:.2};{:.2}\"{}];",
                escape(&e.from),
                escape(&e.to),
                escape(&e.relation),
                e.tv.frequency(),
                e.tv.confidence(),
                dir
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Union of two graphs. Nodes are matched by id and must agree; edges with
/// the same identity are revised or, on shared evidence, the stronger kept.
/// The result does not depend on argument order.
pub fn merge_graphs(g1: &LayeredGraph, g2: &LayeredGraph) -> Result<LayeredGraph, GraphError> {
    let mut out = g1.clone();
    for rel in g2.registry.values() {
        out.register(rel.clone())?;
    }
    for node in g2.nodes.values() {
        match out.nodes.get(&node.id) {
            Some(existing) if existing != node => {
                return Err(GraphError::NodeConflict(node.id.clone()))
            }
            Some(_) => {}
            None => {
                out.nodes.insert(node.id.clone(), node.clone());
            }
        }
    }
    for e in g2.edges.values() {
        out.assert_edge(e.clone())?;
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    nodes: Vec<Node>,
    edges: Vec<EdgeDoc>,
    relations: Vec<RelationType>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    relation: String,
    from: String,
    to: String,
    f: f64,
    c: f64,
    stamp: Vec<u64>,
}
