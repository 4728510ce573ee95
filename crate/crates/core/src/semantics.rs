//! L1 graph construction from a rectangle scene, and the premise text format.
//!
//! Premise grammar, one statement per line:
//!
//! ```text
//! <(*,FROM,TO) --> REL>. %F;C%
//! ```
//!
//! Relation lines carry the edge truth value; attribute lines use the same
//! shape with the attribute value in the `TO` slot.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{attributes, floating, relations_between, GeomParams, Rect, SpatialRelation, ATTRIBUTE_NAMES};
use crate::graph::{Edge, GraphError, Layer, LayeredGraph, Node, NodeKind, RelationType, Symmetry};
use crate::scene::{check_ids, SceneError};
use crate::truth::{Stamp, TruthValue, DEFAULT_OBSERVATION_CONFIDENCE};

/// Reserved L1 node that `is_floating` edges point at.
pub const FLOATING_MARKER: &str = "floating-marker";
pub const IS_FLOATING: &str = "is_floating";

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("line {line}: malformed premise `{text}`")]
    MalformedPremise { line: usize, text: String },
    #[error("node `{0}` lacks rectangle attributes")]
    MissingAttributes(String),
}

/// Register the L1 spatial vocabulary on `g`.
pub fn register_l1_relations(g: &mut LayeredGraph) -> Result<(), GraphError> {
    for rel in SpatialRelation::ALL {
        g.register(RelationType::new(rel.name(), Symmetry::Antisymmetric, Layer::L1))?;
    }
    g.register(RelationType::new(IS_FLOATING, Symmetry::Antisymmetric, Layer::L1))
}

/// Build the L1 graph of a scene.
///
/// Every relation instance becomes its own edge with a fresh singleton stamp.
/// Stamp ids are assigned in scene order: all relations from the first rect,
/// then the second, and so on, followed by the floating facts.
pub fn build_l1(scene: &[Rect], p: &GeomParams) -> Result<LayeredGraph, SemanticsError> {
    check_ids(scene.iter().map(|r| r.id.as_str()).chain([FLOATING_MARKER]))?;
    let mut g = LayeredGraph::new();
    register_l1_relations(&mut g)?;
    for r in scene {
        g.add_node(Node::new(r.id.clone(), Layer::L1, NodeKind::Percept).with_payload(attributes(r)))?;
    }
    g.add_node(Node::new(FLOATING_MARKER, Layer::L1, NodeKind::Concept))?;

    let per_rect: Vec<Vec<_>> = scene
        .par_iter()
        .map(|a| {
            scene
                .iter()
                .flat_map(|b| relations_between(a, b, p))
                .collect()
        })
        .collect();
    let floats: Vec<bool> = scene.par_iter().map(|a| floating(a, scene, p)).collect();

    let tv = TruthValue::observed();
    let mut next_id = 1u64;
    let mut stamp = || {
        let s = Stamp::single(next_id);
        next_id += 1;
        s
    };
    for inst in per_rect.into_iter().flatten() {
        g.assert_edge(Edge::new(inst.relation.name(), inst.from, inst.to, tv, stamp()))?;
    }
    for (r, _) in scene.iter().zip(floats).filter(|(_, f)| *f) {
        g.assert_edge(Edge::new(IS_FLOATING, r.id.clone(), FLOATING_MARKER, tv, stamp()))?;
    }
    Ok(g)
}

/// Recover rectangles from the percept nodes of an L1 graph, in id order.
pub fn rects_from_graph(g: &LayeredGraph) -> Result<Vec<Rect>, SemanticsError> {
    g.nodes()
        .filter(|n| n.layer == Layer::L1 && n.kind == NodeKind::Percept)
        .map(|n| {
            let get = |k: &str| n.payload.get(k).copied();
            match (get("x"), get("y"), get("width"), get("height")) {
                (Some(x), Some(y), Some(w), Some(h)) => Rect::new(n.id.clone(), x, y, w, h)
                    .map_err(|e| SemanticsError::Scene(SceneError::Geometry(e))),
                _ => Err(SemanticsError::MissingAttributes(n.id.clone())),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PremiseLine {
    pub text: String,
    pub id: u64,
}

fn premise_text(rel: &str, from: &str, to: &str, f: f64, c: f64) -> String {
    format!("<(*,{from},{to}) --> {rel}>. %{f:.2};{c:.2}%")
}

/// Sort key, line text and, for relation lines, the edge's stamp id.
type KeyedLine = ((String, String, String), String, Option<u64>);

/// Serialize a graph as premise lines: one per edge plus one per attribute of
/// every percept node, sorted by relation name, then from, then to.
pub fn emit_premises(g: &LayeredGraph) -> Vec<PremiseLine> {
    let mut keyed: Vec<KeyedLine> = Vec::new();
    let mut max_id = 0;
    for e in g.edges() {
        let id = e.stamp.min_id().unwrap_or(0);
        max_id = max_id.max(e.stamp.ids().max().unwrap_or(0));
        keyed.push((
            (e.relation.clone(), e.from.clone(), e.to.clone()),
            premise_text(&e.relation, &e.from, &e.to, e.tv.frequency(), e.tv.confidence()),
            Some(id),
        ));
    }
    for n in g.nodes().filter(|n| n.kind == NodeKind::Percept) {
        for name in ATTRIBUTE_NAMES {
            if let Some(v) = n.payload.get(name) {
                let val = format!("{v}");
                let text = premise_text(name, &n.id, &val, 1.0, DEFAULT_OBSERVATION_CONFIDENCE);
                keyed.push(((name.to_string(), n.id.clone(), val), text, None));
            }
        }
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut next = max_id + 1;
    keyed
        .into_iter()
        .map(|(_, text, id)| {
            let id = id.unwrap_or_else(|| {
                next += 1;
                next - 1
            });
            PremiseLine { text, id }
        })
        .collect()
}

/// Premise file body: LF-terminated lines.
pub fn premises_to_string(lines: &[PremiseLine]) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(&l.text);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPremise {
    pub relation: String,
    pub from: String,
    pub to: String,
    pub frequency: f64,
    pub confidence: f64,
}

pub fn parse_premise(text: &str) -> Option<ParsedPremise> {
    let rest = text.strip_prefix("<(*,")?;
    let (args, rest) = rest.split_once(") --> ")?;
    let (from, to) = args.split_once(',')?;
    let (relation, rest) = rest.split_once(">. %")?;
    let (f, rest) = rest.split_once(';')?;
    let c = rest.strip_suffix('%')?;
    if from.is_empty() || to.is_empty() || relation.is_empty() || to.contains(',') {
        return None;
    }
    Some(ParsedPremise {
        relation: relation.to_string(),
        from: from.to_string(),
        to: to.to_string(),
        frequency: f.parse().ok()?,
        confidence: c.parse().ok()?,
    })
}

/// Parse a premise file; blank lines are skipped.
pub fn parse_premises(text: &str) -> Result<Vec<ParsedPremise>, SemanticsError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_premise(l).ok_or_else(|| SemanticsError::MalformedPremise {
                line: i + 1,
                text: l.to_string(),
            })
        })
        .collect()
}

/// Count of relation edges per relation name.
pub fn relation_histogram(g: &LayeredGraph) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for e in g.edges() {
        *out.entry(e.relation.clone()).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(id: &str, x: f64, y: f64, w: f64, h: f64) -> Rect {
        Rect::new(id, x, y, w, h).unwrap()
    }

    fn triples(g: &LayeredGraph) -> Vec<(String, String, String)> {
        g.edges()
            .map(|e| (e.relation.clone(), e.from.clone(), e.to.clone()))
            .collect()
    }

    #[test]
    fn nested_pair() {
        let scene = [r("outer", 0.0, 0.0, 10.0, 10.0), r("inner", 2.0, 2.0, 3.0, 3.0)];
        let g = build_l1(&scene, &GeomParams::default()).unwrap();
        let t = |a: &str, b: &str, c: &str| (a.to_string(), b.to_string(), c.to_string());
        assert_eq!(
            triples(&g),
            vec![
                t("contains", "outer", "inner"),
                t("inside", "inner", "outer"),
                t(IS_FLOATING, "inner", FLOATING_MARKER),
            ]
        );
        assert!(g.audit().is_empty());
        for e in g.edges() {
            assert_eq!(e.tv, TruthValue::observed());
            assert_eq!(e.stamp.len(), 1);
        }
    }

    #[test]
    fn empty_scene() {
        let g = build_l1(&[], &GeomParams::default()).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(emit_premises(&g).is_empty());
    }

    #[test]
    fn duplicate_ids() {
        let scene = [r("a", 0.0, 0.0, 1.0, 1.0), r("a", 5.0, 0.0, 1.0, 1.0)];
        assert!(matches!(
            build_l1(&scene, &GeomParams::default()),
            Err(SemanticsError::Scene(SceneError::DuplicateId(_)))
        ));
        let clash = [r(FLOATING_MARKER, 0.0, 0.0, 1.0, 1.0)];
        assert!(build_l1(&clash, &GeomParams::default()).is_err());
    }

    #[test]
    fn premise_grammar() {
        let scene = [r("r1", 0.0, 0.0, 10.0, 10.0), r("r2", 2.0, 6.0, 3.0, 4.0)];
        let g = build_l1(&scene, &GeomParams::default()).unwrap();
        let lines = emit_premises(&g);
        let texts: Vec<_> = lines.iter().map(|l| l.text.as_str()).collect();
        assert!(texts.contains(&"<(*,r1,r2) --> contains>. %1.00;0.90%"));
        assert!(texts.contains(&"<(*,r2,12) --> area>. %1.00;0.90%"));
        assert_eq!(lines.len(), g.edge_count() + 8 * 2);
        let mut ids: Vec<_> = lines.iter().map(|l| l.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), lines.len());
        assert_eq!(premises_to_string(&lines), premises_to_string(&emit_premises(&g)));
    }

    #[test]
    fn parse_round_trip() {
        let scene = [
            r("s", 0.0, 0.0, 60.0, 30.0),
            r("p1", 2.0, 10.0, 10.0, 20.0),
            r("p2", 15.0, 12.0, 10.0, 18.0),
            r("d", 40.0, 3.0, 5.0, 5.0),
        ];
        let g = build_l1(&scene, &GeomParams::default()).unwrap();
        let parsed = parse_premises(&premises_to_string(&emit_premises(&g))).unwrap();
        let mut rebuilt: Vec<_> = parsed
            .iter()
            .filter(|p| g.relation(&p.relation).is_some())
            .map(|p| (p.relation.clone(), p.from.clone(), p.to.clone()))
            .collect();
        rebuilt.sort();
        assert_eq!(rebuilt, triples(&g));
        assert!(parse_premise("<(*,a,b) -> x>. %1;1%").is_none());
        assert!(matches!(
            parse_premises("garbage"),
            Err(SemanticsError::MalformedPremise { line: 1, .. })
        ));
    }

    #[test]
    fn rects_recovered_from_payload() {
        let scene = [r("a", 1.5, 2.0, 3.0, 4.0), r("b", 10.0, 0.0, 1.0, 1.0)];
        let g = build_l1(&scene, &GeomParams::default()).unwrap();
        assert_eq!(rects_from_graph(&g).unwrap(), scene.to_vec());
    }
}
