//! Bounded-resource rule engine over an L1 graph.
//!
//! Premises (graph edges) are admitted into a working memory of fixed
//! capacity, strongest first and then in stamp order; the rest are dropped.
//! Four rules then fire to a fixpoint:
//!
//! * R1 `contains(o,i) ∧ ¬floating(i) ⇒ shelf(o), product(i)`
//! * R2 `aligned(r,s) ∧ shelf(s) ⇒ shelf(r)` (either axis)
//! * R3 `aligned_h(r,p) ∧ product(p) ⇒ product(r)`
//! * R4 `floating(r) ∧ on_top_of(r,p) ∧ product(p) ⇒ product(r)`
//!
//! Conclusions are L2 beliefs about L1 rectangles. A conclusion about an
//! existing belief is pooled with it when their evidence is disjoint and
//! otherwise competes with it by expectation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{Edge, GraphError, Layer, LayeredGraph, Node, NodeKind, ABSTRACTS};
use crate::hash::fnv1a;
use crate::scene::Label;
use crate::semantics::{FLOATING_MARKER, IS_FLOATING};
use crate::truth::{combine, deduction, rank, Stamp, TruthValue, DEFAULT_OBSERVATION_CONFIDENCE};

const CONTAINS: &str = "contains";
const ALIGNED_H: &str = "aligned_h";
const ALIGNED_V: &str = "aligned_v";
const ON_TOP_OF: &str = "on_top_of";

/// Default labeling threshold on expectation.
pub const DEFAULT_THETA: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Product,
    Shelf,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Product => "product",
            Category::Shelf => "shelf",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<Category> for Label {
    fn from(c: Category) -> Label {
        match c {
            Category::Product => Label::Product,
            Category::Shelf => Label::Shelf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    #[serde(rename = "rect")]
    pub subject: String,
    pub category: Category,
    #[serde(flatten)]
    pub tv: TruthValueDoc,
    pub stamp: Stamp,
}

/// Flat `f`/`c` fields for belief dumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FcDoc", into = "FcDoc")]
pub struct TruthValueDoc(pub TruthValue);

#[derive(Serialize, Deserialize)]
struct FcDoc {
    f: f64,
    c: f64,
}

impl TryFrom<FcDoc> for TruthValueDoc {
    type Error = crate::truth::TruthError;
    fn try_from(d: FcDoc) -> Result<Self, Self::Error> {
        TruthValue::new(d.f, d.c).map(TruthValueDoc)
    }
}

impl From<TruthValueDoc> for FcDoc {
    fn from(t: TruthValueDoc) -> Self {
        FcDoc {
            f: t.0.frequency(),
            c: t.0.confidence(),
        }
    }
}

impl Belief {
    pub fn new(subject: impl Into<String>, category: Category, tv: TruthValue, stamp: Stamp) -> Self {
        Belief {
            subject: subject.into(),
            category,
            tv: TruthValueDoc(tv),
            stamp,
        }
    }

    pub fn truth(&self) -> TruthValue {
        self.tv.0
    }

    pub fn expectation(&self) -> f64 {
        self.tv.0.expectation()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReasonerBudget {
    /// Maximum number of premises admitted to working memory.
    pub wm_capacity: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the largest expectation change.
    pub delta: f64,
}

impl Default for ReasonerBudget {
    fn default() -> Self {
        ReasonerBudget {
            wm_capacity: 600,
            max_iterations: 8,
            delta: 1e-6,
        }
    }
}

impl ReasonerBudget {
    /// No admission cap and a generous iteration cap.
    pub fn unbounded() -> Self {
        ReasonerBudget {
            wm_capacity: usize::MAX,
            max_iterations: 64,
            delta: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.wm_capacity == 0 || self.max_iterations == 0 {
            return Err("wm_capacity and max_iterations must be positive".into());
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(format!("delta must be positive, got {}", self.delta));
        }
        Ok(())
    }
}

/// Optional expert knowledge about relation symmetry and inverses. Off unless
/// supplied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertAxioms {
    /// Relations (or relation families such as `aligned`, matching
    /// `aligned_h` and `aligned_v`) to be read in both directions.
    pub symmetric: Vec<String>,
    pub inverses: Vec<[String; 2]>,
}

impl ExpertAxioms {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn is_symmetric(&self, relation: &str) -> bool {
        self.symmetric.iter().any(|s| {
            relation == s
                || relation
                    .strip_prefix(s.as_str())
                    .is_some_and(|rest| rest.starts_with('_'))
        })
    }

    fn inverse_of(&self, relation: &str) -> Option<&str> {
        self.inverses.iter().find_map(|[a, b]| {
            if relation == a {
                Some(b.as_str())
            } else if relation == b {
                Some(a.as_str())
            } else {
                None
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    ContainsNotFloating,
    AlignedWithShelf,
    AlignedWithProduct,
    StackedOnProduct,
}

/// One rule firing, recorded when tracing is on.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub rule: Rule,
    pub subject: String,
    pub category: Category,
    pub tv: TruthValue,
    pub premise_confidences: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferOutcome {
    /// Sorted by subject, then category.
    pub beliefs: Vec<Belief>,
    pub admitted: usize,
    pub dropped: usize,
    pub iterations: usize,
    pub converged: bool,
    pub derivations: Vec<Derivation>,
}

/// One belief per `(subject, category)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeliefStore(BTreeMap<(String, Category), Belief>);

impl BeliefStore {
    pub fn get(&self, subject: &str, category: Category) -> Option<&Belief> {
        self.0.get(&(subject.to_string(), category))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Revise with disjoint evidence, otherwise keep the higher-ranked belief.
    pub fn absorb(&mut self, b: Belief) {
        match self.0.get_mut(&(b.subject.clone(), b.category)) {
            Some(existing) => {
                let (tv, stamp) = combine(existing.truth(), &existing.stamp, b.truth(), &b.stamp);
                existing.tv = TruthValueDoc(tv);
                existing.stamp = stamp;
            }
            None => {
                self.0.insert((b.subject.clone(), b.category), b);
            }
        }
    }

    fn max_expectation_change(&self, before: &BeliefStore) -> f64 {
        let keys: BTreeSet<_> = self.0.keys().chain(before.0.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let e = |s: &BeliefStore| s.0.get(k).map_or(0.5, Belief::expectation);
                (e(self) - e(before)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn into_beliefs(self) -> Vec<Belief> {
        self.0.into_values().collect()
    }
}

impl FromIterator<Belief> for BeliefStore {
    fn from_iter<I: IntoIterator<Item = Belief>>(iter: I) -> Self {
        let mut store = BeliefStore::default();
        for b in iter {
            store.absorb(b);
        }
        store
    }
}

/// Combine beliefs from independent runs. Candidates for the same key are
/// folded strongest first, so the result does not depend on input order.
pub fn merge_beliefs(candidates: impl IntoIterator<Item = Belief>) -> Vec<Belief> {
    let mut groups: BTreeMap<(String, Category), Vec<Belief>> = BTreeMap::new();
    for b in candidates {
        groups.entry((b.subject.clone(), b.category)).or_default().push(b);
    }
    let mut store = BeliefStore::default();
    for (_, mut group) in groups {
        group.sort_by(|a, b| rank((&b.truth(), &b.stamp), (&a.truth(), &a.stamp)));
        group.dedup();
        for b in group {
            store.absorb(b);
        }
    }
    store.into_beliefs()
}

#[derive(Debug, Clone)]
struct Premise {
    relation: String,
    from: String,
    to: String,
    tv: TruthValue,
    stamp: Stamp,
}

impl Premise {
    fn from_edge(e: &Edge) -> Self {
        Premise {
            relation: e.relation.clone(),
            from: e.from.clone(),
            to: e.to.clone(),
            tv: e.tv,
            stamp: e.stamp.clone(),
        }
    }
}

/// Stamp id of the reified "not floating" observation about `rect`. The high
/// bit keeps it clear of edge stamps.
pub fn not_floating_stamp_id(rect: &str) -> u64 {
    (1 << 63) | (fnv1a(rect.as_bytes()) >> 1)
}

#[derive(Debug, Clone)]
pub struct Reasoner {
    pub budget: ReasonerBudget,
    pub axioms: Option<ExpertAxioms>,
    pub observation_confidence: f64,
    pub trace: bool,
}

struct WorkingMemory<'g> {
    premises: Vec<Premise>,
    /// WM `is_floating` premise per rect, for R4.
    floating: HashMap<String, usize>,
    graph: &'g LayeredGraph,
    admitted: usize,
    dropped: usize,
}

impl Reasoner {
    pub fn new(budget: ReasonerBudget) -> Self {
        Reasoner {
            budget,
            axioms: None,
            observation_confidence: DEFAULT_OBSERVATION_CONFIDENCE,
            trace: false,
        }
    }

    pub fn with_axioms(mut self, axioms: Option<ExpertAxioms>) -> Self {
        self.axioms = axioms;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    fn admit<'g>(&self, g: &'g LayeredGraph) -> WorkingMemory<'g> {
        let mut edges: Vec<&Edge> = g.edges().collect();
        edges.sort_by(|a, b| {
            b.tv.confidence()
                .total_cmp(&a.tv.confidence())
                .then(a.stamp.min_id().cmp(&b.stamp.min_id()))
                .then_with(|| (&a.relation, &a.from, &a.to).cmp(&(&b.relation, &b.from, &b.to)))
        });
        let admitted = edges.len().min(self.budget.wm_capacity);
        let dropped = edges.len() - admitted;
        let mut premises: Vec<Premise> = edges[..admitted].iter().map(|e| Premise::from_edge(e)).collect();

        if let Some(ax) = &self.axioms {
            let mut seen: BTreeSet<(String, String, String)> = premises
                .iter()
                .map(|p| (p.relation.clone(), p.from.clone(), p.to.clone()))
                .collect();
            let mut extra = Vec::new();
            for p in &premises {
                let mut derived = Vec::new();
                if ax.is_symmetric(&p.relation) {
                    derived.push(p.relation.clone());
                }
                if let Some(inv) = ax.inverse_of(&p.relation) {
                    derived.push(inv.to_string());
                }
                for relation in derived {
                    if seen.insert((relation.clone(), p.to.clone(), p.from.clone())) {
                        extra.push(Premise {
                            relation,
                            from: p.to.clone(),
                            to: p.from.clone(),
                            tv: p.tv,
                            stamp: p.stamp.clone(),
                        });
                    }
                }
            }
            premises.extend(extra);
        }

        let mut floating = HashMap::new();
        for (i, p) in premises.iter().enumerate() {
            if p.relation == IS_FLOATING {
                floating.entry(p.from.clone()).or_insert(i);
            }
        }
        WorkingMemory {
            premises,
            floating,
            graph: g,
            admitted,
            dropped,
        }
    }

    /// Observed "not floating" fact about `rect`: the negated floating edge if
    /// the graph has one, otherwise a positive observation.
    fn not_floating(&self, g: &LayeredGraph, rect: &str) -> (TruthValue, Stamp) {
        match g.query(IS_FLOATING, rect, FLOATING_MARKER) {
            Some(e) => (e.tv.negation(), e.stamp.clone()),
            None => (
                TruthValue::new(1.0, self.observation_confidence).unwrap_or_else(|_| TruthValue::observed()),
                Stamp::single(not_floating_stamp_id(rect)),
            ),
        }
    }

    fn fire(&self, wm: &WorkingMemory<'_>, beliefs: &BeliefStore, trace: &mut Vec<Derivation>) -> Vec<Belief> {
        let mut out = Vec::new();
        let mut emit = |rule: Rule, subject: &str, category: Category, tv: TruthValue, stamp: Stamp, premises: &[TruthValue]| {
            if tv.confidence() <= 0.0 {
                return;
            }
            if self.trace {
                trace.push(Derivation {
                    rule,
                    subject: subject.to_string(),
                    category,
                    tv,
                    premise_confidences: premises.iter().map(TruthValue::confidence).collect(),
                });
            }
            out.push(Belief::new(subject, category, tv, stamp));
        };

        for p in &wm.premises {
            if p.from == p.to {
                continue;
            }
            match p.relation.as_str() {
                CONTAINS => {
                    let (nf_tv, nf_stamp) = self.not_floating(wm.graph, &p.to);
                    if p.stamp.overlaps(&nf_stamp) {
                        continue;
                    }
                    let tv = deduction(p.tv, nf_tv);
                    let stamp = p.stamp.union(&nf_stamp);
                    emit(Rule::ContainsNotFloating, &p.from, Category::Shelf, tv, stamp.clone(), &[p.tv, nf_tv]);
                    emit(Rule::ContainsNotFloating, &p.to, Category::Product, tv, stamp, &[p.tv, nf_tv]);
                }
                ALIGNED_H | ALIGNED_V => {
                    if let Some(shelf) = beliefs.get(&p.to, Category::Shelf) {
                        if !p.stamp.overlaps(&shelf.stamp) {
                            let tv = deduction(p.tv, shelf.truth());
                            emit(
                                Rule::AlignedWithShelf,
                                &p.from,
                                Category::Shelf,
                                tv,
                                p.stamp.union(&shelf.stamp),
                                &[p.tv, shelf.truth()],
                            );
                        }
                    }
                    if p.relation == ALIGNED_H {
                        if let Some(prod) = beliefs.get(&p.to, Category::Product) {
                            if !p.stamp.overlaps(&prod.stamp) {
                                let tv = deduction(p.tv, prod.truth());
                                emit(
                                    Rule::AlignedWithProduct,
                                    &p.from,
                                    Category::Product,
                                    tv,
                                    p.stamp.union(&prod.stamp),
                                    &[p.tv, prod.truth()],
                                );
                            }
                        }
                    }
                }
                ON_TOP_OF => {
                    let Some(&fi) = wm.floating.get(&p.from) else { continue };
                    let Some(prod) = beliefs.get(&p.to, Category::Product) else { continue };
                    let fl = &wm.premises[fi];
                    if p.stamp.overlaps(&fl.stamp) || p.stamp.overlaps(&prod.stamp) || fl.stamp.overlaps(&prod.stamp) {
                        continue;
                    }
                    let tv = deduction(p.tv, deduction(fl.tv, prod.truth()));
                    let stamp = p.stamp.union(&fl.stamp).union(&prod.stamp);
                    emit(Rule::StackedOnProduct, &p.from, Category::Product, tv, stamp, &[p.tv, fl.tv, prod.truth()]);
                }
                _ => {}
            }
        }
        out
    }

    pub fn infer(&self, g: &LayeredGraph) -> InferOutcome {
        let wm = self.admit(g);
        let mut store = BeliefStore::default();
        let mut derivations = Vec::new();
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.budget.max_iterations {
            iterations += 1;
            let before = store.clone();
            for b in self.fire(&wm, &before, &mut derivations) {
                store.absorb(b);
            }
            if store.max_expectation_change(&before) <= self.budget.delta {
                converged = true;
                break;
            }
        }
        InferOutcome {
            beliefs: store.into_beliefs(),
            admitted: wm.admitted,
            dropped: wm.dropped,
            iterations,
            converged,
            derivations,
        }
    }

    /// One more round of rule firing on top of `beliefs`.
    pub fn iterate_once(&self, g: &LayeredGraph, beliefs: &[Belief]) -> Vec<Belief> {
        let wm = self.admit(g);
        let before: BeliefStore = beliefs.iter().cloned().collect();
        let mut store = before.clone();
        for b in self.fire(&wm, &before, &mut Vec::new()) {
            store.absorb(b);
        }
        store.into_beliefs()
    }
}

pub fn infer(g: &LayeredGraph, budget: ReasonerBudget) -> InferOutcome {
    Reasoner::new(budget).infer(g)
}

/// Label each rect by its strongest belief. A category wins when its
/// expectation is strictly higher than the other's and at least `theta`;
/// missing beliefs count as 0.5.
pub fn classify<'a>(
    beliefs: &[Belief],
    rect_ids: impl IntoIterator<Item = &'a str>,
    theta: f64,
) -> BTreeMap<String, Label> {
    let mut exp: HashMap<(&str, Category), f64> = HashMap::new();
    for b in beliefs {
        exp.insert((b.subject.as_str(), b.category), b.expectation());
    }
    rect_ids
        .into_iter()
        .map(|id| {
            let e = |c| exp.get(&(id, c)).copied().unwrap_or(0.5);
            let (shelf, product) = (e(Category::Shelf), e(Category::Product));
            let label = if shelf > product && shelf >= theta {
                Label::Shelf
            } else if product > shelf && product >= theta {
                Label::Product
            } else {
                Label::Other
            };
            (id.to_string(), label)
        })
        .collect()
}

/// Concept node id for an L2 category.
pub fn concept_id(c: Category) -> String {
    format!("concept:{}", c.as_str())
}

/// Copy of `g` with each belief recorded as an `abstracts` edge from the L1
/// rect to its L2 category concept.
pub fn attach_beliefs(g: &LayeredGraph, beliefs: &[Belief]) -> Result<LayeredGraph, GraphError> {
    let mut out = g.clone();
    for c in [Category::Product, Category::Shelf] {
        if out.node(&concept_id(c)).is_none() {
            out.add_node(Node::new(concept_id(c), Layer::L2, NodeKind::Concept))?;
        }
    }
    for b in beliefs {
        out.assert_edge(Edge::new(ABSTRACTS, b.subject.clone(), concept_id(b.category), b.truth(), b.stamp.clone()))?;
    }
    Ok(out)
}

/// JSON-lines belief dump.
pub fn beliefs_to_jsonl(beliefs: &[Belief]) -> String {
    let mut out = String::new();
    for b in beliefs {
        out.push_str(&serde_json::to_string(b).expect("belief serializes"));
        out.push('\n');
    }
    out
}

pub fn beliefs_from_jsonl(text: &str) -> Result<Vec<Belief>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
