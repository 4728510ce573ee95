//! Focus of attention: split the scene into overlapping covers, reason in each
//! cover separately and merge the results.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Rect;
use crate::graph::LayeredGraph;
use crate::reasoner::{classify, merge_beliefs, Belief, Reasoner};
use crate::scene::Label;
use crate::semantics::FLOATING_MARKER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoAParams {
    pub max_cover_size: usize,
    /// Fallback covers smaller than this are widened to two-hop neighbors.
    pub min_cover_size: usize,
}

impl Default for FoAParams {
    fn default() -> Self {
        FoAParams {
            max_cover_size: 30,
            min_cover_size: 3,
        }
    }
}

impl FoAParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_cover_size == 0 || self.max_cover_size < self.min_cover_size {
            return Err(format!(
                "need max_cover_size >= min_cover_size >= 1, got {} and {}",
                self.max_cover_size, self.min_cover_size
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cover {
    pub seed: String,
    pub members: BTreeSet<String>,
}

struct Scene<'a> {
    area: HashMap<&'a str, f64>,
    neighbors: BTreeMap<&'a str, BTreeSet<&'a str>>,
}

impl<'a> Scene<'a> {
    fn new(rects: &'a [Rect], g: &'a LayeredGraph) -> Self {
        let area: HashMap<&str, f64> = rects.iter().map(|r| (r.id.as_str(), r.area())).collect();
        let mut neighbors: BTreeMap<&str, BTreeSet<&str>> =
            rects.iter().map(|r| (r.id.as_str(), BTreeSet::new())).collect();
        for e in g.edges() {
            let (a, b) = (e.from.as_str(), e.to.as_str());
            if a == b || !area.contains_key(a) || !area.contains_key(b) {
                continue;
            }
            neighbors.get_mut(a).unwrap().insert(b);
            neighbors.get_mut(b).unwrap().insert(a);
        }
        Scene { area, neighbors }
    }

    /// Larger first, then id ascending.
    fn by_size(&self, a: &str, b: &str) -> Ordering {
        self.area[b].total_cmp(&self.area[a]).then(a.cmp(b))
    }

    fn sorted(&self, ids: impl IntoIterator<Item = &'a str>) -> Vec<&'a str> {
        let mut v: Vec<_> = ids.into_iter().collect();
        v.sort_by(|a, b| self.by_size(a, b));
        v.dedup();
        v
    }

    fn grow(&self, seed: &'a str, max: usize) -> BTreeSet<&'a str> {
        let mut members = BTreeSet::from([seed]);
        let mut frontier: BTreeSet<&str> = self.neighbors[seed].clone();
        while members.len() < max {
            let Some(next) = frontier
                .iter()
                .copied()
                .filter(|id| !members.contains(id))
                .min_by(|a, b| self.by_size(a, b))
            else {
                break;
            };
            members.insert(next);
            frontier.remove(next);
            frontier.extend(self.neighbors[next].iter().copied());
        }
        members
    }

    fn fallback(&self, id: &'a str, p: &FoAParams) -> BTreeSet<&'a str> {
        let mut members = BTreeSet::from([id]);
        for n in self.sorted(self.neighbors[id].iter().copied()) {
            if members.len() >= p.max_cover_size {
                break;
            }
            members.insert(n);
        }
        if members.len() < p.min_cover_size {
            let hop2 = self.sorted(
                self.neighbors[id]
                    .iter()
                    .flat_map(|n| self.neighbors[n].iter().copied())
                    .filter(|n| !members.contains(n)),
            );
            for n in hop2 {
                if members.len() >= p.min_cover_size {
                    break;
                }
                members.insert(n);
            }
        }
        members
    }
}

fn to_cover(seed: &str, members: &BTreeSet<&str>) -> Cover {
    Cover {
        seed: seed.to_string(),
        members: members.iter().map(|s| s.to_string()).collect(),
    }
}

/// Build covers: seeds are the containers in decreasing area, each grown
/// best-first through relation neighbors; rects left over get fallback
/// covers of their direct neighborhood.
pub fn build_covers(scene: &[Rect], g: &LayeredGraph, p: &FoAParams) -> Vec<Cover> {
    let s = Scene::new(scene, g);
    let seeds = s.sorted(
        g.edges()
            .filter(|e| e.relation == "contains" && e.from != e.to && s.area.contains_key(e.to.as_str()))
            .filter_map(|e| s.area.get_key_value(e.from.as_str()).map(|(k, _)| *k)),
    );

    let mut covered: BTreeSet<&str> = BTreeSet::new();
    let mut covers = Vec::new();
    for seed in seeds {
        if covered.len() == scene.len() {
            break;
        }
        if covered.contains(seed) {
            continue;
        }
        let members = s.grow(seed, p.max_cover_size);
        covered.extend(members.iter().copied());
        covers.push(to_cover(seed, &members));
    }

    let rest = s.sorted(scene.iter().map(|r| r.id.as_str()).filter(|id| !covered.contains(id)));
    for id in rest {
        if covered.contains(id) {
            continue;
        }
        let members = s.fallback(id, p);
        covered.extend(members.iter().copied());
        covers.push(to_cover(id, &members));
    }
    covers
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoaOutcome {
    pub covers: Vec<Cover>,
    pub beliefs: Vec<Belief>,
    pub labels: BTreeMap<String, Label>,
}

/// Run the reasoner on each cover's induced subgraph and merge.
pub fn reason_over_covers(g: &LayeredGraph, covers: &[Cover], reasoner: &Reasoner) -> Vec<Belief> {
    let per_cover: Vec<Vec<Belief>> = covers
        .par_iter()
        .map(|c| {
            let keep: BTreeSet<&str> = c
                .members
                .iter()
                .map(String::as_str)
                .chain([FLOATING_MARKER])
                .collect();
            reasoner.infer(&g.induced(&keep)).beliefs
        })
        .collect();
    merge_beliefs(per_cover.into_iter().flatten())
}

pub fn reason_with_foa(
    scene: &[Rect],
    g: &LayeredGraph,
    reasoner: &Reasoner,
    p: &FoAParams,
    theta: f64,
) -> FoaOutcome {
    let covers = build_covers(scene, g, p);
    let beliefs = reason_over_covers(g, &covers, reasoner);
    let labels = classify(&beliefs, scene.iter().map(|r| r.id.as_str()), theta);
    FoaOutcome {
        covers,
        beliefs,
        labels,
    }
}

pub fn covers_to_json(covers: &[Cover]) -> String {
    serde_json::to_string_pretty(covers).expect("covers serialize")
}

pub fn covers_from_json(text: &str) -> Result<Vec<Cover>, serde_json::Error> {
    serde_json::from_str(text)
}
