//! Premise-level noise: drop or axis-flip L1 edges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::SpatialRelation;
use crate::graph::{Edge, GraphError, LayeredGraph};

/// Visit edges in key order; each is hit with probability `rate`, and a hit
/// edge is either dropped or replaced by its mirrored relation (same
/// endpoints, truth value and stamp), with equal odds. Relations without a
/// mirror are dropped.
pub fn apply_relation_noise(g: &LayeredGraph, rate: f64, seed: u64) -> Result<LayeredGraph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = g.clone();
    let edges: Vec<Edge> = g.edges().cloned().collect();
    let mut flipped = Vec::new();
    for e in edges {
        if !rng.random_bool(rate.clamp(0.0, 1.0)) {
            continue;
        }
        let flip = rng.random_bool(0.5);
        out.remove_edge(&e.relation, &e.from, &e.to);
        if flip {
            if let Some(m) = SpatialRelation::from_name(&e.relation).map(SpatialRelation::mirror) {
                flipped.push(Edge { relation: m.name().to_string(), ..e });
            }
        }
    }
    for e in flipped {
        out.assert_edge(e)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeomParams, Rect};
    use crate::semantics::build_l1;

    fn graph() -> LayeredGraph {
        let scene: Vec<Rect> = (0..6)
            .map(|i| Rect::new(format!("r{i}"), 12.0 * i as f64, 0.0, 10.0, 10.0).unwrap())
            .chain([Rect::new("big", -5.0, -5.0, 100.0, 30.0).unwrap()])
            .collect();
        build_l1(&scene, &GeomParams::default()).unwrap()
    }

    #[test]
    fn zero_rate_is_identity() {
        let g = graph();
        assert_eq!(apply_relation_noise(&g, 0.0, 1).unwrap(), g);
    }

    #[test]
    fn full_rate_changes_everything() {
        let g = graph();
        let n = apply_relation_noise(&g, 1.0, 1).unwrap();
        // every surviving edge is a mirrored copy of an original one
        for e in n.edges() {
            let m = SpatialRelation::from_name(&e.relation).unwrap().mirror();
            let orig = g.query(m.name(), &e.from, &e.to).unwrap();
            assert_eq!(orig.stamp, e.stamp);
        }
        assert!(n.edge_count() < g.edge_count());
        assert!(n.audit().is_empty());
    }

    #[test]
    fn seeded() {
        let g = graph();
        assert_eq!(apply_relation_noise(&g, 0.3, 5).unwrap(), apply_relation_noise(&g, 0.3, 5).unwrap());
    }
}
