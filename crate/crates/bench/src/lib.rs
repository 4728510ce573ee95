//! Shared fixtures for the criterion benches.

use strata_core::percept::render_outlines;
use strata_core::synthlab::{apply_relation_noise, generate_scene, render_scene};
use strata_core::{GeomParams, GrayImage, LayeredGraph, Rect, SceneSpec};

/// A full-size shelf scene with its (optionally noisy) relation graph.
pub struct Fixture {
    pub rects: Vec<Rect>,
    pub graph: LayeredGraph,
    pub image: GrayImage,
}

pub fn shelf_scene(seed: u64, noise: f64) -> Fixture {
    let scene = generate_scene(&SceneSpec {
        seed,
        ..Default::default()
    })
    .expect("default spec is feasible");
    let rects = scene.rects().expect("generated rects are valid");
    let clean = strata_core::semantics::build_l1(&rects, &GeomParams::default()).expect("graph builds");
    let graph = apply_relation_noise(&clean, noise, seed).expect("noise keeps the graph valid");
    let image = render_scene(&scene).expect("scene renders");
    Fixture { rects, graph, image }
}

/// `n` disjoint boxes on a grid, rendered as outlines.
pub fn box_grid(n: usize) -> GrayImage {
    let per_row = (n as f64).sqrt().ceil() as usize;
    let rects: Vec<Rect> = (0..n)
        .map(|i| {
            let (col, row) = (i % per_row, i / per_row);
            Rect::new(format!("b{i}"), (4 + col * 40) as f64, (4 + row * 40) as f64, 30.0, 24.0).expect("valid box")
        })
        .collect();
    let side = 8 + per_row * 40;
    render_outlines(&rects, side, side)
}
