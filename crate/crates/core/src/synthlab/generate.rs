//! Seeded shelf scenes with ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{floating, holds, inside, GeomParams, Rect, SpatialRelation};
use crate::percept::{render_outlines, GrayImage};
use crate::scene::{Label, Scene, SceneRect};

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("infeasible scene spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeRange {
    pub w: [u32; 2],
    pub h: [u32; 2],
}

/// Scene generator settings. The defaults give the 152-rect profile:
/// 16 shelves in two bays, about 107 products and 29 distractors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    pub n_bays: usize,
    /// Shelf rows per bay.
    pub n_shelf_rows: usize,
    pub shelf_size: [u32; 2],
    pub bay_gap: u32,
    pub products_per_row: [usize; 2],
    pub product_size: SizeRange,
    pub product_gap: [u32; 2],
    /// Chance that a product carries a smaller product on top of it.
    pub stack_prob: f64,
    pub stack_size: SizeRange,
    /// Spread of the product resting line, clamped to one pixel.
    pub jitter_sigma: f64,
    /// Fraction of L1 edges dropped or axis-flipped after extraction.
    pub relation_noise: f64,
    pub n_distractors: usize,
    pub distractor_size: SizeRange,
    /// Fraction of distractors placed inside shelf headroom.
    pub inside_fraction: f64,
    /// Empty border around the shelving.
    pub margin: u32,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            seed: 0,
            n_bays: 2,
            n_shelf_rows: 8,
            shelf_size: [320, 96],
            bay_gap: 110,
            products_per_row: [6, 7],
            product_size: SizeRange {
                w: [22, 34],
                h: [28, 48],
            },
            product_gap: [3, 8],
            stack_prob: 0.12,
            stack_size: SizeRange {
                w: [12, 20],
                h: [14, 24],
            },
            jitter_sigma: 0.5,
            relation_noise: 0.0,
            n_distractors: 29,
            distractor_size: SizeRange {
                w: [5, 12],
                h: [5, 10],
            },
            inside_fraction: 0.7,
            margin: 60,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |m: String| Err(GenerateError::InvalidSpec(m));
        for (name, v) in [
            ("stack_prob", self.stack_prob),
            ("relation_noise", self.relation_noise),
            ("inside_fraction", self.inside_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return bad(format!("jitter_sigma must be >= 0, got {}", self.jitter_sigma));
        }
        let ranges = [
            ("products_per_row", [self.products_per_row[0] as u32, self.products_per_row[1] as u32]),
            ("product_gap", self.product_gap),
            ("product_size.w", self.product_size.w),
            ("product_size.h", self.product_size.h),
            ("stack_size.w", self.stack_size.w),
            ("stack_size.h", self.stack_size.h),
            ("distractor_size.w", self.distractor_size.w),
            ("distractor_size.h", self.distractor_size.h),
        ];
        for (name, [lo, hi]) in ranges {
            if lo > hi {
                return bad(format!("{name} range is empty: [{lo}, {hi}]"));
            }
        }
        for (name, [lo, _]) in &ranges[2..] {
            if *lo == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.shelf_size.contains(&0) {
            return bad("shelf_size must be positive".into());
        }
        Ok(())
    }

    fn check_feasible(&self) -> Result<(), GenerateError> {
        let [sw, sh] = self.shelf_size;
        let n = self.products_per_row[1] as u32;
        let row = n * self.product_size.w[1] + (n + 1) * self.product_gap[1];
        if self.n_shelf_rows > 0 && self.n_bays > 0 && row > sw {
            return Err(GenerateError::InfeasibleSpec(format!(
                "{n} products of width up to {} with gaps up to {} need {row} px, shelf is {sw}",
                self.product_size.w[1], self.product_gap[1]
            )));
        }
        let stack = if self.stack_prob > 0.0 { self.stack_size.h[1] } else { 0 };
        if self.product_size.h[1] + stack + 4 > sh {
            return Err(GenerateError::InfeasibleSpec(format!(
                "products up to {} px tall (plus {stack} stacked) do not fit shelf height {sh}",
                self.product_size.h[1]
            )));
        }
        if self.stack_prob > 0.0 && self.stack_size.w[0] + 2 > self.product_size.w[0] {
            return Err(GenerateError::InfeasibleSpec(
                "stacked products must be narrower than the products they rest on".into(),
            ));
        }
        let gap = GeomParams::default().neighbor_gap;
        if self.n_bays > 1 && f64::from(self.bay_gap) <= 2.0 * gap {
            return Err(GenerateError::InfeasibleSpec(format!(
                "bay_gap {} must exceed twice the neighbor gap",
                self.bay_gap
            )));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [u32; 2]) -> u32 {
    rng.random_range(lo..=hi)
}

fn rect(x: u32, y: u32, w: u32, h: u32) -> Rect {
    Rect::new("", x as f64, y as f64, w as f64, h as f64).expect("positive extent")
}

/// Forbidden pairings for a distractor: anything a rule could use to label
/// it or its neighbors.
fn distractor_conflicts(d: &Rect, container: Option<&Rect>, placed: &[(Rect, Label)], p: &GeomParams) -> bool {
    use SpatialRelation::*;
    placed.iter().any(|(x, _)| {
        if container.is_some_and(|c| std::ptr::eq(c, x)) {
            return false;
        }
        d.intersection_area(x) > 0.0
            || inside(d, x, p)
            || inside(x, d, p)
            || [AlignedH, AlignedV, OnTopOf, Under]
                .into_iter()
                .any(|rel| holds(rel, d, x, p) || holds(rel, x, d, p))
    })
}

/// Generate a labeled scene. Coordinates are integral; ids `r001`, `r002`,
/// ... follow raster order (top to bottom, then left to right).
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, GenerateError> {
    spec.validate()?;
    spec.check_feasible()?;
    let p = GeomParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = Normal::new(0.0, spec.jitter_sigma.max(1e-12)).expect("finite sigma");
    let [sw, sh] = spec.shelf_size;
    let m = spec.margin;

    let mut shelves = Vec::new();
    let mut placed: Vec<(Rect, Label)> = Vec::new();
    for bay in 0..spec.n_bays as u32 {
        for row in 0..spec.n_shelf_rows as u32 {
            let s = rect(m + bay * (sw + spec.bay_gap), m + row * sh, sw, sh);
            shelves.push(s.clone());
            placed.push((s, Label::Shelf));
        }
    }

    for s in &shelves {
        let n = rng.random_range(spec.products_per_row[0]..=spec.products_per_row[1]);
        let mut x = s.x as u32;
        let floor = s.bottom() as u32;
        for _ in 0..n {
            x += uniform(&mut rng, spec.product_gap).max(1);
            let w = uniform(&mut rng, spec.product_size.w);
            let h = uniform(&mut rng, spec.product_size.h);
            let lift = jitter.sample(&mut rng).abs().round().min(1.0) as u32;
            if x + w + 1 > s.right() as u32 {
                break;
            }
            let prod = rect(x, floor - lift - h, w, h);
            if rng.random_bool(spec.stack_prob) {
                let qw = uniform(&mut rng, [spec.stack_size.w[0], spec.stack_size.w[1].min(w - 2)]);
                let qh = uniform(&mut rng, spec.stack_size.h);
                let qx = x + rng.random_range(1..=w - qw - 1);
                placed.push((rect(qx, prod.y as u32 - qh, qw, qh), Label::Product));
            }
            placed.push((prod, Label::Product));
            x += w;
        }
    }

    let (width, height) = canvas_size(&shelves, m);
    let n_inside = (spec.n_distractors as f64 * spec.inside_fraction).round() as usize;
    for k in 0..spec.n_distractors {
        let mut ok = false;
        for _ in 0..10_000 {
            let w = uniform(&mut rng, spec.distractor_size.w);
            let h = uniform(&mut rng, spec.distractor_size.h);
            let (d, container) = if k < n_inside && !shelves.is_empty() {
                let s = &shelves[rng.random_range(0..shelves.len())];
                let (sx, sy) = (s.x as u32, s.y as u32);
                if sw < w + 8 || sh < h + 12 {
                    continue;
                }
                let x = sx + rng.random_range(3..=sw - w - 3);
                let y = sy + rng.random_range(3..=sh - h - 8);
                let idx = placed.iter().position(|(r, _)| r == s);
                (rect(x, y, w, h), idx)
            } else {
                if width < w + 4 || height < h + 4 {
                    break;
                }
                let x = rng.random_range(2..=width - w - 2);
                let y = rng.random_range(2..=height - h - 2);
                (rect(x, y, w, h), None)
            };
            let container_rect = container.map(|i| &placed[i].0);
            if distractor_conflicts(&d, container_rect, &placed, &p) {
                continue;
            }
            if container.is_none() && shelves.iter().any(|s| d.intersection_area(s) > 0.0) {
                continue;
            }
            placed.push((d, Label::Other));
            ok = true;
            break;
        }
        if !ok {
            return Err(GenerateError::InfeasibleSpec(format!(
                "no room for distractor {} of {}",
                k + 1,
                spec.n_distractors
            )));
        }
    }

    placed.sort_by(|(a, _), (b, _)| (a.y, a.x, a.w, a.h).partial_cmp(&(b.y, b.x, b.w, b.h)).unwrap());
    let digits = placed.len().to_string().len().max(3);
    let rects = placed
        .into_iter()
        .enumerate()
        .map(|(i, (mut r, l))| {
            r.id = format!("r{:0digits$}", i + 1);
            SceneRect::from_rect(&r, Some(l))
        })
        .collect();
    Ok(Scene { rects, params: None })
}

fn canvas_size(shelves: &[Rect], margin: u32) -> (u32, u32) {
    let right = shelves.iter().map(|s| s.right() as u32).max().unwrap_or(0);
    let bottom = shelves.iter().map(|s| s.bottom() as u32).max().unwrap_or(0);
    (right + margin, bottom + margin)
}

/// Outline rendering of a scene, sized to its extent plus a small border.
pub fn render_scene(scene: &Scene) -> Result<GrayImage, crate::scene::SceneError> {
    let rects = scene.rects()?;
    let w = rects.iter().map(|r| r.right().ceil() as usize).max().unwrap_or(0) + 8;
    let h = rects.iter().map(|r| r.bottom().ceil() as usize).max().unwrap_or(0) + 8;
    Ok(render_outlines(&rects, w, h))
}

/// Check the ground-truth contract: every product sits in exactly one shelf
/// or on top of another product and is not floating; every other rect
/// inside a shelf is floating. Returns the offending ids.
pub fn ground_truth_violations(scene: &Scene, p: &GeomParams) -> Vec<String> {
    let Ok(rects) = scene.rects() else {
        return vec!["<invalid scene>".into()];
    };
    let labels: Vec<Option<Label>> = scene.rects.iter().map(|r| r.label).collect();
    let mut bad = Vec::new();
    for (i, r) in rects.iter().enumerate() {
        let shelves_around = rects
            .iter()
            .zip(&labels)
            .filter(|(s, l)| **l == Some(Label::Shelf) && inside(r, s, p))
            .count();
        let ok = match labels[i] {
            Some(Label::Product) => {
                let stacked = rects
                    .iter()
                    .zip(&labels)
                    .any(|(q, l)| *l == Some(Label::Product) && q.id != r.id && holds(SpatialRelation::OnTopOf, r, q, p));
                (shelves_around == 1 || stacked) && !floating(r, &rects, p)
            }
            Some(Label::Other) => shelves_around == 0 || floating(r, &rects, p),
            Some(Label::Shelf) => shelves_around == 0,
            None => true,
        };
        if !ok {
            bad.push(r.id.clone());
        }
    }
    bad
}
