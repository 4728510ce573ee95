//! Axis-aligned rectangles and the directed spatial predicates between them.
//!
//! Image convention: `y` grows downward, so `bottom = y + h`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("rect `{id}` has non-positive or non-finite extent ({w} x {h})")]
    BadExtent { id: String, w: f64, h: f64 },
    #[error("rect `{0}` has a non-finite coordinate")]
    BadCoordinate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRect")]
pub struct Rect {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Deserialize)]
struct RawRect {
    id: String,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl TryFrom<RawRect> for Rect {
    type Error = GeometryError;

    fn try_from(r: RawRect) -> Result<Self, Self::Error> {
        Rect::new(r.id, r.x, r.y, r.w, r.h)
    }
}

/// Names of the per-rectangle attributes, in payload order.
pub const ATTRIBUTE_NAMES: [&str; 8] = [
    "x",
    "y",
    "center_x",
    "center_y",
    "width",
    "height",
    "area",
    "circumference",
];

impl Rect {
    pub fn new(id: impl Into<String>, x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        let id = id.into();
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            return Err(GeometryError::BadExtent { id, w, h });
        }
        if !(x.is_finite() && y.is_finite()) {
            return Err(GeometryError::BadCoordinate(id));
        }
        Ok(Rect { id, x, y, w, h })
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn circumference(&self) -> f64 {
        2.0 * (self.w + self.h)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Rect {
        Rect {
            x: self.x + dx,
            y: self.y + dy,
            ..self.clone()
        }
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = (self.right().min(other.right()) - self.x.max(other.x)).max(0.0);
        let h = (self.bottom().min(other.bottom()) - self.y.max(other.y)).max(0.0);
        w * h
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other);
        inter / (self.area() + other.area() - inter)
    }
}

pub fn attributes(r: &Rect) -> BTreeMap<String, f64> {
    let (cx, cy) = r.center();
    let values = [r.x, r.y, cx, cy, r.w, r.h, r.area(), r.circumference()];
    ATTRIBUTE_NAMES
        .iter()
        .zip(values)
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

/// Tolerances for the spatial predicates, in pixels unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeomParams {
    pub eps_align: f64,
    pub eps_touch: f64,
    /// Fraction of the narrower extent two boxes must share.
    pub overlap_frac: f64,
    pub neighbor_gap: f64,
    pub containment_margin: f64,
}

impl Default for GeomParams {
    fn default() -> Self {
        GeomParams {
            eps_align: 4.0,
            eps_touch: 3.0,
            overlap_frac: 0.5,
            neighbor_gap: 40.0,
            containment_margin: 0.0,
        }
    }
}

impl GeomParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("eps_align", self.eps_align),
            ("eps_touch", self.eps_touch),
            ("neighbor_gap", self.neighbor_gap),
            ("containment_margin", self.containment_margin),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        if !(self.overlap_frac > 0.0 && self.overlap_frac <= 1.0) {
            return Err(format!("overlap_frac must be in (0, 1], got {}", self.overlap_frac));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpatialRelation {
    Above,
    AlignedH,
    AlignedV,
    Below,
    Contains,
    Inside,
    OnLeftOf,
    OnRightOf,
    OnTopOf,
    Under,
}

impl SpatialRelation {
    pub const ALL: [SpatialRelation; 10] = [
        SpatialRelation::Above,
        SpatialRelation::AlignedH,
        SpatialRelation::AlignedV,
        SpatialRelation::Below,
        SpatialRelation::Contains,
        SpatialRelation::Inside,
        SpatialRelation::OnLeftOf,
        SpatialRelation::OnRightOf,
        SpatialRelation::OnTopOf,
        SpatialRelation::Under,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpatialRelation::Above => "above",
            SpatialRelation::AlignedH => "aligned_h",
            SpatialRelation::AlignedV => "aligned_v",
            SpatialRelation::Below => "below",
            SpatialRelation::Contains => "contains",
            SpatialRelation::Inside => "inside",
            SpatialRelation::OnLeftOf => "on_left_of",
            SpatialRelation::OnRightOf => "on_right_of",
            SpatialRelation::OnTopOf => "on_top_of",
            SpatialRelation::Under => "under",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    /// The relation describing the same ordered pair from the opposite side;
    /// for alignments, the other axis.
    pub fn mirror(self) -> Self {
        match self {
            SpatialRelation::Above => SpatialRelation::Below,
            SpatialRelation::Below => SpatialRelation::Above,
            SpatialRelation::AlignedH => SpatialRelation::AlignedV,
            SpatialRelation::AlignedV => SpatialRelation::AlignedH,
            SpatialRelation::Contains => SpatialRelation::Inside,
            SpatialRelation::Inside => SpatialRelation::Contains,
            SpatialRelation::OnLeftOf => SpatialRelation::OnRightOf,
            SpatialRelation::OnRightOf => SpatialRelation::OnLeftOf,
            SpatialRelation::OnTopOf => SpatialRelation::Under,
            SpatialRelation::Under => SpatialRelation::OnTopOf,
        }
    }
}

impl fmt::Display for SpatialRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationInstance {
    pub relation: SpatialRelation,
    pub from: String,
    pub to: String,
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Euclidean distance between the closest points of two boxes (0 if they touch
/// or overlap).
pub fn box_gap(a: &Rect, b: &Rect) -> f64 {
    let dx = (b.x - a.right()).max(a.x - b.right()).max(0.0);
    let dy = (b.y - a.bottom()).max(a.y - b.bottom()).max(0.0);
    dx.hypot(dy)
}

/// `a` lies within `b` shrunk by the containment margin and is strictly
/// smaller.
pub fn inside(a: &Rect, b: &Rect, p: &GeomParams) -> bool {
    let m = p.containment_margin;
    a.x >= b.x + m
        && a.y >= b.y + m
        && a.right() <= b.right() - m
        && a.bottom() <= b.bottom() - m
        && a.area() < b.area()
}

fn h_overlap_ok(a: &Rect, b: &Rect, p: &GeomParams) -> bool {
    overlap(a.x, a.right(), b.x, b.right()) >= p.overlap_frac * a.w.min(b.w)
}

fn v_overlap_ok(a: &Rect, b: &Rect, p: &GeomParams) -> bool {
    overlap(a.y, a.bottom(), b.y, b.bottom()) >= p.overlap_frac * a.h.min(b.h)
}

/// Evaluate one directed predicate, ignoring the gap gate.
pub fn holds(rel: SpatialRelation, a: &Rect, b: &Rect, p: &GeomParams) -> bool {
    use SpatialRelation::*;
    let t = p.eps_touch;
    match rel {
        Inside => inside(a, b, p),
        Contains => inside(b, a, p),
        Above => a.bottom() <= b.y + t && h_overlap_ok(a, b, p),
        Below => a.y >= b.bottom() - t && h_overlap_ok(a, b, p),
        OnLeftOf => a.right() <= b.x + t && v_overlap_ok(a, b, p),
        OnRightOf => a.x >= b.right() - t && v_overlap_ok(a, b, p),
        OnTopOf => (a.bottom() - b.y).abs() <= t && h_overlap_ok(a, b, p),
        Under => (a.y - b.bottom()).abs() <= t && h_overlap_ok(a, b, p),
        // nested boxes are related by containment, not alignment
        AlignedH => {
            (a.bottom() - b.bottom()).abs() <= p.eps_align && !inside(a, b, p) && !inside(b, a, p)
        }
        AlignedV => {
            (a.x - b.x).abs() <= p.eps_align
                && (a.right() - b.right()).abs() <= p.eps_align
                && !inside(a, b, p)
                && !inside(b, a, p)
        }
    }
}

/// All relation instances directed from `a` to `b`. Containment is always
/// reported; every other relation only for boxes within `neighbor_gap`.
pub fn relations_between(a: &Rect, b: &Rect, p: &GeomParams) -> Vec<RelationInstance> {
    if a.id == b.id {
        return Vec::new();
    }
    let near = box_gap(a, b) <= p.neighbor_gap;
    SpatialRelation::ALL
        .into_iter()
        .filter(|&rel| {
            let gated = !matches!(rel, SpatialRelation::Inside | SpatialRelation::Contains);
            (near || !gated) && holds(rel, a, b, p)
        })
        .map(|relation| RelationInstance {
            relation,
            from: a.id.clone(),
            to: b.id.clone(),
        })
        .collect()
}

/// A contained rectangle that neither rests on its container's bottom nor
/// sits on top of another rectangle.
pub fn floating(a: &Rect, scene: &[Rect], p: &GeomParams) -> bool {
    let contained = scene
        .iter()
        .any(|b| b.id != a.id && inside(a, b, p) && a.bottom() < b.bottom() - p.eps_touch);
    contained
        && !scene
            .iter()
            .any(|c| c.id != a.id && holds(SpatialRelation::OnTopOf, a, c, p))
}
