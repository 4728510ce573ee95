//! Rectangle assembly from axis-aligned segments.

use std::collections::BTreeMap;

use super::hough::{Orientation, Segment};
use crate::geometry::Rect;

pub const DEFAULT_EPS_CORNER: usize = 4;

/// Same-line segments that overlap or touch are joined.
pub fn merge_collinear(segments: &[Segment]) -> Vec<Segment> {
    let mut lines: BTreeMap<(Orientation, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for s in segments {
        let (key, span) = match s.orientation {
            Orientation::Horizontal => (s.y0, (s.x0, s.x1)),
            Orientation::Vertical => (s.x0, (s.y0, s.y1)),
        };
        lines.entry((s.orientation, key)).or_default().push(span);
    }
    let mut out = Vec::new();
    for ((orientation, at), mut spans) in lines {
        spans.sort();
        let mut merged: Vec<(usize, usize)> = Vec::new();
        for (a, b) in spans {
            match merged.last_mut() {
                Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        out.extend(merged.into_iter().map(|(a, b)| match orientation {
            Orientation::Horizontal => Segment::horizontal(at, a, b),
            Orientation::Vertical => Segment::vertical(at, a, b),
        }));
    }
    out
}

fn covers(lo: usize, hi: usize, a: usize, b: usize, eps: usize) -> bool {
    lo <= a + eps && hi + eps >= b
}

/// Find rectangles bounded by two verticals and two horizontals whose
/// extents agree within `eps` at the corners. Candidates split by an
/// interior vertical or no wider than `eps` are discarded, as are
/// near-duplicates (IoU >= 0.9, the
/// larger one is kept). Rect ids are `r1`, `r2`, ... in raster order.
pub fn assemble_rects(segments: &[Segment], eps: usize) -> Vec<Rect> {
    let merged = merge_collinear(segments);
    let (hs, vs): (Vec<Segment>, Vec<Segment>) = merged
        .into_iter()
        .partition(|s| s.orientation == Orientation::Horizontal);

    let mut found: Vec<(usize, usize, usize, usize)> = Vec::new();
    for l in &vs {
        for r in vs.iter().filter(|r| r.x0 > l.x0) {
            let y_lo = l.y0.max(r.y0).saturating_sub(eps);
            let y_hi = l.y1.min(r.y1) + eps;
            let mut ys: Vec<usize> = hs
                .iter()
                .filter(|h| h.y0 >= y_lo && h.y0 <= y_hi && covers(h.x0, h.x1, l.x0, r.x0, eps))
                .map(|h| h.y0)
                .collect();
            ys.sort();
            ys.dedup();
            for pair in ys.windows(2) {
                let (top, bottom) = (pair[0], pair[1]);
                if !covers(l.y0, l.y1, top, bottom, eps) || !covers(r.y0, r.y1, top, bottom, eps) {
                    continue;
                }
                let split = vs.iter().any(|v| {
                    v.x0 > l.x0 && v.x0 < r.x0 && covers(v.y0, v.y1, top, bottom, eps)
                });
                // slivers thinner than the corner tolerance are artifacts
                if !split && r.x0 - l.x0 > eps && bottom - top > eps {
                    found.push((l.x0, top, r.x0 - l.x0, bottom - top));
                }
            }
        }
    }

    // larger first so duplicates lose to the bigger box
    found.sort_by(|a, b| (b.2 * b.3).cmp(&(a.2 * a.3)).then(a.cmp(b)));
    let mut kept: Vec<Rect> = Vec::new();
    for (x, y, w, h) in found {
        let r = Rect::new("", x as f64, y as f64, w as f64, h as f64).expect("positive extent");
        if kept.iter().all(|k| k.iou(&r) < 0.9) {
            kept.push(r);
        }
    }
    kept.sort_by(|a, b| (a.y, a.x, a.w, a.h).partial_cmp(&(b.y, b.x, b.w, b.h)).unwrap());
    for (i, r) in kept.iter_mut().enumerate() {
        r.id = format!("r{}", i + 1);
    }
    kept
}
