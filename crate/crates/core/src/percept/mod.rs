//! From grayscale pixels to rectangles.

pub mod assemble;
pub mod hough;
pub mod pgm;

pub use assemble::{assemble_rects, merge_collinear, DEFAULT_EPS_CORNER};
pub use hough::{detect_segments, edge_map, HoughParams, Orientation, Segment};
pub use pgm::{load_pgm, write_pgm, GrayImage, PgmError};

use crate::geometry::Rect;

/// Segments, then rectangles.
pub fn extract_rects(img: &GrayImage, p: &HoughParams, eps_corner: usize, seed: u64) -> Vec<Rect> {
    assemble_rects(&detect_segments(img, p, seed), eps_corner)
}

/// Draw 1-pixel bright outlines on a dark canvas. A rect occupies rows `y`
/// and `y + h` and columns `x` and `x + w`, coordinates rounded.
pub fn render_outlines<'a>(rects: impl IntoIterator<Item = &'a Rect>, width: usize, height: usize) -> GrayImage {
    let mut img = GrayImage::filled(width, height, 0);
    let clamp = |v: f64, n: usize| (v.round().max(0.0) as usize).min(n.saturating_sub(1));
    if width == 0 || height == 0 {
        return img;
    }
    for r in rects {
        let (x0, x1) = (clamp(r.x, width), clamp(r.right(), width));
        let (y0, y1) = (clamp(r.y, height), clamp(r.bottom(), height));
        for x in x0..=x1 {
            img.set(x, y0, 255);
            img.set(x, y1, 255);
        }
        for y in y0..=y1 {
            img.set(x0, y, 255);
            img.set(x1, y, 255);
        }
    }
    img
}

/// Whether some rect in `found` matches `truth` within `tol` on every edge.
pub fn recovered(truth: &Rect, found: &[Rect], tol: f64) -> bool {
    found.iter().any(|f| {
        (f.x - truth.x).abs() <= tol
            && (f.y - truth.y).abs() <= tol
            && (f.right() - truth.right()).abs() <= tol
            && (f.bottom() - truth.bottom()).abs() <= tol
    })
}
