//! Edge map and axis-aligned probabilistic Hough segment detection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pgm::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoughParams {
    /// Minimum intensity drop to a 4-neighbor for a pixel to count as edge.
    pub edge_threshold: u8,
    pub vote_threshold: usize,
    pub min_len: usize,
    /// Longest run of missing pixels bridged inside one segment.
    pub max_gap: usize,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams {
            edge_threshold: 48,
            vote_threshold: 10,
            min_len: 12,
            max_gap: 3,
        }
    }
}

impl HoughParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.edge_threshold == 0 || self.vote_threshold == 0 || self.min_len == 0 || self.max_gap == 0 {
            return Err("hough parameters must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Axis-aligned segment from `(x0, y0)` to `(x1, y1)`, endpoints inclusive,
/// with `x0 <= x1` and `y0 <= y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub orientation: Orientation,
}

impl Segment {
    pub fn horizontal(y: usize, x0: usize, x1: usize) -> Self {
        Segment {
            x0: x0.min(x1),
            y0: y,
            x1: x0.max(x1),
            y1: y,
            orientation: Orientation::Horizontal,
        }
    }

    pub fn vertical(x: usize, y0: usize, y1: usize) -> Self {
        Segment {
            x0: x,
            y0: y0.min(y1),
            x1: x,
            y1: y0.max(y1),
            orientation: Orientation::Vertical,
        }
    }

    /// Distance between the endpoints.
    pub fn length(&self) -> usize {
        (self.x1 - self.x0) + (self.y1 - self.y0)
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.x0..=self.x1).flat_map(move |x| (self.y0..=self.y1).map(move |y| (x, y)))
    }
}

/// Pixels at least `threshold` brighter than one of their 4-neighbors.
pub fn edge_map(img: &GrayImage, threshold: u8) -> Vec<bool> {
    let (w, h) = (img.width, img.height);
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let v = i16::from(img.get(x, y));
            let t = i16::from(threshold);
            let drop = |nx: usize, ny: usize| v - i16::from(img.get(nx, ny)) >= t;
            out[y * w + x] = (x > 0 && drop(x - 1, y))
                || (x + 1 < w && drop(x + 1, y))
                || (y > 0 && drop(x, y - 1))
                || (y + 1 < h && drop(x, y + 1));
        }
    }
    out
}

/// Maximal runs of set cells in `line`, bridging gaps of up to `max_gap`.
fn runs(line: impl Iterator<Item = bool>, max_gap: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut cur: Option<(usize, usize)> = None;
    for (i, on) in line.enumerate() {
        if !on {
            continue;
        }
        cur = match cur {
            Some((s, e)) if i - e - 1 <= max_gap => Some((s, i)),
            Some(run) => {
                out.push(run);
                Some((i, i))
            }
            None => Some((i, i)),
        };
    }
    out.extend(cur);
    out
}

struct Accumulator {
    /// Per-orientation mask of pixels not yet consumed.
    mask: Vec<bool>,
    voted: Vec<bool>,
    votes: Vec<usize>,
}

/// Detect horizontal and vertical segments. Edge pixels are visited in a
/// seeded random order; each votes for its row and its column, and a line
/// whose vote count reaches the threshold is scanned for runs, which are
/// emitted and removed from that orientation's accumulator.
pub fn detect_segments(img: &GrayImage, p: &HoughParams, seed: u64) -> Vec<Segment> {
    let (w, h) = (img.width, img.height);
    let edges = edge_map(img, p.edge_threshold);
    let mut order: Vec<usize> = (0..w * h).filter(|&i| edges[i]).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let fresh = |n| Accumulator {
        mask: edges.clone(),
        voted: vec![false; w * h],
        votes: vec![0; n],
    };
    let mut rows = fresh(h);
    let mut cols = fresh(w);
    let mut out = Vec::new();

    for &i in &order {
        let (x, y) = (i % w, i / w);
        for (acc, horizontal) in [(&mut rows, true), (&mut cols, false)] {
            if !acc.mask[i] {
                continue;
            }
            acc.voted[i] = true;
            let line = if horizontal { y } else { x };
            acc.votes[line] += 1;
            if acc.votes[line] < p.vote_threshold {
                continue;
            }
            let (len, index): (usize, Box<dyn Fn(usize) -> usize>) = if horizontal {
                (w, Box::new(move |k| y * w + k))
            } else {
                (h, Box::new(move |k| k * w + x))
            };
            for (s, e) in runs((0..len).map(|k| acc.mask[index(k)]), p.max_gap) {
                if e - s < p.min_len {
                    continue;
                }
                out.push(if horizontal {
                    Segment::horizontal(y, s, e)
                } else {
                    Segment::vertical(x, s, e)
                });
                for k in s..=e {
                    let j = index(k);
                    if acc.mask[j] {
                        acc.mask[j] = false;
                        if acc.voted[j] {
                            acc.votes[line] -= 1;
                        }
                    }
                }
            }
        }
    }
    out.sort_by_key(|s| (s.orientation, s.y0, s.x0, s.y1, s.x1));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canvas() -> GrayImage {
        GrayImage::filled(64, 64, 0)
    }

    fn outline(img: &mut GrayImage, x: usize, y: usize, w: usize, h: usize) {
        for k in x..=x + w {
            img.set(k, y, 255);
            img.set(k, y + h, 255);
        }
        for k in y..=y + h {
            img.set(x, k, 255);
            img.set(x + w, k, 255);
        }
    }

    #[test]
    fn single_row() {
        let mut img = canvas();
        for x in 5..=40 {
            img.set(x, 10, 255);
        }
        let segs = detect_segments(&img, &HoughParams::default(), 1);
        assert_eq!(segs, [Segment::horizontal(10, 5, 40)]);
    }

    #[test]
    fn uniform_images_have_no_segments() {
        for v in [0, 128, 255] {
            assert!(detect_segments(&GrayImage::filled(40, 30, v), &HoughParams::default(), 3).is_empty());
        }
    }

    #[test]
    fn rectangle_outline() {
        let mut img = canvas();
        outline(&mut img, 10, 20, 20, 12);
        for seed in 0..5 {
            let segs = detect_segments(&img, &HoughParams::default(), seed);
            assert_eq!(
                segs,
                [
                    Segment::horizontal(20, 10, 30),
                    Segment::horizontal(32, 10, 30),
                    Segment::vertical(10, 20, 32),
                    Segment::vertical(30, 20, 32),
                ]
            );
        }
    }

    #[test]
    fn gaps_are_bridged_up_to_max() {
        let mut img = canvas();
        for x in (5..=20).chain(24..=40) {
            img.set(x, 3, 255);
        }
        for x in (5..=20).chain(25..=40) {
            img.set(x, 50, 255);
        }
        let segs = detect_segments(&img, &HoughParams::default(), 9);
        assert!(segs.contains(&Segment::horizontal(3, 5, 40)));
        assert!(segs.contains(&Segment::horizontal(50, 5, 20)));
        assert!(segs.contains(&Segment::horizontal(50, 25, 40)));
    }

    #[test]
    fn edges_sit_on_the_bright_side() {
        let mut img = GrayImage::filled(4, 1, 200);
        img.set(0, 0, 0);
        let e = edge_map(&img, 48);
        assert_eq!(e, [false, true, false, false]);
    }

    #[test]
    fn run_scanner() {
        let line = [true, false, false, true, false, false, false, false, true];
        assert_eq!(runs(line.into_iter(), 2), [(0, 3), (8, 8)]);
        assert!(runs([false; 4].into_iter(), 1).is_empty());
    }
}
