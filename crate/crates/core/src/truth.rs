//! Evidence-based truth values.
//!
//! A truth value is a `(frequency, confidence)` pair. Confidence maps to an
//! evidence weight `w = k·c/(1−c)` with evidential horizon `k`, so two
//! beliefs backed by disjoint evidence can be pooled exactly by adding their
//! weights. Each belief carries a [`Stamp`] naming the premises it rests on;
//! overlapping stamps mean shared evidence and must not be pooled.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Evidential horizon `k`.
pub const EVIDENTIAL_HORIZON: f64 = 1.0;

/// Confidence assigned to directly observed facts.
pub const DEFAULT_OBSERVATION_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TruthError {
    #[error("frequency {0} outside [0, 1]")]
    Frequency(f64),
    #[error("confidence {0} outside [0, 1)")]
    Confidence(f64),
    #[error("empty stamp")]
    EmptyStamp,
    #[error("overlapping evidence")]
    OverlappingEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct TruthValue {
    frequency: f64,
    confidence: f64,
}

impl TruthValue {
    pub fn new(frequency: f64, confidence: f64) -> Result<Self, TruthError> {
        if !(0.0..=1.0).contains(&frequency) {
            return Err(TruthError::Frequency(frequency));
        }
        if !(0.0..1.0).contains(&confidence) {
            return Err(TruthError::Confidence(confidence));
        }
        Ok(TruthValue {
            frequency,
            confidence,
        })
    }

    /// A positive observation at the default observation confidence.
    pub fn observed() -> Self {
        TruthValue {
            frequency: 1.0,
            confidence: DEFAULT_OBSERVATION_CONFIDENCE,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    /// Total evidence weight `w`.
    pub fn weight(&self) -> f64 {
        EVIDENTIAL_HORIZON * self.confidence / (1.0 - self.confidence)
    }

    /// Positive evidence weight `w⁺ = f·w`.
    pub fn positive_weight(&self) -> f64 {
        self.frequency * self.weight()
    }

    /// Inverse of [`TruthValue::weight`].
    pub fn from_weights(positive: f64, total: f64) -> Self {
        let frequency = if total > 0.0 {
            (positive / total).clamp(0.0, 1.0)
        } else {
            0.5
        };
        TruthValue {
            frequency,
            confidence: total / (total + EVIDENTIAL_HORIZON),
        }
    }

    /// Decision scalar `c·(f − ½) + ½`.
    pub fn expectation(&self) -> f64 {
        self.confidence * (self.frequency - 0.5) + 0.5
    }

    /// Same evidence, opposite polarity.
    pub fn negation(&self) -> Self {
        TruthValue {
            frequency: 1.0 - self.frequency,
            confidence: self.confidence,
        }
    }
}

impl TryFrom<(f64, f64)> for TruthValue {
    type Error = TruthError;

    fn try_from((f, c): (f64, f64)) -> Result<Self, Self::Error> {
        TruthValue::new(f, c)
    }
}

impl From<TruthValue> for (f64, f64) {
    fn from(tv: TruthValue) -> Self {
        (tv.frequency, tv.confidence)
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%{:.2};{:.2}%", self.frequency, self.confidence)
    }
}

/// Set of premise identifiers backing a belief.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stamp(BTreeSet<u64>);

impl Stamp {
    pub fn single(id: u64) -> Self {
        Stamp(BTreeSet::from([id]))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn min_id(&self) -> Option<u64> {
        self.0.first().copied()
    }

    pub fn overlaps(&self, other: &Stamp) -> bool {
        // walk the smaller set
        let (small, large) = if self.0.len() <= other.0.len() {
            (&self.0, &other.0)
        } else {
            (&other.0, &self.0)
        };
        small.iter().any(|id| large.contains(id))
    }

    pub fn union(&self, other: &Stamp) -> Stamp {
        Stamp(self.0.union(&other.0).copied().collect())
    }
}

impl FromIterator<u64> for Stamp {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        Stamp(iter.into_iter().collect())
    }
}

/// Pool two beliefs backed by disjoint evidence.
///
/// Fails with [`TruthError::OverlappingEvidence`] when the stamps share an
/// id; the caller is then expected to fall back to [`choose`].
pub fn revise(
    tv1: TruthValue,
    s1: &Stamp,
    tv2: TruthValue,
    s2: &Stamp,
) -> Result<(TruthValue, Stamp), TruthError> {
    if s1.is_empty() || s2.is_empty() {
        return Err(TruthError::EmptyStamp);
    }
    if s1.overlaps(s2) {
        return Err(TruthError::OverlappingEvidence);
    }
    let positive = tv1.positive_weight() + tv2.positive_weight();
    let total = tv1.weight() + tv2.weight();
    let pooled = TruthValue::from_weights(positive, total);
    // pooled confidence can round a hair below an input; pin the bound
    let confidence = pooled
        .confidence
        .max(tv1.confidence)
        .max(tv2.confidence);
    Ok((
        TruthValue {
            frequency: pooled.frequency,
            confidence,
        },
        s1.union(s2),
    ))
}

/// Strong syllogism: `f = f1·f2`, `c = f1·f2·c1·c2`.
pub fn deduction(tv1: TruthValue, tv2: TruthValue) -> TruthValue {
    let f = tv1.frequency * tv2.frequency;
    TruthValue {
        frequency: f,
        confidence: f * tv1.confidence * tv2.confidence,
    }
}

/// Total order used by choice: expectation, then confidence, then frequency,
/// then the lexicographically smaller stamp wins.
pub fn rank(a: (&TruthValue, &Stamp), b: (&TruthValue, &Stamp)) -> Ordering {
    a.0.expectation()
        .total_cmp(&b.0.expectation())
        .then(a.0.confidence.total_cmp(&b.0.confidence))
        .then(a.0.frequency.total_cmp(&b.0.frequency))
        .then_with(|| b.1.cmp(a.1))
}

/// Keep whichever belief ranks higher. Symmetric in its arguments.
pub fn choose(
    tv1: TruthValue,
    s1: &Stamp,
    tv2: TruthValue,
    s2: &Stamp,
) -> (TruthValue, Stamp) {
    if rank((&tv2, s2), (&tv1, s1)) == Ordering::Greater {
        (tv2, s2.clone())
    } else {
        (tv1, s1.clone())
    }
}

/// Revision when the evidence is disjoint, choice otherwise.
pub fn combine(
    tv1: TruthValue,
    s1: &Stamp,
    tv2: TruthValue,
    s2: &Stamp,
) -> (TruthValue, Stamp) {
    match revise(tv1, s1, tv2, s2) {
        Ok(revised) => revised,
        Err(_) => choose(tv1, s1, tv2, s2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tv(f: f64, c: f64) -> TruthValue {
        TruthValue::new(f, c).unwrap()
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(TruthValue::new(1.1, 0.5), Err(TruthError::Frequency(1.1)));
        assert_eq!(TruthValue::new(0.5, 1.0), Err(TruthError::Confidence(1.0)));
        assert!(TruthValue::new(-0.0, 0.0).is_ok());
    }

    #[test]
    fn revision_of_conflicting_evidence() {
        let (r, s) = revise(tv(1.0, 0.5), &Stamp::single(1), tv(0.0, 0.5), &Stamp::single(2)).unwrap();
        assert_abs_diff_eq!(r.frequency(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.confidence(), 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(s, Stamp::from_iter([1, 2]));
    }

    #[test]
    fn revision_rejects_shared_evidence() {
        let s = Stamp::single(1);
        assert_eq!(
            revise(tv(1.0, 0.5), &s, tv(1.0, 0.5), &s),
            Err(TruthError::OverlappingEvidence)
        );
        assert_eq!(
            revise(tv(1.0, 0.5), &Stamp::default(), tv(1.0, 0.5), &s),
            Err(TruthError::EmptyStamp)
        );
    }

    #[test]
    fn zero_weight_revision_is_neutral() {
        let (r, _) = revise(tv(1.0, 0.0), &Stamp::single(1), tv(0.0, 0.0), &Stamp::single(2)).unwrap();
        assert_eq!(r.confidence(), 0.0);
        assert_eq!(r.expectation(), 0.5);
    }

    #[test]
    fn deduction_examples() {
        let r = deduction(tv(1.0, 0.9), tv(1.0, 0.9));
        assert_abs_diff_eq!(r.confidence(), 0.81, epsilon = 1e-12);
        let r = deduction(tv(1.0, 0.9), tv(0.0, 0.9));
        assert_eq!((r.frequency(), r.confidence()), (0.0, 0.0));
    }

    #[test]
    fn expectation_examples() {
        assert_abs_diff_eq!(tv(1.0, 0.9).expectation(), 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(tv(0.0, 0.8).expectation(), 0.1, epsilon = 1e-12);
        assert_eq!(tv(0.3, 0.0).expectation(), 0.5);
    }

    #[test]
    fn choice_prefers_higher_expectation() {
        let (a, b) = (Stamp::single(1), Stamp::from_iter([1, 2]));
        let (r, s) = choose(tv(1.0, 0.5), &a, tv(1.0, 0.7), &b);
        assert_eq!(r, tv(1.0, 0.7));
        assert_eq!(s, b);
    }

    #[test]
    fn stamp_serializes_as_sorted_list() {
        let s = Stamp::from_iter([5, 1, 3]);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[1,3,5]");
    }

    prop_compose! {
        fn any_tv()(f in 0.0..=1.0f64, c in 0.0..0.99f64) -> TruthValue { tv(f, c) }
    }

    proptest! {
        #[test]
        fn weight_bijection(c in 0.0..0.999f64) {
            let t = tv(1.0, c);
            let back = TruthValue::from_weights(t.positive_weight(), t.weight());
            prop_assert!((back.confidence() - c).abs() < 1e-9);
        }

        #[test]
        fn revision_pools_weights(a in any_tv(), b in any_tv()) {
            let (r, _) = revise(a, &Stamp::single(1), b, &Stamp::single(2)).unwrap();
            prop_assert!(r.confidence() >= a.confidence().max(b.confidence()));
            prop_assert!((r.weight() - (a.weight() + b.weight())).abs() <= 1e-6 * (1.0 + r.weight()));
        }

        #[test]
        fn revision_commutes(a in any_tv(), b in any_tv()) {
            let (s1, s2) = (Stamp::single(1), Stamp::single(2));
            prop_assert_eq!(revise(a, &s1, b, &s2), revise(b, &s2, a, &s1));
        }

        #[test]
        fn deduction_weakens(a in any_tv(), b in any_tv()) {
            let r = deduction(a, b);
            prop_assert!(r.confidence() <= a.confidence().min(b.confidence()));
        }

        #[test]
        fn expectation_monotone(f in 0.5..=1.0f64, c1 in 0.0..0.99f64, c2 in 0.0..0.99f64) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            prop_assert!(tv(f, lo).expectation() <= tv(f, hi).expectation());
        }

        #[test]
        fn choice_is_symmetric(a in any_tv(), b in any_tv(), x in 0u64..4, y in 0u64..4) {
            let (s1, s2) = (Stamp::single(x), Stamp::single(y));
            prop_assert_eq!(choose(a, &s1, b, &s2), choose(b, &s2, a, &s1));
        }
    }
}
