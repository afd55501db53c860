//! Sampler quality: shape fidelity, temporal consistency, contamination and
//! coverage. Distances are in meters; `None` marks an undefined value.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Point, RigidTransform};
use crate::raster::{PartId, PerPart, SegmentationMap};
use crate::sampler::SampledFrame;
use crate::spatial::KdTree;

/// Default coverage radius, m.
pub const DEFAULT_COVERAGE_RADIUS: f64 = 0.01;

fn mean_nn(from: &[Point], to: &KdTree) -> f64 {
    let total: f64 = from
        .iter()
        .map(|p| to.nearest_distance(p).expect("non-empty tree"))
        .sum();
    total / from.len() as f64
}

/// Mean nearest-neighbour distance from `from` to `to`; `None` if either is empty.
pub fn one_sided_chamfer(from: &[Point], to: &[Point]) -> Option<f64> {
    if from.is_empty() || to.is_empty() {
        return None;
    }
    Some(mean_nn(from, &KdTree::new(to)))
}

/// Symmetric Chamfer distance: both one-sided means, summed.
pub fn chamfer(sampled: &[Point], reference: &[Point]) -> Option<f64> {
    Some(one_sided_chamfer(sampled, reference)? + one_sided_chamfer(reference, sampled)?)
}

/// Fraction of reference points within `radius` of some sampled point.
pub fn coverage(sampled: &[Point], reference: &[Point], radius: f64) -> Result<Option<f64>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter {
            name: "radius",
            reason: "must be positive",
        });
    }
    if reference.is_empty() {
        return Ok(None);
    }
    if sampled.is_empty() {
        return Ok(Some(0.0));
    }
    let tree = KdTree::new(sampled);
    let hits = reference
        .iter()
        .filter(|p| tree.nearest_distance(p).expect("non-empty tree") <= radius)
        .count();
    Ok(Some(hits as f64 / reference.len() as f64))
}

/// A part's reference surface with its search tree, for scoring many sample
/// sets against the same surface.
#[derive(Debug, Clone)]
pub struct ReferenceSurface {
    points: Vec<Point>,
    tree: KdTree,
}

/// Chamfer distance and coverage of one sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeScores {
    pub chamfer: f64,
    pub coverage: f64,
}

impl ReferenceSurface {
    pub fn new(points: Vec<Point>) -> Self {
        let tree = KdTree::new(&points);
        Self { points, tree }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Same values as [`chamfer`] and [`coverage`], computed with one pass of
    /// reference-to-sample distances. `None` if either set is empty.
    pub fn score(&self, sampled: &[Point], radius: f64) -> Result<Option<ShapeScores>> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: "must be positive",
            });
        }
        if sampled.is_empty() || self.points.is_empty() {
            return Ok(None);
        }
        let samples = KdTree::new(sampled);
        let mut back = 0.0;
        let mut hits = 0usize;
        for p in &self.points {
            let d = samples.nearest_distance(p).expect("non-empty tree");
            back += d;
            hits += usize::from(d <= radius);
        }
        let n = self.points.len() as f64;
        Ok(Some(ShapeScores {
            chamfer: mean_nn(sampled, &self.tree) + back / n,
            coverage: hits as f64 / n,
        }))
    }
}

/// Per part: fraction of samples whose ground-truth pixel label differs from
/// the part. Samples without a source pixel are ignored; `None` if none remain.
pub fn contamination(frame: &SampledFrame, ground_truth: &SegmentationMap) -> PerPart<Option<f64>> {
    let mut counts: PerPart<(usize, usize)> = PerPart::new(frame.num_classes);
    for p in &frame.points {
        let (Some(pixel), Some(slot)) = (p.pixel, counts.get_mut(p.part)) else {
            continue;
        };
        slot.0 += 1;
        if ground_truth.get(pixel as usize) != p.part {
            slot.1 += 1;
        }
    }
    counts.map(|_, &(n, bad)| (n > 0).then(|| bad as f64 / n as f64))
}

/// Result of [`temporal_consistency`] for one part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalConsistency {
    /// Mean over usable consecutive pairs; `None` if there were none.
    pub mean: Option<f64>,
    pub pairs: usize,
    /// Pairs skipped because the part was missing from a frame.
    pub skipped: usize,
}

/// Mean nearest-neighbour distance between consecutive samples of `part`,
/// after moving frame `t`'s samples by the part's true motion from `t` to `t+1`.
/// `transforms[t]` is the part's motion from its rest pose at frame `t`.
pub fn temporal_consistency(
    frames: &[SampledFrame],
    transforms: &[RigidTransform],
    part: PartId,
) -> Result<TemporalConsistency> {
    if frames.len() != transforms.len() {
        return Err(Error::LengthMismatch {
            left: frames.len(),
            right: transforms.len(),
        });
    }
    let mut total = 0.0;
    let mut pairs = 0;
    let mut skipped = 0;
    for t in 1..frames.len() {
        let prev = frames[t - 1].part_points(part);
        let next = frames[t].part_points(part);
        if prev.is_empty() || next.is_empty() {
            skipped += 1;
            continue;
        }
        let step = transforms[t].compose(&transforms[t - 1].inverse());
        let moved: Vec<Point> = prev.iter().map(|p| step.apply(p)).collect();
        total += one_sided_chamfer(&moved, &next).expect("both non-empty");
        pairs += 1;
    }
    Ok(TemporalConsistency {
        mean: (pairs > 0).then(|| total / pairs as f64),
        pairs,
        skipped,
    })
}
