//! Bounded history of sampled points and the frame-consistency weights.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster::{PartId, PerPart};
use crate::spatial::KdTree;

/// Points sampled for each part in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueEntry {
    pub frame: u64,
    pub parts: PerPart<Vec<Point>>,
}

/// FIFO of the last `capacity` sampled frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleQueue {
    capacity: usize,
    entries: VecDeque<QueueEntry>,
}

impl SampleQueue {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter {
                name: "queue_length",
                reason: "must be at least 1",
            });
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity + 1),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Oldest first.
    pub fn entries(&self) -> impl DoubleEndedIterator<Item = &QueueEntry> + ExactSizeIterator {
        self.entries.iter()
    }

    pub fn frames(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.frame).collect()
    }

    /// Appends a frame's samples, evicting the oldest entry when full. Frame
    /// indices must increase.
    pub fn push(&mut self, frame: u64, parts: PerPart<Vec<Point>>) -> Result<()> {
        if self.entries.back().is_some_and(|e| e.frame >= frame) {
            return Err(Error::InvalidParameter {
                name: "frame",
                reason: "queue entries must have increasing frame indices",
            });
        }
        self.entries.push_back(QueueEntry { frame, parts });
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
        Ok(())
    }

    /// Union of every stored point for `part`, oldest entry first.
    pub fn part_points(&self, part: PartId) -> Vec<Point> {
        self.entries
            .iter()
            .filter_map(|e| e.parts.get(part))
            .flat_map(|pts| pts.iter().copied())
            .collect()
    }

    /// The newest non-empty sample set stored for `part`.
    pub fn latest(&self, part: PartId) -> Option<&[Point]> {
        self.entries
            .iter()
            .rev()
            .filter_map(|e| e.parts.get(part))
            .find(|pts| !pts.is_empty())
            .map(Vec::as_slice)
    }
}

/// Distance from each candidate to the nearest queued point of `part`, over
/// the union of all queued frames. Zero everywhere if nothing is queued.
pub fn distance_to_queue(candidates: &[Point], queue: &SampleQueue, part: PartId) -> Vec<f64> {
    let reference = queue.part_points(part);
    if reference.is_empty() {
        return alloc::vec![0.0; candidates.len()];
    }
    let tree = KdTree::new(&reference);
    candidates
        .iter()
        .map(|p| tree.nearest_distance(p).expect("tree is non-empty"))
        .collect()
}

/// `2^(-decay * d)` per candidate; `decay` is in inverse meters.
pub fn consistency_weights(distances: &[f64], decay: f64) -> Result<Vec<f64>> {
    if !(decay > 0.0 && decay.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "decay",
            reason: "must be positive and finite",
        });
    }
    distances
        .iter()
        .map(|&d| {
            if d >= 0.0 {
                Ok(libm::exp2(-decay * d))
            } else {
                Err(Error::NegativeDistance(d))
            }
        })
        .collect()
}
