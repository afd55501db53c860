//! Per-pixel rasters: depth, labels, stochastic class probabilities and
//! uncertainty. All rasters are stored row-major, pixel index `v * width + u`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on the per-pixel probability sum of a [`ProbabilityStack`].
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-6;

/// Class index; 0 is background, `1..C` are articulated parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct PartId(pub u8);

impl PartId {
    pub const BACKGROUND: PartId = PartId(0);

    #[inline]
    pub fn is_background(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl core::fmt::Display for PartId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Width and height of a raster in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl Dims {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    #[inline]
    pub const fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(u, v)` = (column, row) of a pixel index.
    #[inline]
    pub const fn coords(&self, pixel: usize) -> (usize, usize) {
        (pixel % self.width, pixel / self.width)
    }

    pub fn ensure_same(&self, other: Dims) -> Result<()> {
        if *self == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected_width: self.width,
                expected_height: self.height,
                width: other.width,
                height: other.height,
            })
        }
    }
}

fn check_len(dims: Dims, actual: usize) -> Result<()> {
    if dims.len() == actual {
        Ok(())
    } else {
        Err(Error::BufferLength {
            expected: dims.len(),
            actual,
        })
    }
}

/// Metric depth per pixel. A pixel is valid when its depth is finite, positive
/// and (if a maximum range is set) not beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    dims: Dims,
    values: Vec<f64>,
    max_range: Option<f64>,
}

impl DepthMap {
    pub fn new(dims: Dims, values: Vec<f64>) -> Result<Self> {
        check_len(dims, values.len())?;
        Ok(Self {
            dims,
            values,
            max_range: None,
        })
    }

    /// A map where every pixel is invalid.
    pub fn invalid(dims: Dims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.len()],
            max_range: None,
        }
    }

    pub fn with_max_range(mut self, max_range: Option<f64>) -> Self {
        self.max_range = max_range;
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, pixel: usize) -> f64 {
        self.values[pixel]
    }

    #[inline]
    pub fn is_valid(&self, pixel: usize) -> bool {
        let d = self.values[pixel];
        d.is_finite() && d > 0.0 && self.max_range.is_none_or(|r| d <= r)
    }

    pub fn validity_mask(&self) -> Vec<bool> {
        (0..self.dims.len()).map(|i| self.is_valid(i)).collect()
    }

    pub fn valid_count(&self) -> usize {
        (0..self.dims.len()).filter(|&i| self.is_valid(i)).count()
    }
}

/// Per-pixel part labels over `num_classes` classes (background included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMap {
    dims: Dims,
    num_classes: usize,
    labels: Vec<PartId>,
}

impl SegmentationMap {
    pub fn new(dims: Dims, num_classes: usize, labels: Vec<PartId>) -> Result<Self> {
        check_len(dims, labels.len())?;
        if num_classes > 256 {
            return Err(Error::InvalidParameter {
                name: "num_classes",
                reason: "at most 256 classes fit in a label",
            });
        }
        if let Some(bad) = labels.iter().find(|l| l.index() >= num_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad.0,
                classes: num_classes,
            });
        }
        Ok(Self {
            dims,
            num_classes,
            labels,
        })
    }

    pub fn background(dims: Dims, num_classes: usize) -> Self {
        Self {
            dims,
            num_classes,
            labels: vec![PartId::BACKGROUND; dims.len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Parts `1..num_classes`, background excluded.
    pub fn parts(&self) -> impl Iterator<Item = PartId> + use<> {
        (1..self.num_classes).map(|c| PartId(c as u8))
    }

    pub fn labels(&self) -> &[PartId] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, pixel: usize) -> PartId {
        self.labels[pixel]
    }

    pub fn pixel_count(&self, part: PartId) -> usize {
        self.labels.iter().filter(|&&l| l == part).count()
    }
}

/// `K` stochastic softmax maps over `C` classes, stored `[k][c][pixel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityStack {
    dims: Dims,
    inferences: usize,
    classes: usize,
    data: Vec<f64>,
}

impl ProbabilityStack {
    /// Validates that every per-pixel vector is a distribution.
    pub fn new(dims: Dims, inferences: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        let stack = Self::new_unchecked(dims, inferences, classes, data)?;
        stack.validate()?;
        Ok(stack)
    }

    /// Checks only the buffer shape.
    pub fn new_unchecked(
        dims: Dims,
        inferences: usize,
        classes: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if inferences == 0 {
            return Err(Error::NoInferences);
        }
        if classes == 0 {
            return Err(Error::TooFewClasses { min: 1, actual: 0 });
        }
        let expected = inferences * classes * dims.len();
        if data.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            dims,
            inferences,
            classes,
            data,
        })
    }

    /// Builds a stack from per-inference, per-pixel class vectors.
    pub fn from_pixel_vectors(dims: Dims, classes: usize, maps: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = dims.len();
        let mut data = vec![0.0; maps.len() * classes * n];
        for (k, map) in maps.iter().enumerate() {
            check_len(dims, map.len())?;
            for (pixel, probs) in map.iter().enumerate() {
                if probs.len() != classes {
                    return Err(Error::LengthMismatch {
                        left: probs.len(),
                        right: classes,
                    });
                }
                for (c, &p) in probs.iter().enumerate() {
                    data[(k * classes + c) * n + pixel] = p;
                }
            }
        }
        Self::new(dims, maps.len(), classes, data)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dims.len();
        for k in 0..self.inferences {
            for pixel in 0..n {
                let mut sum = 0.0;
                let mut ok = true;
                for c in 0..self.classes {
                    let p = self.get(k, c, pixel);
                    ok &= p.is_finite() && p >= 0.0;
                    sum += p;
                }
                if !ok || (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                    return Err(Error::NotADistribution {
                        inference: k,
                        pixel,
                        sum,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn inferences(&self) -> usize {
        self.inferences
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, inference: usize, class: usize, pixel: usize) -> f64 {
        self.data[(inference * self.classes + class) * self.dims.len() + pixel]
    }

    /// Mean over inferences of each class map.
    pub fn mean(&self) -> MeanProbabilities {
        let n = self.dims.len();
        let mut data = vec![0.0; self.classes * n];
        for k in 0..self.inferences {
            let block = &self.data[k * self.classes * n..(k + 1) * self.classes * n];
            for (acc, &p) in data.iter_mut().zip(block) {
                *acc += p;
            }
        }
        let scale = 1.0 / self.inferences as f64;
        data.iter_mut().for_each(|p| *p *= scale);
        MeanProbabilities {
            dims: self.dims,
            classes: self.classes,
            data,
        }
    }
}

/// Mean class probabilities, stored `[c][pixel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanProbabilities {
    dims: Dims,
    classes: usize,
    data: Vec<f64>,
}

impl MeanProbabilities {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    #[inline]
    pub fn get(&self, class: usize, pixel: usize) -> f64 {
        self.data[class * self.dims.len() + pixel]
    }

    pub fn class_map(&self, class: usize) -> &[f64] {
        let n = self.dims.len();
        &self.data[class * n..(class + 1) * n]
    }
}

/// Normalized per-pixel uncertainty in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    dims: Dims,
    values: Vec<f64>,
}

impl UncertaintyMap {
    pub fn new(dims: Dims, values: Vec<f64>) -> Result<Self> {
        check_len(dims, values.len())?;
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter {
                name: "uncertainty",
                reason: "values must lie in [0, 1]",
            });
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, pixel: usize) -> f64 {
        self.values[pixel]
    }
}

/// One value per part `1..C`; background has no slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerPart<T> {
    slots: Vec<T>,
}

impl<T> PerPart<T> {
    pub fn from_fn(num_classes: usize, mut f: impl FnMut(PartId) -> T) -> Self {
        Self {
            slots: (1..num_classes.max(1))
                .map(|c| f(PartId(c as u8)))
                .collect(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.slots.len() + 1
    }

    pub fn get(&self, part: PartId) -> Option<&T> {
        part.index().checked_sub(1).and_then(|i| self.slots.get(i))
    }

    pub fn get_mut(&mut self, part: PartId) -> Option<&mut T> {
        part.index()
            .checked_sub(1)
            .and_then(|i| self.slots.get_mut(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (PartId, &T)> {
        self.slots
            .iter()
            .enumerate()
            .map(|(i, v)| (PartId(i as u8 + 1), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (PartId, &mut T)> {
        self.slots
            .iter_mut()
            .enumerate()
            .map(|(i, v)| (PartId(i as u8 + 1), v))
    }

    pub fn map<U>(&self, mut f: impl FnMut(PartId, &T) -> U) -> PerPart<U> {
        PerPart {
            slots: self.iter().map(|(p, v)| f(p, v)).collect(),
        }
    }
}

impl<T: Default> PerPart<T> {
    pub fn new(num_classes: usize) -> Self {
        Self::from_fn(num_classes, |_| T::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_validity() {
        let d = DepthMap::new(Dims::new(4, 1), vec![1.0, 0.0, -1.0, f64::NAN]).unwrap();
        assert_eq!(d.validity_mask(), vec![true, false, false, false]);
        let d = DepthMap::new(Dims::new(2, 1), vec![1.0, 5.0])
            .unwrap()
            .with_max_range(Some(4.0));
        assert_eq!(d.valid_count(), 1);
        assert!(DepthMap::new(Dims::new(2, 2), vec![1.0]).is_err());
    }

    #[test]
    fn segmentation_rejects_labels_beyond_classes() {
        let err = SegmentationMap::new(Dims::new(2, 1), 3, vec![PartId(0), PartId(3)]).unwrap_err();
        assert_eq!(
            err,
            Error::LabelOutOfRange {
                label: 3,
                classes: 3
            }
        );
    }

    #[test]
    fn stack_validation() {
        let dims = Dims::new(1, 1);
        assert!(ProbabilityStack::new(dims, 1, 2, vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityStack::new(dims, 1, 2, vec![0.0, 0.0]).is_err());
        assert!(ProbabilityStack::new(dims, 1, 2, vec![1.2, -0.2]).is_err());
        assert!(ProbabilityStack::new(dims, 1, 2, vec![0.5, 0.5 + 2e-6]).is_err());
        assert!(ProbabilityStack::new(dims, 0, 2, vec![]).is_err());
    }

    #[test]
    fn mean_map() {
        let dims = Dims::new(1, 1);
        let stack = ProbabilityStack::from_pixel_vectors(
            dims,
            2,
            &[vec![vec![0.6, 0.4]], vec![vec![0.2, 0.8]]],
        )
        .unwrap();
        let mean = stack.mean();
        assert!((mean.get(0, 0) - 0.4).abs() < 1e-15);
        assert!((mean.get(1, 0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn per_part_indexing() {
        let p = PerPart::from_fn(4, |c| c.0 * 10);
        assert_eq!(p.get(PartId(0)), None);
        assert_eq!(p.get(PartId(3)), Some(&30));
        assert_eq!(p.get(PartId(4)), None);
        assert_eq!(
            p.iter().map(|(c, _)| c.0).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }
}
