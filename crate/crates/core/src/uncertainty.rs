//! Predictive-entropy uncertainty and the per-part uncertainty weights.
//!
//! The entropy of the mean class distribution over `K` stochastic inferences
//! is normalized by `ln C`, its maximum, so every pixel lands in `[0, 1]`
//! independently of what else is in the frame. Per part, the weights are a
//! softmax over the uncertainty of that part's pixels.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::raster::{
    MeanProbabilities, PerPart, ProbabilityStack, SegmentationMap, UncertaintyMap,
};

/// Per-part weight vectors aligned with that part's candidates.
pub type PartWeights = PerPart<Vec<f64>>;

/// Normalized predictive entropy of the inference-averaged class distribution.
pub fn predictive_entropy(stack: &ProbabilityStack) -> Result<UncertaintyMap> {
    if stack.classes() < 2 {
        return Err(Error::TooFewClasses {
            min: 2,
            actual: stack.classes(),
        });
    }
    Ok(entropy_of_mean(&stack.mean()))
}

/// Same as [`predictive_entropy`] for an already averaged map with `C >= 2`.
pub fn entropy_of_mean(mean: &MeanProbabilities) -> UncertaintyMap {
    let dims = mean.dims();
    let norm = 1.0 / libm::log(mean.classes() as f64);
    let mut raw = alloc::vec![0.0; dims.len()];
    for c in 0..mean.classes() {
        for (h, &p) in raw.iter_mut().zip(mean.class_map(c)) {
            if p > 0.0 {
                *h -= p * libm::log(p);
            }
        }
    }
    raw.iter_mut()
        .for_each(|h| *h = (*h * norm).clamp(0.0, 1.0));
    UncertaintyMap::new(dims, raw).expect("clamped entropy lies in [0, 1]")
}

/// Uncertainty values of each part's pixels in row-major order.
pub fn part_uncertainty(unc: &UncertaintyMap, seg: &SegmentationMap) -> Result<PerPart<Vec<f64>>> {
    unc.dims().ensure_same(seg.dims())?;
    let mut out: PerPart<Vec<f64>> = PerPart::new(seg.num_classes());
    for (pixel, &label) in seg.labels().iter().enumerate() {
        if let Some(v) = out.get_mut(label) {
            v.push(unc.get(pixel));
        }
    }
    Ok(out)
}

/// Numerically stable softmax; empty input gives empty weights.
pub fn uncertainty_weights(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "uncertainty",
            reason: "scores must be finite",
        });
    }
    let Some(max) = scores.iter().copied().reduce(f64::max) else {
        return Ok(Vec::new());
    };
    let mut w: Vec<f64> = scores.iter().map(|&s| libm::exp(s - max)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}
