//! Sensor and segmentation corruption.
//!
//! Depth gets additive Gaussian noise plus salt-and-pepper dropout. The
//! stochastic segmentation stack starts from the ground-truth labels; each
//! inference jitters labels near part boundaries, applies the frame's
//! misclassification blob (shared by all inferences, radius perturbed per
//! inference), then turns labels into logits with Gaussian noise and applies a
//! softmax. With zero logit noise the network is perfectly confident and every
//! inference is one-hot.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::raster::{DepthMap, Dims, PartId, ProbabilityStack, SegmentationMap};

/// How a blob picks its location and the label it paints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BlobTarget {
    /// Centered on a random labeled pixel, painted with a different random part.
    AnyPart,
    /// Centered on a non-handle pixel next to the handle, painted as handle.
    HandleAdjacent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BlobSpec {
    /// Probability that a frame contains a blob.
    pub rate: f64,
    /// Blob radius range in pixels, inclusive.
    pub radius: (usize, usize),
    pub target: BlobTarget,
    /// For `HandleAdjacent`: maximum pixel distance of the center from the handle.
    pub adjacency: usize,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            rate: 0.1,
            radius: (3, 8),
            target: BlobTarget::AnyPart,
            adjacency: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NoiseSpec {
    /// Additive depth noise, m.
    pub depth_sigma: f64,
    /// Fraction of pixels hit by salt-and-pepper noise.
    pub salt_pepper_rate: f64,
    /// Fraction of hit pixels set to `max_range` (salt) rather than invalid (pepper).
    pub salt_fraction: f64,
    /// Depth written for salt pixels, m.
    pub max_range: f64,
    /// Gaussian noise added to every logit of every inference.
    pub logit_sigma: f64,
    /// Logit advantage of the predicted label before noise.
    pub logit_margin: f64,
    pub blob: BlobSpec,
    /// Pixels within this Chebyshev distance of a label change may take a
    /// neighbouring label in any inference.
    pub boundary_width: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            depth_sigma: 0.002,
            salt_pepper_rate: 0.005,
            salt_fraction: 0.0,
            max_range: 4.0,
            logit_sigma: 0.5,
            logit_margin: 4.0,
            blob: BlobSpec::default(),
            boundary_width: 1,
        }
    }
}

impl NoiseSpec {
    /// No corruption at all.
    pub fn none() -> Self {
        Self {
            depth_sigma: 0.0,
            salt_pepper_rate: 0.0,
            salt_fraction: 0.0,
            logit_sigma: 0.0,
            blob: BlobSpec {
                rate: 0.0,
                ..BlobSpec::default()
            },
            boundary_width: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = |name, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: "must lie in [0, 1]",
                })
            }
        };
        rate("salt_pepper_rate", self.salt_pepper_rate)?;
        rate("salt_fraction", self.salt_fraction)?;
        rate("blob.rate", self.blob.rate)?;
        let nonneg = |name, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite and nonnegative",
                })
            }
        };
        nonneg("depth_sigma", self.depth_sigma)?;
        nonneg("logit_sigma", self.logit_sigma)?;
        nonneg("logit_margin", self.logit_margin)?;
        nonneg("max_range", self.max_range)?;
        if self.blob.radius.0 > self.blob.radius.1 {
            return Err(Error::InvalidParameter {
                name: "blob.radius",
                reason: "minimum exceeds maximum",
            });
        }
        Ok(())
    }
}

/// A misclassified disc shared by all inferences of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blob {
    pub center: (usize, usize),
    pub radius: usize,
    pub label: PartId,
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Adds Gaussian noise to valid pixels, then applies salt-and-pepper.
pub fn corrupt_depth(clean: &DepthMap, noise: &NoiseSpec, rng: &mut impl Rng) -> DepthMap {
    let mut out = clean.clone();
    let dims = clean.dims();
    for pixel in 0..dims.len() {
        let valid = clean.is_valid(pixel);
        let d = &mut out.values_mut()[pixel];
        if valid && noise.depth_sigma > 0.0 {
            *d = (*d + noise.depth_sigma * normal(rng)).max(0.0);
        }
        if noise.salt_pepper_rate > 0.0 && rng.random::<f64>() < noise.salt_pepper_rate {
            *d = if noise.salt_fraction > 0.0 && rng.random::<f64>() < noise.salt_fraction {
                noise.max_range
            } else {
                0.0
            };
        }
    }
    out
}

/// Places this frame's blob, if any.
pub fn place_blob(
    gt: &SegmentationMap,
    spec: &BlobSpec,
    handle: PartId,
    rng: &mut impl Rng,
) -> Option<Blob> {
    if spec.rate <= 0.0 || rng.random::<f64>() >= spec.rate {
        return None;
    }
    let dims = gt.dims();
    let radius = rng.random_range(spec.radius.0..=spec.radius.1);
    let (candidates, fixed_label): (Vec<usize>, Option<PartId>) = match spec.target {
        BlobTarget::AnyPart => (
            (0..dims.len())
                .filter(|&i| !gt.get(i).is_background())
                .collect(),
            None,
        ),
        BlobTarget::HandleAdjacent => {
            let near = distance_to_label(gt, handle, spec.adjacency);
            let ring = (0..dims.len())
                .filter(|&i| gt.get(i) != handle && near[i].is_some_and(|d| d >= 1))
                .collect();
            (ring, Some(handle))
        }
    };
    if candidates.is_empty() {
        return None;
    }
    let center = candidates[rng.random_range(0..candidates.len())];
    let label = match fixed_label {
        Some(l) => l,
        None => {
            let parts = gt.num_classes() - 1;
            let own = gt.get(center);
            if parts < 2 {
                return None;
            }
            // a uniformly chosen part other than the one under the center
            let mut pick = PartId(rng.random_range(1..parts as u8));
            if pick >= own {
                pick = PartId(pick.0 + 1);
            }
            pick
        }
    };
    Some(Blob {
        center: dims.coords(center),
        radius,
        label,
    })
}

/// Chebyshev distance (up to `max`) from each pixel to the nearest pixel labeled `label`.
fn distance_to_label(gt: &SegmentationMap, label: PartId, max: usize) -> Vec<Option<usize>> {
    let dims = gt.dims();
    let mut out = vec![None; dims.len()];
    for pixel in 0..dims.len() {
        if gt.get(pixel) != label {
            continue;
        }
        let (u, v) = dims.coords(pixel);
        for_window(dims, u, v, max, |q, qu, qv| {
            let d = qu.abs_diff(u).max(qv.abs_diff(v));
            if out[q].is_none_or(|old| d < old) {
                out[q] = Some(d);
            }
        });
    }
    out
}

fn for_window(dims: Dims, u: usize, v: usize, r: usize, mut f: impl FnMut(usize, usize, usize)) {
    let (u0, u1) = (u.saturating_sub(r), (u + r).min(dims.width - 1));
    let (v0, v1) = (v.saturating_sub(r), (v + r).min(dims.height - 1));
    for qv in v0..=v1 {
        for qu in u0..=u1 {
            f(qv * dims.width + qu, qu, qv);
        }
    }
}

/// Pixels with a different label within `width`.
fn boundary_pixels(gt: &SegmentationMap, width: usize) -> Vec<bool> {
    let dims = gt.dims();
    let mut out = vec![false; dims.len()];
    if width == 0 {
        return out;
    }
    for pixel in 0..dims.len() {
        let (u, v) = dims.coords(pixel);
        let own = gt.get(pixel);
        let mut edge = false;
        for_window(dims, u, v, width, |q, _, _| edge |= gt.get(q) != own);
        out[pixel] = edge;
    }
    out
}

/// Builds the `K`-inference probability stack for one frame.
pub fn probability_stack(
    gt: &SegmentationMap,
    noise: &NoiseSpec,
    inferences: usize,
    handle: PartId,
    rng: &mut impl Rng,
) -> Result<(ProbabilityStack, Option<Blob>)> {
    if inferences == 0 {
        return Err(Error::NoInferences);
    }
    let dims = gt.dims();
    let n = dims.len();
    let classes = gt.num_classes();
    let blob = place_blob(gt, &noise.blob, handle, rng);
    let boundary = boundary_pixels(gt, noise.boundary_width);
    let w = noise.boundary_width;

    let mut data = vec![0.0; inferences * classes * n];
    let mut labels = vec![PartId::BACKGROUND; n];
    let mut logits = vec![0.0; classes];
    for k in 0..inferences {
        labels.copy_from_slice(gt.labels());
        for pixel in 0..n {
            if boundary[pixel] && rng.random::<bool>() {
                let (u, v) = dims.coords(pixel);
                let du = rng.random_range(0..=2 * w);
                let dv = rng.random_range(0..=2 * w);
                let qu = (u + du).saturating_sub(w).min(dims.width - 1);
                let qv = (v + dv).saturating_sub(w).min(dims.height - 1);
                labels[pixel] = gt.get(qv * dims.width + qu);
            }
        }
        if let Some(b) = blob {
            let r = (b.radius as i64 + rng.random_range(-1..=1)).max(0) as usize;
            let (cu, cv) = b.center;
            for_window(dims, cu, cv, r, |q, qu, qv| {
                let (du, dv) = (qu.abs_diff(cu), qv.abs_diff(cv));
                if du * du + dv * dv <= r * r {
                    labels[q] = b.label;
                }
            });
        }
        let block = &mut data[k * classes * n..(k + 1) * classes * n];
        for pixel in 0..n {
            let label = labels[pixel].index();
            if noise.logit_sigma == 0.0 {
                block[label * n + pixel] = 1.0;
                continue;
            }
            for (c, l) in logits.iter_mut().enumerate() {
                let base = if c == label { noise.logit_margin } else { 0.0 };
                *l = base + noise.logit_sigma * normal(rng);
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for l in logits.iter_mut() {
                *l = libm::exp(*l - max);
                total += *l;
            }
            for (c, l) in logits.iter().enumerate() {
                block[c * n + pixel] = l / total;
            }
        }
    }
    Ok((
        ProbabilityStack::new_unchecked(dims, inferences, classes, data)?,
        blob,
    ))
}
