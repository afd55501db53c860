//! Per-part point sampling: the frame-consistent uncertainty-aware sampler,
//! its two ablations, and the baseline strategies.
//!
//! # Random streams
//!
//! Every random draw comes from a ChaCha8 generator seeded with the run seed
//! and switched to stream `(frame << 8) | part` ([`stream_rng`]). Each
//! `(frame, part)` pair therefore owns an independent, reproducible stream, so
//! parts can be sampled in any order or in parallel with identical results.
//! Whole-scene strategies use the part-0 stream of the frame.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::consistency::{consistency_weights, distance_to_queue, SampleQueue};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::lift::ScenePoints;
use crate::perception::Observation;
use crate::raster::{PartId, PerPart};
use crate::spatial::dist2;
use crate::uncertainty::{uncertainty_weights, PartWeights};

/// Points drawn per part.
pub const DEFAULT_POINTS_PER_PART: usize = 32;
/// Stochastic inferences per frame.
pub const DEFAULT_INFERENCES: usize = 4;
/// Frames kept in the sample queue.
pub const DEFAULT_QUEUE_LENGTH: usize = 3;
/// Consistency decay coefficient, 1/m.
pub const DEFAULT_DECAY: f64 = 40.0;
/// Point budget of the uniform downsampling baseline.
pub const DEFAULT_DOWNSAMPLE_TOTAL: usize = 1024;
/// Points within this height above the table are dropped by uniform downsampling.
pub const TABLE_MARGIN: f64 = 0.005;

/// Sampling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Strategy {
    #[cfg_attr(feature = "serde", serde(rename = "FUS"))]
    Fus,
    #[cfg_attr(feature = "serde", serde(rename = "FUS-no-uncertainty"))]
    FusNoUncertainty,
    #[cfg_attr(feature = "serde", serde(rename = "FUS-no-consistency"))]
    FusNoConsistency,
    Random,
    #[cfg_attr(feature = "serde", serde(rename = "FPS"))]
    Fps,
    ScoreBased,
    UniformDownsample,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Fus,
        Strategy::FusNoUncertainty,
        Strategy::FusNoConsistency,
        Strategy::Random,
        Strategy::Fps,
        Strategy::ScoreBased,
        Strategy::UniformDownsample,
    ];

    pub const ABLATIONS: [Strategy; 3] = [
        Strategy::Fus,
        Strategy::FusNoUncertainty,
        Strategy::FusNoConsistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Fus => "FUS",
            Strategy::FusNoUncertainty => "FUS-no-uncertainty",
            Strategy::FusNoConsistency => "FUS-no-consistency",
            Strategy::Random => "Random",
            Strategy::Fps => "FPS",
            Strategy::ScoreBased => "ScoreBased",
            Strategy::UniformDownsample => "UniformDownsample",
        }
    }

    /// Whether the strategy draws a fixed number of points per part.
    pub fn is_part_aware(self) -> bool {
        self != Strategy::UniformDownsample
    }

    fn uses_uncertainty(self) -> bool {
        matches!(self, Strategy::Fus | Strategy::FusNoConsistency)
    }

    fn uses_consistency(self) -> bool {
        matches!(self, Strategy::Fus | Strategy::FusNoUncertainty)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unknown strategy name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseStrategyError(pub String);

impl fmt::Display for ParseStrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown strategy `{}`", self.0)
    }
}

impl core::error::Error for ParseStrategyError {}

impl FromStr for Strategy {
    type Err = ParseStrategyError;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseStrategyError(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SamplerConfig {
    pub points_per_part: usize,
    pub inferences: usize,
    pub queue_length: usize,
    /// Consistency decay coefficient, 1/m.
    pub decay: f64,
    pub strategy: Strategy,
    pub downsample_total: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            points_per_part: DEFAULT_POINTS_PER_PART,
            inferences: DEFAULT_INFERENCES,
            queue_length: DEFAULT_QUEUE_LENGTH,
            decay: DEFAULT_DECAY,
            strategy: Strategy::Fus,
            downsample_total: DEFAULT_DOWNSAMPLE_TOTAL,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |name, reason| Err(Error::InvalidParameter { name, reason });
        if self.points_per_part == 0 {
            return fail("points_per_part", "must be at least 1");
        }
        if self.inferences == 0 {
            return fail("inferences", "must be at least 1");
        }
        if self.queue_length == 0 {
            return fail("queue_length", "must be at least 1");
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return fail("decay", "must be positive and finite");
        }
        if self.downsample_total == 0 {
            return fail("downsample_total", "must be at least 1");
        }
        Ok(())
    }

    pub fn new_queue(&self) -> Result<SampleQueue> {
        SampleQueue::new(self.queue_length)
    }
}

/// Generator for one `(frame, part)` pair; see the module docs.
pub fn stream_rng(seed: u64, frame: u64, part: PartId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((frame << 8) | part.0 as u64);
    rng
}

/// One output point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledPoint {
    pub position: Point,
    pub part: PartId,
    /// Source pixel in the current frame; `None` for points reused from the queue.
    pub pixel: Option<u32>,
    /// Sampling weight the point was drawn with.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFrame {
    pub frame: u64,
    pub strategy: Strategy,
    pub num_classes: usize,
    /// Grouped by part in ascending part order for part-aware strategies.
    pub points: Vec<SampledPoint>,
    /// Parts with no candidates that were filled from the queue.
    pub reused: Vec<PartId>,
    /// Parts with neither candidates nor queued samples.
    pub unavailable: Vec<PartId>,
}

impl SampledFrame {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn part_points(&self, part: PartId) -> Vec<Point> {
        self.points
            .iter()
            .filter(|p| p.part == part)
            .map(|p| p.position)
            .collect()
    }

    pub fn count(&self, part: PartId) -> usize {
        self.points.iter().filter(|p| p.part == part).count()
    }

    /// `x, y, z` followed by the one-hot part encoding over all classes.
    pub fn features(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| {
                let mut f = vec![0.0; 3 + self.num_classes];
                f[..3].copy_from_slice(p.position.coords.as_slice());
                f[3 + p.part.index()] = 1.0;
                f
            })
            .collect()
    }
}

/// Elementwise product of two weight vectors.
pub fn combine(ua: &[f64], fc: &[f64]) -> Result<Vec<f64>> {
    if ua.len() != fc.len() {
        return Err(Error::LengthMismatch {
            left: ua.len(),
            right: fc.len(),
        });
    }
    Ok(ua.iter().zip(fc).map(|(a, b)| a * b).collect())
}

/// Per-part elementwise product, without renormalization.
pub fn combine_weights(ua: &PartWeights, fc: &PartWeights) -> Result<PartWeights> {
    if ua.num_classes() != fc.num_classes() {
        return Err(Error::LengthMismatch {
            left: ua.num_classes(),
            right: fc.num_classes(),
        });
    }
    let mut out = PartWeights::new(ua.num_classes());
    for ((part, a), (_, b)) in ua.iter().zip(fc.iter()) {
        *out.get_mut(part).expect("same class count") = combine(a, b)?;
    }
    Ok(out)
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "must be finite and nonnegative",
        });
    }
    if !weights.is_empty() && weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "must not all be zero",
        });
    }
    Ok(())
}

/// Index drawn proportionally to `weights` (uniformly among `eligible` if the
/// eligible mass is zero).
fn draw_one(weights: &[f64], eligible: &[bool], rng: &mut impl Rng) -> usize {
    let total: f64 = weights
        .iter()
        .zip(eligible)
        .filter(|(_, e)| **e)
        .map(|(w, _)| w)
        .sum();
    if total > 0.0 {
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (i, (&w, &e)) in weights.iter().zip(eligible).enumerate() {
            if !e || w == 0.0 {
                continue;
            }
            acc += w;
            last = Some(i);
            if target < acc {
                return i;
            }
        }
        last.expect("positive total implies a positive weight")
    } else {
        let open: Vec<usize> = (0..weights.len()).filter(|&i| eligible[i]).collect();
        open[rng.random_range(0..open.len())]
    }
}

/// Draws `n` candidate indices with probability proportional to `weights`.
///
/// With at least `n` candidates the draws are sequential without replacement,
/// each proportional to the weights still in the pool (uniform over the pool if
/// the remaining mass is zero). With `n` or fewer candidates every candidate is
/// taken in order and the shortfall is drawn with replacement.
pub fn weighted_sample(weights: &[f64], n: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    check_weights(weights)?;
    let len = weights.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    if len <= n {
        let all = vec![true; len];
        let mut out: Vec<usize> = (0..len).collect();
        out.extend((len..n).map(|_| draw_one(weights, &all, rng)));
        return Ok(out);
    }
    let mut eligible = vec![true; len];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let i = draw_one(weights, &eligible, rng);
        eligible[i] = false;
        out.push(i);
    }
    Ok(out)
}

fn pad_with_last(mut picks: Vec<usize>, n: usize) -> Vec<usize> {
    if let Some(&last) = picks.last() {
        picks.resize(n.max(picks.len()), last);
    }
    picks
}

/// Farthest point sampling seeded at the candidate farthest from the centroid.
/// Ties go to the lowest index. Short inputs are padded with the last pick.
pub fn fps_sample(candidates: &[Point], n: usize) -> Vec<usize> {
    let len = candidates.len();
    if len == 0 || n == 0 {
        return Vec::new();
    }
    let pts: Vec<[f64; 3]> = candidates.iter().map(|p| p.coords.into()).collect();
    let mut centroid = [0.0; 3];
    for p in &pts {
        for a in 0..3 {
            centroid[a] += p[a];
        }
    }
    centroid.iter_mut().for_each(|c| *c /= len as f64);

    let argmax = |values: &[f64]| {
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = i;
            }
        }
        best
    };
    let mut min_d: Vec<f64> = pts.iter().map(|p| dist2(p, &centroid)).collect();
    let mut picks = vec![argmax(&min_d)];
    min_d.iter_mut().for_each(|d| *d = f64::INFINITY);
    while picks.len() < n.min(len) {
        let last = pts[*picks.last().expect("non-empty")];
        for (d, p) in min_d.iter_mut().zip(&pts) {
            *d = d.min(dist2(p, &last));
        }
        for &i in &picks {
            min_d[i] = f64::NEG_INFINITY;
        }
        picks.push(argmax(&min_d));
    }
    pad_with_last(picks, n)
}

/// Top-`n` candidates by score; ties go to the lowest index. Short inputs are
/// padded with the last pick.
pub fn score_sample(scores: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(n);
    pad_with_last(order, n)
}

/// Drops points within [`TABLE_MARGIN`] of the table plane (when known) and
/// returns a uniform random subset of at most `total` of the rest, in
/// ascending index order.
pub fn uniform_downsample(
    scene: &ScenePoints,
    table_z: Option<f64>,
    total: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let survivors: Vec<usize> = match table_z {
        Some(z) => (0..scene.points.len())
            .filter(|&i| scene.points[i].z > z + TABLE_MARGIN)
            .collect(),
        None => (0..scene.points.len()).collect(),
    };
    if survivors.len() <= total {
        return survivors;
    }
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, survivors.len(), total)
        .into_iter()
        .map(|i| survivors[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Uncertainty and consistency factors for one part under `strategy`.
/// Returns `None` for the factor a strategy leaves out.
pub fn fus_factors(
    strategy: Strategy,
    candidates: &[Point],
    uncertainty: &[f64],
    queue: &SampleQueue,
    part: PartId,
    decay: f64,
) -> Result<(Option<Vec<f64>>, Option<Vec<f64>>)> {
    let ua = if strategy.uses_uncertainty() {
        Some(uncertainty_weights(uncertainty)?)
    } else {
        None
    };
    let fc = if strategy.uses_consistency() {
        Some(consistency_weights(
            &distance_to_queue(candidates, queue, part),
            decay,
        )?)
    } else {
        None
    };
    Ok((ua, fc))
}

/// Combined sampling weights for one part. The first frame of a trajectory
/// (empty queue) is sampled uniformly by every strategy that uses the queue.
pub fn part_weights(
    strategy: Strategy,
    candidates: &[Point],
    uncertainty: &[f64],
    queue: &SampleQueue,
    part: PartId,
    decay: f64,
) -> Result<Vec<f64>> {
    if strategy == Strategy::Random || (strategy.uses_consistency() && queue.is_empty()) {
        return Ok(vec![1.0; candidates.len()]);
    }
    let ones = || vec![1.0; candidates.len()];
    let (ua, fc) = fus_factors(strategy, candidates, uncertainty, queue, part, decay)?;
    let mut w = combine(&ua.unwrap_or_else(ones), &fc.unwrap_or_else(ones))?;
    // Underflow of every product leaves only the uncertainty ordering.
    if !w.is_empty() && w.iter().all(|&x| x == 0.0) {
        w = uncertainty_weights(uncertainty)?;
    }
    Ok(w)
}

/// Samples one frame and records the per-part samples in `queue`.
pub fn sample_frame(
    obs: &Observation,
    queue: &mut SampleQueue,
    cfg: &SamplerConfig,
    frame: u64,
) -> Result<SampledFrame> {
    cfg.validate()?;
    let num_classes = obs.cloud.num_classes();
    let mut out = SampledFrame {
        frame,
        strategy: cfg.strategy,
        num_classes,
        points: Vec::new(),
        reused: Vec::new(),
        unavailable: Vec::new(),
    };

    if cfg.strategy == Strategy::UniformDownsample {
        let mut rng = stream_rng(cfg.seed, frame, PartId::BACKGROUND);
        let picks = uniform_downsample(&obs.scene, obs.table_z, cfg.downsample_total, &mut rng);
        out.points = picks
            .into_iter()
            .map(|i| SampledPoint {
                position: obs.scene.points[i],
                part: obs.scene.labels[i],
                pixel: Some(obs.scene.pixels[i]),
                weight: 1.0,
            })
            .collect();
        return Ok(out);
    }

    let n = cfg.points_per_part;
    let mut pushed: PerPart<Vec<Point>> = PerPart::new(num_classes);
    for (part, cands) in obs.cloud.parts().iter() {
        if cands.is_empty() {
            match queue.latest(part) {
                Some(prev) => {
                    let reuse = pad_with_last((0..prev.len()).collect(), n);
                    let pts: Vec<Point> = reuse.into_iter().take(n).map(|i| prev[i]).collect();
                    out.points.extend(pts.iter().map(|&position| SampledPoint {
                        position,
                        part,
                        pixel: None,
                        weight: 0.0,
                    }));
                    *pushed.get_mut(part).expect("part in range") = pts;
                    out.reused.push(part);
                }
                None => out.unavailable.push(part),
            }
            continue;
        }

        let (picks, weights) = match cfg.strategy {
            Strategy::Fps => (fps_sample(&cands.points, n), None),
            Strategy::ScoreBased => {
                let scores: Vec<f64> = cands
                    .pixels
                    .iter()
                    .map(|&px| obs.mean.get(part.index(), px as usize))
                    .collect();
                (score_sample(&scores, n), Some(scores))
            }
            strategy => {
                let w = part_weights(
                    strategy,
                    &cands.points,
                    &cands.uncertainty,
                    queue,
                    part,
                    cfg.decay,
                )?;
                let mut rng = stream_rng(cfg.seed, frame, part);
                (weighted_sample(&w, n, &mut rng)?, Some(w))
            }
        };
        let pts: Vec<Point> = picks.iter().map(|&i| cands.points[i]).collect();
        out.points.extend(picks.iter().map(|&i| SampledPoint {
            position: cands.points[i],
            part,
            pixel: Some(cands.pixels[i]),
            weight: weights.as_ref().map_or(1.0, |w| w[i]),
        }));
        *pushed.get_mut(part).expect("part in range") = pts;
    }
    queue.push(frame, pushed)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::new(x, 0.0, 0.0)).collect()
    }

    #[test]
    fn combine_examples() {
        assert_eq!(
            combine(&[0.25, 0.75], &[1.0, 1.0]).unwrap(),
            vec![0.25, 0.75]
        );
        assert_eq!(
            combine(&[0.25, 0.75], &[1.0, 0.5]).unwrap(),
            vec![0.25, 0.375]
        );
        assert_eq!(combine(&[0.0, 0.75], &[1.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(combine(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn exhaustive_draw_returns_everything() {
        let mut rng = stream_rng(7, 0, PartId(1));
        assert_eq!(
            weighted_sample(&[0.0, 5.0, 1.0], 3, &mut rng).unwrap(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn degenerate_weight() {
        for seed in 0..50 {
            let mut rng = stream_rng(seed, 0, PartId(1));
            assert_eq!(
                weighted_sample(&[1.0, 0.0, 0.0, 0.0], 1, &mut rng).unwrap(),
                vec![0]
            );
        }
    }

    #[test]
    fn draws_are_distinct_when_enough_candidates() {
        let mut rng = stream_rng(3, 1, PartId(2));
        let w: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let mut picks = weighted_sample(&w, 40, &mut rng).unwrap();
        picks.sort_unstable();
        picks.dedup();
        assert_eq!(picks.len(), 40);
    }

    #[test]
    fn short_candidate_list_is_padded() {
        let mut rng = stream_rng(3, 1, PartId(2));
        let picks = weighted_sample(&[1.0, 1.0], 5, &mut rng).unwrap();
        assert_eq!(picks.len(), 5);
        assert_eq!(&picks[..2], &[0, 1]);
        assert!(weighted_sample(&[], 5, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn invalid_weights_rejected() {
        let mut rng = stream_rng(0, 0, PartId(1));
        assert!(weighted_sample(&[0.0, 0.0], 1, &mut rng).is_err());
        assert!(weighted_sample(&[-1.0, 2.0], 1, &mut rng).is_err());
        assert!(weighted_sample(&[f64::NAN], 1, &mut rng).is_err());
    }

    #[test]
    fn fps_examples() {
        let pts = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(fps_sample(&pts, 2), vec![3, 0]);
        assert_eq!(fps_sample(&pts, 3), vec![3, 0, 2]);
        let mut all = fps_sample(&pts, 4);
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert_eq!(fps_sample(&pts, 6), vec![3, 0, 2, 1, 1, 1]);
    }

    #[test]
    fn score_examples() {
        assert_eq!(score_sample(&[0.5; 5], 3), vec![0, 1, 2]);
        assert_eq!(score_sample(&[0.9, 0.5, 0.99], 2), vec![2, 0]);
        assert_eq!(score_sample(&[0.9, 0.5], 4), vec![0, 1, 1, 1]);
    }

    #[test]
    fn downsample_filters_table() {
        let scene = ScenePoints {
            points: vec![
                Point::new(0.0, 0.0, 0.7),
                Point::new(0.0, 0.0, 0.704),
                Point::new(0.0, 0.0, 0.8),
            ],
            labels: vec![PartId(0); 3],
            pixels: vec![0, 1, 2],
        };
        let mut rng = stream_rng(0, 0, PartId(0));
        assert_eq!(uniform_downsample(&scene, Some(0.7), 10, &mut rng), vec![2]);
        assert_eq!(
            uniform_downsample(&scene, Some(1.0), 10, &mut rng),
            Vec::<usize>::new()
        );
        assert_eq!(uniform_downsample(&scene, None, 2, &mut rng).len(), 2);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bogus".parse::<Strategy>().is_err());
    }

    #[test]
    fn defaults() {
        let c = SamplerConfig::default();
        assert_eq!(
            (c.points_per_part, c.inferences, c.queue_length, c.decay),
            (32, 4, 3, 40.0)
        );
        c.validate().unwrap();
        assert!(SamplerConfig {
            points_per_part: 0,
            ..c.clone()
        }
        .validate()
        .is_err());
    }
}
