//! Sampling runs, per-frame metrics and the strategy-by-seed comparison grid.

use std::collections::BTreeMap;
use std::path::PathBuf;

use fus_core::metrics::{contamination, temporal_consistency, ReferenceSurface};
use fus_core::perception::Observation;
use fus_core::raster::{PartId, PerPart};
use fus_core::sampler::{sample_frame, SampledFrame, SamplerConfig, Strategy};
use fus_core::Point;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SceneEntry};
use crate::error::{Error, Result};
use crate::sequence::{read_sequence, Trajectory};

/// One frame x part x strategy x seed measurement. Missing values are
/// undefined for that frame (no points, or no previous frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scene: String,
    pub scene_seed: u64,
    pub strategy: Strategy,
    pub seed: u64,
    pub frame: u64,
    pub part: u8,
    pub part_name: String,
    pub points: usize,
    pub chamfer: Option<f64>,
    pub consistency: Option<f64>,
    pub contamination: Option<f64>,
    pub coverage: Option<f64>,
}

impl MetricRow {
    pub const METRICS: [&'static str; 4] = ["chamfer", "consistency", "contamination", "coverage"];

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "chamfer" => self.chamfer,
            "consistency" => self.consistency,
            "contamination" => self.contamination,
            "coverage" => self.coverage,
            _ => None,
        }
    }

    fn sort_key(&self) -> (&str, u64, usize, u64, u64, u8) {
        (
            &self.scene,
            self.scene_seed,
            strategy_rank(self.strategy),
            self.seed,
            self.frame,
            self.part,
        )
    }
}

fn strategy_rank(s: Strategy) -> usize {
    Strategy::ALL
        .iter()
        .position(|&x| x == s)
        .expect("every strategy is listed")
}

/// Runs one strategy over a whole trajectory, frames in order.
pub fn sample_trajectory(
    observations: &[Observation],
    cfg: &SamplerConfig,
) -> Result<Vec<SampledFrame>> {
    let mut queue = cfg.new_queue()?;
    observations
        .iter()
        .enumerate()
        .map(|(t, obs)| {
            sample_frame(obs, &mut queue, cfg, t as u64).map_err(|e| Error::from(e).in_frame(t))
        })
        .collect()
}

/// Reference surfaces of one trajectory, ready to score any number of runs.
pub struct Scorer {
    surfaces: PerPart<ReferenceSurface>,
    radius: f64,
}

impl Scorer {
    pub fn new(traj: &Trajectory, coverage_radius: f64) -> Self {
        Self {
            surfaces: traj
                .references
                .map(|_, pts| ReferenceSurface::new(pts.clone())),
            radius: coverage_radius,
        }
    }

    /// Per-frame metrics for every part. Sampled points are taken back to the
    /// part's rest pose, where the reference surface lives; rigid motions
    /// preserve distances, so scores match the moved surface.
    pub fn evaluate(
        &self,
        traj: &Trajectory,
        sampled: &[SampledFrame],
        scene: &str,
        scene_seed: u64,
        seed: u64,
    ) -> Result<Vec<MetricRow>> {
        if sampled.len() != traj.frames.len() {
            return Err(Error::Usage(format!(
                "{} sampled frames for a {}-frame sequence",
                sampled.len(),
                traj.frames.len()
            )));
        }
        let mut rows = Vec::new();
        for (t, frame) in sampled.iter().enumerate() {
            let truth = &traj.frames[t];
            let dirty = contamination(frame, &truth.ground_truth);
            for (part, surface) in self.surfaces.iter() {
                let motion = truth.part_transforms.get(part).copied().unwrap_or_default();
                let back = motion.inverse();
                let rest: Vec<Point> = frame
                    .part_points(part)
                    .iter()
                    .map(|p| back.apply(p))
                    .collect();
                let shape = surface.score(&rest, self.radius)?;
                let consistency = if t == 0 {
                    None
                } else {
                    let prev = traj.frames[t - 1]
                        .part_transforms
                        .get(part)
                        .copied()
                        .unwrap_or_default();
                    temporal_consistency(&sampled[t - 1..=t], &[prev, motion], part)?.mean
                };
                rows.push(MetricRow {
                    scene: scene.to_string(),
                    scene_seed,
                    strategy: frame.strategy,
                    seed,
                    frame: frame.frame,
                    part: part.0,
                    part_name: traj.part_name(part).to_string(),
                    points: rest.len(),
                    chamfer: shape.map(|s| s.chamfer),
                    consistency,
                    contamination: dirty.get(part).copied().flatten(),
                    coverage: shape.map(|s| s.coverage),
                });
            }
        }
        Ok(rows)
    }
}

/// Aggregate of one metric over every frame and seed of a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scene: String,
    pub strategy: Strategy,
    pub part: u8,
    pub part_name: String,
    pub metric: String,
    pub n: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation.
    pub std: Option<f64>,
    pub median: Option<f64>,
}

pub fn summarize(rows: &[MetricRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(&str, usize, u8), Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.scene.as_str(), strategy_rank(r.strategy), r.part))
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for ((scene, rank, part), members) in groups {
        for metric in MetricRow::METRICS {
            let mut values: Vec<f64> = members.iter().filter_map(|r| r.metric(metric)).collect();
            let n = values.len();
            let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
            let std = mean.filter(|_| n > 1).map(|m| {
                let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
                (ss / (n - 1) as f64).sqrt()
            });
            values.sort_by(f64::total_cmp);
            let median = (n > 0).then(|| {
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    (values[n / 2 - 1] + values[n / 2]) / 2.0
                }
            });
            out.push(Aggregate {
                scene: scene.to_string(),
                strategy: Strategy::ALL[rank],
                part,
                part_name: members[0].part_name.clone(),
                metric: metric.to_string(),
                n,
                missing: members.len() - n,
                mean,
                std,
                median,
            });
        }
    }
    out
}

/// A grid cell that could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub scene: String,
    pub scene_seed: u64,
    pub strategy: Strategy,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompareOutput {
    pub rows: Vec<MetricRow>,
    pub failures: Vec<CellFailure>,
    pub cells: usize,
}

enum Source {
    Generated(SceneEntry),
    Stored(PathBuf),
}

/// A trajectory to load or generate once, then run every strategy and
/// sampler seed on.
struct Unit {
    scene: String,
    scene_seed: u64,
    source: Source,
    seeds: Vec<u64>,
}

fn units(cfg: &RunConfig) -> Vec<Unit> {
    let mut out = Vec::new();
    for (i, entry) in cfg.scenes.iter().enumerate() {
        let same_kind = cfg.scenes.iter().filter(|e| e.kind == entry.kind).count();
        let scene = if same_kind > 1 {
            format!("{}-{i}", entry.kind.name())
        } else {
            entry.kind.name().to_string()
        };
        // generated scenes pair the scene seed with the sampler seed
        out.extend(cfg.seeds.iter().map(|&seed| Unit {
            scene: scene.clone(),
            scene_seed: seed,
            source: Source::Generated(entry.clone()),
            seeds: vec![seed],
        }));
    }
    for dir in &cfg.sequences {
        let name = dir.file_name().map_or_else(
            || dir.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        out.push(Unit {
            scene: name,
            scene_seed: 0,
            source: Source::Stored(dir.clone()),
            seeds: cfg.seeds.clone(),
        });
    }
    out
}

fn run_unit(cfg: &RunConfig, unit: &Unit) -> (Vec<MetricRow>, Vec<CellFailure>) {
    let fail_all = |scene_seed: u64, e: &Error| -> Vec<CellFailure> {
        cfg.strategies
            .iter()
            .flat_map(|&strategy| {
                unit.seeds.iter().map(move |&seed| CellFailure {
                    scene: unit.scene.clone(),
                    scene_seed,
                    strategy,
                    seed,
                    error: e.to_string(),
                })
            })
            .collect()
    };
    let prepared = match &unit.source {
        Source::Generated(entry) => {
            let generation = crate::config::Generation {
                scene: entry.clone(),
                seed: unit.scene_seed,
                noise: cfg.noise,
                inferences: cfg.sampler.inferences,
                reference_spacing: cfg.reference_spacing,
            };
            generation
                .sequence()
                .map(|s| (unit.scene_seed, Trajectory::from(s)))
        }
        Source::Stored(dir) => read_sequence(dir).map(|(m, t)| (m.generation.seed, t)),
    };
    let (scene_seed, traj) = match prepared {
        Ok(p) => p,
        Err(e) => return (Vec::new(), fail_all(unit.scene_seed, &e)),
    };
    let observations = match traj.observations() {
        Ok(o) => o,
        Err(e) => return (Vec::new(), fail_all(scene_seed, &e)),
    };
    let scorer = Scorer::new(&traj, cfg.coverage_radius);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &strategy in &cfg.strategies {
        for &seed in &unit.seeds {
            let sampler = SamplerConfig {
                strategy,
                seed,
                ..cfg.sampler
            };
            let result = sample_trajectory(&observations, &sampler)
                .and_then(|frames| scorer.evaluate(&traj, &frames, &unit.scene, scene_seed, seed));
            match result {
                Ok(r) => rows.extend(r),
                Err(e) => failures.push(CellFailure {
                    scene: unit.scene.clone(),
                    scene_seed,
                    strategy,
                    seed,
                    error: e.to_string(),
                }),
            }
        }
    }
    (rows, failures)
}

/// Runs the full grid on `cfg.workers` threads. Cell failures are collected
/// rather than aborting the run; output order does not depend on scheduling.
pub fn compare(cfg: &RunConfig) -> Result<CompareOutput> {
    if cfg.strategies.is_empty() {
        return Err(Error::Usage("the strategy list is empty".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::Usage("the seed list is empty".into()));
    }
    if cfg.scenes.is_empty() && cfg.sequences.is_empty() {
        return Err(Error::Usage(
            "nothing to compare: give scenes or sequence directories".into(),
        ));
    }
    let units = units(cfg);
    let cells = units.iter().map(|u| u.seeds.len()).sum::<usize>() * cfg.strategies.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let results: Vec<_> = pool.install(|| units.par_iter().map(|u| run_unit(cfg, u)).collect());
    let mut out = CompareOutput {
        cells,
        ..Default::default()
    };
    for (rows, failures) in results {
        out.rows.extend(rows);
        out.failures.extend(failures);
    }
    out.rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(out)
}

/// Mean of `metric` for one part and strategy, per scene and sampler seed.
pub fn per_seed_means(
    rows: &[MetricRow],
    strategy: Strategy,
    part: PartId,
    metric: &str,
) -> BTreeMap<(String, u64), f64> {
    let mut acc: BTreeMap<(String, u64), (f64, usize)> = BTreeMap::new();
    for r in rows
        .iter()
        .filter(|r| r.strategy == strategy && r.part == part.0)
    {
        if let Some(v) = r.metric(metric) {
            let slot = acc.entry((r.scene.clone(), r.seed)).or_default();
            slot.0 += v;
            slot.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect()
}
