//! The `fus` command line.
//!
//! Exit status: 0 on success, 1 for usage or config errors, 2 for data
//! errors (unreadable inputs, failed grid cells), 3 for internal failures.
//! Every command writes into a staging directory next to `--out` and moves
//! it into place only when complete, so a failed run leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use fus_core::raster::PartId;
use fus_core::sampler::{SampledFrame, SampledPoint, SamplerConfig, Strategy};
use fus_core::simulator::ObjectKind;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{Format, Generation, RunConfig};
use crate::error::{Error, Result};
use crate::harness::{
    compare, sample_trajectory, summarize, Aggregate, CellFailure, MetricRow, Scorer,
};
use crate::io::{self, Vertex};
use crate::sequence::{read_sequence, write_sequence, TOOL_NAME, TOOL_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "fus",
    version,
    about = "Frame-consistent uncertainty-aware point sampling benchmark"
)]
pub struct Cli {
    /// Seed for generation and sampling (compare: first seed of the list).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON run config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; must not exist or be empty.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for compare.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Format of per-row metric output.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render and corrupt a synthetic sequence into a sequence directory.
    Generate {
        #[arg(long)]
        kind: Option<ObjectKind>,
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Run one sampling strategy over a sequence directory.
    Sample {
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        points_per_part: Option<usize>,
    },
    /// Score a sampled trajectory against its sequence.
    Evaluate {
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long)]
        samples: PathBuf,
    },
    /// Run the strategy x seed grid and write metrics with a summary.
    Compare {
        /// Existing sequence directory (repeatable).
        #[arg(long)]
        sequence: Vec<PathBuf>,
        /// Scene kind to generate per seed (repeatable; replaces config scenes).
        #[arg(long)]
        kind: Vec<ObjectKind>,
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<Strategy>>,
        /// Shorthand for the FUS ablation trio.
        #[arg(long, conflicts_with = "strategies")]
        ablation: bool,
        /// Number of consecutive seeds starting at --seed.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        points_per_part: Option<usize>,
    },
}

/// Parses `args` and runs the command, returning the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => Error::Internal("panic".into()).exit_code(),
    }
}

fn set(map: &mut Map<String, Value>, path: &[&str], value: Value) {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = map;
    for key in parents {
        let slot = cur
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if !slot.is_object() {
            *slot = Value::Object(Map::new());
        }
        cur = slot.as_object_mut().expect("object");
    }
    cur.insert(last.to_string(), value);
}

/// Applies the flags to the config document and parses it.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut doc = match &cli.config {
        Some(path) => match RunConfig::load(path)? {
            Value::Object(m) => m,
            _ => return Err(Error::Config("top level must be a JSON object".into())),
        },
        None => Map::new(),
    };
    let mut flags = Map::new();
    if let Some(out) = &cli.out {
        set(&mut flags, &["out"], json!(out));
    }
    if let Some(w) = cli.workers {
        set(&mut flags, &["workers"], json!(w));
    }
    if let Some(f) = cli.format {
        set(&mut flags, &["format"], json!(f));
    }
    match &cli.command {
        Command::Generate { kind, frames } => {
            if let Some(seed) = cli.seed {
                set(&mut flags, &["seeds"], json!([seed]));
            }
            // patch the single configured scene in place so its options survive
            let scenes = doc.entry("scenes").or_insert_with(|| json!([]));
            if let Some(kind) = kind {
                match scenes.as_array_mut() {
                    Some(list) if list.len() == 1 && list[0].is_object() => {
                        list[0]["kind"] = json!(kind)
                    }
                    _ => *scenes = json!([{ "kind": kind }]),
                }
            }
            if let Some(frames) = frames {
                if let Some(first) = scenes
                    .as_array_mut()
                    .and_then(|l| l.first_mut())
                    .and_then(|s| s.as_object_mut())
                {
                    set(first, &["options", "frames"], json!(frames));
                }
            }
        }
        Command::Sample {
            strategy,
            points_per_part,
            ..
        } => {
            if let Some(seed) = cli.seed {
                set(&mut flags, &["sampler", "seed"], json!(seed));
            }
            if let Some(s) = strategy {
                set(&mut flags, &["sampler", "strategy"], json!(s));
            }
            if let Some(n) = points_per_part {
                set(&mut flags, &["sampler", "points_per_part"], json!(n));
            }
        }
        Command::Evaluate { .. } => {}
        Command::Compare {
            sequence,
            kind,
            strategies,
            ablation,
            seeds,
            points_per_part,
        } => {
            if !sequence.is_empty() {
                set(&mut flags, &["sequences"], json!(sequence));
            }
            if !kind.is_empty() {
                let list: Vec<Value> = kind.iter().map(|k| json!({ "kind": k })).collect();
                set(&mut flags, &["scenes"], Value::Array(list));
            }
            if let Some(s) = strategies {
                set(&mut flags, &["strategies"], json!(s));
            }
            if *ablation {
                set(&mut flags, &["strategies"], json!(Strategy::ABLATIONS));
            }
            match (cli.seed, seeds) {
                (start, Some(n)) => {
                    let start = start.unwrap_or(0);
                    set(
                        &mut flags,
                        &["seeds"],
                        json!((start..start + n).collect::<Vec<u64>>()),
                    );
                }
                (Some(s), None) => set(&mut flags, &["seeds"], json!([s])),
                (None, None) => {}
            }
            if let Some(n) = points_per_part {
                set(&mut flags, &["sampler", "points_per_part"], json!(n));
            }
        }
    }
    RunConfig::resolve(Some(Value::Object(doc)), flags)
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Usage("missing --out (or `out` in the config)".into()))?;
    let staging = Staging::new(&out)?;
    let result = match &cli.command {
        Command::Generate { .. } => cmd_generate(&cfg, staging.path()),
        Command::Sample { sequence, .. } => cmd_sample(&cfg, sequence, staging.path()),
        Command::Evaluate { sequence, samples } => {
            cmd_evaluate(&cfg, sequence, samples, staging.path())
        }
        Command::Compare { .. } => cmd_compare(&cfg, staging.path()),
    };
    match result {
        Ok(outcome) => {
            staging.commit()?;
            outcome
        }
        Err(e) => {
            staging.discard();
            Err(e)
        }
    }
}

/// Sibling directory that becomes `target` on commit and vanishes otherwise.
struct Staging {
    dir: PathBuf,
    target: PathBuf,
}

impl Staging {
    fn new(target: &Path) -> Result<Self> {
        if target.exists() {
            let mut entries = fs::read_dir(target).map_err(Error::io(target))?;
            if entries.next().is_some() {
                return Err(Error::Usage(format!(
                    "{} exists and is not empty",
                    target.display()
                )));
            }
        }
        let name = target
            .file_name()
            .ok_or_else(|| Error::Usage(format!("{} is not a directory name", target.display())))?;
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(Error::io(&parent))?;
        let dir = parent.join(format!(
            ".{}.partial-{}",
            name.to_string_lossy(),
            std::process::id()
        ));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(Error::io(&dir))?;
        }
        fs::create_dir(&dir).map_err(Error::io(&dir))?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
        })
    }

    fn path(&self) -> &Path {
        &self.dir
    }

    fn commit(self) -> Result<()> {
        if self.target.exists() {
            fs::remove_dir(&self.target).map_err(Error::io(&self.target))?;
        }
        fs::rename(&self.dir, &self.target).map_err(Error::io(&self.target))
    }

    fn discard(self) {
        let _ = fs::remove_dir_all(&self.dir);
    }
}

/// Inner `Result` is the command's verdict once its outputs are complete:
/// compare keeps its files but still fails when cells failed.
type Outcome = Result<Result<()>>;

fn cmd_generate(cfg: &RunConfig, dir: &Path) -> Outcome {
    let generation = cfg.generation()?;
    let seq = generation.sequence()?;
    write_sequence(dir, &generation, &seq)?;
    println!(
        "generated {} frames of a {} scene",
        seq.frames.len(),
        seq.spec.kind.name()
    );
    Ok(Ok(()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleManifest {
    pub tool: String,
    pub version: String,
    pub sampler: SamplerConfig,
    pub sequence: Generation,
    pub frames: Vec<SampleFrameInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFrameInfo {
    pub frame: u64,
    pub points: usize,
    pub reused: Vec<PartId>,
    pub unavailable: Vec<PartId>,
}

fn sample_path(dir: &Path, frame: u64) -> PathBuf {
    dir.join("frames").join(format!("{frame:04}.ply"))
}

fn cmd_sample(cfg: &RunConfig, sequence: &Path, dir: &Path) -> Outcome {
    let (manifest, traj) = read_sequence(sequence)?;
    let frames = sample_trajectory(&traj.observations()?, &cfg.sampler)?;
    let frames_dir = dir.join("frames");
    fs::create_dir(&frames_dir).map_err(Error::io(&frames_dir))?;
    for f in &frames {
        let vertices: Vec<Vertex> = f
            .points
            .iter()
            .map(|p| Vertex {
                position: p.position,
                part: p.part,
                value: p.weight,
                pixel: p.pixel,
            })
            .collect();
        io::write_ply(&sample_path(dir, f.frame), "weight", &vertices)?;
    }
    let out = SampleManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        sampler: cfg.sampler.clone(),
        sequence: manifest.generation,
        frames: frames
            .iter()
            .map(|f| SampleFrameInfo {
                frame: f.frame,
                points: f.len(),
                reused: f.reused.clone(),
                unavailable: f.unavailable.clone(),
            })
            .collect(),
    };
    io::write_json(&dir.join(MANIFEST), &out)?;
    println!(
        "sampled {} frames with {}",
        frames.len(),
        cfg.sampler.strategy
    );
    Ok(Ok(()))
}

/// Reads a sampled trajectory written by `sample`.
pub fn read_samples(dir: &Path, num_classes: usize) -> Result<(SampleManifest, Vec<SampledFrame>)> {
    let manifest: SampleManifest = io::read_json(&dir.join(MANIFEST))?;
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for info in &manifest.frames {
        let vertices = io::read_ply(&sample_path(dir, info.frame))
            .map_err(|e| e.in_frame(info.frame as usize))?;
        frames.push(SampledFrame {
            frame: info.frame,
            strategy: manifest.sampler.strategy,
            num_classes,
            points: vertices
                .into_iter()
                .map(|v| SampledPoint {
                    position: v.position,
                    part: v.part,
                    pixel: v.pixel,
                    weight: v.value,
                })
                .collect(),
            reused: info.reused.clone(),
            unavailable: info.unavailable.clone(),
        });
    }
    Ok((manifest, frames))
}

fn cmd_evaluate(cfg: &RunConfig, sequence: &Path, samples: &Path, dir: &Path) -> Outcome {
    let (seq_manifest, traj) = read_sequence(sequence)?;
    let (manifest, frames) = read_samples(samples, traj.num_classes())?;
    if manifest.sequence != seq_manifest.generation {
        return Err(Error::Usage(format!(
            "{} was not sampled from {}",
            samples.display(),
            sequence.display()
        )));
    }
    let scorer = Scorer::new(&traj, cfg.coverage_radius);
    let rows = scorer.evaluate(
        &traj,
        &frames,
        traj.kind.name(),
        seq_manifest.generation.seed,
        manifest.sampler.seed,
    )?;
    let frames = frames.len();
    write_rows(dir, cfg.format, &rows)?;
    write_summary(dir, cfg, Some(manifest), frames, &[], &summarize(&rows))?;
    println!("evaluated {frames} frames");
    Ok(Ok(()))
}

fn cmd_compare(cfg: &RunConfig, dir: &Path) -> Outcome {
    let result = compare(cfg)?;
    write_rows(dir, cfg.format, &result.rows)?;
    write_summary(
        dir,
        cfg,
        None,
        result.cells,
        &result.failures,
        &summarize(&result.rows),
    )?;
    println!(
        "compared {} cells ({} failed), {} metric rows",
        result.cells,
        result.failures.len(),
        result.rows.len()
    );
    if result.failures.is_empty() {
        Ok(Ok(()))
    } else {
        Ok(Err(Error::Format {
            path: dir.to_path_buf(),
            reason: format!(
                "{} of {} cells failed; see summary.json",
                result.failures.len(),
                result.cells
            ),
        }))
    }
}

pub const ROWS_CSV: &str = "metrics.csv";
pub const ROWS_JSON: &str = "metrics.json";
pub const SUMMARY: &str = "summary.json";
pub const MANIFEST: &str = "manifest.json";

fn write_rows(dir: &Path, format: Format, rows: &[MetricRow]) -> Result<()> {
    match format {
        Format::Json => io::write_json(&dir.join(ROWS_JSON), &rows),
        Format::Csv => {
            let path = dir.join(ROWS_CSV);
            let mut w =
                csv::Writer::from_path(&path).map_err(|e| Error::format(&path, e.to_string()))?;
            for r in rows {
                w.serialize(r)
                    .map_err(|e| Error::format(&path, e.to_string()))?;
            }
            w.flush().map_err(Error::io(&path))
        }
    }
}

/// Contents of `manifest.json` for evaluate and compare outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// Sampled-trajectory directory, for evaluate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cells: usize,
    pub failures: Vec<CellFailure>,
    pub aggregates: Vec<Aggregate>,
}

fn write_summary(
    dir: &Path,
    cfg: &RunConfig,
    samples: Option<SampleManifest>,
    cells: usize,
    failures: &[CellFailure],
    aggregates: &[Aggregate],
) -> Result<()> {
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        config: cfg.clone(),
        samples,
    };
    io::write_json(&dir.join(MANIFEST), &manifest)?;
    let summary = Summary {
        cells,
        failures: failures.to_vec(),
        aggregates: aggregates.to_vec(),
    };
    io::write_json(&dir.join(SUMMARY), &summary)
}
