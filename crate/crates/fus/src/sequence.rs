//! Sequence directories and the trajectory view the harness runs on.
//!
//! ```text
//! manifest.json        generation settings, scene spec, tool version
//! depth/NNNN.bin       noisy depth (float raster)
//! gt/NNNN.bin          ground-truth labels (u8 raster)
//! prob/NNNN.bin        K x C x H x W probability stack
//! cam/NNNN.json        intrinsics, extrinsic and per-part motion
//! ref/part_C.ply       part surfaces at the rest pose
//! ```

use std::fs;
use std::path::Path;

use fus_core::geometry::{CameraModel, RigidTransform};
use fus_core::perception::Observation;
use fus_core::raster::{DepthMap, PartId, PerPart, ProbabilityStack, SegmentationMap};
use fus_core::simulator::{ObjectKind, SceneSequence, SceneSpec};
use fus_core::Point;
use serde::{Deserialize, Serialize};

use crate::config::Generation;
use crate::error::{Error, Result};
use crate::io::{self, CameraRecord, Vertex};

pub const TOOL_NAME: &str = "fus";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    pub tool: String,
    pub version: String,
    pub generation: Generation,
    pub kind: ObjectKind,
    pub parts: Vec<String>,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub spec: SceneSpec,
}

/// One frame as seen by samplers and metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFrame {
    pub depth: DepthMap,
    pub stack: ProbabilityStack,
    pub ground_truth: SegmentationMap,
    pub camera: CameraModel,
    pub part_transforms: PerPart<RigidTransform>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: ObjectKind,
    pub table_z: Option<f64>,
    pub frames: Vec<TrajectoryFrame>,
    /// Part surfaces at the rest pose.
    pub references: PerPart<Vec<Point>>,
}

impl From<SceneSequence> for Trajectory {
    fn from(seq: SceneSequence) -> Self {
        Self {
            kind: seq.spec.kind,
            table_z: Some(seq.spec.table_z),
            frames: seq
                .frames
                .into_iter()
                .map(|f| TrajectoryFrame {
                    depth: f.depth,
                    stack: f.stack,
                    ground_truth: f.ground_truth,
                    camera: f.camera,
                    part_transforms: f.part_transforms,
                })
                .collect(),
            references: seq.references,
        }
    }
}

impl Trajectory {
    pub fn num_classes(&self) -> usize {
        self.kind.num_classes()
    }

    pub fn part_name(&self, part: PartId) -> &'static str {
        if part.is_background() {
            return "background";
        }
        self.kind.part_names()[part.index() - 1]
    }

    /// Perception output for every frame, in order.
    pub fn observations(&self) -> Result<Vec<Observation>> {
        self.frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                Observation::perceive(&f.depth, &f.stack, &f.camera)
                    .map(|o| o.with_table(self.table_z))
                    .map_err(|e| Error::from(e).in_frame(i))
            })
            .collect()
    }
}

fn frame_name(frame: usize, ext: &str) -> String {
    format!("{frame:04}.{ext}")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(Error::io(path))
}

/// Writes a generated sequence into `dir`, which must exist.
pub fn write_sequence(dir: &Path, generation: &Generation, seq: &SceneSequence) -> Result<()> {
    for sub in ["depth", "gt", "prob", "cam", "ref"] {
        create_dir(&dir.join(sub))?;
    }
    let dims = seq.spec.dims();
    for (i, f) in seq.frames.iter().enumerate() {
        io::write_depth(&dir.join("depth").join(frame_name(i, "bin")), &f.depth)?;
        io::write_labels(&dir.join("gt").join(frame_name(i, "bin")), &f.ground_truth)?;
        io::write_stack(&dir.join("prob").join(frame_name(i, "bin")), &f.stack)?;
        let cam = CameraRecord::new(dims, &f.camera, &f.part_transforms);
        io::write_json(&dir.join("cam").join(frame_name(i, "json")), &cam)?;
    }
    for (part, pts) in seq.references.iter() {
        let vertices: Vec<Vertex> = pts
            .iter()
            .map(|&position| Vertex {
                position,
                part,
                value: 0.0,
                pixel: None,
            })
            .collect();
        io::write_ply(
            &dir.join("ref").join(format!("part_{}.ply", part.0)),
            "uncertainty",
            &vertices,
        )?;
    }
    let manifest = SequenceManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        generation: generation.clone(),
        kind: seq.spec.kind,
        parts: seq
            .spec
            .kind
            .part_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        frames: seq.frames.len(),
        width: dims.width,
        height: dims.height,
        spec: seq.spec.clone(),
    };
    io::write_json(&dir.join("manifest.json"), &manifest)
}

pub fn read_manifest(dir: &Path) -> Result<SequenceManifest> {
    io::read_json(&dir.join("manifest.json"))
}

/// Loads a sequence directory. Errors in a frame file carry the frame index.
pub fn read_sequence(dir: &Path) -> Result<(SequenceManifest, Trajectory)> {
    let manifest = read_manifest(dir)?;
    let classes = manifest.kind.num_classes();
    let mut frames = Vec::with_capacity(manifest.frames);
    for i in 0..manifest.frames {
        let load = || -> Result<TrajectoryFrame> {
            let depth = io::read_depth(&dir.join("depth").join(frame_name(i, "bin")))?;
            let ground_truth =
                io::read_labels(&dir.join("gt").join(frame_name(i, "bin")), classes)?;
            let stack = io::read_stack(&dir.join("prob").join(frame_name(i, "bin")))?;
            let cam_path = dir.join("cam").join(frame_name(i, "json"));
            let cam: CameraRecord = io::read_json(&cam_path)?;
            let bad = |e: fus_core::Error| Error::format(&cam_path, e.to_string());
            let camera = cam.camera().map_err(bad)?;
            let part_transforms = cam.transforms().map_err(bad)?;
            if part_transforms.num_classes() != classes {
                return Err(Error::format(&cam_path, "wrong number of part transforms"));
            }
            if stack.classes() != classes
                || stack.dims() != depth.dims()
                || ground_truth.dims() != depth.dims()
            {
                return Err(Error::format(
                    dir,
                    "frame rasters disagree in size or class count",
                ));
            }
            Ok(TrajectoryFrame {
                depth,
                stack,
                ground_truth,
                camera,
                part_transforms,
            })
        };
        frames.push(load().map_err(|e| e.in_frame(i))?);
    }
    let mut references = PerPart::new(classes);
    for (part, slot) in references.iter_mut() {
        let path = dir.join("ref").join(format!("part_{}.ply", part.0));
        *slot = io::read_ply(&path)?
            .into_iter()
            .map(|v| v.position)
            .collect();
    }
    let traj = Trajectory {
        kind: manifest.kind,
        table_z: Some(manifest.spec.table_z),
        frames,
        references,
    };
    Ok((manifest, traj))
}
