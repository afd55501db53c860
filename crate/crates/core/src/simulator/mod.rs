//! Deterministic synthetic articulated scenes standing in for a segmentation
//! network looking at real objects: exact ray-cast depth, ground-truth part
//! masks, corrupted depth and a noisy stochastic probability stack per frame.

mod noise;
mod primitives;
mod render;
mod scene;

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use noise::{
    corrupt_depth, place_blob, probability_stack, Blob, BlobSpec, BlobTarget, NoiseSpec,
};
pub use primitives::{Primitive, Shape};
pub use render::{reference_clouds, render_frame, RenderedFrame};
pub use scene::{
    build_scene, build_scene_with, CameraIntrinsics, Dimensions, Joint, JointType, ObjectKind,
    SceneOptions, SceneSpec, DEFAULT_FRAMES, DEFAULT_HEIGHT, DEFAULT_WIDTH, DOOR_FACADE_RANGE,
    DRAWER_EXTENSION_LIMIT, FAUCET_HANDLE_RANGE, HANDLE_LENGTH_RANGE,
};

use crate::error::Result;
use crate::geometry::{CameraModel, Point, RigidTransform};
use crate::raster::{DepthMap, PerPart, ProbabilityStack, SegmentationMap};

/// Surface sample spacing of the reference clouds, m.
pub const DEFAULT_REFERENCE_SPACING: f64 = 0.01;

const NOISE_SALT: u64 = 0xC0_4407_0000_0002;

/// Generator for the corruption of one frame: independent per frame, so frames
/// can be generated in any order.
pub fn frame_rng(seed: u64, frame: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NOISE_SALT);
    rng.set_stream(frame as u64);
    rng
}

/// Corrupts one rendered frame: noisy depth and a `K`-inference stack.
pub fn corrupt(
    clean: &RenderedFrame,
    noise: &NoiseSpec,
    inferences: usize,
    handle: crate::raster::PartId,
    rng: &mut ChaCha8Rng,
) -> Result<(DepthMap, ProbabilityStack, Option<Blob>)> {
    noise.validate()?;
    let depth = corrupt_depth(&clean.depth, noise, rng);
    let (stack, blob) = probability_stack(&clean.labels, noise, inferences, handle, rng)?;
    Ok((depth, stack, blob))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFrame {
    pub clean_depth: DepthMap,
    pub depth: DepthMap,
    pub ground_truth: SegmentationMap,
    pub stack: ProbabilityStack,
    pub camera: CameraModel,
    pub part_transforms: PerPart<RigidTransform>,
    pub blob: Option<Blob>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSequence {
    pub spec: SceneSpec,
    pub noise: NoiseSpec,
    pub inferences: usize,
    pub seed: u64,
    pub frames: Vec<SequenceFrame>,
    /// Part surfaces at the rest pose.
    pub references: PerPart<Vec<Point>>,
}

impl SceneSequence {
    /// Reference surface of every part moved to its pose at `frame`.
    pub fn references_at(&self, frame: usize) -> PerPart<Vec<Point>> {
        let transforms = &self.frames[frame].part_transforms;
        self.references.map(|part, pts| {
            let t = transforms.get(part).copied().unwrap_or_default();
            pts.iter().map(|p| t.apply(p)).collect()
        })
    }
}

/// Renders and corrupts one frame.
pub fn generate_frame(
    spec: &SceneSpec,
    noise: &NoiseSpec,
    inferences: usize,
    seed: u64,
    frame: usize,
) -> Result<SequenceFrame> {
    let clean = render_frame(spec, frame)?;
    let mut rng = frame_rng(seed, frame);
    let (depth, stack, blob) = corrupt(&clean, noise, inferences, spec.kind.handle(), &mut rng)?;
    Ok(SequenceFrame {
        clean_depth: clean.depth,
        depth,
        ground_truth: clean.labels,
        stack,
        camera: clean.camera,
        part_transforms: clean.part_transforms,
        blob,
    })
}

/// Whole trajectory; identical inputs give bitwise-identical sequences.
pub fn generate_sequence(
    spec: &SceneSpec,
    noise: &NoiseSpec,
    inferences: usize,
    seed: u64,
    reference_spacing: f64,
) -> Result<SceneSequence> {
    spec.validate()?;
    noise.validate()?;
    let frames = (0..spec.frames())
        .map(|f| generate_frame(spec, noise, inferences, seed, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(SceneSequence {
        spec: spec.clone(),
        noise: *noise,
        inferences,
        seed,
        frames,
        references: reference_clouds(spec, reference_spacing),
    })
}
