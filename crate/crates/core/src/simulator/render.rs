//! Ray-cast depth and ground-truth labels.

use alloc::vec;
use alloc::vec::Vec;

use super::scene::SceneSpec;
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Point, RigidTransform};
use crate::raster::{DepthMap, PartId, PerPart, SegmentationMap};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    /// Exact depth; 0 where the ray hits nothing.
    pub depth: DepthMap,
    /// Part of the nearest hit; background for the table and for misses.
    pub labels: SegmentationMap,
    pub camera: CameraModel,
    /// Motion of each part from its rest pose.
    pub part_transforms: PerPart<RigidTransform>,
}

/// Renders frame `frame` of the scene.
pub fn render_frame(spec: &SceneSpec, frame: usize) -> Result<RenderedFrame> {
    if frame >= spec.frames() {
        return Err(Error::FrameOutOfRange {
            frame,
            len: spec.frames(),
        });
    }
    let camera = spec.camera(frame)?;
    let part_transforms = spec.part_transforms(frame);
    let to_local: Vec<RigidTransform> = spec
        .primitives
        .iter()
        .map(|p| p.world_to_local(&spec.part_transform(p.part, frame)))
        .collect();

    let dims = spec.dims();
    let mut depth = vec![0.0; dims.len()];
    let mut labels = vec![PartId::BACKGROUND; dims.len()];
    for pixel in 0..dims.len() {
        let (u, v) = dims.coords(pixel);
        let (origin, dir) = camera.pixel_ray(u as f64, v as f64);
        if let Some((t, part)) = cast(spec, &to_local, &origin, &dir) {
            depth[pixel] = t;
            labels[pixel] = part;
        }
    }
    Ok(RenderedFrame {
        depth: DepthMap::new(dims, depth)?,
        labels: SegmentationMap::new(dims, spec.num_classes(), labels)?,
        camera,
        part_transforms,
    })
}

/// Nearest hit among the primitives and the table plane.
fn cast(
    spec: &SceneSpec,
    to_local: &[RigidTransform],
    origin: &Point,
    dir: &crate::geometry::Vector,
) -> Option<(f64, PartId)> {
    let mut best: Option<(f64, PartId)> = None;
    if dir.z < 0.0 {
        let t = (spec.table_z - origin.z) / dir.z;
        if t > 0.0 {
            best = Some((t, PartId::BACKGROUND));
        }
    }
    for (prim, tl) in spec.primitives.iter().zip(to_local) {
        if let Some(t) = prim.intersect_local(tl, origin, dir) {
            if best.is_none_or(|(b, _)| t < b) {
                best = Some((t, prim.part));
            }
        }
    }
    best
}

/// Dense surface samples of every part at the rest pose.
pub fn reference_clouds(spec: &SceneSpec, spacing: f64) -> PerPart<Vec<Point>> {
    let mut out: PerPart<Vec<Point>> = PerPart::new(spec.num_classes());
    for prim in &spec.primitives {
        if let Some(cloud) = out.get_mut(prim.part) {
            cloud.extend(prim.surface_points(spacing));
        }
    }
    out
}
