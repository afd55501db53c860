//! Randomized articulated objects on a table, with a scripted articulation and
//! a hand-centric camera that approaches the handle.
//!
//! World frame: z up, table top at `table_z`, object front facing -y. Every
//! range below is a modelling choice for the synthetic benchmark.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::primitives::Primitive;
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Point, RigidTransform, Vector};
use crate::raster::{Dims, PartId, PerPart};

/// Image width used by the benchmark.
pub const DEFAULT_WIDTH: usize = 256;
/// Image height used by the benchmark.
pub const DEFAULT_HEIGHT: usize = 144;
pub const DEFAULT_FRAMES: usize = 20;

/// Door facade side length range, m.
pub const DOOR_FACADE_RANGE: (f64, f64) = (0.3, 0.8);
/// Handle length range for doors and drawers, m.
pub const HANDLE_LENGTH_RANGE: (f64, f64) = (0.02, 0.10);
/// Maximum drawer extension, m.
pub const DRAWER_EXTENSION_LIMIT: f64 = 0.3;
/// Faucet lever length range, m.
pub const FAUCET_HANDLE_RANGE: (f64, f64) = (0.05, 0.15);
/// Door opening limit, rad.
pub const DOOR_ANGLE_LIMIT: f64 = FRAC_PI_2;
/// Faucet lever rotation limit, rad.
pub const FAUCET_ANGLE_LIMIT: f64 = FRAC_PI_2;

const FACADE_THICKNESS: f64 = 0.02;
const HANDLE_THICKNESS: f64 = 0.015;
const SEED_SALT: u64 = 0x5CE7_E5EE_D000_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ObjectKind {
    Door,
    Drawer,
    Faucet,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [ObjectKind::Door, ObjectKind::Drawer, ObjectKind::Faucet];

    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::Door => "door",
            ObjectKind::Drawer => "drawer",
            ObjectKind::Faucet => "faucet",
        }
    }

    /// Part names indexed by part id minus one.
    pub fn part_names(self) -> &'static [&'static str] {
        match self {
            ObjectKind::Door | ObjectKind::Drawer => &["base", "facade", "handle"],
            ObjectKind::Faucet => &["base", "handle"],
        }
    }

    /// Class count including background.
    pub fn num_classes(self) -> usize {
        self.part_names().len() + 1
    }

    pub fn part(self, name: &str) -> Option<PartId> {
        self.part_names()
            .iter()
            .position(|n| *n == name)
            .map(|i| PartId(i as u8 + 1))
    }

    pub fn handle(self) -> PartId {
        self.part("handle").expect("every kind has a handle")
    }

    pub fn base(self) -> PartId {
        PartId(1)
    }

    /// Range of the joint value (rad or m).
    /// Joint value reached at the end of a trajectory. A sequence covers the
    /// start of an opening, so parts move by about a centimeter per frame.
    pub fn opening_range(self) -> (f64, f64) {
        match self {
            ObjectKind::Door => (5f64.to_radians(), 15f64.to_radians()),
            ObjectKind::Drawer => (0.02, 0.06),
            ObjectKind::Faucet => (15f64.to_radians(), 30f64.to_radians()),
        }
    }

    pub fn joint_limits(self) -> (f64, f64) {
        match self {
            ObjectKind::Door => (0.0, DOOR_ANGLE_LIMIT),
            ObjectKind::Drawer => (0.0, DRAWER_EXTENSION_LIMIT),
            ObjectKind::Faucet => (0.0, FAUCET_ANGLE_LIMIT),
        }
    }
}

impl core::str::FromStr for ObjectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ObjectKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or(Error::InvalidParameter {
                name: "kind",
                reason: "expected door, drawer or faucet",
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            fx: 160.0,
            fy: 160.0,
            cx: (DEFAULT_WIDTH as f64 - 1.0) / 2.0,
            cy: (DEFAULT_HEIGHT as f64 - 1.0) / 2.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn dims(&self) -> Dims {
        Dims::new(self.width, self.height)
    }

    pub fn camera(&self, pose: RigidTransform) -> Result<CameraModel> {
        CameraModel::new(self.fx, self.fy, self.cx, self.cy, pose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum JointType {
    /// Rotation about `axis` through `origin`; value in radians.
    Revolute,
    /// Translation along `axis`; value in meters.
    Prismatic,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Joint {
    pub joint_type: JointType,
    pub origin: Point,
    /// Unit axis.
    pub axis: Vector,
    /// Parts carried by the joint; all others stay fixed.
    pub moving: Vec<PartId>,
}

impl Joint {
    pub fn transform(&self, value: f64) -> RigidTransform {
        match self.joint_type {
            JointType::Revolute => RigidTransform::about_axis(self.origin, self.axis, value),
            JointType::Prismatic => RigidTransform::from_translation(self.axis * value),
        }
    }
}

/// Sampled object dimensions, m.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dimensions {
    /// Cabinet (or faucet base) width, height, depth.
    pub body: [f64; 3],
    /// Facade width, height, thickness; zero for faucets.
    pub facade: [f64; 3],
    pub handle_length: f64,
    pub handle_thickness: f64,
    /// Distance from the facade (or base axis) to the handle's grip.
    pub handle_standoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SceneSpec {
    pub kind: ObjectKind,
    pub seed: u64,
    pub table_z: f64,
    pub dimensions: Dimensions,
    /// Handle grip center at the rest pose.
    pub handle_center: Point,
    pub primitives: Vec<Primitive>,
    pub joint: Joint,
    /// Joint value per frame.
    pub joint_values: Vec<f64>,
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-world pose per frame.
    pub camera_poses: Vec<RigidTransform>,
}

/// Knobs for [`build_scene_with`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SceneOptions {
    pub frames: usize,
    pub intrinsics: CameraIntrinsics,
    /// Fixes the handle length instead of sampling it.
    pub handle_length: Option<f64>,
    /// Keeps the object closed for the whole trajectory.
    pub static_object: bool,
    /// Keeps the camera at its first pose for the whole trajectory.
    pub static_camera: bool,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self {
            frames: DEFAULT_FRAMES,
            intrinsics: CameraIntrinsics::default(),
            handle_length: None,
            static_object: false,
            static_camera: false,
        }
    }
}

impl SceneSpec {
    pub fn num_classes(&self) -> usize {
        self.kind.num_classes()
    }

    pub fn frames(&self) -> usize {
        self.joint_values.len()
    }

    pub fn dims(&self) -> Dims {
        self.intrinsics.dims()
    }

    /// Motion of `part` from the rest pose at `frame`.
    pub fn part_transform(&self, part: PartId, frame: usize) -> RigidTransform {
        if self.joint.moving.contains(&part) {
            self.joint.transform(self.joint_values[frame])
        } else {
            RigidTransform::identity()
        }
    }

    pub fn part_transforms(&self, frame: usize) -> PerPart<RigidTransform> {
        PerPart::from_fn(self.num_classes(), |p| self.part_transform(p, frame))
    }

    pub fn camera(&self, frame: usize) -> Result<CameraModel> {
        self.intrinsics.camera(self.camera_poses[frame])
    }

    pub fn validate(&self) -> Result<()> {
        if self.joint_values.len() != self.camera_poses.len() {
            return Err(Error::LengthMismatch {
                left: self.joint_values.len(),
                right: self.camera_poses.len(),
            });
        }
        let (lo, hi) = self.kind.joint_limits();
        if self.joint_values.iter().any(|v| !(lo..=hi).contains(v)) {
            return Err(Error::InvalidParameter {
                name: "joint_values",
                reason: "outside the joint limits of the object kind",
            });
        }
        if self
            .primitives
            .iter()
            .any(|p| p.part.is_background() || p.part.index() >= self.num_classes())
        {
            return Err(Error::InvalidParameter {
                name: "primitives",
                reason: "primitive assigned to an unknown part",
            });
        }
        for pose in &self.camera_poses {
            self.intrinsics.camera(*pose)?;
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    range.0 + (range.1 - range.0) * rng.random::<f64>()
}

/// Builds a scene with default options.
pub fn build_scene(kind: ObjectKind, seed: u64) -> SceneSpec {
    build_scene_with(kind, seed, &SceneOptions::default())
}

pub fn build_scene_with(kind: ObjectKind, seed: u64, opts: &SceneOptions) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SEED_SALT);
    let table_z = uniform(&mut rng, (0.7, 0.8));
    let (base, facade, handle) = (PartId(1), PartId(2), kind.handle());
    let mut prims = Vec::new();

    let (dimensions, handle_center, joint) = match kind {
        ObjectKind::Door | ObjectKind::Drawer => {
            let ft = FACADE_THICKNESS;
            let (fw, fh) = match kind {
                ObjectKind::Door => (
                    uniform(&mut rng, DOOR_FACADE_RANGE),
                    uniform(&mut rng, DOOR_FACADE_RANGE),
                ),
                _ => (
                    uniform(&mut rng, (0.3, 0.8)),
                    uniform(&mut rng, (0.12, 0.3)),
                ),
            };
            let extra = if kind == ObjectKind::Drawer {
                uniform(&mut rng, (0.0, 0.3))
            } else {
                0.0
            };
            let body = [fw + 0.04, fh + 0.04 + extra, uniform(&mut rng, (0.3, 0.5))];
            prims.push(Primitive::cuboid(
                base,
                Point::new(0.0, body[2] / 2.0, table_z + body[1] / 2.0),
                [body[0] / 2.0, body[2] / 2.0, body[1] / 2.0],
            ));
            let facade_z = table_z + body[1] - 0.02 - fh / 2.0;
            prims.push(Primitive::cuboid(
                facade,
                Point::new(0.0, -ft / 2.0, facade_z),
                [fw / 2.0, ft / 2.0, fh / 2.0],
            ));
            let length = opts
                .handle_length
                .unwrap_or_else(|| uniform(&mut rng, HANDLE_LENGTH_RANGE));
            let standoff = uniform(&mut rng, (0.03, 0.05));
            let ht = HANDLE_THICKNESS;
            let grip_y = -ft - standoff;
            let post_len = standoff - ht / 2.0;
            let post_y = -ft - post_len / 2.0;
            let (center, half, post_offsets) = if kind == ObjectKind::Door {
                let x = fw / 2.0 - 0.05;
                let z = facade_z + uniform(&mut rng, (-0.1, 0.1)) * fh;
                let off = Vector::new(0.0, 0.0, length / 2.0 - 0.005);
                (
                    Point::new(x, grip_y, z),
                    [ht / 2.0, ht / 2.0, length / 2.0],
                    off,
                )
            } else {
                // drawer body slides out with the front
                let inner = [fw / 2.0 - 0.01, body[2] * 0.4, fh / 2.0 - 0.01];
                prims.push(Primitive::cuboid(
                    facade,
                    Point::new(0.0, inner[1], facade_z),
                    inner,
                ));
                let off = Vector::new(length / 2.0 - 0.005, 0.0, 0.0);
                (
                    Point::new(0.0, grip_y, facade_z),
                    [length / 2.0, ht / 2.0, ht / 2.0],
                    off,
                )
            };
            prims.push(Primitive::cuboid(handle, center, half));
            for sign in [-1.0, 1.0] {
                let c = Point::new(center.x, post_y, center.z) + post_offsets * sign;
                prims.push(Primitive::cuboid(handle, c, [0.005, post_len / 2.0, 0.005]));
            }
            let joint = if kind == ObjectKind::Door {
                Joint {
                    joint_type: JointType::Revolute,
                    origin: Point::new(-fw / 2.0, 0.0, facade_z),
                    axis: -Vector::z(),
                    moving: vec![facade, handle],
                }
            } else {
                Joint {
                    joint_type: JointType::Prismatic,
                    origin: Point::new(0.0, 0.0, facade_z),
                    axis: -Vector::y(),
                    moving: vec![facade, handle],
                }
            };
            let dims = Dimensions {
                body,
                facade: [fw, fh, ft],
                handle_length: length,
                handle_thickness: ht,
                handle_standoff: standoff,
            };
            (dims, center, joint)
        }
        ObjectKind::Faucet => {
            let radius = uniform(&mut rng, (0.02, 0.035));
            let height = uniform(&mut rng, (0.15, 0.3));
            let spout = uniform(&mut rng, (0.08, 0.15));
            prims.push(Primitive::cylinder(
                base,
                Point::new(0.0, 0.0, table_z + height / 2.0),
                radius,
                height / 2.0,
            ));
            prims.push(Primitive::cuboid(
                base,
                Point::new(0.0, -spout / 2.0, table_z + height - 0.03),
                [0.01, spout / 2.0, 0.01],
            ));
            let length = opts
                .handle_length
                .unwrap_or_else(|| uniform(&mut rng, FAUCET_HANDLE_RANGE));
            let hub_z = table_z + height + 0.01;
            prims.push(Primitive::cylinder(
                handle,
                Point::new(0.0, 0.0, hub_z),
                radius * 0.8,
                0.01,
            ));
            let center = Point::new(length / 2.0, 0.0, hub_z + 0.01 + HANDLE_THICKNESS / 2.0);
            prims.push(Primitive::cuboid(
                handle,
                center,
                [length / 2.0, HANDLE_THICKNESS / 2.0, HANDLE_THICKNESS / 2.0],
            ));
            let joint = Joint {
                joint_type: JointType::Revolute,
                origin: Point::new(0.0, 0.0, hub_z),
                axis: Vector::z(),
                moving: vec![handle],
            };
            let dims = Dimensions {
                body: [2.0 * radius, height, 2.0 * radius],
                facade: [0.0; 3],
                handle_length: length,
                handle_thickness: HANDLE_THICKNESS,
                handle_standoff: length / 2.0,
            };
            (dims, center, joint)
        }
    };

    let frames = opts.frames.max(1);
    let target = if opts.static_object {
        0.0
    } else {
        uniform(&mut rng, kind.opening_range())
    };
    // approach while closed, then open
    let start = frames / 2;
    let joint_values: Vec<f64> = (0..frames)
        .map(|f| {
            if f <= start || frames - 1 == start {
                0.0
            } else {
                target * (f - start) as f64 / (frames - 1 - start) as f64
            }
        })
        .collect();

    let (near, far) = match kind {
        ObjectKind::Faucet => ((0.2, 0.28), (0.35, 0.5)),
        _ => ((0.22, 0.3), (0.45, 0.6)),
    };
    let d0 = uniform(&mut rng, far);
    let d1 = uniform(&mut rng, near);
    let dir = Vector::new(
        uniform(&mut rng, (-0.3, 0.3)),
        -1.0,
        uniform(&mut rng, (0.1, 0.4)),
    )
    .normalize();
    let moving_handle = joint.moving.contains(&handle);
    let camera_poses = (0..frames)
        .map(|f| {
            let f = if opts.static_camera { 0 } else { f };
            let s = if frames > 1 {
                f as f64 / (frames - 1) as f64
            } else {
                0.0
            };
            let target = if moving_handle {
                joint.transform(joint_values[f]).apply(&handle_center)
            } else {
                handle_center
            };
            let eye = target + dir * (d0 + (d1 - d0) * s);
            RigidTransform::look_at(eye, target, Vector::z())
        })
        .collect();

    SceneSpec {
        kind,
        seed,
        table_z,
        dimensions,
        handle_center,
        primitives: prims,
        joint,
        joint_values,
        intrinsics: opts.intrinsics,
        camera_poses,
    }
}
