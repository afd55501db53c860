//! Rigid transforms and the pinhole camera.

pub use nalgebra::Matrix3;
use nalgebra::{Point3, Rotation3, Unit, Vector3};

use crate::error::{Error, Result};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// A proper rigid motion `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector::zeros(),
        }
    }

    /// Builds a transform, rejecting rotations that are not orthonormal with
    /// determinant +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector) -> Result<Self> {
        let t = Self {
            rotation,
            translation,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn from_translation(translation: Vector) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` radians about the line through `pivot` along `axis`.
    pub fn about_axis(pivot: Point, axis: Vector, angle: f64) -> Self {
        let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner();
        let translation = pivot.coords - rotation * pivot.coords;
        Self {
            rotation,
            translation,
        }
    }

    /// Camera-to-world pose for a camera at `eye` looking at `target`, using the
    /// x-right, y-down, z-forward camera convention. `up` must not be parallel
    /// to the viewing direction.
    pub fn look_at(eye: Point, target: Point, up: Vector) -> Self {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        Self {
            rotation: Matrix3::from_columns(&[right, down, forward]),
            translation: eye.coords,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self
            .rotation
            .iter()
            .chain(self.translation.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidCamera("non-finite transform"));
        }
        let gram = self.rotation.transpose() * self.rotation;
        if (gram - Matrix3::identity()).amax() > ROTATION_TOLERANCE {
            return Err(Error::InvalidCamera("rotation is not orthonormal"));
        }
        if (self.rotation.determinant() - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::InvalidCamera("rotation determinant is not +1"));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, p: &Point) -> Point {
        Point::from(self.rotation * p.coords + self.translation)
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vector) -> Vector {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Pinhole intrinsics plus the camera-to-world extrinsic.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub extrinsic: RigidTransform,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, extrinsic: RigidTransform) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            extrinsic,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::InvalidCamera("focal lengths must be positive"));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidCamera("non-finite principal point"));
        }
        self.extrinsic.validate()
    }

    /// Camera-frame point for pixel `(u, v)` at depth `d`.
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Point {
        Point::new(
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            depth,
        )
    }

    /// World-frame point for pixel `(u, v)` at depth `d`.
    #[inline]
    pub fn lift(&self, u: f64, v: f64, depth: f64) -> Point {
        self.extrinsic.apply(&self.unproject(u, v, depth))
    }

    /// Projects a world point to `(u, v, depth)`. Depth is the camera-frame z.
    pub fn project(&self, world: &Point) -> (f64, f64, f64) {
        let p = self.extrinsic.inverse().apply(world);
        (
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
            p.z,
        )
    }

    /// World-frame ray through pixel `(u, v)`: origin and a direction whose
    /// camera-frame z component is 1, so the ray parameter equals depth.
    pub fn pixel_ray(&self, u: f64, v: f64) -> (Point, Vector) {
        let dir_cam = Vector::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        (
            Point::from(self.extrinsic.translation),
            self.extrinsic.apply_vector(&dir_cam),
        )
    }

    /// Same camera moved by `t` (world-frame motion applied after the extrinsic).
    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            extrinsic: t.compose(&self.extrinsic),
            ..*self
        }
    }
}
