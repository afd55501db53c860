//! Analytic boxes and cylinders: ray intersection and surface sampling.

use alloc::vec::Vec;

use crate::geometry::{Point, RigidTransform, Vector};
use crate::raster::PartId;

/// Hits closer than this along the ray are ignored.
const MIN_HIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum Shape {
    /// Axis-aligned box in its local frame, given by half extents.
    Cuboid { half: [f64; 3] },
    /// Cylinder along its local z axis, centered at the origin.
    Cylinder { radius: f64, half_height: f64 },
}

/// A shape placed in the world (at the articulation rest pose) and owned by a part.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Primitive {
    pub part: PartId,
    pub pose: RigidTransform,
    pub shape: Shape,
}

impl Primitive {
    pub fn cuboid(part: PartId, center: Point, half: [f64; 3]) -> Self {
        Self {
            part,
            pose: RigidTransform::from_translation(center.coords),
            shape: Shape::Cuboid { half },
        }
    }

    pub fn cylinder(part: PartId, center: Point, radius: f64, half_height: f64) -> Self {
        Self {
            part,
            pose: RigidTransform::from_translation(center.coords),
            shape: Shape::Cylinder {
                radius,
                half_height,
            },
        }
    }

    /// Nearest ray parameter `t > 0` at which `origin + t * dir` enters the
    /// primitive moved by `motion`.
    pub fn intersect(&self, motion: &RigidTransform, origin: &Point, dir: &Vector) -> Option<f64> {
        self.intersect_local(&self.world_to_local(motion), origin, dir)
    }

    /// World-to-local transform of the primitive moved by `motion`.
    pub fn world_to_local(&self, motion: &RigidTransform) -> RigidTransform {
        motion.compose(&self.pose).inverse()
    }

    /// [`Primitive::intersect`] with a precomputed [`Primitive::world_to_local`].
    pub fn intersect_local(
        &self,
        to_local: &RigidTransform,
        origin: &Point,
        dir: &Vector,
    ) -> Option<f64> {
        let o = to_local.apply(origin);
        let d = to_local.apply_vector(dir);
        match self.shape {
            Shape::Cuboid { half } => intersect_cuboid(&o, &d, &half),
            Shape::Cylinder {
                radius,
                half_height,
            } => intersect_cylinder(&o, &d, radius, half_height),
        }
    }

    /// Points on the surface at roughly `spacing` apart, at the rest pose.
    pub fn surface_points(&self, spacing: f64) -> Vec<Point> {
        let local = match self.shape {
            Shape::Cuboid { half } => cuboid_surface(&half, spacing),
            Shape::Cylinder {
                radius,
                half_height,
            } => cylinder_surface(radius, half_height, spacing),
        };
        local.iter().map(|p| self.pose.apply(p)).collect()
    }
}

fn intersect_cuboid(o: &Point, d: &Vector, half: &[f64; 3]) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for a in 0..3 {
        if d[a] == 0.0 {
            if o[a].abs() > half[a] {
                return None;
            }
            continue;
        }
        let t1 = (-half[a] - o[a]) / d[a];
        let t2 = (half[a] - o[a]) / d[a];
        t_near = t_near.max(t1.min(t2));
        t_far = t_far.min(t1.max(t2));
    }
    (t_near <= t_far && t_near > MIN_HIT).then_some(t_near)
}

fn intersect_cylinder(o: &Point, d: &Vector, radius: f64, half_height: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t > MIN_HIT && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };
    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = o.x * d.x + o.y * d.y;
        let c = o.x * o.x + o.y * o.y - radius * radius;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let t = (-b - libm::sqrt(disc)) / a;
            if (o.z + t * d.z).abs() <= half_height {
                consider(t);
            }
        }
    }
    if d.z != 0.0 {
        for cap in [-half_height, half_height] {
            let t = (cap - o.z) / d.z;
            let x = o.x + t * d.x;
            let y = o.y + t * d.y;
            if x * x + y * y <= radius * radius {
                consider(t);
            }
        }
    }
    best
}

fn steps(extent: f64, spacing: f64) -> usize {
    (libm::ceil(extent / spacing) as usize).max(1)
}

/// Cell-centered grid on `[-a, a] x [-b, b]`.
fn grid(a: f64, b: f64, spacing: f64) -> impl Iterator<Item = (f64, f64)> {
    let na = steps(2.0 * a, spacing);
    let nb = steps(2.0 * b, spacing);
    (0..na).flat_map(move |i| {
        (0..nb).map(move |j| {
            (
                -a + (i as f64 + 0.5) * 2.0 * a / na as f64,
                -b + (j as f64 + 0.5) * 2.0 * b / nb as f64,
            )
        })
    })
}

fn cuboid_surface(half: &[f64; 3], spacing: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [-1.0, 1.0] {
            for (a, b) in grid(half[u], half[v], spacing) {
                let mut p = [0.0; 3];
                p[axis] = sign * half[axis];
                p[u] = a;
                p[v] = b;
                out.push(Point::new(p[0], p[1], p[2]));
            }
        }
    }
    out
}

fn cylinder_surface(radius: f64, half_height: f64, spacing: f64) -> Vec<Point> {
    use core::f64::consts::TAU;
    let mut out = Vec::new();
    let around = steps(TAU * radius, spacing);
    let along = steps(2.0 * half_height, spacing);
    for i in 0..around {
        let theta = (i as f64 + 0.5) * TAU / around as f64;
        for j in 0..along {
            let z = -half_height + (j as f64 + 0.5) * 2.0 * half_height / along as f64;
            out.push(Point::new(
                radius * libm::cos(theta),
                radius * libm::sin(theta),
                z,
            ));
        }
    }
    for z in [-half_height, half_height] {
        for (x, y) in grid(radius, radius, spacing) {
            if x * x + y * y <= radius * radius {
                out.push(Point::new(x, y, z));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_box_front_face() {
        let b = Primitive::cuboid(PartId(1), Point::new(0.0, 1.0, 0.0), [0.5, 0.1, 0.5]);
        let t = b
            .intersect(
                &RigidTransform::identity(),
                &Point::origin(),
                &Vector::new(0.0, 1.0, 0.0),
            )
            .unwrap();
        assert!((t - 0.9).abs() < 1e-15);
        assert!(b
            .intersect(
                &RigidTransform::identity(),
                &Point::origin(),
                &Vector::new(0.0, -1.0, 0.0)
            )
            .is_none());
    }

    #[test]
    fn ray_misses_beside_box() {
        let b = Primitive::cuboid(PartId(1), Point::new(0.0, 1.0, 0.0), [0.5, 0.1, 0.5]);
        let o = Point::new(0.6, 0.0, 0.0);
        assert!(b
            .intersect(&RigidTransform::identity(), &o, &Vector::y())
            .is_none());
    }

    #[test]
    fn cylinder_side_and_cap() {
        let c = Primitive::cylinder(PartId(1), Point::origin(), 0.5, 1.0);
        let side = c
            .intersect(
                &RigidTransform::identity(),
                &Point::new(-3.0, 0.0, 0.0),
                &Vector::x(),
            )
            .unwrap();
        assert!((side - 2.5).abs() < 1e-15);
        let cap = c
            .intersect(
                &RigidTransform::identity(),
                &Point::new(0.1, 0.0, 3.0),
                &-Vector::z(),
            )
            .unwrap();
        assert!((cap - 2.0).abs() < 1e-15);
    }

    #[test]
    fn motion_moves_the_hit() {
        let b = Primitive::cuboid(PartId(1), Point::new(0.0, 1.0, 0.0), [0.5, 0.1, 0.5]);
        let shift = RigidTransform::from_translation(Vector::new(0.0, 0.5, 0.0));
        let t = b.intersect(&shift, &Point::origin(), &Vector::y()).unwrap();
        assert!((t - 1.4).abs() < 1e-12);
    }

    #[test]
    fn surface_points_lie_on_surface() {
        let b = Primitive::cuboid(PartId(1), Point::new(1.0, 2.0, 3.0), [0.1, 0.2, 0.05]);
        let pts = b.surface_points(0.01);
        assert!(!pts.is_empty());
        for p in &pts {
            let l = p - Point::new(1.0, 2.0, 3.0);
            let on = (l.x.abs() - 0.1).abs() < 1e-12
                || (l.y.abs() - 0.2).abs() < 1e-12
                || (l.z.abs() - 0.05).abs() < 1e-12;
            assert!(on);
        }
        let c = Primitive::cylinder(PartId(1), Point::origin(), 0.02, 0.1);
        for p in c.surface_points(0.005) {
            let r = libm::sqrt(p.x * p.x + p.y * p.y);
            assert!((r - 0.02).abs() < 1e-12 || (p.z.abs() - 0.1).abs() < 1e-12);
        }
    }
}
