//! Pixel-to-world lifting and the deployed segmentation map.

use alloc::vec::Vec;

use crate::error::Result;
use crate::geometry::{CameraModel, Point};
use crate::raster::{
    DepthMap, Dims, MeanProbabilities, PartId, PerPart, ProbabilityStack, SegmentationMap,
    UncertaintyMap,
};

/// World-frame points of one part, each tagged with its source pixel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartPoints {
    pub points: Vec<Point>,
    pub uncertainty: Vec<f64>,
    pub pixels: Vec<u32>,
}

impl PartPoints {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Lifted points grouped by part label. Background pixels are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PartPointCloud {
    dims: Dims,
    parts: PerPart<PartPoints>,
}

impl PartPointCloud {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.parts.num_classes()
    }

    pub fn part(&self, part: PartId) -> Option<&PartPoints> {
        self.parts.get(part)
    }

    pub fn parts(&self) -> &PerPart<PartPoints> {
        &self.parts
    }

    pub fn total_points(&self) -> usize {
        self.parts.iter().map(|(_, p)| p.len()).sum()
    }

    /// Fills each point's uncertainty from its source pixel.
    pub fn attach_uncertainty(&mut self, unc: &UncertaintyMap) -> Result<()> {
        self.dims.ensure_same(unc.dims())?;
        for (_, part) in self.parts.iter_mut() {
            part.uncertainty = part.pixels.iter().map(|&px| unc.get(px as usize)).collect();
        }
        Ok(())
    }
}

/// Every valid pixel lifted, background included; input for whole-scene samplers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenePoints {
    pub points: Vec<Point>,
    pub labels: Vec<PartId>,
    pub pixels: Vec<u32>,
}

fn for_each_valid(
    depth: &DepthMap,
    seg: &SegmentationMap,
    cam: &CameraModel,
    mut f: impl FnMut(usize, PartId, Point),
) {
    let dims = depth.dims();
    for pixel in 0..dims.len() {
        if !depth.is_valid(pixel) {
            continue;
        }
        let (u, v) = dims.coords(pixel);
        f(
            pixel,
            seg.get(pixel),
            cam.lift(u as f64, v as f64, depth.get(pixel)),
        );
    }
}

/// Lifts every valid, non-background pixel to the world frame and groups the
/// points by label. Uncertainty is zero until [`PartPointCloud::attach_uncertainty`].
pub fn lift_to_world(
    depth: &DepthMap,
    seg: &SegmentationMap,
    cam: &CameraModel,
) -> Result<PartPointCloud> {
    depth.dims().ensure_same(seg.dims())?;
    cam.validate()?;
    let mut parts: PerPart<PartPoints> = PerPart::new(seg.num_classes());
    for_each_valid(depth, seg, cam, |pixel, label, p| {
        if let Some(part) = parts.get_mut(label) {
            part.points.push(p);
            part.uncertainty.push(0.0);
            part.pixels.push(pixel as u32);
        }
    });
    Ok(PartPointCloud {
        dims: depth.dims(),
        parts,
    })
}

/// Lifts every valid pixel, keeping its label.
pub fn lift_scene(
    depth: &DepthMap,
    seg: &SegmentationMap,
    cam: &CameraModel,
) -> Result<ScenePoints> {
    depth.dims().ensure_same(seg.dims())?;
    cam.validate()?;
    let mut out = ScenePoints::default();
    for_each_valid(depth, seg, cam, |pixel, label, p| {
        out.points.push(p);
        out.labels.push(label);
        out.pixels.push(pixel as u32);
    });
    Ok(out)
}

/// Per-pixel argmax of the mean probability map; ties go to the lowest class.
pub fn argmax_segmentation(stack: &ProbabilityStack) -> SegmentationMap {
    argmax_mean(&stack.mean())
}

pub fn argmax_mean(mean: &MeanProbabilities) -> SegmentationMap {
    let dims = mean.dims();
    let labels = (0..dims.len())
        .map(|pixel| {
            let mut best = 0;
            let mut best_p = mean.get(0, pixel);
            for c in 1..mean.classes() {
                let p = mean.get(c, pixel);
                if p > best_p {
                    best = c;
                    best_p = p;
                }
            }
            PartId(best as u8)
        })
        .collect();
    SegmentationMap::new(dims, mean.classes(), labels)
        .expect("argmax labels are within class range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RigidTransform, Vector};
    use alloc::vec;

    fn cam(fx: f64, cx: f64, cy: f64) -> CameraModel {
        CameraModel::new(fx, fx, cx, cy, RigidTransform::identity()).unwrap()
    }

    #[test]
    fn principal_point_ray() {
        let dims = Dims::new(5, 3);
        let mut values = vec![0.0; dims.len()];
        values[1 * 5 + 2] = 2.0;
        let depth = DepthMap::new(dims, values).unwrap();
        let seg = SegmentationMap::new(dims, 2, vec![PartId(1); dims.len()]).unwrap();
        let cloud = lift_to_world(&depth, &seg, &cam(10.0, 2.0, 1.0)).unwrap();
        let part = cloud.part(PartId(1)).unwrap();
        assert_eq!(part.points, vec![Point::new(0.0, 0.0, 2.0)]);
        assert_eq!(part.pixels, vec![7]);
    }

    #[test]
    fn pinhole_arithmetic() {
        let dims = Dims::new(51, 1);
        let mut values = vec![0.0; dims.len()];
        values[50] = 1.0;
        let depth = DepthMap::new(dims, values).unwrap();
        let seg = SegmentationMap::new(dims, 2, vec![PartId(1); dims.len()]).unwrap();
        let cloud = lift_to_world(&depth, &seg, &cam(100.0, 0.0, 0.0)).unwrap();
        assert_eq!(
            cloud.part(PartId(1)).unwrap().points,
            vec![Point::new(0.5, 0.0, 1.0)]
        );
    }

    #[test]
    fn zero_depth_and_background_dropped() {
        let dims = Dims::new(3, 1);
        let depth = DepthMap::new(dims, vec![0.0, 1.0, 1.0]).unwrap();
        let seg = SegmentationMap::new(dims, 3, vec![PartId(1), PartId(0), PartId(2)]).unwrap();
        let cloud = lift_to_world(&depth, &seg, &cam(1.0, 0.0, 0.0)).unwrap();
        assert!(cloud.part(PartId(1)).unwrap().is_empty());
        assert_eq!(cloud.part(PartId(2)).unwrap().pixels, vec![2]);
        assert_eq!(cloud.total_points(), 1);
        let scene = lift_scene(&depth, &seg, &cam(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(scene.labels, vec![PartId(0), PartId(2)]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let depth = DepthMap::invalid(Dims::new(3, 1));
        let seg = SegmentationMap::background(Dims::new(1, 3), 2);
        assert!(lift_to_world(&depth, &seg, &cam(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn argmax_examples() {
        let dims = Dims::new(1, 1);
        let one_hot =
            ProbabilityStack::from_pixel_vectors(dims, 3, &[vec![vec![0.0, 0.0, 1.0]]]).unwrap();
        assert_eq!(argmax_segmentation(&one_hot).get(0), PartId(2));
        let mixed = ProbabilityStack::from_pixel_vectors(
            dims,
            3,
            &[vec![vec![0.0, 0.6, 0.4]], vec![vec![0.0, 0.2, 0.8]]],
        )
        .unwrap();
        assert_eq!(argmax_segmentation(&mixed).get(0), PartId(2));
        let tie =
            ProbabilityStack::from_pixel_vectors(dims, 3, &[vec![vec![0.0, 0.5, 0.5]]]).unwrap();
        assert_eq!(argmax_segmentation(&tie).get(0), PartId(1));
    }

    #[test]
    fn extrinsic_translation_applies() {
        let dims = Dims::new(1, 1);
        let depth = DepthMap::new(dims, vec![1.0]).unwrap();
        let seg = SegmentationMap::new(dims, 2, vec![PartId(1)]).unwrap();
        let c = CameraModel::new(
            1.0,
            1.0,
            0.0,
            0.0,
            RigidTransform::from_translation(Vector::new(1.0, 2.0, 3.0)),
        )
        .unwrap();
        let cloud = lift_to_world(&depth, &seg, &c).unwrap();
        assert_eq!(
            cloud.part(PartId(1)).unwrap().points[0],
            Point::new(1.0, 2.0, 4.0)
        );
    }
}
