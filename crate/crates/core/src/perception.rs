//! Everything a sampler needs from one RGB-D frame and its stochastic
//! segmentation: the deployed label map, the uncertainty map, and the lifted
//! per-part and whole-scene point sets.

use crate::error::Result;
use crate::geometry::CameraModel;
use crate::lift::{argmax_mean, lift_scene, lift_to_world, PartPointCloud, ScenePoints};
use crate::raster::{
    DepthMap, MeanProbabilities, ProbabilityStack, SegmentationMap, UncertaintyMap,
};
use crate::uncertainty::predictive_entropy;

#[derive(Debug, Clone)]
pub struct Observation {
    pub segmentation: SegmentationMap,
    pub uncertainty: UncertaintyMap,
    pub mean: MeanProbabilities,
    /// Per-part candidates, uncertainty attached.
    pub cloud: PartPointCloud,
    pub scene: ScenePoints,
    /// Height of the supporting table plane, if known.
    pub table_z: Option<f64>,
}

impl Observation {
    /// Uses the argmax of the mean probability map as the segmentation.
    pub fn perceive(depth: &DepthMap, stack: &ProbabilityStack, cam: &CameraModel) -> Result<Self> {
        let mean = stack.mean();
        let seg = argmax_mean(&mean);
        Self::build(depth, seg, stack, mean, cam)
    }

    /// Uses a supplied segmentation (e.g. ground truth) instead of the argmax.
    pub fn with_segmentation(
        depth: &DepthMap,
        seg: SegmentationMap,
        stack: &ProbabilityStack,
        cam: &CameraModel,
    ) -> Result<Self> {
        Self::build(depth, seg, stack, stack.mean(), cam)
    }

    fn build(
        depth: &DepthMap,
        segmentation: SegmentationMap,
        stack: &ProbabilityStack,
        mean: MeanProbabilities,
        cam: &CameraModel,
    ) -> Result<Self> {
        depth.dims().ensure_same(stack.dims())?;
        let uncertainty = predictive_entropy(stack)?;
        let mut cloud = lift_to_world(depth, &segmentation, cam)?;
        cloud.attach_uncertainty(&uncertainty)?;
        let scene = lift_scene(depth, &segmentation, cam)?;
        Ok(Self {
            segmentation,
            uncertainty,
            mean,
            cloud,
            scene,
            table_z: None,
        })
    }

    pub fn with_table(mut self, table_z: Option<f64>) -> Self {
        self.table_z = table_z;
        self
    }
}
