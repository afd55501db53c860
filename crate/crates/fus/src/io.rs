//! On-disk formats.
//!
//! Rasters are little-endian: an 8-byte header holding `width` and `height`
//! as `u32`, then one value per pixel in row-major order (`f32` for depth
//! and uncertainty, `u8` for labels). Probability stacks extend the header to
//! 16 bytes with `inferences` and `classes` and store `f32` values in
//! inference, class, row, column order. Point clouds are ASCII PLY.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use fus_core::geometry::{CameraModel, Matrix3, RigidTransform, Vector};
use fus_core::raster::{DepthMap, Dims, PartId, PerPart, ProbabilityStack, SegmentationMap};
use fus_core::Point;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(Error::io(path))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(Error::io(path))
}

fn header(words: &[u32]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}

fn parse_header<const N: usize>(path: &Path, bytes: &[u8]) -> Result<[usize; N]> {
    if bytes.len() < 4 * N {
        return Err(Error::format(path, "truncated header"));
    }
    let mut out = [0; N];
    for (i, chunk) in bytes[..4 * N].chunks_exact(4).enumerate() {
        out[i] = u32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as usize;
    }
    Ok(out)
}

fn f32_body(path: &Path, body: &[u8], expected: usize) -> Result<Vec<f64>> {
    if body.len() != 4 * expected {
        return Err(Error::format(
            path,
            format!(
                "expected {} float values, found {} bytes",
                expected,
                body.len()
            ),
        ));
    }
    Ok(body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
        .collect())
}

fn dims_u32(dims: Dims) -> [u32; 2] {
    [dims.width as u32, dims.height as u32]
}

pub fn write_float_raster(path: &Path, dims: Dims, values: &[f64]) -> Result<()> {
    let mut bytes = header(&dims_u32(dims));
    bytes.extend(values.iter().flat_map(|&v| (v as f32).to_le_bytes()));
    write_bytes(path, &bytes)
}

pub fn read_float_raster(path: &Path) -> Result<(Dims, Vec<f64>)> {
    let bytes = read_bytes(path)?;
    let [w, h] = parse_header::<2>(path, &bytes)?;
    let dims = Dims::new(w, h);
    Ok((dims, f32_body(path, &bytes[8..], dims.len())?))
}

pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    write_float_raster(path, depth.dims(), depth.values())
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    let (dims, values) = read_float_raster(path)?;
    DepthMap::new(dims, values).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_labels(path: &Path, seg: &SegmentationMap) -> Result<()> {
    let mut bytes = header(&dims_u32(seg.dims()));
    bytes.extend(seg.labels().iter().map(|p| p.0));
    write_bytes(path, &bytes)
}

pub fn read_labels(path: &Path, num_classes: usize) -> Result<SegmentationMap> {
    let bytes = read_bytes(path)?;
    let [w, h] = parse_header::<2>(path, &bytes)?;
    let dims = Dims::new(w, h);
    if bytes.len() != 8 + dims.len() {
        return Err(Error::format(path, "label count does not match the header"));
    }
    let labels = bytes[8..].iter().map(|&b| PartId(b)).collect();
    SegmentationMap::new(dims, num_classes, labels).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_stack(path: &Path, stack: &ProbabilityStack) -> Result<()> {
    let [w, h] = dims_u32(stack.dims());
    let mut bytes = header(&[w, h, stack.inferences() as u32, stack.classes() as u32]);
    bytes.extend(stack.data().iter().flat_map(|&v| (v as f32).to_le_bytes()));
    write_bytes(path, &bytes)
}

/// Values are stored as `f32`, so each distribution is checked with the
/// stack's usual tolerance after widening.
pub fn read_stack(path: &Path) -> Result<ProbabilityStack> {
    let bytes = read_bytes(path)?;
    let [w, h, k, c] = parse_header::<4>(path, &bytes)?;
    let dims = Dims::new(w, h);
    let data = f32_body(path, &bytes[16..], k * c * dims.len())?;
    ProbabilityStack::new(dims, k, c, data).map_err(|e| Error::format(path, e.to_string()))
}

/// One PLY vertex. `value` is written under the cloud's value name
/// (`weight` for samples, `uncertainty` for lifted points); `pixel` is the
/// source pixel or -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub position: Point,
    pub part: PartId,
    pub value: f64,
    pub pixel: Option<u32>,
}

pub fn write_ply(path: &Path, value_name: &str, vertices: &[Vertex]) -> Result<()> {
    let file = fs::File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(
            w,
            "ply\nformat ascii 1.0\nelement vertex {}",
            vertices.len()
        )?;
        for name in ["x", "y", "z"] {
            writeln!(w, "property double {name}")?;
        }
        writeln!(
            w,
            "property uchar part\nproperty double {value_name}\nproperty int pixel\nend_header"
        )?;
        for v in vertices {
            let pixel = v.pixel.map_or(-1, i64::from);
            let p = v.position;
            writeln!(
                w,
                "{} {} {} {} {} {}",
                p.x, p.y, p.z, v.part.0, v.value, pixel
            )?;
        }
        w.flush()
    };
    body().map_err(Error::io(path))
}

/// Reads an ASCII PLY with at least `x y z part`; a value property and
/// `pixel` are picked up when present.
pub fn read_ply(path: &Path) -> Result<Vec<Vertex>> {
    let file = fs::File::open(path).map_err(Error::io(path))?;
    let mut lines = BufReader::new(file).lines();
    let mut next =
        || -> Result<Option<String>> { lines.next().transpose().map_err(Error::io(path)) };

    if next()?.as_deref() != Some("ply") {
        return Err(Error::format(path, "missing ply magic"));
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    loop {
        let line = next()?.ok_or_else(|| Error::format(path, "header not terminated"))?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(Error::format(path, "only ascii PLY is supported"))
            }
            ["element", "vertex", n] => {
                count = Some(
                    n.parse::<usize>()
                        .map_err(|_| Error::format(path, "bad vertex count"))?,
                )
            }
            ["property", _, name] => props.push(name.to_string()),
            _ => {}
        }
    }
    let count = count.ok_or_else(|| Error::format(path, "no vertex element"))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (Some(x), Some(y), Some(z), Some(part)) = (col("x"), col("y"), col("z"), col("part"))
    else {
        return Err(Error::format(path, "vertices need x, y, z and part"));
    };
    let value = col("weight").or_else(|| col("uncertainty"));
    let pixel = col("pixel");

    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let line = next()?
            .ok_or_else(|| Error::format(path, format!("expected {count} vertices, found {i}")))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != props.len() {
            return Err(Error::format(
                path,
                format!("vertex {i} has {} fields", fields.len()),
            ));
        }
        let num = |c: usize| -> Result<f64> {
            fields[c]
                .parse::<f64>()
                .map_err(|_| Error::format(path, format!("vertex {i}: bad number {:?}", fields[c])))
        };
        let part_id = fields[part]
            .parse::<u8>()
            .map_err(|_| Error::format(path, format!("vertex {i}: bad part")))?;
        let pixel = match pixel {
            Some(c) => {
                let p = num(c)?;
                (p >= 0.0).then_some(p as u32)
            }
            None => None,
        };
        out.push(Vertex {
            position: Point::new(num(x)?, num(y)?, num(z)?),
            part: PartId(part_id),
            value: value.map(num).transpose()?.unwrap_or(0.0),
            pixel,
        });
    }
    Ok(out)
}

/// Row-major rotation and translation, the layout written to camera files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformRecord {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for TransformRecord {
    fn from(t: &RigidTransform) -> Self {
        let r = &t.rotation;
        Self {
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl TransformRecord {
    pub fn to_transform(&self) -> std::result::Result<RigidTransform, fus_core::Error> {
        let r = Matrix3::from_fn(|i, j| self.rotation[i][j]);
        let [x, y, z] = self.translation;
        RigidTransform::new(r, Vector::new(x, y, z))
    }
}

/// Contents of `cam/NNNN.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Camera-to-world.
    pub extrinsic: TransformRecord,
    /// Motion of parts 1..C from their rest pose.
    pub part_transforms: Vec<TransformRecord>,
}

impl CameraRecord {
    pub fn new(dims: Dims, cam: &CameraModel, transforms: &PerPart<RigidTransform>) -> Self {
        Self {
            width: dims.width,
            height: dims.height,
            fx: cam.fx,
            fy: cam.fy,
            cx: cam.cx,
            cy: cam.cy,
            extrinsic: (&cam.extrinsic).into(),
            part_transforms: transforms.iter().map(|(_, t)| t.into()).collect(),
        }
    }

    pub fn camera(&self) -> std::result::Result<CameraModel, fus_core::Error> {
        CameraModel::new(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.extrinsic.to_transform()?,
        )
    }

    pub fn transforms(&self) -> std::result::Result<PerPart<RigidTransform>, fus_core::Error> {
        let parts = self
            .part_transforms
            .iter()
            .map(|t| t.to_transform())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut out = PerPart::new(parts.len() + 1);
        for ((_, slot), t) in out.iter_mut().zip(parts) {
            *slot = t;
        }
        Ok(out)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}
