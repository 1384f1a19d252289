//! Binary clip and feature-cube files.
//!
//! Clip layout (little endian):
//!
//! | offset | field |
//! |-------:|-------|
//! | 0  | magic `BSAR` |
//! | 4  | u32 version (1) |
//! | 8  | u32 rows |
//! | 12 | u32 cols |
//! | 16 | f64 pixel spacing (m) |
//! | 24 | f64 mean bistatic angle (deg) |
//! | 32 | f64 receiver elevation (deg) |
//! | 40 | f64 receiver azimuth center (deg) |
//! | 48 | u8 channel code (0..=3 = HH, HV, VH, VV) |
//! | 49 | u8 class id |
//! | 50 | 6 reserved zero bytes |
//! | 56 | rows·cols interleaved f32 (re, im), row-major |
//!
//! Cube files insert a u32 parameter count `P` at offset 16, shifting the
//! floating header by four bytes; the channel byte (offset 52) is 255 and the
//! first two reserved bytes hold a u16 bitmask of the stored parameters in
//! canonical order. The payload is rows·cols·P f32 values ordered
//! (row, col, parameter).

use std::path::Path;

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::echo::Channel;
use crate::error::{Error, Result};
use crate::imaging::{ClipMeta, ImageClip};
use crate::polarimetry::{FeatureCube, Parameter};

pub const MAGIC: &[u8; 4] = b"BSAR";
pub const VERSION: u32 = 1;
pub const CLIP_HEADER_LEN: usize = 56;
pub const CUBE_HEADER_LEN: usize = 60;
pub const CUBE_CHANNEL_CODE: u8 = 255;

/// Contents of a decoded file. Class labels are set to the decimal class id;
/// callers map ids to names through the manifest.
#[derive(Debug, Clone, PartialEq)]
pub enum ClipFile {
    Clip { class_id: u8, clip: ImageClip },
    Cube {
        class_id: u8,
        pixel_spacing: f64,
        cube: FeatureCube,
    },
}

impl ClipFile {
    pub fn class_id(&self) -> u8 {
        match self {
            ClipFile::Clip { class_id, .. } | ClipFile::Cube { class_id, .. } => *class_id,
        }
    }
}

pub fn encode_clip(clip: &ImageClip, class_id: u8) -> Result<Vec<u8>> {
    let channel = clip
        .meta
        .channel
        .ok_or_else(|| Error::Validation("clip files need a channel tag".into()))?;
    let (rows, cols) = clip.pixels.dim();
    let mut out = Vec::with_capacity(CLIP_HEADER_LEN + rows * cols * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    put_floats(&mut out, clip.pixel_spacing, &clip.meta);
    out.push(channel.code());
    out.push(class_id);
    out.extend_from_slice(&[0u8; 6]);
    for z in clip.pixels.iter() {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn encode_cube(cube: &FeatureCube, pixel_spacing: f64, class_id: u8) -> Vec<u8> {
    let (rows, cols, p) = cube.values.dim();
    let mut out = Vec::with_capacity(CUBE_HEADER_LEN + rows * cols * p * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out.extend_from_slice(&(p as u32).to_le_bytes());
    put_floats(&mut out, pixel_spacing, &cube.meta);
    out.push(CUBE_CHANNEL_CODE);
    out.push(class_id);
    let mask = cube.selected.iter().fold(0u16, |m, q| m | (1 << q.index()));
    out.extend_from_slice(&mask.to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    for v in cube.values.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

fn put_floats(out: &mut Vec<u8>, spacing: f64, meta: &ClipMeta) {
    for v in [
        spacing,
        meta.mean_bistatic_angle,
        meta.rx_elevation,
        meta.rx_azimuth_center,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() < self.pos + n {
            return Err(Error::ParseAt {
                offset: self.bytes.len(),
                message: format!("file truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn fail(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::ParseAt {
            offset,
            message: message.into(),
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<ClipFile> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(cur.fail(0, "bad magic, expected BSAR"));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(cur.fail(4, format!("unsupported version {version}")));
    }
    let rows = cur.u32("rows")? as usize;
    let cols = cur.u32("cols")? as usize;
    if rows != cols {
        return Err(cur.fail(8, format!("clip must be square, got {rows}x{cols}")));
    }
    let plane = rows * cols;
    let is_cube = bytes.len() >= CUBE_HEADER_LEN
        && bytes[52] == CUBE_CHANNEL_CODE
        && bytes.len() != CLIP_HEADER_LEN + plane * 8;
    let planes = if is_cube { cur.u32("parameter count")? as usize } else { 0 };
    let spacing = cur.f64("pixel spacing")?;
    let mut meta = ClipMeta::new(String::new(), None);
    meta.mean_bistatic_angle = cur.f64("mean bistatic angle")?;
    meta.rx_elevation = cur.f64("receiver elevation")?;
    meta.rx_azimuth_center = cur.f64("receiver azimuth")?;
    let channel_at = cur.pos;
    let code = cur.u8("channel")?;
    let class_id = cur.u8("class id")?;
    meta.class_label = class_id.to_string();
    let reserved_at = cur.pos;
    let reserved = cur.take(6, "reserved bytes")?;

    if is_cube {
        let mask = u16::from_le_bytes([reserved[0], reserved[1]]);
        if reserved[2..].iter().any(|&b| b != 0) {
            return Err(cur.fail(reserved_at + 2, "reserved bytes must be zero"));
        }
        let selected: Vec<Parameter> = (0..16)
            .filter(|i| mask & (1 << i) != 0)
            .filter_map(Parameter::from_index)
            .collect();
        if selected.len() != planes {
            return Err(cur.fail(
                reserved_at,
                format!("parameter mask lists {} parameters, header says {planes}", selected.len()),
            ));
        }
        let mut values = Vec::with_capacity(plane * planes);
        for _ in 0..plane * planes {
            values.push(cur.f32("cube values")? as f64);
        }
        let values = Array3::from_shape_vec((rows, cols, planes), values)
            .map_err(|e| cur.fail(CUBE_HEADER_LEN, e.to_string()))?;
        let cube = FeatureCube::new(values, meta, selected)?;
        finish(&cur)?;
        return Ok(ClipFile::Cube {
            class_id,
            pixel_spacing: spacing,
            cube,
        });
    }

    let channel = Channel::from_code(code)
        .ok_or_else(|| cur.fail(channel_at, format!("unknown channel code {code}")))?;
    meta.channel = Some(channel);
    if reserved.iter().any(|&b| b != 0) {
        return Err(cur.fail(reserved_at, "reserved bytes must be zero"));
    }
    let mut pixels = Vec::with_capacity(plane);
    for _ in 0..plane {
        let re = cur.f32("pixel data")? as f64;
        let im = cur.f32("pixel data")? as f64;
        pixels.push(Complex64::new(re, im));
    }
    finish(&cur)?;
    let pixels = Array2::from_shape_vec((rows, cols), pixels)
        .map_err(|e| cur.fail(CLIP_HEADER_LEN, e.to_string()))?;
    let clip = ImageClip::new(pixels, spacing, meta)?;
    Ok(ClipFile::Clip { class_id, clip })
}

fn finish(cur: &Cursor) -> Result<()> {
    if cur.pos != cur.bytes.len() {
        return Err(cur.fail(cur.pos, format!("{} trailing bytes", cur.bytes.len() - cur.pos)));
    }
    Ok(())
}

pub fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    std::fs::write(path.as_ref(), bytes).map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<ClipFile> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    decode(&bytes)
}
