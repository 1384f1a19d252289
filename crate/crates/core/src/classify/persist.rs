//! Versioned binary model container.
//!
//! All integers and floats are little endian. Layout:
//!
//! ```text
//! "BATM"  u32 version (1)  u8 kind (0 PCANN, 1 CGBC, 2 md-PCANN)
//! str config hash
//! strs class names
//! kind-specific body
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8; `strs` is a u32 count of
//! `str`. An `array` is a u32 rank, that many u32 dimensions, then the f64
//! values in row-major order. Index lists are a u32 count of u32 values.
//!
//! * PCANN: u8 pixel mode (0 magnitude, 1 complex), index list of column
//!   classes, arrays mean `[D]`, scale `[D]`, v `[D, n]`, reduced_db `[n, M]`,
//!   eigvals `[K]`.
//! * CGBC: f64 bin width, f64 sigma floor, u32 clip size, u32 template count,
//!   then per template u32 class, i64 bin, u32 clip count, arrays mu `[D]` and
//!   sigma `[D]`.
//! * md-PCANN: u16 parameter bitmask, index list of cube classes, arrays
//!   mean `[D, P]`, scale `[P]`, v_pix `[D, n_pix]`, v_par `[P, n_par]`, u32
//!   cube count, then one `[n_pix, n_par]` array per cube.

use std::path::Path;

use nalgebra::DMatrix;

use super::{CgbcModel, MdPcannModel, PcannModel, PixelMode, Preprocessing, Template};
use crate::error::{Error, Result};
use crate::polarimetry::Parameter;

pub const MAGIC: &[u8; 4] = b"BATM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Pcann(PcannModel),
    Cgbc(CgbcModel),
    MdPcann(MdPcannModel),
}

impl Model {
    pub fn kind_code(&self) -> u8 {
        match self {
            Model::Pcann(_) => 0,
            Model::Cgbc(_) => 1,
            Model::MdPcann(_) => 2,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Pcann(_) => "pcann",
            Model::Cgbc(_) => "cgbc",
            Model::MdPcann(_) => "md-pcann",
        }
    }

    pub fn classes(&self) -> &[String] {
        match self {
            Model::Pcann(m) => &m.classes,
            Model::Cgbc(m) => &m.classes,
            Model::MdPcann(m) => &m.classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub config_hash: String,
    pub model: Model,
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn strs(&mut self, v: &[String]) {
        self.u32(v.len());
        v.iter().for_each(|s| self.str(s));
    }
    fn indices(&mut self, v: &[usize]) {
        self.u32(v.len());
        v.iter().for_each(|&i| self.u32(i));
    }
    fn vector(&mut self, v: &[f64]) {
        self.u32(1);
        self.u32(v.len());
        v.iter().for_each(|&x| self.f64(x));
    }
    fn matrix(&mut self, m: &DMatrix<f64>) {
        self.u32(2);
        self.u32(m.nrows());
        self.u32(m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)]);
            }
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::ParseAt {
            offset: self.pos,
            message: message.into(),
        }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::ParseAt {
                offset: self.bytes.len(),
                message: "model file truncated".into(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()?;
        let at = self.pos;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::ParseAt {
            offset: at,
            message: "invalid UTF-8".into(),
        })
    }
    fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.u32()?;
        (0..n).map(|_| self.str()).collect()
    }
    fn indices(&mut self) -> Result<Vec<usize>> {
        let n = self.u32()?;
        (0..n).map(|_| self.u32()).collect()
    }
    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        if (self.bytes.len() - self.pos) / 8 < n {
            return Err(Error::ParseAt {
                offset: self.bytes.len(),
                message: "model file truncated".into(),
            });
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn vector(&mut self) -> Result<Vec<f64>> {
        if self.u32()? != 1 {
            return Err(self.fail("expected a rank-1 array"));
        }
        let n = self.u32()?;
        self.floats(n)
    }
    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        if self.u32()? != 2 {
            return Err(self.fail("expected a rank-2 array"));
        }
        let r = self.u32()?;
        let c = self.u32()?;
        let v = self.floats(r * c)?;
        Ok(DMatrix::from_row_slice(r, c, &v))
    }
}

pub fn encode_model(file: &ModelFile) -> Vec<u8> {
    let mut w = Writer::default();
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION as usize);
    w.u8(file.model.kind_code());
    w.str(&file.config_hash);
    w.strs(file.model.classes());
    match &file.model {
        Model::Pcann(m) => {
            w.u8(match m.preprocessing.mode {
                PixelMode::Magnitude => 0,
                PixelMode::Complex => 1,
            });
            w.indices(&m.labels);
            w.vector(&m.preprocessing.mean);
            w.vector(&m.preprocessing.scale);
            w.matrix(&m.v);
            w.matrix(&m.reduced_db);
            w.vector(&m.eigvals);
        }
        Model::Cgbc(m) => {
            w.f64(m.bin_width);
            w.f64(m.sigma_floor);
            w.u32(m.size);
            w.u32(m.templates.len());
            for t in &m.templates {
                w.u32(t.class_index);
                w.i64(t.bin);
                w.u32(t.count);
                w.vector(&t.mu);
                w.vector(&t.sigma);
            }
        }
        Model::MdPcann(m) => {
            w.u16(m.selected.iter().fold(0u16, |acc, q| acc | (1 << q.index())));
            w.indices(&m.labels);
            w.matrix(&m.mean);
            w.vector(&m.scale);
            w.matrix(&m.v_pix);
            w.matrix(&m.v_par);
            w.u32(m.reduced_db.len());
            m.reduced_db.iter().for_each(|z| w.matrix(z));
        }
    }
    w.0
}

fn check_classes(r: &Reader, labels: &[usize], classes: &[String]) -> Result<()> {
    if labels.iter().any(|&l| l >= classes.len()) {
        return Err(r.fail("class index out of range"));
    }
    Ok(())
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelFile> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::ParseAt {
            offset: 0,
            message: "bad magic, expected BATM".into(),
        });
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::ParseAt {
            offset: 4,
            message: format!("unsupported model version {version}"),
        });
    }
    let kind = r.u8()?;
    let config_hash = r.str()?;
    let classes = r.strs()?;
    let model = match kind {
        0 => {
            let mode = match r.u8()? {
                0 => PixelMode::Magnitude,
                1 => PixelMode::Complex,
                other => return Err(r.fail(format!("unknown pixel mode {other}"))),
            };
            let labels = r.indices()?;
            check_classes(&r, &labels, &classes)?;
            let mean = r.vector()?;
            let scale = r.vector()?;
            let v = r.matrix()?;
            let reduced_db = r.matrix()?;
            let eigvals = r.vector()?;
            if v.nrows() != mean.len() || scale.len() != mean.len() || reduced_db.nrows() != v.ncols() || reduced_db.ncols() != labels.len() {
                return Err(r.fail("inconsistent PCANN dimensions"));
            }
            Model::Pcann(PcannModel {
                v,
                reduced_db,
                classes,
                labels,
                preprocessing: Preprocessing { mode, mean, scale },
                eigvals,
            })
        }
        1 => {
            let bin_width = r.f64()?;
            let sigma_floor = r.f64()?;
            let size = r.u32()?;
            let count = r.u32()?;
            let mut templates = Vec::new();
            for _ in 0..count {
                let class_index = r.u32()?;
                let bin = r.i64()?;
                let clips = r.u32()?;
                let mu = r.vector()?;
                let sigma = r.vector()?;
                if class_index >= classes.len() || mu.len() != size * size || sigma.len() != mu.len() {
                    return Err(r.fail("inconsistent CGBC template"));
                }
                templates.push(Template {
                    class_index,
                    bin,
                    count: clips,
                    mu,
                    sigma,
                });
            }
            Model::Cgbc(CgbcModel {
                classes,
                templates,
                bin_width,
                sigma_floor,
                size,
            })
        }
        2 => {
            let mask = r.u16()?;
            let selected: Vec<Parameter> = (0..16).filter(|i| mask & (1 << i) != 0).filter_map(Parameter::from_index).collect();
            let labels = r.indices()?;
            check_classes(&r, &labels, &classes)?;
            let mean = r.matrix()?;
            let scale = r.vector()?;
            let v_pix = r.matrix()?;
            let v_par = r.matrix()?;
            let count = r.u32()?;
            let reduced_db = (0..count).map(|_| r.matrix()).collect::<Result<Vec<_>>>()?;
            if mean.ncols() != selected.len() || scale.len() != selected.len() || v_pix.nrows() != mean.nrows() || v_par.nrows() != selected.len() || count != labels.len() {
                return Err(r.fail("inconsistent md-PCANN dimensions"));
            }
            Model::MdPcann(MdPcannModel {
                v_pix,
                v_par,
                reduced_db,
                classes,
                labels,
                selected,
                mean,
                scale,
            })
        }
        other => {
            return Err(Error::ParseAt {
                offset: 8,
                message: format!("unknown model kind {other}"),
            })
        }
    };
    if r.pos != bytes.len() {
        return Err(r.fail("trailing bytes after model"));
    }
    Ok(ModelFile { config_hash, model })
}

pub fn save_model(file: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), encode_model(file)).map_err(|e| Error::io(path.as_ref(), e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    decode_model(&bytes)
}
