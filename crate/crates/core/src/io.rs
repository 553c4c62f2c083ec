//! Binary tensor container and PNG export.
//!
//! A tensor is stored as
//!
//! ```text
//! "IRR4" | version: u16 | ndim: u8 | dims: ndim × u32 | data: f64 …
//! ```
//!
//! with every integer and float little-endian and the payload row-major.
//! A bundle is a `u32` record count followed by, per record, a `u16` name
//! length, the UTF-8 name and one tensor.
//!
//! PNG export maps `v ↦ round(clamp(v, 0, 1) · 255)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::numerics::{FeatureStack, Field2D};

pub const MAGIC: &[u8; 4] = b"IRR4";
pub const VERSION: u16 = 1;

/// Dense row-major tensor of any rank up to 255.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.len() > u8::MAX as usize {
            return Err(Error::Format(format!("rank {} exceeds 255", dims.len())));
        }
        if dims.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::Format("dimension exceeds u32".into()));
        }
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::Format(format!(
                "dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            dims: vec![],
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            dims: vec![data.len()],
            data,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn to_field(&self) -> Result<Field2D> {
        match self.dims[..] {
            [h, w] => Field2D::from_vec(h, w, self.data.clone()),
            _ => Err(Error::Format(format!("expected rank 2, got dims {:?}", self.dims))),
        }
    }

    /// Rank 3 as `C × H × W`; rank 2 is read as a single channel.
    pub fn to_stack(&self) -> Result<FeatureStack> {
        match self.dims[..] {
            [_, _] => Ok(FeatureStack::from_field(self.to_field()?)),
            [c, h, w] => {
                let n = h * w;
                let channels = (0..c)
                    .map(|i| Field2D::from_vec(h, w, self.data[i * n..(i + 1) * n].to_vec()))
                    .collect::<Result<Vec<_>>>()?;
                FeatureStack::new(channels)
            }
            _ => Err(Error::Format(format!("expected rank 2 or 3, got dims {:?}", self.dims))),
        }
    }
}

impl From<&Field2D> for Tensor {
    fn from(f: &Field2D) -> Self {
        Tensor {
            dims: vec![f.height(), f.width()],
            data: f.data().to_vec(),
        }
    }
}

impl From<&FeatureStack> for Tensor {
    fn from(s: &FeatureStack) -> Self {
        let (h, w) = s.dims();
        Tensor {
            dims: vec![s.num_channels(), h, w],
            data: s.iter().flat_map(|c| c.data().iter().copied()).collect(),
        }
    }
}

pub fn write_tensor(mut w: impl Write, t: &Tensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[t.dims.len() as u8])?;
    for &d in &t.dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for v in &t.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated tensor data: {e}")))?;
    Ok(buf)
}

pub fn read_tensor(mut r: impl Read) -> Result<Tensor> {
    let magic: [u8; 4] = read_exact(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = u16::from_le_bytes(read_exact(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let [ndim] = read_exact::<1>(&mut r)?;
    let dims = (0..ndim)
        .map(|_| Ok(u32::from_le_bytes(read_exact(&mut r)?) as usize))
        .collect::<Result<Vec<_>>>()?;
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("element count overflows".into()))?;
    let mut data = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        data.push(f64::from_le_bytes(read_exact(&mut r)?));
    }
    Tensor::new(dims, data)
}

pub fn write_bundle(mut w: impl Write, records: &[(String, Tensor)]) -> Result<()> {
    let count = u32::try_from(records.len()).map_err(|_| Error::Format("too many records".into()))?;
    w.write_all(&count.to_le_bytes())?;
    for (name, t) in records {
        let len = u16::try_from(name.len()).map_err(|_| Error::Format(format!("name too long: {name}")))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        write_tensor(&mut w, t)?;
    }
    Ok(())
}

pub fn read_bundle(mut r: impl Read) -> Result<Vec<(String, Tensor)>> {
    let count = u32::from_le_bytes(read_exact(&mut r)?);
    let mut records = Vec::new();
    for _ in 0..count {
        let len = u16::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|e| Error::Format(format!("truncated record name: {e}")))?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("record name is not UTF-8".into()))?;
        records.push((name, read_tensor(&mut r)?));
    }
    Ok(records)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    read_tensor(BufReader::new(File::open(path)?))
}

pub fn save_bundle(path: impl AsRef<Path>, records: &[(String, Tensor)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_bundle(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<Vec<(String, Tensor)>> {
    read_bundle(BufReader::new(File::open(path)?))
}

/// `[0, 1] → [0, 255]` with clamping and round-half-away-from-zero.
pub fn to_u8(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn to_gray_image(f: &Field2D) -> GrayImage {
    GrayImage::from_fn(f.width() as u32, f.height() as u32, |x, y| {
        Luma([to_u8(f.get(y as usize, x as usize))])
    })
}

pub fn save_png(path: impl AsRef<Path>, f: &Field2D) -> Result<()> {
    to_gray_image(f).save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Places equally tall fields side by side with `gap` columns of `fill`.
pub fn hconcat(fields: &[&Field2D], gap: usize, fill: f64) -> Result<Field2D> {
    let h = fields
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?
        .height();
    if fields.iter().any(|f| f.height() != h) {
        return Err(Error::DimensionMismatch("hconcat needs equal heights".into()));
    }
    let total = fields.iter().map(|f| f.width()).sum::<usize>() + gap * (fields.len() - 1);
    let mut out = Field2D::filled(h, total, fill);
    let mut x0 = 0;
    for f in fields {
        for r in 0..h {
            for c in 0..f.width() {
                out.set(r, x0 + c, f.get(r, c));
            }
        }
        x0 += f.width() + gap;
    }
    Ok(out)
}

/// Stacks equally wide fields vertically with `gap` rows of `fill`.
pub fn vconcat(fields: &[&Field2D], gap: usize, fill: f64) -> Result<Field2D> {
    let w = fields
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?
        .width();
    if fields.iter().any(|f| f.width() != w) {
        return Err(Error::DimensionMismatch("vconcat needs equal widths".into()));
    }
    let total = fields.iter().map(|f| f.height()).sum::<usize>() + gap * (fields.len() - 1);
    let mut out = Field2D::filled(total, w, fill);
    let mut y0 = 0;
    for f in fields {
        for r in 0..f.height() {
            for c in 0..w {
                out.set(y0 + r, c, f.get(r, c));
            }
        }
        y0 += f.height() + gap;
    }
    Ok(out)
}
