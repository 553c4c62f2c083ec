//! Grid mathematics shared by every other module: real 2D fields, channel
//! stacks, 2D Fourier transforms, spatial convolution, finite differences,
//! bilinear interpolation and a seeded random source.
//!
//! All arithmetic is `f64`. Operations are pure functions of their inputs.

mod conv;
mod fft;
mod interp;
mod rng;

pub use conv::{convolve2, grad_components, grad_magnitude, mixed_second_derivative, reflect_index};
pub use fft::{dft2, idft2, idft2_complex, signed_frequency, SpectralField};
pub use interp::{bilinear_taps, bilinear_upsample, sample_bilinear};
pub use rng::Rng;

use crate::error::{Error, Result};

/// A real-valued `height × width` grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Field2D {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Field2D {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    /// Builds a field from row-major data.
    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimension(format!(
                "field dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidDimension(format!(
                "expected {} values for {height}x{width}, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Field2D { height, width, data })
    }

    /// Builds a field by evaluating `f(row, col)` at every grid point.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Field2D { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        self.data.iter_mut().for_each(|v| *v = f(*v));
    }

    /// Elementwise combination of two equally sized fields.
    ///
    /// # Panics
    /// Panics on a dimension mismatch; use [`Field2D::ensure_same_dims`] first
    /// where the dimensions come from user input.
    pub fn zip_map(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Field2D {
        assert_eq!(self.dims(), other.dims(), "zip_map dimension mismatch");
        Field2D {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn ensure_same_dims(&self, other: &Field2D, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Field2D) -> Field2D {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field2D) -> Field2D {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Field2D {
        self.map(|v| k * v)
    }

    /// `self += k * other`
    pub fn axpy(&mut self, k: f64, other: &Field2D) {
        assert_eq!(self.dims(), other.dims(), "axpy dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn dot(&self, other: &Field2D) -> f64 {
        assert_eq!(self.dims(), other.dims(), "dot dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Field2D) -> f64 {
        assert_eq!(self.dims(), other.dims(), "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Field2D {
        self.map(|v| v.clamp(lo, hi))
    }
}

/// `C` equally sized fields, one per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    channels: Vec<Field2D>,
}

impl FeatureStack {
    pub fn new(channels: Vec<Field2D>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidDimension("feature stack needs at least one channel".into()))?;
        let dims = first.dims();
        if let Some(bad) = channels.iter().position(|c| c.dims() != dims) {
            return Err(Error::DimensionMismatch(format!(
                "channel {bad} is {:?}, channel 0 is {dims:?}",
                channels[bad].dims()
            )));
        }
        Ok(FeatureStack { channels })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        assert!(channels >= 1, "feature stack needs at least one channel");
        FeatureStack {
            channels: vec![Field2D::zeros(height, width); channels],
        }
    }

    pub fn from_field(field: Field2D) -> Self {
        FeatureStack { channels: vec![field] }
    }

    #[inline]
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn channel(&self, c: usize) -> &Field2D {
        &self.channels[c]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut Field2D {
        &mut self.channels[c]
    }

    pub fn channels(&self) -> &[Field2D] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Field2D> {
        self.channels
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Field2D> {
        self.channels.iter()
    }

    /// Applies `f` to every channel, preserving channel order.
    pub fn try_map_channels(&self, f: impl Fn(usize, &Field2D) -> Result<Field2D>) -> Result<FeatureStack> {
        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(c, ch)| f(c, ch))
            .collect::<Result<Vec<_>>>()?;
        FeatureStack::new(channels)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FeatureStack {
        FeatureStack {
            channels: self.channels.iter().map(|c| c.map(&f)).collect(),
        }
    }

    pub fn zip_map(&self, other: &FeatureStack, f: impl Fn(f64, f64) -> f64) -> FeatureStack {
        assert_eq!(self.num_channels(), other.num_channels(), "channel count mismatch");
        FeatureStack {
            channels: self
                .channels
                .iter()
                .zip(&other.channels)
                .map(|(a, b)| a.zip_map(b, &f))
                .collect(),
        }
    }

    pub fn ensure_same_shape(&self, other: &FeatureStack, what: &str) -> Result<()> {
        if self.num_channels() != other.num_channels() || self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{:?} vs {}x{:?}",
                self.num_channels(),
                self.dims(),
                other.num_channels(),
                other.dims()
            )));
        }
        Ok(())
    }

    /// Value of every channel at one pixel, in channel order.
    pub fn pixel(&self, row: usize, col: usize) -> Vec<f64> {
        self.channels.iter().map(|c| c.get(row, col)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.channels.iter().map(Field2D::norm_sq).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(Field2D::is_finite)
    }
}
