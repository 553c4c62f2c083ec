use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlannerScalar};

use super::Field2D;
use crate::error::{Error, Result};

/// Complex spectrum of a `height × width` field, bin `(u, v)` stored row-major
/// with `u` the vertical frequency index.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_vec(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::InvalidDimension(format!(
                "spectrum {height}x{width} with {} bins",
                data.len()
            )));
        }
        Ok(SpectralField { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.data[u * self.width + v]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Multiplies every bin by a real weight field of the same dimensions.
    pub fn mul_real(&self, weights: &Field2D) -> SpectralField {
        assert_eq!(self.dims(), weights.dims(), "spectral weight mismatch");
        SpectralField {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(weights.data()).map(|(z, &w)| z * w).collect(),
        }
    }

    pub fn zip_map(&self, other: &SpectralField, f: impl Fn(Complex64, Complex64) -> Complex64) -> SpectralField {
        assert_eq!(self.dims(), other.dims(), "spectral dimension mismatch");
        SpectralField {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

// The scalar planner keeps results independent of the host's SIMD support,
// so transforms are bit-identical across machines.
thread_local! {
    static PLANNER: RefCell<FftPlannerScalar<f64>> = RefCell::new(FftPlannerScalar::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

fn transform_2d(height: usize, width: usize, buf: &mut [Complex64], direction: FftDirection) {
    let row_fft = plan(width, direction);
    let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    let col_fft = plan(height, direction);
    scratch.resize(col_fft.get_inplace_scratch_len(), Complex64::default());
    let mut column = vec![Complex64::default(); height];
    for c in 0..width {
        for r in 0..height {
            column[r] = buf[r * width + c];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for r in 0..height {
            buf[r * width + c] = column[r];
        }
    }
}

/// Forward 2D DFT, unnormalized:
/// `F(u, v) = Σ_{r,c} f(r, c) · exp(−2πi (u r / H + v c / W))`.
///
/// With this convention Parseval reads `Σ|f|² = (1 / HW) Σ|F|²`.
pub fn dft2(field: &Field2D) -> SpectralField {
    let (h, w) = field.dims();
    let mut data: Vec<Complex64> = field.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_2d(h, w, &mut data, FftDirection::Forward);
    SpectralField {
        height: h,
        width: w,
        data,
    }
}

/// Inverse 2D DFT with the `1 / (HW)` factor, returning the complex result.
pub fn idft2_complex(spec: &SpectralField) -> Vec<Complex64> {
    let (h, w) = spec.dims();
    let mut data = spec.data.clone();
    transform_2d(h, w, &mut data, FftDirection::Inverse);
    let norm = 1.0 / (h * w) as f64;
    data.iter_mut().for_each(|z| *z *= norm);
    data
}

/// Inverse 2D DFT; the imaginary part is dropped.
///
/// Callers that need to know how real the result was should use
/// [`idft2_complex`].
pub fn idft2(spec: &SpectralField) -> Field2D {
    let (h, w) = spec.dims();
    let data = idft2_complex(spec).into_iter().map(|z| z.re).collect();
    Field2D::from_vec(h, w, data).expect("spectrum dimensions are positive")
}

/// Signed frequency in cycles per sample for bin `k` of an `n`-point DFT,
/// in `[-0.5, 0.5)`.
#[inline]
pub fn signed_frequency(k: usize, n: usize) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k >= n_f / 2.0 {
        (k - n_f) / n_f
    } else {
        k / n_f
    }
}
