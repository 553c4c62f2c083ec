//! Image-quality metrics on the 8-bit scale.

use crate::error::{Error, Result};
use crate::numerics::Field2D;

/// Reported PSNR when the images are (numerically) identical.
pub const PSNR_CAP_DB: f64 = 100.0;
pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `√mean((255a − 255b)²)`.
pub fn rmse(a: &Field2D, b: &Field2D) -> Result<f64> {
    a.ensure_same_dims(b, "metric inputs")?;
    let sq: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = PEAK * x - PEAK * y;
            d * d
        })
        .sum();
    Ok((sq / a.len() as f64).sqrt())
}

/// `20·log10(255 / rmse)`, capped at [`PSNR_CAP_DB`] once `rmse < 255·1e-5`.
pub fn psnr(a: &Field2D, b: &Field2D) -> Result<f64> {
    Ok(psnr_from_rmse(rmse(a, b)?))
}

pub fn psnr_from_rmse(rmse: f64) -> f64 {
    if rmse < PEAK * 1e-5 {
        PSNR_CAP_DB
    } else {
        20.0 * (PEAK / rmse).log10()
    }
}

/// Mean SSIM over every 8×8 window (stride 1) with population statistics
/// and the stabilizers `C1 = (0.01·255)²`, `C2 = (0.03·255)²`.
pub fn ssim(a: &Field2D, b: &Field2D) -> Result<f64> {
    a.ensure_same_dims(b, "metric inputs")?;
    let (h, w) = a.dims();
    let k = SSIM_WINDOW;
    if h < k || w < k {
        return Err(Error::InvalidDimension(format!(
            "{h}x{w} is smaller than the {k}x{k} SSIM window"
        )));
    }
    let x = a.map(|v| PEAK * v);
    let y = b.map(|v| PEAK * v);
    let sx = SummedArea::new(&x);
    let sy = SummedArea::new(&y);
    let sxx = SummedArea::new(&x.zip_map(&x, |p, q| p * q));
    let syy = SummedArea::new(&y.zip_map(&y, |p, q| p * q));
    let sxy = SummedArea::new(&x.zip_map(&y, |p, q| p * q));
    let n = (k * k) as f64;
    let mut total = 0.0;
    for r in 0..=h - k {
        for c in 0..=w - k {
            let mx = sx.window(r, c, k) / n;
            let my = sy.window(r, c, k) / n;
            let vx = sxx.window(r, c, k) / n - mx * mx;
            let vy = syy.window(r, c, k) / n - my * my;
            let cov = sxy.window(r, c, k) / n - mx * my;
            total += ssim_window(mx, my, vx, vy, cov);
        }
    }
    Ok(total / ((h - k + 1) * (w - k + 1)) as f64)
}

/// Luminance/contrast/structure product for one window's statistics.
pub fn ssim_window(mx: f64, my: f64, vx: f64, vy: f64, cov: f64) -> f64 {
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

struct SummedArea {
    width: usize,
    table: Vec<f64>,
}

impl SummedArea {
    fn new(f: &Field2D) -> Self {
        let (h, w) = f.dims();
        let width = w + 1;
        let mut table = vec![0.0; (h + 1) * width];
        for r in 0..h {
            let mut row = 0.0;
            for c in 0..w {
                row += f.get(r, c);
                table[(r + 1) * width + c + 1] = table[r * width + c + 1] + row;
            }
        }
        SummedArea { width, table }
    }

    fn window(&self, r: usize, c: usize, k: usize) -> f64 {
        let at = |r: usize, c: usize| self.table[r * self.width + c];
        at(r + k, c + k) - at(r, c + k) - at(r + k, c) + at(r, c)
    }
}
