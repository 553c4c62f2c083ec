use super::Field2D;
use crate::error::{Error, Result};

/// Upsamples by an integer factor with bilinear interpolation, corners
/// aligned: output index `i` along an axis of source length `n` samples the
/// source at `i · (n − 1) / (factor · n − 1)`. The first and last samples of
/// each axis therefore coincide with the source corners, and a two-sample
/// ramp `[0, 1]` upsampled ×2 becomes `[0, 1/3, 2/3, 1]`.
pub fn bilinear_upsample(field: &Field2D, factor: usize) -> Result<Field2D> {
    if factor == 0 {
        return Err(Error::InvalidArgument("upsampling factor must be ≥ 1".into()));
    }
    if factor == 1 {
        return Ok(field.clone());
    }
    let (h, w) = field.dims();
    let rows = axis_taps(h, factor);
    let cols = axis_taps(w, factor);
    Ok(Field2D::from_fn(h * factor, w * factor, |r, c| {
        let (r0, r1, tr) = rows[r];
        let (c0, c1, tc) = cols[c];
        let top = lerp(field.get(r0, c0), field.get(r0, c1), tc);
        let bottom = lerp(field.get(r1, c0), field.get(r1, c1), tc);
        lerp(top, bottom, tr)
    }))
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else {
        a + t * (b - a)
    }
}

// For each output index: the two bracketing source indices and the
// fractional weight of the upper one. Integer arithmetic keeps
// source-aligned outputs exact.
fn axis_taps(n: usize, factor: usize) -> Vec<(usize, usize, f64)> {
    let out = n * factor;
    if n == 1 {
        return vec![(0, 0, 0.0); out];
    }
    let denom = out - 1;
    (0..out)
        .map(|i| {
            let num = i * (n - 1);
            let lo = num / denom;
            let rem = num % denom;
            if rem == 0 {
                (lo, lo, 0.0)
            } else {
                (lo, lo + 1, rem as f64 / denom as f64)
            }
        })
        .collect()
}

/// Bilinear taps for sampling a `height × width` grid at the continuous
/// position `(y, x)`. Neighbours outside the grid are dropped, which is the
/// same as sampling a zero-padded image. Returns the in-frame taps as
/// `(flat_index, weight)` pairs.
pub fn bilinear_taps(height: usize, width: usize, y: f64, x: f64) -> Vec<(usize, f64)> {
    let mut taps = Vec::with_capacity(4);
    if !(y > -1.0 && x > -1.0 && y < height as f64 && x < width as f64) {
        return taps;
    }
    let y0 = y.floor();
    let x0 = x.floor();
    let ty = y - y0;
    let tx = x - x0;
    for (dy, wy) in [(0.0, 1.0 - ty), (1.0, ty)] {
        for (dx, wx) in [(0.0, 1.0 - tx), (1.0, tx)] {
            let yy = y0 + dy;
            let xx = x0 + dx;
            let wgt = wy * wx;
            if wgt == 0.0 || yy < 0.0 || xx < 0.0 || yy >= height as f64 || xx >= width as f64 {
                continue;
            }
            taps.push((yy as usize * width + xx as usize, wgt));
        }
    }
    taps
}

/// Samples `field` at a continuous position with zero padding outside.
pub fn sample_bilinear(field: &Field2D, y: f64, x: f64) -> f64 {
    bilinear_taps(field.height(), field.width(), y, x)
        .into_iter()
        .map(|(i, w)| w * field.data()[i])
        .sum()
}
