use super::params::{BlockParams, Matrix};
use crate::error::{Error, Result};
use crate::numerics::{convolve2, mixed_second_derivative, FeatureStack, Field2D};

fn check_channels(input: &FeatureStack, params: &BlockParams) -> Result<()> {
    params.validate()?;
    if input.num_channels() != params.channels() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channels, parameters expect {}",
            input.num_channels(),
            params.channels()
        )));
    }
    Ok(())
}

/// Spatial-diffusion path: `F_A = φ(κ_A ⊛ ∂²I/∂x∂y + b_A)` per channel.
pub fn spatial_diffusion_path(input: &FeatureStack, params: &BlockParams) -> Result<FeatureStack> {
    check_channels(input, params)?;
    let act = params.config.activation;
    input.try_map_channels(|c, ch| {
        let curvature = mixed_second_derivative(ch)?;
        let b = params.b_a[c];
        Ok(convolve2(&curvature, &params.kappa_a[c])?.map(|v| act.apply(v + b)))
    })
}

/// Projects every pixel's channel vector, `out[p] = I(p)ᵀ W[:, cols]`,
/// returned pixel-major with `cols.len()` values per pixel.
pub(crate) fn project(input: &FeatureStack, w: &Matrix, cols: std::ops::Range<usize>) -> Vec<f64> {
    let (h, wd) = input.dims();
    let n = h * wd;
    let width = cols.len();
    let mut out = vec![0.0; n * width];
    for (c, ch) in input.iter().enumerate() {
        for (p, &v) in ch.data().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let row = &mut out[p * width..(p + 1) * width];
            for (j, o) in cols.clone().zip(row.iter_mut()) {
                *o += v * w.get(c, j);
            }
        }
    }
    out
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Softmax attention weights `A(x, x′)` as an `N × N` field (`N = H·W`,
/// pixels in row-major order).
pub fn semantic_attention_weights(input: &FeatureStack, params: &BlockParams) -> Result<Field2D> {
    check_channels(input, params)?;
    let (h, w) = input.dims();
    let n = h * w;
    let d = params.config.attn_dim;
    let q = project(input, &params.w_q, 0..d);
    let k = project(input, &params.w_k, 0..d);
    let mut a = Field2D::zeros(n, n);
    let mut row = vec![0.0; n];
    for x in 0..n {
        softmax_row(&q[x * d..(x + 1) * d], &k, d, &mut row);
        a.data_mut()[x * n..(x + 1) * n].copy_from_slice(&row);
    }
    Ok(a)
}

fn softmax_row(qx: &[f64], k: &[f64], d: usize, out: &mut [f64]) {
    let mut max = f64::NEG_INFINITY;
    for (x2, o) in out.iter_mut().enumerate() {
        *o = dot(qx, &k[x2 * d..(x2 + 1) * d]);
        max = max.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Semantic-attenuation path: single-head softmax attention over all pixel
/// pairs, `F_B = φ(Σ_{x′} A(x, x′) v(x′) + b_B)`.
pub fn semantic_attenuation_path(input: &FeatureStack, params: &BlockParams) -> Result<FeatureStack> {
    check_channels(input, params)?;
    let (h, w) = input.dims();
    let n = h * w;
    let c = params.channels();
    let d = params.config.attn_dim;
    let act = params.config.activation;
    let q = project(input, &params.w_q, 0..d);
    let k = project(input, &params.w_k, 0..d);
    let v = project(input, &params.w_v, 0..c);
    let mut out = vec![Field2D::zeros(h, w); c];
    let mut row = vec![0.0; n];
    let mut acc = vec![0.0; c];
    for x in 0..n {
        softmax_row(&q[x * d..(x + 1) * d], &k, d, &mut row);
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (x2, &a) in row.iter().enumerate() {
            for (ac, &vv) in acc.iter_mut().zip(&v[x2 * c..(x2 + 1) * c]) {
                *ac += a * vv;
            }
        }
        for (ch, (&a, &b)) in acc.iter().zip(&params.b_b).enumerate() {
            out[ch].data_mut()[x] = act.apply(a + b);
        }
    }
    FeatureStack::new(out)
}
