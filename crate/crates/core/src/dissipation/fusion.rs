use super::params::{sigmoid, BlockParams};
use super::paths::{dot, project};
use crate::error::{Error, Result};
use crate::numerics::{grad_components, FeatureStack, Field2D};

/// Denominator guard of the derivative-attention normalization.
pub const ATTENTION_EPS: f64 = 1e-8;

/// Gate response `α = σ(Σ_j W2_j φ(W1_j s))` for a scalar input `s`.
pub fn gate_response(s: f64, params: &BlockParams) -> f64 {
    let act = params.config.activation;
    let z: f64 = params
        .w1
        .iter()
        .zip(&params.w2)
        .map(|(&a, &b)| b * act.apply(a * s))
        .sum();
    sigmoid(z)
}

/// Per-channel statistic `s_c = mean |∇low_c + ∇high_c|`.
pub fn gate_statistics(low: &FeatureStack, high: &FeatureStack) -> Result<Vec<f64>> {
    low.ensure_same_shape(high, "low vs high band")?;
    low.iter()
        .zip(high.iter())
        .map(|(l, h)| {
            let (lx, ly) = grad_components(l)?;
            let (hx, hy) = grad_components(h)?;
            let gx = lx.add(&hx);
            let gy = ly.add(&hy);
            Ok(gx.zip_map(&gy, f64::hypot).mean())
        })
        .collect()
}

/// Channel gate `F_A′ = F_A · (1 + α_c)`.
///
/// `low`/`high` may carry `2C` channels (concatenated split); channel `c`
/// then averages the statistics of channels `c` and `C + c`.
pub fn channel_gate(
    f_a: &FeatureStack,
    low: &FeatureStack,
    high: &FeatureStack,
    params: &BlockParams,
) -> Result<FeatureStack> {
    let alphas = gate_alphas(f_a, low, high, params)?;
    f_a.try_map_channels(|c, ch| Ok(ch.scale(1.0 + alphas[c])))
}

/// The per-channel `α_c` used by [`channel_gate`].
pub fn gate_alphas(
    f_a: &FeatureStack,
    low: &FeatureStack,
    high: &FeatureStack,
    params: &BlockParams,
) -> Result<Vec<f64>> {
    let c = f_a.num_channels();
    if low.dims() != f_a.dims() {
        return Err(Error::DimensionMismatch("bands vs features".into()));
    }
    let stats = gate_statistics(low, high)?;
    let per_channel: Vec<f64> = if stats.len() == c {
        stats
    } else if stats.len() == 2 * c {
        (0..c).map(|i| 0.5 * (stats[i] + stats[c + i])).collect()
    } else {
        return Err(Error::DimensionMismatch(format!(
            "{} band channels for {c} feature channels",
            stats.len()
        )));
    };
    Ok(per_channel.into_iter().map(|s| gate_response(s, params)).collect())
}

/// Channel fusion `F̃_c = m_c · g_c` with `g = F_A′ + F_B` and
/// `m_c = σ(mean g_c)`.
pub fn channel_attention_fuse(f_a_gated: &FeatureStack, f_b: &FeatureStack) -> Result<FeatureStack> {
    f_a_gated.ensure_same_shape(f_b, "F_A′ vs F_B")?;
    let g = f_a_gated.zip_map(f_b, |a, b| a + b);
    g.try_map_channels(|_, ch| {
        let m = sigmoid(ch.mean());
        Ok(ch.scale(m))
    })
}

/// Central difference along each image row of a pixel-major `N × d` block,
/// one-sided at the row ends, zero for single-column images.
pub fn row_derivative(values: &[f64], height: usize, width: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    if width == 1 {
        return out;
    }
    let at = |r: usize, c: usize| &values[(r * width + c) * d..(r * width + c + 1) * d];
    for r in 0..height {
        for c in 0..width {
            let (a, b, k) = if c == 0 {
                (at(r, 1), at(r, 0), 1.0)
            } else if c == width - 1 {
                (at(r, c), at(r, c - 1), 1.0)
            } else {
                (at(r, c + 1), at(r, c - 1), 0.5)
            };
            let o = &mut out[(r * width + c) * d..(r * width + c + 1) * d];
            for ((o, &p), &q) in o.iter_mut().zip(a).zip(b) {
                *o = k * (p - q);
            }
        }
    }
    out
}

/// Derivative-augmented multi-head attention with a residual connection.
///
/// Per head `h` (a block of `C / heads` projected channels):
///
/// ```text
/// score(x, x′) = exp⟨∂Q(x), K(x′)⟩ + ⟨Q(x), ∂K(x′)⟩
/// A(x, x′)     = score / (Σ_{x′} |score| + 1e-8)
/// O(x)         = Σ_{x′} A(x, x′) V(x′)
/// ```
///
/// and `Z = concat_h O_h + F̃`.
pub fn derivative_attention(fused: &FeatureStack, params: &BlockParams) -> Result<FeatureStack> {
    params.validate()?;
    let c = params.channels();
    if fused.num_channels() != c {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channels, parameters expect {c}",
            fused.num_channels()
        )));
    }
    let heads = params.config.heads;
    if c % heads != 0 {
        return Err(Error::InvalidArgument(format!(
            "{c} channels not divisible by {heads} heads"
        )));
    }
    let dh = c / heads;
    let (h, w) = fused.dims();
    let n = h * w;
    let mut z: Vec<Field2D> = fused.channels().to_vec();
    let mut scores = vec![0.0; n];
    for head in 0..heads {
        let cols = head * dh..(head + 1) * dh;
        let q = project(fused, &params.w_qd, cols.clone());
        let k = project(fused, &params.w_kd, cols.clone());
        let v = project(fused, &params.w_vd, cols);
        let dq = row_derivative(&q, h, w, dh);
        let dk = row_derivative(&k, h, w, dh);
        for x in 0..n {
            let qx = &q[x * dh..(x + 1) * dh];
            let dqx = &dq[x * dh..(x + 1) * dh];
            let mut total = 0.0;
            for (x2, s) in scores.iter_mut().enumerate() {
                let span = x2 * dh..(x2 + 1) * dh;
                *s = dot(dqx, &k[span.clone()]).exp() + dot(qx, &dk[span]);
                total += s.abs();
            }
            if !total.is_finite() {
                return Err(Error::InvalidArgument(
                    "derivative-attention scores overflow; rescale the input".into(),
                ));
            }
            let norm = total + ATTENTION_EPS;
            for j in 0..dh {
                let o: f64 = scores.iter().enumerate().map(|(x2, s)| s * v[x2 * dh + j]).sum();
                z[head * dh + j].data_mut()[x] += o / norm;
            }
        }
    }
    FeatureStack::new(z)
}
