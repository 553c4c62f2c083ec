//! Semantic re-projection loss: cosine alignment between structural and
//! semantic embeddings, its batch loss and the closed-form gradient.

use crate::dissipation::Activation;
use crate::error::{Error, Result};
use crate::numerics::{FeatureStack, Field2D, Rng};

/// Number of stride-2 stages in [`semantic_encode`].
pub const ENCODER_STAGES: usize = 5;
/// Embedding channels produced by [`semantic_encode`].
pub const ENCODER_CHANNELS: usize = 4;
const HIDDEN_WIDTH: usize = 8;

/// Per `(channel, row, col)` a `d`-vector, stored contiguously in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticEmbedding {
    channels: usize,
    height: usize,
    width: usize,
    d: usize,
    data: Vec<f64>,
}

impl SemanticEmbedding {
    pub fn new(channels: usize, height: usize, width: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 || d == 0 {
            return Err(Error::InvalidDimension(format!("{channels}x{height}x{width}x{d}")));
        }
        if data.len() != channels * height * width * d {
            return Err(Error::DimensionMismatch(format!(
                "{} values for shape {channels}x{height}x{width}x{d}",
                data.len()
            )));
        }
        Ok(SemanticEmbedding {
            channels,
            height,
            width,
            d,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize, d: usize) -> Result<Self> {
        Self::new(channels, height, width, d, vec![0.0; channels * height * width * d])
    }

    /// `(channels, height, width, d)`.
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.height, self.width, self.d)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn offset(&self, c: usize, row: usize, col: usize) -> usize {
        ((c * self.height + row) * self.width + col) * self.d
    }

    pub fn vector(&self, c: usize, row: usize, col: usize) -> &[f64] {
        let o = self.offset(c, row, col);
        &self.data[o..o + self.d]
    }

    pub fn vector_mut(&mut self, c: usize, row: usize, col: usize) -> &mut [f64] {
        let o = self.offset(c, row, col);
        &mut self.data[o..o + self.d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scale(&self, t: f64) -> SemanticEmbedding {
        SemanticEmbedding {
            data: self.data.iter().map(|v| v * t).collect(),
            ..self.clone()
        }
    }

    fn ensure_same_shape(&self, other: &SemanticEmbedding) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "embeddings {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

/// A batch position `(c, x, y)` contributing one similarity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSite {
    pub channel: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub eps: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub theta: Vec<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            eps: 1e-8,
            alpha: 1.0,
            lambda: 1e-4,
            theta: Vec::new(),
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::config("eps", "must be > 0"));
        }
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            return Err(Error::config("alpha", "must be ≥ 1"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::config("lambda", "must be ≥ 0"));
        }
        Ok(())
    }

    fn theta_sq(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }
}

/// Fixed random encoder: each stage 2×2 average-pools, mixes channels with a
/// seeded projection plus bias, and applies softplus. Five stages reduce the
/// spatial size by 32; the last stage emits `ENCODER_CHANNELS · d` maps that
/// are grouped into `d`-vectors.
pub fn semantic_encode(field: &Field2D, seed: u64, d: usize) -> Result<SemanticEmbedding> {
    let (h, w) = field.dims();
    let factor = 1 << ENCODER_STAGES;
    if h % factor != 0 || w % factor != 0 {
        return Err(Error::InvalidDimension(format!("{h}x{w} is not divisible by {factor}")));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be ≥ 1".into()));
    }
    let root = Rng::new(seed);
    let mut maps = vec![field.clone()];
    for stage in 0..ENCODER_STAGES {
        let out_width = if stage + 1 == ENCODER_STAGES {
            ENCODER_CHANNELS * d
        } else {
            HIDDEN_WIDTH
        };
        let mut rng = root.substream(stage as u64);
        let (weights, bias) = stage_weights(&mut rng, out_width, maps.len());
        let pooled: Vec<Field2D> = maps.iter().map(avg_pool2).collect();
        maps = (0..out_width)
            .map(|o| {
                let (ph, pw) = pooled[0].dims();
                let mut acc = Field2D::filled(ph, pw, bias[o]);
                for (i, p) in pooled.iter().enumerate() {
                    acc.axpy(weights[o][i], p);
                }
                acc.map(|v| Activation::Softplus.apply(v))
            })
            .collect();
    }
    let (eh, ew) = maps[0].dims();
    let mut emb = SemanticEmbedding::zeros(ENCODER_CHANNELS, eh, ew, d)?;
    for c in 0..ENCODER_CHANNELS {
        for r in 0..eh {
            for col in 0..ew {
                let v = emb.vector_mut(c, r, col);
                for (i, slot) in v.iter_mut().enumerate() {
                    *slot = maps[c * d + i].get(r, col);
                }
            }
        }
    }
    Ok(emb)
}

/// Row-major `out × in` projection followed by `out` biases, all from
/// `U(±1/√in)`.
fn stage_weights(rng: &mut Rng, out: usize, inputs: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let bound = 1.0 / (inputs as f64).sqrt();
    let weights = (0..out)
        .map(|_| (0..inputs).map(|_| rng.uniform(-bound, bound)).collect())
        .collect();
    let bias = (0..out).map(|_| rng.uniform(-bound, bound)).collect();
    (weights, bias)
}

fn avg_pool2(f: &Field2D) -> Field2D {
    Field2D::from_fn(f.height() / 2, f.width() / 2, |r, c| {
        0.25 * (f.get(2 * r, 2 * c) + f.get(2 * r, 2 * c + 1) + f.get(2 * r + 1, 2 * c) + f.get(2 * r + 1, 2 * c + 1))
    })
}

/// `Σ p·r / (√(Σp² + ε) · √(Σr² + ε))`.
pub fn cosine_similarity(p: &[f64], r: &[f64], eps: f64) -> f64 {
    let (dp, dr) = norms(p, r, eps);
    dot(p, r) / (dp * dr)
}

fn norms(p: &[f64], r: &[f64], eps: f64) -> (f64, f64) {
    ((dot(p, p) + eps).sqrt(), (dot(r, r) + eps).sqrt())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Similarity map, one channel per embedding channel.
pub fn cosine_similarity_map(p: &SemanticEmbedding, r: &SemanticEmbedding, eps: f64) -> Result<FeatureStack> {
    p.ensure_same_shape(r)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    let (c, h, w, _) = p.shape();
    FeatureStack::new(
        (0..c)
            .map(|ch| {
                Field2D::from_fn(h, w, |row, col| {
                    cosine_similarity(p.vector(ch, row, col), r.vector(ch, row, col), eps)
                })
            })
            .collect(),
    )
}

fn check_batch(p: &SemanticEmbedding, r: &SemanticEmbedding, cfg: &LossConfig, batch: &[BatchSite]) -> Result<()> {
    p.ensure_same_shape(r)?;
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let (c, h, w, _) = p.shape();
    if let Some(s) = batch.iter().find(|s| s.channel >= c || s.row >= h || s.col >= w) {
        return Err(Error::InvalidArgument(format!("batch site {s:?} outside {c}x{h}x{w}")));
    }
    Ok(())
}

/// `L = (1/N) Σ_j (1 − s_j)^α + λ‖Θ‖²`.
pub fn batch_loss(p: &SemanticEmbedding, r: &SemanticEmbedding, cfg: &LossConfig, batch: &[BatchSite]) -> Result<f64> {
    check_batch(p, r, cfg, batch)?;
    let n = batch.len() as f64;
    let data: f64 = batch
        .iter()
        .map(|s| {
            let sim = cosine_similarity(
                p.vector(s.channel, s.row, s.col),
                r.vector(s.channel, s.row, s.col),
                cfg.eps,
            );
            (1.0 - sim).powf(cfg.alpha)
        })
        .sum();
    Ok(data / n + cfg.lambda * cfg.theta_sq())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    /// Same layout as the primary embedding.
    pub d_vp: SemanticEmbedding,
    pub d_theta: Vec<f64>,
}

/// Analytic gradient of [`batch_loss`] with respect to every `v_P` component
/// and `Θ`:
///
/// ```text
/// ∂s/∂v_P = v_R / (D_P D_R) − s · v_P / D_P²,   D = √(Σv² + ε)
/// ∂L/∂s_j = −(α/N) (1 − s_j)^(α−1)
/// ∂L/∂Θ   = 2λΘ
/// ```
pub fn batch_loss_gradient(
    p: &SemanticEmbedding,
    r: &SemanticEmbedding,
    cfg: &LossConfig,
    batch: &[BatchSite],
) -> Result<LossGradient> {
    check_batch(p, r, cfg, batch)?;
    let (c, h, w, d) = p.shape();
    let mut d_vp = SemanticEmbedding::zeros(c, h, w, d)?;
    let n = batch.len() as f64;
    for s in batch {
        let vp = p.vector(s.channel, s.row, s.col);
        let vr = r.vector(s.channel, s.row, s.col);
        let (dp, dr) = norms(vp, vr, cfg.eps);
        let sim = dot(vp, vr) / (dp * dr);
        let dl_ds = -(cfg.alpha / n) * (1.0 - sim).powf(cfg.alpha - 1.0);
        let g = d_vp.vector_mut(s.channel, s.row, s.col);
        for ((gi, &pi), &ri) in g.iter_mut().zip(vp).zip(vr) {
            *gi += dl_ds * (ri / (dp * dr) - sim * pi / (dp * dp));
        }
    }
    let d_theta = cfg.theta.iter().map(|t| 2.0 * cfg.lambda * t).collect();
    Ok(LossGradient { d_vp, d_theta })
}

/// Outcome of [`gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub trials: usize,
    pub components: usize,
    pub max_relative_error: f64,
}

/// Finite-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-6;

/// Compares the analytic gradient against central differences over seeded
/// random embeddings, losses and batches. The relative error of a component
/// is `|a − n| / max(|a|, |n|, 1e-4)`.
pub fn gradient_check(seed: u64, trials: usize) -> Result<GradientCheck> {
    let root = Rng::new(seed);
    let mut worst = 0.0f64;
    let mut components = 0;
    for t in 0..trials {
        let mut rng = root.substream(t as u64);
        let (p, r, cfg, batch) = random_problem(&mut rng)?;
        let grad = batch_loss_gradient(&p, &r, &cfg, &batch)?;
        let mut probe = p.clone();
        for i in 0..p.data().len() {
            let x = p.data()[i];
            probe.data_mut()[i] = x + FD_STEP;
            let up = batch_loss(&probe, &r, &cfg, &batch)?;
            probe.data_mut()[i] = x - FD_STEP;
            let down = batch_loss(&probe, &r, &cfg, &batch)?;
            probe.data_mut()[i] = x;
            worst = worst.max(relative_error(grad.d_vp.data()[i], (up - down) / (2.0 * FD_STEP)));
            components += 1;
        }
        let mut shifted = cfg.clone();
        for i in 0..cfg.theta.len() {
            let x = cfg.theta[i];
            shifted.theta[i] = x + FD_STEP;
            let up = batch_loss(&p, &r, &shifted, &batch)?;
            shifted.theta[i] = x - FD_STEP;
            let down = batch_loss(&p, &r, &shifted, &batch)?;
            shifted.theta[i] = x;
            worst = worst.max(relative_error(grad.d_theta[i], (up - down) / (2.0 * FD_STEP)));
            components += 1;
        }
    }
    Ok(GradientCheck {
        trials,
        components,
        max_relative_error: worst,
    })
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-4)
}

type Problem = (SemanticEmbedding, SemanticEmbedding, LossConfig, Vec<BatchSite>);

fn random_problem(rng: &mut Rng) -> Result<Problem> {
    let (c, h, w) = (2, 2, 3);
    let d = rng.range(1, 9);
    let len = c * h * w * d;
    let p = SemanticEmbedding::new(c, h, w, d, (0..len).map(|_| rng.normal(0.0, 1.0)).collect())?;
    let r = SemanticEmbedding::new(c, h, w, d, (0..len).map(|_| rng.normal(0.0, 1.0)).collect())?;
    let cfg = LossConfig {
        eps: 1e-8,
        alpha: rng.uniform(1.0, 3.0),
        lambda: rng.uniform(0.0, 0.1),
        theta: (0..rng.range(0, 5)).map(|_| rng.normal(0.0, 1.0)).collect(),
    };
    let batch = (0..rng.range(1, 9))
        .map(|_| BatchSite {
            channel: rng.range(0, c),
            row: rng.range(0, h),
            col: rng.range(0, w),
        })
        .collect();
    Ok((p, r, cfg, batch))
}
