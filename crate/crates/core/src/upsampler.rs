//! Multi-scale decoder: repeated ×2 bilinear upsampling fused with the skip
//! features of the next finer scale, then a linear projection to pixels.
//!
//! ```text
//! U      = bilinear×2(Z_i)
//! F_up   = φ(κ_up ⊛ (U + Z_prev))     one kernel per level, shared by channels
//! Ĵ      = Σ_c κ_out,c ⊛ F_up,c + b_out
//! ```

use crate::dissipation::Activation;
use crate::error::{Error, Result};
use crate::numerics::{bilinear_upsample, convolve2, FeatureStack, Field2D, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct UpsampleParams {
    /// Number of ×2 steps.
    pub levels: usize,
    pub kappa_up: Vec<Field2D>,
    /// One kernel per feature channel.
    pub kappa_out: Vec<Field2D>,
    pub b_out: f64,
    pub activation: Activation,
}

impl UpsampleParams {
    /// Kernels drawn uniformly from `±1/√fan_in`.
    pub fn seeded(
        levels: usize,
        channels: usize,
        kernel_size: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if levels == 0 || channels == 0 {
            return Err(Error::InvalidArgument("levels and channels must be ≥ 1".into()));
        }
        if kernel_size % 2 == 0 {
            return Err(Error::InvalidKernel(format!("kernel size {kernel_size} is even")));
        }
        let root = Rng::new(seed);
        let k = kernel_size;
        let b = 1.0 / k as f64;
        let mut rng = root.substream(0);
        let kappa_up = (0..levels).map(|_| rng.uniform_field(k, k, -b, b)).collect();
        let bo = 1.0 / (k as f64 * (channels as f64).sqrt());
        let mut rng = root.substream(1);
        let kappa_out = (0..channels).map(|_| rng.uniform_field(k, k, -bo, bo)).collect();
        let b_out = root.substream(2).uniform(-bo, bo);
        Ok(UpsampleParams {
            levels,
            kappa_up,
            kappa_out,
            b_out,
            activation,
        })
    }

    pub fn channels(&self) -> usize {
        self.kappa_out.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.kappa_up.len() != self.levels {
            return Err(Error::InvalidArgument(format!(
                "{} level kernels for {} levels",
                self.kappa_up.len(),
                self.levels
            )));
        }
        if self.kappa_out.is_empty() {
            return Err(Error::InvalidArgument("no output kernels".into()));
        }
        for k in self.kappa_up.iter().chain(&self.kappa_out) {
            if k.height() % 2 == 0 || k.width() % 2 == 0 {
                return Err(Error::InvalidKernel(format!("kernel {:?} is not odd-sized", k.dims())));
            }
        }
        Ok(())
    }
}

/// One decoder level: `φ(κ_up[level] ⊛ (bilinear×2(Z_i) + Z_prev))`.
pub fn upsample_level(
    z_i: &FeatureStack,
    z_prev: &FeatureStack,
    params: &UpsampleParams,
    level: usize,
) -> Result<FeatureStack> {
    params.validate()?;
    let kernel = params
        .kappa_up
        .get(level)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} ≥ {}", params.levels)))?;
    let (h, w) = z_i.dims();
    if z_prev.dims() != (2 * h, 2 * w) || z_prev.num_channels() != z_i.num_channels() {
        return Err(Error::DimensionMismatch(format!(
            "finer features must be {}x{}x{}, got {}x{:?}",
            z_i.num_channels(),
            2 * h,
            2 * w,
            z_prev.num_channels(),
            z_prev.dims()
        )));
    }
    let act = params.activation;
    z_i.try_map_channels(|c, ch| {
        let up = bilinear_upsample(ch, 2)?;
        let merged = up.add(z_prev.channel(c));
        Ok(convolve2(&merged, kernel)?.map(|v| act.apply(v)))
    })
}

/// Linear output map `Ĵ = Σ_c κ_out,c ⊛ F_c + b_out`.
pub fn output_projection(features: &FeatureStack, params: &UpsampleParams) -> Result<Field2D> {
    params.validate()?;
    if features.num_channels() != params.channels() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature channels, {} output kernels",
            features.num_channels(),
            params.channels()
        )));
    }
    let (h, w) = features.dims();
    let mut out = Field2D::filled(h, w, params.b_out);
    for (ch, k) in features.iter().zip(&params.kappa_out) {
        out.axpy(1.0, &convolve2(ch, k)?);
    }
    Ok(out)
}

/// Full decode. `pyramid[0]` is the coarsest stack and `pyramid[i]` the skip
/// features consumed by level `i − 1`; every entry doubles the previous
/// spatial size.
pub fn decode(pyramid: &[FeatureStack], params: &UpsampleParams) -> Result<Field2D> {
    if pyramid.len() != params.levels + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} levels need {} stacks, got {}",
            params.levels,
            params.levels + 1,
            pyramid.len()
        )));
    }
    let mut current = pyramid[0].clone();
    for (level, skip) in pyramid[1..].iter().enumerate() {
        current = upsample_level(&current, skip, params, level)?;
    }
    output_projection(&current, params)
}

/// Result of [`cross_scale_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossScaleReport {
    /// Pearson correlation between the output and a low-frequency pattern
    /// that was injected identically at both scales.
    pub low_correlation: f64,
    /// Output/input RMS gain of a fine-scale-only high-frequency pattern
    /// divided by the same gain for the low-frequency pattern.
    pub high_relative_gain: f64,
}

/// Runs level 0 of `params` on two probes at coarse size `n × n`.
pub fn cross_scale_check(params: &UpsampleParams, n: usize) -> Result<CrossScaleReport> {
    let channels = params.channels();
    let pattern = |size: usize| {
        Field2D::from_fn(size, size, |r, c| {
            let t = std::f64::consts::TAU / size as f64;
            1.0 + 0.5 * (t * r as f64).sin() * (t * c as f64).cos()
        })
    };
    let stack = |f: Field2D| FeatureStack::new(vec![f; channels]);
    let low_fine = pattern(2 * n);
    let out = upsample_level(&stack(pattern(n))?, &stack(low_fine.clone())?, params, 0)?;
    let low_correlation = pearson(out.channel(0), &low_fine);
    let low_gain = rms(out.channel(0)) / rms(&low_fine.scale(2.0));

    let checker = Field2D::from_fn(2 * n, 2 * n, |r, c| if (r + c) % 2 == 0 { 1.0 } else { -1.0 });
    let out = upsample_level(
        &FeatureStack::zeros(channels, n, n),
        &stack(checker.clone())?,
        params,
        0,
    )?;
    let high_gain = rms(out.channel(0)) / rms(&checker);
    Ok(CrossScaleReport {
        low_correlation,
        high_relative_gain: high_gain / low_gain,
    })
}

fn rms(f: &Field2D) -> f64 {
    (f.norm_sq() / f.len() as f64).sqrt()
}

fn pearson(a: &Field2D, b: &Field2D) -> f64 {
    let (ma, mb) = (a.mean(), b.mean());
    let ca = a.map(|v| v - ma);
    let cb = b.map(|v| v - mb);
    ca.dot(&cb) / (ca.norm() * cb.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_kernel() -> Field2D {
        let mut k = Field2D::zeros(3, 3);
        k.set(1, 1, 1.0);
        k
    }

    fn binomial() -> Field2D {
        let k = [1.0, 2.0, 1.0];
        Field2D::from_fn(3, 3, |r, c| k[r] * k[c] / 16.0)
    }

    fn random_stack(rng: &mut Rng, c: usize, n: usize, lo: f64) -> FeatureStack {
        FeatureStack::new((0..c).map(|_| rng.uniform_field(n, n, lo, 1.0)).collect()).unwrap()
    }

    #[test]
    fn degenerate_level_is_plain_bilinear() {
        let mut rng = Rng::new(1);
        let mut p = UpsampleParams::seeded(1, 2, 3, Activation::Relu, 0).unwrap();
        p.kappa_up = vec![identity_kernel()];
        let z = random_stack(&mut rng, 2, 4, 0.0);
        let out = upsample_level(&z, &FeatureStack::zeros(2, 8, 8), &p, 0).unwrap();
        for c in 0..2 {
            assert_eq!(out.channel(c), &bilinear_upsample(z.channel(c), 2).unwrap());
        }
    }

    #[test]
    fn zero_coarse_input_filters_skip_only() {
        let mut rng = Rng::new(2);
        let p = UpsampleParams::seeded(1, 2, 3, Activation::Softplus, 4).unwrap();
        let skip = random_stack(&mut rng, 2, 6, -1.0);
        let out = upsample_level(&FeatureStack::zeros(2, 3, 3), &skip, &p, 0).unwrap();
        for c in 0..2 {
            let expect = convolve2(skip.channel(c), &p.kappa_up[0])
                .unwrap()
                .map(|v| Activation::Softplus.apply(v));
            assert!(out.channel(c).max_abs_diff(&expect) < 1e-15);
        }
    }

    #[test]
    fn level_matches_composition_oracle() {
        let mut rng = Rng::new(3);
        let p = UpsampleParams::seeded(2, 3, 3, Activation::Softplus, 8).unwrap();
        let z = random_stack(&mut rng, 3, 3, -1.0);
        let skip = random_stack(&mut rng, 3, 6, -1.0);
        let out = upsample_level(&z, &skip, &p, 1).unwrap();
        for c in 0..3 {
            // Tent-kernel upsampling and direct reflective convolution.
            let src = z.channel(c);
            let up = Field2D::from_fn(6, 6, |r, col| {
                let (y, x) = (r as f64 * 2.0 / 5.0, col as f64 * 2.0 / 5.0);
                let mut acc = 0.0;
                for sr in 0..3 {
                    for sc in 0..3 {
                        let k = (1.0 - (y - sr as f64).abs()).max(0.0) * (1.0 - (x - sc as f64).abs()).max(0.0);
                        acc += k * src.get(sr, sc);
                    }
                }
                acc
            });
            let merged = up.add(skip.channel(c));
            let reflect = |i: isize, n: isize| {
                if i < 0 {
                    -i
                } else if i >= n {
                    2 * n - 2 - i
                } else {
                    i
                }
            };
            let expect = Field2D::from_fn(6, 6, |r, col| {
                let mut acc = 0.0;
                for i in 0..3isize {
                    for j in 0..3isize {
                        let rr = reflect(r as isize + 1 - i, 6) as usize;
                        let cc = reflect(col as isize + 1 - j, 6) as usize;
                        acc += p.kappa_up[1].get(i as usize, j as usize) * merged.get(rr, cc);
                    }
                }
                (1.0 + acc.exp()).ln()
            });
            assert!(out.channel(c).max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn projection_cases() {
        let p = UpsampleParams::seeded(1, 3, 3, Activation::Relu, 5).unwrap();
        let zero = output_projection(&FeatureStack::zeros(3, 4, 4), &p).unwrap();
        assert!(zero.data().iter().all(|&v| v == p.b_out));

        let mut single = UpsampleParams::seeded(1, 1, 3, Activation::Relu, 5).unwrap();
        single.kappa_out = vec![Field2D::filled(1, 1, 1.0)];
        let f = Field2D::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        let out = output_projection(&FeatureStack::from_field(f.clone()), &single).unwrap();
        assert_eq!(out, f.map(|v| v + single.b_out));

        let mut rng = Rng::new(6);
        let feats = random_stack(&mut rng, 3, 5, -1.0);
        let out = output_projection(&feats, &p).unwrap();
        let mut expect = Field2D::filled(5, 5, p.b_out);
        for c in 0..3 {
            expect = expect.add(&convolve2(feats.channel(c), &p.kappa_out[c]).unwrap());
        }
        assert!(out.max_abs_diff(&expect) < 1e-14);
        assert!(output_projection(&FeatureStack::zeros(2, 4, 4), &p).is_err());
    }

    #[test]
    fn decode_doubles_per_level() {
        let mut rng = Rng::new(7);
        let p = UpsampleParams::seeded(2, 2, 3, Activation::Softplus, 1).unwrap();
        let pyramid = vec![
            random_stack(&mut rng, 2, 4, 0.0),
            random_stack(&mut rng, 2, 8, 0.0),
            random_stack(&mut rng, 2, 16, 0.0),
        ];
        assert_eq!(decode(&pyramid, &p).unwrap().dims(), (16, 16));
        assert!(decode(&pyramid[..2], &p).is_err());
        assert!(upsample_level(&pyramid[0], &pyramid[2], &p, 0).is_err());
    }

    #[test]
    fn smoothing_kernel_keeps_consistent_structure() {
        let mut p = UpsampleParams::seeded(1, 1, 3, Activation::Relu, 0).unwrap();
        p.kappa_up = vec![binomial()];
        let report = cross_scale_check(&p, 16).unwrap();
        assert!(report.low_correlation >= 0.99, "{report:?}");
        assert!(report.high_relative_gain < 0.1, "{report:?}");
    }
}
