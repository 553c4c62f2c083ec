//! The dual-path perturbation-dissipation block.
//!
//! ```text
//! F_A  = φ(κ_A ⊛ ∂²I/∂x∂y + b_A)                 spatial diffusion
//! F_B  = φ(softmax(QKᵀ) V + b_B)                  semantic attenuation
//! (low, high) = frequency split of F_A            hard radial mask
//! F_A′ = F_A (1 + α_c),  α_c = σ(W2 φ(W1 s_c))    s_c = mean |∇low + ∇high|
//! F̃   = σ(mean g_c) g_c,  g = F_A′ + F_B          channel fusion
//! Z    = concat_h(A_h V_h) + F̃                    derivative attention
//! ```
//!
//! Parameters are untrained and drawn from a seed. Setting
//! [`SplitSource::Concat`] splits `[F_A; F_B]` instead of `F_A` alone.

mod frequency;
mod fusion;
mod params;
mod paths;

pub use frequency::{frequency_split, FrequencyMask};
pub use fusion::{
    channel_attention_fuse, channel_gate, derivative_attention, gate_alphas, gate_response, gate_statistics,
    row_derivative, ATTENTION_EPS,
};
pub use params::{sigmoid, Activation, BlockConfig, BlockParams, Matrix, SplitSource};
pub use paths::{semantic_attention_weights, semantic_attenuation_path, spatial_diffusion_path};

use crate::error::Result;
use crate::numerics::FeatureStack;

/// Every intermediate of one pass through the block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    pub f_a: FeatureStack,
    pub f_b: FeatureStack,
    pub low: FeatureStack,
    pub high: FeatureStack,
    pub f_a_gated: FeatureStack,
    pub fused: FeatureStack,
    pub z: FeatureStack,
}

pub fn run_block(input: &FeatureStack, params: &BlockParams) -> Result<BlockTrace> {
    let f_a = spatial_diffusion_path(input, params)?;
    let f_b = semantic_attenuation_path(input, params)?;
    let (h, w) = input.dims();
    let mask = FrequencyMask::radial(h, w, params.config.freq_cutoff)?;
    let split_input = match params.config.split_source {
        SplitSource::FaOnly => f_a.clone(),
        SplitSource::Concat => FeatureStack::new(f_a.channels().iter().chain(f_b.channels()).cloned().collect())?,
    };
    let (low, high) = frequency_split(&split_input, &mask)?;
    let f_a_gated = channel_gate(&f_a, &low, &high, params)?;
    let fused = channel_attention_fuse(&f_a_gated, &f_b)?;
    let z = derivative_attention(&fused, params)?;
    Ok(BlockTrace {
        f_a,
        f_b,
        low,
        high,
        f_a_gated,
        fused,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::numerics::{convolve2, dft2, mixed_second_derivative, Field2D, Rng};

    fn random_stack(rng: &mut Rng, c: usize, h: usize, w: usize) -> FeatureStack {
        FeatureStack::new((0..c).map(|_| rng.uniform_field(h, w, -1.0, 1.0)).collect()).unwrap()
    }

    fn params(c: usize, heads: usize, act: Activation, seed: u64) -> BlockParams {
        BlockParams::seeded(
            BlockConfig {
                channels: c,
                heads,
                activation: act,
                ..BlockConfig::default()
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn diffusion_on_constant_input_is_activated_bias() {
        let p = params(2, 1, Activation::Softplus, 1);
        let input = FeatureStack::new(vec![Field2D::filled(5, 6, 3.0), Field2D::filled(5, 6, -1.0)]).unwrap();
        let out = spatial_diffusion_path(&input, &p).unwrap();
        for c in 0..2 {
            let expect = Activation::Softplus.apply(p.b_a[c]);
            assert!(out.channel(c).data().iter().all(|&v| (v - expect).abs() < 1e-15));
        }
        let mut zero_bias = p.clone();
        zero_bias.b_a = vec![0.0; 2];
        let out = spatial_diffusion_path(&FeatureStack::zeros(2, 4, 4), &zero_bias).unwrap();
        assert!(out
            .channel(1)
            .data()
            .iter()
            .all(|&v| (v - std::f64::consts::LN_2).abs() < 1e-15));
    }

    #[test]
    fn diffusion_matches_composition_oracle() {
        let mut rng = Rng::new(5);
        let p = params(1, 1, Activation::Softplus, 3);
        let input = random_stack(&mut rng, 1, 8, 8);
        let out = spatial_diffusion_path(&input, &p).unwrap();
        let d = mixed_second_derivative(input.channel(0)).unwrap();
        let conv = convolve2(&d, &p.kappa_a[0]).unwrap();
        let oracle = conv.map(|v| {
            let x = v + p.b_a[0];
            (1.0 + x.exp()).ln()
        });
        assert!(out.channel(0).max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn diffusion_rejects_channel_mismatch() {
        let p = params(2, 1, Activation::Relu, 1);
        let input = FeatureStack::zeros(3, 4, 4);
        assert!(matches!(
            spatial_diffusion_path(&input, &p),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_queries_give_uniform_attention() {
        let mut rng = Rng::new(8);
        let mut p = params(2, 1, Activation::Softplus, 4);
        p.w_q = Matrix::zeros(2, p.config.attn_dim);
        let input = random_stack(&mut rng, 2, 3, 4);
        let out = semantic_attenuation_path(&input, &p).unwrap();
        for c in 0..2 {
            let mean_v: f64 = (0..12)
                .map(|x| {
                    (0..2)
                        .map(|i| input.channel(i).data()[x] * p.w_v.get(i, c))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / 12.0;
            let expect = Activation::Softplus.apply(mean_v + p.b_b[c]);
            assert!(out.channel(c).data().iter().all(|&v| (v - expect).abs() < 1e-12));
        }
    }

    #[test]
    fn single_pixel_attention_passes_values_through() {
        let p = params(2, 1, Activation::Relu, 6);
        let input = FeatureStack::new(vec![Field2D::filled(1, 1, 0.7), Field2D::filled(1, 1, -0.3)]).unwrap();
        let out = semantic_attenuation_path(&input, &p).unwrap();
        for c in 0..2 {
            let v = 0.7 * p.w_v.get(0, c) - 0.3 * p.w_v.get(1, c);
            assert!((out.channel(c).get(0, 0) - (v + p.b_b[c]).max(0.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn attention_matches_double_loop_oracle() {
        let mut rng = Rng::new(21);
        let p = params(2, 1, Activation::Softplus, 7);
        let input = random_stack(&mut rng, 2, 4, 4);
        let out = semantic_attenuation_path(&input, &p).unwrap();
        let n = 16;
        let feat = |x: usize| [input.channel(0).data()[x], input.channel(1).data()[x]];
        let proj = |f: [f64; 2], m: &Matrix, j: usize| f[0] * m.get(0, j) + f[1] * m.get(1, j);
        for x in 0..n {
            let mut weights = vec![0.0; n];
            for x2 in 0..n {
                let s: f64 = (0..p.config.attn_dim)
                    .map(|j| proj(feat(x), &p.w_q, j) * proj(feat(x2), &p.w_k, j))
                    .sum();
                weights[x2] = s.exp();
            }
            let z: f64 = weights.iter().sum();
            for c in 0..2 {
                let o: f64 = (0..n).map(|x2| weights[x2] / z * proj(feat(x2), &p.w_v, c)).sum();
                let expect = (1.0 + (o + p.b_b[c]).exp()).ln();
                assert!((out.channel(c).data()[x] - expect).abs() < 1e-10);
            }
        }
        let a = semantic_attention_weights(&input, &p).unwrap();
        for x in 0..n {
            let s: f64 = a.row(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_partitions_and_respects_cutoff() {
        let mut rng = Rng::new(2);
        let input = random_stack(&mut rng, 2, 10, 12);
        let mask = FrequencyMask::radial(10, 12, 0.25).unwrap();
        let (low, high) = frequency_split(&input, &mask).unwrap();
        for c in 0..2 {
            assert!(low.channel(c).add(high.channel(c)).max_abs_diff(input.channel(c)) <= 1e-10);
        }
        let pass = FrequencyMask::from_field(Field2D::filled(10, 12, 1.0)).unwrap();
        let (_, high) = frequency_split(&input, &pass).unwrap();
        assert!(high.iter().all(|ch| ch.data().iter().all(|v| v.abs() < 1e-15)));
    }

    #[test]
    fn sinusoid_above_cutoff_has_no_low_band() {
        let n = 20;
        let f = Field2D::from_fn(n, n, |_, c| (std::f64::consts::TAU * 0.4 * c as f64).cos());
        let mask = FrequencyMask::radial(n, n, 0.2).unwrap();
        let (low, _) = frequency_split(&FeatureStack::from_field(f.clone()), &mask).unwrap();
        assert!(low.channel(0).norm_sq() <= 1e-8 * f.norm_sq());
        assert!(dft2(&f).energy() > 0.0);
    }

    #[test]
    fn asymmetric_mask_rejected() {
        let mut m = Field2D::zeros(8, 8);
        m.set(0, 1, 1.0);
        assert!(matches!(FrequencyMask::from_field(m), Err(Error::InvalidArgument(_))));
        assert!(FrequencyMask::radial(8, 8, 0.0).is_err());
        assert!(FrequencyMask::radial(8, 8, 0.6).is_err());
    }

    #[test]
    fn gate_at_zero_statistic_with_relu_is_half() {
        let p = params(2, 1, Activation::Relu, 11);
        let f_a = FeatureStack::new(vec![Field2D::filled(4, 4, 2.0), Field2D::filled(4, 4, -1.0)]).unwrap();
        let flat = FeatureStack::new(vec![Field2D::filled(4, 4, 0.3); 2]).unwrap();
        let gated = channel_gate(&f_a, &flat, &flat, &p).unwrap();
        assert!(gated.channel(0).data().iter().all(|&v| v == 3.0));
        assert!(gated.channel(1).data().iter().all(|&v| v == -1.5));
    }

    #[test]
    fn gate_matches_scalar_chain_oracle() {
        let mut rng = Rng::new(13);
        let p = params(2, 1, Activation::Softplus, 12);
        let f_a = random_stack(&mut rng, 2, 6, 6);
        let low = random_stack(&mut rng, 2, 6, 6);
        let high = random_stack(&mut rng, 2, 6, 6);
        let gated = channel_gate(&f_a, &low, &high, &p).unwrap();
        for c in 0..2 {
            let sum = low.channel(c).add(high.channel(c));
            // Explicit stencil for |∇(low + high)|.
            let mut s = 0.0;
            for r in 0..6 {
                for col in 0..6 {
                    let gx = match col {
                        0 => sum.get(r, 1) - sum.get(r, 0),
                        5 => sum.get(r, 5) - sum.get(r, 4),
                        _ => 0.5 * (sum.get(r, col + 1) - sum.get(r, col - 1)),
                    };
                    let gy = match r {
                        0 => sum.get(1, col) - sum.get(0, col),
                        5 => sum.get(5, col) - sum.get(4, col),
                        _ => 0.5 * (sum.get(r + 1, col) - sum.get(r - 1, col)),
                    };
                    s += (gx * gx + gy * gy).sqrt();
                }
            }
            s /= 36.0;
            let mut z = 0.0;
            for j in 0..p.w1.len() {
                z += p.w2[j] * (1.0 + (p.w1[j] * s).exp()).ln();
            }
            let alpha = 1.0 / (1.0 + (-z).exp());
            let expect = f_a.channel(c).scale(1.0 + alpha);
            assert!(gated.channel(c).max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn fusion_limits_and_oracle() {
        let zero = FeatureStack::zeros(2, 3, 3);
        assert_eq!(channel_attention_fuse(&zero, &zero).unwrap(), zero);
        let big = FeatureStack::new(vec![Field2D::filled(3, 3, 60.0), Field2D::filled(3, 3, 40.0)]).unwrap();
        let out = channel_attention_fuse(&big, &big).unwrap();
        assert!(out.channel(0).data().iter().all(|&v| (v - 120.0).abs() < 1e-4));

        let mut rng = Rng::new(4);
        let a = random_stack(&mut rng, 3, 4, 5);
        let b = random_stack(&mut rng, 3, 4, 5);
        let out = channel_attention_fuse(&a, &b).unwrap();
        for c in 0..3 {
            let g = a.channel(c).add(b.channel(c));
            let m = 1.0 / (1.0 + (-g.sum() / 20.0).exp());
            assert!(out.channel(c).max_abs_diff(&g.scale(m)) < 1e-14);
        }
    }

    #[test]
    fn derivative_attention_degenerate_cases() {
        let mut rng = Rng::new(15);
        let input = random_stack(&mut rng, 4, 3, 5);
        let mut p = params(4, 2, Activation::Softplus, 5);
        p.w_vd = Matrix::zeros(4, 4);
        assert_eq!(derivative_attention(&input, &p).unwrap(), input);

        let mut p = params(4, 2, Activation::Softplus, 5);
        p.w_qd = Matrix::zeros(4, 4);
        p.w_kd = Matrix::zeros(4, 4);
        let z = derivative_attention(&input, &p).unwrap();
        let n = 15.0;
        for c in 0..4 {
            let mean_v: f64 = (0..15)
                .map(|x| {
                    (0..4)
                        .map(|i| input.channel(i).data()[x] * p.w_vd.get(i, c))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / n;
            let o = z.channel(c).sub(input.channel(c));
            assert!(o.data().iter().all(|&v| (v - mean_v).abs() < 1e-8));
        }
    }

    #[test]
    fn derivative_attention_matches_loop_oracle() {
        let mut rng = Rng::new(16);
        let (h, w) = (3, 4);
        let input = random_stack(&mut rng, 4, h, w);
        let p = params(4, 2, Activation::Softplus, 9);
        let z = derivative_attention(&input, &p).unwrap();
        let feat = |x: usize| -> Vec<f64> { (0..4).map(|c| input.channel(c).data()[x]).collect() };
        let proj =
            |m: &Matrix, x: usize, j: usize| -> f64 { feat(x).iter().enumerate().map(|(i, v)| v * m.get(i, j)).sum() };
        // ∂ along the row: neighbours in the same image row.
        let deriv = |m: &Matrix, x: usize, j: usize| -> f64 {
            let (r, c) = (x / w, x % w);
            if c == 0 {
                proj(m, r * w + 1, j) - proj(m, x, j)
            } else if c == w - 1 {
                proj(m, x, j) - proj(m, x - 1, j)
            } else {
                0.5 * (proj(m, x + 1, j) - proj(m, x - 1, j))
            }
        };
        for head in 0..2 {
            let cols: Vec<usize> = (head * 2..head * 2 + 2).collect();
            for x in 0..h * w {
                let scores: Vec<f64> = (0..h * w)
                    .map(|x2| {
                        let a: f64 = cols.iter().map(|&j| deriv(&p.w_qd, x, j) * proj(&p.w_kd, x2, j)).sum();
                        let b: f64 = cols.iter().map(|&j| proj(&p.w_qd, x, j) * deriv(&p.w_kd, x2, j)).sum();
                        a.exp() + b
                    })
                    .collect();
                let norm: f64 = scores.iter().map(|s| s.abs()).sum::<f64>() + 1e-8;
                for &j in &cols {
                    let o: f64 = (0..h * w).map(|x2| scores[x2] / norm * proj(&p.w_vd, x2, j)).sum();
                    let expect = o + input.channel(j).data()[x];
                    assert!((z.channel(j).data()[x] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn chain_is_deterministic_and_concat_switch_runs() {
        let mut rng = Rng::new(30);
        let input = random_stack(&mut rng, 4, 8, 8);
        let p = params(4, 2, Activation::Softplus, 1);
        let a = run_block(&input, &p).unwrap();
        let b = run_block(&input, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.low.num_channels(), 4);
        let mut pc = p.clone();
        pc.config.split_source = SplitSource::Concat;
        let c = run_block(&input, &pc).unwrap();
        assert_eq!(c.low.num_channels(), 8);
        assert_eq!(c.z.num_channels(), 4);
    }
}
