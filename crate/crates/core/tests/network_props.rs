use irr_core::dissipation::Activation;
use irr_core::dissipation::{
    channel_gate, derivative_attention, frequency_split, gate_alphas, run_block, semantic_attention_weights,
    BlockConfig, BlockParams, FrequencyMask, Matrix,
};
use irr_core::icsr::{batch_loss, cosine_similarity, BatchSite, LossConfig, SemanticEmbedding};
use irr_core::numerics::{FeatureStack, Field2D, Rng};
use irr_core::upsampler::{decode, output_projection, UpsampleParams};
use proptest::prelude::*;

fn stack(c: usize, h: usize, w: usize, seed: u64) -> FeatureStack {
    let mut rng = Rng::new(seed);
    FeatureStack::new((0..c).map(|_| rng.uniform_field(h, w, -1.0, 1.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn attention_rows_are_distributions(seed in any::<u64>(), h in 2usize..6, w in 2usize..6) {
        let params = BlockParams::seeded(BlockConfig::default(), seed).unwrap();
        let a = semantic_attention_weights(&stack(4, h, w, seed ^ 7), &params).unwrap();
        for r in 0..h * w {
            let row = a.row(r);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn frequency_split_partitions(seed in any::<u64>(), h in 2usize..12, w in 2usize..12, cutoff in 0.01f64..0.5) {
        let s = stack(3, h, w, seed);
        let mask = FrequencyMask::radial(h, w, cutoff).unwrap();
        let (low, high) = frequency_split(&s, &mask).unwrap();
        let sum = low.zip_map(&high, |a, b| a + b);
        for (a, b) in sum.iter().zip(s.iter()) {
            prop_assert!(a.max_abs_diff(b) <= 1e-10);
        }
    }

    #[test]
    fn gate_scale_in_open_interval(seed in any::<u64>(), amp in 0.0f64..50.0) {
        let params = BlockParams::seeded(BlockConfig::default(), seed).unwrap();
        let f = stack(4, 6, 6, seed ^ 3).map(|v| amp * v);
        let mask = FrequencyMask::radial(6, 6, 0.25).unwrap();
        let (low, high) = frequency_split(&f, &mask).unwrap();
        for a in gate_alphas(&f, &low, &high, &params).unwrap() {
            prop_assert!(a > 0.0 && a < 1.0);
        }
        let gated = channel_gate(&f, &low, &high, &params).unwrap();
        for (g, x) in gated.iter().zip(f.iter()) {
            for (gv, xv) in g.data().iter().zip(x.data()) {
                prop_assert!(gv.abs() >= xv.abs() && gv.abs() <= 2.0 * xv.abs());
            }
        }
    }

    #[test]
    fn zero_value_projection_is_identity(seed in any::<u64>()) {
        let mut params = BlockParams::seeded(BlockConfig::default(), seed).unwrap();
        params.w_vd = Matrix::zeros(4, 4);
        let f = stack(4, 4, 5, seed ^ 9);
        prop_assert_eq!(derivative_attention(&f, &params).unwrap(), f);
    }

    #[test]
    fn block_is_deterministic(seed in any::<u64>()) {
        let params = BlockParams::seeded(BlockConfig::default(), seed).unwrap();
        let input = stack(4, 8, 8, seed);
        prop_assert_eq!(run_block(&input, &params).unwrap(), run_block(&input, &params).unwrap());
    }

    #[test]
    fn projection_is_affine(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let p = UpsampleParams::seeded(1, 3, 3, Activation::Relu, seed).unwrap();
        let f = stack(3, 6, 6, seed ^ 1);
        let g = stack(3, 6, 6, seed ^ 2);
        let combo = f.zip_map(&g, |x, y| a * x + b * y);
        let lhs = output_projection(&combo, &p).unwrap();
        let rhs = output_projection(&f, &p).unwrap().scale(a)
            .add(&output_projection(&g, &p).unwrap().scale(b))
            .map(|v| v - (a + b - 1.0) * p.b_out);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn decode_dims_contract(levels in 1usize..4, base in 2usize..5, seed in any::<u64>()) {
        let p = UpsampleParams::seeded(levels, 2, 3, Activation::Softplus, seed).unwrap();
        let pyramid: Vec<FeatureStack> = (0..=levels).map(|i| stack(2, base << i, base << i, seed + i as u64)).collect();
        prop_assert_eq!(decode(&pyramid, &p).unwrap().dims(), (base << levels, base << levels));
    }

    #[test]
    fn cosine_is_bounded(p in prop::collection::vec(-1e3f64..1e3, 1..8), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let r: Vec<f64> = p.iter().map(|_| rng.normal(0.0, 10.0)).collect();
        let s = cosine_similarity(&p, &r, 1e-8);
        prop_assert!(s > -1.0 && s < 1.0);
    }

    #[test]
    fn loss_bounds(seed in any::<u64>(), alpha in 1.0f64..3.0, lambda in 0.0f64..1.0, n in 1usize..6) {
        let mut rng = Rng::new(seed);
        let d = 3;
        let data = |rng: &mut Rng| (0..2 * 2 * d).map(|_| rng.normal(0.0, 1.0)).collect::<Vec<_>>();
        let p = SemanticEmbedding::new(1, 2, 2, d, data(&mut rng)).unwrap();
        let r = SemanticEmbedding::new(1, 2, 2, d, data(&mut rng)).unwrap();
        let theta: Vec<f64> = (0..3).map(|_| rng.normal(0.0, 1.0)).collect();
        let reg = lambda * theta.iter().map(|t| t * t).sum::<f64>();
        let cfg = LossConfig { eps: 1e-8, alpha, lambda, theta };
        let batch: Vec<BatchSite> = (0..n).map(|i| BatchSite { channel: 0, row: i % 2, col: (i / 2) % 2 }).collect();
        let l = batch_loss(&p, &r, &cfg, &batch).unwrap();
        prop_assert!(l >= reg - 1e-12);
        prop_assert!(l <= 2f64.powf(alpha) + reg + 1e-12);
    }
}

#[test]
fn cutoff_outside_range_is_rejected() {
    assert!(FrequencyMask::radial(8, 8, 0.0).is_err());
    assert!(FrequencyMask::radial(8, 8, 0.6).is_err());
    let asym = Field2D::from_fn(4, 4, |r, c| if (r, c) == (1, 0) { 1.0 } else { 0.0 });
    assert!(FrequencyMask::from_field(asym).is_err());
}

#[test]
fn high_frequency_perturbations_miss_the_low_band() {
    let n = 16;
    let t = std::f64::consts::TAU / n as f64;
    let modes = [(6usize, 5usize), (8, 0), (0, 7), (5, 5), (7, 3)];
    let mut gains = Vec::new();
    for seed in 0..20u64 {
        let mut rng = Rng::new(seed);
        let smooth: Vec<Field2D> = (0..4)
            .map(|_| {
                let (a, p) = (rng.uniform(0.1, 0.3), rng.uniform(0.0, 6.0));
                Field2D::from_fn(n, n, |r, c| 0.5 + a * (t * r as f64 + p).sin() * (t * c as f64).cos())
            })
            .collect();
        let input = FeatureStack::new(smooth).unwrap();
        let raw: Vec<Field2D> = (0..4)
            .map(|_| {
                let (u, v) = modes[rng.range(0, modes.len())];
                let p = rng.uniform(0.0, 6.0);
                Field2D::from_fn(n, n, |r, c| (t * (u * r + v * c) as f64 + p).cos())
            })
            .collect();
        let raw = FeatureStack::new(raw).unwrap();
        let delta = raw.map(|v| v * 0.1 * input.norm() / raw.norm());
        let perturbed = input.zip_map(&delta, |a, b| a + b);

        let mask = FrequencyMask::radial(n, n, 0.25).unwrap();
        let (low, _) = frequency_split(&input, &mask).unwrap();
        let (low_p, _) = frequency_split(&perturbed, &mask).unwrap();
        let leak = low_p.zip_map(&low, |a, b| a - b).norm() / delta.norm();
        assert!(leak <= 1e-6, "seed {seed}: low-band leak {leak:e}");

        let params = BlockParams::seeded(BlockConfig::default(), seed).unwrap();
        let z = run_block(&input, &params).unwrap().z;
        let z_p = run_block(&perturbed, &params).unwrap().z;
        gains.push(z_p.zip_map(&z, |a, b| a - b).norm() / delta.norm());
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let max = gains.iter().copied().fold(0.0, f64::max);
    println!("full-chain perturbation gain: mean {mean:.4}, max {max:.4}");
    assert!(gains.iter().all(|g| g.is_finite()));
}
