use irr_core::numerics::{bilinear_upsample, convolve2, dft2, grad_components, idft2, FeatureStack, Field2D, Rng};
use proptest::prelude::*;

fn field(h: usize, w: usize, seed: u64) -> Field2D {
    Rng::new(seed).uniform_field(h, w, -1.0, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fft_round_trip(h in 1usize..20, w in 1usize..20, seed in any::<u64>()) {
        let f = field(h, w, seed);
        let back = idft2(&dft2(&f));
        prop_assert!(back.max_abs_diff(&f) <= 1e-12);
    }

    #[test]
    fn fft_is_linear(h in 1usize..12, w in 1usize..12, seed in any::<u64>(), a in -3.0f64..3.0) {
        let f = field(h, w, seed);
        let g = field(h, w, seed ^ 1);
        let lhs = dft2(&f.scale(a).add(&g));
        let (sf, sg) = (dft2(&f), dft2(&g));
        for ((l, x), y) in lhs.data().iter().zip(sf.data()).zip(sg.data()) {
            prop_assert!((l - (x * a + y)).norm() <= 1e-10);
        }
    }

    #[test]
    fn parseval(h in 1usize..16, w in 1usize..16, seed in any::<u64>()) {
        let f = field(h, w, seed);
        let spec = dft2(&f);
        let lhs = f.norm_sq();
        prop_assert!((spec.energy() / (h * w) as f64 - lhs).abs() <= 1e-10 * lhs.max(1.0));
    }

    #[test]
    fn convolution_is_linear(h in 3usize..14, w in 3usize..14, seed in any::<u64>(), a in -2.0f64..2.0) {
        let f = field(h, w, seed);
        let g = field(h, w, seed ^ 2);
        let k = field(3, 3, seed ^ 3);
        let lhs = convolve2(&f.scale(a).add(&g), &k).unwrap();
        let rhs = convolve2(&f, &k).unwrap().scale(a).add(&convolve2(&g, &k).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn delta_kernel_is_identity(h in 2usize..10, w in 2usize..10, seed in any::<u64>()) {
        let f = field(h, w, seed);
        let mut k = Field2D::zeros(3, 3);
        k.set(1, 1, 1.0);
        prop_assert_eq!(convolve2(&f, &k).unwrap(), f);
    }

    #[test]
    fn upsample_stays_in_envelope(h in 2usize..10, w in 2usize..10, factor in 1usize..4, seed in any::<u64>()) {
        let f = field(h, w, seed);
        let up = bilinear_upsample(&f, factor).unwrap();
        prop_assert_eq!(up.dims(), (h * factor, w * factor));
        prop_assert!(up.min() >= f.min() - 1e-12 && up.max() <= f.max() + 1e-12);
        let (uh, uw) = up.dims();
        for (r, c, ur, uc) in [(0, 0, 0, 0), (h - 1, w - 1, uh - 1, uw - 1), (0, w - 1, 0, uw - 1)] {
            prop_assert!((up.get(ur, uc) - f.get(r, c)).abs() <= 1e-12);
        }
    }

    #[test]
    fn gradients_of_affine_fields_are_exact(h in 2usize..12, w in 2usize..12, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let f = Field2D::from_fn(h, w, |r, c| a * c as f64 + b * r as f64);
        let (gx, gy) = grad_components(&f).unwrap();
        prop_assert!(gx.data().iter().all(|v| (v - a).abs() <= 1e-12));
        prop_assert!(gy.data().iter().all(|v| (v - b).abs() <= 1e-12));
    }
}

#[test]
fn substreams_are_independent_and_reproducible() {
    let root = Rng::new(99);
    let a: Vec<u64> = (0..4).map(|_| root.substream(1).next_u64()).collect();
    assert!(a.windows(2).all(|p| p[0] == p[1]));
    assert_ne!(root.substream(1).next_u64(), root.substream(2).next_u64());
}

#[test]
fn stack_shape_is_enforced() {
    assert!(FeatureStack::new(vec![Field2D::zeros(2, 2), Field2D::zeros(2, 3)]).is_err());
    assert!(FeatureStack::new(vec![]).is_err());
}
