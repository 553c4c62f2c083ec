use irr_core::dissipation::{BlockConfig, BlockParams};
use irr_core::io::{load_bundle, load_tensor, read_tensor, save_bundle, save_tensor, write_tensor, Tensor};
use irr_core::scenegen::{generate, make_split, Category, SceneSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_images_round_trip(seed in any::<u64>(), cat in 0usize..4, size_pow in 5u32..8) {
        let spec = SceneSpec::square(Category::ALL[cat], 1 << size_pow, seed);
        let img = generate(&spec).unwrap().image.into_field();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &Tensor::from(&img)).unwrap();
        let back = read_tensor(buf.as_slice()).unwrap().to_field().unwrap();
        prop_assert_eq!(back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        img.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn splits_are_disjoint_partitions(n in 10usize..300, seed in any::<u64>()) {
        let s = make_split(n, seed).unwrap();
        let mut seen = vec![false; n];
        for &i in s.train.iter().chain(&s.val).chain(&s.test) {
            prop_assert!(!seen[i]);
            seen[i] = true;
        }
        prop_assert!(seen.into_iter().all(|b| b));
        prop_assert_eq!(s.train.len(), (0.8 * n as f64).round() as usize);
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = generate(&SceneSpec::square(Category::Chart, 64, 3))
        .unwrap()
        .image
        .into_field();
    let path = dir.path().join("chart.irr");
    save_tensor(&path, &Tensor::from(&img)).unwrap();
    assert_eq!(load_tensor(&path).unwrap().to_field().unwrap(), img);

    let params = BlockParams::seeded(BlockConfig::default(), 5).unwrap();
    let bundle = dir.path().join("block.irr");
    save_bundle(&bundle, &params.to_records()).unwrap();
    let back = BlockParams::from_records(BlockConfig::default(), &load_bundle(&bundle).unwrap()).unwrap();
    assert_eq!(back, params);
}
