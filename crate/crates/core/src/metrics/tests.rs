use super::*;
use crate::rng::SplitMix64;
use proptest::prelude::*;

fn random_image(rows: usize, cols: usize, rng: &mut SplitMix64) -> Field {
    Field::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0))
}

/// Direct per-window evaluation with two-pass moments and an independently
/// built 2D weight table.
fn ssim_oracle(a: &Field, b: &Field, cfg: &SsimConfig) -> f64 {
    let n = cfg.window.size();
    let w2: Vec<f64> = match cfg.window {
        SsimWindow::Uniform { .. } => vec![1.0 / (n * n) as f64; n * n],
        SsimWindow::Gaussian { sigma, .. } => {
            let c = (n / 2) as f64;
            let raw: Vec<f64> = (0..n * n)
                .map(|k| {
                    let (dy, dx) = ((k / n) as f64 - c, (k % n) as f64 - c);
                    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
                })
                .collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        }
    };
    let all: Vec<f64> = a.as_slice().iter().chain(b.as_slice()).copied().collect();
    let hi = all.iter().cloned().fold(f64::MIN, f64::max);
    let lo = all.iter().cloned().fold(f64::MAX, f64::min);
    let l = cfg.dynamic_range.unwrap_or(hi - lo);
    let (c1, c2) = ((cfg.k1 * l).powi(2), (cfg.k2 * l).powi(2));
    let (rows, cols) = a.shape();
    let mut total = 0.0;
    let mut count = 0;
    for j in 0..=rows - n {
        for i in 0..=cols - n {
            let at = |f: &Field, k: usize| f[(j + k / n, i + k % n)];
            let ma: f64 = (0..n * n).map(|k| w2[k] * at(a, k)).sum();
            let mb: f64 = (0..n * n).map(|k| w2[k] * at(b, k)).sum();
            let va: f64 = (0..n * n).map(|k| w2[k] * (at(a, k) - ma).powi(2)).sum();
            let vb: f64 = (0..n * n).map(|k| w2[k] * (at(b, k) - mb).powi(2)).sum();
            let cov: f64 = (0..n * n)
                .map(|k| w2[k] * (at(a, k) - ma) * (at(b, k) - mb))
                .sum();
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn ssim_of_identical_images_is_one() {
    let mut rng = SplitMix64::new(11);
    for _ in 0..20 {
        let x = random_image(64, 64, &mut rng);
        let s = ssim(&x, &x, &SsimConfig::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "{s}");
    }
}

#[test]
fn ssim_matches_window_oracle() {
    let mut rng = SplitMix64::new(12);
    for cfg in [SsimConfig::default(), SsimConfig::uniform(7)] {
        for _ in 0..10 {
            let a = random_image(64, 64, &mut rng);
            let b = Field::from_fn(64, 64, |j, i| {
                0.6 * a[(j, i)] + 0.4 * rng.uniform(-1.0, 1.0)
            });
            let got = ssim(&a, &b, &cfg).unwrap();
            let want = ssim_oracle(&a, &b, &cfg);
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }
}

#[test]
fn ssim_of_negated_oscillating_image_is_negative() {
    // Local means are near zero, so only the structure term changes sign.
    let checker = Field::from_fn(32, 32, |j, i| if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
    let modulated = Field::from_fn(32, 32, |j, i| {
        checker[(j, i)] * (1.0 + 0.5 * (i as f64 / 5.0).sin())
    });
    let cfg = SsimConfig::default();
    for x in [checker, modulated] {
        let neg = x.map(|v| -v);
        let s = ssim(&x, &neg, &cfg).unwrap();
        assert!(s < 0.0, "{s}");
        assert!((s - ssim_oracle(&x, &neg, &cfg)).abs() < 1e-6);
    }
}

#[test]
fn ssim_of_negated_white_noise_can_be_positive() {
    // Local means of noise exceed sqrt(C1 / 2), so the luminance term flips too.
    let mut rng = SplitMix64::new(13);
    let x = random_image(32, 32, &mut rng);
    let mean = x.as_slice().iter().sum::<f64>() / 1024.0;
    let x = x.map(|v| v - mean);
    let neg = x.map(|v| -v);
    let cfg = SsimConfig::default();
    let s = ssim(&x, &neg, &cfg).unwrap();
    assert!((s - ssim_oracle(&x, &neg, &cfg)).abs() < 1e-6);
    assert!(s > 0.0, "{s}");
}

#[test]
fn ssim_decreases_with_noise_level() {
    let eps = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
    for seed in 0..20 {
        let mut rng = SplitMix64::new(100 + seed);
        let a = random_image(48, 48, &mut rng);
        let noise = Field::from_fn(48, 48, |_, _| rng.normal());
        let scores: Vec<f64> = eps
            .iter()
            .map(|e| {
                let b = Field::from_fn(48, 48, |j, i| a[(j, i)] + e * noise[(j, i)]);
                ssim(&a, &b, &SsimConfig::default()).unwrap()
            })
            .collect();
        assert!(
            scores.windows(2).all(|p| p[1] < p[0]),
            "seed {seed}: {scores:?}"
        );
    }
}

#[test]
fn ssim_rejects_bad_inputs() {
    let cfg = SsimConfig::default();
    let a = Field::zeros(20, 20);
    assert!(matches!(
        ssim(&a, &Field::zeros(20, 21), &cfg),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        ssim(&Field::zeros(10, 20), &Field::zeros(10, 20), &cfg),
        Err(Error::TooSmall(_))
    ));
    let mut nan = a.clone();
    nan[(3, 3)] = f64::NAN;
    assert!(ssim(&a, &nan, &cfg).is_err());
    assert!(ssim(&a, &a, &SsimConfig::uniform(8)).is_err());
    assert!(ssim(&a, &a, &SsimConfig { k1: 0.0, ..cfg }).is_err());
    // Same constant image: range falls back to 1 and the score is 1.
    assert_eq!(ssim(&a, &a, &cfg).unwrap(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ssim_is_symmetric_and_bounded(seed in any::<u64>(), rows in 11usize..30, cols in 11usize..30, scale in 0.01f64..100.0) {
        let mut rng = SplitMix64::new(seed);
        let a = Field::from_fn(rows, cols, |_, _| scale * rng.normal());
        let b = Field::from_fn(rows, cols, |_, _| scale * rng.normal());
        let cfg = SsimConfig::default();
        let ab = ssim(&a, &b, &cfg).unwrap();
        let ba = ssim(&b, &a, &cfg).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }
}

#[test]
fn pixel_loss_examples() {
    let mut rng = SplitMix64::new(14);
    let a = random_image(17, 23, &mut rng);
    assert_eq!(pixel_loss(&a, &a, PixelNorm::L1).unwrap(), 0.0);
    assert_eq!(pixel_loss(&a, &a, PixelNorm::L2).unwrap(), 0.0);
    let shifted = a.map(|v| v - 0.75);
    assert!((pixel_loss(&a, &shifted, PixelNorm::L1).unwrap() - 0.75).abs() < 1e-12);

    let b = random_image(17, 23, &mut rng);
    let mut sq = 0.0;
    for j in 0..17 {
        for i in 0..23 {
            sq += (a[(j, i)] - b[(j, i)]).powi(2);
        }
    }
    let rms = (sq / (17.0 * 23.0)).sqrt();
    assert!((pixel_loss(&a, &b, PixelNorm::L2).unwrap() - rms).abs() < 1e-12);
    assert!(pixel_loss(&a, &Field::zeros(17, 22), PixelNorm::L1).is_err());
}

#[test]
fn kernels_behave_on_simple_fields() {
    let ramp = Field::from_fn(9, 12, |j, i| 3.0 * i as f64 - 2.0 * j as f64);
    let gx = Kernel::gradient_x().apply(&ramp);
    let gz = Kernel::gradient_z().apply(&ramp);
    for j in 1..8 {
        for i in 1..11 {
            assert!((gx[(j, i)] - 3.0).abs() < 1e-12);
            assert!((gz[(j, i)] + 2.0).abs() < 1e-12);
        }
    }
    // Replicated edge: one-sided half difference.
    assert!((gx[(4, 0)] - 1.5).abs() < 1e-12);
    let c = Field::filled(8, 8, 2.5);
    let blurred = Kernel::binomial5().apply(&c);
    assert!(blurred.as_slice().iter().all(|v| (v - 2.5).abs() < 1e-12));
    assert_eq!(Kernel::identity().apply(&ramp), ramp);
    assert!(Kernel::new(2, 3, vec![0.0; 6]).is_err());
    assert!(Kernel::new(3, 3, vec![0.0; 8]).is_err());
}

#[test]
fn default_extractor_shapes() {
    let ext = FeatureExtractor::default();
    let f = ext.features(&Field::zeros(64, 48)).unwrap();
    let shapes: Vec<(usize, (usize, usize))> = f.iter().map(|s| (s.len(), s[0].shape())).collect();
    assert_eq!(shapes, vec![(3, (64, 48)), (9, (32, 24)), (27, (16, 12))]);
    assert!(matches!(
        ext.features(&Field::zeros(11, 64)),
        Err(Error::TooSmall(_))
    ));
    assert!(ext.features(&Field::zeros(12, 12)).is_ok());
    assert!(FeatureExtractor::new(vec![]).is_err());
}

#[test]
fn identity_extractor_gives_unnormalized_l2() {
    let mut rng = SplitMix64::new(15);
    for _ in 0..10 {
        let a = random_image(30, 40, &mut rng);
        let b = random_image(30, 40, &mut rng);
        let direct: f64 = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let f = feature_loss(&a, &b, &FeatureExtractor::identity()).unwrap();
        assert!((f - direct).abs() < 1e-9);
    }
}

#[test]
fn feature_loss_is_symmetric_and_separates_images() {
    let mut rng = SplitMix64::new(16);
    let ext = FeatureExtractor::default();
    for _ in 0..10 {
        let a = random_image(32, 32, &mut rng);
        let b = random_image(32, 32, &mut rng);
        let ab = feature_loss(&a, &b, &ext).unwrap();
        assert!((ab - feature_loss(&b, &a, &ext).unwrap()).abs() < 1e-12);
        assert!(ab > 0.0);
        assert_eq!(feature_loss(&a, &a, &ext).unwrap(), 0.0);
        let mut c = a.clone();
        let (j, i) = (rng.range_inclusive(0, 31), rng.range_inclusive(0, 31));
        c[(j, i)] += 1e-6;
        assert!(feature_loss(&a, &c, &ext).unwrap() > 0.0);
    }
}

#[test]
fn combined_loss_examples() {
    let mut rng = SplitMix64::new(17);
    let a = random_image(24, 24, &mut rng);
    let b = random_image(24, 24, &mut rng);
    let ext = FeatureExtractor::default();
    for norm in [PixelNorm::L1, PixelNorm::L2] {
        assert_eq!(
            combined_loss(&a, &b, 0.0, &ext, norm).unwrap(),
            pixel_loss(&a, &b, norm).unwrap()
        );
        assert_eq!(combined_loss(&a, &a, 3.0, &ext, norm).unwrap(), 0.0);
    }
    let id = FeatureExtractor::identity();
    let p = pixel_loss(&a, &b, PixelNorm::L2).unwrap();
    let c = combined_loss(&a, &b, 1.0, &id, PixelNorm::L2).unwrap();
    assert!((c - p * (1.0 + (576.0f64).sqrt())).abs() < 1e-9);
}
