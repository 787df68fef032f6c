use super::*;
use crate::velmodel::{generate_model, LayerConfig, SaltConfig};
use proptest::prelude::*;

fn homogeneous(n: usize, v: f64) -> VelocityModel {
    VelocityModel::constant(Grid2D::new(n, n, 10.0, 10.0).unwrap(), v).unwrap()
}

fn src10() -> RickerSource {
    RickerSource::new(10.0, 1.0).unwrap()
}

#[test]
fn ricker_peak_and_tails() {
    let s = RickerSource {
        f0: 12.0,
        t0: 0.1,
        amplitude: 3.0,
    };
    assert_eq!(ricker(&s, s.t0), 3.0);
    for t in [s.t0 - 5.0 / s.f0, s.t0 + 5.0 / s.f0] {
        assert!(ricker(&s, t).abs() < 1e-9 * s.amplitude);
    }
}

#[test]
fn ricker_is_zero_mean() {
    // Trapezoid quadrature over [0, 2 t0].
    let s = RickerSource::new(15.0, 2.0).unwrap();
    let n = 200_000;
    let h = 2.0 * s.t0 / n as f64;
    let mut sum = 0.5 * (ricker(&s, 0.0) + ricker(&s, 2.0 * s.t0));
    for k in 1..n {
        sum += ricker(&s, k as f64 * h);
    }
    let integral = sum * h;
    assert!(integral.abs() < 1e-6 * s.amplitude * s.t0, "{integral}");
}

#[test]
fn ricker_validation() {
    assert!(RickerSource::new(0.0, 1.0).is_err());
    let early = RickerSource {
        f0: 10.0,
        t0: 0.05,
        amplitude: 1.0,
    };
    assert!(early.validate().is_err());
    let exact = RickerSource {
        f0: 10.0,
        t0: 0.1,
        amplitude: 1.0,
    };
    assert!(exact.validate().is_ok());
}

#[test]
fn cfl_examples() {
    let m = homogeneous(16, 2000.0);
    let dt2 = cfl_max_dt(&m, SpaceOrder::Second);
    assert!((dt2 - 10.0 / (2000.0 * core::f64::consts::SQRT_2)).abs() < 1e-15);
    assert!((dt2 - 3.5355e-3).abs() < 1e-7);
    let fast = homogeneous(16, 4000.0);
    assert!((cfl_max_dt(&fast, SpaceOrder::Second) - dt2 / 2.0).abs() < 1e-15);
    let dt4 = cfl_max_dt(&m, SpaceOrder::Fourth);
    assert!(dt4 < dt2);
    // 4th order: sqrt(4 / (16/3)) = sqrt(3)/2 of the 2nd-order limit.
    assert!((dt4 / dt2 - libm::sqrt(3.0) / 2.0).abs() < 1e-14);
}

#[test]
fn step_of_rest_is_rest() {
    let m = homogeneous(20, 2000.0);
    let z = Field::zeros(20, 20);
    let out = step(
        &z,
        &z,
        &m,
        1e-3,
        &SpongeBoundary::default(),
        0.0,
        (10, 10),
        SpaceOrder::Fourth,
    )
    .unwrap();
    assert!(out.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn step_is_local() {
    let m = homogeneous(24, 2000.0);
    for order in [SpaceOrder::Second, SpaceOrder::Fourth] {
        let mut u = Field::zeros(24, 24);
        u[(12, 9)] = 1.0;
        let out = step(
            &Field::zeros(24, 24),
            &u,
            &m,
            1e-3,
            &SpongeBoundary::none(),
            0.0,
            (0, 0),
            order,
        )
        .unwrap();
        let r = order.radius();
        for j in 0..24usize {
            for i in 0..24usize {
                let d = j.abs_diff(12) + i.abs_diff(9);
                let on_axis = j == 12 || i == 9;
                if out[(j, i)] != 0.0 {
                    assert!(on_axis && d <= r, "({j},{i}) order {order:?}");
                }
            }
        }
        assert!(out[(12, 9 + r)] != 0.0 && out[(12 + r, 9)] != 0.0);
    }
}

#[test]
fn step_rejects_shape_mismatch() {
    let m = homogeneous(20, 2000.0);
    let bad = Field::zeros(19, 20);
    let ok = Field::zeros(20, 20);
    assert!(step(
        &bad,
        &ok,
        &m,
        1e-3,
        &SpongeBoundary::none(),
        0.0,
        (1, 1),
        SpaceOrder::Second
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn step_is_linear(seed in any::<u64>(), alpha in -4.0f64..4.0) {
        let m = homogeneous(18, 2500.0);
        let mut rng = crate::rng::SplitMix64::new(seed);
        let prev = Field::from_fn(18, 18, |_, _| rng.normal());
        let curr = Field::from_fn(18, 18, |_, _| rng.normal());
        let s = rng.normal();
        let sponge = SpongeBoundary { width: 4, strength: 0.2, free_surface: false };
        let base = step(&prev, &curr, &m, 1e-3, &sponge, s, (9, 9), SpaceOrder::Fourth).unwrap();
        let scaled = |f: &Field| f.map(|v| alpha * v);
        let out = step(&scaled(&prev), &scaled(&curr), &m, 1e-3, &sponge, alpha * s, (9, 9), SpaceOrder::Fourth).unwrap();
        for (a, b) in out.as_slice().iter().zip(base.as_slice()) {
            prop_assert!((a - alpha * b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

fn line_acq(n: usize, src: Point, receivers: &[f64], rz: f64, dt: f64, nt: usize) -> Acquisition {
    let _ = n;
    Acquisition {
        source: src,
        receiver_xs: receivers.to_vec(),
        receiver_z: rz,
        dt,
        nt,
    }
}

#[test]
fn zero_amplitude_gives_zero_gather() {
    let m = homogeneous(40, 2000.0);
    let acq = line_acq(
        40,
        Point::new(205.0, 105.0),
        &[105.0, 205.0, 305.0],
        105.0,
        1e-3,
        200,
    );
    let src = RickerSource::new(10.0, 0.0).unwrap();
    let (g, h) = forward_model(
        &m,
        &acq,
        &src,
        &SpongeBoundary::default(),
        &ModelingOptions::default(),
    )
    .unwrap();
    assert!(g.data.as_slice().iter().all(|&v| v == 0.0));
    assert!(h.is_none());
}

#[test]
fn cfl_violation_is_rejected_up_front() {
    let m = homogeneous(40, 2000.0);
    let dt = 1.001 * cfl_max_dt(&m, SpaceOrder::Second);
    let acq = line_acq(40, Point::new(205.0, 105.0), &[105.0], 105.0, dt, 50);
    let err = forward_model(
        &m,
        &acq,
        &src10(),
        &SpongeBoundary::default(),
        &ModelingOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::CflViolation { .. }));
}

#[test]
fn acquisition_must_be_interior() {
    let g = Grid2D::new(40, 40, 10.0, 10.0).unwrap();
    let ok = line_acq(40, Point::new(200.0, 20.0), &[20.0, 380.0], 20.0, 1e-3, 10);
    assert!(ok.validate(&g).is_ok());
    let shallow = line_acq(40, Point::new(200.0, 15.0), &[100.0], 50.0, 1e-3, 10);
    assert!(shallow.validate(&g).is_err());
    let edge = line_acq(40, Point::new(200.0, 50.0), &[390.0], 50.0, 1e-3, 10);
    assert!(edge.validate(&g).is_err());
    let short = line_acq(40, Point::new(200.0, 50.0), &[100.0], 50.0, 1e-3, 1);
    assert!(short.validate(&g).is_err());
}

#[test]
fn history_has_ceil_nt_over_stride_frames() {
    let m = homogeneous(32, 2000.0);
    let acq = line_acq(32, Point::new(155.0, 155.0), &[105.0], 105.0, 1e-3, 23);
    for stride in [1, 4, 5, 23, 30] {
        let opts = ModelingOptions {
            order: SpaceOrder::Second,
            save_stride: Some(stride),
        };
        let (_, h) = forward_model(&m, &acq, &src10(), &SpongeBoundary::default(), &opts).unwrap();
        let h = h.unwrap();
        assert_eq!(h.n_saved(), 23_usize.div_ceil(stride));
        assert_eq!(h.snapshot(0).len(), 32 * 32);
    }
}

#[test]
fn gather_scales_with_source_amplitude() {
    let m = homogeneous(48, 2200.0);
    let acq = line_acq(
        48,
        Point::new(235.0, 105.0),
        &[105.0, 300.0, 377.0],
        62.0,
        1e-3,
        300,
    );
    let sponge = SpongeBoundary::default();
    let opts = ModelingOptions::default();
    let (g1, _) = forward_model(&m, &acq, &src10(), &sponge, &opts).unwrap();
    let src3 = RickerSource {
        amplitude: -3.5,
        ..src10()
    };
    let (g3, _) = forward_model(&m, &acq, &src3, &sponge, &opts).unwrap();
    let peak = g1.data.max_abs();
    for (a, b) in g3.data.as_slice().iter().zip(g1.data.as_slice()) {
        assert!((a + 3.5 * b).abs() <= 1e-12 * peak);
    }
    let (again, _) = forward_model(&m, &acq, &src10(), &sponge, &opts).unwrap();
    assert_eq!(again, g1);
}

/// First sample whose magnitude exceeds 1% of the trace maximum.
fn first_break(trace: &[f64], dt: f64) -> f64 {
    let peak = trace.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let k = trace.iter().position(|v| v.abs() > 0.01 * peak).unwrap();
    k as f64 * dt
}

#[test]
fn first_break_matches_straight_ray_traveltime() {
    let m = homogeneous(101, 2000.0);
    // Source and receiver on cell centers, 600 m apart.
    let acq = line_acq(101, Point::new(205.0, 505.0), &[805.0], 505.0, 1e-3, 700);
    let (g, _) = forward_model(
        &m,
        &acq,
        &src10(),
        &SpongeBoundary::default(),
        &ModelingOptions::default(),
    )
    .unwrap();
    let fb = first_break(&g.trace(0), g.dt);
    assert!((fb - 0.3).abs() <= 0.1, "first break {fb}");
}

#[test]
fn reciprocity_in_homogeneous_medium() {
    let m = homogeneous(64, 2000.0);
    let a = Point::new(205.0, 255.0);
    let b = Point::new(455.0, 355.0);
    let sponge = SpongeBoundary::default();
    let opts = ModelingOptions {
        order: SpaceOrder::Fourth,
        save_stride: None,
    };
    let ab = Acquisition {
        source: a,
        receiver_xs: vec![b.x],
        receiver_z: b.z,
        dt: 1e-3,
        nt: 500,
    };
    let ba = Acquisition {
        source: b,
        receiver_xs: vec![a.x],
        receiver_z: a.z,
        dt: 1e-3,
        nt: 500,
    };
    let (g1, _) = forward_model(&m, &ab, &src10(), &sponge, &opts).unwrap();
    let (g2, _) = forward_model(&m, &ba, &src10(), &sponge, &opts).unwrap();
    let (t1, t2) = (g1.trace(0), g2.trace(0));
    let num: f64 = t1.iter().zip(&t2).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = t1.iter().map(|x| x * x).sum();
    assert!(libm::sqrt(num / den) < 0.01);
}

/// Reflected energy after the direct arrival, measured against a run on a
/// domain large enough that no boundary reflection reaches the receiver.
fn sponge_leakage(sponge: SpongeBoundary) -> f64 {
    let (n_small, n_big) = (81, 301);
    let nt = 900;
    let dt = 1e-3;
    let setup = |n: usize| {
        let m = homogeneous(n, 2000.0);
        let c = (n / 2) as f64 * 10.0 + 5.0;
        let acq = Acquisition {
            source: Point::new(c - 150.0, c),
            receiver_xs: vec![c + 150.0],
            receiver_z: c,
            dt,
            nt,
        };
        forward_model(&m, &acq, &src10(), &sponge, &ModelingOptions::default())
            .unwrap()
            .0
            .trace(0)
    };
    let small = setup(n_small);
    let big = setup(n_big);
    let direct: f64 = big.iter().map(|v| v * v).sum();
    let reflected: f64 = small.iter().zip(&big).map(|(a, b)| (a - b) * (a - b)).sum();
    reflected / direct
}

#[test]
fn default_sponge_absorbs_boundary_reflections() {
    let leak = sponge_leakage(SpongeBoundary::default());
    assert!(leak < 0.05, "reflected/direct energy {leak}");
    let bare = sponge_leakage(SpongeBoundary::none());
    assert!(bare > leak * 10.0, "bare {bare} vs sponge {leak}");
}

#[test]
fn stable_run_on_generated_model_stays_bounded() {
    let g = Grid2D::new(64, 64, 10.0, 10.0).unwrap();
    let m = generate_model(
        &g,
        &LayerConfig::default(),
        &SaltConfig::default_for(&g),
        11,
    )
    .unwrap();
    let dt = 0.9 * cfl_max_dt(&m, SpaceOrder::Fourth);
    let src = src10();
    let mut p = Propagator::new(&m, dt, &SpongeBoundary::default(), SpaceOrder::Fourth).unwrap();
    let cell = p.nearest_cell(Point::new(315.0, 55.0));
    let scale = p.injection_scale();
    let mut peak = 0.0f64;
    p.run(
        Mode::Forward,
        1000,
        f64::INFINITY,
        |n, f| f[cell] += scale * ricker(&src, n as f64 * dt),
        |_, u| peak = u.iter().fold(peak, |m, v| m.max(v.abs())),
    )
    .unwrap();
    assert!(peak < 1e3 * source_scale(&m, dt, &src), "{peak}");
}

#[test]
fn divergence_is_reported_with_step() {
    let m = homogeneous(32, 2000.0);
    let dt = 1.05 * cfl_max_dt(&m, SpaceOrder::Second);
    let src = src10();
    let mut p = Propagator::new(&m, dt, &SpongeBoundary::none(), SpaceOrder::Second).unwrap();
    let cell = p.nearest_cell(Point::new(155.0, 155.0));
    let scale = p.injection_scale();
    let err = p
        .run(
            Mode::Forward,
            5000,
            DIVERGENCE_FACTOR * source_scale(&m, dt, &src),
            |n, f| f[cell] += scale * ricker(&src, n as f64 * dt),
            |_, _| {},
        )
        .unwrap_err();
    match err {
        Error::Divergence { step, .. } => assert!(step % GUARD_INTERVAL == 0 && step < 5000),
        e => panic!("unexpected {e:?}"),
    }
}
