use pamlab_core::grid::{GridFunction, GridSpec};
use pamlab_core::lattice::BoxSpec;
use pamlab_core::potential::*;
use pamlab_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn triple(rho0: f64) -> PotentialDistribution {
    PotentialDistribution::TripleExp { rho0 }
}

/// Mean and standard error of `f(ξ)` over `n` fresh draws.
fn mc(dist: &PotentialDistribution, n: usize, seed: u64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| f(dist.sample(&mut rng))).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[test]
fn cgf_of_degenerate_laws() {
    assert_eq!(PotentialDistribution::Constant { c: 2.0 }.cgf(3.0).unwrap(), 6.0);
    for dist in [triple(1.0), PotentialDistribution::Constant { c: -4.0 }, PotentialDistribution::TwoPoint { a: 1.0, b: -2.0, p: 0.3 }] {
        assert_eq!(dist.cgf(0.0).unwrap(), 0.0);
    }
    assert!(triple(1.0).cgf(-1.0).is_err());
}

#[test]
fn cgf_matches_monte_carlo() {
    let dist = triple(1.0);
    let (mean, se) = mc(&dist, 1_000_000, 11, |x| (10.0 * x).exp());
    let h = dist.cgf(10.0).unwrap().exp();
    assert!((mean - h).abs() <= 3.0 * se, "quadrature {h}, MC {mean} ± {se}");
}

#[test]
fn kappa_examples() {
    let c = 1.7;
    let table = ScaleTable::new(PotentialDistribution::Constant { c }, 1e5).unwrap();
    for t in [1.0, 3.0, 1e2, 9e4] {
        assert!((table.kappa(t).unwrap() - c).abs() < 1e-9);
    }
    let table = ScaleTable::new(triple(1.0), 1e6).unwrap();
    assert_eq!(table.kappa(1.0).unwrap(), table.cgf(1.0).unwrap());
    assert!(matches!(table.kappa(0.9), Err(Error::Domain(_))));
    let err = |t: f64| (table.kappa(t).unwrap() * t.ln() / t - 1.0).abs();
    assert!(err(1e6) < 0.35, "relative error at 1e6: {}", err(1e6));
    assert!(err(1e6) < err(1e3));
}

#[test]
fn kappa_matches_direct_integral() {
    // Independent route: κ(t) = H(t) - ∫_1^t H(s)/s ds by composite Simpson in s.
    let dist = triple(1.0);
    let table = ScaleTable::new(dist, 1e3).unwrap();
    let t: f64 = 50.0;
    let n = 4000;
    let step = (t - 1.0) / n as f64;
    let f = |s: f64| dist.cgf(s).unwrap() / s;
    let mut acc = f(1.0) + f(t);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(1.0 + k as f64 * step);
    }
    let oracle = dist.cgf(t).unwrap() - acc * step / 3.0;
    assert!((table.kappa(t).unwrap() - oracle).abs() < 1e-8, "{} vs {oracle}", table.kappa(t).unwrap());
}

#[test]
fn alpha_satisfies_its_equation_and_grows() {
    let table = ScaleTable::new(triple(1.0), 1e7).unwrap();
    for d in [1usize, 2] {
        for t in [1e3, 1e4, 1e6] {
            let a = table.alpha(t, d).unwrap();
            let rhs = t / a.powi(d as i32 + 2);
            let lhs = table.kappa(t / a.powi(d as i32)).unwrap();
            assert!((lhs - rhs).abs() <= ALPHA_RTOL * rhs);
        }
        assert!(table.alpha(1e6, d).unwrap() > table.alpha(1e3, d).unwrap());
    }
}

#[test]
fn alpha_matches_dense_scan_for_synthetic_kappa() {
    let kappa = |s: f64| s / s.ln();
    let table = ScaleTable::from_kappa(kappa, 1e7);
    let t = 1e6;
    let alpha = table.alpha(t, 1).unwrap();
    // Independent route: scan α for the sign change of κ(t/α) - t/α³, then bisect.
    let g = |a: f64| kappa(t / a) - t / a.powi(3);
    let mut lo = 1.0;
    let mut hi = f64::NAN;
    let steps = 200_000;
    for k in 1..=steps {
        let a = 1.0 + k as f64 * (t.sqrt() - 1.0) / steps as f64;
        if g(a) >= 0.0 && g(lo) < 0.0 {
            hi = a;
            break;
        }
        lo = a;
    }
    assert!(hi.is_finite(), "no sign change found");
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    assert!((alpha / oracle - 1.0).abs() < 1e-6, "{alpha} vs {oracle}");
}

#[test]
fn hk_ratio_examples() {
    let table = ScaleTable::new(triple(1.0), 1e7).unwrap();
    assert_eq!(table.hk_ratio(1e3, 1.0, 1.0).unwrap(), (0.0, 0.0));
    let flat = ScaleTable::new(PotentialDistribution::Constant { c: 0.4 }, 1e3).unwrap();
    assert!(flat.hk_ratio(100.0, 3.0, 1.0).unwrap().0.abs() < 1e-12);
    let dev = |t: f64| {
        let (diff, target) = table.hk_ratio(t, 2.0, 1.0).unwrap();
        (diff / target - 1.0).abs()
    };
    assert!(dev(1e6) < dev(1e3), "{} vs {}", dev(1e6), dev(1e3));
}

#[test]
fn field_sampling_examples() {
    let dist = triple(1.0);
    let a = sample_field(&dist, BoxSpec::lattice(2, 2), 99).unwrap();
    assert_eq!(a.values.len(), 25);
    assert_eq!(a, sample_field(&dist, BoxSpec::lattice(2, 2), 99).unwrap());
    assert_ne!(a.values, sample_field(&dist, BoxSpec::lattice(2, 2), 100).unwrap().values);
}

#[test]
fn empirical_exponential_moment_of_a_field() {
    let dist = triple(1.0);
    let field = sample_field(&dist, BoxSpec::lattice(1, 500_000), 4).unwrap();
    assert_eq!(field.values.len(), 1_000_001);
    let t = 3.0;
    let w: Vec<f64> = field.values.iter().map(|x| (t * x).exp()).collect();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let se = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let exact = dist.cgf(t).unwrap().exp();
    assert!((mean - exact).abs() <= 3.0 * se, "{mean} ± {se} vs {exact}");
}

#[test]
fn sampling_is_independent_of_thread_count() {
    let dist = triple(0.7);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_field(&dist, BoxSpec::lattice(2, 60), 5).unwrap())
    };
    let one = run(1);
    assert_eq!(one.values.len(), 121 * 121);
    assert_eq!(one, run(3));
}

#[test]
fn shift_rescale_of_constant_potential_vanishes() {
    let dist = PotentialDistribution::Constant { c: 2.5 };
    let table = ScaleTable::new(dist, 1e4).unwrap();
    let field = sample_field(&dist, BoxSpec::lattice(1, 40), 0).unwrap();
    let (xi_t, bar) = shift_rescale(&field, 500.0, &table, None).unwrap();
    assert!(xi_t.values.iter().all(|v| v.abs() < 1e-12));
    assert!(bar.values.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn rescaled_step_function_reads_the_lattice() {
    let dist = triple(1.0);
    let table = ScaleTable::new(dist, 1e4).unwrap();
    let t = 1e3;
    let alpha = table.alpha(t, 1).unwrap();
    let radius = (3.0 * alpha).ceil() as usize;
    let field = sample_field(&dist, BoxSpec::lattice(1, radius), 8).unwrap();
    let (xi_t, bar) = shift_rescale(&field, t, &table, Some(3.0)).unwrap();
    for z in -(radius as i64)..(radius as i64) {
        let x = (z as f64 + 0.37) / alpha;
        assert_eq!(bar.eval(&[x]), alpha * alpha * xi_t.at(&[z]).unwrap());
    }
    match shift_rescale(&field, t, &table, Some(4.0)) {
        Err(Error::WindowExceedsField { required, .. }) => assert_eq!(required, (4.0 * alpha).ceil()),
        other => panic!("expected a window error, got {other:?}"),
    }
}

#[test]
fn centred_potential_is_normalized() {
    let dist = triple(1.0);
    let table = ScaleTable::new(dist, 1e3).unwrap();
    let t = 30.0;
    let alpha = table.alpha(t, 1).unwrap();
    let big_t = t / alpha;
    let shift = centering(&table, t, 1).unwrap();
    let (mean, se) = mc(&dist, 1_000_000, 21, |x| (big_t * (x - shift)).exp());
    assert!((mean - 1.0).abs() <= 3.0 * se, "{mean} ± {se}");
}

#[test]
fn truncation_examples() {
    let grid = GridSpec::new(1, 2.0f64, 0.5).unwrap();
    let f = GridFunction::from_fn(grid, |x| x[0] * x[0]);
    assert_eq!(f.truncate(10.0), f);
    assert!(f.truncate(-1e300).values.iter().all(|&v| v == -1e300));
    assert_eq!(f.truncate(1.0).truncate(2.0), f.truncate(1.0));
    assert_eq!(f.truncate(2.0).truncate(1.0), f.truncate(1.0));
}

#[test]
fn exceedance_tail_examples() {
    let dist = triple(1.0);
    let table = ScaleTable::new(dist, 1e7).unwrap();
    assert_eq!(exceedance_tail(&dist, &table, 1e3, 1, 2.0, 0).unwrap(), 1.0);
    assert_eq!(exceedance_tail(&dist, &table, 1e3, 1, 1e6, 4).unwrap(), 0.0);
    for t in [1e3, 1e4, 1e5, 1e6] {
        for m in [0.5, 1.0, 2.0, 5.0] {
            for count in [1, 2, 7] {
                let exact = exceedance_tail(&dist, &table, t, 1, m, count).unwrap();
                let bound = exceedance_bound(&table, t, 1, m, count).unwrap();
                assert!(exact <= bound, "t {t} M {m} count {count}: {exact} > {bound}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cgf_is_convex(t1 in 0.0f64..40.0, t2 in 0.0f64..40.0, theta in 0.01f64..0.99, rho0 in 0.3f64..2.0) {
        let dist = triple(rho0);
        let mid = dist.cgf(theta * t1 + (1.0 - theta) * t2).unwrap();
        let chord = theta * dist.cgf(t1).unwrap() + (1.0 - theta) * dist.cgf(t2).unwrap();
        prop_assert!(mid <= chord + 2.0 * CGF_ABS_TOL * (1.0 + chord.abs()));
    }

    #[test]
    fn scaling_commutes_with_cgf(c in 0.2f64..5.0, t in 0.0f64..30.0, rho0 in 0.3f64..2.0) {
        for dist in [triple(rho0), PotentialDistribution::TwoPoint { a: 1.3, b: -0.4, p: 0.25 }] {
            let scaled = dist.scaled(c).cgf(t).unwrap();
            let direct = dist.cgf(c * t).unwrap();
            prop_assert!((scaled - direct).abs() <= 1e-9 * (1.0 + direct.abs()), "{} vs {}", scaled, direct);
        }
    }

    #[test]
    fn alpha_residual_holds(log_t in 7.0f64..14.0, d in 1usize..4) {
        let table = ScaleTable::new(triple(1.0), 1e6).unwrap();
        let t = log_t.exp();
        let a = table.alpha(t, d).unwrap();
        let rhs = t / a.powi(d as i32 + 2);
        prop_assert!((table.kappa(t / a.powi(d as i32)).unwrap() - rhs).abs() <= ALPHA_RTOL * rhs);
    }

    #[test]
    fn fields_are_reproducible(seed in any::<u64>(), radius in 0usize..30, d in 1usize..3) {
        let dist = triple(1.0);
        let a = sample_field(&dist, BoxSpec::lattice(d, radius), seed).unwrap();
        prop_assert_eq!(a.values.len(), (2 * radius + 1).pow(d as u32));
        prop_assert_eq!(a, sample_field(&dist, BoxSpec::lattice(d, radius), seed).unwrap());
    }
}
