use pamlab_core::confinement::*;
use pamlab_core::continuum::{FnField, PiecewiseConstant};
use pamlab_core::evolution::{evolve, total_mass};
use pamlab_core::grid::{GridFunction, GridSpec};
use pamlab_core::lattice::BoxSpec;
use pamlab_core::potential::{sample_field, PotentialDistribution, ScaleTable};
use pamlab_core::spectral::principal_eigen_discrete;
use pamlab_core::variational::{functional_l, parabola_psi_hat, psi_hat_at};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ERF_1: f64 = 0.842_700_792_949_714_9;
const ERF_4: f64 = 0.999_999_984_582_742_1;

const TRIPLE: PotentialDistribution = PotentialDistribution::TripleExp { rho0: 1.0 };

fn random_pieces(rng: &mut ChaCha8Rng) -> PiecewiseConstant<f64> {
    let values = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
    PiecewiseConstant::new(1, 6.0, 6, values).unwrap()
}

#[test]
fn global_distance_matches_the_series_in_closed_form() {
    // Σ_r 2^{-r} 2r/(1+2r) = 2 - Σ_{r≥0} 2^{-r}/(2r+1) = 2 - √2 atanh(1/√2).
    let exact = 2.0 - std::f64::consts::SQRT_2 * (1.0 + std::f64::consts::SQRT_2).ln();
    assert!((exact - 0.753_549_520).abs() < 1e-9);
    let one = FnField { d: 1, f: |_: &[f64]| 1.0 };
    let zero = FnField { d: 1, f: |_: &[f64]| 0.0 };
    let g = dist_global(&one, &zero, 45, 1).unwrap();
    assert!(g.tail < 1e-12);
    assert!((g.value - exact).abs() < 1e-10, "{}", g.value);
    assert_eq!(dist_global(&one, &one, 10, 2).unwrap().value, 0.0);
}

#[test]
fn global_distance_is_a_metric_on_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (a, b, c) = (random_pieces(&mut rng), random_pieces(&mut rng), random_pieces(&mut rng));
        let dist = |f: &PiecewiseConstant<f64>, g: &PiecewiseConstant<f64>| dist_global(f, g, 6, 4).unwrap().value;
        let (ab, ba, bc, ac) = (dist(&a, &b), dist(&b, &a), dist(&b, &c), dist(&a, &c));
        assert_eq!(ab, ba);
        assert!(ac <= ab + bc + 1e-12);
        assert!(ab < 1.0);
    }
}

#[test]
fn box_distance_examples() {
    let rho = 1.0;
    let r = 4.0;
    let gr = GridSpec::new(1, r, 0.005).unwrap();
    let psi = parabola_psi_hat(rho, gr);
    assert_eq!(dist_box(&psi, &psi, r, rho).unwrap(), 0.0);
    let doubled = psi.map(|v| v + rho * 2f64.ln());
    let l = functional_l(&psi, rho);
    assert!((dist_box(&psi, &doubled, r, rho).unwrap() / (std::f64::consts::E / rho * l) - 1.0).abs() < 1e-12);
    // ∫_{Q_4} e^{ψ̂} = e·erf(4).
    let lowered = psi.map(|v| v - rho);
    let exact = (1.0 - (-1.0f64).exp()) * std::f64::consts::E * ERF_4;
    assert!((dist_box(&psi, &lowered, r, rho).unwrap() - exact).abs() < 1e-4);
}

#[test]
fn best_shift_examples() {
    let rho = 1.0;
    let r = 1.0;
    let window = ShapeWindow::new(1, r, rho, 2000).unwrap();
    let shifts = aligned_shifts(1, 2.0 * r, 0.25);
    let m = psi_hat_at(rho, &[0.0]) + 1.0;
    let centred = FnField { d: 1, f: move |x: &[f64]| psi_hat_at(rho, x) };
    let at = best_shift_distance(&centred, &window, m, &shifts).unwrap();
    assert_eq!(at.argmin_shift, vec![0.0]);
    assert!(at.value < 1e-12);
    let x0 = -1.25;
    let moved = FnField { d: 1, f: move |x: &[f64]| psi_hat_at(rho, &[x[0] - x0]) };
    let best = best_shift_distance(&moved, &window, m, &shifts).unwrap();
    assert_eq!(best.argmin_shift, vec![x0]);
    assert!((best.value - at.value).abs() < 1e-12);

    // ∫_{Q_1} e^{ψ̂} = e·erf(1).
    let floor = FnField { d: 1, f: |_: &[f64]| -1e6 };
    let empty = best_shift_distance(&floor, &window, m, &shifts).unwrap();
    assert!((empty.value - std::f64::consts::E * ERF_1).abs() < 1e-6, "{}", empty.value);
    assert!(best_shift_distance(&floor, &window, m, &[]).is_err());
}

#[test]
fn near_parabola_profiles_are_not_far_from_every_shift() {
    let rho = 1.0;
    let r = 1.0;
    let window = ShapeWindow::new(2, r, rho, 60).unwrap();
    let shifts = aligned_shifts(2, 2.0 * r, 0.25);
    let x0 = [0.5, -0.75];
    let psi = GridFunction::from_fn(GridSpec::new(2, 3.0 * r, 0.01).unwrap(), |x| {
        psi_hat_at(rho, &[x[0] - x0[0], x[1] - x0[1]])
    });
    let top = psi_hat_at(rho, &[0.0, 0.0]) + 1.0;
    for m in [top, 2.0 * top, 10.0 * top] {
        let best = best_shift_distance(&psi, &window, m, &shifts).unwrap();
        assert!(best.value < 1e-3, "M {m}: {}", best.value);
        assert_eq!(best.argmin_shift, x0.to_vec());
    }
}

#[test]
fn functional_f_and_d_beta_examples() {
    let table = ScaleTable::new(TRIPLE, 1e4).unwrap();
    let (rho, r, t, d) = (1.0f64, 1.0f64, 500.0, 1);
    let alpha = table.alpha(t, d).unwrap();
    let gr = GridSpec::new(1, 3.0 * r, 0.1).unwrap();
    // ℒ_{3R}(c) = (ρ/e) e^{c/ρ} (6R)^d = ρ.
    let c = rho * (1.0 - (6.0 * r).ln());
    let at_rho = GridFunction::from_fn(gr, |_| c);
    let f = functional_f(&at_rho, t, r, rho, &table, d).unwrap();
    assert!((f - rho * t / (alpha * alpha)).abs() < 1e-9 * f);
    let at_rho_over_e = at_rho.map(|v| v - rho);
    assert!(functional_f(&at_rho_over_e, t, r, rho, &table, d).unwrap().abs() < 1e-9);

    let big = parabola_psi_hat(rho, GridSpec::new(1, 6.0, 0.01).unwrap());
    assert!(d_beta_member(&big, 1e-3, 2.0, rho).unwrap());
    assert!(!d_beta_member(&at_rho_over_e, 0.0, r, rho).unwrap());
    let floor = GridFunction::from_fn(gr, |_| -1e6);
    assert!(d_beta_member(&floor, rho, r, rho).unwrap());
    assert!(!d_beta_member(&floor, 0.99 * rho, r, rho).unwrap());
}

#[test]
fn cumulant_examples() {
    let table = ScaleTable::new(TRIPLE, 1e9).unwrap();
    let one = FnField { d: 1, f: |_: &[f64]| 1.0 };
    let early = cumulant_rate_check(&table, 1.0, &one, 1.0, 1e3, 4).unwrap();
    let late = cumulant_rate_check(&table, 1.0, &one, 1.0, 1e6, 4).unwrap();
    assert_eq!(early.limit, 0.0);
    assert!(late.finite_t.abs() < early.finite_t.abs(), "{} {}", early.finite_t, late.finite_t);

    let two = FnField { d: 1, f: |_: &[f64]| 2.0 };
    let c = cumulant_rate_check(&table, 1.0, &two, 1.0, 1e3, 4).unwrap();
    assert!((c.limit - 4.0 * 2f64.ln()).abs() < 1e-12);
    assert!((c.limit - 2.7726).abs() < 1e-4);

    // A jump at the origin sits on a lattice cell boundary for every α.
    let f = PiecewiseConstant::new(1, 1.0, 2, vec![0.4, 2.5]).unwrap();
    let early = cumulant_rate_check(&table, 1.0, &f, 1.0, 1e3, 8).unwrap();
    let late = cumulant_rate_check(&table, 1.0, &f, 1.0, 1e6, 8).unwrap();
    assert!((early.limit - f.entropy_integral()).abs() < 1e-12 && (late.limit - early.limit).abs() < 1e-12);
    assert!((late.finite_t / late.limit - 1.0).abs() < (early.finite_t / early.limit - 1.0).abs());
}

#[test]
fn partition_sum_matches_enumeration() {
    // X = e^{ξ} for a two-point ξ on three sites, power 2 and 4.
    let (a, b, p) = (0.4f64, -1.3f64, 0.35f64);
    let moment = |k: usize| p * (k as f64 * a).exp() + (1.0 - p) * (k as f64 * b).exp();
    for power in [2usize, 4] {
        let mut brute = 0.0;
        for mask in 0..8u32 {
            let mut prob = 1.0;
            let mut sum = 0.0;
            for z in 0..3 {
                let (v, q) = if mask >> z & 1 == 1 { (a, p) } else { (b, 1.0 - p) };
                prob *= q;
                sum += v.exp();
            }
            brute += prob * sum.powi(power as i32);
        }
        let regrouped = annealed_partition_sum(moment, 3, power);
        assert!((regrouped - brute).abs() < 1e-12 * brute, "power {power}: {regrouped} vs {brute}");
    }
}

#[test]
fn annealed_moment_respects_the_bound() {
    let table = ScaleTable::new(TRIPLE, 1e4).unwrap();
    let m = default_m_levels(1.0, 1)[0];
    for (k, bound) in [(1.0, 0.0), (2.0, 2.0 * 2f64.ln())] {
        let est = annealed_f_moment(&TRIPLE, &table, 1, 300.0, 1.0, k, m, 4000, 3).unwrap();
        assert!(est.rate <= bound + 3.0 * est.stderr, "K {k}: {} ± {}", est.rate, est.stderr);
        assert_eq!(est.low_ess, est.ess < 10.0);
    }
}

#[test]
fn importance_sampling_is_unbiased() {
    let box_spec = BoxSpec::lattice(1, 1);
    let t = 1.0;
    let plain = log_eigen_moment(&TRIPLE, box_spec, t, None, 20000, 1).unwrap();
    let tilt = TiltMixture::single(TiltSpec::new(&TRIPLE, vec![0.8, 1.5, 0.8], "fixture").unwrap());
    let tilted = log_eigen_moment(&TRIPLE, box_spec, t, Some(&tilt), 20000, 2).unwrap();
    let se = plain.log_mean_stderr.hypot(tilted.log_mean_stderr);
    assert!((plain.log_mean - tilted.log_mean).abs() <= 3.0 * se, "{plain:?} vs {tilted:?}");
}

#[test]
fn eigenvalue_weight_tracks_the_total_mass() {
    // ln U(t) = tλ + ln(φ(0) Σφ) up to the spectral gap's decay.
    for seed in 0..5 {
        let field = sample_field(&TRIPLE, BoxSpec::lattice(1, 1), seed).unwrap();
        let eig = principal_eigen_discrete(&field.region(), &field.values, 1e-12).unwrap();
        let t = 30.0;
        let log_u = total_mass(&evolve(&field, t, 1e-12).unwrap()).ln();
        let overlap = (eig.vector[1] * eig.vector.iter().sum::<f64>()).ln();
        assert!((log_u - t * eig.value - overlap).abs() < 1e-3);
    }
}

fn small_config() -> ConfinementConfig {
    ConfinementConfig {
        t_grid: vec![30.0],
        eps_grid: vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0],
        replicas: 200,
        window_cells: 50,
        seed: 12,
        ..ConfinementConfig::default()
    }
}

#[test]
fn weighted_tail_examples() {
    let table = ScaleTable::new(TRIPLE, 1e4).unwrap();
    let report = confinement_experiment(&TRIPLE, &table, &small_config()).unwrap();
    let slice = &report.slices[0];
    assert_eq!(slice.tail[0], 1.0);
    for w in slice.tail.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(slice.tail.iter().all(|g| (0.0..=1.0).contains(g)));

    let single = confinement_experiment(&TRIPLE, &table, &ConfinementConfig { replicas: 1, ..small_config() }).unwrap();
    assert!(single.slices[0].tail.iter().all(|&g| g == 0.0 || g == 1.0));
}

#[test]
fn constant_potential_has_a_deterministic_distance() {
    let dist = PotentialDistribution::Constant { c: 0.5 };
    let table = ScaleTable::new(dist, 1e4).unwrap();
    let rho = 1.0;
    let cfg = ConfinementConfig { rho: Some(rho), tilt: TiltChoice::None, replicas: 20, ..small_config() };
    let report = confinement_experiment(&dist, &table, &cfg).unwrap();
    let alpha = table.alpha(30.0, 1).unwrap();
    let window = ShapeWindow::new(1, cfg.r, rho, cfg.window_cells).unwrap();
    let zero = FnField { d: 1, f: |_: &[f64]| 0.0 };
    let m = default_m_levels(rho, 1)[0];
    let oracle = best_shift_distance(&zero, &window, m, &aligned_shifts(1, 2.0 * cfg.r, 1.0 / alpha)).unwrap().value;
    for row in &report.rows {
        assert!((row.distance - oracle).abs() < 1e-12, "{} vs {oracle}", row.distance);
    }
    assert!((report.slices[0].effective_sample_size - 20.0).abs() < 1e-9);
}

#[test]
fn intermittency_degenerate_cases() {
    let box_spec = BoxSpec::lattice(1, 2);
    assert_eq!(intermittency_ratio(&TRIPLE, 1.5, 1.5, 2.0, box_spec, 50, 1).unwrap(), 1.0);
    let flat = PotentialDistribution::Constant { c: 0.3 };
    assert!((intermittency_ratio(&flat, 1.0, 2.0, 2.0, box_spec, 50, 1).unwrap() - 1.0).abs() < 1e-12);
    assert!(intermittency_ratio(&TRIPLE, 2.0, 1.0, 2.0, box_spec, 10, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn functional_f_is_monotone(seed in any::<u64>(), bump in 0.0f64..1.0) {
        let table = ScaleTable::new(TRIPLE, 1e4).unwrap();
        let gr = GridSpec::new(1, 3.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = GridFunction::new(gr, (0..gr.len()).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let hi = GridFunction::new(gr, lo.values.iter().map(|v| v + bump * rng.gen_range(0.0..1.0)).collect()).unwrap();
        let f_lo = functional_f(&lo, 200.0, 1.0, 1.0, &table, 1).unwrap();
        let f_hi = functional_f(&hi, 200.0, 1.0, 1.0, &table, 1).unwrap();
        prop_assert!(f_lo <= f_hi);
    }

    #[test]
    fn box_distance_is_symmetric_and_nonnegative(seed in any::<u64>(), rho in 0.3f64..3.0) {
        let gr = GridSpec::new(2, 1.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || GridFunction::new(gr, (0..gr.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let (a, b) = (draw(), draw());
        let ab = dist_box(&a, &b, 1.0, rho).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, dist_box(&b, &a, 1.0, rho).unwrap());
    }
}
