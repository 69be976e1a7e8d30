//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{dense_top_eigenvalue, random_profile, uniform_values};
use pamlab_core::confinement::{
    annealed_f_moment, annealed_partition_sum, confinement_experiment, cumulant_rate_check, default_m_levels,
    ConfinementConfig,
};
use pamlab_core::continuum::{FnField, PiecewiseConstant};
use pamlab_core::evolution::{evolve, fk_estimate, total_mass};
use pamlab_core::grid::{GridFunction, GridSpec};
use pamlab_core::lattice::{BoxSpec, LatticeRegion};
use pamlab_core::potential::{sample_field, PotentialDistribution, ScaleTable};
use pamlab_core::spectral::{principal_eigen_discrete, rescaled_eigen};
use pamlab_core::variational::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRIPLE: PotentialDistribution = PotentialDistribution::TripleExp { rho0: 1.0 };

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// `ρ²dh²/8`, twice the measured deficit of the grid minimum of `J`.
fn slack(rho: f64, d: usize, h: f64) -> f64 {
    rho * rho * d as f64 * h * h / 8.0
}

fn chi_reproduction() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (rho, d) in [(1.0, 1usize), (PI, 1), (1.0, 2)] {
        let start = Instant::now();
        let grid = GridSpec::snapped(d, 8.0 / f64::sqrt(rho), 0.05).unwrap();
        let r = minimize_chi(rho, grid, &ChiOptions::default()).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let exact = chi_closed_form(rho, d);
        let rel = (r.value / exact - 1.0).abs();
        pass &= rel < 0.02 && secs < 60.0;
        parts.push(format!("(rho {rho:.4}, d {d}) {:.5} vs {exact:.5} rel {rel:.1e} in {secs:.1}s", r.value));
    }
    outcome(pass, parts.join("; "))
}

fn minimizer_identification() -> Outcome {
    let r = minimize_chi(1.0, GridSpec::new(1, 8.0, 0.05).unwrap(), &ChiOptions::default()).unwrap();
    let (dist, shift) = aligned_profile_distance(&r.minimizer, 1.0);
    outcome(dist <= 0.02, format!("L1 distance {dist:.2e} after shift {:.4}", shift[0]))
}

fn consistency_triple() -> Outcome {
    let rho: f64 = 1.0;
    let grid = GridSpec::new(1, 6.0, 0.02).unwrap();
    let psi = parabola_psi_hat(rho, grid);
    let g = gaussian_g_hat(rho, grid);
    let entropy_form: f64 = chi_functional(&g, rho);
    let l: f64 = functional_l(&psi, rho);
    let eigen_form = l - eigen_continuum(&psi, 1e-12).unwrap();
    let chi = chi_closed_form(rho, 1);
    let gap = (entropy_form - eigen_form).abs();
    outcome(
        gap <= 0.02 * chi && (l - rho).abs() <= 1e-3,
        format!("entropy form {entropy_form:.5}, eigen form {eigen_form:.5}, gap {:.2}% of chi; L(psi) - rho = {:.1e}", 100.0 * gap / chi, l - rho),
    )
}

fn log_sobolev_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for (d, h, count) in [(1usize, 0.05, 60), (2, 0.1, 40)] {
        let grid = GridSpec::snapped(d, 6.0, h).unwrap();
        let bound = chi_closed_form(1.0, d) - slack(1.0, d, h);
        for _ in 0..count {
            let j = chi_functional(&random_profile(grid, &mut rng), 1.0);
            worst = worst.min(j - bound);
            if j < bound {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("100 profiles, {violations} violations, smallest margin {worst:.3e}"))
}

fn constrained_gap() -> Outcome {
    let (rho, r) = (1.0, 4.0);
    let grid = GridSpec::new(1, 3.0 * r, 0.1).unwrap();
    let opts = ConstrainedOptions::default();
    let base = minimize_chi_constrained(rho, 0.0, r, grid, &opts).unwrap().value;
    let starts = minimize_chi_constrained_multistart(rho, 0.5, r, grid, 8, 77, &opts).unwrap();
    let gaps: Vec<f64> = starts.iter().map(|s| s.value - base).collect();
    let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let max = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(gaps.iter().all(|g| *g > 0.0), format!("chi_R(0) = {base:.5}; gaps over 8 starts in [{min:.4}, {max:.4}]"))
}

/// `t` with `α(t) = n - 1e-6` for `κ ≡ c`, so `B_{⌊α⌋}` spans `Q_1`.
fn aligned_time(c: f64, n: usize, d: usize) -> f64 {
    c * (n as f64 - 1e-6).powi(d as i32 + 2)
}

fn spectral_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    for (d, radius) in [(1usize, 1i64), (2, 3), (3, 2), (1, 300), (2, 12), (3, 5), (1, 2047), (2, 31), (3, 7)] {
        let region = LatticeRegion::centered(d, radius);
        let v = uniform_values(region.len(), &mut rng, 3.0);
        let ours = principal_eigen_discrete(&region, &v, 1e-11).unwrap().value;
        worst = worst.max((ours - dense_top_eigenvalue(&region, &v)).abs());
        largest = largest.max(region.len());
    }
    let c = 0.5;
    let table = ScaleTable::new(PotentialDistribution::Constant { c }, 1e9).unwrap();
    let zero = FnField { d: 1, f: |_: &[f64]| 0.0 };
    let limit = -PI * PI / 4.0;
    let errs: Vec<(f64, f64)> = [4usize, 8, 16]
        .iter()
        .map(|&n| {
            let t = aligned_time(c, n, 1);
            (table.alpha(t, 1).unwrap(), (rescaled_eigen(&zero, 1.0, t, &table, 1e-11).unwrap() - limit).abs())
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 / w[0].0).ln()).collect();
    let rate_ok = orders.iter().all(|o| (o - 2.0).abs() < 0.2);
    outcome(
        worst < 1e-10 && rate_ok,
        format!("max |lambda - dense| {worst:.1e} up to {largest} sites; observed orders {orders:.3?}"),
    )
}

fn fk_ode_agreement() -> Outcome {
    let start = Instant::now();
    let mut agree = 0;
    for s in 0..20u64 {
        let d = 1 + (s % 2) as usize;
        let radius = if d == 1 { 3 } else { 2 };
        let t = 0.25 + 1.75 * s as f64 / 19.0;
        let field = sample_field(&TRIPLE, BoxSpec::lattice(d, radius), 100 + s).unwrap();
        let fk = fk_estimate(&field, t, 100_000, 200 + s);
        let ode = total_mass(&evolve(&field, t, 1e-12).unwrap());
        if (fk.mean - ode).abs() <= 3.0 * fk.stderr {
            agree += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(agree >= 19 && secs < 600.0, format!("{agree}/20 within 3 stderr in {secs:.1}s"))
}

fn ldp_cumulant() -> Outcome {
    let table = ScaleTable::new(TRIPLE, 1e9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut wins = 0;
    let mut limits_ok = true;
    for _ in 0..10 {
        let values: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..3.0)).collect();
        // ρ ∫ f ln f by hand: four pieces of width 1/2.
        let limit: f64 = values.iter().map(|v| 0.5 * v * v.ln()).sum();
        let f = PiecewiseConstant::new(1, 1.0, 4, values).unwrap();
        let early = cumulant_rate_check(&table, 1.0, &f, 1.0, 1e3, 8).unwrap();
        let late = cumulant_rate_check(&table, 1.0, &f, 1.0, 1e6, 8).unwrap();
        limits_ok &= (early.limit - limit).abs() < 1e-12 && (late.limit - limit).abs() < 1e-12;
        if (late.finite_t / limit - 1.0).abs() < (early.finite_t / limit - 1.0).abs() {
            wins += 1;
        }
    }
    outcome(wins >= 9 && limits_ok, format!("{wins}/10 closer at t = 1e6; limits match hand arithmetic: {limits_ok}"))
}

fn pinsker() -> Outcome {
    let grid = GridSpec::new(1, 2.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let density = |rng: &mut ChaCha8Rng| {
        let f = GridFunction::new(grid, (0..grid.len()).map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect()).unwrap();
        let m = f.integrate();
        f.map(|v| v / m)
    };
    let mut violations = 0;
    for _ in 0..1000 {
        let (p, q) = (density(&mut rng), density(&mut rng));
        let tv = l1_distance(&p, &q);
        if relative_entropy(&p, &q).unwrap() < 0.5 * tv * tv {
            violations += 1;
        }
    }
    let two = GridSpec::new(1, 0.5, 1.0).unwrap();
    let p = GridFunction::new(two, vec![1.0, 1.0]).unwrap();
    let q = GridFunction::new(two, vec![0.5, 1.5]).unwrap();
    let kl: f64 = relative_entropy(&p, &q).unwrap();
    outcome(violations == 0 && (kl - 0.143_841).abs() < 1e-6, format!("{violations} violations in 1000 pairs; two-point value {kl:.6}"))
}

fn multinomial_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (a, b, p) in [(0.4f64, -1.3f64, 0.35f64), (1.1, 0.2, 0.8)] {
        let moment = |k: usize| p * (k as f64 * a).exp() + (1.0 - p) * (k as f64 * b).exp();
        for power in 1..=4u32 {
            // Site values over {a, b}³, then every ordered tuple of sites.
            let mut brute = 0.0;
            for mask in 0..8u32 {
                let x: Vec<f64> = (0..3).map(|z| if mask >> z & 1 == 1 { a.exp() } else { b.exp() }).collect();
                let prob: f64 = (0..3).map(|z| if mask >> z & 1 == 1 { p } else { 1.0 - p }).product();
                let mut tuples = 0.0;
                for code in 0..3usize.pow(power) {
                    let mut rest = code;
                    let mut prod = 1.0;
                    for _ in 0..power {
                        prod *= x[rest % 3];
                        rest /= 3;
                    }
                    tuples += prod;
                }
                brute += prob * tuples;
            }
            let regrouped = annealed_partition_sum(moment, 3, power as usize);
            worst = worst.max((regrouped - brute).abs() / brute);
        }
    }
    outcome(worst <= 1e-12, format!("max relative difference {worst:.1e} over powers 1..4"))
}

fn annealed_bound() -> Outcome {
    let table = ScaleTable::new(TRIPLE, 1e9).unwrap();
    let t = 1e8;
    let m = default_m_levels(1.0, 1)[0];
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [1.0f64, 2.0] {
        let est = annealed_f_moment(&TRIPLE, &table, 1, t, 1.0, k, m, 20_000, 31).unwrap();
        let bound = k * k.ln();
        pass &= est.rate <= bound + 3.0 * est.stderr;
        parts.push(format!(
            "K {k}: {:.4} ± {:.4} vs bound {bound:.4} (ESS {:.1}{})",
            est.rate,
            est.stderr,
            est.ess,
            if est.low_ess { ", low" } else { "" }
        ));
    }
    outcome(pass, format!("t = {t:e}; {}", parts.join("; ")))
}

fn confinement_trend() -> Outcome {
    let table = ScaleTable::new(TRIPLE, 1e4).unwrap();
    let cfg = ConfinementConfig::default();
    let report = confinement_experiment(&TRIPLE, &table, &cfg).unwrap();
    let k = cfg.eps_grid.iter().position(|e| *e == 0.3).unwrap();
    let mut pass = report.slices.iter().all(|s| s.effective_sample_size >= 50.0);
    for w in report.slices.windows(2) {
        let se = w[0].tail_stderr[k].hypot(w[1].tail_stderr[k]);
        pass &= w[1].tail[k] <= w[0].tail[k] + 2.0 * se;
    }
    let parts: Vec<String> = report
        .slices
        .iter()
        .map(|s| format!("t {}: G {:.3} ± {:.3} (ESS {:.0})", s.t, s.tail[k], s.tail_stderr[k], s.effective_sample_size))
        .collect();
    outcome(pass, parts.join("; "))
}

fn hk_verification() -> Outcome {
    let table = ScaleTable::new(TRIPLE, 1e7).unwrap();
    let y: f64 = 2.0;
    let dev = |t: f64| {
        let (diff, target) = table.hk_ratio(t, y, 1.0).unwrap();
        diff / target - 1.0
    };
    let (early, late) = (dev(1e3), dev(1e6));
    // With H(t) = t L(ln t) the ratio is 1 + (L''/L')(1 + ½ ln y) + ..., and
    // L(u) ~ ln u here, so the correction is -(1 + ½ ln y)/ln t < 0.
    let predicted = |t: f64| -(1.0 + 0.5 * y.ln()) / t.ln();
    let sign_ok = early.signum() == predicted(1e3).signum() && late.signum() == predicted(1e6).signum();
    outcome(
        late.abs() < early.abs() && sign_ok,
        format!("ratio - 1: {early:.4} at 1e3, {late:.4} at 1e6; predicted {:.4}, {:.4}", predicted(1e3), predicted(1e6)),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("chi reproduction", chi_reproduction),
        ("minimizer identification", minimizer_identification),
        ("consistency triple", consistency_triple),
        ("log-Sobolev suite", log_sobolev_suite),
        ("constrained gap", constrained_gap),
        ("spectral oracle", spectral_oracle),
        ("FK/ODE agreement", fk_ode_agreement),
        ("deterministic LDP cumulant", ldp_cumulant),
        ("Pinsker property", pinsker),
        ("multinomial identity", multinomial_identity),
        ("annealed moment bound", annealed_bound),
        ("confinement trend", confinement_trend),
        ("(HK) verification", hk_verification),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name}: {} [{:.1}s]", i + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
