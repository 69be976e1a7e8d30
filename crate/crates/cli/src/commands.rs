use serde::Serialize;

use pamlab_core::confinement::{
    annealed_f_moment, annealed_partition_sum, confinement_experiment, cumulant_rate_check, default_m_levels,
    intermittency_ratio, ConfinementConfig, TiltChoice,
};
use pamlab_core::continuum::PiecewiseConstant;
use pamlab_core::evolution::{evolve, evolve_with, fk_estimate, total_mass, EvolveMethod};
use pamlab_core::grid::{GridFunction, GridSpec};
use pamlab_core::io::{export_grid, export_solution};
use pamlab_core::lattice::{BoxSpec, LatticeRegion};
use pamlab_core::potential::{sample_field, shift_rescale, PotentialDistribution, ScaleTable};
use pamlab_core::rng::{derive_seed, open01, stream_rng};
use pamlab_core::spectral::{principal_eigen_discrete, rescaled_eigen};
use pamlab_core::variational::{
    chi_closed_form, chi_functional, minimize_chi, minimize_chi_constrained, minimize_chi_constrained_multistart,
    ChiOptions, ConstrainedOptions,
};
use pamlab_core::Error;

use crate::config::RunConfig;
use crate::output::{lin, log, CliResult, PlotSpec, Staging};

fn table(cfg: &RunConfig) -> CliResult<ScaleTable> {
    Ok(ScaleTable::new(cfg.distribution, cfg.t_max)?)
}

/// Seeds of field `i` and of the paths run on it.
fn field_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, 2 * i as u64)
}

fn path_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, 2 * i as u64 + 1)
}

#[derive(Serialize)]
struct ScaleRow {
    t: f64,
    cgf: f64,
    kappa: f64,
    alpha: f64,
    hk_diff: f64,
    hk_target: f64,
    hk_ratio: f64,
}

pub fn scale(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let table = table(cfg)?;
    let rho = cfg.rho();
    let rows = cfg
        .t_grid
        .iter()
        .map(|&t| {
            let (diff, target) = table.hk_ratio(t, cfg.y, rho)?;
            Ok(ScaleRow {
                t,
                cgf: table.cgf(t)?,
                kappa: table.kappa(t)?,
                alpha: table.alpha(t, cfg.d)?,
                hk_diff: diff,
                hk_target: target,
                hk_ratio: diff / target,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    st.csv("scale.csv", &rows)?;
    st.plots.push(PlotSpec::new("scale.csv", "Scale function alpha(t)", log("t"), vec![lin("alpha")]));
    st.plots.push(PlotSpec::new("scale.csv", "Cumulant kappa(t)", log("t"), vec![lin("kappa")]));
    st.plots.push(PlotSpec::new("scale.csv", "(HK) ratio", log("t"), vec![lin("hk_ratio")]));
    Ok(())
}

pub fn check_scale(st: &mut Staging) -> CliResult<()> {
    // κ ≡ c gives α(t) = (t/c)^{1/(d+2)}.
    let c = 0.5;
    let table = ScaleTable::new(PotentialDistribution::Constant { c }, 1e6)?;
    let kappa_err = (table.kappa(10.0)? - c).abs();
    let mut alpha_err: f64 = 0.0;
    for d in 1..=3 {
        for n in [2.0f64, 5.0, 9.0] {
            alpha_err = alpha_err.max((table.alpha(c * n.powi(d as i32 + 2), d)? / n - 1.0).abs());
        }
    }
    st.check(
        "constant law scale",
        kappa_err < 1e-9 && alpha_err < 1e-6,
        format!("|kappa - c| {kappa_err:.1e}, max relative alpha error {alpha_err:.1e}"),
    );
    Ok(())
}

#[derive(Serialize)]
struct EigenRow {
    t: f64,
    field: usize,
    seed: u64,
    alpha: f64,
    radius: usize,
    lambda_discrete: f64,
    lambda_rescaled: f64,
}

pub fn eigen(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let table = table(cfg)?;
    let r = cfg.radius()?;
    let mut rows = Vec::new();
    for &t in &cfg.t_grid {
        let alpha = table.alpha(t, cfg.d)?;
        let radius = (r * alpha).floor() as usize;
        for i in 0..cfg.fields {
            let seed = field_seed(cfg.seed, i);
            let field = sample_field(&cfg.distribution, BoxSpec::lattice(cfg.d, (r * alpha).ceil() as usize), seed)?;
            let inner = field.restrict(radius)?;
            let lambda_discrete = principal_eigen_discrete(&inner.region(), &inner.values, cfg.tol)?.value;
            let (_, bar) = shift_rescale(&field, t, &table, Some(r))?;
            let lambda_rescaled = rescaled_eigen(&bar, r, t, &table, cfg.tol)?;
            rows.push(EigenRow { t, field: i, seed, alpha, radius, lambda_discrete, lambda_rescaled });
        }
    }
    st.csv("eigen.csv", &rows)?;
    st.plots.push(
        PlotSpec::new("eigen.csv", "Rescaled principal eigenvalue", log("t"), vec![lin("lambda_rescaled")]).group("field"),
    );
    Ok(())
}

/// `d·(2cos(π/(m+1)) - 2)`, the top of `Δ` with zero boundary on `m^d` sites.
fn free_top_eigenvalue(d: usize, m: usize) -> f64 {
    d as f64 * (2.0 * (std::f64::consts::PI / (m as f64 + 1.0)).cos() - 2.0)
}

pub fn check_eigen(st: &mut Staging) -> CliResult<()> {
    let mut worst: f64 = 0.0;
    for (d, radius) in [(1usize, 5i64), (1, 40), (2, 3), (3, 2)] {
        let region = LatticeRegion::centered(d, radius);
        let zero = vec![0.0; region.len()];
        let value = principal_eigen_discrete(&region, &zero, 1e-12)?.value;
        worst = worst.max((value - free_top_eigenvalue(d, 2 * radius as usize + 1)).abs());
    }
    st.check("free Laplacian eigenvalue", worst < 1e-10, format!("max error {worst:.1e}"));
    Ok(())
}

#[derive(Serialize)]
struct EvolveRow {
    t: f64,
    field: usize,
    seed: u64,
    total_mass: f64,
    boundary_mass: f64,
    log_mass_rate: f64,
}

pub fn evolve_cmd(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let box_spec = BoxSpec::lattice(cfg.d, cfg.lattice_radius);
    let mut rows = Vec::new();
    let mut last = None;
    for i in 0..cfg.fields {
        let seed = field_seed(cfg.seed, i);
        let field = sample_field(&cfg.distribution, box_spec, seed)?;
        for &t in &cfg.t_grid {
            let state = evolve(&field, t, cfg.tol)?;
            let mass = total_mass(&state);
            rows.push(EvolveRow { t, field: i, seed, total_mass: mass, boundary_mass: state.boundary_mass(), log_mass_rate: mass.ln() / t });
            if i == 0 {
                last = Some(state);
            }
        }
    }
    st.csv("evolve.csv", &rows)?;
    if let Some(state) = last {
        st.adopt(export_solution(&state, &st.path("solution"))?)?;
    }
    st.plots.push(PlotSpec::new("evolve.csv", "Total mass U(t)", lin("t"), vec![log("total_mass")]).group("field"));
    Ok(())
}

/// A single site with `ξ ≡ c` has `U(t) = e^{(c - 2d)t}`.
fn single_site(c: f64) -> CliResult<pamlab_core::potential::PotentialField> {
    Ok(sample_field(&PotentialDistribution::Constant { c }, BoxSpec::lattice(1, 0), 0)?)
}

pub fn check_evolve(st: &mut Staging) -> CliResult<()> {
    let (c, t) = (0.5, 1.0);
    let field = single_site(c)?;
    let exact = ((c - 2.0) * t).exp();
    let krylov = total_mass(&evolve(&field, t, 1e-12)?);
    let dense = total_mass(&evolve_with(&field, t, 1e-12, EvolveMethod::Exact)?);
    let err = ((krylov - exact).abs()).max((dense - exact).abs()) / exact;
    st.check("single-site semigroup", err < 1e-9, format!("relative error {err:.1e}"));
    Ok(())
}

#[derive(Serialize)]
struct FkRow {
    t: f64,
    field: usize,
    seed: u64,
    path_seed: u64,
    fk_mean: f64,
    fk_stderr: f64,
    escaped: f64,
    ode_mass: f64,
    z_score: f64,
}

pub fn fk(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let box_spec = BoxSpec::lattice(cfg.d, cfg.lattice_radius);
    let mut rows = Vec::new();
    for i in 0..cfg.fields {
        let seed = field_seed(cfg.seed, i);
        let field = sample_field(&cfg.distribution, box_spec, seed)?;
        for (k, &t) in cfg.t_grid.iter().enumerate() {
            let paths = derive_seed(path_seed(cfg.seed, i), k as u64);
            let est = fk_estimate(&field, t, cfg.replicas, paths);
            let ode = total_mass(&evolve(&field, t, cfg.tol)?);
            rows.push(FkRow {
                t,
                field: i,
                seed,
                path_seed: paths,
                fk_mean: est.mean,
                fk_stderr: est.stderr,
                escaped: est.escaped,
                ode_mass: ode,
                z_score: (est.mean - ode) / est.stderr,
            });
        }
    }
    st.csv("fk.csv", &rows)?;
    st.plots.push(
        PlotSpec::new("fk.csv", "Feynman-Kac mean against the ODE mass", lin("t"), vec![log("fk_mean"), log("ode_mass")])
            .yerr("fk_stderr")
            .group("field"),
    );
    Ok(())
}

pub fn check_fk(st: &mut Staging) -> CliResult<()> {
    let (c, t) = (0.5, 1.0);
    let est = fk_estimate(&single_site(c)?, t, 100_000, 7);
    let exact = ((c - 2.0) * t).exp();
    let z = (est.mean - exact) / est.stderr;
    st.check("single-site Feynman-Kac", z.abs() <= 3.0, format!("mean {:.5} ± {:.5} vs {exact:.5}", est.mean, est.stderr));
    Ok(())
}

#[derive(Serialize)]
struct ChiRow {
    rho: f64,
    d: usize,
    half_width: f64,
    h: f64,
    value: f64,
    closed_form: f64,
    relative_error: f64,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

#[derive(Serialize)]
struct ConstrainedRow {
    eps: f64,
    r: f64,
    start: usize,
    feasible: bool,
    value: Option<f64>,
    gap: Option<f64>,
    feasibility_residual: Option<f64>,
    converged: Option<bool>,
}

#[derive(Serialize)]
struct ProfileRow {
    profile: usize,
    value: f64,
    bound: f64,
    margin: f64,
}

fn chi_options(cfg: &RunConfig) -> ChiOptions<f64> {
    ChiOptions { gtol: cfg.gtol, max_iter: cfg.max_iter, ..ChiOptions::default() }
}

pub fn chi(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let rho = cfg.rho();
    let grid = GridSpec::snapped(cfg.d, cfg.half_width(), cfg.h)?;
    let result = minimize_chi(rho, grid, &chi_options(cfg))?;
    let exact = chi_closed_form(rho, cfg.d);
    st.csv(
        "chi.csv",
        &[ChiRow {
            rho,
            d: cfg.d,
            half_width: grid.half_width,
            h: grid.spacing,
            value: result.value,
            closed_form: exact,
            relative_error: result.value / exact - 1.0,
            iterations: result.iterations,
            grad_norm: result.grad_norm,
            converged: result.converged,
        }],
    )?;
    st.csv("chi_trace.csv", &result.trace)?;
    st.adopt(export_grid(&result.minimizer, &st.path("chi_minimizer"))?)?;
    st.plots.push(PlotSpec::new("chi_trace.csv", "Optimizer trace", lin("iteration"), vec![lin("value"), log("grad_norm")]));
    if cfg.multistarts > 0 {
        constrained(cfg, st)?;
    }
    if cfg.profiles > 0 {
        log_sobolev(cfg, grid, exact, st)?;
    }
    Ok(())
}

fn constrained(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let rho = cfg.rho();
    let r = cfg.radius()?;
    let grid = GridSpec::new(cfg.d, 3.0 * r, cfg.h)?;
    let opts = ConstrainedOptions { inner: ChiOptions { max_iter: cfg.max_iter, ..ConstrainedOptions::default().inner }, ..ConstrainedOptions::default() };
    let base = minimize_chi_constrained(rho, 0.0, r, grid, &opts)?.value;
    let mut rows = Vec::new();
    for (k, &eps) in cfg.eps_grid.iter().enumerate() {
        match minimize_chi_constrained_multistart(rho, eps, r, grid, cfg.multistarts, derive_seed(cfg.seed, k as u64), &opts) {
            Ok(starts) => rows.extend(starts.iter().enumerate().map(|(i, s)| ConstrainedRow {
                eps,
                r,
                start: i,
                feasible: true,
                value: Some(s.value),
                gap: Some(s.value - base),
                feasibility_residual: Some(s.feasibility_residual),
                converged: Some(s.converged),
            })),
            Err(Error::Infeasible { .. }) => rows.push(ConstrainedRow {
                eps,
                r,
                start: 0,
                feasible: false,
                value: None,
                gap: None,
                feasibility_residual: None,
                converged: None,
            }),
            Err(e) => return Err(e.into()),
        }
    }
    st.csv("chi_constrained.csv", &rows)?;
    st.plots.push(PlotSpec::new("chi_constrained.csv", "Constrained gap chi_R(eps) - chi_R(0)", lin("eps"), vec![lin("gap")]));
    Ok(())
}

/// Two or three Gaussian bumps, vanishing on the boundary, unit norm.
fn random_profile(grid: GridSpec<f64>, seed: u64, i: usize) -> CliResult<GridFunction<f64>> {
    let mut rng = stream_rng(seed, i as u64);
    let l = grid.half_width;
    let bumps = 2 + (open01(&mut rng) < 0.5) as usize;
    let params: Vec<(Vec<f64>, f64, f64)> = (0..bumps)
        .map(|_| {
            let centre = (0..grid.d).map(|_| l * (open01(&mut rng) - 0.5)).collect();
            (centre, 0.3 + 1.7 * open01(&mut rng), 0.2 + open01(&mut rng))
        })
        .collect();
    let g = GridFunction::from_fn(grid, |x| {
        let edge: f64 = x.iter().map(|v| 1.0 - (v / l).powi(2)).product();
        let sum: f64 = params
            .iter()
            .map(|(c, w, a)| a * (-x.iter().zip(c).map(|(v, m)| (v - m).powi(2)).sum::<f64>() / (2.0 * w * w)).exp())
            .sum();
        edge.max(0.0) * sum
    });
    let norm = g.norm_sq().sqrt();
    Ok(g.map(|v| v / norm))
}

fn log_sobolev(cfg: &RunConfig, grid: GridSpec<f64>, chi: f64, st: &mut Staging) -> CliResult<()> {
    let rho = cfg.rho();
    // The grid minimum undershoots χ by about ρ²dh²/16; twice that is allowed.
    let bound = chi - rho * rho * cfg.d as f64 * grid.spacing * grid.spacing / 8.0;
    let rows = (0..cfg.profiles)
        .map(|i| {
            let value = chi_functional(&random_profile(grid, cfg.seed, i)?, rho);
            Ok(ProfileRow { profile: i, value, bound, margin: value - bound })
        })
        .collect::<CliResult<Vec<_>>>()?;
    st.csv("chi_log_sobolev.csv", &rows)?;
    st.plots.push(PlotSpec::new("chi_log_sobolev.csv", "Log-Sobolev margin", lin("profile"), vec![log("margin")]));
    Ok(())
}

pub fn check_chi(st: &mut Staging) -> CliResult<()> {
    let grid = GridSpec::new(1, 8.0, 0.05)?;
    let value = minimize_chi(1.0, grid, &ChiOptions::default())?.value;
    let exact: f64 = chi_closed_form(1.0, 1);
    let rel = (value / exact - 1.0).abs();
    st.check("chi closed form", rel < 0.02, format!("{value:.5} vs {exact:.5}"));
    Ok(())
}

#[derive(Serialize)]
struct LdpRow {
    t: f64,
    r: f64,
    finite_t: f64,
    limit: f64,
    relative_error: Option<f64>,
}

pub fn ldp(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let table = table(cfg)?;
    let rho = cfg.rho();
    let r = cfg.radius()?;
    let f = PiecewiseConstant::new(cfg.d, r, cfg.pieces, cfg.piece_values.clone())?;
    let rows = cfg
        .t_grid
        .iter()
        .map(|&t| {
            let c = cumulant_rate_check(&table, rho, &f, r, t, cfg.subcells)?;
            let relative_error = (c.limit != 0.0).then(|| c.finite_t / c.limit - 1.0);
            Ok(LdpRow { t, r, finite_t: c.finite_t, limit: c.limit, relative_error })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    st.csv("ldp.csv", &rows)?;
    st.plots.push(PlotSpec::new("ldp.csv", "Cumulant against its limit", log("t"), vec![lin("finite_t"), lin("limit")]));
    Ok(())
}

pub fn check_ldp(st: &mut Staging) -> CliResult<()> {
    let table = ScaleTable::new(PotentialDistribution::TripleExp { rho0: 1.0 }, 1e6)?;
    let mut worst: f64 = 0.0;
    for (v, exact) in [(1.0, 0.0), (2.0, 4.0 * 2f64.ln())] {
        let f = PiecewiseConstant::new(1, 1.0, 1, vec![v])?;
        worst = worst.max((cumulant_rate_check(&table, 1.0, &f, 1.0, 1e3, 4)?.limit - exact).abs());
    }
    st.check("constant test functions", worst < 1e-12, format!("max limit error {worst:.1e}"));
    Ok(())
}

#[derive(Serialize)]
struct TailRow {
    t: f64,
    alpha: f64,
    eps: f64,
    tail: f64,
    tail_stderr: f64,
    effective_sample_size: f64,
    low_ess: bool,
}

#[derive(Serialize)]
struct ReplicaCsvRow {
    t: f64,
    replica: usize,
    log_weight: f64,
    distance: f64,
    /// Components separated by spaces.
    argmin_shift: String,
}

fn confinement_config(cfg: &RunConfig) -> CliResult<ConfinementConfig> {
    Ok(ConfinementConfig {
        d: cfg.d,
        t_grid: cfg.t_grid.clone(),
        r: cfg.radius()?,
        rho: cfg.rho,
        m_levels: cfg.m_levels.clone(),
        eps_grid: cfg.eps_grid.clone(),
        replicas: cfg.replicas,
        tilt: cfg.tilt,
        seed: cfg.seed,
        window_cells: cfg.window_cells,
        ess_threshold: cfg.ess_threshold,
    })
}

pub fn confine(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let table = table(cfg)?;
    let report = confinement_experiment(&cfg.distribution, &table, &confinement_config(cfg)?)?;
    let tails: Vec<TailRow> = report
        .slices
        .iter()
        .flat_map(|s| {
            report.eps_grid.iter().enumerate().map(move |(k, &eps)| TailRow {
                t: s.t,
                alpha: s.alpha,
                eps,
                tail: s.tail[k],
                tail_stderr: s.tail_stderr[k],
                effective_sample_size: s.effective_sample_size,
                low_ess: s.low_ess,
            })
        })
        .collect();
    let replicas: Vec<ReplicaCsvRow> = report
        .rows
        .iter()
        .map(|r| ReplicaCsvRow {
            t: r.t,
            replica: r.replica,
            log_weight: r.log_weight,
            distance: r.distance,
            argmin_shift: r.argmin_shift.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
        })
        .collect();
    st.csv("confine_tail.csv", &tails)?;
    st.csv("confine_replicas.csv", &replicas)?;
    st.json("confine_report.json", &report)?;
    st.plots.push(
        PlotSpec::new("confine_tail.csv", "Weighted distance tail G(t, eps)", log("t"), vec![lin("tail")])
            .yerr("tail_stderr")
            .group("eps"),
    );
    Ok(())
}

pub fn check_confine(st: &mut Staging) -> CliResult<()> {
    let dist = PotentialDistribution::Constant { c: 0.5 };
    let table = ScaleTable::new(dist, 1e4)?;
    let cfg = ConfinementConfig {
        t_grid: vec![30.0],
        rho: Some(1.0),
        tilt: TiltChoice::None,
        replicas: 20,
        window_cells: 50,
        ..ConfinementConfig::default()
    };
    let report = confinement_experiment(&dist, &table, &cfg)?;
    let slice = &report.slices[0];
    let degenerate = slice.tail.iter().all(|g| *g == 0.0 || *g == 1.0);
    let ess_ok = (slice.effective_sample_size - 20.0).abs() < 1e-9;
    st.check(
        "constant potential",
        degenerate && ess_ok,
        format!("tails {:?}, ESS {}", slice.tail, slice.effective_sample_size),
    );
    Ok(())
}

#[derive(Serialize)]
struct MomentRow {
    t: f64,
    k: f64,
    m: f64,
    alpha: f64,
    power: f64,
    rate: f64,
    stderr: f64,
    bound: f64,
    ess: f64,
    low_ess: bool,
}

#[derive(Serialize)]
struct IntermittencyRow {
    t: f64,
    p: f64,
    q: f64,
    radius: usize,
    samples: usize,
    ratio: f64,
}

pub fn moments(cfg: &RunConfig, st: &mut Staging) -> CliResult<()> {
    let table = table(cfg)?;
    let r = cfg.radius()?;
    let rho = cfg.distribution.rho();
    let m = match &cfg.m_levels {
        Some(levels) => *levels.first().ok_or("m_levels must not be empty")?,
        None => default_m_levels(rho, cfg.d)[0],
    };
    let mut rows = Vec::new();
    for (i, &t) in cfg.t_grid.iter().enumerate() {
        for (j, &k) in cfg.k_values.iter().enumerate() {
            let seed = derive_seed(derive_seed(cfg.seed, i as u64), j as u64);
            let a = annealed_f_moment(&cfg.distribution, &table, cfg.d, t, r, k, m, cfg.replicas, seed)?;
            let kr = k / rho;
            rows.push(MomentRow {
                t,
                k,
                m,
                alpha: a.alpha,
                power: a.power,
                rate: a.rate,
                stderr: a.stderr,
                bound: k * kr.ln(),
                ess: a.ess,
                low_ess: a.low_ess,
            });
        }
    }
    let box_spec = BoxSpec::lattice(cfg.d, cfg.lattice_radius);
    let ratios = cfg
        .t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let seed = derive_seed(cfg.seed, (cfg.t_grid.len() + i) as u64);
            let ratio = intermittency_ratio(&cfg.distribution, cfg.p, cfg.q, t, box_spec, cfg.samples, seed)?;
            Ok(IntermittencyRow { t, p: cfg.p, q: cfg.q, radius: cfg.lattice_radius, samples: cfg.samples, ratio })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    st.csv("moments.csv", &rows)?;
    st.csv("intermittency.csv", &ratios)?;
    st.plots.push(
        PlotSpec::new("moments.csv", "Annealed moment rate against its bound", log("t"), vec![lin("rate"), lin("bound")])
            .yerr("stderr")
            .group("k"),
    );
    st.plots.push(PlotSpec::new("intermittency.csv", "Intermittency ratio", log("t"), vec![log("ratio")]));
    Ok(())
}

pub fn check_moments(st: &mut Staging) -> CliResult<()> {
    // ⟨(X_1 + X_2)^3⟩ for i.i.d. X_z, expanded by hand.
    let moment = |k: usize| [1.0, 1.5, 3.0, 7.5][k];
    let exact = 2.0 * moment(3) + 6.0 * moment(2) * moment(1);
    let regrouped = annealed_partition_sum(moment, 2, 3);
    let box_spec = BoxSpec::lattice(1, 2);
    let flat = intermittency_ratio(&PotentialDistribution::Constant { c: 0.3 }, 1.0, 2.0, 2.0, box_spec, 20, 1)?;
    let err = (regrouped - exact).abs() / exact;
    st.check(
        "multinomial regrouping",
        err < 1e-12 && (flat - 1.0).abs() < 1e-12,
        format!("relative error {err:.1e}; constant-law intermittency ratio {flat}"),
    );
    Ok(())
}
