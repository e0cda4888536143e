use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{Check, Limit, PlotSpec, Table};
use super::ScenarioConfig;
use crate::chain::{run_trajectory, sample_gibbs, sample_profile, ChainState, ModelParams, NoiseSchedule};
use crate::error::{Error, Result};
use crate::estimators::{self, MartingaleResidual, TimeIntegral};
use crate::kernel::{site_derivatives, site_weights, CorrelationKernel, KernelKind};
use crate::levy::{self, LevyMeasureParams, LevySymbolParams};
use crate::pde::{self, PdeGrids};
use crate::quadform::BandedForm;
use crate::rng::derive_seed;
use crate::stats::{power_fit, Moments};
use crate::testfn::TestFunction;

type Outcome = (Vec<Table>, Vec<Check>);

fn params_for(cfg: &ScenarioConfig, n: usize, a: f64) -> ModelParams {
    ModelParams { n, a, ..cfg.model }
}

fn schedule(cfg: &ScenarioConfig, params: &ModelParams, tags: &[u64], replica: u64) -> NoiseSchedule {
    let substeps = cfg.options.substeps_per_macro.unwrap_or_else(|| params.default_substeps());
    NoiseSchedule::new(derive_seed(cfg.seed, tags), replica, substeps)
}

/// Runs `count` replicas in parallel; results come back in replica order.
fn replicate<T: Send>(count: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Macro-step indices of the grid times, which must be multiples of dt.
fn grid_steps(t_grid: &[f64], dt: f64) -> Result<Vec<usize>> {
    t_grid.iter().map(|&t| crate::chain::macro_steps(t, dt)).collect()
}

/// Row label for a macro time, free of accumulated rounding.
fn time_label(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

fn step_index(state: &ChainState, dt: f64) -> usize {
    (state.t_macro / dt).round() as usize
}

/// (1/L) Σⱼ e^{tΨ(±k)} φ̂(k) conj(ψ̂(k)) over k = j/L: the torus pairing of the
/// semigroup (`adjoint = false`) or its adjoint applied to φ against ψ.
fn torus_pairing(phi: &TestFunction, psi: &TestFunction, t: f64, p: &LevySymbolParams, period: f64, adjoint: bool) -> f64 {
    let width = phi.width().min(psi.width());
    let top = (period * 8.0 / width).ceil() as i64;
    let sum = crate::util::sum((-top..=top).map(|j| {
        let k = j as f64 / period;
        let sym = levy::symbol(if adjoint { -k } else { k }, p);
        ((sym * t).exp() * phi.fourier(k) * psi.fourier(k).conj()).re
    }));
    sum / period
}

/// ∫ φ(−𝒮φ) on the torus of length L.
fn dirichlet_form(phi: &TestFunction, p: &LevySymbolParams, period: f64) -> f64 {
    let top = (period * 8.0 / phi.width()).ceil() as i64;
    crate::util::sum((-top..=top).map(|j| {
        let k = j as f64 / period;
        -phi.fourier(k).norm_sqr() * levy::symmetric_part(k, p)
    })) / period
}

fn fit_row(table: &mut Table, key: &str, x: &[f64], y: &[f64]) {
    match power_fit(x, y) {
        Some(f) => table.push(key, &[f.slope, f.intercept, f.r2, f.ci_low, f.ci_high]),
        None => table.push(key, &[f64::NAN; 5]),
    }
}

const FIT_COLUMNS: [&str; 5] = ["slope", "intercept", "r2", "ci_low", "ci_high"];

fn slope_check(name: &str, table: &str, center: f64, slack: f64) -> Check {
    Check::bound(name, table, "fit", "slope", Some(Limit::Value(center - slack)), Some(Limit::Value(center + slack)))
}

pub fn levy_checks(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let opt = &cfg.options;
    let lambda = cfg.levy.lambda;
    let mut lk = Table::new(
        "lk",
        &["k", "a", "integral_re", "integral_im", "symbol_re", "symbol_im", "residual", "bound", "error_estimate"],
    );
    let mut checks = Vec::new();
    for a in cfg.a_values() {
        let mp = LevyMeasureParams::new(LevySymbolParams::new(lambda, a)?);
        for &k in &opt.k_values {
            let c = levy::lk_check(k, &mp)?;
            let key = format!("k={k},a={a}");
            let bound = tol.lk_rel * (1.0 + c.symbol.norm());
            lk.push(
                key.clone(),
                &[k, a, c.integral.re, c.integral.im, c.symbol.re, c.symbol.im, c.residual, bound, c.error_estimate],
            );
            checks.push(Check::bound(&format!("lk[{key}]"), "lk", &key, "residual", None, Some(Limit::Column("bound".into()))));
        }
    }

    let diff_p = LevySymbolParams::new(lambda, opt.diffusive_a)?;
    let mut diffusive = Table::new("diffusive_limit", &["k", "rescaled_re", "rescaled_im", "target", "rel_error"])
        .with_plot(PlotSpec {
            observable: "rescaled_symbol".into(),
            series_prefix: "diffusive".into(),
            series: vec![],
            x: "k".into(),
            y: "rescaled_re".into(),
            err: None,
        });
    let steps = (opt.diffusive_k_max / 0.05).round() as i64;
    let grid: Vec<f64> = (-steps..=steps).filter(|j| *j != 0).map(|j| j as f64 * 0.05).collect();
    let mut worst: f64 = 0.0;
    for row in levy::crossover_limits(&diff_p, &grid) {
        let r = levy::symbol(row.k, &diff_p) * diff_p.a.sqrt();
        diffusive.push(format!("k={}", row.k), &[row.k, r.re, r.im, levy::diffusive_symbol(row.k, lambda), row.diffusive_error]);
        worst = worst.max(row.diffusive_error);
    }
    diffusive.push("max", &[f64::NAN, f64::NAN, f64::NAN, f64::NAN, worst]);
    checks.push(Check::at_most("diffusive_limit", "diffusive_limit", "max", "rel_error", tol.diffusive_rel));

    let stab_p = LevySymbolParams::new(lambda, opt.stable_a)?;
    let mut stable = Table::new("stable_limit", &["k", "a", "symbol_re", "symbol_im", "stable_re", "stable_im", "rel_error"]);
    let k = opt.stable_k;
    let row = levy::crossover_limits(&stab_p, &[k]);
    let (s, s0) = (levy::symbol(k, &stab_p), levy::stable_symbol(k, lambda));
    let err = row.first().map_or(0.0, |r| r.stable_error);
    stable.push("k", &[k, stab_p.a, s.re, s.im, s0.re, s0.im, err]);
    checks.push(Check::at_most("stable_limit", "stable_limit", "k", "rel_error", tol.stable_rel));
    Ok((vec![lk, diffusive, stable], checks))
}

pub fn pde_checks(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let p = cfg.levy;
    let mut levels = Table::new(
        "refinement",
        &["phi", "level", "m", "p", "h_u", "h_v", "interior_f", "boundary_f", "interior_g", "boundary_g"],
    );
    let names = ["interior_f", "boundary_f", "interior_g", "boundary_g"];
    let mut orders = Table::new("orders", &["phi", "step", names[0], names[1], names[2], names[3]]);
    let mut generator = Table::new("generator", &["phi", "residual", "boundary_exact"]);
    let mut energy = Table::new("energy", &["phi", "lhs", "lhs_grid", "rhs", "gap", "gap_grid"]);
    let mut checks = Vec::new();
    for (i, phi) in cfg.test_functions.iter().enumerate() {
        let fi = i as f64;
        let default = PdeGrids::default_for(phi, &p);
        // spacing of the 512-point grid on a half-width-12 window, whatever the support
        let m = 512 * (default.half_width / 12.0).ceil().max(1.0) as usize;
        let base = PdeGrids { m: m.next_power_of_two(), p: 65, ..default };
        let study = pde::refinement_study(phi, &p, base, cfg.options.refinement_levels)?;
        for (j, r) in study.levels.iter().enumerate() {
            levels.push(
                format!("phi={i},level={j}"),
                &[fi, j as f64, r.m as f64, r.p as f64, r.h_u, r.h_v, r.interior_f, r.boundary_f, r.interior_g, r.boundary_g],
            );
        }
        for (j, o) in study.orders.iter().enumerate() {
            let key = format!("phi={i},step={j}");
            orders.push(key.clone(), &[fi, j as f64, o[0], o[1], o[2], o[3]]);
            for name in names {
                checks.push(Check::bound(
                    &format!("order[{key},{name}]"),
                    "orders",
                    &key,
                    name,
                    Some(Limit::Value(tol.order_min)),
                    Some(Limit::Value(tol.order_max)),
                ));
            }
        }
        let f = pde::solve_f(phi, &p, default)?;
        let key = format!("phi={i}");
        generator.push(
            key.clone(),
            &[fi, pde::generator_consistency(phi, &f, &p), pde::boundary_residual_f_exact(&f, phi)],
        );
        checks.push(Check::at_most(&format!("generator[{key}]"), "generator", &key, "residual", tol.generator));
        let e = pde::energy_functional(&f, &p, phi)?;
        energy.push(key.clone(), &[fi, e.lhs, e.lhs_grid, e.rhs, e.relative_gap(), e.relative_gap_grid()]);
        checks.push(Check::at_most(&format!("energy_spectral[{key}]"), "energy", &key, "gap", tol.energy_spectral));
        checks.push(Check::at_most(&format!("energy_grid[{key}]"), "energy", &key, "gap_grid", tol.energy_grid));
    }
    Ok((vec![levels, orders, generator, energy], checks))
}

pub fn conservation(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let opt = &cfg.options;
    let n = cfg.n_sweep[0];
    let params = params_for(cfg, n, cfg.model.a);
    let sched0 = schedule(cfg, &params, &[1, n as u64], 0);
    let steps = opt.conservation_substeps.div_ceil(sched0.substeps_per_macro as u64);
    let t_drift = steps as f64 * params.dt_macro;

    let mut drift = Table::new("drift", &["replica", "substeps", "energy_drift", "volume_drift_without_y"]);
    let rows = replicate(opt.conservation_replicas, |r| {
        let sched = schedule(cfg, &params, &[1, n as u64], r);
        let init = sample_gibbs(&params, &sched)?;
        let (_, full) = run_trajectory(init.clone(), &params, &sched, t_drift, &mut [])?;
        let (_, no_y) = run_trajectory(init, &params, &sched.without_y(), t_drift, &mut [])?;
        Ok((full.substeps, full.energy_drift, no_y.volume_drift))
    })?;
    let mut checks = Vec::new();
    for (r, (subs, e, v)) in rows.into_iter().enumerate() {
        let key = format!("replica={r}");
        drift.push(key.clone(), &[r as f64, subs as f64, e, v]);
        checks.push(Check::at_most(&format!("energy_drift[{key}]"), "drift", &key, "energy_drift", tol.energy_drift));
        checks.push(Check::at_most(&format!("volume_drift[{key}]"), "drift", &key, "volume_drift_without_y", tol.volume_drift));
    }

    // V is an Ornstein–Uhlenbeck process under the 𝒴 noise: dV = −κV dt + dM
    // with κ = 2γₙn^{3/2}; the compensated martingale isolates the growth rate.
    let t = opt.volume_t;
    let vp = ModelParams { dt_macro: t, ..params };
    let kappa = 2.0 * vp.gamma_n() * vp.time_scale();
    let sites = vp.sites() as f64;
    let rate = 4.0 * vp.gamma_n() * vp.time_scale() * sites / vp.beta;
    let samples = replicate(cfg.replicas, |r| {
        let sched = schedule(cfg, &vp, &[2, n as u64], r);
        let init = sample_gibbs(&vp, &sched)?;
        let v0 = init.volume();
        let mut integral = TimeIntegral::new(|s: &ChainState| s.volume(), true);
        let (end, _) = run_trajectory(init, &vp, &sched, t, &mut [&mut integral])?;
        Ok((end.volume() - v0 + kappa * integral.integral, end.volume() - v0))
    })?;
    let m = Moments::from_slice(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
    let raw = Moments::from_slice(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
    let (m2, m2_err) = m.second_moment_about(0.0);
    let (r2, r2_err) = raw.second_moment_about(0.0);
    let ou_raw = 2.0 * sites / vp.beta * (1.0 - (-kappa * t).exp()) / t;
    let mut vol = Table::new(
        "volume_rate",
        &["n", "t", "replicas", "rate", "rate_stderr", "analytic", "raw_growth", "raw_growth_stderr", "raw_growth_ou"],
    );
    vol.push("volume", &[n as f64, t, cfg.replicas as f64, m2 / t, m2_err / t, rate, r2 / t, r2_err / t, ou_raw]);
    checks.push(Check::close("volume_rate", "volume_rate", "volume", "rate", "analytic", tol.volume_rate_rel, 0.0, None));
    Ok((vec![drift, vol], checks))
}

pub fn stationary_variance(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let scaling = cfg.options.correlation_scaling;
    let mut t_grid = cfg.t_grid.clone();
    t_grid.sort_by(f64::total_cmp);
    let mut energy = Table::new(
        "energy_field",
        &["n", "phi", "t", "mean", "mean_stderr", "variance", "variance_stderr", "target", "zero"],
    )
    .with_plot(PlotSpec {
        observable: "energy_field_variance".into(),
        series_prefix: "empirical".into(),
        series: vec!["n".into(), "phi".into()],
        x: "t".into(),
        y: "variance".into(),
        err: Some("variance_stderr".into()),
    });
    let mut corr = Table::new("correlation_field", &["n", "t", "mean", "mean_stderr", "second_moment", "exact_second_moment", "zero"]);
    let mut checks = Vec::new();
    let beta = cfg.model.beta;
    for &n in &cfg.n_sweep {
        let params = params_for(cfg, n, cfg.model.a);
        let lp = LevySymbolParams::new(params.lambda, params.a)?;
        let weights: Vec<Vec<f64>> = cfg.test_functions.iter().map(|f| site_weights(f, n, params.period)).collect();
        let kernel = CorrelationKernel::build(&cfg.test_functions[0], &lp, n, params.period, KernelKind::F)?;
        let steps = grid_steps(&t_grid, params.dt_macro)?;
        let t_final = *t_grid.last().unwrap();
        let per_replica = replicate(cfg.replicas, |r| {
            let sched = schedule(cfg, &params, &[3, n as u64], r);
            let init = sample_gibbs(&params, &sched)?;
            let mut rec: Vec<(Vec<f64>, f64)> = Vec::new();
            let mut obs = |s: &ChainState| {
                if steps.contains(&step_index(s, params.dt_macro)) {
                    let e = weights.iter().map(|w| estimators::energy_field(&s.omega, w, beta, n)).collect();
                    rec.push((e, estimators::correlation_field(&s.omega, &kernel, beta, scaling)));
                }
            };
            run_trajectory(init, &params, &sched, t_final, &mut [&mut obs])?;
            Ok(rec)
        })?;
        for (ti, &t) in t_grid.iter().enumerate() {
            for (fi, w) in weights.iter().enumerate() {
                let m = Moments::from_slice(&per_replica.iter().map(|r| r[ti].0[fi]).collect::<Vec<_>>());
                let target = 2.0 / (beta * beta) * w.iter().map(|x| x * x).sum::<f64>() / n as f64;
                let key = format!("n={n},phi={fi},t={t}");
                energy.push(
                    key.clone(),
                    &[n as f64, fi as f64, t, m.mean, m.stderr(), m.variance(), m.variance_stderr(), target, 0.0],
                );
                checks.push(Check::close(&format!("energy_mean[{key}]"), "energy_field", &key, "mean", "zero", 0.0, 0.0, Some(("mean_stderr", tol.sigmas))));
                checks.push(Check::close(
                    &format!("energy_variance[{key}]"),
                    "energy_field",
                    &key,
                    "variance",
                    "target",
                    0.0,
                    0.0,
                    Some(("variance_stderr", tol.sigmas)),
                ));
            }
            let c = Moments::from_slice(&per_replica.iter().map(|r| r[ti].1).collect::<Vec<_>>());
            let exact = 2.0 / (beta * beta) * scaling.factor(n).powi(2) * kernel.frobenius_sq();
            let key = format!("n={n},t={t}");
            corr.push(key.clone(), &[n as f64, t, c.mean, c.stderr(), c.second_moment_about(0.0).0, exact, 0.0]);
            checks.push(Check::close(&format!("correlation_mean[{key}]"), "correlation_field", &key, "mean", "zero", 0.0, 0.0, Some(("mean_stderr", tol.sigmas))));
        }
    }

    // E[𝒞²] = 2β⁻²c²‖f‖² exactly under the Gibbs measure.
    let mut scaling_table = Table::new("correlation_scaling", &["n", "second_moment"]);
    let mut sizes: Vec<usize> = cfg.options.correlation_n.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in &sizes {
        let lp = LevySymbolParams::new(cfg.model.lambda, cfg.model.a)?;
        let k = CorrelationKernel::build(&cfg.test_functions[0], &lp, n, cfg.model.period, KernelKind::F)?;
        let v = 2.0 / (beta * beta) * scaling.factor(n).powi(2) * k.frobenius_sq();
        scaling_table.push(format!("n={n}"), &[n as f64, v]);
        xs.push(n as f64);
        ys.push(v);
    }
    let mut fit = Table::new("correlation_scaling_fit", &FIT_COLUMNS);
    fit_row(&mut fit, "fit", &xs, &ys);
    if sizes.len() >= 2 {
        checks.push(slope_check("correlation_second_moment_slope", "correlation_scaling_fit", tol.correlation_slope, tol.correlation_slope_slack));
    }
    Ok((vec![energy, corr, scaling_table, fit], checks))
}

pub fn qv_limits(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let opt = &cfg.options;
    let scaling = opt.correlation_scaling;
    let phi = &cfg.test_functions[0];
    let t = *cfg.t_grid.iter().max_by(|a, b| a.total_cmp(b)).unwrap();
    let beta = cfg.model.beta;
    let corr_n: Vec<usize> = if opt.correlation_n.is_empty() { cfg.n_sweep.clone() } else { opt.correlation_n.clone() };
    let mut all_n: Vec<usize> = cfg.n_sweep.iter().chain(&corr_n).copied().collect();
    all_n.sort_unstable();
    all_n.dedup();

    let mut qe = Table::new("qv_energy", &["n", "t", "mean", "stderr", "gibbs"]).with_plot(PlotSpec {
        observable: "energy_qv".into(),
        series_prefix: "empirical".into(),
        series: vec![],
        x: "n".into(),
        y: "mean".into(),
        err: Some("stderr".into()),
    });
    let mut qc = Table::new(
        "qv_correlation",
        &["n", "t", "mean", "stderr", "variance", "variance_stderr", "gibbs", "limit", "limit_corrected", "ratio"],
    )
    .with_plot(PlotSpec {
        observable: "correlation_qv".into(),
        series_prefix: "empirical".into(),
        series: vec![],
        x: "n".into(),
        y: "mean".into(),
        err: Some("stderr".into()),
    });
    let mut checks = Vec::new();
    let lp = LevySymbolParams::new(cfg.model.lambda, cfg.model.a)?;
    let form = dirichlet_form(phi, &lp, cfg.model.period as f64);
    let limit = 2.0 * t / (beta * beta) * form;
    for &n in &all_n {
        let params = params_for(cfg, n, cfg.model.a);
        let (lam, gam) = (params.lambda, params.gamma_n());
        let weights = site_weights(phi, n, params.period);
        let kernel = if corr_n.contains(&n) {
            Some(CorrelationKernel::build(phi, &lp, n, params.period, KernelKind::F)?)
        } else {
            None
        };
        let rows = replicate(cfg.replicas, |r| {
            let sched = schedule(cfg, &params, &[4, n as u64], r);
            let init = sample_gibbs(&params, &sched)?;
            let mut e = TimeIntegral::new(|s: &ChainState| estimators::energy_qv_rate(&s.omega, &weights, lam, gam, n), false);
            let mut scratch = Vec::new();
            let mut c = TimeIntegral::new(
                |s: &ChainState| match &kernel {
                    Some(k) => estimators::correlation_qv_rate(&s.omega, k, lam, gam, scaling, &mut scratch),
                    None => 0.0,
                },
                false,
            );
            run_trajectory(init, &params, &sched, t, &mut [&mut e, &mut c])?;
            Ok((e.integral, c.integral))
        })?;
        let me = Moments::from_slice(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
        if cfg.n_sweep.contains(&n) {
            let gibbs = t * estimators::energy_qv_gibbs_mean(&weights, lam, gam, beta, n);
            qe.push(format!("n={n}"), &[n as f64, t, me.mean, me.stderr(), gibbs]);
        }
        if let Some(k) = &kernel {
            let mc = Moments::from_slice(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
            let gibbs = t * estimators::correlation_qv_gibbs_mean(k, lam, gam, beta, scaling);
            qc.push(
                format!("n={n}"),
                &[n as f64, t, mc.mean, mc.stderr(), mc.variance(), mc.variance_stderr(), gibbs, limit, 2.0 * limit, mc.mean / limit],
            );
        }
    }
    let xs: Vec<f64> = qe.rows.iter().map(|r| r.1[0]).collect();
    let ys: Vec<f64> = qe.rows.iter().map(|r| r.1[2]).collect();
    let mut fit = Table::new("qv_energy_fit", &FIT_COLUMNS);
    fit_row(&mut fit, "fit", &xs, &ys);
    checks.push(slope_check("energy_qv_slope", "qv_energy_fit", tol.qv_slope, tol.qv_slope_slack));

    let mut sorted = corr_n.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(top) = sorted.last() {
        let key = format!("n={top}");
        checks.push(Check::close("correlation_qv_limit", "qv_correlation", &key, "mean", "limit", tol.qv_limit_rel, 0.0, None));
        checks.push(Check::close(
            "correlation_qv_limit_corrected",
            "qv_correlation",
            &key,
            "mean",
            "limit_corrected",
            tol.qv_limit_rel,
            0.0,
            None,
        ));
    }
    if sorted.len() >= 2 {
        checks.push(Check::strictly_decreasing(
            "correlation_qv_variance_decreasing",
            "qv_correlation",
            sorted.iter().map(|n| format!("n={n}")).collect(),
            "variance",
        ));
    }
    let mut tables = vec![qe, fit, qc];
    if opt.martingale_replicas > 0 {
        let (table, more) = martingale(cfg)?;
        tables.push(table);
        checks.extend(more);
    }
    Ok((tables, checks))
}

/// Dynkin residual of the correlation field against its exact quadratic variation.
fn martingale(cfg: &ScenarioConfig) -> Result<(Table, Vec<Check>)> {
    let tol = &cfg.tolerances;
    let opt = &cfg.options;
    let n = opt.martingale_n;
    let params = params_for(cfg, n, cfg.model.a);
    params.validate()?;
    let lp = LevySymbolParams::new(params.lambda, params.a)?;
    let phi = &cfg.test_functions[0];
    let kernel = CorrelationKernel::build(phi, &lp, n, params.period, KernelKind::F)?;
    let c = opt.correlation_scaling.factor(n);
    let scaled = BandedForm {
        sites: kernel.form.sites,
        bands: kernel.form.bands.iter().map(|b| b.iter().map(|v| v * c).collect()).collect(),
    };
    let (lam, gam) = (params.lambda, params.gamma_n());
    let rate = estimators::correlation_qv_gibbs_mean(&kernel, lam, gam, params.beta, opt.correlation_scaling);
    let t = opt.martingale_t;
    let series = replicate(opt.martingale_replicas, |r| {
        let sched = schedule(cfg, &params, &[5, n as u64], r);
        let init = sample_gibbs(&params, &sched)?;
        let mut m = MartingaleResidual::new(scaled.clone(), lam, gam, params.time_scale(), params.dt_macro);
        run_trajectory(init, &params, &sched, t, &mut [&mut m])?;
        Ok(m.series)
    })?;
    let mut table = Table::new("martingale", &["n", "t", "mean", "mean_stderr", "variance", "variance_stderr", "qv_exact", "zero"])
        .with_plot(PlotSpec {
            observable: "martingale_variance".into(),
            series_prefix: "empirical".into(),
            series: vec!["n".into()],
            x: "t".into(),
            y: "variance".into(),
            err: Some("variance_stderr".into()),
        });
    let mut checks = Vec::new();
    let points = series.first().map_or(0, |s| s.len());
    for i in 1..points {
        let ti = series[0][i].0;
        let m = Moments::from_slice(&series.iter().map(|s| s[i].1).collect::<Vec<_>>());
        table.push(format!("t={}", time_label(ti)), &[n as f64, ti, m.mean, m.stderr(), m.variance(), m.variance_stderr(), rate * ti, 0.0]);
    }
    if points > 1 {
        let key = format!("t={}", time_label(series[0][points - 1].0));
        checks.push(Check::close("martingale_mean", "martingale", &key, "mean", "zero", 0.0, 0.0, Some(("mean_stderr", tol.sigmas))));
        checks.push(Check::close("martingale_variance", "martingale", &key, "variance", "qv_exact", tol.martingale_rel, 0.0, None));
    }
    Ok((table, checks))
}

pub fn replacement(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let phi = &cfg.test_functions[0];
    let t = cfg.t_grid[0];
    let mut table = Table::new("replacement", &["n", "t", "second_moment", "stderr", "bound"]).with_plot(PlotSpec {
        observable: "replacement_second_moment".into(),
        series_prefix: "empirical".into(),
        series: vec![],
        x: "n".into(),
        y: "second_moment".into(),
        err: Some("stderr".into()),
    });
    let mut checks = Vec::new();
    let mut sizes = cfg.n_sweep.clone();
    sizes.sort_unstable();
    sizes.dedup();
    for &n in &sizes {
        let params = params_for(cfg, n, cfg.model.a);
        let psi = site_derivatives(phi, n, params.period);
        let integrals = replicate(cfg.replicas, |r| {
            let sched = schedule(cfg, &params, &[6, n as u64], r);
            let init = sample_gibbs(&params, &sched)?;
            let mut obs = TimeIntegral::new(|s: &ChainState| estimators::replacement_integrand(&s.omega, &psi, n), true);
            run_trajectory(init, &params, &sched, t, &mut [&mut obs])?;
            Ok(obs.integral)
        })?;
        let (m2, err) = Moments::from_slice(&integrals).second_moment_about(0.0);
        let bound = estimators::replacement_bound(&psi, t, params.gamma_n(), params.beta, n);
        let key = format!("n={n}");
        table.push(key.clone(), &[n as f64, t, m2, err, bound]);
        checks.push(Check::bound(&format!("replacement_bound[{key}]"), "replacement", &key, "second_moment", None, Some(Limit::Column("bound".into()))));
    }
    let xs: Vec<f64> = table.rows.iter().map(|r| r.1[0]).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| r.1[2]).collect();
    let mut fit = Table::new("replacement_fit", &FIT_COLUMNS);
    fit_row(&mut fit, "fit", &xs, &ys);
    checks.push(Check::bound(
        "replacement_exponent",
        "replacement_fit",
        "fit",
        "slope",
        None,
        Some(Limit::Value(tol.replacement_exponent)),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[7]));
    let mut worst: f64 = 0.0;
    for sites in [6usize, 9, 16] {
        for _ in 0..cfg.options.identity_states {
            let omega: Vec<f64> = (0..sites).map(|_| rng.gen_range(-2.0..2.0)).collect();
            worst = worst.max(estimators::s2_inverse_residual(&omega));
        }
    }
    let mut identity = Table::new("s2_inverse_identity", &["states", "max_residual"]);
    identity.push("max", &[3.0 * cfg.options.identity_states as f64, worst]);
    checks.push(Check::at_most("s2_inverse_identity", "s2_inverse_identity", "max", "max_residual", tol.identity));
    Ok((vec![table, fit, identity], checks))
}

pub fn crossover_kernel(cfg: &ScenarioConfig) -> Result<Outcome> {
    let opt = &cfg.options;
    let (phi, psi) = (&cfg.test_functions[0], &cfg.test_functions[1]);
    let t = cfg.t_grid[0];
    let period = cfg.model.period as f64;
    let beta = cfg.model.beta;
    let amp = opt.hot_amplitude;
    if !(amp > 0.0) || opt.shifts == 0 {
        return Err(Error::Config("hot_amplitude and shifts must be positive".into()));
    }
    let shifts: Vec<f64> = (0..opt.shifts).map(|j| period * (j as f64 / opt.shifts as f64 - 0.5)).collect();
    let dv = period / opt.shifts as f64;
    let probes: Vec<TestFunction> = shifts.iter().map(|v| psi.shifted(*v)).collect();
    let mut sizes = cfg.n_sweep.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let n_max = *sizes.last().unwrap();

    let mut emp = Table::new("crossover", &["a", "n", "v", "value", "stderr"]).with_plot(PlotSpec {
        observable: "mollified_correlation".into(),
        series_prefix: "empirical".into(),
        series: vec!["a".into(), "n".into()],
        x: "v".into(),
        y: "value".into(),
        err: Some("stderr".into()),
    });
    let mut spec = Table::new("crossover_spectral", &["a", "v", "value"]).with_plot(PlotSpec {
        observable: "mollified_correlation".into(),
        series_prefix: "spectral".into(),
        series: vec!["a".into()],
        x: "v".into(),
        y: "value".into(),
        err: None,
    });
    let mut mismatch = Table::new("crossover_mismatch", &["a", "n", "replicas", "l2", "l2_stderr"]);
    let mut checks = Vec::new();
    for (ai, a) in cfg.a_values().into_iter().enumerate() {
        let lp = LevySymbolParams::new(cfg.model.lambda, a)?;
        let pred: Vec<f64> = probes.iter().map(|q| torus_pairing(phi, q, t, &lp, period, true)).collect();
        for (v, p) in shifts.iter().zip(&pred) {
            spec.push(format!("a={a},v={}", time_label(*v)), &[a, *v, *p]);
        }
        for &n in &sizes {
            let params = ModelParams { dt_macro: t, ..params_for(cfg, n, a) };
            let weights = site_weights(phi, n, params.period);
            if let Some(w) = weights.iter().find(|w| 1.0 / beta + amp * **w <= 0.0) {
                return Err(Error::Config(format!("hot profile variance 1/β + A·φ = {} is not positive", 1.0 / beta + amp * w)));
            }
            let probe_w: Vec<Vec<f64>> = probes.iter().map(|q| site_weights(q, n, params.period)).collect();
            let ratio = (n_max as f64 / n as f64).powi(2);
            let count = (cfg.replicas as f64 * ratio).ceil() as usize;
            let rows = replicate(count, |r| {
                let sched = schedule(cfg, &params, &[8, ai as u64, n as u64], r);
                let init = sample_profile(params.sites(), &sched, |x| (1.0 / beta + amp * weights[x]).sqrt());
                let (end, _) = run_trajectory(init, &params, &sched, t, &mut [])?;
                let e: Vec<f64> = end.omega.iter().map(|w| w * w - 1.0 / beta).collect();
                Ok(probe_w
                    .iter()
                    .map(|q| crate::util::sum(q.iter().zip(&e).map(|(a, b)| a * b)) / (n as f64 * amp))
                    .collect::<Vec<f64>>())
            })?;
            let moments: Vec<Moments> =
                (0..shifts.len()).map(|j| Moments::from_slice(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())).collect();
            let resid: Vec<f64> = moments.iter().zip(&pred).map(|(m, p)| m.mean - p).collect();
            let l2 = (resid.iter().map(|r| r * r).sum::<f64>() * dv).sqrt();
            // delta method: project each replica's curve on the residual direction
            let proj: Vec<f64> =
                rows.iter().map(|row| row.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>() * dv / l2.max(f64::MIN_POSITIVE)).collect();
            let l2_err = Moments::from_slice(&proj).stderr();
            for ((v, m), _) in shifts.iter().zip(&moments).zip(&pred) {
                emp.push(format!("a={a},n={n},v={}", time_label(*v)), &[a, n as f64, *v, m.mean, m.stderr()]);
            }
            mismatch.push(format!("a={a},n={n}"), &[a, n as f64, count as f64, l2, l2_err]);
        }
        if sizes.len() >= 2 {
            checks.push(Check::strictly_decreasing(
                &format!("crossover_mismatch_decreasing[a={a}]"),
                "crossover_mismatch",
                sizes.iter().map(|n| format!("a={a},n={n}")).collect(),
                "l2",
            ));
        }
    }
    Ok((vec![emp, spec, mismatch], checks))
}

pub fn ou_covariance(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tol = &cfg.tolerances;
    let (phi, psi) = (&cfg.test_functions[0], &cfg.test_functions[1]);
    let beta = cfg.model.beta;
    let period = cfg.model.period as f64;
    let mut t_grid = cfg.t_grid.clone();
    t_grid.sort_by(f64::total_cmp);
    let lp = LevySymbolParams::new(cfg.model.lambda, cfg.model.a)?;
    let mut table = Table::new("ou", &["n", "t", "value", "stderr", "prediction"]).with_plot(PlotSpec {
        observable: "energy_field_covariance".into(),
        series_prefix: "empirical".into(),
        series: vec!["n".into()],
        x: "t".into(),
        y: "value".into(),
        err: Some("stderr".into()),
    });
    let mut checks = Vec::new();
    for &n in &cfg.n_sweep {
        let params = params_for(cfg, n, cfg.model.a);
        let wp = site_weights(phi, n, params.period);
        let wq = site_weights(psi, n, params.period);
        let steps = grid_steps(&t_grid, params.dt_macro)?;
        let t_final = *t_grid.last().unwrap();
        // Stationarity and translation invariance let each replica average
        // ℰ_t(φ)ℰ_0(ψ) over all ring translations of the pair:
        // (1/N)Σ_s ℰ_t(φ_s)ℰ_0(ψ_s) = (2/β²)(1/n)Σ_d P(d)K(d), with P the
        // energy correlation profile and K(d) = Σ_u φ(u+d)ψ(u).
        let sites = wp.len();
        let overlap: Vec<f64> = (0..sites)
            .map(|d| crate::util::sum((0..sites).map(|u| wp[(u + d) % sites] * wq[u])))
            .collect();
        let rows = replicate(cfg.replicas, |r| {
            let sched = schedule(cfg, &params, &[9, n as u64], r);
            let init = sample_gibbs(&params, &sched)?;
            let omega0 = init.omega.clone();
            let mut rec = Vec::new();
            let mut obs = |s: &ChainState| {
                if steps.contains(&step_index(s, params.dt_macro)) {
                    let profile = estimators::energy_correlation_profile(&omega0, &s.omega, beta);
                    let pair = crate::util::sum(profile.iter().zip(&overlap).map(|(p, k)| p * k));
                    rec.push(2.0 / (beta * beta) * pair / n as f64);
                }
            };
            run_trajectory(init, &params, &sched, t_final, &mut [&mut obs])?;
            Ok(rec)
        })?;
        let norm = |w: &[f64]| (w.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
        let scale = 2.0 / (beta * beta) * norm(&wp) * norm(&wq);
        for (ti, &t) in t_grid.iter().enumerate() {
            let m = Moments::from_slice(&rows.iter().map(|r| r[ti]).collect::<Vec<_>>());
            let pred = 2.0 / (beta * beta) * torus_pairing(phi, psi, t, &lp, period, false);
            let key = format!("n={n},t={t}");
            table.push(key.clone(), &[n as f64, t, m.mean, m.stderr(), pred]);
            checks.push(Check::close(
                &format!("ou_covariance[{key}]"),
                "ou",
                &key,
                "value",
                "prediction",
                0.0,
                // equal-time covariance is exact at every n; later times carry
                // corrections from the finite volume relaxation rate 2a√n
                if t == 0.0 { 0.0 } else { tol.ou_rel * scale },
                Some(("stderr", tol.sigmas)),
            ));
        }
    }
    Ok((vec![table], checks))
}
