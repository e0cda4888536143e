//! Configuration-driven scenarios binding the chain, the operator, the PDE
//! layer and the estimators into reproducible experiments.

mod report;
mod scenarios;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chain::ModelParams;
use crate::error::{Error, Result};
use crate::estimators::CorrelationScaling;
use crate::levy::LevySymbolParams;
use crate::testfn::TestFunction;

pub use report::{emit_plots_data, verify, Check, Limit, PlotSpec, Report, Rule, Table, Verdict, VerifyOutcome};
pub use report::{PLOTS_FILE, REPORT_FILE};

/// Registered scenarios with a one-line description.
pub const SCENARIOS: [(&str, &str); 8] = [
    ("levy-checks", "Lévy–Khintchine quadrature against the symbol; diffusive and stable limits"),
    ("pde-checks", "half-plane fields: refinement orders, generator consistency, energy identity"),
    ("conservation", "energy and volume conservation; volume variance growth against its carré du champ"),
    ("stationary-variance", "centering and variance of the energy field; correlation-field scaling"),
    ("qv-limits", "quadratic variations of the energy and correlation martingales; Dynkin residuals"),
    ("replacement", "second moment of the replacement integral and the explicit inverse identity"),
    ("crossover-kernel", "mollified energy correlation against the spectral kernel across n"),
    ("ou-covariance", "stationary two-time energy-field covariance against the limiting OU prediction"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub model: ModelParams,
    pub levy: LevySymbolParams,
    #[serde(default)]
    pub test_functions: Vec<TestFunction>,
    #[serde(default)]
    pub n_sweep: Vec<usize>,
    /// Values of the crossover parameter; empty means `[model.a]`.
    #[serde(default)]
    pub a_sweep: Vec<f64>,
    pub replicas: usize,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub options: Options,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub lk_rel: f64,
    pub diffusive_rel: f64,
    pub stable_rel: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub generator: f64,
    pub energy_spectral: f64,
    pub energy_grid: f64,
    pub energy_drift: f64,
    pub volume_drift: f64,
    pub volume_rate_rel: f64,
    /// Standard errors allowed in statistical comparisons.
    pub sigmas: f64,
    pub qv_slope: f64,
    pub qv_slope_slack: f64,
    pub qv_limit_rel: f64,
    pub correlation_slope: f64,
    pub correlation_slope_slack: f64,
    pub replacement_exponent: f64,
    pub identity: f64,
    pub martingale_rel: f64,
    /// Allowed OU covariance deviation, relative to 2β⁻²‖φ‖‖ψ‖.
    pub ou_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lk_rel: 1e-6,
            diffusive_rel: 0.02,
            stable_rel: 1e-3,
            order_min: 1.8,
            order_max: 2.3,
            generator: 1e-4,
            energy_spectral: 1e-6,
            energy_grid: 1e-3,
            energy_drift: 1e-8,
            volume_drift: 1e-10,
            volume_rate_rel: 0.1,
            sigmas: 4.0,
            qv_slope: -0.5,
            qv_slope_slack: 0.15,
            qv_limit_rel: 0.1,
            correlation_slope: -0.5,
            correlation_slope_slack: 0.15,
            replacement_exponent: -0.35,
            identity: 1e-12,
            martingale_rel: 0.1,
            ou_rel: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Overrides the default sub-step count per macro step.
    pub substeps_per_macro: Option<usize>,
    /// Wave numbers for the Lévy–Khintchine comparison.
    pub k_values: Vec<f64>,
    pub diffusive_a: f64,
    pub diffusive_k_max: f64,
    pub stable_a: f64,
    pub stable_k: f64,
    pub refinement_levels: usize,
    /// Micro sub-steps for the drift checks.
    pub conservation_substeps: u64,
    pub conservation_replicas: usize,
    /// Macro window for the volume variance growth.
    pub volume_t: f64,
    pub correlation_scaling: CorrelationScaling,
    /// Ring sizes for the correlation martingale; empty means `n_sweep`.
    pub correlation_n: Vec<usize>,
    pub martingale_n: usize,
    pub martingale_t: f64,
    /// 0 disables the Dynkin residual part of `qv-limits`.
    pub martingale_replicas: usize,
    /// Hot-profile amplitude A in σ² = β⁻¹ + Aφ.
    pub hot_amplitude: f64,
    /// Number of ψ translates spanning the ring.
    pub shifts: usize,
    /// Random states per ring size in the algebraic identity check.
    pub identity_states: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            substeps_per_macro: None,
            k_values: vec![0.5, 1.0, 2.0, 5.0],
            diffusive_a: 1e4,
            diffusive_k_max: 2.0,
            stable_a: 1e-6,
            stable_k: 1.0,
            refinement_levels: 3,
            conservation_substeps: 100_000,
            conservation_replicas: 2,
            volume_t: 0.05,
            correlation_scaling: CorrelationScaling::InverseN,
            correlation_n: vec![64, 128, 256],
            martingale_n: 128,
            martingale_t: 0.25,
            martingale_replicas: 1000,
            hot_amplitude: 20.0,
            shifts: 32,
            identity_states: 50,
        }
    }
}

impl ScenarioConfig {
    /// The configuration used for acceptance runs of `scenario`.
    pub fn preset(scenario: &str) -> Result<Self> {
        let gauss = TestFunction::gaussian(0.5, 0.2);
        let base = ScenarioConfig {
            scenario: scenario.into(),
            model: ModelParams::new(64, 1.0, 1.0, 1.0, 0.05),
            levy: LevySymbolParams { lambda: 1.0, a: 1.0 },
            test_functions: vec![gauss.clone()],
            n_sweep: vec![64],
            a_sweep: vec![],
            replicas: 1000,
            t_grid: vec![],
            seed: 20240611,
            out_dir: None,
            tolerances: Tolerances::default(),
            options: Options::default(),
        };
        let cfg = match scenario {
            "levy-checks" => ScenarioConfig { a_sweep: vec![0.1, 1.0, 10.0], replicas: 1, test_functions: vec![], ..base },
            "pde-checks" => ScenarioConfig {
                test_functions: vec![
                    TestFunction::gaussian(0.0, 1.0),
                    TestFunction::gaussian(0.5, 0.6),
                    TestFunction::HermiteDamped { center: -0.3, width: 1.1, coeffs: vec![0.2, 1.0, -0.5] },
                ],
                replicas: 1,
                ..base
            },
            "conservation" => ScenarioConfig { replicas: 4000, ..base },
            "stationary-variance" => ScenarioConfig {
                model: ModelParams::new(128, 1.0, 1.0, 1.0, 0.05),
                n_sweep: vec![128],
                t_grid: vec![0.0, 0.25, 0.5],
                ..base
            },
            "qv-limits" => ScenarioConfig {
                model: ModelParams::new(64, 1.0, 1.0, 1.0, 0.01),
                n_sweep: vec![32, 64, 128, 256],
                t_grid: vec![1.0],
                replicas: 128,
                ..base
            },
            "replacement" => ScenarioConfig {
                model: ModelParams::new(64, 1.0, 1.0, 1.0, 0.1),
                n_sweep: vec![64, 128, 256],
                t_grid: vec![0.1],
                replicas: 128,
                ..base
            },
            "crossover-kernel" => ScenarioConfig {
                model: ModelParams::new(64, 1.0, 1.0, 1.0, 0.5).with_period(4),
                test_functions: vec![TestFunction::gaussian(2.0, 0.3), TestFunction::gaussian(2.0, 0.3)],
                n_sweep: vec![64, 128, 256],
                a_sweep: vec![0.2, 1.0, 5.0],
                t_grid: vec![0.5],
                replicas: 64,
                ..base
            },
            "ou-covariance" => ScenarioConfig {
                model: ModelParams::new(64, 1.0, 1.0, 1.0, 0.05),
                test_functions: vec![gauss, TestFunction::gaussian(0.6, 0.2)],
                n_sweep: vec![64, 256],
                t_grid: vec![0.0, 0.05, 0.1],
                replicas: 400,
                ..base
            },
            other => return Err(Error::UnknownScenario(other.into())),
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !SCENARIOS.iter().any(|(s, _)| *s == self.scenario) {
            return Err(Error::UnknownScenario(self.scenario.clone()));
        }
        self.levy.validate()?;
        let needs_sweep = !matches!(self.scenario.as_str(), "levy-checks" | "pde-checks");
        if needs_sweep && self.n_sweep.is_empty() {
            return bad("n_sweep is empty".into());
        }
        for &n in &self.n_sweep {
            ModelParams { n, ..self.model }.validate()?;
        }
        if self.a_sweep.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return bad(format!("a_sweep {:?} must be positive", self.a_sweep));
        }
        if needs_sweep && self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if self.t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad(format!("t_grid {:?} must be non-negative", self.t_grid));
        }
        let tf_needed = match self.scenario.as_str() {
            "crossover-kernel" | "ou-covariance" => 2,
            "levy-checks" | "conservation" => 0,
            _ => 1,
        };
        if self.test_functions.len() < tf_needed {
            return bad(format!("scenario {} needs {tf_needed} test function(s)", self.scenario));
        }
        if matches!(self.scenario.as_str(), "stationary-variance" | "qv-limits" | "replacement" | "crossover-kernel" | "ou-covariance")
            && self.t_grid.is_empty()
        {
            return bad(format!("scenario {} needs a non-empty t_grid", self.scenario));
        }
        if self.options.substeps_per_macro == Some(0) {
            return bad("substeps_per_macro must be at least 1".into());
        }
        Ok(())
    }

    pub fn a_values(&self) -> Vec<f64> {
        if self.a_sweep.is_empty() {
            vec![self.model.a]
        } else {
            self.a_sweep.clone()
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("reports").join(&self.scenario))
    }
}

/// Runs the configured scenario. Tolerance violations are recorded as failed
/// verdicts; only invalid configurations and numerical breakdowns are errors.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Report> {
    config.validate()?;
    let clock = Instant::now();
    let (tables, checks) = match config.scenario.as_str() {
        "levy-checks" => scenarios::levy_checks(config)?,
        "pde-checks" => scenarios::pde_checks(config)?,
        "conservation" => scenarios::conservation(config)?,
        "stationary-variance" => scenarios::stationary_variance(config)?,
        "qv-limits" => scenarios::qv_limits(config)?,
        "replacement" => scenarios::replacement(config)?,
        "crossover-kernel" => scenarios::crossover_kernel(config)?,
        "ou-covariance" => scenarios::ou_covariance(config)?,
        other => return Err(Error::UnknownScenario(other.into())),
    };
    let value = serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Report::new(&config.scenario, config.seed, value, tables, checks, clock.elapsed().as_secs_f64()))
}
