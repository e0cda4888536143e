//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p crossover-core --test acceptance [-- <criterion numbers>]`.

mod common;

use std::collections::HashMap;
use std::time::Instant;

use crossover::experiments::{run_scenario, Report, ScenarioConfig};

struct Outcome {
    passed: bool,
    detail: String,
    /// Whether a FAIL here is the documented outcome rather than a regression.
    expected_fail: bool,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Outcome { passed, detail, expected_fail: false }
    }
}

#[derive(Default)]
struct Runs {
    reports: HashMap<String, (Report, f64)>,
}

impl Runs {
    fn get(&mut self, scenario: &str) -> &(Report, f64) {
        self.reports.entry(scenario.to_string()).or_insert_with(|| {
            let mut cfg = ScenarioConfig::preset(scenario).expect("preset");
            // the Dynkin residual is not an acceptance criterion; tests/scenarios.rs covers it
            cfg.options.martingale_replicas = 0;
            let clock = Instant::now();
            let report = run_scenario(&cfg).unwrap_or_else(|e| panic!("{scenario}: {e}"));
            (report, clock.elapsed().as_secs_f64())
        })
    }
}

/// Verdicts of `scenario` named in `names` (a trailing `[` selects the whole
/// indexed family), plus a runtime limit.
fn verdicts(runs: &mut Runs, scenario: &str, names: &[&str], limit_s: f64) -> Outcome {
    let (report, secs) = runs.get(scenario);
    let picked: Vec<_> = report.verdicts.iter().filter(|v| names.iter().any(|p| v.check.name == *p || (p.ends_with('[') && v.check.name.starts_with(p)))).collect();
    let failed: Vec<String> = picked.iter().filter(|v| !v.passed).map(|v| format!("{} ({})", v.check.name, v.detail)).collect();
    let in_time = *secs < limit_s;
    let passed = !picked.is_empty() && failed.is_empty() && in_time;
    let detail = if failed.is_empty() {
        format!("{} checks; {scenario} ran in {secs:.1} s (limit {limit_s} s)", picked.len())
    } else {
        format!("{}/{} checks failed: {}", failed.len(), picked.len(), failed.join("; "))
    };
    Outcome::new(passed, detail)
}

fn value(report: &Report, table: &str, row: &str, column: &str) -> f64 {
    report.table(table).and_then(|t| t.value(row, column)).unwrap_or(f64::NAN)
}

fn criterion(id: u32, runs: &mut Runs) -> (String, Outcome) {
    match id {
        1 => ("Lévy–Khintchine quadrature against the symbol".into(), verdicts(runs, "levy-checks", &["lk["], 10.0)),
        2 => ("diffusive and stable limits of the symbol".into(), verdicts(runs, "levy-checks", &["diffusive_limit", "stable_limit"], 1.0)),
        3 => ("PDE refinement orders and generator consistency".into(), verdicts(runs, "pde-checks", &["order[", "generator["], 30.0)),
        4 => ("quadratic-variation energy identity".into(), verdicts(runs, "pde-checks", &["energy_spectral[", "energy_grid["], 30.0)),
        5 => (
            "energy/volume conservation and volume variance rate".into(),
            verdicts(runs, "conservation", &["energy_drift[", "volume_drift[", "volume_rate"], 300.0),
        ),
        6 => ("stationary energy-field variance".into(), verdicts(runs, "stationary-variance", &["energy_variance["], 600.0)),
        7 => ("energy-martingale QV slope".into(), verdicts(runs, "qv-limits", &["energy_qv_slope"], 900.0)),
        8 => {
            let mut o = verdicts(runs, "qv-limits", &["correlation_qv_limit", "correlation_qv_variance_decreasing"], 1200.0);
            let (report, _) = runs.get("qv-limits");
            let ratio = value(report, "qv_correlation", "n=256", "ratio");
            let companion = report.verdict("correlation_qv_limit_corrected").is_some_and(|v| v.passed)
                && report.verdict("correlation_qv_variance_decreasing").is_some_and(|v| v.passed);
            o.detail = format!("{}; mean / (2tβ⁻²∫φ(−𝒮φ)) = {ratio:.3}", o.detail);
            // the stated 2t limit misses a factor 2; the 4t companion must hold
            o.expected_fail = !o.passed && companion && (ratio - 2.0).abs() < 0.2;
            ("correlation-martingale QV limit (2t limit as stated)".into(), o)
        }
        9 => ("replacement second-moment decay and 𝒮₂-inverse identity".into(), verdicts(runs, "replacement", &["replacement_exponent", "s2_inverse_identity"], 600.0)),
        10 => ("crossover kernel L² mismatch decreasing in n".into(), verdicts(runs, "crossover-kernel", &["crossover_mismatch_decreasing["], 3600.0)),
        11 => {
            let clock = Instant::now();
            let res = common::algebra_residuals(6, 20, 2024);
            let secs = clock.elapsed().as_secs_f64();
            let (name, worst) = res.iter().copied().fold(("", 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
            let passed = worst <= 1e-12 && secs < 5.0;
            let detail = format!("{} identities, worst {name} = {worst:.2e} (tol 1e-12), {secs:.2} s", res.len());
            ("carré du champ expansions against symbolic brute force on n = 6".into(), Outcome::new(passed, detail))
        }
        _ => unreachable!(),
    }
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).filter(|i| (1..=11).contains(i)).collect();
    let ids: Vec<u32> = if wanted.is_empty() { (1..=11).collect() } else { wanted };
    let mut runs = Runs::default();
    let mut regressions = Vec::new();
    for id in ids {
        let (title, o) = criterion(id, &mut runs);
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let note = if o.expected_fail { " [documented: limit carries a factor 4t, companion check passes]" } else { "" };
        println!("{tag} {id:>2} {title}: {}{note}", o.detail);
        if !o.passed && !o.expected_fail {
            regressions.push(id);
        }
    }
    if !regressions.is_empty() {
        eprintln!("unexpected failures: {regressions:?}");
        std::process::exit(1);
    }
}
