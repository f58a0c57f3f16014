//! Implementations of the `asev` subcommands.
//!
//! Each command returns `Ok(())` for exit code 0 or a [`CmdError`] that maps
//! onto the tool's exit-code contract: input and I/O problems are exit 1,
//! infeasible runs are exit 2. Money is always printed with two decimals so
//! output stays diff-stable.

use crate::scenario_file::{load_scenario, LoadedScenario};
use asev_core::policies::PolicyKind;
use asev_core::sim::{self, Scenario, SimError, SimReport};
use asev_core::workload::stage_to_hhmm;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Failure modes with distinct exit codes.
#[derive(Debug)]
pub enum CmdError {
    /// Bad input, bad configuration, or an I/O failure — exit code 1.
    Input(String),
    /// The simulated day could not be completed — exit code 2.
    Infeasible(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Input(msg) => write!(f, "{msg}"),
            CmdError::Infeasible(msg) => write!(f, "infeasible: {msg}"),
        }
    }
}

/// Where command output lands: `--out`, else `$ASEV_OUT`, else the working
/// directory.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("ASEV_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load(path: &Path) -> Result<LoadedScenario, CmdError> {
    load_scenario(path).map_err(|diags| {
        CmdError::Input(
            diags
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("\n"),
        )
    })
}

fn sim_to_cmd(e: SimError) -> CmdError {
    CmdError::Input(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CmdError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CmdError::Input(format!("cannot create `{}`: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CmdError::Input(format!("cannot write `{}`: {e}", path.display())))
}

/// The one-line result of a run: `policy total energy degradation terminal
/// feasible`, money in two decimals.
pub fn summary_line(policy: PolicyKind, report: &SimReport) -> String {
    format!(
        "{policy} {:.2} {:.2} {:.2} {:.2} {}",
        report.cost.total,
        report.cost.energy,
        report.cost.degradation,
        report.cost.terminal,
        report.feasible
    )
}

/// Statically validate a scenario document; print one line per problem.
pub fn cmd_validate(path: &Path) -> Result<(), CmdError> {
    match load_scenario(path) {
        Ok(loaded) => {
            let s = &loaded.scenario;
            println!(
                "scenario OK: {} vehicles, {} stages of {} min, {} flights, {} events, \
                 default policy {}",
                s.fleet.n_ev,
                s.fleet.horizon,
                s.fleet.stage_minutes,
                s.schedule.len(),
                s.events.len(),
                loaded.default_policy,
            );
            Ok(())
        }
        Err(diags) => {
            for d in &diags {
                eprintln!("{d}");
            }
            Err(CmdError::Input(format!(
                "{} validation problem(s) found",
                diags.len()
            )))
        }
    }
}

/// Simulate one policy through the day, export its reports, and print the
/// summary line. An infeasible day still writes its reports but exits 2.
pub fn cmd_run(
    path: &Path,
    policy: Option<PolicyKind>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CmdError> {
    let loaded = load(path)?;
    let mut scenario = loaded.scenario;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let policy = policy.unwrap_or(loaded.default_policy);
    let report = sim::run(&scenario, policy).map_err(sim_to_cmd)?;
    let dir = resolve_out_dir(out);
    sim::write_report(&report, scenario.fleet.stage_minutes, &dir).map_err(sim_to_cmd)?;
    println!("{}", summary_line(policy, &report));
    if let Some(inf) = &report.infeasibility {
        let mut detail = format!(
            "stage {} ({})",
            inf.stage,
            stage_to_hhmm(inf.stage, scenario.fleet.stage_minutes)
        );
        if let Some(flight_id) = &inf.flight_id {
            let _ = write!(detail, ", flight {flight_id}");
        }
        if let Some(delay) = inf.delay {
            let _ = write!(detail, ", delay {delay}");
        }
        return Err(CmdError::Infeasible(format!("{} — {detail}", inf.reason)));
    }
    Ok(())
}

/// One policy's line in a comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub policy: PolicyKind,
    pub report: SimReport,
    /// Total-cost change relative to the first listed policy, in percent;
    /// absent for the first row and for infeasible runs.
    pub delta_total_pct: Option<f64>,
}

/// Run every policy on the same workload realizations and compute deltas
/// against the first one.
pub fn compare_rows(
    scenario: &Scenario,
    policies: &[PolicyKind],
) -> Result<Vec<ComparisonRow>, CmdError> {
    let reports = sim::compare(scenario, policies).map_err(sim_to_cmd)?;
    let baseline = reports.first().filter(|r| r.feasible).map(|r| r.cost.total);
    Ok(reports
        .into_iter()
        .enumerate()
        .map(|(i, report)| {
            let delta_total_pct = match baseline {
                Some(base) if i > 0 && report.feasible && base != 0.0 => {
                    Some(100.0 * (report.cost.total - base) / base)
                }
                _ => None,
            };
            ComparisonRow {
                policy: policies[i],
                report,
                delta_total_pct,
            }
        })
        .collect())
}

fn fmt_delta(delta: Option<f64>) -> String {
    delta.map_or_else(String::new, |d| format!("{d:+.1}%"))
}

/// Console table for a comparison.
pub fn render_comparison(rows: &[ComparisonRow], currency: &str) -> String {
    let mut out = format!(
        "{:<10} {:>12} {:>12} {:>13} {:>12} {:>9} {:>9}\n",
        "policy", "total", "energy", "degradation", "terminal", "feasible", "Δ total"
    );
    for row in rows {
        let c = &row.report.cost;
        let _ = writeln!(
            out,
            "{:<10} {:>12} {:>12} {:>13} {:>12} {:>9} {:>9}",
            row.policy.to_string(),
            format!("{currency}{:.2}", c.total),
            format!("{currency}{:.2}", c.energy),
            format!("{currency}{:.2}", c.degradation),
            format!("{currency}{:.2}", c.terminal),
            if row.report.feasible { "yes" } else { "no" },
            fmt_delta(row.delta_total_pct),
        );
    }
    out
}

/// Machine-readable comparison, one row per policy.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out =
        String::from("policy,total,energy,degradation,terminal,feasible,delta_total_pct\n");
    for row in rows {
        let c = &row.report.cost;
        let _ = writeln!(
            out,
            "{},{:.2},{:.2},{:.2},{:.2},{},{}",
            row.policy,
            c.total,
            c.energy,
            c.degradation,
            c.terminal,
            row.report.feasible,
            row.delta_total_pct
                .map_or_else(String::new, |d| format!("{d:.1}")),
        );
    }
    out
}

/// Run several policies on identical workload realizations; print the table
/// and write `comparison.csv`. Infeasible policies appear as rows with
/// `feasible = false` rather than aborting the table.
pub fn cmd_compare(
    path: &Path,
    policies: &[PolicyKind],
    seed: Option<u64>,
    out: Option<PathBuf>,
    currency: &str,
) -> Result<(), CmdError> {
    if policies.is_empty() {
        return Err(CmdError::Input(
            "no policies given; pass --policies greedy,rollout,…".into(),
        ));
    }
    let loaded = load(path)?;
    let mut scenario = loaded.scenario;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let rows = compare_rows(&scenario, policies)?;
    print!("{}", render_comparison(&rows, currency));
    let dir = resolve_out_dir(out);
    write_file(&dir.join("comparison.csv"), &comparison_csv(&rows))?;
    Ok(())
}

/// Scenario parameters `cmd_sweep` can vary.
pub const SWEEPABLE_KEYS: &[&str] = &[
    "n_ev",
    "capacity_kwh",
    "soc_min",
    "soc_max",
    "charge_power_kw",
    "efficiency",
    "e_work_kwh_per_stage",
    "d_thre",
    "initial_soc",
    "cycles_to_failure",
    "a0",
    "a1",
    "renewable_price_per_kwh",
];

/// Set one numeric parameter on a scenario.
pub fn apply_param(scenario: &mut Scenario, key: &str, value: f64) -> Result<(), String> {
    let as_integer = |name: &str, min: f64| -> Result<u64, String> {
        if value.fract() != 0.0 || value < min {
            Err(format!("{name} must be an integer ≥ {min}, got {value}"))
        } else {
            Ok(value as u64)
        }
    };
    match key {
        "n_ev" => scenario.fleet.n_ev = as_integer("n_ev", 1.0)? as usize,
        "capacity_kwh" => scenario.fleet.capacity_kwh = value,
        "soc_min" => scenario.fleet.soc_min = value,
        "soc_max" => scenario.fleet.soc_max = value,
        "charge_power_kw" => scenario.fleet.charge_power_kw = value,
        "efficiency" => scenario.fleet.efficiency = value,
        "e_work_kwh_per_stage" => scenario.fleet.e_work_kwh_per_stage = value,
        "d_thre" => scenario.fleet.d_thre = as_integer("d_thre", 0.0)? as u32,
        "initial_soc" => scenario.initial_soc = value,
        "cycles_to_failure" => scenario.initial_cycles_to_failure = value,
        "a0" => scenario.degradation.a0 = value,
        "a1" => scenario.degradation.a1 = value,
        "renewable_price_per_kwh" => scenario.profiles.renewable_price = value,
        other => {
            return Err(format!(
                "unknown key `{other}`; sweepable keys: {}",
                SWEEPABLE_KEYS.join(", ")
            ))
        }
    }
    Ok(())
}

/// One (parameter value, policy) result in a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub policy: PolicyKind,
    pub report: SimReport,
}

/// Long-format sweep results.
pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,policy,total,energy,degradation,terminal,feasible\n");
    for row in rows {
        let c = &row.report.cost;
        let _ = writeln!(
            out,
            "{param},{},{},{:.2},{:.2},{:.2},{:.2},{}",
            row.value,
            row.policy,
            c.total,
            c.energy,
            c.degradation,
            c.terminal,
            row.report.feasible,
        );
    }
    out
}

/// Re-run a comparison for each value of one numeric parameter (same seed
/// throughout) and write the long-format `sweep.csv`.
pub fn cmd_sweep(
    path: &Path,
    param: &str,
    values: &[f64],
    policies: &[PolicyKind],
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CmdError> {
    if values.is_empty() {
        return Err(CmdError::Input(
            "no values given; pass --values v1,v2,…".into(),
        ));
    }
    if policies.is_empty() {
        return Err(CmdError::Input(
            "no policies given; pass --policies greedy,rollout,…".into(),
        ));
    }
    let loaded = load(path)?;
    let mut base = loaded.scenario;
    if let Some(s) = seed {
        base.seed = s;
    }
    // surface an unknown key before any simulation work
    apply_param(&mut base.clone(), param, values[0]).map_err(CmdError::Input)?;

    let per_value: Vec<Result<Vec<SweepRow>, CmdError>> = values
        .par_iter()
        .map(|&value| {
            let mut scenario = base.clone();
            apply_param(&mut scenario, param, value).map_err(CmdError::Input)?;
            scenario.validate().map_err(|e| {
                CmdError::Input(format!("{param} = {value} makes the scenario invalid: {e}"))
            })?;
            let reports = sim::compare(&scenario, policies).map_err(sim_to_cmd)?;
            Ok(policies
                .iter()
                .zip(reports)
                .map(|(&policy, report)| SweepRow {
                    value,
                    policy,
                    report,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(values.len() * policies.len());
    for result in per_value {
        rows.extend(result?);
    }

    let csv = sweep_csv(param, &rows);
    print!("{csv}");
    let dir = resolve_out_dir(out);
    write_file(&dir.join("sweep.csv"), &csv)?;
    Ok(())
}
