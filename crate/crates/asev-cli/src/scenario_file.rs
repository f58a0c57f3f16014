//! TOML scenario documents and their translation into runnable scenarios.
//!
//! A scenario document is one human-editable file with sections for the
//! fleet, prices, renewable supply, battery degradation, the flight schedule
//! (a CSV side file), announced schedule events, and run defaults. Relative
//! file references resolve against the document's own directory. Validation
//! failures come back as [`Diagnostic`]s that name the offending key and
//! suggest a remedy, so `asev validate` can print every problem at once.

use asev_core::costs::{self, DegradationParams, GridTariffTier, PriceAndRenewableProfiles};
use asev_core::dynamics::FleetParams;
use asev_core::policies::{PolicyKind, RolloutConfig, WorkloadMode};
use asev_core::sim::{Scenario, ScheduleEvent, ScheduleEventKind};
use asev_core::workload::{self, parse_hhmm_stage, TruncatedNormalSpec};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// One validation problem, tied to the scenario key that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// Dotted key path into the document, e.g. `renewable.file`.
    pub key: String,
    pub message: String,
    pub remedy: String,
}

impl Diagnostic {
    fn new(
        key: impl Into<String>,
        message: impl std::fmt::Display,
        remedy: impl Into<String>,
    ) -> Self {
        Self {
            key: key.into(),
            message: message.to_string(),
            remedy: remedy.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {} — {}", self.key, self.message, self.remedy)
    }
}

/// A scenario plus the document's own run defaults.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub default_policy: PolicyKind,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    fleet: FleetParams,
    #[serde(default)]
    prices: PricesSection,
    #[serde(default)]
    renewable: RenewableSection,
    #[serde(default)]
    degradation: DegradationSection,
    schedule: ScheduleSection,
    #[serde(default)]
    events: Vec<EventRow>,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PricesSection {
    renewable_price_per_kwh: f64,
    /// Inline piecewise-constant grid tariff.
    grid_tiers: Option<Vec<TierRow>>,
    /// CSV with one price per stage plus the terminal entry.
    grid_file: Option<PathBuf>,
}

impl Default for PricesSection {
    fn default() -> Self {
        Self {
            renewable_price_per_kwh: 0.04,
            grid_tiers: None,
            grid_file: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TierRow {
    from: String,
    to: String,
    price_per_kwh: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RenewableSection {
    /// CSV with one kW reading per stage.
    file: Option<PathBuf>,
    /// Inline piecewise-constant generation blocks.
    tiers: Option<Vec<PvTierRow>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PvTierRow {
    from: String,
    to: String,
    kw: f64,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DegradationSection {
    a0: f64,
    a1: f64,
    cycles_to_failure: f64,
}

impl Default for DegradationSection {
    fn default() -> Self {
        Self {
            a0: 200.0,
            a1: 400.0,
            cycles_to_failure: 3000.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleSection {
    file: PathBuf,
    /// Service-time distribution for rows without their own parameters.
    #[serde(default = "default_mu")]
    mu_min: f64,
    #[serde(default = "default_sigma")]
    sigma_min: f64,
    #[serde(default = "default_lower")]
    lower_min: f64,
    #[serde(default = "default_upper")]
    upper_min: f64,
}

fn default_mu() -> f64 {
    22.5
}
fn default_sigma() -> f64 {
    5.0
}
fn default_lower() -> f64 {
    15.0
}
fn default_upper() -> f64 {
    30.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRow {
    kind: String,
    flight_id: String,
    /// Clock time at which the change becomes known.
    announce: String,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    seed: u64,
    policy: String,
    initial_soc: Option<f64>,
    /// 0 evaluates futures at expected job lengths; > 0 averages that many
    /// sampled futures instead.
    samples: usize,
    parallel: bool,
    exhaustive: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            policy: "rollout".into(),
            initial_soc: None,
            samples: 0,
            parallel: true,
            exhaustive: false,
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p.to_path_buf()
    }
}

/// The built-in two-tier tariff evaluated stage by stage, so it works for any
/// horizon length.
fn default_grid_prices(horizon: usize, stage_minutes: u32) -> Vec<f64> {
    let tiers = costs::default_two_tier();
    let boundary = parse_hhmm_stage(&tiers[1].start_hhmm, stage_minutes)
        .map(|s| s * stage_minutes as usize)
        .unwrap_or(7 * 60);
    let mut prices: Vec<f64> = (0..horizon)
        .map(|t| {
            if t * (stage_minutes as usize) < boundary {
                tiers[0].price_per_kwh
            } else {
                tiers[1].price_per_kwh
            }
        })
        .collect();
    prices.push(*prices.last().expect("horizon >= 1"));
    prices
}

/// Load and fully validate a scenario document.
///
/// On failure every independent problem found is returned, each naming the
/// key it belongs to.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![Diagnostic::new(
            "scenario",
            format!("cannot read `{}`: {e}", path.display()),
            "check the path",
        )]
    })?;
    let doc: ScenarioDoc = toml::from_str(&text).map_err(|e| {
        vec![Diagnostic::new(
            "scenario",
            e.message(),
            "fix the document syntax or remove the unknown key",
        )]
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut diags = Vec::new();

    if let Err(e) = doc.fleet.validate() {
        // everything downstream is sized by the fleet section, so stop here
        return Err(vec![Diagnostic::new(
            "fleet",
            e,
            "adjust the fleet parameters",
        )]);
    }
    let horizon = doc.fleet.horizon;
    let stage_minutes = doc.fleet.stage_minutes;

    let grid_price = match (&doc.prices.grid_tiers, &doc.prices.grid_file) {
        (Some(_), Some(_)) => {
            diags.push(Diagnostic::new(
                "prices",
                "both grid_tiers and grid_file are set",
                "keep exactly one of them",
            ));
            None
        }
        (Some(rows), None) => {
            let tiers: Vec<GridTariffTier> = rows
                .iter()
                .map(|r| GridTariffTier {
                    start_hhmm: r.from.clone(),
                    end_hhmm: r.to.clone(),
                    price_per_kwh: r.price_per_kwh,
                })
                .collect();
            match costs::expand_tiers(&tiers, horizon, stage_minutes) {
                Ok(p) => Some(p),
                Err(e) => {
                    diags.push(Diagnostic::new(
                        "prices.grid_tiers",
                        e,
                        "tiers must tile 00:00–24:00 on stage boundaries",
                    ));
                    None
                }
            }
        }
        (None, Some(file)) => match costs::load_grid_price(&resolve(base, file), horizon) {
            Ok(p) => Some(p),
            Err(e) => {
                diags.push(Diagnostic::new(
                    "prices.grid_file",
                    e,
                    format!(
                        "provide {} rows (one per stage plus the terminal entry)",
                        horizon + 1
                    ),
                ));
                None
            }
        },
        // Default tariff, applied per stage so it also covers the shortened
        // days used in tests (the tier expander requires full-day tiling).
        (None, None) => Some(default_grid_prices(horizon, stage_minutes)),
    };

    let renewable_energy = match (&doc.renewable.file, &doc.renewable.tiers) {
        (Some(_), Some(_)) => {
            diags.push(Diagnostic::new(
                "renewable",
                "both file and tiers are set",
                "keep exactly one of them",
            ));
            None
        }
        (Some(file), None) => {
            match costs::load_renewable_energy(&resolve(base, file), horizon, stage_minutes) {
                Ok(e) => Some(e),
                Err(e) => {
                    diags.push(Diagnostic::new(
                        "renewable.file",
                        e,
                        format!("provide {horizon} rows (one kW reading per stage)"),
                    ));
                    None
                }
            }
        }
        (None, Some(rows)) => {
            // reuse the tariff expander: kW blocks tile the day the same way
            let tiers: Vec<GridTariffTier> = rows
                .iter()
                .map(|r| GridTariffTier {
                    start_hhmm: r.from.clone(),
                    end_hhmm: r.to.clone(),
                    price_per_kwh: r.kw,
                })
                .collect();
            match costs::expand_tiers(&tiers, horizon, stage_minutes) {
                Ok(kw) => Some(
                    kw[..horizon]
                        .iter()
                        .map(|p| p * stage_minutes as f64 / 60.0)
                        .collect(),
                ),
                Err(e) => {
                    diags.push(Diagnostic::new(
                        "renewable.tiers",
                        e,
                        "blocks must tile 00:00–24:00 on stage boundaries",
                    ));
                    None
                }
            }
        }
        (None, None) => Some(vec![0.0; horizon]),
    };

    let schedule = TruncatedNormalSpec::new(
        doc.schedule.mu_min,
        doc.schedule.sigma_min,
        doc.schedule.lower_min,
        doc.schedule.upper_min,
    )
    .map_err(|e| {
        Diagnostic::new(
            "schedule",
            e,
            "mu/sigma/lower/upper must describe a valid service-time distribution",
        )
    })
    .and_then(|spec| {
        workload::load_schedule(
            &resolve(base, &doc.schedule.file),
            &spec,
            horizon,
            stage_minutes,
        )
        .map_err(|e| {
            Diagnostic::new(
                "schedule.file",
                e,
                "rows are flight_id,kind,time_hhmm with optional workload columns",
            )
        })
    });
    let schedule = match schedule {
        Ok(s) => Some(s),
        Err(d) => {
            diags.push(d);
            None
        }
    };

    let mut events = Vec::new();
    for (i, row) in doc.events.iter().enumerate() {
        if row.kind != "cancellation" {
            diags.push(Diagnostic::new(
                format!("events[{i}].kind"),
                format!("unknown kind `{}`", row.kind),
                "only `cancellation` is supported",
            ));
            continue;
        }
        match parse_hhmm_stage(&row.announce, stage_minutes) {
            Ok(stage) => events.push(ScheduleEvent {
                kind: ScheduleEventKind::Cancellation,
                flight_id: row.flight_id.clone(),
                announce_stage: stage,
            }),
            Err(e) => diags.push(Diagnostic::new(
                format!("events[{i}].announce"),
                e,
                format!("use a stage-aligned HH:MM time ({stage_minutes}-minute grid)"),
            )),
        }
    }

    let default_policy = match doc.run.policy.parse::<PolicyKind>() {
        Ok(p) => Some(p),
        Err(e) => {
            diags.push(Diagnostic::new("run.policy", e, "pick one of the three"));
            None
        }
    };

    if !diags.is_empty() {
        return Err(diags);
    }
    let (Some(grid_price), Some(renewable_energy), Some(schedule), Some(default_policy)) =
        (grid_price, renewable_energy, schedule, default_policy)
    else {
        unreachable!("every missing section pushed a diagnostic");
    };

    let profiles = PriceAndRenewableProfiles {
        grid_price,
        renewable_price: doc.prices.renewable_price_per_kwh,
        renewable_energy,
    };
    let degradation = DegradationParams {
        a0: doc.degradation.a0,
        a1: doc.degradation.a1,
    };
    let mut scenario = Scenario::new(doc.fleet, profiles, degradation, schedule);
    scenario.events = events;
    scenario.seed = doc.run.seed;
    scenario.initial_cycles_to_failure = doc.degradation.cycles_to_failure;
    if let Some(soc) = doc.run.initial_soc {
        scenario.initial_soc = soc;
    }
    scenario.rollout = RolloutConfig {
        workload_mode: if doc.run.samples == 0 {
            WorkloadMode::CertaintyEquivalent
        } else {
            WorkloadMode::MonteCarlo {
                samples: doc.run.samples,
            }
        },
        parallel_eval: doc.run.parallel,
        exhaustive_small_fleet: doc.run.exhaustive,
        seed: 0, // the simulator derives the lookahead stream from the run seed
    };

    scenario
        .validate()
        .map_err(|e| vec![Diagnostic::new("scenario", e, "fix the reported field")])?;
    Ok(LoadedScenario {
        scenario,
        default_policy,
    })
}
