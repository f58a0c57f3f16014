//! Stage, terminal, and day-total costs.
//!
//! Energy is billed with renewable-first allocation: the fleet's total supply
//! draw in a stage consumes the cheap renewable budget before falling back to
//! the grid tariff. Battery degradation is charged per discharging vehicle,
//! linear in the energy discharged and in depth of discharge. The day ends
//! with a terminal charge pricing each battery's shortfall from full at the
//! end-of-day grid tariff.

use crate::dynamics::{Control, ControlDecision, FleetParams, FleetState, Mode};
use crate::workload::parse_hhmm_stage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("invalid cycles to failure: {0} (must be > 0)")]
    InvalidCyclesToFailure(f64),
    #[error("profile parse error at line {line}: {msg}")]
    ProfileParse { line: u64, msg: String },
    #[error("profile length mismatch: expected {expected} rows, found {found}")]
    ProfileLength { expected: usize, found: usize },
    #[error("tariff tiers must cover the day exactly once: {0}")]
    TierCoverage(String),
    #[error("cannot read profile `{path}`: {msg}")]
    Io { path: String, msg: String },
    #[error("invalid profiles: {0}")]
    Invalid(String),
}

/// Stage-indexed prices and renewable availability for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceAndRenewableProfiles {
    /// Grid tariff per stage, £/kWh; one extra entry indexes the day end for
    /// the terminal charge.
    pub grid_price: Vec<f64>,
    /// Price of renewably generated energy, £/kWh.
    pub renewable_price: f64,
    /// Renewable energy available per stage, kWh.
    pub renewable_energy: Vec<f64>,
}

impl PriceAndRenewableProfiles {
    pub fn validate(&self, horizon: usize) -> Result<(), CostError> {
        if self.grid_price.len() != horizon + 1 {
            return Err(CostError::ProfileLength {
                expected: horizon + 1,
                found: self.grid_price.len(),
            });
        }
        if self.renewable_energy.len() != horizon {
            return Err(CostError::ProfileLength {
                expected: horizon,
                found: self.renewable_energy.len(),
            });
        }
        if !(self.renewable_price.is_finite() && self.renewable_price >= 0.0) {
            return Err(CostError::Invalid(format!(
                "renewable price must be finite and >= 0, got {}",
                self.renewable_price
            )));
        }
        if let Some(p) = self
            .grid_price
            .iter()
            .find(|&&p| !(p.is_finite() && p >= 0.0))
        {
            return Err(CostError::Invalid(format!("bad grid price {p}")));
        }
        if let Some(e) = self
            .renewable_energy
            .iter()
            .find(|&&e| !(e.is_finite() && e >= 0.0))
        {
            return Err(CostError::Invalid(format!("bad renewable energy {e}")));
        }
        Ok(())
    }

    /// Grid tariff applied to the terminal shortfall.
    pub fn terminal_grid_price(&self) -> f64 {
        *self
            .grid_price
            .last()
            .expect("validated: horizon + 1 entries")
    }
}

/// Coefficients of the linear battery-degradation cost.
///
/// A discharge of `e_w` kWh at state of charge `soc` on a battery with `f_r`
/// cycles to failure costs `e_w · (a0 + a1·(1 − soc)) / f_r`: deeper
/// discharges wear the battery faster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationParams {
    pub a0: f64,
    pub a1: f64,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            a0: 200.0,
            a1: 400.0,
        }
    }
}

/// Energy and degradation cost of a single stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageCost {
    pub energy: f64,
    pub degradation: f64,
}

impl StageCost {
    pub fn total(&self) -> f64 {
        self.energy + self.degradation
    }
}

/// Day-total cost, decomposed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub energy: f64,
    pub degradation: f64,
    pub terminal: f64,
    pub total: f64,
}

/// Renewable-first cost of drawing `total_draw_kwh` from the supply.
pub fn energy_cost_for_draw(total_draw_kwh: f64, e_rt: f64, c_gt: f64, c_r: f64) -> f64 {
    let renewable_share = total_draw_kwh.min(e_rt);
    c_r * renewable_share + c_gt * (total_draw_kwh - renewable_share)
}

/// Fleet energy cost for `n_charging` vehicles each drawing a full stage `e_c`.
pub fn stage_energy_cost(n_charging: usize, e_rt: f64, c_gt: f64, c_r: f64, e_c: f64) -> f64 {
    energy_cost_for_draw(n_charging as f64 * e_c, e_rt, c_gt, c_r)
}

/// Degradation cost of discharging `e_w` kWh at state of charge `soc`.
pub fn degradation_cost(
    soc: f64,
    e_w: f64,
    f_r: f64,
    params: &DegradationParams,
) -> Result<f64, CostError> {
    if f_r <= 0.0 {
        return Err(CostError::InvalidCyclesToFailure(f_r));
    }
    Ok(e_w * (params.a0 + params.a1 * (1.0 - soc)) / f_r)
}

/// Total cost of applying `controls` to `fleet` at its current stage.
///
/// Charging vehicles bill their actual supply draw (a final top-up stage draws
/// less than `e_c`) against the stage's renewable budget and grid tariff.
/// Every discharging vehicle — a fresh assignment or a job continuation that
/// still has stages to run — adds a degradation term at its pre-stage SoC.
pub fn stage_cost(
    fleet: &FleetState,
    controls: &[ControlDecision],
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
    degradation: &DegradationParams,
) -> Result<StageCost, CostError> {
    let t = fleet.stage;
    let mut draw_kwh = 0.0;
    let mut wear = 0.0;
    for (asev, decision) in fleet.asevs.iter().zip(controls) {
        match decision.control {
            Control::Charge => draw_kwh += params.charge_billed_kwh(asev.soc),
            Control::Work => {
                // A job on its release stage (one stage left, no discharge) is free.
                let discharging = match asev.mode {
                    Mode::Working { remaining } => remaining >= 2,
                    _ => true,
                };
                if discharging {
                    wear += degradation_cost(
                        asev.soc,
                        params.e_work_kwh_per_stage,
                        asev.cycles_to_failure,
                        degradation,
                    )?;
                }
            }
            Control::Idle => {}
        }
    }
    Ok(StageCost {
        energy: energy_cost_for_draw(
            draw_kwh,
            profiles.renewable_energy[t],
            profiles.grid_price[t],
            profiles.renewable_price,
        ),
        degradation: wear,
    })
}

/// End-of-day charge: each battery's shortfall from `soc_max`, priced at the
/// terminal grid tariff.
pub fn terminal_cost(
    fleet: &FleetState,
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
) -> f64 {
    let c_gn = profiles.terminal_grid_price();
    fleet
        .asevs
        .iter()
        .map(|a| c_gn * params.capacity_kwh * (params.soc_max - a.soc).max(0.0))
        .sum()
}

/// Sum a day of stage costs plus the terminal charge into a breakdown.
pub fn accumulate(stage_costs: &[StageCost], terminal: f64) -> CostBreakdown {
    let energy: f64 = stage_costs.iter().map(|c| c.energy).sum();
    let degradation: f64 = stage_costs.iter().map(|c| c.degradation).sum();
    CostBreakdown {
        energy,
        degradation,
        terminal,
        total: energy + degradation + terminal,
    }
}

/// One contiguous span of a time-of-use tariff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTariffTier {
    pub start_hhmm: String,
    pub end_hhmm: String,
    pub price_per_kwh: f64,
}

/// Overnight/daytime two-tier default: £0.07/kWh until 07:00, £0.15 after.
pub fn default_two_tier() -> Vec<GridTariffTier> {
    vec![
        GridTariffTier {
            start_hhmm: "00:00".into(),
            end_hhmm: "07:00".into(),
            price_per_kwh: 0.07,
        },
        GridTariffTier {
            start_hhmm: "07:00".into(),
            end_hhmm: "24:00".into(),
            price_per_kwh: 0.15,
        },
    ]
}

fn tier_stage(text: &str, stage_minutes: u32, horizon: usize) -> Result<usize, CostError> {
    if text.trim() == "24:00" {
        return Ok(horizon);
    }
    parse_hhmm_stage(text, stage_minutes).map_err(CostError::TierCoverage)
}

/// Expand tariff tiers into a per-stage price vector of length `horizon + 1`.
///
/// Tiers are half-open `[start, end)` spans that must tile the whole day in
/// order with no gaps or overlaps. The terminal entry extends the tariff in
/// force at the final stage.
pub fn expand_tiers(
    tiers: &[GridTariffTier],
    horizon: usize,
    stage_minutes: u32,
) -> Result<Vec<f64>, CostError> {
    if tiers.is_empty() {
        return Err(CostError::TierCoverage("no tiers given".into()));
    }
    let mut prices = vec![f64::NAN; horizon + 1];
    let mut cursor = 0usize;
    for tier in tiers {
        let start = tier_stage(&tier.start_hhmm, stage_minutes, horizon)?;
        let end = tier_stage(&tier.end_hhmm, stage_minutes, horizon)?;
        if start != cursor {
            return Err(CostError::TierCoverage(format!(
                "tier starting {} leaves stages {cursor}..{start} uncovered or overlapping",
                tier.start_hhmm
            )));
        }
        if end <= start {
            return Err(CostError::TierCoverage(format!(
                "tier {}..{} is empty or reversed",
                tier.start_hhmm, tier.end_hhmm
            )));
        }
        if tier.price_per_kwh < 0.0 {
            return Err(CostError::TierCoverage(format!(
                "negative price {}",
                tier.price_per_kwh
            )));
        }
        for p in &mut prices[start..end.min(horizon)] {
            *p = tier.price_per_kwh;
        }
        cursor = end;
    }
    if cursor != horizon {
        return Err(CostError::TierCoverage(format!(
            "tiers end at stage {cursor}, expected {horizon}"
        )));
    }
    prices[horizon] = prices[horizon - 1];
    Ok(prices)
}

/// Read a `stage,value` CSV with exactly `expected_rows` rows, stages in order.
pub fn load_profile_csv(
    path: &std::path::Path,
    expected_rows: usize,
) -> Result<Vec<f64>, CostError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CostError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    let mut values = Vec::with_capacity(expected_rows);
    for record in reader.records() {
        let record = record.map_err(|e| CostError::ProfileParse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(CostError::ProfileParse {
                line,
                msg: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let stage: usize = record[0].parse().map_err(|_| CostError::ProfileParse {
            line,
            msg: format!("bad stage index `{}`", &record[0]),
        })?;
        if stage != values.len() {
            return Err(CostError::ProfileParse {
                line,
                msg: format!(
                    "stages must run 0,1,2,…; expected {}, found {stage}",
                    values.len()
                ),
            });
        }
        let value: f64 = record[1].parse().map_err(|_| CostError::ProfileParse {
            line,
            msg: format!("bad value `{}`", &record[1]),
        })?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(CostError::ProfileParse {
                line,
                msg: format!("value must be finite and non-negative, got {value}"),
            });
        }
        values.push(value);
    }
    if values.len() != expected_rows {
        return Err(CostError::ProfileLength {
            expected: expected_rows,
            found: values.len(),
        });
    }
    Ok(values)
}

/// Load a grid tariff profile (£/kWh), `horizon + 1` rows.
pub fn load_grid_price(path: &std::path::Path, horizon: usize) -> Result<Vec<f64>, CostError> {
    load_profile_csv(path, horizon + 1)
}

/// Load a renewable generation profile given in kW and convert each stage's
/// power to the energy available in that stage (kWh).
pub fn load_renewable_energy(
    path: &std::path::Path,
    horizon: usize,
    stage_minutes: u32,
) -> Result<Vec<f64>, CostError> {
    let kw = load_profile_csv(path, horizon)?;
    Ok(kw
        .into_iter()
        .map(|p| p * stage_minutes as f64 / 60.0)
        .collect())
}
