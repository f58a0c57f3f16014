//! Hybrid fleet dynamics: per-ASEV modes, feasible controls, and the
//! stage-to-stage transition.
//!
//! Each ASEV is either charging, idling, or partway through a ground-transport
//! job that cannot be interrupted. The fleet state also carries the FIFO queue
//! of flights awaiting service together with their accumulated delays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Comparison tolerance at the SoC operating bounds.
pub const SOC_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("delay threshold violated: flight `{flight_id}` would be delayed {delay} stages (limit {d_thre})")]
    DelayThresholdViolated {
        flight_id: String,
        delay: u32,
        d_thre: u32,
    },
    #[error("battery depleted: ASEV {asev} soc would fall below zero while working")]
    BatteryDepleted { asev: usize },
    #[error("invalid control for ASEV {asev}: {msg}")]
    InvalidControl { asev: usize, msg: String },
    #[error("mandatory service violated: {assigned} fresh assignments, but min(pending {pending}, eligible {eligible}) flights must be served")]
    MandatoryService {
        assigned: usize,
        pending: usize,
        eligible: usize,
    },
    #[error("invalid fleet parameters: {0}")]
    InvalidParams(String),
}

/// What an ASEV is doing during the current stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Charging,
    Idle,
    /// Mid-job, with `remaining` stages still to run (at least 1).
    Working {
        remaining: u32,
    },
}

impl Mode {
    /// Signed mode integer: 1 charging, 0 idle, −k working with k remaining.
    pub fn q(&self) -> i32 {
        match self {
            Mode::Charging => 1,
            Mode::Idle => 0,
            Mode::Working { remaining } => -(*remaining as i32),
        }
    }

    /// Free for a new decision (not locked into a job).
    pub fn is_free(&self) -> bool {
        !matches!(self, Mode::Working { .. })
    }
}

/// Per-stage control for one ASEV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Control {
    Work,
    Idle,
    Charge,
}

impl Control {
    /// Signed control integer: 1 charge, 0 idle, −1 work.
    pub fn u(&self) -> i32 {
        match self {
            Control::Charge => 1,
            Control::Idle => 0,
            Control::Work => -1,
        }
    }
}

/// A control plus, for a fresh work assignment, the flight it serves.
///
/// Job continuations use `Control::Work` with no assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDecision {
    pub control: Control,
    pub assignment: Option<String>,
}

impl ControlDecision {
    pub fn idle() -> Self {
        Self {
            control: Control::Idle,
            assignment: None,
        }
    }
    pub fn charge() -> Self {
        Self {
            control: Control::Charge,
            assignment: None,
        }
    }
    /// Continue an in-progress job.
    pub fn keep_working() -> Self {
        Self {
            control: Control::Work,
            assignment: None,
        }
    }
    /// Start serving the named pending flight.
    pub fn serve(flight_id: impl Into<String>) -> Self {
        Self {
            control: Control::Work,
            assignment: Some(flight_id.into()),
        }
    }
}

/// State of a single ASEV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsevState {
    pub mode: Mode,
    /// State of charge as a fraction of battery capacity.
    pub soc: f64,
    /// Battery cycles to failure; constant over a day.
    pub cycles_to_failure: f64,
}

/// A flight waiting in the service queue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingFlight {
    pub flight_id: String,
    /// Realized job length in stages, revealed when the flight joined the queue.
    pub remaining_workload: u32,
    /// Stages this flight has already waited.
    pub delay: u32,
}

/// Fleet-wide snapshot at the start of a stage.
///
/// Immutable by convention: `step` returns a fresh state, so snapshots can be
/// shared across threads during parallel candidate evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetState {
    pub stage: usize,
    pub asevs: Vec<AsevState>,
    /// FIFO by queue-entry stage, flight_id as tie-break (append order).
    pub pending: Vec<PendingFlight>,
}

impl FleetState {
    /// All ASEVs start free at the same SoC and cycle life, empty queue.
    pub fn uniform(params: &FleetParams, soc: f64, cycles_to_failure: f64) -> Self {
        Self {
            stage: 0,
            asevs: vec![
                AsevState {
                    mode: Mode::Idle,
                    soc,
                    cycles_to_failure,
                };
                params.n_ev
            ],
            pending: Vec::new(),
        }
    }

    /// Append a flight at the back of the service queue.
    pub fn push_pending(&mut self, flight: PendingFlight) {
        self.pending.push(flight);
    }

    /// Drop a not-yet-served flight (e.g. a cancellation). Returns whether it
    /// was present.
    pub fn remove_pending(&mut self, flight_id: &str) -> bool {
        let before = self.pending.len();
        self.pending.retain(|f| f.flight_id != flight_id);
        self.pending.len() != before
    }
}

/// Physical and operational fleet parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetParams {
    pub n_ev: usize,
    pub capacity_kwh: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub charge_power_kw: f64,
    /// Battery cycle efficiency: fraction of drawn energy that reaches the battery.
    pub efficiency: f64,
    pub e_work_kwh_per_stage: f64,
    /// Maximum stages any flight may wait for service.
    pub d_thre: u32,
    /// Number of stages in the planning day.
    pub horizon: usize,
    pub stage_minutes: u32,
}

impl Default for FleetParams {
    fn default() -> Self {
        Self {
            n_ev: 25,
            capacity_kwh: 50.0,
            soc_min: 0.2,
            soc_max: 0.8,
            charge_power_kw: 22.0,
            efficiency: 0.9,
            e_work_kwh_per_stage: 2.0,
            d_thre: 1,
            horizon: 288,
            stage_minutes: 5,
        }
    }
}

impl FleetParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::InvalidParams(msg));
        if self.n_ev == 0 {
            return bad("n_ev must be at least 1".into());
        }
        if !(self.capacity_kwh.is_finite() && self.capacity_kwh > 0.0) {
            return bad(format!(
                "capacity_kwh must be a positive finite number, got {}",
                self.capacity_kwh
            ));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return bad(format!(
                "need 0 <= soc_min < soc_max <= 1, got {} and {}",
                self.soc_min, self.soc_max
            ));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad(format!(
                "efficiency must be in (0, 1], got {}",
                self.efficiency
            ));
        }
        if !(self.charge_power_kw.is_finite() && self.charge_power_kw > 0.0) {
            return bad(format!(
                "charge_power_kw must be a positive finite number, got {}",
                self.charge_power_kw
            ));
        }
        if !(self.e_work_kwh_per_stage.is_finite() && self.e_work_kwh_per_stage > 0.0) {
            return bad(format!(
                "e_work_kwh_per_stage must be a positive finite number, got {}",
                self.e_work_kwh_per_stage
            ));
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1 stage".into());
        }
        if self.stage_minutes == 0 {
            return bad("stage_minutes must be at least 1".into());
        }
        Ok(())
    }

    /// Energy drawn from the supply per full charging stage (kWh), losses included.
    pub fn charge_energy_kwh(&self) -> f64 {
        self.charge_power_kw * self.stage_minutes as f64 / 60.0
    }

    /// SoC fraction consumed per working stage.
    pub fn work_soc_step(&self) -> f64 {
        self.e_work_kwh_per_stage / self.capacity_kwh
    }

    /// SoC after one charging stage; lands exactly on `soc_max` when the
    /// remaining headroom is below one full stage of delivered energy.
    pub fn charge_next_soc(&self, soc: f64) -> f64 {
        let step = self.efficiency * self.charge_energy_kwh() / self.capacity_kwh;
        if step >= self.soc_max - soc {
            self.soc_max
        } else {
            soc + step
        }
    }

    /// Billed supply draw (kWh) for one charging stage starting from `soc`.
    ///
    /// Near `soc_max` only the energy actually delivered (plus losses) is
    /// billed, so the final top-up stage draws less than a full stage.
    pub fn charge_billed_kwh(&self, soc: f64) -> f64 {
        let deliverable = (self.soc_max - soc).max(0.0) * self.capacity_kwh;
        deliverable.min(self.efficiency * self.charge_energy_kwh()) / self.efficiency
    }

    /// May this ASEV be controlled to charge?
    pub fn can_charge(&self, asev: &AsevState) -> bool {
        asev.mode.is_free() && asev.soc < self.soc_max - SOC_TOL
    }

    /// May this ASEV start a new job? (Free and strictly above the dispatch reserve.)
    pub fn can_start_work(&self, asev: &AsevState) -> bool {
        asev.mode.is_free() && asev.soc > self.soc_min + SOC_TOL
    }
}

/// The set of controls admissible for ASEV `i` in the given fleet state.
///
/// A mid-job ASEV is locked to `Work` (the release back to idle happens inside
/// `step` once the last stage has run). A free ASEV may always idle, may
/// charge below the SoC ceiling, and may work only when a flight is waiting
/// and its SoC is above the dispatch reserve.
pub fn feasible_controls(fleet: &FleetState, params: &FleetParams, i: usize) -> Vec<Control> {
    let asev = &fleet.asevs[i];
    if !asev.mode.is_free() {
        return vec![Control::Work];
    }
    let mut out = vec![Control::Idle];
    if params.can_charge(asev) {
        out.push(Control::Charge);
    }
    if !fleet.pending.is_empty() && params.can_start_work(asev) {
        out.push(Control::Work);
    }
    out
}

/// Indices of ASEVs free to take a new job, ordered by decreasing SoC
/// (lower index wins ties).
pub fn eligible_asevs(fleet: &FleetState, params: &FleetParams) -> Vec<usize> {
    let mut out: Vec<usize> = (0..fleet.asevs.len())
        .filter(|&i| params.can_start_work(&fleet.asevs[i]))
        .collect();
    out.sort_by(|&a, &b| {
        fleet.asevs[b]
            .soc
            .partial_cmp(&fleet.asevs[a].soc)
            .expect("finite soc")
            .then(a.cmp(&b))
    });
    out
}

/// Advance the fleet one stage under the given per-ASEV controls.
///
/// Fresh work assignments claim pending flights (each exactly once, FIFO from
/// the front of the queue) and discharge one stage of work energy; so do job
/// continuations with more than one stage left. A job on its last stage is
/// released back to idle without a discharge. Charging adds one stage of
/// delivered energy capped exactly at `soc_max`. Flights left waiting gain one
/// stage of delay; exceeding the delay threshold or driving a battery below
/// zero is an error.
pub fn step(
    fleet: &FleetState,
    controls: &[ControlDecision],
    params: &FleetParams,
) -> Result<FleetState, DynamicsError> {
    if controls.len() != fleet.asevs.len() {
        return Err(DynamicsError::InvalidControl {
            asev: 0,
            msg: format!(
                "expected {} controls, got {}",
                fleet.asevs.len(),
                controls.len()
            ),
        });
    }

    let invalid = |asev: usize, msg: String| DynamicsError::InvalidControl { asev, msg };

    // Pass 1: validate every decision and collect fresh assignments.
    let mut claimed: Vec<&str> = Vec::new();
    for (i, (asev, decision)) in fleet.asevs.iter().zip(controls).enumerate() {
        match (&asev.mode, decision.control) {
            (Mode::Working { .. }, Control::Work) => {
                if decision.assignment.is_some() {
                    return Err(invalid(
                        i,
                        "mid-job ASEV cannot take a new assignment".into(),
                    ));
                }
            }
            (Mode::Working { .. }, other) => {
                return Err(invalid(
                    i,
                    format!("mid-job ASEV must keep working, got {other:?}"),
                ));
            }
            (_, Control::Idle) => {
                if decision.assignment.is_some() {
                    return Err(invalid(i, "idle control cannot carry an assignment".into()));
                }
            }
            (_, Control::Charge) => {
                if decision.assignment.is_some() {
                    return Err(invalid(
                        i,
                        "charge control cannot carry an assignment".into(),
                    ));
                }
                if !params.can_charge(asev) {
                    return Err(invalid(
                        i,
                        format!(
                            "cannot charge at soc {:.6} (ceiling {})",
                            asev.soc, params.soc_max
                        ),
                    ));
                }
            }
            (_, Control::Work) => {
                let flight_id = decision.assignment.as_deref().ok_or_else(|| {
                    invalid(i, "fresh work control must name a pending flight".into())
                })?;
                if !params.can_start_work(asev) {
                    return Err(invalid(
                        i,
                        format!(
                            "cannot start work at soc {:.6} (reserve {})",
                            asev.soc, params.soc_min
                        ),
                    ));
                }
                if !fleet.pending.iter().any(|f| f.flight_id == flight_id) {
                    return Err(invalid(i, format!("flight `{flight_id}` is not pending")));
                }
                if claimed.contains(&flight_id) {
                    return Err(invalid(i, format!("flight `{flight_id}` assigned twice")));
                }
                claimed.push(flight_id);
            }
        }
    }

    // Mandatory service: exactly min(|pending|, |eligible|) flights must be
    // claimed, and they must be the ones at the front of the FIFO queue.
    let eligible = eligible_asevs(fleet, params);
    let required = fleet.pending.len().min(eligible.len());
    if claimed.len() != required {
        return Err(DynamicsError::MandatoryService {
            assigned: claimed.len(),
            pending: fleet.pending.len(),
            eligible: eligible.len(),
        });
    }
    for flight in &fleet.pending[..required] {
        if !claimed.contains(&flight.flight_id.as_str()) {
            return Err(DynamicsError::InvalidControl {
                asev: 0,
                msg: format!(
                    "flight `{}` is ahead in the queue but was skipped",
                    flight.flight_id
                ),
            });
        }
    }

    // Pass 2: apply the transition.
    let mut asevs = Vec::with_capacity(fleet.asevs.len());
    for (i, (asev, decision)) in fleet.asevs.iter().zip(controls).enumerate() {
        let mut next = asev.clone();
        match (&asev.mode, decision.control) {
            (Mode::Working { remaining }, Control::Work) => {
                if *remaining >= 2 {
                    next.mode = Mode::Working {
                        remaining: remaining - 1,
                    };
                    next.soc -= params.work_soc_step();
                } else {
                    // Final stage already ran; release without a discharge.
                    next.mode = Mode::Idle;
                }
            }
            (_, Control::Idle) => next.mode = Mode::Idle,
            (_, Control::Charge) => {
                next.mode = Mode::Charging;
                next.soc = params.charge_next_soc(asev.soc);
            }
            (_, Control::Work) => {
                let flight_id = decision.assignment.as_deref().expect("validated");
                let workload = fleet
                    .pending
                    .iter()
                    .find(|f| f.flight_id == flight_id)
                    .expect("validated")
                    .remaining_workload;
                next.mode = Mode::Working {
                    remaining: workload,
                };
                next.soc -= params.work_soc_step();
            }
        }
        if next.soc < 0.0 {
            if next.soc < -1e-12 {
                return Err(DynamicsError::BatteryDepleted { asev: i });
            }
            next.soc = 0.0;
        }
        asevs.push(next);
    }

    // Unserved flights carry over with one more stage of delay.
    let mut pending = Vec::with_capacity(fleet.pending.len() - claimed.len());
    for flight in &fleet.pending {
        if claimed.contains(&flight.flight_id.as_str()) {
            continue;
        }
        let delay = flight.delay + 1;
        if delay > params.d_thre {
            return Err(DynamicsError::DelayThresholdViolated {
                flight_id: flight.flight_id.clone(),
                delay,
                d_thre: params.d_thre,
            });
        }
        pending.push(PendingFlight {
            delay,
            ..flight.clone()
        });
    }

    Ok(FleetState {
        stage: fleet.stage + 1,
        asevs,
        pending,
    })
}
