//! Base heuristics and the rollout controller.
//!
//! Two fast heuristics cover the day: "renewable matching" charges only while
//! renewable energy is available, "greedy charging" tops every free battery up
//! as early as possible. Both assign waiting flights to the free vehicle with
//! the highest state of charge. The rollout controller improves on them by
//! one-step lookahead: at each stage it enumerates a reduced set of candidate
//! joint controls, scores each as stage cost plus the cheaper feasible
//! heuristic's cost-to-go from the successor state, and plays the argmin.

use crate::costs::{
    self, CostBreakdown, CostError, DegradationParams, PriceAndRenewableProfiles, StageCost,
};
use crate::dynamics::{self, Control, ControlDecision, FleetParams, FleetState, PendingFlight};
use crate::workload::{fnv1a64, DiscreteWorkload};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scores within this tolerance count as tied in the rollout argmin.
const SCORE_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("no feasible base heuristic from this state")]
    NoFeasibleBaseHeuristic,
    #[error("all candidates infeasible at stage {stage}")]
    AllCandidatesInfeasible { stage: usize },
    #[error("invalid rollout configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// The two base heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseHeuristic {
    RenewableMatching,
    GreedyCharging,
}

/// A policy selectable for a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Greedy,
    Renewable,
    Rollout,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(PolicyKind::Greedy),
            "renewable" => Ok(PolicyKind::Renewable),
            "rollout" => Ok(PolicyKind::Rollout),
            other => Err(format!(
                "unknown policy `{other}` (expected greedy, renewable, or rollout)"
            )),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicyKind::Greedy => write!(f, "greedy"),
            PolicyKind::Renewable => write!(f, "renewable"),
            PolicyKind::Rollout => write!(f, "rollout"),
        }
    }
}

/// A future queue entry whose job length has been fixed for one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightArrival {
    pub stage: usize,
    pub flight_id: String,
    pub workload_stages: u32,
}

/// A future queue entry whose job length is still distributional.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedFlight {
    pub stage: usize,
    pub flight_id: String,
    pub workload: DiscreteWorkload,
}

/// Fix every planned flight at its expected job length.
pub fn certainty_equivalent_arrivals(planned: &[PlannedFlight]) -> Vec<FlightArrival> {
    planned
        .iter()
        .map(|p| FlightArrival {
            stage: p.stage,
            flight_id: p.flight_id.clone(),
            workload_stages: p.workload.expected_stages(),
        })
        .collect()
}

/// Draw one job-length sample per planned flight.
///
/// The stream is keyed by `(seed, flight_id, sample)` only, so every candidate
/// evaluated under the same sample index sees identical workloads (common
/// random numbers), and the streams are disjoint from the closed-loop
/// realization stream.
pub fn sampled_arrivals(planned: &[PlannedFlight], seed: u64, sample: usize) -> Vec<FlightArrival> {
    planned
        .iter()
        .map(|p| {
            let key = seed
                ^ fnv1a64(p.flight_id.as_bytes())
                ^ 0xD6E8_FEB8_6659_FD93
                ^ (sample as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            FlightArrival {
                stage: p.stage,
                flight_id: p.flight_id.clone(),
                workload_stages: p.workload.sample(&mut rng),
            }
        })
        .collect()
}

/// Controls and per-stage cost of one simulated stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub stage: usize,
    pub controls: Vec<ControlDecision>,
    pub cost: StageCost,
}

/// Result of running a heuristic from a snapshot to the end of the day.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub feasible: bool,
    /// Total cost of the simulated remainder of the day; absent if infeasible.
    pub cost_to_go: Option<f64>,
    pub breakdown: Option<CostBreakdown>,
    pub first_stage_controls: Vec<ControlDecision>,
    pub trajectory: Option<Vec<TrajectoryEntry>>,
}

impl PolicyOutcome {
    fn infeasible(
        first_stage_controls: Vec<ControlDecision>,
        trajectory: Option<Vec<TrajectoryEntry>>,
    ) -> Self {
        Self {
            feasible: false,
            cost_to_go: None,
            breakdown: None,
            first_stage_controls,
            trajectory,
        }
    }
}

/// Shared first layer of every policy: keep working vehicles on their jobs and
/// pair queue-front flights with the highest-SoC free vehicles. Returns the
/// control vector (everyone else idle) and a mask of committed vehicles.
fn assignments_and_continuations(
    fleet: &FleetState,
    params: &FleetParams,
) -> (Vec<ControlDecision>, Vec<bool>) {
    let n = fleet.asevs.len();
    let mut controls = vec![ControlDecision::idle(); n];
    let mut committed = vec![false; n];
    for (i, asev) in fleet.asevs.iter().enumerate() {
        if !asev.mode.is_free() {
            controls[i] = ControlDecision::keep_working();
            committed[i] = true;
        }
    }
    let eligible = dynamics::eligible_asevs(fleet, params);
    let served = fleet.pending.len().min(eligible.len());
    for (slot, flight) in fleet.pending[..served].iter().enumerate() {
        let i = eligible[slot];
        controls[i] = ControlDecision::serve(flight.flight_id.clone());
        committed[i] = true;
    }
    (controls, committed)
}

/// Free vehicles that could charge this stage, lowest SoC first.
fn chargeable_low_soc_first(
    fleet: &FleetState,
    params: &FleetParams,
    committed: &[bool],
) -> Vec<usize> {
    let mut out: Vec<usize> = (0..fleet.asevs.len())
        .filter(|&i| !committed[i] && params.can_charge(&fleet.asevs[i]))
        .collect();
    out.sort_by(|&a, &b| {
        fleet.asevs[a]
            .soc
            .partial_cmp(&fleet.asevs[b].soc)
            .expect("finite soc")
            .then(a.cmp(&b))
    });
    out
}

/// Greedy-charging rule for one stage: everyone free and below the ceiling charges.
pub fn greedy_stage_controls(fleet: &FleetState, params: &FleetParams) -> Vec<ControlDecision> {
    let (mut controls, committed) = assignments_and_continuations(fleet, params);
    for i in chargeable_low_soc_first(fleet, params, &committed) {
        controls[i] = ControlDecision::charge();
    }
    controls
}

/// Renewable-matching rule for one stage: charge lowest-SoC-first only while
/// the fleet's accumulated draw is still below the stage's renewable budget
/// (the last vehicle admitted may overshoot it).
pub fn renewable_stage_controls(
    fleet: &FleetState,
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
) -> Vec<ControlDecision> {
    let (mut controls, committed) = assignments_and_continuations(fleet, params);
    let budget = profiles.renewable_energy[fleet.stage];
    let mut draw = 0.0;
    for i in chargeable_low_soc_first(fleet, params, &committed) {
        if draw >= budget - 1e-12 {
            break;
        }
        controls[i] = ControlDecision::charge();
        draw += params.charge_energy_kwh();
    }
    controls
}

/// Simulate one heuristic from `start` to the end of the day.
///
/// `arrivals` lists flights that will join the queue at stages ≥ `start.stage`
/// (sorted by stage then flight id) with their job lengths already fixed.
/// Tripping the delay threshold or depleting a battery makes the outcome
/// infeasible rather than an error.
pub fn heuristic_outcome(
    kind: BaseHeuristic,
    start: &FleetState,
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
    degradation: &DegradationParams,
    arrivals: &[FlightArrival],
    record_trajectory: bool,
) -> PolicyOutcome {
    debug_assert!(arrivals
        .windows(2)
        .all(|w| { (w[0].stage, &w[0].flight_id) <= (w[1].stage, &w[1].flight_id) }));
    let mut state = start.clone();
    let mut arrival_idx = 0;
    let mut stage_costs: Vec<StageCost> = Vec::new();
    let mut first: Option<Vec<ControlDecision>> = None;
    let mut log = record_trajectory.then(Vec::new);

    while state.stage < params.horizon {
        while arrival_idx < arrivals.len() && arrivals[arrival_idx].stage <= state.stage {
            let a = &arrivals[arrival_idx];
            debug_assert_eq!(a.stage, state.stage, "arrival earlier than the snapshot");
            state.push_pending(PendingFlight {
                flight_id: a.flight_id.clone(),
                remaining_workload: a.workload_stages,
                delay: 0,
            });
            arrival_idx += 1;
        }
        let controls = match kind {
            BaseHeuristic::GreedyCharging => greedy_stage_controls(&state, params),
            BaseHeuristic::RenewableMatching => renewable_stage_controls(&state, profiles, params),
        };
        let cost = costs::stage_cost(&state, &controls, profiles, params, degradation)
            .expect("cycles_to_failure > 0 is validated before simulation");
        if first.is_none() {
            first = Some(controls.clone());
        }
        if let Some(log) = &mut log {
            log.push(TrajectoryEntry {
                stage: state.stage,
                controls: controls.clone(),
                cost,
            });
        }
        match dynamics::step(&state, &controls, params) {
            Ok(next) => {
                stage_costs.push(cost);
                state = next;
            }
            Err(_) => return PolicyOutcome::infeasible(first.unwrap_or_default(), log),
        }
    }
    let terminal = costs::terminal_cost(&state, profiles, params);
    let breakdown = costs::accumulate(&stage_costs, terminal);
    PolicyOutcome {
        feasible: true,
        cost_to_go: Some(breakdown.total),
        breakdown: Some(breakdown),
        first_stage_controls: first.unwrap_or_default(),
        trajectory: log,
    }
}

/// The "renewable matching" heuristic simulated to the end of the day.
pub fn heuristic_renewable_matching(
    start: &FleetState,
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
    degradation: &DegradationParams,
    future_flights: &[FlightArrival],
) -> PolicyOutcome {
    heuristic_outcome(
        BaseHeuristic::RenewableMatching,
        start,
        profiles,
        params,
        degradation,
        future_flights,
        false,
    )
}

/// The "greedy charging" heuristic simulated to the end of the day.
pub fn heuristic_greedy_charging(
    start: &FleetState,
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
    degradation: &DegradationParams,
    future_flights: &[FlightArrival],
) -> PolicyOutcome {
    heuristic_outcome(
        BaseHeuristic::GreedyCharging,
        start,
        profiles,
        params,
        degradation,
        future_flights,
        false,
    )
}

/// Run both heuristics from `start` and pick the cheaper feasible one.
///
/// Greedy charging wins exact ties. Both infeasible is an error: the state
/// admits no base policy.
pub fn select_base_heuristic(
    start: &FleetState,
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
    degradation: &DegradationParams,
    future_flights: &[FlightArrival],
) -> Result<(BaseHeuristic, PolicyOutcome), PolicyError> {
    let renewable =
        heuristic_renewable_matching(start, profiles, params, degradation, future_flights);
    let greedy = heuristic_greedy_charging(start, profiles, params, degradation, future_flights);
    match (renewable.feasible, greedy.feasible) {
        (false, false) => Err(PolicyError::NoFeasibleBaseHeuristic),
        (true, false) => Ok((BaseHeuristic::RenewableMatching, renewable)),
        (false, true) => Ok((BaseHeuristic::GreedyCharging, greedy)),
        (true, true) => {
            let r = renewable.cost_to_go.expect("feasible");
            let g = greedy.cost_to_go.expect("feasible");
            if r < g {
                Ok((BaseHeuristic::RenewableMatching, renewable))
            } else {
                Ok((BaseHeuristic::GreedyCharging, greedy))
            }
        }
    }
}

/// How future job lengths enter cost-to-go evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum WorkloadMode {
    /// Every future flight is fixed at its expected job length.
    CertaintyEquivalent,
    /// Average the cost-to-go over `samples` workload draws with common
    /// random numbers across candidates.
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    pub workload_mode: WorkloadMode,
    pub parallel_eval: bool,
    /// Enumerate every feasible joint control instead of the structured
    /// reduction; only permitted for fleets of at most 4 vehicles.
    pub exhaustive_small_fleet: bool,
    /// Master seed for Monte-Carlo workload sampling.
    pub seed: u64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            workload_mode: WorkloadMode::CertaintyEquivalent,
            parallel_eval: true,
            exhaustive_small_fleet: false,
            seed: 0,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self, params: &FleetParams) -> Result<(), PolicyError> {
        if let WorkloadMode::MonteCarlo { samples } = self.workload_mode {
            if samples == 0 {
                return Err(PolicyError::InvalidConfig(
                    "monte-carlo needs at least 1 sample".into(),
                ));
            }
        }
        if self.exhaustive_small_fleet && params.n_ev > 4 {
            return Err(PolicyError::InvalidConfig(format!(
                "exhaustive enumeration is limited to fleets of 4, got {}",
                params.n_ev
            )));
        }
        Ok(())
    }
}

/// Candidate joint controls for one stage.
///
/// Work assignments are fixed by the shared highest-SoC rule, so the only
/// degree of freedom is who charges: candidate `k` charges the `k` lowest-SoC
/// free vehicles, for k = 0 … all of them — linear in fleet size. The
/// exhaustive variant (tiny fleets only) additionally varies the
/// flight-to-vehicle pairing and arbitrary charge subsets.
pub fn candidate_controls(
    fleet: &FleetState,
    params: &FleetParams,
    exhaustive: bool,
) -> Vec<Vec<ControlDecision>> {
    if exhaustive {
        return exhaustive_candidates(fleet, params);
    }
    let (base, committed) = assignments_and_continuations(fleet, params);
    let chargeable = chargeable_low_soc_first(fleet, params, &committed);
    (0..=chargeable.len())
        .map(|k| {
            let mut controls = base.clone();
            for &i in &chargeable[..k] {
                controls[i] = ControlDecision::charge();
            }
            controls
        })
        .collect()
}

fn exhaustive_candidates(fleet: &FleetState, params: &FleetParams) -> Vec<Vec<ControlDecision>> {
    let n = fleet.asevs.len();
    let eligible = dynamics::eligible_asevs(fleet, params);
    let served = fleet.pending.len().min(eligible.len());

    // Every ordered choice of `served` distinct vehicles from `eligible`,
    // pairing choice j with the j-th queue-front flight.
    let mut pairings: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..served {
        let mut grown = Vec::new();
        for partial in &pairings {
            for &v in &eligible {
                if !partial.contains(&v) {
                    let mut next = partial.clone();
                    next.push(v);
                    grown.push(next);
                }
            }
        }
        pairings = grown;
    }

    let mut out = Vec::new();
    for pairing in &pairings {
        let mut base = vec![ControlDecision::idle(); n];
        for (i, asev) in fleet.asevs.iter().enumerate() {
            if !asev.mode.is_free() {
                base[i] = ControlDecision::keep_working();
            }
        }
        for (slot, &vehicle) in pairing.iter().enumerate() {
            base[vehicle] = ControlDecision::serve(fleet.pending[slot].flight_id.clone());
        }
        let free: Vec<usize> = (0..n)
            .filter(|&i| fleet.asevs[i].mode.is_free() && !pairing.contains(&i))
            .collect();
        for mask in 0u32..(1 << free.len()) {
            let mut controls = base.clone();
            let mut ok = true;
            for (bit, &i) in free.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    if !params.can_charge(&fleet.asevs[i]) {
                        ok = false;
                        break;
                    }
                    controls[i] = ControlDecision::charge();
                }
            }
            if ok {
                out.push(controls);
            }
        }
    }
    out
}

struct ScoredCandidate {
    idx: usize,
    score: f64,
    chargers: usize,
    billed_draw: f64,
    u_vector: Vec<i8>,
}

/// Does `a` beat the incumbent `b`? Strictly lower score wins; within the tie
/// tolerance, more chargers win while either candidate would leave renewable
/// energy unused, otherwise the lexicographically smallest control vector
/// (work < idle < charge per vehicle) wins.
fn beats(a: &ScoredCandidate, b: &ScoredCandidate, renewable_budget: f64) -> bool {
    if a.score < b.score - SCORE_TIE_TOL {
        return true;
    }
    if a.score > b.score + SCORE_TIE_TOL {
        return false;
    }
    let surplus = renewable_budget > a.billed_draw.min(b.billed_draw) + 1e-9;
    if surplus && a.chargers != b.chargers {
        return a.chargers > b.chargers;
    }
    a.u_vector < b.u_vector
}

/// One-step-lookahead rollout decision at the fleet's current stage.
///
/// Each candidate is scored as its immediate stage cost plus the cost-to-go of
/// the better feasible base heuristic from the successor state; candidates
/// whose successor admits no feasible heuristic (or whose own step already
/// fails) are discarded. Evaluations are independent and may run in parallel;
/// the argmin is reduced in candidate order, so the decision is identical
/// either way.
pub fn rollout_decide(
    current: &FleetState,
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
    degradation: &DegradationParams,
    future_flights: &[PlannedFlight],
    config: &RolloutConfig,
) -> Result<Vec<ControlDecision>, PolicyError> {
    config.validate(params)?;
    debug_assert!(current.stage < params.horizon);
    debug_assert!(future_flights.iter().all(|p| p.stage > current.stage));

    let arrival_sets: Vec<Vec<FlightArrival>> = match config.workload_mode {
        WorkloadMode::CertaintyEquivalent => vec![certainty_equivalent_arrivals(future_flights)],
        WorkloadMode::MonteCarlo { samples } => (0..samples)
            .map(|s| sampled_arrivals(future_flights, config.seed, s))
            .collect(),
    };

    let candidates = candidate_controls(current, params, config.exhaustive_small_fleet);
    let evaluate = |(idx, cand): (usize, &Vec<ControlDecision>)| -> Result<Option<ScoredCandidate>, PolicyError> {
        let stage_cost = costs::stage_cost(current, cand, profiles, params, degradation)?;
        let next = match dynamics::step(current, cand, params) {
            Ok(next) => next,
            Err(_) => return Ok(None),
        };
        let mut cost_to_go_sum = 0.0;
        for arrivals in &arrival_sets {
            match select_base_heuristic(&next, profiles, params, degradation, arrivals) {
                Ok((_, outcome)) => cost_to_go_sum += outcome.cost_to_go.expect("feasible"),
                Err(PolicyError::NoFeasibleBaseHeuristic) => return Ok(None),
                Err(other) => return Err(other),
            }
        }
        let cost_to_go = cost_to_go_sum / arrival_sets.len() as f64;
        let (mut chargers, mut billed_draw) = (0usize, 0.0f64);
        for (asev, decision) in current.asevs.iter().zip(cand) {
            if decision.control == Control::Charge {
                chargers += 1;
                billed_draw += params.charge_billed_kwh(asev.soc);
            }
        }
        Ok(Some(ScoredCandidate {
            idx,
            score: stage_cost.total() + cost_to_go,
            chargers,
            billed_draw,
            u_vector: cand.iter().map(|d| d.control.u() as i8).collect(),
        }))
    };

    let scored: Vec<Option<ScoredCandidate>> = if config.parallel_eval {
        candidates
            .par_iter()
            .enumerate()
            .map(evaluate)
            .collect::<Result<_, _>>()?
    } else {
        candidates
            .iter()
            .enumerate()
            .map(evaluate)
            .collect::<Result<_, _>>()?
    };

    let renewable_budget = profiles.renewable_energy[current.stage];
    let mut best: Option<ScoredCandidate> = None;
    for candidate in scored.into_iter().flatten() {
        let replace = match &best {
            None => true,
            Some(incumbent) => beats(&candidate, incumbent, renewable_budget),
        };
        if replace {
            best = Some(candidate);
        }
    }
    match best {
        Some(winner) => Ok(candidates[winner.idx].clone()),
        None => Err(PolicyError::AllCandidatesInfeasible {
            stage: current.stage,
        }),
    }
}

/// Controls for the current stage under the chosen policy.
///
/// Heuristics re-derive their rule on the realized state each stage; rollout
/// performs its lookahead. `future_flights` lists flights arriving strictly
/// after the current stage (only rollout consults them).
pub fn decide_stage(
    kind: PolicyKind,
    state: &FleetState,
    profiles: &PriceAndRenewableProfiles,
    params: &FleetParams,
    degradation: &DegradationParams,
    future_flights: &[PlannedFlight],
    config: &RolloutConfig,
) -> Result<Vec<ControlDecision>, PolicyError> {
    match kind {
        PolicyKind::Greedy => Ok(greedy_stage_controls(state, params)),
        PolicyKind::Renewable => Ok(renewable_stage_controls(state, profiles, params)),
        PolicyKind::Rollout => {
            rollout_decide(state, profiles, params, degradation, future_flights, config)
        }
    }
}
