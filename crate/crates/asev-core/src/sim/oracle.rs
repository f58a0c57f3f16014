//! Exhaustive dynamic-programming optimum for tiny deterministic instances.
//!
//! Tests use this to certify where the stage-by-stage controllers must sit:
//! the exact optimum never exceeds the lookahead policy's day cost, which in
//! turn never exceeds its base heuristic's forecast. The search enumerates
//! every feasible joint control at every reachable state, so it is only
//! offered for very small instances and refuses anything larger outright.

use super::{Scenario, SimError};
use crate::costs;
use crate::dynamics::{self, FleetState, PendingFlight};
use crate::policies::candidate_controls;
use crate::workload::discretize;
use std::collections::HashMap;

/// Largest fleet the exhaustive search accepts.
pub const ORACLE_MAX_EVS: usize = 3;
/// Longest day the exhaustive search accepts.
pub const ORACLE_MAX_HORIZON: usize = 20;

/// State-of-charge values within one millionth of each other are the same
/// lattice point for memoisation purposes.
const SOC_KEY_SCALE: f64 = 1e6;

type StateKey = (usize, Vec<(i32, i64)>, Vec<(u16, u32)>);

struct Solver<'a> {
    scenario: &'a Scenario,
    /// Flights joining the queue at each stage, in queue order.
    arrivals: Vec<Vec<PendingFlight>>,
    ordinal: HashMap<String, u16>,
    memo: HashMap<StateKey, f64>,
}

impl Solver<'_> {
    fn key(&self, state: &FleetState) -> StateKey {
        (
            state.stage,
            state
                .asevs
                .iter()
                .map(|a| (a.mode.q(), (a.soc * SOC_KEY_SCALE).round() as i64))
                .collect(),
            state
                .pending
                .iter()
                .map(|f| (self.ordinal[&f.flight_id], f.delay))
                .collect(),
        )
    }

    fn inject_arrivals(&self, state: &mut FleetState) {
        for flight in &self.arrivals[state.stage] {
            state.push_pending(flight.clone());
        }
    }

    /// Minimum cost-to-go from a state whose stage's arrivals are already in
    /// the queue. Infinity when no control sequence finishes the day.
    fn value(&mut self, state: FleetState) -> f64 {
        let params = &self.scenario.fleet;
        if state.stage == params.horizon {
            return costs::terminal_cost(&state, &self.scenario.profiles, params);
        }
        let key = self.key(&state);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let mut best = f64::INFINITY;
        for controls in candidate_controls(&state, params, true) {
            let Ok(stage_cost) = costs::stage_cost(
                &state,
                &controls,
                &self.scenario.profiles,
                params,
                &self.scenario.degradation,
            ) else {
                continue;
            };
            let Ok(mut next) = dynamics::step(&state, &controls, params) else {
                continue; // infeasible branch (delay threshold, depletion, …)
            };
            if next.stage < params.horizon {
                self.inject_arrivals(&mut next);
            }
            let v = stage_cost.total() + self.value(next);
            if v < best {
                best = v;
            }
        }
        self.memo.insert(key, best);
        best
    }
}

/// Exact minimum day cost for a small deterministic scenario.
///
/// Accepts at most [`ORACLE_MAX_EVS`] vehicles, at most [`ORACLE_MAX_HORIZON`]
/// stages, only degenerate (single-point) workload distributions, and no
/// schedule events; anything larger is refused rather than approximated.
/// Returns [`SimError::Infeasible`] when every control sequence trips a
/// constraint before the end of the day.
pub fn exact_dp_oracle(scenario: &Scenario) -> Result<f64, SimError> {
    scenario.validate()?;
    let params = &scenario.fleet;
    let too_large = |msg: String| Err(SimError::InstanceTooLarge(msg));
    if params.n_ev > ORACLE_MAX_EVS {
        return too_large(format!(
            "fleet of {} exceeds the {ORACLE_MAX_EVS}-vehicle cap",
            params.n_ev
        ));
    }
    if params.horizon > ORACLE_MAX_HORIZON {
        return too_large(format!(
            "horizon of {} stages exceeds the {ORACLE_MAX_HORIZON}-stage cap",
            params.horizon
        ));
    }
    if !scenario.events.is_empty() {
        return too_large("schedule events are not supported".into());
    }

    let mut arrivals: Vec<Vec<PendingFlight>> = vec![Vec::new(); params.horizon];
    let mut ordinal = HashMap::new();
    for flight in &scenario.schedule {
        let dist = discretize(&flight.workload, params.stage_minutes as f64)?;
        if !dist.is_point_mass() {
            return too_large(format!(
                "flight `{}` has a randomized workload; only deterministic \
                 instances are supported",
                flight.flight_id
            ));
        }
        arrivals[flight.scheduled_stage].push(PendingFlight {
            flight_id: flight.flight_id.clone(),
            remaining_workload: dist.support[0].0,
            delay: 0,
        });
    }
    for queue in &mut arrivals {
        queue.sort_by(|a, b| a.flight_id.cmp(&b.flight_id));
    }
    for (i, flight) in scenario.schedule.iter().enumerate() {
        ordinal.insert(flight.flight_id.clone(), i as u16);
    }

    let mut solver = Solver {
        scenario,
        arrivals,
        ordinal,
        memo: HashMap::new(),
    };
    let mut start = scenario.initial_fleet_state();
    solver.inject_arrivals(&mut start);
    let optimum = solver.value(start);
    if optimum.is_finite() {
        Ok(optimum)
    } else {
        Err(SimError::Infeasible)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{DegradationParams, PriceAndRenewableProfiles};
    use crate::dynamics::FleetParams;
    use crate::policies::PolicyKind;
    use crate::sim::run;
    use crate::workload::{FlightEvent, FlightKind, TruncatedNormalSpec};
    use approx::assert_abs_diff_eq;

    fn tiny_scenario(
        n_ev: usize,
        horizon: usize,
        initial_soc: f64,
        schedule: Vec<FlightEvent>,
    ) -> Scenario {
        let fleet = FleetParams {
            n_ev,
            horizon,
            ..FleetParams::default()
        };
        let profiles = PriceAndRenewableProfiles {
            grid_price: vec![0.15; horizon + 1],
            renewable_price: 0.04,
            renewable_energy: vec![0.0; horizon],
        };
        let mut s = Scenario::new(fleet, profiles, DegradationParams::default(), schedule);
        s.initial_soc = initial_soc;
        s
    }

    fn fixed_flight(id: &str, stage: usize, stages: u32) -> FlightEvent {
        FlightEvent {
            flight_id: id.into(),
            kind: FlightKind::Arrival,
            scheduled_stage: stage,
            workload: TruncatedNormalSpec::deterministic(stages, 5.0),
        }
    }

    #[test]
    fn empty_day_from_full_batteries_is_free() {
        let scenario = tiny_scenario(2, 10, 0.8, vec![]);
        assert_eq!(exact_dp_oracle(&scenario).unwrap(), 0.0);
    }

    #[test]
    fn single_forced_job_matches_hand_computation() {
        // One vehicle, one two-stage job arriving at stage 0, flat tariff, no
        // renewables. Service is compulsory so the only real choice is whether
        // to recharge afterwards; with a flat tariff, recharging in-day pays
        // the same rate as the end-of-day shortfall but loses the conversion
        // efficiency, so the optimum is to serve and then do nothing:
        //   wear:      2*(200 + 400*0.20)/3000 + 2*(200 + 400*0.24)/3000
        //   shortfall: 0.15 * 50 * (0.80 - 0.72)
        let scenario = tiny_scenario(1, 12, 0.8, vec![fixed_flight("AA1", 0, 2)]);
        let wear = (2.0 * 280.0 / 3000.0) + (2.0 * 296.0 / 3000.0);
        let optimum = exact_dp_oracle(&scenario).unwrap();
        assert_abs_diff_eq!(optimum, wear + 0.15 * 50.0 * 0.08, epsilon = 1e-9);
        assert_abs_diff_eq!(optimum, 0.984, epsilon = 1e-9);

        // the lookahead policy finds the optimum; eager charging instead
        // refills the 4 kWh it spent through the 90%-efficient charger
        let rollout = run(&scenario, PolicyKind::Rollout).unwrap();
        assert!(rollout.feasible);
        assert_abs_diff_eq!(rollout.cost.total, optimum, epsilon = 1e-9);
        let greedy = run(&scenario, PolicyKind::Greedy).unwrap();
        assert!(greedy.feasible);
        assert_abs_diff_eq!(greedy.cost.total, wear + 0.15 * 4.0 / 0.9, epsilon = 1e-9);
    }

    #[test]
    fn optimum_defers_charging_into_the_renewable_window() {
        // A depleted but idle day: eager charging pays the grid tariff now,
        // while waiting for the afternoon renewable surplus is far cheaper.
        let mut scenario = tiny_scenario(1, 16, 0.7, vec![]);
        for t in 8..13 {
            scenario.profiles.renewable_energy[t] = 2.0;
        }
        let optimum = exact_dp_oracle(&scenario).unwrap();
        let greedy = run(&scenario, PolicyKind::Greedy).unwrap();
        assert!(greedy.feasible);
        assert!(
            optimum + 1e-6 < greedy.cost.total,
            "eager charging ({:.6}) should be beatable ({optimum:.6})",
            greedy.cost.total
        );
        // the lookahead policy should find the same deferral
        let rollout = run(&scenario, PolicyKind::Rollout).unwrap();
        assert_abs_diff_eq!(rollout.cost.total, optimum, epsilon = 1e-9);
    }

    #[test]
    fn policies_are_sandwiched_by_the_optimum() {
        let mk = |initial_soc: f64, pv: (usize, usize, f64), schedule: Vec<FlightEvent>| {
            let mut s = tiny_scenario(2, 18, initial_soc, schedule);
            for t in pv.0..pv.1 {
                s.profiles.renewable_energy[t] = pv.2;
            }
            s
        };
        let instances = [
            mk(
                0.8,
                (6, 12, 1.5),
                vec![fixed_flight("AA1", 0, 2), fixed_flight("AA2", 7, 3)],
            ),
            mk(0.6, (2, 9, 2.0), vec![fixed_flight("AA1", 3, 4)]),
            mk(
                0.5,
                (10, 16, 3.0),
                vec![fixed_flight("AA1", 1, 2), fixed_flight("AA2", 2, 2)],
            ),
            mk(0.7, (0, 5, 1.0), vec![]),
        ];
        for (i, scenario) in instances.iter().enumerate() {
            let optimum = exact_dp_oracle(scenario).unwrap();
            let rollout = run(scenario, PolicyKind::Rollout).unwrap();
            let greedy = run(scenario, PolicyKind::Greedy).unwrap();
            assert!(rollout.feasible && greedy.feasible, "instance {i}");
            assert!(
                optimum <= rollout.cost.total + 1e-6,
                "instance {i}: optimum {optimum:.6} above lookahead {:.6}",
                rollout.cost.total,
            );
            assert!(
                rollout.cost.total <= greedy.cost.total + 1e-6,
                "instance {i}: lookahead {:.6} above its base {:.6}",
                rollout.cost.total,
                greedy.cost.total,
            );
        }
    }

    #[test]
    fn overloaded_instance_is_reported_infeasible() {
        // one vehicle cannot serve three simultaneous flights within the delay
        // threshold no matter what it does
        let scenario = tiny_scenario(
            1,
            12,
            0.8,
            vec![
                fixed_flight("AA1", 2, 2),
                fixed_flight("AA2", 2, 2),
                fixed_flight("AA3", 2, 2),
            ],
        );
        assert!(matches!(
            exact_dp_oracle(&scenario),
            Err(SimError::Infeasible)
        ));
    }

    #[test]
    fn oversized_instances_are_refused() {
        let too_many_evs = tiny_scenario(4, 10, 0.8, vec![]);
        assert!(matches!(
            exact_dp_oracle(&too_many_evs),
            Err(SimError::InstanceTooLarge(_))
        ));

        let too_long = tiny_scenario(2, 25, 0.8, vec![]);
        assert!(matches!(
            exact_dp_oracle(&too_long),
            Err(SimError::InstanceTooLarge(_))
        ));

        let mut randomized = tiny_scenario(2, 12, 0.8, vec![]);
        randomized.schedule.push(FlightEvent {
            flight_id: "AA1".into(),
            kind: FlightKind::Departure,
            scheduled_stage: 2,
            workload: TruncatedNormalSpec::new(12.5, 4.0, 5.0, 20.0).unwrap(),
        });
        assert!(matches!(
            exact_dp_oracle(&randomized),
            Err(SimError::InstanceTooLarge(_))
        ));

        let mut with_event = tiny_scenario(2, 12, 0.8, vec![fixed_flight("AA1", 5, 2)]);
        with_event.events.push(crate::sim::ScheduleEvent {
            kind: crate::sim::ScheduleEventKind::Cancellation,
            flight_id: "AA1".into(),
            announce_stage: 3,
        });
        assert!(matches!(
            exact_dp_oracle(&with_event),
            Err(SimError::InstanceTooLarge(_))
        ));
    }
}
