//! Stochastic ground-transport workload model.
//!
//! The time an ASEV needs to serve one flight is modelled as a truncated
//! normal distribution over minutes, discretized into whole 5-minute stages.
//! Flight schedules are read from CSV and carry an optional per-flight
//! override of the workload distribution.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

/// Tolerance for "is a multiple of the stage length" checks on bounds.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("empty truncation window: cdf mass between bounds is below 1e-12")]
    EmptyTruncationWindow,
    #[error("bounds not stage-aligned: {0} min is not a positive multiple of {1} min")]
    BoundsNotStageAligned(f64, f64),
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    #[error("schedule parse error at line {line}: {msg}")]
    ScheduleParse { line: u64, msg: String },
    #[error("duplicate flight_id `{id}` at line {line}")]
    DuplicateFlightId { line: u64, id: String },
    #[error("flight `{id}`: stage {stage} out of horizon (0..{horizon})")]
    StageOutOfHorizon {
        id: String,
        stage: usize,
        horizon: usize,
    },
    #[error("cannot read schedule `{path}`: {msg}")]
    Io { path: String, msg: String },
}

/// Parameters of the truncated normal service-time distribution, in minutes.
///
/// `mu` and `sigma` describe the parent normal; `lower`/`upper` are the
/// truncation bounds and must be positive multiples of the stage length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormalSpec {
    pub mu: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedNormalSpec {
    pub fn new(mu: f64, sigma: f64, lower: f64, upper: f64) -> Result<Self, WorkloadError> {
        let spec = Self {
            mu,
            sigma,
            lower,
            upper,
        };
        spec.check_basic()?;
        Ok(spec)
    }

    /// A spec whose discretization is a point mass on exactly `stages`.
    ///
    /// The truncation window covers a single stage cell, so the discrete
    /// workload is deterministic regardless of `sigma`.
    pub fn deterministic(stages: u32, stage_minutes: f64) -> Self {
        let lower = stages as f64 * stage_minutes;
        Self {
            mu: lower + stage_minutes / 2.0,
            sigma: stage_minutes / 2.0,
            lower,
            upper: lower + stage_minutes,
        }
    }

    fn check_basic(&self) -> Result<(), WorkloadError> {
        if !(self.mu.is_finite() && self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(WorkloadError::InvalidSpec(format!(
                "need finite mu and finite sigma > 0, got mu {} sigma {}",
                self.mu, self.sigma
            )));
        }
        if !(self.upper.is_finite() && self.lower < self.upper) {
            return Err(WorkloadError::InvalidSpec(format!(
                "lower bound {} must be below finite upper bound {}",
                self.lower, self.upper
            )));
        }
        if self.lower <= 0.0 {
            return Err(WorkloadError::InvalidSpec(format!(
                "lower bound must be positive, got {}",
                self.lower
            )));
        }
        Ok(())
    }

    fn check_aligned(&self, dt: f64) -> Result<(), WorkloadError> {
        for b in [self.lower, self.upper] {
            let cells = b / dt;
            if (cells - cells.round()).abs() > ALIGN_TOL || cells.round() < 1.0 {
                return Err(WorkloadError::BoundsNotStageAligned(b, dt));
            }
        }
        Ok(())
    }

    fn parent(&self) -> Normal {
        // sigma > 0 is validated before any call
        Normal::new(self.mu, self.sigma).expect("validated spec")
    }

    /// Probability mass of the parent normal inside the truncation window.
    fn window_mass(&self) -> Result<f64, WorkloadError> {
        let parent = self.parent();
        let mass = parent.cdf(self.upper) - parent.cdf(self.lower);
        if mass < 1e-12 {
            return Err(WorkloadError::EmptyTruncationWindow);
        }
        Ok(mass)
    }

    /// Analytic mean of the truncated distribution, in minutes.
    pub fn truncated_mean(&self) -> Result<f64, WorkloadError> {
        self.check_basic()?;
        let mass = self.window_mass()?;
        let std = Normal::standard();
        let alpha = (self.lower - self.mu) / self.sigma;
        let beta = (self.upper - self.mu) / self.sigma;
        Ok(self.mu + self.sigma * (std.pdf(alpha) - std.pdf(beta)) / mass)
    }
}

/// Density and cumulative probability of the truncated distribution at `x` minutes.
///
/// The density is zero outside the open window `(lower, upper)`; the
/// cumulative is 0 at or below the lower bound and 1 at or above the upper.
pub fn truncated_pdf_cdf(spec: &TruncatedNormalSpec, x: f64) -> Result<(f64, f64), WorkloadError> {
    spec.check_basic()?;
    let mass = spec.window_mass()?;
    if x <= spec.lower {
        return Ok((0.0, 0.0));
    }
    if x >= spec.upper {
        return Ok((0.0, 1.0));
    }
    let parent = spec.parent();
    let density = parent.pdf(x) / mass;
    let cumulative = ((parent.cdf(x) - parent.cdf(spec.lower)) / mass).clamp(0.0, 1.0);
    Ok((density, cumulative))
}

/// Discrete stage-count distribution for serving one flight.
///
/// Support is a strictly increasing list of stage counts with probabilities
/// that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteWorkload {
    pub stage_length: f64,
    pub support: Vec<(u32, f64)>,
}

impl DiscreteWorkload {
    /// A distribution that always realizes `stages`.
    pub fn point_mass(stages: u32, stage_length: f64) -> Self {
        Self {
            stage_length,
            support: vec![(stages, 1.0)],
        }
    }

    pub fn is_point_mass(&self) -> bool {
        self.support.len() == 1
    }

    /// Inverse-CDF draw over the discrete support.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(k, p) in &self.support {
            acc += p;
            if u < acc {
                return k;
            }
        }
        // u landed in the residual rounding mass; return the last point
        self.support.last().expect("non-empty support").0
    }

    /// Mean stage count.
    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(k, p)| k as f64 * p).sum()
    }

    /// Mean stage count rounded to the nearest integer (ties up), at least 1.
    pub fn expected_stages(&self) -> u32 {
        (self.mean().round() as u32).max(1)
    }
}

/// Discretize the truncated service time into whole stages of `dt` minutes.
///
/// Stage count `k` covers the minute cell `[k*dt, (k+1)*dt)`, so the support
/// runs from `lower/dt` to `upper/dt - 1` and the cell probabilities
/// partition the truncation window.
pub fn discretize(spec: &TruncatedNormalSpec, dt: f64) -> Result<DiscreteWorkload, WorkloadError> {
    spec.check_basic()?;
    spec.check_aligned(dt)?;
    let mass = spec.window_mass()?;
    let parent = spec.parent();
    let k_lo = (spec.lower / dt).round() as u32;
    let k_hi = (spec.upper / dt).round() as u32; // exclusive
    let support = (k_lo..k_hi)
        .map(|k| {
            let cell_lo = k as f64 * dt;
            let cell_hi = (k + 1) as f64 * dt;
            let p = (parent.cdf(cell_hi) - parent.cdf(cell_lo)) / mass;
            (k, p.max(0.0))
        })
        .collect();
    Ok(DiscreteWorkload {
        stage_length: dt,
        support,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlightKind {
    Arrival,
    Departure,
}

impl std::str::FromStr for FlightKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "arrival" => Ok(FlightKind::Arrival),
            "departure" => Ok(FlightKind::Departure),
            other => Err(format!("unknown flight kind `{other}`")),
        }
    }
}

/// One flight awaiting ground-transport service at a fixed stage of the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightEvent {
    pub flight_id: String,
    pub kind: FlightKind,
    pub scheduled_stage: usize,
    pub workload: TruncatedNormalSpec,
}

/// FNV-1a 64-bit hash; used to key deterministic per-flight random streams.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Parse `HH:MM` into a stage index on the `stage_minutes` grid.
pub fn parse_hhmm_stage(text: &str, stage_minutes: u32) -> Result<usize, String> {
    let (hh, mm) = text
        .trim()
        .split_once(':')
        .ok_or_else(|| format!("time `{text}` is not HH:MM"))?;
    let h: u32 = hh.parse().map_err(|_| format!("bad hour in `{text}`"))?;
    let m: u32 = mm.parse().map_err(|_| format!("bad minute in `{text}`"))?;
    if h > 23 || m > 59 {
        return Err(format!("time `{text}` out of range"));
    }
    let minutes = 60 * h + m;
    if !minutes.is_multiple_of(stage_minutes) {
        return Err(format!(
            "time not stage-aligned: `{text}` is not on the {stage_minutes}-minute grid"
        ));
    }
    Ok((minutes / stage_minutes) as usize)
}

/// Render a stage index as `HH:MM`.
pub fn stage_to_hhmm(stage: usize, stage_minutes: u32) -> String {
    let minutes = stage as u32 * stage_minutes;
    format!("{:02}:{:02}", (minutes / 60) % 24, minutes % 60)
}

/// Load a flight schedule from CSV.
///
/// Expected header: `flight_id,kind,time_hhmm[,mu_min,sigma_min,lower_min,upper_min]`.
/// Rows without the four workload columns inherit `default_workload`.
/// Events come back sorted by `(scheduled_stage, flight_id)`.
pub fn load_schedule(
    path: &std::path::Path,
    default_workload: &TruncatedNormalSpec,
    horizon: usize,
    stage_minutes: u32,
) -> Result<Vec<FlightEvent>, WorkloadError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| WorkloadError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;

    let mut events: Vec<FlightEvent> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| WorkloadError::ScheduleParse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse = |msg: String| -> WorkloadError { WorkloadError::ScheduleParse { line, msg } };

        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 3 && record.len() != 7 {
            return Err(parse(format!(
                "expected 3 or 7 fields, found {}",
                record.len()
            )));
        }
        let flight_id = record[0].to_string();
        if flight_id.is_empty() {
            return Err(parse("empty flight_id".into()));
        }
        if !seen.insert(flight_id.clone()) {
            return Err(WorkloadError::DuplicateFlightId {
                line,
                id: flight_id,
            });
        }
        let kind: FlightKind = record[1].parse().map_err(parse)?;
        let scheduled_stage = parse_hhmm_stage(&record[2], stage_minutes).map_err(parse)?;
        if scheduled_stage >= horizon {
            return Err(WorkloadError::StageOutOfHorizon {
                id: flight_id,
                stage: scheduled_stage,
                horizon,
            });
        }
        let workload = if record.len() == 7 {
            let num = |idx: usize, name: &str| -> Result<f64, WorkloadError> {
                record[idx]
                    .parse::<f64>()
                    .map_err(|_| parse(format!("bad {name} `{}`", &record[idx])))
            };
            TruncatedNormalSpec::new(
                num(3, "mu_min")?,
                num(4, "sigma_min")?,
                num(5, "lower_min")?,
                num(6, "upper_min")?,
            )?
        } else {
            *default_workload
        };
        events.push(FlightEvent {
            flight_id,
            kind,
            scheduled_stage,
            workload,
        });
    }
    events
        .sort_by(|a, b| (a.scheduled_stage, &a.flight_id).cmp(&(b.scheduled_stage, &b.flight_id)));
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    /// Hand-rolled parent normal density, independent of statrs.
    fn oracle_normal_pdf(mu: f64, sigma: f64, x: f64) -> f64 {
        let z = (x - mu) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Parent normal CDF by Simpson quadrature of the hand-rolled density.
    fn oracle_normal_cdf(mu: f64, sigma: f64, x: f64) -> f64 {
        let lo = mu - 12.0 * sigma;
        if x <= lo {
            return 0.0;
        }
        let n = 4000;
        let h = (x - lo) / n as f64;
        let mut acc = oracle_normal_pdf(mu, sigma, lo) + oracle_normal_pdf(mu, sigma, x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * oracle_normal_pdf(mu, sigma, lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn bristol_spec() -> TruncatedNormalSpec {
        TruncatedNormalSpec::new(22.5, 5.0, 15.0, 30.0).unwrap()
    }

    #[test]
    fn pdf_cdf_at_truncation_bounds() {
        let spec = bristol_spec();
        assert_eq!(truncated_pdf_cdf(&spec, 15.0).unwrap(), (0.0, 0.0));
        assert_eq!(truncated_pdf_cdf(&spec, 30.0).unwrap(), (0.0, 1.0));
        assert_eq!(truncated_pdf_cdf(&spec, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(truncated_pdf_cdf(&spec, 99.0).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn pdf_at_mean_matches_quadrature_oracle() {
        let spec = bristol_spec();
        let window = oracle_normal_cdf(22.5, 5.0, 30.0) - oracle_normal_cdf(22.5, 5.0, 15.0);
        let expected = oracle_normal_pdf(22.5, 5.0, 22.5) / window;
        // frozen from the oracle above
        assert_abs_diff_eq!(expected, 0.092093, epsilon = 1e-6);
        let (density, _) = truncated_pdf_cdf(&spec, 22.5).unwrap();
        assert_abs_diff_eq!(density, expected, epsilon = 1e-7);
    }

    #[test]
    fn cdf_at_midpoint_of_symmetric_spec_is_half() {
        let spec = bristol_spec();
        let (_, cumulative) = truncated_pdf_cdf(&spec, 22.5).unwrap();
        assert_abs_diff_eq!(cumulative, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_window_is_rejected() {
        // window 10 sigma away from the mean holds essentially no mass
        let spec = TruncatedNormalSpec::new(1000.0, 1.0, 15.0, 30.0).unwrap();
        assert_eq!(
            truncated_pdf_cdf(&spec, 20.0),
            Err(WorkloadError::EmptyTruncationWindow)
        );
    }

    #[test]
    fn discretize_support_is_lower_to_upper_minus_one() {
        let dist = discretize(&bristol_spec(), 5.0).unwrap();
        let ks: Vec<u32> = dist.support.iter().map(|&(k, _)| k).collect();
        assert_eq!(ks, vec![3, 4, 5]);
    }

    #[test]
    fn discretize_probabilities_sum_to_one() {
        let dist = discretize(&bristol_spec(), 5.0).unwrap();
        let total: f64 = dist.support.iter().map(|&(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn discretize_symmetric_spec_is_symmetric_and_unimodal() {
        let dist = discretize(&bristol_spec(), 5.0).unwrap();
        let p: Vec<f64> = dist.support.iter().map(|&(_, p)| p).collect();
        assert_abs_diff_eq!(p[0], p[2], epsilon = 1e-12);
        assert!(p[1] > p[0]);
        // frozen from the quadrature oracle: cell mass (20,25) vs (15,20)
        let window = oracle_normal_cdf(22.5, 5.0, 30.0) - oracle_normal_cdf(22.5, 5.0, 15.0);
        let cell3 =
            (oracle_normal_cdf(22.5, 5.0, 20.0) - oracle_normal_cdf(22.5, 5.0, 15.0)) / window;
        let cell4 =
            (oracle_normal_cdf(22.5, 5.0, 25.0) - oracle_normal_cdf(22.5, 5.0, 20.0)) / window;
        assert_abs_diff_eq!(p[0], cell3, epsilon = 1e-7);
        assert_abs_diff_eq!(p[1], cell4, epsilon = 1e-7);
        assert_abs_diff_eq!(cell3, 0.279010, epsilon = 1e-6);
        assert_abs_diff_eq!(cell4, 0.441980, epsilon = 1e-6);
    }

    #[test]
    fn discretize_rejects_misaligned_bounds() {
        let spec = TruncatedNormalSpec::new(22.5, 5.0, 15.0, 32.0).unwrap();
        assert!(matches!(
            discretize(&spec, 5.0),
            Err(WorkloadError::BoundsNotStageAligned(..))
        ));
    }

    #[test]
    fn point_mass_always_samples_its_value() {
        let dist = DiscreteWorkload::point_mass(4, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(dist.sample(&mut rng), 4);
        }
    }

    #[test]
    fn sampling_matches_probabilities_within_three_sigma() {
        let dist = DiscreteWorkload {
            stage_length: 5.0,
            support: vec![(3, 0.25), (4, 0.5), (5, 0.25)],
        };
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0u32; 3];
        for _ in 0..n {
            counts[(dist.sample(&mut rng) - 3) as usize] += 1;
        }
        for (i, &(_, p)) in dist.support.iter().enumerate() {
            let mean = n as f64 * p;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (counts[i] as f64 - mean).abs() < 3.0 * sd,
                "bin {i}: count {} vs mean {mean:.1} (sd {sd:.1})",
                counts[i]
            );
        }
    }

    #[test]
    fn same_seed_gives_same_stream() {
        let dist = discretize(&bristol_spec(), 5.0).unwrap();
        let draw = |seed: u64| -> Vec<u32> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| dist.sample(&mut rng)).collect()
        };
        assert_eq!(draw(99), draw(99));
        assert_ne!(draw(99), draw(100));
    }

    #[test]
    fn expected_stages_rounds_ties_up() {
        assert_eq!(DiscreteWorkload::point_mass(4, 5.0).expected_stages(), 4);
        let half = DiscreteWorkload {
            stage_length: 5.0,
            support: vec![(3, 0.5), (5, 0.5)],
        };
        assert_eq!(half.expected_stages(), 4);
        let quarters = DiscreteWorkload {
            stage_length: 5.0,
            support: vec![(3, 0.25), (4, 0.5), (5, 0.25)],
        };
        assert_eq!(quarters.expected_stages(), 4);
        let tie = DiscreteWorkload {
            stage_length: 5.0,
            support: vec![(3, 0.5), (4, 0.5)],
        };
        assert_eq!(tie.expected_stages(), 4);
    }

    #[test]
    fn discrete_mean_tracks_analytic_truncated_mean() {
        let spec = TruncatedNormalSpec::new(21.0, 7.0, 10.0, 40.0).unwrap();
        let dist = discretize(&spec, 5.0).unwrap();
        let analytic_stages = spec.truncated_mean().unwrap() / 5.0;
        assert!((dist.mean() - analytic_stages).abs() < 1.0);
    }

    #[test]
    fn tiny_sigma_concentrates_on_one_cell() {
        // mean sits mid-cell of [20, 25)
        let spec = TruncatedNormalSpec::new(22.5, 0.2, 15.0, 30.0).unwrap();
        let dist = discretize(&spec, 5.0).unwrap();
        let p4 = dist
            .support
            .iter()
            .find(|&&(k, _)| k == 4)
            .map(|&(_, p)| p)
            .unwrap();
        assert!(p4 >= 0.999);
    }

    fn write_schedule(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_schedule_empty_file_gives_empty_list() {
        let f = write_schedule("flight_id,kind,time_hhmm\n");
        let events = load_schedule(f.path(), &bristol_spec(), 288, 5).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn load_schedule_maps_times_to_stages() {
        let f = write_schedule(
            "flight_id,kind,time_hhmm\nBA001,arrival,06:00\nEZ900,departure,22:55\n",
        );
        let events = load_schedule(f.path(), &bristol_spec(), 288, 5).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].scheduled_stage, 72);
        assert_eq!(events[1].scheduled_stage, 275);
        assert_eq!(events[0].workload, bristol_spec());
    }

    #[test]
    fn load_schedule_rejects_stage_past_horizon() {
        // 25:00 is invalid HH:MM, so use a horizon smaller than the stage
        let f = write_schedule("flight_id,kind,time_hhmm\nBA001,arrival,06:00\n");
        let err = load_schedule(f.path(), &bristol_spec(), 60, 5).unwrap_err();
        assert!(matches!(
            err,
            WorkloadError::StageOutOfHorizon { stage: 72, .. }
        ));
    }

    #[test]
    fn load_schedule_rejects_duplicates_and_bad_rows() {
        let f = write_schedule(
            "flight_id,kind,time_hhmm\nBA001,arrival,06:00\nBA001,departure,07:00\n",
        );
        assert!(matches!(
            load_schedule(f.path(), &bristol_spec(), 288, 5),
            Err(WorkloadError::DuplicateFlightId { line: 3, .. })
        ));

        let f = write_schedule("flight_id,kind,time_hhmm\nBA001,arrival,06:03\n");
        let err = load_schedule(f.path(), &bristol_spec(), 288, 5).unwrap_err();
        match err {
            WorkloadError::ScheduleParse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("not stage-aligned"));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let f = write_schedule("flight_id,kind,time_hhmm\nBA001,hover,06:00\n");
        assert!(matches!(
            load_schedule(f.path(), &bristol_spec(), 288, 5),
            Err(WorkloadError::ScheduleParse { line: 2, .. })
        ));
    }

    #[test]
    fn load_schedule_reads_per_flight_workload_override() {
        let f = write_schedule(
            "flight_id,kind,time_hhmm,mu_min,sigma_min,lower_min,upper_min\nBA001,arrival,06:00,20,3,10,25\n",
        );
        let events = load_schedule(f.path(), &bristol_spec(), 288, 5).unwrap();
        assert_eq!(
            events[0].workload,
            TruncatedNormalSpec::new(20.0, 3.0, 10.0, 25.0).unwrap()
        );
    }

    #[test]
    fn load_schedule_sorts_by_stage_then_id() {
        let f = write_schedule(
            "flight_id,kind,time_hhmm\nZZ9,arrival,08:00\nAA1,departure,08:00\nBB2,arrival,06:30\n",
        );
        let events = load_schedule(f.path(), &bristol_spec(), 288, 5).unwrap();
        let ids: Vec<&str> = events.iter().map(|e| e.flight_id.as_str()).collect();
        assert_eq!(ids, vec!["BB2", "AA1", "ZZ9"]);
    }
}
