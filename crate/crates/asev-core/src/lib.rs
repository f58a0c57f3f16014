//! Simulator and near-optimal controller for an airport service electric
//! vehicle (ASEV) fleet.
//!
//! The day is divided into 5-minute stages. At each stage every vehicle is
//! either charging, idling, or partway through a ground-transport job; a
//! controller assigns waiting flights to vehicles and decides who charges,
//! trading off energy price, battery degradation, and an end-of-day refill
//! penalty. The `policies` module provides two fast base heuristics and a
//! one-step-lookahead rollout controller built on top of them; `sim` runs
//! closed-loop days and houses a small exact-optimality oracle for tests.

pub mod costs;
pub mod dynamics;
pub mod policies;
pub mod sim;
pub mod workload;
