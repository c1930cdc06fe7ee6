//! Encounter classification and the safety/mobility metrics.
//!
//! A stop is a true positive when the stopping agent would have collided with
//! one of its causes had both kept the velocities they had at the stop
//! instant, and a false positive otherwise. Every collision is a false
//! negative. `mobility = TP/(TP+FP)` and `safety = TP/(TP+FN)`.

use std::fmt;

use crate::dynamics::{AgentState, SimParams};
use crate::engine::{pair, CollisionRecord, EncounterRecord, StopRecord};
use crate::geometry::{min_image_delta, PlanarVector};

/// True when the straight-line relative motion `p_rel + τ·v_rel` comes closer
/// than `d_coll` for some `τ ∈ [0, horizon]`.
pub fn predict_collision(p_rel: PlanarVector, v_rel: PlanarVector, d_coll: f64, horizon: f64) -> bool {
    let speed_sq = v_rel.norm_sq();
    if speed_sq == 0.0 {
        return p_rel.norm() < d_coll;
    }
    let tau = (-p_rel.dot(v_rel) / speed_sq).clamp(0.0, horizon);
    (p_rel + v_rel * tau).norm() < d_coll
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopClass {
    TruePositive,
    FalsePositive,
    /// Every cause was already inside the collision distance; such stops are
    /// left out of both tallies and the contact surfaces as a collision.
    Excluded,
}

/// Classifies a stop from the kinematics frozen at the stop instant.
pub fn classify_stop(stop: &StopRecord, d_coll: f64, horizon: f64, arena: f64) -> StopClass {
    let me = stop.frozen[stop.agent];
    let mut any_outside = false;
    for &c in &stop.cause_agents {
        let other = stop.frozen[c];
        let p_rel = min_image_delta(me.pos, other.pos, arena);
        if p_rel.norm() < d_coll {
            continue;
        }
        any_outside = true;
        if predict_collision(p_rel, other.vel - me.vel, d_coll, horizon) {
            return StopClass::TruePositive;
        }
    }
    if any_outside {
        StopClass::FalsePositive
    } else {
        StopClass::Excluded
    }
}

/// False negatives booked per collision: one, or one for each agent involved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FnWeight {
    One,
    #[default]
    PerAgent,
}

impl FnWeight {
    pub fn per_collision(self) -> u64 {
        match self {
            FnWeight::One => 1,
            FnWeight::PerAgent => 2,
        }
    }

    pub fn from_count(n: u64) -> Option<Self> {
        match n {
            1 => Some(FnWeight::One),
            2 => Some(FnWeight::PerAgent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EncounterCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// Tallies classified stops and collisions. `tn` counts closed encounters in
/// which the pair neither collided nor caused a stop of one another; it does
/// not enter either metric.
pub fn count_events(
    stops: &[StopRecord],
    classes: &[StopClass],
    collisions: &[CollisionRecord],
    encounters: &[EncounterRecord],
    fn_weight: FnWeight,
) -> EncounterCounts {
    debug_assert_eq!(stops.len(), classes.len());
    let mut counts = EncounterCounts::default();
    for class in classes {
        match class {
            StopClass::TruePositive => counts.tp += 1,
            StopClass::FalsePositive => counts.fp += 1,
            StopClass::Excluded => {}
        }
    }
    counts.fn_ = fn_weight.per_collision() * collisions.len() as u64;
    counts.tn = encounters
        .iter()
        .filter(|e| {
            let window = e.t_enter..=e.t_exit;
            let stopped = stops.iter().any(|s| {
                window.contains(&s.t) && s.cause_agents.iter().any(|&c| pair(s.agent, c) == e.pair)
            });
            let collided = collisions.iter().any(|c| c.pair == e.pair && window.contains(&c.t));
            !stopped && !collided
        })
        .count() as u64;
    counts
}

/// A ratio whose denominator may be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Defined(f64),
    Undefined,
}

impl Ratio {
    pub fn of(num: u64, den: u64) -> Self {
        if den == 0 {
            Ratio::Undefined
        } else {
            Ratio::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Defined(v) => Some(v),
            Ratio::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Ratio::Defined(_))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Defined(v) => write!(f, "{v:.6}"),
            Ratio::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mobility: Ratio,
    pub safety: Ratio,
}

pub fn counts_to_metrics(c: &EncounterCounts) -> Metrics {
    Metrics {
        mobility: Ratio::of(c.tp, c.tp + c.fp),
        safety: Ratio::of(c.tp, c.tp + c.fn_),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub params: SimParams,
    pub seed: u64,
    pub counts: EncounterCounts,
    pub metrics: Metrics,
    pub stops: Vec<StopRecord>,
    pub classes: Vec<StopClass>,
    pub collisions: Vec<CollisionRecord>,
    pub encounters: Vec<EncounterRecord>,
    pub trajectory: Option<Vec<Vec<AgentState>>>,
}

/// Mean and population standard deviation over the trials where a metric is
/// defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub used: usize,
    pub excluded: usize,
}

impl MetricSummary {
    fn from_ratios(values: impl Iterator<Item = Ratio>) -> Self {
        let mut defined = Vec::new();
        let mut excluded = 0;
        for r in values {
            match r {
                Ratio::Defined(v) => defined.push(v),
                Ratio::Undefined => excluded += 1,
            }
        }
        if defined.is_empty() {
            return Self {
                mean: None,
                std: None,
                used: 0,
                excluded,
            };
        }
        let n = defined.len() as f64;
        let mean = defined.iter().sum::<f64>() / n;
        let var = defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean: Some(mean),
            std: Some(var.sqrt()),
            used: defined.len(),
            excluded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mobility: MetricSummary,
    pub safety: MetricSummary,
    pub trials: usize,
}

pub fn aggregate_metrics<'a>(metrics: impl IntoIterator<Item = &'a Metrics> + Clone) -> Aggregate {
    let trials = metrics.clone().into_iter().count();
    Aggregate {
        mobility: MetricSummary::from_ratios(metrics.clone().into_iter().map(|m| m.mobility)),
        safety: MetricSummary::from_ratios(metrics.into_iter().map(|m| m.safety)),
        trials,
    }
}

pub fn aggregate_trials(results: &[TrialResult]) -> Aggregate {
    let metrics: Vec<Metrics> = results.iter().map(|r| r.metrics).collect();
    aggregate_metrics(&metrics)
}
