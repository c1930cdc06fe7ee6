//! Deterministic small-population scenarios: the false-alarm encounters, a
//! crossing on a collision course, and an approach to a wall of stopped
//! agents.

use std::f64::consts::PI;

use crate::dynamics::{AgentId, AgentState, InitError, SimParams, SENTINEL_THRESHOLD};
use crate::engine::Simulation;
use crate::geometry::{min_image_delta, IntersectionScenario, PlanarVector};

const NORTH: f64 = PI / 2.0;
const CENTER: PlanarVector = PlanarVector::new(25.0, 25.0);

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub params: SimParams,
    pub agents: Vec<AgentState>,
    /// The agent whose stop the scenario is about.
    pub observer: AgentId,
}

/// Two-agent parameters: GRM only, no spontaneous restarts.
pub fn two_agent_params(cva_deg: f64) -> SimParams {
    SimParams {
        n_agents: 2,
        cva: cva_deg.to_radians(),
        t_grm: 2.0,
        t_loom: SENTINEL_THRESHOLD,
        p01: 0.0,
        horizon_steps: 400,
        ..SimParams::default()
    }
}

/// Agents placed by a crossing scenario around the arena center: agent 0 is
/// the scenario's observer heading north, agent 1 the target.
pub fn crossing_agents(s: &IntersectionScenario) -> Vec<AgentState> {
    let observer = AgentState::new(0, CENTER + PlanarVector::new(0.0, s.d + s.epsilon), NORTH, s.v1);
    let target_pos = CENTER + PlanarVector::new(-s.psi.sin(), s.psi.cos()) * (s.epsilon * s.v2 / s.v1);
    let target = AgentState::new(1, target_pos, NORTH + s.psi, s.v2);
    vec![observer, target]
}

/// A faster agent overtakes a slower one on its left; the slower one sees
/// the overtaker sweep forward.
pub fn overtaking() -> Fixture {
    let slow = AgentState::new(0, PlanarVector::new(25.0, 15.0), NORTH, 10.0);
    let fast = AgentState::new(1, PlanarVector::new(22.0, 10.0), NORTH, 30.0);
    Fixture {
        name: "overtaking",
        params: two_agent_params(10.0),
        agents: vec![slow, fast],
        observer: 0,
    }
}

/// The target crosses the junction well ahead of the observer.
pub fn early_crossing() -> Fixture {
    let s = IntersectionScenario {
        v1: 20.0,
        v2: 20.0,
        psi: PI / 2.0,
        d: -4.0,
        epsilon: -10.0,
    };
    Fixture {
        name: "early_crossing",
        params: two_agent_params(10.0),
        agents: crossing_agents(&s),
        observer: 0,
    }
}

/// A fast observer walks away from a slower agent whose image sits inside the
/// observer's contralateral cone and drifts toward the nasal boundary.
pub fn moving_away() -> Fixture {
    let fast = AgentState::new(0, CENTER, NORTH, 30.0);
    let bearing = NORTH + 55f64.to_radians();
    let slow = AgentState::new(1, CENTER + PlanarVector::from_angle(bearing) * 4.0, 160f64.to_radians(), 20.0);
    Fixture {
        name: "moving_away",
        params: two_agent_params(60.0),
        agents: vec![fast, slow],
        observer: 0,
    }
}

/// Perpendicular crossing where the observer arrives second and would hit the
/// target.
pub fn collision_course() -> Fixture {
    let s = IntersectionScenario {
        v1: 20.0,
        v2: 20.0,
        psi: PI / 2.0,
        d: -1.0,
        epsilon: -10.0,
    };
    Fixture {
        name: "collision_course",
        params: two_agent_params(10.0),
        agents: crossing_agents(&s),
        observer: 0,
    }
}

pub fn false_alarms() -> [Fixture; 3] {
    [overtaking(), early_crossing(), moving_away()]
}

/// Number of stopped agents forming the wall.
pub const WALL_AGENTS: usize = 20;

/// A row of stopped agents across the whole torus at `y = 35` and one walker
/// starting `gap` mm below it, heading `alpha` away from the wall normal.
///
/// The walker is the last agent.
pub fn wall_approach(alpha: f64, speed: f64, gap: f64, cva_deg: f64, t_grm: f64) -> Fixture {
    let params = SimParams {
        n_agents: WALL_AGENTS + 1,
        cva: cva_deg.to_radians(),
        t_grm,
        t_loom: SENTINEL_THRESHOLD,
        p01: 0.0,
        ..SimParams::default()
    };
    let spacing = params.arena / WALL_AGENTS as f64;
    let wall_y = 35.0;
    let mut agents: Vec<AgentState> = (0..WALL_AGENTS)
        .map(|i| AgentState {
            moving: false,
            was_moving: false,
            ..AgentState::new(i, PlanarVector::new((i as f64 + 0.5) * spacing, wall_y), 0.0, params.v_min)
        })
        .collect();
    let walker = AgentState::new(WALL_AGENTS, PlanarVector::new(25.0, wall_y - gap), NORTH - alpha, speed);
    agents.push(walker);
    Fixture {
        name: "wall_approach",
        params,
        agents,
        observer: WALL_AGENTS,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallOutcome {
    /// Step at which the walker stopped, if it did.
    pub stopped_at: Option<usize>,
    /// Smallest center distance between the walker and any wall agent.
    pub min_distance: f64,
}

/// Steps a wall fixture until the walker stops or `max_steps` elapse. With no
/// restarts a stopped walker never moves again, so the run ends there.
pub fn run_wall_approach(f: &Fixture, seed: u64, max_steps: usize) -> Result<WallOutcome, InitError> {
    let mut sim = Simulation::from_agents(f.params.clone(), f.agents.clone(), seed)?;
    let walker = f.observer;
    let closest = |agents: &[AgentState]| {
        agents
            .iter()
            .filter(|a| a.id != walker)
            .map(|a| min_image_delta(agents[walker].pos, a.pos, f.params.arena).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let mut min_distance = closest(&sim.world().agents);
    for _ in 0..max_steps {
        let t = sim.world().time_step;
        let events = sim.step();
        min_distance = min_distance.min(closest(&sim.world().agents));
        if events.stops.iter().any(|s| s.agent == walker) {
            return Ok(WallOutcome { stopped_at: Some(t), min_distance });
        }
    }
    Ok(WallOutcome { stopped_at: None, min_distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::StopClass;
    use crate::engine::{run_agents, TrialOptions};

    #[test]
    fn crossing_agents_follow_scenario() {
        let s = IntersectionScenario { v1: 10.0, v2: 20.0, psi: 1.0, d: -3.0, epsilon: -2.0 };
        let agents = crossing_agents(&s);
        let rel = agents[1].pos - agents[0].pos;
        let expected = s.relative_position();
        assert!((rel - expected).norm() < 1e-12);
        let w = agents[1].velocity() - agents[0].velocity();
        assert!((w - s.relative_velocity()).norm() < 1e-12);
    }

    #[test]
    fn false_alarm_fixtures_stop_falsely() {
        for f in false_alarms() {
            let r = run_agents(&f.params, f.agents.clone(), 1, TrialOptions::default()).unwrap();
            let own: Vec<_> = r
                .stops
                .iter()
                .zip(&r.classes)
                .filter(|(s, _)| s.agent == f.observer)
                .collect();
            assert!(!own.is_empty(), "{}: observer never stopped", f.name);
            assert_eq!(*own[0].1, StopClass::FalsePositive, "{}", f.name);
            assert!(r.collisions.is_empty(), "{}", f.name);
        }
    }

    #[test]
    fn collision_course_stops_truly() {
        let f = collision_course();
        let r = run_agents(&f.params, f.agents.clone(), 1, TrialOptions::default()).unwrap();
        let (stop, class) = r.stops.iter().zip(&r.classes).find(|(s, _)| s.agent == 0).unwrap();
        assert_eq!(*class, StopClass::TruePositive);
        let gap = min_image_delta(stop.frozen[0].pos, stop.frozen[1].pos, f.params.arena).norm();
        assert!(gap >= f.params.collision_distance);
        assert!(r.collisions.is_empty());
    }

    #[test]
    fn wall_walker_stops_short() {
        for deg in [10.0f64, 45.0, 80.0] {
            let f = wall_approach(deg.to_radians(), 20.0, 10.0, 30.0, 2.0);
            let o = run_wall_approach(&f, 3, 4000).unwrap();
            assert!(o.stopped_at.is_some(), "alpha {deg}");
            assert!(o.min_distance >= f.params.collision_distance, "alpha {deg}: {}", o.min_distance);
        }
    }
}
