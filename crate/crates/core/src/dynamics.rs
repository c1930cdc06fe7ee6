//! Per-agent state machine: straight walking, threshold stops, coin-flip
//! restarts and Gaussian reorientation with a sensitizing spread.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{min_image_delta, wrap_angle, wrap_torus, PlanarVector};
use crate::perception::PerceptSummary;

/// Rejection attempts allowed per agent when placing the population.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Thresholds at or above this value practically disable a channel.
pub const SENTINEL_THRESHOLD: f64 = 32.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitError {
    #[error("arena too crowded: could not place agent {agent} after {attempts} attempts")]
    ArenaTooCrowded { agent: usize, attempts: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Model constants. Angles are radians, lengths mm, times seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    /// Edge length of the toroidal arena.
    pub arena: f64,
    pub n_agents: usize,
    /// Body length.
    pub body_length: f64,
    pub d_eye: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Stop-to-walk probability per time step.
    pub p01: f64,
    pub t_loom: f64,
    pub t_grm: f64,
    pub cva: f64,
    pub theta_i: f64,
    pub delta_sigma: f64,
    pub lambda_sigma: f64,
    pub n_points: usize,
    pub horizon_steps: usize,
    pub collision_distance: f64,
    pub extrapolation_horizon: f64,
}

impl Default for SimParams {
    /// The fly model's published defaults. Both thresholds default to 0,
    /// so any perceived GRM or looming stops an agent.
    fn default() -> Self {
        Self {
            dt: 0.005,
            arena: 50.0,
            n_agents: 10,
            body_length: 2.0,
            d_eye: 0.55,
            v_min: 10.0,
            v_max: 30.0,
            p01: 0.008,
            t_loom: 0.0,
            t_grm: 0.0,
            cva: 30f64.to_radians(),
            theta_i: 120f64.to_radians(),
            delta_sigma: 30f64.to_radians(),
            lambda_sigma: 0.992,
            n_points: 14,
            horizon_steps: 10_000,
            collision_distance: 1.2,
            extrapolation_horizon: 2.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), InitError> {
        let bad = |m: &str| Err(InitError::InvalidParams(m.to_string()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.arena > 0.0) {
            return bad("arena edge must be positive");
        }
        if self.n_agents == 0 {
            return bad("at least one agent is required");
        }
        if !(self.v_min > 0.0 && self.v_min <= self.v_max) {
            return bad("speeds must satisfy 0 < v_min <= v_max");
        }
        if !(0.0..=1.0).contains(&self.p01) {
            return bad("P01 must be a probability");
        }
        if !(0.0..=1.0).contains(&self.lambda_sigma) {
            return bad("lambda_sigma must lie in [0, 1]");
        }
        if self.n_points != 14 {
            return bad("agents carry exactly 14 body points");
        }
        if !(self.t_grm >= 0.0 && self.t_loom >= 0.0 && self.delta_sigma >= 0.0) {
            return bad("thresholds and increments must be non-negative");
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.cva) {
            return bad("CVA must lie in [0°, 90°]");
        }
        if !(self.theta_i > 0.0 && self.theta_i <= std::f64::consts::PI) {
            return bad("theta_i must lie in (0°, 180°]");
        }
        if !(self.body_length > 0.0 && self.d_eye >= 0.0) {
            return bad("body geometry must be non-negative");
        }
        if !(self.collision_distance > 0.0 && self.extrapolation_horizon > 0.0) {
            return bad("collision distance and extrapolation horizon must be positive");
        }
        Ok(())
    }
}

pub type AgentId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub pos: PlanarVector,
    /// World heading angle.
    pub heading: f64,
    pub speed: f64,
    /// `true` while walking.
    pub moving: bool,
    pub sigma: f64,
    pub was_moving: bool,
}

impl AgentState {
    pub fn new(id: AgentId, pos: PlanarVector, heading: f64, speed: f64) -> Self {
        Self {
            id,
            pos,
            heading,
            speed,
            moving: true,
            sigma: 0.0,
            was_moving: true,
        }
    }

    #[inline]
    pub fn heading_unit(&self) -> PlanarVector {
        PlanarVector::from_angle(self.heading)
    }

    /// Current velocity; zero while stopped.
    #[inline]
    pub fn velocity(&self) -> PlanarVector {
        if self.moving {
            self.heading_unit() * self.speed
        } else {
            PlanarVector::ZERO
        }
    }
}

/// A seeded, portable random stream.
///
/// Streams derived from one seed with different `stream` ids are independent,
/// which lets every agent own a private sequence of draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, rng }
    }

    /// Stream reserved for agent `id`; stream 0 belongs to initialization.
    pub fn for_agent(seed: u64, id: AgentId) -> Self {
        Self::with_stream(seed, id as u64 + 1)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Places the population uniformly on the arena without overlaps and sets
/// every agent walking.
pub fn init_agents(params: &SimParams, rng: &mut RngStream) -> Result<Vec<AgentState>, InitError> {
    params.validate()?;
    let r = params.arena;
    let mut agents: Vec<AgentState> = Vec::with_capacity(params.n_agents);
    for id in 0..params.n_agents {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = wrap_torus(PlanarVector::new(rng.uniform() * r, rng.uniform() * r), r);
            let clear = agents
                .iter()
                .all(|a| min_image_delta(a.pos, p, r).norm() > params.collision_distance);
            if clear {
                placed = Some(p);
                break;
            }
        }
        let pos = placed.ok_or(InitError::ArenaTooCrowded {
            agent: id,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        let speed = rng.uniform_range(params.v_min, params.v_max);
        let heading = rng.uniform() * TAU;
        agents.push(AgentState::new(id, pos, heading, speed));
    }
    Ok(agents)
}

/// Next value of the motion flag.
///
/// A walking agent stops when either channel exceeds its threshold. A stopped
/// agent restarts only when both channels are below threshold and the
/// per-step coin `u < P01` succeeds; the coin is drawn only in that case.
pub fn control_step(
    state: &AgentState,
    summary: &PerceptSummary,
    params: &SimParams,
    rng: &mut RngStream,
) -> bool {
    if state.moving {
        let stop = summary.max_grm > params.t_grm || summary.omega_loom > params.t_loom;
        !stop
    } else if summary.max_grm < params.t_grm && summary.omega_loom < params.t_loom {
        rng.uniform() < params.p01
    } else {
        false
    }
}

/// Heading and spread after a walk-to-stop transition.
///
/// The new heading is drawn around the current one with the current spread;
/// the spread then decays for this step and is incremented by `δσ`.
pub fn reorient_on_stop(state: &AgentState, rng: &mut RngStream, params: &SimParams) -> (f64, f64) {
    let heading = wrap_angle(state.heading + state.sigma * rng.standard_normal());
    let sigma = params.lambda_sigma * state.sigma + params.delta_sigma;
    (heading, sigma)
}

/// Spread after a step without a stop transition.
#[inline]
pub fn decay_sigma(sigma: f64, params: &SimParams) -> f64 {
    params.lambda_sigma * sigma
}

/// Position after one step.
#[inline]
pub fn advance(state: &AgentState, params: &SimParams) -> PlanarVector {
    if state.moving {
        wrap_torus(state.pos + state.heading_unit() * (state.speed * params.dt), params.arena)
    } else {
        state.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::collections::BTreeSet;

    fn summary(max_grm: f64, omega_loom: f64) -> PerceptSummary {
        let causes = |m: f64| if m > 0.0 { BTreeSet::from([1]) } else { BTreeSet::new() };
        PerceptSummary {
            max_grm,
            grm_causes: causes(max_grm),
            omega_loom,
            loom_causes: causes(omega_loom),
        }
    }

    /// A stream whose first uniform draw is below `p`.
    fn stream_with_first_uniform_below(p: f64) -> RngStream {
        (0..)
            .map(RngStream::new)
            .find(|s| s.clone().uniform() < p)
            .unwrap()
    }

    #[test]
    fn default_params_valid() {
        let p = SimParams::default();
        p.validate().unwrap();
        assert_eq!(p.n_agents, 10);
        assert_relative_eq!(p.delta_sigma, 30f64.to_radians());
    }

    #[test]
    fn init_places_population() {
        let p = SimParams::default();
        let agents = init_agents(&p, &mut RngStream::new(7)).unwrap();
        assert_eq!(agents.len(), 10);
        for (i, a) in agents.iter().enumerate() {
            assert!(a.moving && a.sigma == 0.0);
            assert!(a.speed >= p.v_min && a.speed <= p.v_max);
            assert!((0.0..TAU).contains(&a.heading));
            for b in &agents[i + 1..] {
                assert!(min_image_delta(a.pos, b.pos, p.arena).norm() > p.collision_distance);
            }
        }
        let again = init_agents(&p, &mut RngStream::new(7)).unwrap();
        assert_eq!(agents, again);

        let single = SimParams { n_agents: 1, ..p.clone() };
        assert_eq!(init_agents(&single, &mut RngStream::new(1)).unwrap().len(), 1);
    }

    #[test]
    fn init_fails_when_crowded() {
        let p = SimParams { arena: 2.0, n_agents: 10, ..SimParams::default() };
        let err = init_agents(&p, &mut RngStream::new(3)).unwrap_err();
        assert!(matches!(err, InitError::ArenaTooCrowded { .. }));
    }

    #[test]
    fn control_examples() {
        let p = SimParams { t_grm: 6.0, t_loom: 32.0, ..SimParams::default() };
        let mut rng = RngStream::new(0);
        let walking = AgentState::new(0, PlanarVector::ZERO, 0.0, 20.0);
        assert!(!control_step(&walking, &summary(7.0, 0.0), &p, &mut rng));
        assert!(control_step(&walking, &summary(6.0, 0.0), &p, &mut rng));
        assert!(!control_step(&walking, &summary(0.0, 33.0), &p, &mut rng));

        let stopped = AgentState { moving: false, ..walking };
        let mut lucky = stream_with_first_uniform_below(p.p01);
        assert!(control_step(&stopped, &summary(0.0, 0.0), &p, &mut lucky));
        // above threshold: no restart regardless of the coin
        let mut lucky = stream_with_first_uniform_below(p.p01);
        assert!(!control_step(&stopped, &summary(6.5, 0.0), &p, &mut lucky));

        let mut unlucky = (0..).map(RngStream::new).find(|s| s.clone().uniform() >= 0.5).unwrap();
        assert!(!control_step(&stopped, &summary(0.0, 0.0), &p, &mut unlucky));
    }

    #[test]
    fn sentinel_threshold_is_a_value() {
        let p = SimParams { t_grm: SENTINEL_THRESHOLD, t_loom: SENTINEL_THRESHOLD, ..SimParams::default() };
        let walking = AgentState::new(0, PlanarVector::ZERO, 0.0, 20.0);
        let mut rng = RngStream::new(0);
        assert!(control_step(&walking, &summary(31.9, 31.9), &p, &mut rng));
        assert!(!control_step(&walking, &summary(32.5, 0.0), &p, &mut rng));
    }

    #[test]
    fn reorientation_spread() {
        let p = SimParams::default();
        let a = AgentState::new(0, PlanarVector::ZERO, 1.0, 20.0);
        let (h, s) = reorient_on_stop(&a, &mut RngStream::new(5), &p);
        assert_eq!(h, 1.0);
        assert_relative_eq!(s, 30f64.to_radians());

        let mut sigma = s;
        for _ in 0..10 {
            sigma = decay_sigma(sigma, &p);
        }
        assert_relative_eq!(sigma, 30f64.to_radians() * 0.992f64.powi(10), max_relative = 1e-12);

        // second stop ten steps after the first
        let b = AgentState { sigma, ..a };
        let (_, s2) = reorient_on_stop(&b, &mut RngStream::new(5), &p);
        let expected = 30f64.to_radians() * (1.0 + 0.992f64.powi(11));
        assert_relative_eq!(s2, expected, max_relative = 1e-12);
    }

    #[test]
    fn sigma_bounded_under_repeated_stops() {
        let p = SimParams::default();
        let bound = p.delta_sigma / (1.0 - p.lambda_sigma);
        let mut a = AgentState::new(0, PlanarVector::ZERO, 0.0, 10.0);
        let mut rng = RngStream::new(9);
        for _ in 0..5000 {
            let (h, s) = reorient_on_stop(&a, &mut rng, &p);
            a.heading = h;
            a.sigma = s;
            assert!(a.sigma >= 0.0 && a.sigma <= bound + 1e-9);
        }
    }

    #[test]
    fn advance_examples() {
        let p = SimParams::default();
        let mut a = AgentState::new(0, PlanarVector::new(10.0, 10.0), 0.0, 20.0);
        assert_relative_eq!((advance(&a, &p) - a.pos).norm(), 0.1, max_relative = 1e-12);
        a.moving = false;
        assert_eq!(advance(&a, &p), a.pos);
        let edge = AgentState::new(0, PlanarVector::new(49.95, 3.0), 0.0, 20.0);
        let next = advance(&edge, &p);
        assert_relative_eq!(next.x, 0.05, epsilon = 1e-9);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::for_agent(42, 3);
        let mut b = RngStream::for_agent(42, 3);
        let mut c = RngStream::for_agent(42, 4);
        let xs: Vec<f64> = (0..8).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..8).map(|_| b.uniform()).collect();
        let zs: Vec<f64> = (0..8).map(|_| c.uniform()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }
}
