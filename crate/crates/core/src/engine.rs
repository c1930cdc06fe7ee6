//! Synchronous world stepping, collision tracking and full-trial execution.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{classify_stop, count_events, counts_to_metrics, FnWeight, TrialResult};
use crate::dynamics::{
    advance, control_step, decay_sigma, init_agents, reorient_on_stop, AgentId, AgentState, InitError, RngStream,
    SimParams,
};
use crate::geometry::{min_image_delta, PlanarVector};
use crate::perception::{PerceptSummary, PointPercept, Retina};

pub type Pair = (AgentId, AgentId);

#[inline]
pub fn pair(a: AgentId, b: AgentId) -> Pair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time_step: usize,
    pub agents: Vec<AgentState>,
    pub params: SimParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StopChannel {
    Grm,
    Loom,
    Both,
}

impl StopChannel {
    pub fn as_str(self) -> &'static str {
        match self {
            StopChannel::Grm => "grm",
            StopChannel::Loom => "loom",
            StopChannel::Both => "both",
        }
    }
}

/// Position and velocity of one agent at a stop instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub pos: PlanarVector,
    pub vel: PlanarVector,
}

/// A walk-to-stop transition. `frozen` holds every agent's kinematics at the
/// stop instant, indexed by agent id; the stopping agent keeps its pre-stop
/// velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct StopRecord {
    pub t: usize,
    pub agent: AgentId,
    pub cause_agents: BTreeSet<AgentId>,
    pub channel: StopChannel,
    pub frozen: Vec<Kinematics>,
}

impl StopRecord {
    pub fn frozen_velocity(&self, id: AgentId) -> PlanarVector {
        self.frozen[id].vel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CollisionRecord {
    pub t: usize,
    pub pair: Pair,
}

/// A pair's passage through perception range: entered below half the arena
/// edge at `t_enter`, left it at `t_exit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct EncounterRecord {
    pub pair: Pair,
    pub t_enter: usize,
    pub t_exit: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepEvents {
    pub stops: Vec<StopRecord>,
    pub collisions: Vec<CollisionRecord>,
    pub encounters: Vec<EncounterRecord>,
}

/// Pairs whose center distance is below the collision distance.
pub fn detect_collisions(agents: &[AgentState], params: &SimParams) -> Vec<Pair> {
    let mut out = Vec::new();
    for (i, a) in agents.iter().enumerate() {
        for b in &agents[i + 1..] {
            if min_image_delta(a.pos, b.pos, params.arena).norm() < params.collision_distance {
                out.push(pair(a.id, b.id));
            }
        }
    }
    out
}

/// Emits one record per contact episode; a pair in contact is re-armed only
/// once it separates to at least the collision distance.
#[derive(Debug, Clone, Default)]
pub struct ContactTracker {
    in_contact: BTreeSet<Pair>,
}

impl ContactTracker {
    pub fn update(&mut self, t: usize, current: &[Pair]) -> Vec<CollisionRecord> {
        let now: BTreeSet<Pair> = current.iter().copied().collect();
        let fresh = now
            .difference(&self.in_contact)
            .map(|&p| CollisionRecord { t, pair: p })
            .collect();
        self.in_contact = now;
        fresh
    }

    pub fn in_contact(&self) -> &BTreeSet<Pair> {
        &self.in_contact
    }
}

#[derive(Debug, Clone, Default)]
struct EncounterTracker {
    open: BTreeMap<Pair, usize>,
}

impl EncounterTracker {
    fn update(&mut self, t: usize, agents: &[AgentState], params: &SimParams) -> Vec<EncounterRecord> {
        let range = 0.5 * params.arena;
        let mut closed = Vec::new();
        for (i, a) in agents.iter().enumerate() {
            for b in &agents[i + 1..] {
                let p = pair(a.id, b.id);
                let near = min_image_delta(a.pos, b.pos, params.arena).norm() < range;
                match (near, self.open.get(&p)) {
                    (true, None) => {
                        self.open.insert(p, t);
                    }
                    (false, Some(&t_enter)) => {
                        self.open.remove(&p);
                        closed.push(EncounterRecord { pair: p, t_enter, t_exit: t });
                    }
                    _ => {}
                }
            }
        }
        closed
    }
}

/// A running trial: world state plus every agent's private random stream.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: WorldState,
    rngs: Vec<RngStream>,
    retina: Retina,
    contacts: ContactTracker,
    encounters: EncounterTracker,
    scratch: Vec<PointPercept>,
}

impl Simulation {
    /// Random initial population derived from `seed`.
    pub fn new(params: SimParams, seed: u64) -> Result<Self, InitError> {
        let agents = init_agents(&params, &mut RngStream::new(seed))?;
        Self::from_agents(params, agents, seed)
    }

    /// Explicit initial population. Agent ids must equal their index.
    pub fn from_agents(params: SimParams, agents: Vec<AgentState>, seed: u64) -> Result<Self, InitError> {
        params.validate()?;
        if agents.iter().enumerate().any(|(i, a)| a.id != i) {
            return Err(InitError::InvalidParams("agent ids must equal their index".into()));
        }
        let rngs = agents.iter().map(|a| RngStream::for_agent(seed, a.id)).collect();
        let retina = Retina::new(&params);
        let mut encounters = EncounterTracker::default();
        encounters.update(0, &agents, &params);
        Ok(Self {
            world: WorldState {
                time_step: 0,
                agents,
                params,
            },
            rngs,
            retina,
            contacts: ContactTracker::default(),
            encounters,
            scratch: Vec::new(),
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn contacts(&self) -> &BTreeSet<Pair> {
        self.contacts.in_contact()
    }

    /// Percept summary of agent `id` against the current snapshot.
    pub fn perceive(&mut self, id: AgentId) -> PerceptSummary {
        self.scratch.clear();
        let agents = &self.world.agents;
        self.retina.project_into(&agents[id], agents, &mut self.scratch);
        PerceptSummary::from_percepts(&self.scratch, &self.retina)
    }

    /// Advances the world by one synchronous step.
    pub fn step(&mut self) -> StepEvents {
        let t = self.world.time_step;
        let params = self.world.params.clone();
        let snapshot = self.world.agents.clone();
        let mut events = StepEvents::default();

        let mut next = snapshot.clone();
        for (i, agent) in snapshot.iter().enumerate() {
            let summary = self.perceive(i);
            let moving = control_step(agent, &summary, &params, &mut self.rngs[i]);
            let new = &mut next[i];
            if agent.moving && !moving {
                let grm = summary.max_grm > params.t_grm;
                let loom = summary.omega_loom > params.t_loom;
                let mut cause_agents = BTreeSet::new();
                if grm {
                    cause_agents.extend(&summary.grm_causes);
                }
                if loom {
                    cause_agents.extend(&summary.loom_causes);
                }
                let channel = match (grm, loom) {
                    (true, true) => StopChannel::Both,
                    (true, false) => StopChannel::Grm,
                    _ => StopChannel::Loom,
                };
                events.stops.push(StopRecord {
                    t,
                    agent: agent.id,
                    cause_agents,
                    channel,
                    frozen: snapshot
                        .iter()
                        .map(|a| Kinematics {
                            pos: a.pos,
                            vel: a.velocity(),
                        })
                        .collect(),
                });
                let (heading, sigma) = reorient_on_stop(agent, &mut self.rngs[i], &params);
                new.heading = heading;
                new.sigma = sigma;
            } else {
                new.sigma = decay_sigma(agent.sigma, &params);
            }
            new.was_moving = agent.moving;
            new.moving = moving;
        }
        for a in &mut next {
            a.pos = advance(a, &params);
        }

        self.world.agents = next;
        self.world.time_step = t + 1;
        let touching = detect_collisions(&self.world.agents, &params);
        events.collisions = self.contacts.update(t + 1, &touching);
        events.encounters = self.encounters.update(t + 1, &self.world.agents, &params);
        events
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOptions {
    pub log_trajectory: bool,
    pub fn_weight: FnWeight,
}

/// Raw event logs of a finished run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub stops: Vec<StopRecord>,
    pub collisions: Vec<CollisionRecord>,
    pub encounters: Vec<EncounterRecord>,
    /// Agent states at the start of every step, when logging is enabled.
    pub trajectory: Option<Vec<Vec<AgentState>>>,
}

impl Simulation {
    /// Runs `steps` steps and collects every event.
    pub fn run(&mut self, steps: usize, log_trajectory: bool) -> EventLog {
        let mut log = EventLog {
            trajectory: log_trajectory.then(|| Vec::with_capacity(steps)),
            ..EventLog::default()
        };
        for _ in 0..steps {
            if let Some(traj) = log.trajectory.as_mut() {
                traj.push(self.world.agents.clone());
            }
            let ev = self.step();
            log.stops.extend(ev.stops);
            log.collisions.extend(ev.collisions);
            log.encounters.extend(ev.encounters);
        }
        log
    }
}

/// Classifies and tallies a finished event log.
pub fn evaluate(params: &SimParams, seed: u64, log: EventLog, fn_weight: FnWeight) -> TrialResult {
    let classes = log
        .stops
        .iter()
        .map(|s| classify_stop(s, params.collision_distance, params.extrapolation_horizon, params.arena))
        .collect::<Vec<_>>();
    let counts = count_events(&log.stops, &classes, &log.collisions, &log.encounters, fn_weight);
    TrialResult {
        params: params.clone(),
        seed,
        counts,
        metrics: counts_to_metrics(&counts),
        classes,
        stops: log.stops,
        collisions: log.collisions,
        encounters: log.encounters,
        trajectory: log.trajectory,
    }
}

/// One full trial from a random initial population.
pub fn run_trial(params: &SimParams, seed: u64) -> Result<TrialResult, InitError> {
    run_trial_with(params, seed, TrialOptions::default())
}

pub fn run_trial_with(params: &SimParams, seed: u64, options: TrialOptions) -> Result<TrialResult, InitError> {
    let mut sim = Simulation::new(params.clone(), seed)?;
    let log = sim.run(params.horizon_steps, options.log_trajectory);
    Ok(evaluate(params, seed, log, options.fn_weight))
}

/// One full trial from an explicit initial population.
pub fn run_agents(
    params: &SimParams,
    agents: Vec<AgentState>,
    seed: u64,
    options: TrialOptions,
) -> Result<TrialResult, InitError> {
    let mut sim = Simulation::from_agents(params.clone(), agents, seed)?;
    let log = sim.run(params.horizon_steps, options.log_trajectory);
    Ok(evaluate(params, seed, log, options.fn_weight))
}
