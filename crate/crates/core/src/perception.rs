//! Two-eyed retinal model.
//!
//! Every agent carries a fixed 14-point outline. An observer projects the
//! outline points of all other agents onto each of its two eyes, keeps the
//! points inside each eye's visual field, and reduces the result to a GRM
//! magnitude and a looming strength, each with the agents that caused it.

use std::collections::BTreeSet;

use crate::dynamics::{AgentId, AgentState, SimParams};
use crate::geometry::{angular_velocity, azimuth, min_image_delta, AngularVelocity, Azimuth, PlanarVector};

/// Relative tolerance used when collecting every agent that attains a maximum.
pub const CAUSE_TOLERANCE: f64 = 1e-12;

/// Outline of a 2 mm agent in body coordinates `(right, forward)`, mm.
/// Twelve hull vertices in drawing order followed by two interior points.
pub const BODY_OUTLINE: [(f64, f64); 14] = [
    (0.0, 1.0),
    (0.25, 0.85),
    (0.4, 0.5),
    (0.45, 0.0),
    (0.4, -0.5),
    (0.25, -0.85),
    (0.0, -1.0),
    (-0.25, -0.85),
    (-0.4, -0.5),
    (-0.45, 0.0),
    (-0.4, 0.5),
    (-0.25, 0.85),
    (0.0, 0.6),
    (0.0, 0.0),
];

/// Number of outline entries forming the drawable hull.
pub const HULL_LEN: usize = 12;

/// Forward position of the eyes as a fraction of body length.
pub const EYE_FORWARD_FRACTION: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EyeSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeConfig {
    pub side: EyeSide,
    /// Body-frame offset `(right, forward)` of the eye center, mm.
    pub offset: PlanarVector,
    pub field_lo: f64,
    pub field_hi: f64,
}

impl EyeConfig {
    #[inline]
    pub fn sees(&self, phi: Azimuth) -> bool {
        let p = phi.rad();
        p >= self.field_lo && p <= self.field_hi
    }

    /// Contralateral motion for this eye: counter-clockwise on the right eye,
    /// clockwise on the left eye.
    #[inline]
    pub fn is_contralateral(&self, phi_dot: AngularVelocity) -> bool {
        match self.side {
            EyeSide::Right => phi_dot.0 > 0.0,
            EyeSide::Left => phi_dot.0 < 0.0,
        }
    }
}

/// Visual fields of the right and left eye: `[−θᵢ, +CVA]` and `[−CVA, +θᵢ]`.
pub fn eye_fields(cva: f64, theta_i: f64, d_eye: f64, body_length: f64) -> (EyeConfig, EyeConfig) {
    let forward = EYE_FORWARD_FRACTION * body_length;
    let right = EyeConfig {
        side: EyeSide::Right,
        offset: PlanarVector::new(0.5 * d_eye, forward),
        field_lo: -theta_i,
        field_hi: cva,
    };
    let left = EyeConfig {
        side: EyeSide::Left,
        offset: PlanarVector::new(-0.5 * d_eye, forward),
        field_lo: -cva,
        field_hi: theta_i,
    };
    (right, left)
}

/// Maps a body-frame `(right, forward)` offset into the world for an agent
/// heading along the world angle `heading`.
#[inline]
pub fn body_to_world(offset: PlanarVector, heading: f64) -> PlanarVector {
    let (s, c) = heading.sin_cos();
    let fwd = PlanarVector::new(c, s);
    let right = PlanarVector::new(s, -c);
    right * offset.x + fwd * offset.y
}

/// Body-frame outline scaled to `body_length`.
pub fn outline(body_length: f64) -> [PlanarVector; 14] {
    let k = body_length / 2.0;
    BODY_OUTLINE.map(|(x, y)| PlanarVector::new(x * k, y * k))
}

/// World positions (unwrapped) of an agent's outline points.
pub fn outline_world(agent: &AgentState, body_length: f64) -> [PlanarVector; 14] {
    outline(body_length).map(|o| agent.pos + body_to_world(o, agent.heading))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPercept {
    pub source: AgentId,
    pub point_index: u8,
    pub eye: EyeSide,
    /// Azimuth about the eye center.
    pub phi: Azimuth,
    pub phi_dot: AngularVelocity,
    /// Azimuth of the same point about the observer's body center; its sign
    /// decides the hemifield.
    pub body_phi: Azimuth,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Projection {
    pub percepts: Vec<PointPercept>,
    /// Points skipped because they coincided with an eye center.
    pub skipped: usize,
}

/// Precomputed per-trial projection geometry.
#[derive(Debug, Clone)]
pub struct Retina {
    pub right: EyeConfig,
    pub left: EyeConfig,
    outline: [PlanarVector; 14],
    arena: f64,
}

impl Retina {
    pub fn new(params: &SimParams) -> Self {
        let (right, left) = eye_fields(params.cva, params.theta_i, params.d_eye, params.body_length);
        Self {
            right,
            left,
            outline: outline(params.body_length),
            arena: params.arena,
        }
    }

    /// Appends to `out` every visible point of `others` and returns the number
    /// of points skipped for coinciding with an eye center.
    pub fn project_into(&self, observer: &AgentState, others: &[AgentState], out: &mut Vec<PointPercept>) -> usize {
        let h = observer.heading;
        let eyes = [
            (self.right, body_to_world(self.right.offset, h)),
            (self.left, body_to_world(self.left.offset, h)),
        ];
        let obs_vel = observer.velocity();
        let mut skipped = 0;
        for other in others {
            if other.id == observer.id {
                continue;
            }
            let rel_vel = other.velocity() - obs_vel;
            let center = min_image_delta(observer.pos, other.pos, self.arena);
            for (j, o) in self.outline.iter().enumerate() {
                let rel_body = center + body_to_world(*o, other.heading);
                let body_phi = if rel_body == PlanarVector::ZERO {
                    Azimuth::AHEAD
                } else {
                    azimuth(rel_body, h)
                };
                for (eye, eye_pos) in &eyes {
                    let rel = rel_body - *eye_pos;
                    if rel.norm_sq() == 0.0 {
                        skipped += 1;
                        continue;
                    }
                    let phi = azimuth(rel, h);
                    if !eye.sees(phi) {
                        continue;
                    }
                    out.push(PointPercept {
                        source: other.id,
                        point_index: j as u8,
                        eye: eye.side,
                        phi,
                        phi_dot: angular_velocity(rel, rel_vel),
                        body_phi,
                    });
                }
            }
        }
        skipped
    }
}

/// Projects the outline points of `others` onto both eyes of `observer`.
pub fn project_points(observer: &AgentState, others: &[AgentState], params: &SimParams) -> Projection {
    let retina = Retina::new(params);
    let mut percepts = Vec::with_capacity(others.len() * 28);
    let skipped = retina.project_into(observer, others, &mut percepts);
    Projection { percepts, skipped }
}

fn causes_at<'a>(max: f64, candidates: impl Iterator<Item = (AgentId, f64)> + 'a) -> BTreeSet<AgentId> {
    if max <= 0.0 {
        return BTreeSet::new();
    }
    let floor = max * (1.0 - CAUSE_TOLERANCE);
    candidates.filter(|&(_, m)| m >= floor).map(|(id, _)| id).collect()
}

/// Largest GRM magnitude and every agent attaining it.
pub fn detect_grm(percepts: &[PointPercept], right: &EyeConfig, left: &EyeConfig) -> (f64, BTreeSet<AgentId>) {
    let is_event = |p: &PointPercept| {
        let eye = match p.eye {
            EyeSide::Right => right,
            EyeSide::Left => left,
        };
        eye.is_contralateral(p.phi_dot)
    };
    let max = percepts
        .iter()
        .filter(|p| is_event(p))
        .map(|p| p.phi_dot.magnitude())
        .fold(0.0, f64::max);
    let causes = causes_at(
        max,
        percepts.iter().filter(|p| is_event(p)).map(|p| (p.source, p.phi_dot.magnitude())),
    );
    (max, causes)
}

/// Looming strength `min(‖φ̇_L‖, ‖φ̇_R‖)` with the agents supplying both sides.
///
/// `‖φ̇_L‖` is the strongest counter-clockwise motion in the left hemifield and
/// `‖φ̇_R‖` the strongest clockwise motion in the right hemifield, over both
/// eyes. Hemifields use the body-center azimuth; the midline belongs to
/// neither.
pub fn looming_strength(percepts: &[PointPercept]) -> (f64, BTreeSet<AgentId>) {
    let left = || {
        percepts
            .iter()
            .filter(|p| p.body_phi.rad() > 0.0 && p.phi_dot.0 > 0.0)
            .map(|p| (p.source, p.phi_dot.0))
    };
    let right = || {
        percepts
            .iter()
            .filter(|p| p.body_phi.rad() < 0.0 && p.phi_dot.0 < 0.0)
            .map(|p| (p.source, -p.phi_dot.0))
    };
    let max_l = left().map(|(_, m)| m).fold(0.0, f64::max);
    let max_r = right().map(|(_, m)| m).fold(0.0, f64::max);
    let omega = max_l.min(max_r);
    if omega <= 0.0 {
        return (0.0, BTreeSet::new());
    }
    let mut causes = causes_at(max_l, left());
    causes.extend(causes_at(max_r, right()));
    (omega, causes)
}

/// Per-observer reduction of one time step's percepts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerceptSummary {
    pub max_grm: f64,
    pub grm_causes: BTreeSet<AgentId>,
    pub omega_loom: f64,
    pub loom_causes: BTreeSet<AgentId>,
}

impl PerceptSummary {
    pub fn from_percepts(percepts: &[PointPercept], retina: &Retina) -> Self {
        let (max_grm, grm_causes) = detect_grm(percepts, &retina.right, &retina.left);
        let (omega_loom, loom_causes) = looming_strength(percepts);
        Self {
            max_grm,
            grm_causes,
            omega_loom,
            loom_causes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{is_grm, theory_phi_dot, IntersectionScenario};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const NORTH: f64 = PI / 2.0;

    fn params() -> SimParams {
        SimParams::default()
    }

    fn percept(source: AgentId, eye: EyeSide, phi: f64, phi_dot: f64) -> PointPercept {
        PointPercept {
            source,
            point_index: 0,
            eye,
            phi: Azimuth::new(phi),
            phi_dot: AngularVelocity(phi_dot),
            body_phi: Azimuth::new(phi),
        }
    }

    fn default_eyes() -> (EyeConfig, EyeConfig) {
        eye_fields(30f64.to_radians(), 120f64.to_radians(), 0.55, 2.0)
    }

    #[test]
    fn outline_shape() {
        let pts = outline(2.0);
        let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
        let length = ys.iter().cloned().fold(f64::MIN, f64::max) - ys.iter().cloned().fold(f64::MAX, f64::min);
        assert_relative_eq!(length, 2.0);
        let width = pts.iter().map(|p| p.x.abs()).fold(0.0, f64::max) * 2.0;
        assert_relative_eq!(width, 0.9);
        assert_eq!(pts.len(), 14);
    }

    #[test]
    fn eye_field_examples() {
        let deg = |d: f64| d.to_radians();
        let (r, l) = eye_fields(0.0, deg(120.0), 0.55, 2.0);
        assert_eq!((r.field_lo, r.field_hi), (-deg(120.0), 0.0));
        assert_eq!((l.field_lo, l.field_hi), (0.0, deg(120.0)));
        let (r, _) = eye_fields(deg(30.0), deg(120.0), 0.55, 2.0);
        assert_eq!((r.field_lo, r.field_hi), (-deg(120.0), deg(30.0)));
        let (r, l) = eye_fields(deg(90.0), deg(120.0), 0.55, 2.0);
        assert_eq!((l.field_lo, r.field_hi), (-deg(90.0), deg(90.0)));
        assert_relative_eq!((r.offset - l.offset).norm(), 0.55);
    }

    #[test]
    fn body_frame_mapping() {
        // heading north: right is +x
        let w = body_to_world(PlanarVector::new(1.0, 2.0), NORTH);
        assert_relative_eq!(w.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(w.y, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn stationary_target_ahead() {
        let p = params();
        let observer = AgentState::new(0, PlanarVector::new(25.0, 20.0), NORTH, 20.0);
        let mut target = AgentState::new(1, PlanarVector::new(25.0, 26.0), 0.0, 20.0);
        target.moving = false;
        let proj = project_points(&observer, &[target], &p);
        assert_eq!(proj.skipped, 0);
        assert!(proj.percepts.iter().any(|q| q.eye == EyeSide::Left));
        assert!(proj.percepts.iter().any(|q| q.eye == EyeSide::Right));
        for q in &proj.percepts {
            // outward from each eye's own axis
            assert!(q.phi_dot.0 * q.phi.rad() > 0.0);
        }
        let retina = Retina::new(&p);
        let (max, causes) = detect_grm(&proj.percepts, &retina.right, &retina.left);
        assert!(max > 0.0);
        assert_eq!(causes, BTreeSet::from([1]));
        for q in proj.percepts.iter().filter(|q| match q.eye {
            EyeSide::Right => q.phi_dot.0 > 0.0,
            EyeSide::Left => q.phi_dot.0 < 0.0,
        }) {
            assert!(q.phi.rad().abs() <= p.cva);
        }
    }

    #[test]
    fn target_in_blind_spot() {
        let p = params();
        let observer = AgentState::new(0, PlanarVector::new(25.0, 25.0), NORTH, 20.0);
        let target = AgentState::new(1, PlanarVector::new(25.0, 15.0), NORTH, 20.0);
        assert!(project_points(&observer, &[target], &p).percepts.is_empty());
    }

    #[test]
    fn coincident_points_are_skipped() {
        let p = SimParams { d_eye: 0.0, ..params() };
        let observer = AgentState::new(0, PlanarVector::new(0.0, 0.0), 0.0, 20.0);
        // target's center lands exactly on the observer's merged eyes
        let target = AgentState::new(1, PlanarVector::new(0.7, 0.0), 0.0, 10.0);
        let proj = project_points(&observer, &[target], &p);
        assert_eq!(proj.skipped, 2);
    }

    #[test]
    fn crossing_sign_matches_theory() {
        // observer (f1) heading north, arrives second; target approaches from
        // the right heading west
        let p = SimParams { d_eye: 0.0, ..params() };
        let s = IntersectionScenario { v1: 15.0, v2: 20.0, psi: PI / 2.0, d: -6.0, epsilon: -8.0 };
        let origin = PlanarVector::new(25.0, 25.0);
        let observer = AgentState::new(0, origin + PlanarVector::new(0.0, s.d + s.epsilon), NORTH, s.v1);
        let target_pos = origin + PlanarVector::new(-s.psi.sin(), s.psi.cos()) * (s.epsilon * s.v2 / s.v1);
        let target = AgentState::new(1, target_pos, NORTH + s.psi, s.v2);
        let proj = project_points(&observer, &[target], &p);
        let expected = theory_phi_dot(&s).unwrap().0;
        assert!(expected > 0.0);
        assert!(!proj.percepts.is_empty());
        for q in &proj.percepts {
            assert_eq!(q.phi_dot.0.signum(), expected.signum());
        }
    }

    #[test]
    fn grm_examples() {
        let (r, l) = default_eyes();
        let ps = [percept(4, EyeSide::Right, -0.2, 7.0), percept(4, EyeSide::Left, 0.4, 3.0)];
        assert_eq!(detect_grm(&ps, &r, &l), (7.0, BTreeSet::from([4])));

        let ps = [percept(1, EyeSide::Right, -0.2, -7.0), percept(2, EyeSide::Left, 0.4, 3.0)];
        assert_eq!(detect_grm(&ps, &r, &l), (0.0, BTreeSet::new()));

        let ps = [percept(1, EyeSide::Right, -0.2, 7.0), percept(2, EyeSide::Left, 0.4, -5.0)];
        assert_eq!(detect_grm(&ps, &r, &l), (7.0, BTreeSet::from([1])));

        let ps = [percept(1, EyeSide::Right, -0.2, 7.0), percept(2, EyeSide::Left, 0.4, -7.0)];
        assert_eq!(detect_grm(&ps, &r, &l), (7.0, BTreeSet::from([1, 2])));
    }

    #[test]
    fn looming_examples() {
        let ps = [percept(1, EyeSide::Left, 0.5, 3.0), percept(1, EyeSide::Right, -0.5, -5.0)];
        assert_eq!(looming_strength(&ps), (3.0, BTreeSet::from([1])));

        let ps = [percept(1, EyeSide::Left, 0.5, -3.0), percept(1, EyeSide::Right, -0.5, -5.0)];
        assert_eq!(looming_strength(&ps), (0.0, BTreeSet::new()));

        let ps = [percept(1, EyeSide::Left, 0.5, 3.0), percept(2, EyeSide::Right, -0.5, -5.0)];
        assert_eq!(looming_strength(&ps), (3.0, BTreeSet::from([1, 2])));

        // exactly ahead belongs to neither side
        let ps = [percept(1, EyeSide::Left, 0.0, 3.0), percept(2, EyeSide::Right, -0.5, -5.0)];
        assert_eq!(looming_strength(&ps).0, 0.0);
    }

    #[test]
    fn eye_azimuth_converges_to_head_azimuth() {
        let p = params();
        let observer = AgentState::new(0, PlanarVector::new(25.0, 25.0), 0.3, 20.0);
        let head = observer.pos + body_to_world(PlanarVector::new(0.0, EYE_FORWARD_FRACTION * p.body_length), observer.heading);
        let retina = Retina::new(&p);
        let mut checked = 0;
        for k in 0..36 {
            let dir = PlanarVector::from_angle(k as f64 * 10f64.to_radians());
            let target = AgentState::new(1, head + dir * 12.0 * p.d_eye, 1.0, 15.0);
            let points = outline_world(&target, p.body_length);
            for q in project_points(&observer, &[target], &p).percepts {
                let rel = points[q.point_index as usize] - head;
                if rel.norm() < 10.0 * p.d_eye {
                    continue;
                }
                let mid = azimuth(rel, observer.heading);
                assert!(crate::geometry::wrap_angle(q.phi.rad() - mid.rad()).abs() <= 0.06);
                assert!(retina.left.sees(q.phi) || retina.right.sees(q.phi));
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    fn agent_strategy(id: AgentId) -> impl Strategy<Value = AgentState> {
        (0.0..50.0f64, 0.0..50.0f64, 0.0..(2.0 * PI), 10.0..30.0f64, prop::bool::ANY).prop_map(
            move |(x, y, h, v, moving)| AgentState {
                moving,
                ..AgentState::new(id, PlanarVector::new(x, y), h, v)
            },
        )
    }

    proptest! {
        #[test]
        fn prop_grm_events_satisfy_definition(
            obs in agent_strategy(0), a in agent_strategy(1), b in agent_strategy(2),
            cva_deg in 0.0..90.0f64,
        ) {
            let p = SimParams { cva: cva_deg.to_radians(), ..params() };
            let retina = Retina::new(&p);
            let proj = project_points(&obs, &[a, b], &p);
            for q in &proj.percepts {
                let eye = if q.eye == EyeSide::Right { retina.right } else { retina.left };
                prop_assert!(eye.sees(q.phi));
                if eye.is_contralateral(q.phi_dot) {
                    prop_assert!(is_grm(q.phi, q.phi_dot, p.cva));
                }
            }
        }

        #[test]
        fn prop_reductions_permutation_invariant(
            obs in agent_strategy(0), a in agent_strategy(1), b in agent_strategy(2), c in agent_strategy(3),
            seed in any::<u64>(),
        ) {
            let p = params();
            let retina = Retina::new(&p);
            let mut percepts = project_points(&obs, &[a, b, c], &p).percepts;
            let before = PerceptSummary::from_percepts(&percepts, &retina);
            // deterministic shuffle
            let mut s = seed;
            for i in (1..percepts.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                percepts.swap(i, (s >> 33) as usize % (i + 1));
            }
            let after = PerceptSummary::from_percepts(&percepts, &retina);
            prop_assert_eq!(before, after);
        }

        #[test]
        fn prop_single_hemifield_no_looming(obs in agent_strategy(0), a in agent_strategy(1)) {
            let p = params();
            let percepts: Vec<_> = project_points(&obs, &[a], &p)
                .percepts
                .into_iter()
                .filter(|q| q.body_phi.rad() > 0.0)
                .collect();
            prop_assert_eq!(looming_strength(&percepts).0, 0.0);
        }

        #[test]
        fn prop_summary_invariants(obs in agent_strategy(0), a in agent_strategy(1), b in agent_strategy(2)) {
            let p = params();
            let retina = Retina::new(&p);
            let s = PerceptSummary::from_percepts(&project_points(&obs, &[a, b], &p).percepts, &retina);
            prop_assert!(s.max_grm >= 0.0 && s.omega_loom >= 0.0);
            prop_assert_eq!(s.grm_causes.is_empty(), s.max_grm == 0.0);
            prop_assert_eq!(s.loom_causes.is_empty(), s.omega_loom == 0.0);
        }
    }
}
