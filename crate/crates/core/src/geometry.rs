//! Planar projective geometry: azimuths, angular velocities, torus arithmetic
//! and the closed-form expressions for straight-line encounters.
//!
//! Conventions used throughout the crate:
//! - world angles are measured counter-clockwise from the +x axis;
//! - an azimuth of 0 is straight ahead of the observer, positive azimuths lie
//!   on the observer's left, and azimuths are kept in `[-π, π)`;
//! - positive angular velocity is counter-clockwise.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate configuration: observer and target coincide")]
    Coincident,
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
}

/// A position (mm) or velocity (mm/s) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarVector {
    pub x: f64,
    pub y: f64,
}

impl PlanarVector {
    pub const ZERO: PlanarVector = PlanarVector { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along the world angle `angle`.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product `self × other`.
    #[inline]
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Clockwise quarter turn: `(u, v) ↦ (v, -u)`.
    #[inline]
    pub fn perp_cw(self) -> Self {
        Self { x: self.y, y: -self.x }
    }

    /// Rotate counter-clockwise by `angle`.
    #[inline]
    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    /// World angle of this vector, in `(-π, π]`.
    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for PlanarVector {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for PlanarVector {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for PlanarVector {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for PlanarVector {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<f64> for PlanarVector {
    type Output = Self;
    #[inline]
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl Mul<PlanarVector> for f64 {
    type Output = PlanarVector;
    #[inline]
    fn mul(self, v: PlanarVector) -> PlanarVector {
        v * self
    }
}

impl fmt::Display for PlanarVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Wrap an angle into `[-π, π)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a - TAU * ((a + PI) / TAU).floor();
    if r >= PI {
        r -= TAU;
    } else if r < -PI {
        r += TAU;
    }
    r
}

/// Azimuth of a target on the observer's retina, in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Azimuth(f64);

impl Azimuth {
    pub const AHEAD: Azimuth = Azimuth(0.0);

    /// Wraps any finite angle into the canonical range.
    #[inline]
    pub fn new(rad: f64) -> Self {
        Azimuth(wrap_angle(rad))
    }

    #[inline]
    pub fn rad(self) -> f64 {
        self.0
    }

    pub fn deg(self) -> f64 {
        self.0.to_degrees()
    }
}

/// Rate of change of an azimuth (rad/s), positive counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct AngularVelocity(pub f64);

impl AngularVelocity {
    #[inline]
    pub fn rad_per_s(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn magnitude(self) -> f64 {
        self.0.abs()
    }
}

#[inline]
fn wrap_coord(c: f64, r: f64) -> f64 {
    let w = c.rem_euclid(r);
    // rem_euclid can round up to exactly r for tiny negative inputs
    if w >= r {
        0.0
    } else {
        w
    }
}

/// Wrap a position onto the `[0, r)²` torus.
#[inline]
pub fn wrap_torus(p: PlanarVector, r: f64) -> PlanarVector {
    debug_assert!(r > 0.0);
    PlanarVector::new(wrap_coord(p.x, r), wrap_coord(p.y, r))
}

#[inline]
fn min_image_coord(d: f64, r: f64) -> f64 {
    let half = 0.5 * r;
    let mut m = d - r * (d / r + 0.5).floor();
    if m >= half {
        m -= r;
    } else if m < -half {
        m += r;
    }
    m
}

/// Shortest displacement from `a` to `b` on the torus; components in
/// `[-r/2, r/2)`, ties resolve to `-r/2`.
#[inline]
pub fn min_image_delta(a: PlanarVector, b: PlanarVector, r: f64) -> PlanarVector {
    debug_assert!(r > 0.0);
    PlanarVector::new(min_image_coord(b.x - a.x, r), min_image_coord(b.y - a.y, r))
}

/// Azimuth of `rel_pos` seen by an observer whose heading is the world angle
/// `heading`.
///
/// `rel_pos` must be non-zero; a zero vector yields azimuth 0.
#[inline]
pub fn azimuth(rel_pos: PlanarVector, heading: f64) -> Azimuth {
    debug_assert!(rel_pos != PlanarVector::ZERO, "azimuth of zero vector");
    Azimuth::new(rel_pos.angle() - heading)
}

/// Angular velocity of a point at relative position `rel_pos` moving with
/// relative velocity `rel_vel`: `⟨v⊥, x⟩ / ‖x‖²` with `v⊥` the clockwise
/// quarter turn of the velocity.
///
/// `rel_pos` must be non-zero.
#[inline]
pub fn angular_velocity(rel_pos: PlanarVector, rel_vel: PlanarVector) -> AngularVelocity {
    let d2 = rel_pos.norm_sq();
    debug_assert!(d2 > 0.0, "angular velocity at zero distance");
    AngularVelocity(rel_vel.perp_cw().dot(rel_pos) / d2)
}

/// Motion satisfying `φ̇·φ ≤ 0`.
#[inline]
pub fn is_regressive(phi: Azimuth, phi_dot: AngularVelocity) -> bool {
    phi_dot.0 * phi.0 <= 0.0
}

/// Generalized regressive motion for a single projection center whose nasal
/// boundaries are extended past the midline by `cva`.
#[inline]
pub fn is_grm(phi: Azimuth, phi_dot: AngularVelocity, cva: f64) -> bool {
    let (p, w) = (phi.0, phi_dot.0);
    (w > 0.0 && p >= -PI && p <= cva) || (w < 0.0 && p >= -cva && p <= PI)
}

/// Two agents on straight, non-parallel trajectories crossing at the origin.
///
/// The observer (`f1`) walks along +y at speed `v1`. The target (`f2`) walks
/// with velocity `v2·(−sin ψ, cos ψ)`. `d` is the observer's y-coordinate when
/// the target is at the crossing; `epsilon` is the distance the observer has
/// walked since that instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionScenario {
    pub v1: f64,
    pub v2: f64,
    pub psi: f64,
    pub d: f64,
    pub epsilon: f64,
}

impl IntersectionScenario {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.v1 > 0.0 && self.v2 > 0.0) {
            return Err(GeometryError::InvalidScenario("speeds must be positive"));
        }
        if self.psi.sin() == 0.0 {
            return Err(GeometryError::InvalidScenario("trajectories are parallel"));
        }
        if !(self.d.is_finite() && self.epsilon.is_finite()) {
            return Err(GeometryError::InvalidScenario("offsets must be finite"));
        }
        Ok(())
    }

    /// Relative position of f2 in f1's frame.
    pub fn relative_position(&self) -> PlanarVector {
        let k = self.epsilon * self.v2 / self.v1;
        let (s, c) = self.psi.sin_cos();
        PlanarVector::new(-k * s, k * c - (self.d + self.epsilon))
    }

    /// Relative velocity of f2 in f1's frame.
    pub fn relative_velocity(&self) -> PlanarVector {
        let (s, c) = self.psi.sin_cos();
        PlanarVector::new(-self.v2 * s, self.v2 * c - self.v1)
    }

    /// The same encounter described from f2's point of view: roles swap, the
    /// approach angle flips sign and the offsets are re-expressed as distances
    /// walked by f2.
    pub fn observer_swapped(&self) -> IntersectionScenario {
        let ratio = self.v2 / self.v1;
        IntersectionScenario {
            v1: self.v2,
            v2: self.v1,
            psi: -self.psi,
            d: -self.d * ratio,
            epsilon: (self.epsilon + self.d) * ratio,
        }
    }

    /// Squared distance between the agents.
    pub fn distance_sq(&self) -> f64 {
        let k = self.v2 * self.epsilon / self.v1;
        let de = self.d + self.epsilon;
        k * k + de * de - 2.0 * k * de * self.psi.cos()
    }
}

/// Closed-form azimuth of f2 on f1's projection center.
pub fn theory_phi(s: &IntersectionScenario) -> Result<Azimuth, GeometryError> {
    s.validate()?;
    let k = s.epsilon * s.v2 / s.v1;
    let (sin_psi, cos_psi) = s.psi.sin_cos();
    let numer = k * cos_psi - (s.d + s.epsilon);
    let denom = -k * sin_psi;
    if numer == 0.0 && denom == 0.0 {
        return Err(GeometryError::Coincident);
    }
    // arctan(numer / denom) − π/2, extended to all four quadrants
    Ok(Azimuth::new(numer.atan2(denom) - PI / 2.0))
}

/// Closed-form angular velocity `−d·v2·sin ψ / D²` of f2 on f1.
pub fn theory_phi_dot(s: &IntersectionScenario) -> Result<AngularVelocity, GeometryError> {
    s.validate()?;
    let d2 = s.distance_sq();
    if d2 <= 0.0 {
        return Err(GeometryError::Coincident);
    }
    Ok(AngularVelocity(-s.d * s.v2 * s.psi.sin() / d2))
}

/// An agent at the origin approaching a straight wall at angle `alpha` from
/// the wall normal, velocity `v·(sin α, cos α)`; `point` is a wall point
/// relative to the agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallScenario {
    pub alpha: f64,
    pub v: f64,
    pub point: PlanarVector,
}

impl WallScenario {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.alpha > 0.0 && self.alpha < PI / 2.0) {
            return Err(GeometryError::InvalidScenario("alpha must lie in (0, π/2)"));
        }
        if !(self.v > 0.0) {
            return Err(GeometryError::InvalidScenario("speed must be positive"));
        }
        if self.point == PlanarVector::ZERO {
            return Err(GeometryError::Coincident);
        }
        Ok(())
    }

    pub fn velocity(&self) -> PlanarVector {
        let (s, c) = self.alpha.sin_cos();
        PlanarVector::new(self.v * s, self.v * c)
    }

    /// World heading angle of the approaching agent.
    pub fn heading(&self) -> f64 {
        PI / 2.0 - self.alpha
    }
}

/// Angular velocity of a stationary wall point on the approaching agent's eye.
pub fn wall_angular_velocity(s: &WallScenario) -> AngularVelocity {
    let PlanarVector { x, y } = s.point;
    let (sin_a, cos_a) = s.alpha.sin_cos();
    AngularVelocity(-s.v * (x * cos_a - y * sin_a) / (x * x + y * y))
}

/// Outcome of shrinking the wall distance until a point of the contralateral
/// cone moves faster than a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSearchHit {
    pub wall_distance: f64,
    pub phi: Azimuth,
    pub phi_dot: AngularVelocity,
    pub halvings: u32,
}

/// Searches for a wall point inside the cone between the heading and the
/// contralateral boundary whose angular velocity exceeds `threshold`.
///
/// The probed point sits at azimuth `min(cva, alpha)/2` on the left of the
/// heading; the wall distance starts at `start_distance` and is halved until
/// the threshold is crossed. Returns `None` if `max_halvings` is exhausted.
pub fn wall_cone_search(
    alpha: f64,
    v: f64,
    cva: f64,
    threshold: f64,
    start_distance: f64,
    max_halvings: u32,
) -> Result<Option<WallSearchHit>, GeometryError> {
    if !(cva > 0.0) {
        return Err(GeometryError::InvalidScenario("cva must be positive"));
    }
    let offset = 0.5 * cva.min(alpha);
    // angle of the probed point measured clockwise from the wall normal
    let beta = alpha - offset;
    let mut y = start_distance;
    for halvings in 0..=max_halvings {
        let scenario = WallScenario {
            alpha,
            v,
            point: PlanarVector::new(y * beta.tan(), y),
        };
        scenario.validate()?;
        let phi = azimuth(scenario.point, scenario.heading());
        let phi_dot = wall_angular_velocity(&scenario);
        if phi_dot.magnitude() > threshold && is_grm(phi, phi_dot, cva) {
            return Ok(Some(WallSearchHit {
                wall_distance: y,
                phi,
                phi_dot,
                halvings,
            }));
        }
        y *= 0.5;
    }
    Ok(None)
}
