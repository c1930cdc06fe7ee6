//! Randomized checks of the geometric guarantees behind GRM detection.
//!
//! Every check reads angular velocities through a [`Kernel`], so a broken
//! sign convention can be injected and must be caught.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::geometry::{
    angular_velocity, azimuth, is_grm, is_regressive, theory_phi, theory_phi_dot, wall_cone_search, AngularVelocity,
    Azimuth, IntersectionScenario, PlanarVector, WallScenario,
};

/// Thresholds for the wall suite, rad/s.
pub const WALL_THRESHOLDS: [f64; 10] = [0.1, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 32.0];
/// Contralateral angles for the wall suite, degrees.
pub const WALL_CVAS_DEG: [f64; 9] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0];
/// Finite-difference half step, s.
pub const FD_STEP: f64 = 1e-6;
pub const FD_RTOL: f64 = 1e-5;
/// Absolute floor of the finite-difference comparison, rad/s.
pub const FD_ATOL: f64 = 1e-9;
const MAX_COUNTEREXAMPLES: usize = 10;

/// The angular-velocity routine under test.
#[derive(Clone, Copy)]
pub struct Kernel {
    pub angular_velocity: fn(PlanarVector, PlanarVector) -> AngularVelocity,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel { angular_velocity }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub samples: usize,
    pub failures: usize,
    pub counterexamples: Vec<String>,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        CheckResult {
            name,
            samples: 0,
            failures: 0,
            counterexamples: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.samples += 1;
        if !ok {
            self.failures += 1;
            if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
                self.counterexamples.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub sample_count: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "theorem checks: seed {} samples {}", self.seed, self.sample_count);
        for c in &self.checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{verdict} {} samples={} failures={}", c.name, c.samples, c.failures);
            for ex in &c.counterexamples {
                let _ = writeln!(s, "    counterexample: {ex}");
            }
        }
        let _ = writeln!(s, "{}", if self.passed() { "all checks passed" } else { "counterexamples found" });
        s
    }
}

/// Central difference of the azimuth along a straight relative trajectory.
pub fn fd_angular_velocity(rel_pos: PlanarVector, rel_vel: PlanarVector) -> f64 {
    let ahead = azimuth(rel_pos + rel_vel * FD_STEP, 0.0).rad();
    let behind = azimuth(rel_pos - rel_vel * FD_STEP, 0.0).rad();
    let mut diff = ahead - behind;
    if diff > PI {
        diff -= 2.0 * PI;
    } else if diff < -PI {
        diff += 2.0 * PI;
    }
    diff / (2.0 * FD_STEP)
}

/// Analytic angular velocity against finite differences.
pub fn check_angular_velocity(kernel: Kernel, samples: usize, rng: &mut impl Rng) -> CheckResult {
    let mut out = CheckResult::new("angular_velocity_finite_difference");
    for _ in 0..samples {
        let r = rng.random_range(0.1..100.0);
        let theta = rng.random_range(-PI..PI);
        let x = PlanarVector::from_angle(theta) * r;
        let w = PlanarVector::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let analytic = (kernel.angular_velocity)(x, w).0;
        let numeric = fd_angular_velocity(x, w);
        let ok = (analytic - numeric).abs() <= FD_RTOL * numeric.abs() + FD_ATOL;
        out.record(ok, || format!("x={x:?} v={w:?} analytic={analytic:e} numeric={numeric:e}"));
    }
    out
}

fn random_crossing(rng: &mut impl Rng) -> IntersectionScenario {
    let mut epsilon = 0.0f64;
    while epsilon.abs() < 1e-6 {
        epsilon = rng.random_range(-30.0..30.0);
    }
    let psi_mag = rng.random_range(0.01..PI - 0.01);
    IntersectionScenario {
        v1: rng.random_range(1.0..40.0),
        v2: rng.random_range(1.0..40.0),
        psi: if rng.random_bool(0.5) { psi_mag } else { -psi_mag },
        d: -rng.random_range(0.01..30.0),
        epsilon,
    }
}

/// Sign of regressive motion in both agents' frames, through the closed form
/// and through the kernel applied to the constructed relative motion.
pub fn check_crossing_signs(kernel: Kernel, samples: usize, rng: &mut impl Rng) -> CheckResult {
    let mut out = CheckResult::new("crossing_regressive_sign");
    let mut drawn = 0;
    while drawn < samples {
        let s = random_crossing(rng);
        let swapped = s.observer_swapped();
        // the observer sitting exactly on the crossing has no defined side
        if swapped.epsilon.abs() < 1e-9 {
            continue;
        }
        drawn += 1;
        let verdicts = |sc: &IntersectionScenario| -> Result<(bool, bool), String> {
            let phi = theory_phi(sc).map_err(|e| e.to_string())?;
            let closed = theory_phi_dot(sc).map_err(|e| e.to_string())?;
            let via_kernel = (kernel.angular_velocity)(sc.relative_position(), sc.relative_velocity());
            Ok((is_regressive(phi, closed), is_regressive(phi, via_kernel)))
        };
        // the target crossed before the observer arrives: regressive exactly
        // while the observer has not reached the crossing
        let expect_first = s.epsilon < 0.0;
        let expect_second = swapped.epsilon > 0.0;
        let ok = match (verdicts(&s), verdicts(&swapped)) {
            (Ok(a), Ok(b)) => a == (expect_first, expect_first) && b == (expect_second, expect_second),
            _ => false,
        };
        out.record(ok, || {
            format!(
                "{s:?}: observer {:?} expected {expect_first}; swapped {:?} expected {expect_second}",
                verdicts(&s),
                verdicts(&swapped)
            )
        });
    }
    out
}

/// Regressive motion is GRM for every non-negative contralateral angle.
pub fn check_regressive_implies_grm(samples: usize, rng: &mut impl Rng) -> CheckResult {
    let mut out = CheckResult::new("regressive_implies_grm");
    for _ in 0..samples {
        let phi = Azimuth::new(rng.random_range(-PI..PI));
        let phi_dot = AngularVelocity(rng.random_range(-50.0..50.0));
        let cva = rng.random_range(0.0..PI);
        let ok = !is_regressive(phi, phi_dot) || is_grm(phi, phi_dot, cva);
        out.record(ok, || format!("phi={} phi_dot={} cva={cva}", phi.rad(), phi_dot.0));
    }
    out
}

/// A wall approached at any angle shows a GRM point above every threshold
/// while still at positive distance.
pub fn check_wall_cone(kernel: Kernel, families: usize, rng: &mut impl Rng) -> CheckResult {
    let mut out = CheckResult::new("wall_cone_threshold");
    for _ in 0..families {
        let alpha = rng.random_range(5f64.to_radians()..85f64.to_radians());
        let v = rng.random_range(10.0..=30.0);
        for &t in &WALL_THRESHOLDS {
            for &cva_deg in &WALL_CVAS_DEG {
                let cva = cva_deg.to_radians();
                let hit = wall_cone_search(alpha, v, cva, t, 100.0, 200);
                let ok = match hit {
                    Ok(Some(h)) => {
                        let beta = alpha - 0.5 * cva.min(alpha);
                        let point = PlanarVector::new(h.wall_distance * beta.tan(), h.wall_distance);
                        let s = WallScenario { alpha, v, point };
                        let via_kernel = (kernel.angular_velocity)(point, -s.velocity());
                        h.wall_distance > 0.0
                            && via_kernel.magnitude() > t
                            && is_grm(h.phi, via_kernel, cva)
                            && (via_kernel.0 - h.phi_dot.0).abs() <= 1e-9 * h.phi_dot.magnitude()
                    }
                    _ => false,
                };
                out.record(ok, || {
                    format!(
                        "alpha={:.3}° v={v:.3} T={t} CVA={cva_deg}°: {hit:?}",
                        alpha.to_degrees()
                    )
                });
            }
        }
    }
    out
}

/// Runs every suite: `sample_count` finite-difference and crossing samples,
/// `100 × sample_count` implication samples and `⌈sample_count / 10⌉` wall
/// families.
pub fn run_checks(kernel: Kernel, sample_count: usize, seed: u64) -> Result<VerifyReport, HarnessError> {
    if sample_count == 0 {
        return Err(HarnessError::Invalid("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        check_angular_velocity(kernel, sample_count, &mut rng),
        check_crossing_signs(kernel, sample_count, &mut rng),
        check_regressive_implies_grm(100 * sample_count, &mut rng),
        check_wall_cone(kernel, sample_count.div_ceil(10), &mut rng),
    ];
    Ok(VerifyReport {
        seed,
        sample_count,
        checks,
    })
}

/// Runs the suites with the library kernel and writes the report.
pub fn verify_theorems(sample_count: usize, seed: u64, report_path: &Path) -> Result<VerifyReport, HarnessError> {
    let report = run_checks(Kernel::default(), sample_count, seed)?;
    std::fs::write(report_path, report.render()).map_err(|source| HarnessError::Io {
        path: report_path.display().to_string(),
        source,
    })?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flipped(x: PlanarVector, v: PlanarVector) -> AngularVelocity {
        // counter-clockwise quarter turn instead of clockwise
        AngularVelocity(PlanarVector::new(-v.y, v.x).dot(x) / x.norm_sq())
    }

    #[test]
    fn reference_kernel_passes() {
        let r = run_checks(Kernel::default(), 300, 11).unwrap();
        assert!(r.passed(), "{}", r.render());
        assert_eq!(r.check("regressive_implies_grm").unwrap().samples, 30_000);
        assert_eq!(r.check("wall_cone_threshold").unwrap().samples, 30 * 90);
    }

    #[test]
    fn flipped_convention_is_caught() {
        let k = Kernel { angular_velocity: flipped };
        let r = run_checks(k, 50, 11).unwrap();
        assert!(!r.passed());
        let c = r.check("crossing_regressive_sign").unwrap();
        assert_eq!(c.failures, c.samples);
        assert!(!c.counterexamples.is_empty());
        assert!(r.render().contains("FAIL crossing_regressive_sign"));
    }

    #[test]
    fn single_sample_report() {
        let r = run_checks(Kernel::default(), 1, 0).unwrap();
        assert!(r.passed());
        assert!(r.checks.iter().all(|c| c.samples >= 1));
        assert!(run_checks(Kernel::default(), 0, 0).is_err());
    }

    #[test]
    fn finite_difference_oracle_matches_rotation() {
        // uniform circular motion about the observer
        let x = PlanarVector::new(3.0, 4.0);
        let w = PlanarVector::new(-4.0, 3.0) * 0.5;
        assert!((fd_angular_velocity(x, w) - 0.5 * 5.0 / 5.0).abs() < 1e-6);
    }
}
