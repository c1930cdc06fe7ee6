//! Still frames of a logged trial.
//!
//! Stopped agents carry a circle: green for a true positive, red for a false
//! positive, grey for an excluded stop. Thin segments join a stopped agent to
//! the causes of its stop. Agents closer than the collision distance are
//! drawn enlarged.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::analysis::{StopClass, TrialResult};
use crate::dynamics::AgentState;
use crate::geometry::{min_image_delta, PlanarVector};
use crate::perception::{body_to_world, outline, HULL_LEN};

const PX_PER_MM: f64 = 10.0;
const COLLISION_SCALE: f64 = 1.8;

fn class_color(c: StopClass) -> &'static str {
    match c {
        StopClass::TruePositive => "#1a9641",
        StopClass::FalsePositive => "#d7191c",
        StopClass::Excluded => "#999999",
    }
}

/// Index of the stop that keeps `agent` stopped at frame `t`, if any.
fn active_stop(result: &TrialResult, states: &[AgentState], agent: usize, t: usize) -> Option<usize> {
    let i = result.stops.iter().rposition(|s| s.agent == agent && s.t <= t)?;
    (result.stops[i].t == t || !states[agent].moving).then_some(i)
}

/// SVG for the state at the start of step `t`.
pub fn render_frame(result: &TrialResult, t: usize) -> Result<String, HarnessError> {
    let traj = result.trajectory.as_ref().ok_or(HarnessError::NoTrajectory)?;
    let states = traj.get(t).ok_or(HarnessError::NoTrajectory)?;
    let p = &result.params;
    let side = p.arena * PX_PER_MM;
    let to_px = |v: PlanarVector| (v.x * PX_PER_MM, (p.arena - v.y) * PX_PER_MM);

    let mut colliding = vec![false; states.len()];
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            if min_image_delta(a.pos, b.pos, p.arena).norm() < p.collision_distance {
                colliding[a.id] = true;
                colliding[b.id] = true;
            }
        }
    }

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{side}" height="{side}" viewBox="0 0 {side} {side}">"#
    );
    let _ = writeln!(s, r#"<rect width="{side}" height="{side}" fill="white" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="6" y="16" font-size="12">t = {:.3} s (step {t})</text>"#,
        t as f64 * p.dt
    );

    let body = outline(p.body_length);
    for a in states {
        let scale = if colliding[a.id] { COLLISION_SCALE } else { 1.0 };
        let pts: Vec<String> = body[..HULL_LEN]
            .iter()
            .map(|&o| {
                let (x, y) = to_px(a.pos + body_to_world(o * scale, a.heading));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let fill = if colliding[a.id] { "#f4a582" } else { "#404040" };
        let _ = writeln!(
            s,
            r#"<polygon class="agent" points="{}" fill="{fill}"><title>agent {}</title></polygon>"#,
            pts.join(" "),
            a.id
        );
    }

    for a in states {
        let Some(i) = active_stop(result, states, a.id, t) else {
            continue;
        };
        let stop = &result.stops[i];
        let color = class_color(result.classes[i]);
        let (cx, cy) = to_px(a.pos);
        for &c in &stop.cause_agents {
            let (x2, y2) = to_px(a.pos + min_image_delta(a.pos, states[c].pos, p.arena));
            let _ = writeln!(
                s,
                r#"<line class="cause" x1="{cx:.2}" y1="{cy:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="1"/>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<circle class="stop" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            p.body_length * PX_PER_MM
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes one frame every `stride` steps into `out_dir` and returns the paths.
pub fn emit_frames(result: &TrialResult, out_dir: &Path, stride: usize) -> Result<Vec<PathBuf>, HarnessError> {
    let traj = result.trajectory.as_ref().ok_or(HarnessError::NoTrajectory)?;
    if stride == 0 {
        return Err(HarnessError::Invalid("stride must be at least 1".into()));
    }
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| HarnessError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut paths = Vec::new();
    for t in (0..traj.len()).step_by(stride) {
        let path = out_dir.join(format!("frame_{t:06}.svg"));
        std::fs::write(&path, render_frame(result, t)?).map_err(io(&path))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_agents, TrialOptions};
    use crate::fixtures::{collision_course, two_agent_params};
    use crate::geometry::PlanarVector;

    fn logged(f: &crate::fixtures::Fixture) -> TrialResult {
        let options = TrialOptions {
            log_trajectory: true,
            ..TrialOptions::default()
        };
        run_agents(&f.params, f.agents.clone(), 1, options).unwrap()
    }

    #[test]
    fn true_positive_stop_is_green() {
        let r = logged(&collision_course());
        let (i, stop) = r.stops.iter().enumerate().find(|(_, s)| s.agent == 0).unwrap();
        assert_eq!(r.classes[i], StopClass::TruePositive);
        let at_stop = render_frame(&r, stop.t).unwrap();
        assert!(at_stop.contains(r##"class="stop""##) && at_stop.contains("#1a9641"));
        assert!(at_stop.contains(r#"class="cause""#));
        let before = render_frame(&r, 0).unwrap();
        assert!(!before.contains(r#"class="stop""#));
    }

    #[test]
    fn colliding_bodies_are_enlarged() {
        let params = two_agent_params(10.0);
        let agents = vec![
            AgentState::new(0, PlanarVector::new(20.0, 20.0), 0.0, 10.0),
            AgentState::new(1, PlanarVector::new(20.8, 20.0), 0.0, 10.0),
        ];
        let r = run_agents(&params, agents, 1, TrialOptions { log_trajectory: true, ..Default::default() }).unwrap();
        let svg = render_frame(&r, 0).unwrap();
        assert_eq!(svg.matches("#f4a582").count(), 2);
    }

    #[test]
    fn frame_count_follows_stride() {
        let dir = tempfile::tempdir().unwrap();
        let r = logged(&collision_course());
        let n = r.trajectory.as_ref().unwrap().len();
        let paths = emit_frames(&r, dir.path(), 7).unwrap();
        assert_eq!(paths.len(), n.div_ceil(7));
        assert!(paths.iter().all(|p| p.exists()));
    }

    #[test]
    fn needs_a_trajectory() {
        let f = collision_course();
        let r = run_agents(&f.params, f.agents.clone(), 1, TrialOptions::default()).unwrap();
        assert!(matches!(render_frame(&r, 0), Err(HarnessError::NoTrajectory)));
    }
}
