use super::{ProblemParameters, Trajectory};
use crate::model::{ControlInput, FreeFlyerState};
use nalgebra::{Vector3, Vector4};
use std::fmt::Write as _;
use thiserror::Error;

pub const TRAJECTORY_HEADER: &str =
    "t,r_x,r_y,r_z,v_x,v_y,v_z,q_x,q_y,q_z,q_w,w_x,w_y,w_z,F_x,F_y,F_z,M_x,M_y,M_z";

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryCsvError {
    #[error("missing or unexpected header")]
    Header,
    #[error("line {0}: expected 20 numeric fields")]
    Row(usize),
    #[error("need at least two rows")]
    TooShort,
}

/// One row per knot point with the control applied from that knot on. The
/// last knot has no control and gets zeros.
pub fn write_trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    let zero = ControlInput::zero();
    for (k, s) in traj.states.iter().enumerate() {
        let u = traj.controls.get(k).unwrap_or(&zero);
        let _ = write!(out, "{}", k as f64 * traj.dt);
        for v in s.to_vector().iter().chain(u.to_vector().iter()) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`write_trajectory_csv`]; `dt` comes from the first two rows.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, TrajectoryCsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == TRAJECTORY_HEADER => {}
        _ => return Err(TrajectoryCsvError::Header),
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut controls = Vec::new();
    for (i, line) in lines {
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| TrajectoryCsvError::Row(i + 1))?;
        if vals.len() != 20 {
            return Err(TrajectoryCsvError::Row(i + 1));
        }
        times.push(vals[0]);
        states.push(FreeFlyerState {
            r: Vector3::new(vals[1], vals[2], vals[3]),
            v: Vector3::new(vals[4], vals[5], vals[6]),
            q: Vector4::new(vals[7], vals[8], vals[9], vals[10]),
            w: Vector3::new(vals[11], vals[12], vals[13]),
        });
        controls.push(ControlInput {
            force: Vector3::new(vals[14], vals[15], vals[16]),
            moment: Vector3::new(vals[17], vals[18], vals[19]),
        });
    }
    if states.len() < 2 {
        return Err(TrajectoryCsvError::TooShort);
    }
    controls.pop();
    Ok(Trajectory {
        dt: times[1] - times[0],
        states,
        controls,
    })
}

/// Top view (x right, y up) of the path with the obstacles, grown by the
/// robot radius shown dashed, the workspace outline, and start and goal.
/// The view fits the path and obstacles.
pub fn trajectory_svg(traj: &Trajectory, params: &ProblemParameters) -> String {
    let ws = &params.workspace;
    let radius = params.vehicle.radius;
    let mut lo = params.x_init.r.inf(&params.r_goal);
    let mut hi = params.x_init.r.sup(&params.r_goal);
    for st in &traj.states {
        lo = lo.inf(&st.r);
        hi = hi.sup(&st.r);
    }
    for o in &params.obstacles {
        lo = lo.inf(&(o.center - o.half_extents()).add_scalar(-radius));
        hi = hi.sup(&(o.center + o.half_extents()).add_scalar(radius));
    }
    let pad = 0.1 * (hi - lo).max().max(1.0);
    let (x0, x1) = (lo.x - pad, hi.x + pad);
    let (y0, y1) = (lo.y - pad, hi.y + pad);
    let scale = 500.0 / (x1 - x0).max(y1 - y0);
    let (w, h) = ((x1 - x0) * scale, (y1 - y0) * scale);
    let px = |x: f64| (x - x0) * scale;
    let py = |y: f64| (y1 - y) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w:.1}" height="{h:.1}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#888"/>"##,
        px(ws.lower.x),
        py(ws.upper.y),
        (ws.upper.x - ws.lower.x) * scale,
        (ws.upper.y - ws.lower.y) * scale
    );
    for o in &params.obstacles {
        let (lo, hi) = (o.center - o.half_extents(), o.center + o.half_extents());
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#c44" fill-opacity="0.5"/>"##,
            px(lo.x),
            py(hi.y),
            (hi.x - lo.x) * scale,
            (hi.y - lo.y) * scale
        );
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" rx="{:.1}" fill="none" stroke="#c44" stroke-dasharray="4,3"/>"##,
            px(lo.x - radius),
            py(hi.y + radius),
            (hi.x - lo.x + 2.0 * radius) * scale,
            (hi.y - lo.y + 2.0 * radius) * scale,
            radius * scale
        );
    }
    let points: Vec<String> = traj
        .states
        .iter()
        .map(|st| format!("{:.1},{:.1}", px(st.r.x), py(st.r.y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#4C72B0" stroke-width="2"/>"##,
        points.join(" ")
    );
    for (r, label, color) in [(params.x_init.r, "start", "#2a2"), (params.r_goal, "goal", "#222")] {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/><text x="{:.1}" y="{:.1}">{label}</text>"#,
            px(r.x),
            py(r.y),
            px(r.x) + 6.0,
            py(r.y) - 6.0
        );
    }
    s.push_str("</svg>\n");
    s
}
