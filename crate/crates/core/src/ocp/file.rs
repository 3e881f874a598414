use super::{ProblemError, ProblemParameters};
use crate::kv::{self, format_vec, Entry, KvError};
use crate::model::{identity_quat, normalize_quat, FreeFlyerState, ObstacleBox, VehicleParams, Workspace};
use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

const KEYS: &[&str] = &[
    "start.r",
    "start.q",
    "start.v",
    "start.w",
    "goal.r",
    "goal.q",
    "goal.tolerance",
    "goal.attitude_tolerance",
    "obstacle.center",
    "obstacle.half_extents",
    "clearance",
    "N",
    "dt",
    "limits.v_max",
    "limits.w_max",
    "limits.f_max",
    "limits.m_max",
    "vehicle.mass",
    "vehicle.inertia_diag",
    "vehicle.radius",
    "weights.R_diag",
    "workspace.lower",
    "workspace.upper",
];

fn find<'a>(entries: &'a [Entry], key: &str) -> Option<&'a Entry> {
    entries.iter().find(|e| e.key == key)
}

fn require<'a>(entries: &'a [Entry], key: &str) -> Result<&'a Entry, KvError> {
    find(entries, key).ok_or_else(|| KvError::Missing(key.to_string()))
}

/// Parses a problem file. `start.r`, `goal.r`, `N` and `dt` are required;
/// everything else falls back to the defaults of
/// [`ProblemParameters::rest_to_rest`]. Obstacles are given as repeated
/// `obstacle.center` / `obstacle.half_extents` pairs, matched in order.
pub fn parse_problem(text: &str) -> Result<ProblemParameters, ProblemError> {
    let entries = kv::parse(text)?;
    for e in &entries {
        if !KEYS.contains(&e.key.as_str()) {
            return Err(KvError::UnknownKey {
                line: e.line,
                key: e.key.clone(),
            }
            .into());
        }
    }
    kv::check_unique(&entries, &["obstacle.center", "obstacle.half_extents"])?;

    let quat = |key: &str| -> Result<_, KvError> {
        match find(&entries, key) {
            Some(e) => Ok(normalize_quat(&e.vec4()?)),
            None => Ok(identity_quat()),
        }
    };
    let opt_vec3 = |key: &str| -> Result<Option<Vector3<f64>>, KvError> { find(&entries, key).map(Entry::vec3).transpose() };
    let opt_f64 = |key: &str| -> Result<Option<f64>, KvError> { find(&entries, key).map(Entry::f64).transpose() };

    let mut p = ProblemParameters::rest_to_rest(
        require(&entries, "start.r")?.vec3()?,
        quat("start.q")?,
        require(&entries, "goal.r")?.vec3()?,
        quat("goal.q")?,
        require(&entries, "N")?.usize()?,
        require(&entries, "dt")?.f64()?,
    );
    p.x_init = FreeFlyerState {
        v: opt_vec3("start.v")?.unwrap_or_default(),
        w: opt_vec3("start.w")?.unwrap_or_default(),
        ..p.x_init
    };
    if let Some(v) = opt_f64("goal.tolerance")? {
        p.delta_goal = v;
    }
    if let Some(v) = opt_f64("goal.attitude_tolerance")? {
        p.delta_att = v;
    }
    if let Some(v) = opt_f64("clearance")? {
        p.delta_sd = v;
    }

    let centers: Vec<&Entry> = entries.iter().filter(|e| e.key == "obstacle.center").collect();
    let halves: Vec<&Entry> = entries.iter().filter(|e| e.key == "obstacle.half_extents").collect();
    if centers.len() != halves.len() {
        let line = centers.iter().chain(halves.iter()).map(|e| e.line).max().unwrap_or(0);
        return Err(KvError::Value {
            line,
            key: "obstacle".into(),
            msg: "every obstacle.center needs a matching obstacle.half_extents".into(),
        }
        .into());
    }
    for (c, h) in centers.iter().zip(&halves) {
        p.obstacles.push(ObstacleBox::new(c.vec3()?, h.vec3()?)?);
    }

    let d = VehicleParams::default();
    let inertia = match opt_vec3("vehicle.inertia_diag")? {
        Some(v) => Matrix3::from_diagonal(&v),
        None => *d.inertia(),
    };
    p.vehicle = VehicleParams::new(
        opt_f64("vehicle.mass")?.unwrap_or(d.mass()),
        inertia,
        opt_f64("vehicle.radius")?.unwrap_or(d.radius),
        opt_f64("limits.v_max")?.unwrap_or(d.v_max),
        opt_f64("limits.w_max")?.unwrap_or(d.w_max),
        opt_f64("limits.f_max")?.unwrap_or(d.f_max),
        opt_f64("limits.m_max")?.unwrap_or(d.m_max),
    )?;
    if let Some(e) = find(&entries, "weights.R_diag") {
        p.control_weight = Matrix6::from_diagonal(&Vector6::from_vec(e.vec(6)?));
    }
    if let (Some(lo), Some(hi)) = (opt_vec3("workspace.lower")?, opt_vec3("workspace.upper")?) {
        p.workspace = Workspace { lower: lo, upper: hi };
    } else if find(&entries, "workspace.lower").is_some() || find(&entries, "workspace.upper").is_some() {
        return Err(KvError::Missing("workspace.lower and workspace.upper together".into()).into());
    }
    p.validate()?;
    Ok(p)
}

/// Serializes the parameters in the format read by [`parse_problem`]. Only a
/// diagonal control weight is representable.
pub fn write_problem(p: &ProblemParameters) -> String {
    let v = |x: &[f64]| format_vec(x);
    let mut s = String::new();
    let mut line = |k: &str, val: String| s.push_str(&format!("{k} = {val}\n"));
    line("start.r", v(p.x_init.r.as_slice()));
    line("start.q", v(p.x_init.q.as_slice()));
    line("start.v", v(p.x_init.v.as_slice()));
    line("start.w", v(p.x_init.w.as_slice()));
    line("goal.r", v(p.r_goal.as_slice()));
    line("goal.q", v(p.q_goal.as_slice()));
    line("goal.tolerance", p.delta_goal.to_string());
    line("goal.attitude_tolerance", p.delta_att.to_string());
    for o in &p.obstacles {
        line("obstacle.center", v(o.center.as_slice()));
        line("obstacle.half_extents", v(o.half_extents().as_slice()));
    }
    line("clearance", p.delta_sd.to_string());
    line("N", p.horizon.to_string());
    line("dt", p.dt.to_string());
    let veh = &p.vehicle;
    line("vehicle.mass", veh.mass().to_string());
    line("vehicle.inertia_diag", v(veh.inertia().diagonal().as_slice()));
    line("vehicle.radius", veh.radius.to_string());
    line("limits.v_max", veh.v_max.to_string());
    line("limits.w_max", veh.w_max.to_string());
    line("limits.f_max", veh.f_max.to_string());
    line("limits.m_max", veh.m_max.to_string());
    line("weights.R_diag", v(p.control_weight.diagonal().as_slice()));
    line("workspace.lower", v(p.workspace.lower.as_slice()));
    line("workspace.upper", v(p.workspace.upper.as_slice()));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
start.r = 0, 0, 0
goal.r = 1, 0.5, 0
goal.q = 0, 0, 0.7071067811865476, 0.7071067811865476
obstacle.center = 0.5, 0.2, 0
obstacle.half_extents = 0.1, 0.1, 0.1
N = 40
dt = 0.5
limits.v_max = 0.3
weights.R_diag = 1, 1, 1, 10, 10, 10
";

    #[test]
    fn parses_sample() {
        let p = parse_problem(SAMPLE).unwrap();
        assert_eq!(p.horizon, 40);
        assert_eq!(p.obstacles.len(), 1);
        assert_eq!(p.vehicle.v_max, 0.3);
        assert_eq!(p.control_weight[(4, 4)], 10.0);
        assert_eq!(p.x_init.q, identity_quat());
    }

    #[test]
    fn round_trips_through_text() {
        let p = parse_problem(SAMPLE).unwrap();
        assert_eq!(parse_problem(&write_problem(&p)).unwrap(), p);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_problem(&format!("{SAMPLE}bogus.key = 1\n")).unwrap_err();
        assert!(matches!(err, ProblemError::File(KvError::UnknownKey { line: 10, .. })));
    }

    #[test]
    fn missing_required_key() {
        let err = parse_problem("start.r = 0,0,0\nN = 4\ndt = 1\n").unwrap_err();
        assert_eq!(err, ProblemError::File(KvError::Missing("goal.r".into())));
    }

    #[test]
    fn unpaired_obstacle_rejected() {
        let text = SAMPLE.replace("obstacle.half_extents = 0.1, 0.1, 0.1\n", "");
        assert!(parse_problem(&text).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_problem(&SAMPLE.replace("N = 40", "N = 1")).is_err());
        assert!(parse_problem(&SAMPLE.replace("dt = 0.5", "dt = -1")).is_err());
    }
}
