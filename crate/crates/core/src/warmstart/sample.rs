use crate::model::{quat_from_axis_angle, signed_distance, ObstacleBox, Workspace};
use crate::ocp::ProblemParameters;
use nalgebra::{Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("no collision-free start/goal pair after {0} obstacle draws")]
    Exhausted(usize),
    #[error("invalid sampler setting: {0}")]
    Config(&'static str),
}

const MAX_TRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Environment {
    /// 2 m × 2 m air-bearing table; planar motion, yaw only.
    Granite,
    /// 1.5 × 6.4 × 1.7 m module volume; full attitudes.
    Jem,
}

impl Environment {
    pub fn extent(self) -> Vector3<f64> {
        match self {
            Environment::Granite => Vector3::new(2.0, 2.0, 0.0),
            Environment::Jem => Vector3::new(1.5, 6.4, 1.7),
        }
    }

    pub fn planar(self) -> bool {
        self == Environment::Granite
    }

    pub fn tag(self) -> u8 {
        match self {
            Environment::Granite => 0,
            Environment::Jem => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Environment::Granite),
            1 => Some(Environment::Jem),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Environment::Granite => "granite",
            Environment::Jem => "jem",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "granite" => Some(Environment::Granite),
            "jem" => Some(Environment::Jem),
            _ => None,
        }
    }
}

/// Box sizes and placement of a random obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleDistribution {
    /// Per-axis half-extent range, meters.
    pub half_extent: (f64, f64),
    /// Range of the centre's distance from the workspace origin.
    pub center_distance: (f64, f64),
}

impl ObstacleDistribution {
    /// The distribution training data is drawn from.
    pub fn training() -> Self {
        Self {
            half_extent: (0.05, 0.4),
            center_distance: (0.0, 1.0),
        }
    }

    /// Boxes larger than any seen in training.
    pub fn oversized() -> Self {
        Self {
            half_extent: (0.45, 0.7),
            center_distance: (0.0, 1.0),
        }
    }

    fn validate(&self) -> Result<(), SampleError> {
        let (a, b) = self.half_extent;
        if !(a > 0.0 && b >= a && b.is_finite()) {
            return Err(SampleError::Config("half-extent range"));
        }
        let (c, d) = self.center_distance;
        if !(c >= 0.0 && d >= c && d.is_finite()) {
            return Err(SampleError::Config("centre distance range"));
        }
        Ok(())
    }
}

/// Horizon and obstacle distribution shared by all sampled problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    pub horizon: usize,
    pub dt: f64,
    pub obstacle: ObstacleDistribution,
}

impl Default for Sampler {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            obstacle: ObstacleDistribution::training(),
        }
    }
}

pub const DEFAULT_HORIZON: usize = 40;
pub const DEFAULT_DT: f64 = 0.75;

/// Uniform rotation (Shoemake's subgroup algorithm).
pub fn uniform_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Vector4<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Vector4::new(
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
        b * (2.0 * PI * u3).cos(),
    );
    q / q.norm()
}

fn uniform_yaw<R: Rng + ?Sized>(rng: &mut R) -> Vector4<f64> {
    quat_from_axis_angle(&Vector3::z(), rng.random_range(-PI..PI))
}

fn point_in<R: Rng + ?Sized>(rng: &mut R, ws: &Workspace) -> Vector3<f64> {
    Vector3::from_fn(|k, _| {
        let (lo, hi) = (ws.lower[k], ws.upper[k]);
        if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    })
}

/// Point whose distance from the origin is uniform in volume (area when
/// planar) over the shell `[r0, r1]`.
fn point_in_shell<R: Rng + ?Sized>(rng: &mut R, (r0, r1): (f64, f64), planar: bool) -> Vector3<f64> {
    let dim = if planar { 2.0 } else { 3.0 };
    let u: f64 = rng.random();
    let r = (r0.powf(dim) + u * (r1.powf(dim) - r0.powf(dim))).powf(1.0 / dim);
    let dir = loop {
        let d = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            if planar { 0.0 } else { rng.random_range(-1.0..1.0) },
        );
        let n = d.norm();
        if n > 1e-3 && n <= 1.0 {
            break d / n;
        }
    };
    r * dir
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(
        &self,
        env: Environment,
        with_obstacle: bool,
        rng: &mut R,
    ) -> Result<ProblemParameters, SampleError> {
        if self.horizon < 2 || !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SampleError::Config("horizon and time step"));
        }
        self.obstacle.validate()?;
        let ws = Workspace::centered(env.extent());
        let attitude = |rng: &mut R| if env.planar() { uniform_yaw(rng) } else { uniform_quaternion(rng) };
        let r_init = point_in(rng, &ws);
        let q_init = attitude(rng);
        let r_goal = point_in(rng, &ws);
        let q_goal = attitude(rng);
        let mut p = ProblemParameters::rest_to_rest(r_init, q_init, r_goal, q_goal, self.horizon, self.dt);
        p.workspace = ws;
        if !with_obstacle {
            return Ok(p);
        }
        let clear = |obs: &ObstacleBox| {
            [r_init, r_goal]
                .iter()
                .all(|r| signed_distance(r, p.vehicle.radius, obs) >= p.delta_sd)
        };
        let (h0, h1) = self.obstacle.half_extent;
        for _ in 0..MAX_TRIES {
            let center = point_in_shell(rng, self.obstacle.center_distance, env.planar());
            let half = Vector3::from_fn(|_, _| if h1 > h0 { rng.random_range(h0..h1) } else { h0 });
            let obs = ObstacleBox::new(center, half).expect("sampled box is finite and nonnegative");
            if clear(&obs) {
                p.obstacles.push(obs);
                return Ok(p);
            }
        }
        Err(SampleError::Exhausted(MAX_TRIES))
    }
}

/// Generator for instance `index` of a run seeded with `seed`: one ChaCha
/// stream per instance, so results do not depend on scheduling.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One problem from the training distribution with the default horizon.
pub fn sample_problem(env: Environment, with_obstacle: bool, seed: u64) -> Result<ProblemParameters, SampleError> {
    Sampler::default().sample(env, with_obstacle, &mut ChaCha8Rng::seed_from_u64(seed))
}
