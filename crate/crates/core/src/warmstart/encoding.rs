use crate::ocp::ProblemParameters;

pub const ENCODING_DIM: usize = 20;

/// Sign that puts the start quaternion in the hemisphere with non-negative
/// scalar part. Encodings and regression targets are expressed in this sign
/// so that `q` and `-q` map to the same network input.
pub fn attitude_sign(q_init: &nalgebra::Vector4<f64>) -> f64 {
    if q_init[3] < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Network input: start pose (r, q), goal pose (r, q), then the first
/// obstacle's centre and half-extents, zeros when there is none. The start
/// quaternion has non-negative scalar part and the goal quaternion lies in
/// the same hemisphere as the start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemEncoding(pub [f64; ENCODING_DIM]);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodingError {
    #[error("the encoding holds one obstacle, the problem has {0}")]
    TooManyObstacles(usize),
    #[error("start velocity and angular velocity must be zero")]
    MovingStart,
    #[error("problem values must be finite")]
    NonFinite,
}

impl ProblemEncoding {
    pub fn new(params: &ProblemParameters) -> Result<Self, EncodingError> {
        if params.obstacles.len() > 1 {
            return Err(EncodingError::TooManyObstacles(params.obstacles.len()));
        }
        let x = &params.x_init;
        if x.v != nalgebra::Vector3::zeros() || x.w != nalgebra::Vector3::zeros() {
            return Err(EncodingError::MovingStart);
        }
        let mut e = [0.0; ENCODING_DIM];
        e[0..3].copy_from_slice(x.r.as_slice());
        let q0 = x.q.normalize() * attitude_sign(&x.q);
        let mut qg = params.q_goal.normalize();
        if qg.dot(&q0) < 0.0 {
            qg = -qg;
        }
        e[3..7].copy_from_slice(q0.as_slice());
        e[7..10].copy_from_slice(params.r_goal.as_slice());
        e[10..14].copy_from_slice(qg.as_slice());
        if let Some(o) = params.obstacles.first() {
            e[14..17].copy_from_slice(o.center.as_slice());
            e[17..20].copy_from_slice(o.half_extents().as_slice());
        }
        if e.iter().any(|v| !v.is_finite()) {
            return Err(EncodingError::NonFinite);
        }
        Ok(Self(e))
    }
}
