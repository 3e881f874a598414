//! Learned initializations: sample and solve problems offline, fit each
//! solution with per-dimension cubics, and regress the coefficients from the
//! problem description with an MLP.

mod dataset;
mod encoding;
pub mod io;
mod mlp;
mod poly;
mod repair;
mod sample;

pub use dataset::{generate_dataset, generate_record, Dataset, DatasetRecord, EnvMix};
pub use encoding::{attitude_sign, EncodingError, ProblemEncoding, ENCODING_DIM};
pub use mlp::{train, Gradient, Mlp, Standardizer, TrainConfig, TrainError, TrainingMeta, WARM_START_DIMS};
pub use poly::{decode_warm_start, fit_polynomials, PolyWarmStart, DEGREE, NUM_COEFFS, TARGET_DIM};
pub use repair::{attitude_defect, repair_warm_start};
pub use sample::{
    instance_rng, sample_problem, uniform_quaternion, Environment, ObstacleDistribution, SampleError, Sampler,
    DEFAULT_DT, DEFAULT_HORIZON,
};

use crate::model::FreeFlyerState;
use crate::ocp::{ProblemParameters, Trajectory};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WarmStartError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("model maps {input} inputs to {output} outputs, expected {ENCODING_DIM} to {TARGET_DIM}")]
    ModelShape { input: usize, output: usize },
    #[error("model produced non-finite coefficients")]
    NonFinite,
}

/// Trains the warm-start network on a dataset.
pub fn train_on(dataset: &Dataset, cfg: &TrainConfig) -> Result<Mlp, TrainError> {
    train(&WARM_START_DIMS, &dataset.inputs(), &dataset.targets(), cfg)
}

/// Encodes `params`, predicts cubic coefficients, decodes them on the
/// problem's grid in the sign of the problem's own start quaternion, and
/// repairs the result with [`repair_warm_start`].
pub fn predict_trajectory(model: &Mlp, params: &ProblemParameters) -> Result<Trajectory, WarmStartError> {
    if model.input_dim() != ENCODING_DIM || model.output_dim() != TARGET_DIM {
        return Err(WarmStartError::ModelShape {
            input: model.input_dim(),
            output: model.output_dim(),
        });
    }
    let enc = ProblemEncoding::new(params)?;
    let coeffs = model.predict(&enc.0);
    let pw = PolyWarmStart::from_slice(coeffs.as_slice(), params.duration()).with_attitude_sign(attitude_sign(&params.x_init.q));
    if !pw.is_finite() {
        return Err(WarmStartError::NonFinite);
    }
    let raw_start = FreeFlyerState::from_vector(&pw.state_at(0.0));
    let mut traj = decode_warm_start(&pw, params);
    repair_warm_start(&mut traj, &raw_start, params);
    Ok(traj)
}
