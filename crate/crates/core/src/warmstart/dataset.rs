use super::encoding::{attitude_sign, ProblemEncoding};
use super::poly::{fit_polynomials, PolyWarmStart};
use super::sample::{instance_rng, Environment, Sampler};
use crate::gusto::{solve_cold, GustoConfig};
use rand::Rng;
use rayon::prelude::*;

/// One solved problem: the network input and its fitted target.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub encoding: ProblemEncoding,
    pub target: PolyWarmStart,
    pub env: Environment,
    pub cost: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
}

/// Fractions of sampled problems drawn from the module volume and given an
/// obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvMix {
    pub jem_fraction: f64,
    pub obstacle_fraction: f64,
}

impl Default for EnvMix {
    /// 85 % module / 15 % table, half of all problems with an obstacle.
    fn default() -> Self {
        Self {
            jem_fraction: 0.85,
            obstacle_fraction: 0.5,
        }
    }
}

impl EnvMix {
    pub fn only(env: Environment, obstacle_fraction: f64) -> Self {
        Self {
            jem_fraction: if env == Environment::Jem { 1.0 } else { 0.0 },
            obstacle_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    /// Problems that were sampled but did not converge or could not be drawn.
    pub failures: usize,
}

impl Dataset {
    pub fn attempted(&self) -> usize {
        self.records.len() + self.failures
    }

    pub fn failure_rate(&self) -> f64 {
        if self.attempted() == 0 {
            0.0
        } else {
            self.failures as f64 / self.attempted() as f64
        }
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.encoding.0.to_vec()).collect()
    }

    pub fn targets(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.target.to_vector().to_vec()).collect()
    }
}

/// Solves instance `index` of the run seeded with `seed`.
pub fn generate_record(
    index: u64,
    seed: u64,
    mix: EnvMix,
    sampler: &Sampler,
    cfg: &GustoConfig,
) -> Option<DatasetRecord> {
    let mut rng = instance_rng(seed, index);
    let env = if rng.random::<f64>() < mix.jem_fraction {
        Environment::Jem
    } else {
        Environment::Granite
    };
    let with_obstacle = rng.random::<f64>() < mix.obstacle_fraction;
    let params = sampler.sample(env, with_obstacle, &mut rng).ok()?;
    let encoding = ProblemEncoding::new(&params).ok()?;
    let rep = solve_cold(&params, cfg).ok()?;
    if !rep.converged() {
        return None;
    }
    Some(DatasetRecord {
        encoding,
        target: fit_polynomials(&rep.trajectory).with_attitude_sign(attitude_sign(&params.x_init.q)),
        env,
        cost: rep.cost,
        inner_iterations: rep.inner_iterations,
        outer_iterations: rep.outer_iterations,
    })
}

/// Samples and cold-solves `count` problems on `jobs` threads, keeping the
/// converged ones in index order. Every instance has its own generator, so
/// the result does not depend on `jobs`.
pub fn generate_dataset(
    count: usize,
    mix: EnvMix,
    sampler: &Sampler,
    cfg: &GustoConfig,
    seed: u64,
    jobs: usize,
) -> Dataset {
    let run = || {
        (0..count as u64)
            .into_par_iter()
            .map(|i| generate_record(i, seed, mix, sampler, cfg))
            .collect::<Vec<_>>()
    };
    let out = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let failures = out.iter().filter(|r| r.is_none()).count();
    Dataset {
        records: out.into_iter().flatten().collect(),
        failures,
    }
}
