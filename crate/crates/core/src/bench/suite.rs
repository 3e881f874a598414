use crate::kv::{self, KvError};
use crate::ocp::{write_problem, ProblemParameters};
use crate::warmstart::{instance_rng, Environment, ObstacleDistribution, SampleError, Sampler};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    File(#[from] KvError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("{category} instance {id}: {msg}")]
    Invalid {
        category: &'static str,
        id: usize,
        msg: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    /// Attitude held fixed, no obstacle.
    TransOnly,
    /// Random attitudes, no obstacle.
    TransRot,
    /// One obstacle from the training distribution.
    ObsSeen,
    /// One obstacle larger than anything in training.
    ObsOod,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::TransOnly, Category::TransRot, Category::ObsSeen, Category::ObsOod];

    pub fn name(self) -> &'static str {
        match self {
            Category::TransOnly => "trans_only",
            Category::TransRot => "trans_rot",
            Category::ObsSeen => "obs_seen",
            Category::ObsOod => "obs_ood",
        }
    }

    /// Column heading used in the summary table.
    pub fn label(self) -> &'static str {
        match self {
            Category::TransOnly => "TransOnly",
            Category::TransRot => "Trans+Rot",
            Category::ObsSeen => "Obs_Seen",
            Category::ObsOod => "Obs_OOD (constructed)",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    fn index(self) -> u64 {
        self as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: usize,
    pub params: ProblemParameters,
}

impl Instance {
    /// FNV-1a of the canonical problem file text; equal for identical
    /// parameters.
    pub fn hash(&self) -> u64 {
        write_problem(&self.params)
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSuite {
    pub category: Category,
    pub instances: Vec<Instance>,
    /// Solves per instance and start type; only wall time is averaged.
    pub repetitions: usize,
}

impl BenchmarkSuite {
    /// `count` instances of `category` in `env`. Instance `i` draws from its
    /// own stream of `seed`, so suites grow without changing earlier members.
    pub fn generate(
        category: Category,
        count: usize,
        env: Environment,
        base: &Sampler,
        seed: u64,
        repetitions: usize,
    ) -> Result<Self, SuiteError> {
        let mut sampler = *base;
        if category == Category::ObsOod {
            sampler.obstacle = ObstacleDistribution::oversized();
        }
        let with_obstacle = matches!(category, Category::ObsSeen | Category::ObsOod);
        let instances = (0..count)
            .map(|id| {
                let mut rng = instance_rng(seed, (category.index() << 32) | id as u64);
                let mut params = sampler.sample(env, with_obstacle, &mut rng)?;
                if category == Category::TransOnly {
                    params.q_goal = params.x_init.q;
                }
                Ok(Instance { id, params })
            })
            .collect::<Result<Vec<_>, SuiteError>>()?;
        let suite = Self {
            category,
            instances,
            repetitions,
        };
        suite.validate()?;
        Ok(suite)
    }

    /// Category separation: fixed attitude and no obstacle for TransOnly,
    /// no obstacle for TransRot, exactly one for the obstacle categories.
    pub fn validate(&self) -> Result<(), SuiteError> {
        for inst in &self.instances {
            let p = &inst.params;
            let fail = |msg| SuiteError::Invalid {
                category: self.category.name(),
                id: inst.id,
                msg,
            };
            match self.category {
                Category::TransOnly if p.q_goal != p.x_init.q => return Err(fail("goal attitude differs from start")),
                Category::TransOnly | Category::TransRot if !p.obstacles.is_empty() => {
                    return Err(fail("unexpected obstacle"))
                }
                Category::ObsSeen | Category::ObsOod if p.obstacles.len() != 1 => {
                    return Err(fail("needs exactly one obstacle"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Contents of a suite file.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub seed: u64,
    pub env: Environment,
    pub repetitions: usize,
    pub sampler: Sampler,
    /// Instances per category, in [`Category::ALL`] order.
    pub counts: [usize; 4],
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            env: Environment::Jem,
            repetitions: 1,
            sampler: Sampler::default(),
            counts: [50; 4],
        }
    }
}

impl SuiteSpec {
    pub fn build(&self) -> Result<Vec<BenchmarkSuite>, SuiteError> {
        Category::ALL
            .iter()
            .zip(self.counts)
            .filter(|(_, n)| *n > 0)
            .map(|(&c, n)| BenchmarkSuite::generate(c, n, self.env, &self.sampler, self.seed, self.repetitions))
            .collect()
    }
}

/// Keys: `seed`, `env` (`jem` | `granite`), `repetitions`, `N`, `dt`, and
/// `count.<category>` for each category name. Missing keys keep defaults.
pub fn parse_suite(text: &str) -> Result<SuiteSpec, KvError> {
    let entries = kv::parse(text)?;
    kv::check_unique(&entries, &[])?;
    let mut s = SuiteSpec::default();
    for e in &entries {
        let bad = |msg: &str| KvError::Value {
            line: e.line,
            key: e.key.clone(),
            msg: msg.into(),
        };
        match e.key.as_str() {
            "seed" => s.seed = e.value.parse().map_err(|_| bad("expected an unsigned integer"))?,
            "env" => s.env = Environment::parse(&e.value).ok_or_else(|| bad("expected `jem` or `granite`"))?,
            "repetitions" => {
                s.repetitions = e.usize()?;
                if s.repetitions == 0 {
                    return Err(bad("must be at least 1"));
                }
            }
            "N" => {
                s.sampler.horizon = e.usize()?;
                if s.sampler.horizon < 4 {
                    return Err(bad("must be at least 4"));
                }
            }
            "dt" => {
                s.sampler.dt = e.f64()?;
                if !(s.sampler.dt > 0.0) {
                    return Err(bad("must be positive"));
                }
            }
            key => match key.strip_prefix("count.").and_then(Category::parse) {
                Some(c) => s.counts[c as usize] = e.usize()?,
                None => {
                    return Err(KvError::UnknownKey {
                        line: e.line,
                        key: e.key.clone(),
                    })
                }
            },
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_are_separated() {
        let spec = SuiteSpec {
            counts: [3, 3, 3, 3],
            ..SuiteSpec::default()
        };
        let suites = spec.build().unwrap();
        assert_eq!(suites.len(), 4);
        for s in &suites {
            s.validate().unwrap();
        }
        let ood = &suites[3].instances[0].params.obstacles[0];
        assert!(ood.half_extents().min() >= 0.45);
    }

    #[test]
    fn validator_catches_mislabeled_instance() {
        let mut s = BenchmarkSuite::generate(Category::TransRot, 2, Environment::Jem, &Sampler::default(), 4, 1).unwrap();
        s.category = Category::ObsSeen;
        assert!(matches!(s.validate(), Err(SuiteError::Invalid { id: 0, .. })));
    }

    #[test]
    fn generation_is_reproducible_and_prefix_stable() {
        let a = BenchmarkSuite::generate(Category::ObsSeen, 3, Environment::Jem, &Sampler::default(), 9, 1).unwrap();
        let b = BenchmarkSuite::generate(Category::ObsSeen, 5, Environment::Jem, &Sampler::default(), 9, 1).unwrap();
        assert_eq!(a.instances[..], b.instances[..3]);
        assert_eq!(a.instances[1].hash(), b.instances[1].hash());
        assert_ne!(a.instances[0].hash(), a.instances[1].hash());
    }

    #[test]
    fn parses_suite_file() {
        let s = parse_suite("seed = 5\nenv = granite\ncount.trans_rot = 7\ncount.obs_ood = 0\nN = 30\n").unwrap();
        assert_eq!(s.seed, 5);
        assert_eq!(s.env, Environment::Granite);
        assert_eq!(s.counts, [50, 7, 50, 0]);
        assert_eq!(s.sampler.horizon, 30);
        assert!(matches!(parse_suite("count.bogus = 1"), Err(KvError::UnknownKey { .. })));
        assert!(parse_suite("repetitions = 0").is_err());
    }
}
