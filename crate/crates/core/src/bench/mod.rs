//! Paired cold/warm benchmark over the four problem categories, with CSV and
//! SVG output.

mod report;
mod suite;

pub use report::{emit_csv, emit_svg, parse_csv, summary_table, ReportError};
pub use suite::{parse_suite, BenchmarkSuite, Category, Instance, SuiteError, SuiteSpec};

use crate::gusto::{solve_cold, solve_warm, GustoConfig, GustoError, GustoReport, GustoStatus};
use crate::warmstart::Mlp;
use rayon::prelude::*;
use std::time::Instant;

/// Outcome of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub status: GustoStatus,
    pub cost: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    /// Seconds, averaged over repetitions.
    pub wall_time: f64,
}

impl RunStats {
    fn from_report(rep: &GustoReport, wall_time: f64) -> Self {
        Self {
            status: rep.status,
            cost: rep.cost,
            inner_iterations: rep.inner_iterations,
            outer_iterations: rep.outer_iterations,
            wall_time,
        }
    }

    pub fn converged(&self) -> bool {
        self.status == GustoStatus::Converged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub id: usize,
    pub category: Category,
    pub problem_hash: u64,
    pub cold: RunStats,
    pub warm: RunStats,
}

impl BenchmarkRow {
    /// Fractional drop in total inner iterations from cold to warm.
    pub fn reduction(&self) -> f64 {
        let c = self.cold.inner_iterations as f64;
        if c == 0.0 {
            0.0
        } else {
            (c - self.warm.inner_iterations as f64) / c
        }
    }

    pub fn both_converged(&self) -> bool {
        self.cold.converged() && self.warm.converged()
    }

    /// `|warm − cold| / max(cold, 1e-9)`.
    pub fn cost_gap(&self) -> f64 {
        (self.warm.cost - self.cold.cost).abs() / self.cold.cost.abs().max(1e-9)
    }
}

/// Mean, median, sample standard deviation and 95 % half-width
/// (`1.96 · std / √n`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub ci95: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            count: n,
            mean,
            median,
            std,
            ci95: 1.96 * std / (n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategorySummary {
    pub category: Category,
    pub instances: usize,
    /// Rows where either run did not converge.
    pub failures: usize,
    /// Over rows where both runs converged.
    pub cold_cost: Stats,
    pub warm_cost: Stats,
    pub cold_iterations: Stats,
    pub warm_iterations: Stats,
    pub cold_time: Stats,
    pub warm_time: Stats,
    pub reduction: Stats,
    pub max_cost_gap: f64,
}

pub fn summarize(rows: &[BenchmarkRow]) -> Vec<CategorySummary> {
    Category::ALL
        .iter()
        .filter_map(|&cat| {
            let all: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.category == cat).collect();
            if all.is_empty() {
                return None;
            }
            let ok: Vec<&BenchmarkRow> = all.iter().copied().filter(|r| r.both_converged()).collect();
            let stat = |f: &dyn Fn(&BenchmarkRow) -> f64| Stats::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            Some(CategorySummary {
                category: cat,
                instances: all.len(),
                failures: all.len() - ok.len(),
                cold_cost: stat(&|r| r.cold.cost),
                warm_cost: stat(&|r| r.warm.cost),
                cold_iterations: stat(&|r| r.cold.inner_iterations as f64),
                warm_iterations: stat(&|r| r.warm.inner_iterations as f64),
                cold_time: stat(&|r| r.cold.wall_time),
                warm_time: stat(&|r| r.warm.wall_time),
                reduction: stat(&|r| r.reduction()),
                max_cost_gap: ok.iter().map(|r| r.cost_gap()).fold(0.0, f64::max),
            })
        })
        .collect()
}

fn timed<F: Fn() -> Result<GustoReport, GustoError>>(f: F, reps: usize) -> Result<RunStats, GustoError> {
    let start = Instant::now();
    let mut rep = f()?;
    for _ in 1..reps {
        rep = f()?;
    }
    Ok(RunStats::from_report(&rep, start.elapsed().as_secs_f64() / reps as f64))
}

/// Runs every instance cold and then warm with the same configuration.
/// Rows come back sorted by category and instance id whatever `jobs` is.
pub fn run_benchmark(
    suites: &[BenchmarkSuite],
    model: &Mlp,
    cfg: &GustoConfig,
    jobs: usize,
) -> Result<Vec<BenchmarkRow>, GustoError> {
    let work: Vec<(&BenchmarkSuite, &Instance)> =
        suites.iter().flat_map(|s| s.instances.iter().map(move |i| (s, i))).collect();
    let run = || {
        work.par_iter()
            .map(|(suite, inst)| {
                let reps = suite.repetitions.max(1);
                Ok(BenchmarkRow {
                    id: inst.id,
                    category: suite.category,
                    problem_hash: inst.hash(),
                    cold: timed(|| solve_cold(&inst.params, cfg), reps)?,
                    warm: timed(|| solve_warm(&inst.params, model, cfg), reps)?,
                })
            })
            .collect::<Result<Vec<_>, GustoError>>()
    };
    let mut rows = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }?;
    rows.sort_by_key(|r| (r.category, r.id));
    Ok(rows)
}
