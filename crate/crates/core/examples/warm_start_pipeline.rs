//! End to end at toy scale: sample and cold-solve problems, train the
//! network on their polynomial fits, then compare cold and warm solves on
//! fresh problems. Pass a dataset size as the first argument (default 150).

use ffplan::gusto::{solve_cold, solve_warm, GustoConfig};
use ffplan::warmstart::{
    attitude_defect, generate_dataset, instance_rng, predict_trajectory, train_on, EnvMix, Environment, Sampler,
    TrainConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(150);
    let cfg = GustoConfig::default();
    let sampler = Sampler::default();

    let ds = generate_dataset(count, EnvMix::only(Environment::Jem, 0.5), &sampler, &cfg, 11, 1);
    println!("{} records, {} dropped", ds.records.len(), ds.failures);

    let model = train_on(&ds, &TrainConfig { epochs: 100, ..TrainConfig::default() })?;
    println!("loss {:.3} -> {:.3}", model.meta.loss_trace[0], model.meta.final_loss);

    for i in 0..5 {
        let params = sampler.sample(Environment::Jem, i % 2 == 1, &mut instance_rng(12, i))?;
        let guess = predict_trajectory(&model, &params)?;
        let cold = solve_cold(&params, &cfg)?;
        let warm = solve_warm(&params, &model, &cfg)?;
        println!(
            "problem {i}: guess attitude defect {:.1e}; cold {:?} {} iterations cost {:.4}; warm {:?} {} iterations cost {:.4}",
            attitude_defect(&guess, &params),
            cold.status,
            cold.inner_iterations,
            cold.cost,
            warm.status,
            warm.inner_iterations,
            warm.cost
        );
    }
    Ok(())
}
