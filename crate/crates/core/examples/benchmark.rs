//! Paired cold/warm benchmark on a few instances per category with a
//! network read from the path given as the first argument, e.g. one written
//! by `ffplan train`. Prints the summary table and writes CSV and SVG.

use ffplan::bench::{emit_csv, emit_svg, run_benchmark, summarize, summary_table, SuiteSpec};
use ffplan::gusto::GustoConfig;
use ffplan::warmstart::io::read_model;
use std::fs::File;
use std::io::BufReader;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).ok_or("usage: benchmark <model.ffnn> [instances per category]")?;
    let per: usize = std::env::args().nth(2).map(|s| s.parse()).transpose()?.unwrap_or(5);
    let model = read_model(&mut BufReader::new(File::open(path)?))?;

    let spec = SuiteSpec {
        counts: [per; 4],
        ..SuiteSpec::default()
    };
    let rows = run_benchmark(&spec.build()?, &model, &GustoConfig::default(), 1)?;
    for r in &rows {
        println!(
            "{:>10} {:2}: cold {:5} warm {:5}  reduction {:+.2}  cost gap {:+.4}",
            r.category.name(),
            r.id,
            r.cold.inner_iterations,
            r.warm.inner_iterations,
            r.reduction(),
            r.cost_gap()
        );
    }
    print!("{}", summary_table(&summarize(&rows)));
    std::fs::write("benchmark.csv", emit_csv(&rows, false))?;
    std::fs::write("benchmark.svg", emit_svg(&rows)?)?;
    Ok(())
}
