//! A few benchmark replications with the summary table printed as CSV.

use survowl::eval::{run_benchmark, write_summary_csv, BenchmarkConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = BenchmarkConfig {
        scenarios: vec![1, 4],
        reps: 5,
        n_test: 5_000,
        calibration_draws: 20_000,
        seed: 42,
        ..BenchmarkConfig::default()
    };
    let run = run_benchmark(&config)?;
    for (id, rate, intercept) in &run.intercepts {
        println!("# scenario {id}: censoring {rate} at intercept {intercept:.4}");
    }
    write_summary_csv(&run, std::io::stdout().lock())?;
    Ok(())
}
