//! Cumulative-hazard error of theoretical-mode forests as the sample grows.

use survowl::eval::{consistency_probe, ProbeConfig, Testbed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for testbed in [Testbed::Lipschitz, Testbed::Constant] {
        let config = ProbeConfig { testbed, reps: 8, seed: 7, ..ProbeConfig::default() };
        println!("{testbed:?}");
        for row in consistency_probe(&config)? {
            println!("  n={:<5} k_n={:<3} median sup error={:.4}", row.n, row.k_n, row.median_error);
        }
    }
    Ok(())
}
