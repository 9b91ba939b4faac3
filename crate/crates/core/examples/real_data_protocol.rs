//! Repeated 4-fold evaluation on the bundled synthetic trial.

use survowl::dataset::{load_dataset, LoadOptions};
use survowl::eval::{crossvalidated_real, RealConfig};
use survowl::pipeline::Method;
use survowl::svm::KernelFamily;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/lung_synthetic.csv");
    let data = load_dataset(path, &LoadOptions::default())?.to_log_scale()?;
    println!("{} records, tau={:.3} on the log scale", data.len(), data.tau());
    let config = RealConfig {
        repeats: 5,
        methods: vec![Method::RistR1, Method::RistR2, Method::Ico, Method::Cox],
        kernels: vec![KernelFamily::Linear],
        seed: 1,
        ..RealConfig::default()
    };
    println!("method   kernel  mean    sd");
    for row in crossvalidated_real(&data, &config)? {
        println!("{:<8} {:<7} {:.3}  {:.3}", row.method.name(), row.kernel, row.mean, row.sd);
    }
    Ok(())
}
