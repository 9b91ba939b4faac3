//! End-to-end fit of every method on one simulated dataset, scored against the truth.

use survowl::eval::empirical_value;
use survowl::pipeline::{fit_itr, Method, ModelFile, PipelineConfig};
use survowl::sim::{generate, oracle_value, ScenarioSpec};
use survowl::svm::KernelFamily;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::new(3)?;
    let train = generate(&spec, 200, 1)?.dataset.to_log_scale()?;
    let test = generate(&spec, 10_000, 2)?;
    let config = PipelineConfig { seed: 9, ..PipelineConfig::default() };

    println!("optimal value {:.3}", oracle_value(&spec, 100_000, 3)?.value);
    for method in [Method::RistR1, Method::RistR2, Method::Ico, Method::Cox] {
        let model = fit_itr(&train, method, &KernelFamily::Linear, &config)?;
        let value = empirical_value(&model.rule, &test)?;
        println!(
            "{:<8} lambda={:<10} value={value:.3}",
            method.name(),
            model.lambda.map_or("-".into(), |l| format!("{l:.2e}"))
        );
        if method == Method::RistR2 {
            let path = std::env::temp_dir().join("survowl_rule.json");
            model.save(&path)?;
            let back = ModelFile::load(&path)?;
            assert_eq!(
                back.decide(&test.dataset.records()[0].covariates)?,
                model.decide(&test.dataset.records()[0].covariates)?
            );
        }
    }
    Ok(())
}
