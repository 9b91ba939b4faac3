//! Choose λ and the Gaussian bandwidth by stratified cross-validation.

use survowl::pipeline::method_weights;
use survowl::pipeline::{fit_reward_model, Method, PipelineConfig};
use survowl::rewards::build_problem;
use survowl::rng::substream;
use survowl::sim::{generate, ScenarioSpec};
use survowl::svm::{fit_with_cv, lambda_grid, KernelFamily, KernelSpec, SolverParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&ScenarioSpec::new(1)?, 200, 21)?.dataset.to_log_scale()?;
    let config = PipelineConfig::default();
    let rist = fit_reward_model(&data, &config)?;
    let problem = build_problem(&data, &method_weights(Method::RistR2, &data, Some(&rist))?)?;

    let grid = lambda_grid(problem.len());
    let mut rng = substream(0, &[1]);
    let (fit, cv) = fit_with_cv(&problem, &KernelFamily::gaussian(), &grid, 10, &SolverParams::default(), &mut rng)?;
    println!("bandwidth  lambda      held-out value");
    for cell in &cv.table {
        let h = match cell.kernel {
            KernelSpec::Gaussian { bandwidth } => bandwidth,
            KernelSpec::Linear => f64::NAN,
        };
        println!("{h:<10.3} {:<11.3e} {:.4}", cell.lambda, cell.value);
    }
    println!(
        "selected {} lambda={:.3e}; refit has {} support points",
        cv.kernel.name(),
        cv.lambda,
        fit.rule.support_points().len()
    );
    Ok(())
}
