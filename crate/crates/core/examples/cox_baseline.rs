//! Cox interaction model as a rule, and inverse-censoring weights from a censoring Cox fit.

use survowl::baselines::{cox_itr, fit_cox, ico_weights, Target};
use survowl::sim::{generate, OraclePolicy, ScenarioSpec};
use survowl::svm::Policy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::new(2)?;
    let data = generate(&spec, 2000, 4)?.dataset.to_log_scale()?;

    let failure = fit_cox(&data, Target::Failure)?;
    println!(
        "failure model: converged={} iterations={} beta={:.3?}",
        failure.converged, failure.iterations, failure.coefficients
    );
    let rule = cox_itr(&failure)?;
    let oracle = OraclePolicy(spec.clone());
    let grid: Vec<[f64; 2]> = (0..50).flat_map(|i| (0..50).map(move |j| [i as f64 / 49.0, j as f64 / 49.0])).collect();
    let agree = grid.iter().filter(|x| rule.decide(&x[..]) == oracle.decide(&x[..])).count();
    println!("agreement with the scenario's optimal rule: {:.1}%", 100.0 * agree as f64 / grid.len() as f64);

    let censor = fit_cox(&data, Target::Censoring)?;
    let w = ico_weights(&data, &censor)?;
    let positive = w.weights.iter().filter(|&&v| v != 0.0).count();
    println!("ICO weights: {positive} nonzero of {}, {} floored", w.weights.len(), w.floored);
    Ok(())
}
