//! Solve the weighted hinge-loss dual with SMO and inspect the fit.

use survowl::dataset::Treatment;
use survowl::rewards::WeightedClassificationProblem;
use survowl::svm::{primal_objective, solve_dual, KernelSpec, SolverParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // two overlapping clouds on a line, heavier weight on the right cloud
    let xs: Vec<f64> = (0..40).map(|i| i as f64 / 39.0 * 4.0 - 2.0).collect();
    let problem = WeightedClassificationProblem {
        features: xs.iter().map(|&x| vec![x]).collect(),
        labels: xs.iter().map(|&x| Treatment::from_sign(x + 0.3 * (x * 7.0).sin())).collect(),
        weights: xs.iter().map(|&x| if x > 0.0 { 2.0 } else { 1.0 }).collect(),
        propensities: vec![0.5; xs.len()],
        offset: 0.0,
    };
    for kernel in [KernelSpec::Linear, KernelSpec::gaussian(0.5)?] {
        let fit = solve_dual(&problem, 0.05, &kernel, &SolverParams::default())?;
        let rule = &fit.rule;
        println!(
            "{:<8} sweeps={:<3} dual={:.4} primal={:.4} kkt={:.1e} svs={} b={:.3}",
            kernel.name(),
            fit.trace.len() - 1,
            fit.dual_objective,
            primal_objective(&problem, &fit, &kernel),
            fit.kkt_violation,
            rule.support_points().len(),
            rule.bias()
        );
        let decisions: String =
            [-1.5, -0.5, 0.0, 0.5, 1.5].iter().map(|&x| format!(" D({x})={:+}", rule.decide(&[x]))).collect();
        println!("        {decisions}");
    }
    Ok(())
}
