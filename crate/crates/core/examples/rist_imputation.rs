//! Recursively imputed survival trees and the conditional expectations they give.

use survowl::dataset::Treatment;
use survowl::rist::{fit_rist, predict_conditional_expectation, predict_expectation, RistParams};
use survowl::sim::{generate, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::new(3)?;
    let sim = generate(&spec, 200, 5)?;
    let data = sim.dataset.to_log_scale()?;
    let model = fit_rist(&data, &RistParams { seed: 1, ..RistParams::default() })?;
    for c in model.cycles() {
        println!("cycle={} trees={} imputed={}", c.cycle, c.trees, c.imputed);
    }

    let r = &data.records()[0];
    let e = predict_expectation(&model, &r.covariates, r.treatment)?;
    println!("record 0: log-time={:.3} event={} E(T)={e:.3}", r.time, r.event);
    if !r.event {
        let ec = predict_conditional_expectation(&model, &r.covariates, r.treatment, r.time)?;
        println!("          E(T | T > Y)={ec:.3}");
    }
    for a in [Treatment::Plus, Treatment::Minus] {
        println!("arm {a:+}: E(T)={:.3}", predict_expectation(&model, &r.covariates, a)?);
    }
    Ok(())
}
