//! Fit a treatment-augmented survival forest and query per-arm survival.

use survowl::dataset::Treatment;
use survowl::forest::{fit_forest, ForestParams, SurvivalForest, SurvivalPredictor};
use survowl::sim::{generate, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::new(1)?;
    let sim = generate(&spec, 300, 11)?;
    let params = ForestParams { n_trees: 50, seed: 3, ..ForestParams::default() };
    let forest = fit_forest(&sim.dataset, &params)?;
    println!("trees={} structure={}", forest.trees().len(), &forest.structure_hash()[..16]);

    let x = sim.dataset.records()[0].covariates.clone();
    for a in [Treatment::Plus, Treatment::Minus] {
        let curve = forest.predict_curve(&x, a)?;
        println!(
            "a={a:+}  S(0.5)={:.3}  S(1.0)={:.3}  S(2.0)={:.3}",
            curve.eval(0.5),
            curve.eval(1.0),
            curve.eval(2.0)
        );
    }

    let path = std::env::temp_dir().join("survowl_forest.json");
    forest.save(&path)?;
    let back = SurvivalForest::load(&path)?;
    assert_eq!(back.structure_hash(), forest.structure_hash());
    println!("saved and reloaded {}", path.display());
    Ok(())
}
