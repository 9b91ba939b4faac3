//! Drives the command-line front end in-process: simulate, fit, predict, evaluate.

fn main() {
    let dir = std::env::temp_dir().join("survowl_cli_walkthrough");
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec![
            "simulate".into(),
            "--scenario".into(),
            "3".into(),
            "--n".into(),
            "200".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            p("train.csv"),
        ],
        vec![
            "simulate".into(),
            "--scenario".into(),
            "3".into(),
            "--n".into(),
            "200".into(),
            "--seed".into(),
            "8".into(),
            "--out".into(),
            p("heldout.csv"),
        ],
        vec![
            "fit".into(),
            "--data".into(),
            p("train.csv"),
            "--method".into(),
            "rist-r2".into(),
            "--out".into(),
            p("model.json"),
            "--dump-weights".into(),
            p("weights.csv"),
        ],
        vec![
            "predict".into(),
            "--model".into(),
            p("model.json"),
            "--covariates".into(),
            p("heldout.csv"),
            "--out".into(),
            p("decisions.csv"),
        ],
        vec!["evaluate".into(), "--model".into(), p("model.json"), "--data".into(), p("heldout.csv")],
    ];
    for step in steps {
        let code = survowl::cli::run(std::iter::once("survowl".to_string()).chain(step.iter().cloned()));
        println!("survowl {} -> exit {code}", step[0]);
        assert_eq!(code, 0);
    }
    println!("outputs in {}", dir.display());
}
