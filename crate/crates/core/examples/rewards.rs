//! Reward vectors R1 and R2 and the weighted classification problem built from them.

use survowl::rewards::{build_problem, reward_r1, reward_r2};
use survowl::rist::{fit_rist, RistParams};
use survowl::sim::{generate, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = generate(&ScenarioSpec::new(2)?, 200, 8)?;
    let data = sim.dataset.to_log_scale()?;
    let model = fit_rist(&data, &RistParams { seed: 2, ..RistParams::default() })?;
    let r1 = reward_r1(&model, &data)?;
    let r2 = reward_r2(&model, &data)?;

    println!("row  event  log Y    R1       R2");
    for (i, r) in data.records().iter().take(6).enumerate() {
        println!("{i:<4} {:<6} {:<8.3} {:<8.3} {:.3}", u8::from(r.event), r.time, r1[i], r2[i]);
    }
    let problem = build_problem(&data, &r2)?;
    let flipped = data.records().iter().zip(&problem.labels).filter(|(r, l)| r.treatment != **l).count();
    println!("R2 problem: n={} flipped labels={flipped} offset={:.3}", problem.len(), problem.offset);
    Ok(())
}
