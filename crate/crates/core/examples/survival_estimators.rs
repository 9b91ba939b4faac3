//! Nelson-Aalen hazard, survival curve and restricted means on a toy sample.

use survowl::survival::{conditional_restricted_mean, hazard_to_survival, nelson_aalen, restricted_mean};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let times = [1.0, 2.0, 2.0, 3.0, 4.5, 5.0];
    let events = [true, true, false, true, false, true];
    let tau = 6.0;

    let hazard = nelson_aalen(&times, &events)?;
    let curve = hazard_to_survival(&hazard, tau)?;
    println!("t      Lambda(t)  S(t)");
    for t in [0.5, 1.0, 2.0, 3.0, 5.0] {
        println!("{t:<6} {:<10.4} {:.4}", hazard.eval(t), curve.eval(t));
    }
    println!("E min(T, {tau})           = {:.4}", restricted_mean(&curve));
    println!("E min(T, {tau}) | T > 2.5 = {:.4}", conditional_restricted_mean(&curve, 2.5)?);
    Ok(())
}
