//! Synthetic stand-in for a two-arm lung cancer trial.
//!
//! The records are generated, not observed. Covariate encodings:
//!
//! | column | meaning            | values                                   |
//! |--------|--------------------|------------------------------------------|
//! | `x1`   | performance status | 0, 1, 2 (ECOG-like; 30% / 50% / 20%)     |
//! | `x2`   | cancer stage       | 0 = IIIB, 1 = IV (60% IV)                |
//! | `x3`   | race               | 1 = white, 0 = other (85% white)         |
//! | `x4`   | gender             | 1 = female, 0 = male (36% female)        |
//! | `x5`   | age in years       | integers in [31, 82], median near 63     |
//!
//! Times are in weeks with horizon 104. Arms hold exactly 114 records each.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::dataset::{write_dataset, Record, Scale, SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::rng::{substream, tag};

pub const EXAMPLE_N: usize = 228;
pub const EXAMPLE_TAU: f64 = 104.0;
pub const AGE_RANGE: (f64, f64) = (31.0, 82.0);

/// Draws the synthetic trial for `seed`.
pub fn generate_example_dataset(seed: u64) -> Result<SurvivalDataset> {
    let mut arms: Vec<Treatment> =
        (0..EXAMPLE_N).map(|i| if i < EXAMPLE_N / 2 { Treatment::Plus } else { Treatment::Minus }).collect();
    arms.shuffle(&mut substream(seed, &[tag::CORPUS, 0]));
    let records = arms
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut rng = substream(seed, &[tag::CORPUS, 1, i as u64]);
            let u: f64 = rng.random();
            let ps = if u < 0.3 {
                0.0
            } else if u < 0.8 {
                1.0
            } else {
                2.0
            };
            let stage = f64::from(u8::from(rng.random_bool(0.6)));
            let race = f64::from(u8::from(rng.random_bool(0.85)));
            let female = f64::from(u8::from(rng.random_bool(0.36)));
            let z: f64 = StandardNormal.sample(&mut rng);
            let age = (63.0 + 9.0 * z).round().clamp(AGE_RANGE.0, AGE_RANGE.1);
            // weekly hazard; the arm effect reverses with performance status
            let log_rate =
                -4.0 + 0.45 * ps + 0.3 * stage - 0.1 * female + 0.015 * (age - 63.0) + a.value() * (0.3 - 0.35 * ps);
            let e: f64 = Exp1.sample(&mut rng);
            let t = e / log_rate.exp();
            let entry_censor = rng.random_range(40.0..EXAMPLE_TAU);
            let dropout = <Exp1 as Distribution<f64>>::sample(&Exp1, &mut rng) * 250.0;
            let c = entry_censor.min(dropout);
            let y = ((t.min(c).min(EXAMPLE_TAU) * 10.0).round() / 10.0).max(0.1);
            Record {
                covariates: vec![ps, stage, race, female, age],
                treatment: a,
                time: y,
                event: t <= c && t <= EXAMPLE_TAU,
                propensity: 0.5,
            }
        })
        .collect();
    SurvivalDataset::new(records, EXAMPLE_TAU, Scale::Natural)
}

/// Writes the dataset with a header comment marking it synthetic.
pub fn write_example_csv<W: Write>(dataset: &SurvivalDataset, seed: u64, mut writer: W) -> Result<()> {
    writeln!(
        writer,
        "# SYNTHETIC data generated by survowl::corpus (seed={seed}); not patient records.\n\
         # x1=performance status (0,1,2) x2=stage (0=IIIB,1=IV) x3=race (1=white) x4=gender (1=female) x5=age; weeks"
    )
    .map_err(|e| Error::io("<corpus>", e))?;
    write_dataset(dataset, writer)
}
