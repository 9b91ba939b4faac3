//! Regenerates the bundled synthetic trial in `examples/data/lung_synthetic.csv`.

use std::fs::File;
use std::io::BufWriter;

use survowl::corpus::{generate_example_dataset, write_example_csv};

pub const CORPUS_SEED: u64 = 20_140_731;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/lung_synthetic.csv").to_string());
    let data = generate_example_dataset(CORPUS_SEED)?;
    write_example_csv(&data, CORPUS_SEED, BufWriter::new(File::create(&out)?))?;
    let events = data.records().iter().filter(|r| r.event).count();
    println!("wrote {} records ({events} deaths) to {out}", data.len());
    Ok(())
}
