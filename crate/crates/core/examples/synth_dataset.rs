//! Generate a synthetic dataset and write it as JSON lines.
//!
//! cargo run --release --example synth_dataset -- out.jsonl

use std::fs::File;
use std::io::BufWriter;

use eyegaze::dataset::{read_records, write_records};
use eyegaze::synth::{curriculum_difficulty, generate_dataset, DatasetSpec, NoiseSpec};

fn main() -> eyegaze::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "synth.jsonl".into());
    for step in [0, 250_000, 1_000_000] {
        println!("curriculum step {step}: difficulty {}", curriculum_difficulty(step));
    }
    let spec = DatasetSpec::new(5, 200, NoiseSpec::with_difficulty(0.5, 0), 42);
    let records = generate_dataset(&spec)?;
    write_records(BufWriter::new(File::create(&path)?), &records)?;

    let back = read_records(std::io::BufReader::new(File::open(&path)?))?;
    println!("wrote {} records to {path}; read back {} ({} skipped)", records.len(), back.records.len(), back.skipped.len());
    println!("first record: {}", back.records[0].to_json_line());
    Ok(())
}
