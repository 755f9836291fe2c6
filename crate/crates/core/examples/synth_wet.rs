//! Writes a synthetic WET file and matching badword list.
//!
//! Usage: synth_wet <out.wet> <badwords.txt> [target-bytes] [seed]

use std::fs::File;
use std::io::BufWriter;

use c5_core::synth::{badword_list_text, write_synthetic_wet, SynthConfig};

fn main() -> std::io::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 3 {
        eprintln!("usage: synth_wet <out.wet> <badwords.txt> [target-bytes] [seed]");
        std::process::exit(1);
    }
    let mut cfg = SynthConfig::default();
    if let Some(b) = args.get(3) {
        cfg.target_bytes = b.parse().expect("target-bytes");
    }
    if let Some(s) = args.get(4) {
        cfg.seed = s.parse().expect("seed");
    }
    let summary = write_synthetic_wet(BufWriter::new(File::create(&args[1])?), &cfg)?;
    std::fs::write(&args[2], badword_list_text())?;
    eprintln!("{} records, {} bytes", summary.records, summary.bytes);
    Ok(())
}
