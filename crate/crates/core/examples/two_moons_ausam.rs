//! Full configured run: AUSAM-0.5 on two-moons, written to disk the same way
//! `ausam train` does, then a look at what was written.
//!
//!     cargo run --release --example two_moons_ausam [-- <out dir>]

use std::path::{Path, PathBuf};

use ausam::harness::{train, RunConfig, ADLP_FILE, EPOCHS_FILE, METRICS_FILE};
use ausam::sampler::AdlpTable;

const CONFIG: &str = include_str!("../configs/two_moons_ausam.toml");

fn main() -> ausam::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ausam-two-moons"));
    let cfg = RunConfig::from_toml_str(CONFIG, Path::new("two_moons_ausam.toml"))?;
    let summary = train(&cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);

    let epochs = std::fs::read_to_string(out.join(EPOCHS_FILE)).expect("epochs file");
    for line in epochs.lines().step_by(20) {
        println!("{line}");
    }

    let table = AdlpTable::load(&out.join(ADLP_FILE))?;
    let mut scores: Vec<(usize, f64)> = table.iter().map(|(id, e)| (id, e.mean)).collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("{} samples scored; highest mean loss differences:", table.len());
    for (id, s) in scores.iter().take(5) {
        println!("  sample {id:>4}: {s:.5}");
    }
    println!("metrics: {}", out.join(METRICS_FILE).display());
    Ok(())
}
