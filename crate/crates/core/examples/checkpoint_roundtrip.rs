//! Saves weights and a loss-difference table, reads them back, and checks
//! they are bit-identical.
//!
//!     cargo run --release --example checkpoint_roundtrip

use ausam::model::{read_checkpoint, write_checkpoint, Model};
use ausam::sampler::{AdlpTable, ADLP_RECORD_LEN};

fn main() -> ausam::Result<()> {
    let dir = std::env::temp_dir().join("ausam-checkpoint-demo");
    std::fs::create_dir_all(&dir).map_err(|e| ausam::Error::Io { path: dir.clone(), source: e })?;

    let model = Model::mlp(vec![784, 64, 10])?;
    let w = model.init_params(42);
    let ckpt = dir.join("weights.bin");
    write_checkpoint(&ckpt, &w)?;
    let back = read_checkpoint(&ckpt)?;
    let same = w.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("{} params, {} bytes, bit-identical: {same}", w.len(), std::fs::metadata(&ckpt).unwrap().len());

    let mut table = AdlpTable::new();
    for id in (0..1000).step_by(7) {
        table.push(id, (id as f64).sqrt() * 1e-3)?;
        table.push(id, 1.0 / (1.0 + id as f64))?;
    }
    let path = dir.join("adlp.bin");
    table.save(&path)?;
    let loaded = AdlpTable::load(&path)?;
    println!(
        "{} table entries x {ADLP_RECORD_LEN} bytes, equal after reload: {}",
        loaded.len(),
        loaded == table
    );
    Ok(())
}
