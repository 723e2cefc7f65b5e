//! How loss-difference history turns into selection probabilities: score
//! normalization, the warm-up ramp, and inclusion rates of a weighted draw.
//!
//!     cargo run --release --example adlp_sampling

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ausam::model::{MiniBatch, Sample, Target};
use ausam::sampler::{
    batch_probabilities, inclusion_probabilities, subset_size, AdlpTable, SamplerConfig,
};

fn main() -> ausam::Result<()> {
    let samples: Vec<Sample> = (0..8)
        .map(|i| Sample::new(i, vec![0.0], Target::Value(0.0)))
        .collect();
    let batch = MiniBatch::from_slice(&samples)?;

    // Sample i has seen loss differences around 0.01·(i + 1); sample 7
    // has no history yet and is scored with the table mean.
    let mut table = AdlpTable::new();
    for i in 0..7 {
        for k in 0..3 {
            table.push(i, 0.01 * (i + 1) as f64 + 0.001 * k as f64)?;
        }
    }
    let cfg = SamplerConfig::default();
    println!("sample   raw score  | probability at epoch 0, 5, 10");
    let by_epoch: Vec<_> = [0, 5, 10]
        .iter()
        .map(|&e| batch_probabilities(&table, &batch, &cfg, e))
        .collect();
    for i in 0..8 {
        println!(
            "{i:>6} {:>11.4}  | {:.4} {:.4} {:.4}",
            by_epoch[0].raw[i],
            by_epoch[0].probabilities[i],
            by_epoch[1].probabilities[i],
            by_epoch[2].probabilities[i]
        );
    }

    let n = subset_size(cfg.alpha, batch.len());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let inc = inclusion_probabilities(&by_epoch[2].probabilities, n, 20_000, &mut rng)?;
    println!("\nkeeping {n} of {}: inclusion rates after warm-up", batch.len());
    for (i, p) in inc.iter().enumerate() {
        println!("{i:>6} {p:.3} {}", "#".repeat((p * 40.0) as usize));
    }
    println!("sum = {:.3} (= {n})", inc.iter().sum::<f64>());
    Ok(())
}
