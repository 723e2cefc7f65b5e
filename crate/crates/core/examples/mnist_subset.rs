//! SAM vs AUSAM-0.5 on a 4000/1000 MNIST subset with a 784-64-10 MLP.
//! Needs the IDX files (`train-images-idx3-ubyte`, `train-labels-idx1-ubyte`)
//! in `$AUSAM_MNIST_DIR` or `data/mnist`; exits quietly without them.
//!
//!     AUSAM_MNIST_DIR=~/mnist cargo run --release --example mnist_subset

use std::path::PathBuf;

use ausam::harness::{compare, Method, RunConfig};

const CONFIG: &str = include_str!("../configs/mnist_subset.toml");

fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("AUSAM_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data/mnist"));
    dir.join("train-images-idx3-ubyte").exists().then_some(dir)
}

fn main() -> ausam::Result<()> {
    let Some(dir) = mnist_dir() else {
        println!("MNIST IDX files not found; set AUSAM_MNIST_DIR to run this example");
        return Ok(());
    };
    let sam = RunConfig::from_toml_str(CONFIG, &dir.join("mnist_subset.toml"))?;
    let mut ausam = sam.clone();
    ausam.method = Method::Ausam;
    let report = compare(&[sam, ausam], None)?;
    print!("{}", report.to_table());
    Ok(())
}
