//! SGD, SAM, AUSAM at several subset fractions, and SAM with uniform subsets,
//! all on the same two-moons split, tabulated by per-sample evaluation cost.
//!
//!     cargo run --release --example compare_methods

use std::path::Path;

use ausam::harness::{compare, Method, RunConfig};

const BASE: &str = include_str!("../configs/two_moons_sam.toml");

fn main() -> ausam::Result<()> {
    let base = RunConfig::from_toml_str(BASE, Path::new("two_moons_sam.toml"))?;
    let mut configs = vec![base.clone()];
    let mut sgd = base.clone();
    sgd.method = Method::Sgd;
    configs.push(sgd);
    for alpha in [0.4, 0.5, 0.6, 0.7] {
        let mut c = base.clone();
        c.method = Method::Ausam;
        c.sampler.alpha = alpha;
        configs.push(c);
    }
    let mut random = base.clone();
    random.method = Method::SamRandom;
    configs.push(random);

    let report = compare(&configs, None)?;
    print!("{}", report.to_table());
    Ok(())
}
