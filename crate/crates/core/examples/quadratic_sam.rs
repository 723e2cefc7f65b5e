//! SGD, SAM and AUSAM on an ill-conditioned random quadratic, stepping the
//! optimizers by hand. Prints the distance to the minimizer every 20 epochs.
//!
//!     cargo run --release --example quadratic_sam

use ausam::data::{make_quadratic_problem, EpochPlan, QuadraticSpec};
use ausam::model::{Model, ParamVector};
use ausam::optim::{ausam_step, sam_step, sgd_step, OptimizerConfig, OptimizerState, Schedule};
use ausam::sampler::{Sampler, SamplerConfig, Strategy};

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn main() -> ausam::Result<()> {
    let mut spec = QuadraticSpec::new(10, 50.0, 7);
    spec.samples = 256;
    let (model, data) = make_quadratic_problem(&spec)?;
    let Model::Quadratic(q) = &model else { unreachable!() };
    let tau = q.smoothness();
    let target = q.minimizer(&data.feature_mean()).expect("A is positive definite");
    println!("d = {}, tau = {tau:.3}, |D| = {}", q.dim, data.len());

    let cfg = OptimizerConfig {
        base_lr: 0.5 / tau,
        momentum: 0.0,
        weight_decay: 0.0,
        rho: 0.05,
        total_epochs: 100,
        schedule: Schedule::Constant,
    };
    let start = model.init_params(1);
    let mut runs: Vec<(&str, ParamVector, OptimizerState)> = ["sgd", "sam", "ausam-0.5"]
        .into_iter()
        .map(|name| (name, start.clone(), OptimizerState::new(start.len())))
        .collect();
    let mut sampler = Sampler::new(SamplerConfig::default(), Strategy::Adlp)?;

    println!("{:>5} {:>12} {:>12} {:>12}", "epoch", runs[0].0, runs[1].0, runs[2].0);
    for epoch in 0..cfg.total_epochs {
        let plan = EpochPlan::new(data.len(), 32, 0, epoch)?;
        for (name, w, state) in runs.iter_mut() {
            state.epoch = epoch;
            for batch in plan.batches(&data)? {
                match *name {
                    "sgd" => sgd_step(&model, w, &batch, &cfg, state)?,
                    "sam" => sam_step(&model, w, &batch, &cfg, state)?,
                    _ => ausam_step(&model, w, &batch, &cfg, &mut sampler, state)?,
                };
            }
        }
        if epoch % 20 == 19 {
            print!("{:>5}", epoch + 1);
            for (_, w, _) in &runs {
                print!(" {:>12.3e}", distance(w, &target));
            }
            println!();
        }
    }
    Ok(())
}
