//! Central-difference check of every model's analytic batch gradient.
//!
//!     cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ausam::data::{make_quadratic_problem, make_two_moons, QuadraticSpec};
use ausam::model::{MiniBatch, Model, ParamVector};

fn worst_relative_error(model: &Model, w: &ParamVector, batch: &MiniBatch<'_>) -> ausam::Result<f64> {
    let h = 1e-5;
    let g = model.batch_gradient(w, batch)?;
    let mut worst: f64 = 0.0;
    for i in 0..w.len() {
        let mut plus = w.clone();
        let mut minus = w.clone();
        plus[i] += h;
        minus[i] -= h;
        let fd = (model.batch_loss(&plus, batch)? - model.batch_loss(&minus, batch)?) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-8));
    }
    Ok(worst)
}

fn main() -> ausam::Result<()> {
    let moons = make_two_moons(64, 0.2, 3)?;
    let (quad, quad_data) = make_quadratic_problem(&QuadraticSpec::new(6, 20.0, 3))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases = [
        (Model::logistic(2, 2)?, &moons),
        (Model::mlp(vec![2, 16, 16, 2])?, &moons),
        (quad, &quad_data),
    ];
    for (model, data) in &cases {
        let mut w = model.init_params(11);
        for v in w.iter_mut() {
            *v += 0.1 * rng.random::<f64>();
        }
        let err = worst_relative_error(model, &w, &data.as_batch()?)?;
        println!("{:<18} {:>4} params, worst relative error {err:.2e}", model.describe(), w.len());
    }
    Ok(())
}
