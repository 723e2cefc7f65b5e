//! Optimizer steps against hand traces, reference implementations and
//! algebraic properties.

use ausam::data::{make_quadratic_problem, make_two_moons, EpochPlan, QuadraticSpec};
use ausam::model::{Gradient, MiniBatch, Model, ParamVector, Quadratic, Sample, Target};
use ausam::optim::{
    ausam_step, sam_perturbation, sam_step, sgd_step, OptimizerConfig, OptimizerState, Schedule,
};
use ausam::sampler::{subset_size, Sampler, SamplerConfig, Strategy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn ausam_step_reproduces_the_hand_trace() {
    let golden: Value =
        serde_json::from_str(include_str!("golden/ausam_k4_trace.json")).unwrap();

    // The trace was worked out from these raw uniforms; pin the stream.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for u in floats(&golden["uniforms"]) {
        assert_eq!(rng.random::<f64>(), u);
    }

    let samples: Vec<Sample> = golden["offsets"]
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(id, o)| Sample::new(id, floats(o), Target::Value(0.0)))
        .collect();
    let batch = MiniBatch::from_slice(&samples).unwrap();
    let model = Model::quadratic(Quadratic::diagonal(&floats(&golden["A_diag"]), vec![0.0, 0.0]));
    let mut sampler = Sampler::new(
        SamplerConfig { alpha: 0.5, s_min: 0.1, s_max: 0.5, e_start: 10, seed: 7 },
        Strategy::Adlp,
    )
    .unwrap();
    for (id, s) in floats(&golden["table_before"]).into_iter().enumerate() {
        sampler.table.push(id, s).unwrap();
    }
    let cfg = OptimizerConfig {
        base_lr: 0.1,
        momentum: 0.9,
        weight_decay: 0.01,
        rho: 0.1,
        total_epochs: 20,
        schedule: Schedule::Constant,
    };
    let mut state = OptimizerState::new(2);
    state.epoch = 10;

    let scores = sampler.probabilities(&batch, 10);
    for (a, b) in scores.normalized.iter().zip(floats(&golden["normalized"])) {
        assert!(close(*a, b));
    }
    for (a, b) in scores.probabilities.iter().zip(floats(&golden["probabilities"])) {
        assert!(close(*a, b));
    }

    let mut w = ParamVector(floats(&golden["w0"]));
    let rec = ausam_step(&model, &mut w, &batch, &cfg, &mut sampler, &mut state).unwrap();
    let want_ids: Vec<usize> = golden["selected_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    assert_eq!(rec.selected_ids, want_ids);
    assert!(close(rec.grad_norm, Gradient(floats(&golden["subset_gradient"])).norm()));
    assert!(close(
        rec.perturbed_grad_norm.unwrap(),
        Gradient(floats(&golden["perturbed_gradient"])).norm()
    ));
    for (a, b) in w.iter().zip(floats(&golden["w1"])) {
        assert!(close(*a, b), "{a} vs {b}");
    }
    for (a, b) in state.momentum.iter().zip(floats(&golden["perturbed_gradient"])) {
        assert!(close(*a, b));
    }
    for (id, entry) in golden["table_after"].as_object().unwrap() {
        let got = sampler.table.get(id.parse().unwrap()).unwrap();
        assert!(close(got.mean, entry["mean"].as_f64().unwrap()));
        assert_eq!(got.count as u64, entry["count"].as_u64().unwrap());
    }
    assert_eq!((rec.forward_samples, rec.backward_samples), (4, 4));

    // ε̂ from the golden trace is the scaled subset gradient.
    let eps = sam_perturbation(&Gradient(floats(&golden["subset_gradient"])), 0.1).unwrap();
    for (a, b) in eps.iter().zip(floats(&golden["epsilon"])) {
        assert!(close(*a, b));
    }
}

fn moons_setup() -> (Model, ausam::data::Dataset, OptimizerConfig) {
    let data = make_two_moons(256, 0.2, 3).unwrap();
    let model = Model::mlp(vec![2, 16, 16, 2]).unwrap();
    let cfg = OptimizerConfig {
        total_epochs: 10,
        ..OptimizerConfig::default()
    };
    (model, data, cfg)
}

#[test]
fn full_fraction_ausam_tracks_sam_exactly() {
    let (model, data, cfg) = moons_setup();
    let mut w_sam = model.init_params(1);
    let mut w_ausam = w_sam.clone();
    let (mut s_sam, mut s_ausam) = (OptimizerState::new(w_sam.len()), OptimizerState::new(w_sam.len()));
    let mut sampler = Sampler::new(SamplerConfig { alpha: 1.0, ..SamplerConfig::default() }, Strategy::Adlp).unwrap();
    let mut steps = 0;
    'outer: for epoch in 0..10 {
        s_sam.epoch = epoch;
        s_ausam.epoch = epoch;
        for batch in EpochPlan::new(data.len(), 32, 1, epoch).unwrap().batches(&data).unwrap() {
            sam_step(&model, &mut w_sam, &batch, &cfg, &mut s_sam).unwrap();
            ausam_step(&model, &mut w_ausam, &batch, &cfg, &mut sampler, &mut s_ausam).unwrap();
            for (a, b) in w_sam.iter().zip(w_ausam.iter()) {
                assert!((a - b).abs() <= 1e-12, "step {steps}: {a} vs {b}");
            }
            steps += 1;
            if steps == 50 {
                break 'outer;
            }
        }
    }
    assert_eq!(steps, 50);
}

#[test]
fn sam_step_matches_a_two_pass_reference() {
    let (model, data, cfg) = moons_setup();
    let mut w = model.init_params(2);
    let mut state = OptimizerState::new(w.len());
    let mut w_ref = w.clone();
    let mut v_ref = vec![0.0; w.len()];
    for batch in EpochPlan::new(data.len(), 64, 2, 0).unwrap().batches(&data).unwrap() {
        sam_step(&model, &mut w, &batch, &cfg, &mut state).unwrap();

        let g1 = model.batch_gradient(&w_ref, &batch).unwrap();
        let n1 = g1.iter().map(|x| x * x).sum::<f64>().sqrt();
        let probe = ParamVector(w_ref.iter().zip(g1.iter()).map(|(w, g)| w + cfg.rho * g / n1).collect());
        let g2 = model.batch_gradient(&probe, &batch).unwrap();
        let lr = cfg.lr_at(0);
        for i in 0..w_ref.len() {
            v_ref[i] = cfg.momentum * v_ref[i] + g2[i];
            w_ref[i] -= lr * (v_ref[i] + cfg.weight_decay * w_ref[i]);
        }
        for (a, b) in w.iter().zip(w_ref.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn sgd_converges_on_the_unit_quadratic() {
    let model = Model::quadratic(Quadratic::diagonal(&[1.0, 1.0, 1.0], vec![1.0, -2.0, 0.5]));
    let samples = vec![Sample::new(0, vec![0.0; 3], Target::Value(0.0))];
    let batch = MiniBatch::from_slice(&samples).unwrap();
    let cfg = OptimizerConfig {
        base_lr: 0.1,
        momentum: 0.0,
        weight_decay: 0.0,
        rho: 0.1,
        total_epochs: 1,
        schedule: Schedule::Constant,
    };
    let mut w = ParamVector(vec![5.0, 5.0, 5.0]);
    let mut state = OptimizerState::new(3);
    let target = [1.0, -2.0, 0.5];
    for _ in 0..200 {
        sgd_step(&model, &mut w, &batch, &cfg, &mut state).unwrap();
    }
    let dist = w.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(dist < 1e-6, "{dist}");
}

fn plain(lr: f64, rho: f64) -> OptimizerConfig {
    OptimizerConfig {
        base_lr: lr,
        momentum: 0.0,
        weight_decay: 0.0,
        rho,
        total_epochs: 1,
        schedule: Schedule::Constant,
    }
}

proptest! {
    #[test]
    fn perturbation_has_norm_rho(g in proptest::collection::vec(-10.0f64..10.0, 1..20), rho in 1e-4f64..1.0) {
        let g = Gradient(g);
        prop_assume!(g.norm() > 1e-6);
        let e = sam_perturbation(&g, rho).unwrap();
        prop_assert!((e.norm() - rho).abs() <= 1e-12);
    }

    #[test]
    fn perturbation_raises_quadratic_batch_loss(seed in any::<u64>(), rho in 1e-6f64..1e-3) {
        let (model, data) = make_quadratic_problem(&QuadraticSpec::new(4, 10.0, seed)).unwrap();
        let batch = data.as_batch().unwrap();
        let w = model.init_params(seed ^ 1);
        let g = model.batch_gradient(&w, &batch).unwrap();
        prop_assume!(g.norm() > 1e-3);
        let eps = sam_perturbation(&g, rho).unwrap();
        prop_assert!(model.batch_loss(&w.offset_by(&eps), &batch).unwrap() >= model.batch_loss(&w, &batch).unwrap());
    }

    #[test]
    fn gradient_steps_contract_below_one_over_tau(seed in any::<u64>(), frac in 0.05f64..1.0) {
        let (model, data) = make_quadratic_problem(&QuadraticSpec::new(5, 20.0, seed)).unwrap();
        let Model::Quadratic(q) = &model else { unreachable!() };
        let target = q.minimizer(&data.feature_mean()).unwrap();
        let batch = data.as_batch().unwrap();
        let cfg = plain(frac / q.smoothness(), 0.1);
        let mut w = model.init_params(seed);
        let mut state = OptimizerState::new(w.len());
        let dist = |w: &ParamVector| w.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        for _ in 0..10 {
            let before = dist(&w);
            sgd_step(&model, &mut w, &batch, &cfg, &mut state).unwrap();
            prop_assert!(dist(&w) <= before * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn evaluation_counts_follow_the_step_law(k in 2usize..40, alpha in 0.05f64..1.0, seed in any::<u64>()) {
        let data = make_two_moons(40, 0.2, seed).unwrap();
        let model = Model::logistic(2, 2).unwrap();
        let batch = MiniBatch::new(data.samples()[..k].iter().collect()).unwrap();
        let cfg = plain(0.1, 0.05);
        let w0 = model.init_params(0);
        let mut sampler = Sampler::new(SamplerConfig { alpha, seed, ..SamplerConfig::default() }, Strategy::Adlp).unwrap();
        let n = subset_size(alpha, k) as u64;
        let (mut w, mut st) = (w0.clone(), OptimizerState::new(2));
        let r = ausam_step(&model, &mut w, &batch, &cfg, &mut sampler, &mut st).unwrap();
        // Logistic regression at w = 0 has a nonzero gradient on two-moons.
        prop_assert!(!r.zero_gradient);
        prop_assert_eq!((r.forward_samples, r.backward_samples), (2 * n, 2 * n));
        prop_assert_eq!(r.selected_ids.len() as u64, n);
        let (mut w, mut st) = (w0.clone(), OptimizerState::new(2));
        let r = sam_step(&model, &mut w, &batch, &cfg, &mut st).unwrap();
        prop_assert_eq!(r.forward_samples, 2 * k as u64);
        let (mut w, mut st) = (w0, OptimizerState::new(2));
        let r = sgd_step(&model, &mut w, &batch, &cfg, &mut st).unwrap();
        prop_assert_eq!(r.backward_samples, k as u64);
    }
}
