mod common;

use common::{random_vec, rng};
use ladts::diffusion::{
    action_probs, argmax, forward_diffuse, posterior_mean, select_action, sinusoidal_encode, softmax, BetaSchedule,
    DiffusionActor, DiffusionConfig, NoiseCoeff, SelectMode,
};
use ladts::nn::MlpParams;
use proptest::prelude::*;

// Independent evaluation of the closed forms for I=5 over [0.1, 10].
const BETA_I5: [f64; 5] = [
    0.19587455833344036,
    0.4588181933847971,
    0.6357810204284766,
    0.7548781879608827,
    0.8350313791773686,
];
const LAMBDA_BAR_I5: [f64; 5] = [
    0.8041254416665596,
    0.43517805926635666,
    0.15850010867790834,
    0.03885183384752591,
    0.00640933344625638,
];
const BETA_TILDE_I5: [f64; 5] = [
    0.0,
    0.15911352676537596,
    0.4267416710842787,
    0.6609073767194069,
    0.8077661211934168,
];
// sin/cos pairs of 3 * 10000^(-2k/16), k = 0..8.
const EMBED_3_16: [f64; 16] = [
    0.1411200080598672,
    -0.9899924966004454,
    0.8126488966420368,
    0.5827536107022249,
    0.2955202066613396,
    0.955336489125606,
    0.0947260913327461,
    0.9955033739876628,
    0.02999550020249566,
    0.9995500337489875,
    0.00948669067865079,
    0.999955000337499,
    0.002999995500002025,
    0.999995500003375,
    0.0009486831557480256,
    0.9999995500000337,
];

#[test]
fn schedule_matches_frozen_values() {
    let s = BetaSchedule::new(5, 0.1, 10.0).unwrap();
    for i in 1..=5 {
        assert!((s.beta(i) - BETA_I5[i - 1]).abs() < 1e-14);
        assert!((s.lambda(i) - (1.0 - BETA_I5[i - 1])).abs() < 1e-14);
        assert!((s.lambda_bar(i) - LAMBDA_BAR_I5[i - 1]).abs() < 1e-14);
        assert!((s.beta_tilde(i) - BETA_TILDE_I5[i - 1]).abs() < 1e-14);
    }
}

#[test]
fn schedule_invariants_for_all_small_step_counts() {
    for steps in 1..=10 {
        let s = BetaSchedule::new(steps, 0.1, 10.0).unwrap();
        assert_eq!(s.beta_tilde(1), 0.0);
        for i in 1..=steps {
            assert!(s.beta(i) > 0.0 && s.beta(i) < 1.0);
            assert!(s.beta_tilde(i) >= 0.0);
            assert!(s.lambda_bar(i) < 1.0);
            if i > 1 {
                assert!(s.beta(i) > s.beta(i - 1));
                assert!(s.lambda_bar(i) < s.lambda_bar(i - 1));
            }
        }
    }
}

#[test]
fn embedding_matches_frozen_values() {
    let e = sinusoidal_encode(3, 16).unwrap();
    for (a, b) in e.iter().zip(EMBED_3_16) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(sinusoidal_encode(3, 15).is_err());
}

#[test]
fn forward_then_posterior_mean_recovers_x0() {
    let s = BetaSchedule::new(5, 0.1, 10.0).unwrap();
    let mut r = rng(1);
    for _ in 0..100 {
        let x0 = random_vec(6, 3.0, &mut r);
        let eps = random_vec(6, 2.0, &mut r);
        let x1 = forward_diffuse(&x0, 1, &s, &eps).unwrap();
        let back = posterior_mean(&x1, 1, &s, &eps).unwrap();
        for (a, b) in back.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn denoise_step_matches_term_by_term_evaluation() {
    let cfg = DiffusionConfig::default();
    let (obs_dim, nodes) = (7, 5);
    let mut r = rng(2);
    let dims = DiffusionActor::network_dims(obs_dim, nodes, &cfg, &[20, 20]);
    let net = MlpParams::init(&dims, &mut r).unwrap();
    let actor = DiffusionActor::new(net.clone(), obs_dim, nodes, &cfg).unwrap();
    let s = BetaSchedule::new(5, 0.1, 10.0).unwrap();
    for i in 1..=5 {
        let x = random_vec(nodes, 2.0, &mut r);
        let obs = random_vec(obs_dim, 1.0, &mut r);
        let z = random_vec(nodes, 1.0, &mut r);
        let mut input = obs.clone();
        input.extend_from_slice(&x);
        input.extend(sinusoidal_encode(i, 16).unwrap());
        let eps_theta = net.predict(&input).unwrap();
        let got = actor.denoise_step(&x, i, &obs, &z).unwrap();
        for k in 0..nodes {
            let mean = (1.0 / s.lambda(i).sqrt()) * (x[k] - s.beta(i) / (1.0 - s.lambda_bar(i)).sqrt() * eps_theta[k]);
            let expected = mean + (s.beta_tilde(i) / 2.0) * z[k];
            assert!((got[k] - expected).abs() < 1e-12, "step {i} entry {k}");
        }
    }
}

#[test]
fn sqrt_variance_switch_changes_only_noise_scale() {
    let (obs_dim, nodes) = (4, 3);
    let half = DiffusionConfig::default();
    let sqrt = DiffusionConfig {
        noise_coeff: NoiseCoeff::SqrtVar,
        ..half
    };
    let net = MlpParams::init(&DiffusionActor::network_dims(obs_dim, nodes, &half, &[8]), &mut rng(3)).unwrap();
    let a = DiffusionActor::new(net.clone(), obs_dim, nodes, &half).unwrap();
    let b = DiffusionActor::new(net, obs_dim, nodes, &sqrt).unwrap();
    let x = [0.3, -0.2, 0.1];
    let obs = [0.5; 4];
    let z = [1.0, -1.0, 0.5];
    let bt = a.schedule().beta_tilde(4);
    let da = a.denoise_step(&x, 4, &obs, &z).unwrap();
    let db = b.denoise_step(&x, 4, &obs, &z).unwrap();
    for k in 0..3 {
        assert!(((db[k] - da[k]) - (bt.sqrt() - bt / 2.0) * z[k]).abs() < 1e-12);
    }
}

#[test]
fn chain_replays_bit_identically() {
    let cfg = DiffusionConfig::default();
    let net = MlpParams::init(&DiffusionActor::network_dims(5, 3, &cfg, &[20, 20]), &mut rng(4)).unwrap();
    let actor = DiffusionActor::new(net, 5, 3, &cfg).unwrap();
    let noises = actor.draw_noise(&mut rng(5));
    let a = actor.reverse_chain_with_noise(&[0.1, 0.2, 0.3], &[0.0; 5], &noises).unwrap();
    let b = actor.reverse_chain_with_noise(&[0.1, 0.2, 0.3], &[0.0; 5], &noises).unwrap();
    assert_eq!(a.x0, b.x0);
    assert_eq!(a.steps.len(), 5);
    assert_eq!(a.steps.iter().map(|s| s.step).collect::<Vec<_>>(), vec![5, 4, 3, 2, 1]);
    assert!(a.x0.iter().all(|v| v.abs() <= 5.0));
}

#[test]
fn single_step_chain_is_one_denoise_step() {
    // With one step the single beta is ~0.99, so the clamp would bind.
    let cfg = DiffusionConfig {
        steps: 1,
        clamp: 0.0,
        ..DiffusionConfig::default()
    };
    let net = MlpParams::init(&DiffusionActor::network_dims(4, 2, &cfg, &[6]), &mut rng(6)).unwrap();
    let actor = DiffusionActor::new(net, 4, 2, &cfg).unwrap();
    let x = [0.4, -0.7];
    let obs = [0.1, 0.2, 0.3, 0.4];
    let z = vec![0.9, -0.3];
    let chain = actor.reverse_chain_with_noise(&x, &obs, std::slice::from_ref(&z)).unwrap();
    assert_eq!(chain.x0, actor.denoise_step(&x, 1, &obs, &z).unwrap());
}

#[test]
fn action_probs_examples() {
    assert_eq!(action_probs(&[0.0; 4]).unwrap().probs, vec![0.25; 4]);
    assert!(action_probs(&[0.0, f64::NAN]).is_err());
    let d = action_probs(&[50.0, 0.0, 0.0]).unwrap();
    assert!(d.probs[0] >= 1.0 - 1e-15);
    assert_eq!(d.source_latent, vec![50.0, 0.0, 0.0]);
    let p = action_probs(&[0.1f64.ln(), 0.7f64.ln(), 0.2f64.ln()]).unwrap();
    assert_eq!(select_action(&p, SelectMode::Argmax, &mut rng(0)).index(), 1);
}

proptest! {
    #[test]
    fn softmax_sums_to_one(x in prop::collection::vec(-30.0f64..30.0, 1..25)) {
        let p = softmax(&x);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn softmax_is_shift_invariant(x in prop::collection::vec(-20.0f64..20.0, 1..25), c in -50.0f64..50.0) {
        let p = action_probs(&x).unwrap().probs;
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let q = action_probs(&shifted).unwrap().probs;
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_survives_monotone_maps(x in prop::collection::vec(-5.0f64..5.0, 2..25)) {
        let base = argmax(&x);
        let cube: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        let exp: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let mut r = rng(0);
        for y in [cube, exp] {
            let d = action_probs(&y).unwrap();
            prop_assert_eq!(select_action(&d, SelectMode::Argmax, &mut r).index(), base);
        }
    }
}
