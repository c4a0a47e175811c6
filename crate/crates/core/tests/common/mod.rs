#![allow(dead_code)]

use ladts::nn::MlpParams;
use ladts::rng::{derive_rng, SimRng};
use ladts::sac::Transition;
use ladts::sim::{Action, Observation};
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> SimRng {
    derive_rng(seed, &[0xfeed])
}

pub fn obs(v: Vec<f64>) -> Observation {
    Observation {
        raw: v.clone(),
        normalized: v,
    }
}

pub fn random_vec(len: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// Transition with random observations and latents of the given widths.
pub fn random_transition(obs_dim: usize, actions: usize, latent_scale: f64, rng: &mut impl Rng) -> Transition {
    Transition {
        obs: obs(random_vec(obs_dim, 1.0, rng)),
        latent: random_vec(actions, latent_scale, rng),
        action: Action::new(rng.random_range(0..actions), actions).unwrap(),
        reward: -rng.random::<f64>(),
        next_obs: obs(random_vec(obs_dim, 1.0, rng)),
        next_latent: random_vec(actions, latent_scale, rng),
        done: false,
    }
}

/// Central-difference check of `analytic` against `f` at every parameter.
/// Entries whose gradient is tiny are compared on an absolute scale.
pub fn check_gradient(params: &MlpParams, analytic: &MlpParams, mut f: impl FnMut(&MlpParams) -> f64) -> f64 {
    let flat = params.to_flat();
    let grad = analytic.to_flat();
    assert_eq!(flat.len(), grad.len());
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for (k, &g) in grad.iter().enumerate() {
        let mut plus = flat.clone();
        plus[k] += FD_STEP;
        probe.set_flat(&plus).unwrap();
        let fp = f(&probe);
        let mut minus = flat.clone();
        minus[k] -= FD_STEP;
        probe.set_flat(&minus).unwrap();
        let fm = f(&probe);
        let numeric = (fp - fm) / (2.0 * FD_STEP);
        let err = (numeric - g).abs() / numeric.abs().max(g.abs()).max(1e-3);
        worst = worst.max(err);
    }
    worst
}
