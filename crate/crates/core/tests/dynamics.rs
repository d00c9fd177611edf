use std::f64::consts::PI;

use splaylab::integrate::{
    integrate, integrate_flat, measure_decay_rate, measure_frequency, perturbed_initial_state,
    Perturbation,
};
use splaylab::model::splay_dynamic_state;
use splaylab::splay::{random_splay, twisted_state, SplayState};
use splaylab::{DynamicState, ModelParams, PhaseConfiguration};

fn ks(omega: f64, alpha: f64) -> ModelParams {
    ModelParams::KuramotoSakaguchi {
        omega,
        alpha,
        sigma: 1.0,
    }
}

/// Largest `|phi_i(t) - Omega t - theta_i|` along the run.
fn corotating_residual(state: &SplayState, params: &ModelParams, omega: f64) -> f64 {
    let x0 = splay_dynamic_state(&state.theta, params, 1e-9).unwrap();
    let tr = integrate(&x0, params, 1e-3, 10.0).unwrap();
    let theta = state.theta.phases();
    let mut worst: f64 = 0.0;
    for (t, x) in tr.times.iter().zip(&tr.states) {
        for j in 0..state.n() {
            worst = worst.max((x[j] - omega * t - theta[j]).abs());
        }
    }
    worst
}

#[test]
fn ks_splay_rotates_rigidly() {
    let s = random_splay(7, 1, 11).unwrap();
    assert!(corotating_residual(&s, &ks(0.8, 1.2), 0.8) < 1e-8);
}

#[test]
fn inertia_splay_rotates_rigidly() {
    let params = ModelParams::Inertia {
        m_inertia: 1.0,
        gamma: 0.5,
        p: 2.0,
        sigma: 1.0,
        alpha: 0.7,
    };
    let s = random_splay(6, 1, 5).unwrap();
    assert!(corotating_residual(&s, &params, 4.0) < 1e-8);
}

#[test]
fn adaptive_splay_rotates_rigidly() {
    let (omega, alpha, beta, sigma) = (0.3, 0.4, 1.1, 1.0);
    let params = ModelParams::Adaptive {
        omega,
        epsilon: 0.2,
        alpha,
        beta,
        sigma,
    };
    let s = random_splay(5, 2, 8).unwrap();
    let big_omega = omega + 0.5 * sigma * (beta - alpha).cos();
    assert!(corotating_residual(&s, &params, big_omega) < 1e-7);
}

#[test]
fn measured_frequencies() {
    let s = twisted_state(5, 2).unwrap();
    let x0 = splay_dynamic_state(&s.theta, &ks(1.3, 2.0), 1e-9).unwrap();
    let tr = integrate(&x0, &ks(1.3, 2.0), 1e-3, 5.0).unwrap();
    assert!((measure_frequency(&tr).unwrap() - 1.3).abs() < 1e-6);

    let tr = integrate(&x0, &ks(0.0, 2.0), 1e-3, 5.0).unwrap();
    assert!(measure_frequency(&tr).unwrap().abs() < 1e-12);

    let params = ModelParams::Inertia {
        m_inertia: 1.0,
        gamma: 0.5,
        p: 2.0,
        sigma: 1.0,
        alpha: 2.5,
    };
    let x0 = splay_dynamic_state(&s.theta, &params, 1e-9).unwrap();
    let tr = integrate(&x0, &params, 1e-3, 5.0).unwrap();
    assert!((measure_frequency(&tr).unwrap() - 4.0).abs() < 1e-5);
}

fn decay_rate(state: &SplayState, params: &ModelParams, m: u32, kind: Perturbation, t_end: f64) -> f64 {
    let x0 = perturbed_initial_state(state, params, m, 1e-4, kind).unwrap();
    let tr = integrate_flat(params, state.n(), x0, 1e-3, t_end, 10).unwrap();
    measure_decay_rate(&tr, state, m).unwrap()
}

#[test]
fn ks_decay_rate_at_alpha_pi() {
    let s = twisted_state(4, 1).unwrap();
    let rate = decay_rate(&s, &ks(0.4, PI), 1, Perturbation::Transverse { mix: 0.3 }, 50.0);
    assert!((rate + 0.5).abs() < 0.025, "{rate}");
}

#[test]
fn ks_growth_at_alpha_zero() {
    let s = twisted_state(4, 1).unwrap();
    let rate = decay_rate(&s, &ks(0.4, 0.0), 1, Perturbation::Transverse { mix: 0.3 }, 20.0);
    assert!(rate > 0.0, "{rate}");
    assert!((rate - 0.5).abs() < 0.025, "{rate}");
}

#[test]
fn inertia_defective_decay_rate() {
    // gamma = 2, trL = -2, trL2 = 2: all four nontrivial roots at -1
    let params = ModelParams::Inertia {
        m_inertia: 1.0,
        gamma: 2.0,
        p: 1.0,
        sigma: 2.0,
        alpha: PI,
    };
    let s = twisted_state(4, 1).unwrap();
    // along the eigenvector the Jordan chain is not excited
    let rate = decay_rate(&s, &params, 1, Perturbation::DominantMode, 25.0);
    assert!((rate + 1.0).abs() < 0.1, "{rate}");
    // a phase-only kick excites the chain, and the t e^{-t} factor flattens the fit
    let rate = decay_rate(&s, &params, 1, Perturbation::Transverse { mix: 0.0 }, 25.0);
    assert!(rate < -0.5 && rate > -1.0, "{rate}");
}

#[test]
fn tangent_perturbation_is_neutral() {
    let s = random_splay(6, 1, 21).unwrap();
    let params = ks(0.0, 2.5);
    let size = 1e-6;
    for idx in 0..4 {
        let x0 = perturbed_initial_state(&s, &params, 1, size, Perturbation::Tangent { vector_index: idx }).unwrap();
        let tr = integrate_flat(&params, 6, x0, 1e-3, 10.0, 100).unwrap();
        let theta = s.theta.phases();
        let dev = |x: &[f64]| {
            (0..6)
                .map(|j| {
                    let d = (x[j] - theta[j] + PI).rem_euclid(2.0 * PI) - PI;
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        };
        let d0 = dev(&tr.states[0]);
        let d1 = dev(tr.last());
        assert!((d1 / d0 - 1.0).abs() < 0.01, "vector {idx}: {d0} -> {d1}");
    }
}

#[test]
fn rk4_convergence_order() {
    let params = ks(0.3, 1.0);
    let x0 = DynamicState {
        phases: PhaseConfiguration::new(vec![0.1, 0.9, 2.0, 3.3, 5.0]).unwrap(),
        velocities: None,
        weights: None,
    };
    let finals: Vec<Vec<f64>> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| integrate(&x0, &params, dt, 4.0).unwrap().last().to_vec())
        .collect();
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let order = (diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2])).log2();
    assert!((3.7..=4.3).contains(&order), "{order}");
}
