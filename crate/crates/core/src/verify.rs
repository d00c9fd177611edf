//! End-to-end checks of the closed-form results against numeric spectra,
//! simulations and construction invariants.
//!
//! Each check runs at full size or, with `quick`, on a reduced sample.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::integrate::{
    integrate, integrate_flat, measure_decay_rate, measure_frequency, perturbed_initial_state,
    Perturbation,
};
use crate::model::{collective_frequency, mean_field, model_jacobian, splay_dynamic_state, ModelParams};
use crate::oracle::{dense_eigenvalues, nontrivial_spectrum, strip_clusters};
use crate::splay::{antipodal_pairs_family, random_splay, splay_tangent_basis, twisted_state, SplayState};
use crate::stability::{
    adaptive_quartic, adaptive_quartic_coeffs, classify_planar, hopf_boundary, inertia_eigenvalues,
    inertia_eigenvalues_nested, inertia_quartic, ks_inertia_report, ks_traces, max_real_part,
    tangent_kernel_check, BoundaryQuery, Classification, TraceSet,
};
use crate::sweep::{run_sweep, Axis, SweepConfig, SweepModel};

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const CHECKS: [(u32, &str); 8] = [
    (1, "reduced characteristic polynomial of KS splay Jacobians"),
    (2, "KS splay stability sign and imaginary parts"),
    (3, "inertia quartic vs nested radicals, Hopf surface residuals"),
    (4, "KS-inertia quartic vs 8x8 spectrum, stable area growth in gamma"),
    (5, "adaptive spectrum decomposition and quartic roots"),
    (6, "simulated decay rates and collective frequencies"),
    (7, "sigma rescaling invariance"),
    (8, "splay construction invariants"),
];

pub fn run_check(id: u32, quick: bool) -> CheckOutcome {
    let title = CHECKS
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown check", |(_, t)| t);
    let start = Instant::now();
    let result = match id {
        1 => check_reduced_polynomial(quick),
        2 => check_ks_stability(quick),
        3 => check_inertia_quartic(quick),
        4 => check_ks_inertia_sections(quick),
        5 => check_adaptive(quick),
        6 => check_simulations(quick),
        7 => check_sigma_rescaling(quick),
        8 => check_splay_construction(quick),
        _ => Ok((false, format!("no check with id {id}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        id,
        title,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(quick: bool) -> Vec<CheckOutcome> {
    CHECKS.iter().map(|(id, _)| run_check(*id, quick)).collect()
}

type Verdict = Result<(bool, String)>;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn ks(alpha: f64, sigma: f64) -> ModelParams {
    ModelParams::KuramotoSakaguchi {
        omega: 0.0,
        alpha,
        sigma,
    }
}

fn check_reduced_polynomial(quick: bool) -> Verdict {
    let per_n = if quick { 20 } else { 100 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    let mut worst_sum: f64 = 0.0;
    let mut worst_prod: f64 = 0.0;
    let mut cases = 0;
    for n in [3usize, 5, 8, 13, 20] {
        for _ in 0..per_n {
            let state = random_splay(n, 1, rng.gen())?;
            let params = ks(rng.gen_range(0.0..TAU), 1.0);
            let blocks = model_jacobian(&state.theta, &params, state.tol)?;
            let ev = dense_eigenvalues(&blocks.l)?;
            let zero_tol = 1e-8 * blocks.l.norm();
            let zeros = ev.iter().filter(|z| z.norm() < zero_tol).count();
            let rest = strip_clusters(&ev, &[(Complex64::new(0.0, 0.0), n - 2)]);
            let t = blocks.traces;
            let sum = rest[0] + rest[1];
            let prod = rest[0] * rest[1];
            let es = rel_err(sum.re, t.tr_l).max(sum.im.abs());
            let ep = rel_err(prod.re, t.determinant_term()).max(prod.im.abs());
            worst_sum = worst_sum.max(es);
            worst_prod = worst_prod.max(ep);
            if zeros != n - 2 || es > 1e-9 || ep > 1e-9 {
                failures += 1;
            }
            cases += 1;
        }
    }
    Ok((
        failures == 0,
        format!("{cases} Jacobians, {failures} failures, worst sum err {worst_sum:.1e}, worst product err {worst_prod:.1e}"),
    ))
}

fn check_ks_stability(quick: bool) -> Verdict {
    let per_alpha = if quick { 5 } else { 20 };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut cases, mut mismatches, mut imag_checked) = (0, 0, 0);
    let mut worst_imag: f64 = 0.0;
    for k in 1..40 {
        let alpha = 0.05 * PI * k as f64;
        if alpha.cos().abs() < 1e-3 {
            continue;
        }
        for _ in 0..per_alpha {
            let state = random_splay(6, 1, rng.gen())?;
            let blocks = model_jacobian(&state.theta, &ks(alpha, 1.0), state.tol)?;
            let rest = nontrivial_spectrum(&blocks)?;
            let oracle_stable = max_real_part(&rest) < 0.0;
            if oracle_stable != (alpha.cos() < 0.0) {
                mismatches += 1;
            }
            let gap = alpha.sin().powi(2) - state.r2 * state.r2;
            if gap > 0.0 {
                let want = 0.5 * gap.sqrt();
                for z in &rest {
                    let e = (z.im.abs() - want).abs();
                    worst_imag = worst_imag.max(e);
                    if e > 1e-9 {
                        mismatches += 1;
                    }
                }
                imag_checked += 1;
            }
            cases += 1;
        }
    }
    Ok((
        mismatches == 0,
        format!("{cases} states, {mismatches} mismatches, imaginary parts checked on {imag_checked}, worst {worst_imag:.1e}"),
    ))
}

/// Sort roots for comparison, with real-part ties broken by imaginary part.
fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

/// Largest distance under the best pairing of two 4-element sets.
fn set_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    let idx = [0usize, 1, 2, 3];
    // all 24 permutations of four elements
    for p in permutations4(idx) {
        let d = (0..4).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max);
        best = best.min(d);
    }
    best
}

fn permutations4(v: [usize; 4]) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [v[a], v[b], v[c], v[d]];
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn check_inertia_quartic(quick: bool) -> Verdict {
    let count = if quick { 60 } else { 200 };
    let mut worst: f64 = 0.0;
    let mut class_mismatch = 0;
    let mut worst_hopf: f64 = 0.0;
    let mut linear_residuals: Vec<(f64, f64)> = Vec::new();
    for gamma in [0.1, 0.5, 1.0, 5.0] {
        let tr_axis = Axis { name: "trL".into(), min: -3.0, max: 3.0, count };
        let tr2_axis = Axis { name: "trL2".into(), min: -3.0, max: 6.0, count };
        for i in 0..count {
            let tr = tr_axis.value(i);
            for j in 0..count {
                let t = TraceSet::plain(tr, tr2_axis.value(j));
                let q = inertia_eigenvalues(gamma, &t)?.to_vec();
                let nested = inertia_eigenvalues_nested(gamma, &t).to_vec();
                let d = set_distance(&sorted(q.clone()), &sorted(nested.clone()));
                worst = worst.max(d);
                let cq = crate::stability::classify_eigenvalues(&q);
                let cn = crate::stability::classify_eigenvalues(&nested);
                if cq != cn {
                    class_mismatch += 1;
                }
            }
            if tr < 0.0 {
                let p = hopf_boundary(BoundaryQuery::InertiaGeneric { gamma, tr_l: tr })?;
                worst_hopf = worst_hopf.max(p.residual);
            }
        }
        let p = hopf_boundary(BoundaryQuery::InertiaGeneric { gamma, tr_l: -1.0 })?;
        worst_hopf = worst_hopf.max(p.residual);
        linear_residuals.push((gamma, p.linear_variant_residual));
    }
    let reference = hopf_boundary(BoundaryQuery::InertiaGeneric { gamma: 0.5, tr_l: -1.0 })?;
    let reference_ok = (reference.linear_variant_residual - 0.125).abs() < 1e-12;
    let lin: Vec<String> = linear_residuals
        .iter()
        .map(|(g, r)| format!("g={g}: {r:.3e}"))
        .collect();
    Ok((
        worst < 1e-9 && class_mismatch == 0 && worst_hopf < 1e-9 && reference_ok,
        format!(
            "max root discrepancy {worst:.1e}, {class_mismatch} class mismatches, max Hopf residual {worst_hopf:.1e}; damping-linear variant residual at trL=-1: {}",
            lin.join(", ")
        ),
    ))
}

fn check_ks_inertia_sections(quick: bool) -> Verdict {
    let count = if quick { 30 } else { 100 };
    let band = 1e-4;
    let mut areas = Vec::new();
    let mut mismatches = 0;
    let mut compared = 0;
    for gamma in [0.1, 0.5, 1.0, 3.0] {
        let config = SweepConfig {
            model: SweepModel::KsInertia,
            axes: vec![
                Axis { name: "alpha".into(), min: 0.0, max: TAU, count },
                Axis { name: "delta".into(), min: 0.0, max: 0.5 * PI, count },
            ],
            fixed: [("gamma".to_string(), gamma)].into_iter().collect(),
            state: None,
            oracle: true,
            output: None,
            jobs: None,
        };
        let rows = run_sweep(&config)?;
        let mut stable = 0;
        for row in &rows {
            if row.classification.is_stable() {
                stable += 1;
            }
            if row.max_real_part.abs() < band {
                continue;
            }
            compared += 1;
            let oracle = row.oracle_max_re.unwrap_or(f64::NAN);
            if (row.max_real_part < 0.0) != (oracle < 0.0) {
                mismatches += 1;
            }
        }
        areas.push((gamma, stable));
    }
    let monotone = areas.windows(2).all(|w| w[1].1 >= w[0].1);
    let desc: Vec<String> = areas.iter().map(|(g, a)| format!("g={g}: {a}")).collect();
    Ok((
        mismatches == 0 && monotone,
        format!(
            "{compared} points outside band, {mismatches} mismatches; stable points {}",
            desc.join(", ")
        ),
    ))
}

/// Spectrum structure of the adaptive Jacobian at one state.
pub struct AdaptiveDecomposition {
    pub zero_count: usize,
    pub minus_eps_count: usize,
    pub quartic_distance: f64,
    pub tangent_in_kernel: bool,
    pub kernel_residual: f64,
}

/// Relative tolerance for counting eigenvalues at `-eps`. The `-eps`
/// eigenvalue is defective, so computed copies scatter by about 1e-8.
pub const MINUS_EPS_TOL: f64 = 1e-7;

pub fn adaptive_decomposition(state: &SplayState, params: &ModelParams) -> Result<AdaptiveDecomposition> {
    let ModelParams::Adaptive { epsilon, .. } = *params else {
        return Err(crate::error::Error::WrongModel {
            expected: "adaptive",
            got: params.name(),
        });
    };
    let n = state.n();
    let blocks = model_jacobian(&state.theta, params, state.tol)?;
    let basis = splay_tangent_basis(&state.theta, 2)?;
    let check = tangent_kernel_check(&blocks, &basis, 1e-10);
    let full: DMatrix<f64> = blocks.full_matrix();
    let ev = dense_eigenvalues(&full)?;
    let zero_tol = 1e-8 * full.norm().max(1.0);
    let eps_tol = MINUS_EPS_TOL * epsilon.max(1.0);
    let zero_count = ev.iter().filter(|z| z.norm() < zero_tol).count();
    let minus_eps_count = ev.iter().filter(|z| (*z + epsilon).norm() < eps_tol).count();
    let rest = strip_clusters(
        &ev,
        &[
            (Complex64::new(0.0, 0.0), n - 2),
            (Complex64::new(-epsilon, 0.0), n * n - 2),
        ],
    );
    let q = adaptive_quartic(&blocks.traces, epsilon)?;
    let quartic_distance = if rest.len() == 4 {
        set_distance(&sorted(q.roots.to_vec()), &sorted(rest))
    } else {
        f64::INFINITY
    };
    Ok(AdaptiveDecomposition {
        zero_count,
        minus_eps_count,
        quartic_distance,
        tangent_in_kernel: check.applicable,
        kernel_residual: check.l_residual.max(check.bc_residual),
    })
}

fn check_adaptive(quick: bool) -> Verdict {
    let per = if quick { 5 } else { 20 };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut cases, mut failures) = (0, 0);
    let mut worst: f64 = 0.0;
    for n in [4usize, 6] {
        for eps in [0.1, 1.0] {
            for _ in 0..per {
                let state = random_splay(n, 2, rng.gen())?;
                let alpha = rng.gen_range(0.0..TAU);
                let params = ModelParams::Adaptive {
                    omega: 0.0,
                    epsilon: eps,
                    alpha,
                    beta: alpha,
                    sigma: 1.0,
                };
                let d = adaptive_decomposition(&state, &params)?;
                worst = worst.max(d.quartic_distance);
                let ok = d.tangent_in_kernel
                    && d.zero_count == n - 2
                    && d.minus_eps_count == n * n - 2
                    && d.quartic_distance < 1e-6;
                if !ok {
                    failures += 1;
                }
                cases += 1;
            }
        }
    }
    // with L = 0 the adaptive quartic is the inertia quartic in (eps, Lt)
    let mut reduction_ok = true;
    for _ in 0..100 {
        let eps = rng.gen_range(0.01..5.0);
        let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..6.0));
        let t = TraceSet {
            tr_l: 0.0,
            tr_l2: 0.0,
            tr_lt: Some(a),
            tr_lt2: Some(b),
            tr_llt: Some(0.0),
        };
        reduction_ok &= adaptive_quartic_coeffs(&t, eps)? == inertia_quartic(eps, &TraceSet::plain(a, b));
    }
    Ok((
        failures == 0 && reduction_ok,
        format!("{cases} states, {failures} failures, worst quartic-root distance {worst:.1e}, reduction to inertia quartic exact: {reduction_ok}"),
    ))
}

/// One simulated case: the analytic leading real part and whether the
/// leading eigenvalue is defective.
pub struct SimulationCase {
    pub label: &'static str,
    pub state: SplayState,
    pub params: ModelParams,
    pub analytic_rate: f64,
    pub defective: bool,
}

pub fn simulation_cases() -> Result<Vec<SimulationCase>> {
    let mut cases = Vec::new();
    let ks_case = |label, state: SplayState, alpha: f64| -> Result<SimulationCase> {
        let t = ks_traces(1.0, alpha, state.r2);
        let (a, b) = crate::stability::transverse_eigenvalues(&t);
        Ok(SimulationCase {
            label,
            params: ModelParams::KuramotoSakaguchi {
                omega: 0.7,
                alpha,
                sigma: 1.0,
            },
            analytic_rate: a.re.max(b.re),
            defective: false,
            state,
        })
    };
    cases.push(ks_case("ks stable node", twisted_state(4, 1)?, PI)?);
    cases.push(ks_case("ks unstable", twisted_state(4, 1)?, 0.0)?);
    cases.push(ks_case("ks stable focus", twisted_state(5, 1)?, 2.0 * PI / 3.0)?);
    cases.push(ks_case("ks random state", random_splay(6, 1, 17)?, 2.9)?);

    let inertia_case = |label, state: SplayState, gamma: f64, sigma: f64, alpha: f64, defective| -> Result<SimulationCase> {
        let report = ks_inertia_report(gamma, sigma, alpha, state.r2)?;
        Ok(SimulationCase {
            label,
            params: ModelParams::Inertia {
                m_inertia: 1.0,
                gamma,
                p: 1.5,
                sigma,
                alpha,
            },
            analytic_rate: report.max_real_part,
            defective,
            state,
        })
    };
    cases.push(inertia_case("inertia defective", twisted_state(4, 1)?, 2.0, 2.0, PI, true)?);
    cases.push(inertia_case("inertia stable", random_splay(5, 1, 3)?, 0.5, 1.0, 2.5, false)?);
    cases.push(inertia_case("inertia unstable", antipodal_pairs_family(4, &[0.3])?, 0.5, 1.0, 0.8, false)?);

    let adaptive_case = |label, state: SplayState, alpha: f64, beta: f64, eps: f64| -> Result<SimulationCase> {
        let params = ModelParams::Adaptive {
            omega: 0.2,
            epsilon: eps,
            alpha,
            beta,
            sigma: 1.0,
        };
        let blocks = model_jacobian(&state.theta, &params, state.tol)?;
        let q = adaptive_quartic(&blocks.traces, eps)?;
        Ok(SimulationCase {
            label,
            params,
            analytic_rate: max_real_part(&q.roots),
            defective: false,
            state,
        })
    };
    cases.push(adaptive_case("adaptive unstable", random_splay(4, 2, 7)?, 2.2, 2.2, 0.5)?);
    cases.push(adaptive_case("adaptive stable", random_splay(4, 2, 9)?, 0.4, 0.4, 0.5)?);
    cases.push(adaptive_case("adaptive slow weights, unstable", random_splay(6, 2, 4)?, 1.9, 1.9, 0.1)?);
    Ok(cases)
}

/// Measured transverse rate for one case, perturbing along the leading mode.
pub fn simulate_rate(case: &SimulationCase, dt: f64) -> Result<f64> {
    let rate = case.analytic_rate;
    let (size, t_end) = if rate > 0.0 {
        (1e-6, (8.0 / rate).clamp(2.0, 200.0))
    } else {
        (1e-4, (11.0 / -rate).clamp(5.0, 200.0))
    };
    let x0 = perturbed_initial_state(&case.state, &case.params, case.params.natural_moment(), size, Perturbation::DominantMode)?;
    let traj = integrate_flat(&case.params, case.state.n(), x0, dt, t_end, 10)?;
    measure_decay_rate(&traj, &case.state, case.params.natural_moment())
}

fn check_simulations(quick: bool) -> Verdict {
    let cases = simulation_cases()?;
    let take = if quick { 4 } else { cases.len() };
    let dt = 1e-3;
    let mut lines = Vec::new();
    let mut all_ok = true;
    let picks: Vec<&SimulationCase> = if quick {
        // one case per model family plus an unstable one
        [0usize, 1, 5, 7].iter().map(|&i| &cases[i]).collect()
    } else {
        cases.iter().take(take).collect()
    };
    for case in picks {
        let measured = simulate_rate(case, dt)?;
        let tol = if case.defective { 0.10 } else { 0.05 };
        let rate_ok = (measured - case.analytic_rate).abs() <= tol * case.analytic_rate.abs();

        let x0 = splay_dynamic_state(&case.state.theta, &case.params, case.state.tol)?;
        let traj = integrate(&x0, &case.params, dt, 10.0)?;
        let omega = measure_frequency(&traj)?;
        let want = collective_frequency(&case.state.theta, &case.params, case.state.tol)?;
        let omega_ok = (omega - want).abs() < 1e-5;
        all_ok &= rate_ok && omega_ok;
        lines.push(format!(
            "{}: rate {measured:.4} vs {:.4}{}",
            case.label,
            case.analytic_rate,
            if rate_ok && omega_ok { "" } else { " FAIL" }
        ));
    }
    Ok((all_ok, lines.join("; ")))
}

fn check_sigma_rescaling(quick: bool) -> Verdict {
    let count = if quick { 200 } else { 1000 };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut compared, mut mismatches) = (0, 0);
    for _ in 0..count {
        let sigma = rng.gen_range(0.05..20.0);
        let gamma = rng.gen_range(0.01..5.0);
        let alpha = rng.gen_range(0.0..TAU);
        let r2 = rng.gen_range(0.0..1.0);
        let a = ks_inertia_report(gamma, sigma, alpha, r2)?.classification;
        let b = ks_inertia_report(gamma / sigma.sqrt(), 1.0, alpha, r2)?.classification;
        if a == Classification::Marginal || b == Classification::Marginal {
            continue;
        }
        compared += 1;
        if a != b {
            mismatches += 1;
        }
    }
    // the planar rule is unaffected by sigma as well
    let planar_ok = classify_planar(&ks_traces(3.0, 2.0, 0.4)) == classify_planar(&ks_traces(1.0, 2.0, 0.4));
    Ok((
        mismatches == 0 && planar_ok,
        format!("{compared} tuples compared, {mismatches} mismatches"),
    ))
}

fn check_splay_construction(quick: bool) -> Verdict {
    let mut worst_family: f64 = 0.0;
    for i in 0..1000 {
        let delta = PI * i as f64 / 999.0;
        let s = antipodal_pairs_family(4, &[delta])?;
        worst_family = worst_family.max((s.r2 - delta.cos().abs()).abs());
    }
    let seeds = if quick { 10 } else { 50 };
    let mut worst_z: f64 = 0.0;
    let mut draws = 0;
    for n in 2..=32 {
        for m in 1..=3u32 {
            for seed in 0..seeds {
                let s = random_splay(n, m, seed)?;
                worst_z = worst_z.max(mean_field(s.theta.phases(), m).norm());
                draws += 1;
            }
        }
    }
    Ok((
        worst_family < 1e-12 && worst_z < 1e-12,
        format!("family R2 error {worst_family:.1e}; {draws} random states, max |Z_m| {worst_z:.1e}"),
    ))
}
