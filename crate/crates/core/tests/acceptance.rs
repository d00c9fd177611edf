//! Acceptance suite. Each criterion combines the library's own check (run at
//! full size) with an independent oracle written here: nalgebra's Schur
//! eigenvalues on Jacobians assembled from scratch, Routh-Hurwitz, and a
//! hand-written RK4. Prints one line per criterion; exits 1 if any fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splaylab::splay::{antipodal_pairs_family, random_splay, twisted_state};
use splaylab::stability::{hopf_boundary, inertia_eigenvalues, ks_inertia_report, BoundaryQuery, TraceSet};
use splaylab::verify;

type Check = (bool, String);

/// nalgebra's Schur eigenvalues, or roots of the characteristic polynomial
/// when the Schur iteration stalls (it does on exactly structured Jacobians).
fn eig(m: &DMatrix<f64>) -> Vec<Complex64> {
    match Schur::try_new(m.clone(), f64::EPSILON, 5000) {
        Some(s) => s.complex_eigenvalues().iter().copied().collect(),
        None => polynomial_roots(&char_poly(m)),
    }
}

/// Monic characteristic polynomial, highest degree first (Faddeev-LeVerrier).
fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[k - 1];
        c.push(-(a * &m).trace() / k as f64);
    }
    c
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
fn polynomial_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let eval = |z: Complex64| c.iter().fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..5000 {
        let mut moved: f64 = 0.0;
        for k in 0..n {
            let denom = (0..n)
                .filter(|&j| j != k)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z[k] - z[j]));
            let step = eval(z[k]) / denom;
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm());
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Drop the `count` values nearest to `target`.
fn strip(mut v: Vec<Complex64>, target: Complex64, count: usize) -> Vec<Complex64> {
    v.sort_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()));
    v.split_off(count)
}

fn ks_matrix(theta: &[f64], sigma: f64, alpha: f64) -> DMatrix<f64> {
    let n = theta.len();
    let mut l = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            sigma / n as f64 * (theta[i] - theta[j] + alpha).cos()
        }
    });
    for i in 0..n {
        l[(i, i)] = -l.row(i).sum();
    }
    l
}

fn inertia_matrix(theta: &[f64], gamma: f64, sigma: f64, alpha: f64) -> DMatrix<f64> {
    let n = theta.len();
    let l = ks_matrix(theta, sigma, alpha);
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, n + i)] = -gamma;
        for k in 0..n {
            j[(n + i, k)] = l[(i, k)];
        }
    }
    j
}

/// Full Jacobian of the adaptive network at the stationary weights.
fn adaptive_matrix(theta: &[f64], eps: f64, alpha: f64, beta: f64) -> DMatrix<f64> {
    let n = theta.len();
    let inv = 1.0 / n as f64;
    let dim = n + n * n;
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for k in 0..n {
            let d = theta[i] - theta[k];
            let kappa = -(d + beta).sin();
            if i != k {
                let v = inv * kappa * (d + alpha).cos();
                j[(i, k)] += v;
                j[(i, i)] -= v;
            }
            let w = n + i * n + k;
            j[(i, w)] = -inv * (d + alpha).sin();
            j[(w, w)] = -eps;
            if i != k {
                j[(w, i)] = -eps * (d + beta).cos();
                j[(w, k)] = eps * (d + beta).cos();
            }
        }
    }
    j
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for n in [3usize, 5, 8, 13, 20] {
        for _ in 0..100 {
            let s = random_splay(n, 1, rng.gen()).unwrap();
            let alpha = rng.gen_range(0.0..TAU);
            let l = ks_matrix(s.theta.phases(), 1.0, alpha);
            let ev = eig(&l);
            let zeros = ev.iter().filter(|z| z.norm() < 1e-8 * l.norm()).count();
            let rest = strip(ev, Complex64::new(0.0, 0.0), n - 2);
            let tr = l.trace();
            let tr2 = (&l * &l).trace();
            let sum = rest[0] + rest[1];
            let prod = rest[0] * rest[1];
            let e = ((sum.re - tr).abs() / tr.abs().max(1.0))
                .max((prod.re - 0.5 * (tr * tr - tr2)).abs() / prod.re.abs().max(1.0));
            worst = worst.max(e);
            if zeros != n - 2 || e > 1e-9 {
                failures += 1;
            }
        }
    }
    (failures == 0, format!("independent: 500 Jacobians, {failures} failures, worst {worst:.1e}"))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut mismatches = 0;
    for k in 1..40 {
        let alpha = 0.05 * PI * k as f64;
        if alpha.cos().abs() < 1e-3 {
            continue;
        }
        for _ in 0..20 {
            let s = random_splay(6, 1, rng.gen()).unwrap();
            let rest = strip(eig(&ks_matrix(s.theta.phases(), 1.0, alpha)), Complex64::new(0.0, 0.0), 4);
            let max_re = rest.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            if (max_re < 0.0) != (alpha.cos() < 0.0) {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0, format!("independent: {mismatches} sign mismatches"))
}

fn quartic(gamma: f64, tr: f64, tr2: f64) -> [f64; 5] {
    [1.0, 2.0 * gamma, gamma * gamma - tr, -gamma * tr, 0.5 * (tr * tr - tr2)]
}

/// `|p(z)|` relative to the size of its terms.
fn rel_value(c: &[f64; 5], z: Complex64) -> f64 {
    let mut v = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (k, &ck) in c.iter().enumerate() {
        let p = z.powu(4 - k as u32);
        v += ck * p;
        scale += ck.abs() * p.norm();
    }
    v.norm() / scale.max(1.0)
}

fn criterion_3() -> Check {
    let mut worst_root: f64 = 0.0;
    let mut worst_hopf: f64 = 0.0;
    for gamma in [0.1, 0.5, 1.0, 5.0] {
        for i in 0..200 {
            let tr = -3.0 + 6.0 * i as f64 / 199.0;
            for j in 0..200 {
                let tr2 = -3.0 + 9.0 * j as f64 / 199.0;
                let c = quartic(gamma, tr, tr2);
                for z in inertia_eigenvalues(gamma, &TraceSet::plain(tr, tr2)).unwrap() {
                    worst_root = worst_root.max(rel_value(&c, z));
                }
            }
            if tr < 0.0 {
                let p = hopf_boundary(BoundaryQuery::InertiaGeneric { gamma, tr_l: tr }).unwrap();
                let c = quartic(gamma, tr, p.value);
                let v = p.crossing_frequency;
                worst_hopf = worst_hopf.max(rel_value(&c, Complex64::new(0.0, v)));
            }
        }
    }
    (
        worst_root < 1e-12 && worst_hopf < 1e-9,
        format!("independent: max relative |p(root)| {worst_root:.1e}, max |p(iv)| on boundary {worst_hopf:.1e}"),
    )
}

fn criterion_4() -> Check {
    let (mut compared, mut mismatches) = (0, 0);
    for gamma in [0.1, 0.5, 1.0, 3.0] {
        for i in 0..25 {
            let alpha = TAU * i as f64 / 24.0;
            for j in 0..25 {
                let delta = 0.5 * PI * j as f64 / 24.0;
                let s = antipodal_pairs_family(4, &[delta]).unwrap();
                let report = ks_inertia_report(gamma, 1.0, alpha, s.r2).unwrap();
                if report.max_real_part.abs() < 1e-4 {
                    continue;
                }
                let ev = eig(&inertia_matrix(s.theta.phases(), gamma, 1.0, alpha));
                let ev = strip(strip(ev, Complex64::new(0.0, 0.0), 2), Complex64::new(-gamma, 0.0), 2);
                let max_re = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                compared += 1;
                if (max_re < 0.0) != (report.max_real_part < 0.0) {
                    mismatches += 1;
                }
            }
        }
    }
    (mismatches == 0, format!("independent: {compared} points, {mismatches} mismatches"))
}

/// Number of singular values below `tol` (relative to the largest).
fn nullity(a: &DMatrix<f64>, tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let top = sv.max().max(f64::MIN_POSITIVE);
    sv.iter().filter(|&&x| x < tol * top).count()
}

/// Smallest singular value of `a - mu I`, relative to the norm of `a`.
fn shifted_sigma_min(a: &DMatrix<f64>, mu: Complex64) -> f64 {
    let n = a.nrows();
    let c = a.map(|x| Complex64::new(x, 0.0)) - DMatrix::<Complex64>::identity(n, n) * mu;
    c.singular_values().min() / a.norm()
}

fn criterion_5() -> Check {
    use splaylab::stability::adaptive_quartic;
    use splaylab::TraceSet;

    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut failures = 0;
    let mut worst_root: f64 = 0.0;
    for n in [4usize, 6] {
        for eps in [0.1, 1.0] {
            for _ in 0..20 {
                let s = random_splay(n, 2, rng.gen()).unwrap();
                let alpha = rng.gen_range(0.0..TAU);
                let j = adaptive_matrix(s.theta.phases(), eps, alpha, alpha);
                let dim = j.nrows();
                // algebraic multiplicities: Jordan blocks are at most 2x2
                let j2 = &j * &j;
                let shifted = &j + DMatrix::identity(dim, dim) * eps;
                let shifted2 = &shifted * &shifted;
                let zeros = nullity(&j2, 1e-10);
                let at_eps = nullity(&shifted2, 1e-10);
                // quartic roots from traces of blocks read off this matrix
                let l = j.view((0, 0), (n, n)).into_owned();
                let lt = j.view((0, n), (n, n * n)) * j.view((n, 0), (n * n, n));
                let traces = TraceSet::from_blocks(&l, Some(&lt));
                let q = adaptive_quartic(&traces, eps).unwrap();
                let root_err = q.roots.iter().map(|&mu| shifted_sigma_min(&j, mu)).fold(0.0, f64::max);
                worst_root = worst_root.max(root_err);
                if zeros != n - 2 || at_eps != n * n - 2 || root_err > 1e-9 {
                    failures += 1;
                }
            }
        }
    }
    (
        failures == 0,
        format!("independent SVD ranks: 80 spectra, {failures} failures, worst sigma_min at quartic roots {worst_root:.1e}"),
    )
}

/// ln R_1 slope of the first-order KS network started near a twisted state,
/// with a hand-written RK4.
fn ks_r1_slope(n: usize, alpha: f64) -> f64 {
    let theta: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let rhs = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| (x[j] - x[i] - alpha).sin()).sum::<f64>() / n as f64)
            .collect()
    };
    let mut x: Vec<f64> = theta.iter().map(|t| t + 1e-4 * t.cos()).collect();
    let dt = 1e-3;
    let r1 = |x: &[f64]| {
        let (c, s) = x.iter().fold((0.0, 0.0), |(c, s), p| (c + p.cos(), s + p.sin()));
        (c * c + s * s).sqrt() / n as f64
    };
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    for step in 0..=12_000 {
        let t = step as f64 * dt;
        if step % 100 == 0 && t >= 2.0 {
            ts.push(t);
            ys.push(r1(&x).ln());
        }
        let k1 = rhs(&x);
        let x2: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k1[i]).collect();
        let k2 = rhs(&x2);
        let x3: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k2[i]).collect();
        let k3 = rhs(&x3);
        let x4: Vec<f64> = (0..n).map(|i| x[i] + dt * k3[i]).collect();
        let k4 = rhs(&x4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let m = ts.len() as f64;
    let (mt, my) = (ts.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let num: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let den: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    num / den
}

fn criterion_6() -> Check {
    let a = ks_r1_slope(4, PI);
    let b = ks_r1_slope(5, 2.0 * PI / 3.0);
    let ok = (a + 0.5).abs() < 0.025 && (b + 0.25).abs() < 0.0125;
    (ok, format!("independent RK4: N=4 alpha=pi slope {a:.4} (-0.5), N=5 alpha=2pi/3 slope {b:.4} (-0.25)"))
}

/// Routh-Hurwitz for a monic quartic: `Some(stable)` away from the boundary.
fn routh_hurwitz(c: &[f64; 5]) -> Option<bool> {
    let (a1, a2, a3, a4) = (c[1], c[2], c[3], c[4]);
    let h3 = a1 * a2 * a3 - a3 * a3 - a1 * a1 * a4;
    let tests = [a1, a2, a3, a4, a1 * a2 - a3, h3];
    let scale = 1.0 + c.iter().map(|x| x.abs()).fold(0.0, f64::max).powi(3);
    if tests.iter().any(|t| t.abs() < 1e-9 * scale) {
        return None;
    }
    Some(tests.iter().all(|&t| t > 0.0))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let (mut compared, mut mismatches) = (0, 0);
    for _ in 0..1000 {
        let sigma = rng.gen_range(0.05..20.0);
        let gamma = rng.gen_range(0.01..5.0);
        let alpha = rng.gen_range(0.0..TAU);
        let r2: f64 = rng.gen_range(0.0..1.0);
        let traces = |s: f64| (s * alpha.cos(), 0.5 * s * s * ((2.0 * alpha).cos() + r2 * r2));
        let (t1, t2) = traces(sigma);
        let (u1, u2) = traces(1.0);
        let g = gamma / sigma.sqrt();
        let (Some(a), Some(b)) = (routh_hurwitz(&quartic(gamma, t1, t2)), routh_hurwitz(&quartic(g, u1, u2))) else {
            continue;
        };
        compared += 1;
        let lib = ks_inertia_report(gamma, sigma, alpha, r2).unwrap().classification.is_stable();
        if a != b || a != lib {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("independent Routh-Hurwitz: {compared} tuples, {mismatches} mismatches"))
}

fn criterion_8() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let delta = PI * i as f64 / 999.0;
        let s = antipodal_pairs_family(4, &[delta]).unwrap();
        let (c, sn) = s
            .theta
            .phases()
            .iter()
            .fold((0.0, 0.0), |(c, sn), p| (c + (2.0 * p).cos(), sn + (2.0 * p).sin()));
        worst = worst.max(((c * c + sn * sn).sqrt() / 4.0 - delta.cos().abs()).abs());
    }
    let mut worst_z: f64 = 0.0;
    for n in 2..=32 {
        for m in 1..=3u32 {
            for seed in 0..50 {
                let s = random_splay(n, m, 1000 + seed).unwrap();
                let (c, sn) = s.theta.phases().iter().fold((0.0, 0.0), |(c, sn), p| {
                    (c + (m as f64 * p).cos(), sn + (m as f64 * p).sin())
                });
                worst_z = worst_z.max((c * c + sn * sn).sqrt() / n as f64);
            }
        }
    }
    let twisted_ok = (1..8).all(|k| {
        let s = twisted_state(8, k).unwrap();
        s.theta.phases().iter().enumerate().all(|(j, p)| {
            let want = (TAU * (j * k) as f64 / 8.0).rem_euclid(TAU);
            let d = (p - want).abs();
            d < 1e-12 || (TAU - d) < 1e-12
        })
    });
    (
        worst < 1e-12 && worst_z < 1e-12 && twisted_ok,
        format!("independent: family R2 error {worst:.1e}, max |Z_m| {worst_z:.1e}"),
    )
}

fn main() -> ExitCode {
    let independent: [fn() -> Check; 8] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
    ];
    let mut all = true;
    for (id, oracle) in (1u32..).zip(independent) {
        let start = Instant::now();
        let lib = verify::run_check(id, false);
        let (ok, detail) = oracle();
        let passed = lib.passed && ok;
        all &= passed;
        println!(
            "criterion {id}: {} ({}) library: {}; {detail} [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            lib.title,
            lib.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
