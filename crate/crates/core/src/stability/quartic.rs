//! Roots of monic real quartics via the balanced companion matrix.
//!
//! Companion eigenvalues are backward stable but lose accuracy at multiple
//! roots (a k-fold root scatters by roughly `eps^(1/k)`). Two refinements run
//! after the eigenvalue step: a few guarded Newton steps per root, and a
//! cluster pass that collapses a group of roots onto its centroid when the
//! polynomial and its first derivatives all vanish there to rounding level.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::eigen::dense_eigenvalues;

const NEWTON_STEPS: usize = 8;
const CLUSTER_RADIUS: f64 = 1e-2;
const MULTIPLICITY_SLACK: f64 = 64.0;

/// Coefficients `[1, c3, c2, c1, c0]` of `mu^4 + c3 mu^3 + c2 mu^2 + c1 mu + c0`.
pub type QuarticCoeffs = [f64; 5];

/// All four roots of a quartic with nonzero leading coefficient.
///
/// Roots are returned sorted by descending real part, then descending
/// imaginary part.
pub fn quartic_roots(c: &QuarticCoeffs) -> Result<[Complex64; 4]> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("quartic coefficients"));
    }
    if c[0] == 0.0 {
        return Err(Error::InvalidParameter {
            name: "quartic",
            reason: "leading coefficient is zero".into(),
        });
    }
    let monic: Vec<f64> = c.iter().map(|x| x / c[0]).collect();

    // companion matrix, upper Hessenberg layout
    let mut comp = DMatrix::<f64>::zeros(4, 4);
    for i in 1..4 {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..4 {
        comp[(i, 3)] = -monic[4 - i];
    }
    let mut roots = dense_eigenvalues(&comp)?;
    // clusters are judged on the raw eigenvalues, whose subset means stay
    // accurate even where the individual roots scatter
    let merged = merge_multiple_roots(&monic, &mut roots);
    for (r, done) in roots.iter_mut().zip(merged) {
        if !done {
            *r = polish(&monic, *r);
        }
    }

    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok([roots[0], roots[1], roots[2], roots[3]])
}

/// Value and derivatives of `p` at `z`: returns `[p, p', p''/2, p'''/6]`.
fn taylor(coeffs: &[f64], z: Complex64) -> [Complex64; 4] {
    // repeated synthetic division
    let deg = coeffs.len() - 1;
    let mut b: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (k, slot) in out.iter_mut().enumerate() {
        if k > deg {
            break;
        }
        for i in 1..=deg - k {
            let prev = b[i - 1];
            b[i] += prev * z;
        }
        *slot = b[deg - k];
    }
    out
}

/// Rounding-level bound on the error of the k-th Taylor coefficient of `p` at `z`.
fn taylor_bound(coeffs: &[f64], z: Complex64, k: usize) -> f64 {
    let deg = coeffs.len() - 1;
    let az = z.norm();
    let mut sum = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let power = deg - idx;
        if power < k {
            continue;
        }
        let binom = binomial(power, k) as f64;
        sum += binom * c.abs() * az.powi((power - k) as i32) * (power + 1) as f64;
    }
    sum * f64::EPSILON
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

pub fn evaluate(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    let mut pz = evaluate(coeffs, z).norm();
    for _ in 0..NEWTON_STEPS {
        if pz == 0.0 {
            break;
        }
        let t = taylor(coeffs, z);
        if t[1].norm() == 0.0 {
            break;
        }
        let candidate = z - t[0] / t[1];
        let pc = evaluate(coeffs, candidate).norm();
        if !(pc < pz) {
            break;
        }
        z = candidate;
        pz = pc;
    }
    z
}

/// Collapse clusters of roots that are numerically a single multiple root.
/// Returns which roots were merged.
fn merge_multiple_roots(coeffs: &[f64], roots: &mut [Complex64]) -> Vec<bool> {
    let n = roots.len();
    let mut assigned = vec![false; n];
    let root_scale = 1.0 + coeffs[1..].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    // subsets of the four roots, largest first
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| s.len() >= 2)
        .collect();
    subsets.sort_by_key(|s| std::cmp::Reverse(s.len()));

    for subset in subsets {
        if subset.iter().any(|&i| assigned[i]) {
            continue;
        }
        let k = subset.len();
        let centroid: Complex64 =
            subset.iter().map(|&i| roots[i]).sum::<Complex64>() / k as f64;
        let radius = CLUSTER_RADIUS * (1.0 + centroid.norm());
        if subset.iter().any(|&i| (roots[i] - centroid).norm() > radius) {
            continue;
        }
        let t = taylor(coeffs, centroid);
        // the centroid itself is only known to about eps times the root scale
        let dz = f64::EPSILON * root_scale;
        let vanishes = (0..k).all(|j| {
            let carried = if j + 1 < t.len() { (j + 1) as f64 * t[j + 1].norm() * dz } else { 0.0 };
            t[j].norm() <= MULTIPLICITY_SLACK * (taylor_bound(coeffs, centroid, j) + carried)
        });
        if vanishes {
            for &i in &subset {
                roots[i] = centroid;
                assigned[i] = true;
            }
        }
    }
    assigned
}
