//! Dense nonsymmetric eigenvalues: balancing, Householder reduction to upper
//! Hessenberg form, then the Francis double-shift QR iteration.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 2048;

const RADIX: f64 = 2.0;
const MAX_ITERATIONS_PER_EIGENVALUE: usize = 120;

/// All eigenvalues of a real square matrix.
///
/// The returned order is the deflation order of the QR iteration, which is
/// deterministic but otherwise meaningless. Complex eigenvalues come out in
/// exact conjugate pairs.
pub fn dense_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidParameter {
            name: "matrix",
            reason: format!("not square ({}x{})", a.nrows(), a.ncols()),
        });
    }
    if n > MAX_DIMENSION {
        return Err(Error::InvalidParameter {
            name: "matrix",
            reason: format!("dimension {n} exceeds {MAX_DIMENSION}"),
        });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigenvalue input matrix"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut h = a.clone();
    balance(&mut h);
    reduce_to_hessenberg(&mut h);
    // Nearly defective clusters can leave a coupling entry hovering above
    // the deflation threshold; nalgebra's Schur iteration deflates those.
    hessenberg_qr(h)
        .or_else(|| schur_fallback(a))
        .ok_or_else(|| Error::EigenFailure {
            hash: matrix_hash(a),
            dim: n,
        })
}

fn schur_fallback(a: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100 * a.nrows())?;
    let ev = schur.complex_eigenvalues();
    Some(ev.iter().copied().collect())
}

/// Stable 64-bit fingerprint of a matrix, used to identify inputs in failure reports.
pub fn matrix_hash(a: &DMatrix<f64>) -> u64 {
    let mut hasher = DefaultHasher::new();
    a.nrows().hash(&mut hasher);
    a.ncols().hash(&mut hasher);
    for x in a.iter() {
        x.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}

/// Parlett-Reinsch balancing by powers of two; a diagonal similarity, so the
/// spectrum is unchanged while row and column norms are equilibrated.
pub fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place orthogonal similarity to upper Hessenberg form.
pub fn reduce_to_hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let scale: f64 = (k + 1..n).map(|i| a[(i, k)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut norm2 = 0.0;
        for i in k + 1..n {
            v[i] = a[(i, k)] / scale;
            norm2 += v[i] * v[i];
        }
        let norm = norm2.sqrt();
        let alpha = if v[k + 1] > 0.0 { -norm } else { norm };
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // A <- (I - beta v v^T) A
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum();
            let f = beta * dot;
            for i in k + 1..n {
                a[(i, j)] -= f * v[i];
            }
        }
        // A <- A (I - beta v v^T)
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
            let f = beta * dot;
            for j in k + 1..n {
                a[(i, j)] -= f * v[j];
            }
        }
        a[(k + 1, k)] = alpha * scale;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
/// iteration with exceptional shifts. Returns `None` if some eigenvalue fails
/// to deflate within the iteration budget.
fn hessenberg_qr(h0: DMatrix<f64>) -> Option<Vec<Complex64>> {
    let n = h0.nrows();
    // One-based copy keeps the index arithmetic of the classical algorithm readable.
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i + 1, j + 1)] = h0[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w): (f64, f64, f64, f64);

    while nn >= 1 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 2 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= f64::EPSILON * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[(nn, nn)];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            y = a[(nn - 1, nn - 1)];
            w = a[(nn, nn - 1)] * a[(nn - 1, nn)];
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }

            if its == MAX_ITERATIONS_PER_EIGENVALUE {
                return None;
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift, alternating between the bottom and the
                // top of the active window to break cycles
                let s = if its % 20 == 10 {
                    t += x;
                    for i in 1..=nn {
                        a[(i, i)] -= x;
                    }
                    a[(nn, nn - 1)].abs() + a[(nn - 1, nn - 2)].abs()
                } else {
                    let top = a[(l, l)];
                    t += top;
                    for i in 1..=nn {
                        a[(i, i)] -= top;
                    }
                    a[(l + 1, l)].abs() + a[(l + 2, l + 1)].abs()
                };
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let mut m = nn - 2;
            loop {
                z = a[(m, m)];
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - r - s0;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            for k in m..nn {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = a[(k, j)] + q * a[(k + 1, j)];
                        if k != nn - 1 {
                            p += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= p * z;
                        }
                        a[(k + 1, j)] -= p * y;
                        a[(k, j)] -= p * x;
                    }
                    let mmin = nn.min(k + 3);
                    for i in l..=mmin {
                        p = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k != nn - 1 {
                            p += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= p * r;
                        }
                        a[(i, k + 1)] -= p * q;
                        a[(i, k)] -= p;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }

    Some(
        (1..=n)
            .map(|i| Complex64::new(wr[i], wi[i]))
            .collect(),
    )
}

/// Approximate eigenvector for a computed eigenvalue, by a few steps of
/// inverse iteration. Returns the unit vector with the smallest residual
/// `||A v - lambda v||` seen, together with that residual.
pub fn inverse_iteration(a: &DMatrix<f64>, lambda: Complex64) -> Option<(DVector<Complex64>, f64)> {
    let n = a.nrows();
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let scale = a.norm().max(1.0);
    // nudge off the exact eigenvalue so the shifted system stays solvable
    let shift = lambda + Complex64::new(scale * 1e-13, scale * 1e-13);
    let shifted = &ac - DMatrix::<Complex64>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut v = DVector::<Complex64>::from_fn(n, |i, _| {
        Complex64::new(1.0 + 0.1 * i as f64, 0.3 - 0.05 * i as f64)
    });
    let mut best: Option<(DVector<Complex64>, f64)> = None;
    for _ in 0..4 {
        let Some(next) = lu.solve(&v) else {
            break;
        };
        let norm = next.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        v = next / Complex64::new(norm, 0.0);
        let res = (&ac * &v - &v * lambda).norm();
        if best.as_ref().is_none_or(|(_, r)| res < *r) {
            best = Some((v.clone(), res));
        }
    }
    best
}

/// Residual `min ||A v - lambda v|| / ||v||` over a few steps of inverse
/// iteration, for spot-checking a computed eigenvalue.
pub fn eigenpair_residual(a: &DMatrix<f64>, lambda: Complex64) -> f64 {
    inverse_iteration(a, lambda).map_or(f64::INFINITY, |(_, r)| r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let ev = dense_eigenvalues(&DMatrix::identity(5, 5)).unwrap();
        assert_eq!(ev.len(), 5);
        for e in ev {
            assert!((e - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn companion_of_mu_squared_minus_one() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let ev = sorted(dense_eigenvalues(&c).unwrap());
        assert!((ev[0].re + 1.0).abs() < 1e-15 && ev[0].im == 0.0);
        assert!((ev[1].re - 1.0).abs() < 1e-15 && ev[1].im == 0.0);
    }

    #[test]
    fn rotation_block_gives_conjugate_pair() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, -2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let ev = sorted(dense_eigenvalues(&a).unwrap());
        assert!((ev[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, -2.0)).norm() < 1e-14);
        assert!((ev[2] - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_and_empty() {
        assert!(dense_eigenvalues(&DMatrix::zeros(0, 0)).unwrap().is_empty());
        let ev = dense_eigenvalues(&DMatrix::zeros(4, 4)).unwrap();
        assert!(ev.iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn rejects_non_finite_and_non_square() {
        let mut a = DMatrix::<f64>::zeros(3, 3);
        a[(1, 1)] = f64::NAN;
        assert!(matches!(dense_eigenvalues(&a), Err(Error::NonFinite(_))));
        assert!(dense_eigenvalues(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn triangular_matrix_eigenvalues_are_diagonal() {
        let mut a = DMatrix::<f64>::zeros(6, 6);
        for i in 0..6 {
            for j in i..6 {
                a[(i, j)] = if i == j { i as f64 - 2.5 } else { 0.7 * (i + 2 * j) as f64 };
            }
        }
        let ev = sorted(dense_eigenvalues(&a).unwrap());
        for (i, e) in ev.iter().enumerate() {
            assert!((e.re - (i as f64 - 2.5)).abs() < 1e-10, "{e}");
            assert!(e.im.abs() < 1e-10);
        }
    }

    #[test]
    fn hessenberg_reduction_preserves_trace_and_shape() {
        let a = DMatrix::from_fn(7, 7, |i, j| ((i * 7 + j) as f64 * 0.37).sin());
        let mut h = a.clone();
        reduce_to_hessenberg(&mut h);
        assert!((h.trace() - a.trace()).abs() < 1e-12);
        assert!(((&h * &h).trace() - (&a * &a).trace()).abs() < 1e-11);
        for i in 2..7 {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn random_matrix_residuals_are_small() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| (((i * 31 + j * 17) % 23) as f64 - 11.0) / 7.0);
        let ev = dense_eigenvalues(&a).unwrap();
        assert_eq!(ev.len(), n);
        let sum: Complex64 = ev.iter().sum();
        assert!((sum.re - a.trace()).abs() < 1e-10);
        assert!(sum.im.abs() < 1e-10);
        for &e in ev.iter().step_by(5) {
            assert!(eigenpair_residual(&a, e) <= 1e-8 * a.norm(), "{e}");
        }
    }

    #[test]
    fn hash_is_stable_and_discriminating() {
        let a = DMatrix::from_fn(3, 3, |i, j| (i + j) as f64);
        let mut b = a.clone();
        assert_eq!(matrix_hash(&a), matrix_hash(&b));
        b[(0, 0)] = 1e-300;
        assert_ne!(matrix_hash(&a), matrix_hash(&b));
    }
}
