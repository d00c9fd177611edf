//! Points on the m-splay manifold `{theta : Z_m(theta) = 0}` and its tangent spaces.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{collective_frequency, mean_field, ModelParams, PhaseConfiguration};

/// Bound on `R_m` met by every sampled state.
pub const SAMPLER_TOL: f64 = 1e-12;
/// Retries of the free-phase draw before `random_splay` gives up.
pub const MAX_RETRIES: usize = 100;
/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// A phase configuration known to satisfy `R_m < tol`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplayState {
    pub theta: PhaseConfiguration,
    pub m: u32,
    pub tol: f64,
    /// Collective frequency, once bound to a model.
    pub omega_collective: Option<f64>,
    /// Cached `R_2(theta)`.
    pub r2: f64,
}

impl SplayState {
    pub fn new(theta: PhaseConfiguration, m: u32, tol: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidMoment);
        }
        let r = mean_field(theta.phases(), m).norm();
        if !(r < tol) {
            return Err(Error::NotSplay { m, r, tol });
        }
        let r2 = mean_field(theta.phases(), 2).norm().min(1.0);
        Ok(Self {
            theta,
            m,
            tol,
            omega_collective: None,
            r2,
        })
    }

    /// Fill in the collective frequency for `params`.
    pub fn bind(mut self, params: &ModelParams) -> Result<Self> {
        self.omega_collective = Some(collective_frequency(&self.theta, params, self.tol)?);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.theta.n()
    }
}

pub fn is_m_splay(theta: &PhaseConfiguration, m: u32, tol: f64) -> bool {
    m > 0 && mean_field(theta.phases(), m).norm() < tol
}

/// Equidistant phases `theta_j = 2 pi k j / n`, returned as a 1-splay state.
///
/// The configuration is an m-splay state for every `m` with `m k mod n != 0`;
/// for `1 <= k < n` that always includes `m = 1`.
pub fn twisted_state(n: usize, k: usize) -> Result<SplayState> {
    if n < 2 {
        return Err(Error::TooFewOscillators(n));
    }
    if k >= n {
        return Err(Error::TwistOutOfRange { n, k });
    }
    let phases = (0..n)
        .map(|j| TAU * ((k * j) % n) as f64 / n as f64)
        .collect();
    let theta = PhaseConfiguration::new(phases)?;
    // rounding of the individual phases keeps R_1 near 1e-16 n
    SplayState::new(theta, 1, 1e-12 * n as f64)
}

/// Given `free` phases for oscillators `3..n`, choose the first two so that
/// `Z_m = 0`. Returns `None` when the target `-sum e^{i m theta_j}` has modulus above 2.
///
/// `direction` is used only when the target vanishes and its argument is undefined.
pub fn complete_splay(free: &[f64], m: u32, direction: f64) -> Option<Vec<f64>> {
    let mf = m as f64;
    let target: num_complex::Complex64 = -free
        .iter()
        .map(|&t| num_complex::Complex64::from_polar(1.0, mf * t))
        .sum::<num_complex::Complex64>();
    let s = target.norm();
    if s > 2.0 {
        return None;
    }
    let arg = if s == 0.0 { direction } else { target.arg() };
    let half = (0.5 * s).acos();
    let mut out = Vec::with_capacity(free.len() + 2);
    out.push((arg - half) / mf);
    out.push((arg + half) / mf);
    out.extend_from_slice(free);
    Some(out)
}

/// Sample an m-splay state with `R_m < 1e-12` from a seeded ChaCha8 stream.
pub fn random_splay(n: usize, m: u32, seed: u64) -> Result<SplayState> {
    if n < 2 {
        return Err(Error::TooFewOscillators(n));
    }
    if m == 0 {
        return Err(Error::InvalidMoment);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RETRIES {
        let free: Vec<f64> = (2..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let direction = rng.gen_range(0.0..TAU);
        let Some(phases) = complete_splay(&free, m, direction) else {
            continue;
        };
        let theta = PhaseConfiguration::new(phases)?;
        if let Ok(state) = SplayState::new(theta, m, SAMPLER_TOL) {
            return Ok(state);
        }
    }
    Err(Error::RetryBudgetExhausted(MAX_RETRIES))
}

/// Antipodal pairs `(d_p, d_p + pi)` with `d_0 = 0` and `d_1.. = deltas`.
///
/// Always a 1-splay state; for `n = 4`, `R_2 = |cos d_1|`.
pub fn antipodal_pairs_family(n: usize, deltas: &[f64]) -> Result<SplayState> {
    if n < 4 || !n.is_multiple_of(2) || deltas.len() != n / 2 - 1 {
        return Err(Error::InvalidFamily {
            n,
            deltas: deltas.len(),
        });
    }
    let mut phases = Vec::with_capacity(n);
    for d in std::iter::once(0.0).chain(deltas.iter().copied()) {
        phases.push(d);
        phases.push(d + PI);
    }
    let theta = PhaseConfiguration::new(phases)?;
    SplayState::new(theta, 1, 1e-12)
}

/// Orthonormal basis of `{v : sum_j e^{i m theta_j} v_j = 0}`.
#[derive(Clone, Debug)]
pub struct TangentBasis {
    pub vectors: Vec<DVector<f64>>,
    pub m: u32,
    pub theta: PhaseConfiguration,
    /// Set when the constraint matrix has rank below 2 and the null space is
    /// larger than `N - 2`.
    pub rank_deficient: bool,
}

impl TangentBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// The basis vectors as columns of an `N x dim` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.theta.n();
        let mut q = DMatrix::zeros(n, self.vectors.len());
        for (j, v) in self.vectors.iter().enumerate() {
            q.set_column(j, v);
        }
        q
    }
}

/// Null space of the `2 x N` matrix with rows `cos(m theta_j)`, `sin(m theta_j)`.
///
/// The row space comes from an SVD with a relative rank cutoff of `1e-10`;
/// the null space is then built by Gram-Schmidt on `1/sqrt(N), e_1, e_2, ...`,
/// so the uniform shift direction is the first vector whenever it is tangent.
pub fn splay_tangent_basis(theta: &PhaseConfiguration, m: u32) -> Result<TangentBasis> {
    if m == 0 {
        return Err(Error::InvalidMoment);
    }
    let ph = theta.phases();
    let n = ph.len();
    let mf = m as f64;
    let a = DMatrix::from_fn(2, n, |r, j| {
        if r == 0 {
            (mf * ph[j]).cos()
        } else {
            (mf * ph[j]).sin()
        }
    });
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::NonFinite("constraint matrix"))?;
    let smax = svd.singular_values.max();
    let row_space: Vec<DVector<f64>> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
        .map(|i| v_t.row(i).transpose())
        .collect();
    let rank = row_space.len();
    let dim = n - rank;

    let mut accepted: Vec<DVector<f64>> = row_space.clone();
    let mut vectors = Vec::with_capacity(dim);
    let uniform = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let candidates = std::iter::once(uniform).chain((0..n).map(|j| {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        e
    }));
    for mut c in candidates {
        if vectors.len() == dim {
            break;
        }
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &accepted {
                let p = q.dot(&c);
                c.axpy(-p, q, 1.0);
            }
        }
        let norm = c.norm();
        if norm > 1e-8 {
            c /= norm;
            accepted.push(c.clone());
            vectors.push(c);
        }
    }
    Ok(TangentBasis {
        vectors,
        m,
        theta: theta.clone(),
        rank_deficient: rank < 2,
    })
}

/// Orthonormal basis of the span of `cos(m theta)` and `sin(m theta)`, the
/// orthogonal complement of the tangent space. Has fewer than two vectors
/// when the constraint matrix is rank deficient.
pub fn transverse_basis(theta: &PhaseConfiguration, m: u32) -> Vec<DVector<f64>> {
    let ph = theta.phases();
    let mf = m as f64;
    let rows = [
        DVector::from_iterator(ph.len(), ph.iter().map(|&t| (mf * t).cos())),
        DVector::from_iterator(ph.len(), ph.iter().map(|&t| (mf * t).sin())),
    ];
    let scale = rows.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(2);
    for mut r in rows {
        for _ in 0..2 {
            for q in &out {
                let p = q.dot(&r);
                r.axpy(-p, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm > RANK_TOL * scale && norm > 0.0 {
            out.push(r / norm);
        }
    }
    out
}
