//! Fixed-step RK4 integration and observables measured from trajectories.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    collective_frequency, model_jacobian, rhs_flat, splay_dynamic_state, DynamicState, ModelParams,
};
use crate::oracle::eigen::{dense_eigenvalues, inverse_iteration};
use crate::oracle::{strip_clusters, trivial_clusters};
use crate::splay::{transverse_basis, SplayState};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 50.0;
/// Deviation norms outside this band are excluded from decay-rate fits.
pub const FIT_WINDOW: (f64, f64) = (1e-8, 1e-3);

/// Stored samples of one integration run.
///
/// States are flat vectors in the `[phases, velocities | weights]` layout,
/// with phases left unwrapped so frequencies can be read off directly.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Integration step.
    pub dt: f64,
    /// Number of steps between stored samples.
    pub stride: usize,
    pub n: usize,
    pub model: ModelParams,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }

    /// Sample `i` as a [`DynamicState`], with phases reduced into `[0, 2pi)`.
    pub fn snapshot(&self, i: usize) -> Result<DynamicState> {
        DynamicState::from_vector(&self.states[i], self.n, &self.model)
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// CSV with header `t,phi_0..[,psi_*][,kappa_*]`, one row per stored sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n;
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("phi_{i}")));
        match self.model {
            ModelParams::KuramotoSakaguchi { .. } => {}
            ModelParams::Inertia { .. } => header.extend((0..n).map(|i| format!("psi_{i}"))),
            ModelParams::Adaptive { .. } => {
                for i in 0..n {
                    for j in 0..n {
                        header.push(format!("kappa_{i}_{j}"));
                    }
                }
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for v in x {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Integrate from `x0` to `t_end`, storing every step.
pub fn integrate(x0: &DynamicState, params: &ModelParams, dt: f64, t_end: f64) -> Result<Trajectory> {
    integrate_strided(x0, params, dt, t_end, 1)
}

pub fn integrate_strided(
    x0: &DynamicState,
    params: &ModelParams,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory> {
    x0.check_shape(params)?;
    integrate_flat(params, x0.n(), x0.to_vector(), dt, t_end, stride)
}

/// RK4 on a flat state vector (phases may be unwrapped).
pub fn integrate_flat(
    params: &ModelParams,
    n: usize,
    x0: Vec<f64>,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory> {
    params.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be > 0, got {dt}"),
        });
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must be >= dt, got {t_end}"),
        });
    }
    if x0.len() != params.state_dim(n) {
        return Err(Error::ShapeMismatch {
            model: params.name(),
            detail: format!("expected {} entries, got {}", params.state_dim(n), x0.len()),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp(0.0));
    }
    let stride = stride.max(1);
    let steps = (t_end / dt).round() as usize;
    let dim = x0.len();

    let mut times = Vec::with_capacity(steps / stride + 1);
    let mut states = Vec::with_capacity(steps / stride + 1);
    times.push(0.0);
    states.push(x0.clone());

    let mut x = x0;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for step in 1..=steps {
        rhs_flat(params, n, &x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        rhs_flat(params, n, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        rhs_flat(params, n, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        rhs_flat(params, n, &tmp, &mut k4);
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = step as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp(t));
        }
        if step % stride == 0 {
            times.push(t);
            states.push(x.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        dt,
        stride,
        n,
        model: *params,
    })
}

/// Least-squares slope of `y` against `t`.
fn ls_slope(t: &[f64], y: &[f64]) -> f64 {
    let k = t.len() as f64;
    let tm = t.iter().sum::<f64>() / k;
    let ym = y.iter().sum::<f64>() / k;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in t.iter().zip(y) {
        num += (a - tm) * (b - ym);
        den += (a - tm) * (a - tm);
    }
    num / den
}

/// Collective frequency: slope of the mean unwrapped phase over the second
/// half of the trajectory.
pub fn measure_frequency(traj: &Trajectory) -> Result<f64> {
    let span = traj.times.last().copied().unwrap_or(0.0) - traj.times.first().copied().unwrap_or(0.0);
    let needed = (10 / traj.stride).max(1) + 1;
    if span < 10.0 * traj.dt || traj.len() < needed {
        return Err(Error::TrajectoryTooShort {
            needed,
            have: traj.len(),
        });
    }
    let start = traj.len() / 2;
    let n = traj.n as f64;
    let t = &traj.times[start..];
    let mean: Vec<f64> = traj.states[start..]
        .iter()
        .map(|x| x[..traj.n].iter().sum::<f64>() / n)
        .collect();
    if t.len() < 2 {
        return Err(Error::TrajectoryTooShort {
            needed: 2 * needed,
            have: traj.len(),
        });
    }
    Ok(ls_slope(t, &mean))
}

fn wrap(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Norm of the transverse part of `phi(t) - theta - Omega t` at every sample.
///
/// The deviation is wrapped into `(-pi, pi]` and projected onto the span of
/// `cos(m theta)`, `sin(m theta)`; this removes the Goldstone direction and
/// every other neutral direction along the splay manifold.
pub fn transverse_deviation(traj: &Trajectory, reference: &SplayState, m: u32) -> Result<Vec<f64>> {
    if reference.n() != traj.n {
        return Err(Error::ShapeMismatch {
            model: traj.model.name(),
            detail: format!("reference has {} oscillators, trajectory {}", reference.n(), traj.n),
        });
    }
    let omega = match reference.omega_collective {
        Some(w) => w,
        None => collective_frequency(&reference.theta, &traj.model, reference.tol)?,
    };
    let basis = transverse_basis(&reference.theta, m);
    let theta = reference.theta.phases();
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| {
            let d = DVector::from_iterator(
                traj.n,
                (0..traj.n).map(|j| wrap(x[j] - theta[j] - omega * t)),
            );
            basis.iter().map(|q| q.dot(&d).powi(2)).sum::<f64>().sqrt()
        })
        .collect())
}

/// Exponential rate of the transverse deviation, fitted by least squares on
/// `log ||deviation||` over the first contiguous stretch of samples whose
/// norm lies inside [`FIT_WINDOW`].
pub fn measure_decay_rate(traj: &Trajectory, reference: &SplayState, m: u32) -> Result<f64> {
    let (lo, hi) = FIT_WINDOW;
    let norms = transverse_deviation(traj, reference, m)?;
    let inside = |v: f64| v >= lo && v <= hi;
    let Some(first) = norms.iter().position(|&v| inside(v)) else {
        return Err(Error::NoLinearRegime { lo, hi });
    };
    let len = norms[first..].iter().take_while(|&&v| inside(v)).count();
    if len < 3 {
        return Err(Error::NoLinearRegime { lo, hi });
    }
    let t = &traj.times[first..first + len];
    let y: Vec<f64> = norms[first..first + len].iter().map(|v| v.ln()).collect();
    Ok(ls_slope(t, &y))
}

/// How to displace the reference state for a decay measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    /// Phases only, along `cos(mix) q_1 + sin(mix) q_2` in the transverse
    /// plane; velocities and weights stay on the splay solution.
    Transverse { mix: f64 },
    /// Along the real eigen-direction of the leading nontrivial eigenvalue of
    /// the full Jacobian, in all state components.
    DominantMode,
    /// Along a tangent vector of the splay manifold (phases only).
    Tangent { vector_index: usize },
}

/// The reference splay solution displaced so that the transverse phase
/// deviation has norm `size`. Returns the flat initial state.
pub fn perturbed_initial_state(
    reference: &SplayState,
    params: &ModelParams,
    m: u32,
    size: f64,
    kind: Perturbation,
) -> Result<Vec<f64>> {
    let base = splay_dynamic_state(&reference.theta, params, reference.tol)?;
    let mut x = base.to_vector();
    let n = reference.n();
    let transverse = transverse_basis(&reference.theta, m);
    let transverse_norm = |v: &[f64]| {
        let d = DVector::from_column_slice(&v[..n]);
        transverse.iter().map(|q| q.dot(&d).powi(2)).sum::<f64>().sqrt()
    };

    let direction: Vec<f64> = match kind {
        Perturbation::Transverse { mix } => {
            let mut d = vec![0.0; x.len()];
            let weights = [mix.cos(), mix.sin()];
            for (q, w) in transverse.iter().zip(weights) {
                for j in 0..n {
                    d[j] += w * q[j];
                }
            }
            d
        }
        Perturbation::Tangent { vector_index } => {
            let basis = crate::splay::splay_tangent_basis(&reference.theta, m)?;
            let v = basis.vectors.get(vector_index).ok_or(Error::InvalidParameter {
                name: "vector_index",
                reason: format!("tangent space has dimension {}", basis.dim()),
            })?;
            let mut d = vec![0.0; x.len()];
            d[..n].copy_from_slice(v.as_slice());
            // tangent moves are measured by their full norm
            let norm = v.norm();
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi += size * di / norm;
            }
            return Ok(x);
        }
        Perturbation::DominantMode => dominant_direction(reference, params, &transverse_norm)?,
    };
    let scale = transverse_norm(&direction);
    if !(scale > 0.0) {
        return Err(Error::NonFinite("perturbation direction"));
    }
    for (xi, di) in x.iter_mut().zip(&direction) {
        *xi += size * di / scale;
    }
    Ok(x)
}

fn dominant_direction(
    reference: &SplayState,
    params: &ModelParams,
    transverse_norm: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    let blocks = model_jacobian(&reference.theta, params, reference.tol)?;
    let full: DMatrix<f64> = blocks.full_matrix();
    let ev = dense_eigenvalues(&full)?;
    let rest = strip_clusters(&ev, &trivial_clusters(&blocks));
    let lead = rest
        .iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
        .ok_or(Error::NonFinite("nontrivial spectrum"))?;
    let (v, _) = inverse_iteration(&full, lead).ok_or(Error::NonFinite("eigenvector"))?;
    // the real or imaginary part spans the real invariant subspace; keep the
    // one with the larger transverse phase component
    let re: Vec<f64> = v.iter().map(|z: &Complex64| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z: &Complex64| z.im).collect();
    Ok(if transverse_norm(&re) >= transverse_norm(&im) { re } else { im })
}
