//! Oscillator model classes, their vector fields, and analytic Jacobians at
//! splay states.
//!
//! Three globally coupled models are supported:
//!
//! ```text
//! Kuramoto-Sakaguchi  dphi_i = omega - (sigma/N) sum_j sin(phi_i - phi_j + alpha)
//! inertia             M ddphi_i + gamma dphi_i = p - (sigma/N) sum_j sin(phi_i - phi_j + alpha)
//! adaptive            dphi_i = omega - (sigma/N) sum_j kappa_ij sin(phi_i - phi_j + alpha)
//!                     dkappa_ij = -eps (kappa_ij + sin(phi_i - phi_j + beta))
//! ```
//!
//! The inertia model is integrated in first-order form `(phi, psi)` with
//! `psi = dphi`; the adaptive model carries all `K = N^2` weights.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stability::TraceSet;

/// Default bound on `R_m` below which a configuration counts as an m-splay state.
pub const DEFAULT_TOL_SPLAY: f64 = 1e-9;

/// Reduce an angle into `[0, 2pi)`.
pub fn normalize_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Phases of `N >= 2` oscillators, each reduced into `[0, 2pi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PhaseConfiguration {
    phases: Vec<f64>,
}

impl PhaseConfiguration {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.len() < 2 {
            return Err(Error::TooFewOscillators(phases.len()));
        }
        if let Some((index, &value)) = phases.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinitePhase { index, value });
        }
        Ok(Self {
            phases: phases.into_iter().map(normalize_angle).collect(),
        })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }

    /// The configuration rotated by `c` (every phase shifted by the same amount).
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            phases: self.phases.iter().map(|x| normalize_angle(x + c)).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for PhaseConfiguration {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PhaseConfiguration> for Vec<f64> {
    fn from(p: PhaseConfiguration) -> Self {
        p.phases
    }
}

/// The m-th moment `Z_m = R_m e^{i rho_m}` of the complex mean field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderParameterMoment {
    pub m: u32,
    pub z: Complex64,
    pub r: f64,
    pub rho: f64,
}

/// `Z_m` for raw phases; no normalization needed since only `e^{i m phi}` enters.
pub fn mean_field(phases: &[f64], m: u32) -> Complex64 {
    let mf = m as f64;
    let sum: Complex64 = phases
        .iter()
        .map(|&p| Complex64::from_polar(1.0, mf * p))
        .sum();
    sum / phases.len() as f64
}

pub fn order_parameter(theta: &PhaseConfiguration, m: u32) -> Result<OrderParameterMoment> {
    if m == 0 {
        return Err(Error::InvalidMoment);
    }
    let z = mean_field(theta.phases(), m);
    let r = z.norm().min(1.0);
    let rho = if z.norm() == 0.0 { 0.0 } else { normalize_angle(z.arg()) };
    Ok(OrderParameterMoment { m, z, r, rho })
}

fn one() -> f64 {
    1.0
}

/// Parameters of one of the three model classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelParams {
    #[serde(rename = "ks")]
    KuramotoSakaguchi {
        omega: f64,
        alpha: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    #[serde(rename = "inertia")]
    Inertia {
        #[serde(default = "one")]
        m_inertia: f64,
        gamma: f64,
        p: f64,
        #[serde(default = "one")]
        sigma: f64,
        alpha: f64,
    },
    #[serde(rename = "adaptive")]
    Adaptive {
        omega: f64,
        epsilon: f64,
        alpha: f64,
        beta: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::KuramotoSakaguchi { .. } => "ks",
            ModelParams::Inertia { .. } => "inertia",
            ModelParams::Adaptive { .. } => "adaptive",
        }
    }

    /// Checks the positivity constraints on damping, dissipation and inertia.
    pub fn validate(&self) -> Result<()> {
        let all_finite = match *self {
            ModelParams::KuramotoSakaguchi { omega, alpha, sigma } => {
                [omega, alpha, sigma].iter().all(|x| x.is_finite())
            }
            ModelParams::Inertia {
                m_inertia,
                gamma,
                p,
                sigma,
                alpha,
            } => {
                if !(gamma > 0.0) {
                    return Err(invalid("gamma", "damping must be > 0"));
                }
                if !(m_inertia > 0.0) {
                    return Err(invalid("m_inertia", "inertia must be > 0"));
                }
                [m_inertia, gamma, p, sigma, alpha].iter().all(|x| x.is_finite())
            }
            ModelParams::Adaptive {
                omega,
                epsilon,
                alpha,
                beta,
                sigma,
            } => {
                if !(epsilon > 0.0) {
                    return Err(invalid("epsilon", "dissipation must be > 0"));
                }
                [omega, epsilon, alpha, beta, sigma].iter().all(|x| x.is_finite())
            }
        };
        if all_finite {
            Ok(())
        } else {
            Err(Error::NonFinite("model parameters"))
        }
    }

    /// The moment whose splay condition makes the coupling uniform across oscillators.
    pub fn natural_moment(&self) -> u32 {
        match self {
            ModelParams::Adaptive { .. } => 2,
            _ => 1,
        }
    }

    /// Length of the flat state vector for `n` oscillators.
    pub fn state_dim(&self, n: usize) -> usize {
        match self {
            ModelParams::KuramotoSakaguchi { .. } => n,
            ModelParams::Inertia { .. } => 2 * n,
            ModelParams::Adaptive { .. } => n + n * n,
        }
    }

    /// Damping after rescaling to unit inertia (`gamma / M`); `None` for first-order models.
    pub fn effective_gamma(&self) -> Option<f64> {
        match *self {
            ModelParams::Inertia { m_inertia, gamma, .. } => Some(gamma / m_inertia),
            _ => None,
        }
    }

    fn coupling(&self) -> (f64, f64) {
        match *self {
            ModelParams::KuramotoSakaguchi { alpha, sigma, .. } => (sigma, alpha),
            ModelParams::Inertia {
                m_inertia,
                sigma,
                alpha,
                ..
            } => (sigma / m_inertia, alpha),
            ModelParams::Adaptive { alpha, sigma, .. } => (sigma, alpha),
        }
    }
}

fn invalid(name: &'static str, reason: &str) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.to_string(),
    }
}

/// Full dynamical state: phases plus velocities (inertia) or weights (adaptive).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicState {
    pub phases: PhaseConfiguration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl DynamicState {
    pub fn n(&self) -> usize {
        self.phases.n()
    }

    /// Verify the optional blocks match the model variant.
    pub fn check_shape(&self, params: &ModelParams) -> Result<()> {
        let n = self.n();
        let mismatch = |detail: String| Error::ShapeMismatch {
            model: params.name(),
            detail,
        };
        match params {
            ModelParams::KuramotoSakaguchi { .. } => {
                if self.velocities.is_some() || self.weights.is_some() {
                    return Err(mismatch("phase-only model carries extra blocks".into()));
                }
            }
            ModelParams::Inertia { .. } => match &self.velocities {
                Some(v) if v.len() == n && self.weights.is_none() => {}
                Some(v) if v.len() != n => {
                    return Err(mismatch(format!("expected {n} velocities, got {}", v.len())))
                }
                _ => return Err(mismatch("velocities required, weights forbidden".into())),
            },
            ModelParams::Adaptive { .. } => match &self.weights {
                Some(w) if w.len() == n * n && self.velocities.is_none() => {}
                Some(w) if w.len() != n * n => {
                    return Err(mismatch(format!("expected {} weights, got {}", n * n, w.len())))
                }
                _ => return Err(mismatch("weights required, velocities forbidden".into())),
            },
        }
        Ok(())
    }

    /// Flat layout `[phases, velocities | weights]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = self.phases.phases().to_vec();
        if let Some(v) = &self.velocities {
            x.extend_from_slice(v);
        }
        if let Some(w) = &self.weights {
            x.extend_from_slice(w);
        }
        x
    }

    pub fn from_vector(x: &[f64], n: usize, params: &ModelParams) -> Result<Self> {
        if x.len() != params.state_dim(n) {
            return Err(Error::ShapeMismatch {
                model: params.name(),
                detail: format!("expected {} entries, got {}", params.state_dim(n), x.len()),
            });
        }
        let phases = PhaseConfiguration::new(x[..n].to_vec())?;
        let rest = x[n..].to_vec();
        Ok(match params {
            ModelParams::KuramotoSakaguchi { .. } => Self {
                phases,
                velocities: None,
                weights: None,
            },
            ModelParams::Inertia { .. } => Self {
                phases,
                velocities: Some(rest),
                weights: None,
            },
            ModelParams::Adaptive { .. } => Self {
                phases,
                velocities: None,
                weights: Some(rest),
            },
        })
    }
}

/// Time derivative of a [`DynamicState`], block by block.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative {
    pub phases: Vec<f64>,
    pub velocities: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
}

/// Right-hand side on the flat state vector. Phases may be unwrapped.
pub fn rhs_flat(params: &ModelParams, n: usize, x: &[f64], dx: &mut [f64]) {
    let inv_n = 1.0 / n as f64;
    match *params {
        ModelParams::KuramotoSakaguchi { omega, alpha, sigma } => {
            for i in 0..n {
                let s: f64 = (0..n).map(|j| (x[i] - x[j] + alpha).sin()).sum();
                dx[i] = omega - sigma * inv_n * s;
            }
        }
        ModelParams::Inertia {
            m_inertia,
            gamma,
            p,
            sigma,
            alpha,
        } => {
            let (phi, psi) = x.split_at(n);
            let (dphi, dpsi) = dx.split_at_mut(n);
            for i in 0..n {
                let s: f64 = (0..n).map(|j| (phi[i] - phi[j] + alpha).sin()).sum();
                dphi[i] = psi[i];
                dpsi[i] = (-gamma * psi[i] + p - sigma * inv_n * s) / m_inertia;
            }
        }
        ModelParams::Adaptive {
            omega,
            epsilon,
            alpha,
            beta,
            sigma,
        } => {
            let (phi, kappa) = x.split_at(n);
            let (dphi, dkappa) = dx.split_at_mut(n);
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    let d = phi[i] - phi[j];
                    let k = i * n + j;
                    s += kappa[k] * (d + alpha).sin();
                    dkappa[k] = -epsilon * (kappa[k] + (d + beta).sin());
                }
                dphi[i] = omega - sigma * inv_n * s;
            }
        }
    }
}

pub fn model_rhs(state: &DynamicState, params: &ModelParams) -> Result<StateDerivative> {
    state.check_shape(params)?;
    let n = state.n();
    let x = state.to_vector();
    let mut dx = vec![0.0; x.len()];
    rhs_flat(params, n, &x, &mut dx);
    let rest = dx.split_off(n);
    Ok(match params {
        ModelParams::KuramotoSakaguchi { .. } => StateDerivative {
            phases: dx,
            velocities: None,
            weights: None,
        },
        ModelParams::Inertia { .. } => StateDerivative {
            phases: dx,
            velocities: Some(rest),
            weights: None,
        },
        ModelParams::Adaptive { .. } => StateDerivative {
            phases: dx,
            velocities: None,
            weights: Some(rest),
        },
    })
}

/// Weights at which the adaptation field vanishes: `kappa*_ij = -sin(theta_i - theta_j + beta)`.
pub fn stationary_kappa(theta: &PhaseConfiguration, params: &ModelParams) -> Result<Vec<f64>> {
    let ModelParams::Adaptive { beta, .. } = *params else {
        return Err(Error::WrongModel {
            expected: "adaptive",
            got: params.name(),
        });
    };
    let ph = theta.phases();
    let n = ph.len();
    let mut kappa = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            kappa.push(-(ph[i] - ph[j] + beta).sin());
        }
    }
    Ok(kappa)
}

fn check_splay(theta: &PhaseConfiguration, m: u32, tol: f64) -> Result<f64> {
    let r = mean_field(theta.phases(), m).norm();
    if r < tol {
        Ok(r)
    } else {
        Err(Error::NotSplay { m, r, tol })
    }
}

/// Linearization blocks at a splay state.
///
/// `l` is the phase-phase block; for the adaptive model `b` (N x K),
/// `c` (K x N) and `lt = b c` are filled as well.
#[derive(Clone, Debug)]
pub struct JacobianBlocks {
    pub l: DMatrix<f64>,
    pub b: Option<DMatrix<f64>>,
    pub c: Option<DMatrix<f64>>,
    pub lt: Option<DMatrix<f64>>,
    pub traces: TraceSet,
    pub model: ModelParams,
}

impl JacobianBlocks {
    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    /// The Jacobian of the full first-order system.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        match self.model {
            ModelParams::KuramotoSakaguchi { .. } => self.l.clone(),
            ModelParams::Inertia { .. } => {
                let gamma = self.model.effective_gamma().unwrap_or(0.0);
                let mut j = DMatrix::zeros(2 * n, 2 * n);
                for i in 0..n {
                    j[(i, n + i)] = 1.0;
                    j[(n + i, n + i)] = -gamma;
                }
                j.view_mut((n, 0), (n, n)).copy_from(&self.l);
                j
            }
            ModelParams::Adaptive { epsilon, .. } => {
                let (b, c) = match (&self.b, &self.c) {
                    (Some(b), Some(c)) => (b, c),
                    _ => return self.l.clone(),
                };
                let k = b.ncols();
                let mut j = DMatrix::zeros(n + k, n + k);
                j.view_mut((0, 0), (n, n)).copy_from(&self.l);
                j.view_mut((0, n), (n, k)).copy_from(b);
                j.view_mut((n, 0), (k, n)).copy_from(c);
                for i in 0..k {
                    j[(n + i, n + i)] = -epsilon;
                }
                j
            }
        }
    }
}

/// Analytic Jacobian blocks at `theta`, which must satisfy the splay
/// condition of the model's natural moment to within `tol_splay`.
pub fn model_jacobian(
    theta: &PhaseConfiguration,
    params: &ModelParams,
    tol_splay: f64,
) -> Result<JacobianBlocks> {
    params.validate()?;
    check_splay(theta, params.natural_moment(), tol_splay)?;
    let ph = theta.phases();
    let n = ph.len();
    let inv_n = 1.0 / n as f64;
    let (sigma, alpha) = params.coupling();

    let mut l = DMatrix::<f64>::zeros(n, n);
    match *params {
        ModelParams::KuramotoSakaguchi { .. } | ModelParams::Inertia { .. } => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        l[(i, j)] = sigma * inv_n * (ph[i] - ph[j] + alpha).cos();
                    }
                }
            }
        }
        ModelParams::Adaptive { beta, .. } => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let d = ph[i] - ph[j];
                        l[(i, j)] = -sigma * inv_n * (d + beta).sin() * (d + alpha).cos();
                    }
                }
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }

    let (b, c, lt) = match *params {
        ModelParams::Adaptive { epsilon, beta, .. } => {
            let k = n * n;
            let mut b = DMatrix::<f64>::zeros(n, k);
            let mut c = DMatrix::<f64>::zeros(k, n);
            for i in 0..n {
                for col in 0..n {
                    b[(i, i * n + col)] = -sigma * inv_n * (ph[i] - ph[col] + alpha).sin();
                }
            }
            for row_k in 0..n {
                for row_l in 0..n {
                    if row_k == row_l {
                        continue;
                    }
                    let v = -epsilon * (ph[row_k] - ph[row_l] + beta).cos();
                    let row = row_k * n + row_l;
                    c[(row, row_k)] += v;
                    c[(row, row_l)] -= v;
                }
            }
            let lt = &b * &c;
            (Some(b), Some(c), Some(lt))
        }
        _ => (None, None, None),
    };

    let traces = TraceSet::from_blocks(&l, lt.as_ref());
    Ok(JacobianBlocks {
        l,
        b,
        c,
        lt,
        traces,
        model: *params,
    })
}

/// Frequency `Omega` of the rotating splay solution.
pub fn collective_frequency(
    theta: &PhaseConfiguration,
    params: &ModelParams,
    tol_splay: f64,
) -> Result<f64> {
    params.validate()?;
    check_splay(theta, params.natural_moment(), tol_splay)?;
    Ok(match *params {
        ModelParams::KuramotoSakaguchi { omega, .. } => omega,
        ModelParams::Inertia { gamma, p, .. } => p / gamma,
        ModelParams::Adaptive {
            omega,
            alpha,
            beta,
            sigma,
            ..
        } => omega + 0.5 * sigma * (beta - alpha).cos(),
    })
}

/// The rotating splay solution's state at `t = 0`: phases `theta`, plus
/// `psi = Omega 1` (inertia) or `kappa = kappa*(theta)` (adaptive).
pub fn splay_dynamic_state(
    theta: &PhaseConfiguration,
    params: &ModelParams,
    tol_splay: f64,
) -> Result<DynamicState> {
    let omega = collective_frequency(theta, params, tol_splay)?;
    let n = theta.n();
    Ok(match params {
        ModelParams::KuramotoSakaguchi { .. } => DynamicState {
            phases: theta.clone(),
            velocities: None,
            weights: None,
        },
        ModelParams::Inertia { .. } => DynamicState {
            phases: theta.clone(),
            velocities: Some(vec![omega; n]),
            weights: None,
        },
        ModelParams::Adaptive { .. } => DynamicState {
            phases: theta.clone(),
            velocities: None,
            weights: Some(stationary_kappa(theta, params)?),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(v: &[f64]) -> PhaseConfiguration {
        PhaseConfiguration::new(v.to_vec()).unwrap()
    }

    fn ks(alpha: f64) -> ModelParams {
        ModelParams::KuramotoSakaguchi {
            omega: 0.7,
            alpha,
            sigma: 1.0,
        }
    }

    #[test]
    fn phases_are_normalized() {
        let p = cfg(&[-0.5, 7.0, TAU, -1e-18]);
        for &x in p.phases() {
            assert!((0.0..TAU).contains(&x));
        }
        assert!((p.phases()[0] - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(p.phases()[2], 0.0);
        assert_eq!(p.n(), 4);
    }

    #[test]
    fn configuration_errors() {
        assert!(matches!(
            PhaseConfiguration::new(vec![1.0]),
            Err(Error::TooFewOscillators(1))
        ));
        assert!(matches!(
            PhaseConfiguration::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinitePhase { index: 1, .. })
        ));
    }

    #[test]
    fn order_parameter_examples() {
        let z = order_parameter(&cfg(&[0.0, PI]), 1).unwrap();
        assert!(z.r < 1e-15 && z.z.norm() < 1e-15);

        let z = order_parameter(&cfg(&[0.0, 0.0, 0.0]), 1).unwrap();
        assert!((z.r - 1.0).abs() < 1e-15 && z.rho == 0.0);

        let z = order_parameter(&cfg(&[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]), 3).unwrap();
        assert!((z.r - 1.0).abs() < 1e-14);

        assert!(matches!(
            order_parameter(&cfg(&[0.0, 1.0]), 0),
            Err(Error::InvalidMoment)
        ));
    }

    #[test]
    fn order_parameter_polar_consistency() {
        let z = order_parameter(&cfg(&[0.1, 0.5, 2.0, 4.0]), 2).unwrap();
        let back = Complex64::from_polar(z.r, z.rho);
        assert!((back - z.z).norm() < 1e-15);
        assert!((0.0..TAU).contains(&z.rho));
    }

    #[test]
    fn ks_rhs_with_equal_phases() {
        let alpha = 0.9;
        let state = DynamicState {
            phases: cfg(&[1.3; 5]),
            velocities: None,
            weights: None,
        };
        let d = model_rhs(&state, &ks(alpha)).unwrap();
        for v in d.phases {
            assert!((v - (0.7 - alpha.sin())).abs() < 1e-15);
        }
    }

    #[test]
    fn ks_rhs_at_splay_is_omega() {
        let state = DynamicState {
            phases: cfg(&[0.0, PI / 2.0, PI, 1.5 * PI]),
            velocities: None,
            weights: None,
        };
        let d = model_rhs(&state, &ks(2.1)).unwrap();
        for v in d.phases {
            assert!((v - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn inertia_rhs_velocity_balance() {
        let params = ModelParams::Inertia {
            m_inertia: 1.0,
            gamma: 0.5,
            p: 2.0,
            sigma: 1.0,
            alpha: 0.4,
        };
        let theta = cfg(&[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]);
        let state = splay_dynamic_state(&theta, &params, DEFAULT_TOL_SPLAY).unwrap();
        let d = model_rhs(&state, &params).unwrap();
        for v in d.velocities.unwrap() {
            assert!(v.abs() < 1e-14);
        }
        for v in d.phases {
            assert_eq!(v, 4.0);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let state = DynamicState {
            phases: cfg(&[0.0, PI]),
            velocities: None,
            weights: None,
        };
        let params = ModelParams::Inertia {
            m_inertia: 1.0,
            gamma: 1.0,
            p: 0.0,
            sigma: 1.0,
            alpha: 0.0,
        };
        assert!(matches!(model_rhs(&state, &params), Err(Error::ShapeMismatch { .. })));
        let wrong = DynamicState {
            velocities: Some(vec![0.0; 3]),
            ..state
        };
        assert!(matches!(model_rhs(&wrong, &params), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn stationary_kappa_examples() {
        let params = ModelParams::Adaptive {
            omega: 0.0,
            epsilon: 0.3,
            alpha: 0.2,
            beta: 0.0,
            sigma: 1.0,
        };
        let k = stationary_kappa(&cfg(&[PI / 2.0, 0.0]), &params).unwrap();
        assert_eq!(k[0], 0.0);
        assert!((k[1] + 1.0).abs() < 1e-15);
        assert!((k[2] - 1.0).abs() < 1e-15);
        assert!(matches!(
            stationary_kappa(&cfg(&[0.0, 1.0]), &ks(0.0)),
            Err(Error::WrongModel { .. })
        ));
    }

    #[test]
    fn stationary_kappa_zeroes_weight_dynamics() {
        let params = ModelParams::Adaptive {
            omega: 0.1,
            epsilon: 0.3,
            alpha: 0.2,
            beta: 1.1,
            sigma: 1.0,
        };
        let theta = cfg(&[0.3, 1.9, 2.2, 5.0, 0.01]);
        let state = DynamicState {
            weights: Some(stationary_kappa(&theta, &params).unwrap()),
            phases: theta,
            velocities: None,
        };
        let d = model_rhs(&state, &params).unwrap();
        assert!(d.weights.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ks_jacobian_two_oscillators() {
        let alpha = 0.8;
        let jb = model_jacobian(&cfg(&[0.0, PI]), &ks(alpha), DEFAULT_TOL_SPLAY).unwrap();
        let c = alpha.cos() / 2.0;
        let want = DMatrix::from_row_slice(2, 2, &[c, -c, -c, c]);
        assert!((&jb.l - want).norm() < 1e-15);
        assert!((jb.traces.tr_l - alpha.cos()).abs() < 1e-15);
    }

    #[test]
    fn ks_jacobian_equidistant_four() {
        let theta = cfg(&[0.0, PI / 2.0, PI, 1.5 * PI]);
        for alpha in [0.0, 1.0, 2.5, 4.0] {
            let jb = model_jacobian(&theta, &ks(alpha), DEFAULT_TOL_SPLAY).unwrap();
            let t = &jb.traces;
            assert!((t.tr_l - alpha.cos()).abs() < 1e-14);
            assert!(((t.tr_l * t.tr_l - t.tr_l2) / 2.0 - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobian_rejects_non_splay() {
        let r = model_jacobian(&cfg(&[0.0, 0.1, 0.2]), &ks(1.0), DEFAULT_TOL_SPLAY);
        assert!(matches!(r, Err(Error::NotSplay { m: 1, .. })));
    }

    #[test]
    fn adaptive_blocks_are_consistent() {
        let params = ModelParams::Adaptive {
            omega: 0.0,
            epsilon: 0.5,
            alpha: 0.3,
            beta: 0.3,
            sigma: 1.0,
        };
        // equidistant n = 6, k = 1 is a 2-splay state
        let theta = cfg(&(0..6).map(|j| j as f64 * PI / 3.0).collect::<Vec<_>>());
        let jb = model_jacobian(&theta, &params, DEFAULT_TOL_SPLAY).unwrap();
        let (b, c, lt) = (jb.b.as_ref().unwrap(), jb.c.as_ref().unwrap(), jb.lt.as_ref().unwrap());
        assert_eq!(b.shape(), (6, 36));
        assert_eq!(c.shape(), (36, 6));
        assert!((b * c - lt).norm() <= 1e-12 * lt.norm().max(1.0));
        for i in 0..6 {
            assert!(jb.l.row(i).sum().abs() < 1e-15);
        }
        assert_eq!(jb.full_matrix().shape(), (42, 42));
    }

    #[test]
    fn collective_frequency_examples() {
        let theta = cfg(&[0.0, PI]);
        let p = ModelParams::KuramotoSakaguchi {
            omega: 1.3,
            alpha: 0.0,
            sigma: 1.0,
        };
        assert_eq!(collective_frequency(&theta, &p, DEFAULT_TOL_SPLAY).unwrap(), 1.3);
        let p = ModelParams::Inertia {
            m_inertia: 1.0,
            gamma: 0.5,
            p: 2.0,
            sigma: 1.0,
            alpha: 0.0,
        };
        assert_eq!(collective_frequency(&theta, &p, DEFAULT_TOL_SPLAY).unwrap(), 4.0);
        let p = ModelParams::Adaptive {
            omega: 0.0,
            epsilon: 1.0,
            alpha: 0.4,
            beta: 0.4,
            sigma: 1.0,
        };
        let four = cfg(&[0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]);
        assert!((collective_frequency(&four, &p, DEFAULT_TOL_SPLAY).unwrap() - 0.5).abs() < 1e-15);
        assert!(collective_frequency(&cfg(&[0.0, 0.0]), &p, DEFAULT_TOL_SPLAY).is_err());
    }

    #[test]
    fn params_validation() {
        let bad = ModelParams::Inertia {
            m_inertia: 1.0,
            gamma: 0.0,
            p: 0.0,
            sigma: 1.0,
            alpha: 0.0,
        };
        assert!(bad.validate().is_err());
        let bad = ModelParams::Adaptive {
            omega: 0.0,
            epsilon: -1.0,
            alpha: 0.0,
            beta: 0.0,
            sigma: 1.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn params_json_defaults() {
        let p: ModelParams = serde_json::from_str(r#"{"kind":"ks","omega":1.0,"alpha":2.0}"#).unwrap();
        assert_eq!(
            p,
            ModelParams::KuramotoSakaguchi {
                omega: 1.0,
                alpha: 2.0,
                sigma: 1.0
            }
        );
        let p: ModelParams =
            serde_json::from_str(r#"{"kind":"inertia","gamma":0.5,"p":2.0,"alpha":0.0}"#).unwrap();
        assert_eq!(p.effective_gamma(), Some(0.5));
    }
}
