//! Closed-form transverse stability of splay states.
//!
//! Everything here is driven by a handful of traces of the phase Jacobian
//! `L` (and, for adaptive networks, of `Lt = B C`):
//!
//! * plain phase models: the two nontrivial eigenvalues solve
//!   `lambda^2 - tr(L) lambda + (tr(L)^2 - tr(L^2))/2 = 0`;
//! * inertia: each of those spawns two roots of `mu^2 + gamma mu - lambda = 0`,
//!   equivalently a quartic in `mu`;
//! * adaptive: a quartic whose coefficients mix the traces of `L`, `Lt`,
//!   `Lt^2` and `L Lt` with the dissipation `eps`.

pub mod quartic;

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{mean_field, JacobianBlocks, ModelParams};
use crate::splay::{SplayState, TangentBasis};

pub use quartic::{quartic_roots, QuarticCoeffs};

/// Half-width of the band around a sign change inside which a verdict is `Marginal`.
pub const BOUNDARY_BAND: f64 = 1e-6;

/// Trace invariants of the splay Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    #[serde(rename = "trL")]
    pub tr_l: f64,
    #[serde(rename = "trL2")]
    pub tr_l2: f64,
    #[serde(rename = "trLt", default, skip_serializing_if = "Option::is_none")]
    pub tr_lt: Option<f64>,
    #[serde(rename = "trLt2", default, skip_serializing_if = "Option::is_none")]
    pub tr_lt2: Option<f64>,
    #[serde(rename = "trLLt", default, skip_serializing_if = "Option::is_none")]
    pub tr_llt: Option<f64>,
}

/// `tr(A B)` without forming the product.
fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

impl TraceSet {
    pub fn plain(tr_l: f64, tr_l2: f64) -> Self {
        Self {
            tr_l,
            tr_l2,
            tr_lt: None,
            tr_lt2: None,
            tr_llt: None,
        }
    }

    pub fn from_blocks(l: &DMatrix<f64>, lt: Option<&DMatrix<f64>>) -> Self {
        let mut t = Self::plain(l.trace(), trace_of_product(l, l));
        if let Some(lt) = lt {
            t.tr_lt = Some(lt.trace());
            t.tr_lt2 = Some(trace_of_product(lt, lt));
            t.tr_llt = Some(trace_of_product(l, lt));
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        [self.tr_l, self.tr_l2].iter().all(|x| x.is_finite())
            && [self.tr_lt, self.tr_lt2, self.tr_llt]
                .iter()
                .flatten()
                .all(|x| x.is_finite())
    }

    /// `(tr(L)^2 - tr(L^2)) / 2`, the product of the two nontrivial eigenvalues.
    pub fn determinant_term(&self) -> f64 {
        0.5 * (self.tr_l * self.tr_l - self.tr_l2)
    }
}

/// Phase-plane type of a splay state's transverse linearization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    StableNode,
    StableFocus,
    UnstableNode,
    UnstableFocus,
    Saddle,
    Marginal,
}

impl Classification {
    pub fn is_stable(self) -> bool {
        matches!(self, Classification::StableNode | Classification::StableFocus)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::StableNode => "StableNode",
            Classification::StableFocus => "StableFocus",
            Classification::UnstableNode => "UnstableNode",
            Classification::UnstableFocus => "UnstableFocus",
            Classification::Saddle => "Saddle",
            Classification::Marginal => "Marginal",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Analytic verdict for one splay state (or one abstract trace point).
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub analytic_eigenvalues: Vec<Complex64>,
    pub classification: Classification,
    pub max_real_part: f64,
    /// Positive inside the stable region, negative outside: `-max_real_part`.
    pub boundary_distance: f64,
    /// Largest distance between an analytic eigenvalue and its matched numeric one.
    pub residual_vs_oracle: Option<f64>,
}

#[derive(Serialize)]
struct ReportWire<'a> {
    eigenvalues: Vec<[f64; 2]>,
    class: &'a str,
    max_re: f64,
    residual_vs_oracle: Option<f64>,
}

impl Serialize for StabilityReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportWire {
            eigenvalues: self.analytic_eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            class: self.classification.as_str(),
            max_re: self.max_real_part,
            residual_vs_oracle: self.residual_vs_oracle,
        }
        .serialize(s)
    }
}

impl StabilityReport {
    /// Report whose class is read off the eigenvalues themselves.
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>) -> Self {
        let classification = classify_eigenvalues(&eigenvalues);
        Self::with_class(eigenvalues, classification)
    }

    fn with_class(eigenvalues: Vec<Complex64>, classification: Classification) -> Self {
        let max_real_part = max_real_part(&eigenvalues);
        Self {
            analytic_eigenvalues: eigenvalues,
            classification,
            max_real_part,
            boundary_distance: -max_real_part,
            residual_vs_oracle: None,
        }
    }
}

pub fn max_real_part(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Class from a list of eigenvalues: a zero eigenvalue or a leading real
/// part inside the band gives `Marginal`; mixed signs give `Saddle`.
pub fn classify_eigenvalues(values: &[Complex64]) -> Classification {
    let max_re = max_real_part(values);
    let min_re = values.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if max_re.abs() <= BOUNDARY_BAND || values.iter().any(|z| z.norm() <= BOUNDARY_BAND) {
        return Classification::Marginal;
    }
    let oscillatory = values.iter().any(|z| z.im.abs() > BOUNDARY_BAND);
    if max_re < 0.0 {
        if oscillatory {
            Classification::StableFocus
        } else {
            Classification::StableNode
        }
    } else if min_re < -BOUNDARY_BAND {
        Classification::Saddle
    } else if oscillatory {
        Classification::UnstableFocus
    } else {
        Classification::UnstableNode
    }
}

/// Coefficients `(a_{N-1}, a_{N-2}) = (-tr L, (tr(L)^2 - tr(L^2))/2)` of the
/// reduced characteristic polynomial of a matrix with an `(N-2)`-fold zero eigenvalue.
pub fn reduced_char_coeffs(l: &DMatrix<f64>) -> (f64, f64) {
    let t = TraceSet::from_blocks(l, None);
    (-t.tr_l, t.determinant_term())
}

/// Both roots of `lambda^2 - tr(L) lambda + (tr(L)^2 - tr(L^2))/2`.
pub fn transverse_eigenvalues(traces: &TraceSet) -> (Complex64, Complex64) {
    let tr = traces.tr_l;
    let det = traces.determinant_term();
    let disc = 2.0 * traces.tr_l2 - tr * tr;
    if disc >= 0.0 {
        let q = 0.5 * (tr + disc.sqrt().copysign(tr));
        if q == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let (a, b) = (q, det / q);
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im))
    }
}

/// Stability class in the `(tr L, tr L^2)` plane.
pub fn classify_planar(traces: &TraceSet) -> Classification {
    let tr = traces.tr_l;
    let det = traces.determinant_term();
    if det.abs() <= BOUNDARY_BAND {
        return Classification::Marginal;
    }
    if det < 0.0 {
        return Classification::Saddle;
    }
    if tr.abs() <= BOUNDARY_BAND {
        return Classification::Marginal;
    }
    // real roots iff 2 tr(L^2) >= tr(L)^2
    let node = 2.0 * traces.tr_l2 >= tr * tr;
    match (tr < 0.0, node) {
        (true, true) => Classification::StableNode,
        (true, false) => Classification::StableFocus,
        (false, true) => Classification::UnstableNode,
        (false, false) => Classification::UnstableFocus,
    }
}

/// Report for a generic phase model given only its traces.
pub fn planar_report(traces: &TraceSet) -> StabilityReport {
    let (a, b) = transverse_eigenvalues(traces);
    StabilityReport::with_class(vec![a, b], classify_planar(traces))
}

/// Traces of the Kuramoto-Sakaguchi Jacobian on the 1-splay manifold.
pub fn ks_traces(sigma: f64, alpha: f64, r2: f64) -> TraceSet {
    TraceSet::plain(
        sigma * alpha.cos(),
        0.5 * sigma * sigma * ((2.0 * alpha).cos() + r2 * r2),
    )
}

/// Closed-form stability of a Kuramoto-Sakaguchi 1-splay state.
///
/// The eigenvalues are `(sigma/2)(cos a +- sqrt(R2^2 - sin^2 a))`; the state
/// is stable iff `sigma cos a < 0`.
pub fn ks_stability(alpha: f64, state: &SplayState, sigma: f64) -> Result<StabilityReport> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "coupling must be > 0".into(),
        });
    }
    let r1 = mean_field(state.theta.phases(), 1).norm();
    if r1 >= state.tol {
        return Err(Error::NotSplay {
            m: 1,
            r: r1,
            tol: state.tol,
        });
    }
    let r2 = state.r2;
    let half = 0.5 * sigma;
    let disc = r2 * r2 - alpha.sin().powi(2);
    let (a, b) = if disc >= 0.0 {
        let s = disc.sqrt();
        (
            Complex64::new(half * (alpha.cos() + s), 0.0),
            Complex64::new(half * (alpha.cos() - s), 0.0),
        )
    } else {
        let s = (-disc).sqrt();
        (
            Complex64::new(half * alpha.cos(), half * s),
            Complex64::new(half * alpha.cos(), -half * s),
        )
    };
    Ok(StabilityReport::with_class(
        vec![a, b],
        classify_planar(&ks_traces(sigma, alpha, r2)),
    ))
}

fn require_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be > 0, got {x}"),
        })
    }
}

/// `mu^4 + 2 g mu^3 + (g^2 - trL) mu^2 - g trL mu + (trL^2 - trL2)/2`.
pub fn inertia_quartic(gamma: f64, traces: &TraceSet) -> QuarticCoeffs {
    let tr = traces.tr_l;
    [
        1.0,
        2.0 * gamma,
        gamma * gamma - tr,
        -gamma * tr,
        traces.determinant_term(),
    ]
}

/// The four nontrivial eigenvalues of the inertia Jacobian, via the quartic.
pub fn inertia_eigenvalues(gamma: f64, traces: &TraceSet) -> Result<[Complex64; 4]> {
    require_positive("gamma", gamma)?;
    if !traces.is_finite() {
        return Err(Error::NonFinite("traces"));
    }
    quartic_roots(&inertia_quartic(gamma, traces))
}

/// The same four values from `mu = -g/2 +- sqrt(g^2/4 + lambda_{1,2})`.
pub fn inertia_eigenvalues_nested(gamma: f64, traces: &TraceSet) -> [Complex64; 4] {
    let (l1, l2) = transverse_eigenvalues(traces);
    let g2 = Complex64::new(0.25 * gamma * gamma, 0.0);
    let half = Complex64::new(-0.5 * gamma, 0.0);
    let s1 = (g2 + l1).sqrt();
    let s2 = (g2 + l2).sqrt();
    [half + s1, half - s1, half + s2, half - s2]
}

pub fn inertia_report(gamma: f64, traces: &TraceSet) -> Result<StabilityReport> {
    Ok(StabilityReport::from_eigenvalues(
        inertia_eigenvalues(gamma, traces)?.to_vec(),
    ))
}

/// Stability of a Kuramoto-Sakaguchi-with-inertia 1-splay state from `(gamma, sigma, alpha, R2)`.
pub fn ks_inertia_report(gamma: f64, sigma: f64, alpha: f64, r2: f64) -> Result<StabilityReport> {
    require_positive("sigma", sigma)?;
    inertia_report(gamma, &ks_traces(sigma, alpha, r2))
}

/// `gamma' = sqrt(sigma) gamma`. Stability at `(sigma, gamma)` equals stability
/// at `(1, gamma / sqrt(sigma))`, since `mu -> sqrt(sigma) mu` removes `sigma`
/// from the quartic.
pub fn sigma_rescale(sigma: f64, gamma: f64) -> Result<f64> {
    require_positive("sigma", sigma)?;
    Ok(sigma.sqrt() * gamma)
}

/// Which boundary surface to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryQuery {
    /// Solve for `tr(L^2)` on the Hopf surface at fixed `(gamma, tr L)`.
    InertiaGeneric { gamma: f64, tr_l: f64 },
    /// Solve for `R2^2` on the Hopf surface at fixed `(gamma, sigma, alpha)`.
    KsInertia { gamma: f64, sigma: f64, alpha: f64 },
}

/// A point where a conjugate pair of the quartic crosses the imaginary axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HopfBoundaryPoint {
    pub crossing_frequency: f64,
    pub query: BoundaryQuery,
    /// The solved coordinate: `tr(L^2)` (generic) or `R2^2` (KS with inertia).
    pub value: f64,
    /// `|p(i v)|` of the quartic with the solved coordinate.
    pub residual: f64,
    /// The same coordinate from the damping-linear variant of the surface
    /// equation, and its quartic residual at the same `v`.
    pub linear_variant_value: f64,
    pub linear_variant_residual: f64,
    /// For `KsInertia`: whether `R2^2` lands in `[0, 1]`.
    pub physical: bool,
}

/// Evaluate the Hopf surface. The crossing frequency solves the imaginary
/// part, `v^2 = -tr(L)/2`; the real part then fixes the remaining coordinate.
pub fn hopf_boundary(query: BoundaryQuery) -> Result<HopfBoundaryPoint> {
    match query {
        BoundaryQuery::InertiaGeneric { gamma, tr_l } => {
            require_positive("gamma", gamma)?;
            if !(tr_l < 0.0) {
                return Err(Error::NoCrossing(format!("tr(L) = {tr_l} is not negative")));
            }
            let v = (-0.5 * tr_l).sqrt();
            let value = 0.5 * tr_l * tr_l + gamma * gamma * tr_l;
            let linear = 0.5 * tr_l * tr_l + gamma * tr_l;
            let res = |tr_l2: f64| {
                let c = inertia_quartic(gamma, &TraceSet::plain(tr_l, tr_l2));
                quartic::evaluate(&c, Complex64::new(0.0, v)).norm()
            };
            Ok(HopfBoundaryPoint {
                crossing_frequency: v,
                query,
                value,
                residual: res(value),
                linear_variant_value: linear,
                linear_variant_residual: res(linear),
                physical: true,
            })
        }
        BoundaryQuery::KsInertia {
            gamma,
            sigma,
            alpha,
        } => {
            require_positive("gamma", gamma)?;
            require_positive("sigma", sigma)?;
            let c = alpha.cos();
            if !(c < 0.0) {
                return Err(Error::NoCrossing(format!("cos(alpha) = {c} is not negative")));
            }
            let v = (-0.5 * sigma * c).sqrt();
            let s2 = alpha.sin().powi(2);
            let value = s2 + 2.0 * gamma * gamma * c / sigma;
            let linear = s2 + 2.0 * gamma * c / sigma;
            let res = |r2_sq: f64| {
                let tr_l = sigma * c;
                let det = 0.25 * sigma * sigma * (1.0 - r2_sq);
                let coeffs = [1.0, 2.0 * gamma, gamma * gamma - tr_l, -gamma * tr_l, det];
                quartic::evaluate(&coeffs, Complex64::new(0.0, v)).norm()
            };
            Ok(HopfBoundaryPoint {
                crossing_frequency: v,
                query,
                value,
                residual: res(value),
                linear_variant_value: linear,
                linear_variant_residual: res(linear),
                physical: (0.0..=1.0).contains(&value),
            })
        }
    }
}

/// `cos(alpha)` on the KS-with-inertia Hopf surface for given `(gamma, sigma, R2)`:
/// the negative root of `sigma c^2 - 2 gamma^2 c - sigma (1 - R2^2) = 0`.
pub fn ks_inertia_boundary_cos_alpha(gamma: f64, sigma: f64, r2: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    require_positive("sigma", sigma)?;
    let g2 = gamma * gamma;
    let rest = sigma * sigma * (1.0 - r2 * r2);
    // g2 - sqrt(g2^2 + rest), rewritten to avoid cancellation
    let root = (g2 * g2 + rest).sqrt();
    Ok(-rest / (sigma * (g2 + root)))
}

/// Coefficients and roots of the adaptive quartic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptiveQuartic {
    pub coefficients: QuarticCoeffs,
    pub roots: [Complex64; 4],
    pub stable: bool,
}

pub fn adaptive_quartic_coeffs(traces: &TraceSet, epsilon: f64) -> Result<QuarticCoeffs> {
    let (Some(tlt), Some(tlt2), Some(tllt)) = (traces.tr_lt, traces.tr_lt2, traces.tr_llt) else {
        return Err(Error::MissingAdaptiveTraces);
    };
    let tl = traces.tr_l;
    let d = tl * tl - traces.tr_l2;
    let e = tl * tlt - tllt;
    let f = tlt * tlt - tlt2;
    let eps = epsilon;
    Ok([
        1.0,
        2.0 * eps - tl,
        eps * eps - 2.0 * eps * tl + 0.5 * d - tlt,
        e + eps * (d - tlt) - eps * eps * tl,
        0.5 * (f + 2.0 * eps * e + eps * eps * d),
    ])
}

pub fn adaptive_quartic(traces: &TraceSet, epsilon: f64) -> Result<AdaptiveQuartic> {
    require_positive("epsilon", epsilon)?;
    if !traces.is_finite() {
        return Err(Error::NonFinite("traces"));
    }
    let coefficients = adaptive_quartic_coeffs(traces, epsilon)?;
    let roots = quartic_roots(&coefficients)?;
    let stable = roots.iter().all(|z| z.re < 0.0);
    Ok(AdaptiveQuartic {
        coefficients,
        roots,
        stable,
    })
}

/// Analytic report from the Jacobian blocks at a concrete splay state:
/// reduced quadratic (KS), inertia quartic in `gamma / M` (inertia) or
/// adaptive quartic.
pub fn blocks_report(blocks: &JacobianBlocks) -> Result<StabilityReport> {
    match blocks.model {
        ModelParams::KuramotoSakaguchi { .. } => Ok(planar_report(&blocks.traces)),
        ModelParams::Inertia { .. } => {
            let gamma = blocks.model.effective_gamma().unwrap_or(0.0);
            inertia_report(gamma, &blocks.traces)
        }
        ModelParams::Adaptive { epsilon, .. } => {
            let q = adaptive_quartic(&blocks.traces, epsilon)?;
            Ok(StabilityReport::from_eigenvalues(q.roots.to_vec()))
        }
    }
}

/// Whether the tangent space of the splay manifold lies in the kernels of
/// both `L` and `B C`, which the adaptive quartic relies on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangentKernelCheck {
    pub applicable: bool,
    pub l_residual: f64,
    pub bc_residual: f64,
}

pub fn tangent_kernel_check(blocks: &JacobianBlocks, basis: &TangentBasis, tol: f64) -> TangentKernelCheck {
    let lt = match (&blocks.lt, &blocks.b, &blocks.c) {
        (Some(lt), _, _) => Some(lt.clone()),
        (None, Some(b), Some(c)) => Some(b * c),
        _ => None,
    };
    let mut l_residual: f64 = 0.0;
    let mut bc_residual: f64 = 0.0;
    for v in &basis.vectors {
        l_residual = l_residual.max((&blocks.l * v).norm());
        if let Some(lt) = &lt {
            bc_residual = bc_residual.max((lt * v).norm());
        }
    }
    let scale = blocks
        .l
        .norm()
        .max(lt.as_ref().map_or(0.0, |m| m.norm()))
        .max(f64::MIN_POSITIVE);
    TangentKernelCheck {
        applicable: l_residual.max(bc_residual) < tol * scale,
        l_residual,
        bc_residual,
    }
}
