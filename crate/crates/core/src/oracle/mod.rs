//! Numeric ground truth: dense spectra, finite-difference Jacobians and
//! analytic-vs-numeric spectrum matching.

pub mod compare;
pub mod eigen;
pub mod fd;

use num_complex::Complex64;

use crate::error::Result;
use crate::model::{JacobianBlocks, ModelParams};
use crate::stability::StabilityReport;

pub use compare::{spectrum_compare, spectrum_compare_with, strip_clusters, CompareOptions, SpectrumReport};
pub use eigen::dense_eigenvalues;
pub use fd::{fd_jacobian, model_fd_jacobian};

/// Known structural eigenvalues of the full Jacobian at a splay state:
/// `N - 2` zeros, plus `N - 2` at `-gamma` (inertia) or `N^2 - 2` at `-eps` (adaptive).
pub fn trivial_clusters(blocks: &JacobianBlocks) -> Vec<(Complex64, usize)> {
    let n = blocks.n();
    let zeros = (Complex64::new(0.0, 0.0), n.saturating_sub(2));
    match blocks.model {
        ModelParams::KuramotoSakaguchi { .. } => vec![zeros],
        ModelParams::Inertia { .. } => {
            let gamma = blocks.model.effective_gamma().unwrap_or(0.0);
            vec![zeros, (Complex64::new(-gamma, 0.0), n.saturating_sub(2))]
        }
        ModelParams::Adaptive { epsilon, .. } => {
            vec![zeros, (Complex64::new(-epsilon, 0.0), (n * n).saturating_sub(2))]
        }
    }
}

/// Numeric spectrum of the full Jacobian with the structural eigenvalues
/// removed: 2 values for phase models, 4 for inertia and adaptive.
pub fn nontrivial_spectrum(blocks: &JacobianBlocks) -> Result<Vec<Complex64>> {
    let ev = dense_eigenvalues(&blocks.full_matrix())?;
    Ok(strip_clusters(&ev, &trivial_clusters(blocks)))
}

/// Largest real part among the nontrivial numeric eigenvalues.
pub fn oracle_max_real_part(blocks: &JacobianBlocks) -> Result<f64> {
    Ok(nontrivial_spectrum(blocks)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Fill `residual_vs_oracle` with the largest distance between an analytic
/// eigenvalue and its matched nontrivial numeric eigenvalue.
pub fn attach_oracle_residual(mut report: StabilityReport, blocks: &JacobianBlocks) -> Result<StabilityReport> {
    let numeric = nontrivial_spectrum(blocks)?;
    let cmp = spectrum_compare(&report.analytic_eigenvalues, &numeric, f64::INFINITY);
    report.residual_vs_oracle = Some(cmp.max_distance());
    Ok(report)
}
