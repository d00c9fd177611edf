//! Construction and linear stability analysis of generalized m-splay states
//! in globally coupled phase oscillator networks.

// `!(x > 0.0)` style guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod integrate;
pub mod model;
pub mod oracle;
pub mod splay;
pub mod stability;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    collective_frequency, mean_field, model_jacobian, model_rhs, order_parameter, DynamicState,
    JacobianBlocks, ModelParams, OrderParameterMoment, PhaseConfiguration, DEFAULT_TOL_SPLAY,
};
pub use splay::{
    antipodal_pairs_family, is_m_splay, random_splay, splay_tangent_basis, twisted_state,
    SplayState, TangentBasis,
};
pub use stability::{Classification, StabilityReport, TraceSet};
