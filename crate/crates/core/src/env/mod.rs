//! RIS-assisted multiuser MISO downlink model.
//!
//! A BS with `M` antennas serves `K` single-antenna users through a passive
//! reflecting surface with `N` elements. The direct BS→user link is absent, so
//! user `k` sees the composite channel `h_{k,2}ᵀ · Φ · H₁` (plain transpose).
//!
//! Conventions used throughout the crate:
//! - noise power defaults to 1.0 (linear) and `P_t = 10^(pt_db / 10)`;
//! - the power constraint uses the Hermitian trace `tr(G·Gᴴ)`;
//! - user and element indices are 0-based.

mod action;
mod channel;
mod config;
mod state;

pub use action::{
    decode_action, encode_action, init_action, init_beamformer, project_phases, project_power,
    ActionVector, JointAction,
};
pub use channel::{
    effective_channel, effective_channels, gain_matrix, generate_channels, sinr, sinrs, sum_rate,
    sum_rate_from_gains, ChannelSet,
};
pub use config::SystemConfig;
pub use state::{build_state, env_step, StateVector};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Complex matrix with column-major storage.
pub type CMatrix = DMatrix<Complex64>;
/// Complex column vector.
pub type CVector = DVector<Complex64>;

/// `tr(G·Gᴴ)`, i.e. the squared Frobenius norm.
pub fn trace_power(g: &CMatrix) -> f64 {
    g.iter().map(|z| z.norm_sqr()).sum()
}
