use num_complex::Complex64;

use super::{trace_power, CMatrix, CVector, SystemConfig};
use crate::error::{Error, Result};

/// Beamformer `G` (`M×K`) together with the RIS reflection coefficients
/// (the diagonal of `Φ`).
#[derive(Clone, Debug, PartialEq)]
pub struct JointAction {
    pub g: CMatrix,
    pub phases: CVector,
}

impl JointAction {
    /// Checks `tr(G·Gᴴ) = P_t` (relative tolerance) and unit-modulus phases.
    pub fn is_feasible(&self, pt: f64, power_rel_tol: f64, modulus_tol: f64) -> bool {
        let power_ok = (trace_power(&self.g) - pt).abs() <= power_rel_tol * pt;
        let phases_ok = self
            .phases
            .iter()
            .all(|z| (z.norm() - 1.0).abs() <= modulus_tol);
        power_ok && phases_ok
    }
}

/// Flat real action. Layout: `Re(G)` column-major (`MK`), `Im(G)` (`MK`),
/// `Re(phases)` (`N`), `Im(phases)` (`N`).
#[derive(Clone, Debug, PartialEq)]
pub struct ActionVector(pub Vec<f64>);

impl ActionVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// First `K` columns of the `M×M` identity, scaled to total power `pt`.
pub fn init_beamformer(antennas: usize, users: usize, pt: f64) -> CMatrix {
    let scale = (pt / users as f64).sqrt();
    CMatrix::from_fn(antennas, users, |m, k| {
        if m == k {
            Complex64::new(scale, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Scales `g_raw` so that `tr(G·Gᴴ) = pt`. An all-zero (or non-finite)
/// input falls back to [`init_beamformer`].
pub fn project_power(g_raw: &CMatrix, pt: f64) -> CMatrix {
    let power = trace_power(g_raw);
    if power == 0.0 || !power.is_finite() {
        return init_beamformer(g_raw.nrows(), g_raw.ncols(), pt);
    }
    g_raw * Complex64::new((pt / power).sqrt(), 0.0)
}

/// Maps each entry onto the unit circle; exact zeros become `1 + 0j`.
pub fn project_phases(raw: &CVector) -> CVector {
    raw.map(|z| {
        let r = z.norm();
        if r == 0.0 || !r.is_finite() {
            Complex64::new(1.0, 0.0)
        } else {
            z / r
        }
    })
}

pub fn encode_action(action: &JointAction) -> ActionVector {
    let mut v = Vec::with_capacity(2 * action.g.len() + 2 * action.phases.len());
    v.extend(action.g.iter().map(|z| z.re));
    v.extend(action.g.iter().map(|z| z.im));
    v.extend(action.phases.iter().map(|z| z.re));
    v.extend(action.phases.iter().map(|z| z.im));
    ActionVector(v)
}

/// Unpacks a flat action and projects it onto the feasible set.
pub fn decode_action(v: &ActionVector, cfg: &SystemConfig) -> Result<JointAction> {
    let (m, n, k) = (cfg.antennas, cfg.elements, cfg.users);
    let mk = m * k;
    if v.len() != cfg.action_dim() {
        return Err(Error::Shape(format!(
            "action vector has length {}, expected 2MK + 2N = {}",
            v.len(),
            cfg.action_dim()
        )));
    }
    let x = v.as_slice();
    // from_fn visits entries column-major, matching the layout.
    let mut idx = 0;
    let g_raw = CMatrix::from_fn(m, k, |_, _| {
        let z = Complex64::new(x[idx], x[mk + idx]);
        idx += 1;
        z
    });
    let off = 2 * mk;
    let phases_raw = CVector::from_fn(n, |i, _| Complex64::new(x[off + i], x[off + n + i]));
    Ok(JointAction {
        g: project_power(&g_raw, cfg.pt_linear()),
        phases: project_phases(&phases_raw),
    })
}

/// Starting point: identity-based beamformer at full power and `Φ = I`.
pub fn init_action(cfg: &SystemConfig) -> JointAction {
    JointAction {
        g: init_beamformer(cfg.antennas, cfg.users, cfg.pt_linear()),
        phases: CVector::from_element(cfg.elements, Complex64::new(1.0, 0.0)),
    }
}
