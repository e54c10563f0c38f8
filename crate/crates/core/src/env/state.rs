use super::{encode_action, gain_matrix, sum_rate_from_gains, ChannelSet, JointAction, SystemConfig};
use crate::error::{Error, Result};

/// Real observation of length `D_s`.
///
/// Layout, in order:
/// 1. per user `k`: `|Re(g_kᴴg_k)|²`, `|Im(g_kᴴg_k)|²` (`2K`);
/// 2. per pair `(k, n)`, row-major in `k`: `|Re(h̃_k·g_n)|²`, `|Im(h̃_k·g_n)|²` (`2K²`);
/// 3. the previous action in [`super::ActionVector`] layout (`2MK + 2N`);
/// 4. `Re(H₁)` then `Im(H₁)`, both column-major (`2NM`), then for each user
///    `Re(h_{k,2})` followed by `Im(h_{k,2})` (`2KN`).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
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

pub fn build_state(
    prev: &JointAction,
    channels: &ChannelSet,
    cfg: &SystemConfig,
) -> Result<StateVector> {
    channels.check_against(cfg)?;
    let gains = gain_matrix(prev, channels)?;
    Ok(assemble(prev, &gains, channels, cfg))
}

fn assemble(
    prev: &JointAction,
    gains: &super::CMatrix,
    channels: &ChannelSet,
    cfg: &SystemConfig,
) -> StateVector {
    let k_users = cfg.users;
    let mut s = Vec::with_capacity(cfg.state_dim());

    for k in 0..k_users {
        let col = prev.g.column(k);
        let p = col.dotc(&col);
        s.push(p.re * p.re);
        s.push(p.im * p.im);
    }
    for k in 0..k_users {
        for n in 0..k_users {
            let z = gains[(k, n)];
            s.push(z.re * z.re);
            s.push(z.im * z.im);
        }
    }
    s.extend_from_slice(encode_action(prev).as_slice());
    s.extend(channels.h1.iter().map(|z| z.re));
    s.extend(channels.h1.iter().map(|z| z.im));
    for h in &channels.h2 {
        s.extend(h.iter().map(|z| z.re));
        s.extend(h.iter().map(|z| z.im));
    }
    debug_assert_eq!(s.len(), cfg.state_dim());
    StateVector(s)
}

/// One environment transition: reward is the sum rate of `action`, the next
/// observation is built from it. Channels stay fixed within an episode.
pub fn env_step(
    action: &JointAction,
    channels: &ChannelSet,
    cfg: &SystemConfig,
) -> Result<(f64, StateVector)> {
    channels.check_against(cfg)?;
    let gains = gain_matrix(action, channels)?;
    let reward = sum_rate_from_gains(&gains, cfg.noise_power);
    if !reward.is_finite() {
        return Err(Error::Contract(format!("non-finite reward {reward}")));
    }
    Ok((reward, assemble(action, &gains, channels, cfg)))
}
