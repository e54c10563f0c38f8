use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::env::{init_beamformer, project_power, sum_rate_from_gains, trace_power, CMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WmmseOptions {
    pub max_iters: usize,
    /// Stop once the sum rate changes by less than this between iterations.
    pub tol: f64,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        WmmseOptions {
            max_iters: 200,
            tol: 1e-6,
        }
    }
}

/// One WMMSE run from a given starting beamformer.
#[derive(Clone, Debug)]
pub struct WmmseRun {
    pub g: CMatrix,
    pub sum_rate: f64,
    pub iterations: usize,
    /// Sum rate before the first iteration, then after each one.
    pub trace: Vec<f64>,
}

fn rate(h_eff: &CMatrix, g: &CMatrix, noise: f64) -> f64 {
    sum_rate_from_gains(&(h_eff * g), noise)
}

/// Maximum-ratio transmission at full power.
pub fn mrt_beamforming(h_eff: &CMatrix, pt: f64) -> CMatrix {
    let g = h_eff.adjoint();
    if trace_power(&g) == 0.0 {
        return CMatrix::zeros(g.nrows(), g.ncols());
    }
    project_power(&g, pt)
}

/// Zero-forcing `Hᴴ(HHᴴ)⁻¹` with each column scaled to power `pt / K`.
pub fn zf_beamforming(h_eff: &CMatrix, pt: f64) -> Result<CMatrix> {
    let (k, m) = h_eff.shape();
    if k > m {
        return Err(Error::ZfInfeasible(format!("{k} users exceed {m} antennas")));
    }
    let sv = h_eff.singular_values();
    let max = sv.max();
    if max == 0.0 || sv.min() <= 1e-10 * max {
        return Err(Error::ZfInfeasible("effective channels are rank deficient".into()));
    }
    let gram = h_eff * h_eff.adjoint();
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::ZfInfeasible("singular channel Gram matrix".into()))?;
    let mut g = h_eff.adjoint() * inv;
    let per_user = pt / k as f64;
    for mut col in g.column_iter_mut() {
        let norm = col.norm();
        col *= Complex64::new(per_user.sqrt() / norm, 0.0);
    }
    Ok(g)
}

/// Beamformer block of WMMSE: `g_k = (A + μI)⁻¹ w_k u_k h̃_kᴴ` with
/// `A = Σ_j w_j |u_j|² h̃_jᴴ h̃_j` and `μ ≥ 0` the smallest multiplier that
/// meets the power budget.
fn beamformer_step(h_eff: &CMatrix, u: &[Complex64], w: &[f64], pt: f64) -> CMatrix {
    let (k, m) = h_eff.shape();
    let mut a = CMatrix::zeros(m, m);
    let mut b = CMatrix::zeros(m, k);
    for j in 0..k {
        let hj = h_eff.row(j).adjoint();
        a += &hj * hj.adjoint() * Complex64::new(w[j] * u[j].norm_sqr(), 0.0);
        b.set_column(j, &(&hj * (u[j] * w[j])));
    }
    let eig = SymmetricEigen::new(a);
    let lambda = eig.eigenvalues;
    let c = eig.eigenvectors.adjoint() * &b;
    let lmax = lambda.iter().copied().fold(0.0f64, f64::max);
    let floor = 1e-12 * lmax.max(f64::MIN_POSITIVE);
    let row_power: Vec<f64> = (0..m)
        .map(|i| if lambda[i] > floor { c.row(i).norm_squared() } else { 0.0 })
        .collect();
    let power = |mu: f64| -> f64 {
        (0..m)
            .filter(|&i| lambda[i] > floor)
            .map(|i| row_power[i] / (lambda[i] + mu).powi(2))
            .sum()
    };
    let mu = if power(0.0) <= pt {
        0.0
    } else {
        let total: f64 = row_power.iter().sum();
        let (mut lo, mut hi) = (0.0, (total / pt).sqrt());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if power(mid) > pt {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    };
    let mut scaled = c;
    for i in 0..m {
        let factor = if lambda[i] > floor { 1.0 / (lambda[i] + mu) } else { 0.0 };
        scaled.row_mut(i).scale_mut(factor);
    }
    &eig.eigenvectors * scaled
}

/// Sum-rate WMMSE (unit weights) from `init`. The returned beamformer is
/// scaled to full power, which never lowers the sum rate.
pub fn wmmse_from(h_eff: &CMatrix, init: &CMatrix, pt: f64, noise: f64, opts: &WmmseOptions) -> WmmseRun {
    let k = h_eff.nrows();
    let mut g = init.clone();
    let mut current = rate(h_eff, &g, noise);
    let mut trace = vec![current];
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let gains = h_eff * &g;
        let mut u = Vec::with_capacity(k);
        let mut w = Vec::with_capacity(k);
        for j in 0..k {
            let total: f64 = gains.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>() + noise;
            let uj = gains[(j, j)] / total;
            // 1 / MSE = 1 + SINR.
            let mse = 1.0 - (uj.conj() * gains[(j, j)]).re;
            u.push(uj);
            w.push(1.0 / mse.max(f64::MIN_POSITIVE));
        }
        let next = beamformer_step(h_eff, &u, &w, pt);
        if trace_power(&next) == 0.0 || !trace_power(&next).is_finite() {
            break;
        }
        g = project_power(&next, pt);
        let r = rate(h_eff, &g, noise);
        iterations += 1;
        trace.push(r);
        let delta = r - current;
        current = r;
        if delta.abs() < opts.tol {
            break;
        }
    }
    WmmseRun {
        g,
        sum_rate: current,
        iterations,
        trace,
    }
}

/// WMMSE on the stacked effective channels (`K×M`), started from MRT and,
/// when feasible, ZF; the better result is returned. All-zero channels give
/// the zero beamformer.
pub fn wmmse_beamforming(h_eff: &CMatrix, pt: f64, noise: f64, opts: &WmmseOptions) -> WmmseRun {
    wmmse_multistart(h_eff, None, pt, noise, opts)
}

/// As [`wmmse_beamforming`], with `warm` as an additional starting point.
pub fn wmmse_multistart(
    h_eff: &CMatrix,
    warm: Option<&CMatrix>,
    pt: f64,
    noise: f64,
    opts: &WmmseOptions,
) -> WmmseRun {
    let (k, m) = h_eff.shape();
    if h_eff.iter().all(|z| z.norm_sqr() == 0.0) {
        return WmmseRun {
            g: CMatrix::zeros(m, k),
            sum_rate: 0.0,
            iterations: 0,
            trace: vec![0.0],
        };
    }
    let mut starts = Vec::with_capacity(3);
    if let Some(w) = warm {
        starts.push(w.clone());
    }
    starts.push(mrt_beamforming(h_eff, pt));
    if let Ok(zf) = zf_beamforming(h_eff, pt) {
        starts.push(zf);
    }
    let mut best: Option<WmmseRun> = None;
    for s in &starts {
        let run = wmmse_from(h_eff, s, pt, noise, opts);
        if best.as_ref().is_none_or(|b| run.sum_rate > b.sum_rate) {
            best = Some(run);
        }
    }
    best.unwrap_or_else(|| WmmseRun {
        g: init_beamformer(m, k, pt),
        sum_rate: 0.0,
        iterations: 0,
        trace: vec![],
    })
}
