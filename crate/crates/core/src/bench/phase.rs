use std::f64::consts::PI;

use num_complex::Complex64;

use crate::env::{CMatrix, CVector, ChannelSet};
use crate::error::{Error, Result};

const GRID: usize = 64;
const GOLDEN_ITERS: usize = 60;
/// Relative gain below which a candidate does not displace the incumbent.
const MIN_GAIN: f64 = 1e-12;

/// Per-element contributions `c[k][j][n] = h_{k,2}[n] · (H₁ g_j)[n]`, so that
/// `h̃_k g_j = Σ_n φ_n c[k][j][n]`.
fn contributions(g: &CMatrix, channels: &ChannelSet) -> Vec<Vec<CVector>> {
    let hg = &channels.h1 * g;
    channels
        .h2
        .iter()
        .map(|hk2| (0..g.ncols()).map(|j| hk2.component_mul(&hg.column(j))).collect())
        .collect()
}

fn rate_of(a: &[Vec<Complex64>], b: &[Vec<Complex64>], rot: Complex64, noise: f64) -> f64 {
    let k = a.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut signal = 0.0;
        let mut interference = noise;
        for j in 0..k {
            let p = (a[i][j] + rot * b[i][j]).norm_sqr();
            if i == j {
                signal = p;
            } else {
                interference += p;
            }
        }
        total += (1.0 + signal / interference).log2();
    }
    total
}

/// Best angle on `[lo, hi]` by golden-section search.
fn golden(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Outcome of [`phase_ascent`].
#[derive(Clone, Debug)]
pub struct PhaseAscent {
    pub phases: CVector,
    pub sum_rate: f64,
    pub sweeps: usize,
    /// Objective after each single-element update.
    pub trace: Vec<f64>,
}

/// Element-wise coordinate ascent on the sum rate with `G` held fixed.
///
/// For each element the objective is a function of one angle; a 64-point
/// grid locates the best bracket, golden-section search refines it, and the
/// incumbent is replaced only by a candidate that is better by more than a
/// relative `1e-12`. Sweeps stop
/// early once a full sweep changes nothing.
pub fn phase_ascent(
    g: &CMatrix,
    phases: &CVector,
    channels: &ChannelSet,
    noise: f64,
    sweeps: usize,
) -> Result<PhaseAscent> {
    let (k, n) = (channels.users(), channels.elements());
    if phases.len() != n || g.nrows() != channels.antennas() || g.ncols() != k {
        return Err(Error::Shape("phase ascent inputs do not match the channels".into()));
    }
    let c = contributions(g, channels);
    let mut phi = phases.clone();
    let mut totals = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    let mut a = totals.clone();
    let mut b = totals.clone();
    for i in 0..k {
        for j in 0..k {
            totals[i][j] = c[i][j].dot(&phi);
        }
    }
    // `b` is still zero here, so this is the rate of `totals` itself.
    let mut current = rate_of(&totals, &b, Complex64::new(1.0, 0.0), noise);
    let mut trace = Vec::new();
    let mut done = 0;
    for _ in 0..sweeps {
        done += 1;
        let mut changed = false;
        for e in 0..n {
            for i in 0..k {
                for j in 0..k {
                    b[i][j] = c[i][j][e];
                    a[i][j] = totals[i][j] - phi[e] * b[i][j];
                }
            }
            let f = |theta: f64| rate_of(&a, &b, Complex64::from_polar(1.0, theta), noise);
            let base = phi[e].arg();
            let step = 2.0 * PI / GRID as f64;
            let (mut best_t, mut best_f) = (base, f64::NEG_INFINITY);
            for s in 0..GRID {
                let t = base + s as f64 * step;
                let v = f(t);
                if v > best_f {
                    best_t = t;
                    best_f = v;
                }
            }
            let (gt, gf) = golden(&f, best_t - step, best_t + step);
            if gf > best_f {
                best_t = gt;
                best_f = gf;
            }
            let incumbent = f(base);
            if best_f > incumbent + MIN_GAIN * incumbent.abs().max(1.0) && best_f > current {
                let new = Complex64::from_polar(1.0, best_t);
                for i in 0..k {
                    for j in 0..k {
                        totals[i][j] = a[i][j] + new * b[i][j];
                    }
                }
                phi[e] = new;
                current = best_f;
                changed = true;
            }
            trace.push(current);
        }
        if !changed {
            break;
        }
    }
    Ok(PhaseAscent {
        phases: phi,
        sum_rate: current,
        sweeps: done,
        trace,
    })
}
