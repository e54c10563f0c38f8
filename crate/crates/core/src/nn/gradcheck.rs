use ndarray::{Array2, ArrayView2};

use super::{DenseNet, Mode};
use crate::error::Result;

/// Outcome of a finite-difference comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    /// Number of scalar partial derivatives compared.
    pub checked: usize,
}

/// `|a − b| / max(|a|, |b|, 1e-6)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Five-point central difference of `f` at 0 with step `h`.
fn five_point(h: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let near = f(h)? - f(-h)?;
    let far = f(2.0 * h)? - f(-2.0 * h)?;
    Ok((8.0 * near - far) / (12.0 * h))
}

/// Compares [`DenseNet::backward`] against fourth-order central differences
/// of the scalar `Σ weights ⊙ forward(input, aux)` with step `1e-4`.
///
/// Every `stride`-th parameter is checked (all of them for `stride = 1`),
/// along with every entry of the input and auxiliary gradients.
pub fn gradient_check(
    net: &mut DenseNet,
    input: ArrayView2<f64>,
    aux: Option<ArrayView2<f64>>,
    weights: ArrayView2<f64>,
    mode: Mode,
    stride: usize,
) -> Result<GradCheck> {
    let h = 1e-4;
    let stride = stride.max(1);
    let objective = |net: &DenseNet, x: ArrayView2<f64>, a: Option<ArrayView2<f64>>| -> Result<f64> {
        let (out, _) = net.forward(x, a, mode)?;
        Ok((&out * &weights).sum())
    };
    let (_, cache) = net.forward(input, aux, mode)?;
    let back = net.backward(&cache, weights)?;
    let analytic: Vec<f64> = back.grads.slices().concat();

    let mut worst = 0.0f64;
    let mut checked = 0;
    for flat in (0..analytic.len()).step_by(stride) {
        let numeric = five_point(h, |delta| {
            let set = |net: &mut DenseNet, d: f64| {
                let mut offset = flat;
                for slice in net.param_slices_mut() {
                    if offset < slice.len() {
                        slice[offset] += d;
                        return;
                    }
                    offset -= slice.len();
                }
            };
            set(net, delta);
            let value = objective(net, input, aux);
            set(net, -delta);
            value
        })?;
        worst = worst.max(relative_error(analytic[flat], numeric));
        checked += 1;
    }

    let mut perturbed = |which_aux: bool, analytic: &Array2<f64>| -> Result<()> {
        for idx in ndarray::indices(analytic.dim()) {
            let numeric = five_point(h, |delta| {
                let mut x = input.to_owned();
                let mut a = aux.map(|a| a.to_owned());
                let target = if which_aux { a.as_mut().expect("aux present") } else { &mut x };
                target[idx] += delta;
                objective(net, x.view(), a.as_ref().map(|a| a.view()))
            })?;
            worst = worst.max(relative_error(analytic[idx], numeric));
            checked += 1;
        }
        Ok(())
    };
    perturbed(false, &back.input_grad)?;
    if let Some(g) = &back.aux_grad {
        perturbed(true, g)?;
    }
    Ok(GradCheck {
        max_rel_err: worst,
        checked,
    })
}
