use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Batch-norm running-statistics momentum (weight on the old value).
pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch-norm layers.
    Train,
    /// Running statistics in batch-norm layers.
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `(fan_in, fan_out)`; a row-batch input multiplies from the left.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub norm: Option<BatchNorm>,
    pub activation: Activation,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }
}

/// Shape description used to build a [`DenseNet`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetShape {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub output_activation: Activation,
    /// Width of an auxiliary input concatenated to the input of layer
    /// `aux_layer`, if any.
    pub aux: Option<(usize, usize)>,
}

/// Fully connected network: hidden layers are affine → batch norm → tanh,
/// the output layer is affine followed by `output_activation`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
    input_dim: usize,
    output_dim: usize,
    aux: Option<(usize, usize)>,
    version: u64,
}

/// Per-layer intermediates of one forward pass.
#[derive(Clone, Debug)]
struct LayerCache {
    input: Array2<f64>,
    normalized: Option<Array2<f64>>,
    inv_std: Option<Array1<f64>>,
    batch_mean: Option<Array1<f64>>,
    batch_var: Option<Array1<f64>>,
    output: Array2<f64>,
}

#[derive(Clone, Debug)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    mode: Mode,
    version: u64,
    batch: usize,
}

impl ForwardCache {
    pub fn mode(&self) -> Mode {
        self.mode
    }
}

/// Gradients mirroring the parameter layout of a [`DenseNet`].
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Option<Array1<f64>>,
    pub beta: Option<Array1<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    /// Flat views in the same order as [`DenseNet::param_slices`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
            if let (Some(g), Some(b)) = (&l.gamma, &l.beta) {
                out.push(g.as_slice().expect("standard layout"));
                out.push(b.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

pub struct BackwardResult {
    pub grads: Gradients,
    pub input_grad: Array2<f64>,
    pub aux_grad: Option<Array2<f64>>,
}

impl DenseNet {
    /// Weights and biases uniform on `±1/sqrt(fan_in)`; batch-norm scale 1,
    /// shift 0, running statistics (0, 1).
    pub fn new<R: Rng + ?Sized>(shape: &NetShape, rng: &mut R) -> Result<Self> {
        if shape.input_dim == 0 || shape.output_dim == 0 || shape.hidden.contains(&0) {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        let n_layers = shape.hidden.len() + 1;
        if let Some((aux_layer, aux_dim)) = shape.aux {
            if aux_layer >= n_layers || aux_dim == 0 {
                return Err(Error::Config(format!(
                    "auxiliary input at layer {aux_layer} is invalid for a {n_layers}-layer net"
                )));
            }
        }
        let mut layers = Vec::with_capacity(n_layers);
        let mut prev = shape.input_dim;
        for i in 0..n_layers {
            let last = i + 1 == n_layers;
            let fan_out = if last { shape.output_dim } else { shape.hidden[i] };
            let fan_in = prev + shape.aux.filter(|&(l, _)| l == i).map_or(0, |(_, d)| d);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weight = Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..bound));
            let bias = Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..bound));
            layers.push(Layer {
                weight,
                bias,
                norm: (!last).then(|| BatchNorm::new(fan_out)),
                activation: if last { shape.output_activation } else { Activation::Tanh },
            });
            prev = fan_out;
        }
        Ok(DenseNet {
            layers,
            input_dim: shape.input_dim,
            output_dim: shape.output_dim,
            aux: shape.aux,
            version: 0,
        })
    }

    /// Rebuilds a network from explicit layers (checkpoint loading, tests).
    pub fn from_layers(layers: Vec<Layer>, aux: Option<(usize, usize)>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Config("network needs at least one layer".into()))?;
        let aux_at = |i: usize| aux.filter(|&(l, _)| l == i).map_or(0, |(_, d)| d);
        let input_dim = first
            .fan_in()
            .checked_sub(aux_at(0))
            .ok_or_else(|| Error::Shape("auxiliary width exceeds first layer fan-in".into()))?;
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.fan_out() {
                return Err(Error::Shape(format!("layer {i}: bias length mismatch")));
            }
            if let Some(bn) = &l.norm {
                let w = l.fan_out();
                if bn.gamma.len() != w || bn.beta.len() != w || bn.running_mean.len() != w || bn.running_var.len() != w {
                    return Err(Error::Shape(format!("layer {i}: batch-norm width mismatch")));
                }
            }
            if i > 0 && layers[i - 1].fan_out() + aux_at(i) != l.fan_in() {
                return Err(Error::Shape(format!("layer {i}: fan-in does not chain")));
            }
        }
        let output_dim = layers.last().unwrap().fan_out();
        Ok(DenseNet {
            layers,
            input_dim,
            output_dim,
            aux,
            version: 0,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// `(layer index, width)` of the auxiliary input.
    pub fn aux(&self) -> Option<(usize, usize)> {
        self.aux
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::fan_out)
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Flat parameter views: per layer `weight`, `bias`, then `gamma`, `beta`
    /// for normalized layers.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
            if let Some(bn) = &l.norm {
                out.push(bn.gamma.as_slice().expect("standard layout"));
                out.push(bn.beta.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
            if let Some(bn) = &mut l.norm {
                out.push(bn.gamma.as_slice_mut().expect("standard layout"));
                out.push(bn.beta.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    /// Running batch-norm statistics (not trained by gradient).
    pub fn buffer_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .filter_map(|l| l.norm.as_ref())
            .flat_map(|bn| {
                [
                    bn.running_mean.as_slice().expect("standard layout"),
                    bn.running_var.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    fn buffer_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .filter_map(|l| l.norm.as_mut())
            .flat_map(|bn| {
                [
                    bn.running_mean.as_slice_mut().expect("standard layout"),
                    bn.running_var.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn same_shape(&self, other: &DenseNet) -> bool {
        self.aux == other.aux
            && self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weight.dim() == b.weight.dim()
                    && a.norm.is_some() == b.norm.is_some()
                    && a.activation == b.activation
            })
    }

    /// `self ← tau·source + (1 − tau)·self` for parameters and running
    /// statistics alike.
    pub fn soft_update_from(&mut self, source: &DenseNet, tau: f64) -> Result<()> {
        if !self.same_shape(source) {
            return Err(Error::Shape("soft update between differently shaped nets".into()));
        }
        let blend = |dst: &mut [f64], src: &[f64]| {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = tau * s + (1.0 - tau) * *d;
            }
        };
        for (d, s) in self.param_slices_mut().into_iter().zip(source.param_slices()) {
            blend(d, s);
        }
        for (d, s) in self.buffer_slices_mut().into_iter().zip(source.buffer_slices()) {
            blend(d, s);
        }
        Ok(())
    }

    pub fn copy_from(&mut self, source: &DenseNet) -> Result<()> {
        self.soft_update_from(source, 1.0)
    }

    /// Forward pass over a row batch. In [`Mode::Train`] batch-norm layers use
    /// batch statistics; the running statistics are left untouched until
    /// [`DenseNet::update_running_stats`] is called with the returned cache.
    pub fn forward(
        &self,
        input: ArrayView2<f64>,
        aux: Option<ArrayView2<f64>>,
        mode: Mode,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        let batch = input.nrows();
        if batch == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        if input.ncols() != self.input_dim {
            return Err(Error::Shape(format!(
                "input width {} does not match network input {}",
                input.ncols(),
                self.input_dim
            )));
        }
        match (self.aux, &aux) {
            (Some((_, d)), Some(a)) if a.ncols() == d && a.nrows() == batch => {}
            (None, None) => {}
            _ => {
                return Err(Error::Shape(
                    "auxiliary input missing, unexpected or mis-shaped".into(),
                ))
            }
        }

        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = input.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let layer_in = match (self.aux, &aux) {
                (Some((l, _)), Some(a)) if l == i => concatenate(Axis(1), &[x.view(), a.view()])
                    .expect("row counts checked"),
                _ => x,
            };
            let mut z = layer_in.dot(&layer.weight);
            z += &layer.bias;

            let mut cache = LayerCache {
                input: layer_in,
                normalized: None,
                inv_std: None,
                batch_mean: None,
                batch_var: None,
                output: Array2::zeros((0, 0)),
            };
            if let Some(bn) = &layer.norm {
                let (mean, var) = match mode {
                    Mode::Train => {
                        let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
                        let var = z.var_axis(Axis(0), 0.0);
                        (mean, var)
                    }
                    Mode::Eval => (bn.running_mean.clone(), bn.running_var.clone()),
                };
                let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                let xhat = (&z - &mean) * &inv_std;
                z = &xhat * &bn.gamma + &bn.beta;
                cache.normalized = Some(xhat);
                cache.inv_std = Some(inv_std);
                if mode == Mode::Train {
                    cache.batch_mean = Some(mean);
                    cache.batch_var = Some(var);
                }
            }
            if layer.activation == Activation::Tanh {
                z.mapv_inplace(f64::tanh);
            }
            cache.output = z.clone();
            caches.push(cache);
            x = z;
        }
        Ok((
            x,
            ForwardCache {
                layers: caches,
                mode,
                version: self.version,
                batch,
            },
        ))
    }

    /// Single-sample convenience wrapper around [`DenseNet::forward`].
    pub fn predict(&self, input: &[f64], aux: Option<&[f64]>, mode: Mode) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| Error::Shape(e.to_string()))?;
        let a = aux
            .map(|a| ArrayView2::from_shape((1, a.len()), a))
            .transpose()
            .map_err(|e| Error::Shape(e.to_string()))?;
        let (out, _) = self.forward(x, a, mode)?;
        Ok(out.into_raw_vec_and_offset().0)
    }

    /// Folds the batch statistics of a train-mode pass into the running
    /// statistics (exponential moving average, unbiased batch variance).
    pub fn update_running_stats(&mut self, cache: &ForwardCache) -> Result<()> {
        self.check_cache(cache)?;
        if cache.mode != Mode::Train {
            return Ok(());
        }
        let b = cache.batch as f64;
        let correction = if cache.batch > 1 { b / (b - 1.0) } else { 1.0 };
        for (layer, lc) in self.layers.iter_mut().zip(&cache.layers) {
            if let (Some(bn), Some(mean), Some(var)) = (&mut layer.norm, &lc.batch_mean, &lc.batch_var) {
                bn.running_mean = &bn.running_mean * BN_MOMENTUM + mean * (1.0 - BN_MOMENTUM);
                bn.running_var =
                    &bn.running_var * BN_MOMENTUM + var * (correction * (1.0 - BN_MOMENTUM));
            }
        }
        self.version += 1;
        Ok(())
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.version != self.version || cache.layers.len() != self.layers.len() {
            return Err(Error::Contract(
                "forward cache is stale or belongs to another network".into(),
            ));
        }
        for (l, c) in self.layers.iter().zip(&cache.layers) {
            if c.input.ncols() != l.fan_in() || c.output.ncols() != l.fan_out() {
                return Err(Error::Contract("forward cache shape mismatch".into()));
            }
        }
        Ok(())
    }

    /// Exact gradients of `Σ_{b,j} output_grad[b,j] · output[b,j]` with respect
    /// to every parameter, the primary input and the auxiliary input.
    pub fn backward(&self, cache: &ForwardCache, output_grad: ArrayView2<f64>) -> Result<BackwardResult> {
        self.check_cache(cache)?;
        if output_grad.dim() != (cache.batch, self.output_dim) {
            return Err(Error::Contract(format!(
                "output gradient is {:?}, expected ({}, {})",
                output_grad.dim(),
                cache.batch,
                self.output_dim
            )));
        }
        let batch = cache.batch as f64;
        let mut grads: Vec<LayerGrad> = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.to_owned();
        let mut aux_grad = None;

        for (i, (layer, lc)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            if layer.activation == Activation::Tanh {
                delta.zip_mut_with(&lc.output, |d, &a| *d *= 1.0 - a * a);
            }
            let (mut gamma_grad, mut beta_grad) = (None, None);
            if let Some(bn) = &layer.norm {
                let xhat = lc.normalized.as_ref().expect("cached");
                let inv_std = lc.inv_std.as_ref().expect("cached");
                gamma_grad = Some((&delta * xhat).sum_axis(Axis(0)));
                beta_grad = Some(delta.sum_axis(Axis(0)));
                let dxhat = &delta * &bn.gamma;
                delta = match cache.mode {
                    Mode::Eval => dxhat * inv_std,
                    Mode::Train => {
                        let sum_d = dxhat.sum_axis(Axis(0));
                        let sum_dx = (&dxhat * xhat).sum_axis(Axis(0));
                        let centred = &dxhat * batch - &sum_d - &(xhat * &sum_dx);
                        centred * &(inv_std / batch)
                    }
                };
            }
            let weight_grad = lc.input.t().dot(&delta).as_standard_layout().into_owned();
            let bias_grad = delta.sum_axis(Axis(0));
            let mut input_grad = delta.dot(&layer.weight.t());
            if let Some((l, d)) = self.aux {
                if l == i {
                    let split = input_grad.ncols() - d;
                    aux_grad = Some(input_grad.slice(s![.., split..]).to_owned());
                    input_grad = input_grad.slice(s![.., ..split]).to_owned();
                }
            }
            grads.push(LayerGrad {
                weight: weight_grad,
                bias: bias_grad,
                gamma: gamma_grad,
                beta: beta_grad,
            });
            delta = input_grad;
        }
        grads.reverse();
        Ok(BackwardResult {
            grads: Gradients { layers: grads },
            input_grad: delta,
            aux_grad,
        })
    }
}

/// Default hidden width: four times the larger of the state and action
/// dimensions, rounded up to a power of two.
pub fn default_hidden_width(state_dim: usize, action_dim: usize) -> usize {
    (4 * state_dim.max(action_dim)).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape(aux: Option<(usize, usize)>, out_act: Activation) -> NetShape {
        NetShape {
            input_dim: 4,
            hidden: vec![6, 5],
            output_dim: 3,
            output_activation: out_act,
            aux,
        }
    }

    fn random_batch(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.5..1.5))
    }

    /// Scalar loss `Σ c ⊙ out` used by the finite-difference oracle.
    fn loss(net: &DenseNet, x: &Array2<f64>, a: Option<&Array2<f64>>, c: &Array2<f64>, mode: Mode) -> f64 {
        let (out, _) = net.forward(x.view(), a.map(|a| a.view()), mode).unwrap();
        (&out * c).sum()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    fn check_gradients(net: &mut DenseNet, aux_dim: Option<usize>, mode: Mode, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_batch(&mut rng, 5, net.input_dim());
        let a = aux_dim.map(|d| random_batch(&mut rng, 5, d));
        let c = random_batch(&mut rng, 5, net.output_dim());
        let (_, cache) = net.forward(x.view(), a.as_ref().map(|a| a.view()), mode).unwrap();
        let back = net.backward(&cache, c.view()).unwrap();
        let analytic: Vec<Vec<f64>> = back.grads.slices().iter().map(|s| s.to_vec()).collect();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for (t, grad) in analytic.iter().enumerate() {
            for (j, &g) in grad.iter().enumerate() {
                let orig = net.param_slices()[t][j];
                net.param_slices_mut()[t][j] = orig + h;
                let up = loss(net, &x, a.as_ref(), &c, mode);
                net.param_slices_mut()[t][j] = orig - h;
                let down = loss(net, &x, a.as_ref(), &c, mode);
                net.param_slices_mut()[t][j] = orig;
                worst = worst.max(rel_err(g, (up - down) / (2.0 * h)));
            }
        }
        let mut check_input = |arr: &Array2<f64>, analytic: &Array2<f64>, is_aux: bool| {
            for idx in ndarray::indices(arr.dim()) {
                let mut xp = x.clone();
                let mut ap = a.clone();
                let target = if is_aux { ap.as_mut().unwrap() } else { &mut xp };
                target[idx] += h;
                let up = loss(net, &xp, ap.as_ref(), &c, mode);
                let target = if is_aux { ap.as_mut().unwrap() } else { &mut xp };
                target[idx] -= 2.0 * h;
                let down = loss(net, &xp, ap.as_ref(), &c, mode);
                worst = worst.max(rel_err(analytic[idx], (up - down) / (2.0 * h)));
            }
        };
        check_input(&x, &back.input_grad, false);
        if let Some(a) = &a {
            check_input(a, back.aux_grad.as_ref().unwrap(), true);
        }
        worst
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = DenseNet::new(&shape(None, Activation::Tanh), &mut rng).unwrap();
        for s in net.param_slices_mut() {
            s.fill(0.0);
        }
        let x = random_batch(&mut rng, 3, 4);
        for mode in [Mode::Train, Mode::Eval] {
            let (out, _) = net.forward(x.view(), None, mode).unwrap();
            assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_affine_layer() {
        let layer = Layer {
            weight: array![[1.0, 2.0], [0.5, -1.0], [0.0, 3.0]],
            bias: array![0.25, -0.5],
            norm: None,
            activation: Activation::Linear,
        };
        let net = DenseNet::from_layers(vec![layer], None).unwrap();
        let out = net.predict(&[1.0, 2.0, -1.0], None, Mode::Eval).unwrap();
        // Wᵀx + b by hand.
        assert_eq!(out, vec![1.0 + 1.0 + 0.0 + 0.25, 2.0 - 2.0 - 3.0 - 0.5]);
    }

    #[test]
    fn tanh_head_stays_in_open_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = DenseNet::new(&shape(None, Activation::Tanh), &mut rng).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let out = net.predict(&x, None, Mode::Eval).unwrap();
            assert!(out.iter().all(|v| v.is_finite() && v.abs() < 1.0));
        }
    }

    #[test]
    fn zero_seed_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = DenseNet::new(&shape(Some((1, 2)), Activation::Linear), &mut rng).unwrap();
        let x = random_batch(&mut rng, 4, 4);
        let a = random_batch(&mut rng, 4, 2);
        let (_, cache) = net.forward(x.view(), Some(a.view()), Mode::Train).unwrap();
        let back = net.backward(&cache, Array2::zeros((4, 3)).view()).unwrap();
        assert_eq!(back.grads.max_abs(), 0.0);
        assert!(back.input_grad.iter().all(|&v| v == 0.0));
        assert!(back.aux_grad.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [Mode::Train, Mode::Eval] {
            let mut actor = DenseNet::new(&shape(None, Activation::Tanh), &mut rng).unwrap();
            let err = check_gradients(&mut actor, None, mode, 10);
            assert!(err < 1e-4, "actor {mode:?}: {err}");
            let mut critic = DenseNet::new(&shape(Some((1, 2)), Activation::Linear), &mut rng).unwrap();
            let err = check_gradients(&mut critic, Some(2), mode, 11);
            assert!(err < 1e-4, "critic {mode:?}: {err}");
        }
    }

    #[test]
    fn aux_at_first_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = DenseNet::new(&shape(Some((0, 3)), Activation::Linear), &mut rng).unwrap();
        assert!(check_gradients(&mut net, Some(3), Mode::Train, 12) < 1e-4);
    }

    #[test]
    fn train_mode_batch_norm_standardizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = DenseNet::new(&shape(None, Activation::Tanh), &mut rng).unwrap();
        let x = random_batch(&mut rng, 32, 4);
        let (_, cache) = net.forward(x.view(), None, Mode::Train).unwrap();
        for lc in &cache.layers[..2] {
            let xhat = lc.normalized.as_ref().unwrap();
            for col in xhat.columns() {
                let mean = col.mean().unwrap();
                let var = col.var(0.0);
                assert!(mean.abs() < 1e-6);
                assert!((var - 1.0).abs() < 1e-5, "{var}");
            }
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = DenseNet::new(&shape(None, Activation::Tanh), &mut rng).unwrap();
        let x = random_batch(&mut rng, 2, 4);
        let (_, cache) = net.forward(x.view(), None, Mode::Train).unwrap();
        net.param_slices_mut()[0][0] += 1.0;
        assert!(matches!(
            net.backward(&cache, Array2::zeros((2, 3)).view()),
            Err(Error::Contract(_))
        ));
        let other = DenseNet::new(&shape(Some((1, 2)), Activation::Tanh), &mut rng).unwrap();
        let (_, cache) = net.forward(x.view(), None, Mode::Eval).unwrap();
        assert!(other.backward(&cache, Array2::zeros((2, 3)).view()).is_err());
    }

    #[test]
    fn forward_shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = DenseNet::new(&shape(Some((1, 2)), Activation::Linear), &mut rng).unwrap();
        assert!(net.predict(&[0.0; 3], Some(&[0.0; 2]), Mode::Eval).is_err());
        assert!(net.predict(&[0.0; 4], None, Mode::Eval).is_err());
        assert!(net.predict(&[0.0; 4], Some(&[0.0; 3]), Mode::Eval).is_err());
        assert!(net.predict(&[0.0; 4], Some(&[0.0; 2]), Mode::Eval).is_ok());
    }

    #[test]
    fn soft_update_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let train = DenseNet::new(&shape(None, Activation::Tanh), &mut rng).unwrap();
        let mut target = DenseNet::new(&shape(None, Activation::Tanh), &mut rng).unwrap();
        let before = target.clone();
        target.soft_update_from(&train, 0.0).unwrap();
        assert_eq!(target.param_slices(), before.param_slices());
        target.soft_update_from(&train, 1.0).unwrap();
        assert_eq!(target.param_slices(), train.param_slices());
        assert_eq!(target.buffer_slices(), train.buffer_slices());
    }

    #[test]
    fn hidden_width_rule() {
        assert_eq!(default_hidden_width(40, 12), 256);
        assert_eq!(default_hidden_width(144, 40), 1024);
        assert!(default_hidden_width(544, 144) > 544);
    }
}
