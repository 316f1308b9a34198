//! Multi-layer perceptron with ReLU hidden layers and a selectable output head.
//!
//! Parameters live in one flat vector so optimizers, gradient clipping and
//! checkpoints can treat every model the same way. Layer `l` occupies a
//! contiguous block: the `fan_in x fan_out` weight matrix in row-major order
//! (`w[i * fan_out + j]` connects input `i` to output `j`), followed by the
//! `fan_out` biases.

use rand::Rng;

use crate::features::SparseVec;

/// Output nonlinearity applied to the final linear layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Linear,
    Sigmoid,
    Softmax,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Linear => "linear",
            Head::Sigmoid => "sigmoid",
            Head::Softmax => "softmax",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(Head::Linear),
            "sigmoid" => Some(Head::Sigmoid),
            "softmax" => Some(Head::Softmax),
            _ => None,
        }
    }
}

/// Network input, either a dense slice or a sparse vector.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a> {
    Dense(&'a [f64]),
    Sparse(&'a SparseVec),
}

impl Input<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Input::Dense(x) => x.len(),
            Input::Sparse(x) => x.dim(),
        }
    }

    fn to_owned_input(self) -> OwnedInput {
        match self {
            Input::Dense(x) => OwnedInput::Dense(x.to_vec()),
            Input::Sparse(x) => OwnedInput::Sparse(x.clone()),
        }
    }
}

#[derive(Debug, Clone)]
enum OwnedInput {
    Dense(Vec<f64>),
    Sparse(SparseVec),
}

/// Everything a backward pass needs from the matching forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    input: OwnedInput,
    /// Post-ReLU activations of each hidden layer.
    hidden: Vec<Vec<f64>>,
    logits: Vec<f64>,
    output: Vec<f64>,
}

impl Cache {
    /// Head output (probabilities for sigmoid/softmax, raw values for linear).
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Final pre-head values.
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Sign pattern of the hidden units; two forward passes with the same
    /// pattern lie on the same linear piece of the network.
    pub fn activation_pattern(&self) -> Vec<bool> {
        self.hidden.iter().flatten().map(|&a| a > 0.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    head: Head,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

fn layer_offsets(sizes: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut total = 0;
    for w in sizes.windows(2) {
        offsets.push(total);
        total += w[0] * w[1] + w[1];
    }
    (offsets, total)
}

impl Mlp {
    /// Scaled uniform fan-in initialization: every weight drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], head: Head, rng: &mut R) -> Self {
        let mut mlp = Self::zeros(sizes, head);
        for l in 0..mlp.num_layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let off = mlp.offsets[l];
            for w in &mut mlp.params[off..off + fan_in * fan_out] {
                *w = rng.random_range(-bound..bound);
            }
        }
        mlp
    }

    pub fn zeros(sizes: &[usize], head: Head) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least an input and an output size");
        assert!(sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        if head == Head::Sigmoid {
            assert_eq!(*sizes.last().unwrap(), 1, "sigmoid head expects a single output");
        }
        let (offsets, total) = layer_offsets(sizes);
        Self { sizes: sizes.to_vec(), head, params: vec![0.0; total], offsets }
    }

    /// Rebuilds a model from stored parameters.
    pub fn from_params(sizes: &[usize], head: Head, params: Vec<f64>) -> Self {
        let mut mlp = Self::zeros(sizes, head);
        assert_eq!(params.len(), mlp.params.len(), "parameter count mismatch");
        mlp.params = params;
        mlp
    }

    /// Multiplies the final layer's weights and biases by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let l = self.num_layers() - 1;
        let off = self.offsets[l];
        for p in &mut self.params[off..] {
            *p *= factor;
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn zero_grads(&self) -> Vec<f64> {
        vec![0.0; self.params.len()]
    }

    /// Parameter-index range of layer `l`'s weights, then of its biases.
    pub fn layer_ranges(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offsets[l];
        (off..off + fan_in * fan_out, off + fan_in * fan_out..off + fan_in * fan_out + fan_out)
    }

    fn weights(&self, l: usize) -> (&[f64], &[f64]) {
        let (w, b) = self.layer_ranges(l);
        (&self.params[w], &self.params[b])
    }

    pub fn forward(&self, input: Input<'_>) -> Cache {
        assert_eq!(
            input.dim(),
            self.input_dim(),
            "input dimension {} does not match model input {}",
            input.dim(),
            self.input_dim()
        );
        let layers = self.num_layers();
        let mut hidden = Vec::with_capacity(layers.saturating_sub(1));
        let mut current: Vec<f64>;
        {
            let (w, b) = self.weights(0);
            let fan_out = self.sizes[1];
            current = b.to_vec();
            match input {
                Input::Dense(x) => {
                    for (i, &xi) in x.iter().enumerate() {
                        if xi != 0.0 {
                            axpy(xi, &w[i * fan_out..(i + 1) * fan_out], &mut current);
                        }
                    }
                }
                Input::Sparse(x) => {
                    for &(i, xi) in x.entries() {
                        let i = i as usize;
                        axpy(xi, &w[i * fan_out..(i + 1) * fan_out], &mut current);
                    }
                }
            }
        }
        for l in 1..layers {
            relu_in_place(&mut current);
            let (w, b) = self.weights(l);
            let fan_out = self.sizes[l + 1];
            let mut next = b.to_vec();
            for (i, &xi) in current.iter().enumerate() {
                if xi != 0.0 {
                    axpy(xi, &w[i * fan_out..(i + 1) * fan_out], &mut next);
                }
            }
            hidden.push(current);
            current = next;
        }
        let output = apply_head(self.head, &current);
        Cache { input: input.to_owned_input(), hidden, logits: current, output }
    }

    /// Convenience forward that returns only the head output.
    pub fn predict(&self, input: Input<'_>) -> Vec<f64> {
        self.forward(input).output
    }

    /// Accumulates into `grads` the parameter gradient of a loss whose
    /// derivative with respect to the head output is `grad_output`.
    pub fn backward(&self, cache: &Cache, grad_output: &[f64], grads: &mut [f64]) {
        assert_eq!(grad_output.len(), self.output_dim(), "output gradient has wrong length");
        let grad_logits = head_backward(self.head, &cache.output, grad_output);
        self.backward_logits(cache, &grad_logits, grads);
    }

    /// Like [`Mlp::backward`] but starting from the gradient with respect to
    /// the pre-head logits. Losses written in logit space (cross-entropy with
    /// logits, log-softmax) use this to stay numerically stable.
    pub fn backward_logits(&self, cache: &Cache, grad_logits: &[f64], grads: &mut [f64]) {
        assert_eq!(grads.len(), self.params.len(), "gradient buffer has wrong length");
        assert_eq!(grad_logits.len(), self.output_dim(), "logit gradient has wrong length");
        let layers = self.num_layers();
        let mut delta = grad_logits.to_vec();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_range, b_range) = self.layer_ranges(l);
            for (g, d) in grads[b_range].iter_mut().zip(&delta) {
                *g += d;
            }
            let gw = &mut grads[w_range.clone()];
            if l == 0 {
                match &cache.input {
                    OwnedInput::Dense(x) => {
                        for (i, &xi) in x.iter().enumerate() {
                            if xi != 0.0 {
                                axpy(xi, &delta, &mut gw[i * fan_out..(i + 1) * fan_out]);
                            }
                        }
                    }
                    OwnedInput::Sparse(x) => {
                        for &(i, xi) in x.entries() {
                            let i = i as usize;
                            axpy(xi, &delta, &mut gw[i * fan_out..(i + 1) * fan_out]);
                        }
                    }
                }
                break;
            }
            let prev = &cache.hidden[l - 1];
            let w = &self.params[w_range];
            let mut prev_delta = vec![0.0; fan_in];
            for (i, &ai) in prev.iter().enumerate() {
                if ai > 0.0 {
                    axpy(ai, &delta, &mut gw[i * fan_out..(i + 1) * fan_out]);
                    prev_delta[i] = dot(&w[i * fan_out..(i + 1) * fan_out], &delta);
                }
            }
            delta = prev_delta;
        }
    }
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler keep several lanes busy.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

fn apply_head(head: Head, logits: &[f64]) -> Vec<f64> {
    match head {
        Head::Linear => logits.to_vec(),
        Head::Sigmoid => logits.iter().map(|&z| sigmoid(z)).collect(),
        Head::Softmax => softmax(logits),
    }
}

fn head_backward(head: Head, output: &[f64], grad_output: &[f64]) -> Vec<f64> {
    match head {
        Head::Linear => grad_output.to_vec(),
        Head::Sigmoid => output.iter().zip(grad_output).map(|(&s, &g)| g * s * (1.0 - s)).collect(),
        Head::Softmax => {
            let inner: f64 = output.iter().zip(grad_output).map(|(y, g)| y * g).sum();
            output.iter().zip(grad_output).map(|(&y, &g)| y * (g - inner)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{check_gradients, GradCheck};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_classifier_outputs_half() {
        let m = Mlp::zeros(&[5, 4, 1], Head::Sigmoid);
        let out = m.predict(Input::Dense(&[1.0, -2.0, 3.0, 0.5, 9.0]));
        assert_eq!(out, vec![0.5]);
    }

    #[test]
    fn single_linear_layer_is_affine() {
        let m = Mlp::from_params(&[3, 2], Head::Linear, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.5, -0.5]);
        // w = [[1,2],[3,4],[5,6]] (input-major), b = [0.5,-0.5]
        let out = m.predict(Input::Dense(&[1.0, 1.0, 2.0]));
        assert_eq!(out, vec![1.0 + 3.0 + 10.0 + 0.5, 2.0 + 4.0 + 12.0 - 0.5]);
    }

    #[test]
    fn softmax_head_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mlp::new(&[6, 8, 5], Head::Softmax, &mut rng);
        let out = m.predict(Input::Dense(&[0.3, -1.0, 2.0, 0.0, 1.0, 0.7]));
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(out.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn sparse_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = Mlp::new(&[16, 8, 8, 1], Head::Linear, &mut rng);
        let sparse = SparseVec::from_pairs(16, vec![(2, 1.0), (7, -1.0), (15, 2.0)]);
        let dense = sparse.to_dense();
        let a = m.forward(Input::Sparse(&sparse));
        let b = m.forward(Input::Dense(&dense));
        assert!((a.output()[0] - b.output()[0]).abs() < 1e-12);
        let mut ga = m.zero_grads();
        let mut gb = m.zero_grads();
        m.backward(&a, &[1.0], &mut ga);
        m.backward(&b, &[1.0], &mut gb);
        for (x, y) in ga.iter().zip(&gb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Mlp::new(&[4, 6, 3], Head::Softmax, &mut rng);
        let cache = m.forward(Input::Dense(&[1.0, 2.0, -1.0, 0.5]));
        let mut g = m.zero_grads();
        m.backward(&cache, &[0.0, 0.0, 0.0], &mut g);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    #[should_panic(expected = "input dimension")]
    fn dimension_mismatch_panics() {
        let m = Mlp::zeros(&[3, 1], Head::Linear);
        m.forward(Input::Dense(&[1.0, 2.0]));
    }

    #[test]
    fn gradients_match_finite_differences_for_each_head() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for head in [Head::Linear, Head::Sigmoid, Head::Softmax] {
            let out = if head == Head::Sigmoid { 1 } else { 3 };
            let m = Mlp::new(&[5, 7, 6, out], head, &mut rng);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..out).map(|_| rng.random_range(-1.0..1.0)).collect();
            // Loss = w . output
            let report = check_gradients(
                &m,
                Input::Dense(&x),
                |o| o.iter().zip(&w).map(|(a, b)| a * b).sum(),
                |_| w.clone(),
                &GradCheck::default(),
                &mut rng,
            );
            assert!(report.passed(), "{head:?}: {report:?}");
        }
    }
}
