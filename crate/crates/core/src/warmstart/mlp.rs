use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Layer widths of the warm-start network.
pub const WARM_START_DIMS: [usize; 5] = [20, 256, 512, 256, 76];

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("batch size {batch} must be below the dataset size {len}")]
    BatchSize { batch: usize, len: usize },
    #[error("dataset rows must have {input} inputs and {output} targets")]
    Shape { input: usize, output: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyper(&'static str),
    #[error("loss became non-finite in epoch {epoch} (learning rate {lr:e})")]
    NonFinite { epoch: usize, lr: f64 },
}

/// Per-component affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub std: DVector<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: DVector::zeros(dim),
            std: DVector::from_element(dim, 1.0),
        }
    }

    /// Statistics of the columns of `data` (one sample per column). Nearly
    /// constant components keep unit scale.
    pub fn fit(data: &DMatrix<f64>) -> Self {
        let n = data.ncols() as f64;
        let mean = data.column_mean();
        let std = DVector::from_fn(data.nrows(), |i, _| {
            let var = data.row(i).iter().map(|v| (v - mean[i]).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 1e-8 {
                s
            } else {
                1.0
            }
        });
        Self { mean, std }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (x - &self.mean).component_div(&self.std)
    }

    pub fn apply_columns(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for mut c in out.column_iter_mut() {
            c -= &self.mean;
            c.component_div_assign(&self.std);
        }
        out
    }

    pub fn invert(&self, z: &DVector<f64>) -> DVector<f64> {
        z.component_mul(&self.std) + &self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub final_loss: f64,
    pub seed: u64,
    /// Full-dataset loss after each epoch, in standardized units.
    pub loss_trace: Vec<f64>,
}

/// Fully connected ReLU network with identity output layer. Inputs are
/// standardized before the first layer; outputs are produced in standardized
/// target units.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    /// `weights[l]` maps layer `l` to layer `l + 1` (rows = outputs).
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    pub input_scale: Standardizer,
    pub output_scale: Standardizer,
    pub meta: TrainingMeta,
}

/// Parameter gradients, laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Mlp {
    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn new(dims: &[usize], seed: u64) -> Self {
        assert!(dims.len() >= 2 && dims.iter().all(|&d| d > 0), "layer widths must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            weights.push(DMatrix::from_fn(w[1], w[0], |_, _| rng.random_range(-bound..bound)));
            biases.push(DVector::from_fn(w[1], |_, _| rng.random_range(-bound..bound)));
        }
        Self {
            dims: dims.to_vec(),
            weights,
            biases,
            input_scale: Standardizer::identity(dims[0]),
            output_scale: Standardizer::identity(dims[dims.len() - 1]),
            meta: TrainingMeta {
                seed,
                ..TrainingMeta::default()
            },
        }
    }

    /// Assembles a network from parts; `None` when the shapes disagree.
    pub fn from_parts(
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
        input_scale: Standardizer,
        output_scale: Standardizer,
        meta: TrainingMeta,
    ) -> Option<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return None;
        }
        let mut dims = vec![weights[0].ncols()];
        for (w, b) in weights.iter().zip(&biases) {
            if w.ncols() != *dims.last().unwrap() || b.len() != w.nrows() {
                return None;
            }
            dims.push(w.nrows());
        }
        if input_scale.mean.len() != dims[0]
            || input_scale.std.len() != dims[0]
            || output_scale.mean.len() != *dims.last().unwrap()
            || output_scale.std.len() != *dims.last().unwrap()
        {
            return None;
        }
        Some(Self {
            dims,
            weights,
            biases,
            input_scale,
            output_scale,
            meta,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn num_parameters(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Network applied to already standardized inputs, one per column.
    pub fn forward_standardized(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = x.clone();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * &a;
            for mut c in z.column_iter_mut() {
                c += b;
            }
            if l < last {
                z.apply(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a
    }

    /// Standardizes `input`, then runs the network. The result is in
    /// standardized target units; see [`Mlp::predict`].
    pub fn forward(&self, input: &[f64]) -> DVector<f64> {
        assert_eq!(input.len(), self.input_dim(), "input width");
        let x = self.input_scale.apply(&DVector::from_column_slice(input));
        self.forward_standardized(&DMatrix::from_column_slice(x.len(), 1, x.as_slice()))
            .column(0)
            .into_owned()
    }

    /// [`Mlp::forward`] mapped back to target units.
    pub fn predict(&self, input: &[f64]) -> DVector<f64> {
        self.output_scale.invert(&self.forward(input))
    }

    /// Mean squared error over all entries and its gradient, for standardized
    /// inputs `x` and targets `y` (one sample per column).
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Gradient) {
        let depth = self.weights.len();
        let mut acts = Vec::with_capacity(depth + 1);
        acts.push(x.clone());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * &acts[l];
            for mut c in z.column_iter_mut() {
                c += b;
            }
            if l + 1 < depth {
                z.apply(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        let diff = &acts[depth] - y;
        let count = diff.len() as f64;
        let loss = diff.norm_squared() / count;
        let mut delta = diff * (2.0 / count);
        let mut gw = vec![DMatrix::zeros(0, 0); depth];
        let mut gb = vec![DVector::zeros(0); depth];
        for l in (0..depth).rev() {
            gw[l] = &delta * acts[l].transpose();
            gb[l] = delta.column_sum();
            if l > 0 {
                let mut back = self.weights[l].transpose() * &delta;
                // ReLU mask: a post-activation of zero means the unit was off
                back.zip_apply(&acts[l], |g, a| {
                    if a <= 0.0 {
                        *g = 0.0
                    }
                });
                delta = back;
            }
        }
        (loss, Gradient { weights: gw, biases: gb })
    }

    /// Mean squared error without the gradient.
    pub fn loss(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let d = self.forward_standardized(x) - y;
        d.norm_squared() / d.len() as f64
    }

    /// All weights then biases per layer, column-major within each matrix.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_parameters());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            p.extend_from_slice(w.as_slice());
            p.extend_from_slice(b.as_slice());
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.num_parameters(), "parameter count");
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.len();
            w.as_mut_slice().copy_from_slice(&p[k..k + n]);
            k += n;
            let n = b.len();
            b.as_mut_slice().copy_from_slice(&p[k..k + n]);
            k += n;
        }
    }

    fn step(&mut self, g: &Gradient, lr: f64) {
        for (w, gw) in self.weights.iter_mut().zip(&g.weights) {
            *w -= gw * lr;
        }
        for (b, gb) in self.biases.iter_mut().zip(&g.biases) {
            b.axpy(-lr, gb, 1.0);
        }
    }
}

impl Gradient {
    /// Same layout as [`Mlp::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            p.extend_from_slice(w.as_slice());
            p.extend_from_slice(b.as_slice());
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch: 64,
            learning_rate: 0.1,
            seed: 7,
        }
    }
}

/// Mini-batch SGD on the mean squared error in standardized units.
///
/// After every epoch the full-dataset loss is compared with the best so far;
/// an epoch that increases it is undone and the learning rate halved, so the
/// recorded loss never increases.
pub fn train(
    dims: &[usize],
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<Mlp, TrainError> {
    let len = inputs.len();
    if cfg.batch == 0 || cfg.batch >= len {
        return Err(TrainError::BatchSize { batch: cfg.batch, len });
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(TrainError::Hyper("learning rate must be positive"));
    }
    let (din, dout) = (dims[0], dims[dims.len() - 1]);
    if targets.len() != len || inputs.iter().any(|x| x.len() != din) || targets.iter().any(|y| y.len() != dout) {
        return Err(TrainError::Shape { input: din, output: dout });
    }
    let raw_x = DMatrix::from_fn(din, len, |i, k| inputs[k][i]);
    let raw_y = DMatrix::from_fn(dout, len, |i, k| targets[k][i]);
    let mut net = Mlp::new(dims, cfg.seed);
    net.input_scale = Standardizer::fit(&raw_x);
    net.output_scale = Standardizer::fit(&raw_y);
    let x = net.input_scale.apply_columns(&raw_x);
    let y = net.output_scale.apply_columns(&raw_y);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..len).collect();
    let mut lr = cfg.learning_rate;
    let mut best = net.loss(&x, &y);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let saved = (net.weights.clone(), net.biases.clone());
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch) {
            let bx = x.select_columns(chunk);
            let by = y.select_columns(chunk);
            let (_, g) = net.loss_and_gradient(&bx, &by);
            net.step(&g, lr);
        }
        let loss = net.loss(&x, &y);
        if !loss.is_finite() && lr < 1e-12 {
            return Err(TrainError::NonFinite { epoch, lr });
        }
        if loss.is_finite() && loss <= best {
            best = loss;
        } else {
            (net.weights, net.biases) = saved;
            lr *= 0.5;
        }
        trace.push(best);
    }
    net.meta = TrainingMeta {
        epochs: cfg.epochs,
        final_loss: best,
        seed: cfg.seed,
        loss_trace: trace,
    };
    Ok(net)
}
