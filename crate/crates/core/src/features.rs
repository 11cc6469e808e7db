//! Convolutional feature extractor over embedded token matrices.
//!
//! The network is a stack of one-dimensional convolutions along the token
//! axis (each kernel spans the whole embedding width or all channels of the
//! previous layer), each followed by leaky-ReLU and non-overlapping max
//! pooling, then one dense leaky-ReLU layer and a softmax output. The dense
//! activations are the extracted features.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddedMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("matrix shape {found:?} does not match the expected {expected:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("pseudo-label training needs at least two distinct labels")]
    SingleLabel,
    #[error("{0} matrices but {1} labels")]
    LabelCount(usize, usize),
    #[error("no training matrices")]
    Empty,
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("model blob: {0}")]
    Blob(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub height: usize,
    pub filters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Softmax over the violation types of the training items.
    PseudoLabel,
    /// Softmax reproducing the normalized magnitude profile of the input's
    /// mean row.
    Autoencode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub conv: Vec<ConvSpec>,
    pub pool: usize,
    pub hidden_nodes: usize,
    pub learning_rate: f64,
    pub leaky_slope: f64,
    pub epochs: usize,
    pub seed: u64,
    pub objective: Objective,
    /// Sum gradients over the whole training set (in a canonical item order)
    /// and take one step per epoch, instead of per-item steps.
    pub full_batch: bool,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            conv: vec![
                ConvSpec {
                    height: 3,
                    filters: 32,
                },
                ConvSpec {
                    height: 2,
                    filters: 64,
                },
            ],
            pool: 2,
            hidden_nodes: 1000,
            learning_rate: 1e-3,
            leaky_slope: 0.01,
            epochs: 10,
            seed: 1,
            objective: Objective::PseudoLabel,
            full_batch: false,
        }
    }
}

impl CnnConfig {
    /// Smallest number of input rows the convolution stack accepts.
    pub fn min_rows(&self) -> usize {
        let mut rows = 1;
        for spec in self.conv.iter().rev() {
            rows = rows * self.pool.max(1) + spec.height - 1;
        }
        rows
    }

    fn validate(&self, rows: usize) -> Result<(), FeatureError> {
        if self.conv.is_empty() || self.conv.iter().any(|c| c.height == 0 || c.filters == 0) {
            return Err(FeatureError::Config(
                "every convolution needs a positive height and filter count".into(),
            ));
        }
        if self.pool == 0 || self.hidden_nodes == 0 || self.epochs == 0 {
            return Err(FeatureError::Config(
                "pool, hidden_nodes and epochs must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(FeatureError::Config(
                "learning_rate must be positive".into(),
            ));
        }
        if rows < self.min_rows() {
            return Err(FeatureError::Config(format!(
                "{rows} input rows, the convolution stack needs at least {}",
                self.min_rows()
            )));
        }
        Ok(())
    }
}

/// Weights of one layer: `w` is row-major `[out][in...]`.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Layer {
    fn init(rng: &mut ChaCha8Rng, outputs: usize, fan_in: usize) -> Self {
        let scale = (6.0 / fan_in as f64).sqrt();
        Layer {
            w: (0..outputs * fan_in)
                .map(|_| rng.random_range(-scale..scale))
                .collect(),
            b: vec![0.0; outputs],
        }
    }

    fn zeros_like(&self) -> Self {
        Layer {
            w: vec![0.0; self.w.len()],
            b: vec![0.0; self.b.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    pub config: CnnConfig,
    pub rows: usize,
    pub dim: usize,
    /// Output classes (pseudo-labels; empty for the autoencoding objective).
    pub classes: Vec<String>,
    /// Mean training loss after each epoch.
    pub loss_history: Vec<f64>,
    layers: Vec<Layer>,
}

/// Per-layer geometry: (input rows, input channels, conv output rows, pooled rows).
fn geometry(config: &CnnConfig, rows: usize, dim: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    let (mut r, mut c) = (rows, dim);
    for spec in &config.conv {
        let conv_rows = r + 1 - spec.height;
        let pooled = conv_rows / config.pool;
        out.push((r, c, conv_rows, pooled));
        r = pooled;
        c = spec.filters;
    }
    out
}

struct Forward {
    /// Input of each conv layer, then the flattened dense input.
    inputs: Vec<Vec<f64>>,
    conv_pre: Vec<Vec<f64>>,
    pool_arg: Vec<Vec<usize>>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    output: Vec<f64>,
}

impl FeatureModel {
    fn new(
        config: CnnConfig,
        rows: usize,
        dim: usize,
        classes: Vec<String>,
        outputs: usize,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let geo = geometry(&config, rows, dim);
        let mut layers = Vec::new();
        for (spec, &(_, channels, _, _)) in config.conv.iter().zip(&geo) {
            layers.push(Layer::init(&mut rng, spec.filters, spec.height * channels));
        }
        let (_, _, _, pooled) = *geo.last().expect("at least one conv layer");
        let flat = pooled * config.conv.last().expect("at least one conv layer").filters;
        layers.push(Layer::init(&mut rng, config.hidden_nodes, flat));
        layers.push(Layer::init(&mut rng, outputs, config.hidden_nodes));
        FeatureModel {
            config,
            rows,
            dim,
            classes,
            loss_history: Vec::new(),
            layers,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn feature_dim(&self) -> usize {
        self.config.hidden_nodes
    }

    fn outputs(&self) -> usize {
        self.layers.last().expect("output layer").b.len()
    }

    fn check_shape(&self, m: &EmbeddedMatrix) -> Result<(), FeatureError> {
        if (m.rows, m.dim) != (self.rows, self.dim) || m.data.len() != m.rows * m.dim {
            return Err(FeatureError::Shape {
                expected: (self.rows, self.dim),
                found: (m.rows, m.dim),
            });
        }
        Ok(())
    }

    fn leaky(&self, x: f64) -> f64 {
        if x > 0.0 {
            x
        } else {
            self.config.leaky_slope * x
        }
    }

    fn leaky_grad(&self, x: f64) -> f64 {
        if x > 0.0 {
            1.0
        } else {
            self.config.leaky_slope
        }
    }

    fn forward(&self, input: &[f64]) -> Forward {
        let geo = geometry(&self.config, self.rows, self.dim);
        let pool = self.config.pool;
        let mut inputs = vec![input.to_vec()];
        let mut conv_pre = Vec::new();
        let mut pool_arg = Vec::new();
        for (l, spec) in self.config.conv.iter().enumerate() {
            let (_, channels, conv_rows, pooled) = geo[l];
            let layer = &self.layers[l];
            let x = &inputs[l];
            let f = spec.filters;
            let span = spec.height * channels;
            let mut z = vec![0.0; conv_rows * f];
            for i in 0..conv_rows {
                let window = &x[i * channels..i * channels + span];
                for k in 0..f {
                    let w = &layer.w[k * span..(k + 1) * span];
                    z[i * f + k] =
                        layer.b[k] + w.iter().zip(window).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            let mut out = vec![0.0; pooled * f];
            let mut arg = vec![0; pooled * f];
            for j in 0..pooled {
                for k in 0..f {
                    let mut best = j * pool;
                    for r in j * pool + 1..(j + 1) * pool {
                        if z[r * f + k] > z[best * f + k] {
                            best = r;
                        }
                    }
                    out[j * f + k] = self.leaky(z[best * f + k]);
                    arg[j * f + k] = best;
                }
            }
            conv_pre.push(z);
            pool_arg.push(arg);
            inputs.push(out);
        }
        let n = self.config.conv.len();
        let dense = &self.layers[n];
        let flat = inputs.last().expect("dense input");
        let hidden_pre: Vec<f64> = (0..dense.b.len())
            .map(|u| {
                dense.b[u]
                    + dense.w[u * flat.len()..(u + 1) * flat.len()]
                        .iter()
                        .zip(flat)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect();
        let hidden: Vec<f64> = hidden_pre.iter().map(|&x| self.leaky(x)).collect();
        let out_layer = &self.layers[n + 1];
        let h = hidden.len();
        let logits: Vec<f64> = (0..out_layer.b.len())
            .map(|c| {
                out_layer.b[c]
                    + out_layer.w[c * h..(c + 1) * h]
                        .iter()
                        .zip(&hidden)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let output = exps.iter().map(|e| e / total).collect();
        Forward {
            inputs,
            conv_pre,
            pool_arg,
            hidden_pre,
            hidden,
            output,
        }
    }

    fn loss(output: &[f64], target: &[f64]) -> f64 {
        output
            .iter()
            .zip(target)
            .map(|(p, y)| ((1.0 + p).ln() - (1.0 + y).ln()).powi(2))
            .sum::<f64>()
            / output.len() as f64
    }

    /// Loss of one item, accumulating parameter gradients into `grads`.
    fn backward(&self, input: &[f64], target: &[f64], grads: &mut [Layer]) -> f64 {
        let fw = self.forward(input);
        let c = fw.output.len();
        let dp: Vec<f64> = fw
            .output
            .iter()
            .zip(target)
            .map(|(p, y)| 2.0 / c as f64 * ((1.0 + p).ln() - (1.0 + y).ln()) / (1.0 + p))
            .collect();
        let weighted: f64 = dp.iter().zip(&fw.output).map(|(g, p)| g * p).sum();
        let dlogits: Vec<f64> = fw
            .output
            .iter()
            .zip(&dp)
            .map(|(p, g)| p * (g - weighted))
            .collect();

        let n = self.config.conv.len();
        let h = fw.hidden.len();
        let out_layer = &self.layers[n + 1];
        let mut dhidden = vec![0.0; h];
        for (k, &d) in dlogits.iter().enumerate() {
            grads[n + 1].b[k] += d;
            for (u, dh) in dhidden.iter_mut().enumerate() {
                grads[n + 1].w[k * h + u] += d * fw.hidden[u];
                *dh += out_layer.w[k * h + u] * d;
            }
        }
        let flat = &fw.inputs[n];
        let dense = &self.layers[n];
        let mut dflat = vec![0.0; flat.len()];
        for (u, &dh) in dhidden.iter().enumerate() {
            let d = dh * self.leaky_grad(fw.hidden_pre[u]);
            if d == 0.0 {
                continue;
            }
            grads[n].b[u] += d;
            let row = u * flat.len();
            for (i, &x) in flat.iter().enumerate() {
                grads[n].w[row + i] += d * x;
                dflat[i] += dense.w[row + i] * d;
            }
        }

        let geo = geometry(&self.config, self.rows, self.dim);
        let mut dout = dflat;
        for l in (0..n).rev() {
            let (in_rows, channels, conv_rows, pooled) = geo[l];
            let spec = self.config.conv[l];
            let f = spec.filters;
            let span = spec.height * channels;
            let z = &fw.conv_pre[l];
            let mut dz = vec![0.0; conv_rows * f];
            for j in 0..pooled {
                for k in 0..f {
                    let r = fw.pool_arg[l][j * f + k];
                    dz[r * f + k] += dout[j * f + k] * self.leaky_grad(z[r * f + k]);
                }
            }
            let x = &fw.inputs[l];
            let layer = &self.layers[l];
            let mut dx = vec![0.0; in_rows * channels];
            for i in 0..conv_rows {
                for k in 0..f {
                    let d = dz[i * f + k];
                    if d == 0.0 {
                        continue;
                    }
                    grads[l].b[k] += d;
                    for t in 0..span {
                        grads[l].w[k * span + t] += d * x[i * channels + t];
                        dx[i * channels + t] += layer.w[k * span + t] * d;
                    }
                }
            }
            dout = dx;
        }
        Self::loss(&fw.output, target)
    }

    fn step(&mut self, grads: &[Layer], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, d) in layer.w.iter_mut().zip(&g.w) {
                *w -= lr * d;
            }
            for (b, d) in layer.b.iter_mut().zip(&g.b) {
                *b -= lr * d;
            }
        }
    }

    /// Class probabilities for one matrix.
    pub fn predict(&self, m: &EmbeddedMatrix) -> Result<Vec<f64>, FeatureError> {
        self.check_shape(m)?;
        Ok(self.forward(&m.data).output)
    }

    /// Mean loss over a set of items and targets.
    pub fn evaluate(
        &self,
        matrices: &[EmbeddedMatrix],
        targets: &[Vec<f64>],
    ) -> Result<f64, FeatureError> {
        let mut total = 0.0;
        for (m, t) in matrices.iter().zip(targets) {
            self.check_shape(m)?;
            total += Self::loss(&self.forward(&m.data).output, t);
        }
        Ok(total / matrices.len().max(1) as f64)
    }

    /// All parameters flattened (layer by layer, weights then biases).
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(&l.b).copied())
            .collect()
    }

    fn set_parameters(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for layer in self.layers.iter_mut() {
            for v in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                *v = *it.next().expect("parameter count matches");
            }
        }
    }

    /// Analytic loss gradient for one item, flattened like [`parameters`].
    ///
    /// [`parameters`]: FeatureModel::parameters
    pub fn gradient(&self, m: &EmbeddedMatrix, target: &[f64]) -> Result<Vec<f64>, FeatureError> {
        self.check_shape(m)?;
        let mut grads: Vec<Layer> = self.layers.iter().map(Layer::zeros_like).collect();
        self.backward(&m.data, target, &mut grads);
        Ok(grads
            .iter()
            .flat_map(|l| l.w.iter().chain(&l.b).copied())
            .collect())
    }

    /// Loss for one item with the parameters replaced by `values`.
    pub fn loss_with(
        &self,
        values: &[f64],
        m: &EmbeddedMatrix,
        target: &[f64],
    ) -> Result<f64, FeatureError> {
        self.check_shape(m)?;
        let mut probe = self.clone();
        probe.set_parameters(values);
        Ok(Self::loss(&probe.forward(&m.data).output, target))
    }

    /// Training target of one item under this model's objective.
    pub fn target(&self, m: &EmbeddedMatrix, label: Option<&str>) -> Vec<f64> {
        match self.config.objective {
            Objective::PseudoLabel => {
                let mut t = vec![0.0; self.outputs()];
                if let Some(i) = label.and_then(|l| self.classes.iter().position(|c| c == l)) {
                    t[i] = 1.0;
                }
                t
            }
            Objective::Autoencode => autoencode_target(m),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&BlobHeader {
            config: self.config.clone(),
            rows: self.rows,
            dim: self.dim,
            classes: self.classes.clone(),
            loss_history: self.loss_history.clone(),
            layer_sizes: self.layers.iter().map(|l| (l.w.len(), l.b.len())).collect(),
        })
        .expect("header serializes");
        let mut out =
            Vec::with_capacity(BLOB_MAGIC.len() + 8 + header.len() + self.parameter_count() * 8);
        out.extend_from_slice(BLOB_MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.parameters() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FeatureError> {
        let err = |m: &str| FeatureError::Blob(m.to_string());
        let rest = bytes
            .strip_prefix(BLOB_MAGIC)
            .ok_or_else(|| err("not a model blob of this version"))?;
        if rest.len() < 8 {
            return Err(err("truncated header"));
        }
        let (len, rest) = rest.split_at(8);
        let len = u64::from_le_bytes(len.try_into().expect("8 bytes")) as usize;
        if rest.len() < len {
            return Err(err("truncated header"));
        }
        let (header, body) = rest.split_at(len);
        let header: BlobHeader =
            serde_json::from_slice(header).map_err(|e| FeatureError::Blob(e.to_string()))?;
        let outputs = header
            .layer_sizes
            .last()
            .map(|s| s.1)
            .ok_or_else(|| err("no layers"))?;
        header.config.validate(header.rows)?;
        let mut model = FeatureModel::new(
            header.config,
            header.rows,
            header.dim,
            header.classes,
            outputs,
        );
        let sizes: Vec<(usize, usize)> = model
            .layers
            .iter()
            .map(|l| (l.w.len(), l.b.len()))
            .collect();
        if sizes != header.layer_sizes || body.len() != model.parameter_count() * 8 {
            return Err(err("parameter block does not match the configuration"));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        model.set_parameters(&values);
        model.loss_history = header.loss_history;
        Ok(model)
    }
}

const BLOB_MAGIC: &[u8] = b"VPCNN1\0\0";

#[derive(Serialize, Deserialize)]
struct BlobHeader {
    config: CnnConfig,
    rows: usize,
    dim: usize,
    classes: Vec<String>,
    loss_history: Vec<f64>,
    layer_sizes: Vec<(usize, usize)>,
}

fn autoencode_target(m: &EmbeddedMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.dim];
    let rows = m.length.max(1).min(m.rows.max(1));
    for i in 0..m.length.min(m.rows) {
        for (acc, v) in mean.iter_mut().zip(m.row(i)) {
            *acc += v.abs();
        }
    }
    let total: f64 = mean.iter().sum::<f64>() / rows as f64;
    if total == 0.0 {
        return vec![1.0 / m.dim as f64; m.dim];
    }
    mean.iter().map(|v| v / rows as f64 / total).collect()
}

/// Train the extractor. `labels` are the pseudo-labels (one per matrix) and
/// are ignored by the autoencoding objective.
pub fn train_feature_extractor(
    matrices: &[EmbeddedMatrix],
    labels: &[String],
    config: &CnnConfig,
) -> Result<FeatureModel, FeatureError> {
    let first = matrices.first().ok_or(FeatureError::Empty)?;
    let (rows, dim) = (first.rows, first.dim);
    for m in matrices {
        if (m.rows, m.dim) != (rows, dim) || m.data.len() != rows * dim {
            return Err(FeatureError::Shape {
                expected: (rows, dim),
                found: (m.rows, m.dim),
            });
        }
    }
    config.validate(rows)?;
    let (classes, outputs) = match config.objective {
        Objective::PseudoLabel => {
            if labels.len() != matrices.len() {
                return Err(FeatureError::LabelCount(matrices.len(), labels.len()));
            }
            let classes: Vec<String> = labels
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if classes.len() < 2 {
                return Err(FeatureError::SingleLabel);
            }
            let n = classes.len();
            (classes, n)
        }
        Objective::Autoencode => (Vec::new(), dim),
    };
    let mut model = FeatureModel::new(config.clone(), rows, dim, classes, outputs);
    let targets: Vec<Vec<f64>> = matrices
        .iter()
        .enumerate()
        .map(|(i, m)| model.target(m, labels.get(i).map(String::as_str)))
        .collect();

    let mut order: Vec<usize> = (0..matrices.len()).collect();
    if config.full_batch {
        // Canonical order so the gradient sum does not depend on input order.
        order.sort_by(|&a, &b| {
            let key = |i: usize| {
                (
                    targets[i].iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    matrices[i]
                        .data
                        .iter()
                        .map(|v| v.to_bits())
                        .collect::<Vec<_>>(),
                )
            };
            key(a).cmp(&key(b))
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut grads: Vec<Layer> = model.layers.iter().map(Layer::zeros_like).collect();
    for _ in 0..config.epochs {
        if config.full_batch {
            grads.iter_mut().for_each(|g| *g = g.zeros_like());
            for &i in &order {
                model.backward(&matrices[i].data, &targets[i], &mut grads);
            }
            model.step(&grads, config.learning_rate);
        } else {
            order.shuffle(&mut rng);
            for &i in &order {
                grads.iter_mut().for_each(|g| *g = g.zeros_like());
                model.backward(&matrices[i].data, &targets[i], &mut grads);
                model.step(&grads, config.learning_rate);
            }
        }
        let loss = model.evaluate(matrices, &targets)?;
        model.loss_history.push(loss);
    }
    Ok(model)
}

/// Dense-layer activations for `matrix`.
pub fn extract_features(
    matrix: &EmbeddedMatrix,
    model: &FeatureModel,
) -> Result<Vec<f64>, FeatureError> {
    model.check_shape(matrix)?;
    Ok(model.forward(&matrix.data).hidden)
}
