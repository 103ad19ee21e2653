//! Fully connected classifier: dense layers, a shared hidden activation,
//! inverted dropout after every hidden activation, and a linear output layer
//! feeding softmax cross-entropy. Trained with plain SGD.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::activation::{activate_rows, derivative_rows, ActivationSpec};
use crate::error::{Error, Result};
use crate::linalg::{bernoulli_matrix, uniform_matrix, Matrix, Rng};
use crate::mnist::Dataset;

pub const INPUT_DIM: usize = 784;
pub const NUM_CLASSES: usize = 10;

/// Rows per forward pass when evaluating a whole split.
const EVAL_CHUNK: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    /// `fan_in × fan_out`
    pub w: Matrix,
    /// `1 × fan_out`
    pub bias: Matrix,
}

impl DenseLayer {
    pub fn fan_in(&self) -> usize {
        self.w.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.cols()
    }
}

/// Glorot-uniform weights in `[-L, L]` with `L = sqrt(6 / (fan_in + fan_out))`; zero biases.
pub fn xavier_init(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Result<(Matrix, Matrix)> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::InvalidArgument(format!(
            "layer dimensions must be positive, got {fan_in}x{fan_out}"
        )));
    }
    let limit = xavier_limit(fan_in, fan_out);
    let w = uniform_matrix(rng, fan_in, fan_out, -limit, limit)?;
    Ok((w, Matrix::zeros(1, fan_out)))
}

pub fn xavier_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<DenseLayer>,
    pub hidden_activation: ActivationSpec,
    pub input_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Train { dropout_rate: f64 },
    Eval,
}

/// Everything `backward` needs from the forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub input: Matrix,
    /// Hidden pre-activations `z`, one per hidden layer.
    pub pre: Vec<Matrix>,
    /// Hidden outputs after activation and dropout; these feed the next layer.
    pub post: Vec<Matrix>,
    /// Dropout masks already scaled by `1 / (1 - rate)`; `Some` iff train mode.
    pub masks: Option<Vec<Matrix>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub w: Matrix,
    pub bias: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 64,
            epochs: 20,
            dropout_rate: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "batch size must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

impl Network {
    /// Builds `input_dim → sizes[0] → … → sizes[last]`, initializing layers in order.
    pub fn new(
        input_dim: usize,
        sizes: &[usize],
        hidden_activation: ActivationSpec,
        rng: &mut Rng,
    ) -> Result<Self> {
        hidden_activation.validate()?;
        if sizes.is_empty() {
            return Err(Error::InvalidArgument(
                "network needs at least one layer".into(),
            ));
        }
        let mut layers = Vec::with_capacity(sizes.len());
        let mut fan_in = input_dim;
        for &fan_out in sizes {
            let (w, bias) = xavier_init(fan_in, fan_out, rng)?;
            layers.push(DenseLayer { w, bias });
            fan_in = fan_out;
        }
        Ok(Network {
            layers,
            hidden_activation,
            input_dim,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::fan_out)
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.is_finite() && l.bias.is_finite())
    }

    /// Logits for a batch. Train mode draws dropout masks from `rng`; eval mode never touches it.
    pub fn forward(&self, x: &Matrix, mode: Mode, rng: &mut Rng) -> Result<(Matrix, ForwardCache)> {
        self.forward_impl(x, mode, Some(rng))
    }

    /// Eval-mode forward pass; needs no random stream.
    pub fn forward_eval(&self, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.forward_impl(x, Mode::Eval, None)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.matmul(&self.layers[0].w)?;
        h.add_row_broadcast_in_place(&self.layers[0].bias)?;
        for layer in &self.layers[1..] {
            let a = activate_rows(&self.hidden_activation, &h);
            h = a.matmul(&layer.w)?;
            h.add_row_broadcast_in_place(&layer.bias)?;
        }
        Ok(h)
    }

    fn forward_impl(
        &self,
        x: &Matrix,
        mode: Mode,
        mut rng: Option<&mut Rng>,
    ) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.input_dim {
            return Err(Error::Shape {
                op: "forward",
                left_rows: x.rows(),
                left_cols: x.cols(),
                right_rows: self.layers[0].w.rows(),
                right_cols: self.layers[0].w.cols(),
            });
        }
        let hidden = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(hidden);
        let mut post: Vec<Matrix> = Vec::with_capacity(hidden);
        let mut masks = match mode {
            Mode::Train { .. } => Some(Vec::with_capacity(hidden)),
            Mode::Eval => None,
        };

        for (i, layer) in self.layers[..hidden].iter().enumerate() {
            let input = if i == 0 { x } else { &post[i - 1] };
            let mut z = input.matmul(&layer.w)?;
            z.add_row_broadcast_in_place(&layer.bias)?;
            let mut a = activate_rows(&self.hidden_activation, &z);
            if let Mode::Train { dropout_rate } = mode {
                let mask = if dropout_rate == 0.0 {
                    Matrix::filled(a.rows(), a.cols(), 1.0)
                } else {
                    let rng = rng.as_deref_mut().ok_or_else(|| {
                        Error::InvalidArgument("train mode needs a random stream".into())
                    })?;
                    let keep = 1.0 - dropout_rate;
                    let mut m = bernoulli_matrix(rng, a.rows(), a.cols(), keep)?;
                    let scale = 1.0 / keep;
                    m.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
                    m
                };
                a.hadamard_in_place(&mask)?;
                masks.as_mut().expect("train mode").push(mask);
            }
            pre.push(z);
            post.push(a);
        }

        let last = &self.layers[hidden];
        let input = if hidden == 0 { x } else { &post[hidden - 1] };
        let mut logits = input.matmul(&last.w)?;
        logits.add_row_broadcast_in_place(&last.bias)?;

        Ok((
            logits,
            ForwardCache {
                input: x.clone(),
                pre,
                post,
                masks,
            },
        ))
    }

    /// Reverse-mode gradients of the loss given `dloss/dlogits`.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &Matrix) -> Result<Gradients> {
        let hidden = self.layers.len() - 1;
        if cache.pre.len() != hidden
            || cache.post.len() != hidden
            || cache.masks.as_ref().is_some_and(|m| m.len() != hidden)
        {
            return Err(Error::InvalidArgument(format!(
                "cache holds {} hidden layers, network has {hidden}",
                cache.pre.len()
            )));
        }
        if dlogits.shape() != (cache.input.rows(), self.output_dim()) {
            return Err(Error::Shape {
                op: "backward",
                left_rows: dlogits.rows(),
                left_cols: dlogits.cols(),
                right_rows: cache.input.rows(),
                right_cols: self.output_dim(),
            });
        }

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = dlogits.clone();
        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 {
                &cache.input
            } else {
                &cache.post[l - 1]
            };
            let w = input.matmul_tn(&delta)?;
            let bias = delta.column_sums();
            grads.push(LayerGradient { w, bias });
            if l > 0 {
                let mut upstream = delta.matmul_nt(&self.layers[l].w)?;
                if let Some(masks) = &cache.masks {
                    upstream.hadamard_in_place(&masks[l - 1])?;
                }
                upstream.hadamard_in_place(&derivative_rows(
                    &self.hidden_activation,
                    &cache.pre[l - 1],
                ))?;
                delta = upstream;
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// `p ← p − lr·g` for every parameter.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "{} gradient layers for {} network layers",
                grads.layers.len(),
                self.layers.len()
            )));
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.w.scale_add_in_place(&g.w, -learning_rate)?;
            layer.bias.scale_add_in_place(&g.bias, -learning_rate)?;
        }
        Ok(())
    }

    /// One forward/backward/update on a mini-batch; returns the batch loss
    /// measured before the update.
    pub fn train_step(
        &mut self,
        x: &Matrix,
        labels: &[u8],
        config: &TrainConfig,
        rng: &mut Rng,
    ) -> Result<f64> {
        let mode = Mode::Train {
            dropout_rate: config.dropout_rate,
        };
        let (logits, cache) = self.forward(x, mode, rng)?;
        let (loss, dlogits) = softmax_cross_entropy(&logits, labels)?;
        if !loss.is_finite() {
            return Ok(loss);
        }
        let grads = self.backward(&cache, &dlogits)?;
        self.sgd_step(&grads, config.learning_rate)?;
        Ok(loss)
    }

    pub fn write_checkpoint(&self, mut out: impl Write) -> Result<()> {
        let io = |e| Error::io("<checkpoint>", e);
        out.write_all(CHECKPOINT_MAGIC).map_err(io)?;
        let label = self.hidden_activation.label();
        write_u32(&mut out, label.len())?;
        out.write_all(label.as_bytes()).map_err(io)?;
        write_u32(&mut out, self.input_dim)?;
        write_u32(&mut out, self.layers.len())?;
        for layer in &self.layers {
            write_u32(&mut out, layer.fan_in())?;
            write_u32(&mut out, layer.fan_out())?;
            for v in layer.w.as_slice().iter().chain(layer.bias.as_slice()) {
                out.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut input, &mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("unrecognized format tag".into()));
        }
        let label_len = read_u32(&mut input)?;
        let mut label = vec![0u8; label_len];
        read_exact(&mut input, &mut label)?;
        let label = String::from_utf8(label)
            .map_err(|_| Error::Checkpoint("activation label is not UTF-8".into()))?;
        let hidden_activation = ActivationSpec::from_label(&label)?;
        let input_dim = read_u32(&mut input)?;
        let count = read_u32(&mut input)?;
        let mut layers = Vec::with_capacity(count);
        let mut expected_in = input_dim;
        for _ in 0..count {
            let fan_in = read_u32(&mut input)?;
            let fan_out = read_u32(&mut input)?;
            if fan_in != expected_in {
                return Err(Error::Checkpoint(format!(
                    "layer expects {fan_in} inputs, previous layer provides {expected_in}"
                )));
            }
            let w = Matrix::from_vec(fan_in, fan_out, read_f64s(&mut input, fan_in * fan_out)?)?;
            let bias = Matrix::from_vec(1, fan_out, read_f64s(&mut input, fan_out)?)?;
            layers.push(DenseLayer { w, bias });
            expected_in = fan_out;
        }
        if layers.is_empty() {
            return Err(Error::Checkpoint("no layers".into()));
        }
        let mut rest = [0u8; 1];
        if input
            .read(&mut rest)
            .map_err(|e| Error::io("<checkpoint>", e))?
            != 0
        {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(Network {
            layers,
            hidden_activation,
            input_dim,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_checkpoint(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_checkpoint(BufReader::new(file))
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"FTSNET01";

fn write_u32(out: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} does not fit in u32")))?;
    out.write_all(&v.to_le_bytes())
        .map_err(|e| Error::io("<checkpoint>", e))
}

fn read_exact(input: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Checkpoint("truncated".into()),
        _ => Error::io("<checkpoint>", e),
    })
}

fn read_u32(input: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn read_f64s(input: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    read_exact(input, &mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Mean softmax cross-entropy over the batch and its gradient
/// `(softmax − onehot) / batch` with respect to the logits.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[u8]) -> Result<(f64, Matrix)> {
    let (batch, classes) = logits.shape();
    if batch == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if labels.len() != batch {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {batch} logit rows",
            labels.len()
        )));
    }
    let mut grad = Matrix::zeros(batch, classes);
    let mut total = 0.0;
    let inv_batch = 1.0 / batch as f64;
    for (i, (row, &label)) in logits.iter_rows().zip(labels).enumerate() {
        let label = label as usize;
        if label >= classes {
            return Err(Error::LabelOutOfRange {
                index: i,
                value: label as u32,
            });
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let out = &mut grad.as_mut_slice()[i * classes..(i + 1) * classes];
        let mut sum = 0.0;
        for (o, &z) in out.iter_mut().zip(row) {
            *o = (z - max).exp();
            sum += *o;
        }
        total += sum.ln() - (row[label] - max);
        for o in out.iter_mut() {
            *o = *o / sum * inv_batch;
        }
        out[label] -= inv_batch;
    }
    Ok((total * inv_batch, grad))
}

/// Index of the largest entry; ties and NaNs resolve to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose eval-mode argmax matches the label.
pub fn evaluate_accuracy(net: &Network, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptySplit);
    }
    let mut correct = 0usize;
    let n = data.len();
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let logits = net.predict(&data.images.slice_rows(start, end))?;
        correct += logits
            .iter_rows()
            .zip(&data.labels[start..end])
            .filter(|(row, &label)| argmax(row) == label as usize)
            .count();
        start = end;
    }
    Ok(correct as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;

    fn tiny_net(seed: u64, spec: ActivationSpec) -> Network {
        Network::new(4, &[5, 3], spec, &mut Rng::new(seed)).unwrap()
    }

    fn tiny_batch(seed: u64, rows: usize) -> Matrix {
        uniform_matrix(&mut Rng::new(seed), rows, 4, 0.0, 1.0).unwrap()
    }

    #[test]
    fn xavier_limit_reference() {
        // sqrt(6/1296) from a 50-digit evaluation
        assert!((xavier_limit(784, 512) - 0.068_041_381_743_977_17).abs() < 1e-15);
    }

    #[test]
    fn xavier_range_and_zero_bias() {
        let mut rng = Rng::new(1);
        for (fi, fo) in [(784, 512), (3, 2), (1, 1), (32, 10)] {
            let (w, b) = xavier_init(fi, fo, &mut rng).unwrap();
            let l = xavier_limit(fi, fo);
            assert_eq!(w.shape(), (fi, fo));
            assert!(w.as_slice().iter().all(|&v| (-l..=l).contains(&v)));
            assert!(b.as_slice().iter().all(|&v| v == 0.0));
            assert_eq!(b.shape(), (1, fo));
        }
        assert!(xavier_init(0, 3, &mut rng).is_err());
        assert!(xavier_init(3, 0, &mut rng).is_err());
    }

    #[test]
    fn eval_forward_is_deterministic_and_pure() {
        let net = tiny_net(3, ActivationSpec::fts(-0.2));
        let x = tiny_batch(4, 6);
        let mut rng = Rng::new(9);
        let (a, _) = net.forward(&x, Mode::Eval, &mut rng).unwrap();
        let (b, cache) = net.forward(&x, Mode::Eval, &mut rng).unwrap();
        assert_eq!(a, b);
        assert!(cache.masks.is_none());
        // eval mode consumed nothing from the stream
        assert_eq!(rng.next_u64(), Rng::new(9).next_u64());
        assert_eq!(net.predict(&x).unwrap(), a);
    }

    #[test]
    fn zero_dropout_matches_eval() {
        let net = tiny_net(3, ActivationSpec::relu());
        let x = tiny_batch(4, 6);
        let (train, cache) = net
            .forward(&x, Mode::Train { dropout_rate: 0.0 }, &mut Rng::new(1))
            .unwrap();
        let (eval, _) = net.forward_eval(&x).unwrap();
        assert_eq!(train, eval);
        assert_eq!(cache.masks.unwrap().len(), 1);
    }

    #[test]
    fn zero_weights_give_threshold_activations() {
        let mut net =
            Network::new(4, &[6, 3], ActivationSpec::fts(-0.2), &mut Rng::new(0)).unwrap();
        for layer in &mut net.layers {
            layer.w = Matrix::zeros(layer.fan_in(), layer.fan_out());
        }
        let (_, cache) = net.forward_eval(&tiny_batch(1, 2)).unwrap();
        assert!(cache.post[0].as_slice().iter().all(|&v| v == -0.2));
    }

    #[test]
    fn dropout_masks_are_scaled() {
        let net = tiny_net(3, ActivationSpec::relu());
        let (_, cache) = net
            .forward(
                &tiny_batch(1, 8),
                Mode::Train { dropout_rate: 0.5 },
                &mut Rng::new(2),
            )
            .unwrap();
        let masks = cache.masks.unwrap();
        assert!(masks[0].as_slice().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn dropout_preserves_expectation() {
        let row = Matrix::from_rows(&[[0.3, -1.2, 2.5, 0.8]]).unwrap();
        let mut rng = Rng::new(77);
        let mut sum = Matrix::zeros(1, 4);
        let trials = 10_000;
        for _ in 0..trials {
            let mut m = bernoulli_matrix(&mut rng, 1, 4, 0.5).unwrap();
            m.as_mut_slice().iter_mut().for_each(|v| *v *= 2.0);
            sum.scale_add_in_place(&row.hadamard(&m).unwrap(), 1.0)
                .unwrap();
        }
        for (s, &r) in sum.as_slice().iter().zip(row.as_slice()) {
            let mean = s / trials as f64;
            assert!((mean - r).abs() <= 0.02 * r.abs(), "{mean} vs {r}");
        }
    }

    #[test]
    fn softmax_examples() {
        let (loss, grad) = softmax_cross_entropy(&Matrix::zeros(3, 10), &[0, 4, 9]).unwrap();
        assert!((loss - std::f64::consts::LN_10).abs() < 1e-15);
        for row in grad.iter_rows() {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
        let mut logits = Matrix::zeros(2, 10);
        logits.set(0, 3, 1000.0);
        logits.set(1, 7, 1000.0);
        let (loss, grad) = softmax_cross_entropy(&logits, &[3, 7]).unwrap();
        assert!(loss.is_finite() && loss.abs() < 1e-12);
        assert!(grad.is_finite());
        assert!(matches!(
            softmax_cross_entropy(&Matrix::zeros(1, 10), &[10]),
            Err(Error::LabelOutOfRange { .. })
        ));
        assert!(softmax_cross_entropy(&Matrix::zeros(0, 10), &[]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = tiny_net(5, ActivationSpec::swish(1.0));
        let x = tiny_batch(2, 3);
        let (_, cache) = net.forward_eval(&x).unwrap();
        let grads = net.backward(&cache, &Matrix::zeros(3, 3)).unwrap();
        for g in &grads.layers {
            assert!(g
                .w
                .as_slice()
                .iter()
                .chain(g.bias.as_slice())
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn backward_rejects_foreign_cache() {
        let net = tiny_net(5, ActivationSpec::relu());
        let other = Network::new(4, &[5, 5, 3], ActivationSpec::relu(), &mut Rng::new(1)).unwrap();
        let (_, cache) = other.forward_eval(&tiny_batch(2, 3)).unwrap();
        assert!(net.backward(&cache, &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn negative_fts_units_block_gradient() {
        let mut net = tiny_net(8, ActivationSpec::fts(-0.2));
        // force every hidden pre-activation negative
        net.layers[0].bias = Matrix::filled(1, 5, -100.0);
        let x = tiny_batch(3, 4);
        let (logits, cache) = net.forward_eval(&x).unwrap();
        let (_, dlogits) = softmax_cross_entropy(&logits, &[0, 1, 2, 0]).unwrap();
        let grads = net.backward(&cache, &dlogits).unwrap();
        assert!(grads.layers[0].w.as_slice().iter().all(|&v| v == 0.0));
        assert!(grads.layers[0].bias.as_slice().iter().all(|&v| v == 0.0));
        // the output layer still learns from the constant T activations
        assert!(grads.layers[1].bias.as_slice().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn sgd_examples() {
        let mut net = tiny_net(1, ActivationSpec::relu());
        let x = tiny_batch(2, 4);
        let (logits, cache) = net.forward_eval(&x).unwrap();
        let (_, d) = softmax_cross_entropy(&logits, &[0, 1, 2, 1]).unwrap();
        let grads = net.backward(&cache, &d).unwrap();

        let before = net.clone();
        net.sgd_step(&grads, 0.0).unwrap();
        assert_eq!(net, before);

        let mut twin = before.clone();
        net.sgd_step(&grads, 0.1).unwrap();
        twin.sgd_step(&grads, 0.1).unwrap();
        assert_eq!(net, twin);

        let mut scalar = Network {
            layers: vec![DenseLayer {
                w: Matrix::filled(1, 1, 1.0),
                bias: Matrix::zeros(1, 1),
            }],
            hidden_activation: ActivationSpec::relu(),
            input_dim: 1,
        };
        let g = Gradients {
            layers: vec![LayerGradient {
                w: Matrix::filled(1, 1, 0.5),
                bias: Matrix::zeros(1, 1),
            }],
        };
        scalar.sgd_step(&g, 0.1).unwrap();
        assert_eq!(scalar.layers[0].w.get(0, 0), 0.95);
        assert!(scalar.sgd_step(&Gradients { layers: vec![] }, 0.1).is_err());
    }

    #[test]
    fn train_config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                dropout_rate: 1.0,
                ..Default::default()
            },
            TrainConfig {
                dropout_rate: -0.1,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0; 10]), 0);
        assert_eq!(argmax(&[f64::NAN; 4]), 0);
    }

    #[test]
    fn accuracy_on_constructed_net() {
        // identity-like single layer: logit c = pixel c, so argmax is the hot pixel
        let mut w = Matrix::zeros(4, 10);
        for c in 0..4 {
            w.set(c, c, 1.0);
        }
        let net = Network {
            layers: vec![DenseLayer {
                w,
                bias: Matrix::zeros(1, 10),
            }],
            hidden_activation: ActivationSpec::relu(),
            input_dim: 4,
        };
        let images = Matrix::from_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let data = Dataset::new(images, vec![0, 2, 3]).unwrap();
        assert_eq!(evaluate_accuracy(&net, &data).unwrap(), 1.0);
        let empty = Dataset::new(Matrix::zeros(0, 4), vec![]).unwrap();
        assert!(matches!(
            evaluate_accuracy(&net, &empty),
            Err(Error::EmptySplit)
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        for kind in ActivationKind::ALL {
            let net =
                Network::new(4, &[5, 3], ActivationSpec::new(kind), &mut Rng::new(4)).unwrap();
            let mut bytes = Vec::new();
            net.write_checkpoint(&mut bytes).unwrap();
            let back = Network::read_checkpoint(bytes.as_slice()).unwrap();
            assert_eq!(back, net);
            assert!(Network::read_checkpoint(&bytes[..bytes.len() - 1]).is_err());
            let mut extra = bytes.clone();
            extra.push(0);
            assert!(Network::read_checkpoint(extra.as_slice()).is_err());
            let mut bad = bytes.clone();
            bad[0] = b'X';
            assert!(Network::read_checkpoint(bad.as_slice()).is_err());
        }
    }
}
