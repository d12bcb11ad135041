//! Deterministic from-scratch neural stack for the two benchmark
//! architectures: a single-layer LSTM with a linear head, and a 1-D
//! CNN (conv → maxpool → flatten → dense → dense). Training is
//! mini-batch Adam on MAE loss, bit-reproducible for a fixed seed.

mod adam;
mod layers;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use layers::{
    flatten, maxpool1d, maxpool1d_backward, unflatten, Activation, Conv1d, Dense, Lstm,
};
pub use tensor::Tensor;

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ScalerState;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid network spec: {0}")]
    Config(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },
    #[error("scaler state mismatch: {0}")]
    StateMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file is not readable: {0}")]
    Persist(String),
}

pub type Result<T> = std::result::Result<T, NeuralError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Lstm,
    Cnn1d,
}

/// Architecture and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub kind: NetworkKind,
    pub lstm_units: usize,
    pub lstm_activation: Activation,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub pool_size: usize,
    pub dense_hidden: usize,
    /// Days of features presented per prediction; 1 maps same-day
    /// features to the same-day target.
    pub lookback: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
}

impl NetworkSpec {
    pub fn lstm(units: usize, activation: Activation, epochs: usize, seed: u64) -> NetworkSpec {
        NetworkSpec {
            kind: NetworkKind::Lstm,
            lstm_units: units,
            lstm_activation: activation,
            conv_filters: 128,
            conv_kernel: 2,
            pool_size: 2,
            dense_hidden: 64,
            lookback: 1,
            seed,
            batch_size: 32,
            epochs,
            adam: AdamConfig::default(),
        }
    }

    pub fn cnn(filters: usize, epochs: usize, seed: u64) -> NetworkSpec {
        NetworkSpec {
            kind: NetworkKind::Cnn1d,
            lstm_units: 128,
            lstm_activation: Activation::Tanh,
            conv_filters: filters,
            conv_kernel: 2,
            pool_size: 2,
            dense_hidden: 64,
            lookback: 1,
            seed,
            batch_size: 32,
            epochs,
            adam: AdamConfig::default(),
        }
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        let counts = [
            self.lstm_units,
            self.conv_filters,
            self.conv_kernel,
            self.pool_size,
            self.dense_hidden,
            self.lookback,
            self.batch_size,
        ];
        if counts.contains(&0) {
            return Err(NeuralError::Config("all size parameters must be >= 1".into()));
        }
        if n_features == 0 {
            return Err(NeuralError::Config("need at least one feature column".into()));
        }
        if self.kind == NetworkKind::Cnn1d {
            let seq_len = if self.lookback == 1 { n_features } else { self.lookback };
            if seq_len < self.conv_kernel + self.pool_size - 1 {
                return Err(NeuralError::Config(format!(
                    "sequence length {seq_len} too short for kernel {} and pool {}",
                    self.conv_kernel, self.pool_size
                )));
            }
        }
        Ok(())
    }
}

/// The trainable parameters of either architecture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum NetworkParams {
    Lstm {
        lstm: Lstm,
        head: Dense,
    },
    Cnn {
        conv: Conv1d,
        pool_size: usize,
        hidden: Dense,
        output: Dense,
    },
}

enum SampleCache {
    Lstm {
        lstm: layers::LstmCache,
        head: layers::DenseCache,
        seq_len: usize,
    },
    Cnn {
        conv: layers::Conv1dCache,
        conv_out_len: usize,
        argmax: Vec<Vec<usize>>,
        pooled_len: usize,
        hidden: layers::DenseCache,
        output: layers::DenseCache,
    },
}

impl NetworkParams {
    fn build(spec: &NetworkSpec, n_features: usize, rng: &mut ChaCha8Rng) -> NetworkParams {
        let glorot = |t: &mut Tensor, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in t.data_mut() {
                *v = rng.gen_range(-limit..limit);
            }
        };
        match spec.kind {
            NetworkKind::Lstm => {
                let mut lstm = Lstm::new(n_features, spec.lstm_units, spec.lstm_activation);
                for gate in 0..4 {
                    glorot(&mut lstm.w[gate], n_features, spec.lstm_units, rng);
                    glorot(&mut lstm.u[gate], spec.lstm_units, spec.lstm_units, rng);
                }
                // standard forget-gate bias of 1 keeps early memory open
                for v in lstm.b[layers::GATE_FORGET].data_mut() {
                    *v = 1.0;
                }
                let mut head = Dense::new(spec.lstm_units, 1, Activation::Identity);
                glorot(&mut head.weights, spec.lstm_units, 1, rng);
                NetworkParams::Lstm { lstm, head }
            }
            NetworkKind::Cnn1d => {
                let channels = if spec.lookback == 1 { 1 } else { n_features };
                let seq_len = if spec.lookback == 1 { n_features } else { spec.lookback };
                let mut conv =
                    Conv1d::new(channels, spec.conv_filters, spec.conv_kernel, Activation::Relu);
                glorot(
                    &mut conv.weights,
                    spec.conv_kernel * channels,
                    spec.conv_kernel * spec.conv_filters,
                    rng,
                );
                let pooled_len = (seq_len - spec.conv_kernel + 1) / spec.pool_size;
                let flat_len = pooled_len * spec.conv_filters;
                let mut hidden = Dense::new(flat_len, spec.dense_hidden, Activation::Relu);
                glorot(&mut hidden.weights, flat_len, spec.dense_hidden, rng);
                let mut output = Dense::new(spec.dense_hidden, 1, Activation::Identity);
                glorot(&mut output.weights, spec.dense_hidden, 1, rng);
                NetworkParams::Cnn {
                    conv,
                    pool_size: spec.pool_size,
                    hidden,
                    output,
                }
            }
        }
    }

    /// Parameter tensors in a fixed order shared with the gradient
    /// vectors and the optimizer state.
    pub fn tensors(&self) -> Vec<&Tensor> {
        match self {
            NetworkParams::Lstm { lstm, head } => {
                let mut out: Vec<&Tensor> = Vec::with_capacity(14);
                for gate in 0..4 {
                    out.push(&lstm.w[gate]);
                    out.push(&lstm.u[gate]);
                    out.push(&lstm.b[gate]);
                }
                out.push(&head.weights);
                out.push(&head.bias);
                out
            }
            NetworkParams::Cnn {
                conv,
                hidden,
                output,
                ..
            } => vec![
                &conv.weights,
                &conv.bias,
                &hidden.weights,
                &hidden.bias,
                &output.weights,
                &output.bias,
            ],
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            NetworkParams::Lstm { lstm, head } => {
                let mut out: Vec<&mut Tensor> = Vec::with_capacity(14);
                for ((w, u), b) in lstm
                    .w
                    .iter_mut()
                    .zip(lstm.u.iter_mut())
                    .zip(lstm.b.iter_mut())
                {
                    out.push(w);
                    out.push(u);
                    out.push(b);
                }
                out.push(&mut head.weights);
                out.push(&mut head.bias);
                out
            }
            NetworkParams::Cnn {
                conv,
                hidden,
                output,
                ..
            } => vec![
                &mut conv.weights,
                &mut conv.bias,
                &mut hidden.weights,
                &mut hidden.bias,
                &mut output.weights,
                &mut output.bias,
            ],
        }
    }

    fn zero_grads(&self) -> NetworkGrads {
        match self {
            NetworkParams::Lstm { lstm, head } => NetworkGrads::Lstm {
                lstm: layers::LstmGrads::zeros_for(lstm),
                head: layers::DenseGrads::zeros_for(head),
            },
            NetworkParams::Cnn {
                conv,
                hidden,
                output,
                ..
            } => NetworkGrads::Cnn {
                conv: layers::Conv1dGrads::zeros_for(conv),
                hidden: layers::DenseGrads::zeros_for(hidden),
                output: layers::DenseGrads::zeros_for(output),
            },
        }
    }

    fn forward_sample(&self, input: &[Vec<f64>]) -> (f64, SampleCache, u64) {
        match self {
            NetworkParams::Lstm { lstm, head } => {
                let (hidden, cache) = lstm.forward(input);
                let last = hidden.last().expect("non-empty sequence").clone();
                let clip = cache.clip_events;
                let (out, head_cache) = head.forward(&last);
                (
                    out[0],
                    SampleCache::Lstm {
                        lstm: cache,
                        head: head_cache,
                        seq_len: input.len(),
                    },
                    clip,
                )
            }
            NetworkParams::Cnn {
                conv,
                pool_size,
                hidden,
                output,
            } => {
                let (conv_out, conv_cache) = conv.forward(input);
                let (pooled, argmax) = maxpool1d(&conv_out, *pool_size);
                let flat = flatten(&pooled);
                let (h, hidden_cache) = hidden.forward(&flat);
                let (out, output_cache) = output.forward(&h);
                (
                    out[0],
                    SampleCache::Cnn {
                        conv_out_len: conv_out.len(),
                        conv: conv_cache,
                        argmax,
                        pooled_len: pooled.len(),
                        hidden: hidden_cache,
                        output: output_cache,
                    },
                    0,
                )
            }
        }
    }

    /// Backward pass per sample, adding parameter gradients into the
    /// shared accumulator. Returns the input-sequence gradient.
    fn accumulate_sample(
        &self,
        cache: &SampleCache,
        d_pred: f64,
        grads: &mut NetworkGrads,
    ) -> Vec<Vec<f64>> {
        match (self, cache, grads) {
            (
                NetworkParams::Lstm { lstm, head },
                SampleCache::Lstm {
                    lstm: lstm_cache,
                    head: head_cache,
                    seq_len,
                },
                NetworkGrads::Lstm {
                    lstm: lstm_grads,
                    head: head_grads,
                },
            ) => {
                let d_last = head.backward_into(head_cache, &[d_pred], head_grads);
                let mut grad_hidden = vec![vec![0.0; lstm.units]; *seq_len];
                grad_hidden[*seq_len - 1] = d_last;
                lstm.backward_into(lstm_cache, &grad_hidden, lstm_grads)
            }
            (
                NetworkParams::Cnn {
                    conv,
                    pool_size: _,
                    hidden,
                    output,
                },
                SampleCache::Cnn {
                    conv: conv_cache,
                    conv_out_len,
                    argmax,
                    pooled_len,
                    hidden: hidden_cache,
                    output: output_cache,
                },
                NetworkGrads::Cnn {
                    conv: conv_grads,
                    hidden: hidden_grads,
                    output: output_grads,
                },
            ) => {
                let d_hidden_out = output.backward_into(output_cache, &[d_pred], output_grads);
                let d_flat = hidden.backward_into(hidden_cache, &d_hidden_out, hidden_grads);
                let d_pooled = unflatten(&d_flat, *pooled_len, conv.filters());
                let d_conv_out = maxpool1d_backward(&d_pooled, argmax, *conv_out_len);
                conv.backward_into(conv_cache, &d_conv_out, conv_grads)
            }
            _ => unreachable!("cache and grads kinds always match params kind"),
        }
    }

    /// Allocating convenience over [`NetworkParams::accumulate_sample`];
    /// gradients come back in [`NetworkParams::tensors`] order.
    #[cfg(test)]
    fn backward_sample(&self, cache: &SampleCache, d_pred: f64) -> (Vec<Tensor>, Vec<Vec<f64>>) {
        let mut grads = self.zero_grads();
        let grad_input = self.accumulate_sample(cache, d_pred, &mut grads);
        let owned: Vec<Tensor> = grads.tensors().into_iter().cloned().collect();
        (owned, grad_input)
    }
}

/// Gradient accumulators mirroring [`NetworkParams`].
enum NetworkGrads {
    Lstm {
        lstm: layers::LstmGrads,
        head: layers::DenseGrads,
    },
    Cnn {
        conv: layers::Conv1dGrads,
        hidden: layers::DenseGrads,
        output: layers::DenseGrads,
    },
}

impl NetworkGrads {
    /// Gradient tensors in [`NetworkParams::tensors`] order.
    fn tensors(&self) -> Vec<&Tensor> {
        match self {
            NetworkGrads::Lstm { lstm, head } => {
                let mut out: Vec<&Tensor> = Vec::with_capacity(14);
                for gate in 0..4 {
                    out.push(&lstm.w[gate]);
                    out.push(&lstm.u[gate]);
                    out.push(&lstm.b[gate]);
                }
                out.push(&head.weights);
                out.push(&head.bias);
                out
            }
            NetworkGrads::Cnn {
                conv,
                hidden,
                output,
            } => vec![
                &conv.weights,
                &conv.bias,
                &hidden.weights,
                &hidden.bias,
                &output.weights,
                &output.bias,
            ],
        }
    }

    fn zero(&mut self) {
        let tensors: Vec<&mut Tensor> = match self {
            NetworkGrads::Lstm { lstm, head } => {
                let mut out: Vec<&mut Tensor> = Vec::with_capacity(14);
                for ((w, u), b) in lstm
                    .w
                    .iter_mut()
                    .zip(lstm.u.iter_mut())
                    .zip(lstm.b.iter_mut())
                {
                    out.push(w);
                    out.push(u);
                    out.push(b);
                }
                out.push(&mut head.weights);
                out.push(&mut head.bias);
                out
            }
            NetworkGrads::Cnn {
                conv,
                hidden,
                output,
            } => vec![
                &mut conv.weights,
                &mut conv.bias,
                &mut hidden.weights,
                &mut hidden.bias,
                &mut output.weights,
                &mut output.bias,
            ],
        };
        for t in tensors {
            t.data_mut().fill(0.0);
        }
    }
}

/// Mean absolute error and its subgradient, with sign(0) = 0.
pub fn mae_loss(prediction: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(prediction.len(), target.len(), "mae shapes");
    let n = prediction.len() as f64;
    let mut total = 0.0;
    let grad = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let e = p - t;
            total += e.abs();
            if e > 0.0 {
                1.0 / n
            } else if e < 0.0 {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    (total / n, grad)
}

/// A trained network with its loss histories and the scalers its
/// inputs/outputs are tied to.
#[derive(Debug, Clone)]
pub struct NetworkFit {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    /// Scaled-space training MAE per epoch.
    pub train_loss_history: Vec<f64>,
    /// Scaled-space validation MAE per epoch (empty without validation).
    pub validation_loss_history: Vec<f64>,
    pub target_scaler: ScalerState,
    pub feature_scaler: ScalerState,
    /// Number of cell-state clamp events seen during training.
    pub clip_events: u64,
}

/// Builds the lookback windows: sample t covers feature rows
/// [t−lookback+1 .. t]; the first lookback−1 targets are dropped.
/// With lookback 1 the CNN treats the feature vector itself as the
/// sequence axis with one channel.
fn make_windows(spec: &NetworkSpec, features: &[Vec<f64>]) -> Result<Vec<Vec<Vec<f64>>>> {
    let n_features = features.first().map_or(0, Vec::len);
    if features.len() < spec.lookback {
        return Err(NeuralError::Shape(format!(
            "{} rows cannot form lookback-{} windows",
            features.len(),
            spec.lookback
        )));
    }
    if features.iter().any(|r| r.len() != n_features) {
        return Err(NeuralError::Shape("ragged feature rows".into()));
    }
    let windows = (spec.lookback - 1..features.len())
        .map(|t| {
            let window = &features[t + 1 - spec.lookback..=t];
            if spec.kind == NetworkKind::Cnn1d && spec.lookback == 1 {
                window[0].iter().map(|&v| vec![v]).collect()
            } else {
                window.to_vec()
            }
        })
        .collect();
    Ok(windows)
}

/// Trains one network for `spec.epochs` epochs.
pub fn build_and_train(
    spec: &NetworkSpec,
    train_features: &[Vec<f64>],
    train_target: &[f64],
    validation: Option<(&[Vec<f64>], &[f64])>,
    target_scaler: &ScalerState,
    feature_scaler: &ScalerState,
) -> Result<NetworkFit> {
    let mut fits = train_with_snapshots(
        spec,
        train_features,
        train_target,
        validation,
        target_scaler,
        feature_scaler,
        &[spec.epochs],
    )?;
    Ok(fits.pop().expect("one budget produces one fit"))
}

/// Trains once up to the largest budget, snapshotting the parameters at
/// every requested epoch budget. For a fixed seed each snapshot is
/// bit-identical to an independent run with that budget.
#[allow(clippy::too_many_arguments)]
pub fn train_with_snapshots(
    spec: &NetworkSpec,
    train_features: &[Vec<f64>],
    train_target: &[f64],
    validation: Option<(&[Vec<f64>], &[f64])>,
    target_scaler: &ScalerState,
    feature_scaler: &ScalerState,
    budgets: &[usize],
) -> Result<Vec<NetworkFit>> {
    let n_features = train_features.first().map_or(0, Vec::len);
    spec.validate(n_features)?;
    if train_features.len() != train_target.len() {
        return Err(NeuralError::Shape(format!(
            "{} feature rows vs {} targets",
            train_features.len(),
            train_target.len()
        )));
    }
    if budgets.is_empty() {
        return Err(NeuralError::Config("no epoch budgets requested".into()));
    }
    let mut sorted_budgets = budgets.to_vec();
    sorted_budgets.sort_unstable();
    sorted_budgets.dedup();
    let max_epochs = *sorted_budgets.last().unwrap();

    let windows = make_windows(spec, train_features)?;
    let targets = &train_target[spec.lookback - 1..];
    let val_pair = match validation {
        Some((vf, vt)) => {
            if vf.len() != vt.len() {
                return Err(NeuralError::Shape("validation rows vs targets".into()));
            }
            Some((make_windows(spec, vf)?, &vt[spec.lookback - 1..]))
        }
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut params = NetworkParams::build(spec, n_features, &mut rng);
    let mut adam = AdamState::new(spec.adam, &params.tensors());
    let mut grads = params.zero_grads();

    let n = windows.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut train_history = Vec::with_capacity(max_epochs);
    let mut val_history = Vec::with_capacity(max_epochs);
    let mut clip_events = 0u64;
    let mut snapshots = Vec::with_capacity(sorted_budgets.len());

    for epoch in 0..max_epochs {
        indices.shuffle(&mut rng);
        let mut epoch_abs_err = 0.0;
        for (batch_idx, batch) in indices.chunks(spec.batch_size).enumerate() {
            let mut preds = Vec::with_capacity(batch.len());
            let mut caches = Vec::with_capacity(batch.len());
            for &i in batch {
                let (pred, cache, clips) = params.forward_sample(&windows[i]);
                clip_events += clips;
                preds.push(pred);
                caches.push(cache);
            }
            let batch_targets: Vec<f64> = batch.iter().map(|&i| targets[i]).collect();
            let (loss, d_preds) = mae_loss(&preds, &batch_targets);
            if !loss.is_finite() {
                return Err(NeuralError::Divergence {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_abs_err += loss * batch.len() as f64;

            grads.zero();
            for (cache, d) in caches.iter().zip(&d_preds) {
                params.accumulate_sample(cache, *d, &mut grads);
            }
            adam.step(&mut params.tensors_mut(), &grads.tensors());
        }
        train_history.push(epoch_abs_err / n as f64);

        if let Some((val_windows, val_targets)) = &val_pair {
            let preds: Vec<f64> = val_windows
                .iter()
                .map(|w| params.forward_sample(w).0)
                .collect();
            let (val_loss, _) = mae_loss(&preds, val_targets);
            if !val_loss.is_finite() {
                return Err(NeuralError::Divergence { epoch, batch: 0 });
            }
            val_history.push(val_loss);
        }

        if sorted_budgets.contains(&(epoch + 1)) {
            snapshots.push(NetworkFit {
                spec: NetworkSpec {
                    epochs: epoch + 1,
                    ..spec.clone()
                },
                params: params.clone(),
                train_loss_history: train_history.clone(),
                validation_loss_history: val_history.clone(),
                target_scaler: target_scaler.clone(),
                feature_scaler: feature_scaler.clone(),
                clip_events,
            });
        }
    }
    Ok(snapshots)
}

/// Forward pass over scaled features followed by the inverse target
/// transform back to µg/m³. The features must be scaled with the same
/// state the network was trained with.
pub fn predict_network(
    fit: &NetworkFit,
    features: &[Vec<f64>],
    feature_scaler: &ScalerState,
) -> Result<Vec<f64>> {
    if feature_scaler != &fit.feature_scaler {
        return Err(NeuralError::StateMismatch(
            "feature scaler differs from the training scaler".into(),
        ));
    }
    let windows = make_windows(&fit.spec, features)?;
    let scaled: Vec<f64> = windows
        .iter()
        .map(|w| fit.params.forward_sample(w).0)
        .collect();
    fit.target_scaler
        .inverse_series(&scaled)
        .map_err(|e| NeuralError::StateMismatch(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct PersistHeader {
    version: u32,
    spec: NetworkSpec,
    tensor_layout: Vec<(String, Vec<usize>)>,
    target_scaler: ScalerState,
    feature_scaler: ScalerState,
    train_loss_history: Vec<f64>,
    validation_loss_history: Vec<f64>,
    clip_events: u64,
}

const PERSIST_MAGIC: &str = "aircast-network-v1";

fn tensor_names(params: &NetworkParams) -> Vec<String> {
    match params {
        NetworkParams::Lstm { .. } => {
            let mut names = Vec::new();
            for gate in ["input", "forget", "cell", "output"] {
                names.push(format!("lstm.w.{gate}"));
                names.push(format!("lstm.u.{gate}"));
                names.push(format!("lstm.b.{gate}"));
            }
            names.push("head.weights".into());
            names.push("head.bias".into());
            names
        }
        NetworkParams::Cnn { .. } => vec![
            "conv.weights".into(),
            "conv.bias".into(),
            "hidden.weights".into(),
            "hidden.bias".into(),
            "output.weights".into(),
            "output.bias".into(),
        ],
    }
}

/// Writes the fit as a magic line, a one-line JSON header (shape
/// manifest included), then the raw little-endian f64 parameter data in
/// declared order.
pub fn save_network<P: AsRef<Path>>(fit: &NetworkFit, path: P) -> Result<()> {
    let tensors = fit.params.tensors();
    let header = PersistHeader {
        version: 1,
        spec: fit.spec.clone(),
        tensor_layout: tensor_names(&fit.params)
            .into_iter()
            .zip(tensors.iter().map(|t| t.shape().to_vec()))
            .collect(),
        target_scaler: fit.target_scaler.clone(),
        feature_scaler: fit.feature_scaler.clone(),
        train_loss_history: fit.train_loss_history.clone(),
        validation_loss_history: fit.validation_loss_history.clone(),
        clip_events: fit.clip_events,
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{PERSIST_MAGIC}")?;
    let header_json =
        serde_json::to_string(&header).map_err(|e| NeuralError::Persist(e.to_string()))?;
    writeln!(file, "{header_json}")?;
    for tensor in tensors {
        for v in tensor.iter() {
            file.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a file produced by [`save_network`].
pub fn load_network<P: AsRef<Path>>(path: P) -> Result<NetworkFit> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut magic = String::new();
    reader.read_line(&mut magic)?;
    if magic.trim_end() != PERSIST_MAGIC {
        return Err(NeuralError::Persist(format!(
            "bad magic line {magic:?}; expected {PERSIST_MAGIC}"
        )));
    }
    let mut header_json = String::new();
    reader.read_line(&mut header_json)?;
    let header: PersistHeader =
        serde_json::from_str(&header_json).map_err(|e| NeuralError::Persist(e.to_string()))?;
    if header.version != 1 {
        return Err(NeuralError::Persist(format!(
            "unsupported version {}",
            header.version
        )));
    }
    let n_features = header.feature_scaler.labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(header.spec.seed);
    let mut params = NetworkParams::build(&header.spec, n_features, &mut rng);
    for (tensor, (name, shape)) in params.tensors_mut().into_iter().zip(&header.tensor_layout) {
        if tensor.shape() != shape.as_slice() {
            return Err(NeuralError::Persist(format!(
                "tensor {name} shape {:?} does not match stored {shape:?}",
                tensor.shape()
            )));
        }
        let mut buf = vec![0u8; tensor.len() * 8];
        reader.read_exact(&mut buf)?;
        for (i, v) in tensor.data_mut().iter_mut().enumerate() {
            *v = f64::from_le_bytes(buf[i * 8..i * 8 + 8].try_into().unwrap());
        }
    }
    Ok(NetworkFit {
        spec: header.spec,
        params,
        train_loss_history: header.train_loss_history,
        validation_loss_history: header.validation_loss_history,
        target_scaler: header.target_scaler,
        feature_scaler: header.feature_scaler,
        clip_events: header.clip_events,
    })
}
