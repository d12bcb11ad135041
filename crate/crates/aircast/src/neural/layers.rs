//! Layer forward/backward passes: dense, LSTM, 1-D convolution,
//! max-pooling and flatten. Each layer works on one sample; batching is
//! a loop with gradient accumulation one level up.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;

/// Cell state clamp bound; relu cells can otherwise grow without limit.
pub const CELL_CLIP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

// ---------------------------------------------------------------------
// dense
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dense {
    /// [outputs × inputs]
    pub weights: Tensor,
    /// [outputs]
    pub bias: Tensor,
    pub activation: Activation,
}

pub struct DenseCache {
    input: Vec<f64>,
    output: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseGrads {
    pub fn zeros_for(layer: &Dense) -> DenseGrads {
        DenseGrads {
            weights: layer.weights.zeros_like(),
            bias: layer.bias.zeros_like(),
        }
    }
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, activation: Activation) -> Dense {
        Dense {
            weights: Tensor::zeros(&[outputs, inputs]),
            bias: Tensor::zeros(&[outputs]),
            activation,
        }
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn forward(&self, input: &[f64]) -> (Vec<f64>, DenseCache) {
        assert_eq!(input.len(), self.inputs(), "dense input width");
        let output: Vec<f64> = (0..self.outputs())
            .map(|o| {
                let mut s = self.bias.data()[o];
                for (i, x) in input.iter().enumerate() {
                    s += self.weights.at2(o, i) * x;
                }
                self.activation.apply(s)
            })
            .collect();
        (
            output.clone(),
            DenseCache {
                input: input.to_vec(),
                output,
            },
        )
    }

    pub fn backward(&self, cache: &DenseCache, grad_out: &[f64]) -> (Vec<f64>, DenseGrads) {
        let mut grads = DenseGrads {
            weights: self.weights.zeros_like(),
            bias: self.bias.zeros_like(),
        };
        let grad_in = self.backward_into(cache, grad_out, &mut grads);
        (grad_in, grads)
    }

    /// Like [`Dense::backward`], but adds the parameter gradients into
    /// an existing accumulator instead of allocating fresh tensors.
    pub fn backward_into(
        &self,
        cache: &DenseCache,
        grad_out: &[f64],
        grads: &mut DenseGrads,
    ) -> Vec<f64> {
        let mut grad_in = vec![0.0; self.inputs()];
        for o in 0..self.outputs() {
            let da = grad_out[o] * self.activation.derivative_from_output(cache.output[o]);
            grads.bias.data_mut()[o] += da;
            for i in 0..self.inputs() {
                grads.weights.add2(o, i, da * cache.input[i]);
                grad_in[i] += da * self.weights.at2(o, i);
            }
        }
        grad_in
    }
}

// ---------------------------------------------------------------------
// lstm
// ---------------------------------------------------------------------

pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_CELL: usize = 2;
pub const GATE_OUTPUT: usize = 3;

/// Single-layer LSTM. Gates use sigmoid; the cell candidate and the
/// cell output use the configured activation. The carried cell state is
/// clamped to ±[`CELL_CLIP`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lstm {
    pub units: usize,
    pub input_dim: usize,
    pub activation: Activation,
    /// Input weights per gate, each [units × input_dim].
    pub w: Vec<Tensor>,
    /// Recurrent weights per gate, each [units × units].
    pub u: Vec<Tensor>,
    /// Biases per gate, each [units].
    pub b: Vec<Tensor>,
}

struct LstmStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: [Vec<f64>; 4],
    c_raw: Vec<f64>,
    c_act: Vec<f64>,
}

pub struct LstmCache {
    steps: Vec<LstmStep>,
    pub clip_events: u64,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w: Vec<Tensor>,
    pub u: Vec<Tensor>,
    pub b: Vec<Tensor>,
}

impl LstmGrads {
    pub fn zeros_for(layer: &Lstm) -> LstmGrads {
        LstmGrads {
            w: layer.w.iter().map(Tensor::zeros_like).collect(),
            u: layer.u.iter().map(Tensor::zeros_like).collect(),
            b: layer.b.iter().map(Tensor::zeros_like).collect(),
        }
    }
}

impl Lstm {
    pub fn new(input_dim: usize, units: usize, activation: Activation) -> Lstm {
        Lstm {
            units,
            input_dim,
            activation,
            w: (0..4).map(|_| Tensor::zeros(&[units, input_dim])).collect(),
            u: (0..4).map(|_| Tensor::zeros(&[units, units])).collect(),
            b: (0..4).map(|_| Tensor::zeros(&[units])).collect(),
        }
    }

    /// Runs the recursion over a [T × input_dim] sequence from zero
    /// initial hidden and cell state, returning all hidden outputs.
    pub fn forward(&self, input: &[Vec<f64>]) -> (Vec<Vec<f64>>, LstmCache) {
        let units = self.units;
        let mut h = vec![0.0; units];
        let mut c = vec![0.0; units];
        let mut outputs = Vec::with_capacity(input.len());
        let mut steps = Vec::with_capacity(input.len());
        let mut clip_events = 0u64;
        for x in input {
            assert_eq!(x.len(), self.input_dim, "lstm input width");
            let mut gates: [Vec<f64>; 4] = Default::default();
            for gate in 0..4 {
                let act = if gate == GATE_CELL {
                    self.activation
                } else {
                    Activation::Sigmoid
                };
                gates[gate] = (0..units)
                    .map(|j| {
                        let mut s = self.b[gate].data()[j];
                        for (i, xi) in x.iter().enumerate() {
                            s += self.w[gate].at2(j, i) * xi;
                        }
                        for (i, hi) in h.iter().enumerate() {
                            s += self.u[gate].at2(j, i) * hi;
                        }
                        act.apply(s)
                    })
                    .collect();
            }
            let c_raw: Vec<f64> = (0..units)
                .map(|j| gates[GATE_FORGET][j] * c[j] + gates[GATE_INPUT][j] * gates[GATE_CELL][j])
                .collect();
            let c_clipped: Vec<f64> = c_raw
                .iter()
                .map(|&v| {
                    if v.abs() > CELL_CLIP {
                        clip_events += 1;
                        v.clamp(-CELL_CLIP, CELL_CLIP)
                    } else {
                        v
                    }
                })
                .collect();
            let c_act: Vec<f64> = c_clipped.iter().map(|&v| self.activation.apply(v)).collect();
            let h_new: Vec<f64> = (0..units)
                .map(|j| gates[GATE_OUTPUT][j] * c_act[j])
                .collect();
            steps.push(LstmStep {
                x: x.clone(),
                h_prev: h.clone(),
                c_prev: c.clone(),
                gates,
                c_raw: c_raw.clone(),
                c_act,
            });
            h = h_new.clone();
            c = c_clipped;
            outputs.push(h_new);
        }
        (outputs, LstmCache { steps, clip_events })
    }

    /// Backprop through time. `grad_hidden` carries the loss gradient
    /// with respect to every timestep's hidden output. Returns the
    /// gradient with respect to the input sequence plus parameter
    /// gradients.
    pub fn backward(
        &self,
        cache: &LstmCache,
        grad_hidden: &[Vec<f64>],
    ) -> (Vec<Vec<f64>>, LstmGrads) {
        let mut grads = LstmGrads::zeros_for(self);
        let grad_input = self.backward_into(cache, grad_hidden, &mut grads);
        (grad_input, grads)
    }

    /// Like [`Lstm::backward`], but adds the parameter gradients into an
    /// existing accumulator instead of allocating fresh tensors.
    pub fn backward_into(
        &self,
        cache: &LstmCache,
        grad_hidden: &[Vec<f64>],
        grads: &mut LstmGrads,
    ) -> Vec<Vec<f64>> {
        let units = self.units;
        let mut grad_input = vec![vec![0.0; self.input_dim]; cache.steps.len()];
        let mut dh_carry = vec![0.0; units];
        let mut dc_carry = vec![0.0; units]; // gradient w.r.t. the carried (clipped) cell
        for (t, step) in cache.steps.iter().enumerate().rev() {
            let mut d_gates: [Vec<f64>; 4] = [
                vec![0.0; units],
                vec![0.0; units],
                vec![0.0; units],
                vec![0.0; units],
            ];
            let mut dc_prev = vec![0.0; units];
            for j in 0..units {
                let dh = grad_hidden[t][j] + dh_carry[j];
                let o = step.gates[GATE_OUTPUT][j];
                let i_g = step.gates[GATE_INPUT][j];
                let f_g = step.gates[GATE_FORGET][j];
                let g_g = step.gates[GATE_CELL][j];
                // through h = o * act(c̃)
                let d_c_clipped =
                    dh * o * self.activation.derivative_from_output(step.c_act[j]) + dc_carry[j];
                // clamp gate: gradient passes only inside the bound
                let d_c_raw = if step.c_raw[j].abs() < CELL_CLIP {
                    d_c_clipped
                } else {
                    0.0
                };
                let sig = Activation::Sigmoid;
                d_gates[GATE_OUTPUT][j] = dh * step.c_act[j] * sig.derivative_from_output(o);
                d_gates[GATE_INPUT][j] = d_c_raw * g_g * sig.derivative_from_output(i_g);
                d_gates[GATE_FORGET][j] =
                    d_c_raw * step.c_prev[j] * sig.derivative_from_output(f_g);
                d_gates[GATE_CELL][j] =
                    d_c_raw * i_g * self.activation.derivative_from_output(g_g);
                dc_prev[j] = d_c_raw * f_g;
            }
            let mut dh_prev = vec![0.0; units];
            for gate in 0..4 {
                for j in 0..units {
                    let dg = d_gates[gate][j];
                    if dg == 0.0 {
                        continue;
                    }
                    grads.b[gate].data_mut()[j] += dg;
                    for (i, xi) in step.x.iter().enumerate() {
                        grads.w[gate].add2(j, i, dg * xi);
                        grad_input[t][i] += dg * self.w[gate].at2(j, i);
                    }
                    for (i, hi) in step.h_prev.iter().enumerate() {
                        grads.u[gate].add2(j, i, dg * hi);
                        dh_prev[i] += dg * self.u[gate].at2(j, i);
                    }
                }
            }
            dh_carry = dh_prev;
            dc_carry = dc_prev;
        }
        grad_input
    }
}

// ---------------------------------------------------------------------
// 1-D convolution, pooling, flatten
// ---------------------------------------------------------------------

/// Valid (no padding) cross-correlation along the sequence axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conv1d {
    /// [filters × kernel × channels]
    pub weights: Tensor,
    /// [filters]
    pub bias: Tensor,
    pub activation: Activation,
}

pub struct Conv1dCache {
    input: Vec<Vec<f64>>,
    output: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Conv1dGrads {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl Conv1dGrads {
    pub fn zeros_for(layer: &Conv1d) -> Conv1dGrads {
        Conv1dGrads {
            weights: layer.weights.zeros_like(),
            bias: layer.bias.zeros_like(),
        }
    }
}

impl Conv1d {
    pub fn new(channels: usize, filters: usize, kernel: usize, activation: Activation) -> Conv1d {
        Conv1d {
            weights: Tensor::zeros(&[filters, kernel, channels]),
            bias: Tensor::zeros(&[filters]),
            activation,
        }
    }

    pub fn filters(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn channels(&self) -> usize {
        self.weights.shape()[2]
    }

    pub fn forward(&self, input: &[Vec<f64>]) -> (Vec<Vec<f64>>, Conv1dCache) {
        let k = self.kernel();
        assert!(input.len() >= k, "sequence shorter than kernel");
        let out_len = input.len() - k + 1;
        let output: Vec<Vec<f64>> = (0..out_len)
            .map(|t| {
                (0..self.filters())
                    .map(|m| {
                        let mut s = self.bias.data()[m];
                        for dt in 0..k {
                            for (c, x) in input[t + dt].iter().enumerate() {
                                s += self.weights.at3(m, dt, c) * x;
                            }
                        }
                        self.activation.apply(s)
                    })
                    .collect()
            })
            .collect();
        (
            output.clone(),
            Conv1dCache {
                input: input.to_vec(),
                output,
            },
        )
    }

    pub fn backward(
        &self,
        cache: &Conv1dCache,
        grad_out: &[Vec<f64>],
    ) -> (Vec<Vec<f64>>, Conv1dGrads) {
        let mut grads = Conv1dGrads {
            weights: self.weights.zeros_like(),
            bias: self.bias.zeros_like(),
        };
        let grad_input = self.backward_into(cache, grad_out, &mut grads);
        (grad_input, grads)
    }

    /// Like [`Conv1d::backward`], but adds the parameter gradients into
    /// an existing accumulator instead of allocating fresh tensors.
    pub fn backward_into(
        &self,
        cache: &Conv1dCache,
        grad_out: &[Vec<f64>],
        grads: &mut Conv1dGrads,
    ) -> Vec<Vec<f64>> {
        let k = self.kernel();
        let mut grad_input = vec![vec![0.0; self.channels()]; cache.input.len()];
        for (t, row) in grad_out.iter().enumerate() {
            for m in 0..self.filters() {
                let da = row[m] * self.activation.derivative_from_output(cache.output[t][m]);
                if da == 0.0 {
                    continue;
                }
                grads.bias.data_mut()[m] += da;
                for dt in 0..k {
                    for c in 0..self.channels() {
                        grads.weights.add3(m, dt, c, da * cache.input[t + dt][c]);
                        grad_input[t + dt][c] += da * self.weights.at3(m, dt, c);
                    }
                }
            }
        }
        grad_input
    }
}

/// Max pooling with stride equal to the window; a trailing remainder
/// shorter than the window is dropped.
pub fn maxpool1d(input: &[Vec<f64>], pool: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let channels = input.first().map_or(0, Vec::len);
    let out_len = input.len() / pool;
    let mut output = Vec::with_capacity(out_len);
    let mut argmax = Vec::with_capacity(out_len);
    for t in 0..out_len {
        let mut row = vec![f64::NEG_INFINITY; channels];
        let mut arg = vec![0usize; channels];
        for dt in 0..pool {
            let src = t * pool + dt;
            for c in 0..channels {
                if input[src][c] > row[c] {
                    row[c] = input[src][c];
                    arg[c] = src;
                }
            }
        }
        output.push(row);
        argmax.push(arg);
    }
    (output, argmax)
}

/// Routes pooled gradients back to the argmax positions.
pub fn maxpool1d_backward(
    grad_out: &[Vec<f64>],
    argmax: &[Vec<usize>],
    input_len: usize,
) -> Vec<Vec<f64>> {
    let channels = grad_out.first().map_or(0, Vec::len);
    let mut grad_input = vec![vec![0.0; channels]; input_len];
    for (row, args) in grad_out.iter().zip(argmax) {
        for c in 0..channels {
            grad_input[args[c]][c] += row[c];
        }
    }
    grad_input
}

/// Row-major flatten of a [L × C] sequence into a vector.
pub fn flatten(input: &[Vec<f64>]) -> Vec<f64> {
    input.iter().flatten().copied().collect()
}

/// Inverse of [`flatten`] for gradients.
pub fn unflatten(grad: &[f64], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|r| grad[r * cols..(r + 1) * cols].to_vec())
        .collect()
}
