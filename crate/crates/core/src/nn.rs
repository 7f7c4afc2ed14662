//! Feed-forward envelope reducer: a two-layer perceptron with bipolar-
//! sigmoid hidden units and a linear output, trained by full-batch
//! conjugate-gradient backpropagation with the Powell-Beale restart rule.
//!
//! The network maps a symbol's magnitude envelope to a reduced envelope;
//! phases are passed through untouched, so no side information is needed
//! at the receiver.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result, SimError};
use crate::ofdm::TimeSymbol;

/// Bipolar sigmoid (1 - e^-x) / (1 + e^-x), the odd companion of the
/// logistic function. Evaluated branch-wise so large |x| cannot overflow.
pub fn bipolar_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        (1.0 - e) / (1.0 + e)
    } else {
        let e = x.exp();
        (e - 1.0) / (e + 1.0)
    }
}

/// Derivative of the bipolar sigmoid expressed through its value:
/// f'(x) = (1 - f(x)^2) / 2.
fn bipolar_sigmoid_prime(value: f64) -> f64 {
    (1.0 - value * value) / 2.0
}

/// Two-layer perceptron with fixed activations (bipolar-sigmoid hidden,
/// linear output). Weights are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    in_dim: usize,
    hidden_dim: usize,
    out_dim: usize,
    /// hidden_dim x in_dim.
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// out_dim x hidden_dim.
    w2: Vec<f64>,
    b2: Vec<f64>,
    /// Envelope normalization divisor fixed at training time.
    scale: f64,
}

impl MlpModel {
    /// Random initialization, uniform in +-1/sqrt(fan_in) per layer.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, hidden_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        assert!(in_dim > 0 && hidden_dim > 0 && out_dim > 0);
        let r1 = 1.0 / (in_dim as f64).sqrt();
        let r2 = 1.0 / (hidden_dim as f64).sqrt();
        let mut uniform = |r: f64| (rng.random::<f64>() * 2.0 - 1.0) * r;
        let w1 = (0..hidden_dim * in_dim).map(|_| uniform(r1)).collect();
        let b1 = vec![0.0; hidden_dim];
        let w2 = (0..out_dim * hidden_dim).map(|_| uniform(r2)).collect();
        let b2 = vec![0.0; out_dim];
        Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1,
            b1,
            w2,
            b2,
            scale: 1.0,
        }
    }

    /// All-zero weights and biases (useful as a degenerate fixture).
    pub fn zeros(in_dim: usize, hidden_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1: vec![0.0; hidden_dim * in_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; out_dim * hidden_dim],
            b2: vec![0.0; out_dim],
            scale: 1.0,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.in_dim, self.hidden_dim, self.out_dim)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, scale: f64) {
        assert!(scale.is_finite() && scale > 0.0);
        self.scale = scale;
    }

    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        &mut self.b2
    }

    /// Forward pass: linear-output two-layer composition.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.in_dim {
            return Err(invalid(format!(
                "input length {} does not match model input dimension {}",
                input.len(),
                self.in_dim
            )));
        }
        let mut hidden = vec![0.0; self.hidden_dim];
        self.hidden_layer(input, &mut hidden);
        let mut output = vec![0.0; self.out_dim];
        self.output_layer(&hidden, &mut output);
        Ok(output)
    }

    fn hidden_layer(&self, input: &[f64], hidden: &mut [f64]) {
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &self.w1[j * self.in_dim..(j + 1) * self.in_dim];
            let pre = self.b1[j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            *h = bipolar_sigmoid(pre);
        }
    }

    fn output_layer(&self, hidden: &[f64], output: &mut [f64]) {
        for (d, y) in output.iter_mut().enumerate() {
            let row = &self.w2[d * self.hidden_dim..(d + 1) * self.hidden_dim];
            *y = self.b2[d] + row.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>();
        }
    }

    /// Number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// theta += alpha * direction over the flat [w1, b1, w2, b2] layout.
    pub fn apply_step(&mut self, direction: &[f64], alpha: f64) {
        debug_assert_eq!(direction.len(), self.param_count());
        let mut it = direction.iter();
        for w in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            *w += alpha * it.next().expect("direction length checked");
        }
    }
}

/// Supervised envelope dataset: `count` input/target vector pairs stored
/// flat. Inputs and targets share the normalization divisor.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    count: usize,
    in_dim: usize,
    out_dim: usize,
}

impl Dataset {
    pub fn new(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(invalid("dataset must contain at least one pair"));
        }
        let in_dim = pairs[0].0.len();
        let out_dim = pairs[0].1.len();
        if in_dim == 0 || out_dim == 0 {
            return Err(invalid("dataset vectors must be non-empty"));
        }
        let mut inputs = Vec::with_capacity(pairs.len() * in_dim);
        let mut targets = Vec::with_capacity(pairs.len() * out_dim);
        for (x, t) in pairs {
            if x.len() != in_dim || t.len() != out_dim {
                return Err(invalid("dataset vectors have inconsistent lengths"));
            }
            inputs.extend_from_slice(x);
            targets.extend_from_slice(t);
        }
        Ok(Self {
            inputs,
            targets,
            count: pairs.len(),
            in_dim,
            out_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.in_dim..(i + 1) * self.in_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.out_dim..(i + 1) * self.out_dim]
    }

    /// Root-mean-square over all input values.
    pub fn input_rms(&self) -> f64 {
        (self.inputs.iter().map(|x| x * x).sum::<f64>() / self.inputs.len() as f64).sqrt()
    }

    /// Divide every input and target by `divisor`.
    pub fn rescale(&mut self, divisor: f64) {
        assert!(divisor.is_finite() && divisor > 0.0);
        for x in self.inputs.iter_mut().chain(self.targets.iter_mut()) {
            *x /= divisor;
        }
    }
}

/// Training optimizer selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    /// Conjugate gradient with the Powell-Beale restart criterion and a
    /// backtracking line search.
    #[default]
    PowellBealeCg,
    /// Steepest descent; each epoch tries the configured learning rate and
    /// halves it until the loss decreases.
    GradientDescent,
}

/// Training parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub goal_mse: f64,
    pub max_epochs: usize,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            goal_mse: 1e-3,
            max_epochs: 25_000,
            optimizer: Optimizer::PowellBealeCg,
        }
    }
}

/// Outcome of one training run. `final_mse` always equals the last history
/// entry and never exceeds the initial loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_mse: f64,
    pub epochs_used: usize,
    pub mse_history: Vec<f64>,
}

impl TrainReport {
    pub fn reached(&self, goal_mse: f64) -> bool {
        self.final_mse <= goal_mse
    }
}

/// Mean squared error over all output elements of the batch.
pub fn batch_loss(model: &MlpModel, data: &Dataset) -> f64 {
    let mut hidden = vec![0.0; model.hidden_dim];
    let mut output = vec![0.0; model.out_dim];
    let mut sum = 0.0;
    for p in 0..data.len() {
        model.hidden_layer(data.input(p), &mut hidden);
        model.output_layer(&hidden, &mut output);
        for (y, t) in output.iter().zip(data.target(p)) {
            let e = y - t;
            sum += e * e;
        }
    }
    sum / (data.len() * model.out_dim) as f64
}

/// Loss plus its gradient over the flat [w1, b1, w2, b2] layout.
pub fn batch_loss_and_grad(model: &MlpModel, data: &Dataset) -> (f64, Vec<f64>) {
    let (in_dim, hidden_dim, out_dim) = model.dims();
    let mut grad = vec![0.0; model.param_count()];
    let (gw1, rest) = grad.split_at_mut(hidden_dim * in_dim);
    let (gb1, rest) = rest.split_at_mut(hidden_dim);
    let (gw2, gb2) = rest.split_at_mut(out_dim * hidden_dim);

    let mut hidden = vec![0.0; hidden_dim];
    let mut output = vec![0.0; out_dim];
    let mut dhidden = vec![0.0; hidden_dim];
    let norm = 2.0 / (data.len() * out_dim) as f64;
    let mut sum = 0.0;

    for p in 0..data.len() {
        let x = data.input(p);
        model.hidden_layer(x, &mut hidden);
        model.output_layer(&hidden, &mut output);

        dhidden.iter_mut().for_each(|d| *d = 0.0);
        for d in 0..out_dim {
            let e = output[d] - data.target(p)[d];
            sum += e * e;
            let dy = norm * e;
            let w2_row = &model.w2[d * hidden_dim..(d + 1) * hidden_dim];
            let gw2_row = &mut gw2[d * hidden_dim..(d + 1) * hidden_dim];
            for j in 0..hidden_dim {
                gw2_row[j] += dy * hidden[j];
                dhidden[j] += dy * w2_row[j];
            }
            gb2[d] += dy;
        }
        for j in 0..hidden_dim {
            let dpre = dhidden[j] * bipolar_sigmoid_prime(hidden[j]);
            let gw1_row = &mut gw1[j * in_dim..(j + 1) * in_dim];
            for (g, &xi) in gw1_row.iter_mut().zip(x) {
                *g += dpre * xi;
            }
            gb1[j] += dpre;
        }
    }
    (sum / (data.len() * out_dim) as f64, grad)
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

/// Backtracking line search along `direction` from the current parameters.
/// Returns the accepted step and the loss there, or None when no step up
/// to machine precision satisfies the Armijo decrease condition.
fn line_search(
    model: &MlpModel,
    data: &Dataset,
    direction: &[f64],
    loss0: f64,
    slope0: f64,
    alpha_start: f64,
) -> Option<(f64, f64)> {
    let mut alpha = alpha_start;
    for _ in 0..MAX_BACKTRACKS {
        let mut trial = model.clone();
        trial.apply_step(direction, alpha);
        let loss = batch_loss(&trial, data);
        if loss.is_finite() && loss <= loss0 + ARMIJO_C1 * alpha * slope0 {
            return Some((alpha, loss));
        }
        alpha *= 0.5;
    }
    None
}

/// Full-batch training. Stops when the loss reaches `goal_mse`, when
/// `max_epochs` epochs have run, or when the line search cannot find any
/// descent step.
pub fn train(model: &mut MlpModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(invalid("training dataset is empty"));
    }
    let (in_dim, _, out_dim) = model.dims();
    if data.in_dim != in_dim || data.out_dim != out_dim {
        return Err(invalid(format!(
            "dataset dimensions {}x{} do not match model {}x{}",
            data.in_dim, data.out_dim, in_dim, out_dim
        )));
    }
    if !cfg.learning_rate.is_finite() || cfg.learning_rate <= 0.0 {
        return Err(invalid("learning_rate must be a finite positive number"));
    }
    // goal_mse = +inf is the stop-immediately sentinel and stays legal.
    if cfg.goal_mse.is_nan() || cfg.goal_mse <= 0.0 {
        return Err(invalid("goal_mse must be > 0"));
    }

    let mut history = Vec::new();
    let mut prev_grad: Vec<f64> = Vec::new();
    let mut prev_direction: Vec<f64> = Vec::new();
    let mut prev_alpha = cfg.learning_rate;
    let mut epochs_used = 0;

    for _epoch in 0..cfg.max_epochs {
        let (mse, grad) = batch_loss_and_grad(model, data);
        history.push(mse);
        epochs_used += 1;
        if mse <= cfg.goal_mse {
            return Ok(TrainReport {
                final_mse: mse,
                epochs_used,
                mse_history: history,
            });
        }

        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        if grad_sq == 0.0 {
            break; // exact stationary point
        }

        let step = match cfg.optimizer {
            Optimizer::GradientDescent => {
                let direction: Vec<f64> = grad.iter().map(|g| -g).collect();
                line_search(model, data, &direction, mse, -grad_sq, cfg.learning_rate)
                    .map(|(alpha, _)| (direction, alpha))
            }
            Optimizer::PowellBealeCg => {
                // Restart with steepest descent when successive gradients
                // lose conjugacy: |g_k . g_{k-1}| >= 0.2 ||g_k||^2.
                let dot_prev: f64 = prev_grad
                    .iter()
                    .zip(&grad)
                    .map(|(a, b)| a * b)
                    .sum();
                let restart = prev_grad.is_empty() || dot_prev.abs() >= 0.2 * grad_sq;
                let mut direction: Vec<f64> = if restart {
                    grad.iter().map(|g| -g).collect()
                } else {
                    // Polak-Ribiere coefficient, clamped at zero.
                    let prev_sq: f64 = prev_grad.iter().map(|g| g * g).sum();
                    let beta = (grad
                        .iter()
                        .zip(&prev_grad)
                        .map(|(g, gp)| g * (g - gp))
                        .sum::<f64>()
                        / prev_sq)
                        .max(0.0);
                    grad.iter()
                        .zip(&prev_direction)
                        .map(|(g, d)| -g + beta * d)
                        .collect()
                };
                let mut slope: f64 = grad.iter().zip(&direction).map(|(g, d)| g * d).sum();
                if slope >= 0.0 {
                    // Not a descent direction; fall back to steepest descent.
                    direction = grad.iter().map(|g| -g).collect();
                    slope = -grad_sq;
                }
                let alpha_start = (prev_alpha * 2.0).clamp(1e-12, 1e3);
                match line_search(model, data, &direction, mse, slope, alpha_start) {
                    Some((alpha, _)) => Some((direction, alpha)),
                    None => {
                        let steepest: Vec<f64> = grad.iter().map(|g| -g).collect();
                        line_search(model, data, &steepest, mse, -grad_sq, cfg.learning_rate)
                            .map(|(alpha, _)| (steepest, alpha))
                    }
                }
            }
        };

        match step {
            Some((direction, alpha)) => {
                model.apply_step(&direction, alpha);
                prev_alpha = alpha;
                prev_grad = grad;
                prev_direction = direction;
            }
            None => break, // no representable descent step remains
        }
    }

    let final_mse = batch_loss(model, data);
    history.push(final_mse);
    Ok(TrainReport {
        final_mse,
        epochs_used,
        mse_history: history,
    })
}

/// Apply the trained reducer to one symbol: predict a new envelope from
/// the current one and rebuild each sample with its original phase. The
/// predicted magnitudes are clamped to be non-negative; samples with zero
/// input magnitude stay zero (they carry no phase to preserve).
pub fn nn_reduce(model: &MlpModel, symbol: &TimeSymbol) -> Result<TimeSymbol> {
    if symbol.prefix_len() != 0 {
        return Err(invalid(
            "nn_reduce expects the useful part only; re-derive the cyclic prefix afterwards",
        ));
    }
    let n = symbol.useful_len();
    if n != model.in_dim {
        return Err(invalid(format!(
            "symbol length {n} does not match model input dimension {}",
            model.in_dim
        )));
    }
    let envelope: Vec<f64> = symbol.useful().iter().map(|s| s.norm() / model.scale).collect();
    let predicted = model.forward(&envelope)?;
    let samples = symbol
        .useful()
        .iter()
        .zip(&predicted)
        .map(|(&s, &m)| {
            let mag_in = s.norm();
            if mag_in == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                s * (m.max(0.0) * model.scale / mag_in)
            }
        })
        .collect();
    Ok(TimeSymbol::new(samples))
}

const MODEL_MAGIC: &str = "PAPR-MLP v1";

impl MlpModel {
    /// Write the model to `path`.
    ///
    /// Format: an ASCII header (magic line, `in`/`hidden`/`out` dimensions,
    /// activation tags, payload descriptor) terminated by one empty line,
    /// followed by little-endian f64 values in the order
    /// scale, w1 (row-major), b1, w2 (row-major), b2.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{MODEL_MAGIC}")?;
        writeln!(out, "in {}", self.in_dim)?;
        writeln!(out, "hidden {}", self.hidden_dim)?;
        writeln!(out, "out {}", self.out_dim)?;
        writeln!(out, "hidden_activation bipolar_sigmoid")?;
        writeln!(out, "output_activation linear")?;
        writeln!(out, "payload le-f64 scale w1 b1 w2 b2")?;
        writeln!(out)?;
        let values = std::iter::once(self.scale)
            .chain(self.w1.iter().copied())
            .chain(self.b1.iter().copied())
            .chain(self.w2.iter().copied())
            .chain(self.b2.iter().copied());
        for v in values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Read a model written by [`MlpModel::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut reader = BufReader::new(file);
        let mut header = Vec::new();
        loop {
            let mut line = String::new();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                return Err(SimError::ModelFormat("truncated header".into()));
            }
            let line = line.trim_end_matches('\n').to_string();
            if line.is_empty() {
                break;
            }
            header.push(line);
        }
        if header.first().map(String::as_str) != Some(MODEL_MAGIC) {
            return Err(SimError::ModelFormat(format!(
                "expected magic '{MODEL_MAGIC}'"
            )));
        }
        let field = |key: &str| -> Result<String> {
            header
                .iter()
                .find_map(|l| l.strip_prefix(key).map(|rest| rest.trim().to_string()))
                .ok_or_else(|| SimError::ModelFormat(format!("missing header field '{key}'")))
        };
        let dim = |key: &str| -> Result<usize> {
            field(key)?
                .parse::<usize>()
                .map_err(|e| SimError::ModelFormat(format!("bad {key} dimension: {e}")))
        };
        let in_dim = dim("in ")?;
        let hidden_dim = dim("hidden ")?;
        let out_dim = dim("out ")?;
        if field("hidden_activation ")? != "bipolar_sigmoid"
            || field("output_activation ")? != "linear"
        {
            return Err(SimError::ModelFormat("unsupported activation tags".into()));
        }
        if in_dim == 0 || hidden_dim == 0 || out_dim == 0 {
            return Err(SimError::ModelFormat("zero dimension".into()));
        }

        let expected = 1 + hidden_dim * in_dim + hidden_dim + out_dim * hidden_dim + out_dim;
        let mut payload = Vec::new();
        reader.read_to_end(&mut payload)?;
        if payload.len() != expected * 8 {
            return Err(SimError::ModelFormat(format!(
                "payload holds {} bytes, expected {}",
                payload.len(),
                expected * 8
            )));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let scale = values.next().expect("scale present");
        if !(scale.is_finite() && scale > 0.0) {
            return Err(SimError::ModelFormat(format!("invalid scale {scale}")));
        }
        let mut take = |count: usize| -> Vec<f64> { values.by_ref().take(count).collect() };
        let w1 = take(hidden_dim * in_dim);
        let b1 = take(hidden_dim);
        let w2 = take(out_dim * hidden_dim);
        let b2 = take(out_dim);
        let model = Self {
            in_dim,
            hidden_dim,
            out_dim,
            w1,
            b1,
            w2,
            b2,
            scale,
        };
        if model.w1.iter().chain(&model.b1).chain(&model.w2).chain(&model.b2).any(|v| !v.is_finite()) {
            return Err(SimError::ModelFormat("non-finite weight".into()));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bipolar_sigmoid_basics() {
        assert_eq!(bipolar_sigmoid(0.0), 0.0);
        for i in 0..1000 {
            let x = -12.0 + i as f64 * 0.024;
            assert!((bipolar_sigmoid(x) - (x / 2.0).tanh()).abs() < 1e-12);
            assert!((bipolar_sigmoid(-x) + bipolar_sigmoid(x)).abs() < 1e-12);
        }
        assert!((bipolar_sigmoid(800.0) - 1.0).abs() < 1e-15);
        assert!((bipolar_sigmoid(-800.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn forward_zero_model_is_zero() {
        let model = MlpModel::zeros(8, 4, 8);
        let out = model.forward(&[1.0; 8]).unwrap();
        assert!(out.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn forward_bias_only_model_is_constant() {
        let mut model = MlpModel::zeros(8, 4, 3);
        model.output_bias_mut().copy_from_slice(&[1.0, -2.0, 0.5]);
        for input in [[0.0; 8], [3.0; 8]] {
            assert_eq!(model.forward(&input).unwrap(), vec![1.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let model = MlpModel::zeros(8, 4, 8);
        assert!(model.forward(&[0.0; 7]).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut model = MlpModel::new(5, 4, 3, &mut rng);
        // Give biases nonzero values so their gradients are exercised.
        model.b1.iter_mut().for_each(|b| *b = rng.random::<f64>() - 0.5);
        model.b2.iter_mut().for_each(|b| *b = rng.random::<f64>() - 0.5);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..6)
            .map(|_| {
                (
                    (0..5).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
                    (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
                )
            })
            .collect();
        let data = Dataset::new(&pairs).unwrap();
        let (_, analytic) = batch_loss_and_grad(&model, &data);

        let h = 1e-5;
        let mut unit = vec![0.0; analytic.len()];
        for i in 0..analytic.len() {
            unit[i] = 1.0;
            let mut plus = model.clone();
            plus.apply_step(&unit, h);
            let mut minus = model.clone();
            minus.apply_step(&unit, -h);
            unit[i] = 0.0;
            let numeric = (batch_loss(&plus, &data) - batch_loss(&minus, &data)) / (2.0 * h);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
            assert!(
                (analytic[i] - numeric).abs() / denom < 1e-4,
                "param {i}: analytic {} vs numeric {}",
                analytic[i],
                numeric
            );
        }
    }

    #[test]
    fn both_optimizers_reduce_loss_on_toy_mapping() {
        // Linear toy mapping y = 0.5 x (representable when hidden >= in).
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..12)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let t: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
                (x, t)
            })
            .collect();
        let data = Dataset::new(&pairs).unwrap();
        let init = MlpModel::new(4, 8, 4, &mut ChaCha8Rng::seed_from_u64(99));
        for optimizer in [Optimizer::PowellBealeCg, Optimizer::GradientDescent] {
            let mut model = init.clone();
            let report = train(
                &mut model,
                &data,
                &TrainConfig {
                    learning_rate: 0.1,
                    goal_mse: 1e-12,
                    max_epochs: 60,
                    optimizer,
                },
            )
            .unwrap();
            assert!(
                report.final_mse < report.mse_history[0],
                "{optimizer:?} must strictly reduce the loss"
            );
        }
    }

    #[test]
    fn near_identity_mapping_converges_fast() {
        // hidden >= in, target == input: representable, so CG reaches a
        // tiny loss quickly from a near-identity initialization.
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..20)
            .map(|_| {
                let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>() - 0.5).collect();
                (x.clone(), x)
            })
            .collect();
        let data = Dataset::new(&pairs).unwrap();
        // w1 = eps*I through the sigmoid's linear region, w2 = (2/eps)*I.
        let mut model = MlpModel::zeros(6, 6, 6);
        let eps = 1e-3;
        for j in 0..6 {
            model.w1[j * 6 + j] = eps;
            model.w2[j * 6 + j] = 2.0 / eps;
        }
        let report = train(
            &mut model,
            &data,
            &TrainConfig {
                goal_mse: 1e-6,
                max_epochs: 200,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert!(report.final_mse < 1e-6, "final {}", report.final_mse);
        assert!(report.epochs_used <= 200);
    }

    #[test]
    fn infinite_goal_returns_after_one_epoch() {
        let data = Dataset::new(&[(vec![1.0, 0.0], vec![0.5, 0.5])]).unwrap();
        let mut model = MlpModel::zeros(2, 2, 2);
        let report = train(
            &mut model,
            &data,
            &TrainConfig {
                goal_mse: f64::INFINITY,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(report.epochs_used, 1);
        assert_eq!(report.mse_history.len(), 1);
        assert_eq!(report.final_mse, *report.mse_history.last().unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..8)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
                let t: Vec<f64> = x.iter().map(|v| v * 0.3 + 0.1).collect();
                (x, t)
            })
            .collect();
        let data = Dataset::new(&pairs).unwrap();
        let cfg = TrainConfig {
            max_epochs: 40,
            goal_mse: 1e-15,
            ..TrainConfig::default()
        };
        let mut a = MlpModel::new(4, 5, 4, &mut ChaCha8Rng::seed_from_u64(1));
        let mut b = MlpModel::new(4, 5, 4, &mut ChaCha8Rng::seed_from_u64(1));
        let ra = train(&mut a, &data, &cfg).unwrap();
        let rb = train(&mut b, &data, &cfg).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a, b);
    }

    #[test]
    fn final_loss_never_exceeds_initial() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
            .map(|_| {
                (
                    (0..6).map(|_| rng.random::<f64>()).collect(),
                    (0..6).map(|_| rng.random::<f64>()).collect(),
                )
            })
            .collect();
        let data = Dataset::new(&pairs).unwrap();
        let mut model = MlpModel::new(6, 3, 6, &mut rng);
        let report = train(
            &mut model,
            &data,
            &TrainConfig {
                max_epochs: 100,
                goal_mse: 1e-15,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert!(report.final_mse <= report.mse_history[0] + 1e-15);
        assert_eq!(report.final_mse, *report.mse_history.last().unwrap());
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(Dataset::new(&[]).is_err());
    }

    #[test]
    fn nn_reduce_identity_model_round_trips_envelope() {
        // A zeros model with output bias = input envelope reproduces the
        // symbol exactly; here we instead check the phase contract with a
        // constant predicted envelope.
        let mut model = MlpModel::zeros(4, 2, 4);
        model.output_bias_mut().copy_from_slice(&[1.0; 4]);
        let symbol = TimeSymbol::new(vec![
            Complex64::new(3.0, 4.0),
            Complex64::new(0.0, -2.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let out = nn_reduce(&model, &symbol).unwrap();
        for (a, b) in symbol.useful().iter().zip(out.useful()) {
            if a.norm() == 0.0 {
                assert_eq!(b.norm(), 0.0);
            } else {
                assert!((b.norm() - 1.0).abs() < 1e-12, "predicted magnitude");
                let cross = a.re * b.im - a.im * b.re;
                let dot = a.re * b.re + a.im * b.im;
                assert!(cross.abs() < 1e-12 && dot > 0.0, "phase preserved");
            }
        }
    }

    #[test]
    fn nn_reduce_never_negative_magnitude() {
        let mut model = MlpModel::zeros(4, 2, 4);
        model.output_bias_mut().copy_from_slice(&[-5.0; 4]);
        let symbol = TimeSymbol::new(vec![Complex64::new(1.0, 1.0); 4]);
        let out = nn_reduce(&model, &symbol).unwrap();
        for s in out.useful() {
            assert_eq!(s.norm(), 0.0, "negative predictions clamp to zero");
        }
    }

    #[test]
    fn model_save_load_round_trip() {
        let dir = std::env::temp_dir().join("papr_core_model_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.mlp");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = MlpModel::new(6, 3, 6, &mut rng);
        model.set_scale(1.75);
        model.save(&path).unwrap();
        let loaded = MlpModel::load(&path).unwrap();
        assert_eq!(model, loaded);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn model_load_rejects_garbage() {
        let dir = std::env::temp_dir().join("papr_core_model_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("garbage.mlp");
        std::fs::write(&path, b"not a model\n\n").unwrap();
        assert!(matches!(
            MlpModel::load(&path),
            Err(SimError::ModelFormat(_))
        ));
        std::fs::remove_file(&path).ok();
    }
}
