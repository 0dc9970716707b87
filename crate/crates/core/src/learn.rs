//! Feedforward classifier used as a model-free decisional quantizer.
//!
//! Hidden layers are affine maps followed by the logistic function; the
//! output layer is a softmax over the decision indices. Training minimizes
//! the mean cross-entropy against exhaustively computed labels with momentum
//! gradient descent and early stopping on the validation split.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DoqError, Result};
use crate::quantizer::LabeledDataset;

const MODEL_MAGIC: &str = "doq-mlp 1";

/// Per-feature affine standardization fit on the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(DoqError::domain("cannot standardize an empty split"));
        }
        let dim = rows[0].len();
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n as f64).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    layer_sizes: Vec<usize>,
    /// `weights[l]` has shape `(layer_sizes[l + 1], layer_sizes[l])`.
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    standardizer: Option<Standardizer>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
}

/// Uniform `±sqrt(3 / fan_in)` weights and zero biases.
pub fn mlp_init(layer_sizes: &[usize], seed: u64) -> Result<MlpClassifier> {
    if layer_sizes.len() < 3 {
        return Err(DoqError::domain(
            "need an input layer, at least one hidden layer and an output layer",
        ));
    }
    if layer_sizes.contains(&0) {
        return Err(DoqError::domain("layer sizes must be positive"));
    }
    if *layer_sizes.last().unwrap() < 2 {
        return Err(DoqError::domain("output layer needs at least two classes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = (3.0 / fan_in as f64).sqrt();
        weights.push(Array2::from_shape_simple_fn((fan_out, fan_in), || {
            rng.random_range(-bound..bound)
        }));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(MlpClassifier {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
        standardizer: None,
    })
}

/// Scores for one feature vector (standardized first when the network
/// carries a standardizer).
pub fn mlp_forward(net: &MlpClassifier, x: &[f64]) -> Result<Vec<f64>> {
    net.check_input(x.len())?;
    let row = match &net.standardizer {
        Some(s) => s.apply(x),
        None => x.to_vec(),
    };
    let batch = Array2::from_shape_vec((1, row.len()), row).expect("row shape");
    Ok(net.forward_raw(batch.view()).row(0).to_vec())
}

struct Gradients {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

impl MlpClassifier {
    /// Assemble a network from explicit parameters.
    pub fn from_parts(
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        standardizer: Option<Standardizer>,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(DoqError::domain("weights and biases must pair up per layer"));
        }
        let mut sizes = vec![weights[0].ncols()];
        for (w, b) in weights.iter().zip(&biases) {
            if w.ncols() != *sizes.last().unwrap() || w.nrows() != b.len() {
                return Err(DoqError::domain("layer shapes do not chain"));
            }
            sizes.push(w.nrows());
        }
        if let Some(s) = &standardizer {
            if s.mean.len() != sizes[0] || s.std.len() != sizes[0] {
                return Err(DoqError::domain("standardizer dimension mismatch"));
            }
        }
        Ok(MlpClassifier {
            layer_sizes: sizes,
            weights,
            biases,
            standardizer,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(DoqError::domain(format!(
                "input has {len} features, network expects {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Most likely class, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let scores = mlp_forward(self, x)?;
        Ok(argmax(&scores))
    }

    /// Predictions for a batch of raw feature rows.
    pub fn predict_batch(&self, rows: &[&[f64]]) -> Result<Vec<usize>> {
        let x = self.design_matrix(rows)?;
        let p = self.forward_raw(x.view());
        Ok(p.rows().into_iter().map(|r| argmax(r.as_slice().unwrap())).collect())
    }

    /// Rows as a standardized `(n, input_dim)` matrix.
    fn design_matrix(&self, rows: &[&[f64]]) -> Result<Array2<f64>> {
        let dim = self.input_dim();
        let mut x = Array2::zeros((rows.len(), dim));
        for (i, r) in rows.iter().enumerate() {
            self.check_input(r.len())?;
            let v = match &self.standardizer {
                Some(s) => s.apply(r),
                None => r.to_vec(),
            };
            x.row_mut(i).assign(&Array1::from(v));
        }
        Ok(x)
    }

    /// Softmax scores for already-standardized rows.
    fn forward_raw(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let last = self.weights.len() - 1;
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(sigmoid);
            }
            a = z;
        }
        softmax_rows(&mut a);
        a
    }

    /// Mean cross-entropy and its gradient on a batch of standardized rows.
    fn loss_and_gradients(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> (f64, Gradients) {
        let n = x.nrows() as f64;
        let last = self.weights.len() - 1;
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.weights.len() + 1);
        acts.push(x.to_owned());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[l].dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(sigmoid);
            } else {
                softmax_rows(&mut z);
            }
            acts.push(z);
        }
        let probs = acts.last().unwrap();
        let loss = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| -probs[[i, y]].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / n;

        let mut delta = probs.clone();
        for (i, &y) in labels.iter().enumerate() {
            delta[[i, y]] -= 1.0;
        }
        delta.mapv_inplace(|v| v / n);

        let mut gw = vec![Array2::zeros((0, 0)); self.weights.len()];
        let mut gb = vec![Array1::zeros(0); self.weights.len()];
        for l in (0..self.weights.len()).rev() {
            gw[l] = delta.t().dot(&acts[l]);
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l]);
                back.zip_mut_with(&acts[l], |d, &a| *d *= a * (1.0 - a));
                delta = back;
            }
        }
        (loss, Gradients {
            weights: gw,
            biases: gb,
        })
    }

    fn loss(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> f64 {
        let p = self.forward_raw(x);
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| -p[[i, y]].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / labels.len() as f64
    }

    fn params_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Plain-text serialization; floats carry 17 significant digits so a
    /// round trip is exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fmt_row = |out: &mut String, tag: &str, vals: &mut dyn Iterator<Item = f64>| {
            out.push_str(tag);
            for v in vals {
                let _ = write!(out, " {v:.16e}");
            }
            out.push('\n');
        };
        let _ = writeln!(out, "{MODEL_MAGIC}");
        let sizes: Vec<String> = self.layer_sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "layer_sizes {}", sizes.join(" "));
        match &self.standardizer {
            Some(s) => {
                out.push_str("standardize 1\n");
                fmt_row(&mut out, "mean", &mut s.mean.iter().copied());
                fmt_row(&mut out, "std", &mut s.std.iter().copied());
            }
            None => out.push_str("standardize 0\n"),
        }
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let _ = writeln!(out, "layer {} {} {}", l + 1, w.nrows(), w.ncols());
            for row in w.rows() {
                fmt_row(&mut out, "w", &mut row.iter().copied());
            }
            fmt_row(&mut out, "b", &mut b.iter().copied());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| DoqError::domain(format!("model file: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(MODEL_MAGIC) {
            return Err(bad("missing header"));
        }
        let parse_floats = |line: Option<&str>, tag: &str| -> Result<Vec<f64>> {
            let line = line.ok_or_else(|| bad(&format!("missing '{tag}' line")))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(tag) {
                return Err(bad(&format!("expected '{tag}' line, got '{line}'")));
            }
            it.map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad number '{t}'"))))
                .collect()
        };
        let sizes_line = lines.next().ok_or_else(|| bad("missing layer_sizes"))?;
        let mut it = sizes_line.split_whitespace();
        if it.next() != Some("layer_sizes") {
            return Err(bad("expected layer_sizes"));
        }
        let sizes: Vec<usize> = it
            .map(|t| t.parse().map_err(|_| bad("bad layer size")))
            .collect::<Result<_>>()?;
        if sizes.len() < 2 {
            return Err(bad("too few layers"));
        }
        let standardizer = match lines.next().map(str::trim) {
            Some("standardize 1") => Some(Standardizer {
                mean: parse_floats(lines.next(), "mean")?,
                std: parse_floats(lines.next(), "std")?,
            }),
            Some("standardize 0") => None,
            _ => return Err(bad("expected standardize flag")),
        };
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let header = lines.next().ok_or_else(|| bad("missing layer header"))?;
            let expected = format!("layer {} {} {}", l + 1, sizes[l + 1], sizes[l]);
            if header.trim() != expected {
                return Err(bad(&format!("expected '{expected}', got '{header}'")));
            }
            let mut data = Vec::with_capacity(sizes[l] * sizes[l + 1]);
            for _ in 0..sizes[l + 1] {
                let row = parse_floats(lines.next(), "w")?;
                if row.len() != sizes[l] {
                    return Err(bad("weight row has wrong length"));
                }
                data.extend(row);
            }
            weights.push(
                Array2::from_shape_vec((sizes[l + 1], sizes[l]), data)
                    .map_err(|_| bad("weight shape"))?,
            );
            let b = parse_floats(lines.next(), "b")?;
            if b.len() != sizes[l + 1] {
                return Err(bad("bias has wrong length"));
            }
            biases.push(Array1::from(b));
        }
        MlpClassifier::from_parts(weights, biases, standardizer)
    }

    fn flat_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_parameters());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend(w.iter());
            v.extend(b.iter());
        }
        v
    }

    fn set_flat_param(&mut self, mut index: usize, value: f64) {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            if index < w.len() {
                let cols = w.ncols();
                w[[index / cols, index % cols]] = value;
                return;
            }
            index -= w.len();
            if index < b.len() {
                b[index] = value;
                return;
            }
            index -= b.len();
        }
        panic!("parameter index out of range");
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Early-stopping window on the validation loss, in epochs.
    pub patience: usize,
    /// Minibatch size; `None` trains on the whole split at once.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 200,
            learning_rate: 0.3,
            momentum: 0.9,
            patience: 20,
            batch_size: Some(256),
            seed: 0,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(DoqError::domain("max_epochs must be at least 1"));
        }
        if self.patience > self.max_epochs {
            return Err(DoqError::domain("patience cannot exceed max_epochs"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(DoqError::domain("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(DoqError::domain("momentum must lie in [0, 1)"));
        }
        if self.batch_size == Some(0) {
            return Err(DoqError::domain("batch size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    /// Mean training loss seen during each epoch.
    pub loss_curve: Vec<f64>,
    pub validation_curve: Vec<f64>,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

fn gather(x: &Array2<f64>, labels: &[usize], idx: &[usize]) -> (Array2<f64>, Vec<usize>) {
    (x.select(Axis(0), idx), idx.iter().map(|&i| labels[i]).collect())
}

fn accuracy(net: &MlpClassifier, x: &Array2<f64>, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let p = net.forward_raw(x.view());
    let hits = p
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(r, &y)| argmax(r.as_slice().unwrap()) == y)
        .count();
    hits as f64 / labels.len() as f64
}

/// Train `net` in place; on return it holds the best-validation parameters.
pub fn mlp_train(
    net: &mut MlpClassifier,
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(DoqError::domain("empty training split"));
    }
    if dataset.validation.is_empty() {
        return Err(DoqError::domain("empty validation split"));
    }
    if dataset.n_classes != net.n_classes() {
        return Err(DoqError::domain(format!(
            "dataset has {} classes, network outputs {}",
            dataset.n_classes,
            net.n_classes()
        )));
    }
    if let Some(&bad) = dataset.labels.iter().find(|&&l| l >= dataset.n_classes) {
        return Err(DoqError::domain(format!("label {bad} out of range")));
    }

    net.standardizer = if cfg.standardize {
        let rows: Vec<&[f64]> = dataset
            .train
            .iter()
            .map(|&i| dataset.features[i].as_slice())
            .collect();
        Some(Standardizer::fit(&rows)?)
    } else {
        None
    };
    let all_rows: Vec<&[f64]> = dataset.features.iter().map(|f| f.as_slice()).collect();
    let x = net.design_matrix(&all_rows)?;
    let (x_val, y_val) = gather(&x, &dataset.labels, &dataset.validation);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order = dataset.train.clone();
    let batch = cfg.batch_size.unwrap_or(order.len()).min(order.len());
    let mut vel_w: Vec<Array2<f64>> = net.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
    let mut vel_b: Vec<Array1<f64>> = net.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();

    let mut best = (net.loss(x_val.view(), &y_val), net.clone(), 0usize);
    let mut loss_curve = Vec::new();
    let mut validation_curve = Vec::new();
    let mut since_best = 0usize;

    for epoch in 1..=cfg.max_epochs {
        if cfg.batch_size.is_some() {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let (xb, yb) = gather(&x, &dataset.labels, chunk);
            let (loss, g) = net.loss_and_gradients(xb.view(), &yb);
            if !loss.is_finite() {
                return Err(DoqError::Training {
                    epoch,
                    reason: format!("loss became {loss}"),
                });
            }
            epoch_loss += loss * chunk.len() as f64;
            for l in 0..net.weights.len() {
                vel_w[l].zip_mut_with(&g.weights[l], |v, &gr| {
                    *v = cfg.momentum * *v - cfg.learning_rate * gr
                });
                vel_b[l].zip_mut_with(&g.biases[l], |v, &gr| {
                    *v = cfg.momentum * *v - cfg.learning_rate * gr
                });
                net.weights[l] += &vel_w[l];
                net.biases[l] += &vel_b[l];
            }
        }
        if !net.params_finite() {
            return Err(DoqError::Training {
                epoch,
                reason: "non-finite parameters".into(),
            });
        }
        loss_curve.push(epoch_loss / order.len() as f64);
        let val_loss = net.loss(x_val.view(), &y_val);
        if !val_loss.is_finite() {
            return Err(DoqError::Training {
                epoch,
                reason: format!("validation loss became {val_loss}"),
            });
        }
        validation_curve.push(val_loss);
        if val_loss < best.0 {
            best = (val_loss, net.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let epochs_run = loss_curve.len();
    *net = best.1;
    let (x_tr, y_tr) = gather(&x, &dataset.labels, &dataset.train);
    let (x_te, y_te) = gather(&x, &dataset.labels, &dataset.test);
    Ok(TrainReport {
        train_accuracy: accuracy(net, &x_tr, &y_tr),
        validation_accuracy: accuracy(net, &x_val, &y_val),
        test_accuracy: accuracy(net, &x_te, &y_te),
        loss_curve,
        validation_curve,
        best_epoch: best.2,
        epochs_run,
    })
}

/// Mean cross-entropy of `net` over the given rows of a dataset.
pub fn mlp_loss(net: &MlpClassifier, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let rows: Vec<&[f64]> = features.iter().map(|f| f.as_slice()).collect();
    let x = net.design_matrix(&rows)?;
    Ok(net.loss(x.view(), labels))
}

/// Backpropagated gradient of the mean cross-entropy, flattened layer by
/// layer (weights row-major, then biases).
pub fn mlp_gradient(net: &MlpClassifier, features: &[Vec<f64>], labels: &[usize]) -> Result<Vec<f64>> {
    let rows: Vec<&[f64]> = features.iter().map(|f| f.as_slice()).collect();
    let x = net.design_matrix(&rows)?;
    let (_, g) = net.loss_and_gradients(x.view(), labels);
    let mut v = Vec::with_capacity(net.n_parameters());
    for (w, b) in g.weights.iter().zip(&g.biases) {
        v.extend(w.iter());
        v.extend(b.iter());
    }
    Ok(v)
}

/// Largest relative disagreement between backpropagated gradients and
/// central finite differences with step `1e-5`. The denominator is floored
/// at `1e-4`, above the roundoff floor of the difference quotient, so tiny
/// gradients are judged by absolute error.
pub fn mlp_gradient_check(net: &MlpClassifier, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if labels.len() != features.len() || labels.is_empty() {
        return Err(DoqError::domain("batch features and labels must be nonempty and paired"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= net.n_classes()) {
        return Err(DoqError::domain(format!("label {bad} out of range")));
    }
    let analytic = mlp_gradient(net, features, labels)?;
    let base = net.flat_params();
    let h = 1e-5;
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        probe.set_flat_param(i, base[i] + h);
        let up = mlp_loss(&probe, features, labels)?;
        probe.set_flat_param(i, base[i] - h);
        let down = mlp_loss(&probe, features, labels)?;
        probe.set_flat_param(i, base[i]);
        let numeric = (up - down) / (2.0 * h);
        let denom = a.abs().max(numeric.abs()).max(1e-4);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
