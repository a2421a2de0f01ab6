//! Dense feed-forward policy loaded from a text weights file.
//!
//! File layout (version 1), whitespace separated, `#` starts a comment:
//!
//! ```text
//! mlp-weights 1
//! layer_dims 45 64 3
//! activations tanh
//! layer 0 weights 64 45
//! <64 rows of 45 numbers, row-major: output index by input index>
//! layer 0 biases 64
//! <64 numbers>
//! layer 1 weights 3 64
//! ...
//! ```
//!
//! `activations` lists one entry (`tanh` or `relu`) per hidden layer; the
//! output layer is always `tanh` scaled by `a_max`. Numbers are written with
//! shortest round-trip formatting so save/load is lossless.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Policy;
use crate::sim::{ControlAction, Observation, Vec3};

const MAGIC: &str = "mlp-weights";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("non-finite parameter in layer {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Row-major, `outputs × inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<DenseLayer>,
    /// One per hidden layer.
    pub activations: Vec<Activation>,
}

impl MlpWeights {
    pub fn new(
        layer_dims: Vec<usize>,
        layers: Vec<DenseLayer>,
        activations: Vec<Activation>,
    ) -> Result<Self, PolicyError> {
        let w = Self { layer_dims, layers, activations };
        w.validate()?;
        Ok(w)
    }

    /// Zero weights with the given shape.
    pub fn zeros(layer_dims: Vec<usize>, activation: Activation) -> Result<Self, PolicyError> {
        let layers = layer_dims
            .windows(2)
            .map(|w| DenseLayer { weights: vec![0.0; w[0] * w[1]], biases: vec![0.0; w[1]] })
            .collect();
        let hidden = layer_dims.len().saturating_sub(2);
        Self::new(layer_dims, layers, vec![activation; hidden])
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let dims = &self.layer_dims;
        if dims.len() < 2 || dims.contains(&0) {
            return Err(PolicyError::Dimension(format!("layer_dims {dims:?} needs at least two positive entries")));
        }
        if self.layers.len() != dims.len() - 1 {
            return Err(PolicyError::Dimension(format!("{} layers for layer_dims {dims:?}", self.layers.len())));
        }
        if self.activations.len() != dims.len() - 2 {
            return Err(PolicyError::Dimension(format!(
                "{} activations for {} hidden layers",
                self.activations.len(),
                dims.len() - 2
            )));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let (inputs, outputs) = (dims[i], dims[i + 1]);
            if layer.weights.len() != inputs * outputs || layer.biases.len() != outputs {
                return Err(PolicyError::Dimension(format!(
                    "layer {i} expects {outputs}x{inputs} weights and {outputs} biases, got {} and {}",
                    layer.weights.len(),
                    layer.biases.len()
                )));
            }
            if !layer.weights.iter().chain(&layer.biases).all(|v| v.is_finite()) {
                return Err(PolicyError::NonFinite(i));
            }
        }
        Ok(())
    }

    /// Raw forward pass: hidden activations as declared, `tanh` on the output.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, PolicyError> {
        if input.len() != self.input_dim() {
            return Err(PolicyError::Dimension(format!(
                "input has {} features, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut x = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let inputs = x.len();
            let act = if i == last { Activation::Tanh } else { self.activations[i] };
            x = layer
                .weights
                .chunks_exact(inputs)
                .zip(&layer.biases)
                .map(|(row, b)| act.apply(row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + b))
                .collect();
        }
        Ok(x)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |vals: &mut dyn Iterator<Item = String>| vals.collect::<Vec<_>>().join(" ");
        writeln!(out, "{MAGIC} {VERSION}").unwrap();
        writeln!(out, "layer_dims {}", join(&mut self.layer_dims.iter().map(|d| d.to_string()))).unwrap();
        writeln!(out, "activations {}", join(&mut self.activations.iter().map(|a| a.as_str().to_owned()))).unwrap();
        for (i, layer) in self.layers.iter().enumerate() {
            let (inputs, outputs) = (self.layer_dims[i], self.layer_dims[i + 1]);
            writeln!(out, "layer {i} weights {outputs} {inputs}").unwrap();
            for row in layer.weights.chunks(inputs) {
                writeln!(out, "{}", join(&mut row.iter().map(|v| format!("{v:?}")))).unwrap();
            }
            writeln!(out, "layer {i} biases {outputs}").unwrap();
            writeln!(out, "{}", join(&mut layer.biases.iter().map(|v| format!("{v:?}")))).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PolicyError> {
        let mut tokens = Tokens::new(text);
        tokens.expect(MAGIC)?;
        let version: u32 = tokens.parse()?;
        if version != VERSION {
            return Err(tokens.error(format!("unsupported version {version}")));
        }
        tokens.expect("layer_dims")?;
        let layer_dims = tokens.parse_rest_of_line::<usize>()?;
        if layer_dims.len() < 2 {
            return Err(PolicyError::Dimension("layer_dims needs at least two entries".into()));
        }
        tokens.expect("activations")?;
        let activations = tokens.parse_rest_of_line::<Activation>()?;

        let mut layers = Vec::with_capacity(layer_dims.len() - 1);
        for i in 0..layer_dims.len() - 1 {
            tokens.expect("layer")?;
            let index: usize = tokens.parse()?;
            if index != i {
                return Err(tokens.error(format!("expected layer {i}, found layer {index}")));
            }
            tokens.expect("weights")?;
            let rows: usize = tokens.parse()?;
            let cols: usize = tokens.parse()?;
            if (rows, cols) != (layer_dims[i + 1], layer_dims[i]) {
                return Err(PolicyError::Dimension(format!(
                    "layer {i} declared as {rows}x{cols}, layer_dims imply {}x{}",
                    layer_dims[i + 1],
                    layer_dims[i]
                )));
            }
            let weights = tokens.parse_n::<f64>(rows * cols)?;
            tokens.expect("layer")?;
            tokens.expect(&i.to_string())?;
            tokens.expect("biases")?;
            let n: usize = tokens.parse()?;
            if n != rows {
                return Err(PolicyError::Dimension(format!("layer {i} has {n} biases for {rows} outputs")));
            }
            let biases = tokens.parse_n::<f64>(n)?;
            layers.push(DenseLayer { weights, biases });
        }
        if let Some((line, tok)) = tokens.next() {
            return Err(PolicyError::Parse { line, message: format!("trailing token `{tok}`") });
        }
        Self::new(layer_dims, layers, activations)
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(n, line)| {
                let line = line.split('#').next().unwrap_or("");
                line.split_whitespace().map(move |t| (n + 1, t))
            })
            .collect();
        Self { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied();
        self.pos += 1;
        item
    }

    fn current_line(&self) -> usize {
        self.items.get(self.pos).or(self.items.last()).map_or(0, |t| t.0)
    }

    fn error(&self, message: String) -> PolicyError {
        PolicyError::Parse { line: self.current_line(), message }
    }

    fn take(&mut self) -> Result<(usize, &'a str), PolicyError> {
        self.next().ok_or_else(|| self.error("unexpected end of file".into()))
    }

    fn expect(&mut self, word: &str) -> Result<(), PolicyError> {
        let (line, tok) = self.take()?;
        if tok != word {
            return Err(PolicyError::Parse { line, message: format!("expected `{word}`, found `{tok}`") });
        }
        Ok(())
    }

    fn parse<T: FromStr>(&mut self) -> Result<T, PolicyError>
    where
        T::Err: std::fmt::Display,
    {
        let (line, tok) = self.take()?;
        tok.parse().map_err(|e| PolicyError::Parse { line, message: format!("bad value `{tok}`: {e}") })
    }

    fn parse_n<T: FromStr>(&mut self, n: usize) -> Result<Vec<T>, PolicyError>
    where
        T::Err: std::fmt::Display,
    {
        (0..n).map(|_| self.parse()).collect()
    }

    fn parse_rest_of_line<T: FromStr>(&mut self) -> Result<Vec<T>, PolicyError>
    where
        T::Err: std::fmt::Display,
    {
        let line = self.items.get(self.pos.saturating_sub(1)).map_or(0, |t| t.0);
        let mut out = Vec::new();
        while self.items.get(self.pos).is_some_and(|t| t.0 == line) {
            out.push(self.parse()?);
        }
        Ok(out)
    }
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<MlpWeights, PolicyError> {
    MlpWeights::from_text(&std::fs::read_to_string(path)?)
}

pub fn save_weights(weights: &MlpWeights, path: impl AsRef<Path>) -> Result<(), PolicyError> {
    std::fs::write(path, weights.to_text())?;
    Ok(())
}

/// Evaluates the network on the flattened observation and scales the
/// `tanh` output by `a_max`; the result is norm-clamped to `a_max`.
pub fn mlp_act(weights: &MlpWeights, observation: &Observation, a_max: f64) -> Result<ControlAction, PolicyError> {
    if weights.output_dim() != 3 {
        return Err(PolicyError::Dimension(format!("output dim {} != 3", weights.output_dim())));
    }
    let out = weights.forward(&observation.to_features())?;
    Ok(ControlAction { accel_command: Vec3::new(out[0], out[1], out[2]) * a_max }.clamped(a_max))
}

#[derive(Debug, Clone)]
pub struct MlpPolicy {
    weights: MlpWeights,
    a_max: f64,
}

impl MlpPolicy {
    pub fn new(weights: MlpWeights, a_max: f64) -> Result<Self, PolicyError> {
        weights.validate()?;
        if weights.output_dim() != 3 {
            return Err(PolicyError::Dimension(format!("output dim {} != 3", weights.output_dim())));
        }
        Ok(Self { weights, a_max })
    }

    pub fn weights(&self) -> &MlpWeights {
        &self.weights
    }
}

impl Policy for MlpPolicy {
    /// Panics if the observation length differs from the network input;
    /// the harness checks this before the first episode.
    fn act(&mut self, observation: &Observation) -> ControlAction {
        mlp_act(&self.weights, observation, self.a_max).expect("observation length checked at construction")
    }

    fn input_len(&self) -> Option<usize> {
        Some(self.weights.input_dim())
    }

    fn name(&self) -> String {
        format!("mlp[{}]", self.weights.layer_dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-"))
    }

    fn clone_box(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }
}
