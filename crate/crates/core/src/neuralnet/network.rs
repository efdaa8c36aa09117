use super::layer::{Layer, LayerSpec, Shape};
use crate::domain::GrayImage;
use crate::error::{Error, Result};
use crate::rng::{self, SplitMix64};
use crate::scalar::Scalar;

/// Identifies one stochastic pass: the dropout masks of a pass are a pure
/// function of `(master_seed, pass_index)` and the layer/unit indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DropoutPlan {
    pub master_seed: u64,
    pub pass_index: u64,
}

impl DropoutPlan {
    pub fn new(master_seed: u64, pass_index: u64) -> Self {
        Self { master_seed, pass_index }
    }
}

/// Class index 0 is "minutia", 1 is "non-minutia".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Minutia,
    NonMinutia,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Minutia => 0,
            Label::NonMinutia => 1,
        }
    }
}

/// Source of dropout multipliers during a forward pass.
#[derive(Debug, Clone)]
pub enum Masks<T> {
    /// Deterministic inference: dropout is the identity.
    Off,
    Plan(DropoutPlan),
    /// Explicit per-layer multipliers; `None` entries act as identity.
    Fixed(Vec<Option<Vec<T>>>),
}

/// Activation just before the first dropout layer. Everything up to that point
/// is deterministic, so Monte-Carlo passes can share it.
#[derive(Debug, Clone)]
pub struct PrefixActivation<T> {
    pub(crate) layer: usize,
    pub(crate) values: Vec<T>,
}

/// Per-layer parameter gradients, shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Scalar> Gradient<T> {
    pub fn zeros_like(net: &NetworkParams<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![T::zero(); l.biases.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradient<T>) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x = *x + *y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x = *x + *y);
        }
    }
}

/// Feedforward patch classifier ending in a two-class softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    input: Shape,
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> NetworkParams<T> {
    /// Builds a network with zero parameters after checking the layer stack.
    pub fn zeros(input: Shape, specs: &[LayerSpec]) -> Result<Self> {
        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input;
        for (i, spec) in specs.iter().enumerate() {
            let out = spec.output_shape(shape).map_err(|m| Error::Config(format!("layer {i}: {m}")))?;
            let (nw, nb) = spec.param_counts();
            layers.push(Layer {
                spec: *spec,
                input: shape,
                output: out,
                weights: vec![T::zero(); nw],
                biases: vec![T::zero(); nb],
            });
            shape = out;
        }
        let net = Self { input, layers };
        net.validate()?;
        Ok(net)
    }

    /// He-uniform initialization: weights of each parametric layer, in layer
    /// order and row-major, are `(2u - 1) * sqrt(6 / fan_in)` with `u` drawn from
    /// `SplitMix64(derive_seed(seed, "init"))`; biases are zero.
    pub fn he_uniform(input: Shape, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(input, specs)?;
        let mut g = SplitMix64::new(rng::derive_seed(seed, "init"));
        for layer in &mut net.layers {
            if !layer.spec.is_parametric() {
                continue;
            }
            let limit = (6.0 / layer.spec.fan_in() as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::lit((2.0 * g.next_f64() - 1.0) * limit);
            }
        }
        Ok(net)
    }

    /// conv 5x5x8 → relu → pool 2 → conv 3x3x16 → relu → pool 2 → dense → relu →
    /// dropout → dense 64→2 → softmax, for square patches of side `side`
    /// (divisible by 4).
    pub fn default_architecture(side: usize, dropout_rate: f64, seed: u64) -> Result<Self> {
        if side < 8 || !side.is_multiple_of(4) {
            return Err(Error::Config(format!("patch side {side} must be a multiple of 4 and at least 8")));
        }
        let flat = 16 * (side / 4) * (side / 4);
        let specs = [
            LayerSpec::Conv { kernel_h: 5, kernel_w: 5, in_channels: 1, out_channels: 8, stride: 1 },
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 2 },
            LayerSpec::Conv { kernel_h: 3, kernel_w: 3, in_channels: 8, out_channels: 16, stride: 1 },
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 2 },
            LayerSpec::Dense { inputs: flat, outputs: 64 },
            LayerSpec::Relu,
            LayerSpec::Dropout { rate: dropout_rate },
            LayerSpec::Dense { inputs: 64, outputs: 2 },
            LayerSpec::Softmax,
        ];
        Self::he_uniform(Shape::new(1, side, side), &specs, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let mut shape = self.input;
        for (i, l) in self.layers.iter().enumerate() {
            let out = l.spec.output_shape(shape).map_err(|m| Error::Config(format!("layer {i}: {m}")))?;
            if l.input != shape || l.output != out {
                return Err(Error::Config(format!("layer {i}: recorded shapes disagree with the stack")));
            }
            let (nw, nb) = l.spec.param_counts();
            if l.weights.len() != nw || l.biases.len() != nb {
                return Err(Error::Config(format!(
                    "layer {i}: expected {nw} weights and {nb} biases, found {} and {}",
                    l.weights.len(),
                    l.biases.len()
                )));
            }
            shape = out;
        }
        let n = self.layers.len();
        if n < 2 || self.layers[n - 1].spec != LayerSpec::Softmax {
            return Err(Error::Config("final layer must be a 2-class softmax".into()));
        }
        let last_dense = self
            .layers
            .iter()
            .rposition(|l| matches!(l.spec, LayerSpec::Dense { .. }))
            .ok_or_else(|| Error::Config("no fully-connected layer".into()))?;
        if !self.layers[..last_dense].iter().any(|l| matches!(l.spec, LayerSpec::Dropout { .. })) {
            return Err(Error::Config("a dropout layer must precede the final fully-connected layer".into()));
        }
        Ok(())
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Sets every dropout layer's rate.
    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        for l in &mut self.layers {
            if let LayerSpec::Dropout { rate: r } = &mut l.spec {
                *r = rate;
            }
        }
        Ok(())
    }

    /// Index of the first layer after which parameters are trainable in a
    /// last-layer fine-tune: the final fully-connected layer.
    pub fn last_dense_index(&self) -> usize {
        self.layers
            .iter()
            .rposition(|l| matches!(l.spec, LayerSpec::Dense { .. }))
            .expect("validated network has a dense layer")
    }

    pub(crate) fn from_parts(input: Shape, layers: Vec<Layer<T>>) -> Result<Self> {
        let net = Self { input, layers };
        net.validate()?;
        Ok(net)
    }

    /// Converts a patch into the network input vector.
    pub fn input_from_patch(&self, patch: &GrayImage) -> Result<Vec<T>> {
        let s = self.input;
        if s.channels != 1 || patch.width() != s.width || patch.height() != s.height {
            return Err(Error::Config(format!(
                "patch {}x{} does not match network input {s}",
                patch.width(),
                patch.height()
            )));
        }
        Ok(patch.pixels().iter().map(|v| T::lit(*v)).collect())
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input.len() {
            return Err(Error::Config(format!("input has {} values, network expects {}", x.len(), self.input.len())));
        }
        Ok(())
    }

    /// Multipliers of one dropout layer for one pass: 0 for dropped units,
    /// `1 / (1 - p)` for survivors.
    pub fn dropout_mask(&self, layer_index: usize, plan: DropoutPlan) -> Vec<T> {
        let layer = &self.layers[layer_index];
        let LayerSpec::Dropout { rate } = layer.spec else {
            panic!("layer {layer_index} is not a dropout layer");
        };
        let keep = T::lit(1.0 / (1.0 - rate));
        let key = rng::layer_key(plan.master_seed, plan.pass_index, layer_index as u64);
        (0..layer.input.len() as u64)
            .map(|u| if rng::unit_uniform(key, u) < rate { T::zero() } else { keep })
            .collect()
    }

    fn mask_for(&self, i: usize, masks: &Masks<T>) -> Option<Vec<T>> {
        match (self.layers[i].spec, masks) {
            (LayerSpec::Dropout { .. }, Masks::Plan(plan)) => Some(self.dropout_mask(i, *plan)),
            (LayerSpec::Dropout { .. }, Masks::Fixed(v)) => v.get(i).cloned().flatten(),
            _ => None,
        }
    }

    fn run(&self, mut x: Vec<T>, from: usize, to: usize, masks: &Masks<T>) -> Vec<T> {
        for i in from..to {
            let mask = self.mask_for(i, masks);
            x = self.layers[i].forward(&x, mask.as_deref(), false).0;
        }
        x
    }

    /// Deterministic pass: `(p_minutia, p_non_minutia)`.
    pub fn forward(&self, patch: &GrayImage) -> Result<[T; 2]> {
        let x = self.input_from_patch(patch)?;
        self.forward_input(&x, &Masks::Off)
    }

    /// Dropout-active pass for one plan.
    pub fn stochastic_forward(&self, patch: &GrayImage, plan: DropoutPlan) -> Result<[T; 2]> {
        let x = self.input_from_patch(patch)?;
        self.forward_input(&x, &Masks::Plan(plan))
    }

    pub fn forward_input(&self, x: &[T], masks: &Masks<T>) -> Result<[T; 2]> {
        self.check_input(x)?;
        Ok(pair(&self.run(x.to_vec(), 0, self.layers.len(), masks)))
    }

    /// Runs the deterministic layers preceding the first dropout layer.
    pub fn prefix(&self, x: &[T]) -> Result<PrefixActivation<T>> {
        self.check_input(x)?;
        let layer = self
            .layers
            .iter()
            .position(|l| matches!(l.spec, LayerSpec::Dropout { .. }))
            .unwrap_or(self.layers.len());
        Ok(PrefixActivation { layer, values: self.run(x.to_vec(), 0, layer, &Masks::Off) })
    }

    /// Completes a pass from a shared prefix. Bitwise identical to the full pass
    /// with the same masks.
    pub fn tail(&self, prefix: &PrefixActivation<T>, masks: &Masks<T>) -> [T; 2] {
        pair(&self.run(prefix.values.clone(), prefix.layer, self.layers.len(), masks))
    }

    /// Cross-entropy loss of one example and its parameter gradient. Gradients
    /// are only produced for layers at index `trainable_from` and above.
    pub fn loss_and_gradient(
        &self,
        x: &[T],
        label: Label,
        masks: &Masks<T>,
        trainable_from: usize,
    ) -> Result<(T, [T; 2], Gradient<T>)> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut caches = Vec::with_capacity(n);
        let mut act = x.to_vec();
        // Run up to the logits; the softmax is folded into the loss.
        for i in 0..n - 1 {
            let mask = self.mask_for(i, masks);
            let (y, cache) = self.layers[i].forward(&act, mask.as_deref(), i >= trainable_from.min(n));
            caches.push(cache);
            act = y;
        }
        let logits = act;
        let probs = super::layer::softmax(&logits);
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + logits.iter().map(|v| (*v - max).exp()).sum::<T>().ln();
        let loss = lse - logits[label.index()];

        let mut grad = Gradient::zeros_like(self);
        let mut dy: Vec<T> = probs.clone();
        dy[label.index()] = dy[label.index()] - T::one();
        for i in (trainable_from..n - 1).rev() {
            let need_dx = i > trainable_from;
            let (gw, gb) = (&mut grad.weights[i], &mut grad.biases[i]);
            dy = self.layers[i].backward(&caches[i], &dy, gw, gb, need_dx);
            if !need_dx {
                break;
            }
        }
        Ok((loss, pair(&probs), grad))
    }
}

fn pair<T: Scalar>(v: &[T]) -> [T; 2] {
    [v[0], v[1]]
}
