use super::conv::{Conv2d, Flatten, Pool, PoolKind};
use super::dense::{Activation, Dense};
use super::norm::{BatchNorm, Dropout};
use super::{Mode, NetError, Rng, Tensor, Want};

/// Declarative description of one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize, activation: Activation },
    Embedding { vocab: usize, dim: usize },
    ElementwiseMultiply,
    BatchNorm { dim: usize, momentum: f64 },
    Conv2d { in_ch: usize, out_ch: usize, kernel: usize, activation: Activation },
    MaxPool(usize),
    AvgPool(usize),
    Dropout(f64),
    Flatten,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |msg: String| Err(NetError::InvalidSpec(msg));
        match *self {
            Self::Conv2d { kernel: 0, .. } => bad("convolution kernel must be at least 1".into()),
            Self::MaxPool(0) | Self::AvgPool(0) => bad("pool size must be at least 1".into()),
            Self::Dropout(r) if !(0.0..1.0).contains(&r) => bad(format!("dropout rate {r} outside [0, 1)")),
            _ => Ok(()),
        }
    }

    /// Builds a layer usable inside a [`Sequential`]. Embedding and
    /// elementwise multiply take two inputs and are built directly instead.
    pub fn build(&self, init_std: f64, rng: &mut Rng) -> Result<Layer, NetError> {
        self.validate()?;
        Ok(match *self {
            Self::Dense { inputs, outputs, activation } => {
                Layer::Dense(Dense::new(inputs, outputs, activation, init_std, rng))
            }
            Self::BatchNorm { dim, momentum } => Layer::BatchNorm(BatchNorm::new(dim, momentum)),
            Self::Conv2d { in_ch, out_ch, kernel, activation } => {
                Layer::Conv2d(Conv2d::new(in_ch, out_ch, kernel, activation, init_std, rng))
            }
            Self::MaxPool(k) => Layer::Pool(Pool::new(PoolKind::Max, k)),
            Self::AvgPool(k) => Layer::Pool(Pool::new(PoolKind::Average, k)),
            Self::Dropout(r) => Layer::Dropout(Dropout::new(r)?),
            Self::Flatten => Layer::Flatten(Flatten::default()),
            Self::Embedding { .. } | Self::ElementwiseMultiply => {
                return Err(NetError::InvalidSpec(format!("{self:?} is not a single-input layer")))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    BatchNorm(BatchNorm),
    Conv2d(Conv2d),
    Pool(Pool),
    Dropout(Dropout),
    Flatten(Flatten),
}

impl Layer {
    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor, NetError> {
        match self {
            Self::Dense(l) => l.forward(x),
            Self::BatchNorm(l) => l.forward(x, mode),
            Self::Conv2d(l) => l.forward(x),
            Self::Pool(l) => l.forward(x),
            Self::Dropout(l) => l.forward(x, mode, rng),
            Self::Flatten(l) => l.forward(x),
        }
    }

    /// Returns the input gradient when `want.input` is set.
    pub fn backward(&mut self, g: &Tensor, want: Want) -> Result<Option<Tensor>, NetError> {
        match self {
            Self::Dense(l) => l.backward(g, want),
            Self::BatchNorm(l) => l.backward(g, want),
            Self::Conv2d(l) => l.backward(g, want),
            Self::Pool(l) => l.backward(g).map(Some),
            Self::Dropout(l) => l.backward(g).map(Some),
            Self::Flatten(l) => l.backward(g).map(Some),
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NetError> {
        let mismatch = |expected: Vec<usize>| NetError::ShapeMismatch {
            expected,
            got: input.to_vec(),
        };
        match self {
            Self::Dense(l) => match *input {
                [b, i] if i == l.inputs() => Ok(vec![b, l.outputs()]),
                _ => Err(mismatch(vec![input.first().copied().unwrap_or(0), l.inputs()])),
            },
            Self::BatchNorm(l) => match *input {
                [_, i] if i == l.dim() => Ok(input.to_vec()),
                _ => Err(mismatch(vec![input.first().copied().unwrap_or(0), l.dim()])),
            },
            Self::Conv2d(l) => l.output_shape(input),
            Self::Pool(l) => l.output_shape(input),
            Self::Dropout(_) => Ok(input.to_vec()),
            Self::Flatten(_) => match input.split_first() {
                Some((&b, rest)) => Ok(vec![b, rest.iter().product()]),
                None => Err(mismatch(vec![0, 0])),
            },
        }
    }

    /// Named trainable parameters.
    pub fn params(&self) -> Vec<(&'static str, &Tensor)> {
        match self {
            Self::Dense(l) => vec![("weight", &l.weight), ("bias", &l.bias)],
            Self::Conv2d(l) => vec![("weight", &l.weight), ("bias", &l.bias)],
            Self::BatchNorm(l) => vec![("gamma", &l.gamma), ("beta", &l.beta)],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Self::Dense(l) => vec![&mut l.weight, &mut l.bias],
            Self::Conv2d(l) => vec![&mut l.weight, &mut l.bias],
            Self::BatchNorm(l) => vec![&mut l.gamma, &mut l.beta],
            _ => Vec::new(),
        }
    }

    pub fn clear_cache(&mut self) {
        match self {
            Self::Dense(l) => l.clear_cache(),
            Self::BatchNorm(l) => l.clear_cache(),
            Self::Conv2d(l) => l.clear_cache(),
            Self::Pool(l) => l.clear_cache(),
            Self::Dropout(l) => l.clear_cache(),
            Self::Flatten(_) => {}
        }
    }
}

/// A chain of single-input layers.
#[derive(Debug, Clone, Default)]
pub struct Sequential {
    pub layers: Vec<Layer>,
}

impl Sequential {
    pub fn from_specs(specs: &[LayerSpec], init_std: f64, rng: &mut Rng) -> Result<Self, NetError> {
        let layers = specs.iter().map(|s| s.build(init_std, rng)).collect::<Result<_, _>>()?;
        Ok(Self { layers })
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor, NetError> {
        let mut layers = self.layers.iter_mut();
        let Some(first) = layers.next() else {
            return Ok(x.clone());
        };
        let mut h = first.forward(x, mode, rng)?;
        for layer in layers {
            h = layer.forward(&h, mode, rng)?;
        }
        Ok(h)
    }

    /// Backpropagates `g`; parameter gradients accumulate when `want.params`.
    pub fn backward(&mut self, g: &Tensor, want: Want) -> Result<Option<Tensor>, NetError> {
        let mut grad = g.clone();
        let n = self.layers.len();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            let need_input = want.input || i > 0;
            match layer.backward(&grad, Want { params: want.params, input: need_input })? {
                Some(next) => grad = next,
                None => {
                    debug_assert!(i == 0 && n > 0);
                    return Ok(None);
                }
            }
        }
        Ok(want.input.then_some(grad))
    }

    /// Shapes after each layer, computed without running data through.
    pub fn shape_trace(&self, input: &[usize]) -> Result<Vec<Vec<usize>>, NetError> {
        let mut shape = input.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shape = layer.output_shape(&shape)?;
            out.push(shape.clone());
        }
        Ok(out)
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NetError> {
        Ok(self.shape_trace(input)?.pop().unwrap_or_else(|| input.to_vec()))
    }

    /// Trainable parameters named `"<layer index>.<role>"`.
    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.params().into_iter().map(move |(n, t)| (format!("{i}.{n}"), t)))
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| l.params()).map(|(_, t)| t.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Tensor::zero_grad);
    }

    pub fn clear_cache(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }

    /// Parameters and batch-norm running statistics as named flat arrays.
    pub fn state(&self, prefix: &str) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for (name, t) in layer.params() {
                out.push((format!("{prefix}.{i}.{name}"), t.shape().to_vec(), t.data().to_vec()));
            }
            if let Layer::BatchNorm(bn) = layer {
                out.push((format!("{prefix}.{i}.running_mean"), vec![bn.dim()], bn.running_mean.clone()));
                out.push((format!("{prefix}.{i}.running_var"), vec![bn.dim()], bn.running_var.clone()));
            }
        }
        out
    }

    pub fn load_state(&mut self, prefix: &str, ck: &super::Checkpoint) -> Result<(), NetError> {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let names: Vec<&'static str> = layer.params().into_iter().map(|(n, _)| n).collect();
            for (name, t) in names.into_iter().zip(layer.params_mut()) {
                ck.load_into(&format!("{prefix}.{i}.{name}"), t)?;
            }
            if let Layer::BatchNorm(bn) = layer {
                bn.running_mean = ck.array(&format!("{prefix}.{i}.running_mean"), &[bn.dim()])?.to_vec();
                bn.running_var = ck.array(&format!("{prefix}.{i}.running_var"), &[bn.dim()])?.to_vec();
            }
        }
        Ok(())
    }
}
