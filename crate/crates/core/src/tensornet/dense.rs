use super::gemm::{gemm, View};
use super::{NetError, Rng, Tensor, Want};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Softmax,
}

impl Activation {
    pub(crate) fn apply(self, z: &mut [f64], width: usize) {
        match self {
            Self::Linear => {}
            Self::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Self::Softmax => {
                for row in z.chunks_mut(width) {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for v in row.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    row.iter_mut().for_each(|v| *v /= sum);
                }
            }
        }
    }

    /// Turns a gradient w.r.t. the activation output into one w.r.t. its
    /// input, given the cached output. ReLU's subgradient at zero is zero.
    pub(crate) fn backprop(self, grad: &mut [f64], output: &[f64], width: usize) {
        match self {
            Self::Linear => {}
            Self::Relu => {
                for (g, &y) in grad.iter_mut().zip(output) {
                    if y <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Self::Softmax => {
                for (g, s) in grad.chunks_mut(width).zip(output.chunks(width)) {
                    let dot: f64 = g.iter().zip(s).map(|(a, b)| a * b).sum();
                    for (gi, &si) in g.iter_mut().zip(s) {
                        *gi = si * (*gi - dot);
                    }
                }
            }
        }
    }
}

/// Fully connected layer, `y = act(x W + b)` with `W` stored `[in, out]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
    cache: Option<(Tensor, Vec<f64>)>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, activation: Activation, init_std: f64, rng: &mut Rng) -> Self {
        Self {
            weight: Tensor::param(&[inputs, outputs], rng.normal_vec(inputs * outputs, init_std)),
            bias: Tensor::param(&[outputs], vec![0.0; outputs]),
            activation,
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NetError> {
        let (i, o) = (self.inputs(), self.outputs());
        if x.shape().len() != 2 || x.shape()[1] != i {
            return Err(NetError::ShapeMismatch {
                expected: vec![x.batch(), i],
                got: x.shape().to_vec(),
            });
        }
        let b = x.batch();
        let mut y = Vec::with_capacity(b * o);
        for _ in 0..b {
            y.extend_from_slice(self.bias.data());
        }
        gemm(
            View::row_major(x.data(), b, i),
            View::row_major(self.weight.data(), i, o),
            1.0,
            &mut y,
        );
        self.activation.apply(&mut y, o);
        self.cache = Some((x.clone(), y.clone()));
        Tensor::from_vec(&[b, o], y)
    }

    pub fn backward(&mut self, grad_out: &Tensor, want: Want) -> Result<Option<Tensor>, NetError> {
        let (x, y) = self.cache.as_ref().ok_or(NetError::NoForwardCache)?;
        let (i, o) = (self.inputs(), self.outputs());
        let b = x.batch();
        grad_out.expect_shape(&[b, o])?;
        let mut gz = grad_out.data().to_vec();
        self.activation.backprop(&mut gz, y, o);
        if want.params {
            gemm(
                View::row_major(x.data(), b, i).t(),
                View::row_major(&gz, b, o),
                1.0,
                self.weight.grad_mut(),
            );
            let gb = self.bias.grad_mut();
            for row in gz.chunks(o) {
                for (g, v) in gb.iter_mut().zip(row) {
                    *g += v;
                }
            }
        }
        if !want.input {
            return Ok(None);
        }
        let mut gx = vec![0.0; b * i];
        gemm(
            View::row_major(&gz, b, o),
            View::row_major(self.weight.data(), i, o).t(),
            0.0,
            &mut gx,
        );
        Ok(Some(Tensor::from_vec(&[b, i], gx)?))
    }

    pub fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("weight", &self.weight), ("bias", &self.bias)]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

/// Lookup table mapping integer labels to dense vectors.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: Tensor,
    cache: Option<Vec<usize>>,
}

impl Embedding {
    pub fn new(vocab: usize, dim: usize, init_std: f64, rng: &mut Rng) -> Self {
        Self {
            table: Tensor::param(&[vocab, dim], rng.normal_vec(vocab * dim, init_std)),
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.table.shape()[1]
    }

    pub fn forward(&mut self, labels: &[usize]) -> Result<Tensor, NetError> {
        let vocab = self.table.shape()[0];
        let dim = self.dim();
        let mut out = Vec::with_capacity(labels.len() * dim);
        for &l in labels {
            if l >= vocab {
                return Err(NetError::LabelOutOfRange { label: l, classes: vocab });
            }
            out.extend_from_slice(&self.table.data()[l * dim..(l + 1) * dim]);
        }
        self.cache = Some(labels.to_vec());
        Tensor::from_vec(&[labels.len(), dim], out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<(), NetError> {
        let labels = self.cache.as_ref().ok_or(NetError::NoForwardCache)?;
        let dim = self.table.shape()[1];
        grad_out.expect_shape(&[labels.len(), dim])?;
        let g = self.table.grad_mut();
        for (b, &l) in labels.iter().enumerate() {
            for (t, v) in g[l * dim..(l + 1) * dim].iter_mut().zip(grad_out.item(b)) {
                *t += v;
            }
        }
        Ok(())
    }
}

/// Elementwise product of two equally shaped inputs.
#[derive(Debug, Clone, Default)]
pub struct ElementwiseMultiply {
    cache: Option<(Tensor, Tensor)>,
}

impl ElementwiseMultiply {
    pub fn forward(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, NetError> {
        b.expect_shape(a.shape())?;
        let out = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
        self.cache = Some((a.clone(), b.clone()));
        Tensor::from_vec(a.shape(), out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<(Tensor, Tensor), NetError> {
        let (a, b) = self.cache.as_ref().ok_or(NetError::NoForwardCache)?;
        grad_out.expect_shape(a.shape())?;
        let ga = grad_out.data().iter().zip(b.data()).map(|(g, y)| g * y).collect();
        let gb = grad_out.data().iter().zip(a.data()).map(|(g, x)| g * x).collect();
        Ok((Tensor::from_vec(a.shape(), ga)?, Tensor::from_vec(a.shape(), gb)?))
    }
}
