use super::{Mode, NetError, Rng, Tensor, Want};

/// Batch normalisation over the feature axis of a `[batch, dim]` input.
///
/// Running statistics follow `running = momentum * running + (1 - momentum) * batch`,
/// with the unbiased batch variance feeding the running variance.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache>,
}

#[derive(Debug, Clone)]
struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    mode: Mode,
}

impl BatchNorm {
    pub const DEFAULT_MOMENTUM: f64 = 0.8;
    pub const DEFAULT_EPS: f64 = 1e-3;

    pub fn new(dim: usize, momentum: f64) -> Self {
        Self {
            gamma: Tensor::param(&[dim], vec![1.0; dim]),
            beta: Tensor::param(&[dim], vec![0.0; dim]),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum,
            eps: Self::DEFAULT_EPS,
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.running_mean.len()
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor, NetError> {
        let d = self.dim();
        if x.shape().len() != 2 || x.shape()[1] != d {
            return Err(NetError::ShapeMismatch {
                expected: vec![x.batch(), d],
                got: x.shape().to_vec(),
            });
        }
        let b = x.batch();
        let (mean, var) = match mode {
            Mode::Train => {
                if b < 2 {
                    return Err(NetError::BatchTooSmall(b));
                }
                let mut mean = vec![0.0; d];
                for row in x.data().chunks(d) {
                    mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
                }
                mean.iter_mut().for_each(|m| *m /= b as f64);
                let mut var = vec![0.0; d];
                for row in x.data().chunks(d) {
                    for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                for j in 0..d {
                    let unbiased = var[j] / (b - 1) as f64;
                    var[j] /= b as f64;
                    self.running_mean[j] = self.momentum * self.running_mean[j] + (1.0 - self.momentum) * mean[j];
                    self.running_var[j] = self.momentum * self.running_var[j] + (1.0 - self.momentum) * unbiased;
                }
                (mean, var)
            }
            Mode::Infer => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = Vec::with_capacity(x.len());
        let mut y = Vec::with_capacity(x.len());
        for row in x.data().chunks(d) {
            for j in 0..d {
                let h = (row[j] - mean[j]) * inv_std[j];
                xhat.push(h);
                y.push(self.gamma.data()[j] * h + self.beta.data()[j]);
            }
        }
        self.cache = Some(BnCache { xhat, inv_std, mode });
        Tensor::from_vec(x.shape(), y)
    }

    pub fn backward(&mut self, grad_out: &Tensor, want: Want) -> Result<Option<Tensor>, NetError> {
        let cache = self.cache.as_ref().ok_or(NetError::NoForwardCache)?;
        let d = self.dim();
        let b = cache.xhat.len() / d;
        grad_out.expect_shape(&[b, d])?;
        let g = grad_out.data();
        let mut sum_g = vec![0.0; d];
        let mut sum_gx = vec![0.0; d];
        for (row, xh) in g.chunks(d).zip(cache.xhat.chunks(d)) {
            for j in 0..d {
                sum_g[j] += row[j];
                sum_gx[j] += row[j] * xh[j];
            }
        }
        if want.params {
            self.gamma.grad_mut().iter_mut().zip(&sum_gx).for_each(|(a, v)| *a += v);
            self.beta.grad_mut().iter_mut().zip(&sum_g).for_each(|(a, v)| *a += v);
        }
        if !want.input {
            return Ok(None);
        }
        let gamma = self.gamma.data();
        let mut gx = Vec::with_capacity(g.len());
        let n = b as f64;
        for (row, xh) in g.chunks(d).zip(cache.xhat.chunks(d)) {
            for j in 0..d {
                let scale = gamma[j] * cache.inv_std[j];
                gx.push(match cache.mode {
                    Mode::Train => scale * (row[j] - sum_g[j] / n - xh[j] * sum_gx[j] / n),
                    Mode::Infer => scale * row[j],
                });
            }
        }
        Ok(Some(Tensor::from_vec(&[b, d], gx)?))
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)` in training,
/// inference is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub rate: f64,
    cache: Option<Option<Vec<f64>>>,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self, NetError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NetError::InvalidSpec(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Self { rate, cache: None })
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor, NetError> {
        if mode == Mode::Infer || self.rate == 0.0 {
            self.cache = Some(None);
            return Ok(x.clone());
        }
        let keep = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.uniform() < self.rate { 0.0 } else { keep })
            .collect();
        let y = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        self.cache = Some(Some(mask));
        Tensor::from_vec(x.shape(), y)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NetError> {
        match self.cache.as_ref().ok_or(NetError::NoForwardCache)? {
            None => Ok(grad_out.clone()),
            Some(mask) => {
                if mask.len() != grad_out.len() {
                    return Err(NetError::ShapeMismatch {
                        expected: vec![mask.len()],
                        got: grad_out.shape().to_vec(),
                    });
                }
                let g = grad_out.data().iter().zip(mask).map(|(v, m)| v * m).collect();
                Tensor::from_vec(grad_out.shape(), g)
            }
        }
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}
