//! Spatial layers on `[batch, channels, height, width]` tensors.
//!
//! Convolutions are valid (no padding) with stride 1. Pools are
//! non-overlapping with stride equal to the kernel and drop any remainder.

use super::dense::Activation;
use super::gemm::{gemm, View};
use super::{NetError, Rng, Tensor, Want};

fn dims4(x: &Tensor) -> Result<(usize, usize, usize, usize), NetError> {
    match *x.shape() {
        [b, c, h, w] => Ok((b, c, h, w)),
        _ => Err(NetError::ShapeMismatch {
            expected: vec![0, 0, 0, 0],
            got: x.shape().to_vec(),
        }),
    }
}

/// Unfolds one `[c, h, w]` image into a `[c*k*k, ho*wo]` patch matrix.
fn im2col(img: &[f64], c: usize, h: usize, w: usize, k: usize, cols: &mut [f64]) {
    let (ho, wo) = (h - k + 1, w - k + 1);
    let mut row = 0;
    for ch in 0..c {
        let plane = &img[ch * h * w..(ch + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let dst = &mut cols[row * ho * wo..(row + 1) * ho * wo];
                for oi in 0..ho {
                    let src = &plane[(oi + ki) * w + kj..(oi + ki) * w + kj + wo];
                    dst[oi * wo..(oi + 1) * wo].copy_from_slice(src);
                }
                row += 1;
            }
        }
    }
}

/// Adjoint of `im2col`: scatters patch gradients back onto the image.
fn col2im(cols: &[f64], c: usize, h: usize, w: usize, k: usize, img: &mut [f64]) {
    let (ho, wo) = (h - k + 1, w - k + 1);
    let mut row = 0;
    for ch in 0..c {
        let plane = &mut img[ch * h * w..(ch + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let src = &cols[row * ho * wo..(row + 1) * ho * wo];
                for oi in 0..ho {
                    let dst = &mut plane[(oi + ki) * w + kj..(oi + ki) * w + kj + wo];
                    for (d, s) in dst.iter_mut().zip(&src[oi * wo..(oi + 1) * wo]) {
                        *d += s;
                    }
                }
                row += 1;
            }
        }
    }
}

/// Weight layout `[out_ch, in_ch, k, k]`, bias `[out_ch]`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
    kernel: usize,
    // Only the input and the post-activation output are kept; patch matrices
    // are rebuilt during backward to bound memory.
    cache: Option<(Tensor, Vec<f64>)>,
}

impl Conv2d {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, activation: Activation, init_std: f64, rng: &mut Rng) -> Self {
        let n = out_ch * in_ch * kernel * kernel;
        Self {
            weight: Tensor::param(&[out_ch, in_ch, kernel, kernel], rng.normal_vec(n, init_std)),
            bias: Tensor::param(&[out_ch], vec![0.0; out_ch]),
            activation,
            kernel,
            cache: None,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NetError> {
        match *input {
            [b, c, h, w] if c == self.in_channels() && h >= self.kernel && w >= self.kernel => {
                Ok(vec![b, self.out_channels(), h - self.kernel + 1, w - self.kernel + 1])
            }
            _ => Err(NetError::ShapeMismatch {
                expected: vec![input.first().copied().unwrap_or(0), self.in_channels(), self.kernel, self.kernel],
                got: input.to_vec(),
            }),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NetError> {
        let out_shape = self.output_shape(x.shape())?;
        let (b, c, h, w) = dims4(x)?;
        let (o, k) = (self.out_channels(), self.kernel);
        let (ho, wo) = (out_shape[2], out_shape[3]);
        let patch = c * k * k;
        let mut cols = vec![0.0; patch * ho * wo];
        let mut y = vec![0.0; b * o * ho * wo];
        for (bi, out) in y.chunks_mut(o * ho * wo).enumerate() {
            im2col(x.item(bi), c, h, w, k, &mut cols);
            for (oc, plane) in out.chunks_mut(ho * wo).enumerate() {
                plane.fill(self.bias.data()[oc]);
            }
            gemm(
                View::row_major(self.weight.data(), o, patch),
                View::row_major(&cols, patch, ho * wo),
                1.0,
                out,
            );
        }
        self.activation.apply(&mut y, ho * wo);
        self.cache = Some((x.clone(), y.clone()));
        Tensor::from_vec(&out_shape, y)
    }

    pub fn backward(&mut self, grad_out: &Tensor, want: Want) -> Result<Option<Tensor>, NetError> {
        let (x, y) = self.cache.as_ref().ok_or(NetError::NoForwardCache)?;
        let out_shape = self.output_shape(x.shape())?;
        grad_out.expect_shape(&out_shape)?;
        let (b, c, h, w) = dims4(x)?;
        let (o, k) = (self.out_channels(), self.kernel);
        let hw = out_shape[2] * out_shape[3];
        let patch = c * k * k;
        let mut gz = grad_out.data().to_vec();
        self.activation.backprop(&mut gz, y, hw);

        let mut cols = vec![0.0; patch * hw];
        let mut gx = if want.input { vec![0.0; x.len()] } else { Vec::new() };
        for bi in 0..b {
            let g = &gz[bi * o * hw..(bi + 1) * o * hw];
            if want.params {
                im2col(x.item(bi), c, h, w, k, &mut cols);
                gemm(
                    View::row_major(g, o, hw),
                    View::row_major(&cols, patch, hw).t(),
                    1.0,
                    self.weight.grad_mut(),
                );
                let gb = self.bias.grad_mut();
                for (oc, plane) in g.chunks(hw).enumerate() {
                    gb[oc] += plane.iter().sum::<f64>();
                }
            }
            if want.input {
                gemm(
                    View::row_major(self.weight.data(), o, patch).t(),
                    View::row_major(g, o, hw),
                    0.0,
                    &mut cols,
                );
                col2im(&cols, c, h, w, k, &mut gx[bi * c * h * w..(bi + 1) * c * h * w]);
            }
        }
        if !want.input {
            return Ok(None);
        }
        Ok(Some(Tensor::from_vec(x.shape(), gx)?))
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Average,
}

#[derive(Debug, Clone)]
pub struct Pool {
    pub kind: PoolKind,
    pub size: usize,
    // Input shape plus, for max pooling, the flat input index of each output.
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl Pool {
    pub fn new(kind: PoolKind, size: usize) -> Self {
        Self { kind, size, cache: None }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NetError> {
        match *input {
            [b, c, h, w] if h >= self.size && w >= self.size => Ok(vec![b, c, h / self.size, w / self.size]),
            _ => Err(NetError::ShapeMismatch {
                expected: vec![input.first().copied().unwrap_or(0), 0, self.size, self.size],
                got: input.to_vec(),
            }),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NetError> {
        let out_shape = self.output_shape(x.shape())?;
        let (b, c, h, w) = dims4(x)?;
        let (ho, wo, k) = (out_shape[2], out_shape[3], self.size);
        let data = x.data();
        let mut y = Vec::with_capacity(b * c * ho * wo);
        let mut argmax = Vec::new();
        for plane in 0..b * c {
            let base = plane * h * w;
            for oi in 0..ho {
                for oj in 0..wo {
                    match self.kind {
                        PoolKind::Max => {
                            let mut best = base + oi * k * w + oj * k;
                            for di in 0..k {
                                for dj in 0..k {
                                    let idx = base + (oi * k + di) * w + oj * k + dj;
                                    // strict comparison keeps the first maximum in row-major order
                                    if data[idx] > data[best] {
                                        best = idx;
                                    }
                                }
                            }
                            argmax.push(best);
                            y.push(data[best]);
                        }
                        PoolKind::Average => {
                            let mut s = 0.0;
                            for di in 0..k {
                                let row = base + (oi * k + di) * w + oj * k;
                                s += data[row..row + k].iter().sum::<f64>();
                            }
                            y.push(s / (k * k) as f64);
                        }
                    }
                }
            }
        }
        self.cache = Some((x.shape().to_vec(), argmax));
        Tensor::from_vec(&out_shape, y)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NetError> {
        let (in_shape, argmax) = self.cache.as_ref().ok_or(NetError::NoForwardCache)?;
        let out_shape = self.output_shape(in_shape)?;
        grad_out.expect_shape(&out_shape)?;
        let (h, w) = (in_shape[2], in_shape[3]);
        let (ho, wo, k) = (out_shape[2], out_shape[3], self.size);
        let mut gx = vec![0.0; in_shape.iter().product()];
        let g = grad_out.data();
        match self.kind {
            PoolKind::Max => {
                for (&idx, &v) in argmax.iter().zip(g) {
                    gx[idx] += v;
                }
            }
            PoolKind::Average => {
                let scale = 1.0 / (k * k) as f64;
                for plane in 0..in_shape[0] * in_shape[1] {
                    for oi in 0..ho {
                        for oj in 0..wo {
                            let v = g[(plane * ho + oi) * wo + oj] * scale;
                            for di in 0..k {
                                let row = plane * h * w + (oi * k + di) * w + oj * k;
                                gx[row..row + k].iter_mut().for_each(|t| *t += v);
                            }
                        }
                    }
                }
            }
        }
        Tensor::from_vec(in_shape, gx)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

/// Collapses every non-batch axis.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    cache: Option<Vec<usize>>,
}

impl Flatten {
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor, NetError> {
        self.cache = Some(x.shape().to_vec());
        x.clone().reshape(&[x.batch(), x.item_len()])
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NetError> {
        let shape = self.cache.as_ref().ok_or(NetError::NoForwardCache)?;
        grad_out.clone().reshape(shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(x: &[f64], c: usize, h: usize, w: usize, wt: &[f64], o: usize, k: usize) -> Vec<f64> {
        let (ho, wo) = (h - k + 1, w - k + 1);
        let mut y = vec![0.0; o * ho * wo];
        for oc in 0..o {
            for i in 0..ho {
                for j in 0..wo {
                    let mut s = 0.0;
                    for ic in 0..c {
                        for a in 0..k {
                            for b in 0..k {
                                s += wt[((oc * c + ic) * k + a) * k + b] * x[(ic * h + i + a) * w + j + b];
                            }
                        }
                    }
                    y[(oc * ho + i) * wo + j] = s;
                }
            }
        }
        y
    }

    #[test]
    fn zero_kernels_give_zero_output() {
        let mut rng = Rng::seed(0);
        let mut conv = Conv2d::new(2, 3, 3, Activation::Linear, 0.0, &mut rng);
        let x = Tensor::from_vec(&[1, 2, 6, 5], rng.normal_vec(60, 1.0)).unwrap();
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 3, 4, 3]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut rng = Rng::seed(1);
        let mut conv = Conv2d::new(3, 4, 3, Activation::Linear, 1.0, &mut rng);
        let x = Tensor::from_vec(&[2, 3, 7, 6], rng.normal_vec(2 * 3 * 42, 1.0)).unwrap();
        let y = conv.forward(&x).unwrap();
        for b in 0..2 {
            let want = naive_conv(x.item(b), 3, 7, 6, conv.weight.data(), 4, 3);
            for (a, e) in y.item(b).iter().zip(&want) {
                assert!((a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn max_pool_ties_take_first() {
        let mut p = Pool::new(PoolKind::Max, 2);
        let x = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        p.forward(&x).unwrap();
        let g = p.backward(&Tensor::from_vec(&[1, 1, 1, 1], vec![5.0]).unwrap()).unwrap();
        assert_eq!(g.data(), &[5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn pools_floor_the_remainder() {
        let mut p = Pool::new(PoolKind::Average, 3);
        let x = Tensor::from_vec(&[1, 1, 7, 7], (0..49).map(f64::from).collect()).unwrap();
        let y = p.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        // mean of rows 0..3, cols 0..3
        assert_eq!(y.data()[0], (0 + 1 + 2 + 7 + 8 + 9 + 14 + 15 + 16) as f64 / 9.0);
    }
}
