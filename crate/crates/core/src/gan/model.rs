use crate::beatgrid::INPUT_SIZE;
use crate::tensornet::{
    Activation, Adam, Checkpoint, Dense, Dropout, ElementwiseMultiply, Embedding, LayerSpec, Mode, NetError, Rng,
    Sequential, Tensor, Want,
};

pub const NOISE_DIM: usize = 100;
pub const HIDDEN: usize = 256;
pub const FEATURE_DIM: usize = 150;
/// Real classes the generator can be conditioned on (N, S, V, F).
pub const REAL_CLASSES: usize = 4;
/// Class-head width: the real classes plus "generated".
pub const HEAD_CLASSES: usize = 5;
pub const GENERATED: usize = 4;
/// Weight init N(0, 0.01) taken as variance 0.01.
pub const INIT_STD: f64 = 0.1;
pub const DROPOUT: f64 = 0.5;
pub const BN_MOMENTUM: f64 = 0.8;

/// Conditional generator producing rank-1 `M x M` matrices as the outer
/// product of two branch outputs.
#[derive(Debug, Clone)]
pub struct Generator {
    pub embed: Embedding,
    merge: ElementwiseMultiply,
    pub trunk: Sequential,
    pub row_branch: Sequential,
    pub col_branch: Sequential,
    pub adam: Adam,
    cache: Option<(Tensor, Tensor)>,
}

fn branch(size: usize, rng: &mut Rng) -> Result<Sequential, NetError> {
    Sequential::from_specs(
        &[
            LayerSpec::Dense { inputs: HIDDEN, outputs: HIDDEN, activation: Activation::Relu },
            LayerSpec::Dense { inputs: HIDDEN, outputs: size, activation: Activation::Linear },
        ],
        INIT_STD,
        rng,
    )
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Self::with_size(seed, INPUT_SIZE)
    }

    pub fn with_size(seed: u64, size: usize) -> Self {
        let mut rng = Rng::seed(seed);
        let embed = Embedding::new(REAL_CLASSES, NOISE_DIM, INIT_STD, &mut rng);
        let trunk = Sequential::from_specs(
            &[
                LayerSpec::Dense { inputs: NOISE_DIM, outputs: HIDDEN, activation: Activation::Relu },
                LayerSpec::BatchNorm { dim: HIDDEN, momentum: BN_MOMENTUM },
            ],
            INIT_STD,
            &mut rng,
        )
        .expect("static generator trunk");
        let row_branch = branch(size, &mut rng).expect("static generator branch");
        let col_branch = branch(size, &mut rng).expect("static generator branch");
        Self {
            embed,
            merge: ElementwiseMultiply::default(),
            trunk,
            row_branch,
            col_branch,
            adam: Adam::default(),
            cache: None,
        }
    }

    pub fn size(&self) -> usize {
        match self.row_branch.layers.last() {
            Some(crate::tensornet::Layer::Dense(d)) => d.outputs(),
            _ => unreachable!("branches end in a dense layer"),
        }
    }

    /// The two branch vectors, each `[batch, M]`.
    pub fn forward_vectors(
        &mut self,
        noise: &Tensor,
        labels: &[usize],
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Tensor, Tensor), NetError> {
        noise.expect_shape(&[labels.len(), NOISE_DIM])?;
        let e = self.embed.forward(labels)?;
        let h = self.merge.forward(noise, &e)?;
        let h = self.trunk.forward(&h, mode, rng)?;
        let a = self.row_branch.forward(&h, mode, rng)?;
        let b = self.col_branch.forward(&h, mode, rng)?;
        self.cache = Some((a.clone(), b.clone()));
        Ok((a, b))
    }

    /// Generated matrices as `[batch, 1, M, M]`.
    pub fn forward(&mut self, noise: &Tensor, labels: &[usize], mode: Mode, rng: &mut Rng) -> Result<Tensor, NetError> {
        let (a, b) = self.forward_vectors(noise, labels, mode, rng)?;
        let m = self.size();
        let mut out = Vec::with_capacity(labels.len() * m * m);
        for i in 0..labels.len() {
            for &r in a.item(i) {
                out.extend(b.item(i).iter().map(|&c| r * c));
            }
        }
        Tensor::from_vec(&[labels.len(), 1, m, m], out)
    }

    /// Accumulates parameter gradients from a gradient on the generated matrices.
    pub fn backward(&mut self, grad: &Tensor) -> Result<(), NetError> {
        let (a, b) = self.cache.as_ref().ok_or(NetError::NoForwardCache)?;
        let (n, m) = (a.batch(), self.size());
        grad.expect_shape(&[n, 1, m, m])?;
        let mut ga = vec![0.0; n * m];
        let mut gb = vec![0.0; n * m];
        for s in 0..n {
            let g = grad.item(s);
            let (av, bv) = (a.item(s), b.item(s));
            for r in 0..m {
                let row = &g[r * m..(r + 1) * m];
                ga[s * m + r] = row.iter().zip(bv).map(|(x, y)| x * y).sum();
                for (t, &x) in gb[s * m..(s + 1) * m].iter_mut().zip(row) {
                    *t += x * av[r];
                }
            }
        }
        let gh_a = self.row_branch.backward(&Tensor::from_vec(&[n, m], ga)?, Want::all())?;
        let gh_b = self.col_branch.backward(&Tensor::from_vec(&[n, m], gb)?, Want::all())?;
        let mut gh = gh_a.expect("input gradient requested");
        for (x, y) in gh.data_mut().iter_mut().zip(gh_b.expect("input gradient requested").data()) {
            *x += y;
        }
        let gm = self.trunk.backward(&gh, Want::all())?.expect("input gradient requested");
        let (_, ge) = self.merge.backward(&gm)?;
        self.embed.backward(&ge)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.embed.table];
        p.extend(self.trunk.params_mut());
        p.extend(self.row_branch.params_mut());
        p.extend(self.col_branch.params_mut());
        p
    }

    pub fn step(&mut self) -> Result<(), NetError> {
        let mut adam = std::mem::take(&mut self.adam);
        let r = adam.step(&mut self.params_mut());
        self.adam = adam;
        r
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Tensor::zero_grad);
    }

    /// Sum of all parameter values, a cheap change detector.
    pub fn checksum(&mut self) -> f64 {
        self.params_mut().iter().flat_map(|t| t.data()).sum()
    }

    pub fn checkpoint(&self) -> Result<Checkpoint, NetError> {
        let mut ck = Checkpoint::new();
        ck.push("generator.embed", self.embed.table.shape().to_vec(), self.embed.table.data().to_vec())?;
        ck.extend(self.trunk.state("generator.trunk"))?;
        ck.extend(self.row_branch.state("generator.row"))?;
        ck.extend(self.col_branch.state("generator.col"))?;
        ck.extend(self.adam.state("generator.adam"))?;
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, NetError> {
        let (shape, _) = ck
            .get("generator.row.1.weight")
            .ok_or_else(|| NetError::MissingEntry("generator.row.1.weight".into()))?;
        let mut g = Self::with_size(0, shape[1]);
        ck.load_into("generator.embed", &mut g.embed.table)?;
        g.trunk.load_state("generator.trunk", ck)?;
        g.row_branch.load_state("generator.row", ck)?;
        g.col_branch.load_state("generator.col", ck)?;
        let mut adam = Adam::default();
        {
            let params: Vec<&Tensor> = g.params_mut().into_iter().map(|t| &*t).collect();
            adam.load_state("generator.adam", ck, &params)?;
        }
        g.adam = adam;
        Ok(g)
    }
}

/// Discriminator outputs for one batch.
#[derive(Debug, Clone)]
pub struct DiscOutput {
    /// Softmax class probabilities `[batch, classes]`.
    pub probs: Tensor,
    /// Validity scores `[batch, 1]`.
    pub validity: Tensor,
    /// Penultimate features `[batch, 150]`, taken before dropout.
    pub features: Tensor,
}

/// Convolutional discriminator with a softmax class head and a linear
/// validity head sharing a 150-unit feature layer.
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub body: Sequential,
    feature_dropout: Dropout,
    pub class_head: Dense,
    pub validity_head: Dense,
    pub adam: Adam,
}

impl Discriminator {
    pub fn new(seed: u64) -> Self {
        Self::with_classes(seed, HEAD_CLASSES)
    }

    pub fn with_classes(seed: u64, classes: usize) -> Self {
        use Activation::*;
        let mut rng = Rng::seed(seed);
        let body = Sequential::from_specs(
            &[
                LayerSpec::Conv2d { in_ch: 1, out_ch: 6, kernel: 8, activation: Relu },
                LayerSpec::MaxPool(2),
                LayerSpec::Conv2d { in_ch: 6, out_ch: 16, kernel: 10, activation: Relu },
                LayerSpec::AvgPool(3),
                LayerSpec::Conv2d { in_ch: 16, out_ch: 120, kernel: 5, activation: Relu },
                LayerSpec::Flatten,
                LayerSpec::Dropout(DROPOUT),
                LayerSpec::Dense { inputs: 120 * 4 * 4, outputs: FEATURE_DIM, activation: Relu },
            ],
            INIT_STD,
            &mut rng,
        )
        .expect("static discriminator body");
        Self {
            body,
            feature_dropout: Dropout::new(DROPOUT).expect("static rate"),
            class_head: Dense::new(FEATURE_DIM, classes, Softmax, INIT_STD, &mut rng),
            validity_head: Dense::new(FEATURE_DIM, 1, Linear, INIT_STD, &mut rng),
            adam: Adam::default(),
        }
    }

    pub fn classes(&self) -> usize {
        self.class_head.outputs()
    }

    /// `x` is `[batch, 1, 73, 73]`.
    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<DiscOutput, NetError> {
        let features = self.body.forward(x, mode, rng)?;
        let dropped = self.feature_dropout.forward(&features, mode, rng)?;
        Ok(DiscOutput {
            probs: self.class_head.forward(&dropped)?,
            validity: self.validity_head.forward(&dropped)?,
            features,
        })
    }

    /// Backpropagates both head gradients; returns the input gradient when
    /// `want.input` is set. With `want.params == false` no discriminator
    /// gradient is touched.
    pub fn backward(&mut self, g_probs: &Tensor, g_validity: &Tensor, want: Want) -> Result<Option<Tensor>, NetError> {
        let inner = Want { params: want.params, input: true };
        let mut gf = self.class_head.backward(g_probs, inner)?.expect("input gradient requested");
        let gv = self.validity_head.backward(g_validity, inner)?.expect("input gradient requested");
        gf.data_mut().iter_mut().zip(gv.data()).for_each(|(a, b)| *a += b);
        let gf = self.feature_dropout.backward(&gf)?;
        self.body.backward(&gf, want)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.body.params_mut();
        p.extend([&mut self.class_head.weight, &mut self.class_head.bias]);
        p.extend([&mut self.validity_head.weight, &mut self.validity_head.bias]);
        p
    }

    pub fn step(&mut self) -> Result<(), NetError> {
        let mut adam = std::mem::take(&mut self.adam);
        let r = adam.step(&mut self.params_mut());
        self.adam = adam;
        r
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Tensor::zero_grad);
    }

    /// Sum of all parameter values, a cheap change detector.
    pub fn checksum(&mut self) -> f64 {
        self.params_mut().iter().flat_map(|t| t.data()).sum()
    }

    pub fn checkpoint(&self) -> Result<Checkpoint, NetError> {
        let mut ck = Checkpoint::new();
        ck.extend(self.body.state("discriminator.body"))?;
        for (name, d) in [("class", &self.class_head), ("validity", &self.validity_head)] {
            ck.push(format!("discriminator.{name}.weight"), d.weight.shape().to_vec(), d.weight.data().to_vec())?;
            ck.push(format!("discriminator.{name}.bias"), d.bias.shape().to_vec(), d.bias.data().to_vec())?;
        }
        ck.extend(self.adam.state("discriminator.adam"))?;
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, NetError> {
        let (shape, _) = ck
            .get("discriminator.class.bias")
            .ok_or_else(|| NetError::MissingEntry("discriminator.class.bias".into()))?;
        let mut d = Self::with_classes(0, shape[0]);
        d.body.load_state("discriminator.body", ck)?;
        ck.load_into("discriminator.class.weight", &mut d.class_head.weight)?;
        ck.load_into("discriminator.class.bias", &mut d.class_head.bias)?;
        ck.load_into("discriminator.validity.weight", &mut d.validity_head.weight)?;
        ck.load_into("discriminator.validity.bias", &mut d.validity_head.bias)?;
        let mut adam = Adam::default();
        {
            let params: Vec<&Tensor> = d.params_mut().into_iter().map(|t| &*t).collect();
            adam.load_state("discriminator.adam", ck, &params)?;
        }
        d.adam = adam;
        Ok(d)
    }
}
