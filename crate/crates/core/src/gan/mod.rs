//! Auxiliary-classifier GAN over coupling matrices: model construction,
//! adversarial losses, the training loop, sampling, fine-tuning and
//! classification.

mod check;
mod finetune;
mod model;
mod train;

pub use check::{spread_weights, DiscriminatorObjective, GeneratorObjective};
pub use finetune::{finetune, FinetuneConfig, FinetuneReport, StopReason};
pub use model::{
    DiscOutput, Discriminator, Generator, FEATURE_DIM, GENERATED, HEAD_CLASSES, NOISE_DIM, REAL_CLASSES,
};
pub use train::{generate, network_seeds, train_gan, train_gan_from, write_telemetry_csv, GanRun, GanTrainConfig, TelemetryRow};

use crate::beatgrid::{CouplingMatrix, INPUT_SIZE};
use crate::tensornet::losses::{cross_entropy, mse};
use crate::tensornet::{Mode, NetError, Rng, Tensor};
use crate::wfdb::AamiClass;

#[derive(Debug, thiserror::Error)]
pub enum GanError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("training data has no {0} samples")]
    MissingClass(AamiClass),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sample {index} has label {label}, outside the {classes}-way head")]
    BadLabel { index: usize, label: usize, classes: usize },
    #[error("frechet distance: {0}")]
    Frechet(String),
}

/// Indexed collection of labelled `M x M` matrices. Labels are class-head
/// indices (N, S, V, F = 0..4).
pub trait MatrixSource {
    fn len(&self) -> usize;
    fn label(&self, i: usize) -> usize;
    /// Writes matrix `i` row-major into `out` (length `M * M`).
    fn write_matrix(&self, i: usize, out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stacks the selected matrices into a `[n, 1, M, M]` batch.
    fn batch(&self, indices: &[usize]) -> Tensor {
        let mm = INPUT_SIZE * INPUT_SIZE;
        let mut data = vec![0.0; indices.len() * mm];
        for (&i, out) in indices.iter().zip(data.chunks_mut(mm)) {
            self.write_matrix(i, out);
        }
        Tensor::from_vec(&[indices.len(), 1, INPUT_SIZE, INPUT_SIZE], data).expect("batch shape")
    }
}

/// In-memory matrix collection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatrixSet {
    values: Vec<f64>,
    labels: Vec<usize>,
}

impl MatrixSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, values: &[f64], label: usize) {
        assert_eq!(values.len(), INPUT_SIZE * INPUT_SIZE, "matrix must be M x M");
        self.values.extend_from_slice(values);
        self.labels.push(label);
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn matrix(&self, i: usize) -> &[f64] {
        let mm = INPUT_SIZE * INPUT_SIZE;
        &self.values[i * mm..(i + 1) * mm]
    }
}

impl MatrixSource for MatrixSet {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    fn write_matrix(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.matrix(i));
    }
}

impl<T: MatrixSource + ?Sized> MatrixSource for &T {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn label(&self, i: usize) -> usize {
        (**self).label(i)
    }

    fn write_matrix(&self, i: usize, out: &mut [f64]) {
        (**self).write_matrix(i, out)
    }
}

/// Loss value and gradients for both discriminator heads.
#[derive(Debug, Clone)]
pub struct HeadLoss {
    pub loss: f64,
    pub grad_probs: Tensor,
    pub grad_validity: Tensor,
}

/// `MSE(validity, target) + CE(probs, labels)`.
pub fn head_loss(out: &DiscOutput, validity_target: f64, labels: &[usize]) -> Result<HeadLoss, NetError> {
    let (lv, gv) = mse(&out.validity, &vec![validity_target; out.validity.len()])?;
    let (lc, gc) = cross_entropy(&out.probs, labels)?;
    Ok(HeadLoss {
        loss: lv + lc,
        grad_probs: gc,
        grad_validity: gv,
    })
}

/// Discriminator objective: real samples toward validity 1 and their class,
/// fakes toward validity 0 and the "generated" class.
pub fn d_loss_from_outputs(real: &DiscOutput, real_labels: &[usize], fake: &DiscOutput) -> Result<f64, NetError> {
    let fake_labels = vec![GENERATED; fake.probs.batch()];
    Ok(head_loss(real, 1.0, real_labels)?.loss + head_loss(fake, 0.0, &fake_labels)?.loss)
}

/// Generator objective: fakes toward validity 1 and their conditioned class.
pub fn g_loss_from_outputs(fake: &DiscOutput, labels: &[usize]) -> Result<f64, NetError> {
    Ok(head_loss(fake, 1.0, labels)?.loss)
}

pub fn d_loss(
    d: &mut Discriminator,
    real: &Tensor,
    real_labels: &[usize],
    fake: &Tensor,
    mode: Mode,
    rng: &mut Rng,
) -> Result<f64, NetError> {
    let r = d.forward(real, mode, rng)?;
    let f = d.forward(fake, mode, rng)?;
    d_loss_from_outputs(&r, real_labels, &f)
}

pub fn g_loss(
    g: &mut Generator,
    d: &mut Discriminator,
    noise: &Tensor,
    labels: &[usize],
    mode: Mode,
    rng: &mut Rng,
) -> Result<f64, NetError> {
    let x = g.forward(noise, labels, mode, rng)?;
    g_loss_from_outputs(&d.forward(&x, mode, rng)?, labels)
}

/// Classifier decision for one beat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prediction {
    Class(AamiClass),
    Generated,
}

impl Prediction {
    pub fn from_head_index(i: usize) -> Self {
        match i {
            0..=3 => Self::Class(AamiClass::TRAINABLE[i]),
            _ => Self::Generated,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Class(c) => c.symbol(),
            Self::Generated => 'G',
        }
    }
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Inference-mode predictions and 150-dim features for a batch `[n, 1, M, M]`.
pub fn classify_tensor(d: &mut Discriminator, x: &Tensor) -> Result<Vec<(Prediction, Vec<f64>)>, NetError> {
    let out = d.forward(x, Mode::Infer, &mut Rng::seed(0))?;
    Ok((0..x.batch())
        .map(|i| (Prediction::from_head_index(argmax(out.probs.item(i))), out.features.item(i).to_vec()))
        .collect())
}

pub fn classify(d: &mut Discriminator, cm: &CouplingMatrix) -> Result<(Prediction, Vec<f64>), NetError> {
    let x = Tensor::from_vec(&[1, 1, cm.size, cm.size], cm.values.clone())?;
    Ok(classify_tensor(d, &x)?.remove(0))
}

/// Classifies every matrix of `source` in chunks.
pub fn classify_source(
    d: &mut Discriminator,
    source: &dyn MatrixSource,
    chunk: usize,
) -> Result<Vec<(Prediction, Vec<f64>)>, NetError> {
    let mut out = Vec::with_capacity(source.len());
    let idx: Vec<usize> = (0..source.len()).collect();
    for part in idx.chunks(chunk.max(1)) {
        out.extend(classify_tensor(d, &source.batch(part))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
