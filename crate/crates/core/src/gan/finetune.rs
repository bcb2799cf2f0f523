use super::model::Discriminator;
use super::{argmax, head_loss, GanError, MatrixSource};
use crate::tensornet::{Adam, Mode, Rng, Want};

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub batch: usize,
    pub target_accuracy: f64,
    /// Window length of the plateau rule, in epochs.
    pub plateau_epochs: usize,
    /// The plateau rule fires when the window's accuracy range is below this.
    pub plateau_delta: f64,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            batch: 128,
            target_accuracy: 0.99,
            plateau_epochs: 10,
            plateau_delta: 0.01,
            max_epochs: 500,
            learning_rate: 2e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Accuracy,
    Plateau,
    EpochCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneReport {
    /// Running training accuracy of each epoch.
    pub accuracies: Vec<f64>,
    pub stop: StopReason,
}

impl FinetuneReport {
    pub fn epochs(&self) -> usize {
        self.accuracies.len()
    }
}

fn stop_reason(acc: &[f64], config: &FinetuneConfig) -> Option<StopReason> {
    let last = *acc.last()?;
    if last >= config.target_accuracy {
        return Some(StopReason::Accuracy);
    }
    if config.plateau_epochs > 0 && acc.len() >= config.plateau_epochs {
        let window = &acc[acc.len() - config.plateau_epochs..];
        let hi = window.iter().copied().fold(f64::MIN, f64::max);
        let lo = window.iter().copied().fold(f64::MAX, f64::min);
        if hi - lo < config.plateau_delta {
            return Some(StopReason::Plateau);
        }
    }
    (acc.len() >= config.max_epochs).then_some(StopReason::EpochCap)
}

/// Supervised training of both heads: every sample counts as real
/// (validity 1) with its own class label. Epoch accuracy is the class-head
/// accuracy accumulated over the epoch's training batches.
pub fn finetune(d: &mut Discriminator, data: &dyn MatrixSource, config: &FinetuneConfig) -> Result<FinetuneReport, GanError> {
    if data.is_empty() {
        return Err(GanError::EmptyDataset);
    }
    let classes = d.classes();
    for i in 0..data.len() {
        if data.label(i) >= classes {
            return Err(GanError::BadLabel {
                index: i,
                label: data.label(i),
                classes,
            });
        }
    }
    d.adam = Adam::new(config.learning_rate);
    let mut rng = Rng::seed(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut accuracies = Vec::new();
    loop {
        rng.shuffle(&mut order);
        let mut correct = 0usize;
        for idx in order.chunks(config.batch.max(1)) {
            // batch statistics are not used by this network, so a final
            // batch of one sample is fine
            let labels: Vec<usize> = idx.iter().map(|&i| data.label(i)).collect();
            let out = d.forward(&data.batch(idx), Mode::Train, &mut rng)?;
            correct += (0..labels.len())
                .filter(|&k| argmax(out.probs.item(k)) == labels[k])
                .count();
            let hl = head_loss(&out, 1.0, &labels)?;
            d.backward(&hl.grad_probs, &hl.grad_validity, Want::params())?;
            d.step()?;
        }
        accuracies.push(correct as f64 / data.len() as f64);
        log::debug!("fine-tune epoch {}: accuracy {:.4}", accuracies.len(), accuracies.last().unwrap());
        if let Some(stop) = stop_reason(&accuracies, config) {
            return Ok(FinetuneReport { accuracies, stop });
        }
    }
}
