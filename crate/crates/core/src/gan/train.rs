use std::io::Write;

use super::model::{Discriminator, Generator, GENERATED, NOISE_DIM, REAL_CLASSES};
use super::{argmax, head_loss, GanError, MatrixSource};
use crate::beatgrid::CouplingMatrix;
use crate::evalkit::frechet_distance;
use crate::tensornet::losses::cross_entropy;
use crate::tensornet::{Adam, Mode, Rng, Tensor, Want};
use crate::wfdb::AamiClass;

#[derive(Debug, Clone, PartialEq)]
pub struct GanTrainConfig {
    pub iterations: usize,
    /// Real samples per class per batch; the batch holds four classes.
    pub per_class: usize,
    /// Generator updates per iteration, all on the same noise batch.
    pub g_updates: usize,
    pub telemetry_every: usize,
    /// Real and generated samples per class in each distance measurement.
    pub fd_per_class: usize,
    /// Class-only training steps of the frozen network whose features the
    /// distance is measured in; 0 measures in the live discriminator.
    pub fd_reference_steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            per_class: 32,
            g_updates: 2,
            telemetry_every: 100,
            fd_per_class: 400,
            fd_reference_steps: 300,
            learning_rate: 2e-4,
            seed: 0,
        }
    }
}

impl GanTrainConfig {
    pub fn batch(&self) -> usize {
        REAL_CLASSES * self.per_class
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub iteration: usize,
    pub g_loss: f64,
    pub d_loss: f64,
    pub fd: f64,
    /// Class-head accuracy on held real samples, per N, S, V, F.
    pub class_accuracy: [f64; REAL_CLASSES],
}

impl TelemetryRow {
    /// Accuracy over all four classes, weighting them equally.
    pub fn mean_accuracy(&self) -> f64 {
        self.class_accuracy.iter().sum::<f64>() / REAL_CLASSES as f64
    }
}

pub fn write_telemetry_csv<W: Write>(rows: &[TelemetryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,g_loss,d_loss,fd,acc_N,acc_S,acc_V,acc_F")?;
    for r in rows {
        let [n, s, v, f] = r.class_accuracy;
        writeln!(
            out,
            "{},{:.9},{:.9},{:.9},{:.6},{:.6},{:.6},{:.6}",
            r.iteration, r.g_loss, r.d_loss, r.fd, n, s, v, f
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GanRun {
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub telemetry: Vec<TelemetryRow>,
}

/// Fixed samples reused by every telemetry measurement so the curve
/// reflects the networks rather than resampling noise.
struct Probe {
    reference: Option<Discriminator>,
    real: Vec<usize>,
    real_labels: Vec<usize>,
    noise: Vec<f64>,
    noise_labels: Vec<usize>,
}

const PROBE_CHUNK: usize = 64;

impl Probe {
    fn new(by_class: &[Vec<usize>], per_class: usize, rng: &mut Rng) -> Self {
        let mut real = Vec::new();
        let mut real_labels = Vec::new();
        for (c, members) in by_class.iter().enumerate() {
            for k in rng.sample_indices(members.len(), per_class) {
                real.push(members[k]);
                real_labels.push(c);
            }
        }
        let noise_labels: Vec<usize> = (0..REAL_CLASSES).flat_map(|c| vec![c; per_class]).collect();
        let noise = rng.normal_vec(noise_labels.len() * NOISE_DIM, 1.0);
        Self {
            reference: None,
            real,
            real_labels,
            noise,
            noise_labels,
        }
    }

    fn measure(
        &mut self,
        g: &mut Generator,
        d: &mut Discriminator,
        source: &dyn MatrixSource,
    ) -> Result<(f64, [f64; REAL_CLASSES]), GanError> {
        let mut scratch = Rng::seed(0);
        let mut real_features = Vec::with_capacity(self.real.len());
        let mut correct = [0usize; REAL_CLASSES];
        let mut total = [0usize; REAL_CLASSES];
        for (idx, labels) in self.real.chunks(PROBE_CHUNK).zip(self.real_labels.chunks(PROBE_CHUNK)) {
            let x = source.batch(idx);
            let out = d.forward(&x, Mode::Infer, &mut scratch)?;
            for (i, &c) in labels.iter().enumerate() {
                total[c] += 1;
                correct[c] += usize::from(argmax(out.probs.item(i)) == c);
            }
            let features = match self.reference.as_mut() {
                Some(r) => r.forward(&x, Mode::Infer, &mut scratch)?.features,
                None => out.features,
            };
            real_features.extend((0..labels.len()).map(|i| features.item(i).to_vec()));
        }
        let mut fake_features = Vec::with_capacity(self.noise_labels.len());
        for (noise, labels) in self.noise.chunks(PROBE_CHUNK * NOISE_DIM).zip(self.noise_labels.chunks(PROBE_CHUNK)) {
            let z = Tensor::from_vec(&[labels.len(), NOISE_DIM], noise.to_vec())?;
            let x = g.forward(&z, labels, Mode::Infer, &mut scratch)?;
            let out = self.reference.as_mut().unwrap_or(&mut *d).forward(&x, Mode::Infer, &mut scratch)?;
            fake_features.extend((0..labels.len()).map(|i| out.features.item(i).to_vec()));
        }
        let fd = frechet_distance(&real_features, &fake_features).map_err(|e| GanError::Frechet(e.to_string()))?;
        let mut acc = [0.0; REAL_CLASSES];
        for c in 0..REAL_CLASSES {
            acc[c] = if total[c] == 0 { 0.0 } else { correct[c] as f64 / total[c] as f64 };
        }
        Ok((fd, acc))
    }
}

/// A discriminator fitted to the real classes only and then frozen, so the
/// distance is measured in a feature space that does not move with training.
fn reference_network(
    by_class: &[Vec<usize>],
    source: &dyn MatrixSource,
    config: &GanTrainConfig,
    rng: &mut Rng,
) -> Result<Discriminator, GanError> {
    let mut r = Discriminator::new(rng.next_u64());
    r.adam = Adam::new(config.learning_rate);
    let labels: Vec<usize> = (0..REAL_CLASSES).flat_map(|c| vec![c; config.per_class]).collect();
    for _ in 0..config.fd_reference_steps {
        let idx: Vec<usize> = labels.iter().map(|&c| by_class[c][rng.below(by_class[c].len())]).collect();
        let out = r.forward(&source.batch(&idx), Mode::Train, rng)?;
        let (_, gp) = cross_entropy(&out.probs, &labels)?;
        r.backward(&gp, &Tensor::zeros(out.validity.shape()), Want::params())?;
        r.step()?;
    }
    Ok(r)
}

fn split_by_class(source: &dyn MatrixSource) -> Result<Vec<Vec<usize>>, GanError> {
    if source.is_empty() {
        return Err(GanError::EmptyDataset);
    }
    let mut by_class = vec![Vec::new(); REAL_CLASSES];
    for i in 0..source.len() {
        let label = source.label(i);
        if label >= REAL_CLASSES {
            return Err(GanError::BadLabel {
                index: i,
                label,
                classes: REAL_CLASSES,
            });
        }
        by_class[label].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(GanError::MissingClass(AamiClass::TRAINABLE[c]));
        }
    }
    Ok(by_class)
}

/// Seeds of the two networks built by [`train_gan`].
pub fn network_seeds(seed: u64) -> (u64, u64) {
    (seed.wrapping_mul(2).wrapping_add(1), seed.wrapping_mul(2).wrapping_add(2))
}

/// Trains a fresh generator/discriminator pair on the four real classes.
pub fn train_gan(source: &dyn MatrixSource, config: &GanTrainConfig) -> Result<GanRun, GanError> {
    let (gs, ds) = network_seeds(config.seed);
    train_gan_from(Generator::new(gs), Discriminator::new(ds), source, config)
}

/// Continues adversarial training of the given networks.
///
/// Per iteration: one discriminator step on a class-balanced real batch,
/// one on generated samples labelled "generated", then `g_updates`
/// generator steps through a frozen discriminator on the same noise.
pub fn train_gan_from(
    mut g: Generator,
    mut d: Discriminator,
    source: &dyn MatrixSource,
    config: &GanTrainConfig,
) -> Result<GanRun, GanError> {
    let by_class = split_by_class(source)?;
    let mut rng = Rng::seed(config.seed);
    let mut probe = Probe::new(&by_class, config.fd_per_class, &mut rng.fork(1));
    if config.fd_reference_steps > 0 && config.telemetry_every > 0 {
        probe.reference = Some(reference_network(&by_class, source, config, &mut rng.fork(2))?);
    }
    if g.adam.t == 0 {
        g.adam = Adam::new(config.learning_rate);
    }
    if d.adam.t == 0 {
        d.adam = Adam::new(config.learning_rate);
    }

    let labels: Vec<usize> = (0..REAL_CLASSES).flat_map(|c| vec![c; config.per_class]).collect();
    let fake_targets = vec![GENERATED; labels.len()];
    let mut telemetry = Vec::new();
    for it in 1..=config.iterations {
        let real_idx: Vec<usize> = labels
            .iter()
            .map(|&c| by_class[c][rng.below(by_class[c].len())])
            .collect();
        let real = source.batch(&real_idx);
        let noise = Tensor::from_vec(&[labels.len(), NOISE_DIM], rng.normal_vec(labels.len() * NOISE_DIM, 1.0))?;
        let fake = g.forward(&noise, &labels, Mode::Infer, &mut rng)?;

        let mut d_loss = 0.0;
        for (x, target, classes) in [(&real, 1.0, &labels), (&fake, 0.0, &fake_targets)] {
            let out = d.forward(x, Mode::Train, &mut rng)?;
            let hl = head_loss(&out, target, classes)?;
            d.backward(&hl.grad_probs, &hl.grad_validity, Want::params())?;
            d.step()?;
            d_loss += hl.loss;
        }

        let mut g_loss = 0.0;
        for _ in 0..config.g_updates {
            let x = g.forward(&noise, &labels, Mode::Train, &mut rng)?;
            let out = d.forward(&x, Mode::Train, &mut rng)?;
            let hl = head_loss(&out, 1.0, &labels)?;
            let gx = d
                .backward(&hl.grad_probs, &hl.grad_validity, Want::input())?
                .expect("input gradient requested");
            g.backward(&gx)?;
            g.step()?;
            g_loss = hl.loss;
        }

        if config.telemetry_every > 0 && it % config.telemetry_every == 0 {
            let (fd, class_accuracy) = probe.measure(&mut g, &mut d, source)?;
            let row = TelemetryRow {
                iteration: it,
                g_loss,
                d_loss,
                fd,
                class_accuracy,
            };
            log::info!(
                "iter {it}: d_loss {:.4} g_loss {:.4} fd {:.4} acc {:?}",
                row.d_loss,
                row.g_loss,
                row.fd,
                row.class_accuracy
            );
            telemetry.push(row);
        }
    }
    Ok(GanRun {
        generator: g,
        discriminator: d,
        telemetry,
    })
}

/// `count` samples conditioned on `class`, in inference mode.
pub fn generate(g: &mut Generator, class: AamiClass, count: usize, seed: u64) -> Result<Vec<CouplingMatrix>, GanError> {
    if class == AamiClass::Q {
        return Err(GanError::BadLabel {
            index: 0,
            label: class.index(),
            classes: REAL_CLASSES,
        });
    }
    let mut rng = Rng::seed(seed);
    let m = g.size();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = (count - out.len()).min(256);
        let labels = vec![class.index(); n];
        let z = Tensor::from_vec(&[n, NOISE_DIM], rng.normal_vec(n * NOISE_DIM, 1.0))?;
        let x = g.forward(&z, &labels, Mode::Infer, &mut rng)?;
        for i in 0..n {
            out.push(CouplingMatrix {
                size: m,
                values: x.item(i).to_vec(),
                center_beat_class: class,
                subject_id: "generated".to_string(),
                beat_index: out.len(),
            });
        }
    }
    Ok(out)
}
