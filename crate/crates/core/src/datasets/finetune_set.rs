use crate::beatgrid::PreparedRecord;
use crate::gan::{generate, GanError, Generator, MatrixSet, MatrixSource};
use crate::tensornet::Rng;
use crate::wfdb::AamiClass;

use super::{CommonPool, DatasetError, ManifestRow, Provenance, Split};

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneSetConfig {
    /// Real S, V and F beats taken from the common pool, per class.
    pub real_per_class: usize,
    /// Generated beats per class; 0 leaves the generated part empty.
    pub generated_per_class: usize,
    /// Upper bound on estimated N beats of the subject.
    pub estimated_max: usize,
    pub seed: u64,
}

impl Default for FinetuneSetConfig {
    fn default() -> Self {
        Self {
            real_per_class: 400,
            generated_per_class: 400,
            estimated_max: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stratum {
    SelectedS,
    RandomV,
    RandomF,
    Generated,
    EstimatedN,
}

impl Stratum {
    pub fn name(self) -> &'static str {
        match self {
            Self::SelectedS => "selected_s",
            Self::RandomV => "random_v",
            Self::RandomF => "random_f",
            Self::Generated => "generated",
            Self::EstimatedN => "estimated_n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSource {
    /// Entry of the common pool.
    Pool(usize),
    /// Index into the generated set.
    Generated(usize),
    /// Beat of the subject's own record.
    Estimated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinetuneSample {
    pub stratum: Stratum,
    pub source: SampleSource,
    pub class: AamiClass,
}

/// Per-subject fine-tune data. Every sample is trained as real (validity 1).
#[derive(Debug, Clone)]
pub struct FinetuneSet<'a> {
    pool: &'a CommonPool<'a>,
    subject: &'a PreparedRecord,
    generated: &'a MatrixSet,
    pub samples: Vec<FinetuneSample>,
}

impl FinetuneSet<'_> {
    pub fn count(&self, stratum: Stratum) -> usize {
        self.samples.iter().filter(|s| s.stratum == stratum).count()
    }

    pub fn subject_id(&self) -> &str {
        self.subject.id()
    }

    pub fn manifest(&self) -> Vec<ManifestRow> {
        self.samples
            .iter()
            .map(|s| {
                let (record_id, beat_index, split, provenance) = match s.source {
                    SampleSource::Pool(e) => {
                        let entry = self.pool.entries()[e];
                        (self.pool.record_id(e).to_string(), entry.beat.beat, Split::Ds1.name(), Provenance::Real)
                    }
                    SampleSource::Generated(k) => ("generated".to_string(), k, "none", Provenance::Generated),
                    SampleSource::Estimated(b) => {
                        (self.subject.id().to_string(), b, Split::of(self.subject.id()).name(), Provenance::Estimated)
                    }
                };
                ManifestRow {
                    record_id,
                    beat_index,
                    class: s.class,
                    split,
                    stratum: s.stratum.name(),
                    provenance,
                }
            })
            .collect()
    }
}

impl MatrixSource for FinetuneSet<'_> {
    fn len(&self) -> usize {
        self.samples.len()
    }

    fn label(&self, i: usize) -> usize {
        self.samples[i].class.index()
    }

    fn write_matrix(&self, i: usize, out: &mut [f64]) {
        match self.samples[i].source {
            SampleSource::Pool(e) => self.pool.write_matrix(e, out),
            SampleSource::Generated(k) => out.copy_from_slice(self.generated.matrix(k)),
            SampleSource::Estimated(b) => self.subject.write_matrix(b, out),
        }
    }
}

/// Draws `per_class` generated matrices for each trainable class, in class
/// order. Labels are the conditioned classes.
pub fn generate_set(g: &mut Generator, per_class: usize, seed: u64) -> Result<MatrixSet, GanError> {
    let mut rng = Rng::seed(seed);
    let mut set = MatrixSet::new();
    for class in AamiClass::TRAINABLE {
        for cm in generate(g, class, per_class, rng.next_u64())? {
            set.push(&cm.values, class.index());
        }
    }
    Ok(set)
}

/// Builds one subject's fine-tune set: real S, V and F beats drawn from the
/// common pool, the first `generated_per_class` matrices of each class in
/// `generated`, and up to `estimated_max` of the subject's estimated N
/// beats (`normal_beats`, indices into the subject's record).
pub fn assemble_finetune<'a>(
    pool: &'a CommonPool<'a>,
    generated: &'a MatrixSet,
    subject: &'a PreparedRecord,
    normal_beats: &[usize],
    config: &FinetuneSetConfig,
) -> Result<FinetuneSet<'a>, DatasetError> {
    let mut rng = Rng::seed(config.seed);
    let mut samples = Vec::new();
    for (class, stratum) in [
        (AamiClass::S, Stratum::SelectedS),
        (AamiClass::V, Stratum::RandomV),
        (AamiClass::F, Stratum::RandomF),
    ] {
        let candidates = pool.indices_of(class);
        let mut picks = rng.sample_indices(candidates.len(), config.real_per_class.min(candidates.len()));
        picks.sort_unstable();
        samples.extend(picks.into_iter().map(|k| FinetuneSample {
            stratum,
            source: SampleSource::Pool(candidates[k]),
            class,
        }));
    }

    for class in AamiClass::TRAINABLE {
        let available: Vec<usize> = (0..generated.len())
            .filter(|&k| generated.label(k) == class.index())
            .take(config.generated_per_class)
            .collect();
        if available.len() < config.generated_per_class {
            return Err(DatasetError::InsufficientGenerated {
                class,
                needed: config.generated_per_class,
                got: available.len(),
            });
        }
        samples.extend(available.into_iter().map(|k| FinetuneSample {
            stratum: Stratum::Generated,
            source: SampleSource::Generated(k),
            class,
        }));
    }

    let beats = subject.plan.len();
    for &b in normal_beats.iter().take(config.estimated_max) {
        if b >= beats {
            return Err(DatasetError::UnknownBeat { record: 0, beat: b });
        }
        samples.push(FinetuneSample {
            stratum: Stratum::EstimatedN,
            source: SampleSource::Estimated(b),
            class: AamiClass::N,
        });
    }
    Ok(FinetuneSet {
        pool,
        subject,
        generated,
        samples,
    })
}
