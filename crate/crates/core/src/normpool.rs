//! Unsupervised estimation of a subject's normal beats.
//!
//! Each beat is judged by the two dual-beat segments around it. Both are
//! turned into low-frequency magnitude spectrograms; if the two correlate
//! above the base threshold the beat enters the pool. Otherwise the pair,
//! unrolled end to end, is correlated with each member's pair under a
//! threshold that tightens on every further pass over the record. Judging
//! the pair as a whole keeps out beats that only half resemble the pool,
//! which would otherwise let ectopic neighbours in by chaining.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::beatgrid::{dual_beat, BeatLayout};
use crate::wfdb::AamiClass;

pub const WINDOW: usize = 64;
pub const FFT_SIZE: usize = 1024;
pub const BINS: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum NormpoolError {
    #[error("segment of {0} samples is shorter than the {WINDOW}-sample window")]
    SegmentTooShort(usize),
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined for a constant vector")]
    DegenerateInput,
}

/// Unrolled magnitude spectrogram, frame-major: entry `f * BINS + k` is bin
/// `k` of the frame starting at sample `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramVector {
    pub values: Vec<f64>,
}

impl SpectrogramVector {
    pub fn frames(&self) -> usize {
        self.values.len() / BINS
    }

    pub fn frame(&self, f: usize) -> &[f64] {
        &self.values[f * BINS..(f + 1) * BINS]
    }
}

fn twiddles() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // only the low BINS outputs of a FFT_SIZE-point transform of a
        // zero-padded WINDOW-sample frame are needed
        let mut t = Vec::with_capacity(BINS * WINDOW);
        for k in 0..BINS {
            for m in 0..WINDOW {
                let phase = -2.0 * std::f64::consts::PI * ((k * m) % FFT_SIZE) as f64 / FFT_SIZE as f64;
                t.push((phase.cos(), phase.sin()));
            }
        }
        t
    })
}

/// Short-time magnitude spectrum with a rectangular 64-sample window and a
/// step of one sample, keeping the 32 lowest bins of a 1024-point transform.
pub fn spectrogram(segment: &[f64]) -> Result<SpectrogramVector, NormpoolError> {
    if segment.len() < WINDOW {
        return Err(NormpoolError::SegmentTooShort(segment.len()));
    }
    let frames = segment.len() - WINDOW + 1;
    let table = twiddles();
    let mut values = Vec::with_capacity(frames * BINS);
    for f in 0..frames {
        let frame = &segment[f..f + WINDOW];
        for k in 0..BINS {
            let row = &table[k * WINDOW..(k + 1) * WINDOW];
            let (mut re, mut im) = (0.0, 0.0);
            for (&x, &(c, s)) in frame.iter().zip(row) {
                re += x * c;
                im += x * s;
            }
            values.push(re.hypot(im));
        }
    }
    Ok(SpectrogramVector { values })
}

/// Pearson correlation coefficient.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64, NormpoolError> {
    if a.len() != b.len() {
        return Err(NormpoolError::LengthMismatch(a.len(), b.len()));
    }
    let za = Standardized::new(a).ok_or(NormpoolError::DegenerateInput)?;
    let zb = Standardized::new(b).ok_or(NormpoolError::DegenerateInput)?;
    Ok(za.dot(&zb))
}

/// Mean-centred, unit-norm copy of a vector; the dot product of two of these
/// is their Pearson correlation.
#[derive(Debug, Clone)]
struct Standardized(Vec<f64>);

impl Standardized {
    fn new(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let centred: Vec<f64> = v.iter().map(|x| x - mean).collect();
        let norm = centred.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-12 * (1.0 + mean.abs()) * (v.len() as f64).sqrt()) {
            return None;
        }
        Some(Self(centred.into_iter().map(|x| x / norm).collect()))
    }

    fn dot(&self, other: &Self) -> f64 {
        if self.0.len() != other.0.len() {
            return 0.0;
        }
        let r: f64 = self.0.iter().zip(&other.0).map(|(x, y)| x * y).sum();
        r.clamp(-1.0, 1.0)
    }
}

fn corr_or_zero(a: &Option<Standardized>, b: &Option<Standardized>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => a.dot(b),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub base_threshold: f64,
    pub max_pool: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            base_threshold: 0.9,
            max_pool: 400,
        }
    }
}

impl EstimatorConfig {
    /// Threshold for pool comparisons during pass `epoch`: `0.95 + epoch/100`.
    pub fn pool_threshold(&self, epoch: usize) -> f64 {
        (95 + epoch) as f64 / 100.0
    }
}

/// How a beat entered the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    /// Its own two spectrograms agreed.
    SelfSimilar,
    /// It matched a pool member.
    PoolMatch,
}

#[derive(Debug, Clone)]
pub struct PoolMember {
    pub beat_index: usize,
    pub epoch: usize,
    pub admission: Admission,
    /// Both spectrograms unrolled end to end, standardized.
    joint: Option<Standardized>,
}

#[derive(Debug, Clone, Default)]
pub struct NormalPool {
    pub subject_id: String,
    pub members: Vec<PoolMember>,
    /// Number of passes over the record that were started.
    pub passes: usize,
}

/// Purity of a pool against ground-truth labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurityReport {
    pub correct: usize,
    pub incorrect: usize,
}

impl PurityReport {
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.correct + self.incorrect;
        (total > 0).then(|| self.correct as f64 / total as f64)
    }
}

impl NormalPool {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn beat_indices(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.beat_index).collect()
    }

    pub fn purity(&self, truth: &[AamiClass]) -> PurityReport {
        let correct = self.members.iter().filter(|m| truth[m.beat_index] == AamiClass::N).count();
        PurityReport {
            correct,
            incorrect: self.members.len() - correct,
        }
    }

    /// CSV of `beat_index,admitted_epoch`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "beat_index,admitted_epoch")?;
        for m in &self.members {
            writeln!(out, "{},{}", m.beat_index, m.epoch)?;
        }
        Ok(())
    }
}

fn dual_spectrum(signal: &[f64], layout: BeatLayout<'_>, j: usize) -> Result<Arc<Vec<f64>>, NormpoolError> {
    Ok(Arc::new(spectrogram(&dual_beat(signal, layout, j))?.values))
}

fn joint(prev: &[f64], next: &[f64]) -> Option<Standardized> {
    Standardized::new(&[prev, next].concat())
}


/// Collects up to `max_pool` beats judged normal.
///
/// Only beat timing is consulted; class labels never reach this function.
pub fn estimate_normals(
    subject_id: &str,
    signal: &[f64],
    layout: BeatLayout<'_>,
    config: &EstimatorConfig,
) -> Result<NormalPool, NormpoolError> {
    let n = layout.len();
    let mut pool = NormalPool {
        subject_id: subject_id.to_string(),
        ..NormalPool::default()
    };
    if n == 0 || config.max_pool == 0 {
        return Ok(pool);
    }
    if 2 * layout.seg_len < WINDOW {
        return Err(NormpoolError::SegmentTooShort(2 * layout.seg_len));
    }
    let mut admitted = vec![false; n];
    let mut epoch = 0;
    loop {
        let threshold = config.pool_threshold(epoch);
        if epoch > 0 && threshold >= 1.0 {
            break;
        }
        pool.passes += 1;
        let before = pool.members.len();
        let mut carried: Option<(usize, Arc<Vec<f64>>)> = None;
        for i in 0..n {
            if admitted[i] {
                continue;
            }
            let prev = match carried.take() {
                Some((j, s)) if j == i => s,
                _ => dual_spectrum(signal, layout, i)?,
            };
            let next = dual_spectrum(signal, layout, i + 1)?;
            carried = Some((i + 1, next.clone()));

            // the self-similarity test cannot change between passes
            let self_similar = epoch == 0
                && corr_or_zero(&Standardized::new(&prev), &Standardized::new(&next)) > config.base_threshold;
            let candidate = joint(&prev, &next);
            let admission = if self_similar {
                Some(Admission::SelfSimilar)
            } else if pool.members.iter().any(|m| corr_or_zero(&candidate, &m.joint) > threshold) {
                Some(Admission::PoolMatch)
            } else {
                None
            };
            if let Some(admission) = admission {
                admitted[i] = true;
                pool.members.push(PoolMember {
                    beat_index: i,
                    epoch,
                    admission,
                    joint: candidate,
                });
                if pool.members.len() >= config.max_pool {
                    return Ok(pool);
                }
            }
        }
        if pool.members.len() == before {
            break;
        }
        epoch += 1;
    }
    Ok(pool)
}
