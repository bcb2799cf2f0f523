//! Seeded synthetic ECG cohort built from Gaussian-bump P-QRS-T beats.
//!
//! Each record gets its own morphology perturbation. Ectopic classes differ
//! from the template by timing and shape: S beats are premature, V beats are
//! premature, wide and inverted with a compensatory pause, F beats blend the
//! N and V shapes. S beats come in two sub-populations, one clearly abnormal
//! and one close to the subject's normal beat.

use crate::tensornet::Rng;
use crate::wfdb::{codes, AamiClass, BeatAnnotation, EcgRecord, RecordHeader, SignalSpec, WfdbError, SAMPLE_MAX, SAMPLE_MIN};

use super::split::{DS1, DS2};

pub const GAIN: f64 = 200.0;
pub const ADC_ZERO: i32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SKind {
    Distinct,
    NearNormal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecordSpec {
    pub name: String,
    pub beats: usize,
    /// Per-beat probabilities of N, S, V, F and Q.
    pub mix: [f64; 5],
    /// Fraction of S beats taken from the near-normal sub-population.
    pub near_normal_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sampling_rate_hz: f64,
    /// White measurement noise, standard deviation in mV.
    pub noise_mv: f64,
    /// Peak amplitude of a slow baseline wander, in mV.
    pub baseline_mv: f64,
    pub rr_seconds: f64,
    /// Relative standard deviation of R-R intervals.
    pub rr_jitter: f64,
    /// Relative spread of morphology between records.
    pub subject_variation: f64,
    /// Relative spread of wave amplitudes between beats of one record.
    pub beat_variation: f64,
    pub records: Vec<SynthRecordSpec>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sampling_rate_hz: 360.0,
            noise_mv: 0.01,
            baseline_mv: 0.05,
            rr_seconds: 0.8,
            rr_jitter: 0.03,
            subject_variation: 0.1,
            beat_variation: 0.03,
            records: Vec::new(),
        }
    }
}

impl SynthConfig {
    /// Cohort named after the inter-patient split: every training record,
    /// the first `s_bearing` of them containing S beats, plus the first
    /// `test_records` test records.
    pub fn split_cohort(train_beats: usize, s_bearing: usize, test_records: usize, test_beats: usize) -> Self {
        let mut records = Vec::new();
        for (i, name) in DS1.iter().enumerate() {
            let mix = if i < s_bearing {
                [0.78, 0.10, 0.08, 0.04, 0.0]
            } else {
                [0.88, 0.0, 0.08, 0.04, 0.0]
            };
            records.push(SynthRecordSpec {
                name: name.to_string(),
                beats: train_beats,
                mix,
                near_normal_s: 0.5,
            });
        }
        for name in DS2.iter().take(test_records) {
            records.push(SynthRecordSpec {
                name: name.to_string(),
                beats: test_beats,
                mix: [0.82, 0.08, 0.07, 0.03, 0.0],
                near_normal_s: 0.0,
            });
        }
        Self {
            records,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecord {
    pub record: EcgRecord,
    /// Sub-population of every S beat, `None` for other classes.
    pub s_kinds: Vec<Option<SKind>>,
}

impl SynthRecord {
    pub fn labels(&self) -> Vec<AamiClass> {
        self.record.annotations.iter().map(|a| a.beat_class).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub records: Vec<SynthRecord>,
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    offset: f64,
    amp: f64,
    width: f64,
}

const fn w(offset: f64, amp: f64, width: f64) -> Wave {
    Wave { offset, amp, width }
}

const NORMAL: [Wave; 5] = [
    w(-0.18, 0.12, 0.022),
    w(-0.035, -0.12, 0.010),
    w(0.0, 1.1, 0.011),
    w(0.035, -0.3, 0.011),
    w(0.26, 0.32, 0.045),
];

const S_DISTINCT: [Wave; 5] = [
    w(-0.12, -0.16, 0.018),
    w(-0.035, -0.10, 0.010),
    w(0.0, 0.95, 0.011),
    w(0.035, -0.34, 0.011),
    w(0.24, 0.28, 0.045),
];

const VENTRICULAR: [Wave; 3] = [w(0.0, 1.4, 0.035), w(0.07, -0.7, 0.03), w(0.3, -0.4, 0.06)];

const PACED: [Wave; 4] = [w(-0.02, 1.5, 0.002), w(0.03, 0.9, 0.04), w(0.09, -0.5, 0.03), w(0.32, 0.3, 0.06)];

/// Prematurity of each class relative to the subject's basic R-R interval.
fn rr_factor(class: AamiClass, s_kind: Option<SKind>) -> f64 {
    match (class, s_kind) {
        (AamiClass::S, Some(SKind::NearNormal)) => 0.88,
        (AamiClass::S, _) => 0.62,
        (AamiClass::V, _) => 0.6,
        (AamiClass::F, _) => 0.95,
        _ => 1.0,
    }
}

fn shape(class: AamiClass, s_kind: Option<SKind>) -> Vec<Wave> {
    match (class, s_kind) {
        (AamiClass::N, _) => NORMAL.to_vec(),
        (AamiClass::S, Some(SKind::NearNormal)) => {
            let mut v = NORMAL.to_vec();
            v[0].amp *= 0.8;
            v
        }
        (AamiClass::S, _) => S_DISTINCT.to_vec(),
        (AamiClass::V, _) => VENTRICULAR.to_vec(),
        (AamiClass::F, _) => NORMAL
            .iter()
            .chain(&VENTRICULAR)
            .map(|x| Wave { amp: 0.5 * x.amp, ..*x })
            .collect(),
        (AamiClass::Q, _) => PACED.to_vec(),
    }
}

fn annotation_code(class: AamiClass) -> u8 {
    match class {
        AamiClass::N => codes::NORMAL,
        AamiClass::S => codes::APC,
        AamiClass::V => codes::PVC,
        AamiClass::F => codes::FUSION,
        AamiClass::Q => codes::UNKNOWN,
    }
}

fn draw_class(mix: &[f64; 5], rng: &mut Rng) -> AamiClass {
    let total: f64 = mix.iter().sum();
    let mut u = rng.uniform() * total;
    for (i, &p) in mix.iter().enumerate() {
        if u < p {
            return AamiClass::ALL[i];
        }
        u -= p;
    }
    AamiClass::N
}

/// Per-record morphology scaling.
struct Subject {
    amp: [f64; 8],
    width: f64,
    rr: f64,
}

impl Subject {
    fn draw(config: &SynthConfig, rng: &mut Rng) -> Self {
        let v = config.subject_variation;
        let mut amp = [1.0; 8];
        for a in amp.iter_mut() {
            *a = (1.0 + v * rng.normal()).clamp(0.5, 1.5);
        }
        Self {
            amp,
            width: (1.0 + 0.5 * v * rng.normal()).clamp(0.7, 1.3),
            rr: config.rr_seconds * (1.0 + v * rng.normal()).clamp(0.75, 1.25),
        }
    }
}

fn synth_record(spec: &SynthRecordSpec, config: &SynthConfig, seed: u64) -> Result<SynthRecord, WfdbError> {
    let mut rng = Rng::seed(seed);
    let fs = config.sampling_rate_hz;
    let subject = Subject::draw(config, &mut rng);

    let mut classes = Vec::with_capacity(spec.beats);
    let mut s_kinds = Vec::with_capacity(spec.beats);
    for _ in 0..spec.beats {
        let c = draw_class(&spec.mix, &mut rng);
        let kind = (c == AamiClass::S).then(|| {
            if rng.uniform() < spec.near_normal_s {
                SKind::NearNormal
            } else {
                SKind::Distinct
            }
        });
        classes.push(c);
        s_kinds.push(kind);
    }

    let mut r_peaks = Vec::with_capacity(spec.beats);
    let mut r = (0.6 * subject.rr.max(1.0) * fs).round() as usize;
    let mut prev_rr = subject.rr;
    for k in 0..spec.beats {
        if k > 0 {
            let base = if classes[k - 1] == AamiClass::V && classes[k] == AamiClass::N {
                2.0 * subject.rr - prev_rr
            } else {
                subject.rr
            };
            let rr = base * rr_factor(classes[k], s_kinds[k]) * (1.0 + config.rr_jitter * rng.normal());
            let rr = rr.max(0.3 * subject.rr);
            // whole-sample steps keep equal intervals exactly equal
            r += (rr * fs).round() as usize;
            prev_rr = rr;
        }
        r_peaks.push(r);
    }
    let num_samples = r_peaks.last().map_or(fs as usize, |&r| r + (0.8 * fs) as usize);

    let mut mv = vec![0.0; num_samples];
    for (k, &r) in r_peaks.iter().enumerate() {
        let waves = shape(classes[k], s_kinds[k]);
        for (wi, wave) in waves.iter().enumerate() {
            let amp = wave.amp * subject.amp[wi % 8] * (1.0 + config.beat_variation * rng.normal());
            let width = wave.width * subject.width * fs;
            let centre = r as f64 + wave.offset * fs;
            let lo = (centre - 5.0 * width).floor().max(0.0) as usize;
            let hi = ((centre + 5.0 * width).ceil() as usize).min(num_samples);
            for (i, v) in mv.iter_mut().enumerate().take(hi).skip(lo) {
                let d = (i as f64 - centre) / width;
                *v += amp * (-0.5 * d * d).exp();
            }
        }
    }
    let phase = 2.0 * std::f64::consts::PI * rng.uniform();
    let to_adc = |v: f64| -> i16 { (v * GAIN + ADC_ZERO as f64).round().clamp(SAMPLE_MIN as f64, SAMPLE_MAX as f64) as i16 };
    let mut channels = vec![Vec::with_capacity(num_samples), Vec::with_capacity(num_samples)];
    for (i, &v) in mv.iter().enumerate() {
        let wander = config.baseline_mv * (2.0 * std::f64::consts::PI * 0.3 * i as f64 / fs + phase).sin();
        channels[0].push(to_adc(v + wander + config.noise_mv * rng.normal()));
        channels[1].push(to_adc(0.6 * v - 0.5 * wander + config.noise_mv * rng.normal()));
    }

    let header = RecordHeader {
        record_name: spec.name.clone(),
        num_signals: 2,
        sampling_rate_hz: fs,
        num_samples,
        signals: ["MLII", "V5"]
            .iter()
            .map(|d| SignalSpec {
                file_name: format!("{}.dat", spec.name),
                format_code: 212,
                gain: GAIN,
                adc_resolution: 11,
                adc_zero: ADC_ZERO,
                initial_value: 0,
                checksum: 0,
                block_size: 0,
                description: d.to_string(),
            })
            .collect(),
    };
    let annotations = r_peaks
        .iter()
        .zip(&classes)
        .map(|(&r, &c)| BeatAnnotation {
            sample_index: r,
            beat_class: c,
            raw_code: annotation_code(c),
        })
        .collect();
    Ok(SynthRecord {
        record: EcgRecord::new(header, channels, annotations)?,
        s_kinds,
    })
}

/// Builds every record of the configuration; record `k` uses a seed derived
/// from `seed` and `k`, so records do not depend on each other.
pub fn synth_cohort(config: &SynthConfig, seed: u64) -> Result<SyntheticCohort, WfdbError> {
    let records = config
        .records
        .iter()
        .enumerate()
        .map(|(k, spec)| synth_record(spec, config, seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
        .collect::<Result<_, _>>()?;
    Ok(SyntheticCohort { records })
}
