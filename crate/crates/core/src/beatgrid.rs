//! Beat segmentation and dual-beat coupling matrices.
//!
//! Every beat is cut to a fixed per-record length `L` (the rounded mean R-R
//! interval) centred on its R peak. Two dual-beat vectors are formed around
//! beat `i` (`i-1 ++ i` and `i ++ i+1`), each resampled to length `M` by
//! linear interpolation by a factor of `M` followed by block means over runs
//! of `2L` points. Their outer product is the coupling matrix.

use std::io::Write;

use thiserror::Error;

use crate::wfdb::{AamiClass, EcgRecord, WfdbError};

/// Side length of a coupling matrix.
pub const INPUT_SIZE: usize = 73;

#[derive(Debug, Error)]
pub enum BeatgridError {
    #[error("record {record} has {beats} beats; at least 3 are needed")]
    TooFewBeats { record: String, beats: usize },
    #[error("record {record}: mean R-R interval rounds to {seg_len} samples")]
    DegenerateRhythm { record: String, seg_len: usize },
    #[error("beat index {index} out of range ({count} beats)")]
    BeatOutOfRange { index: usize, count: usize },
    #[error(transparent)]
    Wfdb(#[from] WfdbError),
}

/// Timing of the beats of one record, without labels.
#[derive(Debug, Clone, Copy)]
pub struct BeatLayout<'a> {
    pub seg_len: usize,
    pub centers: &'a [usize],
}

impl BeatLayout<'_> {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationPlan {
    pub record_id: String,
    /// Segment length `L` in samples.
    pub seg_len: usize,
    pub centers: Vec<usize>,
    pub labels: Vec<AamiClass>,
}

impl SegmentationPlan {
    pub fn layout(&self) -> BeatLayout<'_> {
        BeatLayout {
            seg_len: self.seg_len,
            centers: &self.centers,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

pub fn plan_segmentation(record: &EcgRecord) -> Result<SegmentationPlan, BeatgridError> {
    let centers: Vec<usize> = record.annotations.iter().map(|a| a.sample_index).collect();
    let labels = record.annotations.iter().map(|a| a.beat_class).collect();
    plan_from_centers(record.name(), centers, labels)
}

pub fn plan_from_centers(
    record_id: &str,
    centers: Vec<usize>,
    labels: Vec<AamiClass>,
) -> Result<SegmentationPlan, BeatgridError> {
    if centers.len() < 3 {
        return Err(BeatgridError::TooFewBeats {
            record: record_id.to_string(),
            beats: centers.len(),
        });
    }
    let span = (centers[centers.len() - 1] - centers[0]) as f64;
    let seg_len = (span / (centers.len() - 1) as f64).round() as usize;
    if seg_len < 2 {
        return Err(BeatgridError::DegenerateRhythm {
            record: record_id.to_string(),
            seg_len,
        });
    }
    Ok(SegmentationPlan {
        record_id: record_id.to_string(),
        seg_len,
        centers,
        labels,
    })
}

/// The `L` samples around beat `i`: `floor(L/2)` before the R peak, the rest
/// from the peak on. Indices past either end of the signal replicate the
/// edge sample.
pub fn extract_segment(signal: &[f64], layout: BeatLayout<'_>, i: usize) -> Vec<f64> {
    let mut out = vec![0.0; layout.seg_len];
    fill_segment(signal, layout.seg_len, layout.centers[i], &mut out);
    out
}

fn fill_segment(signal: &[f64], seg_len: usize, center: usize, out: &mut [f64]) {
    let last = signal.len() as isize - 1;
    let start = center as isize - (seg_len / 2) as isize;
    for (k, o) in out.iter_mut().enumerate() {
        let idx = (start + k as isize).clamp(0, last);
        *o = signal[idx as usize];
    }
}

/// Dual-beat vector joining beats `j - 1` and `j`, for `j` in `0..=n`.
/// A neighbour missing at either end of the record is replaced by the
/// nearest existing beat.
pub fn dual_beat(signal: &[f64], layout: BeatLayout<'_>, j: usize) -> Vec<f64> {
    let n = layout.centers.len();
    let first = j.saturating_sub(1).min(n - 1);
    let second = j.min(n - 1);
    let l = layout.seg_len;
    let mut out = vec![0.0; 2 * l];
    fill_segment(signal, l, layout.centers[first], &mut out[..l]);
    fill_segment(signal, l, layout.centers[second], &mut out[l..]);
    out
}

/// Resamples a vector of length `n` to length `m`.
///
/// The vector is linearly interpolated onto `n * m` points evenly spaced over
/// `[0, n - 1]` (both ends included), then each run of `n` consecutive
/// points is averaged.
pub fn scale_dual_beat(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return vec![0.0; m];
    }
    if n == 1 {
        return vec![values[0]; m];
    }
    let denom = n * m - 1;
    let step = n - 1;
    let mut out = Vec::with_capacity(m);
    for block in 0..m {
        let mut acc = 0.0;
        for j in block * n..(block + 1) * n {
            // exact rational position j * (n-1) / (n*m - 1)
            let num = j * step;
            let idx = num / denom;
            let rem = num % denom;
            if rem == 0 {
                acc += values[idx];
            } else {
                let frac = rem as f64 / denom as f64;
                acc += values[idx] + (values[idx + 1] - values[idx]) * frac;
            }
        }
        out.push(acc / n as f64);
    }
    out
}

/// An `M x M` coupling matrix labelled with its centre beat.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub size: usize,
    /// Row-major values.
    pub values: Vec<f64>,
    pub center_beat_class: AamiClass,
    pub subject_id: String,
    pub beat_index: usize,
}

impl CouplingMatrix {
    pub fn outer(row: &[f64], col: &[f64]) -> Vec<f64> {
        let mut values = Vec::with_capacity(row.len() * col.len());
        for &r in row {
            values.extend(col.iter().map(|&c| r * c));
        }
        values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.size + c]
    }

    /// Writes the matrix as CSV, one row per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.values.chunks(self.size) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// The two scaled dual-beat vectors around beat `i`.
pub fn scaled_pair(signal: &[f64], layout: BeatLayout<'_>, i: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let prev = scale_dual_beat(&dual_beat(signal, layout, i), m);
    let next = scale_dual_beat(&dual_beat(signal, layout, i + 1), m);
    (prev, next)
}

pub fn coupling_matrix(signal: &[f64], plan: &SegmentationPlan, i: usize) -> Result<CouplingMatrix, BeatgridError> {
    coupling_matrix_sized(signal, plan, i, INPUT_SIZE)
}

pub fn coupling_matrix_sized(
    signal: &[f64],
    plan: &SegmentationPlan,
    i: usize,
    m: usize,
) -> Result<CouplingMatrix, BeatgridError> {
    if i >= plan.len() {
        return Err(BeatgridError::BeatOutOfRange {
            index: i,
            count: plan.len(),
        });
    }
    let (prev, next) = scaled_pair(signal, plan.layout(), i, m);
    Ok(CouplingMatrix {
        size: m,
        values: CouplingMatrix::outer(&prev, &next),
        center_beat_class: plan.labels[i],
        subject_id: plan.record_id.clone(),
        beat_index: i,
    })
}

/// A record reduced to what the coupling-matrix stages need: the selected
/// channel in millivolts and its segmentation.
#[derive(Debug, Clone)]
pub struct PreparedRecord {
    pub signal: Vec<f64>,
    pub plan: SegmentationPlan,
}

impl PreparedRecord {
    pub fn new(record: &EcgRecord, channel: usize) -> Result<Self, BeatgridError> {
        Ok(Self {
            signal: record.channel_mv(channel)?,
            plan: plan_segmentation(record)?,
        })
    }

    pub fn id(&self) -> &str {
        &self.plan.record_id
    }

    pub fn coupling_matrix(&self, i: usize) -> Result<CouplingMatrix, BeatgridError> {
        coupling_matrix(&self.signal, &self.plan, i)
    }

    /// Coupling-matrix values only, written into `out` (length `M*M`).
    pub fn write_matrix(&self, i: usize, out: &mut [f64]) {
        let (prev, next) = scaled_pair(&self.signal, self.plan.layout(), i, INPUT_SIZE);
        for (r, row) in out.chunks_mut(INPUT_SIZE).enumerate() {
            for (o, &c) in row.iter_mut().zip(&next) {
                *o = prev[r] * c;
            }
        }
    }
}
