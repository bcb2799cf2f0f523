//! Reader and writer for WFDB record triplets: `<name>.hea` text header,
//! `<name>.dat` format-212 signal and `<name>.atr` MIT annotations.

mod annotation;
mod class;
mod header;
mod signal;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use annotation::{
    beats_of, decode_annotation_stream, decode_annotations, encode_annotations, Annotation, BeatAnnotation,
};
pub use class::{beat_mnemonic, code_for_mnemonic, codes, map_class, AamiClass, BEAT_TABLE};
pub use header::{format_header, parse_header, RecordHeader, SignalSpec};
pub use signal::{decode_format212, encode_format212, format212_len, SAMPLE_MAX, SAMPLE_MIN};

#[derive(Debug, Error)]
pub enum WfdbError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported signal format {0} (only 212 is accepted)")]
    UnsupportedFormat(u32),
    #[error("signal file truncated: need {needed} bytes, have {available}")]
    TruncatedSignal { needed: usize, available: usize },
    #[error("annotation file truncated at byte {offset}")]
    TruncatedAnnotations { offset: usize },
    #[error("unknown annotation code {code} at {offset}")]
    UnknownCode { code: u8, offset: usize },
    #[error("modifier word at byte {offset} precedes any annotation")]
    OrphanModifier { offset: usize },
    #[error("annotation at byte {offset} has a negative time")]
    NegativeAnnotationTime { offset: usize },
    #[error("code {0} is not a beat")]
    NonBeatCode(u8),
    #[error("sample {0} does not fit in 12 bits")]
    SampleOutOfRange(i32),
    #[error("channels have different lengths")]
    ChannelLengthMismatch,
    #[error("annotation {index} is out of order")]
    AnnotationOrder { index: usize },
    #[error("beat annotation at sample {sample} lies outside a record of {num_samples} samples")]
    AnnotationOutOfRange { sample: usize, num_samples: usize },
    #[error("cannot encode annotation: {0}")]
    Unencodable(String),
    #[error("header declares {declared} signals but record holds {actual}")]
    SignalCountMismatch { declared: usize, actual: usize },
    #[error("channel {0} does not exist")]
    NoSuchChannel(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One subject's signals and beat annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub header: RecordHeader,
    /// ADC values, one vector per channel.
    pub samples: Vec<Vec<i16>>,
    pub annotations: Vec<BeatAnnotation>,
}

impl EcgRecord {
    /// Assembles a record and checks the structural invariants.
    pub fn new(header: RecordHeader, samples: Vec<Vec<i16>>, annotations: Vec<BeatAnnotation>) -> Result<Self, WfdbError> {
        if samples.len() != header.num_signals || header.signals.len() != header.num_signals {
            return Err(WfdbError::SignalCountMismatch {
                declared: header.num_signals,
                actual: samples.len(),
            });
        }
        if samples.iter().any(|c| c.len() != header.num_samples) {
            return Err(WfdbError::ChannelLengthMismatch);
        }
        for (i, pair) in annotations.windows(2).enumerate() {
            if pair[1].sample_index <= pair[0].sample_index {
                return Err(WfdbError::AnnotationOrder { index: i + 1 });
            }
        }
        if let Some(last) = annotations.last() {
            if last.sample_index >= header.num_samples {
                return Err(WfdbError::AnnotationOutOfRange {
                    sample: last.sample_index,
                    num_samples: header.num_samples,
                });
            }
        }
        Ok(Self {
            header,
            samples,
            annotations,
        })
    }

    pub fn name(&self) -> &str {
        &self.header.record_name
    }

    /// Channel converted to millivolts through gain and ADC zero.
    pub fn channel_mv(&self, channel: usize) -> Result<Vec<f64>, WfdbError> {
        let spec = self.header.signals.get(channel).ok_or(WfdbError::NoSuchChannel(channel))?;
        Ok(self.samples[channel].iter().map(|&v| spec.to_mv(v)).collect())
    }

    pub fn class_counts(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for a in &self.annotations {
            counts[a.beat_class.index()] += 1;
        }
        counts
    }
}

/// The three byte buffers that make up a record on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordFiles {
    pub header: Vec<u8>,
    pub signal: Vec<u8>,
    pub annotations: Vec<u8>,
}

/// Decodes a record from its three files.
pub fn decode_record(files: &RecordFiles) -> Result<EcgRecord, WfdbError> {
    let header = parse_header(&files.header)?;
    let samples = decode_format212(&files.signal, header.num_samples, header.num_signals)?;
    let beats = decode_annotations(&files.annotations)?;
    EcgRecord::new(header, samples, beats)
}

/// Encodes a record. Header checksums and initial values are recomputed
/// from the samples so the written triplet is self-consistent.
pub fn encode_record(record: &EcgRecord) -> Result<RecordFiles, WfdbError> {
    let extra: [Annotation; 0] = [];
    encode_record_with(record, &extra)
}

/// Like [`encode_record`], merging extra non-beat annotations (rhythm
/// changes, comments with aux text) into the annotation stream.
pub fn encode_record_with(record: &EcgRecord, extra: &[Annotation]) -> Result<RecordFiles, WfdbError> {
    let signal = encode_format212(&record.samples)?;
    let mut header = record.header.clone();
    for (spec, channel) in header.signals.iter_mut().zip(&record.samples) {
        spec.format_code = 212;
        spec.file_name = format!("{}.dat", header.record_name);
        spec.initial_value = channel.first().copied().unwrap_or(0) as i32;
        spec.checksum = channel.iter().fold(0i16, |acc, &v| acc.wrapping_add(v)) as i32;
    }
    let mut stream: Vec<Annotation> = record
        .annotations
        .iter()
        .map(|b| Annotation::new(b.sample_index as u64, b.raw_code))
        .collect();
    stream.extend(extra.iter().cloned());
    // stable: beats precede extras at the same sample
    stream.sort_by_key(|a| a.sample);
    Ok(RecordFiles {
        header: format_header(&header).into_bytes(),
        signal,
        annotations: encode_annotations(&stream)?,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WfdbError + '_ {
    move |source| WfdbError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads `<dir>/<name>.{hea,dat,atr}`.
pub fn read_record(dir: &Path, name: &str) -> Result<EcgRecord, WfdbError> {
    let hea = dir.join(format!("{name}.hea"));
    let header_bytes = std::fs::read(&hea).map_err(io_err(&hea))?;
    let header = parse_header(&header_bytes)?;
    let dat = dir.join(&header.signals[0].file_name);
    let atr = dir.join(format!("{name}.atr"));
    let files = RecordFiles {
        header: header_bytes,
        signal: std::fs::read(&dat).map_err(io_err(&dat))?,
        annotations: std::fs::read(&atr).map_err(io_err(&atr))?,
    };
    decode_record(&files)
}

/// Writes `<dir>/<name>.{hea,dat,atr}` and returns the header path.
pub fn write_record(dir: &Path, record: &EcgRecord) -> Result<PathBuf, WfdbError> {
    let files = encode_record(record)?;
    write_files(dir, record.name(), &files)
}

pub fn write_files(dir: &Path, name: &str, files: &RecordFiles) -> Result<PathBuf, WfdbError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let hea = dir.join(format!("{name}.hea"));
    let dat = dir.join(format!("{name}.dat"));
    let atr = dir.join(format!("{name}.atr"));
    std::fs::write(&hea, &files.header).map_err(io_err(&hea))?;
    std::fs::write(&dat, &files.signal).map_err(io_err(&dat))?;
    std::fs::write(&atr, &files.annotations).map_err(io_err(&atr))?;
    Ok(hea)
}

/// Names of all records (`*.hea` stems) in a directory, sorted.
pub fn list_records(dir: &Path) -> Result<Vec<String>, WfdbError> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("hea") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                names.push(stem.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_record() -> EcgRecord {
        let header = RecordHeader {
            record_name: "t1".into(),
            num_signals: 2,
            sampling_rate_hz: 360.0,
            num_samples: 3000,
            signals: (0..2)
                .map(|i| SignalSpec {
                    file_name: "t1.dat".into(),
                    format_code: 212,
                    gain: 200.0,
                    adc_resolution: 11,
                    adc_zero: 1024,
                    initial_value: 0,
                    checksum: 0,
                    block_size: 0,
                    description: if i == 0 { "MLII".into() } else { "V5".into() },
                })
                .collect(),
        };
        let samples = (0..2)
            .map(|c| (0..3000).map(|k| ((k * 7 + c * 13) % 4096) as i16 - 2048).collect())
            .collect();
        let annotations = [(100, 'N'), (400, 'A'), (2000, 'V'), (2100, 'N'), (2999, 'Q')]
            .iter()
            .map(|&(s, m)| {
                let raw_code = code_for_mnemonic(m).unwrap();
                BeatAnnotation {
                    sample_index: s,
                    beat_class: map_class(raw_code).unwrap(),
                    raw_code,
                }
            })
            .collect();
        EcgRecord::new(header, samples, annotations).unwrap()
    }

    #[test]
    fn record_roundtrip_through_bytes() {
        let rec = tiny_record();
        let files = encode_record(&rec).unwrap();
        let back = decode_record(&files).unwrap();
        assert_eq!(back.samples, rec.samples);
        assert_eq!(back.annotations, rec.annotations);
        // writer refreshes checksum and initial value
        assert_eq!(back.header.signals[0].initial_value, rec.samples[0][0] as i32);
        let again = encode_record(&back).unwrap();
        assert_eq!(again, files);
    }

    #[test]
    fn out_of_range_sample_rejected() {
        let mut rec = tiny_record();
        rec.samples[0][5] = 4000;
        assert!(matches!(encode_record(&rec), Err(WfdbError::SampleOutOfRange(4000))));
    }

    #[test]
    fn extras_merge_without_changing_beats() {
        let rec = tiny_record();
        let extras = vec![Annotation::new(100, codes::RHYTHM).with_aux(b"(N".to_vec())];
        let files = encode_record_with(&rec, &extras).unwrap();
        let back = decode_record(&files).unwrap();
        assert_eq!(back.annotations, rec.annotations);
        assert_eq!(decode_annotation_stream(&files.annotations).unwrap().len(), 6);
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let rec = tiny_record();
        write_record(dir.path(), &rec).unwrap();
        assert_eq!(list_records(dir.path()).unwrap(), vec!["t1".to_string()]);
        let back = read_record(dir.path(), "t1").unwrap();
        assert_eq!(back.samples, rec.samples);
        assert_eq!(back.annotations, rec.annotations);
    }

    #[test]
    fn mv_conversion() {
        let rec = tiny_record();
        let mv = rec.channel_mv(0).unwrap();
        assert_eq!(mv[0], (rec.samples[0][0] as f64 - 1024.0) / 200.0);
        assert!(matches!(rec.channel_mv(2), Err(WfdbError::NoSuchChannel(2))));
    }

    #[test]
    fn invariants_enforced() {
        let rec = tiny_record();
        let mut anns = rec.annotations.clone();
        anns.swap(0, 1);
        assert!(EcgRecord::new(rec.header.clone(), rec.samples.clone(), anns).is_err());
        let mut anns = rec.annotations.clone();
        anns.last_mut().unwrap().sample_index = 3000;
        assert!(matches!(
            EcgRecord::new(rec.header.clone(), rec.samples.clone(), anns),
            Err(WfdbError::AnnotationOutOfRange { .. })
        ));
    }
}
