//! MIT annotation format.
//!
//! The file is a stream of little-endian 16-bit words. The high 6 bits hold
//! the annotation type, the low 10 bits a time increment (or a length for the
//! pseudo-annotations). `SKIP` is followed by a 32-bit interval stored as two
//! little-endian halves, high half first. `NUM`, `SUB`, `CHN` and `AUX` follow
//! the annotation they modify; `NUM` and `CHN` values persist until changed.
//! A zero word terminates the stream.

use super::class::{codes, map_class, AamiClass};
use super::WfdbError;

/// One decoded annotation, beat or not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub sample: u64,
    pub code: u8,
    pub subtype: u16,
    pub chan: u16,
    pub num: u16,
    pub aux: Option<Vec<u8>>,
}

impl Annotation {
    pub fn new(sample: u64, code: u8) -> Self {
        Self {
            sample,
            code,
            subtype: 0,
            chan: 0,
            num: 0,
            aux: None,
        }
    }

    pub fn with_aux(mut self, aux: impl Into<Vec<u8>>) -> Self {
        self.aux = Some(aux.into());
        self
    }
}

/// A beat annotation after AAMI mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeatAnnotation {
    pub sample_index: usize,
    pub beat_class: AamiClass,
    pub raw_code: u8,
}

fn is_documented(code: u8) -> bool {
    match code {
        15 | 17 => false,
        0..=codes::ACP_MAX => true,
        _ => false,
    }
}

struct Words<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Words<'a> {
    fn word(&mut self) -> Result<u16, WfdbError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WfdbError> {
        if self.pos + n > self.bytes.len() {
            return Err(WfdbError::TruncatedAnnotations { offset: self.pos });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

/// Decodes the complete annotation stream, including non-beat annotations.
pub fn decode_annotation_stream(bytes: &[u8]) -> Result<Vec<Annotation>, WfdbError> {
    let mut words = Words { bytes, pos: 0 };
    let mut out: Vec<Annotation> = Vec::new();
    let mut time: i64 = 0;
    let mut num = 0u16;
    let mut chan = 0u16;

    loop {
        let offset = words.pos;
        let w = words.word()?;
        let code = (w >> 10) as u8;
        let field = w & 0x03FF;
        match code {
            0 if field == 0 => return Ok(out),
            codes::SKIP => {
                let b = words.take(4)?;
                let hi = u16::from_le_bytes([b[0], b[1]]) as u32;
                let lo = u16::from_le_bytes([b[2], b[3]]) as u32;
                time += ((hi << 16) | lo) as i32 as i64;
            }
            codes::NUM => {
                num = field;
                if let Some(last) = out.last_mut() {
                    last.num = field;
                }
            }
            codes::CHN => {
                chan = field;
                if let Some(last) = out.last_mut() {
                    last.chan = field;
                }
            }
            codes::SUB => {
                out.last_mut().ok_or(WfdbError::OrphanModifier { offset })?.subtype = field;
            }
            codes::AUX => {
                let len = field as usize;
                let payload = words.take(len)?.to_vec();
                if len % 2 == 1 {
                    words.take(1)?;
                }
                out.last_mut().ok_or(WfdbError::OrphanModifier { offset })?.aux = Some(payload);
            }
            c if is_documented(c) => {
                time += field as i64;
                if time < 0 {
                    return Err(WfdbError::NegativeAnnotationTime { offset });
                }
                out.push(Annotation {
                    sample: time as u64,
                    code: c,
                    subtype: 0,
                    chan,
                    num,
                    aux: None,
                });
            }
            c => return Err(WfdbError::UnknownCode { code: c, offset }),
        }
    }
}

/// Decodes only the beat annotations, mapped to AAMI classes.
pub fn decode_annotations(bytes: &[u8]) -> Result<Vec<BeatAnnotation>, WfdbError> {
    Ok(beats_of(&decode_annotation_stream(bytes)?))
}

pub fn beats_of(stream: &[Annotation]) -> Vec<BeatAnnotation> {
    stream
        .iter()
        .filter_map(|a| {
            map_class(a.code).ok().map(|beat_class| BeatAnnotation {
                sample_index: a.sample as usize,
                beat_class,
                raw_code: a.code,
            })
        })
        .collect()
}

fn push_word(out: &mut Vec<u8>, code: u8, field: u16) {
    out.extend_from_slice(&(((code as u16) << 10) | (field & 0x03FF)).to_le_bytes());
}

/// Encodes an annotation stream. Annotations must be sorted by sample.
pub fn encode_annotations(annotations: &[Annotation]) -> Result<Vec<u8>, WfdbError> {
    let mut out = Vec::with_capacity(annotations.len() * 2 + 2);
    let mut time: u64 = 0;
    let mut num = 0u16;
    let mut chan = 0u16;
    for (i, a) in annotations.iter().enumerate() {
        if !is_documented(a.code) {
            return Err(WfdbError::UnknownCode { code: a.code, offset: i });
        }
        if a.sample < time {
            return Err(WfdbError::AnnotationOrder { index: i });
        }
        let delta = a.sample - time;
        if a.code == 0 && delta == 0 {
            return Err(WfdbError::Unencodable(format!("annotation {i}: code 0 with zero increment")));
        }
        if delta > 0x03FF {
            let interval = i32::try_from(delta)
                .map_err(|_| WfdbError::Unencodable(format!("annotation {i}: gap {delta} exceeds 32 bits")))?
                as u32;
            push_word(&mut out, codes::SKIP, 0);
            out.extend_from_slice(&((interval >> 16) as u16).to_le_bytes());
            out.extend_from_slice(&((interval & 0xFFFF) as u16).to_le_bytes());
            if a.code == 0 {
                return Err(WfdbError::Unencodable(format!("annotation {i}: code 0 after a skip")));
            }
            push_word(&mut out, a.code, 0);
        } else {
            push_word(&mut out, a.code, delta as u16);
        }
        time = a.sample;

        if a.subtype != 0 {
            push_word(&mut out, codes::SUB, a.subtype);
        }
        if a.chan != chan {
            push_word(&mut out, codes::CHN, a.chan);
            chan = a.chan;
        }
        if a.num != num {
            push_word(&mut out, codes::NUM, a.num);
            num = a.num;
        }
        if let Some(aux) = &a.aux {
            if aux.len() > 0x03FF {
                return Err(WfdbError::Unencodable(format!("annotation {i}: aux payload of {} bytes", aux.len())));
            }
            push_word(&mut out, codes::AUX, aux.len() as u16);
            out.extend_from_slice(aux);
            if aux.len() % 2 == 1 {
                out.push(0);
            }
        }
    }
    out.extend_from_slice(&[0, 0]);
    Ok(out)
}
