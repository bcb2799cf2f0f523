//! Format 212: two 12-bit two's-complement samples packed into three bytes,
//! channels interleaved sample by sample.

use super::WfdbError;

pub const SAMPLE_MIN: i16 = -2048;
pub const SAMPLE_MAX: i16 = 2047;

/// Number of bytes needed to store `total_samples` samples in format 212.
pub fn format212_len(total_samples: usize) -> usize {
    (total_samples * 3).div_ceil(2)
}

#[inline]
fn sign_extend12(v: u16) -> i16 {
    if v >= 2048 {
        v as i16 - 4096
    } else {
        v as i16
    }
}

/// Decodes `num_samples` frames of `num_signals` interleaved channels.
///
/// Returns one vector per channel.
pub fn decode_format212(bytes: &[u8], num_samples: usize, num_signals: usize) -> Result<Vec<Vec<i16>>, WfdbError> {
    let total = num_samples * num_signals;
    let needed = format212_len(total);
    if bytes.len() < needed {
        return Err(WfdbError::TruncatedSignal {
            needed,
            available: bytes.len(),
        });
    }
    let mut channels = vec![Vec::with_capacity(num_samples); num_signals];
    let mut emit = |k: usize, v: i16| channels[k % num_signals].push(v);

    let mut k = 0;
    let mut chunks = bytes[..needed].chunks(3);
    while k < total {
        let chunk = chunks.next().expect("length checked above");
        let b0 = chunk[0] as u16;
        let b1 = chunk[1] as u16;
        emit(k, sign_extend12(b0 | ((b1 & 0x0F) << 8)));
        k += 1;
        if k < total {
            let b2 = chunk[2] as u16;
            emit(k, sign_extend12(b2 | ((b1 & 0xF0) << 4)));
            k += 1;
        }
    }
    Ok(channels)
}

/// Packs channel data into format 212. All channels must have equal length.
pub fn encode_format212(channels: &[Vec<i16>]) -> Result<Vec<u8>, WfdbError> {
    let num_signals = channels.len();
    let num_samples = channels.first().map_or(0, Vec::len);
    if channels.iter().any(|c| c.len() != num_samples) {
        return Err(WfdbError::ChannelLengthMismatch);
    }
    let total = num_samples * num_signals;
    let mut out = Vec::with_capacity(format212_len(total));
    let sample = |k: usize| -> Result<u16, WfdbError> {
        let v = channels[k % num_signals][k / num_signals];
        if !(SAMPLE_MIN..=SAMPLE_MAX).contains(&v) {
            return Err(WfdbError::SampleOutOfRange(v as i32));
        }
        Ok((v as u16) & 0x0FFF)
    };
    let mut k = 0;
    while k < total {
        let a = sample(k)?;
        if k + 1 < total {
            let b = sample(k + 1)?;
            out.push((a & 0xFF) as u8);
            out.push((((a >> 8) & 0x0F) | ((b >> 4) & 0xF0)) as u8);
            out.push((b & 0xFF) as u8);
        } else {
            out.push((a & 0xFF) as u8);
            out.push(((a >> 8) & 0x0F) as u8);
        }
        k += 2;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_vectors() {
        assert_eq!(decode_format212(&[0x01, 0x00, 0x02], 1, 2).unwrap(), vec![vec![1], vec![2]]);
        assert_eq!(decode_format212(&[0xFF, 0x0F, 0x00], 1, 2).unwrap(), vec![vec![-1], vec![0]]);
        assert_eq!(decode_format212(&[0x00, 0x00, 0x00], 2, 1).unwrap(), vec![vec![0, 0]]);
    }

    #[test]
    fn high_nibble_belongs_to_second_sample() {
        // second sample = 0x02 | (0xF0 << 4) = 0xF02 -> -254
        assert_eq!(decode_format212(&[0x00, 0xF0, 0x02], 2, 1).unwrap(), vec![vec![0, -254]]);
    }

    #[test]
    fn truncated() {
        let err = decode_format212(&[0x00, 0x00], 2, 1).unwrap_err();
        assert!(matches!(err, WfdbError::TruncatedSignal { needed: 3, available: 2 }));
    }

    #[test]
    fn odd_total_uses_two_trailing_bytes() {
        let bytes = encode_format212(&[vec![5, -7, 2047]]).unwrap();
        assert_eq!(bytes.len(), 5);
        assert_eq!(decode_format212(&bytes, 3, 1).unwrap(), vec![vec![5, -7, 2047]]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(encode_format212(&[vec![4000]]), Err(WfdbError::SampleOutOfRange(4000))));
    }

    proptest! {
        #[test]
        fn decoded_values_are_12_bit(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
            let total = bytes.len() * 2 / 3;
            let ch = decode_format212(&bytes, total, 1).unwrap();
            prop_assert!(ch[0].iter().all(|v| (SAMPLE_MIN..=SAMPLE_MAX).contains(v)));
        }

        #[test]
        fn roundtrip(nsig in 1usize..4, data in proptest::collection::vec(SAMPLE_MIN..=SAMPLE_MAX, 0..200)) {
            let n = data.len() / nsig;
            let channels: Vec<Vec<i16>> = (0..nsig).map(|c| data[c * n..(c + 1) * n].to_vec()).collect();
            let bytes = encode_format212(&channels).unwrap();
            prop_assert_eq!(decode_format212(&bytes, n, nsig).unwrap(), channels);
        }
    }
}
