use std::fmt::Write as _;

use super::WfdbError;

/// Per-signal line of a header file.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format_code: u32,
    /// ADC units per millivolt.
    pub gain: f64,
    pub adc_resolution: u32,
    pub adc_zero: i32,
    pub initial_value: i32,
    pub checksum: i32,
    pub block_size: i32,
    pub description: String,
}

impl SignalSpec {
    pub fn to_mv(&self, adc: i16) -> f64 {
        (adc as f64 - self.adc_zero as f64) / self.gain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub num_signals: usize,
    pub sampling_rate_hz: f64,
    pub num_samples: usize,
    pub signals: Vec<SignalSpec>,
}

const DEFAULT_GAIN: f64 = 200.0;

/// Parses the minimal WFDB header subset: a record line followed by one line
/// per signal. Comment lines (`#`) and blank lines are skipped.
pub fn parse_header(bytes: &[u8]) -> Result<RecordHeader, WfdbError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| WfdbError::MalformedHeader("header is not valid UTF-8".into()))?;
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let record_line = lines
        .next()
        .ok_or_else(|| WfdbError::MalformedHeader("empty header".into()))?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err(WfdbError::MalformedHeader(format!(
            "record line needs name, signal count, rate and length: {record_line:?}"
        )));
    }
    let record_name = fields[0].split('/').next().unwrap_or(fields[0]).to_string();
    if fields[0].contains('/') {
        return Err(WfdbError::MalformedHeader("multi-segment records are not supported".into()));
    }
    let num_signals: usize = parse_num(fields[1], "signal count")?;
    if num_signals == 0 {
        return Err(WfdbError::MalformedHeader("record has no signals".into()));
    }
    // "360", "360/360" (counter frequency) and "360(0)" (base counter) all occur.
    let rate_token = fields[2].split(['/', '(']).next().unwrap_or_default();
    let sampling_rate_hz: f64 = parse_num(rate_token, "sampling rate")?;
    if !(sampling_rate_hz > 0.0) || !sampling_rate_hz.is_finite() {
        return Err(WfdbError::MalformedHeader(format!("sampling rate must be positive, got {sampling_rate_hz}")));
    }
    let num_samples: usize = parse_num(fields[3], "sample count")?;

    let mut signals = Vec::with_capacity(num_signals);
    for i in 0..num_signals {
        let line = lines
            .next()
            .ok_or_else(|| WfdbError::MalformedHeader(format!("missing line for signal {i}")))?;
        signals.push(parse_signal_line(line)?);
    }

    Ok(RecordHeader {
        record_name,
        num_signals,
        sampling_rate_hz,
        num_samples,
        signals,
    })
}

fn parse_signal_line(line: &str) -> Result<SignalSpec, WfdbError> {
    let mut parts = line.splitn(9, char::is_whitespace).filter(|s| !s.is_empty());
    let file_name = parts
        .next()
        .ok_or_else(|| WfdbError::MalformedHeader("empty signal line".into()))?
        .to_string();
    let format_token = parts
        .next()
        .ok_or_else(|| WfdbError::MalformedHeader(format!("signal line without format: {line:?}")))?;
    // Format may carry modifiers such as "212x2", "212:128" or "212+0".
    let digits: String = format_token.chars().take_while(char::is_ascii_digit).collect();
    let format_code: u32 = parse_num(&digits, "format code")?;
    if format_code != 212 {
        return Err(WfdbError::UnsupportedFormat(format_code));
    }

    let gain = match parts.next() {
        Some(tok) => {
            // "200", "200/mV", "200(1024)/mV": baseline in parentheses and units are ignored.
            let g = tok.split(['/', '(']).next().unwrap_or_default();
            let g: f64 = parse_num(g, "gain")?;
            if g == 0.0 {
                DEFAULT_GAIN
            } else {
                g
            }
        }
        None => DEFAULT_GAIN,
    };
    let adc_resolution = parts.next().map(|t| parse_num(t, "ADC resolution")).transpose()?.unwrap_or(12);
    let adc_zero: i32 = parts.next().map(|t| parse_num(t, "ADC zero")).transpose()?.unwrap_or(0);
    let initial_value = parts
        .next()
        .map(|t| parse_num(t, "initial value"))
        .transpose()?
        .unwrap_or(adc_zero);
    let checksum = parts.next().map(|t| parse_num(t, "checksum")).transpose()?.unwrap_or(0);
    let block_size = parts.next().map(|t| parse_num(t, "block size")).transpose()?.unwrap_or(0);
    let description = parts.next().unwrap_or_default().trim().to_string();

    Ok(SignalSpec {
        file_name,
        format_code,
        gain,
        adc_resolution,
        adc_zero,
        initial_value,
        checksum,
        block_size,
        description,
    })
}

fn parse_num<T: std::str::FromStr>(token: &str, what: &str) -> Result<T, WfdbError> {
    token
        .parse()
        .map_err(|_| WfdbError::MalformedHeader(format!("non-numeric {what}: {token:?}")))
}

/// Renders a header in the same subset [`parse_header`] accepts.
pub fn format_header(header: &RecordHeader) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {}",
        header.record_name,
        header.num_signals,
        fmt_f64(header.sampling_rate_hz),
        header.num_samples
    );
    for s in &header.signals {
        let _ = write!(
            out,
            "{} {} {} {} {} {} {} {}",
            s.file_name,
            s.format_code,
            fmt_f64(s.gain),
            s.adc_resolution,
            s.adc_zero,
            s.initial_value,
            s.checksum,
            s.block_size
        );
        if !s.description.is_empty() {
            let _ = write!(out, " {}", s.description);
        }
        out.push('\n');
    }
    out
}

fn fmt_f64(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}
