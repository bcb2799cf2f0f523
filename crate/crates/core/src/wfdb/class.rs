use std::fmt;

use super::WfdbError;

/// AAMI beat classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AamiClass {
    N,
    S,
    V,
    F,
    Q,
}

impl AamiClass {
    pub const ALL: [AamiClass; 5] = [Self::N, Self::S, Self::V, Self::F, Self::Q];
    /// Classes the networks are trained on, in label-index order.
    pub const TRAINABLE: [AamiClass; 4] = [Self::N, Self::S, Self::V, Self::F];

    pub fn index(self) -> usize {
        match self {
            Self::N => 0,
            Self::S => 1,
            Self::V => 2,
            Self::F => 3,
            Self::Q => 4,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn symbol(self) -> char {
        match self {
            Self::N => 'N',
            Self::S => 'S',
            Self::V => 'V',
            Self::F => 'F',
            Self::Q => 'Q',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.symbol() == c)
    }
}

impl fmt::Display for AamiClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// MIT annotation type codes (the `ecgcodes.h` numbering).
pub mod codes {
    pub const NOTQRS: u8 = 0;
    pub const NORMAL: u8 = 1;
    pub const LBBB: u8 = 2;
    pub const RBBB: u8 = 3;
    pub const ABERR: u8 = 4;
    pub const PVC: u8 = 5;
    pub const FUSION: u8 = 6;
    pub const NPC: u8 = 7;
    pub const APC: u8 = 8;
    pub const SVPB: u8 = 9;
    pub const VESC: u8 = 10;
    pub const NESC: u8 = 11;
    pub const PACE: u8 = 12;
    pub const UNKNOWN: u8 = 13;
    pub const NOISE: u8 = 14;
    pub const ARFCT: u8 = 16;
    pub const STCH: u8 = 18;
    pub const TCH: u8 = 19;
    pub const SYSTOLE: u8 = 20;
    pub const DIASTOLE: u8 = 21;
    pub const NOTE: u8 = 22;
    pub const MEASURE: u8 = 23;
    pub const PWAVE: u8 = 24;
    pub const BBB: u8 = 25;
    pub const PACESP: u8 = 26;
    pub const TWAVE: u8 = 27;
    pub const RHYTHM: u8 = 28;
    pub const UWAVE: u8 = 29;
    pub const LEARN: u8 = 30;
    pub const FLWAV: u8 = 31;
    pub const VFON: u8 = 32;
    pub const VFOFF: u8 = 33;
    pub const AESC: u8 = 34;
    pub const SVESC: u8 = 35;
    pub const LINK: u8 = 36;
    pub const NAPC: u8 = 37;
    pub const PFUS: u8 = 38;
    pub const WFON: u8 = 39;
    pub const WFOFF: u8 = 40;
    pub const RONT: u8 = 41;

    pub const SKIP: u8 = 59;
    pub const NUM: u8 = 60;
    pub const SUB: u8 = 61;
    pub const CHN: u8 = 62;
    pub const AUX: u8 = 63;

    /// Highest ordinary annotation code the reader accepts.
    pub const ACP_MAX: u8 = 41;
}

/// Beat codes grouped by AAMI class, with their MIT mnemonics.
pub const BEAT_TABLE: [(u8, char, AamiClass); 15] = [
    (codes::NORMAL, 'N', AamiClass::N),
    (codes::LBBB, 'L', AamiClass::N),
    (codes::RBBB, 'R', AamiClass::N),
    (codes::AESC, 'e', AamiClass::N),
    (codes::NESC, 'j', AamiClass::N),
    (codes::APC, 'A', AamiClass::S),
    (codes::ABERR, 'a', AamiClass::S),
    (codes::NPC, 'J', AamiClass::S),
    (codes::SVPB, 'S', AamiClass::S),
    (codes::PVC, 'V', AamiClass::V),
    (codes::VESC, 'E', AamiClass::V),
    (codes::FUSION, 'F', AamiClass::F),
    (codes::PACE, '/', AamiClass::Q),
    (codes::PFUS, 'f', AamiClass::Q),
    (codes::UNKNOWN, 'Q', AamiClass::Q),
];

/// Maps a raw MIT annotation code to its AAMI class.
///
/// Codes that are not beats (rhythm changes, noise, comments, ...) return
/// [`WfdbError::NonBeatCode`] so the caller can drop them.
pub fn map_class(raw_code: u8) -> Result<AamiClass, WfdbError> {
    BEAT_TABLE
        .iter()
        .find(|(code, _, _)| *code == raw_code)
        .map(|(_, _, class)| *class)
        .ok_or(WfdbError::NonBeatCode(raw_code))
}

/// MIT mnemonic for a beat code, if it is one of the mapped beat codes.
pub fn beat_mnemonic(raw_code: u8) -> Option<char> {
    BEAT_TABLE
        .iter()
        .find(|(code, _, _)| *code == raw_code)
        .map(|(_, c, _)| *c)
}

pub fn code_for_mnemonic(symbol: char) -> Option<u8> {
    BEAT_TABLE
        .iter()
        .find(|(_, c, _)| *c == symbol)
        .map(|(code, _, _)| *code)
}
