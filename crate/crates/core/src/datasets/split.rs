/// Training records.
pub const DS1: [&str; 22] = [
    "101", "106", "108", "109", "112", "114", "115", "116", "118", "119", "122", "124", "201", "203", "205", "207",
    "208", "209", "215", "220", "223", "230",
];

/// Test records.
pub const DS2: [&str; 22] = [
    "100", "103", "105", "111", "113", "117", "121", "123", "200", "202", "210", "212", "213", "214", "219", "221",
    "222", "228", "231", "232", "233", "234",
];

/// Paced records, never used.
pub const EXCLUDED: [&str; 4] = ["102", "104", "107", "217"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Ds1,
    Ds2,
    Excluded,
    /// Not part of the inter-patient split at all.
    Unlisted,
}

impl Split {
    pub fn of(record_id: &str) -> Self {
        if DS1.contains(&record_id) {
            Self::Ds1
        } else if DS2.contains(&record_id) {
            Self::Ds2
        } else if EXCLUDED.contains(&record_id) {
            Self::Excluded
        } else {
            Self::Unlisted
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ds1 => "DS1",
            Self::Ds2 => "DS2",
            Self::Excluded => "excluded",
            Self::Unlisted => "unlisted",
        }
    }
}

/// Where a training sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Real,
    Generated,
    Estimated,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Generated => "generated",
            Self::Estimated => "estimated",
        }
    }
}
