use crate::beatgrid::PreparedRecord;
use crate::gan::MatrixSource;
use crate::wfdb::AamiClass;

use super::{DatasetError, ManifestRow, Provenance, Split};

/// A beat addressed by its position in a record slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeatRef {
    pub record: usize,
    pub beat: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolEntry {
    pub beat: BeatRef,
    pub class: AamiClass,
}

/// Training beats shared by every subject's classifier: all N, V and F
/// beats of the training records plus the selected S beats. Q is never
/// included.
#[derive(Debug, Clone)]
pub struct CommonPool<'a> {
    records: &'a [PreparedRecord],
    entries: Vec<PoolEntry>,
}

pub(crate) fn require_ds1(records: &[PreparedRecord], role: &'static str) -> Result<(), DatasetError> {
    for r in records {
        let split = Split::of(r.id());
        if split != Split::Ds1 {
            return Err(DatasetError::SplitViolation {
                record_id: r.id().to_string(),
                split: split.name(),
                role,
            });
        }
    }
    Ok(())
}

pub fn build_common_pool<'a>(
    records: &'a [PreparedRecord],
    selected_s: &[BeatRef],
) -> Result<CommonPool<'a>, DatasetError> {
    require_ds1(records, "the common pool")?;
    let mut entries = Vec::new();
    for (ri, r) in records.iter().enumerate() {
        for (bi, &class) in r.plan.labels.iter().enumerate() {
            if matches!(class, AamiClass::N | AamiClass::V | AamiClass::F) {
                entries.push(PoolEntry {
                    beat: BeatRef { record: ri, beat: bi },
                    class,
                });
            }
        }
    }
    for &b in selected_s {
        let class = *records
            .get(b.record)
            .and_then(|r| r.plan.labels.get(b.beat))
            .ok_or(DatasetError::UnknownBeat {
                record: b.record,
                beat: b.beat,
            })?;
        if class != AamiClass::S {
            return Err(DatasetError::NotSupraventricular {
                record: b.record,
                beat: b.beat,
                class,
            });
        }
        entries.push(PoolEntry { beat: b, class });
    }
    let pool = CommonPool { records, entries };
    for class in AamiClass::TRAINABLE {
        if pool.count(class) == 0 {
            log::warn!("common pool has no {class} beats");
        }
    }
    Ok(pool)
}

impl<'a> CommonPool<'a> {
    pub fn records(&self) -> &'a [PreparedRecord] {
        self.records
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn count(&self, class: AamiClass) -> usize {
        self.entries.iter().filter(|e| e.class == class).count()
    }

    /// Positions in [`entries`](Self::entries) holding `class`.
    pub fn indices_of(&self, class: AamiClass) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.entries[i].class == class).collect()
    }

    pub fn record_id(&self, entry: usize) -> &str {
        self.records[self.entries[entry].beat.record].id()
    }

    pub fn manifest(&self) -> Vec<ManifestRow> {
        self.entries
            .iter()
            .map(|e| ManifestRow {
                record_id: self.records[e.beat.record].id().to_string(),
                beat_index: e.beat.beat,
                class: e.class,
                split: Split::Ds1.name(),
                stratum: if e.class == AamiClass::S { "selected_s" } else { "common" },
                provenance: Provenance::Real,
            })
            .collect()
    }
}

impl MatrixSource for CommonPool<'_> {
    fn len(&self) -> usize {
        self.entries.len()
    }

    fn label(&self, i: usize) -> usize {
        self.entries[i].class.index()
    }

    fn write_matrix(&self, i: usize, out: &mut [f64]) {
        let b = self.entries[i].beat;
        self.records[b.record].write_matrix(b.beat, out);
    }
}

/// Explicitly labelled beats drawn from a record slice.
#[derive(Debug, Clone)]
pub struct BeatList<'a> {
    records: &'a [PreparedRecord],
    pub beats: Vec<BeatRef>,
    pub labels: Vec<usize>,
}

impl<'a> BeatList<'a> {
    pub fn new(records: &'a [PreparedRecord]) -> Self {
        Self {
            records,
            beats: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, beat: BeatRef, label: usize) {
        self.beats.push(beat);
        self.labels.push(label);
    }

    /// Every beat of one record, labelled with its class index.
    pub fn whole_record(records: &'a [PreparedRecord], record: usize) -> Self {
        let mut list = Self::new(records);
        for (beat, c) in records[record].plan.labels.iter().enumerate() {
            list.push(BeatRef { record, beat }, c.index());
        }
        list
    }
}

impl MatrixSource for BeatList<'_> {
    fn len(&self) -> usize {
        self.beats.len()
    }

    fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    fn write_matrix(&self, i: usize, out: &mut [f64]) {
        let b = self.beats[i];
        self.records[b.record].write_matrix(b.beat, out);
    }
}
