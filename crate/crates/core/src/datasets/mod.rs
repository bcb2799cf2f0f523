//! Dataset assembly: the inter-patient split, the common training pool,
//! representative S-beat selection, per-subject fine-tune sets, dataset
//! manifests, and a synthetic cohort for desk-scale runs.

mod finetune_set;
mod pool;
mod selection;
mod split;
pub mod synth;

pub use finetune_set::{assemble_finetune, generate_set, FinetuneSample, FinetuneSet, FinetuneSetConfig, SampleSource, Stratum};
pub use pool::{build_common_pool, BeatList, BeatRef, CommonPool, PoolEntry};
pub use selection::{select_representative_s, SScore, SelectionConfig, SelectionResult};
pub use split::{Provenance, Split, DS1, DS2, EXCLUDED};
pub use synth::{synth_cohort, SKind, SynthConfig, SynthRecord, SynthRecordSpec, SyntheticCohort};

use std::io::Write;

use crate::beatgrid::BeatgridError;
use crate::gan::GanError;
use crate::wfdb::AamiClass;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{found} training records contain S beats, {needed} required")]
    InsufficientSBearingRecords { found: usize, needed: usize },
    #[error("no S-free training record left to measure N accuracy on")]
    NoSelectionTestRecords,
    #[error("record {record_id} is in split {split}, only DS1 may be used for {role}")]
    SplitViolation {
        record_id: String,
        split: &'static str,
        role: &'static str,
    },
    #[error("beat {beat} of record {record} does not exist")]
    UnknownBeat { record: usize, beat: usize },
    #[error("selected beat {beat} of record {record} is labelled {class}, not S")]
    NotSupraventricular { record: usize, beat: usize, class: AamiClass },
    #[error("{needed} generated {class} samples requested, {got} available")]
    InsufficientGenerated { class: AamiClass, needed: usize, got: usize },
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Beatgrid(#[from] BeatgridError),
}

/// One line of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub record_id: String,
    pub beat_index: usize,
    pub class: AamiClass,
    pub split: &'static str,
    pub stratum: &'static str,
    pub provenance: Provenance,
}

pub fn write_manifest<W: Write>(rows: &[ManifestRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "record_id,beat_index,class,split,stratum,provenance")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.record_id,
            r.beat_index,
            r.class.symbol(),
            r.split,
            r.stratum,
            r.provenance.name()
        )?;
    }
    Ok(())
}
