//! ECG arrhythmia classification toolkit built around a conditional GAN
//! whose discriminator carries an auxiliary five-way classifier.
//!
//! The pipeline: WFDB records ([`wfdb`]) are cut into dual-beat coupling
//! matrices ([`beatgrid`]); patient-specific normal beats are estimated
//! without labels ([`normpool`]); a generator/discriminator pair
//! ([`gan`], on the small engine in [`tensornet`]) is trained on a common
//! pool of training-split beats ([`datasets`]); the discriminator is then
//! fine-tuned per subject and scored ([`evalkit`]). [`pipeline`] ties the
//! stages together behind a config file.

pub mod wfdb;
pub mod beatgrid;
pub mod normpool;
pub mod tensornet;
pub mod gan;
pub mod evalkit;
pub mod datasets;
pub mod pipeline;
