//! Stage orchestration over a data directory and an output directory.
//!
//! Each stage writes its artifacts under `output_dir/<stage>/` and finishes
//! by writing a `STAMP` file holding the config hash. A stage refuses to
//! run unless every upstream stamp exists and carries the current hash.

pub mod config;

pub use config::{ConfigError, PipelineConfig, SynthSettings, KEYS};

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::beatgrid::{BeatgridError, PreparedRecord, INPUT_SIZE};
use crate::datasets::{
    assemble_finetune, build_common_pool, generate_set, select_representative_s, synth_cohort, write_manifest,
    BeatList, BeatRef, CommonPool, DatasetError, Split, DS1, DS2,
};
use crate::evalkit::{evaluate_ds2, pca_export, Ds2Report, EvalError, RecordPredictions};
use crate::gan::{
    classify_source, finetune, train_gan, write_telemetry_csv, Discriminator, GanError, Generator, MatrixSet,
    MatrixSource, Prediction, TelemetryRow,
};
use crate::normpool::{estimate_normals, NormpoolError};
use crate::tensornet::{Checkpoint, Mode, NetError, Rng};
use crate::wfdb::{list_records, read_record, write_record, AamiClass, WfdbError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage {stage} needs {artifact}; run `{needs}` first")]
    MissingArtifact {
        stage: &'static str,
        needs: &'static str,
        artifact: PathBuf,
    },
    #[error("{artifact} was written under config {found}, current config is {expected}")]
    ConfigMismatch {
        artifact: PathBuf,
        expected: String,
        found: String,
    },
    #[error("no {0} records in the data directory")]
    NoRecords(&'static str),
    #[error("{path}: {reason}")]
    BadArtifact { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Wfdb(#[from] WfdbError),
    #[error(transparent)]
    Beatgrid(#[from] BeatgridError),
    #[error(transparent)]
    Normpool(#[from] NormpoolError),
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl PipelineError {
    /// Stable identifier for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "ConfigError",
            Self::MissingArtifact { .. } => "MissingArtifact",
            Self::ConfigMismatch { .. } => "ConfigMismatch",
            Self::NoRecords(_) => "NoRecords",
            Self::BadArtifact { .. } => "BadArtifact",
            Self::Io { .. } => "IoError",
            Self::Wfdb(_) => "WfdbError",
            Self::Beatgrid(_) => "BeatgridError",
            Self::Normpool(_) => "NormpoolError",
            Self::Gan(_) => "GanError",
            Self::Net(_) => "NetError",
            Self::Dataset(_) => "DatasetError",
            Self::Eval(_) => "EvalError",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ingest,
    Segment,
    EstimateNormals,
    SelectS,
    BuildPool,
    TrainGan,
    Generate,
    Finetune,
    Classify,
    Evaluate,
}

impl Stage {
    /// Execution order of `run-all`.
    pub const ALL: [Stage; 10] = [
        Self::Ingest,
        Self::Segment,
        Self::EstimateNormals,
        Self::SelectS,
        Self::BuildPool,
        Self::TrainGan,
        Self::Generate,
        Self::Finetune,
        Self::Classify,
        Self::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ingest => "ingest",
            Self::Segment => "segment",
            Self::EstimateNormals => "estimate-normals",
            Self::SelectS => "select-s",
            Self::BuildPool => "build-pool",
            Self::TrainGan => "train-gan",
            Self::Generate => "generate",
            Self::Finetune => "finetune",
            Self::Classify => "classify",
            Self::Evaluate => "evaluate",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    fn dir_name(self) -> &'static str {
        match self {
            Self::Ingest => "ingest",
            Self::Segment => "segment",
            Self::EstimateNormals => "normals",
            Self::SelectS => "select_s",
            Self::BuildPool => "pool",
            Self::TrainGan => "gan",
            Self::Generate => "generated",
            Self::Finetune => "finetune",
            Self::Classify => "classify",
            Self::Evaluate => "evaluate",
        }
    }

    /// Direct prerequisites.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Self::Ingest => &[],
            Self::Segment => &[Self::Ingest],
            Self::EstimateNormals | Self::SelectS => &[Self::Segment],
            Self::BuildPool => &[Self::SelectS],
            Self::TrainGan => &[Self::BuildPool],
            Self::Generate => &[Self::TrainGan],
            Self::Finetune => &[Self::BuildPool, Self::Generate, Self::EstimateNormals],
            Self::Classify => &[Self::Finetune],
            Self::Evaluate => &[Self::Classify],
        }
    }

    /// Every upstream stage, each listed once.
    pub fn ancestors(self) -> Vec<Stage> {
        let mut out: Vec<Stage> = Vec::new();
        let mut stack = self.requires().to_vec();
        while let Some(s) = stack.pop() {
            if !out.contains(&s) {
                out.push(s);
                stack.extend_from_slice(s.requires());
            }
        }
        out
    }
}

const STAMP: &str = "STAMP";

/// Seeds of independent random streams derived from the pipeline seed.
fn derived_seed(seed: u64, stream: u64) -> u64 {
    Rng::seed(seed).fork(stream).next_u64()
}

mod streams {
    pub const SELECT: u64 = 1;
    pub const GAN: u64 = 2;
    pub const GENERATE: u64 = 3;
    pub const FINETUNE_SET: u64 = 4;
    pub const FINETUNE: u64 = 5;
    pub const SYNTH: u64 = 6;
}

/// Outcome of one fine-tuned subject.
#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneSummary {
    pub record_id: String,
    pub samples: usize,
    pub epochs: usize,
    pub stop: String,
    pub final_accuracy: f64,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    hash: String,
}

struct Records {
    records: Vec<PreparedRecord>,
}

impl Records {
    fn index_of(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id() == id)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    f.flush().map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Data rows of one of our own CSV files, header skipped.
fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, PipelineError> {
    Ok(read_text(path)?
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect())
}

fn field<T: std::str::FromStr>(path: &Path, row: &[String], i: usize) -> Result<T, PipelineError> {
    row.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| PipelineError::BadArtifact {
        path: path.to_path_buf(),
        reason: format!("bad field {i} in row {}", row.join(",")),
    })
}

fn with_io<T>(path: &Path, r: std::io::Result<T>) -> Result<T, PipelineError> {
    r.map_err(io_err(path))
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        let hash = config.hash();
        Self { config, hash }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.config.output_dir.join(stage.dir_name())
    }

    fn path(&self, stage: Stage, file: &str) -> PathBuf {
        self.stage_dir(stage).join(file)
    }

    /// Checks that every upstream stamp exists and matches the config.
    pub fn check_prerequisites(&self, stage: Stage) -> Result<(), PipelineError> {
        for up in stage.ancestors() {
            let stamp = self.path(up, STAMP);
            if !stamp.exists() {
                return Err(PipelineError::MissingArtifact {
                    stage: stage.name(),
                    needs: up.name(),
                    artifact: stamp,
                });
            }
            let text = read_text(&stamp)?;
            let found = text
                .lines()
                .find_map(|l| l.strip_prefix("config_hash = "))
                .unwrap_or("")
                .to_string();
            if found != self.hash {
                return Err(PipelineError::ConfigMismatch {
                    artifact: stamp,
                    expected: self.hash.clone(),
                    found,
                });
            }
        }
        Ok(())
    }

    pub fn run(&self, stage: Stage) -> Result<(), PipelineError> {
        self.check_prerequisites(stage)?;
        let dir = self.stage_dir(stage);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let stamp = dir.join(STAMP);
        if stamp.exists() {
            fs::remove_file(&stamp).map_err(io_err(&stamp))?;
        }
        log::info!("stage {}", stage.name());
        match stage {
            Stage::Ingest => self.ingest()?,
            Stage::Segment => self.segment()?,
            Stage::EstimateNormals => self.estimate()?,
            Stage::SelectS => self.select_s()?,
            Stage::BuildPool => self.build_pool()?,
            Stage::TrainGan => self.train_gan()?,
            Stage::Generate => self.generate()?,
            Stage::Finetune => {
                self.finetune()?;
            }
            Stage::Classify => self.classify()?,
            Stage::Evaluate => {
                self.evaluate()?;
            }
        }
        write_text(&stamp, &format!("stage = {}\nconfig_hash = {}\n", stage.name(), self.hash))?;
        write_text(&self.config.output_dir.join("config.txt"), &self.config.render())
    }

    /// Runs every stage in order and returns the evaluation report.
    pub fn run_all(&self) -> Result<Ds2Report, PipelineError> {
        for stage in Stage::ALL {
            self.run(stage)?;
        }
        self.read_report()
    }

    /// Writes the synthetic cohort into `data_dir`.
    pub fn synth(&self) -> Result<Vec<PathBuf>, PipelineError> {
        let cohort = synth_cohort(&self.config.synth.cohort(), derived_seed(self.config.seed, streams::SYNTH))?;
        let dir = &self.config.data_dir;
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut written = Vec::new();
        let mut truth = create(&dir.join("synth_truth.csv"))?;
        with_io(dir, writeln!(truth, "record_id,beat_index,class,s_kind"))?;
        for r in &cohort.records {
            written.push(write_record(dir, &r.record)?);
            for (i, (a, k)) in r.record.annotations.iter().zip(&r.s_kinds).enumerate() {
                let kind = match k {
                    Some(crate::datasets::SKind::Distinct) => "distinct",
                    Some(crate::datasets::SKind::NearNormal) => "near_normal",
                    None => "",
                };
                with_io(dir, writeln!(truth, "{},{},{},{}", r.record.name(), i, a.beat_class, kind))?;
            }
        }
        with_io(dir, truth.flush())?;
        Ok(written)
    }

    fn load(&self, split: Split) -> Result<Records, PipelineError> {
        let present = list_records(&self.config.data_dir)?;
        let ids: &[&str] = match split {
            Split::Ds1 => &DS1,
            Split::Ds2 => &DS2,
            _ => &[],
        };
        let mut records = Vec::new();
        for id in ids {
            if present.iter().any(|p| p == id) {
                let rec = read_record(&self.config.data_dir, id)?;
                records.push(PreparedRecord::new(&rec, self.config.channel_index)?);
            }
        }
        if records.is_empty() {
            return Err(PipelineError::NoRecords(split.name()));
        }
        Ok(Records { records })
    }

    fn ingest(&self) -> Result<(), PipelineError> {
        let dir = &self.config.data_dir;
        let names = list_records(dir)?;
        let path = self.path(Stage::Ingest, "records.csv");
        let mut out = create(&path)?;
        with_io(&path, writeln!(out, "record_id,split,samples,beats,n,s,v,f,q"))?;
        let (mut ds1, mut ds2) = (0, 0);
        for name in &names {
            let rec = read_record(dir, name)?;
            let split = Split::of(name);
            match split {
                Split::Ds1 => ds1 += 1,
                Split::Ds2 => ds2 += 1,
                _ => {}
            }
            let c = rec.class_counts();
            with_io(
                &path,
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    name,
                    split.name(),
                    rec.header.num_samples,
                    rec.annotations.len(),
                    c[0],
                    c[1],
                    c[2],
                    c[3],
                    c[4]
                ),
            )?;
        }
        with_io(&path, out.flush())?;
        if ds1 == 0 {
            return Err(PipelineError::NoRecords("DS1"));
        }
        if ds2 == 0 {
            return Err(PipelineError::NoRecords("DS2"));
        }
        log::info!("ingested {} records ({ds1} DS1, {ds2} DS2)", names.len());
        Ok(())
    }

    fn segment(&self) -> Result<(), PipelineError> {
        let path = self.path(Stage::Segment, "segments.csv");
        let mut out = create(&path)?;
        with_io(&path, writeln!(out, "record_id,split,seg_len,beats"))?;
        let beats_path = self.path(Stage::Segment, "beats.csv");
        let mut beats = create(&beats_path)?;
        with_io(&beats_path, writeln!(beats, "record_id,beat_index,center,class"))?;
        for split in [Split::Ds1, Split::Ds2] {
            for r in self.load(split)?.records {
                with_io(&path, writeln!(out, "{},{},{},{}", r.id(), split.name(), r.plan.seg_len, r.plan.len()))?;
                for (i, (c, l)) in r.plan.centers.iter().zip(&r.plan.labels).enumerate() {
                    with_io(&beats_path, writeln!(beats, "{},{},{},{}", r.id(), i, c, l))?;
                }
            }
        }
        with_io(&path, out.flush())?;
        with_io(&beats_path, beats.flush())
    }

    fn estimate(&self) -> Result<(), PipelineError> {
        let ds2 = self.load(Split::Ds2)?;
        let path = self.path(Stage::EstimateNormals, "summary.csv");
        let mut summary = create(&path)?;
        with_io(&path, writeln!(summary, "record_id,pool_size,passes,correct,incorrect"))?;
        for r in &ds2.records {
            let pool = estimate_normals(r.id(), &r.signal, r.plan.layout(), &self.config.estimator)?;
            let p = self.path(Stage::EstimateNormals, &format!("{}.csv", r.id()));
            let mut f = create(&p)?;
            with_io(&p, pool.write_csv(&mut f))?;
            with_io(&p, f.flush())?;
            // labels are read only to report purity
            let purity = pool.purity(&r.plan.labels);
            with_io(
                &path,
                writeln!(summary, "{},{},{},{},{}", r.id(), pool.len(), pool.passes, purity.correct, purity.incorrect),
            )?;
            log::info!("{}: {} normal beats estimated", r.id(), pool.len());
        }
        with_io(&path, summary.flush())
    }

    fn read_normals(&self, record_id: &str) -> Result<Vec<usize>, PipelineError> {
        let p = self.path(Stage::EstimateNormals, &format!("{record_id}.csv"));
        csv_rows(&p)?.iter().map(|row| field(&p, row, 0)).collect()
    }

    fn select_s(&self) -> Result<(), PipelineError> {
        let ds1 = self.load(Split::Ds1)?;
        let mut cfg = self.config.selection.clone();
        cfg.seed = derived_seed(self.config.seed, streams::SELECT);
        let result = select_representative_s(&ds1.records, &cfg)?;
        let scores: HashMap<BeatRef, (f64, usize)> =
            result.ranking.iter().map(|s| (s.beat, (s.mean_credit, s.draws))).collect();
        let path = self.path(Stage::SelectS, "selected.csv");
        let mut out = create(&path)?;
        with_io(&path, writeln!(out, "rank,record_id,beat_index,mean_credit,draws"))?;
        for (rank, b) in result.selected.iter().enumerate() {
            let (credit, draws) = scores.get(b).copied().map_or((String::new(), 0), |(c, d)| (format!("{c:.6}"), d));
            let id = ds1.records[b.record].id();
            with_io(&path, writeln!(out, "{},{},{},{},{}", rank + 1, id, b.beat, credit, draws))?;
        }
        with_io(&path, out.flush())?;
        let rp = self.path(Stage::SelectS, "repetitions.csv");
        let mut reps = create(&rp)?;
        with_io(&rp, writeln!(reps, "repetition,n_accuracy"))?;
        for (i, a) in result.repetition_accuracy.iter().enumerate() {
            with_io(&rp, writeln!(reps, "{i},{a:.6}"))?;
        }
        with_io(&rp, reps.flush())
    }

    fn read_selected(&self, ds1: &Records) -> Result<Vec<BeatRef>, PipelineError> {
        let p = self.path(Stage::SelectS, "selected.csv");
        csv_rows(&p)?
            .iter()
            .map(|row| {
                let id: String = field(&p, row, 1)?;
                let record = ds1.index_of(&id).ok_or_else(|| PipelineError::BadArtifact {
                    path: p.clone(),
                    reason: format!("record {id} is not in the data directory"),
                })?;
                Ok(BeatRef {
                    record,
                    beat: field(&p, row, 2)?,
                })
            })
            .collect()
    }

    fn pool<'a>(&self, ds1: &'a Records) -> Result<CommonPool<'a>, PipelineError> {
        let selected = self.read_selected(ds1)?;
        Ok(build_common_pool(&ds1.records, &selected)?)
    }

    fn build_pool(&self) -> Result<(), PipelineError> {
        let ds1 = self.load(Split::Ds1)?;
        let pool = self.pool(&ds1)?;
        let p = self.path(Stage::BuildPool, "manifest.csv");
        let mut f = create(&p)?;
        with_io(&p, write_manifest(&pool.manifest(), &mut f))?;
        with_io(&p, f.flush())?;
        let counts: String = AamiClass::TRAINABLE
            .iter()
            .map(|&c| format!("{c},{}\n", pool.count(c)))
            .collect();
        write_text(&self.path(Stage::BuildPool, "counts.csv"), &format!("class,count\n{counts}"))
    }

    fn train_gan(&self) -> Result<(), PipelineError> {
        let ds1 = self.load(Split::Ds1)?;
        let pool = self.pool(&ds1)?;
        let mut cfg = self.config.gan.clone();
        cfg.seed = derived_seed(self.config.seed, streams::GAN);
        let run = train_gan(&pool, &cfg)?;
        run.generator.checkpoint()?.write(&self.path(Stage::TrainGan, "generator.ck"))?;
        run.discriminator.checkpoint()?.write(&self.path(Stage::TrainGan, "discriminator.ck"))?;
        self.write_telemetry(&run.telemetry)
    }

    fn write_telemetry(&self, rows: &[TelemetryRow]) -> Result<(), PipelineError> {
        let p = self.path(Stage::TrainGan, "telemetry.csv");
        let mut f = create(&p)?;
        with_io(&p, write_telemetry_csv(rows, &mut f))?;
        with_io(&p, f.flush())
    }

    fn generate(&self) -> Result<(), PipelineError> {
        let mut g = Generator::from_checkpoint(&Checkpoint::read(&self.path(Stage::TrainGan, "generator.ck"))?)?;
        let per_class = self.config.finetune_set.generated_per_class;
        let set = generate_set(&mut g, per_class, derived_seed(self.config.seed, streams::GENERATE))?;
        let mut ck = Checkpoint::new();
        let mm = INPUT_SIZE * INPUT_SIZE;
        let mut values = Vec::with_capacity(set.len() * mm);
        for i in 0..set.len() {
            values.extend_from_slice(set.matrix(i));
        }
        ck.push("samples", vec![set.len(), INPUT_SIZE, INPUT_SIZE], values)?;
        ck.push("labels", vec![set.len()], set.labels().iter().map(|&l| l as f64).collect())?;
        ck.write(&self.path(Stage::Generate, "samples.ck"))?;
        if per_class > 0 {
            self.export_pca(&set)?;
        }
        Ok(())
    }

    /// 2-D projection of GAN discriminator features for real pool beats and
    /// generated beats (up to 100 of each per class).
    fn export_pca(&self, generated: &MatrixSet) -> Result<(), PipelineError> {
        let ds1 = self.load(Split::Ds1)?;
        let pool = self.pool(&ds1)?;
        let mut d = Discriminator::from_checkpoint(&Checkpoint::read(&self.path(Stage::TrainGan, "discriminator.ck"))?)?;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut rng = Rng::seed(derived_seed(self.config.seed, streams::GENERATE) ^ 1);
        for class in AamiClass::TRAINABLE {
            let real: Vec<usize> = (0..pool.len()).filter(|&i| pool.label(i) == class.index()).collect();
            let pick: Vec<usize> = rng.sample_indices(real.len(), real.len().min(100)).into_iter().map(|k| real[k]).collect();
            let fake: Vec<usize> = (0..generated.len())
                .filter(|&i| generated.label(i) == class.index())
                .take(100)
                .collect();
            for (source, idx, tag) in [(&pool as &dyn MatrixSource, pick, "real"), (generated as &dyn MatrixSource, fake, "generated")] {
                for chunk in idx.chunks(64) {
                    let out = d.forward(&source.batch(chunk), Mode::Infer, &mut rng)?;
                    for k in 0..chunk.len() {
                        features.push(out.features.item(k).to_vec());
                        labels.push(format!("{tag}_{class}"));
                    }
                }
            }
        }
        if features.len() < 3 {
            return Ok(());
        }
        let pca = pca_export(&features)?;
        let p = self.path(Stage::Generate, "features_pca.csv");
        let mut f = create(&p)?;
        with_io(&p, pca.write_csv(&labels, &mut f))?;
        with_io(&p, f.flush())
    }

    fn read_generated(&self) -> Result<MatrixSet, PipelineError> {
        let p = self.path(Stage::Generate, "samples.ck");
        let ck = Checkpoint::read(&p)?;
        let (shape, labels) = ck.get("labels").ok_or_else(|| PipelineError::BadArtifact {
            path: p.clone(),
            reason: "no labels".into(),
        })?;
        let n = shape[0];
        let values = ck.array("samples", &[n, INPUT_SIZE, INPUT_SIZE])?;
        let mm = INPUT_SIZE * INPUT_SIZE;
        let mut set = MatrixSet::new();
        for (i, &l) in labels.iter().enumerate() {
            set.push(&values[i * mm..(i + 1) * mm], l as usize);
        }
        Ok(set)
    }

    fn finetune(&self) -> Result<Vec<FinetuneSummary>, PipelineError> {
        let ds1 = self.load(Split::Ds1)?;
        let ds2 = self.load(Split::Ds2)?;
        let pool = self.pool(&ds1)?;
        let generated = self.read_generated()?;
        let base = Checkpoint::read(&self.path(Stage::TrainGan, "discriminator.ck"))?;
        let mut summaries = Vec::new();
        for (k, subject) in ds2.records.iter().enumerate() {
            let normals = self.read_normals(subject.id())?;
            let mut set_cfg = self.config.finetune_set.clone();
            set_cfg.seed = derived_seed(self.config.seed, streams::FINETUNE_SET) ^ k as u64;
            let set = assemble_finetune(&pool, &generated, subject, &normals, &set_cfg)?;
            let mp = self.path(Stage::Finetune, &format!("{}_manifest.csv", subject.id()));
            let mut mf = create(&mp)?;
            with_io(&mp, write_manifest(&set.manifest(), &mut mf))?;
            with_io(&mp, mf.flush())?;

            let mut d = Discriminator::from_checkpoint(&base)?;
            let mut cfg = self.config.finetune.clone();
            cfg.seed = derived_seed(self.config.seed, streams::FINETUNE) ^ k as u64;
            let report = finetune(&mut d, &set, &cfg)?;
            d.checkpoint()?.write(&self.path(Stage::Finetune, &format!("{}.ck", subject.id())))?;
            let summary = FinetuneSummary {
                record_id: subject.id().to_string(),
                samples: set.len(),
                epochs: report.epochs(),
                stop: format!("{:?}", report.stop),
                final_accuracy: report.accuracies.last().copied().unwrap_or(0.0),
            };
            log::info!(
                "{}: fine-tuned on {} samples, {} epochs, accuracy {:.4}",
                summary.record_id,
                summary.samples,
                summary.epochs,
                summary.final_accuracy
            );
            summaries.push(summary);
        }
        let p = self.path(Stage::Finetune, "report.csv");
        let mut f = create(&p)?;
        with_io(&p, writeln!(f, "record_id,samples,epochs,stop,final_accuracy"))?;
        for s in &summaries {
            with_io(&p, writeln!(f, "{},{},{},{},{:.6}", s.record_id, s.samples, s.epochs, s.stop, s.final_accuracy))?;
        }
        with_io(&p, f.flush())?;
        Ok(summaries)
    }

    fn classify(&self) -> Result<(), PipelineError> {
        let ds2 = self.load(Split::Ds2)?;
        for (k, r) in ds2.records.iter().enumerate() {
            let mut d = Discriminator::from_checkpoint(&Checkpoint::read(&self.path(Stage::Finetune, &format!("{}.ck", r.id())))?)?;
            let beats = BeatList::whole_record(&ds2.records, k);
            let preds = classify_source(&mut d, &beats, 64)?;
            let p = self.path(Stage::Classify, &format!("{}.csv", r.id()));
            let mut f = create(&p)?;
            with_io(&p, writeln!(f, "beat_index,truth,predicted"))?;
            for (i, ((pred, _), truth)) in preds.iter().zip(&r.plan.labels).enumerate() {
                with_io(&p, writeln!(f, "{},{},{}", i, truth, pred.symbol()))?;
            }
            with_io(&p, f.flush())?;
        }
        Ok(())
    }

    fn read_predictions(&self) -> Result<Vec<RecordPredictions>, PipelineError> {
        let mut out = Vec::new();
        for id in DS2 {
            let p = self.path(Stage::Classify, &format!("{id}.csv"));
            if !p.exists() {
                continue;
            }
            let mut truth = Vec::new();
            let mut predicted = Vec::new();
            for row in csv_rows(&p)? {
                let t: char = field(&p, &row, 1)?;
                let q: char = field(&p, &row, 2)?;
                let bad = || PipelineError::BadArtifact {
                    path: p.clone(),
                    reason: format!("unknown class in row {}", row.join(",")),
                };
                truth.push(AamiClass::from_symbol(t).ok_or_else(bad)?);
                predicted.push(if q == 'G' {
                    Prediction::Generated
                } else {
                    Prediction::Class(AamiClass::from_symbol(q).ok_or_else(bad)?)
                });
            }
            out.push(RecordPredictions {
                record_id: id.to_string(),
                truth,
                predicted,
            });
        }
        Ok(out)
    }

    fn evaluate(&self) -> Result<Ds2Report, PipelineError> {
        let report = evaluate_ds2(&self.read_predictions()?)?;
        write_text(&self.path(Stage::Evaluate, "report.txt"), &report.render_text())?;
        write_text(&self.path(Stage::Evaluate, "confusion.txt"), &report.render_confusion())?;
        let p = self.path(Stage::Evaluate, "report.csv");
        let mut f = create(&p)?;
        with_io(&p, report.write_csv(&mut f))?;
        with_io(&p, f.flush())?;
        Ok(report)
    }

    /// Recomputes the report from the classify artifacts.
    pub fn read_report(&self) -> Result<Ds2Report, PipelineError> {
        self.check_prerequisites(Stage::Evaluate)?;
        Ok(evaluate_ds2(&self.read_predictions()?)?)
    }
}
