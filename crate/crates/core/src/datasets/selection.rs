use std::collections::{HashMap, HashSet};

use crate::beatgrid::PreparedRecord;
use crate::gan::{argmax, Discriminator, MatrixSource};
use crate::tensornet::losses::cross_entropy;
use crate::tensornet::{Adam, Mode, Rng, Tensor, Want};
use crate::wfdb::AamiClass;

use super::pool::{require_ds1, BeatList, BeatRef};
use super::DatasetError;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub repetitions: usize,
    /// N beats drawn from the S-bearing records per repetition.
    pub n_draw: usize,
    /// S beats drawn per repetition.
    pub s_draw: usize,
    /// N beats from the S-free records used to score each repetition.
    pub n_test: usize,
    pub min_s_records: usize,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    /// Number of S beats returned.
    pub keep: usize,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            repetitions: 200,
            n_draw: 75,
            s_draw: 75,
            n_test: 100,
            min_s_records: 16,
            epochs: 30,
            batch: 32,
            learning_rate: 2e-4,
            keep: 400,
            seed: 0,
        }
    }
}

/// Mean credited N accuracy of one S beat. `draws == 0` marks an unseen
/// beat placed at neutral score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SScore {
    pub beat: BeatRef,
    pub mean_credit: f64,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected beats, best first.
    pub selected: Vec<BeatRef>,
    /// Every S beat that was drawn at least once, best first.
    pub ranking: Vec<SScore>,
    /// N accuracy of each repetition.
    pub repetition_accuracy: Vec<f64>,
}

fn beats_of(records: &[PreparedRecord], which: &[usize], class: AamiClass) -> Vec<BeatRef> {
    which
        .iter()
        .flat_map(|&record| {
            records[record]
                .plan
                .labels
                .iter()
                .enumerate()
                .filter(move |(_, &c)| c == class)
                .map(move |(beat, _)| BeatRef { record, beat })
        })
        .collect()
}

fn draw(beats: &[BeatRef], k: usize, rng: &mut Rng) -> Vec<BeatRef> {
    rng.sample_indices(beats.len(), k.min(beats.len()))
        .into_iter()
        .map(|i| beats[i])
        .collect()
}

/// Cross-entropy training of the class head only.
fn train_binary(d: &mut Discriminator, data: &BeatList, config: &SelectionConfig, rng: &mut Rng) -> Result<(), DatasetError> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        for idx in order.chunks(config.batch.max(1)) {
            let labels: Vec<usize> = idx.iter().map(|&i| data.label(i)).collect();
            let out = d.forward(&data.batch(idx), Mode::Train, rng).map_err(crate::gan::GanError::from)?;
            let (_, g) = cross_entropy(&out.probs, &labels).map_err(crate::gan::GanError::from)?;
            let gv = Tensor::zeros(out.validity.shape());
            d.backward(&g, &gv, Want::params()).map_err(crate::gan::GanError::from)?;
            d.step().map_err(crate::gan::GanError::from)?;
        }
    }
    Ok(())
}

fn n_accuracy(d: &mut Discriminator, data: &BeatList, batch: usize) -> Result<f64, DatasetError> {
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut correct = 0;
    let mut rng = Rng::seed(0);
    for part in idx.chunks(batch.max(1)) {
        let out = d.forward(&data.batch(part), Mode::Infer, &mut rng).map_err(crate::gan::GanError::from)?;
        correct += (0..part.len()).filter(|&k| argmax(out.probs.item(k)) == 0).count();
    }
    Ok(correct as f64 / data.len().max(1) as f64)
}

/// Ranks training-split S beats by how well N beats of unseen subjects are
/// recognised when they are used as S training examples.
///
/// Records containing S beats supply the training draws; the remaining
/// records supply N test beats. Only N labels of the test records are read.
pub fn select_representative_s(records: &[PreparedRecord], config: &SelectionConfig) -> Result<SelectionResult, DatasetError> {
    require_ds1(records, "S-beat selection")?;
    let (bearing, free): (Vec<usize>, Vec<usize>) =
        (0..records.len()).partition(|&r| records[r].plan.labels.contains(&AamiClass::S));
    if bearing.len() < config.min_s_records {
        return Err(DatasetError::InsufficientSBearingRecords {
            found: bearing.len(),
            needed: config.min_s_records,
        });
    }
    let train_n = beats_of(records, &bearing, AamiClass::N);
    let train_s = beats_of(records, &bearing, AamiClass::S);
    let test_n = beats_of(records, &free, AamiClass::N);
    if test_n.is_empty() {
        return Err(DatasetError::NoSelectionTestRecords);
    }

    let mut master = Rng::seed(config.seed);
    let mut credit: HashMap<BeatRef, (f64, usize)> = HashMap::new();
    let mut repetition_accuracy = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let mut rng = master.fork(rep as u64);
        let n = draw(&train_n, config.n_draw, &mut rng);
        let s = draw(&train_s, config.s_draw, &mut rng);
        let mut data = BeatList::new(records);
        n.iter().for_each(|&b| data.push(b, 0));
        s.iter().for_each(|&b| data.push(b, 1));
        let mut test = BeatList::new(records);
        draw(&test_n, config.n_test, &mut rng).into_iter().for_each(|b| test.push(b, 0));

        let mut d = Discriminator::with_classes(rng.next_u64(), 2);
        d.adam = Adam::new(config.learning_rate);
        train_binary(&mut d, &data, config, &mut rng)?;
        let acc = n_accuracy(&mut d, &test, config.batch.max(32))?;
        log::debug!("selection repetition {rep}: N accuracy {acc:.4}");
        repetition_accuracy.push(acc);
        for b in s {
            let e = credit.entry(b).or_insert((0.0, 0));
            e.0 += acc;
            e.1 += 1;
        }
    }

    let mut ranking: Vec<SScore> = credit
        .into_iter()
        .map(|(beat, (sum, draws))| SScore {
            beat,
            mean_credit: sum / draws as f64,
            draws,
        })
        .collect();
    ranking.sort_by(|a, b| b.mean_credit.total_cmp(&a.mean_credit).then(a.beat.cmp(&b.beat)));

    let mut selected: Vec<BeatRef> = ranking.iter().take(config.keep).map(|s| s.beat).collect();
    if selected.len() < config.keep {
        let seen: HashSet<BeatRef> = ranking.iter().map(|s| s.beat).collect();
        let mut unseen: Vec<BeatRef> = train_s.iter().copied().filter(|b| !seen.contains(b)).collect();
        master.shuffle(&mut unseen);
        selected.extend(unseen.into_iter().take(config.keep - selected.len()));
    }
    Ok(SelectionResult {
        selected,
        ranking,
        repetition_accuracy,
    })
}
