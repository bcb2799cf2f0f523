//! Evaluation: confusion matrices, one-vs-rest metrics, per-record reports,
//! Fréchet distance between feature sets and a two-component PCA.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::gan::Prediction;
use crate::wfdb::AamiClass;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("{truth} ground-truth labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("feature dimension {0} differs from {1}")]
    DimensionMismatch(usize, usize),
}

/// Column of the "generated" prediction.
pub const GENERATED_COLUMN: usize = 5;

/// Rows are ground truth N, S, V, F, Q; columns are predictions N, S, V, F,
/// Q and "generated".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 6]; 5],
}

fn column(p: Prediction) -> usize {
    match p {
        Prediction::Class(c) => c.index(),
        Prediction::Generated => GENERATED_COLUMN,
    }
}

impl ConfusionMatrix {
    pub fn tally(&mut self, truth: AamiClass, predicted: Prediction) {
        self.counts[truth.index()][column(predicted)] += 1;
    }

    pub fn row_total(&self, truth: AamiClass) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn column_total(&self, col: usize) -> u64 {
        self.counts.iter().map(|r| r[col]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..5).map(|i| self.counts[i][i]).sum()
    }

    /// Fraction of all beats whose predicted class equals the ground truth.
    pub fn overall_accuracy(&self) -> Option<f64> {
        ratio(self.correct(), self.total())
    }

    /// One-vs-rest counts with `positive` as the positive class. Every other
    /// prediction, including "generated", counts as negative.
    pub fn binary(&self, positive: AamiClass) -> BinaryCounts {
        let p = positive.index();
        let mut b = BinaryCounts::default();
        for (t, row) in self.counts.iter().enumerate() {
            for (c, &n) in row.iter().enumerate() {
                match (t == p, c == p) {
                    (true, true) => b.tp += n,
                    (true, false) => b.fn_ += n,
                    (false, true) => b.fp += n,
                    (false, false) => b.tn += n,
                }
            }
        }
        b
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.counts.iter_mut().flatten().zip(rhs.counts.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

pub fn confusion(truth: &[AamiClass], predicted: &[Prediction]) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        cm.tally(t, p);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// The five one-vs-rest metrics; `None` where the ratio is 0/0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub acc: Option<f64>,
    pub sen: Option<f64>,
    pub spe: Option<f64>,
    pub ppr: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl BinaryCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn metrics(&self) -> Metrics {
        let sen = ratio(self.tp, self.tp + self.fn_);
        let ppr = ratio(self.tp, self.tp + self.fp);
        let f1 = match (sen, ppr) {
            (Some(s), Some(p)) if s + p > 0.0 => Some(2.0 * s * p / (s + p)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        Metrics {
            acc: ratio(self.tp + self.tn, self.total()),
            sen,
            spe: ratio(self.tn, self.tn + self.fp),
            ppr,
            f1,
        }
    }
}

/// Percentage with no decimals, or `-` when undefined.
pub fn render_percent(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.0}", 100.0 * x))
}

fn csv_value(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

/// Ground truth and predictions for one test record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordPredictions {
    pub record_id: String,
    pub truth: Vec<AamiClass>,
    pub predicted: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordReport {
    pub record_id: String,
    pub confusion: ConfusionMatrix,
}

/// Columns of the per-record report: beat counts, Sen/Ppr for N, S and V
/// one-vs-rest, and overall accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportLine {
    pub n_beats: u64,
    pub s_beats: u64,
    pub v_beats: u64,
    pub n: Metrics,
    pub s: Metrics,
    pub v: Metrics,
    pub acc: Option<f64>,
}

impl ReportLine {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        Self {
            n_beats: cm.row_total(AamiClass::N),
            s_beats: cm.row_total(AamiClass::S),
            v_beats: cm.row_total(AamiClass::V),
            n: cm.binary(AamiClass::N).metrics(),
            s: cm.binary(AamiClass::S).metrics(),
            v: cm.binary(AamiClass::V).metrics(),
            acc: cm.overall_accuracy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ds2Report {
    pub records: Vec<RecordReport>,
    /// Sum of the per-record confusion matrices.
    pub pooled: ConfusionMatrix,
}

pub fn evaluate_ds2(records: &[RecordPredictions]) -> Result<Ds2Report, EvalError> {
    let records = records
        .iter()
        .map(|r| {
            Ok(RecordReport {
                record_id: r.record_id.clone(),
                confusion: confusion(&r.truth, &r.predicted)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let pooled = records.iter().map(|r| r.confusion).sum();
    Ok(Ds2Report { records, pooled })
}

impl Ds2Report {
    pub fn total_line(&self) -> ReportLine {
        ReportLine::from_confusion(&self.pooled)
    }

    fn lines(&self) -> impl Iterator<Item = (&str, ReportLine)> {
        self.records
            .iter()
            .map(|r| (r.record_id.as_str(), ReportLine::from_confusion(&r.confusion)))
            .chain(std::iter::once(("Total", self.total_line())))
    }

    /// Plain-text table: record, beat counts, N/SVEB/VEB Sen and Ppr in
    /// percent, overall accuracy.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8}{:>7}{:>7}{:>7} {:>6}{:>6} {:>6}{:>6} {:>6}{:>6} {:>6}",
            "Record", "N", "SVEB", "VEB", "N.Sen", "N.Ppr", "S.Sen", "S.Ppr", "V.Sen", "V.Ppr", "Acc"
        );
        for (id, l) in self.lines() {
            let _ = writeln!(
                s,
                "{:<8}{:>7}{:>7}{:>7} {:>6}{:>6} {:>6}{:>6} {:>6}{:>6} {:>6}",
                id,
                l.n_beats,
                l.s_beats,
                l.v_beats,
                render_percent(l.n.sen),
                render_percent(l.n.ppr),
                render_percent(l.s.sen),
                render_percent(l.s.ppr),
                render_percent(l.v.sen),
                render_percent(l.v.ppr),
                render_percent(l.acc)
            );
        }
        s
    }

    /// CSV with fractions in [0, 1]; undefined values are empty fields.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "record,n_beats,s_beats,v_beats,n_sen,n_ppr,s_sen,s_ppr,v_sen,v_ppr,acc")?;
        for (id, l) in self.lines() {
            writeln!(
                out,
                "{id},{},{},{},{},{},{},{},{},{},{}",
                l.n_beats,
                l.s_beats,
                l.v_beats,
                csv_value(l.n.sen),
                csv_value(l.n.ppr),
                csv_value(l.s.sen),
                csv_value(l.s.ppr),
                csv_value(l.v.sen),
                csv_value(l.v.ppr),
                csv_value(l.acc)
            )?;
        }
        Ok(())
    }

    /// The pooled confusion matrix with row and column totals.
    pub fn render_confusion(&self) -> String {
        let cm = &self.pooled;
        let mut s = String::new();
        let _ = writeln!(s, "{:<6}{:>8}{:>8}{:>8}{:>8}{:>8}{:>10}{:>8}", "", "N", "S", "V", "F", "Q", "Generated", "Total");
        for class in AamiClass::ALL {
            let row = cm.counts[class.index()];
            let _ = write!(s, "{:<6}", class.symbol());
            for (c, n) in row.iter().enumerate() {
                let _ = write!(s, "{:>w$}", n, w = if c == GENERATED_COLUMN { 10 } else { 8 });
            }
            let _ = writeln!(s, "{:>8}", cm.row_total(class));
        }
        let _ = write!(s, "{:<6}", "Total");
        for c in 0..6 {
            let _ = write!(s, "{:>w$}", cm.column_total(c), w = if c == GENERATED_COLUMN { 10 } else { 8 });
        }
        let _ = writeln!(s, "{:>8}", cm.total());
        s
    }
}

/// Mean and covariance of one feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl FrechetStats {
    /// Sample mean and unbiased covariance of row vectors.
    pub fn from_features(features: &[Vec<f64>]) -> Result<Self, EvalError> {
        if features.len() < 2 {
            return Err(EvalError::InsufficientSamples {
                needed: 2,
                got: features.len(),
            });
        }
        let d = features[0].len();
        if let Some(bad) = features.iter().find(|f| f.len() != d) {
            return Err(EvalError::DimensionMismatch(bad.len(), d));
        }
        let n = features.len();
        let x = DMatrix::from_fn(n, d, |i, j| features[i][j]);
        let mean = DVector::from_fn(d, |j, _| x.column(j).mean());
        let centred = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
        let mut cov = centred.transpose() * &centred / (n - 1) as f64;
        // exact symmetry despite rounding in the product
        for i in 0..d {
            for j in 0..i {
                let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok(Self { mean, cov })
    }
}

/// Eigenvalues below this are treated as zero before square roots.
pub const EIGEN_CLIP: f64 = 1e-10;

fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| if l < EIGEN_CLIP { 0.0 } else { l.sqrt() });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Fréchet distance between two Gaussians fitted to the feature sets:
/// `|mu_a - mu_b|^2 + tr(S_a) + tr(S_b) - 2 tr((S_a^1/2 S_b S_a^1/2)^1/2)`.
pub fn frechet_from_stats(a: &FrechetStats, b: &FrechetStats) -> Result<f64, EvalError> {
    if a.mean.len() != b.mean.len() {
        return Err(EvalError::DimensionMismatch(a.mean.len(), b.mean.len()));
    }
    let diff = &a.mean - &b.mean;
    let root_a = sqrt_psd(&a.cov);
    let mut inner = &root_a * &b.cov * &root_a;
    let d = inner.nrows();
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (inner[(i, j)] + inner[(j, i)]);
            inner[(i, j)] = v;
            inner[(j, i)] = v;
        }
    }
    let cross: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|&l| if l < EIGEN_CLIP { 0.0 } else { l.sqrt() })
        .sum();
    let fd = diff.dot(&diff) + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    Ok(fd.max(0.0))
}

pub fn frechet_distance(real: &[Vec<f64>], generated: &[Vec<f64>]) -> Result<f64, EvalError> {
    frechet_from_stats(&FrechetStats::from_features(real)?, &FrechetStats::from_features(generated)?)
}

/// Two-component PCA of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Coordinates on the first two components, one pair per sample.
    pub projections: Vec<[f64; 2]>,
    /// All covariance eigenvalues, non-increasing.
    pub explained_variance: Vec<f64>,
    /// The first two unit eigenvectors.
    pub components: [Vec<f64>; 2],
    pub mean: Vec<f64>,
}

pub fn pca_export(features: &[Vec<f64>]) -> Result<PcaResult, EvalError> {
    if features.len() < 3 {
        return Err(EvalError::InsufficientSamples {
            needed: 3,
            got: features.len(),
        });
    }
    let stats = FrechetStats::from_features(features)?;
    let d = stats.mean.len();
    let eig = SymmetricEigen::new(stats.cov.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let explained_variance: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let component = |k: usize| -> Vec<f64> {
        if k >= d {
            return vec![0.0; d];
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
        // sign convention: largest-magnitude entry positive
        let pivot = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let components = [component(0), component(1)];
    let mean: Vec<f64> = stats.mean.iter().copied().collect();
    let projections = features
        .iter()
        .map(|f| {
            let mut p = [0.0; 2];
            for (k, c) in components.iter().enumerate() {
                p[k] = f.iter().zip(&mean).zip(c).map(|((x, m), w)| (x - m) * w).sum();
            }
            p
        })
        .collect();
    Ok(PcaResult {
        projections,
        explained_variance,
        components,
        mean,
    })
}

impl PcaResult {
    pub fn write_csv<W: Write>(&self, labels: &[String], mut out: W) -> std::io::Result<()> {
        writeln!(out, "label,pc1,pc2")?;
        for (p, l) in self.projections.iter().zip(labels) {
            writeln!(out, "{l},{:.9},{:.9}", p[0], p[1])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(s: char) -> AamiClass {
        AamiClass::from_symbol(s).unwrap()
    }

    fn p(s: char) -> Prediction {
        if s == 'G' {
            Prediction::Generated
        } else {
            Prediction::Class(c(s))
        }
    }

    #[test]
    fn hand_metrics() {
        let m = BinaryCounts { tp: 5, tn: 90, fp: 3, fn_: 2 }.metrics();
        let r6 = |v: Option<f64>| (v.unwrap() * 1e6).round() / 1e6;
        assert_eq!(r6(m.acc), 0.95);
        assert_eq!(r6(m.sen), 0.714286);
        assert_eq!(r6(m.spe), 0.967742);
        assert_eq!(r6(m.ppr), 0.625);
        assert_eq!(r6(m.f1), 0.666667);
    }

    #[test]
    fn perfect_classifier() {
        let m = BinaryCounts { tp: 7, tn: 11, fp: 0, fn_: 0 }.metrics();
        for v in [m.acc, m.sen, m.spe, m.ppr, m.f1] {
            assert_eq!(v, Some(1.0));
        }
    }

    #[test]
    fn absent_positives_render_dash() {
        let m = BinaryCounts { tp: 0, tn: 40, fp: 0, fn_: 0 }.metrics();
        assert_eq!((m.sen, m.ppr, m.f1), (None, None, None));
        assert_eq!(render_percent(m.sen), "-");
        assert_eq!(m.spe, Some(1.0));
    }

    #[test]
    fn ten_beat_tally() {
        let truth: Vec<AamiClass> = "NNNSSVVFQN".chars().map(c).collect();
        let pred: Vec<Prediction> = "NSGSNVNFNN".chars().map(p).collect();
        let cm = confusion(&truth, &pred).unwrap();
        let mut brute = [[0u64; 6]; 5];
        for (t, q) in "NNNSSVVFQN".chars().zip("NSGSNVNFNN".chars()) {
            let col = "NSVFQG".find(q).unwrap();
            brute["NSVFQ".find(t).unwrap()][col] += 1;
        }
        assert_eq!(cm.counts, brute);
        assert_eq!(cm.row_total(AamiClass::N), 4);
        let s = cm.binary(AamiClass::S);
        assert_eq!((s.tp, s.fp, s.fn_, s.tn), (1, 1, 1, 7));
    }

    #[test]
    fn empty_and_mismatch() {
        assert_eq!(confusion(&[], &[]).unwrap(), ConfusionMatrix::default());
        assert!(matches!(confusion(&[AamiClass::N], &[]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn pooled_total_is_not_mean_of_records() {
        let a = RecordPredictions {
            record_id: "a".into(),
            truth: "SSSSNNNN".chars().map(c).collect(),
            predicted: "SNNNNNNN".chars().map(p).collect(),
        };
        let b = RecordPredictions {
            record_id: "b".into(),
            truth: "SN".chars().map(c).collect(),
            predicted: "SN".chars().map(p).collect(),
        };
        let rep = evaluate_ds2(&[a, b]).unwrap();
        let total = rep.total_line();
        // pooled: TP = 2, FN = 3
        assert!((total.s.sen.unwrap() - 0.4).abs() < 1e-15);
        let mean_of_records = (0.25 + 1.0) / 2.0;
        assert!((total.s.sen.unwrap() - mean_of_records).abs() > 0.1);
        assert!(rep.render_text().contains("Total"));
        // record a has no VEB ground truth or prediction
        assert!(rep.render_text().lines().nth(1).unwrap().contains('-'));
    }

    fn column_of(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn frechet_closed_forms() {
        let zeros = column_of(&[0.0; 10]);
        let ones = column_of(&[1.0; 10]);
        assert!((frechet_distance(&zeros, &ones).unwrap() - 1.0).abs() < 1e-6);
        // exact moments: {-1, 1} has mean 0, unbiased variance 2; {-2, 2} gives 8.
        // Scale to variances 1 and 4 with four points each.
        let s = (3.0f64 / 4.0).sqrt();
        let a = column_of(&[-s, s, -s, s]);
        let b = column_of(&[-2.0 * s, 2.0 * s, -2.0 * s, 2.0 * s]);
        assert!((FrechetStats::from_features(&a).unwrap().cov[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((frechet_distance(&a, &b).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pca_axis_aligned() {
        let pts: Vec<Vec<f64>> = [(-3.0, 0.5), (3.0, -0.5), (0.0, 0.0), (-3.0, -0.5), (3.0, 0.5)]
            .iter()
            .map(|&(x, y)| vec![x, y])
            .collect();
        let r = pca_export(&pts).unwrap();
        assert!((r.components[0][0].abs() - 1.0).abs() < 1e-12);
        assert!((r.components[1][1].abs() - 1.0).abs() < 1e-12);
        for (p, f) in r.projections.iter().zip(&pts) {
            assert!((p[0].abs() - f[0].abs()).abs() < 1e-12);
            assert!((p[1].abs() - f[1].abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn pca_rank_one() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let r = pca_export(&pts).unwrap();
        assert!(r.explained_variance[1].abs() < 1e-12);
        assert!(matches!(pca_export(&pts[..2]), Err(EvalError::InsufficientSamples { .. })));
    }

    proptest! {
        #[test]
        fn frechet_symmetric_and_nonnegative(seed in 0u64..1000) {
            let mut rng = crate::tensornet::Rng::seed(seed);
            let a: Vec<Vec<f64>> = (0..12).map(|_| rng.normal_vec(3, 1.0)).collect();
            let b: Vec<Vec<f64>> = (0..9).map(|_| rng.normal_vec(3, 2.0).iter().map(|x| x + 0.5).collect()).collect();
            let ab = frechet_distance(&a, &b).unwrap();
            let ba = frechet_distance(&b, &a).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-8);
            prop_assert!(frechet_distance(&a, &a).unwrap().abs() < 1e-8);
        }

        #[test]
        fn metric_identities(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
            let b = BinaryCounts { tp, tn, fp, fn_ };
            let m = b.metrics();
            if b.total() > 0 {
                prop_assert_eq!(m.acc, Some((tp + tn) as f64 / b.total() as f64));
            }
            for v in [m.acc, m.sen, m.spe, m.ppr, m.f1].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if let (Some(s), Some(p), Some(f)) = (m.sen, m.ppr, m.f1) {
                if s + p > 0.0 {
                    prop_assert!((f - 2.0 * s * p / (s + p)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn row_sums_ignore_predictions(labels in proptest::collection::vec(0usize..5, 0..40), shift in 0usize..6) {
            let truth: Vec<AamiClass> = labels.iter().map(|&i| AamiClass::ALL[i]).collect();
            let pred_a: Vec<Prediction> = labels.iter().map(|&i| Prediction::from_head_index(i.min(4))).collect();
            let pred_b: Vec<Prediction> = labels.iter().map(|&i| Prediction::from_head_index((i + shift) % 5)).collect();
            let a = confusion(&truth, &pred_a).unwrap();
            let b = confusion(&truth, &pred_b).unwrap();
            for class in AamiClass::ALL {
                prop_assert_eq!(a.row_total(class), b.row_total(class));
            }
        }

        #[test]
        fn pca_variances_sum_to_total(seed in 0u64..200) {
            let mut rng = crate::tensornet::Rng::seed(seed);
            let pts: Vec<Vec<f64>> = (0..10).map(|_| rng.normal_vec(4, 1.5)).collect();
            let r = pca_export(&pts).unwrap();
            let stats = FrechetStats::from_features(&pts).unwrap();
            prop_assert!((r.explained_variance.iter().sum::<f64>() - stats.cov.trace()).abs() < 1e-8);
            prop_assert!(r.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
