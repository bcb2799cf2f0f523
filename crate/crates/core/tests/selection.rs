use acegan::beatgrid::PreparedRecord;
use acegan::datasets::{select_representative_s, synth_cohort, SKind, SelectionConfig, SynthConfig};

/// S beats that look like N beats teach the classifier to call N beats S,
/// so they must be credited less than the distinct ones.
#[test]
fn near_normal_s_ranks_below_distinct_s() {
    let cohort = synth_cohort(&SynthConfig::split_cohort(100, 16, 0, 0), 3).unwrap();
    let prepared: Vec<PreparedRecord> = cohort
        .records
        .iter()
        .map(|r| PreparedRecord::new(&r.record, 0).unwrap())
        .collect();
    // small draws give each S beat a large share of its repetitions' outcome
    let config = SelectionConfig {
        repetitions: 60,
        n_draw: 10,
        s_draw: 10,
        n_test: 50,
        epochs: 20,
        batch: 10,
        learning_rate: 1e-3,
        keep: 40,
        seed: 11,
        ..SelectionConfig::default()
    };
    let result = select_representative_s(&prepared, &config).unwrap();
    assert_eq!(result.repetition_accuracy.len(), config.repetitions);

    let kind = |record: usize, beat: usize| cohort.records[record].s_kinds[beat].expect("ranked beat is S");
    let (mut distinct, mut near) = (Vec::new(), Vec::new());
    for score in result.ranking.iter().filter(|s| s.draws > 0) {
        match kind(score.beat.record, score.beat.beat) {
            SKind::Distinct => distinct.push(score.mean_credit),
            SKind::NearNormal => near.push(score.mean_credit),
        }
    }
    assert!(!distinct.is_empty() && !near.is_empty());
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&near) < mean(&distinct),
        "near-normal credit {:.4} vs distinct {:.4}",
        mean(&near),
        mean(&distinct)
    );

    // the kept head is dominated by distinct beats
    let kept_distinct = result
        .selected
        .iter()
        .filter(|b| kind(b.record, b.beat) == SKind::Distinct)
        .count();
    assert!(2 * kept_distinct > result.selected.len(), "{kept_distinct}/{}", result.selected.len());
}
