use super::*;
use crate::tensornet::{gradcheck_sampled, Want};

fn probs_row(rows: &[&[f64]]) -> Tensor {
    let k = rows[0].len();
    Tensor::from_vec(&[rows.len(), k], rows.concat()).unwrap()
}

fn output(probs: &[&[f64]], validity: &[f64]) -> DiscOutput {
    DiscOutput {
        probs: probs_row(probs),
        validity: Tensor::from_vec(&[validity.len(), 1], validity.to_vec()).unwrap(),
        features: Tensor::zeros(&[validity.len(), FEATURE_DIM]),
    }
}

fn noise(n: usize, seed: u64) -> Tensor {
    Tensor::from_vec(&[n, NOISE_DIM], Rng::seed(seed).normal_vec(n * NOISE_DIM, 1.0)).unwrap()
}

#[test]
fn generated_matrices_are_73_square_and_rank_one() {
    let mut g = Generator::new(1);
    let labels = [0, 1, 2, 3];
    let x = g.forward(&noise(4, 2), &labels, Mode::Infer, &mut Rng::seed(0)).unwrap();
    assert_eq!(x.shape(), &[4, 1, 73, 73]);
    let (a, b) = g.forward_vectors(&noise(4, 2), &labels, Mode::Infer, &mut Rng::seed(0)).unwrap();
    for s in 0..4 {
        let m = x.item(s);
        for i in 0..73 {
            for j in 0..73 {
                assert_eq!(m[i * 73 + j], a.item(s)[i] * b.item(s)[j]);
            }
        }
        // every 2x2 minor vanishes
        let (r0, r1, c0, c1) = (3, 40, 7, 70);
        let minor = m[r0 * 73 + c0] * m[r1 * 73 + c1] - m[r0 * 73 + c1] * m[r1 * 73 + c0];
        let scale = (m[r0 * 73 + c0] * m[r1 * 73 + c1]).abs().max(1e-300);
        assert!(minor.abs() <= 1e-9 * scale);
    }
}

#[test]
fn discriminator_head_contract() {
    let mut d = Discriminator::new(3);
    let x = Tensor::from_vec(&[2, 1, 73, 73], Rng::seed(4).normal_vec(2 * 73 * 73, 1.0)).unwrap();
    let out = d.forward(&x, Mode::Infer, &mut Rng::seed(0)).unwrap();
    assert_eq!(out.probs.shape(), &[2, HEAD_CLASSES]);
    assert_eq!(out.validity.shape(), &[2, 1]);
    assert_eq!(out.features.shape(), &[2, FEATURE_DIM]);
    for i in 0..2 {
        assert!((out.probs.item(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn equal_seeds_build_identical_networks() {
    assert_eq!(Generator::new(9).checkpoint().unwrap(), Generator::new(9).checkpoint().unwrap());
    assert_eq!(Discriminator::new(9).checkpoint().unwrap(), Discriminator::new(9).checkpoint().unwrap());
    assert_ne!(Discriminator::new(9).checkpoint().unwrap(), Discriminator::new(10).checkpoint().unwrap());
}

#[test]
fn checkpoints_round_trip() {
    let mut g = Generator::new(5);
    let mut d = Discriminator::new(6);
    // take a step so optimiser state and running statistics are non-trivial
    let labels = [0, 1, 2, 3];
    let x = g.forward(&noise(4, 1), &labels, Mode::Train, &mut Rng::seed(0)).unwrap();
    let out = d.forward(&x, Mode::Train, &mut Rng::seed(1)).unwrap();
    let hl = head_loss(&out, 1.0, &labels).unwrap();
    let gx = d.backward(&hl.grad_probs, &hl.grad_validity, Want::all()).unwrap().unwrap();
    g.backward(&gx).unwrap();
    g.step().unwrap();
    d.step().unwrap();
    let gck = g.checkpoint().unwrap();
    let dck = d.checkpoint().unwrap();
    let g2 = Generator::from_checkpoint(&crate::tensornet::Checkpoint::from_bytes(&gck.to_bytes()).unwrap()).unwrap();
    let d2 = Discriminator::from_checkpoint(&dck).unwrap();
    assert_eq!(g2.checkpoint().unwrap(), gck);
    assert_eq!(d2.checkpoint().unwrap(), dck);
    assert_eq!(g2.adam.t, 1);
}

#[test]
fn d_loss_fixed_points() {
    let real = output(&[&[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0, 0.0]], &[1.0, 1.0]);
    let fake = output(&[&[0.0, 0.0, 0.0, 0.0, 1.0]], &[0.0]);
    assert_eq!(d_loss_from_outputs(&real, &[0, 2], &fake).unwrap(), 0.0);

    let u = [0.2; 5];
    let real = output(&[&u, &u], &[0.5, 0.5]);
    let fake = output(&[&u, &u, &u], &[0.5, 0.5, 0.5]);
    let want = 0.25 + 0.25 + 5f64.ln() + 5f64.ln();
    assert!((d_loss_from_outputs(&real, &[1, 3], &fake).unwrap() - want).abs() < 1e-12);
}

#[test]
fn g_loss_fixed_points() {
    let fake = output(&[&[0.0, 1.0, 0.0, 0.0, 0.0]], &[1.0]);
    assert_eq!(g_loss_from_outputs(&fake, &[1]).unwrap(), 0.0);
    let fake = output(&[&[0.2; 5], &[0.2; 5]], &[0.0, 0.0]);
    assert!((g_loss_from_outputs(&fake, &[0, 3]).unwrap() - (1.0 + 5f64.ln())).abs() < 1e-12);
}

#[test]
fn d_loss_gradient_matches_finite_differences() {
    let mut d = Discriminator::new(21);
    spread_weights(d.params_mut(), 22);
    let mut rng = Rng::seed(23);
    let real = Tensor::from_vec(&[2, 1, 73, 73], rng.normal_vec(2 * 73 * 73, 1.0)).unwrap();
    let fake = Tensor::from_vec(&[2, 1, 73, 73], rng.normal_vec(2 * 73 * 73, 1.0)).unwrap();
    let mut obj = DiscriminatorObjective {
        d,
        real,
        real_labels: vec![1, 3],
        fake,
        seed: 24,
    };
    let report = gradcheck_sampled(&mut obj, 1e-5, 4, 25).unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn g_loss_gradient_matches_finite_differences() {
    let mut g = Generator::new(26);
    spread_weights(g.params_mut(), 27);
    let mut d = Discriminator::new(28);
    spread_weights(d.params_mut(), 29);
    let mut obj = GeneratorObjective {
        g,
        d,
        noise: noise(4, 30),
        labels: vec![0, 1, 2, 3],
        seed: 31,
    };
    let report = gradcheck_sampled(&mut obj, 1e-5, 4, 32).unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn g_step_leaves_discriminator_untouched_and_vice_versa() {
    let mut g = Generator::new(31);
    let mut d = Discriminator::new(32);
    let labels = [0, 1, 2, 3];
    let d_before = d.checkpoint().unwrap();
    let x = g.forward(&noise(4, 3), &labels, Mode::Train, &mut Rng::seed(0)).unwrap();
    let out = d.forward(&x, Mode::Train, &mut Rng::seed(1)).unwrap();
    let hl = head_loss(&out, 1.0, &labels).unwrap();
    let gx = d.backward(&hl.grad_probs, &hl.grad_validity, Want::input()).unwrap().unwrap();
    g.backward(&gx).unwrap();
    g.step().unwrap();
    assert_eq!(d.checkpoint().unwrap(), d_before);
    assert!(d.params_mut().iter().all(|p| p.grad().map_or(true, |g| g.iter().all(|&v| v == 0.0))));

    let g_before = g.checkpoint().unwrap();
    let fake = g.forward(&noise(4, 4), &labels, Mode::Infer, &mut Rng::seed(0)).unwrap();
    let out = d.forward(&fake, Mode::Train, &mut Rng::seed(2)).unwrap();
    let hl = head_loss(&out, 0.0, &[GENERATED; 4]).unwrap();
    d.backward(&hl.grad_probs, &hl.grad_validity, Want::params()).unwrap();
    d.step().unwrap();
    assert_eq!(g.checkpoint().unwrap(), g_before);
    assert_ne!(d.checkpoint().unwrap(), d_before);
}

fn toy_set(per_class: usize, seed: u64) -> MatrixSet {
    let mut rng = Rng::seed(seed);
    let mut set = MatrixSet::new();
    for c in 0..REAL_CLASSES {
        for _ in 0..per_class {
            let v: Vec<f64> = (0..73).map(|i| ((i * (c + 1)) as f64 * 0.1).sin() + 0.05 * rng.normal()).collect();
            set.push(&crate::beatgrid::CouplingMatrix::outer(&v, &v), c);
        }
    }
    set
}

#[test]
fn zero_iterations_return_initial_networks() {
    let set = toy_set(3, 0);
    let config = GanTrainConfig { iterations: 0, fd_per_class: 3, seed: 4, ..Default::default() };
    let run = train_gan(&set, &config).unwrap();
    let (gs, ds) = train::network_seeds(4);
    assert_eq!(run.generator.checkpoint().unwrap(), Generator::new(gs).checkpoint().unwrap());
    assert_eq!(run.discriminator.checkpoint().unwrap(), Discriminator::new(ds).checkpoint().unwrap());
    assert!(run.telemetry.is_empty());
}

#[test]
fn telemetry_is_deterministic() {
    let set = toy_set(4, 1);
    let config = GanTrainConfig {
        iterations: 2,
        per_class: 2,
        telemetry_every: 1,
        fd_per_class: 3,
        seed: 7,
        ..Default::default()
    };
    let a = train_gan(&set, &config).unwrap();
    let b = train_gan(&set, &config).unwrap();
    assert_eq!(a.telemetry.len(), 2);
    assert_eq!(a.telemetry, b.telemetry);
    assert!(a.telemetry.iter().all(|r| r.d_loss >= 0.0 && r.g_loss >= 0.0 && r.fd >= 0.0));
    let mut csv = Vec::new();
    write_telemetry_csv(&a.telemetry, &mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("iteration,g_loss,d_loss,fd,acc_N,acc_S,acc_V,acc_F\n"));
}

#[test]
fn missing_class_is_rejected() {
    let mut set = MatrixSet::new();
    set.push(&vec![0.0; 73 * 73], 0);
    assert!(matches!(
        train_gan(&set, &GanTrainConfig::default()),
        Err(GanError::MissingClass(AamiClass::S))
    ));
}

#[test]
fn generate_contract() {
    let mut g = Generator::new(2);
    assert!(generate(&mut g, AamiClass::V, 0, 1).unwrap().is_empty());
    let a = generate(&mut g, AamiClass::V, 3, 1).unwrap();
    let b = generate(&mut g, AamiClass::V, 3, 1).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|m| m.center_beat_class == AamiClass::V && m.values.len() == 73 * 73));
    assert!(generate(&mut g, AamiClass::Q, 1, 1).is_err());
}

#[test]
fn argmax_and_ties() {
    assert_eq!(Prediction::from_head_index(argmax(&[0.1, 0.6, 0.1, 0.1, 0.1])), Prediction::Class(AamiClass::S));
    assert_eq!(argmax(&[0.3, 0.3, 0.1, 0.3, 0.0]), 0);
    assert_eq!(argmax(&[0.1, 0.1, 0.4, 0.4, 0.0]), 2);
    assert_eq!(Prediction::from_head_index(4), Prediction::Generated);
}

#[test]
fn classify_features_have_150_entries() {
    let mut d = Discriminator::new(3);
    let v: Vec<f64> = (0..73).map(|i| (i as f64 * 0.2).cos()).collect();
    let cm = crate::beatgrid::CouplingMatrix {
        size: 73,
        values: crate::beatgrid::CouplingMatrix::outer(&v, &v),
        center_beat_class: AamiClass::N,
        subject_id: "x".into(),
        beat_index: 0,
    };
    let (p, f) = classify(&mut d, &cm).unwrap();
    assert_eq!(f.len(), FEATURE_DIM);
    assert_ne!(p, Prediction::Class(AamiClass::Q));
}

#[test]
fn finetune_stops_after_one_epoch_when_already_fitted() {
    let mut d = Discriminator::new(8);
    d.class_head.bias.data_mut()[0] = 50.0;
    let mut set = MatrixSet::new();
    for _ in 0..6 {
        set.push(&vec![0.01; 73 * 73], 0);
    }
    let report = finetune(&mut d, &set, &FinetuneConfig { batch: 4, ..Default::default() }).unwrap();
    assert_eq!(report.epochs(), 1);
    assert_eq!(report.stop, StopReason::Accuracy);
    assert!(matches!(finetune(&mut d, &MatrixSet::new(), &FinetuneConfig::default()), Err(GanError::EmptyDataset)));
}

