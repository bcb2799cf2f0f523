//! Gradient-check objectives for the adversarial losses.

use super::model::{Discriminator, Generator, GENERATED};
use super::head_loss;
use crate::tensornet::{Mode, NetError, Objective, Rng, Tensor, Want};

/// The discriminator loss on one real and one generated batch, as a
/// function of the discriminator parameters.
pub struct DiscriminatorObjective {
    pub d: Discriminator,
    pub real: Tensor,
    pub real_labels: Vec<usize>,
    pub fake: Tensor,
    /// Reseeds dropout on every evaluation so masks stay fixed.
    pub seed: u64,
}

impl Objective for DiscriminatorObjective {
    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.d.params_mut()
    }

    fn evaluate(&mut self, backward: bool) -> Result<f64, NetError> {
        let mut rng = Rng::seed(self.seed);
        self.d.zero_grad();
        let fake_labels = vec![GENERATED; self.fake.batch()];
        let mut total = 0.0;
        for (x, target, labels) in [(&self.real, 1.0, &self.real_labels), (&self.fake, 0.0, &fake_labels)] {
            let out = self.d.forward(x, Mode::Train, &mut rng)?;
            let hl = head_loss(&out, target, labels)?;
            if backward {
                self.d.backward(&hl.grad_probs, &hl.grad_validity, Want::params())?;
            }
            total += hl.loss;
        }
        Ok(total)
    }
}

/// The generator loss through a frozen discriminator, as a function of the
/// generator parameters.
pub struct GeneratorObjective {
    pub g: Generator,
    pub d: Discriminator,
    pub noise: Tensor,
    pub labels: Vec<usize>,
    pub seed: u64,
}

impl Objective for GeneratorObjective {
    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.g.params_mut()
    }

    fn evaluate(&mut self, backward: bool) -> Result<f64, NetError> {
        let mut rng = Rng::seed(self.seed);
        self.g.zero_grad();
        let x = self.g.forward(&self.noise, &self.labels, Mode::Train, &mut rng)?;
        let out = self.d.forward(&x, Mode::Train, &mut rng)?;
        let hl = head_loss(&out, 1.0, &self.labels)?;
        if backward {
            let gx = self
                .d
                .backward(&hl.grad_probs, &hl.grad_validity, Want::input())?
                .expect("input gradient requested");
            self.g.backward(&gx)?;
        }
        Ok(hl.loss)
    }
}

/// Redraws every weight matrix and kernel from `N(0, 2 / fan_in)`, leaving
/// vectors (biases, normalisation parameters) alone. With the default tiny
/// initialisation most gradients sit below the relative-error floor, which
/// would make a finite-difference check vacuous.
pub fn spread_weights(params: Vec<&mut Tensor>, seed: u64) {
    let mut rng = Rng::seed(seed);
    for p in params {
        let fan_in = match *p.shape() {
            [_, i, kh, kw] => i * kh * kw,
            [i, _] => i,
            _ => continue,
        };
        let std = (2.0 / fan_in as f64).sqrt();
        let fresh = rng.normal_vec(p.len(), std);
        p.data_mut().copy_from_slice(&fresh);
    }
}
