use super::{NetError, Tensor};

/// Adam with bias-corrected moments. Moment buffers are allocated on the
/// first step and must keep matching the parameter list afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Default for Adam {
    fn default() -> Self {
        Self::new(2e-4)
    }
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<(), NetError> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(NetError::ShapeMismatch {
                expected: vec![self.m.len()],
                got: vec![params.len()],
            });
        }
        for (p, m) in params.iter().zip(&self.m) {
            if p.len() != m.len() {
                return Err(NetError::ShapeMismatch {
                    expected: vec![m.len()],
                    got: p.shape().to_vec(),
                });
            }
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let (data, grad) = p.data_and_grad_mut();
            for i in 0..data.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                data[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
                grad[i] = 0.0;
            }
        }
        Ok(())
    }

    pub fn state(&self, prefix: &str) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out = vec![(format!("{prefix}.t"), vec![1], vec![self.t as f64])];
        for (i, (m, v)) in self.m.iter().zip(&self.v).enumerate() {
            out.push((format!("{prefix}.m.{i}"), vec![m.len()], m.clone()));
            out.push((format!("{prefix}.v.{i}"), vec![v.len()], v.clone()));
        }
        out
    }

    pub fn load_state(&mut self, prefix: &str, ck: &super::Checkpoint, params: &[&Tensor]) -> Result<(), NetError> {
        self.t = ck.array(&format!("{prefix}.t"), &[1])?[0] as u64;
        self.m.clear();
        self.v.clear();
        if self.t == 0 {
            return Ok(());
        }
        for (i, p) in params.iter().enumerate() {
            self.m.push(ck.array(&format!("{prefix}.m.{i}"), &[p.len()])?.to_vec());
            self.v.push(ck.array(&format!("{prefix}.v.{i}"), &[p.len()])?.to_vec());
        }
        Ok(())
    }
}
