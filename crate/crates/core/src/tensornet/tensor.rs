use super::NetError;

/// Dense row-major `f64` array with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
            grad: None,
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NetError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NetError::ShapeMismatch {
                expected: shape.to_vec(),
                got: vec![data.len()],
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
            grad: None,
        })
    }

    /// A trainable tensor: same as `from_vec` plus a zeroed gradient.
    pub fn param(shape: &[usize], data: Vec<f64>) -> Self {
        let mut t = Self::from_vec(shape, data).expect("parameter shape matches data");
        t.grad = Some(vec![0.0; t.data.len()]);
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated on first use.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        let n = self.data.len();
        self.grad.get_or_insert_with(|| vec![0.0; n])
    }

    pub fn data_and_grad_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let n = self.data.len();
        let grad = self.grad.get_or_insert_with(|| vec![0.0; n]);
        (&mut self.data, grad)
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.fill(0.0);
        }
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self, NetError> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(NetError::ShapeMismatch {
                expected: shape.to_vec(),
                got: self.shape,
            });
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Size of the leading (batch) dimension.
    pub fn batch(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Elements per batch item.
    pub fn item_len(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn item(&self, b: usize) -> &[f64] {
        let n = self.item_len();
        &self.data[b * n..(b + 1) * n]
    }

    pub fn expect_shape(&self, shape: &[usize]) -> Result<(), NetError> {
        if self.shape != shape {
            return Err(NetError::ShapeMismatch {
                expected: shape.to_vec(),
                got: self.shape.clone(),
            });
        }
        Ok(())
    }
}
