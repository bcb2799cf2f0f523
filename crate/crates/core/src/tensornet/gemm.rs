//! Thin safe wrapper over `matrixmultiply::dgemm`.

/// Matrix view: element `(i, j)` lives at `data[i * row_stride + j * col_stride]`.
#[derive(Clone, Copy)]
pub struct View<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a> View<'a> {
    pub fn row_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    pub fn t(self) -> Self {
        Self {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn check(&self) {
        if self.rows > 0 && self.cols > 0 {
            let last = (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride;
            assert!(last < self.data.len(), "matrix view exceeds its buffer");
        }
    }
}

/// `c = a * b + beta * c` with `c` row-major `a.rows x b.cols`.
pub fn gemm(a: View<'_>, b: View<'_>, beta: f64, c: &mut [f64]) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    a.check();
    b.check();
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert!(c.len() >= m * n, "output buffer too small");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].iter_mut().for_each(|v| *v *= beta);
        return;
    }
    // SAFETY: the views and the output were bounds-checked above for every
    // index dgemm touches; the output does not alias the inputs.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_triple_loop() {
        let a: Vec<f64> = (0..6).map(f64::from).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|v| v as f64 * 0.5).collect(); // 3x4
        let mut c = vec![1.0; 8];
        gemm(View::row_major(&a, 2, 3), View::row_major(&b, 3, 4), 1.0, &mut c);
        for i in 0..2 {
            for j in 0..4 {
                let want: f64 = 1.0 + (0..3).map(|k| a[i * 3 + k] * b[k * 4 + j]).sum::<f64>();
                assert_eq!(c[i * 4 + j], want);
            }
        }
        // transposed operand
        let mut d = vec![0.0; 9];
        gemm(View::row_major(&a, 2, 3).t(), View::row_major(&a, 2, 3), 0.0, &mut d);
        assert_eq!(d[0], a[0] * a[0] + a[3] * a[3]);
        assert_eq!(d[5], a[1] * a[2] + a[4] * a[5]);
    }
}
