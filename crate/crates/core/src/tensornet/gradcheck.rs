//! Central finite-difference verification of analytic gradients.

use super::{NetError, Rng, Tensor};

pub const STEP: f64 = 1e-5;

/// Denominator floor for the relative error, so that gradients that are
/// zero analytically and numerically do not divide by zero.
pub const REL_FLOOR: f64 = 1e-4;

/// A scalar function of some parameters. Each evaluation must be a pure
/// function of the parameter values (stochastic layers reseed per call).
pub trait Objective {
    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    /// Loss at the current parameters. With `backward`, the parameter
    /// gradients are first zeroed and then filled analytically.
    fn evaluate(&mut self, backward: bool) -> Result<f64, NetError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    /// (parameter index, element index) of the worst element.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
    /// Elements whose difference quotient is unstable between `STEP` and
    /// `STEP / 10`: a ReLU or max-pool switch lies within the step, so the
    /// quotient does not estimate the derivative. Excluded from the maximum.
    pub kinks: usize,
    pub tolerance: f64,
}

impl GradcheckReport {
    /// At most this fraction of checked elements may be kinks.
    pub const MAX_KINK_FRACTION: f64 = 0.05;

    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance && (self.kinks as f64) <= Self::MAX_KINK_FRACTION * self.checked as f64
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares every parameter element's analytic gradient against
/// `(f(w + h) - f(w - h)) / 2h`.
pub fn gradcheck(obj: &mut dyn Objective, tolerance: f64) -> Result<GradcheckReport, NetError> {
    check_elements(obj, tolerance, |_, n| (0..n).collect())
}

/// Like [`gradcheck`] but only `per_param` randomly chosen elements of each
/// parameter tensor, for networks too large to check exhaustively.
pub fn gradcheck_sampled(
    obj: &mut dyn Objective,
    tolerance: f64,
    per_param: usize,
    seed: u64,
) -> Result<GradcheckReport, NetError> {
    let mut rng = Rng::seed(seed);
    check_elements(obj, tolerance, |_, n| rng.sample_indices(n, per_param))
}

fn check_elements(
    obj: &mut dyn Objective,
    tolerance: f64,
    mut pick: impl FnMut(usize, usize) -> Vec<usize>,
) -> Result<GradcheckReport, NetError> {
    obj.evaluate(true)?;
    let analytic: Vec<Vec<f64>> = obj
        .params_mut()
        .into_iter()
        .map(|p| p.grad().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; p.len()]))
        .collect();
    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        kinks: 0,
        tolerance,
    };
    for (pi, grads) in analytic.iter().enumerate() {
        for ei in pick(pi, grads.len()) {
            let a = grads[ei];
            let numeric = central_difference(obj, pi, ei, STEP)?;
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err >= tolerance {
                let fine = central_difference(obj, pi, ei, STEP / 10.0)?;
                if relative_error(numeric, fine) >= tolerance {
                    report.kinks += 1;
                    continue;
                }
            }
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((pi, ei));
            }
        }
    }
    Ok(report)
}

fn central_difference(obj: &mut dyn Objective, pi: usize, ei: usize, h: f64) -> Result<f64, NetError> {
    let orig = obj.params_mut()[pi].data()[ei];
    obj.params_mut()[pi].data_mut()[ei] = orig + h;
    let plus = obj.evaluate(false)?;
    obj.params_mut()[pi].data_mut()[ei] = orig - h;
    let minus = obj.evaluate(false)?;
    obj.params_mut()[pi].data_mut()[ei] = orig;
    Ok((plus - minus) / (2.0 * h))
}
