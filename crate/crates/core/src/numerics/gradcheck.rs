use super::params::ParamStore;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Worst elementwise disagreement for one parameter tensor.
#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

/// `|a - n| / max(|a|, |n|, 1e-6)`.
///
/// The floor keeps entries whose true gradient is zero (a softmax-invariant
/// bias, say) from failing on central-difference roundoff, which is about
/// `1e-16 * |loss| / eps`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares analytic gradients against central differences
/// `(f(θ+ε) - f(θ-ε)) / 2ε`, element by element.
///
/// `loss_fn` returns the loss and its analytic gradient for the given parameters.
/// It is evaluated twice at the unperturbed point; differing losses mean the
/// function is not deterministic and the check is refused.
pub fn finite_diff_check<T, F>(
    mut loss_fn: F,
    params: &mut ParamStore<T>,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    T: Scalar,
    F: FnMut(&ParamStore<T>) -> Result<(T, ParamStore<T>)>,
{
    if !(1e-7..=1e-4).contains(&epsilon) {
        return Err(Error::arg(format!("epsilon {epsilon} outside [1e-7, 1e-4]")));
    }
    let (base, analytic) = loss_fn(params)?;
    let (again, _) = loss_fn(params)?;
    if base.as_f64().to_bits() != again.as_f64().to_bits() {
        return Err(Error::Contract(format!(
            "loss function is not deterministic ({base} vs {again}); disable dropout"
        )));
    }
    if analytic.names() != params.names() {
        return Err(Error::arg("analytic gradient layout differs from parameters"));
    }

    let eps = T::lit(epsilon);
    let mut checks = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let mut worst = ParamCheck {
            name: params.names()[p].clone(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for i in 0..params.tensors()[p].len() {
            let orig = params.tensors()[p].data()[i];
            params.tensors_mut()[p].data_mut()[i] = orig + eps;
            let (plus, _) = loss_fn(params)?;
            params.tensors_mut()[p].data_mut()[i] = orig - eps;
            let (minus, _) = loss_fn(params)?;
            params.tensors_mut()[p].data_mut()[i] = orig;

            let numeric = (plus.as_f64() - minus.as_f64()) / (2.0 * epsilon);
            let a = analytic.tensors()[p].data()[i].as_f64();
            let err = relative_error(a, numeric);
            if err > worst.max_rel_error || err.is_nan() {
                worst.max_rel_error = err;
                worst.worst_index = i;
                worst.analytic = a;
                worst.numeric = numeric;
            }
        }
        checks.push(worst);
    }
    let max = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        passed: max < tolerance,
        params: checks,
        max_rel_error: max,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Rng, Tensor};
    use std::cell::Cell;

    fn store(rng: &mut Rng) -> ParamStore<f64> {
        let mut p = ParamStore::new();
        let a = (0..6).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
        p.register("a", Tensor::new(vec![2, 3], a).unwrap()).unwrap();
        p.register("b", Tensor::vector(vec![rng.uniform_range(-2.0, 2.0); 4]).unwrap())
            .unwrap();
        p
    }

    fn half_sq_norm(p: &ParamStore<f64>) -> Result<(f64, ParamStore<f64>)> {
        let loss = 0.5 * p.tensors().iter().map(|t| t.sq_norm()).sum::<f64>();
        Ok((loss, p.clone()))
    }

    #[test]
    fn quadratic_passes() {
        let mut p = store(&mut Rng::new(5));
        let report = finite_diff_check(half_sq_norm, &mut p, 1e-5, 1e-8).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.max_rel_error < 1e-8);
    }

    #[test]
    fn corrupted_gradient_fails() {
        let mut p = store(&mut Rng::new(6));
        let corrupted = |p: &ParamStore<f64>| {
            let (l, mut g) = half_sq_norm(p)?;
            g.tensors_mut()[0].data_mut()[2] *= 2.0;
            Ok((l, g))
        };
        let report = finite_diff_check(corrupted, &mut p, 1e-5, 1e-4).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst().unwrap().name, "a");
        assert_eq!(report.worst().unwrap().worst_index, 2);
    }

    #[test]
    fn nondeterministic_loss_rejected() {
        let mut p = store(&mut Rng::new(7));
        let calls = Cell::new(0u32);
        let noisy = |p: &ParamStore<f64>| {
            calls.set(calls.get() + 1);
            let (l, g) = half_sq_norm(p)?;
            Ok((l + f64::from(calls.get()) * 1e-3, g))
        };
        assert!(matches!(
            finite_diff_check(noisy, &mut p, 1e-5, 1e-4),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn epsilon_range_enforced() {
        let mut p = store(&mut Rng::new(8));
        assert!(finite_diff_check(half_sq_norm, &mut p, 1e-3, 1e-4).is_err());
    }

    #[test]
    fn params_restored_after_check() {
        let mut p = store(&mut Rng::new(9));
        let before = p.clone();
        finite_diff_check(half_sq_norm, &mut p, 1e-6, 1e-4).unwrap();
        assert_eq!(p, before);
    }
}
