//! Finite-difference gradient oracle.
//!
//! Recomputes every parameter gradient by central differences,
//! `(f(θ+ε) - f(θ-ε)) / 2ε`, and compares against the backward pass. The
//! oracle only perturbs values and re-runs the caller's forward closure, so
//! it stays independent of the tape's backward rules. Run it at `f64`;
//! 32-bit arithmetic is too noisy for ε this small.

use super::{Result, Scalar, Tape, Tensor};

pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error seen across all checked elements.
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

/// Relative error with an absolute floor: `|a-n| / max(|a|, |n|, 1)`.
/// Near-zero gradients are judged on absolute error, everything else on
/// relative error.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Check `d loss / d param` for every element of every named parameter.
///
/// `forward` must rebuild the loss from scratch on the given tape and be
/// deterministic (disable dropout). Parameters' accumulated grads are
/// cleared before the analytic pass.
pub fn check_gradients<T, F>(
    params: &[(String, Tensor<T>)],
    forward: F,
    epsilon: f64,
) -> Result<GradCheckReport>
where
    T: Scalar,
    F: Fn(&Tape<T>) -> Result<Tensor<T>>,
{
    for (_, p) in params {
        p.zero_grad();
    }
    let tape = Tape::new();
    let loss = forward(&tape)?;
    tape.backward(&loss)?;

    let eps = T::from_f64(epsilon);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };

    for (name, p) in params {
        let analytic = p.grad().unwrap_or_else(|| vec![T::zero(); p.len()]);
        for i in 0..p.len() {
            let orig = p.get(i);
            p.set(i, orig + eps);
            let up = forward(&Tape::new())?.item();
            p.set(i, orig - eps);
            let down = forward(&Tape::new())?.item();
            p.set(i, orig);
            let numeric = (up - down).into_f64() / (2.0 * epsilon);
            let e = rel_err(analytic[i].into_f64(), numeric);
            report.checked += 1;
            if e > report.max_rel_err {
                report.max_rel_err = e;
                report.worst_param = name.clone();
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}
