//! Damped Gauss-Newton (Levenberg-Marquardt) refinement of `(C, B)` on the
//! raw I-V samples.

use serde::Serialize;

use super::{model_current, r_squared, FitResult, DEFAULT_CURRENT_FLOOR};
use crate::device::IVCurve;
use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, pairwise_sum_by};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResidualSpace {
    /// `ln I_model − ln I_obs`.
    #[default]
    Log,
    /// `I_model − I_obs`, in amperes.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineOptions {
    pub residual_space: ResidualSpace,
    pub max_iterations: usize,
    /// Stop when every parameter changes by less than this, relatively.
    pub tolerance: f64,
    /// Samples below this current (A) are excluded.
    pub current_floor: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            residual_space: ResidualSpace::Log,
            max_iterations: 200,
            tolerance: 1e-10,
            current_floor: DEFAULT_CURRENT_FLOOR,
        }
    }
}

/// Analytic partials of `I = C·V²·exp(−B/V)` with respect to `C` and `B`,
/// one row per sample. Rows for `V <= 0` are zero by the limit convention.
pub fn residual_jacobian(params: (f64, f64), curve: &IVCurve) -> Vec<[f64; 2]> {
    let (c, b) = params;
    curve
        .samples()
        .iter()
        .map(|s| {
            let v = s.voltage;
            if v <= 0.0 {
                return [0.0, 0.0];
            }
            let e = (-b / v).exp();
            [v * v * e, -c * v * e]
        })
        .collect()
}

struct Problem {
    volts: Vec<f64>,
    observed: Vec<f64>,
    space: ResidualSpace,
}

impl Problem {
    fn residuals(&self, c: f64, b: f64) -> Vec<f64> {
        self.volts
            .iter()
            .zip(&self.observed)
            .map(|(&v, &obs)| match self.space {
                ResidualSpace::Log => c.ln() + 2.0 * v.ln() - b / v - obs,
                ResidualSpace::Linear => model_current(c, b, v) - obs,
            })
            .collect()
    }

    fn jacobian(&self, c: f64, b: f64) -> Vec<[f64; 2]> {
        self.volts
            .iter()
            .map(|&v| match self.space {
                ResidualSpace::Log => [1.0 / c, -1.0 / v],
                ResidualSpace::Linear => {
                    let e = (-b / v).exp();
                    [v * v * e, -c * v * e]
                }
            })
            .collect()
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    pairwise_sum_by(r, |x| x * x)
}

/// `(JᵀJ, Jᵀr)` with pairwise sums.
fn normal_equations(j: &[[f64; 2]], r: &[f64]) -> ([[f64; 2]; 2], [f64; 2]) {
    let col = |k: usize, l: usize| pairwise_sum(&j.iter().map(|row| row[k] * row[l]).collect::<Vec<_>>());
    let g = |k: usize| pairwise_sum(&j.iter().zip(r).map(|(row, ri)| row[k] * ri).collect::<Vec<_>>());
    let h01 = col(0, 1);
    ([[col(0, 0), h01], [h01, col(1, 1)]], [g(0), g(1)])
}

/// Solves `(H + λ·diag H) δ = −g` in diagonally scaled form.
fn damped_step(h: &[[f64; 2]; 2], g: &[f64; 2], lambda: f64) -> Option<[f64; 2]> {
    let d0 = h[0][0].sqrt();
    let d1 = h[1][1].sqrt();
    if !(d0 > 0.0 && d1 > 0.0) {
        return None;
    }
    // Scaled system has unit diagonal before damping.
    let off = h[0][1] / (d0 * d1);
    let diag = 1.0 + lambda;
    let det = diag * diag - off * off;
    if !(det > 0.0) {
        return None;
    }
    let r0 = -g[0] / d0;
    let r1 = -g[1] / d1;
    let s0 = (diag * r0 - off * r1) / det;
    let s1 = (diag * r1 - off * r0) / det;
    Some([s0 / d0, s1 / d1])
}

fn inverse_2x2(h: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(det.is_finite() && det > 0.0) {
        return None;
    }
    Some([
        [h[1][1] / det, -h[0][1] / det],
        [-h[1][0] / det, h[0][0] / det],
    ])
}

/// Scaled determinant below which the normal equations count as singular.
const SINGULAR_CORRELATION: f64 = 1e-14;

/// Refines `(C, B)` from an initial guess by damped Gauss-Newton steps.
///
/// Accepted iterates never increase the residual norm. Convergence is
/// declared when a proposed step changes every parameter by less than
/// `options.tolerance` relatively; starting at the optimum therefore
/// returns it with zero iterations.
pub fn nonlinear_refine(
    curve: &IVCurve,
    initial: (f64, f64),
    options: &RefineOptions,
) -> Result<FitResult> {
    let (c0, b0) = initial;
    if !(c0.is_finite() && c0 > 0.0 && b0.is_finite() && b0 > 0.0) {
        return Err(Error::invalid(format!(
            "initial guess must be finite and positive, got C = {c0}, B = {b0}"
        )));
    }
    let used: Vec<_> = curve
        .samples()
        .iter()
        .filter(|s| s.voltage > 0.0 && s.current > 0.0 && s.current >= options.current_floor)
        .collect();
    let n = used.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            usable: n,
            dropped: curve.len() - n,
            required: 3,
        });
    }
    let problem = Problem {
        volts: used.iter().map(|s| s.voltage).collect(),
        observed: used
            .iter()
            .map(|s| match options.residual_space {
                ResidualSpace::Log => s.current.ln(),
                ResidualSpace::Linear => s.current,
            })
            .collect(),
        space: options.residual_space,
    };

    let (mut c, mut b) = (c0, b0);
    let mut residuals = problem.residuals(c, b);
    let mut cost = sum_sq(&residuals);
    let mut history = vec![cost.sqrt()];
    let mut lambda = 1e-3;
    let mut iterations = 0;

    let converged = 'outer: loop {
        let jac = problem.jacobian(c, b);
        let (h, g) = normal_equations(&jac, &residuals);
        let correlation = 1.0 - h[0][1] * h[0][1] / (h[0][0] * h[1][1]);
        if !(correlation > SINGULAR_CORRELATION) || !g.iter().all(|x| x.is_finite()) {
            return Err(Error::SingularFit("normal equations are singular".into()));
        }
        loop {
            let Some(step) = damped_step(&h, &g, lambda) else {
                return Err(Error::SingularFit("damped system is singular".into()));
            };
            let small = (step[0] / c).abs() < options.tolerance && (step[1] / b).abs() < options.tolerance;
            let (c_new, b_new) = (c + step[0], b + step[1]);
            if c_new > 0.0 && b_new.is_finite() {
                let r_new = problem.residuals(c_new, b_new);
                let cost_new = sum_sq(&r_new);
                if cost_new.is_finite() && cost_new <= cost {
                    c = c_new;
                    b = b_new;
                    residuals = r_new;
                    cost = cost_new;
                    iterations += 1;
                    history.push(cost.sqrt());
                    lambda = (lambda * 0.1).max(1e-12);
                    if small {
                        break 'outer true;
                    }
                    break;
                }
            }
            if small {
                break 'outer true;
            }
            lambda *= 10.0;
        }
        if iterations >= options.max_iterations {
            break false;
        }
    };
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            prefactor: c,
            slope: b,
        });
    }

    let jac = problem.jacobian(c, b);
    let (h, _) = normal_equations(&jac, &residuals);
    let s2 = cost / (n as f64 - 2.0);
    let covariance = inverse_2x2(&h).map(|inv| {
        [
            [s2 * inv[0][0], s2 * inv[0][1]],
            [s2 * inv[1][0], s2 * inv[1][1]],
        ]
    });
    let mean_obs = pairwise_sum(&problem.observed) / n as f64;
    let sst = pairwise_sum_by(&problem.observed, |y| (y - mean_obs).powi(2));

    Ok(FitResult {
        prefactor_c: c,
        slope_b: b,
        covariance,
        r_squared: r_squared(cost, sst),
        residual_norm: cost.sqrt(),
        n_points: n,
        iterations,
        residual_space: options.residual_space,
        extracted_beta: None,
        extracted_phi: None,
        residual_history: history,
    })
}
