//! Dense Levenberg-Marquardt with a forward-difference Jacobian.
//!
//! The damped normal equations are
//! `(J^T J + lambda diag(J^T J)) delta = -J^T r`. A trial step is accepted
//! only when it lowers `||r||_2`; otherwise `lambda` grows and the same
//! Jacobian is reused.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts per iteration before the iteration is declared stalled.
const MAX_TRIALS: usize = 40;
/// Relative floor on the Marquardt scaling; keeps zero columns solvable.
const DIAG_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LMConfig {
    /// Initial damping, relative to `diag(J^T J)`.
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    /// Max-norm residual tolerance.
    pub tol_residual: f64,
    /// Max-norm step tolerance, relative to `max(||x||_inf, 1)`.
    pub tol_step: f64,
    pub max_iters: usize,
}

impl Default for LMConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-6,
            lambda_up: 10.0,
            lambda_down: 0.1,
            fd_step: 1e-6,
            tol_residual: 1e-8,
            tol_step: 1e-10,
            max_iters: 50,
        }
    }
}

impl LMConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.lambda0,
            self.lambda_up,
            self.lambda_down,
            self.fd_step,
            self.tol_residual,
            self.tol_step,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "LM parameters must be positive and finite".into(),
            ));
        }
        if !(self.lambda_up > 1.0 && self.lambda_down < 1.0) {
            return Err(Error::InvalidArgument(
                "need lambda_up > 1 > lambda_down".into(),
            ));
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResidualTolerance,
    StepTolerance,
    MaxIterations,
    /// No damping in the allowed range lowered the residual.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solution: Vec<f64>,
    /// `||r||_inf` at the solution.
    pub residual_norm: f64,
    /// Outer iterations, each with one Jacobian evaluation.
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Damping used for each accepted step.
    pub lambda_history: Vec<f64>,
    /// `||r||_2` at the start point and after each accepted step.
    pub residual_history: Vec<f64>,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn fd_columns<F>(r: &F, x: &[f64], r0: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let cols: Vec<Vec<f64>> = (0..x.len())
        .into_par_iter()
        .map(|j| {
            let h = step * x[j].abs().max(1.0);
            let mut xp = x.to_vec();
            xp[j] += h;
            let rp = r(&xp).map_err(|_| Error::NonFiniteJacobianColumn(j))?;
            if rp.len() != r0.len() || rp.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteJacobianColumn(j));
            }
            Ok(rp.iter().zip(r0).map(|(a, b)| (a - b) / h).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(r0.len(), x.len(), |i, j| cols[j][i]))
}

/// Forward-difference Jacobian with steps `h_j = step max(|x_j|, 1)`.
///
/// Columns are evaluated concurrently; the result does not depend on the
/// thread count.
pub fn fd_jacobian<F>(r: &F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let r0 = r(x)?;
    if r0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "residual is not finite at the base point".into(),
        ));
    }
    fd_columns(r, x, &r0, step)
}

/// Minimizes `||r(x)||_2` starting from `x0`.
///
/// Returns a report with `converged = false` when the iteration budget runs
/// out or no damping lowers the residual; errors are reserved for a
/// non-finite start, Jacobian failures and persistently singular systems.
pub fn lm_solve<F>(r: F, x0: &[f64], cfg: &LMConfig) -> Result<SolverReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidArgument("no unknowns to solve for".into()));
    }
    let mut x = x0.to_vec();
    let mut rx = r(&x)?;
    if rx.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "residual is not finite at the initial guess".into(),
        ));
    }
    let mut cost = sum_sq(&rx);
    let mut lambda = cfg.lambda0;
    let mut lambda_history = Vec::new();
    let mut residual_history = vec![cost.sqrt()];
    let mut iterations = 0;

    let termination = loop {
        if max_norm(&rx) <= cfg.tol_residual {
            break Termination::ResidualTolerance;
        }
        if iterations == cfg.max_iters {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let jac = fd_columns(&r, &x, &rx, cfg.fd_step)?;
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&rx);
        let dmax = jtj.diagonal().max();
        let scale: Vec<f64> = jtj
            .diagonal()
            .iter()
            .map(|d| d.max(DIAG_FLOOR * dmax))
            .collect();

        let mut accepted = None;
        let mut singular = 0;
        for _ in 0..MAX_TRIALS {
            let mut a = jtj.clone();
            for (j, d) in scale.iter().enumerate() {
                a[(j, j)] += lambda * d;
            }
            let delta = match a.lu().solve(&(-&grad)) {
                Some(d) if d.iter().all(|v| v.is_finite()) => d,
                _ => {
                    singular += 1;
                    lambda *= cfg.lambda_up;
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            match r(&trial) {
                Ok(rt) if rt.iter().all(|v| v.is_finite()) && sum_sq(&rt) < cost => {
                    accepted = Some((trial, rt, max_norm(delta.as_slice())));
                    break;
                }
                _ => lambda *= cfg.lambda_up,
            }
        }
        let Some((trial, rt, step)) = accepted else {
            if singular == MAX_TRIALS {
                return Err(Error::SingularDampedSystem(iterations));
            }
            break Termination::Stalled;
        };
        lambda_history.push(lambda);
        x = trial;
        rx = rt;
        cost = sum_sq(&rx);
        residual_history.push(cost.sqrt());
        lambda *= cfg.lambda_down;
        if step <= cfg.tol_step * max_norm(&x).max(1.0) {
            break if max_norm(&rx) <= cfg.tol_residual {
                Termination::ResidualTolerance
            } else {
                Termination::StepTolerance
            };
        }
    };

    Ok(SolverReport {
        residual_norm: max_norm(&rx),
        converged: matches!(
            termination,
            Termination::ResidualTolerance | Termination::StepTolerance
        ),
        solution: x,
        iterations,
        termination,
        lambda_history,
        residual_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(a: DMatrix<f64>, b: DVector<f64>) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync {
        move |x: &[f64]| {
            Ok((&a * DVector::from_column_slice(x) - &b)
                .as_slice()
                .to_vec())
        }
    }

    fn rosenbrock(c: f64) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync {
        move |x: &[f64]| Ok(vec![c * 10.0 * (x[1] - x[0] * x[0]), c * (1.0 - x[0])])
    }

    // Overdetermined, non-zero residual at the optimum.
    fn exp_fit(c: f64) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync {
        move |x: &[f64]| {
            Ok((0..8)
                .map(|i| {
                    let t = i as f64 * 0.25;
                    let data = 2.0 * (-0.7 * t).exp() + 0.05 * (i as f64 * 1.3).sin();
                    c * (x[0] * (-x[1] * t).exp() - data)
                })
                .collect())
        }
    }

    #[test]
    fn jacobian_of_linear_map() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -3.0, 0.5, 4.0, 1e-3]);
        let r = linear(a.clone(), DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let j = fd_jacobian(&r, &[0.3, -7.0], 1e-6).unwrap();
        for (x, y) in j.iter().zip(a.iter()) {
            assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0));
        }
    }

    #[test]
    fn jacobian_of_squares() {
        let r = |x: &[f64]| Ok(vec![x[0] * x[0], x[1] * x[1]]);
        let j = fd_jacobian(&r, &[1.0, 2.0], 1e-6).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        assert!((j - expected).amax() < 1e-5);
    }

    #[test]
    fn jacobian_names_bad_column() {
        let r = |x: &[f64]| Ok(vec![if x[1] > 1.0 { f64::NAN } else { x[0] }]);
        let e = fd_jacobian(&r, &[0.0, 1.0], 1e-6).unwrap_err();
        assert_eq!(e, Error::NonFiniteJacobianColumn(1));
    }

    #[test]
    fn exact_start_takes_no_steps() {
        let r = rosenbrock(1.0);
        let rep = lm_solve(&r, &[1.0, 1.0], &LMConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.solution, vec![1.0, 1.0]);
    }

    #[test]
    fn linear_converges_quickly() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let exact = a.clone().lu().solve(&b).unwrap();
        let rep = lm_solve(linear(a, b), &[0.0; 3], &LMConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 3, "{}", rep.iterations);
        for (x, y) in rep.solution.iter().zip(exact.iter()) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn rosenbrock_minimum() {
        let cfg = LMConfig {
            tol_residual: 1e-12,
            max_iters: 200,
            ..LMConfig::default()
        };
        let rep = lm_solve(rosenbrock(1.0), &[-1.2, 1.0], &cfg).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((rep.solution[0] - 1.0).abs() < 1e-8);
        assert!((rep.solution[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn accepted_residuals_strictly_decrease() {
        let cfg = LMConfig {
            max_iters: 200,
            ..LMConfig::default()
        };
        for (f, x0) in [(0, [-1.2, 1.0]), (1, [1.0, 0.1])] {
            let rep = if f == 0 {
                lm_solve(rosenbrock(1.0), &x0, &cfg).unwrap()
            } else {
                lm_solve(exp_fit(1.0), &x0, &cfg).unwrap()
            };
            assert!(rep.residual_history.windows(2).all(|w| w[1] < w[0]));
            assert_eq!(rep.residual_history.len(), rep.lambda_history.len() + 1);
        }
    }

    #[test]
    fn uniform_scaling_keeps_iterates() {
        let cfg = LMConfig::default();
        let a = lm_solve(exp_fit(1.0), &[1.0, 0.1], &cfg).unwrap();
        let b = lm_solve(exp_fit(4.0), &[1.0, 0.1], &cfg).unwrap();
        assert!(a.iterations > 2);
        assert_eq!(a.termination, b.termination);
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.lambda_history, b.lambda_history);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn deterministic_reports() {
        let cfg = LMConfig::default();
        let a = lm_solve(exp_fit(1.0), &[1.0, 0.1], &cfg).unwrap();
        let b = lm_solve(exp_fit(1.0), &[1.0, 0.1], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = LMConfig {
            max_iters: 2,
            ..LMConfig::default()
        };
        let rep = lm_solve(rosenbrock(1.0), &[-1.2, 1.0], &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.termination, Termination::MaxIterations);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn rejects_bad_config() {
        let r = rosenbrock(1.0);
        for cfg in [
            LMConfig {
                lambda_up: 0.5,
                ..LMConfig::default()
            },
            LMConfig {
                lambda_down: 1.5,
                ..LMConfig::default()
            },
            LMConfig {
                fd_step: 0.0,
                ..LMConfig::default()
            },
            LMConfig {
                max_iters: 0,
                ..LMConfig::default()
            },
        ] {
            assert!(lm_solve(&r, &[0.0, 0.0], &cfg).is_err());
        }
    }
}
