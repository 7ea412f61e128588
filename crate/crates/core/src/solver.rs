//! Implicit time-step kernels shared by the OU and transformed-equation
//! steppers: exact exponential updates for diagonal drifts, damped
//! Newton with a finite-difference Jacobian for the genuinely nonlinear
//! monotone operators (p-Laplace, porous media), and recursive step
//! halving on non-convergence.

use nalgebra::{DMatrix, DVector};

use crate::basis::SpectralField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonParams {
    fn default() -> Self {
        NewtonParams {
            tol: 1e-11,
            max_iter: 40,
        }
    }
}

/// Outcome of one implicit solve: the root plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct Solved {
    pub y: SpectralField,
    pub iters: usize,
    pub residual: f64,
}

/// Solve y − dt·F(y) = rhs for a monotone drift F by damped Newton.
/// The Galerkin root is unique (strong monotonicity of I − dt·F), so a
/// failure here is a step-size problem and is reported as such.
pub fn implicit_newton(
    rhs: &SpectralField,
    dt: f64,
    drift: &dyn Fn(&SpectralField) -> SpectralField,
    params: &NewtonParams,
    time: f64,
) -> Result<Solved> {
    let n = rhs.coeffs.len();
    let residual = |y: &SpectralField| -> SpectralField {
        y.sub(&drift(y).scale(dt)).sub(rhs)
    };
    let mut y = rhs.clone();
    let mut g = residual(&y);
    let scale = 1.0 + rhs.h_norm();
    for iter in 0..params.max_iter {
        let gnorm = g.h_norm();
        if !gnorm.is_finite() {
            return Err(Error::SolverDiverged {
                time,
                reason: "non-finite Newton residual".into(),
            });
        }
        if gnorm <= params.tol * scale {
            return Ok(Solved {
                y,
                iters: iter,
                residual: gnorm,
            });
        }
        // Forward-difference Jacobian of the residual map, column by
        // column; dense LU is cheap at spectral mode counts.
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let eps = 1e-7 * (1.0 + y.coeffs[j].abs());
            let mut yp = y.clone();
            yp.coeffs[j] += eps;
            let gp = residual(&yp);
            for i in 0..n {
                jac[(i, j)] = (gp.coeffs[i] - g.coeffs[i]) / eps;
            }
        }
        let rhs_vec = DVector::from_column_slice(&g.coeffs);
        let step = match jac.lu().solve(&rhs_vec) {
            Some(s) => s,
            None => {
                return Err(Error::SolverDiverged {
                    time,
                    reason: "singular Newton Jacobian".into(),
                })
            }
        };
        // Damping: halve until the residual norm decreases.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..25 {
            let mut cand = y.clone();
            for i in 0..n {
                cand.coeffs[i] -= lambda * step[i];
            }
            let gc = residual(&cand);
            if gc.h_norm() < gnorm {
                y = cand;
                g = gc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::SolverDiverged {
                time,
                reason: "Newton damping stalled".into(),
            });
        }
    }
    let gnorm = g.h_norm();
    if gnorm <= 100.0 * params.tol * scale {
        // Close enough that the iteration cap, not divergence, stopped us.
        return Ok(Solved {
            y,
            iters: params.max_iter,
            residual: gnorm,
        });
    }
    Err(Error::SolverDiverged {
        time,
        reason: format!("Newton did not converge (residual {gnorm:.3e})"),
    })
}

/// Implicit step with recursive halving: if the Newton solve fails at
/// step size dt, take two steps of dt/2 (noise already in `rhs`, so
/// substeps are drift-only after the first).
pub fn implicit_step_halving(
    state: &SpectralField,
    noise: Option<&[f64]>,
    dt: f64,
    drift: &dyn Fn(&SpectralField) -> SpectralField,
    params: &NewtonParams,
    time: f64,
    depth: usize,
) -> Result<Solved> {
    let mut rhs = state.clone();
    if let Some(inc) = noise {
        for (c, z) in rhs.coeffs.iter_mut().zip(inc) {
            *c += z;
        }
    }
    match implicit_newton(&rhs, dt, drift, params, time) {
        Ok(s) => Ok(s),
        Err(_) if depth > 0 => {
            let a = implicit_step_halving(state, noise, dt / 2.0, drift, params, time, depth - 1)?;
            let b = implicit_step_halving(
                &a.y,
                None,
                dt / 2.0,
                drift,
                params,
                time + dt / 2.0,
                depth - 1,
            )?;
            Ok(Solved {
                y: b.y,
                iters: a.iters + b.iters,
                residual: b.residual,
            })
        }
        Err(e) => Err(e),
    }
}
