//! The linear intermediate subsystem `x' = A x + b u`.
//!
//! `A` must be Metzler (nonnegative off-diagonal) and Hurwitz (spectral
//! abscissa strictly negative), and `b` strictly positive, so the subsystem
//! is a stable positive linear system: trajectories started in the
//! nonnegative orthant stay there and converge to `x_ss(u) = -A^{-1} b u`.
//!
//! Propagation is closed-form through the matrix exponential. The input
//! sensitivity `p(t) = dx/du` solves `p' = A p + b, p(0) = 0` and is obtained
//! from the block exponential
//!
//! ```text
//! exp( [A b; 0 0] t ) = [ exp(At)  p(t) ]
//!                       [   0       1   ]
//! ```
//!
//! which avoids the cancellation in `A^{-1} (exp(At) - I) b` at small `t`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expm::expm;

/// Spectral abscissa must fall below this threshold to count as Hurwitz.
const HURWITZ_TOL: f64 = -1e-9;

/// Relative residual bound for the steady-state linear solve.
const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Validated stable positive linear subsystem `x' = A x + b u`.
#[derive(Debug, Clone)]
pub struct LinearSubsystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    abscissa: f64,
}

impl LinearSubsystem {
    /// Validate `(A, b)` and construct the subsystem.
    ///
    /// Checks, in order: shape, the Metzler sign pattern, strict positivity
    /// of `b`, and the Hurwitz property via dense eigenvalues.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n.max(1), found: a.ncols() });
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && a[(i, j)] < 0.0 {
                    return Err(Error::NotMetzler { row: i, col: j, value: a[(i, j)] });
                }
            }
        }
        for (i, &v) in b.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonPositiveInput { index: i, value: v });
            }
        }
        let abscissa = a
            .complex_eigenvalues()
            .iter()
            .map(|ev| ev.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(abscissa < HURWITZ_TOL) {
            return Err(Error::NotHurwitz { abscissa });
        }
        Ok(Self { a, b, abscissa })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Largest real part over the eigenvalues of `A`.
    pub fn spectral_abscissa(&self) -> f64 {
        self.abscissa
    }

    /// `-A^{-1} b`, the steady state for unit input.
    pub fn neg_a_inv_b(&self) -> Result<DVector<f64>> {
        self.steady_state(1.0)
    }

    /// Steady state `x_ss(u)` solving `A x = -b u` for `u > 0`.
    pub fn steady_state(&self, u: f64) -> Result<DVector<f64>> {
        if !(u > 0.0) {
            return Err(Error::invalid(format!("steady_state requires u > 0, got {u}")));
        }
        let rhs = &self.b * (-u);
        let x = self
            .a
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularMatrix { residual: f64::INFINITY })?;
        let residual = (&self.a * &x - &rhs).norm();
        let scale = 1.0 + rhs.norm();
        if !(residual <= SOLVE_RESIDUAL_TOL * scale) {
            return Err(Error::SingularMatrix { residual });
        }
        Ok(x)
    }

    /// Transition matrix `exp(At)` and input sensitivity `p(t)` at time `t >= 0`.
    pub fn propagator(&self, t: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("propagator requires t >= 0, got {t}")));
        }
        let n = self.dim();
        let mut block = DMatrix::<f64>::zeros(n + 1, n + 1);
        block.view_mut((0, 0), (n, n)).copy_from(&(&self.a * t));
        block.view_mut((0, n), (n, 1)).copy_from(&(&self.b * t));
        let e = expm(&block)?;
        let e_at = e.view((0, 0), (n, n)).into_owned();
        let p = e.view((0, n), (n, 1)).column(0).into_owned();
        Ok((e_at, p))
    }

    /// Propagate state and sensitivity: `x(t) = exp(At) x0 + u p(t)`, `p(t)`.
    pub fn propagate(&self, u: f64, x0: &DVector<f64>, t: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        if x0.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x0.len() });
        }
        if x0.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("propagate requires x0 >= 0 elementwise"));
        }
        let (e_at, p) = self.propagator(t)?;
        let x = &e_at * x0 + &p * u;
        Ok((x, p))
    }
}
