//! Dense matrix exponential by scaling and squaring with Padé approximants.
//!
//! Implements the degree-(3,5,7,9,13) diagonal Padé scheme with the usual
//! 1-norm thresholds, which keeps the relative error near machine precision
//! for the desk-scale matrices used here. Serves as the reference propagator
//! the adaptive integrator is checked against, so accuracy matters more than
//! speed.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068;
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17_297_280.0, 8_648_640.0, 1_995_840.0, 277_200.0, 25_200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Maximum absolute column sum.
fn norm_1(a: &DMatrix<f64>) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Compute `exp(a)` for a square real matrix.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::invalid("expm: matrix has nonfinite entries"));
    }

    if norm <= THETA_3 {
        return pade(a, &B3);
    }
    if norm <= THETA_5 {
        return pade(a, &B5);
    }
    if norm <= THETA_7 {
        return pade(a, &B7);
    }
    if norm <= THETA_9 {
        return pade(a, &B9);
    }

    // Scale so the norm drops below the degree-13 threshold, then square back.
    let squarings = if norm <= THETA_13 {
        0
    } else {
        (norm / THETA_13).log2().ceil() as u32
    };
    let scaled = a * 2.0_f64.powi(-(squarings as i32));
    let mut e = pade13(&scaled)?;
    for _ in 0..squarings {
        e = &e * &e;
    }
    Ok(e)
}

/// Diagonal Padé approximant of degree `b.len() - 1` (odd degrees 3, 5, 7, 9).
fn pade(a: &DMatrix<f64>, b: &[f64]) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;

    // Even powers a^0, a^2, a^4, ...
    let mut even_pows = vec![ident.clone(), a2.clone()];
    while even_pows.len() < b.len() / 2 + 1 {
        let next = even_pows.last().unwrap() * &a2;
        even_pows.push(next);
    }

    let mut u_poly = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (i, &coef) in b.iter().enumerate() {
        if i % 2 == 1 {
            u_poly += &even_pows[i / 2] * coef;
        } else {
            v += &even_pows[i / 2] * coef;
        }
    }
    let u = a * u_poly;
    solve_pade(u, v)
}

/// Degree-13 Padé approximant with the factored Higham evaluation.
fn pade13(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u_outer = &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = a * (u_inner + u_outer);

    let v_inner = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_inner + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    solve_pade(u, v)
}

/// Solve (V - U) X = (V + U).
fn solve_pade(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lhs = &v - &u;
    let rhs = &v + &u;
    lhs.lu()
        .solve(&rhs)
        .ok_or(Error::SingularMatrix { residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_matrix_gives_identity() {
        let a = DMatrix::<f64>::zeros(3, 3);
        let e = expm(&a).unwrap();
        assert_eq!(e, DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, 2.5, -0.3]);
        let e = expm(&a).unwrap();
        for (i, lam) in [-1.0f64, 2.5, -0.3].iter().enumerate() {
            assert_relative_eq!(e[(i, i)], lam.exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn nilpotent_matrix() {
        // exp([[0,1],[0,0]]) = I + A exactly.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&a).unwrap();
        assert_relative_eq!(e[(0, 0)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(e[(0, 1)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(e[(1, 0)], 0.0, epsilon = 1e-15);
        assert_relative_eq!(e[(1, 1)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rotation_generator() {
        // exp(theta * [[0,-1],[1,0]]) is a rotation by theta.
        for &theta in &[0.1, 1.0, 3.0, 10.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
            let e = expm(&a).unwrap();
            assert_relative_eq!(e[(0, 0)], theta.cos(), epsilon = 1e-12);
            assert_relative_eq!(e[(1, 0)], theta.sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_matches_negated_argument() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-3.0, 0.8, 0.1, 0.4, -2.6, 0.7, 0.2, 0.5, -2.8],
        );
        let t = 1.7;
        let e_pos = expm(&(&a * t)).unwrap();
        let e_neg = expm(&(&a * (-t))).unwrap();
        let prod = &e_pos * &e_neg;
        let ident = DMatrix::<f64>::identity(3, 3);
        assert!((prod - ident).norm() < 1e-13, "exp(At) exp(-At) should be I");
    }

    #[test]
    fn large_norm_triggers_squaring() {
        // 1x1 sanity at a norm far above theta_13.
        let a = DMatrix::from_row_slice(1, 1, &[-40.0]);
        let e = expm(&a).unwrap();
        assert_relative_eq!(e[(0, 0)], (-40.0_f64).exp(), max_relative = 1e-12);
    }
}
