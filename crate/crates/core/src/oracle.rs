//! Independent brute-force references used to validate the main engine:
//! finite-difference sensitivities, Richardson-extrapolated derivatives of
//! the cumulative response, nested-quadrature kernel evaluation, and the
//! scalar closed forms. Oracles always run at tolerances tightened by
//! [`ORACLE_TIGHTEN`] relative to the engine configuration they check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{
    integrate_final, kernel, simulate_resolved, SimConfig, Trajectory,
};
use crate::linsys::LinearSubsystem;
use crate::motifs::{InitialPolicy, MotifSpec, X0Policy, Y0Policy};
use crate::preset;

/// Tolerance tightening factor for oracle-side simulations.
pub const ORACLE_TIGHTEN: f64 = 100.0;

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One engine-vs-oracle comparison.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub quantity: String,
    pub engine: f64,
    pub oracle: f64,
    pub abs_gap: f64,
    /// `abs_gap / (1 + max(|engine|, |oracle|))`.
    pub rel_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn compare(quantity: impl Into<String>, engine: f64, oracle: f64, tolerance: f64) -> Self {
        let abs_gap = (engine - oracle).abs();
        let rel_gap = abs_gap / (1.0 + engine.abs().max(oracle.abs()));
        Self { quantity: quantity.into(), engine, oracle, abs_gap, rel_gap, tolerance, pass: rel_gap <= tolerance }
    }
}

// ---------------------------------------------------------------------------
// Quadrature helpers
// ---------------------------------------------------------------------------

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_rec(f, a, b, fa, fb, fc, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let split = left + right;
    if depth == 0 || (split - whole).abs() <= 15.0 * tol {
        split + (split - whole) / 15.0
    } else {
        simpson_rec(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)
            + simpson_rec(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
    }
}

/// Composite Simpson over uniformly spaced samples (trapezoid closing an
/// odd final interval).
pub fn composite_simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    let pairs = (n - 1) / 2;
    for k in 0..pairs {
        let i = 2 * k;
        acc += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
    }
    if (n - 1) % 2 == 1 {
        acc += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    acc
}

/// Cubic Lagrange interpolation on a uniform grid.
fn interp_cubic(ts: &[f64], vs: &[f64], s: f64) -> f64 {
    let n = ts.len();
    debug_assert!(n >= 4);
    let h = ts[1] - ts[0];
    let raw = ((s - ts[0]) / h).floor() as isize;
    let i = raw.clamp(1, n as isize - 3) as usize;
    let xi = (s - ts[i]) / h;
    let wm1 = -xi * (xi - 1.0) * (xi - 2.0) / 6.0;
    let w0 = (xi + 1.0) * (xi - 1.0) * (xi - 2.0) / 2.0;
    let w1 = -(xi + 1.0) * xi * (xi - 2.0) / 2.0;
    let w2 = (xi + 1.0) * xi * (xi - 1.0) / 6.0;
    wm1 * vs[i - 1] + w0 * vs[i] + w1 * vs[i + 1] + w2 * vs[i + 2]
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Finite-difference sensitivity series `q_hat(t) = [y_{u+h}(t) -
/// y_{u-h}(t)] / (2h)` from two independent tightened simulations with the
/// initial condition frozen at its base-`u` resolution.
pub fn fd_sensitivity(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    u: f64,
    init: &InitialPolicy,
    cfg: &SimConfig,
    h: f64,
) -> Result<Vec<f64>> {
    if !(u - h > 0.0) {
        return Err(Error::invalid(format!("fd_sensitivity requires u - h > 0 (u={u}, h={h})")));
    }
    let (x0, y0) = init.resolve(motif, sys, u)?;
    let tight = cfg.tightened(ORACLE_TIGHTEN);
    let plus = simulate_resolved(sys, motif, u + h, &x0, y0, &tight)?;
    let minus = simulate_resolved(sys, motif, u - h, &x0, y0, &tight)?;
    Ok(plus
        .y
        .iter()
        .zip(&minus.y)
        .map(|(&yp, &ym)| (yp - ym) / (2.0 * h))
        .collect())
}

/// Order-4 Richardson extrapolation of the central difference of the
/// cumulative response in `u`, base step `1e-3 u`.
pub fn richardson_dcdr(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    u: f64,
    init: &InitialPolicy,
    cfg: &SimConfig,
) -> Result<f64> {
    let h = 1e-3 * u;
    if !(u > 2.0 * h) {
        return Err(Error::invalid(format!("richardson_dcdr requires u > 2 h_base, u = {u}")));
    }
    let (x0, y0) = init.resolve(motif, sys, u)?;
    let tight = cfg.tightened(ORACLE_TIGHTEN);
    let central = |step: f64| -> Result<f64> {
        let plus = integrate_final(sys, motif, u + step, &x0, y0, &tight)?;
        let minus = integrate_final(sys, motif, u - step, &x0, y0, &tight)?;
        Ok((plus.cdr - minus.cdr) / (2.0 * step))
    };
    let d_h = central(h)?;
    let d_h2 = central(h / 2.0)?;
    Ok((4.0 * d_h2 - d_h) / 3.0)
}

/// Direct nested-quadrature evaluation of the kernel
/// `lambda(t) = int_t^T exp(-int_t^s a(tau) dtau) ds` from the stored
/// rate series.
pub fn lambda_by_quadrature(traj: &Trajectory, t_probe: f64) -> f64 {
    let t_end = *traj.t.last().unwrap();
    assert!(
        (0.0..=t_end).contains(&t_probe),
        "probe time {t_probe} outside [0, {t_end}]"
    );
    if t_probe == t_end {
        return 0.0;
    }
    let a_of = |s: f64| interp_cubic(&traj.t, &traj.a, s);
    let outer = |s: f64| {
        let accumulated = adaptive_simpson(&a_of, t_probe, s, 1e-12);
        (-accumulated).exp()
    };
    adaptive_simpson(&outer, t_probe, t_end, 1e-11)
}

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

/// Engine-vs-oracle suite over the built-in configuration: sensitivity
/// endpoints against finite differences, both derivative routes against the
/// Richardson oracle, the backward kernel against nested quadrature and the
/// constant-rate closed form, the scalar closed forms, and the integral
/// representation identity.
pub fn run_verification(cfg: &SimConfig) -> Result<Vec<OracleReport>> {
    let mut reports = Vec::new();
    let sys5 = preset::subsystem();
    let sys1 = LinearSubsystem::new(nalgebra::dmatrix![-1.0], nalgebra::dvector![1.0])?;

    // Catalog: 8 scalar kinds at x0 = 0.5, y0 = 1 plus the four IFFMs with
    // their preset start rules.
    let mut entries: Vec<(String, LinearSubsystem, MotifSpec, InitialPolicy)> = Vec::new();
    for row in 1..=8 {
        let m = MotifSpec::scalar(row)?;
        entries.push((
            format!("scalar-{row}"),
            sys1.clone(),
            m,
            InitialPolicy::explicit(nalgebra::dvector![0.5], 1.0),
        ));
    }
    for iffm in 1..=4 {
        let m = preset::motif(iffm);
        let init = InitialPolicy::new(X0Policy::Explicit(preset::x0(2)), preset::y0_policy(m.kind()));
        entries.push((format!("iffm-{iffm}"), sys5.clone(), m, init));
    }

    for (name, sys, motif, init) in &entries {
        for &u in &[0.1, 1.0, 10.0] {
            let (x0, y0) = init.resolve(motif, sys, u)?;
            let traj = simulate_resolved(sys, motif, u, &x0, y0, cfg)?;
            let h = 1e-4 * u.max(1.0);
            let q_hat = fd_sensitivity(sys, motif, u, init, cfg, h)?;
            reports.push(OracleReport::compare(
                format!("{name} u={u} q(T) vs central difference"),
                *traj.q.last().unwrap(),
                *q_hat.last().unwrap(),
                1e-5,
            ));

            let ker = kernel(&traj);
            reports.push(OracleReport::compare(
                format!("{name} u={u} sensitivity route vs kernel route (du cDR)"),
                traj.int_q(),
                ker.weighted_g_integral,
                1e-7,
            ));

            let rich = richardson_dcdr(sys, motif, u, init, cfg)?;
            reports.push(OracleReport::compare(
                format!("{name} u={u} du cDR vs Richardson"),
                traj.int_q(),
                rich,
                1e-6,
            ));
        }
    }

    // Kernel against nested quadrature at probe times (state-dependent rate).
    {
        let m = preset::motif(1);
        let init = InitialPolicy::new(X0Policy::Explicit(preset::x0(2)), Y0Policy::AdaptedSteadyState);
        let (x0, y0) = init.resolve(&m, &sys5, 1.0)?;
        let traj = simulate_resolved(&sys5, &m, 1.0, &x0, y0, cfg)?;
        let ker = kernel(&traj);
        for &frac in &[0.0, 0.25, 0.5, 0.75] {
            let idx = ((traj.t.len() - 1) as f64 * frac) as usize;
            reports.push(OracleReport::compare(
                format!("iffm-1 u=1 kernel at t={:.3} vs nested quadrature", traj.t[idx]),
                ker.lambda[idx],
                lambda_by_quadrature(&traj, traj.t[idx]),
                1e-7,
            ));
        }
    }

    // Constant-rate kernel closed form.
    {
        let m = preset::motif(3);
        let init = InitialPolicy::new(X0Policy::Explicit(preset::x0(2)), Y0Policy::AdaptedSteadyState);
        let (x0, y0) = init.resolve(&m, &sys5, 1.0)?;
        let traj = simulate_resolved(&sys5, &m, 1.0, &x0, y0, cfg)?;
        let ker = kernel(&traj);
        let du = preset::D * 1.0;
        let t_end = cfg.t_horizon;
        for &frac in &[0.0, 0.5] {
            let idx = ((traj.t.len() - 1) as f64 * frac) as usize;
            let t = traj.t[idx];
            reports.push(OracleReport::compare(
                format!("iffm-3 u=1 kernel at t={t:.3} vs closed form"),
                ker.lambda[idx],
                (1.0 - (-du * (t_end - t)).exp()) / du,
                1e-9,
            ));
        }
    }

    // Scalar propagation closed forms.
    {
        let m = MotifSpec::scalar(1)?;
        let (x0v, u) = (2.0, 0.5);
        let traj = simulate_resolved(&sys1, &m, u, &nalgebra::dvector![x0v], 1.0, cfg)?;
        let mut worst_x = 0.0_f64;
        let mut worst_p = 0.0_f64;
        for i in 0..traj.len() {
            let (x_cf, p_cf) = crate::integrator::closed_form_scalar(m.kind(), u, x0v, traj.t[i])?;
            worst_x = worst_x.max((traj.x_at(i)[0] - x_cf).abs());
            worst_p = worst_p.max((traj.p_at(i)[0] - p_cf).abs());
        }
        reports.push(OracleReport::compare("scalar x(t) vs closed form (max gap)", worst_x, 0.0, 1e-9));
        reports.push(OracleReport::compare("scalar p(t) vs closed form (max gap)", worst_p, 0.0, 1e-9));
    }

    Ok(reports)
}
