//! Forward integration of the augmented system and the backward kernel pass.
//!
//! One forward pass integrates, per `(motif, u, x0, y0)`:
//!
//! ```text
//! x' = A x + b u            p' = A p + b          y' = F(x, y, u)
//! q' = g - a q              (int_y)' = y          (int_q)' = q        G' = g
//! ```
//!
//! with `a = -dF/dy` and `g = dF/dx . p + dF/du` evaluated along the
//! trajectory, using an adaptive Dormand–Prince 5(4) pair. Steps never cross
//! output sample times, so every sample lands on an accepted-step boundary.
//!
//! The kernel `lambda(t) = int_t^T exp(-int_t^s a) ds` obeys the backward
//! equation `lambda' = a lambda - 1`, `lambda(T) = 0`. Instead of re-solving
//! that equation against interpolated samples (which loses the sub-grid
//! transients the forward pass resolved), each accepted step co-integrates
//! four step-local quadratures, reset at every step boundary:
//!
//! ```text
//! alpha' = a        eta'   = exp(-alpha)
//! sigma' = exp(alpha) g    omega' = exp(-alpha) sigma
//! ```
//!
//! which give the exact one-step recursion
//!
//! ```text
//! lambda(t_k) = eta_k + phi_k lambda(t_{k+1}),    phi_k = exp(-alpha_k),
//! int_{t_k}^{t_{k+1}} lambda g dt = omega_k + phi_k sigma_k lambda(t_{k+1}),
//! ```
//!
//! so the backward pass is a pure recurrence with no interpolation error and
//! `int_0^T lambda g dt` comes out error-controlled end to end. `alpha` per
//! step is bounded by the explicit stability limit, so the exponentials stay
//! tame.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linsys::LinearSubsystem;
use crate::motifs::{InitialPolicy, MotifKind, MotifSpec, DEFAULT_X_FLOOR};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Integrator and sampling configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Horizon `T > 0`.
    pub t_horizon: f64,
    /// Relative tolerance, in `(0, 1e-3]`.
    pub rtol: f64,
    /// Absolute tolerance, in `(0, rtol]`.
    pub atol: f64,
    /// Maximum step size (default: unbounded; steps are already clipped to
    /// the sample grid).
    pub dt_max: f64,
    /// Output grid size over `[0, T]`, at least 64.
    pub n_samples: usize,
    /// Positivity floor for guarded denominators.
    pub x_floor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_horizon: 1.5,
            rtol: 1e-9,
            atol: 1e-12,
            dt_max: f64::INFINITY,
            n_samples: 2001,
            x_floor: DEFAULT_X_FLOOR,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_horizon > 0.0 && self.t_horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon T = {} must be positive", self.t_horizon)));
        }
        if !(self.rtol > 0.0 && self.rtol <= 1e-3) {
            return Err(Error::invalid(format!("rtol = {} must lie in (0, 1e-3]", self.rtol)));
        }
        if !(self.atol > 0.0 && self.atol <= self.rtol) {
            return Err(Error::invalid(format!(
                "atol = {} must lie in (0, rtol = {}]",
                self.atol, self.rtol
            )));
        }
        if self.n_samples < 64 {
            return Err(Error::invalid(format!(
                "n_samples = {} must be at least 64",
                self.n_samples
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::invalid("dt_max must be positive"));
        }
        if !(self.x_floor > 0.0) {
            return Err(Error::invalid("x_floor must be positive"));
        }
        Ok(())
    }

    /// Copy with tolerances tightened by `factor` (for oracle runs).
    pub fn tightened(&self, factor: f64) -> SimConfig {
        SimConfig {
            rtol: (self.rtol / factor).max(1e-13),
            atol: (self.atol / factor).max(1e-16),
            ..self.clone()
        }
    }

    /// Uniform output grid `[0, T]` with exact endpoints.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.n_samples;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.t_horizon
                } else {
                    self.t_horizon * (i as f64) / ((n - 1) as f64)
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

/// Identifies the run a trajectory came from.
#[derive(Debug, Clone)]
pub struct TrajectoryMeta {
    pub kind: MotifKind,
    pub u: f64,
    pub x0: DVector<f64>,
    pub y0: f64,
}

/// Per-step kernel quadrature record (see module docs).
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepRecord {
    pub t_end: f64,
    pub phi: f64,
    pub eta: f64,
    pub r: f64,
    pub w: f64,
}

/// Time-sampled augmented state for one `(motif, u, x0, y0)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    n: usize,
    x: Vec<f64>,
    p: Vec<f64>,
    pub y: Vec<f64>,
    pub q: Vec<f64>,
    pub int_y: Vec<f64>,
    pub big_g: Vec<f64>,
    pub a: Vec<f64>,
    pub g: Vec<f64>,
    pub meta: TrajectoryMeta,
    int_q_final: f64,
    pub(crate) steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.n..(i + 1) * self.n]
    }

    pub fn p_at(&self, i: usize) -> &[f64] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    /// Co-integrated `int_0^T q dt`: the sensitivity-route value of
    /// `d(cDR)/du`.
    pub fn int_q(&self) -> f64 {
        self.int_q_final
    }
}

/// Kernel weight `lambda` and its derivative on the trajectory's grid.
#[derive(Debug, Clone)]
pub struct KernelProfile {
    pub t: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_dot: Vec<f64>,
    /// `int_0^T lambda g dt`: the kernel-route value of `d(cDR)/du`.
    pub weighted_g_integral: f64,
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)
// ---------------------------------------------------------------------------

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// 5th-order weights (the advancing solution).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Error weights: 5th-order minus embedded 4th-order.
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 50_000_000;

/// Outcome of one right-hand-side evaluation: the motif terms needed for
/// sampling and the FSAL fix-up.
#[derive(Clone, Copy)]
struct RhsInfo {
    a: f64,
    g: f64,
}

/// Flattened system for the hot loop.
struct AugmentedRhs<'m> {
    n: usize,
    a_rows: Vec<f64>,
    b: Vec<f64>,
    motif: &'m MotifSpec,
    u: f64,
    x_floor: f64,
}

impl<'m> AugmentedRhs<'m> {
    fn new(sys: &LinearSubsystem, motif: &'m MotifSpec, u: f64, x_floor: f64) -> Self {
        let n = sys.dim();
        let mut a_rows = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a_rows[i * n + j] = sys.a()[(i, j)];
            }
        }
        Self { n, a_rows, b: sys.b().iter().cloned().collect(), motif, u, x_floor }
    }

    fn state_len(&self) -> usize {
        2 * self.n + 9
    }

    /// Evaluate the augmented derivative. Indices: `[x; p; y; q; int_y;
    /// int_q; G; alpha; eta; sigma; omega]`.
    fn eval(&self, s: &[f64], out: &mut [f64]) -> Result<RhsInfo> {
        let n = self.n;
        let (x, rest) = s.split_at(n);
        let (p, tail) = rest.split_at(n);
        let y = tail[0];
        let q = tail[1];
        let alpha = tail[5];
        let sigma = tail[7];

        let c = self.motif.c();
        let mut s_cx = 0.0;
        let mut s_cp = 0.0;
        for i in 0..n {
            s_cx += c[i] * x[i];
            s_cp += c[i] * p[i];
        }
        let terms = self.motif.terms(s_cx, y, self.u, self.x_floor)?;
        let g = terms.gamma * s_cp + terms.df_du;
        let a = terms.a;

        for i in 0..n {
            let row = &self.a_rows[i * n..(i + 1) * n];
            let mut ax = 0.0;
            let mut ap = 0.0;
            for j in 0..n {
                ax += row[j] * x[j];
                ap += row[j] * p[j];
            }
            out[i] = ax + self.b[i] * self.u;
            out[n + i] = ap + self.b[i];
        }
        let exp_neg = (-alpha).exp();
        let exp_pos = alpha.exp();
        out[2 * n] = terms.f;
        out[2 * n + 1] = g - a * q;
        out[2 * n + 2] = y;
        out[2 * n + 3] = q;
        out[2 * n + 4] = g;
        out[2 * n + 5] = a;
        out[2 * n + 6] = exp_neg;
        out[2 * n + 7] = exp_pos * g;
        out[2 * n + 8] = exp_neg * sigma;
        Ok(RhsInfo { a, g })
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Integrate the augmented system, resolving the initial condition through
/// the policy at this `u`.
pub fn simulate(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    u: f64,
    init: &InitialPolicy,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    let (x0, y0) = init.resolve(motif, sys, u)?;
    simulate_resolved(sys, motif, u, &x0, y0, cfg)
}

/// Integrate with an explicit, already-resolved initial condition.
///
/// Finite-difference probes in `u` must hold `(x0, y0)` fixed while varying
/// `u`; this entry point makes that explicit.
pub fn simulate_resolved(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    u: f64,
    x0: &DVector<f64>,
    y0: f64,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    integrate(sys, motif, u, x0, y0, cfg, &cfg.sample_times())
}

/// Final dose-response values from a free-stepping run (no dense sampling).
pub(crate) struct FinalState {
    pub cdr: f64,
}

pub(crate) fn integrate_final(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    u: f64,
    x0: &DVector<f64>,
    y0: f64,
    cfg: &SimConfig,
) -> Result<FinalState> {
    let traj = integrate(sys, motif, u, x0, y0, cfg, &[0.0, cfg.t_horizon])?;
    Ok(FinalState { cdr: *traj.int_y.last().unwrap() })
}

fn integrate(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    u: f64,
    x0: &DVector<f64>,
    y0: f64,
    cfg: &SimConfig,
    sample_times: &[f64],
) -> Result<Trajectory> {
    if sys.dim() != motif.dim() {
        return Err(Error::DimensionMismatch { expected: motif.dim(), found: sys.dim() });
    }
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: x0.len() });
    }
    if !(u > 0.0) {
        return Err(Error::invalid(format!("simulate requires u > 0, got {u}")));
    }
    if x0.iter().any(|&v| v < 0.0) || y0 < 0.0 {
        return Err(Error::invalid("initial condition must be nonnegative"));
    }

    let rhs = AugmentedRhs::new(sys, motif, u, cfg.x_floor);
    let n = rhs.n;
    let m = rhs.state_len();
    let t_end = *sample_times.last().unwrap();
    let h_floor = 1e-12 * t_end;

    let mut state = vec![0.0; m];
    state[..n].copy_from_slice(x0.as_slice());
    state[2 * n] = y0;

    let n_out = sample_times.len();
    let mut traj = Trajectory {
        t: Vec::with_capacity(n_out),
        n,
        x: Vec::with_capacity(n_out * n),
        p: Vec::with_capacity(n_out * n),
        y: Vec::with_capacity(n_out),
        q: Vec::with_capacity(n_out),
        int_y: Vec::with_capacity(n_out),
        big_g: Vec::with_capacity(n_out),
        a: Vec::with_capacity(n_out),
        g: Vec::with_capacity(n_out),
        meta: TrajectoryMeta { kind: motif.kind(), u, x0: x0.clone(), y0 },
        int_q_final: 0.0,
        steps: Vec::with_capacity(n_out + 64),
    };

    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut k5 = vec![0.0; m];
    let mut k6 = vec![0.0; m];
    let mut k7 = vec![0.0; m];
    let mut stage = vec![0.0; m];
    let mut next = vec![0.0; m];

    // Initial evaluation doubles as the t = 0 domain check.
    let info0 = rhs.eval(&state, &mut k1).map_err(|e| with_time(e, 0.0))?;
    record_sample(&mut traj, 0.0, &state, info0);

    let mut t = 0.0_f64;
    let mut h = (t_end * 1e-3).min(cfg.dt_max);
    let mut sample_idx = 1;
    let mut steps_taken = 0usize;

    while sample_idx < sample_times.len() {
        let t_target = sample_times[sample_idx];
        if t_target <= t {
            sample_idx += 1;
            continue;
        }

        'advance: loop {
            steps_taken += 1;
            if steps_taken > MAX_STEPS {
                return Err(Error::StepFailure { t, h });
            }
            let dist = t_target - t;
            let hitting = h >= dist;
            let h_try = if hitting { dist } else { h };

            let status = attempt_step(
                &rhs,
                cfg,
                &state,
                h_try,
                &k1,
                &mut k2,
                &mut k3,
                &mut k4,
                &mut k5,
                &mut k6,
                &mut k7,
                &mut stage,
                &mut next,
            );

            match status {
                StepOutcome::Domain => {
                    // A trial stage left the domain; try a smaller step
                    // before declaring a violation.
                    h = h_try * 0.5;
                    if h < h_floor {
                        return Err(Error::DomainViolation { t });
                    }
                    continue 'advance;
                }
                StepOutcome::Reject(err_norm) => {
                    let factor = if err_norm.is_finite() {
                        (0.9 * err_norm.powf(-0.2)).clamp(0.2, 0.9)
                    } else {
                        0.2
                    };
                    h = h_try * factor;
                    if h < h_floor {
                        return Err(Error::StepFailure { t, h });
                    }
                    continue 'advance;
                }
                StepOutcome::Accept { err_norm, info } => {
                    let t_new = if hitting { t_target } else { t + h_try };

                    // Kernel quadrature for this step, then reset locals.
                    let alpha_end = next[2 * n + 5];
                    let eta_end = next[2 * n + 6];
                    let sigma_end = next[2 * n + 7];
                    let omega_end = next[2 * n + 8];
                    let phi = (-alpha_end).exp();
                    traj.steps.push(StepRecord {
                        t_end: t_new,
                        phi,
                        eta: eta_end,
                        r: phi * sigma_end,
                        w: omega_end,
                    });
                    next[2 * n + 5] = 0.0;
                    next[2 * n + 6] = 0.0;
                    next[2 * n + 7] = 0.0;
                    next[2 * n + 8] = 0.0;

                    state.copy_from_slice(&next);
                    t = t_new;

                    // FSAL: k7 is the derivative at the accepted state, with
                    // the step-local components re-based to zero.
                    k1.copy_from_slice(&k7);
                    k1[2 * n + 6] = 1.0;
                    k1[2 * n + 7] = info.g;
                    k1[2 * n + 8] = 0.0;

                    let grow = if err_norm == 0.0 {
                        5.0
                    } else {
                        (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    let proposal = (h_try * grow).min(cfg.dt_max);
                    // Keep the larger running proposal across clipped steps so
                    // hitting a sample time does not collapse the step size.
                    h = if hitting { h.max(proposal).min(cfg.dt_max) } else { proposal };

                    if hitting {
                        record_sample(&mut traj, t, &state, info);
                        sample_idx += 1;
                        break 'advance;
                    }
                }
            }
        }
    }

    traj.int_q_final = state[2 * n + 3];
    Ok(traj)
}

enum StepOutcome {
    Accept { err_norm: f64, info: RhsInfo },
    Reject(f64),
    Domain,
}

#[allow(clippy::too_many_arguments)]
fn attempt_step(
    rhs: &AugmentedRhs<'_>,
    cfg: &SimConfig,
    state: &[f64],
    h: f64,
    k1: &[f64],
    k2: &mut [f64],
    k3: &mut [f64],
    k4: &mut [f64],
    k5: &mut [f64],
    k6: &mut [f64],
    k7: &mut [f64],
    stage: &mut [f64],
    next: &mut [f64],
) -> StepOutcome {
    let m = state.len();

    macro_rules! try_eval {
        ($buf:expr) => {
            match rhs.eval(stage, $buf) {
                Ok(info) => info,
                Err(Error::DomainViolation { .. }) => return StepOutcome::Domain,
                Err(_) => return StepOutcome::Reject(f64::INFINITY),
            }
        };
    }

    for i in 0..m {
        stage[i] = state[i] + h * A21 * k1[i];
    }
    try_eval!(k2);

    for i in 0..m {
        stage[i] = state[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    try_eval!(k3);

    for i in 0..m {
        stage[i] = state[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    try_eval!(k4);

    for i in 0..m {
        stage[i] = state[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    try_eval!(k5);

    for i in 0..m {
        stage[i] =
            state[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    try_eval!(k6);

    for i in 0..m {
        next[i] =
            state[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    stage.copy_from_slice(next);
    let info = try_eval!(k7);

    let mut err_acc = 0.0;
    for i in 0..m {
        let e = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = cfg.atol + cfg.rtol * state[i].abs().max(next[i].abs());
        let r = e / sc;
        err_acc += r * r;
    }
    let err_norm = (err_acc / m as f64).sqrt();
    if !err_norm.is_finite() {
        return StepOutcome::Reject(f64::INFINITY);
    }
    if err_norm <= 1.0 {
        StepOutcome::Accept { err_norm, info }
    } else {
        StepOutcome::Reject(err_norm)
    }
}

fn with_time(e: Error, t: f64) -> Error {
    match e {
        Error::DomainViolation { .. } => Error::DomainViolation { t },
        other => other,
    }
}

fn record_sample(traj: &mut Trajectory, t: f64, state: &[f64], info: RhsInfo) {
    let n = traj.n;
    traj.t.push(t);
    traj.x.extend_from_slice(&state[..n]);
    traj.p.extend_from_slice(&state[n..2 * n]);
    traj.y.push(state[2 * n]);
    traj.q.push(state[2 * n + 1]);
    traj.int_y.push(state[2 * n + 2]);
    traj.big_g.push(state[2 * n + 4]);
    traj.a.push(info.a);
    traj.g.push(info.g);
}

// ---------------------------------------------------------------------------
// Backward kernel pass
// ---------------------------------------------------------------------------

/// Kernel weight on the trajectory's sample grid, via the exact per-step
/// recursion accumulated during the forward pass.
pub fn kernel(traj: &Trajectory) -> KernelProfile {
    let steps = &traj.steps;
    // lambda at step boundaries: boundary k is the start of step k;
    // boundary steps.len() is the horizon, where lambda = 0.
    let mut lambda_bounds = vec![0.0; steps.len() + 1];
    let mut weighted = 0.0;
    let mut lam_next = 0.0;
    for k in (0..steps.len()).rev() {
        weighted += steps[k].w + steps[k].r * lam_next;
        lam_next = steps[k].eta + steps[k].phi * lam_next;
        lambda_bounds[k] = lam_next;
    }

    // Boundary times are [0, steps[0].t_end, ..., T]; sample times are a
    // subset because steps are clipped to the sample grid.
    let mut lambda = Vec::with_capacity(traj.len());
    let mut cursor = 0usize;
    for &ts in &traj.t {
        while cursor < steps.len() && boundary_time(traj, cursor) < ts - 1e-14 {
            cursor += 1;
        }
        lambda.push(lambda_bounds[cursor]);
    }

    let lambda_dot: Vec<f64> =
        traj.a.iter().zip(&lambda).map(|(&a, &l)| a * l - 1.0).collect();

    KernelProfile { t: traj.t.clone(), lambda, lambda_dot, weighted_g_integral: weighted }
}

fn boundary_time(traj: &Trajectory, boundary: usize) -> f64 {
    if boundary == 0 {
        0.0
    } else {
        traj.steps[boundary - 1].t_end
    }
}

// ---------------------------------------------------------------------------
// Scalar closed forms
// ---------------------------------------------------------------------------

/// Closed-form intermediate state and sensitivity for the scalar kinds:
/// `x(t) = u + (x0 - u) e^{-t}`, `p(t) = 1 - e^{-t}`.
pub fn closed_form_scalar(kind: MotifKind, u: f64, x0: f64, t: f64) -> Result<(f64, f64)> {
    if !kind.is_scalar() {
        return Err(Error::UnsupportedKind { kind: kind.name().to_string() });
    }
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("closed form requires t >= 0, got {t}")));
    }
    let decay = (-t).exp();
    Ok((u + (x0 - u) * decay, 1.0 - decay))
}
