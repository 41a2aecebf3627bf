//! Monotonicity certification and non-monotonicity detection.
//!
//! The sufficient conditions come in two families, checked per grid input
//! on the sampled series:
//!
//! - fixed sign of the kernel `lambda` together with the forcing `g`
//!   (certificate kind `kernel-and-forcing`);
//! - fixed sign of the kernel slope `lambda'` together with the accumulated
//!   forcing `G` (certificate kind `kernel-slope-and-accumulated`).
//!
//! Either gives `int_0^T lambda g dt` — and hence `d(cDR)/du` — a fixed
//! sign at that input. A motif-level certificate requires one family to
//! hold with one direction at every grid input for at least one initial
//! condition. When no family certifies but the pointwise sensitivity `q(t)`
//! keeps a fixed sign at every input for all initial conditions, the
//! weaker `pointwise-sensitivity` certificate applies (monotone DR at every
//! instant forces monotone cDR).
//!
//! Non-monotonicity is established by a witness pair: two inputs whose
//! sensitivity-route derivatives carry opposite signs beyond a conservative
//! band, each confirmed by the finite-difference column.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{KernelProfile, SimConfig, Trajectory};
use crate::linsys::LinearSubsystem;
use crate::motifs::{InitialPolicy, MotifKind, MotifSpec};
use crate::response::{analyze_full, SweepResult, UPoint};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Relative zero band for sign classification.
pub const EPS_SIGN: f64 = 1e-9;

/// Absolute-plus-relative band for witness detection.
pub const WITNESS_BAND: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Sign profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignClass {
    NonNegative,
    NonPositive,
    IdenticallyZero,
    Mixed,
}

impl SignClass {
    /// Signed indicator: +1, -1, or 0 (Mixed has no sign).
    fn signum(self) -> Option<f64> {
        match self {
            SignClass::NonNegative => Some(1.0),
            SignClass::NonPositive => Some(-1.0),
            SignClass::IdenticallyZero => Some(0.0),
            SignClass::Mixed => None,
        }
    }

    /// Merge two classifications of the same quantity.
    pub fn merge(self, other: SignClass) -> SignClass {
        use SignClass::*;
        match (self, other) {
            (Mixed, _) | (_, Mixed) => Mixed,
            (IdenticallyZero, x) | (x, IdenticallyZero) => x,
            (NonNegative, NonNegative) => NonNegative,
            (NonPositive, NonPositive) => NonPositive,
            _ => Mixed,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SignClass::NonNegative => ">= 0",
            SignClass::NonPositive => "<= 0",
            SignClass::IdenticallyZero => "= 0",
            SignClass::Mixed => "no fixed sign",
        }
    }
}

/// Outcome of classifying a sampled series against a relative zero band.
#[derive(Debug, Clone, Serialize)]
pub struct SignProfile {
    pub class: SignClass,
    /// Most extreme sample opposing the dominant sign (0 when clean).
    pub worst_violation: f64,
    /// Location of that sample.
    pub where_t: f64,
}

/// Classify a series: samples with `|v| <= eps (1 + max|v|)` count as zero;
/// `Mixed` requires at least one above-band sample of each sign.
pub fn sign_profile(t: &[f64], v: &[f64], eps: f64) -> SignProfile {
    assert!(!v.is_empty() && t.len() == v.len(), "series must be nonempty and aligned");
    let scale = v.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let band = eps * (1.0 + scale);

    let mut max_v = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let (mut t_max, mut t_min) = (t[0], t[0]);
    for (&ti, &vi) in t.iter().zip(v) {
        if vi > max_v {
            max_v = vi;
            t_max = ti;
        }
        if vi < min_v {
            min_v = vi;
            t_min = ti;
        }
    }
    let has_pos = max_v > band;
    let has_neg = min_v < -band;

    let (class, worst_violation, where_t) = match (has_pos, has_neg) {
        (true, true) => {
            // Report the weaker side as the violation.
            if max_v >= -min_v {
                (SignClass::Mixed, min_v, t_min)
            } else {
                (SignClass::Mixed, max_v, t_max)
            }
        }
        (true, false) => (SignClass::NonNegative, min_v.min(0.0), t_min),
        (false, true) => (SignClass::NonPositive, max_v.max(0.0), t_max),
        (false, false) => (SignClass::IdenticallyZero, 0.0, t[0]),
    };
    SignProfile { class, worst_violation, where_t }
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
    Flat,
}

impl Direction {
    fn from_sign(s: f64) -> Direction {
        if s > 0.0 {
            Direction::NonDecreasing
        } else if s < 0.0 {
            Direction::NonIncreasing
        } else {
            Direction::Flat
        }
    }

    /// Directions agree if equal or one of them is flat.
    fn consistent(a: Direction, b: Direction) -> Option<Direction> {
        match (a, b) {
            (Direction::Flat, x) | (x, Direction::Flat) => Some(x),
            (x, y) if x == y => Some(x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// Kernel and forcing each keep a fixed sign.
    KernelAndForcing,
    /// Kernel slope and accumulated forcing each keep a fixed sign.
    KernelSlopeAndAccumulated,
    /// Pointwise sensitivity keeps a fixed sign at every input.
    PointwiseSensitivity,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub direction: Direction,
}

/// Directions certified at one input by each fixed-sign family, if any.
pub(crate) fn certificate_branches(
    traj: &Trajectory,
    ker: &KernelProfile,
    eps: f64,
) -> (Option<Direction>, Option<Direction>) {
    let lam = sign_profile(&ker.t, &ker.lambda, eps).class;
    let g = sign_profile(&traj.t, &traj.g, eps).class;
    let first = match (lam.signum(), g.signum()) {
        (Some(a), Some(b)) => Some(Direction::from_sign(a * b)),
        _ => None,
    };
    let lam_dot = sign_profile(&ker.t, &ker.lambda_dot, eps).class;
    let big_g = sign_profile(&traj.t, &traj.big_g, eps).class;
    let second = match (lam_dot.signum(), big_g.signum()) {
        (Some(a), Some(b)) => Some(Direction::from_sign(-a * b)),
        _ => None,
    };
    (first, second)
}

/// Per-input fixed-sign certificate: the kernel/forcing family is tried
/// first, then the slope/accumulated family.
pub fn fixed_sign_certificate(
    traj: &Trajectory,
    ker: &KernelProfile,
    eps: f64,
) -> Option<Certificate> {
    let (first, second) = certificate_branches(traj, ker, eps);
    if let Some(direction) = first {
        return Some(Certificate { kind: CertificateKind::KernelAndForcing, direction });
    }
    second.map(|direction| Certificate {
        kind: CertificateKind::KernelSlopeAndAccumulated,
        direction,
    })
}

// ---------------------------------------------------------------------------
// Witnesses
// ---------------------------------------------------------------------------

/// Inputs at which the derivative of cDR takes confirmed opposite signs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WitnessPair {
    /// Input with confirmed positive derivative (largest positive value).
    pub u_minus: f64,
    pub d_minus: f64,
    /// Input with confirmed negative derivative (most negative value).
    pub u_plus: f64,
    pub d_plus: f64,
}

/// Scan a sweep for a positive and a negative sensitivity-route derivative,
/// both beyond the band and both confirmed in sign by the
/// finite-difference column.
pub fn opposite_sign_witnesses(sweep: &SweepResult) -> Option<WitnessPair> {
    // Per-entry band: |v| must clear both an absolute floor and a relative
    // margin of its own magnitude, so witnesses of very different scales on
    // the same grid are judged independently.
    let beyond = |v: f64, sign: f64| sign * v > WITNESS_BAND * (1.0 + v.abs());
    let confirmed = |p: &UPoint, sign: f64| -> bool {
        p.status.is_ok() && beyond(p.d_cdr_q, sign) && beyond(p.d_cdr_fd, sign)
    };

    let best_pos = sweep
        .points
        .iter()
        .filter(|p| confirmed(p, 1.0))
        .max_by(|a, b| a.d_cdr_q.total_cmp(&b.d_cdr_q));
    let best_neg = sweep
        .points
        .iter()
        .filter(|p| confirmed(p, -1.0))
        .min_by(|a, b| a.d_cdr_q.total_cmp(&b.d_cdr_q));

    match (best_pos, best_neg) {
        (Some(p), Some(n)) => Some(WitnessPair {
            u_minus: p.u,
            d_minus: p.d_cdr_q,
            u_plus: n.u,
            d_plus: n.d_cdr_q,
        }),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
    NonMonotone,
}

impl Monotonicity {
    fn from_class(class: SignClass) -> Monotonicity {
        match class {
            SignClass::NonNegative | SignClass::IdenticallyZero => Monotonicity::NonDecreasing,
            SignClass::NonPositive => Monotonicity::NonIncreasing,
            SignClass::Mixed => Monotonicity::NonMonotone,
        }
    }

    pub fn is_monotone(self) -> bool {
        !matches!(self, Monotonicity::NonMonotone)
    }

    pub fn label(self) -> &'static str {
        match self {
            Monotonicity::NonDecreasing => "monotone (nondecreasing)",
            Monotonicity::NonIncreasing => "monotone (nonincreasing)",
            Monotonicity::NonMonotone => "nonmonotone",
        }
    }
}

/// Verdict for one initial condition.
#[derive(Debug, Clone, Serialize)]
pub struct InitVerdict {
    pub init_label: String,
    pub dr: Monotonicity,
    pub cdr: Monotonicity,
    pub dr_class: SignClass,
    pub cdr_class: SignClass,
}

/// Motif-level verdict over all supplied initial conditions.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub motif: MotifKind,
    pub dr: Monotonicity,
    pub cdr: Monotonicity,
    pub certificate: Option<Certificate>,
    pub witnesses: Option<WitnessPair>,
    pub per_init: Vec<InitVerdict>,
    pub a_sign: SignClass,
    pub accumulated_g_sign: SignClass,
}

/// Verdict plus the sweeps it was computed from.
#[derive(Debug, Clone)]
pub struct MotifAnalysis {
    pub verdict: Verdict,
    pub sweeps: Vec<SweepResult>,
}

struct UExtras {
    branch_kernel: Option<Direction>,
    branch_slope: Option<Direction>,
    q_class: SignClass,
    a_class: SignClass,
    big_g_class: SignClass,
}

fn analyze_one_u(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    init: &InitialPolicy,
    cfg: &SimConfig,
    u: f64,
) -> Result<(UPoint, Option<UExtras>)> {
    let (point, series) = analyze_full(sys, motif, init, cfg, u)?;
    let extras = series.map(|(traj, ker)| {
        let (branch_kernel, branch_slope) = certificate_branches(&traj, &ker, EPS_SIGN);
        UExtras {
            branch_kernel,
            branch_slope,
            q_class: sign_profile(&traj.t, &traj.q, EPS_SIGN).class,
            a_class: sign_profile(&traj.t, &traj.a, EPS_SIGN).class,
            big_g_class: sign_profile(&traj.t, &traj.big_g, EPS_SIGN).class,
        }
    });
    Ok((point, extras))
}

/// Aggregate per-input directions: all inputs must certify with one
/// consistent direction.
fn aggregate_directions(dirs: &[Option<Direction>]) -> Option<Direction> {
    let mut agg: Option<Direction> = None;
    for d in dirs {
        let d = (*d)?;
        agg = Some(match agg {
            None => d,
            Some(prev) => Direction::consistent(prev, d)?,
        });
    }
    agg
}

/// Run sweeps for every initial condition, certify, and judge monotonicity
/// of DR and cDR across the grid.
pub fn analyze_motif(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    inits: &[InitialPolicy],
    cfg: &SimConfig,
    u_grid: &[f64],
) -> Result<MotifAnalysis> {
    if inits.is_empty() {
        return Err(Error::invalid("verdict requires at least one initial policy"));
    }
    let mut sweeps = Vec::with_capacity(inits.len());
    let mut per_init = Vec::with_capacity(inits.len());
    let mut kernel_dirs_per_init = Vec::new();
    let mut slope_dirs_per_init = Vec::new();
    let mut q_dirs: Vec<Option<Direction>> = Vec::new();
    let mut witness: Option<WitnessPair> = None;
    let mut a_sign = SignClass::IdenticallyZero;
    let mut g_acc_sign = SignClass::IdenticallyZero;

    for init in inits {
        #[cfg(feature = "parallel")]
        let rows: Result<Vec<_>> = u_grid
            .par_iter()
            .map(|&u| analyze_one_u(sys, motif, init, cfg, u))
            .collect();
        #[cfg(not(feature = "parallel"))]
        let rows: Result<Vec<_>> = u_grid
            .iter()
            .map(|&u| analyze_one_u(sys, motif, init, cfg, u))
            .collect();
        let rows = rows?;

        let (points, extras): (Vec<UPoint>, Vec<Option<UExtras>>) = rows.into_iter().unzip();
        let sweep = SweepResult {
            motif: motif.kind(),
            init_label: init.label(),
            points,
            warnings: crate::response::sweep_warnings(motif, u_grid),
        };

        let ok: Vec<&UPoint> = sweep.points.iter().filter(|p| p.status.is_ok()).collect();
        if ok.len() < 2 {
            return Err(Error::Inconclusive { motif: motif.kind().name().to_string() });
        }

        // DR: sign profile of successive differences along the grid.
        let dr_diffs: Vec<f64> = ok.windows(2).map(|w| w[1].dr - w[0].dr).collect();
        let dr_mid: Vec<f64> = ok.windows(2).map(|w| (w[0].u * w[1].u).sqrt()).collect();
        let dr_class = sign_profile(&dr_mid, &dr_diffs, EPS_SIGN).class;

        // cDR: sign profile of the sensitivity-route derivative.
        let d_vals: Vec<f64> = ok.iter().map(|p| p.d_cdr_q).collect();
        let d_us: Vec<f64> = ok.iter().map(|p| p.u).collect();
        let cdr_class = sign_profile(&d_us, &d_vals, EPS_SIGN).class;

        per_init.push(InitVerdict {
            init_label: init.label(),
            dr: Monotonicity::from_class(dr_class),
            cdr: Monotonicity::from_class(cdr_class),
            dr_class,
            cdr_class,
        });

        let kernel_dirs: Vec<Option<Direction>> = extras
            .iter()
            .map(|e| e.as_ref().and_then(|x| x.branch_kernel))
            .collect();
        let slope_dirs: Vec<Option<Direction>> = extras
            .iter()
            .map(|e| e.as_ref().and_then(|x| x.branch_slope))
            .collect();
        kernel_dirs_per_init.push(aggregate_directions(&kernel_dirs));
        slope_dirs_per_init.push(aggregate_directions(&slope_dirs));

        for e in extras.iter().flatten() {
            a_sign = a_sign.merge(e.a_class);
            g_acc_sign = g_acc_sign.merge(e.big_g_class);
            q_dirs.push(e.q_class.signum().map(Direction::from_sign));
        }

        if witness.is_none() {
            witness = opposite_sign_witnesses(&sweep);
        }
        sweeps.push(sweep);
    }

    // Motif-level DR/cDR: monotone only when every init is monotone with a
    // consistent direction; any mixed init makes the motif nonmonotone.
    let combine = |field: fn(&InitVerdict) -> Monotonicity| -> Monotonicity {
        let mut agg: Option<Monotonicity> = None;
        for iv in &per_init {
            let m = field(iv);
            agg = Some(match (agg, m) {
                (None, m) => m,
                (Some(Monotonicity::NonMonotone), _) | (_, Monotonicity::NonMonotone) => {
                    Monotonicity::NonMonotone
                }
                (Some(a), b) if a == b => a,
                _ => Monotonicity::NonMonotone,
            });
        }
        agg.unwrap()
    };
    let dr = combine(|iv| iv.dr);
    let cdr = combine(|iv| iv.cdr);

    // Certificate: one family holding at every input for at least one init;
    // otherwise the pointwise-sensitivity fallback over all inits. The
    // attached certificate must agree with the motif-level verdict, so a
    // certified direction always matches every on-grid derivative sign.
    let coherent = |c: Certificate| -> Option<Certificate> {
        let agrees = match c.direction {
            Direction::NonDecreasing => cdr == Monotonicity::NonDecreasing,
            Direction::NonIncreasing => cdr == Monotonicity::NonIncreasing,
            Direction::Flat => cdr.is_monotone(),
        };
        agrees.then_some(c)
    };
    let certificate = kernel_dirs_per_init
        .iter()
        .flatten()
        .next()
        .and_then(|&direction| {
            coherent(Certificate { kind: CertificateKind::KernelAndForcing, direction })
        })
        .or_else(|| {
            slope_dirs_per_init.iter().flatten().next().and_then(|&direction| {
                coherent(Certificate { kind: CertificateKind::KernelSlopeAndAccumulated, direction })
            })
        })
        .or_else(|| {
            aggregate_directions(&q_dirs).and_then(|direction| {
                coherent(Certificate { kind: CertificateKind::PointwiseSensitivity, direction })
            })
        });

    // A mixed derivative profile with no confirmed witness pair straddles
    // the zero band: inconclusive rather than a verdict.
    if per_init.iter().any(|iv| iv.cdr_class == SignClass::Mixed) && witness.is_none() {
        return Err(Error::Inconclusive { motif: motif.kind().name().to_string() });
    }

    let verdict = Verdict {
        motif: motif.kind(),
        dr,
        cdr,
        certificate,
        witnesses: witness,
        per_init,
        a_sign,
        accumulated_g_sign: g_acc_sign,
    };
    Ok(MotifAnalysis { verdict, sweeps })
}

/// Motif-level verdict over the supplied initial conditions.
pub fn verdict(
    sys: &LinearSubsystem,
    motif: &MotifSpec,
    inits: &[InitialPolicy],
    cfg: &SimConfig,
    u_grid: &[f64],
) -> Result<Verdict> {
    analyze_motif(sys, motif, inits, cfg, u_grid).map(|a| a.verdict)
}
