//! Catalog of output dynamics `y' = F(x, y, u)`.
//!
//! Eight admissible output forms exist, indexed by their row in the
//! admissible-exponent table. Each comes in a scalar flavor (`scalar-1` ..
//! `scalar-8`, one-dimensional intermediate state, unit parameters by
//! default, Michaelis constant allowed to be zero) and a vector flavor
//! (`vec-1` .. `vec-8`) where `x` enters through `c^T x` with `c > 0`.
//!
//! Four vector forms are the canonical incoherent feedforward motifs and
//! carry aliases: `iffm-1` = `vec-5`, `iffm-2` = `vec-3`, `iffm-3` = `vec-2`,
//! `iffm-4` = `vec-4`.
//!
//! With `s = c^T x` and `E = K + s`:
//!
//! | row | F(x, y, u)              | a = -dF/dy    |
//! |-----|-------------------------|---------------|
//! | 1   | s/(b u) - d y           | d             |
//! | 2   | s - d u y               | d u           |
//! | 3   | b u / E - d y           | d             |
//! | 4   | 1/E - d y/(b u)         | d/(b u)       |
//! | 5   | d u - s y               | s             |
//! | 6   | d - s y/(b u)           | s/(b u)       |
//! | 7   | 1/(b u) - d y/E         | d/E           |
//! | 8   | d - b u y/E             | b u / E       |
//!
//! (`b` denotes the gain parameter beta.) All eight have `a >= 0` on the
//! nonnegative orthant and opposing partials in `x` and `u`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linsys::LinearSubsystem;

/// Default positivity floor for guarded denominators.
pub const DEFAULT_X_FLOOR: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Motif kinds and the scalar/vector/IFFM cross-walk
// ---------------------------------------------------------------------------

/// One of the sixteen cataloged output dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotifKind {
    Scalar1,
    Scalar2,
    Scalar3,
    Scalar4,
    Scalar5,
    Scalar6,
    Scalar7,
    Scalar8,
    Vec1,
    Vec2,
    Vec3,
    Vec4,
    Vec5,
    Vec6,
    Vec7,
    Vec8,
}

pub const ALL_KINDS: [MotifKind; 16] = [
    MotifKind::Scalar1,
    MotifKind::Scalar2,
    MotifKind::Scalar3,
    MotifKind::Scalar4,
    MotifKind::Scalar5,
    MotifKind::Scalar6,
    MotifKind::Scalar7,
    MotifKind::Scalar8,
    MotifKind::Vec1,
    MotifKind::Vec2,
    MotifKind::Vec3,
    MotifKind::Vec4,
    MotifKind::Vec5,
    MotifKind::Vec6,
    MotifKind::Vec7,
    MotifKind::Vec8,
];

impl MotifKind {
    /// Row of the output-dynamics family this kind instantiates (1..=8).
    pub fn table_row(self) -> u8 {
        match self {
            MotifKind::Scalar1 | MotifKind::Vec1 => 1,
            MotifKind::Scalar2 | MotifKind::Vec2 => 2,
            MotifKind::Scalar3 | MotifKind::Vec3 => 3,
            MotifKind::Scalar4 | MotifKind::Vec4 => 4,
            MotifKind::Scalar5 | MotifKind::Vec5 => 5,
            MotifKind::Scalar6 | MotifKind::Vec6 => 6,
            MotifKind::Scalar7 | MotifKind::Vec7 => 7,
            MotifKind::Scalar8 | MotifKind::Vec8 => 8,
        }
    }

    pub fn is_scalar(self) -> bool {
        matches!(
            self,
            MotifKind::Scalar1
                | MotifKind::Scalar2
                | MotifKind::Scalar3
                | MotifKind::Scalar4
                | MotifKind::Scalar5
                | MotifKind::Scalar6
                | MotifKind::Scalar7
                | MotifKind::Scalar8
        )
    }

    /// IFFM number for the four canonical vector motifs.
    pub fn iffm_index(self) -> Option<u8> {
        match self {
            MotifKind::Vec5 => Some(1),
            MotifKind::Vec3 => Some(2),
            MotifKind::Vec2 => Some(3),
            MotifKind::Vec4 => Some(4),
            _ => None,
        }
    }

    pub fn from_iffm_index(i: u8) -> Option<MotifKind> {
        match i {
            1 => Some(MotifKind::Vec5),
            2 => Some(MotifKind::Vec3),
            3 => Some(MotifKind::Vec2),
            4 => Some(MotifKind::Vec4),
            _ => None,
        }
    }

    fn from_row(row: u8, scalar: bool) -> Option<MotifKind> {
        let all = &ALL_KINDS;
        match (row, scalar) {
            (1..=8, true) => Some(all[(row - 1) as usize]),
            (1..=8, false) => Some(all[(row + 7) as usize]),
            _ => None,
        }
    }

    /// Canonical config/CLI name (`scalar-3`, `vec-5`, ...). IFFM aliases
    /// resolve to the same kinds in [`MotifKind::parse`] but the canonical
    /// name of an IFFM is its `iffm-N` alias.
    pub fn name(self) -> &'static str {
        match self {
            MotifKind::Scalar1 => "scalar-1",
            MotifKind::Scalar2 => "scalar-2",
            MotifKind::Scalar3 => "scalar-3",
            MotifKind::Scalar4 => "scalar-4",
            MotifKind::Scalar5 => "scalar-5",
            MotifKind::Scalar6 => "scalar-6",
            MotifKind::Scalar7 => "scalar-7",
            MotifKind::Scalar8 => "scalar-8",
            MotifKind::Vec1 => "vec-1",
            MotifKind::Vec2 => "iffm-3",
            MotifKind::Vec3 => "iffm-2",
            MotifKind::Vec4 => "iffm-4",
            MotifKind::Vec5 => "iffm-1",
            MotifKind::Vec6 => "vec-6",
            MotifKind::Vec7 => "vec-7",
            MotifKind::Vec8 => "vec-8",
        }
    }

    /// Human-readable right-hand side of the output equation.
    pub fn formula(self) -> &'static str {
        if self.is_scalar() {
            match self.table_row() {
                1 => "y' = x/u - y",
                2 => "y' = x - u y",
                3 => "y' = u/x - y",
                4 => "y' = 1/x - y/u",
                5 => "y' = u - x y",
                6 => "y' = 1 - (x/u) y",
                7 => "y' = 1/u - y/x",
                _ => "y' = 1 - (u/x) y",
            }
        } else {
            match self.table_row() {
                1 => "y' = c'x/(beta u) - d y",
                2 => "y' = c'x - d u y",
                3 => "y' = beta u/(K + c'x) - d y",
                4 => "y' = 1/(K + c'x) - d y/(beta u)",
                5 => "y' = d u - (c'x) y",
                6 => "y' = d - (c'x) y/(beta u)",
                7 => "y' = 1/(beta u) - d y/(K + c'x)",
                _ => "y' = d - beta u y/(K + c'x)",
            }
        }
    }

    /// Resolve a config/CLI name, accepting `scalar-N`, `vec-N`, and `iffm-N`.
    pub fn parse(name: &str) -> Result<MotifKind> {
        let norm = name.trim().to_ascii_lowercase();
        let parsed = norm.split_once('-').and_then(|(family, idx)| {
            let idx: u8 = idx.parse().ok()?;
            match family {
                "scalar" => MotifKind::from_row(idx, true),
                "vec" => MotifKind::from_row(idx, false),
                "iffm" => MotifKind::from_iffm_index(idx),
                _ => None,
            }
        });
        parsed.ok_or_else(|| Error::UnknownMotif {
            name: name.to_string(),
            suggestion: suggest_name(&norm),
        })
    }
}

impl std::fmt::Display for MotifKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for MotifKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

fn suggest_name(input: &str) -> String {
    let mut names: Vec<String> = ALL_KINDS.iter().map(|k| k.name().to_string()).collect();
    for i in 1..=4 {
        names.push(format!("vec-{}", MotifKind::from_iffm_index(i).unwrap().table_row()));
    }
    names
        .into_iter()
        .min_by_key(|cand| edit_distance(input, cand))
        .unwrap_or_else(|| "scalar-1".to_string())
}

fn edit_distance(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

// ---------------------------------------------------------------------------
// Parameterized motif
// ---------------------------------------------------------------------------

/// A motif kind with its parameters `(c, d, beta, K)`.
#[derive(Debug, Clone)]
pub struct MotifSpec {
    kind: MotifKind,
    c: DVector<f64>,
    d: f64,
    beta: f64,
    k_m: f64,
}

/// Algebraic pieces of `F` at one state, for the augmented right-hand side.
///
/// `dF/dx = gamma * c`, so `dF/dx . p = gamma * (c . p)` without allocating.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Terms {
    pub f: f64,
    pub a: f64,
    pub gamma: f64,
    pub df_du: f64,
}

impl MotifSpec {
    pub fn new(kind: MotifKind, c: DVector<f64>, d: f64, beta: f64, k_m: f64) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::invalid("motif coupling vector c must be nonempty"));
        }
        if kind.is_scalar() && c.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: c.len() });
        }
        if let Some((i, &v)) = c.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::invalid(format!("c[{i}] = {v} must be > 0")));
        }
        if !(d > 0.0) {
            return Err(Error::invalid(format!("d = {d} must be > 0")));
        }
        if !(beta > 0.0) {
            return Err(Error::invalid(format!("beta = {beta} must be > 0")));
        }
        if !(k_m >= 0.0) {
            return Err(Error::invalid(format!("K = {k_m} must be >= 0")));
        }
        if k_m == 0.0 && !kind.is_scalar() {
            return Err(Error::invalid("K = 0 is only admitted for scalar kinds"));
        }
        Ok(Self { kind, c, d, beta, k_m })
    }

    /// Scalar motif with unit parameters (the classic one-dimensional forms).
    pub fn scalar(row: u8) -> Result<Self> {
        let kind = MotifKind::from_row(row, true)
            .ok_or_else(|| Error::invalid(format!("scalar row {row} out of range 1..=8")))?;
        Self::new(kind, DVector::from_element(1, 1.0), 1.0, 1.0, 0.0)
    }

    pub fn kind(&self) -> MotifKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k_m(&self) -> f64 {
        self.k_m
    }

    pub fn cx(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x)
    }

    /// Evaluate `F`, `a = -dF/dy`, `gamma` (with `dF/dx = gamma c`), and
    /// `dF/du` from `s = c^T x`.
    pub(crate) fn terms(&self, s: f64, y: f64, u: f64, x_floor: f64) -> Result<Terms> {
        debug_assert!(u > 0.0);
        let (d, bt, k) = (self.d, self.beta, self.k_m);
        let row = self.kind.table_row();
        if matches!(row, 3 | 4 | 7 | 8) {
            let denom = k + s;
            if !(denom >= x_floor) {
                return Err(Error::DomainViolation { t: f64::NAN });
            }
        }
        let t = match row {
            1 => Terms {
                f: s / (bt * u) - d * y,
                a: d,
                gamma: 1.0 / (bt * u),
                df_du: -s / (bt * u * u),
            },
            2 => Terms { f: s - d * u * y, a: d * u, gamma: 1.0, df_du: -d * y },
            3 => {
                let e = k + s;
                Terms {
                    f: bt * u / e - d * y,
                    a: d,
                    gamma: -bt * u / (e * e),
                    df_du: bt / e,
                }
            }
            4 => {
                let e = k + s;
                Terms {
                    f: 1.0 / e - d * y / (bt * u),
                    a: d / (bt * u),
                    gamma: -1.0 / (e * e),
                    df_du: d * y / (bt * u * u),
                }
            }
            5 => Terms { f: d * u - s * y, a: s, gamma: -y, df_du: d },
            6 => Terms {
                f: d - s * y / (bt * u),
                a: s / (bt * u),
                gamma: -y / (bt * u),
                df_du: s * y / (bt * u * u),
            },
            7 => {
                let e = k + s;
                Terms {
                    f: 1.0 / (bt * u) - d * y / e,
                    a: d / e,
                    gamma: d * y / (e * e),
                    df_du: -1.0 / (bt * u * u),
                }
            }
            _ => {
                let e = k + s;
                Terms {
                    f: d - bt * u * y / e,
                    a: bt * u / e,
                    gamma: bt * u * y / (e * e),
                    df_du: -bt * y / e,
                }
            }
        };
        Ok(t)
    }

    fn check_state(&self, x: &DVector<f64>, u: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        if !(u > 0.0) {
            return Err(Error::invalid(format!("motif evaluation requires u > 0, got {u}")));
        }
        Ok(())
    }

    /// `y' = F(x, y, u)`.
    pub fn f_eval(&self, x: &DVector<f64>, y: f64, u: f64) -> Result<f64> {
        self.check_state(x, u)?;
        Ok(self.terms(self.cx(x), y, u, DEFAULT_X_FLOOR)?.f)
    }

    /// Analytic partial derivatives `(dF/dx, dF/dy, dF/du)`.
    pub fn partials(&self, x: &DVector<f64>, y: f64, u: f64) -> Result<(DVector<f64>, f64, f64)> {
        self.check_state(x, u)?;
        let t = self.terms(self.cx(x), y, u, DEFAULT_X_FLOOR)?;
        Ok((&self.c * t.gamma, -t.a, t.df_du))
    }

    /// `a = -dF/dy` and `g = dF/dx . p + dF/du` at one state.
    pub fn a_and_g(&self, x: &DVector<f64>, p: &DVector<f64>, y: f64, u: f64) -> Result<(f64, f64)> {
        self.check_state(x, u)?;
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: p.len() });
        }
        let t = self.terms(self.cx(x), y, u, DEFAULT_X_FLOOR)?;
        Ok((t.a, t.gamma * self.c.dot(p) + t.df_du))
    }

    /// Output steady state solving `F(x_ss(u), y, u) = 0`.
    ///
    /// For kinds whose adaptation is broken by `K > 0` the result depends on
    /// `u`; that is a valid answer, not an error. Errors are reserved for
    /// nonfinite results.
    pub fn y_steady(&self, sys: &LinearSubsystem, u: f64) -> Result<f64> {
        if sys.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: sys.dim() });
        }
        if !(u > 0.0) {
            return Err(Error::invalid(format!("y_steady requires u > 0, got {u}")));
        }
        let w = self.c.dot(&sys.neg_a_inv_b()?);
        let (d, bt, k) = (self.d, self.beta, self.k_m);
        let y = match self.kind.table_row() {
            1 => w / (bt * d),
            2 => w / d,
            3 | 4 => bt * u / (d * (k + u * w)),
            5 => d / w,
            6 => d * bt / w,
            7 => (k + u * w) / (bt * u * d),
            _ => d * (k + u * w) / (bt * u),
        };
        if !y.is_finite() {
            return Err(Error::NoSteadyState { kind: self.kind.name().to_string() });
        }
        Ok(y)
    }
}

// ---------------------------------------------------------------------------
// Initial conditions
// ---------------------------------------------------------------------------

/// How the intermediate state starts.
#[derive(Debug, Clone)]
pub enum X0Policy {
    Explicit(DVector<f64>),
    /// `x0 = -A^{-1} b v`: the steady state the subsystem would hold under
    /// constant input `v >= 0`.
    SteadyRay(f64),
}

/// How the output starts.
#[derive(Debug, Clone)]
pub enum Y0Policy {
    Explicit(f64),
    /// Solve `F(x_ss(u), y, u) = 0` for the given motif.
    AdaptedSteadyState,
    /// `y0 = beta / (d (K + c^T x0))`.
    MichaelisStart,
}

#[derive(Debug, Clone)]
pub struct InitialPolicy {
    pub x0: X0Policy,
    pub y0: Y0Policy,
}

impl InitialPolicy {
    pub fn new(x0: X0Policy, y0: Y0Policy) -> Self {
        Self { x0, y0 }
    }

    pub fn explicit(x0: DVector<f64>, y0: f64) -> Self {
        Self { x0: X0Policy::Explicit(x0), y0: Y0Policy::Explicit(y0) }
    }

    /// Resolve to concrete `(x0, y0)` for one `(motif, subsystem, u)`.
    pub fn resolve(
        &self,
        motif: &MotifSpec,
        sys: &LinearSubsystem,
        u: f64,
    ) -> Result<(DVector<f64>, f64)> {
        let x0 = match &self.x0 {
            X0Policy::Explicit(v) => {
                if v.len() != sys.dim() {
                    return Err(Error::DimensionMismatch { expected: sys.dim(), found: v.len() });
                }
                if v.iter().any(|&e| e < 0.0) {
                    return Err(Error::invalid("x0 must be elementwise nonnegative"));
                }
                v.clone()
            }
            X0Policy::SteadyRay(v) => {
                if !(*v >= 0.0) {
                    return Err(Error::invalid(format!("steady-ray scale v = {v} must be >= 0")));
                }
                if *v == 0.0 {
                    DVector::zeros(sys.dim())
                } else {
                    sys.steady_state(*v)?
                }
            }
        };
        let y0 = match &self.y0 {
            Y0Policy::Explicit(y) => {
                if !(*y >= 0.0) {
                    return Err(Error::invalid(format!("y0 = {y} must be >= 0")));
                }
                *y
            }
            Y0Policy::AdaptedSteadyState => motif.y_steady(sys, u)?,
            Y0Policy::MichaelisStart => {
                let denom = motif.d * (motif.k_m + motif.cx(&x0));
                let y = motif.beta / denom;
                if !y.is_finite() {
                    return Err(Error::NoSteadyState { kind: motif.kind.name().to_string() });
                }
                y
            }
        };
        Ok((x0, y0))
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        let x = match &self.x0 {
            X0Policy::Explicit(v) => {
                let vals: Vec<String> = v.iter().map(|e| format!("{e}")).collect();
                format!("x0=[{}]", vals.join(","))
            }
            X0Policy::SteadyRay(v) => format!("x0=ray({v})"),
        };
        let y = match &self.y0 {
            Y0Policy::Explicit(v) => format!("y0={v}"),
            Y0Policy::AdaptedSteadyState => "y0=adapted".to_string(),
            Y0Policy::MichaelisStart => "y0=michaelis".to_string(),
        };
        format!("{x},{y}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn vec_motif(row: u8) -> MotifSpec {
        let kind = MotifKind::from_row(row, false).unwrap();
        MotifSpec::new(kind, preset::coupling(), 1.2, 1.5, 0.8).unwrap()
    }

    #[test]
    fn crosswalk_matches_catalog() {
        assert_eq!(MotifKind::parse("iffm-1").unwrap(), MotifKind::Vec5);
        assert_eq!(MotifKind::parse("iffm-2").unwrap(), MotifKind::Vec3);
        assert_eq!(MotifKind::parse("iffm-3").unwrap(), MotifKind::Vec2);
        assert_eq!(MotifKind::parse("iffm-4").unwrap(), MotifKind::Vec4);
        assert_eq!(MotifKind::parse("vec-5").unwrap(), MotifKind::Vec5);
        assert_eq!(MotifKind::parse("SCALAR-3").unwrap(), MotifKind::Scalar3);
    }

    #[test]
    fn unknown_name_gets_suggestion() {
        let err = MotifKind::parse("ifml-1").unwrap_err();
        match err {
            Error::UnknownMotif { suggestion, .. } => {
                assert_eq!(suggestion, "iffm-1");
            }
            other => panic!("expected UnknownMotif, got {other:?}"),
        }
    }

    #[test]
    fn scalar5_steady_state_is_fixed_point() {
        let m = MotifSpec::scalar(5).unwrap();
        let f = m.f_eval(&nalgebra::dvector![1.0], 1.0, 1.0).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn iffm2_at_zero_intermediate_state() {
        // F(0, beta/(d K), u) = beta (u - 1)/K.
        let m = vec_motif(3);
        let x = DVector::zeros(5);
        let y = m.beta() / (m.d() * m.k_m());
        for &u in &[0.5, 1.0, 2.0] {
            let f = m.f_eval(&x, y, u).unwrap();
            assert_relative_eq!(f, m.beta() * (u - 1.0) / m.k_m(), max_relative = 1e-14);
        }
    }

    #[test]
    fn scalar3_balanced_state() {
        let m = MotifSpec::scalar(3).unwrap();
        let f = m.f_eval(&nalgebra::dvector![2.0], 1.0, 2.0).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn scalar2_partials() {
        let m = MotifSpec::scalar(2).unwrap();
        let (fx, fy, fu) = m.partials(&nalgebra::dvector![1.7], 0.4, 0.9).unwrap();
        assert_eq!(fx[0], 1.0);
        assert_eq!(fy, -0.9);
        assert_eq!(fu, -0.4);
    }

    #[test]
    fn iffm4_output_partial_is_state_free() {
        let m = vec_motif(4);
        for &u in &[0.1, 1.0, 10.0] {
            let (_, fy, _) = m.partials(&preset::x0(2), 0.7, u).unwrap();
            assert_relative_eq!(fy, -m.d() / (m.beta() * u), max_relative = 1e-14);
        }
    }

    #[test]
    fn scalar1_g_along_analytic_trajectory() {
        // g = -x0 exp(-t)/u^2 with x(t) = u + (x0 - u) e^{-t}, p = 1 - e^{-t}.
        let m = MotifSpec::scalar(1).unwrap();
        let (x0, u) = (2.0, 0.5);
        for &t in &[0.0f64, 0.3, 0.9, 1.5] {
            let x = u + (x0 - u) * (-t).exp();
            let p = 1.0 - (-t).exp();
            let (a, g) = m
                .a_and_g(&nalgebra::dvector![x], &nalgebra::dvector![p], 1.0, u)
                .unwrap();
            assert_eq!(a, 1.0);
            assert_relative_eq!(g, -x0 * (-t).exp() / (u * u), max_relative = 1e-13);
        }
    }

    #[test]
    fn scalar3_g_along_analytic_trajectory() {
        let m = MotifSpec::scalar(3).unwrap();
        let (x0, u) = (1.0, 2.0);
        for &t in &[0.1f64, 0.7, 1.5] {
            let x = u + (x0 - u) * (-t).exp();
            let p = 1.0 - (-t).exp();
            let (_, g) = m
                .a_and_g(&nalgebra::dvector![x], &nalgebra::dvector![p], 1.0, u)
                .unwrap();
            assert_relative_eq!(g, x0 * (-t).exp() / (x * x), max_relative = 1e-13);
            assert!(g > 0.0);
        }
    }

    #[test]
    fn scalar1_g_vanishes_without_initial_state() {
        let m = MotifSpec::scalar(1).unwrap();
        for &t in &[0.0f64, 0.5, 1.5] {
            let u = 0.7;
            let x = u * (1.0 - (-t).exp());
            let p = 1.0 - (-t).exp();
            let (_, g) = m
                .a_and_g(&nalgebra::dvector![x], &nalgebra::dvector![p], 1.0, u)
                .unwrap();
            assert!(g.abs() <= 1e-15, "g = {g:e} should vanish for x0 = 0");
        }
    }

    #[test]
    fn unit_scalars_adapt_perfectly() {
        let sys = LinearSubsystem::new(
            nalgebra::dmatrix![-1.0],
            nalgebra::dvector![1.0],
        )
        .unwrap();
        for row in 1..=8 {
            let m = MotifSpec::scalar(row).unwrap();
            for &u in &[0.3, 1.0, 7.0] {
                let y_ss = m.y_steady(&sys, u).unwrap();
                assert_relative_eq!(y_ss, 1.0, max_relative = 1e-13);
                let x_ss = sys.steady_state(u).unwrap();
                let f = m.f_eval(&x_ss, y_ss, u).unwrap();
                assert!(f.abs() <= 1e-12, "row {row}: residual {f:e}");
            }
        }
    }

    #[test]
    fn iffm_steady_states_match_closed_forms() {
        let sys = preset::subsystem();
        let w = preset::coupling().dot(&sys.neg_a_inv_b().unwrap());
        let m1 = vec_motif(5);
        let m3 = vec_motif(2);
        for &u in &[0.1, 1.0, 10.0] {
            assert_relative_eq!(m1.y_steady(&sys, u).unwrap(), 1.2 / w, max_relative = 1e-12);
            assert_relative_eq!(m3.y_steady(&sys, u).unwrap(), w / 1.2, max_relative = 1e-12);
        }
        // Residual check for all eight vector kinds.
        for row in 1..=8 {
            let m = vec_motif(row);
            for &u in &[0.5, 2.0] {
                let y = m.y_steady(&sys, u).unwrap();
                let x_ss = sys.steady_state(u).unwrap();
                let f = m.f_eval(&x_ss, y, u).unwrap();
                assert!(f.abs() <= 1e-12, "row {row}: residual {f:e}");
            }
        }
    }

    #[test]
    fn michaelis_start_formula() {
        let sys = preset::subsystem();
        let m = vec_motif(4);
        let init = InitialPolicy::new(
            X0Policy::Explicit(DVector::zeros(5)),
            Y0Policy::MichaelisStart,
        );
        let (_, y0) = init.resolve(&m, &sys, 1.0).unwrap();
        assert_relative_eq!(y0, 1.5 / (1.2 * 0.8), max_relative = 1e-14);
    }

    #[test]
    fn steady_ray_resolves_through_subsystem() {
        let sys = preset::subsystem();
        let m = vec_motif(5);
        let init = InitialPolicy::new(X0Policy::SteadyRay(2.0), Y0Policy::AdaptedSteadyState);
        let (x0, _) = init.resolve(&m, &sys, 1.0).unwrap();
        let expect = sys.steady_state(2.0).unwrap();
        assert_relative_eq!((x0 - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn domain_guard_trips_on_zero_denominator() {
        let m = MotifSpec::scalar(4).unwrap();
        let err = m.f_eval(&nalgebra::dvector![0.0], 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { .. }));
    }

    #[test]
    fn vector_kind_rejects_zero_michaelis_constant() {
        let err = MotifSpec::new(MotifKind::Vec3, preset::coupling(), 1.2, 1.5, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }

    #[test]
    fn nonpositive_coupling_rejected() {
        let err = MotifSpec::new(
            MotifKind::Vec5,
            nalgebra::dvector![0.9, 0.0, 0.8],
            1.0,
            1.0,
            0.5,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }

    // Property: analytic partials agree with central finite differences and
    // the incoherence sign holds at admissible states.
    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn partials_match_finite_differences(
            row in 1u8..=8,
            scalar in proptest::bool::ANY,
            x_seed in proptest::collection::vec(0.05f64..5.0, 3),
            y in 0.05f64..5.0,
            u in 0.05f64..20.0,
        ) {
            let m = if scalar {
                MotifSpec::scalar(row).unwrap()
            } else {
                MotifSpec::new(
                    MotifKind::from_row(row, false).unwrap(),
                    nalgebra::dvector![0.9, 0.7, 0.8],
                    1.2,
                    1.5,
                    0.8,
                ).unwrap()
            };
            let x = if scalar {
                nalgebra::dvector![x_seed[0]]
            } else {
                DVector::from_vec(x_seed.clone())
            };
            let (fx, fy, fu) = m.partials(&x, y, u).unwrap();

            let rel = 1e-6;
            // dF/dx by central differences, one component at a time.
            for i in 0..x.len() {
                let h = rel * (1.0 + x[i].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (m.f_eval(&xp, y, u).unwrap() - m.f_eval(&xm, y, u).unwrap()) / (2.0 * h);
                prop_assert!((fx[i] - fd).abs() <= 1e-6 * (1.0 + fx[i].abs()),
                    "dF/dx[{i}]: analytic {} vs fd {}", fx[i], fd);
            }
            let hy = rel * (1.0 + y.abs());
            let fd_y = (m.f_eval(&x, y + hy, u).unwrap() - m.f_eval(&x, y - hy, u).unwrap()) / (2.0 * hy);
            prop_assert!((fy - fd_y).abs() <= 1e-6 * (1.0 + fy.abs()));
            let hu = rel * (1.0 + u.abs());
            let fd_u = (m.f_eval(&x, y, u + hu).unwrap() - m.f_eval(&x, y, u - hu).unwrap()) / (2.0 * hu);
            prop_assert!((fu - fd_u).abs() <= 1e-6 * (1.0 + fu.abs()));

            // a >= 0 and incoherence dF/dx . dF/du < 0 where both are nonzero.
            prop_assert!(-fy >= 0.0, "a = {} must be nonnegative", -fy);
            let dot = fx.sum() * fu;
            if fx.amax() > 1e-14 && fu.abs() > 1e-14 {
                prop_assert!(dot < 0.0, "incoherence violated: (sum fx) * fu = {dot}");
            }
        }
    }
}
