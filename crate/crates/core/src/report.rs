//! Emission of sweep CSVs, verdict tables, figure data files, and the
//! experiment bundle.
//!
//! Numbers are serialized with 17 significant digits so parsing an emitted
//! file reproduces the in-memory doubles bit for bit. Output is plain CSV
//! (gnuplot-compatible) and JSON; no plotting here.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::classify::Verdict;
use crate::error::{Error, Result};
use crate::integrator::{KernelProfile, Trajectory};
use crate::motifs::MotifKind;
use crate::oracle::OracleReport;
use crate::response::SweepResult;

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Render a double with 17 significant digits (lossless round-trip).
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    if s == "nan" {
        return Ok(f64::NAN);
    }
    s.parse::<f64>()
        .map_err(|e| Error::invalid(format!("cannot parse float {s:?}: {e}")))
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

/// Trajectory CSV with columns
/// `t, x_1..x_n, p_1..p_n, y, q, int_y, G, a, g, lambda`.
pub fn trajectory_csv(traj: &Trajectory, ker: &KernelProfile) -> String {
    let n = traj.dim();
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x_{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",p_{i}"));
    }
    header.push_str(",y,q,int_y,G,a,g,lambda\n");

    let mut out = header;
    for i in 0..traj.len() {
        let mut row = vec![format_f64(traj.t[i])];
        row.extend(traj.x_at(i).iter().map(|&v| format_f64(v)));
        row.extend(traj.p_at(i).iter().map(|&v| format_f64(v)));
        row.push(format_f64(traj.y[i]));
        row.push(format_f64(traj.q[i]));
        row.push(format_f64(traj.int_y[i]));
        row.push(format_f64(traj.big_g[i]));
        row.push(format_f64(traj.a[i]));
        row.push(format_f64(traj.g[i]));
        row.push(format_f64(ker.lambda[i]));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Sweep CSV with columns
/// `u, DR, cDR, d_cdr_q, d_cdr_kernel, d_cdr_fd, status`.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("u,DR,cDR,d_cdr_q,d_cdr_kernel,d_cdr_fd,status\n");
    for p in &sweep.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_f64(p.u),
            format_f64(p.dr),
            format_f64(p.cdr),
            format_f64(p.d_cdr_q),
            format_f64(p.d_cdr_kernel),
            format_f64(p.d_cdr_fd),
            p.status.label()
        ));
    }
    out
}

/// Which response curve a figure file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Dr,
    Cdr,
}

impl CurveKind {
    pub fn label(self) -> &'static str {
        match self {
            CurveKind::Dr => "DR",
            CurveKind::Cdr => "cDR",
        }
    }
}

/// Figure data file for one motif: `u, value_init1, ..., value_initK`.
pub fn figure_csv(sweeps: &[&SweepResult], which: CurveKind) -> Result<String> {
    if sweeps.is_empty() {
        return Err(Error::invalid("figure data needs at least one sweep"));
    }
    let len = sweeps[0].points.len();
    if sweeps.iter().any(|s| s.points.len() != len) {
        return Err(Error::invalid("figure data sweeps must share the input grid"));
    }
    let mut out = String::from("u");
    for i in 1..=sweeps.len() {
        out.push_str(&format!(",value_init{i}"));
    }
    out.push('\n');
    for row in 0..len {
        out.push_str(&format_f64(sweeps[0].points[row].u));
        for s in sweeps {
            let p = &s.points[row];
            let v = match which {
                CurveKind::Dr => p.dr,
                CurveKind::Cdr => p.cdr,
            };
            out.push(',');
            out.push_str(&format_f64(v));
        }
        out.push('\n');
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Verdict table
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct TableRow<'a> {
    system: String,
    dr: &'a str,
    cdr: &'a str,
    a_sign: &'a str,
    accumulated_g_sign: &'a str,
    certificate: &'a Option<crate::classify::Certificate>,
    witnesses: &'a Option<crate::classify::WitnessPair>,
}

/// Render the four-motif verdict table as text plus JSON.
///
/// Expects verdicts for all four IFFMs; anything missing is an error.
pub fn emit_table3(verdicts: &[Verdict]) -> Result<(String, serde_json::Value)> {
    let mut rows = Vec::new();
    for idx in 1..=4u8 {
        let kind = MotifKind::from_iffm_index(idx).unwrap();
        let v = verdicts
            .iter()
            .find(|v| v.motif == kind)
            .ok_or_else(|| Error::MissingVerdict { motif: kind.name().to_string() })?;
        rows.push(TableRow {
            system: format!("IFFM{idx}"),
            dr: v.dr.label(),
            cdr: v.cdr.label(),
            a_sign: v.a_sign.label(),
            accumulated_g_sign: v.accumulated_g_sign.label(),
            certificate: &v.certificate,
            witnesses: &v.witnesses,
        });
    }

    let mut text = String::new();
    text.push_str(&format!(
        "{:<8} {:<26} {:<26} {:<14} {:<14}\n",
        "System", "DR", "cDR", "a(t)", "G(t)"
    ));
    for r in &rows {
        text.push_str(&format!(
            "{:<8} {:<26} {:<26} {:<14} {:<14}\n",
            r.system, r.dr, r.cdr, r.a_sign, r.accumulated_g_sign
        ));
    }
    let json = serde_json::to_value(&rows)?;
    Ok((text, json))
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

/// Deterministic run metadata (no wall-clock fields: outputs must be
/// byte-identical across reruns).
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    pub rtol: f64,
    pub atol: f64,
    pub n_samples: usize,
    pub horizon: f64,
    pub grid_points: usize,
}

/// All results of one motif: the verdict and one sweep per initial policy.
#[derive(Debug, Clone, Serialize)]
pub struct MotifRun {
    pub motif: MotifKind,
    pub verdict: Verdict,
    pub sweeps: Vec<SweepResult>,
}

/// Everything an experiment produced, traceable to its exact config.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentBundle {
    pub config: serde_json::Value,
    pub provenance: Provenance,
    pub runs: Vec<MotifRun>,
    pub oracle_reports: Vec<OracleReport>,
}

impl ExperimentBundle {
    /// Write the bundle and its derived files under `out_dir`, returning the
    /// paths written.
    pub fn write_files(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out_dir)?;
        let mut written = Vec::new();

        let put = |name: &str, contents: &str| -> Result<PathBuf> {
            let path = out_dir.join(name);
            let mut f = fs::File::create(&path)?;
            f.write_all(contents.as_bytes())?;
            Ok(path)
        };

        written.push(put("config.json", &serde_json::to_string_pretty(&self.config)?)?);
        written.push(put("bundle.json", &serde_json::to_string_pretty(self)?)?);

        let verdicts: Vec<Verdict> = self.runs.iter().map(|r| r.verdict.clone()).collect();
        if verdicts.iter().filter_map(|v| v.motif.iffm_index()).count() == 4 {
            let (text, json) = emit_table3(&verdicts)?;
            written.push(put("table3.txt", &text)?);
            written.push(put("table3.json", &serde_json::to_string_pretty(&json)?)?);
        }

        written.push(put(
            "verify_report.json",
            &serde_json::to_string_pretty(&self.oracle_reports)?,
        )?);

        for run in &self.runs {
            let name = run.motif.name();
            let sweeps: Vec<&SweepResult> = run.sweeps.iter().collect();
            written.push(put(&format!("{name}_DR.csv"), &figure_csv(&sweeps, CurveKind::Dr)?)?);
            written.push(put(&format!("{name}_cDR.csv"), &figure_csv(&sweeps, CurveKind::Cdr)?)?);
            for (k, sweep) in run.sweeps.iter().enumerate() {
                written.push(put(&format!("{name}_init{}_sweep.csv", k + 1), &sweep_csv(sweep))?);
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{kernel, simulate, SimConfig};
    use crate::linsys::LinearSubsystem;
    use crate::motifs::{InitialPolicy, MotifSpec};
    use crate::response::{sweep, log_grid};

    #[test]
    fn float_round_trip_is_bit_exact() {
        for &v in &[
            0.0,
            1.0,
            -1.5,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -2.2250738585072014e-308,
            f64::MAX,
        ] {
            let s = format_f64(v);
            let back = parse_f64(&s).unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "round trip failed for {v} via {s}");
        }
        assert!(parse_f64(&format_f64(f64::NAN)).unwrap().is_nan());
    }

    #[test]
    fn trajectory_csv_shape() {
        let sys = LinearSubsystem::new(nalgebra::dmatrix![-1.0], nalgebra::dvector![1.0]).unwrap();
        let m = MotifSpec::scalar(5).unwrap();
        let init = InitialPolicy::explicit(nalgebra::dvector![0.7], 1.0);
        let cfg = SimConfig { n_samples: 64, ..SimConfig::default() };
        let traj = simulate(&sys, &m, 0.7, &init, &cfg).unwrap();
        let ker = kernel(&traj);
        let csv = trajectory_csv(&traj, &ker);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,p_1,y,q,int_y,G,a,g,lambda");
        assert_eq!(csv.lines().count(), 65);
        // Every data row parses back bit-exact against the trajectory.
        for (i, line) in csv.lines().skip(1).enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 10);
            assert_eq!(parse_f64(cells[0]).unwrap().to_bits(), traj.t[i].to_bits());
            assert_eq!(parse_f64(cells[3]).unwrap().to_bits(), traj.y[i].to_bits());
            assert_eq!(parse_f64(cells[9]).unwrap().to_bits(), ker.lambda[i].to_bits());
        }
    }

    #[test]
    fn figure_csv_single_init_degenerates() {
        let sys = LinearSubsystem::new(nalgebra::dmatrix![-1.0], nalgebra::dvector![1.0]).unwrap();
        let m = MotifSpec::scalar(1).unwrap();
        let init = InitialPolicy::explicit(nalgebra::dvector![1.0], 1.0);
        let cfg = SimConfig { n_samples: 64, ..SimConfig::default() };
        let grid = log_grid(0.1, 10.0, 5).unwrap();
        let s = sweep(&sys, &m, &init, &cfg, &grid).unwrap();
        let csv = figure_csv(&[&s], CurveKind::Cdr).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "u,value_init1");
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn table_requires_all_four_verdicts() {
        let err = emit_table3(&[]).unwrap_err();
        assert!(matches!(err, Error::MissingVerdict { .. }));
    }

    proptest::proptest! {
        #[test]
        fn serialized_floats_round_trip(bits in proptest::num::u64::ANY) {
            let v = f64::from_bits(bits);
            let back = parse_f64(&format_f64(v)).unwrap();
            if v.is_nan() {
                proptest::prop_assert!(back.is_nan());
            } else {
                proptest::prop_assert_eq!(v.to_bits(), back.to_bits());
            }
        }
    }
}
