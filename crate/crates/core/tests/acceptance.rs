//! Acceptance suite: every criterion below runs at its stated tolerance and
//! prints one `[acceptance] PASS/FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`).
//!
//! Criterion 9 (byte-identical CLI reproduction) lives in the CLI crate's
//! integration tests, next to the binary it exercises.

use std::sync::OnceLock;

use iffm_core::classify::{analyze_motif, Monotonicity, MotifAnalysis, SignClass};
use iffm_core::config::ExperimentConfig;
use iffm_core::integrator::{closed_form_scalar, kernel, simulate, SimConfig};
use iffm_core::linsys::LinearSubsystem;
use iffm_core::motifs::{InitialPolicy, MotifSpec, X0Policy, Y0Policy};
use iffm_core::oracle::{fd_sensitivity, richardson_dcdr};
use iffm_core::preset;
use iffm_core::response::default_grid;

fn check(criterion: &str, pass: bool, detail: String) {
    println!("[acceptance] {} {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

fn sys1() -> LinearSubsystem {
    LinearSubsystem::new(nalgebra::dmatrix![-1.0], nalgebra::dvector![1.0]).unwrap()
}

/// The full built-in experiment, shared by criteria 1, 3, and 7.
fn preset_runs() -> &'static Vec<MotifAnalysis> {
    static RUNS: OnceLock<Vec<MotifAnalysis>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let exp = ExperimentConfig::paper_sec5().build().expect("preset builds");
        exp.motifs
            .iter()
            .map(|(motif, inits)| {
                analyze_motif(&exp.sys, motif, inits, &exp.sim, &exp.u_grid)
                    .expect("preset analysis completes")
            })
            .collect()
    })
}

#[test]
fn criterion_1_verdict_table_reproduction() {
    let runs = preset_runs();
    let mut details = Vec::new();
    let mut ok = true;

    // (iffm index, DR nonmonotone for at least one init?, DR monotone for
    // all?, cDR monotone for all?)
    let expected = [
        (1u8, true, false, true),
        (2, false, true, true),
        (3, true, false, true),
        (4, true, false, false),
    ];
    for (idx, dr_any_nonmono, dr_all_mono, cdr_mono) in expected {
        let run = &runs[(idx - 1) as usize];
        let v = &run.verdict;
        let dr_nonmono_count =
            v.per_init.iter().filter(|iv| iv.dr == Monotonicity::NonMonotone).count();
        let dr_ok = if dr_all_mono {
            dr_nonmono_count == 0 && v.dr.is_monotone()
        } else if dr_any_nonmono {
            dr_nonmono_count >= 1 && v.dr == Monotonicity::NonMonotone
        } else {
            unreachable!()
        };
        // Monotone means every init's d_cdr_q shares one sign outside the
        // 1e-9 band, i.e. no init classifies as mixed.
        let cdr_ok = if cdr_mono {
            v.per_init.iter().all(|iv| iv.cdr_class != SignClass::Mixed) && v.cdr.is_monotone()
        } else {
            v.cdr == Monotonicity::NonMonotone
        };
        if !(dr_ok && cdr_ok) {
            ok = false;
        }
        details.push(format!(
            "IFFM{idx}: DR={} ({} of {} inits nonmonotone), cDR={}",
            v.dr.label(),
            dr_nonmono_count,
            v.per_init.len(),
            v.cdr.label()
        ));
    }
    check("criterion 1 (verdict table)", ok, details.join("; "));
}

#[test]
fn criterion_2_scalar_catalog_signs_and_verdicts() {
    let sys = sys1();
    let cfg = SimConfig::default();
    let mut ok = true;
    let mut worst_violation = 0.0_f64;

    // Fixed forcing signs for forms 1, 3, 6, 8 (negative, positive,
    // positive, negative).
    for (row, nonneg) in [(1u8, false), (3, true), (6, true), (8, false)] {
        let motif = MotifSpec::scalar(row).unwrap();
        for &x0 in &[0.5, 2.0] {
            for &u in &[0.5, 2.0] {
                let init = InitialPolicy::explicit(nalgebra::dvector![x0], 1.0);
                let traj = simulate(&sys, &motif, u, &init, &cfg).unwrap();
                let violation = if nonneg {
                    -traj.g.iter().cloned().fold(f64::INFINITY, f64::min)
                } else {
                    traj.g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                };
                worst_violation = worst_violation.max(violation);
                if violation > 1e-10 {
                    ok = false;
                }
            }
        }
    }

    // Cumulative-response verdicts for all eight scalar forms with
    // x0 in {0.5, 2}, y0 = 1 over the default grid.
    let expected = [
        (1u8, Monotonicity::NonIncreasing),
        (2, Monotonicity::NonIncreasing),
        (3, Monotonicity::NonDecreasing),
        (4, Monotonicity::NonMonotone),
        (5, Monotonicity::NonDecreasing),
        (6, Monotonicity::NonDecreasing),
        (7, Monotonicity::NonMonotone),
        (8, Monotonicity::NonIncreasing),
    ];
    let grid = default_grid();
    let mut verdict_notes = Vec::new();
    for (row, want) in expected {
        let motif = MotifSpec::scalar(row).unwrap();
        let inits = vec![
            InitialPolicy::explicit(nalgebra::dvector![0.5], 1.0),
            InitialPolicy::explicit(nalgebra::dvector![2.0], 1.0),
        ];
        let analysis = analyze_motif(&sys, &motif, &inits, &cfg, &grid).unwrap();
        let got = analysis.verdict.cdr;
        let witnesses_ok = if want == Monotonicity::NonMonotone {
            analysis.verdict.witnesses.is_some()
        } else {
            true
        };
        if got != want || !witnesses_ok {
            ok = false;
        }
        verdict_notes.push(format!("scalar-{row}={}", got.label()));
    }

    check(
        "criterion 2 (scalar signs + verdicts)",
        ok,
        format!("worst sign violation {worst_violation:.2e}; {}", verdict_notes.join(", ")),
    );
}

#[test]
fn criterion_3_representation_identity() {
    let runs = preset_runs();
    let mut worst = 0.0_f64;
    for run in runs {
        for sweep in &run.sweeps {
            worst = worst.max(sweep.max_representation_gap());
        }
    }
    check(
        "criterion 3 (integral representation identity)",
        worst <= 1e-7,
        format!("max |int q - int lambda g| / (1 + |int q|) = {worst:.3e} (tol 1e-7)"),
    );
}

#[test]
fn criterion_4_sensitivity_against_finite_differences() {
    let cfg = SimConfig::default();
    let sys_scalar = sys1();
    let sys5 = preset::subsystem();
    let mut worst = 0.0_f64;
    let mut ok = true;

    let mut cases: Vec<(String, LinearSubsystem, MotifSpec, InitialPolicy)> = Vec::new();
    for row in 1..=8 {
        cases.push((
            format!("scalar-{row}"),
            sys_scalar.clone(),
            MotifSpec::scalar(row).unwrap(),
            InitialPolicy::explicit(nalgebra::dvector![0.5], 1.0),
        ));
    }
    for idx in 1..=4 {
        let motif = preset::motif(idx);
        let init =
            InitialPolicy::new(X0Policy::Explicit(preset::x0(2)), preset::y0_policy(motif.kind()));
        cases.push((format!("iffm-{idx}"), sys5.clone(), motif, init));
    }

    for (name, sys, motif, init) in &cases {
        for &u in &[0.1, 1.0, 10.0] {
            let traj = simulate(sys, motif, u, init, &cfg).unwrap();
            let h = 1e-4 * u.max(1.0);
            let q_hat = fd_sensitivity(sys, motif, u, init, &cfg, h).unwrap();
            let engine = *traj.q.last().unwrap();
            let oracle = *q_hat.last().unwrap();
            let rel = (engine - oracle).abs() / (1.0 + engine.abs().max(oracle.abs()));
            worst = worst.max(rel);
            if rel > 1e-5 {
                ok = false;
                println!("  q(T) mismatch {name} u={u}: engine {engine} vs fd {oracle}");
            }
        }
    }
    check(
        "criterion 4 (sensitivity vs central differences)",
        ok,
        format!("12 motifs x 3 inputs, worst relative gap {worst:.3e} (tol 1e-5)"),
    );
}

#[test]
fn criterion_5_closed_forms() {
    let cfg = SimConfig::default();
    let sys = sys1();
    let mut worst_xp = 0.0_f64;

    for (row, u, x0) in [(1u8, 0.5, 2.0), (5, 2.0, 0.5)] {
        let motif = MotifSpec::scalar(row).unwrap();
        let init = InitialPolicy::explicit(nalgebra::dvector![x0], 1.0);
        let traj = simulate(&sys, &motif, u, &init, &cfg).unwrap();
        for i in 0..traj.len() {
            let (x_cf, p_cf) = closed_form_scalar(motif.kind(), u, x0, traj.t[i]).unwrap();
            worst_xp = worst_xp
                .max((traj.x_at(i)[0] - x_cf).abs())
                .max((traj.p_at(i)[0] - p_cf).abs());
        }
    }

    // Kernel closed form for the constant-rate motif (rate d u at u = 1).
    let sys5 = preset::subsystem();
    let motif = preset::motif(3);
    let init = InitialPolicy::new(X0Policy::Explicit(preset::x0(2)), Y0Policy::AdaptedSteadyState);
    let traj = simulate(&sys5, &motif, 1.0, &init, &cfg).unwrap();
    let ker = kernel(&traj);
    let du = preset::D;
    let mut worst_lambda = 0.0_f64;
    for &frac in &[0.0, 0.25, 0.5, 0.75, 0.95] {
        let idx = ((traj.len() - 1) as f64 * frac) as usize;
        let t = traj.t[idx];
        let exact = (1.0 - (-du * (cfg.t_horizon - t)).exp()) / du;
        worst_lambda = worst_lambda.max((ker.lambda[idx] - exact).abs());
    }

    let ok = worst_xp <= 1e-9 && worst_lambda <= 1e-9;
    check(
        "criterion 5 (closed forms)",
        ok,
        format!("x/p gap {worst_xp:.3e}, kernel gap {worst_lambda:.3e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_6_structured_start_invariants() {
    let sys = preset::subsystem();
    let cfg = SimConfig::default();
    let mut ok = true;
    let mut notes = Vec::new();

    // Ray starts for the first motif: g keeps a sign when the ray scale
    // dominates the input; otherwise the accumulated forcing and the kernel
    // slope do.
    let m1 = preset::motif(1);
    for &u in &[0.1, 1.0, 10.0] {
        for &v in &[u, 2.0 * u, 3.0 * u] {
            let init = InitialPolicy::new(X0Policy::SteadyRay(v), Y0Policy::AdaptedSteadyState);
            let traj = simulate(&sys, &m1, u, &init, &cfg).unwrap();
            let g_min = traj.g.iter().cloned().fold(f64::INFINITY, f64::min);
            if g_min < -1e-10 {
                ok = false;
                notes.push(format!("g dipped to {g_min:.2e} at u={u}, v={v}"));
            }
        }
        for &v in &[0.0, 0.25 * u, 0.5 * u] {
            let init = InitialPolicy::new(X0Policy::SteadyRay(v), Y0Policy::AdaptedSteadyState);
            let traj = simulate(&sys, &m1, u, &init, &cfg).unwrap();
            let ker = kernel(&traj);
            let big_g_min = traj.big_g.iter().cloned().fold(f64::INFINITY, f64::min);
            let lam_dot_max = ker.lambda_dot.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if big_g_min < -1e-10 {
                ok = false;
                notes.push(format!("G dipped to {big_g_min:.2e} at u={u}, v={v}"));
            }
            if lam_dot_max > 1e-10 {
                ok = false;
                notes.push(format!("lambda' rose to {lam_dot_max:.2e} at u={u}, v={v}"));
            }
        }
    }

    // Constant-rate motif: accumulated (d y - c'p) stays nonnegative for all
    // three preset starts; in the engine's sign convention that is -G.
    let m3 = preset::motif(3);
    for &u in &[0.1, 1.0, 10.0] {
        for i in 1..=3 {
            let init =
                InitialPolicy::new(X0Policy::Explicit(preset::x0(i)), Y0Policy::AdaptedSteadyState);
            let traj = simulate(&sys, &m3, u, &init, &cfg).unwrap();
            let neg_g_max = traj.big_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if neg_g_max > 1e-10 {
                ok = false;
                notes.push(format!("int(dy - c'p) dipped to {:.2e} at u={u}, x0#{i}", -neg_g_max));
            }
        }
    }

    check(
        "criterion 6 (structured-start invariants)",
        ok,
        if notes.is_empty() { "all sampled invariants hold within 1e-10".to_string() } else { notes.join("; ") },
    );
}

#[test]
fn criterion_7_nonmonotone_witnesses() {
    let runs = preset_runs();
    let v = &runs[3].verdict;
    let w = match v.witnesses {
        Some(w) => w,
        None => {
            check("criterion 7 (witness pair)", false, "no witnesses found".to_string());
            return;
        }
    };

    // Confirm both signs with the Richardson oracle at the witness inputs.
    let exp = ExperimentConfig::paper_sec5().build().unwrap();
    let (motif, inits) = &exp.motifs[3];
    let rich_minus = richardson_dcdr(&exp.sys, motif, w.u_minus, &inits[0], &exp.sim).unwrap();
    let rich_plus = richardson_dcdr(&exp.sys, motif, w.u_plus, &inits[0], &exp.sim).unwrap();

    let ok = w.u_minus <= 0.1
        && w.d_minus > 0.0
        && w.u_plus >= 10.0
        && w.d_plus < 0.0
        && rich_minus > 0.0
        && rich_plus < 0.0;
    check(
        "criterion 7 (witness pair)",
        ok,
        format!(
            "u- = {:.3e} (d = {:.3e}, oracle {:.3e}), u+ = {:.3e} (d = {:.3e}, oracle {:.3e})",
            w.u_minus, w.d_minus, rich_minus, w.u_plus, w.d_plus, rich_plus
        ),
    );
}

#[test]
fn criterion_8_large_input_asymptotics() {
    // Form 4 at x0 = 1, u = 1e6: u^2 G(T) / ln u must sit in [-1.5, -0.5].
    // |G(T)| is ~1e-11 here, so the run uses tightened tolerances to keep
    // the quadrature noise floor well below the measured value.
    let sys = sys1();
    let motif = MotifSpec::scalar(4).unwrap();
    let init = InitialPolicy::explicit(nalgebra::dvector![1.0], 1.0);
    let cfg = SimConfig { rtol: 1e-10, atol: 1e-16, ..SimConfig::default() };
    let u = 1e6;
    let traj = simulate(&sys, &motif, u, &init, &cfg).unwrap();
    let big_g_end = *traj.big_g.last().unwrap();
    let ratio = u * u * big_g_end / u.ln();
    let ok = (-1.5..=-0.5).contains(&ratio);
    check(
        "criterion 8 (large-input asymptotics)",
        ok,
        format!("G(T) = {big_g_end:.4e}, u^2 G(T)/ln u = {ratio:.4} (range [-1.5, -0.5])"),
    );
}
