//! Acceptance criteria 1 to 9. Each prints one PASS/FAIL line; the test fails
//! if any criterion fails.

mod common;

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};

use common::{bent_strip, rel, strip, tube_with, PI2};
use curved_tube::certificate::{certify, evaluate_certificate, select_weight, Mollifier, TrialFamily, Verdict, DEFAULT_SCHEDULE};
use curved_tube::families::{profile_from_specs, CurvatureSpec};
use curved_tube::frame::{solve_frame_ode, InitialRotation};
use curved_tube::operator::{assemble_form, assemble_schroedinger, EffectivePotential, TruncatedGrid, Variant};
use curved_tube::rotation::{planar, rotation_defect};
use curved_tube::section::CrossSection;
use curved_tube::spectra::{lowest_eigenpairs, spectrum_study, SolverSettings, SpectralReport};
use curved_tube::tube::TubeGeometry;

struct Verdicts(Vec<(usize, &'static str, bool, String)>);

impl Verdicts {
    fn record(&mut self, id: usize, name: &'static str, (pass, detail): (bool, String)) {
        // straight to the handle: libtest only captures the print macros
        let line = format!("{} criterion {id} ({name}): {detail}\n", if pass { "PASS" } else { "FAIL" });
        let _ = std::io::stdout().lock().write_all(line.as_bytes());
        self.0.push((id, name, pass, detail));
    }
}

fn solver(k: usize) -> SolverSettings {
    SolverSettings { k, ..Default::default() }
}

fn straight_threshold() -> (bool, String) {
    let t0 = Instant::now();
    let tube = strip(CurvatureSpec::Zero, 0.5, 21.0);
    let r = spectrum_study(&tube, 20.0, (1.0 / 64.0, 1.0 / 64.0), 1, Variant::Form, &solver(3)).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let l1 = r.values()[0];
    let none_below = r.below_threshold_count == 0 && r.values().iter().all(|&l| l >= PI2);
    let pass = (PI2..=PI2 + 0.01).contains(&l1) && none_below && secs < 30.0;
    (pass, format!("λ₁ = {l1:.6}, λ₁ − π² = {:.2e}, below threshold: {}, {secs:.1} s", l1 - PI2, r.below_threshold_count))
}

fn bent_study(l: f64) -> SpectralReport {
    let tube = bent_strip(l + 1.0);
    spectrum_study(&tube, l, (1.0 / 16.0, 1.0 / 16.0), 3, Variant::Form, &solver(3)).unwrap()
}

fn bound_state(r20: &SpectralReport, r40: &SpectralReport, secs: f64) -> (bool, String) {
    let c = r20.convergence.as_ref().unwrap();
    let (ext, err) = (c.extrapolated[0], c.error_estimate[0]);
    let margin = PI2 - ext;
    let ext40 = r40.convergence.as_ref().unwrap().extrapolated[0];
    let drift = rel(ext, ext40);
    let t0 = Instant::now();
    let cert = certify(&bent_strip(1.0), &DEFAULT_SCHEDULE).unwrap();
    let secs = secs + t0.elapsed().as_secs_f64();
    let pass = margin > 10.0 * err && drift <= 1e-3 && cert.verdict == Verdict::Certified && secs < 120.0;
    (
        pass,
        format!(
            "π² − λ₁ = {margin:.3e} vs 10·err = {:.3e}, L 20→40 relative change {drift:.1e}, certificate {} at n = {:?}, {secs:.1} s",
            10.0 * err,
            cert.verdict,
            cert.certified_at
        ),
    )
}

fn threshold_drift(r20: &SpectralReport, r40: &SpectralReport) -> (bool, String) {
    let e20 = &r20.convergence.as_ref().unwrap().extrapolated;
    let e40 = &r40.convergence.as_ref().unwrap().extrapolated;
    let ratios: Vec<f64> = (1..3).map(|i| (e20[i] - PI2) / (e40[i] - PI2)).collect();
    let stable = rel(e20[0], e40[0]) <= 1e-3;
    let pass = stable && ratios.iter().all(|r| (3.0..=5.0).contains(r));
    (pass, format!("gap ratios λ₂: {:.3}, λ₃: {:.3}; λ₁ relative change {:.1e}", ratios[0], ratios[1], rel(e20[0], e40[0])))
}

/// max_k ‖(R_{k+1} − R_{k−1})/2Δs + R_k K_T(s_k)‖ with K_T built from the profile.
fn frame_fd_error(specs: &[CurvatureSpec], step: f64) -> (f64, f64) {
    let p = profile_from_specs(specs).unwrap();
    let table = solve_frame_ode(&p, (-50.0, 50.0), step, &InitialRotation::identity(4)).unwrap();
    let mut worst_inv: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for k in 0..table.len() {
        let (det, orth) = rotation_defect(table.node(k));
        worst_inv = worst_inv.max(det).max(orth);
        if k == 0 || k + 1 == table.len() {
            continue;
        }
        let s = table.node_s(k);
        let mut kt = DMatrix::zeros(3, 3);
        for i in 1..3 {
            kt[(i - 1, i)] = p.kappa(i + 1, s);
            kt[(i, i - 1)] = -p.kappa(i + 1, s);
        }
        let fd = (table.node(k + 1) - table.node(k - 1)) / (2.0 * step);
        worst_fd = worst_fd.max((fd + table.node(k) * kt).amax());
    }
    (worst_inv, worst_fd)
}

fn frame_invariants() -> (bool, String) {
    let specs = [
        CurvatureSpec::Gaussian { amplitude: 0.5, sigma: 30.0 },
        CurvatureSpec::Constant { value: 0.7 },
        CurvatureSpec::Gaussian { amplitude: -0.9, sigma: 40.0 },
    ];
    let p = profile_from_specs(&specs).unwrap();
    let nonzero = (-500..=500).all(|i| (1..=3).all(|k| p.kappa(k, i as f64 * 0.1).abs() > 0.0));
    let (inv, e1) = frame_fd_error(&specs, 0.02);
    let (inv2, e2) = frame_fd_error(&specs, 0.01);
    let order = (e1 / e2).log2();
    let pass = nonzero && inv.max(inv2) <= 1e-10 && (1.7..=2.3).contains(&order);
    (pass, format!("max node defect {:.1e}, FD residual {e1:.2e} → {e2:.2e} (order {order:.2})", inv.max(inv2)))
}

fn unitary_equivalence() -> (bool, String) {
    let tube = strip(CurvatureSpec::Gaussian { amplitude: 0.6, sigma: 1.0 }, 0.5, 9.0);
    let study = |v| spectrum_study(&tube, 8.0, (1.0 / 16.0, 1.0 / 16.0), 3, v, &solver(3)).unwrap();
    let (f, s) = (study(Variant::Form), study(Variant::Schroedinger));
    let (cf, cs) = (f.convergence.unwrap(), s.convergence.unwrap());
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for i in 0..3 {
        let diff = (cf.extrapolated[i] - cs.extrapolated[i]).abs();
        let err = cf.error_estimate[i].max(cs.error_estimate[i]);
        pass &= diff <= err;
        worst = worst.max(diff / err);
    }
    (pass, format!("limits {:.6?} vs {:.6?}, max |Δ|/err = {worst:.2e}", cf.extrapolated, cs.extrapolated))
}

fn helix_lambda1(section: CrossSection, angle: f64, l: f64, ds: f64, du: f64) -> f64 {
    let specs = [CurvatureSpec::Constant { value: 0.4 }, CurvatureSpec::Constant { value: 0.4 }];
    let initial = InitialRotation { s0: 0.0, rotation: planar(angle) };
    let tube = tube_with(&specs, section, l + 1.0, initial);
    let grid = TruncatedGrid::new(l, ds, tube.section(), du).unwrap();
    let op = assemble_form(&tube, &grid).unwrap();
    lowest_eigenpairs(&op, 1, 1e-12, 0).unwrap().values[0]
}

fn rotation_invariance() -> (bool, String) {
    let disk = |a| helix_lambda1(CrossSection::disk(0.3).unwrap(), a, 2.0, 0.05, 0.3 / 8.0);
    let d = rel(disk(FRAC_PI_2), disk(0.0));
    let rect = |a| helix_lambda1(CrossSection::rectangle(0.5, 0.2).unwrap(), a, 0.25, 0.025, 0.025);
    let r = rel(rect(FRAC_PI_2), rect(0.0));
    (d <= 1e-8 && r > 1e-4, format!("disk relative change {d:.1e}, rectangle relative change {r:.2e}"))
}

fn certificate_analytics() -> (bool, String) {
    let mut pass = true;
    let (mut decay, mut limit, mut quad, mut vanish) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut limit_checked = 0;
    let geometries: [(TubeGeometry, f64); 2] = [
        (bent_strip(1.0), 0.5),
        (strip(CurvatureSpec::Gaussian { amplitude: 0.6, sigma: 1.0 }, 0.5, 1.0), 0.6),
    ];
    for (tube, ksup) in &geometries {
        let choice = select_weight(tube).unwrap();
        let reach = choice.weight.lo.abs().max(choice.weight.hi.abs());
        for n in DEFAULT_SCHEDULE {
            let r = evaluate_certificate(tube, &TrialFamily { mollifier: Mollifier { n }, choice }).unwrap();
            let bound = 2.0 / ((n as f64 + 1.0) * (1.0 - 0.5 * ksup));
            pass &= r.q0 <= bound;
            decay = decay.max(r.q0 / bound);
            if n as f64 >= reach {
                let gap = (r.q1 + 0.5 * choice.phi_kappa).abs();
                pass &= gap <= 1e-6;
                limit = limit.max(gap);
                limit_checked += 1;
            }
            let model = r.q0 + 2.0 * r.epsilon * r.q1 + r.epsilon * r.epsilon * r.q2;
            let identity = (model - r.min_value).abs() / r.q0.abs().max(r.q1.abs()).max(r.q2.abs());
            pass &= r.quadratic_defect <= 1e-12 && identity <= 1e-14;
            quad = quad.max(r.quadratic_defect).max(identity);
            let v = r.vanishing_term.abs() / r.q0.abs();
            pass &= v <= 1e-10;
            vanish = vanish.max(v);
        }
    }
    pass &= limit_checked > 0;
    (
        pass,
        format!(
            "max q₀/bound {decay:.3}, max |q₁ + ½∫φκ₁| {limit:.1e} over {limit_checked} n, identity defect {quad:.1e}, vanishing term {vanish:.1e}"
        ),
    )
}

fn assumption_gate() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fat.toml");
    let out = dir.path().join("fat-out");
    std::fs::write(
        &cfg,
        "name = \"fat\"\ndimension = 2\ntasks = [\"spectrum\"]\n\n[curve]\ntype = \"curvature\"\n\
         kappa = [{ kind = \"constant\", value = 1.5 }]\n\n[section]\nkind = \"interval\"\nhalf_width = 1.0\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_curved-tube"))
        .args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    let code = o.status.code();
    let pass = code == Some(3) && !out.join("report.json").exists();
    (pass, format!("exit status {code:?}, stderr: {}", String::from_utf8_lossy(&o.stderr).trim()))
}

/// Form assembly written out entry by entry for d = 2, h = 1 − κ₁(s)u.
fn dense_form(kappa: impl Fn(f64) -> f64, l: f64, ns: usize, a: f64, nu: usize) -> (DMatrix<f64>, Vec<f64>) {
    let ds = 2.0 * l / (ns + 1) as f64;
    let du = 2.0 * a / (nu + 1) as f64;
    let s = |i: isize| -l + (i + 1) as f64 * ds;
    let u = |j: isize| -a + (j + 1) as f64 * du;
    let h = |s: f64, u: f64| 1.0 - kappa(s) * u;
    let n = ns * nu;
    let idx = |i: usize, j: usize| i * nu + j;
    let mut m = DMatrix::zeros(n, n);
    let mut mass = vec![0.0; n];
    let vol = ds * du;
    for i in 0..ns {
        for j in 0..nu {
            let p = idx(i, j);
            let (si, uj) = (s(i as isize), u(j as isize));
            mass[p] = vol * h(si, uj);
            // transverse neighbours, walls at u = ±a
            for (dj, q) in [(-1isize, j.checked_sub(1)), (1, (j + 1 < nu).then_some(j + 1))] {
                let w = vol / (du * du) * h(si, uj + 0.5 * dj as f64 * du);
                m[(p, p)] += w;
                if let Some(q) = q {
                    m[(p, idx(i, q))] -= w;
                }
            }
            for (di, q) in [(-1isize, i.checked_sub(1)), (1, (i + 1 < ns).then_some(i + 1))] {
                let w = vol / (ds * ds) / h(si + 0.5 * di as f64 * ds, uj);
                m[(p, p)] += w;
                if let Some(q) = q {
                    m[(p, idx(q, j))] -= w;
                }
            }
        }
    }
    (m, mass)
}

fn dense_spectrum(a: &DMatrix<f64>, mass: &[f64]) -> Vec<f64> {
    let n = mass.len();
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (mass[i] * mass[j]).sqrt());
    let mut v: Vec<f64> = SymmetricEigen::new(scaled).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn dense_oracle() -> (bool, String) {
    let (l, ns, nu) = (3.0, 12, 6);
    let tube = bent_strip(l + 1.0);
    let section = tube.section().clone();
    let grid = TruncatedGrid::with_layers(l, ns, section.transverse_grid(1.0 / 7.0).unwrap()).unwrap();
    let op = assemble_form(&tube, &grid).unwrap();
    let bump = |s: f64| {
        let x = s / 2.0;
        if x.abs() < 1.0 {
            0.5 * (1.0 - 1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    };
    let (dense, mass) = dense_form(bump, l, ns, 0.5, nu);
    let sparse = op.stiffness.to_dense();
    let scale = dense.amax();
    let entry = (&sparse - &dense).amax() / scale;
    let mass_gap = op.mass.iter().zip(&mass).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    let full = dense_spectrum(&dense, &mass);
    let k = 4;
    let lanczos = lowest_eigenpairs(&op, k, 1e-13, 0).unwrap().values;
    let spec_gap = (0..k).map(|i| (lanczos[i] - full[i]).abs()).fold(0.0, f64::max);

    // the Schrödinger variant against its own dense matrix: flat mass, 1/h² and V
    let pot = EffectivePotential::new(&tube).unwrap();
    let sch = assemble_schroedinger(&tube, &grid, &pot).unwrap();
    let full_s = dense_spectrum(&sch.stiffness.to_dense(), &sch.mass);
    let lanczos_s = lowest_eigenpairs(&sch, k, 1e-13, 0).unwrap().values;
    let spec_gap_s = (0..k).map(|i| (lanczos_s[i] - full_s[i]).abs()).fold(0.0, f64::max);

    let pass = entry <= 1e-14 && mass_gap <= 1e-15 && spec_gap <= 1e-10 && spec_gap_s <= 1e-10;
    (
        pass,
        format!(
            "{}×{} grid: max entry gap {entry:.1e} (relative), mass gap {mass_gap:.1e}, spectrum gap {spec_gap:.1e} (form) {spec_gap_s:.1e} (Schrödinger)",
            ns, nu
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let mut v = Verdicts(Vec::new());
    v.record(1, "straight-tube threshold", straight_threshold());
    let t0 = Instant::now();
    let (r20, r40) = (bent_study(20.0), bent_study(40.0));
    let secs = t0.elapsed().as_secs_f64();
    v.record(2, "bound state below π²", bound_state(&r20, &r40, secs));
    v.record(3, "essential threshold drift", threshold_drift(&r20, &r40));
    v.record(4, "Tang-frame invariants", frame_invariants());
    v.record(5, "unitary equivalence", unitary_equivalence());
    v.record(6, "rotation invariance", rotation_invariance());
    v.record(7, "certificate analytics", certificate_analytics());
    v.record(8, "assumption gate", assumption_gate());
    v.record(9, "dense-oracle equivalence", dense_oracle());
    let failed: Vec<usize> = v.0.iter().filter(|c| !c.2).map(|c| c.0).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
