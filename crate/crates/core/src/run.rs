//! Orchestration of one configured run: geometry, spectra, certificate, report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::certificate::{certify, CertificateOutcome, Verdict};
use crate::config::{RunConfig, Task};
use crate::error::{Result, TubeError};
use crate::frame::{default_step, solve_frame_ode, InitialRotation, IntegratedCurve, TangFrameTable};
use crate::geometry::Support;
use crate::operator::{TruncatedGrid, Variant};
use crate::spectra::{assemble, spectrum_study, threshold_scan, Convergence, SolverSettings, SpectralReport, ThresholdScan};
use crate::tube::{build_tube, check_assumption, overlap_check, GeometrySummary, OverlapStatus, TubeGeometry};

pub const SCHEMA_VERSION: u32 = 1;

/// Command-line overrides and output switches.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub refine: Option<usize>,
    pub emit_matrix: bool,
    pub emit_slices: bool,
    pub emit_frame: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub name: String,
    pub description: Option<String>,
    pub seed: u64,
    pub refine_levels: usize,
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameInfo {
    pub step: f64,
    pub range: [f64; 2],
    pub s0: f64,
    pub angle_degrees: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub form: Convergence,
    pub schroedinger: Convergence,
    pub difference: Vec<f64>,
    pub tolerance: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub certified: bool,
    pub below_threshold_count: usize,
    /// `None` when the truncated spectrum cannot decide (certified, but L too short to resolve the bound state).
    pub consistent: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not decidable from this run.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub task: String,
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    pub fn line(&self) -> String {
        let tag = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "SKIP",
        };
        format!("{tag} {}/{}: {}", self.task, self.name, self.detail)
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub timestamp: String,
    pub run: RunInfo,
    pub geometry: GeometrySummary,
    pub frame: FrameInfo,
    pub spectrum: Option<SpectralReport>,
    pub threshold_scan: Option<ThresholdScan>,
    pub schroedinger_compare: Option<CompareReport>,
    pub certificate: Option<CertificateOutcome>,
    pub cross_check: Option<CrossCheck>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Exit status for a failed run: 2 for configuration, 3 for the a‖κ₁‖∞ < 1 gate, 4 otherwise.
pub fn exit_code(err: &TubeError) -> i32 {
    match err {
        TubeError::Config { .. } => 2,
        TubeError::AssumptionViolation { .. } => 3,
        _ => 4,
    }
}

fn initial_rotation(d: usize, s0: f64, degrees: f64) -> InitialRotation {
    let mut r = DMatrix::identity(d - 1, d - 1);
    if d >= 3 {
        let (s, c) = degrees.to_radians().sin_cos();
        r[(0, 0)] = c;
        r[(0, 1)] = -s;
        r[(1, 0)] = s;
        r[(1, 1)] = c;
    }
    InitialRotation { s0, rotation: r }
}

struct Built {
    tube: TubeGeometry,
    frame_info: FrameInfo,
    warnings: Vec<String>,
}

fn build(cfg: &RunConfig, base: &Path) -> Result<Built> {
    let profile = cfg.build_profile(base)?;
    let section = cfg.build_section(base)?;
    // the gate runs before any frame integration or assembly
    check_assumption(section.radius(), profile.kappa1_sup())?;
    let l = cfg.grid.half_length;
    let mut reach = l;
    if cfg.tasks.contains(&Task::ThresholdScan) {
        reach = cfg.scan_lengths().into_iter().fold(reach, f64::max);
    }
    if cfg.tasks.contains(&Task::Certificate) && cfg.dimension >= 3 {
        reach = match profile.support() {
            Support::Finite { lo, hi } => reach.max(lo.abs()).max(hi.abs()),
            Support::Infinite => {
                let n = *cfg.certificate.schedule.last().unwrap_or(&0) as f64;
                reach.max(2.0 * n + 1.0).max(100.0)
            }
        };
    }
    let s0 = cfg.frame.s0;
    let step = cfg.frame.step.unwrap_or_else(|| default_step(&profile));
    let init = initial_rotation(cfg.dimension, s0, cfg.frame.angle_degrees);
    let table: TangFrameTable = solve_frame_ode(&profile, (-reach, reach), step, &init)?;
    let frame_info = FrameInfo {
        step,
        range: [table.range().0, table.range().1],
        s0,
        angle_degrees: cfg.frame.angle_degrees,
        nodes: table.len(),
    };
    let mut tube = build_tube(profile.clone(), table, section)?;
    let mut warnings = Vec::new();
    let res = cfg.frame.overlap_resolution.unwrap_or(0.5 * tube.section().radius());
    if res > 0.0 {
        let curve = IntegratedCurve::new(&profile, (-l, l), s0, step.max(0.01))?;
        let status = overlap_check(&tube, Some(&curve), (-l, l), res)?;
        if let OverlapStatus::Failed { min_distance, .. } = &status {
            warnings.push(format!("tube self-overlap: points {min_distance:.3e} apart at resolution {res}"));
        }
        tube.set_overlap(status);
    }
    Ok(Built { tube, frame_info, warnings })
}

/// The tube a config describes, after the assumption gate and the overlap check.
pub fn build_geometry(cfg: &RunConfig, base: &Path) -> Result<TubeGeometry> {
    cfg.check_files(base)?;
    Ok(build(cfg, base)?.tube)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn check(task: &str, name: &str, pass: bool, detail: String) -> Check {
    let status = if pass { CheckStatus::Pass } else { CheckStatus::Fail };
    Check { task: task.into(), name: name.into(), status, detail }
}

fn spectrum_checks(r: &SpectralReport, tol: f64) -> Vec<Check> {
    let worst = r.eigenvalues.iter().map(|e| e.residual / e.lambda.abs().max(1.0)).fold(0.0, f64::max);
    let res_bound = (1e4 * tol).max(1e-8);
    let mut out = vec![
        check("spectrum", "residuals", worst <= res_bound, format!("max relative residual {worst:.2e} (bound {res_bound:.0e})")),
        check(
            "spectrum",
            "m-orthogonality",
            r.max_orthogonality_defect <= 1e-8,
            format!("max |x_iᵀMx_j| = {:.2e}", r.max_orthogonality_defect),
        ),
    ];
    let below: Vec<(usize, f64)> =
        r.eigenvalues.iter().zip(&r.localization).filter(|(e, _)| e.below_threshold).map(|(e, &f)| (e.index, f)).collect();
    let worst_loc = below.iter().map(|b| b.1).fold(0.0, f64::max);
    out.push(check(
        "spectrum",
        "localization",
        worst_loc <= 1e-3,
        if below.is_empty() {
            "no eigenvalue below the threshold".into()
        } else {
            format!("max mass fraction in |s| > L/2 over bound states: {worst_loc:.2e}")
        },
    ));
    if let Some(c) = &r.convergence {
        let ok = c.bracketed.iter().all(|&b| b);
        out.push(check("spectrum", "monotone-refinement", ok, format!("observed orders {:?}", c.observed_order)));
    }
    out
}

fn certificate_checks(c: &CertificateOutcome) -> Vec<Check> {
    let decay = c.trace.iter().all(|r| r.q0 <= r.q0_bound);
    let vanish = c.trace.iter().map(|r| r.vanishing_term.abs() / r.q0.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let quad = c.trace.iter().map(|r| r.quadratic_defect).fold(0.0, f64::max);
    vec![
        check("certificate", "mollifier-decay", decay, "q₀ ≤ C₋⁻¹·2/(n+1) along the schedule".into()),
        check("certificate", "vanishing-term", vanish <= 1e-10, format!("max |(Ψₙ, κ₁R_{{μ2}}Ψₙ,μ)|/q₀ = {vanish:.2e}")),
        check("certificate", "quadratic-identity", quad <= 1e-12, format!("max relative defect {quad:.2e}")),
    ]
}

/// Run every requested task and write artifacts. Scientific negatives are data, not errors.
pub fn run(cfg: &RunConfig, base: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.check_files(base)?;
    let built = build(cfg, base)?;
    let tube = &built.tube;
    let seed = opts.seed.unwrap_or(cfg.solver.seed);
    let levels = opts.refine.unwrap_or(cfg.grid.refine).max(1);
    let solver = SolverSettings { k: cfg.solver.k, tol: cfg.solver.tol, seed };
    let (l, ds, du) = (cfg.grid.half_length, cfg.grid.ds, cfg.grid.du());
    let mut checks = Vec::new();
    let mut warnings = built.warnings.clone();
    if let OverlapStatus::Failed { .. } | OverlapStatus::Passed { .. } = tube.overlap() {
        let pass = matches!(tube.overlap(), OverlapStatus::Passed { .. });
        checks.push(check("geometry", "no-self-overlap", pass, "sampled tube points with |Δs| > 4a stay apart".into()));
    }

    let spectrum = if cfg.tasks.contains(&Task::Spectrum) {
        let r = spectrum_study(tube, l, (ds, du), levels, Variant::Form, &solver)?;
        checks.extend(spectrum_checks(&r, cfg.solver.tol));
        warnings.extend(r.warnings.iter().cloned());
        Some(r)
    } else {
        None
    };

    let scan = if cfg.tasks.contains(&Task::ThresholdScan) {
        let s = threshold_scan(tube, &cfg.scan_lengths(), (ds, du), &solver)?;
        let gaps_shrink = s.gap_ratios.iter().flatten().all(|&r| r > 1.0);
        checks.push(check("threshold-scan", "gaps-shrink", gaps_shrink, format!("gap ratios per step {:?}", s.gap_ratios)));
        let below = s.entries.last().is_some_and(|e| e.values[0] < e.mu1_discrete);
        if below {
            checks.push(check(
                "threshold-scan",
                "lambda1-stable",
                s.lambda1_variation <= 1e-3,
                format!("relative change of λ₁ over the last step {:.2e}", s.lambda1_variation),
            ));
        }
        Some(s)
    } else {
        None
    };

    let compare = if cfg.tasks.contains(&Task::SchroedingerCompare) {
        let lv = levels.max(3);
        let cf = match spectrum.as_ref().and_then(|r| r.convergence.clone()) {
            Some(c) if c.values.len() == lv => c,
            _ => spectrum_study(tube, l, (ds, du), lv, Variant::Form, &solver)?.convergence.expect("levels ≥ 3"),
        };
        let s = spectrum_study(tube, l, (ds, du), lv, Variant::Schroedinger, &solver)?;
        let cs = s.convergence.expect("levels ≥ 3");
        let difference: Vec<f64> = cf.extrapolated.iter().zip(&cs.extrapolated).map(|(a, b)| (a - b).abs()).collect();
        let tolerance: Vec<f64> = cf.error_estimate.iter().zip(&cs.error_estimate).map(|(a, b)| a + b).collect();
        let ok = difference.iter().zip(&tolerance).all(|(d, t)| d <= t);
        checks.push(check(
            "schroedinger-compare",
            "common-limits",
            ok,
            format!("|Δλ| {} within extrapolation error {}", sci(&difference), sci(&tolerance)),
        ));
        warnings.extend(s.warnings);
        Some(CompareReport { form: cf, schroedinger: cs, difference, tolerance })
    } else {
        None
    };

    let certificate = if cfg.tasks.contains(&Task::Certificate) {
        let c = certify(tube, &cfg.certificate.schedule)?;
        checks.extend(certificate_checks(&c));
        Some(c)
    } else {
        None
    };

    let cross_check = match (&spectrum, &certificate) {
        (Some(s), Some(c)) => {
            let certified = c.verdict == Verdict::Certified;
            let n = s.below_threshold_count;
            // truncated eigenvalues bound the true ones from above, so only n ≥ 1 is informative
            // and an uncertified geometry may still bind: the certificate is only sufficient
            let consistent = if n >= 1 || !certified { Some(true) } else { None };
            let detail = format!("certificate {}, {n} eigenvalue(s) below threshold", c.verdict);
            checks.push(match consistent {
                Some(ok) => check("cross-check", "certificate-agrees", ok, detail),
                None => Check {
                    task: "cross-check".into(),
                    name: "certificate-agrees".into(),
                    status: CheckStatus::Skip,
                    detail: format!("{detail}; truncation at L = {l} does not resolve the bound state"),
                },
            });
            Some(CrossCheck { certified, below_threshold_count: n, consistent })
        }
        _ => None,
    };

    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
        timestamp: timestamp(),
        run: RunInfo {
            name: cfg.label(),
            description: cfg.description.clone(),
            seed,
            refine_levels: levels,
            tasks: cfg.tasks.clone(),
        },
        geometry: tube.summary(),
        frame: built.frame_info,
        spectrum,
        threshold_scan: scan,
        schroedinger_compare: compare,
        certificate,
        cross_check,
        checks,
        warnings,
    };

    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from(format!("{}-out", cfg.label())));
    std::fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    let mut create = |name: &str| -> Result<BufWriter<File>> {
        let p = out_dir.join(name);
        files.push(p.clone());
        Ok(BufWriter::new(File::create(p)?))
    };

    let mut w = create("report.json")?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| TubeError::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;

    if let Some(s) = &report.spectrum {
        let mut w = create("eigenvalues.csv")?;
        writeln!(w, "index,lambda,residual,below_threshold")?;
        for e in &s.eigenvalues {
            writeln!(w, "{},{:.15e},{:.6e},{}", e.index, e.lambda, e.residual, e.below_threshold)?;
        }
        w.flush()?;
        if opts.emit_slices {
            let origin = [0.0, 0.0];
            for i in 0..s.eigenvalues.len() {
                if let Some(text) = s.slice_along_s(i, &origin[..tube.section().dim()]) {
                    create(&format!("eigenvector_{}_along_s.csv", i + 1))?.write_all(text.as_bytes())?;
                }
                if let Some(text) = s.slice_across(i, 0.0) {
                    create(&format!("eigenvector_{}_across.csv", i + 1))?.write_all(text.as_bytes())?;
                }
            }
        }
    }
    if let Some(c) = &report.certificate {
        let mut w = create("certificate.json")?;
        serde_json::to_writer_pretty(&mut w, c).map_err(|e| TubeError::Io(e.into()))?;
        writeln!(w)?;
        create("certificate.txt")?.write_all(c.table().as_bytes())?;
    }
    if opts.emit_matrix {
        let scale = 0.5f64.powi(levels as i32 - 1);
        let grid = TruncatedGrid::new(l, ds * scale, tube.section(), du * scale)?;
        let op = assemble(tube, &grid, Variant::Form)?;
        let mut a = create("stiffness.mtx")?;
        let mut m = create("mass.mtx")?;
        op.write_matrix_market(&mut a, &mut m)?;
        a.flush()?;
        m.flush()?;
    }
    if opts.emit_frame {
        let mut w = create("frame.csv")?;
        tube.frame().write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(RunOutcome { report, out_dir, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&TubeError::Config { message: String::new(), line: 1, column: 1 }), 2);
        assert_eq!(exit_code(&TubeError::AssumptionViolation { a: 1.0, kappa_sup: 1.5, product: 1.5 }), 3);
        assert_eq!(exit_code(&TubeError::Solver("x".into())), 4);
    }

    #[test]
    fn rotation_angle_is_a_quarter_turn() {
        let r = initial_rotation(3, 0.0, 90.0).rotation;
        assert!((r[(0, 1)] + 1.0).abs() < 1e-15 && (r[(1, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(initial_rotation(2, 0.0, 90.0).rotation.nrows(), 1);
    }
}
