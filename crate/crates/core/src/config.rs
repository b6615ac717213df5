//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certificate::DEFAULT_SCHEDULE;
use crate::error::{Result, TubeError};
use crate::families::{profile_from_specs, CurvatureSpec};
use crate::geometry::{arc_length_reparametrize, curvatures, read_profile_csv, CurvatureProfile, ParametricCurve};
use crate::section::{CrossSection, Mask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub dimension: usize,
    pub curve: CurveConfig,
    pub section: SectionConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub certificate: CertificateConfig,
    #[serde(default)]
    pub frame: FrameConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CurveConfig {
    /// κ₁, …, κ_{d−1} from named families.
    Curvature { kappa: Vec<CurvatureSpec> },
    /// A parametric curve; curvatures are tabulated along its arc length and centred at s = 0.
    Analytic {
        #[serde(flatten)]
        family: AnalyticFamily,
        #[serde(default = "default_sample_spacing")]
        sample_spacing: f64,
    },
    /// CSV with header `s,kappa1,...`.
    Table { path: PathBuf },
}

fn default_sample_spacing() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum AnalyticFamily {
    Helix { radius: f64, pitch: f64, turns: f64 },
    Circle { radius: f64, angle: f64 },
    UBend { radius: f64, leg: f64 },
    Parabola { half_range: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SectionConfig {
    Interval { half_width: f64 },
    Rectangle { b: f64, c: f64 },
    Disk { radius: f64 },
    Mask {
        path: PathBuf,
        spacing: f64,
        #[serde(default = "one")]
        refine: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_half_length")]
    pub half_length: f64,
    #[serde(default = "default_spacing")]
    pub ds: f64,
    /// Transverse spacing; defaults to `ds`.
    #[serde(default)]
    pub du: Option<f64>,
    /// Number of grids (Δ, Δ/2, …) in the refinement study.
    #[serde(default = "one")]
    pub refine: usize,
}

fn default_half_length() -> f64 {
    20.0
}

fn default_spacing() -> f64 {
    1.0 / 16.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_length: default_half_length(), ds: default_spacing(), du: None, refine: 1 }
    }
}

impl GridConfig {
    pub fn du(&self) -> f64 {
        self.du.unwrap_or(self.ds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    4
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { k: default_k(), tol: default_tol(), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    ThresholdScan,
    Certificate,
    SchroedingerCompare,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Defaults to L/2, L, 2L.
    #[serde(default)]
    pub half_lengths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    #[serde(default = "default_schedule")]
    pub schedule: Vec<u64>,
}

fn default_schedule() -> Vec<u64> {
    DEFAULT_SCHEDULE.to_vec()
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self { schedule: default_schedule() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    /// RK4 step; the default scales with the curvature size.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub s0: f64,
    /// Initial rotation angle in the (2,3)-plane, degrees; d ≥ 3 only.
    #[serde(default)]
    pub angle_degrees: f64,
    /// Spacing for the self-overlap check; defaults to a/2. Zero disables it.
    #[serde(default)]
    pub overlap_resolution: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

fn config_error(message: impl Into<String>) -> TubeError {
    TubeError::Config { message: message.into(), line: 0, column: 0 }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// The parser blames the enclosing table for an unknown key; point at the key itself.
fn unknown_key_offset(text: &str, table_start: usize, message: &str) -> Option<usize> {
    let key = message.strip_prefix("unknown field `")?.split('`').next()?;
    let mut offset = table_start;
    for line in text[table_start.min(text.len())..].split_inclusive('\n') {
        let trimmed = line.trim_start();
        if trimmed.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('=')) {
            return Some(offset + line.len() - trimmed.len());
        }
        offset += line.len();
    }
    None
}

impl RunConfig {
    /// Parse and validate. Errors carry 1-based line/column when the parser knows them.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let start = e.span().map(|sp| unknown_key_offset(text, sp.start, e.message()).unwrap_or(sp.start));
            let (line, column) = start.map_or((0, 0), |o| line_column(text, o));
            TubeError::Config { message: e.message().to_string(), line, column }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dimension;
        if d < 2 {
            return Err(config_error(format!("dimension must be at least 2, got {d}")));
        }
        if self.tasks.is_empty() {
            return Err(config_error("task list is empty"));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(format!("{name} must be positive, got {v}")))
            }
        };
        positive("grid.half_length", self.grid.half_length)?;
        positive("grid.ds", self.grid.ds)?;
        positive("grid.du", self.grid.du())?;
        positive("solver.tol", self.solver.tol)?;
        if self.grid.refine == 0 {
            return Err(config_error("grid.refine must be at least 1"));
        }
        if self.solver.k == 0 {
            return Err(config_error("solver.k must be at least 1"));
        }
        if let Some(step) = self.frame.step {
            positive("frame.step", step)?;
        }
        if let Some(ls) = &self.scan.half_lengths {
            if ls.is_empty() {
                return Err(config_error("scan.half_lengths is empty"));
            }
            for &l in ls {
                positive("scan.half_lengths entry", l)?;
            }
        }
        let sched = &self.certificate.schedule;
        if sched.is_empty() || sched[0] == 0 || sched.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_error("certificate.schedule must be increasing positive integers"));
        }
        if let CurveConfig::Curvature { kappa } = &self.curve {
            if kappa.len() != d - 1 {
                return Err(config_error(format!("dimension {d} needs {} curvature entries, got {}", d - 1, kappa.len())));
            }
        }
        let section_dim = match &self.section {
            SectionConfig::Interval { half_width } => {
                positive("section.half_width", *half_width)?;
                1
            }
            SectionConfig::Rectangle { b, c } => {
                positive("section.b", *b)?;
                positive("section.c", *c)?;
                2
            }
            SectionConfig::Disk { radius } => {
                positive("section.radius", *radius)?;
                2
            }
            SectionConfig::Mask { spacing, refine, .. } => {
                positive("section.spacing", *spacing)?;
                if *refine == 0 {
                    return Err(config_error("section.refine must be at least 1"));
                }
                2
            }
        };
        if section_dim != d - 1 {
            return Err(config_error(format!(
                "a {section_dim}-dimensional cross-section needs dimension {}, got {d}",
                section_dim + 1
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "run".to_string())
    }

    /// Referenced files must exist relative to `base`.
    pub fn check_files(&self, base: &Path) -> Result<()> {
        let mut paths = Vec::new();
        if let CurveConfig::Table { path } = &self.curve {
            paths.push(path);
        }
        if let SectionConfig::Mask { path, .. } = &self.section {
            paths.push(path);
        }
        for p in paths {
            let full = base.join(p);
            if !full.is_file() {
                return Err(config_error(format!("referenced file {} does not exist", full.display())));
            }
        }
        Ok(())
    }

    pub fn build_profile(&self, base: &Path) -> Result<CurvatureProfile> {
        let d = self.dimension;
        match &self.curve {
            CurveConfig::Curvature { kappa } => profile_from_specs(kappa),
            CurveConfig::Table { path } => read_profile_csv(d, &std::fs::read_to_string(base.join(path))?),
            CurveConfig::Analytic { family, sample_spacing } => {
                let raw = match *family {
                    AnalyticFamily::Helix { radius, pitch, turns } => {
                        if d != 3 {
                            return Err(config_error("helix curves live in dimension 3"));
                        }
                        let t = std::f64::consts::PI * turns;
                        ParametricCurve::helix(radius, pitch / (2.0 * std::f64::consts::PI), (-t, t))?
                    }
                    AnalyticFamily::Circle { radius, angle } => {
                        ParametricCurve::circle(d, radius, (-angle / 2.0, angle / 2.0))?
                    }
                    AnalyticFamily::UBend { radius, leg } => ParametricCurve::u_bend(d, radius, leg)?,
                    AnalyticFamily::Parabola { half_range } => ParametricCurve::parabola(d, (-half_range, half_range))?,
                };
                let curve = arc_length_reparametrize(&raw, 1e-10)?;
                let (lo, hi) = curve.interval();
                let margin = 0.01f64.min(0.25 * (hi - lo));
                let n = (((hi - lo - 2.0 * margin) / sample_spacing).ceil() as usize).max(8);
                let samples: Vec<f64> = (0..=n).map(|k| lo + margin + (hi - lo - 2.0 * margin) * k as f64 / n as f64).collect();
                let tab = curvatures(&curve, &samples)?;
                // recentre the arc length on 0
                let mid = 0.5 * (lo + hi);
                let text = table_csv(&tab, &samples, mid);
                read_profile_csv(d, &text)
            }
        }
    }

    pub fn build_section(&self, base: &Path) -> Result<CrossSection> {
        match &self.section {
            SectionConfig::Interval { half_width } => CrossSection::interval(*half_width),
            SectionConfig::Rectangle { b, c } => CrossSection::rectangle(*b, *c),
            SectionConfig::Disk { radius } => CrossSection::disk(*radius),
            SectionConfig::Mask { path, spacing, refine } => {
                let mask = Mask::load(&base.join(path))?;
                let mask = if *refine > 1 { mask.refined(*refine) } else { mask };
                CrossSection::mask(mask, spacing / *refine as f64)
            }
        }
    }

    pub fn scan_lengths(&self) -> Vec<f64> {
        let l = self.grid.half_length;
        self.scan.half_lengths.clone().unwrap_or_else(|| vec![0.5 * l, l, 2.0 * l])
    }
}

fn table_csv(profile: &CurvatureProfile, samples: &[f64], shift: f64) -> String {
    let d = profile.dim();
    let mut out = String::from("s");
    for i in 1..d {
        out.push_str(&format!(",kappa{i}"));
    }
    out.push('\n');
    for &s in samples {
        out.push_str(&format!("{:.17e}", s - shift));
        for i in 1..d {
            out.push_str(&format!(",{:.17e}", profile.kappa(i, s)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BENT: &str = r#"
name = "bent"
dimension = 2
tasks = ["spectrum", "certificate"]

[curve]
type = "curvature"
kappa = [{ kind = "bump", height = 0.5, width = 4.0 }]

[section]
kind = "interval"
half_width = 0.5
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::parse(BENT).unwrap();
        assert_eq!(c.grid.half_length, 20.0);
        assert_eq!(c.grid.du(), c.grid.ds);
        assert_eq!(c.certificate.schedule, DEFAULT_SCHEDULE.to_vec());
        assert_eq!(c.tasks, vec![Task::Spectrum, Task::Certificate]);
        assert_eq!(c.scan_lengths(), vec![10.0, 20.0, 40.0]);
    }

    #[test]
    fn syntax_error_reports_position() {
        let bad = BENT.replace("half_width = 0.5", "half_width = = 0.5");
        match RunConfig::parse(&bad) {
            Err(TubeError::Config { line, column, .. }) => {
                assert_eq!(line, 12);
                assert!(column > 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let bad = BENT.replace("[section]", "[section]\nwidth = 3");
        assert!(matches!(RunConfig::parse(&bad), Err(TubeError::Config { .. })));
    }

    #[test]
    fn dimension_must_match_section() {
        let bad = BENT.replace("kind = \"interval\"\nhalf_width = 0.5", "kind = \"disk\"\nradius = 0.3");
        assert!(matches!(RunConfig::parse(&bad), Err(TubeError::Config { .. })));
    }

    #[test]
    fn empty_tasks_rejected() {
        let bad = BENT.replace("tasks = [\"spectrum\", \"certificate\"]", "tasks = []");
        assert!(matches!(RunConfig::parse(&bad), Err(TubeError::Config { .. })));
    }

    #[test]
    fn missing_table_is_reported() {
        let text = BENT.replace(
            "type = \"curvature\"\nkappa = [{ kind = \"bump\", height = 0.5, width = 4.0 }]",
            "type = \"table\"\npath = \"nope.csv\"",
        );
        let c = RunConfig::parse(&text).unwrap();
        assert!(matches!(c.check_files(Path::new("/nonexistent")), Err(TubeError::Config { .. })));
    }

    #[test]
    fn circle_arc_has_constant_curvature() {
        let text = BENT.replace(
            "type = \"curvature\"\nkappa = [{ kind = \"bump\", height = 0.5, width = 4.0 }]",
            "type = \"analytic\"\nfamily = \"circle\"\nradius = 2.0\nangle = 1.5",
        );
        let c = RunConfig::parse(&text).unwrap();
        let p = c.build_profile(Path::new(".")).unwrap();
        assert!((p.kappa(1, 0.0) - 0.5).abs() < 1e-6);
        assert!((p.kappa(1, 1.2) - 0.5).abs() < 1e-6);
    }
}
