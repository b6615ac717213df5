//! Tube coordinates: the metric factor h, the bounds C±, the embedding ℒ and
//! a sampled self-overlap diagnostic.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Result, TubeError};
use crate::frame::{tang_vectors, FrameField, TangFrameTable};
use crate::geometry::CurvatureProfile;
use crate::section::CrossSection;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum OverlapStatus {
    NotChecked,
    Passed { min_distance: Option<f64>, resolution: f64 },
    Failed { min_distance: f64, resolution: f64, witness: OverlapWitness },
    SkippedAbstract,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapWitness {
    pub s: [f64; 2],
    pub u: [[f64; 2]; 2],
    pub points: [Vec<f64>; 2],
}

/// The curved tube as the manifold (ℝ × ω, diag(h², 1, …, 1)).
#[derive(Debug, Clone)]
pub struct TubeGeometry {
    profile: CurvatureProfile,
    frame: TangFrameTable,
    section: CrossSection,
    c_minus: f64,
    c_plus: f64,
    overlap: OverlapStatus,
}

/// Geometry summary for reports.
#[derive(Debug, Clone, Serialize)]
pub struct GeometrySummary {
    pub dimension: usize,
    pub radius: f64,
    pub kappa1_sup: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub mu1: f64,
    pub assumption_satisfied: bool,
    pub overlap: OverlapStatus,
}

/// Check a‖κ₁‖∞ < 1 and combine profile, frame and section.
pub fn build_tube(profile: CurvatureProfile, frame: TangFrameTable, section: CrossSection) -> Result<TubeGeometry> {
    let d = profile.dim();
    if frame.dim() != d {
        return Err(TubeError::Arity { expected: d, got: frame.dim() });
    }
    if section.dim() != d - 1 {
        return Err(TubeError::Arity { expected: d - 1, got: section.dim() });
    }
    check_assumption(section.radius(), profile.kappa1_sup())?;
    let product = section.radius() * profile.kappa1_sup();
    Ok(TubeGeometry {
        profile,
        frame,
        section,
        c_minus: 1.0 - product,
        c_plus: 1.0 + product,
        overlap: OverlapStatus::NotChecked,
    })
}

/// a·‖κ₁‖∞ < 1, or an assumption-violation error carrying the offending values.
pub fn check_assumption(a: f64, kappa_sup: f64) -> Result<()> {
    let product = a * kappa_sup;
    if !(product < 1.0) {
        return Err(TubeError::AssumptionViolation { a, kappa_sup, product });
    }
    Ok(())
}

impl TubeGeometry {
    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn profile(&self) -> &CurvatureProfile {
        &self.profile
    }

    pub fn frame(&self) -> &TangFrameTable {
        &self.frame
    }

    pub fn section(&self) -> &CrossSection {
        &self.section
    }

    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }

    pub fn overlap(&self) -> &OverlapStatus {
        &self.overlap
    }

    pub fn set_overlap(&mut self, status: OverlapStatus) {
        self.overlap = status;
    }

    /// (R_{μ2}(s))_μ padded to two components.
    pub fn direction(&self, s: f64) -> Result<[f64; 2]> {
        if self.dim() == 2 {
            return Ok([1.0, 0.0]);
        }
        let col = self.frame.first_transverse_column(s)?;
        Ok([col[0], col[1]])
    }

    /// h(s, u) = 1 − κ₁(s) R_{μ2}(s) u_μ.
    pub fn h(&self, s: f64, u: &[f64]) -> Result<f64> {
        let n = self.direction(s)?;
        Ok(h_from(self.profile.kappa(1, s), n, u))
    }

    /// Transverse gradient ∂h/∂u_μ = −κ₁ R_{μ2}.
    pub fn h_gradient(&self, s: f64) -> Result<[f64; 2]> {
        let n = self.direction(s)?;
        let k = self.profile.kappa(1, s);
        Ok([-k * n[0], -k * n[1]])
    }

    pub fn summary(&self) -> GeometrySummary {
        GeometrySummary {
            dimension: self.dim(),
            radius: self.section.radius(),
            kappa1_sup: self.profile.kappa1_sup(),
            c_minus: self.c_minus,
            c_plus: self.c_plus,
            mu1: self.section.mu1(),
            assumption_satisfied: true,
            overlap: self.overlap.clone(),
        }
    }
}

/// h from its three factors: κ₁, the column R_{·2} and u.
pub fn h_from(kappa1: f64, direction: [f64; 2], u: &[f64]) -> f64 {
    let dot = direction[0] * u[0] + if u.len() > 1 { direction[1] * u[1] } else { 0.0 };
    1.0 - kappa1 * dot
}

/// ℒ(s, u) = Γ(s) + ẽ_μ(s) u_μ.
pub fn embed(tube: &TubeGeometry, curve: Option<&dyn FrameField>, s: f64, u: &[f64]) -> Result<DVector<f64>> {
    let curve = curve.ok_or(TubeError::NotEmbeddable)?;
    embed_with(tube.frame(), curve, s, u)
}

fn embed_with(frame: &TangFrameTable, curve: &dyn FrameField, s: f64, u: &[f64]) -> Result<DVector<f64>> {
    let tv = tang_vectors(frame, curve, s)?;
    let mut p = curve.position(s);
    for (mu, &x) in u.iter().enumerate().take(tv.len() - 1) {
        p += &tv[mu + 1] * x;
    }
    Ok(p)
}

/// Sampled self-overlap check; abstract geometries (no curve) are skipped.
pub fn overlap_check(
    tube: &TubeGeometry,
    curve: Option<&dyn FrameField>,
    s_range: (f64, f64),
    resolution: f64,
) -> Result<OverlapStatus> {
    match curve {
        None => Ok(OverlapStatus::SkippedAbstract),
        Some(c) => overlap_check_raw(tube.frame(), tube.section(), c, s_range, resolution),
    }
}

/// Overlap check that does not require the assumption gate to pass.
///
/// Tube points ℒ(s, u) are sampled with spacing `resolution` in s and u;
/// pairs whose s differ by more than 4a are compared through a spatial hash.
/// The check fails when such a pair is closer than `resolution`.
pub fn overlap_check_raw(
    frame: &TangFrameTable,
    section: &CrossSection,
    curve: &dyn FrameField,
    s_range: (f64, f64),
    resolution: f64,
) -> Result<OverlapStatus> {
    if !(resolution > 0.0) || !(s_range.1 > s_range.0) {
        return Err(TubeError::Precondition("overlap check needs a positive resolution and a finite range".into()));
    }
    let a = section.radius();
    let decorrelation = 4.0 * a;
    let ns = ((s_range.1 - s_range.0) / resolution).ceil() as usize;
    let m = (a / resolution).ceil() as isize;
    let mut offsets: Vec<[f64; 2]> = Vec::new();
    for i in -m..=m {
        let js = if section.dim() == 1 { 0..=0 } else { -m..=m };
        for j in js {
            let u = [i as f64 * resolution, j as f64 * resolution];
            let uu = &u[..section.dim()];
            if section.contains(uu) {
                offsets.push(u);
            }
        }
    }
    let mut samples: Vec<(f64, [f64; 2], DVector<f64>)> = Vec::with_capacity((ns + 1) * offsets.len());
    for k in 0..=ns {
        let s = s_range.0 + (s_range.1 - s_range.0) * k as f64 / ns as f64;
        for u in &offsets {
            let p = embed_with(frame, curve, s, &u[..section.dim()])?;
            samples.push((s, *u, p));
        }
    }
    let key = |p: &DVector<f64>| -> Vec<i64> { p.iter().map(|x| (x / resolution).floor() as i64).collect() };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, (_, _, p)) in samples.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let dim = curve.dim();
    let mut best: Option<(f64, usize, usize)> = None;
    let neighbours: Vec<Vec<i64>> = (0..3usize.pow(dim as u32))
        .map(|mut code| {
            (0..dim)
                .map(|_| {
                    let d = (code % 3) as i64 - 1;
                    code /= 3;
                    d
                })
                .collect()
        })
        .collect();
    for (i, (si, _, pi)) in samples.iter().enumerate() {
        let base = key(pi);
        for off in &neighbours {
            let cell: Vec<i64> = base.iter().zip(off).map(|(a, b)| a + b).collect();
            let Some(list) = buckets.get(&cell) else { continue };
            for &j in list {
                if j <= i {
                    continue;
                }
                let (sj, _, pj) = &samples[j];
                if (si - sj).abs() <= decorrelation {
                    continue;
                }
                let dist = (pi - pj).norm();
                if best.is_none_or(|b| dist < b.0) {
                    best = Some((dist, i, j));
                }
            }
        }
    }
    Ok(match best {
        Some((dist, i, j)) if dist < resolution => {
            let (a, b) = (&samples[i], &samples[j]);
            OverlapStatus::Failed {
                min_distance: dist,
                resolution,
                witness: OverlapWitness {
                    s: [a.0, b.0],
                    u: [a.1, b.1],
                    points: [a.2.iter().copied().collect(), b.2.iter().copied().collect()],
                },
            }
        }
        other => OverlapStatus::Passed { min_distance: other.map(|b| b.0), resolution },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{solve_frame_ode, InitialRotation};
    use crate::geometry::{profile_from_closures, ClosureCurvature, CurvatureFunction, ParametricCurve, Support};
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    fn constant(values: &[f64]) -> CurvatureProfile {
        let ks: Vec<Arc<dyn CurvatureFunction>> = values
            .iter()
            .map(|&v| Arc::new(ClosureCurvature::new(Arc::new(move |_| v))) as Arc<dyn CurvatureFunction>)
            .collect();
        profile_from_closures(values.len() + 1, ks, Support::Infinite).unwrap()
    }

    fn tube(values: &[f64], section: CrossSection, range: (f64, f64)) -> TubeGeometry {
        let p = constant(values);
        let f = solve_frame_ode(&p, range, 0.001, &InitialRotation::identity(p.dim())).unwrap();
        build_tube(p, f, section).unwrap()
    }

    #[test]
    fn straight_tube_has_unit_metric() {
        let t = tube(&[0.0, 0.0], CrossSection::rectangle(1.0, 1.0).unwrap(), (-1.0, 1.0));
        assert_eq!(t.h(0.3, &[0.2, -0.4]).unwrap(), 1.0);
        assert_eq!((t.c_minus(), t.c_plus()), (1.0, 1.0));
    }

    #[test]
    fn planar_metric_factor() {
        let t = tube(&[0.5], CrossSection::interval(0.5).unwrap(), (-1.0, 1.0));
        assert!((t.h(0.0, &[0.4]).unwrap() - 0.8).abs() < 1e-15);
        assert!((t.c_minus() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn twisted_metric_factor() {
        // θ = τ s reaches π/2 at s = π/(2τ)
        let tau = 0.25;
        let t = tube(&[0.5, tau], CrossSection::disk(0.4).unwrap(), (0.0, 7.0));
        let s = FRAC_PI_2 / tau;
        assert!((t.h(s, &[0.3, 0.1]).unwrap() - 0.95).abs() < 1e-9);
    }

    #[test]
    fn assumption_gate() {
        let p = constant(&[1.5]);
        let f = solve_frame_ode(&p, (-1.0, 1.0), 0.1, &InitialRotation::identity(2)).unwrap();
        match build_tube(p, f, CrossSection::interval(1.0).unwrap()) {
            Err(TubeError::AssumptionViolation { product, .. }) => assert!((product - 1.5).abs() < 1e-12),
            other => panic!("expected assumption violation, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = constant(&[0.1, 0.1]);
        let f = solve_frame_ode(&p, (-1.0, 1.0), 0.1, &InitialRotation::identity(3)).unwrap();
        assert!(matches!(build_tube(p, f, CrossSection::interval(0.2).unwrap()), Err(TubeError::Arity { .. })));
    }

    #[test]
    fn embedding_of_simple_curves() {
        let line = ParametricCurve::line(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], (-3.0, 3.0)).unwrap();
        let t = tube(&[0.0, 0.0], CrossSection::disk(0.5).unwrap(), (-3.0, 3.0));
        let p = embed(&t, Some(&line), 1.5, &[0.2, 0.0]).unwrap();
        assert!((p - DVector::from_vec(vec![1.5, 0.2, 0.0])).amax() < 1e-15);
        assert!(matches!(embed(&t, None, 0.0, &[0.0, 0.0]), Err(TubeError::NotEmbeddable)));

        let circle = ParametricCurve::circle(2, 2.0, (0.0, 2.0 * PI)).unwrap();
        let unit = crate::geometry::arc_length_reparametrize(&circle, 1e-12).unwrap();
        let t = tube(&[0.5], CrossSection::interval(0.5).unwrap(), (0.0, 12.0));
        let p = embed(&t, Some(&unit), 2.0, &[0.3]).unwrap();
        assert!((p.norm() - 1.7).abs() < 1e-10);
    }

    #[test]
    fn overlap_of_u_bends() {
        let a = 0.1;
        let section = CrossSection::interval(a).unwrap();
        for (radius, expect_pass) in [(10.0 * a, true), (0.9 * a, false)] {
            let curve = ParametricCurve::u_bend(2, radius, 1.0).unwrap();
            let (lo, hi) = curve.interval();
            let p = constant(&[1.0 / radius]);
            let f = solve_frame_ode(&p, (lo, hi), 0.01, &InitialRotation::identity(2)).unwrap();
            let status = overlap_check_raw(&f, &section, &curve, (lo, hi), 0.01).unwrap();
            match status {
                OverlapStatus::Passed { .. } => assert!(expect_pass, "radius {radius}"),
                OverlapStatus::Failed { witness, .. } => {
                    assert!(!expect_pass, "radius {radius}");
                    assert!((witness.s[0] - witness.s[1]).abs() > 4.0 * a);
                }
                other => panic!("{other:?}"),
            }
        }
    }
}
