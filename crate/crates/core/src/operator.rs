//! Finite-difference discretization of the Dirichlet form on a truncated tube.
//!
//! Unknowns live on layers s_i = −L + (i+1)Δs, one transverse grid per layer,
//! numbered layer by layer. Both variants are assembled edge by edge from the
//! quadratic form, so the stiffness matrix is symmetric by construction.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Result, TubeError};
use crate::geometry::CurvatureProfile;
use crate::section::{CrossSection, TransverseGrid};
use crate::sparse::CsrMatrix;
use crate::tube::{h_from, TubeGeometry};

/// Tensor grid on (−L, L) × ω with Dirichlet walls at s = ±L and on ∂ω.
#[derive(Debug, Clone)]
pub struct TruncatedGrid {
    half_length: f64,
    ds: f64,
    ns: usize,
    transverse: TransverseGrid,
}

impl TruncatedGrid {
    /// Grid with spacing close to `ds` and `du` (rounded to fit the domain).
    pub fn new(half_length: f64, ds: f64, section: &CrossSection, du: f64) -> Result<Self> {
        if !(half_length > 0.0 && ds > 0.0) {
            return Err(TubeError::Precondition(format!("grid needs L > 0 and Δs > 0, got L = {half_length}, Δs = {ds}")));
        }
        let cells = ((2.0 * half_length / ds).round() as usize).max(2);
        Self::with_layers(half_length, cells - 1, section.transverse_grid(du)?)
    }

    /// Grid with exactly `ns` interior layers.
    pub fn with_layers(half_length: f64, ns: usize, transverse: TransverseGrid) -> Result<Self> {
        if ns == 0 || transverse.is_empty() {
            return Err(TubeError::Arity { expected: 1, got: 0 });
        }
        Ok(Self { half_length, ds: 2.0 * half_length / (ns + 1) as f64, ns, transverse })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn layers(&self) -> usize {
        self.ns
    }

    pub fn transverse(&self) -> &TransverseGrid {
        &self.transverse
    }

    pub fn dof(&self) -> usize {
        self.ns * self.transverse.len()
    }

    pub fn s_node(&self, i: usize) -> f64 {
        -self.half_length + (i + 1) as f64 * self.ds
    }

    pub fn index(&self, layer: usize, node: usize) -> usize {
        layer * self.transverse.len() + node
    }

    /// (layer, transverse node) of a global index.
    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.transverse.len(), k % self.transverse.len())
    }

    /// Volume of one grid cell, Δs·Δu^{d−1}.
    pub fn cell_volume(&self) -> f64 {
        self.ds * self.transverse.cell_volume()
    }

    pub fn metadata(&self) -> GridMetadata {
        GridMetadata {
            half_length: self.half_length,
            ds: self.ds,
            du: self.transverse.spacing[..self.transverse.dim].to_vec(),
            layers: self.ns,
            transverse_nodes: self.transverse.len(),
            dof: self.dof(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMetadata {
    pub half_length: f64,
    pub ds: f64,
    pub du: Vec<f64>,
    pub layers: usize,
    pub transverse_nodes: usize,
    pub dof: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// A from the form Q in the metric g, M = h·(cell volume).
    Form,
    /// A from the flat-measure Schrödinger operator with potential V, M = cell volume.
    Schroedinger,
}

/// The pencil (A, M) with M diagonal.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    pub variant: Variant,
    pub grid: TruncatedGrid,
    pub warnings: Vec<String>,
}

impl AssembledOperator {
    pub fn dof(&self) -> usize {
        self.mass.len()
    }

    /// Write A, and M as a diagonal matrix, in Matrix Market format.
    pub fn write_matrix_market(&self, stiffness: impl Write, mass: impl Write) -> std::io::Result<()> {
        self.stiffness.write_matrix_market(stiffness)?;
        CsrMatrix::diagonal_matrix(&self.mass).write_matrix_market(mass)
    }
}

/// The directions R_{·2} and κ₁ at one value of s.
fn layer_data(tube: &TubeGeometry, s: f64) -> Result<(f64, [f64; 2])> {
    Ok((tube.profile().kappa(1, s), tube.direction(s)?))
}

fn check_dims(tube: &TubeGeometry, grid: &TruncatedGrid) -> Result<()> {
    let want = tube.dim() - 1;
    if grid.transverse.dim != want {
        return Err(TubeError::Arity { expected: want, got: grid.transverse.dim });
    }
    Ok(())
}

/// Assemble the form variant: longitudinal fluxes weighted by 1/h and
/// transverse fluxes by h, both at edge midpoints; M = h·(cell volume).
pub fn assemble_form(tube: &TubeGeometry, grid: &TruncatedGrid) -> Result<AssembledOperator> {
    check_dims(tube, grid)?;
    let tg = &grid.transverse;
    let vol = grid.cell_volume();
    let long = vol / (grid.ds * grid.ds);
    let mut t = Vec::with_capacity(grid.dof() * (2 * tg.dim + 1) * 2);
    let mut mass = vec![0.0; grid.dof()];
    for i in 0..grid.ns {
        let s = grid.s_node(i);
        let (k, n) = layer_data(tube, s)?;
        for (j, u) in tg.points.iter().enumerate() {
            mass[grid.index(i, j)] = h_from(k, n, &u[..tg.dim]) * vol;
        }
        for e in &tg.edges {
            let w = vol * tg.edge_coefficient(e) * h_from(k, n, &e.midpoint[..tg.dim]);
            push_edge(&mut t, grid.index(i, e.from), e.to.map(|q| grid.index(i, q)), w);
        }
        // the edge towards s + Δs/2 (to the next layer, or the wall at s = L)
        let (km, nm) = layer_data(tube, s + 0.5 * grid.ds)?;
        for (j, u) in tg.points.iter().enumerate() {
            let w = long / h_from(km, nm, &u[..tg.dim]);
            let next = (i + 1 < grid.ns).then(|| grid.index(i + 1, j));
            push_edge(&mut t, grid.index(i, j), next, w);
        }
        if i == 0 {
            let (kb, nb) = layer_data(tube, s - 0.5 * grid.ds)?;
            for (j, u) in tg.points.iter().enumerate() {
                push_edge(&mut t, grid.index(0, j), None, long / h_from(kb, nb, &u[..tg.dim]));
            }
        }
    }
    Ok(AssembledOperator {
        stiffness: CsrMatrix::from_triplets(grid.dof(), t),
        mass,
        variant: Variant::Form,
        grid: grid.clone(),
        warnings: Vec::new(),
    })
}

fn push_edge(t: &mut Vec<(usize, usize, f64)>, p: usize, q: Option<usize>, w: f64) {
    t.push((p, p, w));
    if let Some(q) = q {
        t.push((q, q, w));
        t.push((p, q, -w));
        t.push((q, p, -w));
    }
}

/// The curvature-induced potential V = −κ₁²/(4h²) + h,₁₁/(2h³) − 5h,₁²/(4h⁴).
///
/// h,₁ and h,₁₁ come from the Serret–Frenet matrix and its derivatives, never
/// from differences of h.
#[derive(Debug, Clone)]
pub struct EffectivePotential {
    tube: TubeGeometry,
    pub warnings: Vec<String>,
}

/// h, h,₁ and h,₁₁ at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricDerivatives {
    pub h: f64,
    pub h1: f64,
    pub h11: f64,
}

fn transverse_parts(profile: &CurvatureProfile, s: f64, order: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let k = profile.frenet_matrix(s, order).ok_or_else(|| {
        TubeError::Smoothness(format!(
            "the effective potential needs curvature derivatives of order {order}; the profile does not provide them"
        ))
    })?;
    let d = profile.dim();
    let block = k.view((1, 1), (d - 1, d - 1)).into_owned();
    let col = k.view((1, 0), (d - 1, 1)).column(0).into_owned();
    Ok((block, col))
}

impl EffectivePotential {
    pub fn new(tube: &TubeGeometry) -> Result<Self> {
        let profile = tube.profile();
        // probe availability of the derivatives somewhere inside the support
        let probe = match profile.support() {
            crate::geometry::Support::Finite { lo, hi } => 0.5 * (lo + hi),
            crate::geometry::Support::Infinite => 0.0,
        };
        transverse_parts(profile, probe, 2)?;
        let mut warnings = Vec::new();
        if profile.is_tabulated() {
            warnings.push(
                "curvature derivatives for the effective potential come from interpolating tabulated samples".to_string(),
            );
        }
        Ok(Self { tube: tube.clone(), warnings })
    }

    pub fn derivatives(&self, s: f64, u: &[f64]) -> Result<MetricDerivatives> {
        let profile = self.tube.profile();
        let d = profile.dim();
        let (kt, c) = transverse_parts(profile, s, 0)?;
        let (dkt, dc) = transverse_parts(profile, s, 1)?;
        let (_, ddc) = transverse_parts(profile, s, 2)?;
        let r = if d == 2 { DMatrix::identity(1, 1) } else { self.tube.frame().rotation_at(s)? };
        let w1 = &dc - &kt * &c;
        let w2 = &ddc - &dkt * &c - (&kt * &dc) * 2.0 + &kt * (&kt * &c);
        let uv = DVector::from_iterator(d - 1, u.iter().copied().take(d - 1));
        let ru = r.transpose() * &uv;
        let h = 1.0 + ru.dot(&c);
        Ok(MetricDerivatives { h, h1: ru.dot(&w1), h11: ru.dot(&w2) })
    }

    pub fn value(&self, s: f64, u: &[f64]) -> Result<f64> {
        let m = self.derivatives(s, u)?;
        let k = self.tube.profile().kappa(1, s);
        Ok(-k * k / (4.0 * m.h * m.h) + m.h11 / (2.0 * m.h.powi(3)) - 1.25 * m.h1 * m.h1 / m.h.powi(4))
    }
}

/// Assemble the Schrödinger variant: longitudinal weights 1/h² at midpoints,
/// unit transverse weights, V on the diagonal, M = cell volume.
pub fn assemble_schroedinger(
    tube: &TubeGeometry,
    grid: &TruncatedGrid,
    potential: &EffectivePotential,
) -> Result<AssembledOperator> {
    check_dims(tube, grid)?;
    let tg = &grid.transverse;
    let vol = grid.cell_volume();
    let long = vol / (grid.ds * grid.ds);
    let mut t = Vec::with_capacity(grid.dof() * (2 * tg.dim + 1) * 2);
    for i in 0..grid.ns {
        let s = grid.s_node(i);
        for (j, u) in tg.points.iter().enumerate() {
            let v = potential.value(s, &u[..tg.dim])?;
            if !v.is_finite() {
                return Err(TubeError::Numeric(format!("V({s}, {u:?}) = {v}")));
            }
            t.push((grid.index(i, j), grid.index(i, j), v * vol));
        }
        for e in &tg.edges {
            let w = vol * tg.edge_coefficient(e);
            push_edge(&mut t, grid.index(i, e.from), e.to.map(|q| grid.index(i, q)), w);
        }
        let (km, nm) = layer_data(tube, s + 0.5 * grid.ds)?;
        for (j, u) in tg.points.iter().enumerate() {
            let h = h_from(km, nm, &u[..tg.dim]);
            let next = (i + 1 < grid.ns).then(|| grid.index(i + 1, j));
            push_edge(&mut t, grid.index(i, j), next, long / (h * h));
        }
        if i == 0 {
            let (kb, nb) = layer_data(tube, s - 0.5 * grid.ds)?;
            for (j, u) in tg.points.iter().enumerate() {
                let h = h_from(kb, nb, &u[..tg.dim]);
                push_edge(&mut t, grid.index(0, j), None, long / (h * h));
            }
        }
    }
    Ok(AssembledOperator {
        stiffness: CsrMatrix::from_triplets(grid.dof(), t),
        mass: vec![vol; grid.dof()],
        variant: Variant::Schroedinger,
        grid: grid.clone(),
        warnings: potential.warnings.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{solve_frame_ode, InitialRotation};
    use crate::geometry::{profile_from_closures, ClosureCurvature, CurvatureFunction, Support};
    use crate::tube::build_tube;
    use std::sync::Arc;

    fn planar(kappa: ClosureCurvature, a: f64, support: Support) -> TubeGeometry {
        let ks: Vec<Arc<dyn CurvatureFunction>> = vec![Arc::new(kappa)];
        let p = profile_from_closures(2, ks, support).unwrap();
        let f = solve_frame_ode(&p, (-1.0, 1.0), 0.1, &InitialRotation::identity(2)).unwrap();
        build_tube(p, f, CrossSection::interval(a).unwrap()).unwrap()
    }

    fn constant_tube(k: f64) -> TubeGeometry {
        planar(
            ClosureCurvature::with_derivatives(Arc::new(move |_| k), Arc::new(|_| 0.0), Arc::new(|_| 0.0)),
            0.5,
            Support::Infinite,
        )
    }

    #[test]
    fn straight_tube_mass_is_cell_volume() {
        let t = constant_tube(0.0);
        let g = TruncatedGrid::new(2.0, 0.1, t.section(), 0.1).unwrap();
        let op = assemble_form(&t, &g).unwrap();
        assert!(op.mass.iter().all(|&m| m == g.cell_volume()));
        assert_eq!(op.stiffness.asymmetry(), 0.0);
    }

    #[test]
    fn straight_tube_is_the_five_point_laplacian() {
        let t = constant_tube(0.0);
        let g = TruncatedGrid::new(1.0, 0.25, t.section(), 0.25).unwrap();
        let op = assemble_form(&t, &g).unwrap();
        let vol = g.cell_volume();
        let (ds, du) = (g.ds(), g.transverse().spacing[0]);
        assert!((op.stiffness.get(0, 0) / vol - (2.0 / (ds * ds) + 2.0 / (du * du))).abs() < 1e-12);
        assert!((op.stiffness.get(0, 1) / vol + 1.0 / (du * du)).abs() < 1e-12);
        let nu = g.transverse().len();
        assert!((op.stiffness.get(0, nu) / vol + 1.0 / (ds * ds)).abs() < 1e-12);
    }

    #[test]
    fn schroedinger_equals_form_when_straight() {
        let t = constant_tube(0.0);
        let g = TruncatedGrid::new(1.0, 0.1, t.section(), 0.1).unwrap();
        let a = assemble_form(&t, &g).unwrap();
        let v = EffectivePotential::new(&t).unwrap();
        let b = assemble_schroedinger(&t, &g, &v).unwrap();
        assert_eq!(a.stiffness, b.stiffness);
        assert_eq!(a.mass, b.mass);
    }

    #[test]
    fn potential_of_constant_curvature_at_centerline() {
        let t = constant_tube(0.6);
        let v = EffectivePotential::new(&t).unwrap();
        assert!((v.value(0.3, &[0.0]).unwrap() + 0.09).abs() < 1e-15);
    }

    #[test]
    fn potential_vanishes_when_straight() {
        let t = constant_tube(0.0);
        let v = EffectivePotential::new(&t).unwrap();
        assert_eq!(v.value(1.0, &[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn schroedinger_diagonal_contains_centerline_potential() {
        let k = 0.6;
        let t = constant_tube(k);
        // odd number of transverse cells puts no node at u = 0; use an even one
        let g = TruncatedGrid::new(1.0, 0.1, t.section(), 0.25).unwrap();
        let v = EffectivePotential::new(&t).unwrap();
        let op = assemble_schroedinger(&t, &g, &v).unwrap();
        let tg = g.transverse();
        let j = tg.points.iter().position(|p| p[0].abs() < 1e-14).unwrap();
        let vol = g.cell_volume();
        let idx = g.index(3, j);
        let h = 1.0 - k * 0.0;
        let flux = 2.0 / (g.ds() * g.ds() * h * h) + 2.0 / (tg.spacing[0] * tg.spacing[0]);
        assert!((op.stiffness.get(idx, idx) / vol - (flux - k * k / 4.0)).abs() < 1e-10);
    }

    #[test]
    fn potential_matches_finite_differences_of_h() {
        let gauss = ClosureCurvature::with_derivatives(
            Arc::new(|s: f64| (-s * s).exp()),
            Arc::new(|s: f64| -2.0 * s * (-s * s).exp()),
            Arc::new(|s: f64| (4.0 * s * s - 2.0) * (-s * s).exp()),
        );
        let t = planar(gauss, 0.5, Support::Infinite);
        let v = EffectivePotential::new(&t).unwrap();
        let (s, u) = (0.0, 0.2);
        let h = |s: f64| 1.0 - (-s * s).exp() * u;
        let e = 1e-5;
        let h1 = (h(s + e) - h(s - e)) / (2.0 * e);
        let h11 = (h(s + e) - 2.0 * h(s) + h(s - e)) / (e * e);
        let k: f64 = 1.0;
        let oracle = -k * k / (4.0 * h(s).powi(2)) + h11 / (2.0 * h(s).powi(3)) - 1.25 * h1 * h1 / h(s).powi(4);
        assert!((v.value(s, &[u]).unwrap() - oracle).abs() < 1e-6);
    }

    #[test]
    fn missing_derivatives_are_a_smoothness_error() {
        let t = planar(ClosureCurvature::new(Arc::new(|_| 0.3)), 0.5, Support::Infinite);
        assert!(matches!(EffectivePotential::new(&t), Err(TubeError::Smoothness(_))));
    }

    #[test]
    fn matrix_market_dump() {
        let t = constant_tube(0.2);
        let g = TruncatedGrid::new(0.5, 0.25, t.section(), 0.25).unwrap();
        let op = assemble_form(&t, &g).unwrap();
        let (mut a, mut m) = (Vec::new(), Vec::new());
        op.write_matrix_market(&mut a, &mut m).unwrap();
        let a = String::from_utf8(a).unwrap();
        assert!(a.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
        let m = String::from_utf8(m).unwrap();
        assert_eq!(m.lines().nth(1).unwrap(), format!("{0} {0} {0}", op.dof()));
    }
}
