//! The rotation R(s) ∈ SO(d−1) that turns Frenet normals into a
//! parallel-transported transverse frame, Ṙ = −R·K_T.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TubeError};
use crate::geometry::{frenet_frame, CurvatureProfile, ParametricCurve};
use crate::rotation::{expm, is_rotation, log_near_identity, project_to_rotation, rotation_defect};

const INVARIANT_TOL: f64 = 1e-10;

/// Initial condition of the frame ODE.
#[derive(Debug, Clone)]
pub struct InitialRotation {
    pub s0: f64,
    pub rotation: DMatrix<f64>,
}

impl InitialRotation {
    pub fn identity(d: usize) -> Self {
        Self { s0: 0.0, rotation: DMatrix::identity(d - 1, d - 1) }
    }
}

/// R(s) sampled on a uniform grid that contains s₀.
#[derive(Debug, Clone)]
pub struct TangFrameTable {
    dim: usize,
    s_start: f64,
    step: f64,
    nodes: Vec<DMatrix<f64>>,
    initial: InitialRotation,
}

/// Transverse (d−1)×(d−1) block of the Serret–Frenet matrix.
fn transverse_block(profile: &CurvatureProfile, s: f64) -> DMatrix<f64> {
    let n = profile.dim() - 1;
    let mut k = DMatrix::zeros(n, n);
    for i in 1..n {
        let v = profile.kappa(i + 1, s);
        k[(i - 1, i)] = v;
        k[(i, i - 1)] = -v;
    }
    k
}

/// Step default: min(0.01, 0.1 / max(1, ‖κ‖∞·(d−2))).
pub fn default_step(profile: &CurvatureProfile) -> f64 {
    let d = profile.dim();
    let kmax = profile.sup_norms().iter().cloned().fold(0.0, f64::max);
    (0.1 / (kmax * (d as f64 - 2.0)).max(1.0)).min(0.01)
}

fn rk4_step(profile: &CurvatureProfile, s: f64, r: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let f = |s: f64, r: &DMatrix<f64>| -(r * transverse_block(profile, s));
    let k1 = f(s, r);
    let k2 = f(s + 0.5 * h, &(r + &k1 * (0.5 * h)));
    let k3 = f(s + 0.5 * h, &(r + &k2 * (0.5 * h)));
    let k4 = f(s + h, &(r + &k3 * h));
    r + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrate the frame ODE over `s_range` (widened to whole steps around s₀)
/// with RK4 and polar re-projection after every step.
pub fn solve_frame_ode(
    profile: &CurvatureProfile,
    s_range: (f64, f64),
    step: f64,
    initial: &InitialRotation,
) -> Result<TangFrameTable> {
    let d = profile.dim();
    let n = d - 1;
    let r0 = &initial.rotation;
    if r0.nrows() != n || r0.ncols() != n {
        return Err(TubeError::Arity { expected: n, got: r0.nrows() });
    }
    if !is_rotation(r0, 1e-12) {
        let (det, orth) = rotation_defect(r0);
        return Err(TubeError::Precondition(format!(
            "initial matrix is not a rotation (|det − 1| = {det:e}, ‖RRᵀ − I‖ = {orth:e})"
        )));
    }
    if !(step > 0.0) || !(s_range.1 > s_range.0) {
        return Err(TubeError::Precondition("frame table needs a positive step and a non-empty range".into()));
    }
    let (lo, hi) = (s_range.0.min(initial.s0), s_range.1.max(initial.s0));
    let back = ((initial.s0 - lo) / step - 1e-9).ceil().max(0.0) as usize;
    let fwd = ((hi - initial.s0) / step - 1e-9).ceil().max(0.0) as usize;
    let s_start = initial.s0 - back as f64 * step;

    if d == 2 {
        return Ok(TangFrameTable {
            dim: d,
            s_start,
            step,
            nodes: vec![DMatrix::identity(1, 1); back + fwd + 1],
            initial: initial.clone(),
        });
    }

    let mut nodes = vec![DMatrix::zeros(n, n); back + fwd + 1];
    nodes[back] = r0.clone();
    let advance = |s: f64, r: &DMatrix<f64>, h: f64| -> Result<DMatrix<f64>> {
        let next = project_to_rotation(&rk4_step(profile, s, r, h));
        let (det, orth) = rotation_defect(&next);
        let drift = det.max(orth);
        if !(drift <= INVARIANT_TOL) {
            return Err(TubeError::IntegratorFailure { s: s + h, drift });
        }
        Ok(next)
    };
    for k in 0..fwd {
        let s = initial.s0 + k as f64 * step;
        nodes[back + k + 1] = advance(s, &nodes[back + k], step)?;
    }
    for k in 0..back {
        let s = initial.s0 - k as f64 * step;
        nodes[back - k - 1] = advance(s, &nodes[back - k], -step)?;
    }
    Ok(TangFrameTable { dim: d, s_start, step, nodes, initial: initial.clone() })
}

impl TangFrameTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn initial(&self) -> &InitialRotation {
        &self.initial
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.s_start, self.node_s(self.nodes.len() - 1))
    }

    pub fn node_s(&self, k: usize) -> f64 {
        self.s_start + k as f64 * self.step
    }

    pub fn node(&self, k: usize) -> &DMatrix<f64> {
        &self.nodes[k]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, &DMatrix<f64>)> {
        self.nodes.iter().enumerate().map(|(k, r)| (self.node_s(k), r))
    }

    /// R(s) by geodesic interpolation between the neighbouring nodes.
    ///
    /// In d = 2 the answer is the 1×1 identity for every s.
    pub fn rotation_at(&self, s: f64) -> Result<DMatrix<f64>> {
        if self.dim == 2 {
            return Ok(DMatrix::identity(1, 1));
        }
        let (lo, hi) = self.range();
        let slack = 1e-9 * self.step;
        if !(s >= lo - slack && s <= hi + slack) {
            return Err(TubeError::OutOfRange { s, lo, hi });
        }
        let x = ((s - lo) / self.step).clamp(0.0, (self.nodes.len() - 1) as f64);
        let k = (x.floor() as usize).min(self.nodes.len().saturating_sub(2));
        let t = x - k as f64;
        if t == 0.0 || self.nodes.len() == 1 {
            return Ok(self.nodes[k].clone());
        }
        if t == 1.0 {
            return Ok(self.nodes[k + 1].clone());
        }
        let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
        let delta = a.transpose() * b;
        let log = log_near_identity(&delta);
        Ok(project_to_rotation(&(a * expm(&(log * t)))))
    }

    /// The column (R_{μ2})_μ entering h; a unit vector.
    pub fn first_transverse_column(&self, s: f64) -> Result<DVector<f64>> {
        Ok(self.rotation_at(s)?.column(0).into_owned())
    }

    /// CSV dump: `s,R11,R21,...` (column-major), 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let n = self.dim - 1;
        let mut header = vec!["s".to_string()];
        for c in 0..n {
            for r in 0..n {
                header.push(format!("R{}{}", r + 1, c + 1));
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for (s, r) in self.nodes() {
            let mut row = vec![format!("{s:.16e}")];
            row.extend(r.iter().map(|v| format!("{v:.16e}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// An embedded unit-speed curve with its Frenet frame.
pub trait FrameField {
    fn dim(&self) -> usize;
    fn position(&self, s: f64) -> DVector<f64>;
    /// Frenet frame, row i holding e_{i+1}.
    fn frenet(&self, s: f64) -> Result<DMatrix<f64>>;
}

impl FrameField for ParametricCurve {
    fn dim(&self) -> usize {
        ParametricCurve::dim(self)
    }
    fn position(&self, s: f64) -> DVector<f64> {
        ParametricCurve::position(self, s)
    }
    fn frenet(&self, s: f64) -> Result<DMatrix<f64>> {
        Ok(frenet_frame(self, s)?.frame)
    }
}

/// Tang frame ẽᵢ = R_{ij} e_j at `s` (R extended by 1 in the tangent slot).
pub fn tang_vectors(table: &TangFrameTable, frenet: &dyn FrameField, s: f64) -> Result<Vec<DVector<f64>>> {
    let d = table.dim();
    if frenet.dim() != d {
        return Err(TubeError::Arity { expected: d, got: frenet.dim() });
    }
    let e = frenet.frenet(s)?;
    let r = table.rotation_at(s)?;
    let mut out = vec![e.row(0).transpose()];
    for mu in 0..d - 1 {
        let mut v = DVector::zeros(d);
        for nu in 0..d - 1 {
            v += e.row(nu + 1).transpose() * r[(mu, nu)];
        }
        out.push(v);
    }
    Ok(out)
}

/// A curve rebuilt from its curvatures: Ė = K·E, Γ̇ = e₁, with Γ(s₀) = 0 and E(s₀) = I.
#[derive(Debug, Clone)]
pub struct IntegratedCurve {
    profile: CurvatureProfile,
    s_start: f64,
    step: f64,
    frames: Vec<DMatrix<f64>>,
    points: Vec<DVector<f64>>,
}

type State = (DMatrix<f64>, DVector<f64>);

fn curve_rhs(profile: &CurvatureProfile, s: f64, state: &State) -> State {
    let k = profile.frenet_matrix(s, 0).expect("curvature values");
    let de = &k * &state.0;
    let dg = state.0.row(0).transpose();
    (de, dg)
}

fn curve_step(profile: &CurvatureProfile, s: f64, state: &State, h: f64) -> State {
    let add = |a: &State, b: &State, c: f64| (&a.0 + &b.0 * c, &a.1 + &b.1 * c);
    let k1 = curve_rhs(profile, s, state);
    let k2 = curve_rhs(profile, s + 0.5 * h, &add(state, &k1, 0.5 * h));
    let k3 = curve_rhs(profile, s + 0.5 * h, &add(state, &k2, 0.5 * h));
    let k4 = curve_rhs(profile, s + h, &add(state, &k3, h));
    let frame = &state.0 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0);
    let point = &state.1 + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0);
    (project_to_rotation(&frame), point)
}

impl IntegratedCurve {
    pub fn new(profile: &CurvatureProfile, s_range: (f64, f64), s0: f64, step: f64) -> Result<Self> {
        let d = profile.dim();
        let (lo, hi) = (s_range.0.min(s0), s_range.1.max(s0));
        let back = ((s0 - lo) / step - 1e-9).ceil().max(0.0) as usize;
        let fwd = ((hi - s0) / step - 1e-9).ceil().max(0.0) as usize;
        let mut states: Vec<State> = vec![(DMatrix::identity(d, d), DVector::zeros(d)); back + fwd + 1];
        for k in 0..fwd {
            let s = s0 + k as f64 * step;
            states[back + k + 1] = curve_step(profile, s, &states[back + k], step);
        }
        for k in 0..back {
            let s = s0 - k as f64 * step;
            states[back - k - 1] = curve_step(profile, s, &states[back - k], -step);
        }
        let (frames, points) = states.into_iter().unzip();
        Ok(Self { profile: profile.clone(), s_start: s0 - back as f64 * step, step, frames, points })
    }

    fn state_at(&self, s: f64) -> State {
        let x = ((s - self.s_start) / self.step).clamp(0.0, (self.frames.len() - 1) as f64);
        let k = x.round() as usize;
        let sk = self.s_start + k as f64 * self.step;
        let base = (self.frames[k].clone(), self.points[k].clone());
        if s == sk {
            base
        } else {
            curve_step(&self.profile, sk, &base, s - sk)
        }
    }
}

impl FrameField for IntegratedCurve {
    fn dim(&self) -> usize {
        self.profile.dim()
    }
    fn position(&self, s: f64) -> DVector<f64> {
        self.state_at(s).1
    }
    fn frenet(&self, s: f64) -> Result<DMatrix<f64>> {
        Ok(self.state_at(s).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{arc_length_reparametrize, profile_from_closures, ClosureCurvature, CurvatureFunction, Support};
    use crate::rotation::planar;
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    fn constant_profile(values: &[f64]) -> CurvatureProfile {
        let ks: Vec<Arc<dyn CurvatureFunction>> = values
            .iter()
            .map(|&v| Arc::new(ClosureCurvature::new(Arc::new(move |_| v))) as Arc<dyn CurvatureFunction>)
            .collect();
        profile_from_closures(values.len() + 1, ks, Support::Infinite).unwrap()
    }

    #[test]
    fn planar_case_is_trivial() {
        let p = constant_profile(&[0.7]);
        let t = solve_frame_ode(&p, (-1.0, 1.0), 0.1, &InitialRotation::identity(2)).unwrap();
        assert_eq!(t.rotation_at(0.33).unwrap(), DMatrix::identity(1, 1));
        assert_eq!(t.rotation_at(1e6).unwrap(), DMatrix::identity(1, 1));
    }

    #[test]
    fn constant_torsion_gives_planar_rotation() {
        let tau = 0.4;
        let p = constant_profile(&[0.4, tau]);
        let t = solve_frame_ode(&p, (0.0, 10.0), 0.01, &InitialRotation::identity(3)).unwrap();
        for k in [0, 17, 500, t.len() - 1] {
            let s = t.node_s(k);
            assert!((t.node(k) - planar(tau * s)).amax() < 1e-11);
        }
        let s = 3.455;
        assert!((t.rotation_at(s).unwrap() - planar(tau * s)).amax() < 1e-9);
        assert_eq!(&t.rotation_at(t.node_s(42)).unwrap(), t.node(42));
    }

    #[test]
    fn zero_torsion_keeps_initial_rotation() {
        let p = constant_profile(&[0.3, 0.0]);
        let init = InitialRotation { s0: 0.0, rotation: planar(0.8) };
        let t = solve_frame_ode(&p, (-2.0, 2.0), 0.05, &init).unwrap();
        for (_, r) in t.nodes() {
            assert!((r - planar(0.8)).amax() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_rotation_initial_value() {
        let p = constant_profile(&[0.3, 0.1]);
        let init = InitialRotation { s0: 0.0, rotation: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]) };
        assert!(matches!(solve_frame_ode(&p, (0.0, 1.0), 0.1, &init), Err(TubeError::Precondition(_))));
    }

    #[test]
    fn out_of_range_queries_fail() {
        let p = constant_profile(&[0.3, 0.1]);
        let t = solve_frame_ode(&p, (0.0, 1.0), 0.1, &InitialRotation::identity(3)).unwrap();
        assert!(matches!(t.rotation_at(1.5), Err(TubeError::OutOfRange { .. })));
    }

    #[test]
    fn default_step_rule() {
        assert_eq!(default_step(&constant_profile(&[5.0])), 0.01);
        let p = constant_profile(&[0.1, 20.0, 0.0]);
        assert!((default_step(&p) - 0.1 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_turn_swaps_transverse_pair() {
        // θ(s) = τ s reaches π/2 at s = π/(2τ) on a unit-pitch helix (τ = 1/2).
        let h = ParametricCurve::helix(1.0, 1.0, (-1.0, 6.0)).unwrap();
        let u = arc_length_reparametrize(&h, 1e-13).unwrap();
        let p = constant_profile(&[0.5, 0.5]);
        let t = solve_frame_ode(&p, (0.0, 4.0), 0.001, &InitialRotation::identity(3)).unwrap();
        let s = FRAC_PI_2 / 0.5;
        let e = frenet_frame(&u, s).unwrap();
        let tv = tang_vectors(&t, &u, s).unwrap();
        assert!((&tv[0] - e.e(0)).amax() < 1e-12);
        assert!((&tv[1] + e.e(2)).amax() < 1e-8);
        assert!((&tv[2] - e.e(1)).amax() < 1e-8);
    }

    #[test]
    fn straight_line_tang_frame_is_frenet() {
        let line = ParametricCurve::line(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], (-5.0, 5.0)).unwrap();
        let p = constant_profile(&[0.0, 0.0]);
        let t = solve_frame_ode(&p, (-5.0, 5.0), 0.1, &InitialRotation::identity(3)).unwrap();
        let e = frenet_frame(&line, 1.3).unwrap();
        let tv = tang_vectors(&t, &line, 1.3).unwrap();
        for i in 0..3 {
            assert!((&tv[i] - e.e(i)).amax() < 1e-15);
        }
    }

    #[test]
    fn planar_circle_normal_is_kept() {
        let c = ParametricCurve::circle(2, 1.0, (0.0, 2.0 * PI)).unwrap();
        let p = constant_profile(&[1.0]);
        let t = solve_frame_ode(&p, (0.0, 6.0), 0.1, &InitialRotation::identity(2)).unwrap();
        for s in [0.0, 1.0, 4.0] {
            let tv = tang_vectors(&t, &c, s).unwrap();
            assert!((&tv[1] - frenet_frame(&c, s).unwrap().e(1)).amax() < 1e-14);
        }
    }

    #[test]
    fn integrated_helix_matches_curvatures() {
        let p = constant_profile(&[0.5, 0.5]);
        let c = IntegratedCurve::new(&p, (-3.0, 3.0), 0.0, 0.01).unwrap();
        // unit-speed helix: |Γ(s) − Γ(0)| for a = b = 1 is √(2 − 2cos(s/√2) + s²/2)
        for s in [-2.5, 1.0, 2.9] {
            let t = s / 2f64.sqrt();
            let chord = (2.0 - 2.0 * t.cos() + t * t).sqrt();
            assert!((c.position(s).norm() - chord).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_dump_has_one_row_per_node() {
        let p = constant_profile(&[0.3, 0.2]);
        let t = solve_frame_ode(&p, (0.0, 0.5), 0.1, &InitialRotation::identity(3)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "s,R11,R21,R12,R22");
        assert_eq!(lines.len(), t.len() + 1);
        let first: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(first, t.node(1)[(1, 0)]);
    }
}
