//! Reference curves, Frenet frames and curvature profiles.
//!
//! A [`CurvatureProfile`] is the geometric input to everything downstream.
//! It can come from an embedded [`ParametricCurve`] (via [`curvatures`]) or
//! be given directly as functions of arc length ([`profile_from_closures`]),
//! in which case the tube is treated as an abstract Riemannian manifold.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Result, TubeError};
use crate::quad::{central_difference, fd_step, golden_max, GaussLegendre, LocalQuintic};
use crate::rotation::generalized_cross;

pub type VectorFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A curve t ↦ Γ(t) in ℝᵈ with optional analytic derivatives.
///
/// Missing derivatives fall back to fourth-order centered differences, so
/// the position map must be evaluable slightly outside the interval.
#[derive(Clone)]
pub struct ParametricCurve {
    dim: usize,
    position: VectorFn,
    derivatives: Vec<Option<VectorFn>>,
    interval: (f64, f64),
}

impl fmt::Debug for ParametricCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricCurve")
            .field("dim", &self.dim)
            .field("interval", &self.interval)
            .field(
                "analytic_derivatives",
                &self.derivatives.iter().filter(|d| d.is_some()).count(),
            )
            .finish()
    }
}

impl ParametricCurve {
    pub fn new(dim: usize, interval: (f64, f64), position: VectorFn) -> Result<Self> {
        if dim < 2 {
            return Err(TubeError::Precondition(format!("curve dimension {dim} < 2")));
        }
        if !(interval.1 > interval.0) {
            return Err(TubeError::Precondition(format!(
                "empty parameter interval [{}, {}]",
                interval.0, interval.1
            )));
        }
        Ok(Self {
            dim,
            position,
            derivatives: vec![None; dim + 1],
            interval,
        })
    }

    /// Attach an analytic derivative of the given order (1-based).
    pub fn with_derivative(mut self, order: usize, f: VectorFn) -> Self {
        assert!(order >= 1 && order <= self.dim + 1);
        self.derivatives[order - 1] = Some(f);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn position(&self, t: f64) -> DVector<f64> {
        (self.position)(t)
    }

    pub fn has_analytic_derivative(&self, order: usize) -> bool {
        order >= 1 && self.derivatives.get(order - 1).is_some_and(|d| d.is_some())
    }

    /// Derivative of the given order at `t`.
    pub fn derivative(&self, order: usize, t: f64) -> DVector<f64> {
        if order == 0 {
            return self.position(t);
        }
        if let Some(Some(f)) = self.derivatives.get(order - 1) {
            return f(t);
        }
        // Differentiate the highest available analytic derivative below `order`.
        let (base, base_fn): (usize, VectorFn) = (1..order)
            .rev()
            .find_map(|m| self.derivatives[m - 1].clone().map(|f| (m, f)))
            .unwrap_or((0, self.position.clone()));
        let remaining = order - base;
        let h = fd_step(t);
        let mut out = DVector::zeros(self.dim);
        for i in 0..self.dim {
            out[i] = central_difference(|x| base_fn(x)[i], t, h, remaining);
        }
        out
    }

    /// Largest discrepancy between analytic derivatives and finite differences of the position.
    pub fn derivative_mismatch(&self, samples: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for order in 1..=self.dim.min(4) {
            let Some(Some(f)) = self.derivatives.get(order - 1) else {
                continue;
            };
            for &t in samples {
                let h = fd_step(t);
                let exact = f(t);
                for i in 0..self.dim {
                    let fd = central_difference(|x| self.position(x)[i], t, h, order);
                    worst = worst.max((fd - exact[i]).abs() / exact[i].abs().max(1.0));
                }
            }
        }
        worst
    }

    /// Straight line through `origin` along the unit vector `direction`.
    pub fn line(origin: &[f64], direction: &[f64], interval: (f64, f64)) -> Result<Self> {
        let dim = origin.len();
        if direction.len() != dim {
            return Err(TubeError::Arity { expected: dim, got: direction.len() });
        }
        let o = DVector::from_column_slice(origin);
        let mut v = DVector::from_column_slice(direction);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(TubeError::DegenerateCurve { t: interval.0, speed: 0.0 });
        }
        v /= norm;
        let (o2, v2, v3) = (o.clone(), v.clone(), v.clone());
        let zero = DVector::<f64>::zeros(dim);
        let mut c = Self::new(dim, interval, Arc::new(move |t| &o2 + &v2 * t))?
            .with_derivative(1, Arc::new(move |_| v3.clone()));
        for k in 2..=dim + 1 {
            let z = zero.clone();
            c = c.with_derivative(k, Arc::new(move |_| z.clone()));
        }
        Ok(c)
    }

    /// Circle of the given radius in the (x₁, x₂)-plane of ℝᵈ, parametrized by angle,
    /// counter-clockwise.
    pub fn circle(dim: usize, radius: f64, interval: (f64, f64)) -> Result<Self> {
        let r = radius;
        let mut c = Self::new(
            dim,
            interval,
            Arc::new(move |t| planar_vec(dim, r * t.cos(), r * t.sin())),
        )?;
        for k in 1..=dim + 1 {
            // d^k/dt^k (cos t, sin t) = (cos(t + kπ/2), sin(t + kπ/2))
            let phase = k as f64 * std::f64::consts::FRAC_PI_2;
            c = c.with_derivative(
                k,
                Arc::new(move |t| planar_vec(dim, r * (t + phase).cos(), r * (t + phase).sin())),
            );
        }
        Ok(c)
    }

    /// Helix (a cos t, a sin t, b t) in ℝ³.
    pub fn helix(a: f64, b: f64, interval: (f64, f64)) -> Result<Self> {
        let mut c = Self::new(
            3,
            interval,
            Arc::new(move |t| DVector::from_vec(vec![a * t.cos(), a * t.sin(), b * t])),
        )?;
        for k in 1..=4 {
            let phase = k as f64 * std::f64::consts::FRAC_PI_2;
            let lin = if k == 1 { b } else { 0.0 };
            c = c.with_derivative(
                k,
                Arc::new(move |t| {
                    DVector::from_vec(vec![a * (t + phase).cos(), a * (t + phase).sin(), lin])
                }),
            );
        }
        Ok(c)
    }

    /// Planar parabola (t, t²) embedded in ℝᵈ.
    pub fn parabola(dim: usize, interval: (f64, f64)) -> Result<Self> {
        Ok(Self::new(dim, interval, Arc::new(move |t| planar_vec(dim, t, t * t)))?
            .with_derivative(1, Arc::new(move |t| planar_vec(dim, 1.0, 2.0 * t)))
            .with_derivative(2, Arc::new(move |_| planar_vec(dim, 0.0, 2.0)))
            .with_derivative(3, Arc::new(move |_| planar_vec(dim, 0.0, 0.0))))
    }

    /// Unit-speed U-bend in the plane: straight leg along −x₂ ending at the
    /// origin... a half circle of `radius` and a straight leg back along +x₂.
    /// Parametrized by arc length on [−leg, π·radius + leg].
    pub fn u_bend(dim: usize, radius: f64, leg: f64) -> Result<Self> {
        let r = radius;
        let arc = std::f64::consts::PI * r;
        let pos = move |s: f64| {
            if s < 0.0 {
                planar_vec(dim, 0.0, s)
            } else if s <= arc {
                let phi = s / r;
                // center at (−r, 0); start at the origin heading +x₂
                planar_vec(dim, -r + r * phi.cos(), r * phi.sin())
            } else {
                planar_vec(dim, -2.0 * r, -(s - arc))
            }
        };
        let tangent = move |s: f64| {
            if s < 0.0 {
                planar_vec(dim, 0.0, 1.0)
            } else if s <= arc {
                let phi = s / r;
                planar_vec(dim, -phi.sin(), phi.cos())
            } else {
                planar_vec(dim, 0.0, -1.0)
            }
        };
        Ok(Self::new(dim, (-leg, arc + leg), Arc::new(pos))?
            .with_derivative(1, Arc::new(tangent)))
    }
}

fn planar_vec(dim: usize, x: f64, y: f64) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    v[0] = x;
    v[1] = y;
    v
}

/// Arc-length table of a curve: panel breakpoints and cumulative lengths.
struct ArcLengthTable {
    curve: ParametricCurve,
    ts: Vec<f64>,
    cumulative: Vec<f64>,
    rule: GaussLegendre,
}

impl ArcLengthTable {
    fn speed(&self, t: f64) -> f64 {
        self.curve.derivative(1, t).norm()
    }

    fn length_between(&self, a: f64, b: f64) -> f64 {
        self.rule.integrate(a, b, |t| self.speed(t))
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Parameter t with arc length s from the start; Newton with a bisection safeguard.
    fn parameter_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total());
        let k = self.cumulative.partition_point(|&c| c <= s).clamp(1, self.ts.len() - 1) - 1;
        let (mut lo, mut hi) = (self.ts[k], self.ts[k + 1]);
        let (s_lo, s_hi) = (self.cumulative[k], self.cumulative[k + 1]);
        let target = s - s_lo;
        let mut t = lo + (hi - lo) * target / (s_hi - s_lo).max(f64::MIN_POSITIVE);
        for _ in 0..60 {
            let f = self.length_between(self.ts[k], t) - target;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let step = f / self.speed(t);
            let mut next = t - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * t.abs().max(1.0) {
                return next;
            }
            t = next;
        }
        t
    }
}

/// Reparametrize a regular curve by arc length (s ∈ [0, length]).
///
/// Arc length comes from adaptive Gauss–Legendre quadrature of |Γ′|; the
/// inverse map is solved per evaluation, so the returned curve has an
/// exactly unit tangent and smooth higher derivatives.
pub fn arc_length_reparametrize(curve: &ParametricCurve, tolerance: f64) -> Result<ParametricCurve> {
    let (t0, t1) = curve.interval();
    let probe = 1024;
    let mut max_speed: f64 = 0.0;
    let mut min_speed = (f64::INFINITY, t0);
    for i in 0..=probe {
        let t = t0 + (t1 - t0) * i as f64 / probe as f64;
        let v = curve.derivative(1, t).norm();
        if !v.is_finite() {
            return Err(TubeError::Evaluation(format!("|Γ'({t})| is not finite")));
        }
        max_speed = max_speed.max(v);
        if v < min_speed.0 {
            min_speed = (v, t);
        }
    }
    if min_speed.0 <= 1e-10 * max_speed.max(1e-300) {
        return Err(TubeError::DegenerateCurve { t: min_speed.1, speed: min_speed.0 });
    }

    let coarse = GaussLegendre::new(10);
    let fine = GaussLegendre::new(20);
    let speed = |t: f64| curve.derivative(1, t).norm();
    let mut ts = vec![t0];
    let mut cumulative = vec![0.0];
    let mut stack = vec![(t0, t1, 0usize)];
    // depth-first, left to right
    let mut pending: Vec<(f64, f64, usize)> = Vec::new();
    while let Some((a, b, depth)) = stack.pop() {
        let c = coarse.integrate(a, b, speed);
        let f = fine.integrate(a, b, speed);
        if (c - f).abs() <= tolerance * (b - a) / (t1 - t0) * 0.1 || (depth >= 4 && (c - f).abs() <= 1e-14 * f) {
            pending.push((a, b, 0));
            let last = *cumulative.last().unwrap();
            ts.push(b);
            cumulative.push(last + f);
            continue;
        }
        if depth > 40 {
            return Err(TubeError::ToleranceNotMet(format!(
                "arc-length quadrature did not converge on [{a}, {b}]"
            )));
        }
        let m = 0.5 * (a + b);
        stack.push((m, b, depth + 1));
        stack.push((a, m, depth + 1));
    }
    // Keep panels small enough for the per-panel Newton solve.
    let table = ArcLengthTable {
        curve: curve.clone(),
        ts,
        cumulative,
        rule: fine,
    };
    let table = Arc::new(table);
    let total = table.total();

    let t_pos = table.clone();
    let position: VectorFn = Arc::new(move |s| {
        let t = t_pos.parameter_at(s);
        t_pos.curve.position(t)
    });
    let t_tan = table.clone();
    let tangent: VectorFn = Arc::new(move |s| {
        let t = t_tan.parameter_at(s);
        let v = t_tan.curve.derivative(1, t);
        let n = v.norm();
        v / n
    });
    let dim = curve.dim();
    let mut out = ParametricCurve::new(dim, (0.0, total), position)?.with_derivative(1, tangent.clone());
    // Higher derivatives: difference the unit tangent.
    for order in 2..=dim.min(4) {
        let tan = tangent.clone();
        out = out.with_derivative(
            order,
            Arc::new(move |s| {
                let h = fd_step(s);
                let mut v = DVector::zeros(dim);
                for i in 0..dim {
                    v[i] = central_difference(|x| tan(x)[i], s, h, order - 1);
                }
                v
            }),
        );
    }
    Ok(out)
}

/// Orthonormal, positively oriented frame at one arc-length sample.
#[derive(Debug, Clone)]
pub struct FrenetFrameSample {
    pub s: f64,
    /// Row i holds e_{i+1}.
    pub frame: DMatrix<f64>,
    /// Determinant of the frame matrix (+1 up to rounding).
    pub orientation: f64,
}

impl FrenetFrameSample {
    pub fn e(&self, i: usize) -> DVector<f64> {
        self.frame.row(i).transpose()
    }
}

/// Frenet frame of a unit-speed curve at `s` (Gram–Schmidt of Γ̇, …, Γ^{(d−1)},
/// completed by the generalized cross product).
///
/// A curve whose higher derivatives all vanish (a straight piece) gets a
/// constant completion from the standard basis.
pub fn frenet_frame(curve: &ParametricCurve, s: f64) -> Result<FrenetFrameSample> {
    let d = curve.dim();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
    let derivs: Vec<DVector<f64>> = (1..d).map(|m| curve.derivative(m, s)).collect();
    let zero_tol = 1e-6;
    for (idx, v) in derivs.iter().enumerate() {
        let order = idx + 1;
        let scale = v.norm();
        if order >= 2 && derivs[idx..].iter().all(|w| w.norm() <= zero_tol) {
            complete_with_standard_basis(&mut basis, d - 1);
            break;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w -= b * c;
            }
        }
        let r = w.norm();
        if scale == 0.0 || r <= 1e-8 * scale {
            return Err(TubeError::FrameDegeneracy { s, order });
        }
        basis.push(w / r);
    }
    let last = generalized_cross(&basis);
    basis.push(last);
    let frame = DMatrix::from_fn(d, d, |r, c| basis[r][c]);
    let orientation = frame.determinant();
    Ok(FrenetFrameSample { s, frame, orientation })
}

fn complete_with_standard_basis(basis: &mut Vec<DVector<f64>>, target: usize) {
    let d = basis.first().map(|b| b.len()).unwrap_or(target + 1);
    while basis.len() < target {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for k in 0..d {
            let mut w = DVector::zeros(d);
            w[k] = 1.0;
            for _ in 0..2 {
                for b in basis.iter() {
                    let c = b.dot(&w);
                    w -= b * c;
                }
            }
            let n = w.norm();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn + 1e-12) {
                best = Some((n, w / n));
            }
        }
        basis.push(best.expect("non-empty dimension").1);
    }
}

/// Where a curvature profile is supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Support {
    Infinite,
    Finite { lo: f64, hi: f64 },
}

impl Support {
    pub fn contains(&self, s: f64) -> bool {
        match *self {
            Support::Infinite => true,
            Support::Finite { lo, hi } => s >= lo && s <= hi,
        }
    }

    /// Largest |s| at which the profile may be nonzero, if finite.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            Support::Infinite => None,
            Support::Finite { lo, hi } => Some(lo.abs().max(hi.abs())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Smoothness {
    C0,
    C1,
    C2,
}

/// One curvature function κᵢ(s) with optional analytic derivatives.
pub trait CurvatureFunction: Send + Sync {
    fn value(&self, s: f64) -> f64;
    /// `order` ∈ {1, 2}; `None` when unavailable.
    fn derivative(&self, s: f64, order: usize) -> Option<f64>;
    fn max_derivative_order(&self) -> usize;
}

/// Curvature given by closures.
#[derive(Clone)]
pub struct ClosureCurvature {
    f: ScalarFn,
    df: Option<ScalarFn>,
    d2f: Option<ScalarFn>,
}

impl ClosureCurvature {
    pub fn new(f: ScalarFn) -> Self {
        Self { f, df: None, d2f: None }
    }

    pub fn with_derivatives(f: ScalarFn, df: ScalarFn, d2f: ScalarFn) -> Self {
        Self { f, df: Some(df), d2f: Some(d2f) }
    }
}

impl CurvatureFunction for ClosureCurvature {
    fn value(&self, s: f64) -> f64 {
        (self.f)(s)
    }
    fn derivative(&self, s: f64, order: usize) -> Option<f64> {
        match order {
            1 => self.df.as_ref().map(|f| f(s)),
            2 => self.d2f.as_ref().map(|f| f(s)),
            _ => None,
        }
    }
    fn max_derivative_order(&self) -> usize {
        match (&self.df, &self.d2f) {
            (Some(_), Some(_)) => 2,
            (Some(_), None) => 1,
            _ => 0,
        }
    }
}

/// Tabulated curvature with local quintic interpolation; zero outside the table.
#[derive(Debug, Clone)]
pub struct TabulatedCurvature {
    table: LocalQuintic,
}

impl TabulatedCurvature {
    pub fn new(s: Vec<f64>, kappa: Vec<f64>) -> Result<Self> {
        if s.len() != kappa.len() || s.len() < 2 {
            return Err(TubeError::Precondition("tabulated curvature needs ≥ 2 matching samples".into()));
        }
        if !s.windows(2).all(|w| w[1] > w[0]) {
            return Err(TubeError::Precondition("tabulated s-values must increase strictly".into()));
        }
        if let Some(bad) = kappa.iter().find(|k| !k.is_finite()) {
            return Err(TubeError::Evaluation(format!("tabulated curvature value {bad} is not finite")));
        }
        Ok(Self { table: LocalQuintic::new(s, kappa) })
    }

    pub fn range(&self) -> (f64, f64) {
        self.table.range()
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (self.table.xs(), self.table.ys())
    }
}

impl CurvatureFunction for TabulatedCurvature {
    fn value(&self, s: f64) -> f64 {
        let (lo, hi) = self.range();
        if s < lo || s > hi {
            return 0.0;
        }
        self.table.eval(s, 0)[0]
    }
    fn derivative(&self, s: f64, order: usize) -> Option<f64> {
        let (lo, hi) = self.range();
        if order > 2 {
            return None;
        }
        if s < lo || s > hi {
            return Some(0.0);
        }
        Some(self.table.eval(s, order)[order])
    }
    fn max_derivative_order(&self) -> usize {
        2
    }
}

/// The curvatures κ₁, …, κ_{d−1} as functions of arc length.
#[derive(Clone)]
pub struct CurvatureProfile {
    dim: usize,
    kappas: Vec<Arc<dyn CurvatureFunction>>,
    support: Support,
    sup_norms: Vec<f64>,
    smoothness: Smoothness,
    tabulated: bool,
}

impl fmt::Debug for CurvatureProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurvatureProfile")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("sup_norms", &self.sup_norms)
            .field("smoothness", &self.smoothness)
            .field("tabulated", &self.tabulated)
            .finish()
    }
}

impl CurvatureProfile {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Derivatives come from interpolated samples rather than closed forms.
    pub fn is_tabulated(&self) -> bool {
        self.tabulated
    }

    /// Estimate of ‖κ₁‖∞.
    pub fn kappa1_sup(&self) -> f64 {
        self.sup_norms[0]
    }

    /// Estimates of ‖κᵢ‖∞ for all i.
    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }

    /// κᵢ(s), 1-based `i`.
    pub fn kappa(&self, i: usize, s: f64) -> f64 {
        if !self.support.contains(s) {
            return 0.0;
        }
        self.kappas[i - 1].value(s)
    }

    /// d^order κᵢ / ds^order, 1-based `i`.
    pub fn kappa_derivative(&self, i: usize, s: f64, order: usize) -> Option<f64> {
        if order == 0 {
            return Some(self.kappa(i, s));
        }
        if !self.support.contains(s) {
            return Some(0.0);
        }
        self.kappas[i - 1].derivative(s, order)
    }

    pub fn is_straight(&self) -> bool {
        self.sup_norms.iter().all(|&k| k == 0.0)
    }

    /// The skew-symmetric d×d Serret–Frenet matrix at `s` (or its derivative).
    pub fn frenet_matrix(&self, s: f64, order: usize) -> Option<DMatrix<f64>> {
        let d = self.dim;
        let mut k = DMatrix::zeros(d, d);
        for i in 1..d {
            let v = self.kappa_derivative(i, s, order)?;
            k[(i - 1, i)] = v;
            k[(i, i - 1)] = -v;
        }
        Some(k)
    }
}

/// Build a profile from curvature functions of arc length.
///
/// The sup-norm is taken from dense sampling of the declared support
/// (±100 for infinite support) refined by golden-section search around the
/// sampled maximum.
pub fn profile_from_closures(
    d: usize,
    evaluators: Vec<Arc<dyn CurvatureFunction>>,
    support: Support,
) -> Result<CurvatureProfile> {
    if d < 2 {
        return Err(TubeError::Precondition(format!("dimension {d} < 2")));
    }
    if evaluators.len() != d - 1 {
        return Err(TubeError::Arity { expected: d - 1, got: evaluators.len() });
    }
    let (lo, hi) = match support {
        Support::Infinite => (-100.0, 100.0),
        Support::Finite { lo, hi } => {
            if !(hi >= lo) {
                return Err(TubeError::Precondition(format!("empty support [{lo}, {hi}]")));
            }
            (lo, hi)
        }
    };
    let samples = 40_000usize;
    let step = (hi - lo) / samples as f64;
    let mut sup_norms = Vec::with_capacity(d - 1);
    for (idx, k) in evaluators.iter().enumerate() {
        let mut best = (0.0f64, lo);
        for j in 0..=samples {
            let s = lo + step * j as f64;
            let v = k.value(s);
            if !v.is_finite() {
                return Err(TubeError::Evaluation(format!("κ{}({s}) = {v}", idx + 1)));
            }
            if v.abs() > best.0 {
                best = (v.abs(), s);
            }
        }
        let mut sup = best.0;
        if step > 0.0 && sup > 0.0 {
            let a = (best.1 - step).max(lo);
            let b = (best.1 + step).min(hi);
            let (_, refined) = golden_max(|s| k.value(s).abs(), a, b, 1e-12 * (1.0 + best.1.abs()));
            sup = sup.max(refined);
        }
        sup_norms.push(sup);
    }
    let order = evaluators.iter().map(|k| k.max_derivative_order()).min().unwrap_or(2);
    let smoothness = match order {
        0 => Smoothness::C0,
        1 => Smoothness::C1,
        _ => Smoothness::C2,
    };
    Ok(CurvatureProfile {
        dim: d,
        kappas: evaluators,
        support,
        sup_norms,
        smoothness,
        tabulated: false,
    })
}

/// Build a profile from tabulated columns (s, κ₁, …, κ_{d−1}); zero outside the table.
///
/// Sup-norms are the table maxima inflated by 5%.
pub fn profile_from_table(d: usize, s: Vec<f64>, kappas: Vec<Vec<f64>>) -> Result<CurvatureProfile> {
    if kappas.len() != d - 1 {
        return Err(TubeError::Arity { expected: d - 1, got: kappas.len() });
    }
    let lo = s[0];
    let hi = *s.last().unwrap();
    let mut evaluators: Vec<Arc<dyn CurvatureFunction>> = Vec::new();
    let mut sup_norms = Vec::new();
    for k in kappas {
        let m = k.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        sup_norms.push(1.05 * m);
        evaluators.push(Arc::new(TabulatedCurvature::new(s.clone(), k)?));
    }
    Ok(CurvatureProfile {
        dim: d,
        kappas: evaluators,
        support: Support::Finite { lo, hi },
        sup_norms,
        smoothness: Smoothness::C2,
        tabulated: true,
    })
}

/// Read a profile table in CSV with header `s,kappa1[,kappa2,...]`.
pub fn read_profile_csv(d: usize, text: &str) -> Result<CurvatureProfile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| TubeError::Precondition("empty curvature table".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected: Vec<String> = std::iter::once("s".to_string())
        .chain((1..d).map(|i| format!("kappa{i}")))
        .collect();
    if cols != expected {
        return Err(TubeError::Precondition(format!(
            "curvature table header must be `{}`, found `{}`",
            expected.join(","),
            header.trim()
        )));
    }
    let mut s = Vec::new();
    let mut kappas = vec![Vec::new(); d - 1];
    for (lineno, line) in lines.enumerate() {
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| TubeError::Precondition(format!("table row {}: {e}", lineno + 2)))?;
        if vals.len() != d {
            return Err(TubeError::Arity { expected: d, got: vals.len() });
        }
        s.push(vals[0]);
        for i in 0..d - 1 {
            kappas[i].push(vals[i + 1]);
        }
    }
    profile_from_table(d, s, kappas)
}

/// Curvatures of a unit-speed curve tabulated on `samples` (increasing arc lengths).
///
/// κᵢ = ėᵢ·e_{i+1}, with ėᵢ from fourth-order differences of the frame.
pub fn curvatures(curve: &ParametricCurve, samples: &[f64]) -> Result<CurvatureProfile> {
    let d = curve.dim();
    if samples.len() < 2 {
        return Err(TubeError::Precondition("need at least two samples".into()));
    }
    let delta = 1e-3;
    let mut kappas = vec![Vec::with_capacity(samples.len()); d - 1];
    let mut previous: Option<FrenetFrameSample> = None;
    for &s in samples {
        let f0 = frenet_frame(curve, s)?;
        let stencil: Vec<FrenetFrameSample> = [-2.0, -1.0, 1.0, 2.0]
            .iter()
            .map(|k| frenet_frame(curve, s + k * delta))
            .collect::<Result<_>>()?;
        for (n, f) in stencil.iter().enumerate() {
            for i in 0..d {
                if f.e(i).dot(&f0.e(i)) < 0.0 {
                    let s1 = f.s;
                    let _ = n;
                    return Err(TubeError::FrameContinuity { index: i + 1, s0: s, s1 });
                }
            }
        }
        if let Some(prev) = &previous {
            for i in 0..d {
                if prev.e(i).dot(&f0.e(i)) < 0.0 {
                    return Err(TubeError::FrameContinuity { index: i + 1, s0: prev.s, s1: s });
                }
            }
        }
        let de = (&stencil[0].frame - &stencil[1].frame * 8.0 + &stencil[2].frame * 8.0 - &stencil[3].frame)
            / (12.0 * delta);
        for i in 0..d - 1 {
            kappas[i].push(de.row(i).dot(&f0.frame.row(i + 1)));
        }
        previous = Some(f0);
    }
    profile_from_table(d, samples.to_vec(), kappas)
}
