//! Variational bound-state certificate.
//!
//! Trial functions Ψₙ,ε = φₙ⊗𝒥₁ + ε φ(s) R_{μ2}(s) u_μ 𝒥₁(u) are evaluated in
//! the weighted geometry, and Q₁[Ψ] = Q[Ψ] − μ₁‖Ψ‖²_g is minimized over ε.
//! A negative minimum (beyond the quadrature error) witnesses spectrum below μ₁
//! without solving any eigenproblem.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Result, TubeError};
use crate::geometry::Support;
use crate::quad::GaussLegendre;
use crate::tube::TubeGeometry;

/// |κ₁| below this counts as zero when looking for a sign-constant interval.
pub const KAPPA_FLOOR: f64 = 1e-8;

pub const DEFAULT_SCHEDULE: [u64; 7] = [2, 5, 10, 20, 50, 100, 200];

const LOW_ORDER: usize = 8;
const HIGH_ORDER: usize = 12;
const ACTIVE_CELL: f64 = 0.25;
const FAR_CELL: f64 = 2.0;
const SCAN_SAMPLES: usize = 20_000;
const INFINITE_WINDOW: f64 = 100.0;

/// Even piecewise-linear cutoff: 1 on |s| < n, 0 on |s| ≥ 2n+1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mollifier {
    pub n: u64,
}

impl Mollifier {
    pub fn value(&self, s: f64) -> f64 {
        let n = self.n as f64;
        let x = s.abs();
        if x <= n {
            1.0
        } else if x >= 2.0 * n + 1.0 {
            0.0
        } else {
            (2.0 * n + 1.0 - x) / (n + 1.0)
        }
    }

    pub fn slope(&self, s: f64) -> f64 {
        let n = self.n as f64;
        let x = s.abs();
        if x <= n || x >= 2.0 * n + 1.0 {
            0.0
        } else {
            -s.signum() / (n + 1.0)
        }
    }

    /// ‖φ̇ₙ‖² over ℝ.
    pub fn slope_energy(&self) -> f64 {
        2.0 / (self.n as f64 + 1.0)
    }

    pub fn breakpoints(&self) -> [f64; 4] {
        let n = self.n as f64;
        [-(2.0 * n + 1.0), -n, n, 2.0 * n + 1.0]
    }
}

/// Hat of height 1 on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HatWeight {
    pub lo: f64,
    pub hi: f64,
}

impl HatWeight {
    fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= self.lo || s >= self.hi {
            return 0.0;
        }
        let half = 0.5 * (self.hi - self.lo);
        1.0 - (s - self.mid()).abs() / half
    }

    pub fn slope(&self, s: f64) -> f64 {
        if s <= self.lo || s >= self.hi {
            return 0.0;
        }
        let half = 0.5 * (self.hi - self.lo);
        -(s - self.mid()).signum() / half
    }
}

/// Localized weight chosen on a sign-constant interval of κ₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightChoice {
    pub weight: HatWeight,
    /// Sign of κ₁ on the interval.
    pub kappa_sign: f64,
    /// ∫φκ₁ ds.
    pub phi_kappa: f64,
    pub scan_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialFamily {
    pub mollifier: Mollifier,
    pub choice: WeightChoice,
}

fn window(tube: &TubeGeometry) -> (f64, f64, bool) {
    match tube.profile().support() {
        Support::Finite { lo, hi } => (lo, hi, true),
        Support::Infinite => (-INFINITE_WINDOW, INFINITE_WINDOW, false),
    }
}

fn hat_integral(tube: &TubeGeometry, w: &HatWeight) -> f64 {
    let g = GaussLegendre::new(32);
    let p = tube.profile();
    let m = w.mid();
    let pieces = 16;
    let mut total = 0.0;
    for (a, b) in [(w.lo, m), (m, w.hi)] {
        let h = (b - a) / pieces as f64;
        for k in 0..pieces {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            total += g.integrate(x0, x1, |s| w.value(s) * p.kappa(1, s));
        }
    }
    total
}

/// Pick the hat weight: scan κ₁ for maximal runs with |κ₁| > floor and constant
/// sign, refine their ends by bisection, and keep the one with the largest
/// |∫φκ₁|. Ties go to positive κ₁, then to the rightmost run.
pub fn select_weight(tube: &TubeGeometry) -> Result<WeightChoice> {
    let p = tube.profile();
    if p.is_straight() || p.kappa1_sup() <= KAPPA_FLOOR {
        return Err(TubeError::StraightTube);
    }
    let (lo, hi, finite) = window(tube);
    let step = (hi - lo) / SCAN_SAMPLES as f64;
    let sign_at = |s: f64| {
        let k = p.kappa(1, s);
        if k.abs() > KAPPA_FLOOR {
            k.signum()
        } else {
            0.0
        }
    };
    let samples: Vec<f64> = (0..=SCAN_SAMPLES).map(|i| sign_at(lo + i as f64 * step)).collect();
    let mut runs = Vec::new();
    let mut i = 0;
    while i <= SCAN_SAMPLES {
        if samples[i] == 0.0 {
            i += 1;
            continue;
        }
        let sg = samples[i];
        let start = i;
        while i <= SCAN_SAMPLES && samples[i] == sg {
            i += 1;
        }
        runs.push((start, i - 1, sg));
    }
    if runs.is_empty() {
        return Err(TubeError::ScanResolution(step));
    }
    let refine = |inside: f64, outside: f64, sg: f64| {
        let (mut a, mut b) = (inside, outside);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if sign_at(m) == sg {
                a = m;
            } else {
                b = m;
            }
        }
        a
    };
    let mut best: Option<WeightChoice> = None;
    for (r, &(a, b, sg)) in runs.iter().enumerate() {
        let mut left = lo + a as f64 * step;
        let mut right = lo + b as f64 * step;
        if a > 0 {
            left = refine(left, left - step, sg);
        }
        if b < SCAN_SAMPLES {
            right = refine(right, right + step, sg);
        }
        if finite {
            if r == 0 {
                left = lo;
            }
            if r + 1 == runs.len() {
                right = hi;
            }
        }
        if right - left < step {
            continue;
        }
        let weight = HatWeight { lo: left, hi: right };
        let phi_kappa = hat_integral(tube, &weight);
        let cand = WeightChoice { weight, kappa_sign: sg, phi_kappa, scan_step: step };
        best = Some(match best {
            None => cand,
            Some(cur) => {
                let (x, y) = (cand.phi_kappa.abs(), cur.phi_kappa.abs());
                let tie = (x - y).abs() <= 1e-12 * x.max(y);
                if tie {
                    if cand.kappa_sign >= cur.kappa_sign {
                        cand
                    } else {
                        cur
                    }
                } else if x > y {
                    cand
                } else {
                    cur
                }
            }
        });
    }
    best.ok_or(TubeError::ScanResolution(step))
}

pub fn build_trial(tube: &TubeGeometry, n: u64) -> Result<TrialFamily> {
    Ok(TrialFamily { mollifier: Mollifier { n }, choice: select_weight(tube)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    NotCertified,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "certified",
            Verdict::NotCertified => "not-certified",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureErrors {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub min_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateResult {
    pub n: u64,
    /// (Ψₙ,₁, h⁻¹Ψₙ,₁)
    pub q0: f64,
    /// (Φ,₁, h⁻¹Ψₙ,₁) − ½(φ, κ₁φₙ)
    pub q1: f64,
    /// Q₁[Φ] by direct quadrature.
    pub q2: f64,
    pub epsilon: f64,
    pub min_value: f64,
    /// The ε-quadratic is unbounded below (q₂ ≤ 0).
    pub degenerate: bool,
    pub verdict: Verdict,
    pub errors: QuadratureErrors,
    /// C₋⁻¹·2/(n+1).
    pub q0_bound: f64,
    /// (Ψₙ, κ₁R_{μ2}Ψₙ,μ), zero in exact arithmetic.
    pub vanishing_term: f64,
    /// −½(φ, κ₁φₙ).
    pub cross_limit_term: f64,
    /// (Φ, κ₁R_{μ2}Ψₙ,μ) by quadrature; equals `cross_limit_term` for an exact 𝒥₁.
    pub cross_term_quadrature: f64,
    /// Q₁[Ψₙ] evaluated from the full form, without the reduction.
    pub q0_direct: f64,
    /// max over ε*±δ of |Q₁[Ψₙ,ε] − (q₀ + 2εq₁ + ε²q₂)|, relative to the size of the integrals.
    pub quadratic_defect: f64,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    q0: f64,
    vanishing: f64,
    q1_first: f64,
    cross_transverse: f64,
    q2: f64,
    q0_direct: f64,
    phi_kappa_phin: f64,
    // direct Q₁ at two values of ε and the absolute scale of its parts
    plus: f64,
    minus: f64,
    scale: f64,
}

impl Sums {
    fn axpy(&mut self, w: f64, o: &Sums) {
        self.q0 += w * o.q0;
        self.vanishing += w * o.vanishing;
        self.q1_first += w * o.q1_first;
        self.cross_transverse += w * o.cross_transverse;
        self.q2 += w * o.q2;
        self.q0_direct += w * o.q0_direct;
        self.phi_kappa_phin += w * o.phi_kappa_phin;
        self.plus += w * o.plus;
        self.minus += w * o.minus;
        self.scale += w * o.scale;
    }
}

/// ∂ₛ R_{μ2} = −(R K_T)_{μ2}.
fn direction_rate(tube: &TubeGeometry, s: f64) -> Result<[f64; 2]> {
    if tube.dim() == 2 {
        return Ok([0.0, 0.0]);
    }
    let r = tube.frame().rotation_at(s)?;
    let k = tube
        .profile()
        .frenet_matrix(s, 0)
        .ok_or_else(|| TubeError::Evaluation(format!("curvature unavailable at s = {s}")))?;
    let d = tube.dim();
    let kt = k.view((1, 1), (d - 1, d - 1));
    let rk = &r * kt;
    Ok([-rk[(0, 0)], if d > 2 { -rk[(1, 0)] } else { 0.0 }])
}

fn integrand(tube: &TubeGeometry, fam: &TrialFamily, s: f64, eps: [f64; 2]) -> Result<Sums> {
    let kappa = tube.profile().kappa(1, s);
    let (pn, dpn) = (fam.mollifier.value(s), fam.mollifier.slope(s));
    let w = &fam.choice.weight;
    let (ph, dph) = (w.value(s), w.slope(s));
    let mut out = Sums { phi_kappa_phin: ph * kappa * pn, ..Default::default() };
    if pn == 0.0 && dpn == 0.0 && ph == 0.0 && dph == 0.0 {
        return Ok(out);
    }
    let dir = if kappa != 0.0 || ph != 0.0 { tube.direction(s)? } else { [1.0, 0.0] };
    let ddir = if ph != 0.0 { direction_rate(tube, s)? } else { [0.0, 0.0] };
    let mu1 = tube.section().mu1();
    for q in tube.section().quadrature() {
        let (u, j, gj) = (q.u, q.value, q.grad);
        let f = dir[0] * u[0] + dir[1] * u[1];
        let df = ddir[0] * u[0] + ddir[1] * u[1];
        let h = 1.0 - kappa * f;
        // Ψₙ and Φ with their derivatives
        let psi = pn * j;
        let psi_s = dpn * j;
        let psi_u = [pn * gj[0], pn * gj[1]];
        let phi = ph * f * j;
        let phi_s = (dph * f + ph * df) * j;
        let phi_u = [ph * (dir[0] * j + f * gj[0]), ph * (dir[1] * j + f * gj[1])];
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        let q1 = |a_s: f64, a_u: [f64; 2], a: f64, b_s: f64, b_u: [f64; 2], b: f64| {
            a_s * b_s / h + h * (dot(a_u, b_u) - mu1 * a * b)
        };
        let wt = q.weight;
        let rdir_psi = kappa * dot(dir, psi_u);
        out.q0 += wt * psi_s * psi_s / h;
        out.vanishing += wt * psi * rdir_psi;
        out.q1_first += wt * phi_s * psi_s / h;
        out.cross_transverse += wt * phi * rdir_psi;
        out.q2 += wt * q1(phi_s, phi_u, phi, phi_s, phi_u, phi);
        out.q0_direct += wt * q1(psi_s, psi_u, psi, psi_s, psi_u, psi);
        for (acc, e) in [(&mut out.plus, eps[0]), (&mut out.minus, eps[1])] {
            let t_s = psi_s + e * phi_s;
            let t_u = [psi_u[0] + e * phi_u[0], psi_u[1] + e * phi_u[1]];
            let t = psi + e * phi;
            *acc += wt * q1(t_s, t_u, t, t_s, t_u, t);
        }
        let (a, b) = (psi.abs() + phi.abs(), psi_s.abs() + phi_s.abs());
        let g = (psi_u[0].abs() + phi_u[0].abs()).powi(2) + (psi_u[1].abs() + phi_u[1].abs()).powi(2);
        out.scale += wt * (b * b / h + h * (g + mu1 * a * a));
    }
    Ok(out)
}

fn cells(tube: &TubeGeometry, fam: &TrialFamily) -> Vec<(f64, f64)> {
    let (wlo, whi, finite) = window(tube);
    let w = &fam.choice.weight;
    let outer = fam.mollifier.breakpoints();
    let mut pts: Vec<f64> = outer.to_vec();
    pts.extend([w.lo, w.mid(), w.hi, wlo, whi]);
    pts.retain(|x| *x >= outer[0] && *x <= outer[3]);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    let mut out = Vec::new();
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let inside = a >= wlo && b <= whi;
        let cap = if inside {
            ACTIVE_CELL
        } else if finite {
            f64::INFINITY
        } else {
            FAR_CELL
        };
        let m = ((b - a) / cap).ceil().max(1.0) as usize;
        let h = (b - a) / m as f64;
        out.extend((0..m).map(|k| (a + k as f64 * h, if k + 1 == m { b } else { a + (k + 1) as f64 * h })));
    }
    out
}

fn integrate(tube: &TubeGeometry, fam: &TrialFamily, order: usize, eps: [f64; 2]) -> Result<Sums> {
    let g = GaussLegendre::new(order);
    let mut total = Sums::default();
    for (a, b) in cells(tube, fam) {
        for (s, w) in g.on(a, b) {
            total.axpy(w, &integrand(tube, fam, s, eps)?);
        }
    }
    Ok(total)
}

/// Evaluate q₀, q₁, q₂, minimize the ε-quadratic and classify.
pub fn evaluate_certificate(tube: &TubeGeometry, fam: &TrialFamily) -> Result<CertificateResult> {
    let lo = integrate(tube, fam, LOW_ORDER, [0.0, 0.0])?;
    let hi = integrate(tube, fam, HIGH_ORDER, [0.0, 0.0])?;
    let cross_limit_term = -0.5 * hi.phi_kappa_phin;
    let q0 = hi.q0;
    let q1 = hi.q1_first + cross_limit_term;
    let q2 = hi.q2;
    let e0 = (hi.q0 - lo.q0).abs();
    let e1 = (hi.q1_first - lo.q1_first).abs() + 0.5 * (hi.phi_kappa_phin - lo.phi_kappa_phin).abs();
    let e2 = (hi.q2 - lo.q2).abs();
    let degenerate = q2 <= 0.0;
    let (epsilon, min_value) = if !degenerate {
        let e = -q1 / q2;
        (e, q0 - q1 * q1 / q2)
    } else if q1 != 0.0 {
        let e = -q1.signum() * (2.0 * (q0 + e0 + 1.0) / q1.abs()).max(1.0);
        (e, q0 + 2.0 * e * q1 + e * e * q2)
    } else if q2 < 0.0 {
        let e = (2.0 * (q0 + e0 + 1.0) / q2.abs()).sqrt();
        (e, q0 + e * e * q2)
    } else {
        (0.0, q0)
    };
    let err = e0 + 2.0 * epsilon.abs() * e1 + epsilon * epsilon * e2;
    let verdict = if min_value < -err {
        Verdict::Certified
    } else if min_value.abs() <= err {
        Verdict::Indeterminate
    } else {
        Verdict::NotCertified
    };
    let delta = epsilon.abs().max(1.0) * 0.5;
    let eps = [epsilon + delta, epsilon - delta];
    let check = integrate(tube, fam, HIGH_ORDER, eps)?;
    let model = |e: f64| q0 + 2.0 * e * q1 + e * e * q2;
    let quadratic_defect = (check.plus - model(eps[0])).abs().max((check.minus - model(eps[1])).abs()) / check.scale;
    Ok(CertificateResult {
        n: fam.mollifier.n,
        q0,
        q1,
        q2,
        epsilon,
        min_value,
        degenerate,
        verdict,
        errors: QuadratureErrors { q0: e0, q1: e1, q2: e2, min_value: err },
        q0_bound: fam.mollifier.slope_energy() / tube.c_minus(),
        vanishing_term: hi.vanishing,
        cross_limit_term,
        cross_term_quadrature: hi.cross_transverse,
        q0_direct: hi.q0_direct,
        quadratic_defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateOutcome {
    pub verdict: Verdict,
    pub certified_at: Option<u64>,
    pub schedule: Vec<u64>,
    pub choice: WeightChoice,
    pub trace: Vec<CertificateResult>,
    pub note: String,
}

/// Walk the n-schedule and stop at the first certified n.
pub fn certify(tube: &TubeGeometry, schedule: &[u64]) -> Result<CertificateOutcome> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) || schedule[0] == 0 {
        return Err(TubeError::Precondition("certificate schedule must be increasing positive integers".into()));
    }
    let choice = select_weight(tube)?;
    let mut trace = Vec::new();
    for &n in schedule {
        let fam = TrialFamily { mollifier: Mollifier { n }, choice };
        let r = evaluate_certificate(tube, &fam)?;
        let done = r.verdict == Verdict::Certified;
        trace.push(r);
        if done {
            break;
        }
    }
    let last = trace.last().expect("non-empty schedule");
    let (verdict, certified_at, note) = match last.verdict {
        Verdict::Certified => (Verdict::Certified, Some(last.n), format!("Q₁ < 0 reached at n = {}", last.n)),
        Verdict::Indeterminate => (
            Verdict::Indeterminate,
            None,
            "schedule exhausted with the minimum inside the quadrature error".to_string(),
        ),
        Verdict::NotCertified => (
            Verdict::NotCertified,
            None,
            format!("schedule exhausted at n = {} without Q₁ < 0", last.n),
        ),
    };
    Ok(CertificateOutcome { verdict, certified_at, schedule: schedule.to_vec(), choice, trace, note })
}

impl CertificateOutcome {
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>10} {:>14} {:>14} {:>14} {:>14} {:>14}  verdict\n",
            "n", "q0", "q1", "q2", "eps*", "min"
        );
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{:>10} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}  {}",
                r.n, r.q0, r.q1, r.q2, r.epsilon, r.min_value, r.verdict
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{solve_frame_ode, InitialRotation};
    use crate::geometry::{profile_from_closures, ClosureCurvature, CurvatureFunction, ScalarFn};
    use crate::section::CrossSection;
    use crate::tube::build_tube;
    use std::sync::Arc;

    fn strip(k: ScalarFn, support: Support, a: f64) -> TubeGeometry {
        let ks: Vec<Arc<dyn CurvatureFunction>> = vec![Arc::new(ClosureCurvature::new(k))];
        let p = profile_from_closures(2, ks, support).unwrap();
        let f = solve_frame_ode(&p, (-1.0, 1.0), 0.1, &InitialRotation::identity(2)).unwrap();
        build_tube(p, f, CrossSection::interval(a).unwrap()).unwrap()
    }

    fn hat_strip() -> TubeGeometry {
        strip(Arc::new(|s: f64| 0.1 * (1.0 - s.abs()).max(0.0)), Support::Finite { lo: -1.0, hi: 1.0 }, 0.2)
    }

    #[test]
    fn mollifier_energy_and_shape() {
        let m = Mollifier { n: 3 };
        assert_eq!(m.slope_energy(), 0.5);
        let g = GaussLegendre::new(4);
        let e: f64 = [(-7.0, -3.0), (3.0, 7.0)].iter().map(|&(a, b)| g.integrate(a, b, |s| m.slope(s).powi(2))).sum();
        assert!((e - 0.5).abs() < 1e-15);
        assert_eq!(m.value(2.9), 1.0);
        assert_eq!(m.value(-7.0), 0.0);
        assert!((m.value(5.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bump_weight_covers_support() {
        let t = strip(
            Arc::new(|s: f64| {
                let x = s / 2.0;
                if x.abs() < 1.0 {
                    0.5 * (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }),
            Support::Finite { lo: -2.0, hi: 2.0 },
            0.5,
        );
        let c = select_weight(&t).unwrap();
        assert_eq!((c.weight.lo, c.weight.hi), (-2.0, 2.0));
        assert_eq!(c.kappa_sign, 1.0);
    }

    #[test]
    fn sign_changing_prefers_positive_branch() {
        let t = strip(Arc::new(|s: f64| 0.3 * s * (-s * s).exp()), Support::Infinite, 0.5);
        let c = select_weight(&t).unwrap();
        assert!(c.weight.lo >= 0.0 && c.weight.lo < 1e-6, "{:?}", c.weight);
        assert!(c.weight.hi > 4.0);
        assert_eq!(c.kappa_sign, 1.0);
    }

    #[test]
    fn straight_strip_is_rejected() {
        let t = strip(Arc::new(|_| 0.0), Support::Infinite, 0.5);
        assert!(matches!(build_trial(&t, 2), Err(TubeError::StraightTube)));
    }

    #[test]
    fn hat_curvature_cross_term_limit() {
        let t = hat_strip();
        let fam = build_trial(&t, 200).unwrap();
        let r = evaluate_certificate(&t, &fam).unwrap();
        // ∫ hat·hat on [−1, 1] = 2/3, times height 0.1
        let limit = -0.5 * 0.1 * 2.0 / 3.0;
        assert!((r.q1 - limit).abs() < 1e-12, "{}", r.q1);
        assert!((r.cross_term_quadrature - limit).abs() < 1e-12);
        assert!(r.vanishing_term.abs() <= 1e-10 * r.q0);
        assert!(r.quadratic_defect < 1e-13);
    }

    #[test]
    fn hat_curvature_flips_to_certified() {
        let t = hat_strip();
        // q₁²/q₂ ≈ 1.64e−3 here, so q₀ ≈ 2/(n+1) must fall below that first
        let out = certify(&t, &[2, 50, 1000, 1500]).unwrap();
        assert!(out.trace[..3].iter().all(|r| r.verdict == Verdict::NotCertified));
        assert_eq!(out.verdict, Verdict::Certified);
        assert_eq!(out.certified_at, Some(1500));
        for r in &out.trace {
            assert!(r.q0 <= r.q0_bound);
            // h ∈ [C₋, C₊] brackets q₀ against the slope energy
            let e = 2.0 / (r.n as f64 + 1.0);
            assert!(r.q0 >= e / t.c_plus() - 1e-14);
        }
        let q2_ratio = out.trace[0].q0 / out.trace[1].q0;
        assert!((q2_ratio - 51.0 / 3.0).abs() < 1e-9, "{q2_ratio}");
    }

    #[test]
    fn epsilon_star_minimizes() {
        let t = hat_strip();
        let r = evaluate_certificate(&t, &build_trial(&t, 50).unwrap()).unwrap();
        assert!(r.q2 > 0.0);
        assert!((r.epsilon + r.q1 / r.q2).abs() < 1e-15);
        assert!((r.min_value - (r.q0 - r.q1 * r.q1 / r.q2)).abs() < 1e-15);
    }
}
