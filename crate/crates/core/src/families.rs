//! Named curvature families with closed-form derivatives.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TubeError};
use crate::geometry::{profile_from_closures, ClosureCurvature, CurvatureFunction, CurvatureProfile, Support};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurvatureSpec {
    Zero,
    Constant { value: f64 },
    /// height·exp(1 − 1/(1 − x²)) with x = 2s/width, zero for |x| ≥ 1.
    Bump { height: f64, width: f64 },
    Gaussian { amplitude: f64, sigma: f64 },
    /// height·max(0, 1 − |s|/half_width); continuous only.
    Hat { height: f64, half_width: f64 },
    /// amplitude·s·exp(−s²).
    SignChanging { amplitude: f64 },
    /// value on |s| < length/2 and zero outside: a circular arc between straight legs.
    Arc { value: f64, length: f64 },
}

impl CurvatureSpec {
    pub fn support(&self) -> Support {
        match *self {
            CurvatureSpec::Zero => Support::Finite { lo: 0.0, hi: 0.0 },
            CurvatureSpec::Bump { width, .. } => Support::Finite { lo: -width / 2.0, hi: width / 2.0 },
            CurvatureSpec::Hat { half_width, .. } => Support::Finite { lo: -half_width, hi: half_width },
            CurvatureSpec::Arc { length, .. } => Support::Finite { lo: -length / 2.0, hi: length / 2.0 },
            _ => Support::Infinite,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(TubeError::Precondition(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            CurvatureSpec::Bump { width, .. } => positive("width", width),
            CurvatureSpec::Gaussian { sigma, .. } => positive("sigma", sigma),
            CurvatureSpec::Hat { half_width, .. } => positive("half_width", half_width),
            CurvatureSpec::Arc { length, .. } => positive("length", length),
            _ => Ok(()),
        }
    }

    pub fn function(&self) -> Result<Arc<dyn CurvatureFunction>> {
        self.validate()?;
        let f: ClosureCurvature = match *self {
            CurvatureSpec::Zero => closure(|_| 0.0, |_| 0.0, |_| 0.0),
            CurvatureSpec::Constant { value } => closure(move |_| value, |_| 0.0, |_| 0.0),
            CurvatureSpec::Bump { height, width } => {
                let c = 2.0 / width;
                // g = 1 − 1/(1 − x²); κ = height·e^g
                let parts = move |s: f64| {
                    let x = c * s;
                    let q = 1.0 - x * x;
                    if q <= 0.0 {
                        return (0.0, 0.0, 0.0);
                    }
                    let e = height * (1.0 - 1.0 / q).exp();
                    let g1 = -2.0 * x / (q * q);
                    let g2 = -2.0 / (q * q) - 8.0 * x * x / (q * q * q);
                    (e, e * g1 * c, e * (g1 * g1 + g2) * c * c)
                };
                closure(move |s| parts(s).0, move |s| parts(s).1, move |s| parts(s).2)
            }
            CurvatureSpec::Gaussian { amplitude, sigma } => {
                let v = sigma * sigma;
                let g = move |s: f64| amplitude * (-s * s / (2.0 * v)).exp();
                closure(g, move |s| -s / v * g(s), move |s| (s * s / (v * v) - 1.0 / v) * g(s))
            }
            CurvatureSpec::Hat { height, half_width } => {
                ClosureCurvature::new(Arc::new(move |s: f64| height * (1.0 - s.abs() / half_width).max(0.0)))
            }
            CurvatureSpec::SignChanging { amplitude } => closure(
                move |s| amplitude * s * (-s * s).exp(),
                move |s| amplitude * (1.0 - 2.0 * s * s) * (-s * s).exp(),
                move |s| amplitude * (4.0 * s * s * s - 6.0 * s) * (-s * s).exp(),
            ),
            CurvatureSpec::Arc { value, length } => {
                ClosureCurvature::new(Arc::new(move |s: f64| if s.abs() < length / 2.0 { value } else { 0.0 }))
            }
        };
        Ok(Arc::new(f))
    }
}

fn closure(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> ClosureCurvature {
    ClosureCurvature::with_derivatives(Arc::new(f), Arc::new(df), Arc::new(d2f))
}

/// Profile in dimension `specs.len() + 1`. The support is the hull of the
/// finite supports, or infinite if any family has infinite support.
pub fn profile_from_specs(specs: &[CurvatureSpec]) -> Result<CurvatureProfile> {
    let mut support: Option<(f64, f64)> = None;
    let mut infinite = false;
    for sp in specs {
        match sp.support() {
            Support::Infinite => infinite = true,
            Support::Finite { .. } if matches!(sp, CurvatureSpec::Zero) => {}
            Support::Finite { lo, hi } => {
                support = Some(support.map_or((lo, hi), |(a, b)| (a.min(lo), b.max(hi))));
            }
        }
    }
    let support = match (infinite, support) {
        (true, _) => Support::Infinite,
        (false, Some((lo, hi))) => Support::Finite { lo, hi },
        (false, None) => Support::Infinite,
    };
    let fns = specs.iter().map(CurvatureSpec::function).collect::<Result<Vec<_>>>()?;
    profile_from_closures(specs.len() + 1, fns, support)
}
