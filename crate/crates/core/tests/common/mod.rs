#![allow(dead_code)]

use curved_tube::families::{profile_from_specs, CurvatureSpec};
use curved_tube::frame::{solve_frame_ode, InitialRotation};
use curved_tube::section::CrossSection;
use curved_tube::tube::{build_tube, TubeGeometry};

pub const PI2: f64 = std::f64::consts::PI * std::f64::consts::PI;

/// Tube over `specs` with the frame tabulated on [−reach, reach].
pub fn tube_with(specs: &[CurvatureSpec], section: CrossSection, reach: f64, initial: InitialRotation) -> TubeGeometry {
    let profile = profile_from_specs(specs).unwrap();
    let frame = solve_frame_ode(&profile, (-reach, reach), 0.01, &initial).unwrap();
    build_tube(profile, frame, section).unwrap()
}

pub fn strip(spec: CurvatureSpec, a: f64, reach: f64) -> TubeGeometry {
    tube_with(&[spec], CrossSection::interval(a).unwrap(), reach, InitialRotation::identity(2))
}

pub fn bent_strip(reach: f64) -> TubeGeometry {
    strip(CurvatureSpec::Bump { height: 0.5, width: 4.0 }, 0.5, reach)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
