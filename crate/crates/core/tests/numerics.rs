mod common;

use common::{rel, strip};
use curved_tube::certificate::{certify, Verdict};
use curved_tube::families::CurvatureSpec;
use curved_tube::section::{CrossSection, Mask};
use curved_tube::spectra::richardson;

/// Unit square minus its upper-right quadrant, `m` cells per side.
fn l_shape(m: usize) -> Mask {
    let rows: Vec<Vec<bool>> = (0..m).map(|r| (0..m).map(|c| r >= m / 2 || c < m / 2).collect()).collect();
    Mask::from_rows(&rows).unwrap()
}

#[test]
fn l_shaped_mask_threshold_is_close_to_its_refined_limit() {
    let mu = |m: usize| CrossSection::mask(l_shape(m), 1.0 / m as f64).unwrap().mu1();
    let (coarse, f1, f2) = (mu(64), mu(128), mu(256));
    let limit = richardson(&[vec![f1], vec![f2]], &[1.0 / 128.0, 1.0 / 256.0]).extrapolated[0];
    assert!(rel(coarse, limit) < 0.015, "μ₁(1/64) = {coarse}, extrapolated {limit}");
    // refinement approaches the limit monotonically from one side
    assert!((coarse - f1) * (f1 - f2) > 0.0);
    // the L-shaped domain of side 2 has λ₁ = 9.6397238…; ours has side 1
    assert!(rel(limit, 4.0 * 9.6397238) < 0.01, "{limit}");
}

#[test]
fn tiny_curvature_is_certified_only_far_along_the_schedule() {
    let tube = strip(CurvatureSpec::Bump { height: 1e-3, width: 4.0 }, 0.5, 1.0);
    let schedule: Vec<u64> = (1..=9).map(|p| 10u64.pow(p)).collect();
    let out = certify(&tube, &schedule).unwrap();
    assert_eq!(out.verdict, Verdict::Certified, "{}", out.table());
    let n = out.certified_at.unwrap();
    assert!(n >= 100_000, "certified already at n = {n}");
    // q₁ is of the order of the amplitude while q₀ decays like 1/n
    let first = &out.trace[0];
    assert!(first.q1.abs() < 1e-2 && first.q0 > first.q1 * first.q1 / first.q2);
    for pair in out.trace.windows(2) {
        assert!(pair[1].q0 < pair[0].q0);
    }
}

#[test]
fn sign_changing_curvature_picks_the_positive_lobe() {
    let tube = strip(CurvatureSpec::SignChanging { amplitude: 0.8 }, 0.5, 1.0);
    let out = certify(&tube, &[2, 5, 10, 20, 50, 100, 200, 500, 1000]).unwrap();
    assert_eq!(out.choice.kappa_sign, 1.0);
    assert!(out.choice.weight.lo >= 0.0 && out.choice.phi_kappa > 0.0);
}
