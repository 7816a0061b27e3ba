use std::f64::consts::PI;

use proptest::prelude::*;
use ringsense::gpe2d::Grid2D;
use ringsense::measurement::{
    estimate_delta, estimate_imbalance, estimate_overlap_integral, fringe_image, fringe_sequence, measure_images,
    track_nodal_line, ArcFormula, DeltaConfig, ImbalanceConfig, MeasureConfig, TraceConfig,
};
use ringsense::modes::RadialProfile;

fn ring(r0: f64, width: f64) -> RadialProfile {
    let h = 0.005;
    let r: Vec<f64> = (0..4000).map(|i| (i as f64 + 0.5) * h).collect();
    let f = r.iter().map(|&r| (-(r - r0).powi(2) / (2.0 * width * width)).exp()).collect();
    let mut p = RadialProfile { r, f, l: 1, mu: 0.0 };
    let n = p.norm_sqr().sqrt();
    p.f.iter_mut().for_each(|v| *v /= n);
    p
}

fn grid() -> Grid2D {
    Grid2D::square(256, 24.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_image_estimators_recover_inputs(
        pp in 0.52..0.95f64,
        angle in -PI..PI,
        width in 0.8..1.3f64,
    ) {
        let p = ring(5.0, width);
        let img = fringe_image(grid(), &p, pp, 1.0 - pp, angle, 0.0);
        let e = estimate_imbalance(&img, &ImbalanceConfig::default()).unwrap();
        prop_assert!((e.p_plus - pp).abs() <= 1e-3 * pp);
        let i = estimate_overlap_integral(&img, e.p_plus, e.p_minus);
        let exact_i = p.quartic_integral();
        prop_assert!((i / exact_i - 1.0).abs() <= 1e-3, "I {} vs {}", i, exact_i);
        let d = estimate_delta(&img, e.p_plus, e.p_minus, e.angle_max, &DeltaConfig::default()).unwrap();
        let exact_d = 4.0 * p.centrifugal_integral();
        prop_assert!((d / exact_d - 1.0).abs() <= 1e-3, "Δ {} vs {}", d, exact_d);
    }

    #[test]
    fn nodal_trace_recovers_the_rate(omega in -0.02..0.02f64, angle0 in -PI..PI) {
        prop_assume!(omega.abs() > 1e-4);
        let times: Vec<f64> = (0..12).map(|k| k as f64 * 5.0).collect();
        let imgs = fringe_sequence(Grid2D::square(128, 24.0).unwrap(), &ring(5.0, 1.0), 0.7, 0.3, angle0, omega, &times);
        let t = track_nodal_line(&imgs, &TraceConfig::default()).unwrap();
        prop_assert!((t.omega - omega).abs() <= 1e-3 * omega.abs(), "{} vs {}", t.omega, omega);
    }
}

#[test]
fn full_protocol_on_a_rotating_sequence() {
    let times: Vec<f64> = (0..10).map(|k| k as f64 * 20.0).collect();
    let p = ring(5.0, 1.0);
    let imgs = fringe_sequence(grid(), &p, 0.8, 0.2, 0.3, 2.4e-3, &times);
    let r = measure_images(&imgs, &MeasureConfig::default()).unwrap();
    assert!((r.imbalance.value - 0.6).abs() <= 6e-4);
    assert!((r.omega.value / 2.4e-3 - 1.0).abs() <= 1e-3);
    assert!((r.overlap_integral.value / p.quartic_integral() - 1.0).abs() <= 1e-3);
    assert!((r.delta.value / (4.0 * p.centrifugal_integral()) - 1.0).abs() <= 1e-3);
}

#[test]
fn halving_theta_shrinks_the_small_angle_bias_quadratically() {
    let img = fringe_image(grid(), &ring(5.0, 1.0), 0.7, 0.3, 0.9, 0.0);
    let bias: Vec<f64> = [PI / 8.0, PI / 16.0, PI / 32.0]
        .iter()
        .map(|&theta| {
            let cfg = ImbalanceConfig { half_angle: theta, formula: ArcFormula::SmallAngle, ..Default::default() };
            (estimate_imbalance(&img, &cfg).unwrap().product - 0.21).abs()
        })
        .collect();
    for w in bias.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "bias ratio {ratio}");
    }
}
