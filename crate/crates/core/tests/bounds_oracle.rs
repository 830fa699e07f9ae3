//! Bound calculators against values computed independently at 50 digits.

use std::f64::consts::PI;

use spectral_lab::bounds::{
    appendix_alpha, denominator_bounds, dims_ae_phi, dims_all_phi, example_table, fixed_point_residual,
    interval_constants, random_dimension, ratio_fixed_points, ratio_scan, scan_n0, PeriodicProfile,
};

#[test]
fn ratio_fixed_points_at_gamma_ten() {
    let (c5, c6) = ratio_fixed_points(0.5, 10.0).unwrap();
    assert!((c5 - 0.958_426_83).abs() < 5e-9, "{c5}");
    assert!((c6 - 1.076_605_02).abs() < 5e-9, "{c6}");
    let (c3, c4) = denominator_bounds(0.5);
    assert!(fixed_point_residual(c6, c4.recip(), 10.0) < 1e-14);
    assert!(fixed_point_residual(c5, c3.recip(), 10.0) < 1e-14);
}

#[test]
fn ae_bounds_at_band_centre() {
    let b = dims_ae_phi(PI / 2.0, 0.1, 1e6);
    assert!((b.alpha1 - 0.999_819_269_784_63).abs() < 1e-13, "{}", b.alpha1);
    assert!(b.valid);
    assert!(b.alpha1 <= b.alpha2);
    let example = 1.0 - (1.0f64 + 1.0 / 400.0).ln() / (6.0 * 10f64.ln());
    assert!((b.alpha1 - example).abs() < 1e-12);
    assert!((b.alpha2 - example).abs() < 1e-12);
}

#[test]
fn ae_bounds_flag_large_coupling() {
    let b = dims_ae_phi(PI / 2.0, 0.7, 1e6);
    assert!(!b.valid);
    assert!(!dims_ae_phi(PI / 2.0, 0.1, 4.0).valid);
}

#[test]
fn all_phi_bounds_at_band_centre() {
    let b = dims_all_phi(PI / 2.0, 0.1, 1e6);
    assert!((b.alpha1prime - 0.992_037_934_498_44).abs() < 1e-13, "{}", b.alpha1prime);
    assert!((b.alpha2prime - 0.999_984_109_044_17).abs() < 1e-13, "{}", b.alpha2prime);
    assert!(b.valid);
    assert!(b.alpha1prime >= 0.9 && b.alpha2prime <= 1.0 - 1e-6);
}

#[test]
fn all_phi_flags_small_gamma() {
    // the correction term swamps ln(1 + v_k²/4) when γ is small
    let b = dims_all_phi(PI / 2.0, 0.1, 6.0);
    assert!(b.eps_k <= 0.0);
    assert!(!b.valid);
}

#[test]
fn random_dimension_at_band_centre() {
    let r = random_dimension(0.0, 0.5, 2.0).unwrap();
    assert!((r.dimension - 0.912_537_158_749_66).abs() < 1e-13);
    let (lo, hi) = r.window.unwrap();
    assert!((hi - 1.936_491_673_103_71).abs() < 1e-13);
    assert_eq!(lo, -hi);
    assert!(random_dimension(0.0, 2.0, 2.0).unwrap().window.is_none());
    for e in [-1.5, -0.3, 0.0, 0.9, 1.7] {
        let d = random_dimension(e, 0.5, 2.0).unwrap().dimension;
        assert!(d > 0.0 && d < 1.0);
    }
}

#[test]
fn appendix_alpha_sine_case() {
    let a = appendix_alpha(1.0, 0.0, 0.0, 1e6, None).unwrap();
    assert!((a - 0.963_809_52).abs() < 5e-9, "{a}");
    let mut prev = f64::INFINITY;
    for i in 1..20 {
        let a = appendix_alpha(0.05 * i as f64, 0.01, 0.02, 1e6, None).unwrap();
        assert!(a < prev);
        prev = a;
    }
}

#[test]
fn appendix_alpha_general_profile() {
    // sin 2x has M = 18, unit amplitude, and twice the slope of sin
    let g = PeriodicProfile::sine2();
    let a = appendix_alpha(1.0, 0.0, 0.0, 1e6, Some(&g)).unwrap();
    let expect = 1.0 - (1.0 - 2.0 * (18.0f64 / 1e6).ln_1p()) / (2.0 * 1e6f64.ln());
    assert!((a - expect).abs() < 1e-14);
    assert!(appendix_alpha(PI * 0.2 / 0.9, 0.1, 0.1, 1e6, Some(&g)).is_err());
}

#[test]
fn interval_report_structure() {
    let r = interval_constants(1.0, 1.5, 0.2, 10.0).unwrap();
    assert!(r.product_defect().abs() < 1e-12);
    assert!(r.d1_ratio < r.c5 && r.c5 < 1.0 && 1.0 < r.c6 && r.c6 < r.d2_ratio);
    assert!(r.c1 < r.d1 && r.d2 < r.c2);
    assert!(r.c7 <= (r.d2_ratio - r.d1_ratio) / r.d1_ratio);
    assert!(r.valid.regime && r.valid.d1_positive);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["C0", "C3", "C7prime", "D1", "D2", "w1", "w2", "alpha1", "alpha2prime", "eps_k", "alpha_eps"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert!(interval_constants(1.0, 1.5, 0.2, 2.0).is_err());
    assert_eq!(interval_constants(0.0, 1.5, 0.2, 10.0).unwrap_err().kind(), "DomainError");
}

#[test]
fn example_rows_inside_enclosures() {
    for row in example_table(0.1, 1e6, -1.9, 1.9, 100).unwrap() {
        assert!(row.ae_inside, "{row:?}");
        assert!(row.all_inside, "{row:?}");
        let literal = 1.0 - (1.0 + 1.0 / (100.0 * (4.0 - row.e * row.e))).ln() / (6.0 * 10f64.ln());
        assert!((row.alpha1 - literal).abs() < 1e-12 && (row.alpha2 - literal).abs() < 1e-12);
        assert!(row.alpha1prime >= 0.9 && row.alpha2prime <= 1.0 - 1e-6);
    }
}

#[test]
fn derivative_ratio_settles_in_corridor() {
    let r = interval_constants(1.0, 1.5, 0.2, 10.0).unwrap();
    let scan = ratio_scan(1.0, 1.5, 0.2, 10, 30, 40, (r.d1_ratio - 0.01, r.d2_ratio + 0.01)).unwrap();
    assert!(scan_n0(&scan) <= 10);
    // once inside, ψ is confined to the narrow fixed-point corridor
    let strict = ratio_scan(1.0, 1.5, 0.2, 10, 30, 40, (r.d1_ratio, r.d2_ratio)).unwrap();
    assert!(scan_n0(&strict) < 30);
}
