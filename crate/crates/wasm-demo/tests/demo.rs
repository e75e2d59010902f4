use tcomp_wasm_demo::{complete_trial, init_error_curve, trim_rows};

#[test]
fn completion_recovers_at_high_alpha() {
    let c = complete_trial(12, 1, 10.0, 3, 300).unwrap();
    assert!(c.success(), "{}", c.rel_error());
    assert!(c.converged());
    assert_eq!(c.n(), 416);
    let obj = c.objective();
    assert_eq!(obj.len(), c.gradient_norm().len());
    assert!(obj.windows(2).all(|w| w[1] <= w[0]));
    assert!(c.init_rel_error() > c.rel_error());
}

#[test]
fn init_error_shrinks_with_alpha() {
    let curve = init_error_curve(20, 2, &[1.0, 8.0], 4).unwrap();
    assert_eq!(curve.len(), 2);
    assert!(curve[1] < curve[0], "{curve:?}");
}

#[test]
fn trimming_caps_row_norms() {
    let (d, r, mu0) = (20, 2, 1.0);
    let rows = trim_rows(d, r, 3.0, mu0, 1).unwrap();
    assert_eq!(rows.len(), 2 * d);
    let (before, after) = rows.split_at(d);
    let cap = 3.0 * mu0 * r as f64 / d as f64;
    assert!(before[0] > cap);
    assert!(after.iter().all(|&v| v <= cap + 1e-12));
    assert!((before.iter().sum::<f64>() - r as f64).abs() < 1e-12);
    assert!((after.iter().sum::<f64>() - r as f64).abs() < 1e-12);
}

#[test]
fn rejects_bad_input() {
    assert!(complete_trial(0, 1, 1.0, 0, 10).is_err());
    assert!(complete_trial(100, 1, 1.0, 0, 10).is_err());
    assert!(complete_trial(10, 1, -1.0, 0, 10).is_err());
    assert!(init_error_curve(10, 1, &[1.0], 0).is_err());
    assert!(trim_rows(10, 11, 1.0, 1.0, 0).is_err());
    assert!(trim_rows(10, 1, 1.0, 0.5, 0).is_err());
}
