//! Fit checks on the snip_pairs fixture against independent oracles.

mod common;

use scibase::analytics::{self, SvrConfig};

fn load_pairs() -> (Vec<f64>, Vec<f64>) {
    let mut reader = csv::Reader::from_path("tests/fixtures/snip_pairs.csv").unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.unwrap();
        x.push(record[0].parse().unwrap());
        y.push(record[1].parse().unwrap());
    }
    assert_eq!(x.len(), 20);
    (x, y)
}

#[test]
fn linear_matches_normal_equation_oracle() {
    let (x, y) = load_pairs();
    let fit = analytics::linear_fit(&x, &y).unwrap();
    let (slope, intercept) = common::oracle_linear_fit(&x, &y);
    assert!((fit.coefficients[0] - slope).abs() < 1e-9);
    assert!((fit.coefficients[1] - intercept).abs() < 1e-9);
}

#[test]
fn poly_matches_normal_equation_oracle() {
    let (x, y) = load_pairs();
    let fit = analytics::poly_fit(&x, &y, 2).unwrap();
    let oracle = common::oracle_poly_fit(&x, &y, 2);
    for (a, b) in fit.coefficients.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn exp_matches_grid_oracle() {
    let (x, y) = load_pairs();
    let fit = analytics::exp_fit(&x, &y).unwrap();
    let coarse = common::oracle_exp_fit(&x, &y, (0.5, 4.0), (0.1, 1.0), 400);
    let (a, b) = common::oracle_exp_fit(
        &x,
        &y,
        (coarse.0 - 0.05, coarse.0 + 0.05),
        (coarse.1 - 0.02, coarse.1 + 0.02),
        1000,
    );
    assert!((fit.coefficients[0] - a).abs() < 1e-4, "{} vs {a}", fit.coefficients[0]);
    assert!((fit.coefficients[1] - b).abs() < 1e-4, "{} vs {b}", fit.coefficients[1]);
}

#[test]
fn tuned_svr_stays_near_least_squares() {
    let (x, y) = load_pairs();
    let linear = analytics::linear_fit(&x, &y).unwrap();
    let svr = analytics::svr_fit(
        &x,
        &y,
        &SvrConfig {
            epsilon: 0.70,
            cost: 4.0,
            ..SvrConfig::default()
        },
    )
    .unwrap();
    assert!(svr.rmse <= linear.rmse * 1.10, "{} vs {}", svr.rmse, linear.rmse);
}

#[test]
fn tight_tube_svr_approaches_least_squares() {
    let (x, y) = load_pairs();
    let linear = analytics::linear_fit(&x, &y).unwrap();
    let svr = analytics::svr_fit(
        &x,
        &y,
        &SvrConfig {
            epsilon: 1e-4,
            cost: 100.0,
            max_iterations: 20_000,
            ..SvrConfig::default()
        },
    )
    .unwrap();
    assert!(svr.rmse <= linear.rmse * 1.05, "{} vs {}", svr.rmse, linear.rmse);
}
