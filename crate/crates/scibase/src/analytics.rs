//! Curve fitting and correlation tools for validating factor
//! relationships: linear, polynomial and exponential least squares, a
//! primal epsilon-insensitive support vector regressor, and normalized
//! cross-correlation between metric series.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("x and y lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("singular normal equations, data does not determine the fit")]
    Singular,
    #[error("exponential fit requires strictly positive y values")]
    NonPositiveY,
    #[error("zero-variance series, correlation undefined")]
    ZeroVariance,
    #[error("{0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitKind {
    Linear,
    Polynomial,
    Exponential,
    Svr,
}

/// A fitted curve with its goodness-of-fit statistics over the training
/// points.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub kind: FitKind,
    /// Linear: [slope, intercept]. Polynomial: ascending powers.
    /// Exponential y = a * exp(b x): [a, b]. SVR: [slope, intercept].
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub rmse: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        match self.kind {
            FitKind::Linear | FitKind::Svr => {
                self.coefficients[0] * x + self.coefficients[1]
            }
            FitKind::Polynomial => self
                .coefficients
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * x + c),
            FitKind::Exponential => self.coefficients[0] * (self.coefficients[1] * x).exp(),
        }
    }
}

fn check_lengths(x: &[f64], y: &[f64], needed: usize) -> Result<(), FitError> {
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < needed {
        return Err(FitError::TooFewPoints {
            needed,
            got: x.len(),
        });
    }
    Ok(())
}

fn goodness(x: &[f64], y: &[f64], predict: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(x, y)| (y - predict(*x)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        0.0
    } else {
        1.0 - ss_res / ss_tot
    };
    (r_squared, (ss_res / n).sqrt())
}

/// Ordinary least squares line, coefficients [slope, intercept].
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<FitResult, FitError> {
    check_lengths(x, y, 2)?;
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(FitError::Singular);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let (r_squared, rmse) = goodness(x, y, |v| slope * v + intercept);
    Ok(FitResult {
        kind: FitKind::Linear,
        coefficients: vec![slope, intercept],
        r_squared,
        rmse,
        converged: true,
    })
}

/// Solve the square system `a x = b` by Gaussian elimination with partial
/// pivoting.
#[allow(clippy::needless_range_loop)]
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, FitError> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(FitError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut solution = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * solution[k];
        }
        solution[row] = acc / a[row][row];
    }
    Ok(solution)
}

/// Least-squares polynomial of the given degree via the normal equations,
/// coefficients in ascending powers.
pub fn poly_fit(x: &[f64], y: &[f64], degree: usize) -> Result<FitResult, FitError> {
    check_lengths(x, y, degree + 1)?;
    let terms = degree + 1;
    let mut power_sums = vec![0.0; 2 * degree + 1];
    for v in x {
        let mut p = 1.0;
        for sum in &mut power_sums {
            *sum += p;
            p *= v;
        }
    }
    let mut rhs = vec![0.0; terms];
    for (v, w) in x.iter().zip(y) {
        let mut p = 1.0;
        for r in &mut rhs {
            *r += p * w;
            p *= v;
        }
    }
    let matrix: Vec<Vec<f64>> = (0..terms)
        .map(|i| (0..terms).map(|j| power_sums[i + j]).collect())
        .collect();
    let coefficients = solve(matrix, rhs)?;
    let predict = |v: f64| coefficients.iter().rev().fold(0.0, |acc, c| acc * v + c);
    let (r_squared, rmse) = goodness(x, y, predict);
    Ok(FitResult {
        kind: FitKind::Polynomial,
        coefficients,
        r_squared,
        rmse,
        converged: true,
    })
}

/// Fit y = a * exp(b x): log-linearize for a starting point, then apply
/// one Gauss-Newton step in the original space and keep it only if it
/// lowers the squared error.
pub fn exp_fit(x: &[f64], y: &[f64]) -> Result<FitResult, FitError> {
    check_lengths(x, y, 2)?;
    if y.iter().any(|v| *v <= 0.0) {
        return Err(FitError::NonPositiveY);
    }
    let log_y: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let line = linear_fit(x, &log_y)?;
    let (mut a, mut b) = (line.coefficients[1].exp(), line.coefficients[0]);

    let sse = |a: f64, b: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(x, y)| (y - a * (b * x).exp()).powi(2))
            .sum()
    };
    let base = sse(a, b);
    // One Gauss-Newton step: residual r = y - a e^{bx}, Jacobian columns
    // d/da = e^{bx}, d/db = a x e^{bx}.
    let mut jtj = vec![vec![0.0; 2]; 2];
    let mut jtr = vec![0.0; 2];
    for (xi, yi) in x.iter().zip(y) {
        let e = (b * xi).exp();
        let (ja, jb) = (e, a * xi * e);
        let r = yi - a * e;
        jtj[0][0] += ja * ja;
        jtj[0][1] += ja * jb;
        jtj[1][0] += jb * ja;
        jtj[1][1] += jb * jb;
        jtr[0] += ja * r;
        jtr[1] += jb * r;
    }
    if let Ok(step) = solve(jtj, jtr) {
        let (na, nb) = (a + step[0], b + step[1]);
        if na > 0.0 && nb.is_finite() && sse(na, nb) < base {
            a = na;
            b = nb;
        }
    }
    let (r_squared, rmse) = goodness(x, y, |v| a * (b * v).exp());
    Ok(FitResult {
        kind: FitKind::Exponential,
        coefficients: vec![a, b],
        r_squared,
        rmse,
        converged: true,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SvrConfig {
    /// Half-width of the insensitive tube.
    pub epsilon: f64,
    /// Penalty weight on tube violations.
    pub cost: f64,
    pub max_iterations: usize,
    /// Stop once the objective improvement stays below this.
    pub tolerance: f64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            cost: 10.0,
            max_iterations: 5000,
            tolerance: 1e-10,
        }
    }
}

/// Linear support vector regression in the primal: minimize the
/// epsilon-insensitive loss `cost * sum max(0, |r_i| - epsilon)` by
/// subgradient descent, warm-started at the least-squares line. Returns
/// the iterate with the best objective seen, so a start whose residuals
/// all sit inside the tube is returned unchanged.
pub fn svr_fit(x: &[f64], y: &[f64], config: &SvrConfig) -> Result<FitResult, FitError> {
    check_lengths(x, y, 2)?;
    if config.epsilon <= 0.0 || config.cost <= 0.0 {
        return Err(FitError::BadConfig(format!(
            "epsilon {} and cost {} must both be positive",
            config.epsilon, config.cost
        )));
    }
    let warm = linear_fit(x, y)?;
    let (mut w, mut b) = (warm.coefficients[0], warm.coefficients[1]);

    let n = x.len() as f64;
    let objective = |w: f64, b: f64| -> f64 {
        let loss: f64 = x
            .iter()
            .zip(y)
            .map(|(x, y)| ((y - (w * x + b)).abs() - config.epsilon).max(0.0))
            .sum();
        config.cost * loss
    };

    let (mut best_w, mut best_b) = (w, b);
    let mut best_obj = objective(w, b);
    let x_scale = x.iter().map(|v| v.abs()).fold(1.0f64, f64::max);
    let mut stale = 0usize;
    for iter in 0..config.max_iterations {
        let mut gw = 0.0;
        let mut gb = 0.0;
        for (xi, yi) in x.iter().zip(y) {
            let r = yi - (w * xi + b);
            if r.abs() > config.epsilon {
                let sign = r.signum();
                gw -= config.cost * sign * xi;
                gb -= config.cost * sign;
            }
        }
        let eta = 1.0 / (config.cost * n * x_scale * (1.0 + iter as f64).sqrt());
        w -= eta * gw;
        b -= eta * gb;
        let obj = objective(w, b);
        if obj < best_obj - config.tolerance {
            best_obj = obj;
            best_w = w;
            best_b = b;
            stale = 0;
        } else {
            stale += 1;
            if stale >= 20 {
                break;
            }
        }
    }

    let (r_squared, rmse) = goodness(x, y, |v| best_w * v + best_b);
    Ok(FitResult {
        kind: FitKind::Svr,
        coefficients: vec![best_w, best_b],
        r_squared,
        rmse,
        converged: stale >= 20,
    })
}

/// Normalized cross-correlation of two equal-length series at every lag in
/// `[-max_lag, max_lag]`. A positive lag shifts `b` forward relative to
/// `a`. Either series having zero variance is an error; degenerate
/// per-lag overlaps (fewer than two points or locally constant) yield 0.
pub fn cross_correlation(
    a: &[f64],
    b: &[f64],
    max_lag: i64,
) -> Result<std::collections::BTreeMap<i64, f64>, FitError> {
    check_lengths(a, b, 2)?;
    if max_lag < 0 || max_lag >= a.len() as i64 {
        return Err(FitError::BadConfig(format!(
            "max_lag {max_lag} must be in [0, {})",
            a.len()
        )));
    }
    for series in [a, b] {
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        if series.iter().all(|v| *v == mean) {
            return Err(FitError::ZeroVariance);
        }
    }
    let n = a.len() as i64;
    let mut out = std::collections::BTreeMap::new();
    for lag in -max_lag..=max_lag {
        let pairs: Vec<(f64, f64)> = (0..n)
            .filter_map(|i| {
                let j = i + lag;
                if (0..n).contains(&j) {
                    Some((a[i as usize], b[j as usize]))
                } else {
                    None
                }
            })
            .collect();
        out.insert(lag, pearson(&pairs));
    }
    Ok(out)
}

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    if pairs.len() < 2 {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mean_a = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_b = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (a, b) in pairs {
        let (da, db) = (a - mean_a, b - mean_b);
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return 0.0;
    }
    cov / (var_a.sqrt() * var_b.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.coefficients[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
        assert!(fit.rmse < 1e-12);
    }

    #[test]
    fn linear_constant_y_has_zero_r_squared() {
        let fit = linear_fit(&[0.0, 1.0, 2.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(fit.coefficients, vec![0.0, 5.0]);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn linear_vertical_data_is_singular() {
        assert!(matches!(
            linear_fit(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(FitError::Singular)
        ));
    }

    #[test]
    fn poly_recovers_quadratic() {
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - v + 2.0 * v * v).collect();
        let fit = poly_fit(&x, &y, 2).unwrap();
        assert_relative_eq!(fit.coefficients[0], 3.0, max_relative = 1e-9);
        assert_relative_eq!(fit.coefficients[1], -1.0, max_relative = 1e-9);
        assert_relative_eq!(fit.coefficients[2], 2.0, max_relative = 1e-9);
    }

    #[test]
    fn poly_degree_one_matches_linear() {
        let x = [0.0, 1.0, 2.0, 4.0];
        let y = [1.1, 2.9, 5.2, 8.8];
        let p = poly_fit(&x, &y, 1).unwrap();
        let l = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(p.coefficients[0], l.coefficients[1], max_relative = 1e-9);
        assert_relative_eq!(p.coefficients[1], l.coefficients[0], max_relative = 1e-9);
    }

    #[test]
    fn poly_underdetermined_errors() {
        assert!(poly_fit(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn exp_recovers_exact_curve() {
        let x: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 * (0.8 * v).exp()).collect();
        let fit = exp_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.coefficients[0], 1.5, max_relative = 1e-6);
        assert_relative_eq!(fit.coefficients[1], 0.8, max_relative = 1e-6);
    }

    #[test]
    fn exp_rejects_nonpositive_y() {
        assert!(matches!(
            exp_fit(&[0.0, 1.0], &[1.0, 0.0]),
            Err(FitError::NonPositiveY)
        ));
    }

    #[test]
    fn svr_keeps_zero_loss_warm_start() {
        // All residuals of the true line are zero, inside any tube.
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 1.7 * v + 0.9).collect();
        let fit = svr_fit(&x, &y, &SvrConfig::default()).unwrap();
        assert!(fit.rmse < 1e-9, "rmse {}", fit.rmse);
        assert_relative_eq!(fit.coefficients[0], 1.7, max_relative = 1e-9);
    }

    #[test]
    fn svr_ignores_in_tube_noise() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| 0.5 * v + 2.0 + if i % 2 == 0 { 0.05 } else { -0.05 })
            .collect();
        let fit = svr_fit(&x, &y, &SvrConfig::default()).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 0.05);
        assert!((fit.coefficients[1] - 2.0).abs() < 0.2);
    }

    #[test]
    fn cross_correlation_peaks_at_true_shift() {
        let a: Vec<f64> = (0..40).map(|i| ((i as f64) * 0.7).sin()).collect();
        let b: Vec<f64> = (0..40).map(|i| ((i as f64 - 3.0) * 0.7).sin()).collect();
        let table = cross_correlation(&a, &b, 5).unwrap();
        let (best_lag, best) = table
            .iter()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(l, v)| (*l, *v))
            .unwrap();
        assert_eq!(best_lag, 3);
        assert!(best > 0.99);
    }

    #[test]
    fn cross_correlation_identical_series() {
        let a: Vec<f64> = (0..10).map(|i| f64::from(i) * 0.3 + 1.0).collect();
        let table = cross_correlation(&a, &a, 2).unwrap();
        assert_relative_eq!(table[&0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn cross_correlation_rejects_constant_series() {
        let a = [1.0; 8];
        let b: Vec<f64> = (0..8).map(f64::from).collect();
        assert!(matches!(
            cross_correlation(&a, &b, 1),
            Err(FitError::ZeroVariance)
        ));
    }

    #[test]
    fn cross_correlation_negated_series() {
        let a: Vec<f64> = (0..10).map(|i| ((i as f64) * 0.9).cos()).collect();
        let b: Vec<f64> = a.iter().map(|v| -v).collect();
        let table = cross_correlation(&a, &b, 0).unwrap();
        assert_relative_eq!(table[&0], -1.0, max_relative = 1e-12);
    }

    #[test]
    fn exp_constant_y_gives_flat_curve() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let fit = exp_fit(&x, &[4.0, 4.0, 4.0, 4.0]).unwrap();
        assert_relative_eq!(fit.coefficients[0], 4.0, max_relative = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 0.0, epsilon = 1e-12);
    }
}
