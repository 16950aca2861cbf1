//! Weighted linear least squares with optional exact-equality rows.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::AnalysisError;

/// Solution of `min Σ w_i (y_i − x_i·β)²`, optionally subject to
/// `x_j·β = y_j` for the rows in `exact`.
#[derive(Debug, Clone)]
pub(crate) struct LinearSolution {
    pub coef: DVector<f64>,
    /// `(XᵀWX)⁻¹`, or the parameter block of the bordered inverse when
    /// equality rows are present. Not scaled by the residual variance.
    pub cov_unscaled: DMatrix<f64>,
    /// Weighted residual sum of squares over the weighted rows.
    pub rss: f64,
    /// Weighted rows minus free parameters.
    pub dof: usize,
}

impl LinearSolution {
    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.rss / self.dof as f64
        }
    }

    /// Covariance multiplied by the reduced χ².
    pub fn cov_scaled(&self) -> DMatrix<f64> {
        &self.cov_unscaled * self.reduced_chi2()
    }
}

/// `design` has one row per observation. Rows with zero weight that are
/// not listed in `exact` do not contribute.
pub(crate) fn solve(
    design: &DMatrix<f64>,
    y: &[f64],
    weights: &[f64],
    exact: &[usize],
) -> Result<LinearSolution, AnalysisError> {
    let (n, p) = design.shape();
    assert_eq!(n, y.len());
    assert_eq!(n, weights.len());
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(AnalysisError::InvalidInput(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let free: Vec<usize> = (0..n)
        .filter(|i| weights[*i] > 0.0 && !exact.contains(i))
        .collect();
    if free.is_empty() {
        return Err(AnalysisError::ZeroWeights);
    }
    let k = exact.len();
    if k > p {
        return Err(AnalysisError::Underdetermined {
            points: n,
            parameters: p,
        });
    }
    if free.len() + k < p {
        return Err(AnalysisError::Underdetermined {
            points: free.len() + k,
            parameters: p,
        });
    }

    // Rank check on the whitened design to catch degenerate grids.
    let mut whitened = DMatrix::zeros(free.len() + k, p);
    for (r, &i) in free.iter().enumerate() {
        let s = weights[i].sqrt();
        for c in 0..p {
            whitened[(r, c)] = s * design[(i, c)];
        }
    }
    for (r, &i) in exact.iter().enumerate() {
        for c in 0..p {
            whitened[(free.len() + r, c)] = design[(i, c)];
        }
    }
    let sv = whitened.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if !(smax > 0.0) || sv.min() <= 1e-12 * smax {
        return Err(AnalysisError::Singular);
    }

    let mut a = DMatrix::zeros(p, p);
    let mut rhs = DVector::zeros(p);
    for &i in &free {
        let row = design.row(i);
        let w = weights[i];
        a += w * row.transpose() * row;
        rhs += w * y[i] * row.transpose();
    }

    let m = p + k;
    let mut kkt = DMatrix::zeros(m, m);
    kkt.view_mut((0, 0), (p, p)).copy_from(&a);
    let mut b = DVector::zeros(m);
    b.rows_mut(0, p).copy_from(&rhs);
    for (r, &i) in exact.iter().enumerate() {
        for c in 0..p {
            kkt[(p + r, c)] = design[(i, c)];
            kkt[(c, p + r)] = design[(i, c)];
        }
        b[p + r] = y[i];
    }
    let inv = kkt.try_inverse().ok_or(AnalysisError::Singular)?;
    let sol = &inv * b;
    let coef = sol.rows(0, p).into_owned();
    let cov_unscaled = inv.view((0, 0), (p, p)).into_owned();

    let fitted: Vec<f64> = (0..n).map(|i| (design.row(i) * &coef)[0]).collect();
    let rss = free
        .iter()
        .map(|&i| weights[i] * (y[i] - fitted[i]).powi(2))
        .sum();
    Ok(LinearSolution {
        coef,
        cov_unscaled,
        rss,
        dof: free.len() - (p - k),
    })
}

/// Two-sided Student-t quantile for confidence `level` with `dof` degrees
/// of freedom.
pub(crate) fn t_quantile(level: f64, dof: usize) -> f64 {
    if dof == 0 {
        return f64::NAN;
    }
    let t = StudentsT::new(0.0, 1.0, dof as f64).expect("positive degrees of freedom");
    t.inverse_cdf(0.5 + level / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_design(x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { x[i] } else { 1.0 })
    }

    #[test]
    fn ordinary_line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.1, 4.9, 7.0];
        let s = solve(&line_design(&x), &y, &[1.0; 4], &[]).unwrap();
        // Closed form: slope = Sxy/Sxx, intercept = ȳ − slope x̄.
        let slope = (0..4).map(|i| (x[i] - 1.5) * (y[i] - 4.0)).sum::<f64>() / 5.0;
        assert!((s.coef[0] - slope).abs() < 1e-12);
        assert!((s.coef[1] - (4.0 - slope * 1.5)).abs() < 1e-12);
        assert_eq!(s.dof, 2);
        assert!((s.cov_unscaled[(0, 0)] - 1.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn exact_row_is_honoured() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 2.5, 2.9, 4.4];
        let s = solve(&line_design(&x), &y, &[0.0, 1.0, 1.0, 1.0], &[0]).unwrap();
        assert!((s.coef[0] + s.coef[1] - 1.0).abs() < 1e-12);
        assert_eq!(s.dof, 2);
        // Same as fitting a line through (1, 1): y − 1 = β (x − 1).
        let beta = (1..4).map(|i| (x[i] - 1.0) * (y[i] - 1.0)).sum::<f64>()
            / (1..4).map(|i| (x[i] - 1.0).powi(2)).sum::<f64>();
        assert!((s.coef[0] - beta).abs() < 1e-12);
    }

    #[test]
    fn degenerate_design_is_singular() {
        let d = line_design(&[2.0, 2.0, 2.0]);
        assert!(matches!(
            solve(&d, &[1.0, 1.0, 1.0], &[1.0; 3], &[]),
            Err(AnalysisError::Singular)
        ));
        assert!(matches!(
            solve(&line_design(&[1.0, 2.0]), &[1.0, 1.0], &[0.0, 0.0], &[]),
            Err(AnalysisError::ZeroWeights)
        ));
    }

    #[test]
    fn t_quantiles() {
        assert!((t_quantile(0.99, 6) - 3.707_428).abs() < 1e-5);
        assert!((t_quantile(0.95, 1000) - 1.962_339).abs() < 1e-5);
    }
}
