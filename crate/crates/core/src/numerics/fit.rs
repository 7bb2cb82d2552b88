//! Linear least squares through the normal equations.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Least-squares coefficients for a linear combination of basis functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// One-sigma standard errors from the residual variance (zero when the
    /// fit has no degrees of freedom left).
    pub standard_errors: Vec<f64>,
    pub residual_norm: f64,
}

/// Fits `ys ≈ Σ c_k basis_k(xs)`. Columns are equilibrated before the normal
/// equations are formed and solved with full pivoting.
pub fn fit_linear(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<LinearFit> {
    let m = xs.len();
    let p = basis.len();
    if ys.len() != m {
        return Err(invalid("xs and ys differ in length"));
    }
    if p == 0 || m < p {
        return Err(invalid(format!(
            "{m} points cannot determine {p} coefficients"
        )));
    }
    let design: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| xs.iter().map(|&x| b(x)).collect())
        .collect();
    let scales: Vec<f64> = design
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if scales.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::SingularFit(
            "a basis function vanishes on every point".into(),
        ));
    }
    let cols: Vec<Vec<f64>> = design
        .iter()
        .zip(&scales)
        .map(|(col, s)| col.iter().map(|v| v / s).collect())
        .collect();
    let mut normal = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for a in 0..p {
        for b in 0..p {
            normal[a][b] = cols[a].iter().zip(&cols[b]).map(|(u, v)| u * v).sum();
        }
        rhs[a] = cols[a].iter().zip(ys).map(|(u, y)| u * y).sum();
    }
    let lu = FullPivot::factor(normal)?;
    let scaled = lu.solve(&rhs);
    let coefficients: Vec<f64> = scaled.iter().zip(&scales).map(|(c, s)| c / s).collect();

    let residual_sq: f64 = (0..m)
        .map(|i| {
            let model: f64 = coefficients
                .iter()
                .zip(&design)
                .map(|(c, col)| c * col[i])
                .sum();
            (ys[i] - model).powi(2)
        })
        .sum();
    let dof = m - p;
    let sigma2 = if dof > 0 {
        residual_sq / dof as f64
    } else {
        0.0
    };
    let standard_errors = (0..p)
        .map(|k| {
            let mut unit = vec![0.0; p];
            unit[k] = 1.0;
            let col = lu.solve(&unit);
            (sigma2 * col[k]).max(0.0).sqrt() / scales[k]
        })
        .collect();
    Ok(LinearFit {
        coefficients,
        standard_errors,
        residual_norm: residual_sq.sqrt(),
    })
}

/// Gaussian elimination with full pivoting, kept for repeated solves.
struct FullPivot {
    lu: Vec<Vec<f64>>,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
}

impl FullPivot {
    fn factor(mut a: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.len();
        let mut row_perm: Vec<usize> = (0..n).collect();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let (mut pr, mut pc, mut best) = (k, k, -1.0);
            for (i, row) in a.iter().enumerate().skip(k) {
                for (j, v) in row.iter().enumerate().skip(k) {
                    if v.abs() > best {
                        best = v.abs();
                        pr = i;
                        pc = j;
                    }
                }
            }
            if best <= 1e-12 * scale {
                return Err(Error::SingularFit(format!(
                    "rank-deficient design (pivot {best:.3e})"
                )));
            }
            a.swap(k, pr);
            row_perm.swap(k, pr);
            for row in a.iter_mut() {
                row.swap(k, pc);
            }
            col_perm.swap(k, pc);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for j in k + 1..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        Ok(FullPivot {
            lu: a,
            row_perm,
            col_perm,
        })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        let mut y: Vec<f64> = self.row_perm.iter().map(|&r| b[r]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.lu[i][j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.lu[i][j] * y[j];
            }
            y[i] /= self.lu[i][i];
        }
        let mut x = vec![0.0; n];
        for (k, &c) in self.col_perm.iter().enumerate() {
            x[c] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_log_model() {
        let xs: Vec<f64> = (1..=8).map(|k| 10.0 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x.ln() + 3.0).collect();
        let fit = fit_linear(&xs, &ys, &[&|_| 1.0, &|x: f64| x.ln()]).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-10);
        assert!(fit.residual_norm < 1e-10);
    }

    #[test]
    fn constant_data() {
        let fit = fit_linear(&[1.0, 2.0, 5.0], &[4.5, 4.5, 4.5], &[&|_| 1.0]).unwrap();
        assert!((fit.coefficients[0] - 4.5).abs() < 1e-14);
    }

    #[test]
    fn noisy_log_coefficient() {
        let b = -1.0 / std::f64::consts::PI.powi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let xs: Vec<f64> = (0..40).map(|k| 10.0 * 1.1f64.powi(k)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| b * x.ln() * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let fit = fit_linear(&xs, &ys, &[&|x: f64| x.ln()]).unwrap();
        assert!(((fit.coefficients[0] - b) / b).abs() < 0.03);
        assert!(fit.standard_errors[0] > 0.0);
    }

    #[test]
    fn rank_deficient() {
        let err =
            fit_linear(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[&|_| 1.0, &|_| 2.0]).unwrap_err();
        assert!(matches!(err, Error::SingularFit(_)));
    }

    #[test]
    fn too_few_points() {
        assert!(fit_linear(&[1.0], &[1.0], &[&|_| 1.0, &|x| x]).is_err());
    }
}
