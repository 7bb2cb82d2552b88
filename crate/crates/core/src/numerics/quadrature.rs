//! Gauss–Legendre rules, composite panel rules and tensor-product cubature.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Largest number of dimensions accepted by [`integrate_nd`].
pub const MAX_TENSOR_DIMS: usize = 4;

/// A quadrature rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of points.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(
        &self,
        a: f64,
        b: f64,
        mut f: F,
    ) -> Complex64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }

    /// Composite rule: `[a, b]` is split into panels no wider than `max_width`.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        max_width: f64,
        mut f: F,
    ) -> f64 {
        if b <= a {
            return 0.0;
        }
        let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                let hi = if k + 1 == panels { b } else { lo + h };
                self.integrate(lo, hi, &mut f)
            })
            .sum()
    }
}

/// Gauss–Legendre rule with `n` points, nodes from Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(invalid("Gauss-Legendre rule needs at least one point"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, descending from +1
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        order: n,
    })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor-product Gauss–Legendre value of `f` over a box of at most
/// [`MAX_TENSOR_DIMS`] dimensions.
pub fn integrate_nd<F>(f: F, bounds: &[(f64, f64)], rule: &QuadratureRule) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    let k = bounds.len();
    if k > MAX_TENSOR_DIMS {
        return Err(Error::DimensionTooLarge {
            dims: k,
            max: MAX_TENSOR_DIMS,
        });
    }
    if k == 0 {
        return Ok(f(&[]));
    }
    let axes: Vec<Vec<(f64, f64)>> = bounds
        .iter()
        .map(|&(a, b)| rule.mapped(a, b).collect())
        .collect();
    let n = rule.order();
    let mut idx = vec![0usize; k];
    let mut point = vec![0.0; k];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            point[d] = axes[d][i].0;
            w *= axes[d][i].1;
        }
        total += f(&point) * w;
        // odometer increment
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == k {
                return Ok(total);
            }
        }
    }
}

/// Composite Gauss–Legendre on `(0, 1)` with panels graded geometrically
/// toward both endpoints. Handles integrable algebraic and logarithmic
/// endpoint singularities. The integrand receives `(t, 1 - t)` with the
/// complement computed without cancellation on the right half.
pub fn integrate_unit_graded<F>(rule: &QuadratureRule, levels: usize, ratio: f64, mut f: F) -> f64
where
    F: FnMut(f64, f64) -> f64,
{
    let mut total = 0.0;
    // left half: panels [ratio^{k+1}/2, ratio^k/2]
    let mut hi = 0.5;
    for _ in 0..levels {
        let lo = hi * ratio;
        total += rule.integrate(lo, hi, |t| f(t, 1.0 - t));
        hi = lo;
    }
    // right half, parametrised by s = 1 - t
    let mut hi = 0.5;
    for _ in 0..levels {
        let lo = hi * ratio;
        total += rule.integrate(lo, hi, |s| f(1.0 - s, s));
        hi = lo;
    }
    total
}
