//! Dense Hermitian eigenproblems.
//!
//! The general route is cyclic Jacobi on the real-symmetric `2n × 2n`
//! embedding `[[Re M, -Im M], [Im M, Re M]]`, whose spectrum is that of `M`
//! with every eigenvalue doubled. Large real-symmetric matrices (lattice
//! overlap matrices) go through Householder tridiagonalisation followed by
//! implicit QL.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::spectrum::Spectrum;

/// Relative tolerance for accepting an input as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Jacobi stops once the off-diagonal Frobenius norm is below this times `‖M‖_F`.
const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// A dense complex matrix with `entry(i, j) = conj(entry(j, i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Builds the matrix from its upper triangle; the lower triangle is the
    /// conjugate mirror and the diagonal keeps only its real part.
    pub fn from_upper<F>(n: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> Complex64,
    {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(f(i, i).re, 0.0);
            for j in i + 1..n {
                let z = f(i, j);
                data[i * n + j] = z;
                data[j * n + i] = z.conj();
            }
        }
        HermitianMatrix { n, data }
    }

    /// Real symmetric matrix from its upper triangle.
    pub fn real_symmetric<F>(n: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> f64,
    {
        Self::from_upper(n, |i, j| Complex64::new(f(i, j), 0.0))
    }

    /// Validates a full row-major matrix. Asymmetry beyond
    /// [`HERMITIAN_TOLERANCE`]`·max(1, ‖M‖_F)` is rejected.
    pub fn from_rows(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(invalid(format!(
                "expected {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        let norm = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tol = HERMITIAN_TOLERANCE * norm.max(1.0);
        for i in 0..n {
            for j in i..n {
                let d = (data[i * n + j] - data[j * n + i].conj()).norm();
                if d > tol || !data[i * n + j].re.is_finite() || !data[i * n + j].im.is_finite() {
                    return Err(invalid(format!(
                        "matrix is not Hermitian at ({i}, {j}): defect {d:.3e}"
                    )));
                }
            }
        }
        Ok(Self::from_upper(n, |i, j| data[i * n + j]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// Real parts in row-major order.
    pub fn real_part(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    fn embedding(&self) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n;
        let mut a = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = self.data[i * n + j];
                a[i * m + j] = z.re;
                a[(i + n) * m + (j + n)] = z.re;
                a[i * m + (j + n)] = -z.im;
                a[(i + n) * m + j] = z.im;
            }
        }
        a
    }
}

/// Cyclic Jacobi on a full symmetric row-major matrix. Returns eigenvalues
/// (unsorted) and, when requested, eigenvectors as columns of a row-major
/// matrix.
fn jacobi_symmetric(
    n: usize,
    mut a: Vec<f64>,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = want_vectors.then(|| {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    });
    let target = JACOBI_TOLERANCE * norm;
    let mut converged = n < 2 || norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            * 2.0;
        if off.sqrt() <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 || apq.abs() < 1e-18 * target {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_p = c * akp - s * akq;
                    let new_q = s * akp + c * akq;
                    a[k * n + p] = new_p;
                    a[p * n + k] = new_p;
                    a[k * n + q] = new_q;
                    a[q * n + k] = new_q;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>();
        if (2.0 * off).sqrt() > target {
            return Err(Error::AccuracyLoss(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Ok((values, v))
}

/// All eigenvalues of a Hermitian matrix in ascending order (cyclic Jacobi).
pub fn eigenvalues_hermitian(m: &HermitianMatrix) -> Result<Spectrum> {
    let n = m.dim();
    if n == 0 {
        return Err(invalid("empty matrix"));
    }
    if m.is_real() {
        let (vals, _) = jacobi_symmetric(n, m.real_part(), false)?;
        return Ok(Spectrum::unbounded(vals));
    }
    let (mut vals, _) = jacobi_symmetric(2 * n, m.embedding(), false)?;
    vals.sort_by(f64::total_cmp);
    let gap_tol = 1e-9 * m.frobenius_norm().max(1.0);
    let mut out = Vec::with_capacity(n);
    for pair in vals.chunks_exact(2) {
        if (pair[1] - pair[0]).abs() > gap_tol {
            return Err(Error::AccuracyLoss(format!(
                "embedded spectrum not paired: {} vs {}",
                pair[0], pair[1]
            )));
        }
        out.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(Spectrum::unbounded(out))
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors.
pub fn eigh(m: &HermitianMatrix) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let n = m.dim();
    if n == 0 {
        return Err(invalid("empty matrix"));
    }
    if m.is_real() {
        let (vals, vecs) = jacobi_symmetric(n, m.real_part(), true)?;
        let vecs = vecs.expect("vectors requested");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let values = order.iter().map(|&k| vals[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| {
                (0..n)
                    .map(|i| Complex64::new(vecs[i * n + k], 0.0))
                    .collect()
            })
            .collect();
        return Ok((values, vectors));
    }
    let big = 2 * n;
    let (vals, vecs) = jacobi_symmetric(big, m.embedding(), true)?;
    let vecs = vecs.expect("vectors requested");
    let mut order: Vec<usize> = (0..big).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let gap_tol = 1e-9 * m.frobenius_norm().max(1.0);

    let mut values = Vec::with_capacity(n);
    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < big {
        let mut end = start + 1;
        while end < big && vals[order[end]] - vals[order[end - 1]] <= gap_tol {
            end += 1;
        }
        let cluster = &order[start..end];
        if cluster.len() % 2 != 0 {
            return Err(Error::AccuracyLoss(
                "odd eigenvalue cluster in the real embedding".into(),
            ));
        }
        let want = cluster.len() / 2;
        let mean = cluster.iter().map(|&k| vals[k]).sum::<f64>() / cluster.len() as f64;
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(want);
        for &k in cluster {
            if basis.len() == want {
                break;
            }
            let mut z: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(vecs[i * big + k], vecs[(i + n) * big + k]))
                .collect();
            for b in &basis {
                let proj: Complex64 = b.iter().zip(&z).map(|(bi, zi)| bi.conj() * zi).sum();
                for (zi, bi) in z.iter_mut().zip(b) {
                    *zi -= proj * bi;
                }
            }
            let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.5 {
                for zi in z.iter_mut() {
                    *zi /= norm;
                }
                basis.push(z);
            }
        }
        if basis.len() != want {
            return Err(Error::AccuracyLoss(
                "could not recover complex eigenvectors".into(),
            ));
        }
        for b in basis {
            values.push(mean);
            vectors.push(b);
        }
        start = end;
    }
    Ok((values, vectors))
}

/// Eigenvalues of a real symmetric row-major matrix via Householder
/// tridiagonalisation and implicit QL. `O(n³)` with contiguous access; used
/// for matrices too large for Jacobi.
pub fn eigenvalues_symmetric(n: usize, mut a: Vec<f64>) -> Result<Spectrum> {
    if n == 0 || a.len() != n * n {
        return Err(invalid("matrix must be square and non-empty"));
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        // Householder on x = A[k+1.., k] (read from row k by symmetry)
        let m = n - k - 1;
        let x = &a[k * n + k + 1..k * n + n];
        let scale: f64 = x.iter().map(|t| t.abs()).sum();
        d[k] = a[k * n + k];
        if scale == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let mut sigma = 0.0;
        for (vi, &xi) in v[..m].iter_mut().zip(x) {
            *vi = xi / scale;
            sigma += *vi * *vi;
        }
        let alpha = if v[0] >= 0.0 {
            -sigma.sqrt()
        } else {
            sigma.sqrt()
        };
        e[k] = alpha * scale;
        v[0] -= alpha;
        let vnorm2 = sigma - 2.0 * alpha * (v[0] + alpha) + alpha * alpha;
        // vnorm2 = ‖x/scale - α e1‖² = σ - 2α x0 + α²
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // p = β B v, B = A[k+1.., k+1..]
        let off = k + 1;
        let mut pv = 0.0;
        for i in 0..m {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            let s: f64 = row.iter().zip(&v[..m]).map(|(r, vi)| r * vi).sum();
            p[i] = beta * s;
            pv += p[i] * v[i];
        }
        // w = p - (β/2)(pᵀv) v, stored in p
        let half = 0.5 * beta * pv;
        for i in 0..m {
            p[i] -= half * v[i];
        }
        for i in 0..m {
            let vi = v[i];
            let wi = p[i];
            let row = &mut a[(off + i) * n + off..(off + i) * n + n];
            for ((r, &vj), &wj) in row.iter_mut().zip(&v[..m]).zip(&p[..m]) {
                *r -= vi * wj + wi * vj;
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    d[n - 1] = a[(n - 1) * n + n - 1];
    e[n - 1] = 0.0;
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(Spectrum::unbounded(d))
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix
/// (`d` diagonal, `e[i]` couples `i` and `i + 1`). Eigenvalues end up in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    let scale = d.iter().chain(e.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    // clusters near zero stall at rounding level under the relative test
    let floor = f64::EPSILON * scale;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::AccuracyLoss(
                    "tridiagonal QL did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        HermitianMatrix::from_upper(n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn diagonal() {
        let m = HermitianMatrix::real_symmetric(
            3,
            |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 },
        );
        let s = eigenvalues_hermitian(&m).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_y() {
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        let m = HermitianMatrix::from_rows(2, vec![z, i, -i, z]).unwrap();
        let s = eigenvalues_hermitian(&m).unwrap();
        assert!((s.values()[0] + 1.0).abs() < 1e-14);
        assert!((s.values()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let err = HermitianMatrix::from_rows(2, vec![z, one, z, z]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    /// Real roots of the characteristic cubic by the trigonometric formula.
    fn cubic_roots(m: &HermitianMatrix) -> [f64; 3] {
        let g = |i, j| m.get(i, j);
        let tr = m.trace();
        let mut c2 = 0.0;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            c2 += g(i, i).re * g(j, j).re - g(i, j).norm_sqr();
        }
        let det = (g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
            - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0)))
        .re;
        // λ³ - tr λ² + c2 λ - det = 0, depressed with λ = y + tr/3
        let p = c2 - tr * tr / 3.0;
        let q = -2.0 * tr.powi(3) / 27.0 + tr * c2 / 3.0 - det;
        let r = (-p / 3.0).sqrt();
        let phi = ((-q / 2.0) / r.powi(3)).clamp(-1.0, 1.0).acos();
        let mut roots = [0.0; 3];
        for (k, root) in roots.iter_mut().enumerate() {
            *root =
                2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() + tr / 3.0;
        }
        roots.sort_by(f64::total_cmp);
        roots
    }

    #[test]
    fn random_three_by_three_matches_cubic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_hermitian(3, &mut rng);
            let s = eigenvalues_hermitian(&m).unwrap();
            let roots = cubic_roots(&m);
            for (a, b) in s.values().iter().zip(roots) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn trace_and_frobenius_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 4, 9, 17] {
            let m = random_hermitian(n, &mut rng);
            let s = eigenvalues_hermitian(&m).unwrap();
            let sum: f64 = s.values().iter().sum();
            let sq: f64 = s.values().iter().map(|x| x * x).sum();
            assert!((sum - m.trace()).abs() < 1e-10);
            assert!((sq - m.frobenius_norm().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn unitary_conjugation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let m = random_hermitian(n, &mut rng);
        // unitary from eigenvectors of another random Hermitian matrix
        let (_, u) = eigh(&random_hermitian(n, &mut rng)).unwrap();
        let conj = HermitianMatrix::from_upper(n, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    acc += u[i][a].conj() * m.get(a, b) * u[j][b];
                }
            }
            acc
        });
        // rows of `conj` are indexed by eigenvectors: conj = Uᴴ M U
        let s1 = eigenvalues_hermitian(&m).unwrap();
        let s2 = eigenvalues_hermitian(&conj).unwrap();
        for (a, b) in s1.values().iter().zip(s2.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn eigh_vectors_satisfy_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 5, 8] {
            let m = random_hermitian(n, &mut rng);
            let (vals, vecs) = eigh(&m).unwrap();
            for (lam, z) in vals.iter().zip(&vecs) {
                for i in 0..n {
                    let mz: Complex64 = (0..n).map(|j| m.get(i, j) * z[j]).sum();
                    assert!((mz - z[i] * lam).norm() < 1e-10);
                }
            }
            for a in 0..n {
                for b in 0..n {
                    let ip: Complex64 = vecs[a]
                        .iter()
                        .zip(&vecs[b])
                        .map(|(x, y)| x.conj() * y)
                        .sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - expect).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn eigh_handles_degenerate_complex_spectrum() {
        // projection onto a random complex 2-plane in C^4: eigenvalues {0,0,1,1}
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (_, u) = eigh(&random_hermitian(4, &mut rng)).unwrap();
        let p = HermitianMatrix::from_upper(4, |i, j| {
            u[0][i] * u[0][j].conj() + u[1][i] * u[1][j].conj()
        });
        let (vals, vecs) = eigh(&p).unwrap();
        assert!(vals[0].abs() < 1e-12 && vals[1].abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12 && (vals[3] - 1.0).abs() < 1e-12);
        assert_eq!(vecs.len(), 4);
    }

    #[test]
    fn householder_ql_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [1, 2, 3, 10, 57] {
            let m = HermitianMatrix::real_symmetric(n, |_, _| rng.gen_range(-1.0..1.0));
            let a = eigenvalues_hermitian(&m).unwrap();
            let b = eigenvalues_symmetric(n, m.real_part()).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-11, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn clustered_projection_spectrum_converges() {
        // sine kernel: eigenvalues pile up at 0 and 1 to machine precision
        let n = 300;
        let kernel = |i: usize, j: usize| {
            let x = i as f64 - j as f64;
            if x == 0.0 {
                1.1 / std::f64::consts::PI
            } else {
                (1.1 * x).sin() / (std::f64::consts::PI * x)
            }
        };
        let a: Vec<f64> = (0..n * n).map(|k| kernel(k / n, k % n)).collect();
        let frob: f64 = a.iter().map(|x| x * x).sum();
        let s = eigenvalues_symmetric(n, a).unwrap();
        let sum: f64 = s.values().iter().sum();
        let sq: f64 = s.values().iter().map(|x| x * x).sum();
        assert!((sum - n as f64 * 1.1 / std::f64::consts::PI).abs() < 1e-10);
        assert!((sq - frob).abs() < 1e-10);
        assert!(s.min().unwrap() > -1e-12 && s.max().unwrap() < 1.0 + 1e-12);
    }
}
