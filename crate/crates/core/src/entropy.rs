//! Entropies of quasi-free fermionic states from the spectrum of the
//! one-particle density matrix, lattice and continuum Fermi projections,
//! and a brute-force Fock-space check of the quasi-free formalism.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::LN_2;

use crate::error::{invalid, Error, Result};
use crate::numerics::{eigenvalues_symmetric, eigh, HermitianMatrix, RandomSource};
use crate::spectrum::{ClipReport, Spectrum, CLIP_TOLERANCE};
use crate::trace::{asymptotic_fit, nystrom_spectrum, AsymptoticFit, OperatorSpec};
use crate::widom::entropy_lower_bound;

/// Arguments this far outside `[0, 1]` are clamped rather than rejected.
pub const DOMAIN_SLACK: f64 = 1e-9;

fn clamp_unit(t: f64) -> Result<f64> {
    if !(t >= -DOMAIN_SLACK && t <= 1.0 + DOMAIN_SLACK) {
        return Err(invalid(format!("argument {t} outside [0, 1]")));
    }
    Ok(t.clamp(0.0, 1.0))
}

fn xlogx(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// `η(t) = -t ln t - (1-t) ln(1-t)`, zero at both ends.
pub fn eta(t: f64) -> Result<f64> {
    let t = clamp_unit(t)?;
    Ok(eta_pair(t, 1.0 - t))
}

/// `η_β(t) = ln(t^β + (1-t)^β) / (1-β)`.
pub fn eta_beta(beta: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0) || beta == 1.0 || !beta.is_finite() {
        return Err(invalid(format!(
            "eta_beta needs beta > 0, beta != 1; got {beta}"
        )));
    }
    let t = clamp_unit(t)?;
    Ok(eta_beta_pair(beta, t, 1.0 - t))
}

/// `η` evaluated from `t` and `1 - t` supplied separately.
pub(crate) fn eta_pair(t: f64, complement: f64) -> f64 {
    -xlogx(t) - xlogx(complement)
}

pub(crate) fn eta_beta_pair(beta: f64, t: f64, complement: f64) -> f64 {
    let (t, c) = (t.max(0.0), complement.max(0.0));
    (t.powf(beta) + c.powf(beta)).ln() / (1.0 - beta)
}

/// `η` for `β = 1`, `η_β` otherwise.
pub fn renyi_density(beta: f64, t: f64) -> Result<f64> {
    if beta == 1.0 {
        eta(t)
    } else {
        eta_beta(beta, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entropies {
    /// `Σ η(λ)`.
    pub von_neumann: f64,
    /// `(β, Σ η_β(λ))` for each requested order.
    pub renyi: Vec<(f64, f64)>,
    /// `Σ λ`.
    pub particle_number: f64,
    /// `Σ λ(1-λ)`.
    pub number_variance: f64,
}

/// Entropy functionals of a spectrum in `[0, 1]`.
pub fn entropies(spectrum: &Spectrum, betas: &[f64]) -> Result<Entropies> {
    let vals = spectrum.values();
    let mut von_neumann = 0.0;
    let mut particle_number = 0.0;
    let mut number_variance = 0.0;
    for &l in vals {
        von_neumann += eta(l)?;
        let l = l.clamp(0.0, 1.0);
        particle_number += l;
        number_variance += l * (1.0 - l);
    }
    let renyi = betas
        .iter()
        .map(|&b| {
            let mut s = 0.0;
            for &l in vals {
                s += renyi_density(b, l)?;
            }
            Ok((b, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Entropies {
        von_neumann,
        renyi,
        particle_number,
        number_variance,
    })
}

/// `S_β ≥ S_β'` whenever `β < β'`.
pub fn renyi_monotone(values: &[(f64, f64)]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted
        .windows(2)
        .all(|w| w[0].1 >= w[1].1 - 1e-12 * w[1].1.abs().max(1.0))
}

pub const BOUND_CHAIN_TERMS: [&str; 7] = [
    "2 tr D(1-D)",
    "S_2",
    "4 ln2 tr D(1-D)",
    "S",
    "S_1/2",
    "2 tr sqrt(D(1-D))",
    "2 tr sqrt(D)",
];

/// The chain `2trD(1-D) ≤ S_2 ≤ 4ln2 trD(1-D) ≤ S ≤ S_{1/2} ≤ 2tr√(D(1-D)) ≤ 2tr√D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundChain {
    pub values: [f64; 7],
    /// `values[i+1] - values[i]`.
    pub gaps: [f64; 6],
    /// Indices `i` with `values[i] > values[i+1]` beyond tolerance.
    pub violations: Vec<usize>,
}

impl BoundChain {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_bound_chain(spectrum: &Spectrum) -> Result<BoundChain> {
    let mut v = [0.0; 7];
    for &l in spectrum.values() {
        let l = clamp_unit(l)?;
        let c = 1.0 - l;
        let var = l * c;
        v[0] += 2.0 * var;
        v[1] += eta_beta_pair(2.0, l, c);
        v[2] += 4.0 * LN_2 * var;
        v[3] += eta_pair(l, c);
        v[4] += eta_beta_pair(0.5, l, c);
        v[5] += 2.0 * var.sqrt();
        v[6] += 2.0 * l.sqrt();
    }
    let mut gaps = [0.0; 6];
    let mut violations = Vec::new();
    for i in 0..6 {
        gaps[i] = v[i + 1] - v[i];
        if gaps[i] < -1e-10 * v[i + 1].abs().max(1.0) {
            violations.push(i);
        }
    }
    Ok(BoundChain {
        values: v,
        gaps,
        violations,
    })
}

/// Sine kernel `sin(k_F(m-n)) / (π(m-n))` on sites `1..=L`: the lattice
/// Fermi projection for `[-k_F, k_F]` restricted to `L` sites.
pub fn lattice_overlap_matrix(l: usize, k_f: f64) -> Result<HermitianMatrix> {
    if l < 2 {
        return Err(invalid("lattice needs at least two sites"));
    }
    check_fermi_momentum(k_f)?;
    Ok(HermitianMatrix::real_symmetric(l, |m, n| {
        sine_kernel(m as f64 - n as f64, k_f)
    }))
}

fn check_fermi_momentum(k_f: f64) -> Result<()> {
    if !(k_f > 0.0 && k_f < std::f64::consts::PI) {
        return Err(invalid(format!("Fermi momentum {k_f} outside (0, π)")));
    }
    Ok(())
}

fn sine_kernel(k: f64, k_f: f64) -> f64 {
    if k == 0.0 {
        k_f / std::f64::consts::PI
    } else {
        (k_f * k).sin() / (std::f64::consts::PI * k)
    }
}

pub const MAX_LATTICE: usize = 4000;

/// Spectrum of the `L`-site sine kernel (Householder + QL), clipped into
/// `[0, 1]` with audit.
pub fn lattice_spectrum(l: usize, k_f: f64) -> Result<Spectrum> {
    if l < 2 {
        return Err(invalid("lattice needs at least two sites"));
    }
    if l > MAX_LATTICE {
        return Err(Error::TooLarge(format!(
            "L = {l} exceeds the dense eigensolve budget {MAX_LATTICE}"
        )));
    }
    check_fermi_momentum(k_f)?;
    let mut a = vec![0.0; l * l];
    for m in 0..l {
        for n in 0..l {
            a[m * l + n] = sine_kernel(m as f64 - n as f64, k_f);
        }
    }
    eigenvalues_symmetric(l, a)?.clip_to_unit(CLIP_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeRow {
    pub sites: usize,
    pub entropies: Entropies,
    pub clip: ClipReport,
    pub chain_holds: bool,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeScaling {
    pub k_f: f64,
    pub rows: Vec<LatticeRow>,
    /// `(β, fit of S_β(L) ≈ c ln L + const)`; `β = 1` is the von Neumann entropy.
    pub fits: Vec<(f64, AsymptoticFit)>,
}

/// Smallest lattice size entering the fits.
pub const MIN_FIT_SITES: usize = 64;

/// Exact diagonalisation over `l_grid` (in parallel) and a `c_β ln L + const`
/// fit per order, using only `L ≥ 64`.
pub fn lattice_entropy_scaling(
    l_grid: &[usize],
    k_f: f64,
    betas: &[f64],
) -> Result<LatticeScaling> {
    if l_grid.is_empty() {
        return Err(invalid("empty lattice grid"));
    }
    if let Some(&l) = l_grid.iter().find(|&&l| l > MAX_LATTICE) {
        return Err(Error::TooLarge(format!(
            "L = {l} exceeds the dense eigensolve budget {MAX_LATTICE}"
        )));
    }
    let mut orders: Vec<f64> = betas.to_vec();
    if !orders.contains(&1.0) {
        orders.insert(0, 1.0);
    }
    let rows = l_grid
        .par_iter()
        .map(|&l| {
            let spec = lattice_spectrum(l, k_f)?;
            let ent = entropies(&spec, &orders)?;
            let chain = check_bound_chain(&spec)?;
            let monotone = renyi_monotone(&ent.renyi);
            Ok(LatticeRow {
                sites: l,
                clip: spec.clip_report(),
                entropies: ent,
                chain_holds: chain.holds(),
                monotone,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let used: Vec<&LatticeRow> = rows.iter().filter(|r| r.sites >= MIN_FIT_SITES).collect();
    let xs: Vec<f64> = used.iter().map(|r| r.sites as f64).collect();
    let mut fits = Vec::with_capacity(orders.len());
    for (k, &b) in orders.iter().enumerate() {
        let ys: Vec<f64> = used.iter().map(|r| r.entropies.renyi[k].1).collect();
        fits.push((b, asymptotic_fit(&xs, &ys, 1, 0.0)?));
    }
    Ok(LatticeScaling { k_f, rows, fits })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumEntropy {
    pub r: f64,
    pub entropies: Entropies,
    pub clip: ClipReport,
    /// `(R/2π)^d |Ω||Γ|`.
    pub expected_particle_number: f64,
    /// Asymptotic lower bound, present for `R ≥ 1`.
    pub lower_bound: Option<f64>,
    /// `S / lower_bound`.
    pub ratio: Option<f64>,
    pub chain: BoundChain,
}

/// Entropies of the Fermi projection localised to `RΩ`, from the Nyström
/// spectrum of the operator with `α = 1`.
pub fn continuum_entropy(
    spec: &OperatorSpec,
    resolution: usize,
    betas: &[f64],
) -> Result<ContinuumEntropy> {
    if !spec.alpha().is_one() {
        return Err(Error::Unsupported(
            "continuum entropy is defined for the Fermi projection, α = 1".into(),
        ));
    }
    let spectrum = nystrom_spectrum(spec, resolution)?.clip_to_unit(CLIP_TOLERANCE)?;
    let ent = entropies(&spectrum, betas)?;
    let chain = check_bound_chain(&spectrum)?;
    let r = spec.r();
    let lower_bound = if r >= 1.0 {
        Some(entropy_lower_bound(spec.omega(), spec.gamma(), r)?)
    } else {
        None
    };
    let ratio = lower_bound
        .filter(|b| *b > 0.0)
        .map(|b| ent.von_neumann / b);
    let d = spec.omega().dim() as i32;
    Ok(ContinuumEntropy {
        r,
        expected_particle_number: (r / (2.0 * std::f64::consts::PI)).powi(d)
            * spec.omega().volume()
            * spec.gamma().volume(),
        clip: spectrum.clip_report(),
        entropies: ent,
        lower_bound,
        ratio,
        chain,
    })
}

/// Modes above this count make the `2^n` Fock space impractical.
pub const MAX_FOCK_MODES: usize = 8;
/// Eigenvalues of `D` must lie in `(δ, 1-δ)`.
pub const FOCK_DELTA: f64 = 1e-8;

/// Dense operators on the `2^n`-dimensional Fock space, Jordan–Wigner ordered
/// with mode `j` on bit `j`.
struct FockSpace {
    dim: usize,
}

impl FockSpace {
    fn new(modes: usize) -> Self {
        FockSpace { dim: 1 << modes }
    }

    /// Matrix of the annihilator `c_j` (row-major).
    fn annihilator(&self, j: usize) -> Vec<Complex64> {
        let mut m = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        for s in 0..self.dim {
            if s & (1 << j) != 0 {
                let sign = if (s & ((1 << j) - 1)).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                m[(s ^ (1 << j)) * self.dim + s] = Complex64::new(sign, 0.0);
            }
        }
        m
    }

    /// `a(f) = Σ conj(f_j) c_j`.
    fn a(&self, f: &[Complex64], c: &[Vec<Complex64>]) -> Vec<Complex64> {
        let mut m = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        for (fj, cj) in f.iter().zip(c) {
            let w = fj.conj();
            for (mi, ci) in m.iter_mut().zip(cj) {
                *mi += w * ci;
            }
        }
        m
    }

    fn adjoint(&self, m: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = m[i * n + j].conj();
            }
        }
        out
    }

    fn mul(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = a[i * n + k];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += aik * b[k * n + j];
                }
            }
        }
        out
    }
}

/// Results of the Fock-space verification of a quasi-free state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockReport {
    pub modes: usize,
    /// `|tr W - 1|`.
    pub trace_error: f64,
    /// Smallest eigenvalue of `W`.
    pub min_eigenvalue: f64,
    /// Largest `|ρ(a*(f)a(g)) - ⟨g, D f⟩|` over the random test vectors.
    pub two_point_error: f64,
    /// `|ρ(a*(f1)a*(f2)a(g2)a(g1)) - det⟨g_i, D f_j⟩|`.
    pub wick_error: f64,
    /// Largest deviation of `{a(f), a*(g)}` from `⟨f, g⟩·1`.
    pub anticommutator_error: f64,
    /// `tr η(D)`.
    pub entropy_spectral: f64,
    /// `-tr W ln W`.
    pub entropy_fock: f64,
}

impl FockReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.trace_error <= tol
            && self.min_eigenvalue >= -tol
            && self.two_point_error <= tol
            && self.wick_error <= tol
            && self.anticommutator_error <= tol
            && (self.entropy_spectral - self.entropy_fock).abs() <= tol
    }
}

/// The Fock density operator `W` of a quasi-free state, built by brute force.
pub struct QuasiFreeState {
    modes: usize,
    d: HermitianMatrix,
    w: Vec<Complex64>,
    w_eigenvalues: Vec<f64>,
    annihilators: Vec<Vec<Complex64>>,
}

impl QuasiFreeState {
    /// `W = det(1-D) exp(-Σ_{nm} h_{nm} a*_n a_m)` with `h = ln(D⁻¹ - 1)`.
    /// The exponential is taken by diagonalising the `2^n × 2^n` generator.
    pub fn new(d: &HermitianMatrix) -> Result<Self> {
        Self::with_threshold(d, FOCK_DELTA)
    }

    /// As [`QuasiFreeState::new`] with eigenvalues required in `(delta, 1 - delta)`.
    pub fn with_threshold(d: &HermitianMatrix, delta: f64) -> Result<Self> {
        let n = d.dim();
        if n > MAX_FOCK_MODES {
            return Err(Error::TooLarge(format!(
                "{n} modes exceed the Fock-space budget {MAX_FOCK_MODES}"
            )));
        }
        let (lambda, u) = eigh(d)?;
        for &l in &lambda {
            if !(l > delta && l < 1.0 - delta) {
                return Err(Error::DegenerateCovariance(l));
            }
        }
        // h = U diag(ln(1/λ - 1)) U*
        let mut h = vec![Complex64::new(0.0, 0.0); n * n];
        for (k, &l) in lambda.iter().enumerate() {
            let e = ((1.0 - l) / l).ln();
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += e * u[k][i] * u[k][j].conj();
                }
            }
        }
        let space = FockSpace::new(n);
        let annihilators: Vec<Vec<Complex64>> = (0..n).map(|j| space.annihilator(j)).collect();
        let creators: Vec<Vec<Complex64>> = annihilators.iter().map(|c| space.adjoint(c)).collect();
        let dim = space.dim;
        let mut gen = vec![Complex64::new(0.0, 0.0); dim * dim];
        for a in 0..n {
            for b in 0..n {
                let hab = h[a * n + b];
                if hab.norm() == 0.0 {
                    continue;
                }
                let term = space.mul(&creators[a], &annihilators[b]);
                for (g, t) in gen.iter_mut().zip(&term) {
                    *g += hab * t;
                }
            }
        }
        // symmetrise away round-off before the Hermitian eigensolver
        for i in 0..dim {
            for j in i..dim {
                let avg = 0.5 * (gen[i * dim + j] + gen[j * dim + i].conj());
                gen[i * dim + j] = avg;
                gen[j * dim + i] = avg.conj();
            }
        }
        let gen = HermitianMatrix::from_rows(dim, gen)?;
        let (energies, states) = eigh(&gen)?;
        let det: f64 = lambda.iter().map(|l| 1.0 - l).product();
        let w_eigenvalues: Vec<f64> = energies.iter().map(|e| det * (-e).exp()).collect();
        let mut w = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (k, &wk) in w_eigenvalues.iter().enumerate() {
            let v = &states[k];
            for i in 0..dim {
                for j in 0..dim {
                    w[i * dim + j] += wk * v[i] * v[j].conj();
                }
            }
        }
        Ok(QuasiFreeState {
            modes: n,
            d: d.clone(),
            w,
            w_eigenvalues,
            annihilators,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Row-major `W`.
    pub fn density(&self) -> &[Complex64] {
        &self.w
    }

    /// `ρ(X) = tr(W X)`.
    fn expect(&self, x: &[Complex64]) -> Complex64 {
        let dim = 1usize << self.modes;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            for k in 0..dim {
                acc += self.w[i * dim + k] * x[k * dim + i];
            }
        }
        acc
    }

    /// `-tr W ln W`.
    pub fn fock_entropy(&self) -> f64 {
        self.w_eigenvalues.iter().map(|&w| -xlogx(w)).sum()
    }

    /// `-tr W_A ln W_A` for the reduced state on the first `keep` modes
    /// (`low = true`) or on the last `keep` modes.
    pub fn reduced_entropy(&self, keep: usize, low: bool) -> Result<f64> {
        if keep == 0 || keep > self.modes {
            return Err(invalid("subsystem size out of range"));
        }
        let dim = 1usize << self.modes;
        let sub = 1usize << keep;
        let rest = dim / sub;
        let index = |a: usize, b: usize| {
            if low {
                (b << keep) | a
            } else {
                (a << (self.modes - keep)) | b
            }
        };
        let mut red = vec![Complex64::new(0.0, 0.0); sub * sub];
        for a in 0..sub {
            for a2 in 0..sub {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..rest {
                    acc += self.w[index(a, b) * dim + index(a2, b)];
                }
                red[a * sub + a2] = acc;
            }
        }
        for i in 0..sub {
            for j in i..sub {
                let avg = 0.5 * (red[i * sub + j] + red[j * sub + i].conj());
                red[i * sub + j] = avg;
                red[j * sub + i] = avg.conj();
            }
        }
        let (vals, _) = eigh(&HermitianMatrix::from_rows(sub, red)?)?;
        Ok(vals.iter().map(|&w| -xlogx(w.max(0.0))).sum())
    }

    /// Runs every verification with `probes` random test vectors.
    pub fn verify(&self, rng: &mut RandomSource, probes: usize) -> Result<FockReport> {
        let n = self.modes;
        let space = FockSpace::new(n);
        let c = &self.annihilators;
        let random_vec = |rng: &mut RandomSource| -> Vec<Complex64> {
            (0..n)
                .map(|_| Complex64::new(rng.normal(), rng.normal()))
                .collect()
        };
        let inner = |f: &[Complex64], g: &[Complex64]| -> Complex64 {
            f.iter().zip(g).map(|(a, b)| a.conj() * b).sum()
        };
        let apply_d = |f: &[Complex64]| -> Vec<Complex64> {
            (0..n)
                .map(|i| (0..n).map(|j| self.d.get(i, j) * f[j]).sum())
                .collect()
        };
        let trace_error = (self.expect(&identity(space.dim)) - 1.0).norm();
        let min_eigenvalue = self
            .w_eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);

        let mut two_point_error = 0.0f64;
        let mut anticommutator_error = 0.0f64;
        let mut wick_error = 0.0f64;
        for _ in 0..probes.max(1) {
            let f = random_vec(rng);
            let g = random_vec(rng);
            let af = space.a(&f, c);
            let ag = space.a(&g, c);
            let ag_star = space.adjoint(&ag);
            let af_star = space.adjoint(&af);
            let lhs = self.expect(&space.mul(&af_star, &ag));
            two_point_error = two_point_error.max((lhs - inner(&g, &apply_d(&f))).norm());

            let anti: Vec<Complex64> = space
                .mul(&af, &ag_star)
                .iter()
                .zip(space.mul(&ag_star, &af))
                .map(|(x, y)| x + y)
                .collect();
            let fg = inner(&f, &g);
            for i in 0..space.dim {
                for j in 0..space.dim {
                    let target = if i == j { fg } else { Complex64::new(0.0, 0.0) };
                    anticommutator_error =
                        anticommutator_error.max((anti[i * space.dim + j] - target).norm());
                }
            }

            let f2 = random_vec(rng);
            let g2 = random_vec(rng);
            let af2_star = space.adjoint(&space.a(&f2, c));
            let ag2 = space.a(&g2, c);
            let op = space.mul(&space.mul(&af_star, &af2_star), &space.mul(&ag2, &ag));
            let gram = |gi: &[Complex64], fj: &[Complex64]| inner(gi, &apply_d(fj));
            let det = gram(&g, &f) * gram(&g2, &f2) - gram(&g, &f2) * gram(&g2, &f);
            wick_error = wick_error.max((self.expect(&op) - det).norm());
        }
        let (lambda, _) = eigh(&self.d)?;
        let entropy_spectral = lambda.iter().map(|&l| eta_pair(l, 1.0 - l)).sum();
        Ok(FockReport {
            modes: n,
            trace_error,
            min_eigenvalue,
            two_point_error,
            wick_error,
            anticommutator_error,
            entropy_spectral,
            entropy_fock: self.fock_entropy(),
        })
    }
}

fn identity(n: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Builds the quasi-free state of `D` and verifies it against the spectral
/// formulas.
pub fn fock_oracle(
    d: &HermitianMatrix,
    rng: &mut RandomSource,
) -> Result<(QuasiFreeState, FockReport)> {
    let state = QuasiFreeState::new(d)?;
    let report = state.verify(rng, 4)?;
    Ok((state, report))
}

/// Bipartition of a pure quasi-free state into the first `split` modes and
/// the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipartitionReport {
    /// `tr η(D_11)` from the one-particle compression.
    pub partial_entropy: f64,
    /// `S(W_1) + S(W_2) - S(W)` from Fock-space partial traces.
    pub entanglement_fock: f64,
    /// `|entanglement_fock - 2 partial_entropy|`.
    pub error: f64,
}

/// `D` may be a projection perturbed by as little as `delta`; the identity
/// `ΔS = 2 S_1` then holds up to `O(δ ln δ)`.
pub fn bipartition_check(
    d: &HermitianMatrix,
    split: usize,
    delta: f64,
) -> Result<BipartitionReport> {
    let n = d.dim();
    if split == 0 || split >= n {
        return Err(invalid("split must leave both parts non-empty"));
    }
    let state = QuasiFreeState::with_threshold(d, 0.5 * delta)?;
    let block = HermitianMatrix::from_upper(split, |i, j| d.get(i, j));
    let (lambda, _) = eigh(&block)?;
    let partial_entropy: f64 = lambda
        .iter()
        .map(|&l| eta(l.clamp(0.0, 1.0)).unwrap_or(0.0))
        .sum();
    let s1 = state.reduced_entropy(split, true)?;
    let s2 = state.reduced_entropy(n - split, false)?;
    let entanglement_fock = s1 + s2 - state.fock_entropy();
    Ok(BipartitionReport {
        partial_entropy,
        entanglement_fock,
        error: (entanglement_fock - 2.0 * partial_entropy).abs(),
    })
}

/// Random Hermitian `D` with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn random_density_matrix(
    n: usize,
    lo: f64,
    hi: f64,
    rng: &mut RandomSource,
) -> HermitianMatrix {
    let basis = random_unitary(n, rng);
    let lambda: Vec<f64> = (0..n).map(|_| rng.uniform_in(lo, hi)).collect();
    conjugate_diagonal(&basis, &lambda)
}

/// Rank-`rank` projection in random orientation, with eigenvalues moved to
/// `δ` and `1 - δ`.
pub fn perturbed_projection(
    n: usize,
    rank: usize,
    delta: f64,
    rng: &mut RandomSource,
) -> HermitianMatrix {
    let basis = random_unitary(n, rng);
    let lambda: Vec<f64> = (0..n)
        .map(|k| if k < rank { 1.0 - delta } else { delta })
        .collect();
    conjugate_diagonal(&basis, &lambda)
}

fn random_unitary(n: usize, rng: &mut RandomSource) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut z: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.normal(), rng.normal()))
            .collect();
        for b in &basis {
            let p: Complex64 = b.iter().zip(&z).map(|(x, y)| x.conj() * y).sum();
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi -= p * bi;
            }
        }
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            z.iter_mut().for_each(|c| *c /= norm);
            basis.push(z);
        }
    }
    basis
}

fn conjugate_diagonal(basis: &[Vec<Complex64>], lambda: &[f64]) -> HermitianMatrix {
    HermitianMatrix::from_upper(lambda.len(), |i, j| {
        basis
            .iter()
            .zip(lambda)
            .map(|(u, &l)| l * u[i] * u[j].conj())
            .sum()
    })
}
