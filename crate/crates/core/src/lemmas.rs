//! Two standalone lemmas behind the trace reduction: the first-order volume
//! of the region a domain loses under small translates, and the permutation
//! identity relating running maxima of partial sums to their positive parts.

use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, unit_sphere_area, Domain, Shape};
use crate::numerics::{fit_linear, gauss_legendre, RandomSource};

/// A `C¹` weight on the base domain.
#[derive(Clone)]
pub struct Weight {
    name: String,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl Weight {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Weight {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// `c + g·x`.
    pub fn affine(constant: f64, gradient: Vec<f64>) -> Self {
        let name = format!("{constant}+{gradient:?}.x");
        Weight::new(name, move |x| constant + dot(&gradient, x))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self.name)
    }
}

/// `Ω` together with translates `Ω - εv_1, …, Ω - εv_n` and an optional weight.
#[derive(Debug, Clone)]
pub struct TranslateFamily {
    base: Domain,
    vectors: Vec<Vec<f64>>,
    eps: f64,
    weight: Option<Weight>,
}

impl TranslateFamily {
    pub fn new(base: Domain, vectors: Vec<Vec<f64>>, eps: f64) -> Result<Self> {
        if vectors.is_empty() {
            return Err(invalid("translate family needs at least one vector"));
        }
        let d = base.dim();
        if vectors
            .iter()
            .any(|v| v.len() != d || v.iter().any(|x| !x.is_finite()))
        {
            return Err(invalid(format!(
                "translation vectors must be finite with {d} components"
            )));
        }
        let fam = TranslateFamily {
            base,
            vectors,
            eps: 0.0,
            weight: None,
        };
        fam.with_eps(eps)
    }

    pub fn with_weight(mut self, weight: Weight) -> Self {
        self.weight = Some(weight);
        self
    }

    /// Same family at another scale, revalidated.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(invalid(format!("scale must be non-negative, got {eps}")));
        }
        let reach = eps * self.max_length();
        if reach >= 0.5 * self.base.inradius() {
            return Err(invalid(format!(
                "eps * max|v| = {reach} must stay below half the inradius {}",
                0.5 * self.base.inradius()
            )));
        }
        Ok(TranslateFamily {
            eps,
            ..self.clone()
        })
    }

    pub fn base(&self) -> &Domain {
        &self.base
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn weight(&self) -> Option<&Weight> {
        self.weight.as_ref()
    }

    fn max_length(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| dot(v, v).sqrt())
            .fold(0.0, f64::max)
    }

    fn weight_at(&self, x: &[f64]) -> f64 {
        self.weight.as_ref().map_or(1.0, |w| w.eval(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMethod {
    Closed,
    Mc,
}

/// Value of [`excluded_volume`] with its Monte Carlo standard error (zero
/// for the closed form).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcludedVolume {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample budget `min(10⁷, 10⁴ ε⁻²)`.
pub fn mc_budget(eps: f64) -> usize {
    if eps <= 0.0 {
        return 1;
    }
    (1e4 / (eps * eps)).min(1e7).ceil() as usize
}

/// `∫ f` over `Ω ∖ ⋂_k (Ω - εv_k)`.
///
/// `Closed` handles the unweighted single translate of a ball and any
/// unweighted family on a box. `Mc` samples directions from the centre of
/// the (convex) domain and integrates the excluded radial segments along
/// each ray with Gauss–Legendre.
pub fn excluded_volume(
    fam: &TranslateFamily,
    method: VolumeMethod,
    samples: usize,
    rng: &mut RandomSource,
) -> Result<ExcludedVolume> {
    if fam.eps == 0.0 {
        return Ok(ExcludedVolume {
            value: 0.0,
            std_error: 0.0,
            samples: 0,
        });
    }
    match method {
        VolumeMethod::Closed => excluded_closed(fam),
        VolumeMethod::Mc => excluded_mc(fam, samples, rng),
    }
}

fn excluded_closed(fam: &TranslateFamily) -> Result<ExcludedVolume> {
    if fam.weight.is_some() {
        return Err(Error::InvalidMethod(
            "closed form is for the unweighted volume".into(),
        ));
    }
    let omega = &fam.base;
    let value = match omega.shape() {
        Shape::Box { lower, upper } => {
            let kept: f64 = (0..omega.dim())
                .map(|i| {
                    let (lo, hi) = fam.vectors.iter().fold((0.0f64, 0.0f64), |(lo, hi), v| {
                        (lo.min(fam.eps * v[i]), hi.max(fam.eps * v[i]))
                    });
                    (upper[i] - lower[i] - (hi - lo)).max(0.0)
                })
                .product();
            omega.volume() - kept
        }
        Shape::Ball { .. } if fam.vectors.len() == 1 => {
            let shift: Vec<f64> = fam.vectors[0].iter().map(|x| fam.eps * x).collect();
            omega.volume() - omega.intersection_volume(&shift)
        }
        _ => {
            return Err(Error::InvalidMethod(
                "closed form covers boxes and single translates of balls; use mc".into(),
            ))
        }
    };
    Ok(ExcludedVolume {
        value: value.max(0.0),
        std_error: 0.0,
        samples: 0,
    })
}

const RAY_CHUNK: usize = 1 << 14;

fn excluded_mc(
    fam: &TranslateFamily,
    samples: usize,
    rng: &mut RandomSource,
) -> Result<ExcludedVolume> {
    if samples == 0 {
        return Err(invalid("sample count must be positive"));
    }
    let omega = &fam.base;
    let d = omega.dim();
    let center = omega.center();
    let sphere = unit_sphere_area(d);
    let rule = gauss_legendre(8)?;
    let base = rng.clone();
    let chunks = samples.div_ceil(RAY_CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut local = base.substream(chunk as u64);
            let count = RAY_CHUNK.min(samples - chunk * RAY_CHUNK);
            let mut u = vec![0.0; d];
            let mut origin = vec![0.0; d];
            let mut x = vec![0.0; d];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                local.unit_vector(&mut u);
                let (_, reach) = omega.chord(&center, &u).expect("centre lies inside");
                // kept radii: c + ρu + εv_k ∈ Ω for every k
                let (mut lo, mut hi) = (0.0f64, reach);
                for v in &fam.vectors {
                    for i in 0..d {
                        origin[i] = center[i] + fam.eps * v[i];
                    }
                    match omega.chord(&origin, &u) {
                        Some((t0, t1)) => {
                            lo = lo.max(t0);
                            hi = hi.min(t1);
                        }
                        None => {
                            lo = reach;
                            hi = reach;
                        }
                    }
                }
                let mut segment = |a: f64, b: f64| -> f64 {
                    if b <= a {
                        return 0.0;
                    }
                    rule.integrate(a, b, |rho| {
                        for i in 0..d {
                            x[i] = center[i] + rho * u[i];
                        }
                        fam.weight_at(&x) * rho.powi(d as i32 - 1)
                    })
                };
                let value = if hi <= lo {
                    segment(0.0, reach)
                } else {
                    segment(0.0, lo) + segment(hi, reach)
                };
                let sample = sphere * value;
                s1 += sample;
                s2 += sample * sample;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = partials
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let n = samples as f64;
    let mean = s1 / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
    Ok(ExcludedVolume {
        value: mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

/// Boundary resolution used by [`surface_term`].
pub fn surface_resolution(d: usize) -> usize {
    match d {
        1 => 4,
        2 => 4096,
        3 => 256,
        _ => 24,
    }
}

/// `ε ∫_{∂Ω} f(x) max(0, v_1·n_x, …, v_n·n_x) dσ`.
pub fn surface_term(fam: &TranslateFamily) -> Result<f64> {
    let points = fam
        .base
        .boundary_quadrature(surface_resolution(fam.base.dim()))?;
    let total: f64 = points
        .iter()
        .map(|p| {
            let reach = fam
                .vectors
                .iter()
                .map(|v| dot(v, &p.normal))
                .fold(0.0, f64::max);
            p.weight * fam.weight_at(&p.position) * reach
        })
        .sum();
    Ok(fam.eps * total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoccaforteRow {
    pub eps: f64,
    pub excluded: f64,
    pub std_error: f64,
    pub surface: f64,
    /// `|excluded - surface|`.
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoccaforteReport {
    pub method: VolumeMethod,
    pub rows: Vec<RoccaforteRow>,
    /// Log–log slope of the remainder against `ε`; `None` when every
    /// remainder vanishes to rounding.
    pub order: Option<f64>,
    pub order_stderr: f64,
    /// `remainder / ε²` at the smallest `ε`.
    pub second_order_constant: f64,
}

/// Remainders below this are treated as exact zeros.
const EXACT_REMAINDER: f64 = 1e-13;

/// Fits `ln|excluded - surface|` against `ln ε`. The grid needs at least
/// three distinct scales spanning a factor of four.
pub fn roccaforte_order_check(
    fam: &TranslateFamily,
    eps_grid: &[f64],
    method: VolumeMethod,
    rng: &mut RandomSource,
) -> Result<RoccaforteReport> {
    if eps_grid.len() < 3 {
        return Err(invalid("order check needs at least three scales"));
    }
    let lo = eps_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_grid.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi < 4.0 * lo {
        return Err(invalid("scales must be positive and span a factor of four"));
    }
    let mut rows = Vec::with_capacity(eps_grid.len());
    for (k, &eps) in eps_grid.iter().enumerate() {
        let f = fam.with_eps(eps)?;
        let mut stream = rng.substream(k as u64);
        let ex = excluded_volume(&f, method, mc_budget(eps), &mut stream)?;
        let surface = surface_term(&f)?;
        rows.push(RoccaforteRow {
            eps,
            excluded: ex.value,
            std_error: ex.std_error,
            surface,
            remainder: (ex.value - surface).abs(),
        });
    }
    let smallest = rows
        .iter()
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .expect("non-empty");
    let second_order_constant = smallest.remainder / (smallest.eps * smallest.eps);
    if rows.iter().all(|r| r.remainder <= EXACT_REMAINDER) {
        return Ok(RoccaforteReport {
            method,
            rows,
            order: None,
            order_stderr: 0.0,
            second_order_constant,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.remainder.max(f64::MIN_POSITIVE).ln())
        .collect();
    let fit = fit_linear(&xs, &ys, &[&|x: f64| x, &|_| 1.0])?;
    Ok(RoccaforteReport {
        method,
        rows,
        order: Some(fit.coefficients[0]),
        order_stderr: fit.standard_errors[0],
        second_order_constant,
    })
}

/// Permutation sums grow as `n!`; beyond this the identity check is refused.
pub const MAX_IDENTITY_LEN: usize = 9;

fn check_identity_input(a: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(invalid("identity needs at least one entry"));
    }
    if a.len() > MAX_IDENTITY_LEN {
        return Err(Error::TooLarge(format!(
            "n = {} exceeds the factorial budget {MAX_IDENTITY_LEN}",
            a.len()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(invalid("entries must be finite"));
    }
    Ok(())
}

/// Sum of `term(permuted)` over all permutations. Work is split by the
/// first entry and the partial sums are added in a fixed order.
fn permutation_sum(a: &[f64], term: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let n = a.len();
    let partial: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut perm: Vec<f64> = Vec::with_capacity(n);
            perm.push(a[first]);
            perm.extend(
                a.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != first)
                    .map(|(_, x)| *x),
            );
            // Heap's algorithm on the tail
            let m = n - 1;
            let mut counters = vec![0usize; m];
            let mut acc = term(&perm);
            let mut i = 0;
            while i < m {
                if counters[i] < i {
                    if i % 2 == 0 {
                        perm.swap(1, 1 + i);
                    } else {
                        perm.swap(1 + counters[i], 1 + i);
                    }
                    acc += term(&perm);
                    counters[i] += 1;
                    i = 0;
                } else {
                    counters[i] = 0;
                    i += 1;
                }
            }
            acc
        })
        .collect();
    partial.iter().sum()
}

/// `Σ_σ max(0, a_σ1, a_σ1 + a_σ2, …, a_σ1 + … + a_σn)`.
pub fn widom_identity_lhs(a: &[f64]) -> Result<f64> {
    check_identity_input(a)?;
    Ok(permutation_sum(a, |p| {
        let mut s = 0.0;
        let mut best = 0.0f64;
        for x in p {
            s += x;
            best = best.max(s);
        }
        best
    }))
}

/// `Σ_σ Σ_ℓ max(0, a_σ1 + … + a_σℓ) / ℓ`.
pub fn widom_identity_rhs(a: &[f64]) -> Result<f64> {
    check_identity_input(a)?;
    Ok(permutation_sum(a, |p| {
        let mut s = 0.0;
        let mut acc = 0.0;
        for (l, x) in p.iter().enumerate() {
            s += x;
            acc += s.max(0.0) / (l + 1) as f64;
        }
        acc
    }))
}

/// `Σ_σ a_σ1 Σ_k Θ(a_σ1 + … + a_σk)` with `Θ(0) = 1`.
pub fn kac_identity_rhs(a: &[f64]) -> Result<f64> {
    check_identity_input(a)?;
    Ok(permutation_sum(a, |p| {
        let mut s = 0.0;
        let mut count = 0usize;
        for x in p {
            s += x;
            if s >= 0.0 {
                count += 1;
            }
        }
        p[0] * count as f64
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub entries: Vec<f64>,
    pub lhs: f64,
    pub harmonic: f64,
    pub kac: f64,
    /// Largest pairwise difference, relative to `max(1, |lhs|)`.
    pub discrepancy: f64,
}

pub fn identity_check(a: &[f64]) -> Result<IdentityCheck> {
    let lhs = widom_identity_lhs(a)?;
    let harmonic = widom_identity_rhs(a)?;
    let kac = kac_identity_rhs(a)?;
    let spread = (lhs - harmonic)
        .abs()
        .max((lhs - kac).abs())
        .max((harmonic - kac).abs());
    Ok(IdentityCheck {
        entries: a.to_vec(),
        lhs,
        harmonic,
        kac,
        discrepancy: spread / lhs.abs().max(1.0),
    })
}

/// Random test vector for the permutation identity. Every third draw has a
/// vanishing partial sum and every fourth has a repeated entry; entries
/// are dyadic in those cases so the zero partial sum is exact.
pub fn identity_trial_vector(n: usize, trial: usize, rng: &mut RandomSource) -> Vec<f64> {
    let dyadic = |rng: &mut RandomSource| (rng.uniform_in(-8.0, 8.0) * 8.0).round() / 8.0;
    if n >= 2 && trial % 3 == 0 {
        let mut a: Vec<f64> = (0..n).map(|_| dyadic(rng)).collect();
        let split = 1 + (rng.uniform() * (n - 1) as f64) as usize;
        let head: f64 = a[..split - 1].iter().sum();
        a[split - 1] = -head;
        if split == 1 {
            a[0] = 0.0;
        }
        return a;
    }
    if n >= 2 && trial % 4 == 1 {
        let mut a: Vec<f64> = (0..n).map(|_| dyadic(rng)).collect();
        a[n - 1] = a[0];
        return a;
    }
    (0..n).map(|_| rng.uniform_in(-5.0, 5.0)).collect()
}
