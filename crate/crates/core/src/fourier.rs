//! Fourier transforms of symbols restricted to the Fermi sea:
//! `γ_x(v) = (2π)^{-d} ∫_Γ α(x,p) e^{i v·p} dp`, their closed forms, and the
//! leading stationary-phase term for smooth strictly convex `Γ`.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, norm, Domain, Shape};
use crate::numerics::{bessel_j_over_power, fit_linear, RandomSource};

type SymbolFn = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;

/// Phase-space function `α(x, p)`.
#[derive(Clone)]
pub enum Symbol {
    One,
    Constant(f64),
    /// `c · Π x_i^{m_i} · Π p_i^{n_i}`.
    Product {
        coefficient: f64,
        x_powers: Vec<u32>,
        p_powers: Vec<u32>,
    },
    /// Arbitrary bounded function. `real` and `x_independent` are promises
    /// made by the caller.
    Custom {
        name: String,
        f: Arc<SymbolFn>,
        real: bool,
        x_independent: bool,
    },
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

impl Symbol {
    pub fn custom<F>(name: &str, real: bool, x_independent: bool, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Symbol::Custom {
            name: name.to_string(),
            f: Arc::new(f),
            real,
            x_independent,
        }
    }

    pub fn eval(&self, x: &[f64], p: &[f64]) -> Complex64 {
        match self {
            Symbol::One => Complex64::new(1.0, 0.0),
            Symbol::Constant(c) => Complex64::new(*c, 0.0),
            Symbol::Product {
                coefficient,
                x_powers,
                p_powers,
            } => Complex64::new(
                coefficient * monomial(x, x_powers) * monomial(p, p_powers),
                0.0,
            ),
            Symbol::Custom { f, .. } => f(x, p),
        }
    }

    /// Gradient in `p`. Analytic for built-ins, central differences otherwise.
    pub fn grad_p(&self, x: &[f64], p: &[f64]) -> Vec<Complex64> {
        match self {
            Symbol::One | Symbol::Constant(_) => vec![Complex64::new(0.0, 0.0); p.len()],
            Symbol::Product {
                coefficient,
                x_powers,
                p_powers,
            } => {
                let cx = coefficient * monomial(x, x_powers);
                (0..p.len())
                    .map(|i| {
                        let n = p_powers.get(i).copied().unwrap_or(0);
                        if n == 0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        let mut powers = p_powers.clone();
                        powers[i] -= 1;
                        Complex64::new(cx * n as f64 * monomial(p, &powers), 0.0)
                    })
                    .collect()
            }
            Symbol::Custom { f, .. } => {
                let h = 1e-6;
                let mut q = p.to_vec();
                (0..p.len())
                    .map(|i| {
                        q[i] = p[i] + h;
                        let up = f(x, &q);
                        q[i] = p[i] - h;
                        let down = f(x, &q);
                        q[i] = p[i];
                        (up - down) / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Symbol::One) || matches!(self, Symbol::Constant(c) if *c == 1.0)
    }

    pub fn is_real(&self) -> bool {
        match self {
            Symbol::Custom { real, .. } => *real,
            _ => true,
        }
    }

    pub fn is_x_independent(&self) -> bool {
        match self {
            Symbol::One | Symbol::Constant(_) => true,
            Symbol::Product { x_powers, .. } => x_powers.iter().all(|&m| m == 0),
            Symbol::Custom { x_independent, .. } => *x_independent,
        }
    }

    /// `α(x, ·)` constant in `p`; then `γ_x` has a closed form up to the factor `α(x)`.
    pub fn is_p_independent(&self) -> bool {
        match self {
            Symbol::One | Symbol::Constant(_) => true,
            Symbol::Product { p_powers, .. } => p_powers.iter().all(|&m| m == 0),
            Symbol::Custom { .. } => false,
        }
    }

    /// Sampled estimate of `sup |α|` over `Ω × Γ`, exact for constants.
    pub fn sup_norm(&self, omega: &Domain, gamma: &Domain, resolution: usize) -> Result<f64> {
        match self {
            Symbol::One => Ok(1.0),
            Symbol::Constant(c) => Ok(c.abs()),
            _ => {
                let xs = sample_points(omega, resolution)?;
                let ps = sample_points(gamma, resolution)?;
                let mut sup = 0.0f64;
                for x in &xs {
                    for p in &ps {
                        sup = sup.max(self.eval(x, p).norm());
                    }
                }
                Ok(sup)
            }
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            Symbol::One => "1".into(),
            Symbol::Constant(c) => format!("{c}"),
            Symbol::Product {
                coefficient,
                x_powers,
                p_powers,
            } => {
                let mut s = format!("{coefficient}");
                for (i, m) in x_powers.iter().enumerate().filter(|(_, m)| **m > 0) {
                    s.push_str(&format!("*x{}^{m}", i + 1));
                }
                for (i, n) in p_powers.iter().enumerate().filter(|(_, n)| **n > 0) {
                    s.push_str(&format!("*p{}^{n}", i + 1));
                }
                s
            }
            Symbol::Custom { name, .. } => name.clone(),
        }
    }
}

fn monomial(x: &[f64], powers: &[u32]) -> f64 {
    x.iter()
        .zip(powers)
        .map(|(v, &m)| v.powi(m as i32))
        .product()
}

fn sample_points(domain: &Domain, resolution: usize) -> Result<Vec<Vec<f64>>> {
    let mut pts: Vec<Vec<f64>> = domain
        .volume_quadrature(resolution.max(2))?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    pts.extend(
        domain
            .boundary_quadrature(resolution.max(4))?
            .into_iter()
            .map(|b| b.position),
    );
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMethod {
    /// Closed form when the symbol is constant in `p`, quadrature otherwise.
    Auto,
    ClosedForm,
    /// Quadrature with the given number of nodes per coordinate.
    Quadrature(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMethodTag {
    ClosedForm,
    Quadrature,
    StationaryPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaEvaluation {
    pub value: Complex64,
    pub method: GammaMethodTag,
    pub error_estimate: f64,
}

/// Nodes per coordinate used by [`GammaMethod::Auto`] when it falls back
/// to quadrature.
pub fn auto_resolution(gamma: &Domain, v: &[f64]) -> usize {
    let phase = norm(v) * gamma.diameter();
    ((phase / 1.2).ceil() as usize + 24).max(32)
}

/// `γ_x(v)` for the Fermi sea `gamma` and symbol `alpha` at position `x`.
pub fn gamma(
    gamma: &Domain,
    alpha: &Symbol,
    x: &[f64],
    v: &[f64],
    method: GammaMethod,
) -> Result<GammaEvaluation> {
    let d = gamma.dim();
    if v.len() != d {
        return Err(invalid("frequency dimension differs from the domain"));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(invalid("frequency must be finite"));
    }
    match method {
        GammaMethod::Auto if alpha.is_p_independent() => closed(gamma, alpha, x, v),
        GammaMethod::ClosedForm => {
            if !alpha.is_p_independent() {
                return Err(Error::InvalidMethod(format!(
                    "no closed form for symbol {} depending on momentum",
                    alpha.descriptor()
                )));
            }
            closed(gamma, alpha, x, v)
        }
        GammaMethod::Auto => quadrature(gamma, alpha, x, v, auto_resolution(gamma, v)),
        GammaMethod::Quadrature(n) => quadrature(gamma, alpha, x, v, n),
    }
}

/// Closed form of `(2π)^{-d} ∫_Γ e^{i v·p} dp`.
pub fn indicator_transform(gamma: &Domain, v: &[f64]) -> Complex64 {
    let d = gamma.dim();
    match gamma.shape() {
        Shape::Box { lower, upper } => {
            let mut acc = Complex64::new((2.0 * PI).powi(-(d as i32)), 0.0);
            for ((a, b), vi) in lower.iter().zip(upper).zip(v) {
                let mid = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                acc *= Complex64::from_polar(2.0 * half * sinc(vi * half), vi * mid);
            }
            acc
        }
        Shape::Ball { center, radius } => {
            let k = radius * norm(v);
            let radial =
                (2.0 * PI).powf(-0.5 * d as f64) * radius.powi(d as i32) * ball_profile(d, k);
            Complex64::from_polar(radial, dot(v, center))
        }
        Shape::Ellipsoid { center, semi_axes } => {
            let det: f64 = semi_axes.iter().product();
            let scaled: Vec<f64> = v.iter().zip(semi_axes).map(|(x, a)| x * a).collect();
            let radial = (2.0 * PI).powf(-0.5 * d as f64) * det * ball_profile(d, norm(&scaled));
            Complex64::from_polar(radial, dot(v, center))
        }
    }
}

/// `J_{d/2}(k) / k^{d/2}`.
fn ball_profile(d: usize, k: f64) -> f64 {
    bessel_j_over_power(0.5 * d as f64, k).expect("orders up to 5/2 are supported")
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn closed(gamma: &Domain, alpha: &Symbol, x: &[f64], v: &[f64]) -> Result<GammaEvaluation> {
    let factor = alpha.eval(x, &gamma.center());
    Ok(GammaEvaluation {
        value: factor * indicator_transform(gamma, v),
        method: GammaMethodTag::ClosedForm,
        error_estimate: 1e-14
            * factor.norm()
            * gamma.volume()
            * (2.0 * PI).powi(-(gamma.dim() as i32)),
    })
}

fn quadrature(
    gamma: &Domain,
    alpha: &Symbol,
    x: &[f64],
    v: &[f64],
    n: usize,
) -> Result<GammaEvaluation> {
    let phase = norm(v) * gamma.diameter();
    if phase > 1.5 * n as f64 {
        return Err(Error::AccuracyLoss(format!(
            "|v|·diam(Γ) = {phase:.1} exceeds the oscillation budget 1.5·{n} of the quadrature"
        )));
    }
    let value = quadrature_value(gamma, alpha, x, v, n)?;
    let coarse_n = (3 * n / 4).max(2);
    let error_estimate = if phase <= 1.5 * coarse_n as f64 {
        (value - quadrature_value(gamma, alpha, x, v, coarse_n)?).norm()
    } else {
        f64::NAN
    };
    Ok(GammaEvaluation {
        value,
        method: GammaMethodTag::Quadrature,
        error_estimate,
    })
}

/// Raw volume-quadrature value of `(2π)^{-d} ∫_Γ α(x,p) e^{i v·p} dp`.
pub(crate) fn quadrature_value(
    gamma: &Domain,
    alpha: &Symbol,
    x: &[f64],
    v: &[f64],
    n: usize,
) -> Result<Complex64> {
    let d = gamma.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for (p, w) in gamma.volume_quadrature(n)? {
        acc += alpha.eval(x, &p) * Complex64::from_polar(w, dot(v, &p));
    }
    Ok(acc * (2.0 * PI).powi(-(d as i32)))
}

/// Leading stationary-phase term of `γ_x(v)` for large `|v|`:
/// `-i (2π|v|)^{-(d+1)/2} Σ_k sgn(v·n_k) |K(k)|^{-1/2} α(x,k) e^{i v·k + iπ s_k/4}`,
/// summed over the boundary points with normal `±v/|v|`. The signature
/// `s_k` is taken relative to the direction of `v`.
pub fn gamma_asymptotic(
    gamma: &Domain,
    alpha: &Symbol,
    x: &[f64],
    v: &[f64],
) -> Result<GammaEvaluation> {
    let d = gamma.dim();
    if v.len() != d {
        return Err(invalid("frequency dimension differs from the domain"));
    }
    let vn = norm(v);
    let rho = gamma.min_curvature_radius()?;
    if vn < 5.0 / rho {
        return Err(invalid(format!(
            "|v| = {vn} is below the asymptotic range 5/{rho}"
        )));
    }
    let e: Vec<f64> = v.iter().map(|c| c / vn).collect();
    let set = gamma.critical_points(&e)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut amplitude = 0.0;
    for k in &set.points {
        let curvature = k.curvature.expect("critical points carry curvature");
        let sgn = dot(v, &k.normal).signum();
        let sig = set.signature_along_direction(k) as f64;
        let a = alpha.eval(x, &k.position) / curvature.abs().sqrt();
        amplitude += a.norm();
        sum += sgn * a * Complex64::from_polar(1.0, dot(v, &k.position) + PI * sig / 4.0);
    }
    let scale = (2.0 * PI * vn).powf(-0.5 * (d as f64 + 1.0));
    Ok(GammaEvaluation {
        value: Complex64::new(0.0, -1.0) * sum * scale,
        method: GammaMethodTag::StationaryPhase,
        error_estimate: scale * amplitude * (d * d) as f64 / (vn * rho),
    })
}

/// Envelope of `sup_e |γ(v e)| · v^{(d+1)/2}` over a magnitude grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// `(v, normalised envelope)` per grid point.
    pub envelope: Vec<(f64, f64)>,
    /// Largest normalised envelope, the empirical decay constant.
    pub constant: f64,
    /// Log–log slope of the normalised envelope against `v`.
    pub growth_slope: f64,
    /// No growth trend (slope below 0.1).
    pub bounded: bool,
}

/// Estimates the constant in `|γ(v)| ≤ C |v|^{-(d+1)/2}` for `α = 1` and
/// flags growth. Directions include the coordinate axes.
pub fn decay_envelope_check(
    gamma: &Domain,
    directions: usize,
    v_grid: &[f64],
) -> Result<DecayReport> {
    let d = gamma.dim();
    if v_grid.len() < 2 || v_grid.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid(
            "decay check needs at least two positive magnitudes",
        ));
    }
    let dirs = direction_set(d, directions.max(1));
    let window = 16;
    let exponent = 0.5 * (d as f64 + 1.0);
    let mut envelope = Vec::with_capacity(v_grid.len());
    for &v in v_grid {
        let mut sup = 0.0f64;
        for j in 0..window {
            let t = v + 2.0 * PI * j as f64 / window as f64;
            for e in &dirs {
                let w: Vec<f64> = e.iter().map(|c| c * t).collect();
                sup = sup.max(indicator_transform(gamma, &w).norm() * t.powf(exponent));
            }
        }
        envelope.push((v, sup));
    }
    let xs: Vec<f64> = envelope.iter().map(|(v, _)| v.ln()).collect();
    let ys: Vec<f64> = envelope.iter().map(|(_, s)| s.max(1e-300).ln()).collect();
    let fit = fit_linear(&xs, &ys, &[&|_| 1.0, &|x| x])?;
    let growth_slope = fit.coefficients[1];
    let constant = envelope.iter().map(|(_, s)| *s).fold(0.0, f64::max);
    Ok(DecayReport {
        envelope,
        constant,
        growth_slope,
        bounded: growth_slope < 0.1,
    })
}

fn direction_set(d: usize, count: usize) -> Vec<Vec<f64>> {
    if d == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    if d == 2 {
        return (0..count)
            .map(|k| {
                let t = PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    let mut out: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut rng = RandomSource::new(0);
    while out.len() < count.max(d) {
        let mut e = vec![0.0; d];
        rng.unit_vector(&mut e);
        out.push(e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel_j;

    fn disk() -> Domain {
        Domain::unit_ball(2).unwrap()
    }

    #[test]
    fn interval_is_sine_over_pi_v() {
        let g = Domain::centered_box(&[1.0]).unwrap();
        for v in [0.3, 1.0, 7.5, -2.0] {
            let val = gamma(&g, &Symbol::One, &[0.0], &[v], GammaMethod::Auto)
                .unwrap()
                .value;
            assert!((val.re - v.sin() / (PI * v)).abs() < 1e-15);
            assert!(val.im.abs() < 1e-15);
        }
        // the one-dimensional ball is the same interval
        let b = Domain::unit_ball(1).unwrap();
        let v = 2.7;
        let val = gamma(&b, &Symbol::One, &[0.0], &[v], GammaMethod::Auto)
            .unwrap()
            .value;
        assert!((val.re - v.sin() / (PI * v)).abs() < 1e-12);
    }

    #[test]
    fn zero_frequency_gives_volume() {
        for g in [
            disk(),
            Domain::centered_box(&[1.0, 0.5, 2.0]).unwrap(),
            Domain::ellipsoid(vec![0.0; 3], vec![1.0, 2.0, 0.5]).unwrap(),
        ] {
            let d = g.dim();
            let val = gamma(
                &g,
                &Symbol::One,
                &vec![0.0; d],
                &vec![0.0; d],
                GammaMethod::Auto,
            )
            .unwrap()
            .value;
            assert!((val.re - g.volume() / (2.0 * PI).powi(d as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn disk_at_three() {
        let val = gamma(
            &disk(),
            &Symbol::One,
            &[0.0, 0.0],
            &[3.0, 0.0],
            GammaMethod::Auto,
        )
        .unwrap()
        .value;
        let expect = bessel_j(1.0, 3.0).unwrap() / (2.0 * PI * 3.0);
        assert!((val.re - expect).abs() < 1e-12);
        // oracle: polar quadrature of the defining integral
        let q = gamma(
            &disk(),
            &Symbol::One,
            &[0.0, 0.0],
            &[3.0, 0.0],
            GammaMethod::Quadrature(40),
        )
        .unwrap();
        assert!((q.value.re - expect).abs() < 1e-12);
        assert!(q.value.im.abs() < 1e-12);
    }

    #[test]
    fn closed_and_quadrature_agree_on_random_frequencies() {
        let mut rng = RandomSource::new(99);
        let d = disk();
        for _ in 0..50 {
            let r = 20.0 * rng.uniform();
            let t = 2.0 * PI * rng.uniform();
            let v = [r * t.cos(), r * t.sin()];
            let c = gamma(&d, &Symbol::One, &[0.0, 0.0], &v, GammaMethod::ClosedForm)
                .unwrap()
                .value;
            let q = gamma(
                &d,
                &Symbol::One,
                &[0.0, 0.0],
                &v,
                GammaMethod::Quadrature(48),
            )
            .unwrap()
            .value;
            assert!((c - q).norm() < 1e-8, "v={v:?}");
        }
    }

    #[test]
    fn shifted_box_and_ellipsoid_against_quadrature() {
        let b = Domain::interval_box(vec![0.0, -1.0], vec![1.0, 0.5]).unwrap();
        let e = Domain::ellipsoid(vec![0.2, -0.1, 0.3], vec![1.0, 0.6, 1.4]).unwrap();
        for (g, v) in [(b, vec![2.0, -3.0]), (e, vec![1.5, 2.0, -0.7])] {
            let x = vec![0.0; g.dim()];
            let c = gamma(&g, &Symbol::One, &x, &v, GammaMethod::ClosedForm)
                .unwrap()
                .value;
            let q = gamma(&g, &Symbol::One, &x, &v, GammaMethod::Quadrature(32))
                .unwrap()
                .value;
            assert!((c - q).norm() < 1e-10, "{c} vs {q}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let e = Domain::ellipsoid(vec![0.3, 0.1], vec![1.0, 2.0]).unwrap();
        let v = [1.7, -0.4];
        let w = [-1.7, 0.4];
        let a = gamma(&e, &Symbol::One, &[0.0, 0.0], &v, GammaMethod::Auto)
            .unwrap()
            .value;
        let b = gamma(&e, &Symbol::One, &[0.0, 0.0], &w, GammaMethod::Auto)
            .unwrap()
            .value;
        assert!((a - b.conj()).norm() < 1e-12);
        let sym = Symbol::Product {
            coefficient: 1.0,
            x_powers: vec![],
            p_powers: vec![2, 0],
        };
        let a = gamma(&e, &sym, &[0.0, 0.0], &v, GammaMethod::Auto).unwrap();
        let b = gamma(&e, &sym, &[0.0, 0.0], &w, GammaMethod::Auto).unwrap();
        assert!((a.value - b.value.conj()).norm() < 1e-10);
    }

    #[test]
    fn bounded_by_volume() {
        let mut rng = RandomSource::new(3);
        let g = Domain::ellipsoid(vec![0.0; 3], vec![1.0, 0.5, 1.5]).unwrap();
        let bound = g.volume() / (2.0 * PI).powi(3);
        let mut v = [0.0; 3];
        for _ in 0..100 {
            rng.unit_vector(&mut v);
            let s = 30.0 * rng.uniform();
            let w: Vec<f64> = v.iter().map(|c| c * s).collect();
            assert!(indicator_transform(&g, &w).norm() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn oscillation_budget_enforced() {
        let r = gamma(
            &disk(),
            &Symbol::One,
            &[0.0, 0.0],
            &[100.0, 0.0],
            GammaMethod::Quadrature(20),
        );
        assert!(matches!(r, Err(Error::AccuracyLoss(_))));
    }

    #[test]
    fn closed_form_rejected_for_momentum_symbols() {
        let sym = Symbol::Product {
            coefficient: 1.0,
            x_powers: vec![],
            p_powers: vec![1, 0],
        };
        let r = gamma(
            &disk(),
            &sym,
            &[0.0, 0.0],
            &[1.0, 0.0],
            GammaMethod::ClosedForm,
        );
        assert!(matches!(r, Err(Error::InvalidMethod(_))));
    }

    #[test]
    fn stationary_phase_disk_matches_hankel_form() {
        for v in [50.0, 80.0, 133.3, 400.0] {
            let sp = gamma_asymptotic(&disk(), &Symbol::One, &[0.0, 0.0], &[v, 0.0])
                .unwrap()
                .value;
            let hankel = (2.0 / (PI * v)).sqrt() * (v - 0.75 * PI).cos() / (2.0 * PI * v);
            assert!((sp.re - hankel).abs() < 1e-15, "{} vs {hankel}", sp.re);
            assert!(sp.im.abs() < 1e-15);
            let exact = indicator_transform(&disk(), &[v, 0.0]).re;
            let envelope = (2.0 / (PI * v)).sqrt() / (2.0 * PI * v);
            assert!((sp.re - exact).abs() <= 2.0 / v * envelope);
        }
    }

    #[test]
    fn stationary_phase_rotation_invariant() {
        let v = 60.0;
        let base = gamma_asymptotic(&disk(), &Symbol::One, &[0.0, 0.0], &[v, 0.0])
            .unwrap()
            .value;
        for t in [0.3, 1.1, 2.5] {
            let w = [v * f64::cos(t), v * f64::sin(t)];
            let val = gamma_asymptotic(&disk(), &Symbol::One, &[0.0, 0.0], &w)
                .unwrap()
                .value;
            assert!((val - base).norm() < 1e-14);
        }
    }

    #[test]
    fn stationary_phase_ball_d3() {
        // closed form: γ(v) = (2π)^{-3/2} j(v), J_{3/2} trigonometric
        let ball = Domain::unit_ball(3).unwrap();
        for v in [40.0f64, 100.0] {
            let sp = gamma_asymptotic(&ball, &Symbol::One, &[0.0; 3], &[0.0, v, 0.0])
                .unwrap()
                .value;
            let exact = (v.sin() - v * v.cos()) / (2.0 * PI * PI * v.powi(3));
            let envelope = 2.0 * (2.0 * PI * v).powi(-2);
            assert!((sp.re - exact).abs() < 3.0 / v * envelope);
            assert!((sp.re + envelope * v.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn stationary_phase_off_centre_ellipse() {
        // shift by c multiplies the transform by e^{i v·c}
        let g = Domain::ellipsoid(vec![0.5, -0.2], vec![2.0, 1.0]).unwrap();
        let v = [30.0, 40.0];
        let sp = gamma_asymptotic(&g, &Symbol::One, &[0.0, 0.0], &v)
            .unwrap()
            .value;
        let exact = indicator_transform(&g, &v);
        let env = (2.0 * PI * 50.0f64).powf(-1.5) * 2.0 * 4.0;
        assert!((sp - exact).norm() < 0.1 * env, "{sp} vs {exact}");
    }

    #[test]
    fn stationary_phase_rejects_boxes() {
        let b = Domain::centered_box(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            gamma_asymptotic(&b, &Symbol::One, &[0.0, 0.0], &[50.0, 0.0]),
            Err(Error::UnsupportedDomain(_))
        ));
    }

    #[test]
    fn stationary_phase_error_halves() {
        let env = |v: f64| (2.0 / (PI * v)).sqrt() / (2.0 * PI * v);
        let err = |v: f64| {
            // phase-averaged normalised error over one period
            (0..32)
                .map(|j| {
                    let t = v + 2.0 * PI * j as f64 / 32.0;
                    let sp = gamma_asymptotic(&disk(), &Symbol::One, &[0.0, 0.0], &[t, 0.0])
                        .unwrap()
                        .value
                        .re;
                    (sp - indicator_transform(&disk(), &[t, 0.0]).re).abs() / env(t)
                })
                .sum::<f64>()
                / 32.0
        };
        for v in [25.0, 50.0, 100.0] {
            let ratio = err(2.0 * v) / err(v);
            assert!((0.4..=0.6).contains(&ratio), "ratio {ratio} at {v}");
        }
    }

    #[test]
    fn disk_envelope_bounded() {
        let r = decay_envelope_check(&disk(), 8, &[10.0, 20.0, 40.0, 80.0, 160.0]).unwrap();
        assert!(r.bounded);
        assert!((0.1..=1.0).contains(&r.constant), "{}", r.constant);
    }

    #[test]
    fn square_envelope_grows_along_axes() {
        let b = Domain::centered_box(&[1.0, 1.0]).unwrap();
        let r = decay_envelope_check(&b, 8, &[10.0, 20.0, 40.0, 80.0, 160.0]).unwrap();
        assert!(!r.bounded);
        assert!((r.growth_slope - 0.5).abs() < 0.1, "{}", r.growth_slope);
    }

    #[test]
    fn sup_norm_of_product() {
        let sym = Symbol::Product {
            coefficient: 2.0,
            x_powers: vec![1],
            p_powers: vec![1],
        };
        let b = Domain::centered_box(&[1.0]).unwrap();
        let s = sym.sup_norm(&b, &b, 8).unwrap();
        assert!((s - 2.0).abs() < 1e-14);
        assert_eq!(Symbol::One.sup_norm(&b, &b, 8).unwrap(), 1.0);
    }

    #[test]
    fn gradient_of_product() {
        let sym = Symbol::Product {
            coefficient: 3.0,
            x_powers: vec![0, 0],
            p_powers: vec![2, 1],
        };
        let g = sym.grad_p(&[0.0, 0.0], &[0.5, 2.0]);
        assert!((g[0].re - 3.0 * 2.0 * 0.5 * 2.0).abs() < 1e-14);
        assert!((g[1].re - 3.0 * 0.25).abs() < 1e-14);
        let c = Symbol::custom("p1^2 p2", true, true, |_, p| {
            Complex64::new(3.0 * p[0] * p[0] * p[1], 0.0)
        });
        let h = c.grad_p(&[0.0, 0.0], &[0.5, 2.0]);
        assert!((h[0] - g[0]).norm() < 1e-8 && (h[1] - g[1]).norm() < 1e-8);
    }
}
