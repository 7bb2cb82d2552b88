//! The two-term expansion `tr F(A_R) ≈ a R^d + b R^{d-1} ln R`: the `F̃`
//! transform, assembly of both coefficients, and the entropy consequences.

use serde::Serialize;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::entropy::{eta_beta_pair, eta_pair};
use crate::error::{invalid, Error, Result};
use crate::fourier::Symbol;
use crate::geometry::{coupling_integral, Domain};
use crate::numerics::gauss_legendre;
use crate::numerics::quadrature::integrate_unit_graded;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Test function `F` with `F(0) = 0`.
#[derive(Clone)]
pub enum SpectralFunction {
    /// `t^k`.
    Monomial(u32),
    /// `Σ c_k t^k`, coefficients from the constant term up.
    Polynomial(Vec<f64>),
    /// Binary entropy `η`.
    Eta,
    /// Rényi density `η_β`, `β > 0`, `β ≠ 1`.
    EtaBeta(f64),
    User {
        name: String,
        f: Arc<ScalarFn>,
        interval: (f64, f64),
    },
}

impl fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Proof status attached to every predicted value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetStatus {
    Theorem,
    Conjectural,
}

impl SpectralFunction {
    /// `η_β`, with `β = 1` mapped to `η`.
    pub fn renyi(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(invalid(format!("Rényi order must be positive, got {beta}")));
        }
        Ok(if beta == 1.0 {
            SpectralFunction::Eta
        } else {
            SpectralFunction::EtaBeta(beta)
        })
    }

    pub fn user<F>(name: &str, interval: (f64, f64), f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SpectralFunction::User {
            name: name.to_string(),
            f: Arc::new(f),
            interval,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            SpectralFunction::Monomial(k) => format!("t^{k}"),
            SpectralFunction::Polynomial(c) => format!("poly{c:?}"),
            SpectralFunction::Eta => "eta".into(),
            SpectralFunction::EtaBeta(b) => format!("eta_{b}"),
            SpectralFunction::User { name, .. } => name.clone(),
        }
    }

    /// Interval on which `F` is defined.
    pub fn interval(&self) -> (f64, f64) {
        match self {
            SpectralFunction::Eta | SpectralFunction::EtaBeta(_) => (0.0, 1.0),
            SpectralFunction::User { interval, .. } => *interval,
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Entropy-type functions need spectra clipped into `[0, 1]`.
    pub fn is_entropy_type(&self) -> bool {
        matches!(self, SpectralFunction::Eta | SpectralFunction::EtaBeta(_))
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_pair(t, 1.0 - t)
    }

    /// `F(t)` given also `1 - t`, which entropy functions use to stay
    /// accurate near `t = 1`.
    pub fn eval_pair(&self, t: f64, complement: f64) -> f64 {
        match self {
            SpectralFunction::Monomial(k) => t.powi(*k as i32),
            SpectralFunction::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * t + ck),
            SpectralFunction::Eta => eta_pair(t, complement),
            SpectralFunction::EtaBeta(b) => eta_beta_pair(*b, t, complement),
            SpectralFunction::User { f, .. } => f(t),
        }
    }

    fn check_origin(&self) -> Result<()> {
        let (lo, hi) = self.interval();
        if !(lo <= 0.0 && 0.0 <= hi) {
            return Err(Error::InvalidFunction(format!(
                "{} is not defined at 0",
                self.tag()
            )));
        }
        let f0 = self.eval(0.0);
        if f0 != 0.0 && !(matches!(self, SpectralFunction::User { .. }) && f0.abs() < 1e-14) {
            return Err(Error::InvalidFunction(format!(
                "{}(0) = {f0}, must vanish",
                self.tag()
            )));
        }
        if let SpectralFunction::EtaBeta(b) = self {
            if !(*b > 0.0) || *b == 1.0 {
                return Err(invalid(format!(
                    "eta_beta needs beta > 0, beta != 1; got {b}"
                )));
            }
        }
        Ok(())
    }

    /// Polynomials of degree at most two are covered by a proof; anything
    /// else is the conjecture.
    pub fn status(&self) -> TargetStatus {
        let degree = match self {
            SpectralFunction::Monomial(k) => *k as usize,
            SpectralFunction::Polynomial(c) => c.iter().rposition(|x| *x != 0.0).unwrap_or(0),
            _ => usize::MAX,
        };
        if degree <= 2 {
            TargetStatus::Theorem
        } else {
            TargetStatus::Conjectural
        }
    }

    fn analytic_tilde(&self, xi: f64) -> Option<f64> {
        let scale = -1.0 / (4.0 * PI * PI);
        match self {
            SpectralFunction::Monomial(k) => {
                Some(scale * xi.powi(*k as i32) * harmonic(*k as usize - 1))
            }
            SpectralFunction::Polynomial(c) => Some(
                c.iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, ck)| ck * scale * xi.powi(k as i32) * harmonic(k - 1))
                    .sum(),
            ),
            SpectralFunction::Eta if xi == 1.0 => Some(1.0 / 12.0),
            SpectralFunction::EtaBeta(b) if xi == 1.0 => Some((1.0 + b) / (24.0 * b)),
            _ if xi == 0.0 => Some(0.0),
            _ => None,
        }
    }
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|l| 1.0 / l as f64).sum()
}

fn check_argument(f: &SpectralFunction, xi: f64) -> Result<()> {
    f.check_origin()?;
    let (lo, hi) = f.interval();
    if !xi.is_finite() || xi < lo || xi > hi {
        return Err(invalid(format!(
            "xi = {xi} outside the domain of {}",
            f.tag()
        )));
    }
    Ok(())
}

/// `F̃(ξ) = (4π²)^{-1} ∫_0^1 [F(tξ) - t F(ξ)] / (t(1-t)) dt`, using the
/// closed forms where they exist.
pub fn f_tilde(f: &SpectralFunction, xi: f64) -> Result<f64> {
    check_argument(f, xi)?;
    match f.analytic_tilde(xi) {
        Some(v) => Ok(v),
        None => f_tilde_numeric(f, xi),
    }
}

/// Always the quadrature route, never the closed forms.
pub fn f_tilde_numeric(f: &SpectralFunction, xi: f64) -> Result<f64> {
    check_argument(f, xi)?;
    if xi == 0.0 {
        return Ok(0.0);
    }
    let rule = gauss_legendre(20)?;
    let f_xi = f.eval_pair(xi, 1.0 - xi);
    let one_minus_xi = 1.0 - xi;
    let integral = integrate_unit_graded(&rule, graded_levels(f), 0.25, |t, s| {
        let value = f.eval_pair(t * xi, one_minus_xi + s * xi);
        (value - t * f_xi) / (t * s)
    });
    Ok(integral / (4.0 * PI * PI))
}

/// Below `0.25^500` the panels underflow.
const MAX_GRADED_LEVELS: usize = 500;

/// Grading depth so that the neglected end pieces, of size `t^β` for
/// Rényi densities with `β < 1`, stay below `1e-13`.
fn graded_levels(f: &SpectralFunction) -> usize {
    match f {
        SpectralFunction::EtaBeta(beta) if *beta < 1.0 => {
            ((13.0 * 10f64.ln() / (beta * 4f64.ln())).ceil() as usize + 4).min(MAX_GRADED_LEVELS)
        }
        _ => 40,
    }
}

/// Coefficients of `a R^d + b R^{d-1} ln R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidomPrediction {
    pub dim: usize,
    /// `a`, coefficient of `R^d`.
    pub leading: f64,
    /// `b`, coefficient of `R^{d-1} ln R`.
    pub log_coefficient: f64,
    /// `∫_{Ω×Γ} F(α) dx dp`.
    pub volume_integral: f64,
    /// `∫_{∂Ω×∂Γ} |n_x·n_p| F̃(α) dσ dσ`.
    pub boundary_integral: f64,
    pub status: TargetStatus,
}

impl WidomPrediction {
    pub fn value_at(&self, r: f64) -> f64 {
        let d = self.dim as i32;
        self.leading * r.powi(d) + self.log_coefficient * r.powi(d - 1) * r.ln()
    }
}

/// Default boundary resolution for coupling integrals without a closed form.
pub fn coupling_resolution(d: usize) -> usize {
    match d {
        1 | 2 => 256,
        3 => 40,
        _ => 12,
    }
}

fn real_symbol_value(alpha: &Symbol, x: &[f64], p: &[f64]) -> Result<f64> {
    let z = alpha.eval(x, p);
    if z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
        return Err(Error::Unsupported(format!(
            "symbol {} is not real; F(α) needs real values",
            alpha.descriptor()
        )));
    }
    Ok(z.re)
}

/// Assembles both coefficients of the expansion for `tr F(A_R)`.
/// `resolution` sets the volume quadrature per coordinate when the symbol
/// is not constant, and the boundary quadrature when no closed coupling
/// integral exists.
pub fn widom_prediction(
    f: &SpectralFunction,
    alpha: &Symbol,
    omega: &Domain,
    gamma: &Domain,
    resolution: usize,
) -> Result<WidomPrediction> {
    let d = omega.dim();
    if gamma.dim() != d {
        return Err(invalid("position and momentum domains differ in dimension"));
    }
    f.check_origin()?;
    let constant = alpha.is_p_independent() && alpha.is_x_independent();
    let (volume_integral, boundary_integral) = if constant {
        let c = real_symbol_value(alpha, &omega.center(), &gamma.center())?;
        let ft = f_tilde(f, c)?;
        (
            f.eval(c) * omega.volume() * gamma.volume(),
            ft * coupling_integral(omega, gamma, None, coupling_resolution(d))?,
        )
    } else {
        let xs = omega.volume_quadrature(resolution)?;
        let ps = gamma.volume_quadrature(resolution)?;
        let mut vol = 0.0;
        for (x, wx) in &xs {
            for (p, wp) in &ps {
                vol += wx * wp * f.eval(real_symbol_value(alpha, x, p)?);
            }
        }
        let weight = |x: &[f64], p: &[f64]| {
            real_symbol_value(alpha, x, p)
                .and_then(|a| f_tilde(f, a))
                .unwrap_or(f64::NAN)
        };
        let bnd = coupling_integral(omega, gamma, Some(&weight), resolution.max(4))?;
        if bnd.is_nan() {
            return Err(Error::InvalidFunction(format!(
                "symbol {} takes values outside the domain of {}",
                alpha.descriptor(),
                f.tag()
            )));
        }
        (vol, bnd)
    };
    let two_pi = 2.0 * PI;
    let smooth = d == 1 || (omega.is_smooth() && gamma.is_smooth());
    let status = if smooth {
        f.status()
    } else {
        TargetStatus::Conjectural
    };
    Ok(WidomPrediction {
        dim: d,
        leading: volume_integral * two_pi.powi(-(d as i32)),
        log_coefficient: boundary_integral * two_pi.powi(1 - d as i32),
        volume_integral,
        boundary_integral,
        status,
    })
}

/// Conjectured `R^{d-1} ln R` coefficient of the Rényi entropy `S_β`:
/// `(1+β)/(24β) (2π)^{1-d} ∫∫|n_x·n_p|`.
pub fn renyi_coefficient(beta: f64, omega: &Domain, gamma: &Domain) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid(format!("Rényi order must be positive, got {beta}")));
    }
    let d = omega.dim();
    let coupling = coupling_integral(omega, gamma, None, coupling_resolution(d))?;
    Ok((1.0 + beta) / (24.0 * beta) * (2.0 * PI).powi(1 - d as i32) * coupling)
}

/// `(ln 2/π²) (R/2π)^{d-1} ln R ∫∫|n_x·n_p|`, the asymptotic lower bound on
/// the entanglement entropy of the Fermi projection restricted to `RΩ`.
pub fn entropy_lower_bound(omega: &Domain, gamma: &Domain, r: f64) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(invalid(format!(
            "lower bound is stated for R >= 1, got {r}"
        )));
    }
    let d = omega.dim();
    let coupling = coupling_integral(omega, gamma, None, coupling_resolution(d))?;
    Ok(LN_2 / (PI * PI) * (r / (2.0 * PI)).powi(d as i32 - 1) * r.ln() * coupling)
}
