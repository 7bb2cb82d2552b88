//! Bessel functions of the first kind for the orders needed by balls in
//! dimensions up to five.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Integer orders switch from the power series to the Hankel expansion here.
const SERIES_LIMIT: f64 = 12.0;
/// Half-integer orders use the trigonometric closed forms above this point.
const HALF_CLOSED_FORM_FROM: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    Integer(u32),
    /// order = k + 1/2
    Half(u32),
}

fn classify(nu: f64) -> Result<Order> {
    let twice = 2.0 * nu;
    if !(0.0..=7.0).contains(&twice) || (twice - twice.round()).abs() > 1e-12 {
        return Err(invalid(format!("unsupported Bessel order {nu}")));
    }
    let t = twice.round() as u32;
    if t % 2 == 0 {
        if t / 2 > 3 {
            return Err(invalid(format!("unsupported Bessel order {nu}")));
        }
        Ok(Order::Integer(t / 2))
    } else {
        Ok(Order::Half(t / 2))
    }
}

/// `Γ(nu + 1)` for integer and half-integer `nu ≥ 0`.
fn gamma_plus_one(order: Order) -> f64 {
    match order {
        Order::Integer(n) => (1..=n).map(f64::from).product(),
        Order::Half(k) => {
            // Γ(k + 3/2) = Γ(1/2) · Π_{j=0}^{k} (j + 1/2)
            let mut g = PI.sqrt();
            for j in 0..=k {
                g *= j as f64 + 0.5;
            }
            g
        }
    }
}

fn order_value(order: Order) -> f64 {
    match order {
        Order::Integer(n) => n as f64,
        Order::Half(k) => k as f64 + 0.5,
    }
}

/// `Σ_k (-1)^k (x/2)^{2k} / (k! Γ(k + ν + 1))`, i.e. `J_ν(x) / (x/2)^ν`.
fn reduced_series(order: Order, x: f64) -> f64 {
    let nu = order_value(order);
    let q = 0.25 * x * x;
    let mut term = 1.0 / gamma_plus_one(order);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 0.5 * x {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    sum
}

fn hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n as f64).powi(2);
    let chi = x - (0.5 * n as f64 + 0.25) * PI;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // a_k / x^k with alternating signs inside P and Q
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn half_closed_form(k: u32, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let pre = (2.0 / (PI * x)).sqrt();
    let inner = match k {
        0 => s,
        1 => s / x - c,
        2 => (3.0 / (x * x) - 1.0) * s - 3.0 * c / x,
        _ => (15.0 / x.powi(3) - 6.0 / x) * s - (15.0 / (x * x) - 1.0) * c,
    };
    pre * inner
}

/// `J_ν(x)` for `ν ∈ {0, 1/2, 1, 3/2, 2, 5/2, 3, 7/2}` and `x ≥ 0`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    let order = classify(nu)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(invalid(format!(
            "Bessel argument must be finite and non-negative, got {x}"
        )));
    }
    Ok(match order {
        Order::Integer(n) if x > SERIES_LIMIT => hankel(n, x),
        Order::Half(k) if x >= HALF_CLOSED_FORM_FROM => half_closed_form(k, x),
        _ => {
            if x == 0.0 {
                return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
            }
            (0.5 * x).powf(nu) * reduced_series(order, x)
        }
    })
}

/// `J_ν(x) / x^ν`, finite at `x = 0` where it equals `1 / (2^ν Γ(ν + 1))`.
pub fn bessel_j_over_power(nu: f64, x: f64) -> Result<f64> {
    let order = classify(nu)?;
    let x = x.abs();
    if x < 1.0 {
        return Ok(reduced_series(order, x) / 2f64.powf(nu));
    }
    Ok(bessel_j(nu, x)? / x.powf(nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integral representation `J_n(x) = (1/π) ∫_0^π cos(nτ − x sin τ) dτ`,
    /// trapezoid on the periodic extension.
    fn oracle_integer(n: u32, x: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let mut s = 0.0;
        for j in 0..=m {
            let t = j as f64 * h;
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            s += w * (n as f64 * t - x * t.sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn j0_at_zero() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(2.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_order_closed_form() {
        let x = 2.0;
        let expect = (2.0 / (PI * x)).sqrt() * x.sin();
        assert!((bessel_j(0.5, x).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn j1_at_one() {
        let v = bessel_j(1.0, 1.0).unwrap();
        assert!((v - oracle_integer(1, 1.0)).abs() < 1e-13);
        assert!((v - 0.4400505857).abs() < 1e-10);
    }

    #[test]
    fn integer_orders_match_integral_oracle() {
        for n in 0..=3 {
            for i in 0..400 {
                let x = 0.1 * i as f64;
                let v = bessel_j(n as f64, x).unwrap();
                let o = oracle_integer(n, x);
                assert!((v - o).abs() < 1e-10, "J_{n}({x}) = {v} vs {o}");
            }
        }
    }

    #[test]
    fn half_orders_continuous_across_switch() {
        for k in 0..4 {
            let nu = k as f64 + 0.5;
            let below = bessel_j(nu, HALF_CLOSED_FORM_FROM - 1e-9).unwrap();
            let above = bessel_j(nu, HALF_CLOSED_FORM_FROM).unwrap();
            assert!((below - above).abs() < 1e-8, "nu={nu}");
            // series value at the switch point agrees with the closed form
            let s = (0.5 * HALF_CLOSED_FORM_FROM).powf(nu)
                * reduced_series(Order::Half(k), HALF_CLOSED_FORM_FROM);
            assert!((s - above).abs() < 1e-13);
        }
    }

    #[test]
    fn recurrence_holds() {
        for nu in [1.0, 2.0, 1.5, 2.5] {
            for i in 0..=295 {
                let x = 0.5 + 0.1 * i as f64;
                let lhs = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap();
                let rhs = 2.0 * nu / x * bessel_j(nu, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-8, "nu={nu} x={x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn scaled_form_at_origin() {
        // J_1(x)/x → 1/2, J_{3/2}(x)/x^{3/2} → 1/(2^{3/2} Γ(5/2))
        assert!((bessel_j_over_power(1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let g = 0.75 * PI.sqrt();
        assert!(
            (bessel_j_over_power(1.5, 0.0).unwrap() - 1.0 / (2f64.powf(1.5) * g)).abs() < 1e-15
        );
        let x = 3.0;
        assert!(
            (bessel_j_over_power(1.0, x).unwrap() - bessel_j(1.0, x).unwrap() / x).abs() < 1e-15
        );
    }

    #[test]
    fn unsupported_orders() {
        assert!(bessel_j(4.0, 1.0).is_err());
        assert!(bessel_j(0.25, 1.0).is_err());
        assert!(bessel_j(-1.0, 1.0).is_err());
    }
}
