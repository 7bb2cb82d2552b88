use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

use widomlab::entropy::{entropies, eta, renyi_monotone};
use widomlab::fourier::{gamma, indicator_transform, GammaMethod};
use widomlab::lemmas::{
    excluded_volume, kac_identity_rhs, surface_term, widom_identity_lhs, widom_identity_rhs,
    TranslateFamily, VolumeMethod,
};
use widomlab::numerics::{
    bessel_j, eigenvalues_hermitian, gauss_legendre, HermitianMatrix, RandomSource,
};
use widomlab::trace::{exact_trace, nystrom, OperatorSpec};
use widomlab::widom::{f_tilde_numeric, widom_prediction, SpectralFunction};
use widomlab::{Domain, Spectrum, Symbol};

fn domain_strategy(d: usize) -> impl Strategy<Value = Domain> {
    let centers = proptest::collection::vec(-1.0..1.0f64, d);
    let sizes = proptest::collection::vec(0.2..2.0f64, d);
    (0..3usize, centers, sizes).prop_map(move |(kind, c, s)| match kind {
        0 => Domain::interval_box(
            c.iter().zip(&s).map(|(c, s)| c - s).collect(),
            c.iter().zip(&s).map(|(c, s)| c + s).collect(),
        )
        .unwrap(),
        1 => Domain::ball(c, s[0]).unwrap(),
        _ => Domain::ellipsoid(c, s).unwrap(),
    })
}

fn smooth_domain_strategy(d: usize) -> impl Strategy<Value = Domain> {
    let centers = proptest::collection::vec(-1.0..1.0f64, d);
    let sizes = proptest::collection::vec(0.3..2.0f64, d);
    (any::<bool>(), centers, sizes).prop_map(|(ball, c, s)| {
        if ball {
            Domain::ball(c, s[0]).unwrap()
        } else {
            Domain::ellipsoid(c, s).unwrap()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauss_legendre_exact_on_polynomials(n in 1usize..20, coeffs in proptest::collection::vec(-1.0..1.0f64, 40)) {
        let degree = 2 * n - 1;
        let rule = gauss_legendre(n).unwrap();
        let p = |x: f64| coeffs[..=degree].iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = coeffs[..=degree]
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { 2.0 * c / (k + 1) as f64 } else { 0.0 })
            .sum();
        prop_assert!((rule.integrate(-1.0, 1.0, p) - exact).abs() < 1e-12);
    }

    #[test]
    fn hermitian_spectrum_identities(n in 1usize..12, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let m = HermitianMatrix::from_upper(n, |i, j| {
            let re = rng.uniform_in(-1.0, 1.0);
            let im = if i == j { 0.0 } else { rng.uniform_in(-1.0, 1.0) };
            Complex64::new(re, im)
        });
        let s = eigenvalues_hermitian(&m).unwrap();
        let sum: f64 = s.values().iter().sum();
        let sq: f64 = s.values().iter().map(|x| x * x).sum();
        prop_assert!((sum - m.trace()).abs() < 1e-10);
        prop_assert!((sq - m.frobenius_norm().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn bessel_recurrence(x in 0.5..30.0f64, order in 0usize..4) {
        let nu = [1.0, 2.0, 1.5, 2.5][order];
        let lhs = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap();
        let rhs = 2.0 * nu / x * bessel_j(nu, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8, "nu={nu} x={x}: {lhs} vs {rhs}");
    }

    #[test]
    fn overlap_is_even(omega in domain_strategy(2), v in proptest::collection::vec(-1.5..1.5f64, 2)) {
        let minus: Vec<f64> = v.iter().map(|x| -x).collect();
        prop_assert!((omega.intersection_volume(&v) - omega.intersection_volume(&minus)).abs() < 1e-12);
        prop_assert!((omega.intersection_volume(&[0.0, 0.0]) - omega.volume()).abs() < 1e-12);
    }

    #[test]
    fn gauss_map_critical_points(gamma_dom in smooth_domain_strategy(3), e in proptest::collection::vec(-1.0..1.0f64, 3)) {
        let len = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(len > 0.1);
        let e: Vec<f64> = e.iter().map(|x| x / len).collect();
        let set = gamma_dom.critical_points(&e).unwrap();
        prop_assert_eq!(set.points.len(), 2);
        for p in &set.points {
            let along: f64 = p.normal.iter().zip(&e).map(|(a, b)| a * b).sum();
            prop_assert!((along.abs() - 1.0).abs() < 1e-8);
            prop_assert!(p.curvature.unwrap() != 0.0);
        }
    }

    #[test]
    fn transform_conjugate_symmetric(gamma_dom in domain_strategy(2), v in proptest::collection::vec(-15.0..15.0f64, 2)) {
        let minus: Vec<f64> = v.iter().map(|x| -x).collect();
        let a = indicator_transform(&gamma_dom, &v);
        let b = indicator_transform(&gamma_dom, &minus);
        prop_assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn transform_quadrature_conjugate_symmetric(v in proptest::collection::vec(-6.0..6.0f64, 2)) {
        let disk = Domain::unit_ball(2).unwrap();
        let sym = Symbol::Product { coefficient: 1.0, x_powers: vec![0, 0], p_powers: vec![2, 0] };
        let minus: Vec<f64> = v.iter().map(|x| -x).collect();
        let a = gamma(&disk, &sym, &[0.0, 0.0], &v, GammaMethod::Quadrature(48)).unwrap().value;
        let b = gamma(&disk, &sym, &[0.0, 0.0], &minus, GammaMethod::Quadrature(48)).unwrap().value;
        prop_assert!((a - b.conj()).norm() < 1e-10);
    }

    #[test]
    fn f_tilde_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, j in 1u32..6, k in 1u32..6, xi in -1.5..1.5f64) {
        let mut coeffs = vec![0.0; 7];
        coeffs[j as usize] += a;
        coeffs[k as usize] += b;
        let combined = f_tilde_numeric(&SpectralFunction::Polynomial(coeffs), xi).unwrap();
        let parts = a * f_tilde_numeric(&SpectralFunction::Monomial(j), xi).unwrap()
            + b * f_tilde_numeric(&SpectralFunction::Monomial(k), xi).unwrap();
        prop_assert!((combined - parts).abs() < 1e-10);
    }

    #[test]
    fn linear_prediction_is_first_trace(omega in domain_strategy(2), gamma_dom in domain_strategy(2), r in 1.0..200.0f64) {
        let p = widom_prediction(&SpectralFunction::Monomial(1), &Symbol::One, &omega, &gamma_dom, 8).unwrap();
        let spec = OperatorSpec::fermi_projection(omega, gamma_dom, r).unwrap();
        let t = exact_trace(&spec).unwrap().value;
        prop_assert!((p.value_at(r) - t).abs() < 1e-10 * t);
    }

    #[test]
    fn nystrom_diagonal_matches_first_trace(omega in domain_strategy(2), gamma_dom in domain_strategy(2), r in 1.0..20.0f64) {
        let spec = OperatorSpec::fermi_projection(omega, gamma_dom, r).unwrap();
        let t = exact_trace(&spec).unwrap().value;
        let diag = nystrom(&spec, 10).unwrap().trace();
        prop_assert!((diag.re - t).abs() < 1e-8 * t);
    }

    #[test]
    fn eta_concave(s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let mid = eta(0.5 * (s + t)).unwrap();
        prop_assert!(mid + 1e-15 >= 0.5 * (eta(s).unwrap() + eta(t).unwrap()));
    }

    #[test]
    fn renyi_monotone_on_random_spectra(values in proptest::collection::vec(0.0..=1.0f64, 1..40)) {
        let e = entropies(&Spectrum::new(values), &[0.25, 0.5, 2.0, 3.0, 7.0]).unwrap();
        prop_assert!(renyi_monotone(&e.renyi));
    }

    #[test]
    fn identity_functionals_homogeneous(a in proptest::collection::vec(-3.0..3.0f64, 1..6), lambda in 0.1..10.0f64) {
        let scaled: Vec<f64> = a.iter().map(|x| lambda * x).collect();
        for f in [widom_identity_lhs, widom_identity_rhs, kac_identity_rhs] {
            let base = f(&a).unwrap();
            prop_assert!((f(&scaled).unwrap() - lambda * base).abs() < 1e-10 * (1.0 + lambda * base.abs()));
        }
    }

    #[test]
    fn excluded_volume_nonnegative(vx in -1.0..1.0f64, vy in -1.0..1.0f64, eps in 0.0..0.2f64, ball in any::<bool>()) {
        let base = if ball { Domain::unit_ball(2).unwrap() } else { Domain::centered_box(&[1.0, 0.8]).unwrap() };
        let fam = TranslateFamily::new(base, vec![vec![vx, vy]], eps).unwrap();
        let mut rng = RandomSource::new(1);
        let v = excluded_volume(&fam, VolumeMethod::Closed, 0, &mut rng).unwrap();
        prop_assert!(v.value >= 0.0);
    }

    #[test]
    fn surface_term_homogeneous(vx in -1.0..1.0f64, vy in -1.0..1.0f64, eps in 0.001..0.1f64, scale in 0.2..2.0f64) {
        let disk = Domain::unit_ball(2).unwrap();
        let fam = TranslateFamily::new(disk.clone(), vec![vec![vx, vy], vec![-vy, vx]], eps).unwrap();
        let base = surface_term(&fam).unwrap();
        let by_eps = surface_term(&fam.with_eps(eps * scale).unwrap()).unwrap();
        let scaled = TranslateFamily::new(disk, vec![vec![scale * vx, scale * vy], vec![-scale * vy, scale * vx]], eps).unwrap();
        prop_assert!((by_eps - scale * base).abs() < 1e-12);
        prop_assert!((surface_term(&scaled).unwrap() - scale * base).abs() < 1e-12);
    }
}

#[test]
fn excluded_volume_vanishes_without_shift() {
    let mut rng = RandomSource::new(1);
    let fam =
        TranslateFamily::new(Domain::unit_ball(2).unwrap(), vec![vec![0.0, 0.0]], 0.1).unwrap();
    for m in [VolumeMethod::Closed, VolumeMethod::Mc] {
        assert_eq!(excluded_volume(&fam, m, 1000, &mut rng).unwrap().value, 0.0);
    }
}

/// `∫ γ(w) γ(v - w) dw = γ(v)` for the interval indicator (it is idempotent).
/// The `w^{-2}` tail beyond `±400` is added in closed form.
#[test]
fn interval_transform_reproduces_under_convolution() {
    let gamma_dom = Domain::centered_box(&[1.0]).unwrap();
    let rule = gauss_legendre(16).unwrap();
    let cutoff = 400.0;
    for v in [0.0, 0.7, 2.0, 3.3, 5.0] {
        let panels = 3200;
        let h = 2.0 * cutoff / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let a = -cutoff + k as f64 * h;
            acc += rule.integrate(a, a + h, |w| {
                (indicator_transform(&gamma_dom, &[w]) * indicator_transform(&gamma_dom, &[v - w]))
                    .re
            });
        }
        // non-oscillating part of sin w sin(v-w) is -cos(v)/2
        let tail = if v == 0.0 {
            2.0 / cutoff
        } else {
            ((cutoff / (cutoff - v)).ln() + ((cutoff + v) / cutoff).ln()) / v
        };
        acc += v.cos() / (2.0 * PI * PI) * tail;
        let expect = indicator_transform(&gamma_dom, &[v]).re;
        assert!((acc - expect).abs() < 1e-6, "v={v}: {acc} vs {expect}");
    }
}
