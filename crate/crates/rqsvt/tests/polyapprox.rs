use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rqsvt::densesim::{eigen, CMat};
use rqsvt::polyapprox::*;
use rqsvt::Error;

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

// (1 - z^2)^{m/2} via log1p, which keeps full relative precision near z = 0.
fn s1_ref(m: usize, z: f64) -> f64 {
    (0.5 * m as f64 * (-z * z).ln_1p()).exp()
}

#[test]
fn s1_exact_for_m2() {
    let p = poly_s1(2, 0.5, 1e-12).unwrap();
    for z in grid(-1.0, 1.0, 101) {
        assert!((p.eval_real(z) - (1.0 - z * z)).abs() < 1e-14);
    }
}

#[test]
fn s1_grid_error_and_bound() {
    for &(m, eps) in &[(9usize, 1e-3), (16, 1e-4), (33, 1e-6), (64, 1e-3)] {
        let s = 1.0 / (m as f64).sqrt();
        let p = poly_s1(m, s, eps).unwrap();
        assert_eq!(p.parity(), Parity::Even);
        let err = grid(-s, s, 1000).iter().map(|&z| (p.eval_real(z) - s1_ref(m, z)).abs()).fold(0.0, f64::max);
        assert!(err <= eps, "m={} err={}", m, err);
        assert!(p.max_abs_on(-1.0, 1.0, 4001) <= 1.0 + 1e-9);
    }
}

#[test]
fn s1_taylor_order_grows_with_log_inverse_eps() {
    let m = 16;
    let s = 0.25;
    let ks: Vec<usize> = [1e-2, 1e-4, 1e-8, 1e-12].iter().map(|&e| s1_taylor_order(m, s, e)).collect();
    for (k, e) in ks.iter().zip([1e-2f64, 1e-4, 1e-8, 1e-12]) {
        assert!(*k as f64 >= 0.2 * (1.0 / e).ln(), "k={} eps={}", k, e);
    }
    assert!(ks.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn s1_rejects_bad_s() {
    assert!(matches!(poly_s1(4, 0.9, 1e-3), Err(Error::Domain(_))));
}

#[test]
fn s2_coefficients_and_envelope() {
    assert!((s2_coefficient(1) - 0.5).abs() < 1e-15);
    assert!((s2_coefficient(2) - 0.375).abs() < 1e-15);
    let s = 0.3;
    let (p, m2) = poly_s2(s, 1e-6).unwrap();
    let c = p.coeffs();
    assert!((c[3].re - 0.5).abs() < 1e-12 && (c[5].re - 0.375).abs() < 1e-12);
    assert_eq!(p.eval_real(0.0), 0.0);
    assert_eq!(p.parity(), Parity::Odd);
    let k = (p.degree() + 1) / 2;
    assert!(k as f64 >= (1e6f64).ln() / (2.0 * (1.0 / s).ln()) - 1e-12);
    assert!((m2 - 2.0 * (k as f64 / PI).sqrt()).abs() < 1e-15);
    let env = s.powi(2 * k as i32 + 1);
    for z in grid(-s, s, 1000) {
        let f = z / (1.0 - z * z).sqrt();
        assert!((p.eval_real(z) - f).abs() <= env.max(1e-15));
    }
    assert!(p.max_abs_on(-1.0, 1.0, 2001) <= m2);
}

#[test]
fn rectangle_bands() {
    for &(t, delta, eps) in &[(0.5, 0.1, 1e-2), (0.3, 0.05, 1e-3), (0.7, 0.2, 1e-4)] {
        let p = poly_rectangle(t, delta, eps).unwrap();
        assert_eq!(p.parity(), Parity::Even);
        for x in grid(-1.0, 1.0, 2001) {
            let v = p.eval_real(x);
            assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            if x.abs() >= t + delta {
                assert!(v <= eps + 1e-12, "outside x={} v={}", x, v);
            }
            if x.abs() <= t - delta {
                assert!(v >= 1.0 - eps - 1e-12, "inside x={} v={}", x, v);
            }
            assert!((v - p.eval_real(-x)).abs() < 1e-12);
        }
        let p0 = p.eval_real(0.0);
        assert!((1.0 - eps..=1.0).contains(&p0));
    }
}

#[test]
fn rectangle_degree_tracks_log_over_delta() {
    let mut ratios = Vec::new();
    for &delta in &[0.2, 0.1, 0.05] {
        for &eps in &[1e-2, 1e-4] {
            let d = poly_rectangle(0.5, delta, eps).unwrap().degree() as f64;
            ratios.push(d * delta / (1.0f64 / eps).ln());
        }
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min <= 4.0, "{:?}", ratios);
}

#[test]
fn compose_constant_reduces_to_s1() {
    let p = DensePolynomial::constant(0.5);
    let (params, pt) = compose_rescaled_adaptive(&p, 1e-3).unwrap();
    assert_eq!(pt.parity(), Parity::Even);
    assert!(rescale_residual(&p, &pt, &params, 1000) <= 1e-3);
    assert!((params.alpha - params.c * params.m2 / params.s).abs() < 1e-10);
    assert!((params.c * params.c + params.s * params.s - 1.0).abs() < 1e-15);
}

#[test]
fn compose_odd_linear() {
    let p = DensePolynomial::from_real_coeffs(&[0.0, 0.5]);
    let eps = 1e-2;
    let (params, pt) = compose_rescaled_adaptive(&p, eps).unwrap();
    assert_eq!(params.m % 2, 1);
    assert_eq!(pt.parity(), Parity::Odd);
    assert!(pt.max_abs_on(-1.0, 1.0, 4001) <= 1.0 + 1e-9);
    // reference: (c^2+s^2x^2)^{m/2} Pt(sx/sqrt(c^2+s^2x^2)) against x/(2 alpha)
    let (c, s, m) = (params.c, params.s, params.m as i32);
    for x in grid(-1.0, 1.0, 1000) {
        let r = (c * c + s * s * x * x).sqrt();
        let lhs = r.powi(m) * pt.eval_real(s * x / r);
        assert!((lhs - x / (2.0 * params.alpha)).abs() <= eps);
    }
}

#[test]
fn compose_rejects_bad_inputs() {
    let big = DensePolynomial::from_real_coeffs(&[0.0, 0.9]);
    let params = RescaleParams::new(1, 1e-2, 33).unwrap();
    assert!(compose_rescaled(&big, &params).is_err());
    let mixed = DensePolynomial::from_real_coeffs(&[0.1, 0.2]);
    assert!(compose_rescaled_adaptive(&mixed, 1e-2).is_err());
}

fn corpus() -> Vec<DensePolynomial> {
    vec![
        DensePolynomial::from_real_coeffs(&[0.0, 0.5]),
        DensePolynomial::from_real_coeffs(&[0.0, 0.0, 0.5]),
        DensePolynomial::from_real_coeffs(&[0.0, 0.3, 0.0, 0.2]),
        DensePolynomial::from_real_coeffs(&[0.25, 0.0, -0.25, 0.0, 0.5]),
        DensePolynomial::from_real_chebyshev(&[0.0, 0.1, 0.0, 0.2, 0.0, 0.15]),
        DensePolynomial::from_real_chebyshev(&[0.1, 0.0, -0.1, 0.0, 0.1, 0.0, 0.2]),
    ]
}

#[test]
fn compose_corpus_meets_dilation_identity() {
    for p in corpus() {
        let (params, pt) = compose_rescaled_adaptive(&p, 1e-2).unwrap();
        assert_eq!(pt.parity(), p.parity());
        assert!(rescale_residual(&p, &pt, &params, 1000) <= 1e-2);
        assert!(pt.nominal_degree() == params.m);
    }
}

#[test]
fn qsp_linear_and_chebyshev() {
    let x = DensePolynomial::from_real_coeffs(&[0.0, 1.0]);
    let seq = solve_qsp_phases(&x, 1e-10).unwrap();
    assert_eq!(seq.m(), 1);
    assert!(qsp_residual(&seq, &x, 8) < 1e-10);
    let t2 = DensePolynomial::from_real_coeffs(&[-1.0, 0.0, 2.0]);
    let seq = solve_qsp_phases(&t2, 1e-8).unwrap();
    for xv in grid(-1.0, 1.0, 201) {
        assert!((seq.top_left(xv).re - (2.0 * xv * xv - 1.0)).abs() < 1e-8);
    }
}

#[test]
fn qsp_reversed_order_has_same_top_left() {
    let p = DensePolynomial::from_real_chebyshev(&[0.0, 0.3, 0.0, -0.4, 0.0, 0.2]);
    let seq = solve_qsp_phases(&p, 1e-10).unwrap();
    for xv in grid(-1.0, 1.0, 17) {
        let r = reflection(xv);
        let mut m = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
        for &phi in seq.phases.iter().rev() {
            let ph = [[Complex64::from_polar(1.0, phi), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, -phi)]];
            m = mat2_mul(&m, &mat2_mul(&r, &ph));
        }
        assert!((m[0][0] - seq.top_left(xv)).norm() < 1e-12);
    }
}

#[test]
fn qsp_negated_phases_conjugate() {
    let p = DensePolynomial::from_real_coeffs(&[0.3, 0.0, 0.4]);
    let seq = solve_qsp_phases(&p, 1e-10).unwrap();
    let neg = seq.negated();
    for xv in grid(-1.0, 1.0, 11) {
        assert!((seq.top_left(xv).conj() - neg.top_left(xv)).norm() < 1e-12);
    }
}

#[test]
fn qsp_composite_length_64() {
    let p = DensePolynomial::from_real_chebyshev(&[0.1, 0.0, -0.1, 0.0, 0.1, 0.0, 0.2]);
    let (params, pt) = compose_rescaled_adaptive(&p, 1e-2).unwrap();
    let seq = solve_qsp_phases_m(&pt, params.m, 1e-9).unwrap();
    assert_eq!(seq.m(), params.m);
    assert!(qsp_residual(&seq, &pt, 4 * params.m) < 1e-9);
}

fn random_bounded(rng: &mut ChaCha8Rng, degree: usize) -> DensePolynomial {
    let mut c = vec![0.0; degree + 1];
    for k in (degree % 2..=degree).step_by(2) {
        c[k] = rng.random::<f64>() * 2.0 - 1.0;
    }
    let p = DensePolynomial::from_real_chebyshev(&c);
    let sup = p.max_abs_on(-1.0, 1.0, 4001);
    p.scale(Complex64::new(0.9 / sup, 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn qsp_random_degree6(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_bounded(&mut rng, 6);
        let seq = solve_qsp_phases(&p, 1e-9).unwrap();
        prop_assert!(qsp_residual(&seq, &p, 24) <= 1e-9);
    }

    #[test]
    fn gqsp_random_degree3(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_laurent(&mut rng, 3);
        let a = solve_gqsp_angles(&p, 1e-8).unwrap();
        prop_assert!(gqsp_residual(&a, &p, 200) <= 1e-8);
    }
}

fn random_laurent(rng: &mut ChaCha8Rng, d: usize) -> LaurentPolynomial {
    let c: Vec<Complex64> = (0..2 * d + 1)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let p = LaurentPolynomial::new(d, c).unwrap();
    let sup = p.sup_norm();
    p.scale(Complex64::new(0.95 / sup, 0.0))
}

#[test]
fn gqsp_monomials() {
    for k in [-2i64, -1, 0, 1, 3] {
        let p = LaurentPolynomial::monomial(k);
        let a = solve_gqsp_angles(&p, 1e-10).unwrap();
        assert!(gqsp_residual(&a, &p, 64) < 1e-10);
    }
}

#[test]
fn gqsp_cosine_block_matches_functional_calculus() {
    let half = Complex64::new(0.5, 0.0);
    let p = LaurentPolynomial::new(1, vec![half, Complex64::new(0.0, 0.0), half]).unwrap();
    let a = solve_gqsp_angles(&p, 1e-10).unwrap();
    // A 2x2 Hermitian test Hamiltonian, diagonalized to get eigenphases.
    let h = CMat::from_row_slice(2, 2, &[Complex64::new(0.3, 0.0), Complex64::new(0.2, -0.4), Complex64::new(0.2, 0.4), Complex64::new(-0.7, 0.0)]);
    let (vals, vecs) = eigen(&h).unwrap();
    let mut block = CMat::zeros(2, 2);
    let mut cosh = CMat::zeros(2, 2);
    for (i, &e) in vals.iter().enumerate() {
        let v = vecs.column(i);
        let proj = &v * v.adjoint();
        block += &proj * a.top_left(Complex64::from_polar(1.0, e));
        cosh += &proj * Complex64::new(e.cos(), 0.0);
    }
    assert!((block - cosh).norm() < 1e-8);
}

#[test]
fn gqsp_rejects_inadmissible() {
    let p = LaurentPolynomial::new(0, vec![Complex64::new(1.5, 0.0)]).unwrap();
    assert!(solve_gqsp_angles(&p, 1e-8).is_err());
}

#[test]
fn laurent_text_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = random_laurent(&mut rng, 2);
    let q = LaurentPolynomial::parse(&p.to_text()).unwrap();
    assert_eq!(p, q);
}

fn check_filter(p: &LaurentPolynomial, mu: f64, delta: f64, eps: f64) {
    assert!(p.is_admissible());
    for x in grid(-1.0, 1.0, 1000) {
        let v = p.eval_angle(x);
        if x <= mu - delta / 2.0 {
            assert!((v - 1.0).norm() <= eps, "pass x={} v={}", x, v);
        }
        if x >= mu + delta / 2.0 {
            assert!(v.norm() <= eps, "stop x={} v={}", x, v);
        }
    }
}

#[test]
fn filter_band_conditions() {
    let p = groundstate_filter(0.0, 0.5, 1e-2).unwrap();
    check_filter(&p, 0.0, 0.5, 1e-2);
    for x in grid(-PI, PI, 500) {
        assert!(p.eval_angle(x).im.abs() < 1e-10);
    }
    let q = groundstate_filter(-0.3, 0.4, 1e-3).unwrap();
    check_filter(&q, -0.3, 0.4, 1e-3);
    let bound = rqsvt::constants::FILTER_DEGREE_CONSTANT * (1e3f64).ln() / 0.4;
    assert!((q.degree() as f64) <= bound);
}

#[test]
fn filter_degree_scales_inverse_with_gap() {
    let d: Vec<f64> = [0.5, 0.25, 0.125].iter().map(|&dl| groundstate_filter(0.0, dl, 1e-2).unwrap().degree() as f64).collect();
    for w in d.windows(2) {
        let r = w[1] / w[0];
        assert!((r - 2.0).abs() <= 0.6, "degrees {:?}", d);
    }
}

#[test]
fn gqsp_solves_filter_polynomial() {
    let p = groundstate_filter(-0.2, 0.5, 1e-2).unwrap();
    assert!(p.degree() <= rqsvt::constants::GQSP_MAX_DEGREE);
    let a = solve_gqsp_angles(&p, 1e-8).unwrap();
    assert!(gqsp_residual(&a, &p, 16 * p.degree() + 16) <= 1e-8);
}

#[test]
fn gqsp_random_degree16() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = random_laurent(&mut rng, 16);
    let a = solve_gqsp_angles(&p, 1e-8).unwrap();
    assert!(gqsp_residual(&a, &p, 400) <= 1e-8);
}
