use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rqsvt::densesim::*;
use rqsvt::pauli::{HermitianDecomposition, PauliString};
use rqsvt::polyapprox::*;
use rqsvt::rand_qsvt::*;
use rqsvt::seed::master_rng;

fn h2() -> HermitianDecomposition {
    HermitianDecomposition::new(
        2,
        [
            (0.5, PauliString::from_word("ZZ").unwrap()),
            (0.3, PauliString::from_word("XI").unwrap()),
            (0.2, PauliString::from_word("IX").unwrap()),
        ],
    )
    .unwrap()
}

fn normalized(h: &HermitianDecomposition) -> CMat {
    h.dense_matrix() / Complex64::new(h.lambda(), 0.0)
}

fn random_phases(rng: &mut ChaCha8Rng, m: usize) -> AlternatingSequenceSpec {
    AlternatingSequenceSpec::new((0..m).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
}

fn spectral(a: &CMat) -> f64 {
    a.clone().singular_values().iter().fold(0.0f64, |m, &v| m.max(v))
}

#[test]
fn unitary_block_gives_unitary_dilation() {
    let h = PauliString::from_word("XY").unwrap().matrix();
    let u = build_u(&h, 0.8, 0.6).unwrap();
    assert!((u.adjoint() * &u - CMat::identity(8, 8)).camax() < 1e-10);
    let two = build_u(&(h * Complex64::new(0.5, 0.0)), 0.8, 0.6).unwrap();
    assert!((two.adjoint() * &two - CMat::identity(8, 8)).camax() > 1e-3);
    assert!(build_u(&(CMat::identity(2, 2) * Complex64::new(1.1, 0.0)), 0.8, 0.6).is_err());
}

#[test]
fn dilation_singular_values() {
    let h = normalized(&h2());
    let (c, s) = ((1.0f64 - 1.0 / 6.0).sqrt(), 1.0 / 6f64.sqrt());
    let u = build_u(&h, c, s).unwrap();
    let mut got: Vec<f64> = u.singular_values().iter().copied().collect();
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut want: Vec<f64> = h
        .clone()
        .singular_values()
        .iter()
        .flat_map(|&sig| {
            let r = (c * c + s * s * sig * sig).sqrt();
            [r, r]
        })
        .collect();
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn zero_phases_give_identity() {
    let h = PauliString::from_word("ZX").unwrap().matrix();
    let p = DilationParams::new(2, 1.0).unwrap();
    let spec = AlternatingSequenceSpec::new(vec![0.0, 0.0]).unwrap();
    let u = build_u_phi(&h, &spec, &p).unwrap();
    assert!((u - CMat::identity(8, 8)).camax() < 1e-10);
}

#[test]
fn block_matches_per_eigenvalue_qsp() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let h = normalized(&h2());
    let (vals, vecs) = eigen(&h).unwrap();
    for m in [3usize, 4, 7, 8] {
        let p = DilationParams::new(m, 1.0).unwrap();
        let spec = random_phases(&mut rng, m);
        let u = build_u_phi(&h, &spec, &p).unwrap();
        let block = output_block(&u, &spec);
        let q = QSPPhaseSequence { phases: spec.phases.clone() };
        for (i, &sig) in vals.iter().enumerate() {
            let v = vecs.column(i);
            let got = v.dotc(&(&block * v));
            let r = (p.c * p.c + p.s * p.s * sig * sig).sqrt();
            let want = q.top_left(p.s * sig / r) * r.powi(m as i32);
            assert!((got - want).norm() < 1e-10, "m={m} sigma={sig}");
        }
    }
}

#[test]
fn end_to_end_block_matches_svt_reference() {
    let h = normalized(&h2());
    let eps = 1e-2;
    let polys = [
        DensePolynomial::from_real_coeffs(&[0.0, 0.0, 0.5]),
        DensePolynomial::from_real_coeffs(&[0.0, 0.3, 0.0, 0.2]),
    ];
    for poly in &polys {
        let plan = Algorithm2Plan::new(poly, eps).unwrap();
        let (params, spec) = (&plan.dilation, &plan.spec);
        let up = build_u_phi(&h, spec, params).unwrap();
        let um = build_u_phi(&h, &spec.negated(), params).unwrap();
        let v = (output_block(&up, spec) + output_block(&um, spec)) * Complex64::new(0.5, 0.0);
        let want = svt_oracle(&(&h / Complex64::new(params.alpha, 0.0)), poly).unwrap();
        assert!(spectral(&(v - want)) <= eps);
        // The real part is exact; the imaginary completion is what the sign average removes.
        let b = output_block(&up, spec);
        let herm = (&b + b.adjoint()) * Complex64::new(0.5, 0.0);
        let want = svt_oracle(&(&h / Complex64::new(params.alpha, 0.0)), poly).unwrap();
        assert!(spectral(&(herm - want)) <= eps);
    }
}

#[test]
fn single_term_circuit_is_deterministic() {
    let h = HermitianDecomposition::new(2, [(-0.7, PauliString::from_word("YZ").unwrap())]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let p = DilationParams::new(4, 1.0).unwrap();
    let spec = random_phases(&mut rng, 4);
    let want = build_u_phi(&normalized(&h), &spec, &p).unwrap();
    for _ in 0..3 {
        let c = sample_circuit(&h, &spec, &p, &mut rng).unwrap();
        assert!((c.matrix() - &want).camax() < 1e-12);
    }
}

fn enumeration_average(h: &HermitianDecomposition, spec: &AlternatingSequenceSpec, p: &DilationParams) -> CMat {
    let dist = h.distribution();
    let l = dist.len();
    let m = spec.m();
    let dim = 2usize << h.n();
    let mut acc = CMat::zeros(dim, dim);
    for code in 0..l.pow(m as u32) {
        let mut idx = code;
        let mut slots = Vec::new();
        let mut w = 1.0;
        for _ in 0..m {
            let k = idx % l;
            idx /= l;
            w *= dist.probs[k];
            slots.push(SampledTerm { term: k, sign: dist.signs[k], op: dist.ops[k] });
        }
        let c = SampledCircuit { spec: spec.clone(), params: *p, slots };
        acc += c.matrix() * Complex64::new(w, 0.0);
    }
    acc
}

#[test]
fn sampled_average_matches_dense_sequence() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let two = HermitianDecomposition::new(
        2,
        [(0.6, PauliString::from_word("XZ").unwrap()), (0.4, PauliString::from_word("ZY").unwrap())],
    )
    .unwrap();
    let signed = HermitianDecomposition::new(
        2,
        [(-0.6, PauliString::from_word("XZ").unwrap()), (0.4, PauliString::from_word("YY").unwrap())],
    )
    .unwrap();
    let p = DilationParams::new(2, 1.0).unwrap();
    for h in [&two, &signed] {
        let spec = random_phases(&mut rng, 2);
        let want = build_u_phi(&normalized(h), &spec, &p).unwrap();
        assert!((enumeration_average(h, &spec, &p) - &want).camax() < 1e-12);
    }
}

#[test]
fn oracle_matches_dense_sequence() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let three = HermitianDecomposition::new(
        2,
        [
            (0.5, PauliString::from_word("XX").unwrap()),
            (-0.3, PauliString::from_word("ZI").unwrap()),
            (0.2, PauliString::from_word("IY").unwrap()),
        ],
    )
    .unwrap();
    let two = HermitianDecomposition::new(
        2,
        [(0.7, PauliString::from_word("XY").unwrap()), (-0.3, PauliString::from_word("ZZ").unwrap())],
    )
    .unwrap();
    for (m, h) in [(2usize, &two), (3, &two), (2, &three)] {
        let p = DilationParams::new(m, 1.0).unwrap();
        let spec = random_phases(&mut rng, m);
        let want = build_u_phi(&normalized(h), &spec, &p).unwrap();
        let got = expectation_oracle(h, &spec, &p).unwrap();
        assert!((&got - &want).camax() < 1e-12);
        assert!((enumeration_average(h, &spec, &p) - got).camax() < 1e-12);
    }
    let single = HermitianDecomposition::new(1, [(0.9, PauliString::from_word("X").unwrap())]).unwrap();
    let p = DilationParams::new(3, 1.0).unwrap();
    let spec = random_phases(&mut rng, 3);
    let c = sample_circuit(&single, &spec, &p, &mut rng).unwrap();
    assert!((expectation_oracle(&single, &spec, &p).unwrap() - c.matrix()).camax() < 1e-12);
}

#[test]
fn oracle_cap() {
    let h = h2();
    let p = DilationParams::new(13, 1.0).unwrap();
    let spec = AlternatingSequenceSpec::new(vec![0.1; 13]).unwrap();
    assert!(matches!(expectation_oracle(&h, &spec, &p), Err(rqsvt::Error::Cap(_))));
}

#[test]
fn product_is_linear_in_each_slot() {
    // Replace slot 1 by a mixture of two dilations: the product mixes the same way.
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let p = DilationParams::new(3, 1.0).unwrap();
    let spec = random_phases(&mut rng, 3);
    let ops = [PauliString::from_word("XI").unwrap(), PauliString::from_word("ZY").unwrap()];
    let base = SampledTerm { term: 0, sign: 1.0, op: PauliString::from_word("IZ").unwrap() };
    let make = |mid: SampledTerm| SampledCircuit { spec: spec.clone(), params: p, slots: vec![base, mid, base] }.matrix();
    let a = make(SampledTerm { term: 1, sign: 1.0, op: ops[0] });
    let b = make(SampledTerm { term: 2, sign: -1.0, op: ops[1] });
    let mix = HermitianDecomposition::new(2, [(0.25, ops[0]), (-0.75, ops[1])]).unwrap();
    let dense_mid = build_u(&normalized(&mix), p.c, p.s).unwrap();
    let bu = build_u(&PauliString::from_word("IZ").unwrap().matrix(), p.c, p.s).unwrap();
    // Dense product with slot 1 replaced.
    let dense = {
        let mut out = CMat::identity(8, 8);
        let units = [&bu, &dense_mid, &bu];
        for i in (0..3).rev() {
            let tilde = spec.is_tilde_slot(i);
            out = if tilde { units[i] * out } else { units[i].adjoint() * out };
            let ph = Complex64::from_polar(1.0, spec.phases[i]);
            let (a0, a1) = if tilde { (ph, ph.conj()) } else { (ph.conj(), ph) };
            for r in 0..4 {
                for c in 0..8 {
                    out[(r, c)] *= a0;
                    out[(r + 4, c)] *= a1;
                }
            }
        }
        out
    };
    let lin = a * Complex64::new(0.25, 0.0) + b * Complex64::new(0.75, 0.0);
    assert!((lin - dense).camax() < 1e-12);
}

#[test]
fn sampled_circuits_are_unitary() {
    let h = h2();
    let mut rng = master_rng(36);
    for m in [5usize, 6, 12] {
        let p = DilationParams::new(m, 1.0).unwrap();
        let spec = random_phases(&mut rng, m);
        for _ in 0..5 {
            let u = sample_circuit(&h, &spec, &p, &mut rng).unwrap().matrix();
            assert!((u.adjoint() * &u - CMat::identity(8, 8)).camax() < 1e-10);
        }
    }
}

#[test]
fn sampling_rejects_mismatched_lengths() {
    let p = DilationParams::new(4, 1.0).unwrap();
    let spec = AlternatingSequenceSpec::new(vec![0.0; 3]).unwrap();
    assert!(sample_circuit(&h2(), &spec, &p, &mut master_rng(0)).is_err());
    assert!(build_u_phi(&normalized(&h2()), &spec, &p).is_err());
}

fn x2_half() -> DensePolynomial {
    DensePolynomial::from_real_coeffs(&[0.0, 0.0, 0.5])
}

#[test]
fn algorithm2_meets_accuracy_in_repetitions() {
    let h = h2();
    let psi = StateVector::plus(2);
    let o = Observable::from_pauli(&PauliString::from_word("XI").unwrap());
    let plan = Algorithm2Plan::new(&x2_half(), 0.1).unwrap();
    let reference = polynomial_target(&h, &x2_half(), plan.effective_scale(&h), &DensityOperator::from_state(&psi).mat, &o)
        .unwrap();
    let mut hits = 0;
    for seed in 0..20 {
        let est = algorithm2_estimate(&h, &x2_half(), &psi, &o, 0.1, 0.05, seed).unwrap();
        assert_eq!(est.shots, 738);
        if (est.mean - reference).abs() <= 0.1 * o.norm {
            hits += 1;
        }
    }
    assert!(hits >= 19, "{hits}/20");
}

#[test]
fn identity_observable_gives_squared_norm() {
    let h = h2();
    let psi = StateVector::plus(2);
    let o = Observable::identity(2);
    let plan = Algorithm2Plan::new(&x2_half(), 0.1).unwrap();
    let scale = plan.effective_scale(&h);
    let (vals, vecs) = eigen(&h.dense_matrix()).unwrap();
    let mut want = 0.0;
    for (i, &e) in vals.iter().enumerate() {
        let amp = vecs.column(i).dotc(&psi.amps).norm_sqr();
        want += amp * x2_half().eval_real(e * scale).powi(2);
    }
    let est = algorithm2_estimate(&h, &x2_half(), &psi, &o, 0.05, 0.05, 7).unwrap();
    assert!((est.mean - want).abs() <= 4.0 * est.stderr + 0.01);
}

fn phase_plan(m: usize, seed: u64) -> Algorithm2Plan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rescale = RescaleParams::new(2, 0.1, m).unwrap();
    Algorithm2Plan {
        dilation: DilationParams::from_rescale(&rescale),
        rescale,
        pt: DensePolynomial::zero(),
        spec: random_phases(&mut rng, m),
    }
}

#[test]
fn paired_estimator_is_unbiased() {
    let h = h2();
    let psi = StateVector::plus(2);
    let o = Observable::from_pauli(&PauliString::from_word("XX").unwrap());
    for m in [6usize, 7] {
        let plan = phase_plan(m, 40 + m as u64);
        let opts = EstimatorOptions { shots_override: Some(10_000), ..Default::default() };
        let est = algorithm2_with_plan(&h, &plan, &psi, &o, 0.1, 0.05, 41, &opts).unwrap();
        let want = paired_target(&h, &plan, &DensityOperator::from_state(&psi).mat, &o).unwrap();
        assert!(want.abs() > 1e-2);
        assert!((est.mean - want).abs() <= 4.0 * est.stderr, "m={m}: {} vs {want} (se {})", est.mean, est.stderr);
    }
}

#[test]
fn strict_outcomes_agree_with_expectation_mode() {
    let h = h2();
    let psi = StateVector::plus(2);
    let o = Observable::from_pauli(&PauliString::from_word("ZX").unwrap());
    let plan = phase_plan(6, 42);
    let opts = EstimatorOptions { strict_outcomes: true, shots_override: Some(20_000) };
    let est = algorithm2_with_plan(&h, &plan, &psi, &o, 0.1, 0.05, 43, &opts).unwrap();
    let want = paired_target(&h, &plan, &DensityOperator::from_state(&psi).mat, &o).unwrap();
    assert!((est.mean - want).abs() <= 4.0 * est.stderr);
    let rho = DensityOperator::new(CMat::identity(4, 4) * Complex64::new(0.25, 0.0)).unwrap();
    let est = algorithm2_density_with_plan(&h, &plan, &rho, &o, 0.1, 0.05, 44, &opts).unwrap();
    let want = paired_target(&h, &plan, &rho.mat, &o).unwrap();
    assert!((est.mean - want).abs() <= 4.0 * est.stderr);
}

#[test]
fn single_circuit_measurement_is_biased() {
    // Averaging <U^dag O U> over single samples is not <E[U]^dag O E[U]>.
    let h = HermitianDecomposition::new(
        1,
        [(0.5, PauliString::from_word("X").unwrap()), (0.5, PauliString::from_word("Z").unwrap())],
    )
    .unwrap();
    let p = DilationParams::new(2, 1.0).unwrap();
    let spec = AlternatingSequenceSpec::new(vec![0.3, -0.4]).unwrap();
    let o = Observable::identity(1).ancilla_projected(1);
    let input = StateVector::zero(1).with_ancilla(1);
    let dist = h.distribution();
    let mut naive = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let slots = [a, b].iter().map(|&k| SampledTerm { term: k, sign: 1.0, op: dist.ops[k] }).collect();
            let u = SampledCircuit { spec: spec.clone(), params: p, slots }.matrix();
            naive += 0.25 * expectation_state(&input.apply(&u).unwrap(), &o).unwrap();
        }
    }
    let mean = expectation_oracle(&h, &spec, &p).unwrap();
    let paired = expectation_state(&input.apply(&mean).unwrap(), &o).unwrap();
    assert!((naive - paired).abs() > 1e-2);
}

#[test]
fn density_variant_matches_pure_estimator() {
    let h = h2();
    let psi = StateVector::plus(2);
    let o = Observable::from_pauli(&PauliString::from_word("ZX").unwrap());
    let plan = phase_plan(6, 45);
    let opts = EstimatorOptions { shots_override: Some(4000), ..Default::default() };
    let a = algorithm2_with_plan(&h, &plan, &psi, &o, 0.1, 0.05, 46, &opts).unwrap();
    let b = algorithm2_density_with_plan(&h, &plan, &DensityOperator::from_state(&psi), &o, 0.1, 0.05, 47, &opts)
        .unwrap();
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() <= 4.0 * se);
}

#[test]
fn mixed_state_identity_observable_is_normalized_trace() {
    let h = h2();
    let rho = DensityOperator::maximally_mixed(2);
    let o = Observable::identity(2);
    let est = algorithm2_density(&h, &x2_half(), &rho, &o, 0.1, 0.05, 48).unwrap();
    let plan = Algorithm2Plan::new(&x2_half(), 0.1).unwrap();
    let scale = plan.effective_scale(&h);
    let (vals, _) = eigen(&h.dense_matrix()).unwrap();
    let want: f64 = vals.iter().map(|&e| x2_half().eval_real(e * scale).powi(2)).sum::<f64>() / 4.0;
    assert!((est.mean - want).abs() <= 0.1);
    assert!((est.mean - want).abs() <= 4.0 * est.stderr + 0.01);
}

#[test]
fn single_term_has_no_circuit_variance() {
    let h = HermitianDecomposition::new(2, [(0.8, PauliString::from_word("XZ").unwrap())]).unwrap();
    let rho = DensityOperator::from_state(&StateVector::plus(2));
    let o = Observable::from_pauli(&PauliString::from_word("ZI").unwrap());
    let est = algorithm2_density(&h, &x2_half(), &rho, &o, 0.2, 0.1, 49).unwrap();
    assert!(est.stderr < 1e-12);
    let pure = algorithm2_estimate(&h, &x2_half(), &StateVector::plus(2), &o, 0.2, 0.1, 50).unwrap();
    assert!(pure.stderr < 1e-12);
    assert!((pure.mean - est.mean).abs() < 1e-12);
}

#[test]
fn estimator_rejects_inadmissible_polynomials() {
    let h = h2();
    let psi = StateVector::plus(2);
    let o = Observable::identity(2);
    let big = DensePolynomial::from_real_coeffs(&[0.0, 0.0, 0.9]);
    assert!(algorithm2_estimate(&h, &big, &psi, &o, 0.1, 0.05, 0).is_err());
    let mixed = DensePolynomial::from_real_coeffs(&[0.1, 0.2]);
    assert!(algorithm2_estimate(&h, &mixed, &psi, &o, 0.1, 0.05, 0).is_err());
    assert!(algorithm2_estimate(&h, &x2_half(), &psi, &o, 0.1, 1.5, 0).is_err());
}

#[test]
fn estimates_repeat_under_a_seed() {
    let h = h2();
    let psi = StateVector::plus(2);
    let o = Observable::from_pauli(&PauliString::from_word("XX").unwrap());
    let a = algorithm2_estimate(&h, &x2_half(), &psi, &o, 0.2, 0.1, 9).unwrap();
    let b = algorithm2_estimate(&h, &x2_half(), &psi, &o, 0.2, 0.1, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seed, 9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn oracle_identity_holds_for_random_phases(seed in any::<u64>(), m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = HermitianDecomposition::new(
            1,
            [(rng.random_range(-1.0..1.0), PauliString::from_word("X").unwrap()),
             (rng.random_range(-1.0..1.0), PauliString::from_word("Z").unwrap())],
        ).unwrap();
        let p = DilationParams::new(m, 1.0).unwrap();
        let spec = random_phases(&mut rng, m);
        let want = build_u_phi(&normalized(&h), &spec, &p).unwrap();
        prop_assert!((expectation_oracle(&h, &spec, &p).unwrap() - want).camax() < 1e-12);
    }
}
