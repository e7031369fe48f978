use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rqsvt::densesim::*;
use rqsvt::pauli::{HermitianDecomposition, PauliString};
use rqsvt::qdrift::*;
use rqsvt::seed::master_rng;

fn random_decomp(rng: &mut ChaCha8Rng, n: usize, terms: usize, lambda: f64) -> HermitianDecomposition {
    let d = 1u64 << n;
    let mut raw = Vec::new();
    while raw.len() < terms {
        let p = PauliString::from_masks(n, rng.random_range(0..d), rng.random_range(0..d));
        if p.is_identity() || raw.iter().any(|(_, q)| *q == p) {
            continue;
        }
        raw.push((rng.random::<f64>() * 2.0 - 1.0, p));
    }
    let h = HermitianDecomposition::new(n, raw).unwrap();
    h.scaled(lambda / h.lambda())
}

fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let d = 1 << n;
    let a = CMat::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let r = &a * a.adjoint();
    let tr = r.trace();
    r / tr
}

#[test]
fn first_order_halving_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..5 {
        let h = random_decomp(&mut rng, 2, 4, 0.9);
        let errs: Vec<f64> = [8.0, 16.0, 32.0, 64.0].iter().map(|r| first_order_error(&h, 1.0 / r).unwrap()).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..=2.4).contains(&ratio), "errors {:?}", errs);
        }
        let lam = h.lambda();
        for (e, r) in errs.iter().zip([8.0, 16.0, 32.0, 64.0]) {
            assert!(*e <= 2.0 * lam * lam / r * (2.0 * lam).exp());
        }
    }
}

#[test]
fn single_term_is_exact() {
    let h = HermitianDecomposition::new(2, [(0.8, PauliString::from_word("XZ").unwrap())]).unwrap();
    for r in [8.0, 16.0, 64.0] {
        assert!(first_order_error(&h, 1.0 / r).unwrap() < 1e-10);
    }
    let sched = QDriftSchedule::new(h.clone(), 1.0, 0.1, Direction::Forward).unwrap();
    let traj = sample_trajectory(&sched, &mut master_rng(3));
    let mut psi = StateVector::plus(2);
    let mut c = GateCounter::default();
    apply_trajectory(&mut psi, &traj, &mut c).unwrap();
    assert_eq!(c.gates, 10);
    let want = StateVector::plus(2).apply(&exact_evolution_decomp(&h, 1.0).unwrap()).unwrap();
    assert!((psi.inner(&want).norm() - 1.0).abs() < 1e-10);
}

#[test]
fn single_term_channel_is_unitary_conjugation() {
    let h = HermitianDecomposition::new(1, [(-0.4, PauliString::from_word("Y").unwrap())]).unwrap();
    let e = exact_parametrized_channel(&h, 0.5, 2.0).unwrap();
    let u = exact_evolution_decomp(&h, 0.5 * 2.0).unwrap();
    assert!((e.mat - SuperoperatorMatrix::unitary(&u).mat).norm() < 1e-12);
}

#[test]
fn small_step_channel_near_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random_decomp(&mut rng, 2, 5, 1.0);
    for s in [0.1, 0.01, 0.001] {
        let e = exact_parametrized_channel(&h, s, 1.0).unwrap();
        let dist = choi_distance(&e, &SuperoperatorMatrix::identity(4)).unwrap();
        assert!(dist <= 2.0 * s * h.lambda());
    }
}

#[test]
fn channel_is_cptp() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..3 {
        let h = random_decomp(&mut rng, 2, 6, 1.3);
        assert!(exact_parametrized_channel(&h, 0.2, 1.0).unwrap().is_cptp(1e-9));
    }
}

#[test]
fn validity_region_enforced() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = random_decomp(&mut rng, 2, 3, 1.0);
    assert!(exact_parametrized_channel(&h, 0.6, 1.0).is_err());
    assert!(first_order_error(&h, 0.3).is_err());
}

#[test]
fn generator_matches_hamiltonian_commutator() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = random_decomp(&mut rng, 2, 4, 0.8);
    let t = 1.5;
    let step = 1e-4;
    let ep = exact_parametrized_channel(&h, step, t).unwrap();
    let em = exact_parametrized_channel_dir(&h, step, t, Direction::Backward).unwrap();
    let deriv = (ep.mat - em.mat) / Complex64::new(2.0 * step, 0.0);
    // i T ad_H as a superoperator: rho -> i T (H rho - rho H)
    let hm = h.dense_matrix();
    let gen = SuperoperatorMatrix::from_map(4, |rho| (&hm * rho - rho * &hm) * Complex64::new(0.0, t));
    assert!((deriv - gen.mat).camax() < 1e-6);
}

#[test]
fn trajectory_matches_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_decomp(&mut rng, 3, 5, 1.0);
    let sched = QDriftSchedule::new(h, 0.7, 0.05, Direction::Forward).unwrap();
    let traj = sample_trajectory(&sched, &mut master_rng(10));
    assert_eq!(traj.len(), 14);
    let mut u = CMat::identity(8, 8);
    for s in &traj.steps {
        let m = s.op.matrix();
        let rot = CMat::identity(8, 8) * Complex64::new(s.angle.cos(), 0.0) + m * Complex64::new(0.0, s.angle.sin());
        u = rot * u;
    }
    assert!((traj.unitary(3) - &u).norm() < 1e-12);
    let mut rho = DensityOperator::from_state(&StateVector::plus(3));
    let mut c = GateCounter::default();
    apply_trajectory(&mut rho, &traj, &mut c).unwrap();
    let want = &u * DensityOperator::from_state(&StateVector::plus(3)).mat * u.adjoint();
    assert!((rho.mat - want).norm() < 1e-12);
    assert_eq!(c.gates, 14);
}

#[test]
fn empty_trajectory_is_identity() {
    let mut psi = StateVector::plus(2);
    let mut c = GateCounter::default();
    apply_trajectory(&mut psi, &Trajectory::default(), &mut c).unwrap();
    assert_eq!(psi, StateVector::plus(2));
    assert_eq!(c.gates, 0);
}

#[test]
fn seeded_sampling_repeats() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = random_decomp(&mut rng, 2, 4, 1.0);
    let sched = QDriftSchedule::new(h, 1.0, 0.1, Direction::Forward).unwrap();
    assert_eq!(sample_trajectory(&sched, &mut master_rng(5)), sample_trajectory(&sched, &mut master_rng(5)));
}

#[test]
fn monte_carlo_average_matches_channel_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = random_decomp(&mut rng, 2, 4, 1.0);
    let (t_total, step) = (1.0, 0.25);
    let sched = QDriftSchedule::new(h.clone(), t_total, step, Direction::Forward).unwrap();
    let rho0 = random_density(&mut rng, 2);
    let mut avg = CMat::zeros(4, 4);
    let shots = 10_000;
    let mut srng = master_rng(13);
    for _ in 0..shots {
        let traj = sample_trajectory(&sched, &mut srng);
        let mut rho = DensityOperator { n: 2, mat: rho0.clone() };
        apply_trajectory(&mut rho, &traj, &mut GateCounter::default()).unwrap();
        avg += rho.mat;
    }
    avg /= Complex64::new(shots as f64, 0.0);
    let chan = exact_parametrized_channel(&h, step, 1.0).unwrap().pow(sched.n_steps);
    assert!((avg - chan.apply(&rho0)).camax() < 5e-2);
}

#[test]
fn transfer_matrix_matches_superoperator() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let h = random_decomp(&mut rng, 2, 5, 1.0);
    let s = 0.1;
    let dist = h.distribution();
    let items: Vec<_> = (0..dist.len()).map(|k| (dist.probs[k], dist.ops[k], dist.signs[k] * s * h.lambda(), None)).collect();
    let ptm = PauliTransferMatrix::rotation_mixture(2, &items).unwrap().pow(7);
    let sup = exact_parametrized_channel(&h, s, 1.0).unwrap().pow(7);
    let rho = random_density(&mut rng, 2);
    assert!((ptm.apply(&rho) - sup.apply(&rho)).camax() < 1e-12);
}

#[test]
fn controlled_transfer_matrix_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let p = PauliString::from_word("IXY").unwrap();
    for &(c, v) in &[(0usize, false), (0, true)] {
        let theta = 0.37;
        let ptm = PauliTransferMatrix::rotation_mixture(3, &[(1.0, p, theta, Some((c, v)))]).unwrap();
        let mut u = CMat::identity(8, 8);
        for j in 0..8 {
            let mut col = StateVector::from_amps(u.column(j).into_owned()).unwrap();
            col.rotate(&p, theta, Some((c, v))).unwrap();
            u.set_column(j, &col.amps);
        }
        let rho = random_density(&mut rng, 3);
        assert!((ptm.apply(&rho) - &u * &rho * u.adjoint()).camax() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn channel_trace_preserving(seed in any::<u64>(), s in 0.01f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_decomp(&mut rng, 2, 3, 1.0);
        let e = exact_parametrized_channel(&h, s, 1.0).unwrap();
        let rho = random_density(&mut rng, 2);
        prop_assert!((e.apply(&rho).trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
