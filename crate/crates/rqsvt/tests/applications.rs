use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rqsvt::applications::*;
use rqsvt::densesim::*;
use rqsvt::interleave::*;
use rqsvt::pauli::*;

fn zz3() -> f64 {
    2.0 * (3.0 - zeta(3.0))
}

#[test]
fn nearest_neighbor_gap() {
    let h = build_tfim_hybrid(10, 3.0, 1.0, 0.0, 3.0).unwrap();
    let g = spectral_gap(&h).unwrap();
    assert!((g.gap - 4.0).abs() <= 0.05 * 4.0, "{g:?}");
}

#[test]
fn long_range_gap_bracket() {
    // reference values from an independent sparse eigensolver
    let periodic = [(8, 3.546935794593381), (12, 3.485204008681869)];
    for n in 8..=12 {
        let h = build_tfim_long_range_with(n, 3.0, 1.0, 3.0, Boundary::Periodic).unwrap();
        let g = spectral_gap(&h).unwrap();
        assert!((3.0..=3.6).contains(&g.gap), "n={n}: {g:?}");
        assert!(g.gap < zz3(), "n={n}: {g:?}");
        if let Some(&(_, want)) = periodic.iter().find(|x| x.0 == n) {
            assert!((g.gap - want).abs() < 1e-8, "n={n}: {} vs {want}", g.gap);
        }
    }
    assert!((zz3() - 3.5959).abs() < 1e-4);
}

#[test]
fn open_chain_gap_approaches_from_above() {
    let open = [(8, 3.826245202663724), (9, 3.7704528175348955), (10, 3.7262923218850084)];
    let mut prev = f64::INFINITY;
    for (n, want) in open {
        let g = spectral_gap(&build_tfim_long_range(n, 3.0, 1.0, 3.0).unwrap()).unwrap();
        assert!((g.gap - want).abs() < 1e-8, "n={n}: {} vs {want}", g.gap);
        assert!(g.gap < prev && g.gap > zz3());
        prev = g.gap;
    }
}

#[test]
fn hybrid_gap_lower_bound() {
    assert!(0.1 < 2.0 / (2.0 * zeta(3.0)));
    for n in [6, 8, 10] {
        let g = spectral_gap(&build_tfim_hybrid(n, 3.0, 1.0, 0.1, 3.0).unwrap()).unwrap();
        assert!(g.gap >= 2.0, "n={n}: {g:?}");
    }
}

#[test]
fn gap_grows_with_field() {
    let gaps: Vec<f64> = [1.5, 2.0, 2.5, 3.0, 3.5]
        .iter()
        .map(|&h| spectral_gap(&build_tfim_hybrid(8, h, 1.0, 0.0, 3.0).unwrap()).unwrap().gap)
        .collect();
    for w in gaps.windows(2) {
        assert!(w[1] > w[0], "{gaps:?}");
    }
}

#[test]
fn sectors_match_dense_spectrum() {
    for h in [build_tfim_long_range(6, 3.0, 1.0, 3.0).unwrap(), build_tfim_hybrid(6, 0.7, 1.0, 0.4, 2.0).unwrap()] {
        let g = spectral_gap(&h).unwrap();
        let (vals, _) = eigen(&h.dense_matrix()).unwrap();
        assert!((g.xi0 - vals[0]).abs() < 1e-10);
        assert!((g.xi1 - vals[1]).abs() < 1e-10);
    }
    // No parity symmetry, complex terms.
    let h = HermitianDecomposition::new(
        3,
        [(0.5, PauliString::from_word("XYZ").unwrap()), (-0.3, PauliString::from_word("ZIX").unwrap()), (0.2, PauliString::from_word("IYI").unwrap())],
    )
    .unwrap();
    let g = spectral_gap(&h).unwrap();
    let (vals, _) = eigen(&h.dense_matrix()).unwrap();
    assert!((g.gap - (vals[1] - vals[0])).abs() < 1e-10);
}

#[test]
fn gap_cap() {
    let h = build_tfim_hybrid(15, 3.0, 1.0, 0.0, 3.0).unwrap();
    assert!(matches!(spectral_gap(&h), Err(rqsvt::Error::Cap(_))));
}

#[test]
fn ladder_norms_are_exact() {
    for k in 1..=3 {
        for (h, j) in [(3.0, 1.0), (0.5, 2.0)] {
            assert_eq!(ladder_norms(h, j, k).unwrap(), ladder_closed_form(h, j, k));
        }
    }
    assert_eq!(ladder_norms(3.0, 1.0, 1).unwrap(), (36.0, 12.0));
    let p = |w: &str| PauliString::from_word(w).unwrap();
    assert_eq!(ladder_word(true, 1).unwrap(), vec![p("ZII"), p("ZII"), p("XXI")]);
}

#[test]
fn strictly_alternating_words_vanish_past_first_order() {
    let a = (3.0, PauliString::from_word("ZII").unwrap());
    let b = (1.0, PauliString::from_word("XXI").unwrap());
    // ad_A ad_B ad_A ad_A (B): ad_A ad_A (B) is proportional to B
    assert!(nested_commutator(&[a.clone(), b.clone(), a.clone(), a.clone(), b.clone()]).unwrap().is_none());
    assert!(nested_commutator(&[a.clone(), b.clone(), a.clone(), b.clone(), a]).unwrap().is_none());
}

#[test]
fn nested_commutator_examples() {
    let p = |w: &str| PauliString::from_word(w).unwrap();
    let (w, q) = nested_commutator(&[(1.0, p("XX")), (1.0, p("XX")), (3.0, p("ZI"))]).unwrap().unwrap();
    assert_eq!(q, p("ZI"));
    assert!((w - Complex64::new(12.0, 0.0)).norm() < 1e-12);
    assert!(nested_commutator(&[(1.0, p("ZI")), (1.0, p("IZ")), (1.0, p("ZZ"))]).unwrap().is_none());
}

#[test]
fn prefactor_bounds_and_linearity() {
    let (h, j, g, a) = (3.0, 1.0, 0.1, 3.0);
    let mut per_site = Vec::new();
    for n in 4..=8 {
        let r = commutator_prefactor(n, h, j, g, a, 1).unwrap();
        assert_eq!(r.mode, PrefactorMode::Exhaustive);
        assert!(r.alpha_comm >= 12.0 * n as f64);
        assert!(r.alpha_comm >= prefactor_lower_bound(n, h, j, 1));
        assert!(r.alpha_comm <= prefactor_upper_envelope(n, h, j, g, a, 1), "n={n}: {}", r.alpha_comm);
        assert!((r.lambda_comm_prime.powi(3) - r.alpha_comm).abs() < 1e-9 * r.alpha_comm);
        per_site.push(r.alpha_comm / n as f64);
    }
    let lo = per_site.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = per_site.iter().cloned().fold(0.0, f64::max);
    assert!(hi / lo < 1.25, "{per_site:?}");
}

#[test]
fn pruned_matches_exhaustive() {
    for n in [4, 6] {
        let e = commutator_prefactor_with(n, 3.0, 1.0, 0.1, 3.0, 1, PrefactorMode::Exhaustive).unwrap();
        let p = commutator_prefactor_with(n, 3.0, 1.0, 0.1, 3.0, 1, PrefactorMode::Pruned).unwrap();
        assert!((e.alpha_comm - p.alpha_comm).abs() < 1e-9 * e.alpha_comm);
        assert!(p.tuples < e.tuples);
    }
    let big = commutator_prefactor(16, 3.0, 1.0, 0.1, 3.0, 1).unwrap();
    assert_eq!(big.mode, PrefactorMode::Pruned);
    assert!(big.alpha_comm >= 12.0 * 16.0);
    assert!(commutator_prefactor_with(9, 3.0, 1.0, 0.1, 3.0, 1, PrefactorMode::Exhaustive).is_err());
    assert!(commutator_prefactor(21, 3.0, 1.0, 0.1, 3.0, 1).is_err());
}

#[test]
fn third_order_prefactor_grows_linearly_for_k2() {
    let a: Vec<f64> = [4, 5, 6]
        .iter()
        .map(|&n| commutator_prefactor(n, 1.0, 1.0, 0.0, 3.0, 2).unwrap().alpha_comm / n as f64)
        .collect();
    assert!(a.iter().all(|v| *v >= 16.0));
    assert!((a[2] - a[1]).abs() < 1e-9 * a[1], "{a:?}");
}

fn tfim3() -> HermitianDecomposition {
    build_tfim_long_range(3, 3.0, 1.0, 3.0).unwrap()
}

fn problem_with_guess(guess: StateVector, gamma: f64, eps: f64) -> GroundStateProblem {
    let h = tfim3();
    let g = spectral_gap(&h).unwrap();
    GroundStateProblem::new(h, (g.xi0 + g.xi1) / 2.0, g.gap, gamma, guess, eps).unwrap()
}

#[test]
fn ground_state_exact_guess() {
    let h = tfim3();
    let (_, v0) = ground_state(&h).unwrap();
    let pr = problem_with_guess(v0.clone(), 1.0, 0.05);
    for word in ["ZII", "XII"] {
        let o = Observable::from_pauli(&PauliString::from_word(word).unwrap());
        let want = expectation_state(&v0, &o).unwrap();
        for mode in [NormalizationMode::Amplified, NormalizationMode::Ratio] {
            // exact channel: depth is reported but not budgeted
            let cfg = NormalizedConfig { mode, inner: Algorithm3Config::exact(), max_gates: u64::MAX, ..Default::default() };
            let est = groundstate_estimate(&pr, &o, &cfg, 0).unwrap();
            assert!((est.value - want).abs() <= 0.05, "{word} {mode:?}: {} vs {want}", est.value);
            assert_eq!(est.inner.mode, mode);
        }
    }
}

#[test]
fn ground_state_mixed_guess() {
    let h = tfim3();
    let (_, vecs) = eigen(&h.dense_matrix()).unwrap();
    let amps = vecs.column(0) * Complex64::new(0.6f64.sqrt(), 0.0) + vecs.column(1) * Complex64::new(0.0, 0.4f64.sqrt());
    let guess = StateVector { n: 3, amps };
    let v0 = StateVector { n: 3, amps: vecs.column(0).into_owned() };
    let pr = problem_with_guess(guess, 0.5, 0.05);
    let o = Observable::from_pauli(&PauliString::from_word("ZII").unwrap());
    let want = expectation_state(&v0, &o).unwrap();
    for mode in [NormalizationMode::Amplified, NormalizationMode::Ratio] {
        let cfg = NormalizedConfig { mode, inner: Algorithm3Config::exact(), max_gates: u64::MAX, ..Default::default() };
        let est = groundstate_estimate(&pr, &o, &cfg, 7).unwrap();
        assert!((est.value - want).abs() <= 0.05, "{mode:?}: {} vs {want}", est.value);
        assert_eq!(est.inner.mode, mode);
    }
}

#[test]
fn orthogonal_guess_is_flagged() {
    let h = tfim3();
    let (_, vecs) = eigen(&h.dense_matrix()).unwrap();
    let guess = StateVector { n: 3, amps: vecs.column(1).into_owned() };
    let pr = problem_with_guess(guess, 0.5, 0.05);
    let o = Observable::from_pauli(&PauliString::from_word("XII").unwrap());
    let cfg = NormalizedConfig { mode: NormalizationMode::Ratio, inner: Algorithm3Config::exact(), ..Default::default() };
    match groundstate_estimate(&pr, &o, &cfg, 0) {
        Err(rqsvt::Error::Domain(msg)) => assert!(msg.contains("below eta"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn filter_degree_tracks_inverse_gap() {
    let h = tfim3();
    let g = spectral_gap(&h).unwrap();
    let mu = (g.xi0 + g.xi1) / 2.0;
    let (_, v0) = ground_state(&h).unwrap();
    let d1 = GroundStateProblem::new(h.clone(), mu, g.gap, 0.5, v0.clone(), 0.05).unwrap().filter().unwrap().degree() as f64;
    let d2 = GroundStateProblem::new(h, mu, g.gap / 2.0, 0.5, v0, 0.05).unwrap().filter().unwrap().degree() as f64;
    let ratio = d2 / d1;
    assert!((ratio / 2.0 - 1.0).abs() <= 0.4, "{d1} {d2}");
}

#[test]
fn problem_validation() {
    let psi = StateVector::plus(3);
    assert!(GroundStateProblem::new(tfim3(), 0.0, -1.0, 0.5, psi.clone(), 0.1).is_err());
    assert!(GroundStateProblem::new(tfim3(), 0.0, 1.0, 0.0, psi.clone(), 0.1).is_err());
    assert!(GroundStateProblem::new(tfim3(), 0.0, 1.0, 0.5, StateVector::plus(2), 0.1).is_err());
    let big = build_tfim_long_range(9, 3.0, 1.0, 3.0).unwrap();
    let pr = GroundStateProblem::new(big, -30.0, 3.0, 0.5, StateVector::plus(9), 0.1).unwrap();
    let o = Observable::from_pauli(&PauliString::from_sites(9, &[(0, 'Z')]).unwrap());
    assert!(matches!(groundstate_estimate(&pr, &o, &NormalizedConfig::default(), 0), Err(rqsvt::Error::Cap(_))));
}

fn slope_of(method: DepthMethod, alpha_per_site: f64) -> f64 {
    let ns: Vec<usize> = (6..=12).map(|e| 1usize << e).collect();
    let sweep: Vec<(f64, DepthParams)> =
        ns.iter().map(|&n| (n as f64, hybrid_depth_params(n, 3.0, 1.0, 0.1, 3.0, 0.1, 0.01, 1, alpha_per_site))).collect();
    let rows = depth_model_eval(method, &sweep).unwrap();
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.depth).collect();
    scaling_exponent(&xs, &ys).unwrap().slope
}

#[test]
fn depth_slopes() {
    let a = commutator_prefactor(16, 3.0, 1.0, 0.1, 3.0, 1).unwrap().alpha_comm / 16.0;
    for (m, want) in [
        (DepthMethod::ThisWorkQdrift, 2.0),
        (DepthMethod::QetuQdrift, 2.0),
        (DepthMethod::QsvtTrotter, 2.5),
        (DepthMethod::QetuTrotter, 2.5),
        (DepthMethod::StandardQsvt, 3.0),
        (DepthMethod::RandomizedLcu, 2.0),
        (DepthMethod::ThisWorkDirect, 2.0),
    ] {
        let s = slope_of(m, a);
        assert!((s - want).abs() <= 0.15, "{m}: {s}");
    }
}

#[test]
fn depth_model_matches_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let m = rng.random_range(1..40usize);
        let lam = rng.random_range(0.2..3.0);
        let eps = rng.random_range(1e-4..0.3);
        let hams = vec![HermitianDecomposition::new(1, [(lam, PauliString::from_word("X").unwrap())]).unwrap(); m];
        let w = InterleavedCircuit::new(1, vec![Layer::Identity; m + 1], hams).unwrap();
        if 8.0 * lam * (m as f64) < 1.0 {
            continue;
        }
        let (_, plan) = algorithm3_plan(&w, eps, &Algorithm3Config::default()).unwrap();
        assert_eq!(this_work_qdrift_depth(lam, m as f64, eps).unwrap(), w.depth(plan.r[0]) as f64);
    }
}

#[test]
fn depth_model_needs_parameters() {
    let p = DepthParams { lambda: Some(10.0), delta: Some(1.0), eps: Some(0.01), ..Default::default() };
    assert!(DepthModel::new(DepthMethod::StandardQsvt, p).eval().is_err());
    assert!(DepthModel::new(DepthMethod::QsvtTrotter, DepthParams { l: Some(5.0), ..p }).eval().is_err());
    assert!(DepthModel::new(DepthMethod::QetuQdrift, p).eval().is_ok());
    assert!(DepthModel::new(DepthMethod::QetuQdrift, DepthParams { eps: None, ..p }).eval().is_err());
    assert!("nope".parse::<DepthMethod>().is_err());
}

#[test]
fn scaling_exponent_examples() {
    let xs: Vec<f64> = (1..=6).map(|i| (i * 10) as f64).collect();
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    assert!((scaling_exponent(&xs, &sq).unwrap().slope - 2.0).abs() < 1e-12);
    let flat = vec![7.0; xs.len()];
    let f = scaling_exponent(&xs, &flat).unwrap();
    assert!(f.slope.abs() < 1e-12 && f.stderr < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs: Vec<f64> = (0..20).map(|i| 2f64.powf(1.0 + i as f64 * 0.4)).collect();
    let noisy: Vec<f64> = xs.iter().map(|x| x.powf(2.5) * (1.0 + 0.1 * (rng.random::<f64>() - 0.5))).collect();
    let f = scaling_exponent(&xs, &noisy).unwrap();
    assert!((f.slope - 2.5).abs() < 0.1);
    assert!(f.ci.0 < 2.5 && 2.5 < f.ci.1);
    assert!(scaling_exponent(&xs[..3], &noisy[..3]).is_err());
    assert!(scaling_exponent(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    assert!(scaling_exponent(&[1.0, 2.0, 3.0, -4.0], &[1.0; 4]).is_err());
}

#[test]
fn lambda_closed_forms() {
    let lr = build_tfim_long_range(4, 3.0, 1.0, 3.0).unwrap();
    assert!((lr.lambda() - 15.287037).abs() < 1e-6);
    assert!((lambda_long_range_closed_form(4, 3.0, 1.0, 3.0) - lr.lambda()).abs() < 1e-12);
    let hy = build_tfim_hybrid(4, 3.0, 1.0, 0.1, 3.0).unwrap();
    assert!((hy.lambda() - 16.082176).abs() < 1e-6);
    assert!((lambda_hybrid_closed_form(4, 3.0, 1.0, 0.1, 3.0) - hy.lambda()).abs() < 1e-12);
}
