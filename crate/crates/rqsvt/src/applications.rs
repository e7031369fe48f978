//! Ground-state property estimation, spectral gaps, nested-commutator
//! prefactors and closed-form circuit-depth models.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::constants::{
    FILTER_DEGREE_CONSTANT, RANDOMIZED_LCU_CONSTANT, STANDARD_QSVT_QUERY_COST, THIS_WORK_DIRECT_CONSTANT,
};
use crate::densesim::{eigen, expectation_state, Observable, StateVector};
use crate::error::{dim, domain, Error, Result};
use crate::interleave::{fpaa_schedule, normalized_estimate, Algorithm3Mode, NormalizedConfig, NormalizedEstimate};
use crate::pauli::{build_tfim_hybrid, pauli_commutator, HermitianDecomposition, PauliString};
use crate::polyapprox::{groundstate_filter, LaurentPolynomial};
use crate::richardson::{choose_algorithm3_params, node_r, node_scale};

/// Largest system accepted by `spectral_gap`.
pub const MAX_GAP_QUBITS: usize = 14;
/// Largest system accepted by sampled-mode ground-state estimation.
pub const MAX_SAMPLED_GROUNDSTATE_QUBITS: usize = 8;
pub const MAX_EXHAUSTIVE_PREFACTOR_QUBITS: usize = 8;
pub const MAX_PRUNED_PREFACTOR_QUBITS: usize = 20;

/// Riemann zeta for `s > 1`: direct sum to `N = 64` plus an Euler-Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    let n = 64.0f64;
    let head: f64 = (1..64).map(|r| (r as f64).powf(-s)).sum();
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    head + tail
}

// ---------------------------------------------------------------------------
// Ground state

#[derive(Clone, Debug)]
pub struct GroundStateProblem {
    pub decomp: HermitianDecomposition,
    /// Center of the gap.
    pub mu: f64,
    /// Gap width around `mu`.
    pub delta: f64,
    /// Overlap lower bound of the guess with the ground state.
    pub gamma: f64,
    pub guess: StateVector,
    pub eps: f64,
}

impl GroundStateProblem {
    pub fn new(decomp: HermitianDecomposition, mu: f64, delta: f64, gamma: f64, guess: StateVector, eps: f64) -> Result<Self> {
        if !(delta > 0.0) || !(gamma > 0.0 && gamma < 1.0 + 1e-12) || !(eps > 0.0 && eps < 0.5) {
            return domain("ground-state problem needs Delta > 0, gamma in (0, 1] and eps in (0, 1/2)");
        }
        if guess.n != decomp.n() {
            return dim(format!("{}-qubit guess for a {}-qubit Hamiltonian", guess.n, decomp.n()));
        }
        if !guess.is_normalized() {
            return domain("guess state must be normalized");
        }
        Ok(GroundStateProblem { decomp, mu, delta, gamma, guess, eps })
    }

    /// `max(sum |c_k|, 1)`.
    pub fn lambda(&self) -> f64 {
        self.decomp.lambda().max(1.0)
    }

    /// Band error of the filter: `eps gamma / 8`.
    pub fn filter_eps(&self) -> f64 {
        self.eps * self.gamma / 8.0
    }

    /// Lower bound on `||P(e^{iH'}) guess||`.
    pub fn eta(&self) -> f64 {
        self.gamma - 2.0 * self.filter_eps()
    }

    pub fn filter(&self) -> Result<LaurentPolynomial> {
        let lam = self.lambda();
        groundstate_filter(self.mu / lam, self.delta / lam, self.filter_eps())
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateEstimate {
    pub value: f64,
    pub lambda: f64,
    pub filter_degree: usize,
    pub eta: f64,
    pub inner: NormalizedEstimate,
}

/// Estimates `<v0|O|v0>`: rescale to `H/lambda`, filter, then `normalized_estimate` at `eps/2`.
pub fn groundstate_estimate(
    problem: &GroundStateProblem,
    o: &Observable,
    cfg: &NormalizedConfig,
    seed: u64,
) -> Result<GroundStateEstimate> {
    let n = problem.decomp.n();
    if cfg.inner.mode == Algorithm3Mode::Sampled && n > MAX_SAMPLED_GROUNDSTATE_QUBITS {
        return Err(Error::Cap(format!("sampled ground-state estimation is capped at {MAX_SAMPLED_GROUNDSTATE_QUBITS} qubits")));
    }
    let lambda = problem.lambda();
    let scaled = problem.decomp.scaled(1.0 / lambda);
    let filter = problem.filter()?;
    let eta = problem.eta();
    let inner = normalized_estimate(&scaled, &filter, &problem.guess, o, eta, problem.eps / 2.0, seed, cfg)?;
    Ok(GroundStateEstimate { value: inner.value, lambda, filter_degree: filter.degree(), eta, inner })
}

/// Lowest eigenpair by dense diagonalization.
pub fn ground_state(decomp: &HermitianDecomposition) -> Result<(f64, StateVector)> {
    let (vals, vecs) = eigen(&decomp.dense_matrix())?;
    Ok((vals[0], StateVector { n: decomp.n(), amps: vecs.column(0).into_owned() }))
}

pub fn ground_state_expectation(decomp: &HermitianDecomposition, o: &Observable) -> Result<f64> {
    expectation_state(&ground_state(decomp)?.1, o)
}

// ---------------------------------------------------------------------------
// Spectral gap

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub xi0: f64,
    pub xi1: f64,
    pub gap: f64,
}

/// Two lowest eigenvalues. Real Hamiltonians with a global `X...X` or
/// `Z...Z` symmetry are split into its two parity sectors first.
pub fn spectral_gap(decomp: &HermitianDecomposition) -> Result<SpectralGap> {
    let n = decomp.n();
    if n > MAX_GAP_QUBITS {
        return Err(Error::Cap(format!("spectral_gap is capped at {MAX_GAP_QUBITS} qubits, got {n}")));
    }
    let mut low: Vec<f64> = if decomp.terms().iter().all(|t| t.op.y_count() % 2 == 0) {
        let full = (1u64 << n) - 1;
        let sym = [PauliString::from_masks(n, full, 0), PauliString::from_masks(n, 0, full)]
            .into_iter()
            .find(|p| decomp.terms().iter().all(|t| t.op.commutes(p)));
        match sym {
            Some(p) => [1.0, -1.0].iter().flat_map(|&s| lowest_two(parity_block(decomp, &p, s))).collect(),
            None => lowest_two(decomp.real_matrix().expect("real terms")),
        }
    } else {
        eigen(&decomp.dense_matrix())?.0.into_iter().take(2).collect()
    };
    low.sort_by(|a, b| a.total_cmp(b));
    if low.len() < 2 {
        return domain("need at least two eigenvalues");
    }
    Ok(SpectralGap { xi0: low[0], xi1: low[1], gap: low[1] - low[0] })
}

fn lowest_two(m: DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.truncate(2);
    v
}

/// Restriction of a real `H` to the `P = s` eigenspace of a real Pauli symmetry `P`.
fn parity_block(decomp: &HermitianDecomposition, p: &PauliString, s: f64) -> DMatrix<f64> {
    let d = 1usize << decomp.n();
    let x = p.x_mask() as usize;
    let phase = |b: usize| p.apply_basis(b).0.re;
    // Sector basis: |b> (x = 0, phase(b) = s) or (|b> + s phase(b) |b^x>)/sqrt2 with b < b^x.
    let reps: Vec<usize> = if x == 0 {
        (0..d).filter(|&b| phase(b) == s).collect()
    } else {
        (0..d).filter(|&b| b < b ^ x).collect()
    };
    let mut index = vec![usize::MAX; d];
    for (i, &b) in reps.iter().enumerate() {
        index[b] = i;
    }
    let mut m = DMatrix::zeros(reps.len(), reps.len());
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    for (col, &b) in reps.iter().enumerate() {
        let comps: Vec<(usize, f64)> =
            if x == 0 { vec![(b, 1.0)] } else { vec![(b, inv), (b ^ x, s * phase(b) * inv)] };
        for &(c, a) in &comps {
            for t in decomp.terms() {
                let (ph, e) = t.op.apply_basis(c);
                let amp = a * t.coeff * ph.re;
                let (row, w) = if x == 0 {
                    (index[e], 1.0)
                } else if e < e ^ x {
                    (index[e], inv)
                } else {
                    (index[e ^ x], s * phase(e ^ x) * inv)
                };
                m[(row, col)] += amp * w;
            }
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Nested-commutator prefactor

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrefactorMode {
    /// Every ordered triple (`k = 1` only).
    Exhaustive,
    /// Depth-first over letters that anticommute with the running commutator.
    Pruned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefactorResult {
    pub n: usize,
    pub k: usize,
    pub alpha_comm: f64,
    /// `alpha_comm^{1/(2k+1)}`.
    pub lambda_comm_prime: f64,
    pub tuples: u64,
    pub mode: PrefactorMode,
}

type Weighted = (Complex64, PauliString);

/// `[S_1, [S_2, ... [S_{len-1}, S_len]]]`, or `None` when it vanishes.
pub fn nested_commutator(word: &[(f64, PauliString)]) -> Result<Option<Weighted>> {
    let (last, rest) = match word.split_last() {
        Some(x) => x,
        None => return domain("empty word"),
    };
    let mut acc: Weighted = (Complex64::new(last.0, 0.0), last.1);
    for (c, p) in rest.iter().rev() {
        match pauli_commutator(p, &acc.1)? {
            Some((w, q)) => acc = (acc.0 * w * *c, q),
            None => return Ok(None),
        }
    }
    Ok(Some(acc))
}

/// Terms of the hybrid chain as positive weights (signs do not affect norms).
fn hybrid_letters(n: usize, h: f64, j: f64, g: f64, alpha: f64) -> Result<Vec<(f64, PauliString)>> {
    Ok(build_tfim_hybrid(n, h, j, g, alpha)?.terms().iter().map(|t| (t.coeff.abs(), t.op)).collect())
}

pub fn commutator_prefactor(n: usize, h: f64, j: f64, g: f64, alpha: f64, k: usize) -> Result<PrefactorResult> {
    let mode = if k == 1 && n <= MAX_EXHAUSTIVE_PREFACTOR_QUBITS { PrefactorMode::Exhaustive } else { PrefactorMode::Pruned };
    commutator_prefactor_with(n, h, j, g, alpha, k, mode)
}

pub fn commutator_prefactor_with(
    n: usize,
    h: f64,
    j: f64,
    g: f64,
    alpha: f64,
    k: usize,
    mode: PrefactorMode,
) -> Result<PrefactorResult> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    let letters = hybrid_letters(n, h, j, g, alpha)?;
    let (alpha_comm, tuples) = match mode {
        PrefactorMode::Exhaustive => {
            if k != 1 || n > MAX_EXHAUSTIVE_PREFACTOR_QUBITS {
                return Err(Error::Cap(format!(
                    "exhaustive mode needs k = 1 and n <= {MAX_EXHAUSTIVE_PREFACTOR_QUBITS}"
                )));
            }
            let total = letters
                .par_iter()
                .map(|s1| {
                    let mut sum = 0.0;
                    for s2 in &letters {
                        for s3 in &letters {
                            if let Some((w, _)) = nested_commutator(&[*s1, *s2, *s3]).expect("same width") {
                                sum += w.norm();
                            }
                        }
                    }
                    sum
                })
                .sum::<f64>();
            (total, (letters.len() as u64).pow(3))
        }
        PrefactorMode::Pruned => {
            if n > MAX_PRUNED_PREFACTOR_QUBITS {
                return Err(Error::Cap(format!("pruned mode is capped at {MAX_PRUNED_PREFACTOR_QUBITS} qubits")));
            }
            let (sum, count) = letters
                .par_iter()
                .map(|last| {
                    let mut acc = (0.0, 0u64);
                    descend(&letters, (Complex64::new(last.0, 0.0), last.1), 2 * k, &mut acc);
                    acc
                })
                .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            (sum, count)
        }
    };
    Ok(PrefactorResult {
        n,
        k,
        alpha_comm,
        lambda_comm_prime: alpha_comm.powf(1.0 / (2 * k + 1) as f64),
        tuples,
        mode,
    })
}

fn descend(letters: &[(f64, PauliString)], cur: Weighted, left: usize, acc: &mut (f64, u64)) {
    if left == 0 {
        acc.0 += cur.0.norm();
        acc.1 += 1;
        return;
    }
    for (c, p) in letters {
        if p.commutes(&cur.1) {
            continue;
        }
        let (w, q) = pauli_commutator(p, &cur.1).expect("same width").expect("anticommuting");
        descend(letters, (cur.0 * w * *c, q), left - 1, acc);
    }
}

/// Ladder word on one bond, outermost letter first. `a_heavy` selects the word with
/// `k + 1` field letters. On the bond `Z_i` and `X_i X_{i+1}` generate a closed loop
/// `XX -> YX -> {XX, ZI} -> YX`, so the word is a first step into `YX`, `k - 1`
/// round trips, and a last step out.
pub fn ladder_word(a_heavy: bool, k: usize) -> Result<Vec<PauliString>> {
    if k == 0 {
        return domain("ladder order k must be at least 1");
    }
    // 'a' = field letter, 'b' = coupling letter
    let (inner, first, same, other) = if a_heavy { ('b', 'a', 'a', 'b') } else { ('a', 'b', 'b', 'a') };
    let same_pairs = if k % 2 == 1 { (k - 1) / 2 } else { k / 2 };
    let last = if k % 2 == 1 { same } else { other };
    let mut letters = vec![inner, first];
    for t in 0..k - 1 {
        let c = if t < same_pairs { same } else { other };
        letters.extend([c, c]);
    }
    letters.push(last);
    letters.reverse();
    letters.into_iter().map(|c| PauliString::from_word(if c == 'a' { "ZII" } else { "XXI" })).collect()
}

/// Norms of the two ladder words on one bond, by explicit commutators.
pub fn ladder_norms(h: f64, j: f64, k: usize) -> Result<(f64, f64)> {
    let norm = |a_heavy: bool| -> Result<f64> {
        let w: Vec<_> = ladder_word(a_heavy, k)?
            .into_iter()
            .map(|p| (if p.letter(0) == 'Z' { h } else { j }, p))
            .collect();
        Ok(nested_commutator(&w)?.map_or(0.0, |x| x.0.norm()))
    };
    Ok((norm(true)?, norm(false)?))
}

/// `(2^{2k} h^{k+1} J^k, 2^{2k} h^k J^{k+1})`.
pub fn ladder_closed_form(h: f64, j: f64, k: usize) -> (f64, f64) {
    let f = 4f64.powi(k as i32);
    (f * h.powi(k as i32 + 1) * j.powi(k as i32), f * h.powi(k as i32) * j.powi(k as i32 + 1))
}

/// `2^{2k} min(h^{k+1} J^k, h^k J^{k+1}) n`.
pub fn prefactor_lower_bound(n: usize, h: f64, j: f64, k: usize) -> f64 {
    let (a, b) = ladder_closed_form(h, j, k);
    a.min(b) * n as f64
}

/// `n 2^{2k} (3 max(h, J) + 2 g zeta(alpha) / n)^{2k+1}`.
pub fn prefactor_upper_envelope(n: usize, h: f64, j: f64, g: f64, alpha: f64, k: usize) -> f64 {
    let nf = n as f64;
    nf * 4f64.powi(k as i32) * (3.0 * h.max(j) + 2.0 * g * zeta(alpha) / nf).powi(2 * k as i32 + 1)
}

// ---------------------------------------------------------------------------
// Depth models

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthMethod {
    StandardQsvt,
    QsvtTrotter,
    QetuTrotter,
    QetuQdrift,
    RandomizedLcu,
    ThisWorkDirect,
    ThisWorkQdrift,
}

impl DepthMethod {
    pub const ALL: [DepthMethod; 7] = [
        DepthMethod::StandardQsvt,
        DepthMethod::QsvtTrotter,
        DepthMethod::QetuTrotter,
        DepthMethod::QetuQdrift,
        DepthMethod::RandomizedLcu,
        DepthMethod::ThisWorkDirect,
        DepthMethod::ThisWorkQdrift,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            DepthMethod::StandardQsvt => "standard-qsvt",
            DepthMethod::QsvtTrotter => "qsvt-trotter-2k",
            DepthMethod::QetuTrotter => "qetu-trotter-2k",
            DepthMethod::QetuQdrift => "qetu-qdrift",
            DepthMethod::RandomizedLcu => "randomized-lcu",
            DepthMethod::ThisWorkDirect => "this-work-direct",
            DepthMethod::ThisWorkQdrift => "this-work-qdrift",
        }
    }
}

impl fmt::Display for DepthMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DepthMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DepthMethod::ALL
            .iter()
            .copied()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Domain(format!("unknown depth method '{s}'")))
    }
}

/// Inputs of the depth formulas. Either `d` or `delta` fixes the degree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthParams {
    pub l: Option<f64>,
    pub lambda: Option<f64>,
    pub d: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub eps: Option<f64>,
    pub kappa: Option<f64>,
    pub k: Option<u32>,
    pub lambda_comm: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthModel {
    pub method: DepthMethod,
    pub params: DepthParams,
}

fn need(v: Option<f64>, name: &str, method: DepthMethod) -> Result<f64> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => domain(format!("{method}: parameter {name} = {x} must be positive")),
        None => domain(format!("{method}: missing parameter {name}")),
    }
}

/// Depth `M + M r_1` of the extrapolation plan for `M` segments of strength `lambda`.
pub fn this_work_qdrift_depth(lambda: f64, big_m: f64, eps: f64) -> Result<f64> {
    if !(big_m >= 1.0) {
        return domain("need at least one segment");
    }
    let mm = big_m.round();
    let (m, s) = choose_algorithm3_params(lambda, mm as usize, eps)?;
    let k = node_scale(m, 1.0 / mm, s);
    Ok(mm + mm * node_r(k, 1, m))
}

/// Filter degree model `ceil(C (lambda / Delta) ln(8 / (gamma eps)))`.
pub fn filter_degree_model(lambda: f64, delta: f64, gamma: f64, eps: f64) -> f64 {
    (FILTER_DEGREE_CONSTANT * (lambda / delta) * (8.0 / (gamma * eps)).ln()).ceil()
}

impl DepthModel {
    pub fn new(method: DepthMethod, params: DepthParams) -> Self {
        DepthModel { method, params }
    }

    /// Laurent degree in `e^{iH/lambda}`.
    pub fn degree(&self) -> Result<f64> {
        let p = &self.params;
        let m = self.method;
        if let Some(d) = p.d {
            return need(Some(d), "d", m);
        }
        let lambda = need(p.lambda, "lambda", m)?.max(1.0);
        let eps = need(p.eps, "eps", m)?;
        if let Some(kappa) = p.kappa {
            return Ok((lambda * kappa * (2.0 / eps).ln()).ceil());
        }
        let delta = need(p.delta, "delta or d", m)?;
        let gamma = p.gamma.unwrap_or(1.0);
        Ok(filter_degree_model(lambda, delta, gamma, eps))
    }

    /// Amplification rounds; one when no overlap bound is given.
    pub fn rounds(&self) -> Result<f64> {
        match self.params.gamma {
            None => Ok(1.0),
            Some(g) => {
                let eps = need(self.params.eps, "eps", self.method)?;
                let eta = g * (1.0 - eps / 4.0);
                Ok(fpaa_schedule(eta.min(1.0), eps / 4.0)?.queries as f64)
            }
        }
    }

    pub fn eval(&self) -> Result<f64> {
        let p = &self.params;
        let m = self.method;
        let d = self.degree()?;
        let eps = need(p.eps, "eps", m)?;
        let lambda = need(p.lambda, "lambda", m)?.max(1.0);
        let queries = 2.0 * d * self.rounds()?;
        // Evolution time of H behind all queries.
        let time = queries / lambda;
        let trotter = |lc: f64, with_eps: bool| -> Result<f64> {
            let k = p.k.ok_or_else(|| Error::Domain(format!("{m}: missing parameter k")))?;
            if k == 0 {
                return domain(format!("{m}: k must be at least 1"));
            }
            let l = need(p.l, "L", m)?;
            let stages = 2.0 * 5f64.powi(k as i32 - 1);
            let expo = 1.0 + 1.0 / (2 * k) as f64;
            let mut steps = (lc * time).powf(expo);
            if with_eps {
                steps *= eps.powf(-1.0 / (2 * k) as f64);
            }
            Ok(l * stages * steps.ceil())
        };
        match m {
            DepthMethod::StandardQsvt => Ok(need(p.l, "L", m)? * STANDARD_QSVT_QUERY_COST * queries),
            DepthMethod::QsvtTrotter => trotter(need(p.lambda_comm, "lambda_comm", m)?, false),
            DepthMethod::QetuTrotter => trotter(need(p.lambda_comm, "lambda_comm", m)?, true),
            DepthMethod::QetuQdrift => Ok((2.0 * (lambda * time).powi(2) / eps).ceil()),
            DepthMethod::RandomizedLcu => Ok((RANDOMIZED_LCU_CONSTANT * (2.0 * d).powi(2) * (1.0 / eps).ln()).ceil()),
            DepthMethod::ThisWorkDirect => Ok((THIS_WORK_DIRECT_CONSTANT * (2.0 * d).powi(2) * (2.0 / eps).ln()).ceil()),
            DepthMethod::ThisWorkQdrift => this_work_qdrift_depth(1.0, queries, eps / 4.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub method: String,
    pub x: f64,
    pub depth: f64,
}

pub fn depth_model_eval(method: DepthMethod, sweep: &[(f64, DepthParams)]) -> Result<Vec<DepthRow>> {
    sweep
        .iter()
        .map(|&(x, params)| Ok(DepthRow { method: method.tag().into(), x, depth: DepthModel::new(method, params).eval()? }))
        .collect()
}

/// Depth inputs for the hybrid chain at size `n`, with `Delta = |h - J|` and
/// `lambda_comm = (alpha_per_site n)^{1/(2k+1)}`.
#[allow(clippy::too_many_arguments)]
pub fn hybrid_depth_params(
    n: usize,
    h: f64,
    j: f64,
    g: f64,
    alpha: f64,
    gamma: f64,
    eps: f64,
    k: u32,
    alpha_per_site: f64,
) -> DepthParams {
    let nf = n as f64;
    let l = if g > 0.0 { 2.0 * nf + nf * (nf - 1.0) / 2.0 } else { 2.0 * nf };
    DepthParams {
        l: Some(l),
        lambda: Some(crate::pauli::lambda_hybrid_closed_form(n, h, j, g, alpha)),
        d: None,
        delta: Some((h - j).abs()),
        gamma: Some(gamma),
        eps: Some(eps),
        kappa: None,
        k: Some(k),
        lambda_comm: Some((alpha_per_site * nf).powf(1.0 / (2 * k + 1) as f64)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// 95% interval for the slope.
    pub ci: (f64, f64),
    pub residual_rms: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn scaling_exponent(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() {
        return dim(format!("{} x values and {} y values", xs.len(), ys.len()));
    }
    if xs.len() < 4 {
        return domain("need at least four points");
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return domain("values must be positive and finite");
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * n {
        return domain("degenerate x values");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 2.0).map_err(|e| Error::Domain(e.to_string()))?.inverse_cdf(0.975);
    Ok(ScalingFit {
        slope,
        intercept,
        stderr,
        ci: (slope - t * stderr, slope + t * stderr),
        residual_rms: (sse / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((zeta(3.0) - 1.202_056_903_159_594_2).abs() < 1e-12);
    }

    #[test]
    fn method_tags_roundtrip() {
        for m in DepthMethod::ALL {
            assert_eq!(m.tag().parse::<DepthMethod>().unwrap(), m);
        }
    }
}
