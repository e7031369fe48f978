//! Randomized alternating-phase circuits built from sampled dilations
//! `U_k = [[cI, s H_k], [s H_k^dag, -cI]]`.
//!
//! Layout: the ancilla is the leading qubit. `Pi = |1><1| (x) I` and
//! `Pi~ = |0><0| (x) I`. For even `m` the polynomial sits in the
//! ancilla-1 diagonal block; for odd `m` it sits in the (0, 1) block.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densesim::{eigen, CMat, CVec, DensityOperator, Observable, StateVector};
use crate::error::{dim, domain, Error, Result};
use crate::pauli::{HermitianDecomposition, PauliString};
use crate::polyapprox::{
    compose_rescaled_adaptive, solve_qsp_phases_m, DensePolynomial, Parity, QSPPhaseSequence, RescaleParams,
};
use crate::seed::child_rng;

/// Enumeration cap for `expectation_oracle`.
pub const ORACLE_MAX_SEQUENCES: usize = 1_000_000;

/// Phase-solver tolerance used by Algorithm 2.
pub const PHASE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationParams {
    pub c: f64,
    pub s: f64,
    pub m: usize,
    pub alpha: f64,
}

impl DilationParams {
    pub fn new(m: usize, alpha: f64) -> Result<Self> {
        if m == 0 {
            return domain("sequence length must be positive");
        }
        let s = 1.0 / (m as f64).sqrt();
        let c = (1.0 - 1.0 / m as f64).sqrt();
        Ok(DilationParams { c, s, m, alpha })
    }

    pub fn from_rescale(p: &RescaleParams) -> Self {
        DilationParams { c: p.c, s: p.s, m: p.m, alpha: p.alpha }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternatingSequenceSpec {
    pub phases: Vec<f64>,
}

impl AlternatingSequenceSpec {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return domain("empty phase sequence");
        }
        Ok(AlternatingSequenceSpec { phases })
    }

    pub fn m(&self) -> usize {
        self.phases.len()
    }

    pub fn parity(&self) -> Parity {
        Parity::of_degree(self.m())
    }

    /// Ancilla value on which the output block lives: 1 for even `m`, 0 for odd.
    pub fn output_ancilla(&self) -> u8 {
        if self.m() % 2 == 0 {
            1
        } else {
            0
        }
    }

    /// Slot `i` (0-based) is preceded by a `Pi~` phase and uses `U`
    /// when `m - 1 - i` is even, otherwise a `Pi` phase and `U^dag`.
    pub fn is_tilde_slot(&self, i: usize) -> bool {
        (self.m() - 1 - i) % 2 == 0
    }

    pub fn negated(&self) -> Self {
        AlternatingSequenceSpec { phases: self.phases.iter().map(|p| -p).collect() }
    }
}

impl From<QSPPhaseSequence> for AlternatingSequenceSpec {
    fn from(q: QSPPhaseSequence) -> Self {
        AlternatingSequenceSpec { phases: q.phases }
    }
}

fn spectral_norm(h: &CMat) -> f64 {
    h.clone().singular_values().iter().fold(0.0f64, |m, &v| m.max(v))
}

pub fn build_u(h: &CMat, c: f64, s: f64) -> Result<CMat> {
    if !h.is_square() {
        return dim("build_u expects a square block");
    }
    let nrm = spectral_norm(h);
    if nrm > 1.0 + 1e-10 {
        return domain(format!("||H|| = {nrm} exceeds 1"));
    }
    let d = h.nrows();
    let mut u = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        u[(i, i)] = Complex64::new(c, 0.0);
        u[(d + i, d + i)] = Complex64::new(-c, 0.0);
    }
    let cs = Complex64::new(s, 0.0);
    u.view_mut((0, d), (d, d)).copy_from(&(h * cs));
    u.view_mut((d, 0), (d, d)).copy_from(&(h.adjoint() * cs));
    Ok(u)
}

/// Diagonal of `e^{i phi (2 Pi~ - I)}` (tilde) or `e^{i phi (2 Pi - I)}`.
fn phase_diag(phi: f64, tilde: bool) -> (Complex64, Complex64) {
    let p = Complex64::from_polar(1.0, phi);
    if tilde {
        (p, p.conj())
    } else {
        (p.conj(), p)
    }
}

fn scale_rows(m: &mut CMat, phi: f64, tilde: bool) {
    let d = m.nrows() / 2;
    let (a0, a1) = phase_diag(phi, tilde);
    for mut r in m.rows_mut(0, d).row_iter_mut() {
        r *= a0;
    }
    for mut r in m.rows_mut(d, d).row_iter_mut() {
        r *= a1;
    }
}

/// The alternating product with slot `i` using `slot(i)` in place of `U`.
fn alternating_product(spec: &AlternatingSequenceSpec, dim2: usize, slot: impl Fn(usize) -> CMat) -> CMat {
    let mut out = CMat::identity(dim2, dim2);
    for i in (0..spec.m()).rev() {
        let tilde = spec.is_tilde_slot(i);
        let u = slot(i);
        out = if tilde { u * out } else { u.adjoint() * out };
        scale_rows(&mut out, spec.phases[i], tilde);
    }
    out
}

pub fn build_u_phi(h: &CMat, spec: &AlternatingSequenceSpec, params: &DilationParams) -> Result<CMat> {
    if spec.m() != params.m {
        return dim(format!("{} phases for m = {}", spec.m(), params.m));
    }
    let u = build_u(h, params.c, params.s)?;
    Ok(alternating_product(spec, 2 * h.nrows(), |_| u.clone()))
}

/// The block of `U_Phi` holding the polynomial: `Pi U Pi` (even m) or `Pi~ U Pi` (odd m).
pub fn output_block(u_phi: &CMat, spec: &AlternatingSequenceSpec) -> CMat {
    let d = u_phi.nrows() / 2;
    let row = if spec.output_ancilla() == 1 { d } else { 0 };
    u_phi.view((row, d), (d, d)).into_owned()
}

/// One sampled slot: `H_k = sign * P`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledTerm {
    pub term: usize,
    pub sign: f64,
    pub op: PauliString,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledCircuit {
    pub spec: AlternatingSequenceSpec,
    pub params: DilationParams,
    pub slots: Vec<SampledTerm>,
}

fn apply_dilation(v: &mut CVec, t: &SampledTerm, c: f64, s: f64) {
    let d = v.len() / 2;
    let old = v.clone();
    for b in 0..d {
        let (ph, b2) = t.op.apply_basis(b);
        let w = ph * (s * t.sign);
        // U [a0; a1] = [c a0 + s H a1; s H a0 - c a1], H Hermitian.
        v[b2] = c * old[b2] + w * old[d + b];
        v[d + b2] = w * old[b] - c * old[d + b2];
    }
}

impl SampledCircuit {
    pub fn qubits(&self) -> usize {
        self.slots.first().map(|t| t.op.n()).unwrap_or(0) + 1
    }

    /// Apply the circuit, optionally with all phases negated.
    pub fn apply(&self, v: &mut CVec, negate: bool) {
        let sign = if negate { -1.0 } else { 1.0 };
        let d = v.len() / 2;
        for i in (0..self.spec.m()).rev() {
            apply_dilation(v, &self.slots[i], self.params.c, self.params.s);
            let (a0, a1) = phase_diag(sign * self.spec.phases[i], self.spec.is_tilde_slot(i));
            for j in 0..d {
                v[j] *= a0;
                v[d + j] *= a1;
            }
        }
    }

    pub fn matrix(&self) -> CMat {
        let n = 1usize << self.qubits();
        let mut u = CMat::identity(n, n);
        for j in 0..n {
            let mut col: CVec = u.column(j).into_owned();
            self.apply(&mut col, false);
            u.set_column(j, &col);
        }
        u
    }
}

pub fn sample_circuit<R: Rng + ?Sized>(
    decomp: &HermitianDecomposition,
    spec: &AlternatingSequenceSpec,
    params: &DilationParams,
    rng: &mut R,
) -> Result<SampledCircuit> {
    if decomp.is_empty() {
        return domain("cannot sample from an empty decomposition");
    }
    if spec.m() != params.m {
        return dim(format!("{} phases for m = {}", spec.m(), params.m));
    }
    let dist = decomp.distribution();
    let slots = (0..spec.m())
        .map(|_| {
            let (term, sign, op) = dist.sample(rng);
            SampledTerm { term, sign, op }
        })
        .collect();
    Ok(SampledCircuit { spec: spec.clone(), params: *params, slots })
}

/// Exact average of the sampled circuit over all `L^m` index sequences.
pub fn expectation_oracle(
    decomp: &HermitianDecomposition,
    spec: &AlternatingSequenceSpec,
    params: &DilationParams,
) -> Result<CMat> {
    let l = decomp.len();
    let m = spec.m();
    if l == 0 {
        return domain("empty decomposition");
    }
    if spec.m() != params.m {
        return dim(format!("{} phases for m = {}", m, params.m));
    }
    let total = (l as f64).powi(m as i32);
    if total > ORACLE_MAX_SEQUENCES as f64 {
        return Err(Error::Cap(format!("{l}^{m} sequences exceeds {ORACLE_MAX_SEQUENCES}")));
    }
    let dist = decomp.distribution();
    let units: Vec<CMat> = (0..l)
        .map(|k| build_u(&(dist.ops[k].matrix() * Complex64::new(dist.signs[k], 0.0)), params.c, params.s))
        .collect::<Result<_>>()?;
    let dim2 = 2usize << decomp.n();
    let mut acc = CMat::zeros(dim2, dim2);
    let mut idx = vec![0usize; m];
    for _ in 0..total as usize {
        let w: f64 = idx.iter().map(|&k| dist.probs[k]).product();
        acc += alternating_product(spec, dim2, |i| units[idx[i]].clone()) * Complex64::new(w, 0.0);
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < l {
                break;
            }
            *slot = 0;
        }
    }
    Ok(acc)
}

/// Result of a Monte Carlo estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub shots: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

/// `ceil((2 / eps^2) ln(2 / delta))`.
pub fn hoeffding_shots(eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return domain("need eps > 0 and delta in (0, 1)");
    }
    Ok((2.0 / (eps * eps) * (2.0 / delta).ln()).ceil() as u64)
}

pub fn summarize(values: &[f64], epsilon: f64, delta: f64, seed: u64) -> MCEstimate {
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (t - 1.0)
    } else {
        0.0
    };
    MCEstimate { mean, stderr: (var / t).sqrt(), shots: values.len() as u64, epsilon, delta, seed }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EstimatorOptions {
    /// Sample a single measurement outcome per shot instead of its expectation.
    pub strict_outcomes: bool,
    pub shots_override: Option<u64>,
}

/// Everything Algorithm 2 derives from `P` before sampling.
#[derive(Clone, Debug)]
pub struct Algorithm2Plan {
    pub rescale: RescaleParams,
    pub dilation: DilationParams,
    pub pt: DensePolynomial,
    pub spec: AlternatingSequenceSpec,
}

impl Algorithm2Plan {
    pub fn new(p: &DensePolynomial, eps: f64) -> Result<Self> {
        if p.parity() == Parity::None {
            return domain("P needs definite parity");
        }
        if p.max_abs_on(-1.0, 1.0, 2001) > 0.5 + 1e-9 {
            return domain("P must satisfy |P| <= 1/2 on [-1, 1]");
        }
        let (rescale, pt) = compose_rescaled_adaptive(p, poly_eps(eps))?;
        let phases = solve_qsp_phases_m(&pt, rescale.m, PHASE_TOL)?;
        Ok(Algorithm2Plan { dilation: DilationParams::from_rescale(&rescale), rescale, pt, spec: phases.into() })
    }

    /// `H' = H / (lambda alpha)`.
    pub fn effective_scale(&self, decomp: &HermitianDecomposition) -> f64 {
        1.0 / (decomp.lambda() * self.rescale.alpha)
    }

    /// Per-circuit gate count: `m` controlled Pauli slots plus `m` phases.
    pub fn gates_per_circuit(&self) -> u64 {
        2 * self.rescale.m as u64
    }
}

/// Share of the accuracy budget given to the polynomial bias.
fn poly_eps(eps: f64) -> f64 {
    (eps / 10.0).min(0.05)
}

/// `Re <a| O |b>` restricted to the output block, averaged over phase signs.
/// `a[s]`, `b[s]` hold the two circuit outputs for sign `s`.
fn paired_value(a: &[CVec; 2], b: &[CVec; 2], o: &CMat, off: usize) -> f64 {
    let d = o.nrows();
    let mut acc = 0.0;
    for x in a {
        for y in b {
            let ya = y.rows(off, d);
            let xa = x.rows(off, d);
            acc += xa.dotc(&(o * ya)).re;
        }
    }
    acc / 4.0
}

/// Sample a measurement outcome of `X (x) O` on the interference of two
/// circuit branches with block outputs `a`, `b`.
fn strict_outcome<R: Rng + ?Sized>(
    a: &CVec,
    b: &CVec,
    off: usize,
    basis: &(Vec<f64>, CMat),
    rng: &mut R,
) -> f64 {
    let (vals, vecs) = basis;
    let d = vals.len();
    let r: f64 = rng.random();
    let mut cum = 0.0;
    for i in 0..d {
        let e = vecs.column(i);
        let ai = e.dotc(&a.rows(off, d));
        let bi = e.dotc(&b.rows(off, d));
        for (sgn, amp) in [(1.0, ai + bi), (-1.0, ai - bi)] {
            cum += amp.norm_sqr() / 4.0;
            if r < cum {
                return sgn * vals[i];
            }
        }
    }
    0.0
}

struct ShotContext<'a> {
    decomp: &'a HermitianDecomposition,
    plan: &'a Algorithm2Plan,
    o: &'a Observable,
    basis: Option<(Vec<f64>, CMat)>,
    off: usize,
}

impl ShotContext<'_> {
    fn new<'a>(
        decomp: &'a HermitianDecomposition,
        plan: &'a Algorithm2Plan,
        o: &'a Observable,
        opts: &EstimatorOptions,
    ) -> Result<ShotContext<'a>> {
        if o.n != decomp.n() {
            return dim(format!("observable on {} qubits, Hamiltonian on {}", o.n, decomp.n()));
        }
        let basis = if opts.strict_outcomes { Some(eigen(&o.mat)?) } else { None };
        let off = if plan.spec.output_ancilla() == 1 { 1usize << decomp.n() } else { 0 };
        Ok(ShotContext { decomp, plan, o, basis, off })
    }

    fn circuit<R: Rng + ?Sized>(&self, rng: &mut R) -> SampledCircuit {
        sample_circuit(self.decomp, &self.plan.spec, &self.plan.dilation, rng).expect("inputs validated")
    }

    fn outputs(&self, c: &SampledCircuit, input: &CVec) -> [CVec; 2] {
        let mut p = input.clone();
        c.apply(&mut p, false);
        let mut n = input.clone();
        c.apply(&mut n, true);
        [p, n]
    }

    fn pure_shot<R: Rng + ?Sized>(&self, input: &CVec, rng: &mut R) -> f64 {
        let ca = self.circuit(rng);
        let cb = self.circuit(rng);
        let a = self.outputs(&ca, input);
        let b = self.outputs(&cb, input);
        match &self.basis {
            None => paired_value(&a, &b, &self.o.mat, self.off),
            Some(basis) => {
                let sa = rng.random_range(0..2);
                let sb = rng.random_range(0..2);
                strict_outcome(&a[sa], &b[sb], self.off, basis, rng)
            }
        }
    }
}

fn run_shots(t: u64, seed: u64, shot: impl Fn(&mut crate::seed::SimRng) -> f64 + Sync) -> Vec<f64> {
    (0..t).into_par_iter().map(|i| shot(&mut child_rng(seed, i))).collect()
}

/// Algorithm 2 with paired circuits: each shot draws two independent circuits
/// `A`, `B` and records `Re <1,psi0| A^dag (Pi_b (x) O) B |1,psi0>`, whose mean
/// is `<psi0| P(H')^dag O P(H') |psi0>` up to the polynomial error.
pub fn algorithm2_estimate(
    decomp: &HermitianDecomposition,
    p: &DensePolynomial,
    psi0: &StateVector,
    o: &Observable,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<MCEstimate> {
    let plan = Algorithm2Plan::new(p, eps)?;
    algorithm2_with_plan(decomp, &plan, psi0, o, eps, delta, seed, &EstimatorOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn algorithm2_with_plan(
    decomp: &HermitianDecomposition,
    plan: &Algorithm2Plan,
    psi0: &StateVector,
    o: &Observable,
    eps: f64,
    delta: f64,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<MCEstimate> {
    if decomp.is_empty() {
        return domain("empty decomposition");
    }
    if psi0.n != decomp.n() {
        return dim(format!("state on {} qubits, Hamiltonian on {}", psi0.n, decomp.n()));
    }
    let t = match opts.shots_override {
        Some(t) if t > 0 => t,
        Some(_) => return domain("shot count must be positive"),
        None => hoeffding_shots(eps, delta)?,
    };
    let ctx = ShotContext::new(decomp, plan, o, opts)?;
    let input = psi0.normalized().with_ancilla(1).amps;
    let values = run_shots(t, seed, |rng| ctx.pure_shot(&input, rng));
    Ok(summarize(&values, eps, delta, seed))
}

/// Density-operator variant: two independent circuits per shot on branches of
/// a control qubit, measuring `X (x) (Pi_b (x) O)` on `|+><+| (x) |1><1| (x) rho`.
pub fn algorithm2_density(
    decomp: &HermitianDecomposition,
    p: &DensePolynomial,
    rho: &DensityOperator,
    o: &Observable,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<MCEstimate> {
    let plan = Algorithm2Plan::new(p, eps)?;
    algorithm2_density_with_plan(decomp, &plan, rho, o, eps, delta, seed, &EstimatorOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn algorithm2_density_with_plan(
    decomp: &HermitianDecomposition,
    plan: &Algorithm2Plan,
    rho: &DensityOperator,
    o: &Observable,
    eps: f64,
    delta: f64,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<MCEstimate> {
    if decomp.is_empty() {
        return domain("empty decomposition");
    }
    if rho.n != decomp.n() {
        return dim(format!("state on {} qubits, Hamiltonian on {}", rho.n, decomp.n()));
    }
    let t = match opts.shots_override {
        Some(t) if t > 0 => t,
        Some(_) => return domain("shot count must be positive"),
        None => hoeffding_shots(eps, delta)?,
    };
    let ctx = ShotContext::new(decomp, plan, o, opts)?;
    // rho = sum_i w_i |v_i><v_i|, lifted to the ancilla-1 sector.
    let (w, v) = eigen(&rho.mat)?;
    let comps: Vec<(f64, CVec)> = w
        .iter()
        .enumerate()
        .filter(|(_, &wi)| wi > 1e-14)
        .map(|(i, &wi)| (wi, StateVector { n: rho.n, amps: v.column(i).into_owned() }.with_ancilla(1).amps))
        .collect();
    let values = run_shots(t, seed, |rng| {
        let ca = ctx.circuit(rng);
        let cb = ctx.circuit(rng);
        match &ctx.basis {
            None => comps
                .iter()
                .map(|(wi, inp)| wi * paired_value(&ctx.outputs(&ca, inp), &ctx.outputs(&cb, inp), &ctx.o.mat, ctx.off))
                .sum(),
            Some(basis) => {
                // Draw the pure component first, then the outcome.
                let r: f64 = rng.random();
                let mut cum = 0.0;
                let mut pick = comps.len() - 1;
                for (j, (wi, _)) in comps.iter().enumerate() {
                    cum += wi;
                    if r < cum {
                        pick = j;
                        break;
                    }
                }
                let inp = &comps[pick].1;
                let sa = rng.random_range(0..2);
                let sb = rng.random_range(0..2);
                let a = &ctx.outputs(&ca, inp)[sa];
                let b = &ctx.outputs(&cb, inp)[sb];
                strict_outcome(a, b, ctx.off, basis, rng)
            }
        }
    });
    Ok(summarize(&values, eps, delta, seed))
}

/// Exact target of the paired estimator: `<psi| V^dag (Pi_b (x) O) V |psi>` with
/// `V` the output block of `(U_Phi + U_{-Phi}) / 2` for `H / lambda`.
pub fn paired_target(
    decomp: &HermitianDecomposition,
    plan: &Algorithm2Plan,
    rho: &CMat,
    o: &Observable,
) -> Result<f64> {
    let h = decomp.dense_matrix() / Complex64::new(decomp.lambda(), 0.0);
    let up = build_u_phi(&h, &plan.spec, &plan.dilation)?;
    let um = build_u_phi(&h, &plan.spec.negated(), &plan.dilation)?;
    let v = (output_block(&up, &plan.spec) + output_block(&um, &plan.spec)) * Complex64::new(0.5, 0.0);
    let out = &v * rho * v.adjoint();
    Ok(o.mat.component_mul(&out.transpose()).sum().re)
}

/// `Tr[O P(H') rho P(H')^dag]` from a direct spectral evaluation of `P`.
pub fn polynomial_target(
    decomp: &HermitianDecomposition,
    p: &DensePolynomial,
    scale: f64,
    rho: &CMat,
    o: &Observable,
) -> Result<f64> {
    let (vals, vecs) = eigen(&decomp.dense_matrix())?;
    let diag = DVector::from_iterator(vals.len(), vals.iter().map(|&e| p.eval(Complex64::new(e * scale, 0.0))));
    let pm = &vecs * CMat::from_diagonal(&diag) * vecs.adjoint();
    let out = &pm * rho * pm.adjoint();
    Ok(o.mat.component_mul(&out.transpose()).sum().re)
}
