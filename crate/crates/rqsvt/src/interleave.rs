//! Interleaved circuits `layer_M e^{i H_M} ... layer_1 e^{i H_1} layer_0`,
//! their qDRIFT surrogates and the extrapolated estimator built on them.
//!
//! Layers are listed in application order: `layers[0]` acts first. Each
//! layer counts as one gate regardless of its content.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densesim::{
    exact_evolution, expectation_matrix, rotate_slice, expectation_state, CMat, CVec, DensityOperator, Observable,
    PauliTransferMatrix, StateVector, MAX_PTM_QUBITS,
};
use crate::error::{dim, domain, Error, Result};
use crate::pauli::HermitianDecomposition;
use crate::polyapprox::{mat2_mul, solve_gqsp_angles, GQSPAngles, LaurentPolynomial, Mat2};
use crate::qdrift::{inverse_step, robust_ceil, Direction};
use crate::richardson::{choose_algorithm3_params, make_plan, ExtrapolationPlan};
use crate::seed::{child_rng, SimRng};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Angle tolerance for GQSP circuits built here.
pub const GQSP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Identity,
    /// A single-qubit gate on qubit 0 (the leading qubit).
    Leading(Mat2),
    Dense(CMat),
}

impl Layer {
    pub fn dense(&self, n: usize) -> CMat {
        let d = 1usize << n;
        match self {
            Layer::Identity => CMat::identity(d, d),
            Layer::Leading(g) => {
                let h = d / 2;
                let mut m = CMat::zeros(d, d);
                for b in 0..h {
                    m[(b, b)] = g[0][0];
                    m[(b, h + b)] = g[0][1];
                    m[(h + b, b)] = g[1][0];
                    m[(h + b, h + b)] = g[1][1];
                }
                m
            }
            Layer::Dense(m) => m.clone(),
        }
    }

    pub fn apply(&self, v: &mut CVec) {
        match self {
            Layer::Identity => {}
            Layer::Leading(g) => {
                let h = v.len() / 2;
                for b in 0..h {
                    let (a0, a1) = (v[b], v[h + b]);
                    v[b] = g[0][0] * a0 + g[0][1] * a1;
                    v[h + b] = g[1][0] * a0 + g[1][1] * a1;
                }
            }
            Layer::Dense(m) => *v = m * &*v,
        }
    }

    pub fn adjoint(&self) -> Layer {
        match self {
            Layer::Identity => Layer::Identity,
            Layer::Leading(g) => Layer::Leading([[g[0][0].conj(), g[1][0].conj()], [g[0][1].conj(), g[1][1].conj()]]),
            Layer::Dense(m) => Layer::Dense(m.adjoint()),
        }
    }

    /// `self` after `first`.
    pub fn after(&self, first: &Layer, n: usize) -> Layer {
        match (self, first) {
            (Layer::Identity, x) | (x, Layer::Identity) => x.clone(),
            (Layer::Leading(a), Layer::Leading(b)) => Layer::Leading(mat2_mul(a, b)),
            _ => Layer::Dense(self.dense(n) * first.dense(n)),
        }
    }
}

/// A segment generator `Pi_c (x) H` where `Pi_c` projects the control qubit
/// onto a value, or plain `H` without control. Pauli terms act as identity
/// on the control qubit.
#[derive(Clone, Debug)]
pub struct Generator {
    pub h: HermitianDecomposition,
    pub control: Option<(usize, bool)>,
}

impl Generator {
    pub fn plain(h: HermitianDecomposition) -> Self {
        Generator { h, control: None }
    }

    pub fn lambda(&self) -> f64 {
        self.h.lambda()
    }

    pub fn negated(&self) -> Self {
        Generator { h: self.h.scaled(-1.0), control: self.control }
    }

    pub fn dense(&self) -> CMat {
        let mut m = self.h.dense_matrix();
        if let Some((q, v)) = self.control {
            let n = self.h.n();
            let bit = 1usize << (n - 1 - q);
            let want = if v { bit } else { 0 };
            let d = 1usize << n;
            for i in 0..d {
                for j in 0..d {
                    if i & bit != want || j & bit != want {
                        m[(i, j)] = C0;
                    }
                }
            }
        }
        m
    }

    fn validate(&self) -> Result<()> {
        if self.h.is_empty() {
            return domain("segment generator has no terms");
        }
        if let Some((q, _)) = self.control {
            if q >= self.h.n() {
                return dim(format!("control qubit {q} out of range"));
            }
            let bit = 1u64 << (self.h.n() - 1 - q);
            if self.h.terms().iter().any(|t| t.op.support() & bit != 0) {
                return domain("controlled generator acts on its control qubit");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct InterleavedCircuit {
    pub n: usize,
    pub layers: Vec<Layer>,
    pub generators: Vec<Generator>,
    /// Generator index of each segment.
    pub segments: Vec<usize>,
    pub lambda_max: f64,
}

impl InterleavedCircuit {
    /// One generator per segment, no controls.
    pub fn new(n: usize, layers: Vec<Layer>, hams: Vec<HermitianDecomposition>) -> Result<Self> {
        let segments = (0..hams.len()).collect();
        let generators = hams.into_iter().map(Generator::plain).collect();
        Self::with_generators(n, layers, generators, segments)
    }

    pub fn with_generators(
        n: usize,
        layers: Vec<Layer>,
        generators: Vec<Generator>,
        segments: Vec<usize>,
    ) -> Result<Self> {
        if layers.len() != segments.len() + 1 {
            return dim(format!("{} layers for {} segments", layers.len(), segments.len()));
        }
        let d = 1usize << n;
        for l in &layers {
            if let Layer::Dense(m) = l {
                if m.nrows() != d || m.ncols() != d {
                    return dim(format!("layer of size {}x{} in a {}-qubit circuit", m.nrows(), m.ncols(), n));
                }
            }
            if let Layer::Leading(_) = l {
                if n == 0 {
                    return dim("single-qubit layer in a zero-qubit circuit");
                }
            }
        }
        for g in &generators {
            if g.h.n() != n {
                return dim(format!("{}-qubit generator in a {}-qubit circuit", g.h.n(), n));
            }
            g.validate()?;
        }
        if let Some(&bad) = segments.iter().find(|&&g| g >= generators.len()) {
            return dim(format!("segment refers to generator {bad}"));
        }
        let lambda_max = segments.iter().map(|&g| generators[g].lambda()).fold(0.0, f64::max);
        Ok(InterleavedCircuit { n, layers, generators, segments, lambda_max })
    }

    /// Segment count `M`.
    pub fn m(&self) -> usize {
        self.segments.len()
    }

    fn used_generators(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.segments.clone();
        g.sort_unstable();
        g.dedup();
        g
    }

    fn evolutions(&self) -> Result<HashMap<usize, CMat>> {
        self.used_generators().into_iter().map(|g| Ok((g, exact_evolution(&self.generators[g].dense(), 1.0)?))).collect()
    }

    pub fn unitary(&self) -> Result<CMat> {
        let ev = self.evolutions()?;
        let mut u = self.layers[0].dense(self.n);
        for (i, &g) in self.segments.iter().enumerate() {
            u = &ev[&g] * u;
            u = self.layers[i + 1].dense(self.n) * u;
        }
        Ok(u)
    }

    /// `W^dag` as an interleaved circuit over an extended generator list.
    pub fn adjoint(&self) -> InterleavedCircuit {
        let k = self.generators.len();
        let mut generators = self.generators.clone();
        generators.extend(self.generators.iter().map(Generator::negated));
        let layers = self.layers.iter().rev().map(Layer::adjoint).collect();
        let segments = self.segments.iter().rev().map(|&g| g + k).collect();
        InterleavedCircuit { n: self.n, layers, generators, segments, lambda_max: self.lambda_max }
    }

    fn check_state(&self, psi: &StateVector) -> Result<()> {
        if psi.n != self.n {
            return dim(format!("{}-qubit state for a {}-qubit circuit", psi.n, self.n));
        }
        Ok(())
    }

    /// Gates used by one run with `r` qDRIFT steps per segment.
    pub fn gate_count(&self, r: u64) -> u64 {
        self.m() as u64 * r + self.m() as u64 + 1
    }

    /// Depth after state preparation: `M + M r`. `V_0` is not counted.
    pub fn depth(&self, r: u64) -> u64 {
        self.m() as u64 * r + self.m() as u64
    }
}

pub fn exact_output(w: &InterleavedCircuit, psi0: &StateVector) -> Result<StateVector> {
    w.check_state(psi0)?;
    let ev = w.evolutions()?;
    let mut v = psi0.amps.clone();
    w.layers[0].apply(&mut v);
    for (i, &g) in w.segments.iter().enumerate() {
        v = &ev[&g] * v;
        w.layers[i + 1].apply(&mut v);
    }
    Ok(StateVector { n: w.n, amps: v })
}

/// `W rho W^dag`.
pub fn exact_output_density(w: &InterleavedCircuit, rho: &CMat) -> Result<CMat> {
    let u = w.unitary()?;
    if rho.nrows() != u.nrows() {
        return dim("density size does not match the circuit");
    }
    Ok(&u * rho * u.adjoint())
}

fn check_step(w: &InterleavedCircuit, s: f64) -> Result<u64> {
    if w.m() == 0 {
        return domain("qDRIFT surrogate of a circuit without segments");
    }
    let mm = w.m() as f64;
    if !(s > 0.0) || s >= 1.0 / (2.0 * w.lambda_max * mm) {
        return domain(format!("need 0 < s < 1/(2 lambda M) = {}, got {}", 1.0 / (2.0 * w.lambda_max * mm), s));
    }
    inverse_step(s * mm)
}

fn sample_with_steps<R: Rng + ?Sized>(w: &InterleavedCircuit, r: u64, psi0: &CVec, rng: &mut R) -> (CVec, u64) {
    let mut v = psi0.clone();
    w.layers[0].apply(&mut v);
    let mut gates = 1u64;
    let step = 1.0 / r as f64;
    for (i, &g) in w.segments.iter().enumerate() {
        let gen = &w.generators[g];
        let dist = gen.h.distribution();
        let a = Direction::Forward.sign() * step * gen.lambda();
        for _ in 0..r {
            let (_, sign, op) = dist.sample(rng);
            rotate_slice(v.as_mut_slice(), w.n, &op, sign * a, gen.control)
                .expect("generator validated");
        }
        gates += r;
        w.layers[i + 1].apply(&mut v);
        gates += 1;
    }
    (v, gates)
}

/// One qDRIFT realization: each segment becomes `r = 1/(sM)` sampled rotations
/// of angle `s M lambda_l`.
pub fn qdrift_output_sample<R: Rng + ?Sized>(
    w: &InterleavedCircuit,
    psi0: &StateVector,
    s: f64,
    rng: &mut R,
) -> Result<(StateVector, u64)> {
    w.check_state(psi0)?;
    let r = check_step(w, s)?;
    let (v, gates) = sample_with_steps(w, r, &psi0.amps, rng);
    Ok((StateVector { n: w.n, amps: v }, gates))
}

fn segment_channel(gen: &Generator, n: usize, r: u64) -> Result<PauliTransferMatrix> {
    let dist = gen.h.distribution();
    let a = Direction::Forward.sign() * gen.lambda() / r as f64;
    let items: Vec<_> = (0..dist.len()).map(|k| (dist.probs[k], dist.ops[k], dist.signs[k] * a, gen.control)).collect();
    Ok(PauliTransferMatrix::rotation_mixture(n, &items)?.pow(r))
}

fn exact_with_steps(w: &InterleavedCircuit, r: u64, rho: &CMat) -> Result<CMat> {
    if w.n > MAX_PTM_QUBITS {
        return Err(Error::Cap(format!("exact qDRIFT channels are limited to {MAX_PTM_QUBITS} qubits")));
    }
    let channels: HashMap<usize, PauliTransferMatrix> =
        w.used_generators().into_iter().map(|g| Ok((g, segment_channel(&w.generators[g], w.n, r)?))).collect::<Result<_>>()?;
    let conj = |l: &Layer, x: &CMat| -> CMat {
        match l {
            Layer::Identity => x.clone(),
            _ => {
                let u = l.dense(w.n);
                &u * x * u.adjoint()
            }
        }
    };
    let mut out = conj(&w.layers[0], rho);
    for (i, &g) in w.segments.iter().enumerate() {
        out = channels[&g].apply(&out);
        out = conj(&w.layers[i + 1], &out);
    }
    Ok(out)
}

/// The averaged qDRIFT output, with every segment channel evaluated exactly.
pub fn exact_qdrift_output(w: &InterleavedCircuit, rho: &DensityOperator, s: f64) -> Result<DensityOperator> {
    if rho.n != w.n {
        return dim(format!("{}-qubit state for a {}-qubit circuit", rho.n, w.n));
    }
    let r = check_step(w, s)?;
    Ok(DensityOperator { n: w.n, mat: exact_with_steps(w, r, &rho.mat)? })
}

/// Fit of `Tr[O rho_s] - Tr[O rho_W]` against `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub s: Vec<f64>,
    pub diffs: Vec<f64>,
    /// Constant term of the interpolant through all points.
    pub intercept: f64,
    /// Linear coefficient of the interpolant with zero constant term.
    pub first_order: f64,
    /// Degree of the subtracted polynomial (no constant term).
    pub degree: usize,
    /// `diff` minus the first `degree` terms of the interpolant at each point.
    pub residuals: Vec<f64>,
    /// `log2` ratios of successive residuals (meaningful for halving `s`).
    pub orders: Vec<f64>,
}

fn solve_vandermonde(x: &[f64], y: &[f64], powers: &[i32]) -> Result<Vec<f64>> {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let a = DMatrix::from_fn(x.len(), powers.len(), |i, j| (x[i] / scale).powi(powers[j]));
    let b = DVector::from_column_slice(y);
    let sol = a.lu().solve(&b).ok_or_else(|| Error::Domain("singular fit".into()))?;
    Ok(sol.iter().zip(powers).map(|(c, &p)| c / scale.powi(p)).collect())
}

pub fn error_series_check(w: &InterleavedCircuit, rho: &CMat, o: &Observable, s_list: &[f64]) -> Result<SeriesFit> {
    error_series_fit(w, rho, o, s_list, 1)
}

/// Subtracts the degree-`degree` part of the series; residuals should shrink like `s^(degree+1)`.
pub fn error_series_fit(
    w: &InterleavedCircuit,
    rho: &CMat,
    o: &Observable,
    s_list: &[f64],
    degree: usize,
) -> Result<SeriesFit> {
    if degree == 0 {
        return domain("fit degree must be at least 1");
    }
    if s_list.len() < degree + 1 {
        return domain("need more step sizes than the fit degree");
    }
    let exact = expectation_matrix(&exact_output_density(w, rho)?, o)?;
    let rho_op = DensityOperator { n: w.n, mat: rho.clone() };
    let diffs: Vec<f64> = s_list
        .iter()
        .map(|&s| Ok(expectation_matrix(&exact_qdrift_output(w, &rho_op, s)?.mat, o)? - exact))
        .collect::<Result<_>>()?;
    let k = s_list.len() as i32;
    let with_const: Vec<i32> = (0..k).collect();
    let intercept = solve_vandermonde(s_list, &diffs, &with_const)?[0];
    let no_const: Vec<i32> = (1..=k).collect();
    let coeffs = solve_vandermonde(s_list, &diffs, &no_const)?;
    let residuals: Vec<f64> = s_list
        .iter()
        .zip(&diffs)
        .map(|(s, d)| d - coeffs[..degree].iter().enumerate().map(|(i, c)| c * s.powi(i as i32 + 1)).sum::<f64>())
        .collect();
    let orders = residuals.windows(2).map(|w| (w[0].abs() / w[1].abs()).log2()).collect();
    Ok(SeriesFit { s: s_list.to_vec(), diffs, intercept, first_order: coeffs[0], degree, residuals, orders })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm3Mode {
    Sampled,
    ExactChannel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Algorithm3Config {
    pub mode: Algorithm3Mode,
    /// Failure probability shared across nodes by a union bound.
    pub delta_total: f64,
    /// Parameters are chosen with `max(lambda_max, lambda_floor)`.
    pub lambda_floor: f64,
    pub max_total_shots: u64,
}

impl Default for Algorithm3Config {
    fn default() -> Self {
        Algorithm3Config { mode: Algorithm3Mode::Sampled, delta_total: 0.1, lambda_floor: 0.0, max_total_shots: 50_000_000 }
    }
}

impl Algorithm3Config {
    pub fn exact() -> Self {
        Algorithm3Config { mode: Algorithm3Mode::ExactChannel, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeEstimate {
    pub j: usize,
    pub r: u64,
    pub s: f64,
    pub value: f64,
    pub stderr: f64,
    pub shots: u64,
    pub gates_used: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Algorithm3Result {
    pub value: f64,
    pub nodes: Vec<NodeEstimate>,
    pub plan: ExtrapolationPlan,
    pub lambda: f64,
    pub max_depth: u64,
}

/// `ceil(8 (||b||_1 / eps)^2 ln(2 m / delta))`.
pub fn node_shots(b_norm: f64, m: usize, eps: f64, delta_total: f64) -> u64 {
    robust_ceil(8.0 * (b_norm / eps).powi(2) * (2.0 * m as f64 / delta_total).ln())
}

/// Parameters and extrapolation plan for a circuit, without running it.
pub fn algorithm3_plan(w: &InterleavedCircuit, eps: f64, cfg: &Algorithm3Config) -> Result<(f64, ExtrapolationPlan)> {
    let lambda = w.lambda_max.max(cfg.lambda_floor);
    let mm = w.m();
    if lambda * (mm as f64) < 1.0 {
        return domain(format!("need lambda M >= 1, got {}", lambda * mm as f64));
    }
    let (m, s) = choose_algorithm3_params(lambda, mm, eps)?;
    Ok((lambda, make_plan(m, 1.0 / mm as f64, s)?))
}

pub fn algorithm3_estimate(
    w: &InterleavedCircuit,
    psi0: &StateVector,
    o: &Observable,
    eps: f64,
    seed: u64,
    cfg: &Algorithm3Config,
) -> Result<Algorithm3Result> {
    w.check_state(psi0)?;
    if o.n != w.n {
        return dim(format!("{}-qubit observable for a {}-qubit circuit", o.n, w.n));
    }
    if !(cfg.delta_total > 0.0 && cfg.delta_total < 1.0) {
        return domain("delta_total must lie in (0, 1)");
    }
    let (lambda, plan) = algorithm3_plan(w, eps, cfg)?;
    let m = plan.m;
    let shots = node_shots(plan.b_norm, m, eps, cfg.delta_total);
    if cfg.mode == Algorithm3Mode::Sampled && shots.saturating_mul(m as u64) > cfg.max_total_shots {
        return Err(Error::Infeasible(format!(
            "requires {} shots in total, budget {}",
            shots.saturating_mul(m as u64),
            cfg.max_total_shots
        )));
    }
    let rho = DensityOperator::from_state(psi0);
    let mut nodes = Vec::with_capacity(m);
    for j in 0..m {
        let r = plan.r[j];
        let gates_used = w.gate_count(r);
        let node = match cfg.mode {
            Algorithm3Mode::ExactChannel => {
                let out = exact_with_steps(w, r, &rho.mat)?;
                NodeEstimate { j: j + 1, r, s: plan.s_nodes[j], value: expectation_matrix(&out, o)?, stderr: 0.0, shots: 0, gates_used }
            }
            Algorithm3Mode::Sampled => {
                let node_seed: u64 = child_rng(seed, j as u64).random();
                let vals: Vec<f64> = (0..shots)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng: SimRng = child_rng(node_seed, i);
                        let (v, g) = sample_with_steps(w, r, &psi0.amps, &mut rng);
                        debug_assert_eq!(g, gates_used);
                        expectation_state(&StateVector { n: w.n, amps: v }, o).expect("dimensions checked")
                    })
                    .collect();
                let t = shots as f64;
                let mean = vals.iter().sum::<f64>() / t;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0).max(1.0);
                NodeEstimate { j: j + 1, r, s: plan.s_nodes[j], value: mean, stderr: (var / t).sqrt(), shots, gates_used }
            }
        };
        nodes.push(node);
    }
    let value = plan.b.iter().zip(&nodes).map(|(b, nd)| b * nd.value).sum();
    let max_depth = w.depth(plan.r[0]);
    Ok(Algorithm3Result { value, nodes, plan, lambda, max_depth })
}

/// GQSP sequence for `U = e^{iH}` as an interleaved circuit on `n + 1` qubits,
/// the ancilla leading. Segments use `diag(H, 0)` for the first `d` rounds and
/// `diag(0, -H)` for the rest.
#[derive(Clone, Debug)]
pub struct GQSPCircuit {
    pub base: HermitianDecomposition,
    pub angles: GQSPAngles,
    pub circuit: InterleavedCircuit,
}

fn lift(h: &HermitianDecomposition) -> Result<HermitianDecomposition> {
    let terms: Vec<(f64, _)> =
        h.terms().iter().map(|t| Ok((t.coeff, t.op.with_leading('I')?))).collect::<Result<_>>()?;
    HermitianDecomposition::new(h.n() + 1, terms)
}

impl GQSPCircuit {
    pub fn new(base: HermitianDecomposition, angles: GQSPAngles) -> Result<Self> {
        let d = angles.degree();
        let lifted = lift(&base)?;
        let generators = vec![
            Generator { h: lifted.clone(), control: Some((0, false)) },
            Generator { h: lifted.scaled(-1.0), control: Some((0, true)) },
        ];
        let layers = (0..=2 * d).map(|j| Layer::Leading(angles.rotation(j))).collect();
        let segments = (1..=2 * d).map(|j| if j <= d { 0 } else { 1 }).collect();
        let circuit = InterleavedCircuit::with_generators(base.n() + 1, layers, generators, segments)?;
        Ok(GQSPCircuit { base, angles, circuit })
    }

    pub fn solve(base: HermitianDecomposition, p: &LaurentPolynomial) -> Result<Self> {
        Self::new(base, solve_gqsp_angles(p, GQSP_TOL)?)
    }

    /// The ancilla-0 block `<0| W |0>` of the full unitary.
    pub fn block(&self) -> Result<CMat> {
        let u = self.circuit.unitary()?;
        let d = 1usize << self.base.n();
        Ok(u.view((0, 0), (d, d)).into_owned())
    }

    pub fn input(&self, psi0: &StateVector) -> StateVector {
        psi0.with_ancilla(0)
    }
}

/// `<psi0| P(e^{iH})^dag O P(e^{iH}) |psi0>` through the GQSP circuit, with
/// parameters chosen for `lambda = max(lambda(H), 1)`.
pub fn gqsp_estimate(
    decomp: &HermitianDecomposition,
    p: &LaurentPolynomial,
    psi0: &StateVector,
    o: &Observable,
    eps: f64,
    seed: u64,
    cfg: &Algorithm3Config,
) -> Result<f64> {
    Ok(gqsp_run(decomp, p, psi0, o, eps, seed, cfg)?.0)
}

/// `gqsp_estimate` plus the underlying Algorithm 3 run (absent at degree zero).
pub fn gqsp_run(
    decomp: &HermitianDecomposition,
    p: &LaurentPolynomial,
    psi0: &StateVector,
    o: &Observable,
    eps: f64,
    seed: u64,
    cfg: &Algorithm3Config,
) -> Result<(f64, Option<Algorithm3Result>)> {
    let g = GQSPCircuit::solve(decomp.clone(), p)?;
    let obs = o.ancilla_projected(0);
    let input = g.input(psi0);
    if g.circuit.m() == 0 {
        // Degree zero: no evolution to approximate.
        return Ok((expectation_state(&exact_output(&g.circuit, &input)?, &obs)?, None));
    }
    let cfg = Algorithm3Config { lambda_floor: cfg.lambda_floor.max(1.0), ..*cfg };
    let run = algorithm3_estimate(&g.circuit, &input, &obs, eps, seed, &cfg)?;
    Ok((run.value, Some(run)))
}

/// Fixed-point amplitude amplification schedule: `L = 2l + 1` queries reach
/// success probability at least `1 - delta^2` whenever the initial success
/// probability is at least `w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpaaSchedule {
    pub queries: usize,
    pub delta: f64,
    pub gamma: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Schedule for amplitude lower bound `eta` and failure probability `eps`.
pub fn fpaa_schedule(eta: f64, eps: f64) -> Result<FpaaSchedule> {
    if !(eta > 0.0 && eta <= 1.0) || !(eps > 0.0 && eps < 1.0) {
        return domain("need eta in (0, 1] and eps in (0, 1)");
    }
    let delta = eps.sqrt();
    let need = (2.0 / delta).ln() / eta;
    let mut big_l = need.ceil().max(1.0) as usize;
    if big_l % 2 == 0 {
        big_l += 1;
    }
    let l = (big_l - 1) / 2;
    let gamma = 1.0 / ((1.0 / delta).acosh() / big_l as f64).cosh();
    let root = (1.0 - gamma * gamma).max(0.0).sqrt();
    let alpha: Vec<f64> = (1..=l)
        .map(|j| {
            let t = (2.0 * std::f64::consts::PI * j as f64 / big_l as f64).tan() * root;
            2.0 * (1.0 / t).atan()
        })
        .collect();
    let beta = (1..=l).map(|j| -alpha[l - j]).collect();
    Ok(FpaaSchedule { queries: big_l, delta, gamma, alpha, beta })
}

/// `I - (1 - e^{-i alpha}) |psi><psi|`.
pub fn state_reflection(psi: &StateVector, alpha: f64) -> CMat {
    let d = psi.dim();
    let k = C1 - Complex64::from_polar(1.0, -alpha);
    CMat::identity(d, d) - &psi.amps * psi.amps.adjoint() * k
}

/// `I - (1 - e^{i beta}) (|0><0| (x) I)`.
pub fn ancilla_phase(beta: f64) -> Layer {
    Layer::Leading([[Complex64::from_polar(1.0, beta), C0], [C0, C1]])
}

struct Builder {
    n: usize,
    layers: Vec<Layer>,
    segments: Vec<usize>,
    pending: Layer,
}

impl Builder {
    fn push_layer(&mut self, l: &Layer) {
        self.pending = l.after(&self.pending, self.n);
    }

    fn push_circuit(&mut self, c: &InterleavedCircuit, offset: usize) {
        self.push_layer(&c.layers[0]);
        for (i, &g) in c.segments.iter().enumerate() {
            self.layers.push(std::mem::replace(&mut self.pending, Layer::Identity));
            self.segments.push(g + offset);
            self.push_layer(&c.layers[i + 1]);
        }
    }
}

/// `W~`: the GQSP circuit followed by the fixed-point rounds
/// `-W S_0(alpha_j) W^dag S_t(beta_j)`, with `S_0` reflecting about `|0, psi0>`
/// and `S_t` phasing the ancilla-0 subspace.
pub fn fpaa_wrap(gqsp: &GQSPCircuit, psi0: &StateVector, eta: f64, eps: f64) -> Result<(InterleavedCircuit, FpaaSchedule)> {
    let w = &gqsp.circuit;
    let input = gqsp.input(psi0);
    w.check_state(&input)?;
    let sched = fpaa_schedule(eta, eps)?;
    let wd = w.adjoint();
    let k = w.generators.len();
    let mut b = Builder { n: w.n, layers: Vec::new(), segments: Vec::new(), pending: Layer::Identity };
    b.push_circuit(w, 0);
    for j in 0..sched.alpha.len() {
        b.push_layer(&ancilla_phase(sched.beta[j]));
        // The adjoint's generator list is [W's, negated W's]; segments already carry the offset.
        b.push_circuit(&wd, 0);
        b.push_layer(&Layer::Dense(state_reflection(&input, sched.alpha[j]) * Complex64::new(-1.0, 0.0)));
        b.push_circuit(w, 0);
    }
    let Builder { mut layers, segments, pending, .. } = b;
    layers.push(pending);
    let generators = wd.generators;
    debug_assert_eq!(generators.len(), 2 * k);
    let circuit = InterleavedCircuit::with_generators(w.n, layers, generators, segments)?;
    Ok((circuit, sched))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizationMode {
    Amplified,
    Ratio,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedConfig {
    pub mode: NormalizationMode,
    pub inner: Algorithm3Config,
    /// Amplified runs whose deepest circuit exceeds this many gates fall back to ratio mode.
    pub max_gates: u64,
}

impl Default for NormalizedConfig {
    fn default() -> Self {
        NormalizedConfig { mode: NormalizationMode::Amplified, inner: Algorithm3Config::default(), max_gates: 10_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedEstimate {
    pub value: f64,
    pub mode: NormalizationMode,
    pub numerator: Option<f64>,
    pub denominator: Option<f64>,
    pub queries: usize,
    pub max_depth: u64,
    pub warnings: Vec<String>,
}

/// `<psi| O |psi>` for `psi = P(e^{iH}) psi0 / ||P(e^{iH}) psi0||`.
#[allow(clippy::too_many_arguments)]
pub fn normalized_estimate(
    decomp: &HermitianDecomposition,
    p: &LaurentPolynomial,
    psi0: &StateVector,
    o: &Observable,
    eta: f64,
    eps: f64,
    seed: u64,
    cfg: &NormalizedConfig,
) -> Result<NormalizedEstimate> {
    if !(eta > 0.0 && eta <= 1.0) || !(eps > 0.0 && eps < 1.0) {
        return domain("need eta in (0, 1] and eps in (0, 1)");
    }
    let g = GQSPCircuit::solve(decomp.clone(), p)?;
    let input = g.input(psi0);
    let obs = o.ancilla_projected(0);
    let success = expectation_state(&exact_output(&g.circuit, &input)?, &Observable::identity(decomp.n()).ancilla_projected(0))?;
    if success.sqrt() < eta * (1.0 - 1e-9) {
        return domain(format!("||P(e^(iH)) psi0|| = {:.4} is below eta = {eta}", success.sqrt()));
    }
    let inner = Algorithm3Config { lambda_floor: cfg.inner.lambda_floor.max(1.0), ..cfg.inner };
    let mut warnings = Vec::new();
    let mut mode = cfg.mode;
    if mode == NormalizationMode::Amplified {
        let (wt, sched) = fpaa_wrap(&g, psi0, eta, eps / 2.0)?;
        let depth = if wt.m() == 0 { 1 } else { wt.depth(algorithm3_plan(&wt, eps / 2.0, &inner)?.1.r[0]) };
        if depth > cfg.max_gates {
            warnings.push(format!("amplified depth {depth} exceeds budget {}; using ratio mode", cfg.max_gates));
            mode = NormalizationMode::Ratio;
        } else {
            let value = if wt.m() == 0 {
                expectation_state(&exact_output(&wt, &input)?, &obs)?
            } else {
                algorithm3_estimate(&wt, &input, &obs, eps / 2.0, seed, &inner)?.value
            };
            return Ok(NormalizedEstimate {
                value,
                mode,
                numerator: None,
                denominator: None,
                queries: sched.queries,
                max_depth: depth,
                warnings,
            });
        }
    }
    let inner_eps = (eps * eta * eta / 3.0).min(0.5);
    let ident = Observable::identity(decomp.n()).ancilla_projected(0);
    let (num, den, depth) = if g.circuit.m() == 0 {
        let out = exact_output(&g.circuit, &input)?;
        (expectation_state(&out, &obs)?, expectation_state(&out, &ident)?, 1)
    } else {
        let a = algorithm3_estimate(&g.circuit, &input, &obs, inner_eps, seed, &inner)?;
        let b = algorithm3_estimate(&g.circuit, &input, &ident, inner_eps, seed ^ 0x9e37_79b9_7f4a_7c15, &inner)?;
        (a.value, b.value, a.max_depth)
    };
    if den < eta * eta {
        warnings.push(format!("denominator {den:.4e} below eta^2 = {:.4e}", eta * eta));
    }
    if den <= 0.0 {
        return Err(Error::Infeasible(format!("non-positive denominator estimate {den:.3e}")));
    }
    Ok(NormalizedEstimate {
        value: num / den,
        mode,
        numerator: Some(num),
        denominator: Some(den),
        queries: 1,
        max_depth: depth,
        warnings,
    })
}
