//! qDRIFT: sampled Pauli-rotation products and the exact mixture channel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::densesim::{
    exact_evolution_decomp, rotate_density, rotate_slice, choi_distance, CMat, DensityOperator, StateVector,
    SuperoperatorMatrix,
};
use crate::error::{domain, Error, Result};
use crate::pauli::{HermitianDecomposition, PauliString};

/// Forward rotations are `e^{+i angle P}`, so forward qDRIFT approximates `e^{iHT}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Largest qubit count for which superoperators are tabulated densely.
pub const MAX_CHANNEL_QUBITS: usize = 6;

/// `ceil(x)`, except that values within `1e-9` relative of an integer round to it.
pub fn robust_ceil(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

#[derive(Clone, Debug)]
pub struct QDriftSchedule {
    pub decomp: HermitianDecomposition,
    pub total_time: f64,
    pub step: f64,
    pub n_steps: u64,
    pub direction: Direction,
}

impl QDriftSchedule {
    pub fn new(decomp: HermitianDecomposition, total_time: f64, step: f64, direction: Direction) -> Result<Self> {
        if decomp.is_empty() {
            return domain("qDRIFT needs at least one term");
        }
        if !(total_time >= 0.0) || !(step > 0.0) {
            return domain("qDRIFT needs T >= 0 and t > 0");
        }
        if step * decomp.lambda() >= 0.5 {
            return domain(format!("step t = {} violates t < 1/(2 lambda) with lambda = {}", step, decomp.lambda()));
        }
        let n_steps = robust_ceil(total_time / step);
        Ok(QDriftSchedule { decomp, total_time, step, n_steps, direction })
    }

    /// Magnitude of every rotation angle, `t * lambda`.
    pub fn angle(&self) -> f64 {
        self.step * self.decomp.lambda()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryStep {
    pub term: usize,
    pub op: PauliString,
    pub angle: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Dense product of the step unitaries, last step leftmost.
    pub fn unitary(&self, n: usize) -> CMat {
        let d = 1usize << n;
        let mut u = CMat::identity(d, d);
        for s in &self.steps {
            for j in 0..d {
                rotate_slice(u.column_mut(j).as_mut_slice(), n, &s.op, s.angle, None).expect("qubit count checked");
            }
        }
        u
    }
}

/// Running count of applied rotations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounter {
    pub gates: u64,
}

impl GateCounter {
    pub fn add(&mut self, k: u64) {
        self.gates += k;
    }
}

pub fn sample_trajectory<R: Rng + ?Sized>(schedule: &QDriftSchedule, rng: &mut R) -> Trajectory {
    let dist = schedule.decomp.distribution();
    let a = schedule.direction.sign() * schedule.angle();
    let steps = (0..schedule.n_steps)
        .map(|_| {
            let (term, sign, op) = dist.sample(rng);
            TrajectoryStep { term, op, angle: sign * a }
        })
        .collect();
    Trajectory { steps }
}

/// Anything a Pauli rotation can act on.
pub trait Rotatable {
    fn qubits(&self) -> usize;
    fn rotate_pauli(&mut self, p: &PauliString, theta: f64, control: Option<(usize, bool)>) -> Result<()>;
}

impl Rotatable for StateVector {
    fn qubits(&self) -> usize {
        self.n
    }

    fn rotate_pauli(&mut self, p: &PauliString, theta: f64, control: Option<(usize, bool)>) -> Result<()> {
        self.rotate(p, theta, control)
    }
}

impl Rotatable for DensityOperator {
    fn qubits(&self) -> usize {
        self.n
    }

    fn rotate_pauli(&mut self, p: &PauliString, theta: f64, control: Option<(usize, bool)>) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::Dimension(format!("{}-qubit Pauli on {}-qubit state", p.n(), self.n)));
        }
        rotate_density(&mut self.mat, self.n, p, theta, control)
    }
}

pub fn apply_trajectory<S: Rotatable>(state: &mut S, traj: &Trajectory, counter: &mut GateCounter) -> Result<()> {
    for s in &traj.steps {
        state.rotate_pauli(&s.op, s.angle, None)?;
    }
    counter.add(traj.len() as u64);
    Ok(())
}

/// `E_s = sum_k p_k e^{i s T lambda sigma_k ad_{P_k}}`.
pub fn exact_parametrized_channel(decomp: &HermitianDecomposition, s: f64, time_unit: f64) -> Result<SuperoperatorMatrix> {
    exact_parametrized_channel_dir(decomp, s, time_unit, Direction::Forward)
}

pub fn exact_parametrized_channel_dir(
    decomp: &HermitianDecomposition,
    s: f64,
    time_unit: f64,
    direction: Direction,
) -> Result<SuperoperatorMatrix> {
    let n = decomp.n();
    if n > MAX_CHANNEL_QUBITS {
        return Err(Error::Cap(format!("superoperators are limited to {} qubits", MAX_CHANNEL_QUBITS)));
    }
    if decomp.is_empty() {
        return domain("channel of an empty decomposition");
    }
    let lambda = decomp.lambda();
    if !(s > 0.0) || s * time_unit * lambda >= 0.5 {
        return domain(format!("need 0 < s T lambda < 1/2, got {}", s * time_unit * lambda));
    }
    let d = 1usize << n;
    let dist = decomp.distribution();
    let mut mat = CMat::zeros(d * d, d * d);
    for k in 0..dist.len() {
        let theta = direction.sign() * dist.signs[k] * s * time_unit * lambda;
        let mut u = CMat::identity(d, d);
        for j in 0..d {
            rotate_slice(u.column_mut(j).as_mut_slice(), n, &dist.ops[k], theta, None)?;
        }
        mat += SuperoperatorMatrix::unitary(&u).mat * num_complex::Complex64::new(dist.probs[k], 0.0);
    }
    Ok(SuperoperatorMatrix { dim: d, mat })
}

/// Integer `1/s`, rejecting fractional repetition counts.
pub fn inverse_step(s: f64) -> Result<u64> {
    if !(s > 0.0) {
        return domain("s must be positive");
    }
    let r = (1.0 / s).round();
    if ((1.0 / s) - r).abs() > 1e-9 * r {
        return domain(format!("1/s = {} is not an integer", 1.0 / s));
    }
    Ok(r as u64)
}

/// Choi distance between `(E_s)^{1/s}` (with `T = 1`) and conjugation by `e^{iH}`.
pub fn first_order_error(decomp: &HermitianDecomposition, s: f64) -> Result<f64> {
    let reps = inverse_step(s)?;
    let e = exact_parametrized_channel(decomp, s, 1.0)?.pow(reps);
    let exact = SuperoperatorMatrix::unitary(&exact_evolution_decomp(decomp, 1.0)?);
    choi_distance(&e, &exact)
}
