//! Dense state vectors, density matrices, observables and superoperators.
//!
//! Superoperators act on row-stacked density matrices:
//! `vec(A rho B) = (A kron B^T) vec(rho)` with `vec(rho)[i*d + j] = rho[i, j]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{HermitianDecomposition, PauliString};
use crate::polyapprox::{DensePolynomial, Parity};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Dense eigendecompositions are capped at this many qubits.
pub const MAX_DENSE_QUBITS: usize = 14;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

fn check_cap(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Cap(format!("{n} qubits exceeds dense cap {MAX_DENSE_QUBITS}")));
    }
    Ok(())
}

fn qubits_of(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::Dimension(format!("dimension {d} is not a power of two")));
    }
    Ok(d.trailing_zeros() as usize)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: CVec,
}

impl StateVector {
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = CVec::zeros(1 << n);
        amps[index] = C1;
        StateVector { n, amps }
    }

    pub fn from_amps(amps: CVec) -> Result<Self> {
        let n = qubits_of(amps.len())?;
        Ok(StateVector { n, amps })
    }

    /// Equal superposition `|+>^n`.
    pub fn plus(n: usize) -> Self {
        let d = 1usize << n;
        let a = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        StateVector { n, amps: CVec::from_element(d, a) }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Self {
        let nr = self.norm();
        StateVector { n: self.n, amps: self.amps.unscale(nr) }
    }

    pub fn is_normalized(&self) -> bool {
        (self.amps.norm_squared() - 1.0).abs() <= 1e-10
    }

    /// `|bit> (x) self`, the new qubit leading.
    pub fn with_ancilla(&self, bit: u8) -> Self {
        let d = self.dim();
        let mut amps = CVec::zeros(2 * d);
        let off = if bit == 0 { 0 } else { d };
        amps.rows_mut(off, d).copy_from(&self.amps);
        StateVector { n: self.n + 1, amps }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    pub fn apply(&self, u: &CMat) -> Result<StateVector> {
        if u.ncols() != self.dim() {
            return Err(Error::Dimension(format!("{}x{} operator on dim {}", u.nrows(), u.ncols(), self.dim())));
        }
        StateVector::from_amps(u * &self.amps)
    }

    /// In-place `exp(i theta P)`, optionally controlled on `(qubit, value)`.
    /// `P` must act as identity on the control qubit.
    pub fn rotate(&mut self, p: &PauliString, theta: f64, control: Option<(usize, bool)>) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::Dimension(format!("{}-qubit Pauli on {}-qubit state", p.n(), self.n)));
        }
        rotate_slice(self.amps.as_mut_slice(), self.n, p, theta, control)
    }
}

/// `exp(i theta P)` (optionally controlled) on a raw amplitude slice.
pub(crate) fn rotate_slice(
    a: &mut [Complex64],
    n: usize,
    p: &PauliString,
    theta: f64,
    control: Option<(usize, bool)>,
) -> Result<()> {
    let (cbit, cval) = match control {
        Some((q, v)) => {
            if q >= n {
                return Err(Error::Dimension(format!("control qubit {q} out of range")));
            }
            let bit = 1u64 << (n - 1 - q);
            if p.support() & bit != 0 {
                return Err(Error::Dimension("rotation acts on its own control qubit".into()));
            }
            (bit as usize, if v { bit as usize } else { 0 })
        }
        None => (0, 0),
    };
    let (c, s) = (theta.cos(), theta.sin());
    let is = Complex64::new(0.0, s);
    let x = p.x_mask() as usize;
    if x == 0 {
        for b in 0..a.len() {
            if b & cbit == cval {
                let (ph, _) = p.apply_basis(b);
                a[b] *= c + is * ph;
            }
        }
        return Ok(());
    }
    let hb = 1usize << (usize::BITS - 1 - x.leading_zeros());
    for b in 0..a.len() {
        if b & hb != 0 || b & cbit != cval {
            continue;
        }
        let b2 = b ^ x;
        let (ph1, _) = p.apply_basis(b);
        let (ph2, _) = p.apply_basis(b2);
        let (a1, a2) = (a[b], a[b2]);
        a[b] = c * a1 + is * ph2 * a2;
        a[b2] = c * a2 + is * ph1 * a1;
    }
    Ok(())
}

/// Functional form of [`StateVector::rotate`].
pub fn apply_pauli_rotation(
    state: &StateVector,
    p: &PauliString,
    theta: f64,
    control: Option<(usize, bool)>,
) -> Result<StateVector> {
    let mut out = state.clone();
    out.rotate(p, theta, control)?;
    Ok(out)
}

/// Conjugate a density matrix in place by `exp(i theta P)`.
pub(crate) fn rotate_density(rho: &mut CMat, n: usize, p: &PauliString, theta: f64, control: Option<(usize, bool)>) -> Result<()> {
    let d = rho.nrows();
    for j in 0..d {
        rotate_slice(rho.column_mut(j).as_mut_slice(), n, p, theta, control)?;
    }
    // rows: (U rho U^dag)^dag = U (U rho)^dag
    let mut t = rho.adjoint();
    for j in 0..d {
        rotate_slice(t.column_mut(j).as_mut_slice(), n, p, theta, control)?;
    }
    *rho = t.adjoint();
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    pub n: usize,
    pub mat: CMat,
}

impl DensityOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let n = qubits_of(mat.nrows())?;
        let herm = (&mat - mat.adjoint()).norm();
        if herm > 1e-10 {
            return Err(Error::Domain(format!("density matrix not Hermitian (defect {herm:.2e})")));
        }
        let tr = mat.trace();
        if (tr - C1).norm() > 1e-10 {
            return Err(Error::Domain(format!("density matrix trace {tr} != 1")));
        }
        let ev = SymmetricEigen::new(mat.clone()).eigenvalues;
        if ev.iter().any(|&e| e < -1e-9) {
            return Err(Error::Domain("density matrix has a negative eigenvalue".into()));
        }
        Ok(DensityOperator { n, mat })
    }

    pub fn from_state(psi: &StateVector) -> Self {
        DensityOperator { n: psi.n, mat: &psi.amps * psi.amps.adjoint() }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        DensityOperator { n, mat: CMat::identity(d, d).unscale(d as f64) }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn conjugate(&self, u: &CMat) -> DensityOperator {
        DensityOperator { n: self.n, mat: u * &self.mat * u.adjoint() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub n: usize,
    pub mat: CMat,
    pub norm: f64,
}

impl Observable {
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension("observable must be square".into()));
        }
        let n = qubits_of(mat.nrows())?;
        let herm = (&mat - mat.adjoint()).norm();
        if herm > 1e-10 {
            return Err(Error::Domain(format!("observable not Hermitian (defect {herm:.2e})")));
        }
        let ev = SymmetricEigen::new(mat.clone()).eigenvalues;
        let norm = ev.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Ok(Observable { n, mat, norm })
    }

    pub fn identity(n: usize) -> Self {
        let d = 1usize << n;
        Observable { n, mat: CMat::identity(d, d), norm: 1.0 }
    }

    pub fn from_pauli(p: &PauliString) -> Self {
        Observable { n: p.n(), mat: p.matrix(), norm: 1.0 }
    }

    pub fn from_decomp(h: &HermitianDecomposition) -> Result<Self> {
        check_cap(h.n())?;
        Observable::new(h.dense_matrix())
    }

    /// `|bit><bit| (x) O` with the ancilla leading.
    pub fn ancilla_projected(&self, bit: u8) -> Observable {
        let d = self.mat.nrows();
        let mut m = CMat::zeros(2 * d, 2 * d);
        let off = if bit == 0 { 0 } else { d };
        m.view_mut((off, off), (d, d)).copy_from(&self.mat);
        Observable { n: self.n + 1, mat: m, norm: self.norm }
    }
}

fn real_part_checked(v: Complex64, scale: f64) -> Result<f64> {
    if v.im.abs() > 1e-10 * scale.max(1.0) {
        return Err(Error::Domain(format!("expectation has imaginary residue {:.3e}", v.im)));
    }
    Ok(v.re)
}

pub fn expectation_state(psi: &StateVector, o: &Observable) -> Result<f64> {
    if psi.dim() != o.mat.nrows() {
        return Err(Error::Dimension(format!("state dim {} vs observable dim {}", psi.dim(), o.mat.nrows())));
    }
    let v = psi.amps.dotc(&(&o.mat * &psi.amps));
    real_part_checked(v, o.norm)
}

pub fn expectation_density(rho: &DensityOperator, o: &Observable) -> Result<f64> {
    expectation_matrix(&rho.mat, o)
}

/// `Tr[O rho]` for any square `rho` of matching size.
pub fn expectation_matrix(rho: &CMat, o: &Observable) -> Result<f64> {
    if rho.nrows() != o.mat.nrows() || !rho.is_square() {
        return Err(Error::Dimension(format!("rho dim {} vs observable dim {}", rho.nrows(), o.mat.nrows())));
    }
    let v = o.mat.component_mul(&rho.transpose()).sum();
    real_part_checked(v, o.norm)
}

/// `exp(i t H)` via Hermitian eigendecomposition.
pub fn exact_evolution(h: &CMat, t: f64) -> Result<CMat> {
    let (vals, vecs) = eigen(h)?;
    let mut scaled = vecs.clone();
    for (j, &e) in vals.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, e * t);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= ph;
        }
    }
    Ok(scaled * vecs.adjoint())
}

pub fn exact_evolution_decomp(h: &HermitianDecomposition, t: f64) -> Result<CMat> {
    check_cap(h.n())?;
    exact_evolution(&h.dense_matrix(), t)
}

/// Ascending eigenvalues and matching orthonormal eigenvectors (columns).
pub fn eigen(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !h.is_square() {
        return Err(Error::Dimension("eigen needs a square matrix".into()));
    }
    check_cap(qubits_of(h.nrows()).unwrap_or(0))?;
    let herm = (h - h.adjoint()).norm();
    if herm > 1e-10 * h.norm().max(1.0) {
        return Err(Error::Domain(format!("matrix not Hermitian (defect {herm:.2e})")));
    }
    let se = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(h.nrows(), h.ncols(), |r, c| se.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn eigenvalues_real(h: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Apply `P` to the singular values of `a`: `sum P(s_i) |u_i><v_i|` for odd
/// `P`, `sum P(s_i) |v_i><v_i|` (over a full right basis) for even `P`.
pub fn svt_oracle(a: &CMat, p: &DensePolynomial) -> Result<CMat> {
    let parity = p.parity();
    if parity == Parity::None {
        return Err(Error::Domain("svt_oracle needs a polynomial of definite parity".into()));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let k = svd.singular_values.len();
    match parity {
        Parity::Odd => {
            let mut out = CMat::zeros(a.nrows(), a.ncols());
            for i in 0..k {
                let w = p.eval(Complex64::new(svd.singular_values[i], 0.0));
                out += u.column(i) * vt.row(i) * w;
            }
            Ok(out)
        }
        _ => {
            let p0 = p.eval(C0);
            let d = a.ncols();
            let mut out = CMat::identity(d, d) * p0;
            for i in 0..k {
                let w = p.eval(Complex64::new(svd.singular_values[i], 0.0)) - p0;
                let v = vt.row(i).adjoint();
                out += &v * v.adjoint() * w;
            }
            Ok(out)
        }
    }
}

pub fn sub_block(u: &CMat, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<CMat> {
    if row0 + rows > u.nrows() || col0 + cols > u.ncols() {
        return Err(Error::Dimension(format!(
            "block ({row0},{col0})+({rows}x{cols}) outside {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    Ok(u.view((row0, col0), (rows, cols)).into_owned())
}

pub fn top_left_block(u: &CMat, rows: usize, cols: usize) -> Result<CMat> {
    sub_block(u, 0, 0, rows, cols)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuperoperatorMatrix {
    pub dim: usize,
    pub mat: CMat,
}

impl SuperoperatorMatrix {
    pub fn identity(dim: usize) -> Self {
        SuperoperatorMatrix { dim, mat: CMat::identity(dim * dim, dim * dim) }
    }

    /// `rho -> U rho U^dag`.
    pub fn unitary(u: &CMat) -> Self {
        let conj = u.map(|z| z.conj());
        SuperoperatorMatrix { dim: u.nrows(), mat: u.kronecker(&conj) }
    }

    /// Tabulate a linear map from its action on matrix units.
    pub fn from_map(dim: usize, f: impl Fn(&CMat) -> CMat) -> Self {
        let mut mat = CMat::zeros(dim * dim, dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut e = CMat::zeros(dim, dim);
                e[(i, j)] = C1;
                let out = f(&e);
                for a in 0..dim {
                    for b in 0..dim {
                        mat[(a * dim + b, i * dim + j)] = out[(a, b)];
                    }
                }
            }
        }
        SuperoperatorMatrix { dim, mat }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.dim;
        let v = CVec::from_iterator(d * d, (0..d * d).map(|k| rho[(k / d, k % d)]));
        let w = &self.mat * v;
        CMat::from_fn(d, d, |i, j| w[i * d + j])
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &SuperoperatorMatrix) -> SuperoperatorMatrix {
        SuperoperatorMatrix { dim: self.dim, mat: &self.mat * &first.mat }
    }

    pub fn pow(&self, k: u64) -> SuperoperatorMatrix {
        let mut result = SuperoperatorMatrix::identity(self.dim);
        let mut base = self.mat.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result.mat = &base * &result.mat;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Normalised Choi matrix `(1/d) sum_ij |i><j| (x) E(|i><j|)`, trace one for
    /// trace-preserving maps.
    pub fn choi(&self) -> CMat {
        let d = self.dim;
        let mut j = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for k in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        j[(i * d + a, k * d + b)] = self.mat[(a * d + b, i * d + k)] / d as f64;
                    }
                }
            }
        }
        j
    }

    /// Choi PSD and trace preservation within `tol`.
    pub fn is_cptp(&self, tol: f64) -> bool {
        let d = self.dim;
        let j = self.choi();
        let herm = (&j - j.adjoint()).norm();
        if herm > tol {
            return false;
        }
        let ev = SymmetricEigen::new(j.clone()).eigenvalues;
        if ev.iter().any(|&e| e < -tol) {
            return false;
        }
        // partial trace over the output factor must be I/d
        for i in 0..d {
            for k in 0..d {
                let mut s = C0;
                for a in 0..d {
                    s += j[(i * d + a, k * d + a)];
                }
                let want = if i == k { 1.0 / d as f64 } else { 0.0 };
                if (s - want).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Trace norm of the difference of normalised Choi matrices.
///
/// Sits below the diamond norm and above it divided by the dimension, which is
/// enough for order-in-`s` statements.
pub fn choi_distance(e: &SuperoperatorMatrix, f: &SuperoperatorMatrix) -> Result<f64> {
    if e.dim != f.dim {
        return Err(Error::Dimension(format!("channel dims {} vs {}", e.dim, f.dim)));
    }
    let diff = e.choi() - f.choi();
    Ok(trace_norm(&diff))
}

pub fn trace_norm(m: &CMat) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Real Pauli transfer matrix on `n` qubits: `rho = (1/d) sum_i r_i P_i` with
/// `r_i = Tr(P_i rho)`, and the channel acts as `r -> mat * r`. Pauli index
/// `i = x | (z << n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTransferMatrix {
    pub n: usize,
    pub mat: DMatrix<f64>,
}

pub const MAX_PTM_QUBITS: usize = 5;

fn pauli_index(p: &PauliString) -> usize {
    p.x_mask() as usize | ((p.z_mask() as usize) << p.n())
}

fn pauli_at(n: usize, i: usize) -> PauliString {
    let m = (1usize << n) - 1;
    PauliString::from_masks(n, (i & m) as u64, (i >> n) as u64)
}

pub fn pauli_vector(rho: &CMat, n: usize) -> DVector<f64> {
    let d = 1usize << n;
    DVector::from_iterator(
        d * d,
        (0..d * d).map(|i| {
            let p = pauli_at(n, i);
            let mut acc = C0;
            for c in 0..d {
                let (ph, c2) = p.apply_basis(c);
                acc += ph * rho[(c, c2)];
            }
            acc.re
        }),
    )
}

pub fn density_from_pauli_vector(r: &DVector<f64>, n: usize) -> CMat {
    let d = 1usize << n;
    let mut rho = CMat::zeros(d, d);
    for (i, &ri) in r.iter().enumerate() {
        if ri == 0.0 {
            continue;
        }
        let p = pauli_at(n, i);
        for c in 0..d {
            let (ph, c2) = p.apply_basis(c);
            rho[(c2, c)] += ph * (ri / d as f64);
        }
    }
    rho
}

/// `e^{i theta P} Q e^{-i theta P}` as a combination of Paulis.
fn conjugate_term(p: &PauliString, theta: f64, q: PauliString, w: f64, out: &mut Vec<(PauliString, f64)>) {
    if p.commutes(&q) {
        out.push((q, w));
        return;
    }
    let (k, r) = p.multiply(&q);
    let sign = crate::pauli::i_pow((k + 1) % 4).re;
    let (s2, c2) = (2.0 * theta).sin_cos();
    out.push((q, w * c2));
    out.push((r, w * s2 * sign));
}

/// Factor `e^{i theta |v><v|_c (x) P}` into two commuting plain rotations.
fn rotation_factors(p: &PauliString, theta: f64, control: Option<(usize, bool)>) -> Result<Vec<(PauliString, f64)>> {
    match control {
        None => Ok(vec![(*p, theta)]),
        Some((c, v)) => {
            let n = p.n();
            if c >= n {
                return Err(Error::Dimension(format!("control qubit {c} out of range")));
            }
            let bit = 1u64 << (n - 1 - c);
            if p.support() & bit != 0 {
                return Err(Error::Dimension("rotation acts on its own control qubit".into()));
            }
            let zp = PauliString::from_masks(n, p.x_mask(), p.z_mask() ^ bit);
            let sign = if v { -1.0 } else { 1.0 };
            Ok(vec![(*p, theta / 2.0), (zp, sign * theta / 2.0)])
        }
    }
}

impl PauliTransferMatrix {
    pub fn identity(n: usize) -> Self {
        let d2 = 1usize << (2 * n);
        PauliTransferMatrix { n, mat: DMatrix::identity(d2, d2) }
    }

    fn check(n: usize) -> Result<()> {
        if n > MAX_PTM_QUBITS {
            return Err(Error::Cap(format!("transfer matrices are limited to {} qubits", MAX_PTM_QUBITS)));
        }
        Ok(())
    }

    /// `sum_k w_k (rho -> U_k rho U_k^dag)` with `U_k` a (controlled) Pauli rotation.
    pub fn rotation_mixture(n: usize, items: &[(f64, PauliString, f64, Option<(usize, bool)>)]) -> Result<Self> {
        Self::check(n)?;
        let d2 = 1usize << (2 * n);
        let mut mat = DMatrix::zeros(d2, d2);
        let mut cur = Vec::new();
        let mut next = Vec::new();
        for &(w, p, theta, control) in items {
            if p.n() != n {
                return Err(Error::Dimension(format!("{}-qubit Pauli in a {}-qubit map", p.n(), n)));
            }
            let factors = rotation_factors(&p, theta, control)?;
            for i in 0..d2 {
                cur.clear();
                cur.push((pauli_at(n, i), w));
                for (fp, ft) in &factors {
                    next.clear();
                    for &(q, cw) in &cur {
                        conjugate_term(fp, *ft, q, cw, &mut next);
                    }
                    std::mem::swap(&mut cur, &mut next);
                }
                for &(q, cw) in &cur {
                    mat[(pauli_index(&q), i)] += cw;
                }
            }
        }
        Ok(PauliTransferMatrix { n, mat })
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &PauliTransferMatrix) -> PauliTransferMatrix {
        PauliTransferMatrix { n: self.n, mat: &self.mat * &first.mat }
    }

    pub fn pow(&self, k: u64) -> PauliTransferMatrix {
        let d2 = self.mat.nrows();
        let mut result = DMatrix::identity(d2, d2);
        let mut base = self.mat.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = &base * &result;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        PauliTransferMatrix { n: self.n, mat: result }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        density_from_pauli_vector(&(&self.mat * pauli_vector(rho, self.n)), self.n)
    }
}
