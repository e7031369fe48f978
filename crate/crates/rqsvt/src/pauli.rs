//! Pauli strings as x/z bitmasks, weighted decompositions, spin-model builders
//! and the plain-text Hamiltonian format.
//!
//! Qubit `q` (0-based, leftmost letter of a word) is stored at bit `n-1-q`, so
//! basis index bits read in the same order as the word.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// `i^k` for k taken mod 4.
pub fn i_pow(k: u8) -> Complex64 {
    I_POW[(k & 3) as usize]
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString { n, x: 0, z: 0 }
    }

    /// Build from raw masks. Bits above `n` must be clear.
    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= MAX_QUBITS);
        let m = mask(n);
        assert!(x & !m == 0 && z & !m == 0, "mask bits beyond n");
        PauliString { n, x, z }
    }

    pub fn from_word(word: &str) -> Result<Self> {
        let n = word.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::Cap(format!("word of length {n} exceeds {MAX_QUBITS} qubits")));
        }
        let mut p = PauliString::identity(n);
        for (q, c) in word.chars().enumerate() {
            p.set(q, c)?;
        }
        Ok(p)
    }

    /// Identity except for the listed `(qubit, letter)` sites.
    pub fn from_sites(n: usize, sites: &[(usize, char)]) -> Result<Self> {
        let mut p = PauliString::identity(n);
        for &(q, c) in sites {
            if q >= n {
                return Err(Error::Dimension(format!("qubit {q} out of range for n = {n}")));
            }
            p.set(q, c)?;
        }
        Ok(p)
    }

    fn set(&mut self, q: usize, c: char) -> Result<()> {
        let bit = 1u64 << (self.n - 1 - q);
        let (xb, zb) = match c {
            'I' => (false, false),
            'X' => (true, false),
            'Y' => (true, true),
            'Z' => (false, true),
            other => return Err(Error::Domain(format!("invalid Pauli letter '{other}'"))),
        };
        self.x = if xb { self.x | bit } else { self.x & !bit };
        self.z = if zb { self.z | bit } else { self.z & !bit };
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn x_mask(&self) -> u64 {
        self.x
    }
    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, q: usize) -> char {
        let bit = 1u64 << (self.n - 1 - q);
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    pub fn to_word(&self) -> String {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Bitmask of qubits acted on non-trivially.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// `self * other = i^k * result`.
    pub fn multiply(&self, other: &PauliString) -> (u8, PauliString) {
        assert_eq!(self.n, other.n, "qubit count mismatch");
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.y_count() as i64 + other.y_count() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x & z).count_ones() as i64;
        (k.rem_euclid(4) as u8, PauliString { n: self.n, x, z })
    }

    /// `P|b> = phase |b'>`.
    #[inline]
    pub fn apply_basis(&self, b: usize) -> (Complex64, usize) {
        let b64 = b as u64;
        let k = self.y_count() + 2 * (self.z & b64).count_ones();
        (i_pow(k as u8), (b64 ^ self.x) as usize)
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let d = 1usize << self.n;
        let mut m = DMatrix::zeros(d, d);
        for b in 0..d {
            let (ph, b2) = self.apply_basis(b);
            m[(b2, b)] = ph;
        }
        m
    }

    /// Tensor with a new leading qubit carrying `letter`.
    pub fn with_leading(&self, letter: char) -> Result<PauliString> {
        let mut p = PauliString::from_masks(self.n + 1, self.x, self.z);
        p.set(0, letter)?;
        Ok(p)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_word())
    }
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `[P, Q] = 2 i^k R` when P and Q anticommute; `None` when they commute.
pub fn pauli_commutator(p: &PauliString, q: &PauliString) -> Result<Option<(Complex64, PauliString)>> {
    if p.n != q.n {
        return Err(Error::Dimension(format!("{} vs {} qubits", p.n, q.n)));
    }
    if p.commutes(q) {
        return Ok(None);
    }
    let (k, r) = p.multiply(q);
    Ok(Some((2.0 * i_pow(k), r)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedTerm {
    pub coeff: f64,
    pub op: PauliString,
}

#[derive(Clone, Debug)]
pub struct SamplingDistribution {
    pub probs: Vec<f64>,
    pub signs: Vec<f64>,
    pub ops: Vec<PauliString>,
    index: Option<WeightedIndex<f64>>,
}

impl SamplingDistribution {
    fn from_terms(terms: &[WeightedTerm], lambda: f64) -> Self {
        let probs: Vec<f64> = terms.iter().map(|t| t.coeff.abs() / lambda).collect();
        let signs = terms.iter().map(|t| t.coeff.signum()).collect();
        let ops = terms.iter().map(|t| t.op).collect();
        let index = if probs.is_empty() { None } else { WeightedIndex::new(&probs).ok() };
        SamplingDistribution { probs, signs, ops, index }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Draw `(k, sign_k, P_k)` with probability `p_k`.
    ///
    /// Panics on an empty distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64, PauliString) {
        let idx = self.index.as_ref().expect("sampling from an empty decomposition");
        let k = idx.sample(rng);
        (k, self.signs[k], self.ops[k])
    }
}

pub fn sample_term<R: Rng + ?Sized>(dist: &SamplingDistribution, rng: &mut R) -> (usize, f64, PauliString) {
    dist.sample(rng)
}

#[derive(Clone, Debug)]
pub struct HermitianDecomposition {
    n: usize,
    terms: Vec<WeightedTerm>,
    lambda: f64,
    dist: SamplingDistribution,
}

impl HermitianDecomposition {
    /// Duplicate words are merged by adding coefficients; exact cancellations
    /// and zero inputs are dropped. Order of first appearance is kept.
    pub fn new<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        if n > MAX_QUBITS {
            return Err(Error::Cap(format!("{n} qubits exceeds {MAX_QUBITS}")));
        }
        let mut slot: HashMap<(u64, u64), usize> = HashMap::new();
        let mut acc: Vec<(f64, f64, PauliString)> = Vec::new();
        for (c, p) in terms {
            if !c.is_finite() {
                return Err(Error::Domain(format!("non-finite coefficient for {p}")));
            }
            if p.n != n {
                return Err(Error::Dimension(format!("term {p} has {} qubits, expected {n}", p.n)));
            }
            match slot.get(&(p.x, p.z)) {
                Some(&i) => {
                    acc[i].0 += c;
                    acc[i].1 += c.abs();
                }
                None => {
                    slot.insert((p.x, p.z), acc.len());
                    acc.push((c, c.abs(), p));
                }
            }
        }
        let terms: Vec<WeightedTerm> = acc
            .into_iter()
            .filter(|&(c, mag, _)| c != 0.0 && c.abs() > 1e-14 * mag)
            .map(|(coeff, _, op)| WeightedTerm { coeff, op })
            .collect();
        Ok(Self::from_clean(n, terms))
    }

    fn from_clean(n: usize, terms: Vec<WeightedTerm>) -> Self {
        let lambda: f64 = terms.iter().map(|t| t.coeff.abs()).sum();
        let dist = SamplingDistribution::from_terms(&terms, lambda);
        HermitianDecomposition { n, terms, lambda, dist }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_clean(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn terms(&self) -> &[WeightedTerm] {
        &self.terms
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn distribution(&self) -> &SamplingDistribution {
        &self.dist
    }

    pub fn scaled(&self, f: f64) -> Self {
        if f == 0.0 {
            return Self::empty(self.n);
        }
        let terms = self.terms.iter().map(|t| WeightedTerm { coeff: t.coeff * f, op: t.op }).collect();
        Self::from_clean(self.n, terms)
    }

    pub fn coeff_of(&self, p: &PauliString) -> f64 {
        self.terms.iter().find(|t| t.op == *p).map_or(0.0, |t| t.coeff)
    }

    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let d = 1usize << self.n;
        let mut m = DMatrix::zeros(d, d);
        for t in &self.terms {
            for b in 0..d {
                let (ph, b2) = t.op.apply_basis(b);
                m[(b2, b)] += ph * t.coeff;
            }
        }
        m
    }

    /// The real symmetric matrix when every word has an even number of Y's.
    pub fn real_matrix(&self) -> Option<DMatrix<f64>> {
        if self.terms.iter().any(|t| t.op.y_count() % 2 == 1) {
            return None;
        }
        let d = 1usize << self.n;
        let mut m = DMatrix::zeros(d, d);
        for t in &self.terms {
            for b in 0..d {
                let (ph, b2) = t.op.apply_basis(b);
                m[(b2, b)] += ph.re * t.coeff;
            }
        }
        Some(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.n);
        for t in &self.terms {
            s.push_str(&format!("{} {}\n", t.coeff, t.op));
        }
        s
    }
}

/// Parse the line format: a `qubits <n>` header, then `<coeff> <word>` lines.
/// `#` starts a comment anywhere on a line.
pub fn parse_hamiltonian(text: &str) -> Result<HermitianDecomposition> {
    let mut n: Option<usize> = None;
    let mut terms = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let first = parts.next().unwrap_or("");
        let second = parts.next();
        if parts.next().is_some() {
            return Err(Error::Parse { line: line_no, msg: "too many fields".into() });
        }
        let Some(nq) = n else {
            if first != "qubits" {
                return Err(Error::Parse { line: line_no, msg: "missing `qubits <n>` header".into() });
            }
            let v = second
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse { line: line_no, msg: "malformed qubit count".into() })?;
            if v == 0 || v > MAX_QUBITS {
                return Err(Error::Parse { line: line_no, msg: format!("qubit count {v} out of range") });
            }
            n = Some(v);
            continue;
        };
        let coeff: f64 = first.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("malformed coefficient '{first}'"),
        })?;
        if !coeff.is_finite() {
            return Err(Error::Parse { line: line_no, msg: "coefficient is not finite".into() });
        }
        let word = second.ok_or_else(|| Error::Parse { line: line_no, msg: "missing Pauli word".into() })?;
        if word.chars().count() != nq {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("word '{word}' has length {}, expected {nq}", word.chars().count()),
            });
        }
        if let Some(bad) = word.chars().find(|c| !"IXYZ".contains(*c)) {
            return Err(Error::Parse { line: line_no, msg: format!("invalid letter '{bad}'") });
        }
        terms.push((coeff, PauliString::from_word(word)?));
    }
    let n = n.ok_or(Error::Parse { line: 0, msg: "missing `qubits <n>` header".into() })?;
    HermitianDecomposition::new(n, terms)
}

/// Drop the smallest-magnitude terms while their running total stays within
/// `budget`, then drop the identity word.
pub fn truncate(decomp: &HermitianDecomposition, budget: f64) -> Result<HermitianDecomposition> {
    if !(budget >= 0.0) {
        return Err(Error::Domain(format!("budget must be >= 0, got {budget}")));
    }
    let mut sorted: Vec<(WeightedTerm, String)> =
        decomp.terms.iter().map(|t| (*t, t.op.to_word())).collect();
    sorted.sort_by(|a, b| {
        a.0.coeff
            .abs()
            .partial_cmp(&b.0.coeff.abs())
            .unwrap()
            .then_with(|| a.1.cmp(&b.1))
    });
    let mut removed = 0.0;
    let mut cut = 0;
    for (t, _) in &sorted {
        if removed + t.coeff.abs() <= budget {
            removed += t.coeff.abs();
            cut += 1;
        } else {
            break;
        }
    }
    let kept: Vec<WeightedTerm> = sorted[cut..]
        .iter()
        .rev()
        .map(|(t, _)| *t)
        .filter(|t| !t.op.is_identity())
        .collect();
    Ok(HermitianDecomposition::from_clean(decomp.n, kept))
}

/// Chain boundary for the long-range model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Open,
    /// Ring with minimum-image distance `min(|i-j|, n-|i-j|)`.
    Periodic,
}

/// `-h sum X_i - J sum_{i<j} Z_i Z_j / |i-j|^alpha` on an open chain.
pub fn build_tfim_long_range(n: usize, h: f64, j: f64, alpha: f64) -> Result<HermitianDecomposition> {
    build_tfim_long_range_with(n, h, j, alpha, Boundary::Open)
}

pub fn build_tfim_long_range_with(n: usize, h: f64, j: f64, alpha: f64, boundary: Boundary) -> Result<HermitianDecomposition> {
    if n < 2 || !(h > 0.0) || !(j > 0.0) || !(alpha > 1.0) {
        return Err(Error::Domain(format!(
            "long-range TFIM needs n >= 2, h > 0, J > 0, alpha > 1 (got n={n}, h={h}, J={j}, alpha={alpha})"
        )));
    }
    let mut terms = Vec::with_capacity(n + n * (n - 1) / 2);
    for i in 0..n {
        terms.push((-h, PauliString::from_sites(n, &[(i, 'X')])?));
    }
    for a in 0..n {
        for b in a + 1..n {
            let r = match boundary {
                Boundary::Open => b - a,
                Boundary::Periodic => (b - a).min(n - (b - a)),
            };
            let c = -j / (r as f64).powf(alpha);
            terms.push((c, PauliString::from_sites(n, &[(a, 'Z'), (b, 'Z')])?));
        }
    }
    HermitianDecomposition::new(n, terms)
}

/// `-h sum Z_i - J sum X_i X_{i+1} (periodic) - (g/n) sum_{i<j} Z_i Z_j / |i-j|^alpha`.
pub fn build_tfim_hybrid(n: usize, h: f64, j: f64, g: f64, alpha: f64) -> Result<HermitianDecomposition> {
    if n < 3 || !(h > 0.0) || !(j > 0.0) || !(g >= 0.0) || !(alpha > 1.0) {
        return Err(Error::Domain(format!(
            "hybrid TFIM needs n >= 3, h > 0, J > 0, g >= 0, alpha > 1 (got n={n}, h={h}, J={j}, g={g}, alpha={alpha})"
        )));
    }
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push((-h, PauliString::from_sites(n, &[(i, 'Z')])?));
    }
    for i in 0..n {
        terms.push((-j, PauliString::from_sites(n, &[(i, 'X'), ((i + 1) % n, 'X')])?));
    }
    if g > 0.0 {
        for a in 0..n {
            for b in a + 1..n {
                let c = -(g / n as f64) / ((b - a) as f64).powf(alpha);
                terms.push((c, PauliString::from_sites(n, &[(a, 'Z'), (b, 'Z')])?));
            }
        }
    }
    HermitianDecomposition::new(n, terms)
}

/// `h n + J sum_{r=1}^{n-1} (n-r)/r^alpha`.
pub fn lambda_long_range_closed_form(n: usize, h: f64, j: f64, alpha: f64) -> f64 {
    h * n as f64 + j * (1..n).map(|r| (n - r) as f64 / (r as f64).powf(alpha)).sum::<f64>()
}

/// `h n + J n + (g/n) sum_{r=1}^{n-1} (n-r)/r^alpha`.
pub fn lambda_hybrid_closed_form(n: usize, h: f64, j: f64, g: f64, alpha: f64) -> f64 {
    let nf = n as f64;
    h * nf + j * nf + (g / nf) * (1..n).map(|r| (n - r) as f64 / (r as f64).powf(alpha)).sum::<f64>()
}
