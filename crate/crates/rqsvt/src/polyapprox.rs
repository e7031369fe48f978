//! Polynomial constructions and phase solvers.
//!
//! `DensePolynomial` keeps its coefficients in the Chebyshev basis; monomial
//! coefficients are produced on request. Degree-64 polynomials bounded on
//! `[-1, 1]` can have monomial coefficients far above `1e8`, so every
//! evaluation here goes through Clenshaw recurrences.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc_inv};

use crate::constants::{FILTER_MAX_DEGREE, GQSP_MAX_DEGREE, QSP_MAX_DEGREE, RESCALE_MAX_M};
use crate::error::{domain, Error, Result};
use crate::seed::master_rng;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const PARITY_TOL: f64 = 1e-12;
const FIT_MAX_DEGREE: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn of_degree(d: usize) -> Parity {
        if d % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensePolynomial {
    cheb: Vec<Complex64>,
}

impl DensePolynomial {
    pub fn zero() -> Self {
        DensePolynomial { cheb: vec![C0] }
    }

    pub fn constant(c: f64) -> Self {
        DensePolynomial { cheb: vec![Complex64::new(c, 0.0)] }
    }

    /// From monomial coefficients `c_0, c_1, ..., c_d`.
    pub fn from_coeffs(coeffs: &[Complex64]) -> Self {
        if coeffs.is_empty() {
            return Self::zero();
        }
        let d = coeffs.len() - 1;
        let mut out = vec![C0; d + 1];
        // Chebyshev expansion of x^k, built up by multiplying with x.
        let mut xk = vec![C0; d + 1];
        xk[0] = C1;
        for (k, &a) in coeffs.iter().enumerate() {
            if k > 0 {
                let mut next = vec![C0; d + 1];
                for j in 0..k {
                    let c = xk[j];
                    if c == C0 {
                        continue;
                    }
                    if j == 0 {
                        next[1] += c;
                    } else {
                        next[j + 1] += c * 0.5;
                        next[j - 1] += c * 0.5;
                    }
                }
                xk = next;
            }
            if a != C0 {
                for j in 0..=k {
                    out[j] += a * xk[j];
                }
            }
        }
        DensePolynomial { cheb: out }
    }

    pub fn from_real_coeffs(coeffs: &[f64]) -> Self {
        let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_coeffs(&c)
    }

    pub fn from_chebyshev(cheb: Vec<Complex64>) -> Self {
        if cheb.is_empty() {
            return Self::zero();
        }
        DensePolynomial { cheb }
    }

    pub fn from_real_chebyshev(cheb: &[f64]) -> Self {
        Self::from_chebyshev(cheb.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn chebyshev(&self) -> &[Complex64] {
        &self.cheb
    }

    /// Monomial coefficients, lowest power first.
    pub fn coeffs(&self) -> Vec<Complex64> {
        let n = self.cheb.len();
        let mut out = vec![C0; n];
        let mut prev = vec![0.0; n];
        let mut cur = vec![0.0; n];
        prev[0] = 1.0;
        for (k, &c) in self.cheb.iter().enumerate() {
            if k == 0 {
                out[0] += c;
                continue;
            }
            if k == 1 {
                cur[1] = 1.0;
            } else {
                let mut next = vec![0.0; n];
                for j in 0..k {
                    next[j + 1] += 2.0 * cur[j];
                    next[j] -= prev[j];
                }
                prev = std::mem::replace(&mut cur, next);
            }
            for j in 0..=k {
                out[j] += c * cur[j];
            }
        }
        out
    }

    /// Stored length minus one; trailing coefficients may be numerically zero.
    pub fn nominal_degree(&self) -> usize {
        self.cheb.len() - 1
    }

    pub fn degree(&self) -> usize {
        let max = self.cheb.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        self.cheb.iter().rposition(|c| c.norm() > 1e-14 * max).unwrap_or(0)
    }

    pub fn parity(&self) -> Parity {
        let max = self.cheb.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return Parity::Even;
        }
        let mut odd: f64 = 0.0;
        let mut even: f64 = 0.0;
        for (k, c) in self.cheb.iter().enumerate() {
            if k % 2 == 0 {
                even = even.max(c.norm());
            } else {
                odd = odd.max(c.norm());
            }
        }
        if odd <= PARITY_TOL * max {
            Parity::Even
        } else if even <= PARITY_TOL * max {
            Parity::Odd
        } else {
            Parity::None
        }
    }

    pub fn is_real(&self) -> bool {
        let max = self.cheb.iter().map(|c| c.norm()).fold(0.0, f64::max);
        self.cheb.iter().all(|c| c.im.abs() <= 1e-12 * max.max(1.0))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut b1 = C0;
        let mut b2 = C0;
        for &c in self.cheb.iter().skip(1).rev() {
            let b0 = c + z * b1 * 2.0 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.cheb[0] + z * b1 - b2
    }

    /// Real part of `P(x)` for real `x`.
    pub fn eval_real(&self, x: f64) -> f64 {
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for c in self.cheb.iter().skip(1).rev() {
            let b0 = c.re + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.cheb[0].re + x * b1 - b2
    }

    pub fn scale(&self, a: Complex64) -> Self {
        DensePolynomial { cheb: self.cheb.iter().map(|&c| c * a).collect() }
    }

    pub fn add(&self, other: &DensePolynomial) -> Self {
        let n = self.cheb.len().max(other.cheb.len());
        let mut out = vec![C0; n];
        for (k, &c) in self.cheb.iter().enumerate() {
            out[k] += c;
        }
        for (k, &c) in other.cheb.iter().enumerate() {
            out[k] += c;
        }
        DensePolynomial { cheb: out }
    }

    pub fn mul(&self, other: &DensePolynomial) -> Self {
        let n = self.cheb.len() + other.cheb.len() - 1;
        let mut out = vec![C0; n];
        for (i, &a) in self.cheb.iter().enumerate() {
            if a == C0 {
                continue;
            }
            for (j, &b) in other.cheb.iter().enumerate() {
                let h = a * b * 0.5;
                out[i + j] += h;
                out[i.abs_diff(j)] += h;
            }
        }
        DensePolynomial { cheb: out }
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &DensePolynomial) -> Self {
        let two_q = inner.scale(Complex64::new(2.0, 0.0));
        let mut b1 = Self::zero();
        let mut b2 = Self::zero();
        for &c in self.cheb.iter().skip(1).rev() {
            let b0 = two_q.mul(&b1).add(&b2.scale(-C1)).add(&DensePolynomial { cheb: vec![c] });
            b2 = b1;
            b1 = b0;
        }
        DensePolynomial { cheb: vec![self.cheb[0]] }.add(&inner.mul(&b1)).add(&b2.scale(-C1))
    }

    /// Max of `|P(x)|` on `n` equispaced points of `[a, b]`.
    pub fn max_abs_on(&self, a: f64, b: f64, n: usize) -> f64 {
        grid(a, b, n).map(|x| self.eval(Complex64::new(x, 0.0)).norm()).fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, c) in self.coeffs().iter().enumerate() {
            s.push_str(&format!("{} {} {}\n", k, c.re, c.im));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_coeff_lines(text)?;
        let mut max = 0usize;
        for &(p, _, line) in &entries {
            if p < 0 {
                return Err(Error::Parse { line, msg: "negative power in a dense polynomial".into() });
            }
            max = max.max(p as usize);
        }
        let mut c = vec![C0; max + 1];
        for (p, v, _) in entries {
            c[p as usize] = v;
        }
        Ok(Self::from_coeffs(&c))
    }
}

fn parse_coeff_lines(text: &str) -> Result<Vec<(i64, Complex64, usize)>> {
    let mut out: Vec<(i64, Complex64, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse { line, msg: format!("expected `<power> <re> <im>`, got {:?}", body) });
        }
        let p: i64 = f[0].parse().map_err(|_| Error::Parse { line, msg: format!("bad power {:?}", f[0]) })?;
        let re: f64 = f[1].parse().map_err(|_| Error::Parse { line, msg: format!("bad real part {:?}", f[1]) })?;
        let im: f64 = f[2].parse().map_err(|_| Error::Parse { line, msg: format!("bad imaginary part {:?}", f[2]) })?;
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Parse { line, msg: "non-finite coefficient".into() });
        }
        if out.iter().any(|e| e.0 == p) {
            return Err(Error::Parse { line, msg: format!("power {} listed twice", p) });
        }
        out.push((p, Complex64::new(re, im), line));
    }
    Ok(out)
}

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

/// Chebyshev interpolant of `f` at `degree + 1` first-kind nodes.
pub fn chebyshev_fit(f: impl Fn(f64) -> f64, degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let vals: Vec<f64> = (0..n).map(|j| f((PI * (j as f64 + 0.5) / n as f64).cos())).collect();
    let mut c = vec![0.0; n];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, v) in vals.iter().enumerate() {
            acc += v * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
        }
        *ck = 2.0 * acc / n as f64;
    }
    c[0] *= 0.5;
    c
}

fn chebyshev_fit_parity(f: &impl Fn(f64) -> f64, degree: usize, parity: Parity) -> Vec<f64> {
    let mut c = chebyshev_fit(f, degree);
    for (k, ck) in c.iter_mut().enumerate() {
        let drop = match parity {
            Parity::Even => k % 2 == 1,
            Parity::Odd => k % 2 == 0,
            Parity::None => false,
        };
        if drop {
            *ck = 0.0;
        }
    }
    c
}

/// Smallest degree (of the given parity) whose interpolant passes `ok`, found
/// by doubling and bisection.
fn fit_min_degree(
    f: &impl Fn(f64) -> f64,
    parity: Parity,
    start: usize,
    ok: impl Fn(&DensePolynomial) -> bool,
) -> Result<DensePolynomial> {
    let fix = |d: usize| -> usize {
        match parity {
            Parity::Even if d % 2 == 1 => d + 1,
            Parity::Odd if d % 2 == 0 => d + 1,
            _ => d,
        }
    };
    let build = |d: usize| DensePolynomial::from_real_chebyshev(&chebyshev_fit_parity(f, d, parity));
    let mut lo = fix(start.max(1));
    let first = build(lo);
    if ok(&first) {
        return Ok(first);
    }
    let mut hi = fix(lo * 2);
    loop {
        if hi > FIT_MAX_DEGREE {
            return Err(Error::Cap(format!("interpolation degree above {}", FIT_MAX_DEGREE)));
        }
        if ok(&build(hi)) {
            break;
        }
        lo = hi;
        hi = fix(hi * 2);
    }
    while hi - lo > 2 {
        let mid = fix((lo + hi) / 2);
        if mid >= hi || mid <= lo {
            break;
        }
        if ok(&build(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(build(hi))
}

/// Smallest `k` with the Taylor tail of `(1 - z^2)^{m/2}` on `[-s, s]` below
/// `eps`, using the bound `2 (m s^2 / 2)^k / k!` (valid for `m s^2 <= 1`).
pub fn s1_taylor_order(m: usize, s: f64, eps: f64) -> usize {
    let r = m as f64 * s * s / 2.0;
    let mut term = 2.0;
    let mut k = 0;
    while term > eps && k < 10_000 {
        k += 1;
        term *= r / k as f64;
    }
    k
}

fn s1_target(m: usize) -> impl Fn(f64) -> f64 {
    move |z: f64| {
        let u = 1.0 - z * z;
        if u <= 0.0 {
            0.0
        } else {
            (0.5 * m as f64 * (-z * z).ln_1p()).exp()
        }
    }
}

/// Even polynomial close to `(1 - z^2)^{m/2}` on `[-s, s]` and bounded by one
/// on `[-1, 1]`.
pub fn poly_s1(m: usize, s: f64, eps: f64) -> Result<DensePolynomial> {
    if m == 0 {
        return domain("poly_s1 needs m >= 1");
    }
    if !(s > 0.0 && s <= 1.0 / (m as f64).sqrt() + 1e-15) {
        return domain(format!("poly_s1 needs s in (0, 1/sqrt(m)], got {}", s));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return domain("poly_s1 needs eps in (0, 1)");
    }
    let f = s1_target(m);
    let accept = |p: &DensePolynomial| -> bool {
        let sup = p.max_abs_on(-1.0, 1.0, 2001);
        let scale = if sup > 1.0 { 1.0 / sup } else { 1.0 };
        grid(-s, s, 1001).all(|z| (scale * p.eval_real(z) - f(z)).abs() <= eps)
    };
    let p = fit_min_degree(&f, Parity::Even, 2, accept)?;
    let sup = p.max_abs_on(-1.0, 1.0, 2001);
    Ok(if sup > 1.0 { p.scale(Complex64::new(1.0 / sup, 0.0)) } else { p })
}

/// Taylor coefficient `(2j)! / (4^j (j!)^2)` of `z / sqrt(1 - z^2)` at `z^{2j+1}`.
pub fn s2_coefficient(j: usize) -> f64 {
    let mut a = 1.0;
    for i in 1..=j {
        a *= (2 * i - 1) as f64 / (2 * i) as f64;
    }
    a
}

/// Odd truncation of `z / sqrt(1 - z^2)` accurate to `eps` on `[-s, s]`,
/// with the bound `M2 = 2 sqrt(k / pi)` of its values on `[-1, 1]`.
pub fn poly_s2(s: f64, eps: f64) -> Result<(DensePolynomial, f64)> {
    if !(s > 0.0 && s < 0.5) {
        return domain(format!("poly_s2 needs s in (0, 1/2), got {}", s));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return domain("poly_s2 needs eps in (0, 1)");
    }
    let f = |z: f64| z / (1.0 - z * z).sqrt();
    let mut k = ((1.0 / eps).ln() / (2.0 * (1.0 / s).ln())).ceil().max(1.0) as usize;
    loop {
        let mut c = vec![0.0; 2 * k];
        for j in 0..k {
            c[2 * j + 1] = s2_coefficient(j);
        }
        let p = DensePolynomial::from_real_coeffs(&c);
        if grid(-s, s, 1001).all(|z| (p.eval_real(z) - f(z)).abs() <= eps) {
            return Ok((p, 2.0 * (k as f64 / PI).sqrt()));
        }
        k += 1;
        if k > FIT_MAX_DEGREE {
            return Err(Error::Cap("S2 truncation order".into()));
        }
    }
}

/// Even polynomial near one on `[-t+delta, t-delta]`, near zero outside
/// `[-t-delta, t+delta]`, with values in `[0, 1]` on `[-1, 1]`.
pub fn poly_rectangle(t: f64, delta: f64, eps: f64) -> Result<DensePolynomial> {
    if !(delta > 0.0 && delta < 0.5) || !(eps > 0.0 && eps < 0.5) || !(-1.0..=1.0).contains(&t) {
        return domain("poly_rectangle needs delta, eps in (0, 1/2) and t in [-1, 1]");
    }
    let t = t.abs();
    let kappa = erfc_inv(eps / 2.0) / delta;
    let g = move |x: f64| 0.5 * (erf(kappa * (x + t)) - erf(kappa * (x - t)));
    let accept = |p: &DensePolynomial| grid(-1.0, 1.0, 2001).all(|x| (p.eval_real(x) - g(x)).abs() <= eps / 4.0);
    let start = ((1.0 / eps).ln() / delta / 4.0).max(2.0) as usize;
    let q = fit_min_degree(&g, Parity::Even, start, accept)?;
    let mut cheb: Vec<Complex64> = q.chebyshev().to_vec();
    cheb[0] += eps / 4.0;
    Ok(DensePolynomial::from_chebyshev(cheb).scale(Complex64::new(1.0 / (1.0 + eps / 2.0), 0.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub d: usize,
    pub eps: f64,
    pub m: usize,
    pub s: f64,
    pub c: f64,
    pub alpha: f64,
    pub m2: f64,
}

impl RescaleParams {
    pub fn new(d: usize, eps: f64, m: usize) -> Result<Self> {
        if m < 5 {
            return domain("rescaling needs m >= 5 so that s = 1/sqrt(m) < 1/2");
        }
        if !(eps > 0.0 && eps < 1.0) {
            return domain("rescaling needs eps in (0, 1)");
        }
        let s = 1.0 / (m as f64).sqrt();
        let c = (1.0 - 1.0 / m as f64).sqrt();
        let (_, bound) = poly_s2(s, s2_eps(d, eps))?;
        let dd = d.max(1) as f64;
        let m2 = (dd * dd / eps).ln().max(bound);
        Ok(RescaleParams { d, eps, m, s, c, alpha: c * m2 / s, m2 })
    }
}

fn s1_eps(eps: f64) -> f64 {
    eps / 4.0
}

fn s2_eps(d: usize, eps: f64) -> f64 {
    eps / (2.0 * (1.0 + (d * d) as f64))
}

/// Residual of the dilation identity
/// `(c^2 + s^2 x^2)^{m/2} Pt(s x / sqrt(c^2 + s^2 x^2)) = P(x / alpha)` on a grid.
pub fn rescale_residual(p: &DensePolynomial, pt: &DensePolynomial, params: &RescaleParams, n: usize) -> f64 {
    let (c, s, m) = (params.c, params.s, params.m as f64);
    grid(-1.0, 1.0, n)
        .map(|x| {
            let r2 = c * c + s * s * x * x;
            let lhs = (0.5 * m * r2.ln()).exp() * pt.eval_real(s * x / r2.sqrt());
            (lhs - p.eval_real(x / params.alpha)).abs()
        })
        .fold(0.0, f64::max)
}

/// `Pt(z) = S1(z) / c^m * P(S2(z) / M2)`, checked against the dilation
/// identity at accuracy `params.eps`.
pub fn compose_rescaled(p: &DensePolynomial, params: &RescaleParams) -> Result<DensePolynomial> {
    let parity = p.parity();
    if parity == Parity::None {
        return domain("compose_rescaled needs a polynomial of definite parity");
    }
    if !p.is_real() {
        return domain("compose_rescaled needs real coefficients");
    }
    if p.max_abs_on(-1.0, 1.0, 2001) > 0.5 + 1e-9 {
        return domain("compose_rescaled needs |P| <= 1/2 on [-1, 1]");
    }
    if Parity::of_degree(params.m) != parity {
        return domain(format!("m = {} does not match the parity of P", params.m));
    }
    let d = p.degree();
    let s1 = poly_s1(params.m, params.s, s1_eps(params.eps))?;
    let (s2, _) = poly_s2(params.s, s2_eps(params.d.max(d), params.eps))?;
    let total = s1.nominal_degree() + d * s2.nominal_degree();
    if total > params.m {
        return Err(Error::Infeasible(format!("composite degree {} exceeds m = {}", total, params.m)));
    }
    let inner = s2.scale(Complex64::new(1.0 / params.m2, 0.0));
    let trimmed = DensePolynomial::from_chebyshev(p.chebyshev()[..=d].to_vec());
    let outer = trimmed.compose(&inner);
    let cm = params.c.powi(params.m as i32);
    let mut pt = s1.mul(&outer).scale(Complex64::new(1.0 / cm, 0.0));
    // Pad to the nominal length m so downstream solvers see the intended degree.
    pt.cheb.resize(params.m + 1, C0);
    for (k, c) in pt.cheb.iter_mut().enumerate() {
        if Parity::of_degree(k) != parity {
            *c = C0;
        }
        c.im = 0.0;
    }
    if pt.max_abs_on(-1.0, 1.0, 2001) > 1.0 + 1e-9 {
        return Err(Error::Infeasible(format!("|Pt| exceeds 1 at m = {}", params.m)));
    }
    let r = rescale_residual(p, &pt, params, 1001);
    if r > params.eps {
        return Err(Error::Infeasible(format!("dilation residual {:.3e} above eps at m = {}", r, params.m)));
    }
    Ok(pt)
}

/// Try `m = max(5, deg P)` (matching parity) and double until the dilation
/// identity holds, up to `RESCALE_MAX_M`.
pub fn compose_rescaled_adaptive(p: &DensePolynomial, eps: f64) -> Result<(RescaleParams, DensePolynomial)> {
    let parity = p.parity();
    if parity == Parity::None {
        return domain("compose_rescaled needs a polynomial of definite parity");
    }
    let d = p.degree();
    let fix = |m: usize| -> usize {
        if Parity::of_degree(m) == parity {
            m
        } else {
            m + 1
        }
    };
    let mut m = fix(d.max(5));
    let mut last;
    loop {
        let params = RescaleParams::new(d, eps, m)?;
        match compose_rescaled(p, &params) {
            Ok(pt) => return Ok((params, pt)),
            Err(Error::Infeasible(msg)) => last = msg,
            Err(e) => return Err(e),
        }
        let cap = if Parity::of_degree(RESCALE_MAX_M) == parity { RESCALE_MAX_M } else { RESCALE_MAX_M - 1 };
        if m >= cap {
            return Err(Error::Infeasible(format!("no m <= {} works: {}", RESCALE_MAX_M, last)));
        }
        m = fix(2 * m).min(cap);
    }
}

pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// `R(x) = [[x, sqrt(1-x^2)], [sqrt(1-x^2), -x]]`.
pub fn reflection(x: f64) -> Mat2 {
    let y = (1.0 - x * x).max(0.0).sqrt();
    [[Complex64::new(x, 0.0), Complex64::new(y, 0.0)], [Complex64::new(y, 0.0), Complex64::new(-x, 0.0)]]
}

fn z_phase(phi: f64) -> Mat2 {
    [[Complex64::from_polar(1.0, phi), C0], [C0, Complex64::from_polar(1.0, -phi)]]
}

/// Phases in the reflection convention: the signal matrix is
/// `e^{i phi_1 Z} R(x) e^{i phi_2 Z} R(x) ... e^{i phi_m Z} R(x)`.
/// Reversing the phases gives the `R(x) e^{i phi_j Z}` ordering with the same
/// top-left entry, since both factors are symmetric matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QSPPhaseSequence {
    pub phases: Vec<f64>,
}

impl QSPPhaseSequence {
    pub fn m(&self) -> usize {
        self.phases.len()
    }

    pub fn matrix(&self, x: f64) -> Mat2 {
        let r = reflection(x);
        let mut out = [[C1, C0], [C0, C1]];
        for &phi in &self.phases {
            out = mat2_mul(&out, &mat2_mul(&z_phase(phi), &r));
        }
        out
    }

    pub fn top_left(&self, x: f64) -> Complex64 {
        self.matrix(x)[0][0]
    }

    pub fn negated(&self) -> Self {
        QSPPhaseSequence { phases: self.phases.iter().map(|p| -p).collect() }
    }
}

fn wx_top_left(psi: &[f64], x: f64) -> Complex64 {
    let y = (1.0 - x * x).max(0.0).sqrt();
    let w: Mat2 = [[Complex64::new(x, 0.0), Complex64::new(0.0, y)], [Complex64::new(0.0, y), Complex64::new(x, 0.0)]];
    let mut out = z_phase(psi[0]);
    for &p in &psi[1..] {
        out = mat2_mul(&out, &mat2_mul(&w, &z_phase(p)));
    }
    out[0][0]
}

fn symmetric_full(red: &[f64], m: usize) -> Vec<f64> {
    let mut full = vec![0.0; m + 1];
    for (j, &v) in red.iter().enumerate() {
        full[j] = v;
        full[m - j] = v;
    }
    full
}

/// Phases whose signal matrix has `Re(top-left) = P(x)` on `[-1, 1]`, using
/// `m = deg P` reflections.
pub fn solve_qsp_phases(p: &DensePolynomial, tol: f64) -> Result<QSPPhaseSequence> {
    solve_qsp_phases_m(p, p.degree(), tol)
}

/// As `solve_qsp_phases` with an explicit sequence length `m >= deg P` of
/// matching parity.
///
/// For real `P` of definite parity the real part of the top-left entry is
/// matched; the imaginary part is a free completion. Even `m` forces the
/// top-left entry to have modulus one at `x = 0`, so an exact complex match is
/// generally impossible there.
pub fn solve_qsp_phases_m(p: &DensePolynomial, m: usize, tol: f64) -> Result<QSPPhaseSequence> {
    if m == 0 || m > QSP_MAX_DEGREE {
        return domain(format!("QSP length must be in 1..={}, got {}", QSP_MAX_DEGREE, m));
    }
    if !p.is_real() {
        return domain("QSP target must have real coefficients");
    }
    let parity = p.parity();
    if parity == Parity::None {
        return domain("QSP target needs definite parity");
    }
    let is_zero = p.chebyshev().iter().all(|c| c.norm() == 0.0);
    if p.degree() > m || (parity != Parity::of_degree(m) && !is_zero) {
        return domain(format!("target of degree {} and parity {:?} does not fit length {}", p.degree(), parity, m));
    }
    if p.max_abs_on(-1.0, 1.0, 4001) > 1.0 + 1e-9 {
        return domain("QSP target exceeds 1 in modulus on [-1, 1]");
    }
    let dt = (m + 2) / 2;
    let nodes: Vec<f64> = (1..=dt).map(|k| ((2 * k - 1) as f64 * PI / (4 * dt) as f64).cos()).collect();
    let target: Vec<f64> = nodes.iter().map(|&x| p.eval_real(x)).collect();
    let resid = |red: &[f64]| -> DVector<f64> {
        let full = symmetric_full(red, m);
        DVector::from_iterator(dt, nodes.iter().zip(&target).map(|(&x, &t)| wx_top_left(&full, x).re - t))
    };
    let inner_tol = (tol * 1e-3).max(1e-14);
    let mut rng = master_rng(0x9e3779b97f4a7c15);
    let mut best = f64::INFINITY;
    for attempt in 0..12 {
        let mut red = vec![0.0; dt];
        red[0] = PI / 4.0;
        if attempt > 0 {
            for r in red.iter_mut() {
                *r += 0.3 * (rng.random::<f64>() - 0.5);
            }
        }
        let mut f = resid(&red);
        let mut fnorm = f.amax();
        for _ in 0..200 {
            if fnorm <= inner_tol {
                break;
            }
            let h = 1e-7;
            let mut jac = DMatrix::<f64>::zeros(dt, dt);
            for j in 0..dt {
                let mut a = red.clone();
                let mut b = red.clone();
                a[j] += h;
                b[j] -= h;
                let col = (resid(&a) - resid(&b)) / (2.0 * h);
                jac.set_column(j, &col);
            }
            let step = match jac.lu().solve(&f) {
                Some(s) => s,
                None => break,
            };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial: Vec<f64> = red.iter().zip(step.iter()).map(|(r, s)| r - t * s).collect();
                let ft = resid(&trial);
                if ft.amax() < fnorm {
                    red = trial;
                    f = ft;
                    fnorm = f.amax();
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.min(fnorm);
        if fnorm <= inner_tol.max(tol * 1e-2) {
            let psi = symmetric_full(&red, m);
            let mut phases = vec![0.0; m];
            phases[0] = psi[0] + psi[m] - PI / 2.0 + m as f64 * PI / 2.0;
            for j in 1..m {
                phases[j] = psi[j] - PI / 2.0;
            }
            let seq = QSPPhaseSequence { phases };
            let check = qsp_residual(&seq, p, (4 * m).max(8));
            if check <= tol {
                return Ok(seq);
            }
            best = best.min(check);
        }
    }
    Err(Error::NoConvergence { msg: format!("QSP phases for length {}", m), residual: best })
}

/// Max of `|Re(top-left) - P|` on an `n`-point Chebyshev grid.
pub fn qsp_residual(seq: &QSPPhaseSequence, p: &DensePolynomial, n: usize) -> f64 {
    (0..n)
        .map(|k| {
            let x = (PI * (k as f64 + 0.5) / n as f64).cos();
            (seq.top_left(x).re - p.eval_real(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// `P(z) = sum_{j=-d}^{d} a_j z^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPolynomial {
    d: usize,
    coeffs: Vec<Complex64>,
}

impl LaurentPolynomial {
    /// `coeffs[j + d] = a_j`.
    pub fn new(d: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * d + 1 {
            return Err(Error::Dimension(format!("expected {} coefficients, got {}", 2 * d + 1, coeffs.len())));
        }
        Ok(LaurentPolynomial { d, coeffs })
    }

    pub fn monomial(k: i64) -> Self {
        let d = k.unsigned_abs() as usize;
        let mut coeffs = vec![C0; 2 * d + 1];
        coeffs[(k + d as i64) as usize] = C1;
        LaurentPolynomial { d, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: i64) -> Complex64 {
        let idx = j + self.d as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            C0
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = C0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(-(self.d as i32))
    }

    /// `P(e^{ix})`.
    pub fn eval_angle(&self, x: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * Complex64::from_polar(1.0, (i as f64 - self.d as f64) * x))
            .sum()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        LaurentPolynomial { d: self.d, coeffs: self.coeffs.iter().map(|&c| c * a).collect() }
    }

    /// Sup of `|P|` on a `64 d`-point grid of the unit circle (at least 64).
    pub fn sup_norm(&self) -> f64 {
        let n = 64 * self.d.max(1);
        (0..n).map(|k| self.eval(Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).norm()).fold(0.0, f64::max)
    }

    pub fn is_admissible(&self) -> bool {
        self.sup_norm() <= 1.0 + 1e-9
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            s.push_str(&format!("{} {} {}\n", i as i64 - self.d as i64, c.re, c.im));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_coeff_lines(text)?;
        let d = entries.iter().map(|e| e.0.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![C0; 2 * d + 1];
        for (p, v, _) in entries {
            coeffs[(p + d as i64) as usize] = v;
        }
        Ok(LaurentPolynomial { d, coeffs })
    }
}

/// Angles for the interleaved sequence. With `R_j = R(theta_j, phi_j, 0)` for
/// `j >= 1`, `R_0 = R(theta_0, phi_0, lambda)` and
/// `R(t, p, l) = [[e^{i(l+p)} cos t, e^{ip} sin t], [e^{il} sin t, -cos t]]`,
/// the circuit applies `R_0`, then `d` rounds of (controlled-on-0 `U`, `R_j`),
/// then `d` rounds of (controlled-on-1 `U^dagger`, `R_j`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GQSPAngles {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub lambda: f64,
}

pub fn gqsp_rotation(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    [
        [Complex64::from_polar(c, lambda + phi), Complex64::from_polar(s, phi)],
        [Complex64::from_polar(s, lambda), Complex64::new(-c, 0.0)],
    ]
}

impl GQSPAngles {
    pub fn degree(&self) -> usize {
        (self.theta.len() - 1) / 2
    }

    pub fn rotation(&self, j: usize) -> Mat2 {
        gqsp_rotation(self.theta[j], self.phi[j], if j == 0 { self.lambda } else { 0.0 })
    }

    /// The full 2x2 sequence for a unitary with eigenvalue `z`.
    pub fn matrix(&self, z: Complex64) -> Mat2 {
        let d = self.degree();
        let mut out = self.rotation(0);
        for j in 1..=2 * d {
            let a: Mat2 = if j <= d { [[z, C0], [C0, C1]] } else { [[C1, C0], [C0, z.inv()]] };
            out = mat2_mul(&self.rotation(j), &mat2_mul(&a, &out));
        }
        out
    }

    pub fn top_left(&self, z: Complex64) -> Complex64 {
        self.matrix(z)[0][0]
    }

    fn pack(&self) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.extend_from_slice(&self.phi);
        v.push(self.lambda);
        v
    }

    fn unpack(v: &[f64]) -> Self {
        let n = (v.len() - 1) / 2;
        GQSPAngles { theta: v[..n].to_vec(), phi: v[n..2 * n].to_vec(), lambda: v[2 * n] }
    }
}

/// Max of `|top-left - P|` over `n` equispaced eigenphases.
pub fn gqsp_residual(angles: &GQSPAngles, p: &LaurentPolynomial, n: usize) -> f64 {
    (0..n)
        .map(|k| {
            let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            (angles.top_left(z) - p.eval(z)).norm()
        })
        .fold(0.0, f64::max)
}

fn poly_eval(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(C0, |acc, &a| acc * z + a)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![C0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Roots by Aberth-Ehrlich iteration. Multiple roots converge linearly and
/// come out accurate to about the square root of machine precision.
fn poly_roots(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    if n == 0 {
        return vec![];
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|&x| x / lead).collect();
    let radius = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let r0 = radius.min(2.0).max(0.5);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(r0, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    let deriv: Vec<Complex64> = (1..=n).map(|k| monic[k] * k as f64).collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let p = poly_eval(&monic, z[i]);
            if p == C0 {
                continue;
            }
            let ratio = p / poly_eval(&deriv, z[i]);
            let mut sum = C0;
            for j in 0..n {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff != C0 {
                        sum += diff.inv();
                    }
                }
            }
            let w = ratio / (C1 - ratio * sum);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / z[i].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Co-polynomial `Q` of degree `<= D` with `|P|^2 + |Q|^2 = 1` on the unit
/// circle, from the roots of `z^D (1 - P(z) conj(P(1/conj z)))`.
fn complementary(p: &[Complex64]) -> Vec<Complex64> {
    let dd = p.len() - 1;
    let rev: Vec<Complex64> = (0..=dd).map(|k| p[dd - k].conj()).collect();
    let mut g: Vec<Complex64> = poly_mul(p, &rev).iter().map(|&x| -x).collect();
    g[dd] += C1;
    let gmax = g.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if gmax <= 1e-13 {
        return vec![C0; dd + 1];
    }
    let thr = 1e-14 * gmax;
    let lo = g.iter().position(|x| x.norm() > thr).unwrap();
    let hi = g.iter().rposition(|x| x.norm() > thr).unwrap();
    let zeros_at_origin = lo.min(dd);
    let mut roots = poly_roots(&g[lo..=hi]);
    roots.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    let take = dd - zeros_at_origin;
    let mut q = vec![C1];
    for _ in 0..zeros_at_origin {
        q = poly_mul(&q, &[C0, C1]);
    }
    for r in roots.iter().take(take) {
        q = poly_mul(&q, &[-*r, C1]);
    }
    q.resize(dd + 1, C0);
    let n = 8 * (dd + 1);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..n {
        let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        num += (1.0 - poly_eval(p, z).norm_sqr()).max(0.0);
        den += poly_eval(&q, z).norm_sqr();
    }
    let kappa = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    q.iter().map(|&x| x * kappa).collect()
}

/// Angles realizing `P(U)` as the top-left block of the interleaved sequence.
pub fn solve_gqsp_angles(p: &LaurentPolynomial, tol: f64) -> Result<GQSPAngles> {
    let d = p.degree();
    if d > GQSP_MAX_DEGREE {
        return domain(format!("GQSP degree {} above {}", d, GQSP_MAX_DEGREE));
    }
    if !p.is_admissible() {
        return domain("GQSP target exceeds 1 in modulus on the unit circle");
    }
    let dd = 2 * d;
    let mut pp: Vec<Complex64> = p.coeffs().to_vec();
    let mut qq = complementary(&pp);
    let mut theta = vec![0.0; dd + 1];
    let mut phi = vec![0.0; dd + 1];
    for k in (1..=dd).rev() {
        let (pk, qk) = (pp[k], qq[k]);
        let (t, f) = if pk.norm() + qk.norm() > 1e-12 {
            (qk.norm().atan2(pk.norm()), pk.arg() - qk.arg())
        } else {
            (pp[0].norm().atan2(qq[0].norm()), pp[0].arg() - qq[0].arg() - PI)
        };
        theta[k] = t;
        phi[k] = f;
        let (s, c) = t.sin_cos();
        let e = Complex64::from_polar(1.0, -f);
        let top: Vec<Complex64> = (0..=k).map(|i| e * c * pp[i] + qq[i] * s).collect();
        let bot: Vec<Complex64> = (0..=k).map(|i| e * s * pp[i] - qq[i] * c).collect();
        pp = top[1..].to_vec();
        qq = bot[..k].to_vec();
    }
    let (p0, q0) = (pp[0], qq[0]);
    theta[0] = q0.norm().atan2(p0.norm());
    let lambda = if q0.norm() > 1e-14 { q0.arg() } else { 0.0 };
    phi[0] = p0.arg() - lambda;
    let mut angles = GQSPAngles { theta, phi, lambda };
    let n = (8 * dd + 8).max(64);
    let mut res = gqsp_residual(&angles, p, n);
    if res > tol * 0.1 {
        angles = polish_gqsp(angles, p, n, tol * 0.01);
        res = gqsp_residual(&angles, p, n);
    }
    if res > tol {
        return Err(Error::NoConvergence { msg: format!("GQSP angles for degree {}", d), residual: res });
    }
    Ok(angles)
}

/// Levenberg-Marquardt on the grid residual.
fn polish_gqsp(start: GQSPAngles, p: &LaurentPolynomial, n: usize, target: f64) -> GQSPAngles {
    let zs: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect();
    let want: Vec<Complex64> = zs.iter().map(|&z| p.eval(z)).collect();
    let resid = |v: &[f64]| -> DVector<f64> {
        let a = GQSPAngles::unpack(v);
        let mut r = DVector::zeros(2 * n);
        for (k, &z) in zs.iter().enumerate() {
            let e = a.top_left(z) - want[k];
            r[2 * k] = e.re;
            r[2 * k + 1] = e.im;
        }
        r
    };
    let mut x = start.pack();
    let mut r = resid(&x);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..200 {
        if r.amax() <= target {
            break;
        }
        let h = 1e-7;
        let mut jac = DMatrix::<f64>::zeros(2 * n, x.len());
        for j in 0..x.len() {
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += h;
            b[j] -= h;
            jac.set_column(j, &((resid(&a) - resid(&b)) / (2.0 * h)));
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut accepted = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += mu * (1.0 + jtj[(i, i)]);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&g),
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - b).collect();
            let rt = resid(&trial);
            let ct = rt.norm_squared();
            if ct < cost {
                x = trial;
                r = rt;
                cost = ct;
                mu = (mu * 0.3).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    GQSPAngles::unpack(&x)
}

fn filter_coeffs(d: usize, sigma: f64, mu: f64) -> Vec<Complex64> {
    let (a, b) = (-PI, mu);
    (0..=2 * d)
        .map(|i| {
            let k = i as f64 - d as f64;
            let base = if i == d {
                Complex64::new((b - a) / (2.0 * PI), 0.0)
            } else {
                (Complex64::from_polar(1.0, -k * a) - Complex64::from_polar(1.0, -k * b)) / Complex64::new(0.0, 2.0 * PI * k)
            };
            base * (-0.5 * sigma * sigma * k * k).exp()
        })
        .collect()
}

fn band_error(p: &LaurentPolynomial, mu: f64, delta: f64) -> f64 {
    let (pass, stop) = (mu - delta / 2.0, mu + delta / 2.0);
    grid(-1.0, 1.0, 1000)
        .map(|x| {
            let v = p.eval(Complex64::from_polar(1.0, x));
            if x <= pass {
                (v - C1).norm()
            } else if x >= stop {
                v.norm()
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Degree-`d` Fourier truncation of the indicator of `[-pi, mu]` smoothed by a
/// Gaussian of width `sigma`, rescaled to sup-norm at most `1 - 1e-6`.
/// Keeping `|P|` off one keeps the co-polynomial roots off the unit circle.
pub fn smoothed_step(d: usize, sigma: f64, mu: f64) -> LaurentPolynomial {
    let cap = 1.0 - 1e-6;
    let p = LaurentPolynomial { d, coeffs: filter_coeffs(d, sigma, mu) };
    let sup = p.sup_norm();
    if sup > cap {
        p.scale(Complex64::new(cap / sup, 0.0))
    } else {
        p
    }
}

/// Laurent polynomial close to one on `[-1, mu - delta/2]` and close to zero
/// on `[mu + delta/2, 1]` (as a function of the eigenphase), bounded by one
/// on the unit circle: a Gaussian-smoothed step with the smoothing width
/// tuned per degree, and the smallest passing degree returned.
pub fn groundstate_filter(mu_prime: f64, delta_prime: f64, eps: f64) -> Result<LaurentPolynomial> {
    if !(delta_prime > 0.0 && delta_prime < 1.0) || !(mu_prime > -1.0 && mu_prime < 1.0) || !(eps > 0.0 && eps < 0.5) {
        return domain("groundstate_filter needs 0 < delta' < 1, -1 < mu' < 1, 0 < eps < 1/2");
    }
    if mu_prime - delta_prime / 2.0 <= -1.0 || mu_prime + delta_prime / 2.0 >= 1.0 {
        return Err(Error::Infeasible("pass or stop band is empty".into()));
    }
    let err_at = |d: usize, ls: f64| band_error(&smoothed_step(d, ls.exp(), mu_prime), mu_prime, delta_prime);
    let try_degree = |d: usize| -> Option<f64> {
        // Coarse scan of log sigma, then golden-section refinement.
        let (lo, hi) = ((1e-3f64).ln(), (2.0f64).ln());
        let pts = 60;
        let best = (0..=pts)
            .into_par_iter()
            .map(|i| {
                let ls = lo + (hi - lo) * i as f64 / pts as f64;
                (err_at(d, ls), ls)
            })
            .reduce(|| (f64::INFINITY, lo), |a, b| if b.0 < a.0 { b } else { a });
        let step = (hi - lo) / pts as f64;
        let (mut a, mut b) = (best.1 - step, best.1 + step);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut e = a + g * (b - a);
        let (mut fc, mut fe) = (err_at(d, c), err_at(d, e));
        for _ in 0..30 {
            if fc < fe {
                b = e;
                e = c;
                fe = fc;
                c = b - g * (b - a);
                fc = err_at(d, c);
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + g * (b - a);
                fe = err_at(d, e);
            }
        }
        let cand = if fc < fe { (fc, c) } else { (fe, e) };
        let (emin, ls) = if best.0 < cand.0 { best } else { cand };
        (emin <= eps).then_some(ls)
    };
    // Doubling then bisection on the degree.
    let mut lo = 0usize;
    let mut hi = 4usize;
    let mut found = None;
    while hi <= FILTER_MAX_DEGREE {
        if let Some(ls) = try_degree(hi) {
            found = Some((hi, ls));
            break;
        }
        lo = hi;
        hi = if hi == FILTER_MAX_DEGREE { break } else { (2 * hi).min(FILTER_MAX_DEGREE) };
    }
    if let Some((mut dh, mut lsh)) = found {
        while dh - lo > 1 {
            let mid = (lo + dh) / 2;
            match try_degree(mid) {
                Some(ls) => {
                    dh = mid;
                    lsh = ls;
                }
                None => lo = mid,
            }
        }
        return Ok(smoothed_step(dh, lsh.exp(), mu_prime));
    }
    Err(Error::Infeasible(format!("no filter of degree <= {} meets the band conditions", FILTER_MAX_DEGREE)))
}
