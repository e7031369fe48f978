//! Richardson extrapolation on the node family `s_j = t / r_j` with
//! `r_j = ceil(K / sin^2(pi (2j - 1) / 8m))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::RICHARDSON_C;
use crate::error::{domain, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationPlan {
    pub m: usize,
    pub t: f64,
    pub s: f64,
    pub k: f64,
    pub r: Vec<u64>,
    pub s_nodes: Vec<f64>,
    pub b: Vec<f64>,
    pub b_norm: f64,
}

/// `K = max(m / pi, 2 t / s)`.
pub fn node_scale(m: usize, t: f64, s: f64) -> f64 {
    (m as f64 / PI).max(2.0 * t / s)
}

/// `ceil(K / sin^2(pi (2j - 1) / 8m))` for `j >= 1`, as a float.
pub fn node_r(k: f64, j: usize, m: usize) -> f64 {
    let sn = (PI * (2 * j - 1) as f64 / (8 * m) as f64).sin();
    (k / (sn * sn)).ceil()
}

pub fn make_plan(m: usize, t: f64, s: f64) -> Result<ExtrapolationPlan> {
    if m < 1 {
        return domain("plan needs m >= 1");
    }
    if !(t > 0.0 && t.is_finite()) || !(s > 0.0 && s < 1.0) {
        return domain(format!("plan needs t > 0 and s in (0, 1), got t = {}, s = {}", t, s));
    }
    let k = node_scale(m, t, s);
    let mut r = Vec::with_capacity(m);
    for j in 1..=m {
        let v = node_r(k, j, m);
        if v > 9.0e15 {
            return Err(Error::Cap(format!("node r_{} = {:e} is not exactly representable", j, v)));
        }
        r.push(v as u64);
    }
    for w in r.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Infeasible(format!("nodes not strictly decreasing: {:?}", r)));
        }
    }
    let b: Vec<f64> = (0..m)
        .map(|j| {
            let mut log = 0.0;
            let mut neg = false;
            for l in 0..m {
                if l != j {
                    let f = 1.0 - r[l] as f64 / r[j] as f64;
                    neg ^= f < 0.0;
                    log -= f.abs().ln();
                }
            }
            if neg {
                -log.exp()
            } else {
                log.exp()
            }
        })
        .collect();
    let b_norm = b.iter().map(|x| x.abs()).sum();
    let s_nodes = r.iter().map(|&rj| t / rj as f64).collect();
    Ok(ExtrapolationPlan { m, t, s, k, r, s_nodes, b, b_norm })
}

pub fn extrapolate(plan: &ExtrapolationPlan, values: &[f64]) -> Result<f64> {
    if values.len() != plan.m {
        return Err(Error::Dimension(format!("expected {} values, got {}", plan.m, values.len())));
    }
    Ok(plan.b.iter().zip(values).map(|(b, v)| b * v).sum())
}

/// `m = ceil(ln(1/eps))` and `s = (8 lambda M)^{-2} (4 B / eps)^{-1/m}` with
/// `B = max(C ln m, 1)`; the floor at one keeps `s` finite when `m = 1`.
pub fn choose_algorithm3_params(lambda: f64, big_m: usize, eps: f64) -> Result<(usize, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain("eps must lie in (0, 1)");
    }
    let lm = lambda * big_m as f64;
    if !(8.0 * lm >= 1.0) || !lm.is_finite() {
        return domain(format!("need 8 lambda M >= 1, got {}", 8.0 * lm));
    }
    let m = ((1.0 / eps).ln().ceil() as usize).max(1);
    let b = (RICHARDSON_C * (m as f64).ln()).max(1.0);
    let s = (8.0 * lm).powi(-2) * (4.0 * b / eps).powf(-1.0 / m as f64);
    assert!(s < 1.0 / (2.0 * lm), "step bound violated");
    Ok((m, s))
}
