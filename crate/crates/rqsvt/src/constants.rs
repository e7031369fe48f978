//! Pinned numerical constants.

/// Largest QSP sequence length accepted by the phase solver.
pub const QSP_MAX_DEGREE: usize = 64;
/// Largest Laurent degree accepted by the GQSP angle solver.
pub const GQSP_MAX_DEGREE: usize = 128;
/// Cap for the adaptive search over the dilation length m.
pub const RESCALE_MAX_M: usize = 64;
/// Largest degree tried by the ground-state filter search.
pub const FILTER_MAX_DEGREE: usize = 256;
/// Filter degree bound: `deg <= FILTER_DEGREE_CONSTANT * ln(1/eps) / delta'`.
pub const FILTER_DEGREE_CONSTANT: f64 = 4.0;

/// Calibrated `C` in `||b||_1 <= C ln m`: the maximum of `||b||_1 / ln m`
/// over `m = 2..=64` and `t/s` from `1e-6` to `1e6` is 2.06099 (at `m = 2`).
pub const RICHARDSON_C: f64 = 2.061;
/// Bound on `r_j j^2 / max(m^3, m^2 t/s)` over the test grid.
pub const RICHARDSON_NODE_CONSTANT: f64 = 16.0;

/// Gates per block-encoding query in the standard QSVT depth model, per Hamiltonian term.
pub const STANDARD_QSVT_QUERY_COST: f64 = 1.0;
/// Prefactor of the randomized-LCU depth model `(2d)^2 ln(1/eps)`.
pub const RANDOMIZED_LCU_CONSTANT: f64 = 1.0;
/// Prefactor of the direct-randomization depth model `(2d)^2 ln(2/eps)`.
pub const THIS_WORK_DIRECT_CONSTANT: f64 = 1.0;
