use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rqsvt::applications::{
    commutator_prefactor, commutator_prefactor_with, depth_model_eval, groundstate_estimate, hybrid_depth_params,
    prefactor_lower_bound, prefactor_upper_envelope, spectral_gap, DepthMethod, GroundStateProblem, PrefactorMode,
};
use rqsvt::densesim::{eigen, expectation_state, Observable, StateVector};
use rqsvt::interleave::{
    algorithm3_estimate, gqsp_run, Algorithm3Config, Algorithm3Mode, Algorithm3Result, InterleavedCircuit, Layer,
    NormalizationMode, NormalizedConfig,
};
use rqsvt::pauli::{
    build_tfim_hybrid, build_tfim_long_range_with, parse_hamiltonian, Boundary, HermitianDecomposition, PauliString,
};
use rqsvt::polyapprox::{DensePolynomial, LaurentPolynomial};
use rqsvt::rand_qsvt::{algorithm2_with_plan, hoeffding_shots, Algorithm2Plan, EstimatorOptions};
use rqsvt::richardson::{extrapolate, make_plan};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::error::{config, CliError};
use crate::report::*;

type Result<T> = std::result::Result<T, CliError>;

pub enum Output {
    Report(Box<Report>),
    Csv(String),
}

impl Output {
    pub fn render(&self) -> String {
        match self {
            Output::Report(r) => r.to_json(),
            Output::Csv(s) => s.clone(),
        }
    }
}

pub fn run(cmd: &Command) -> Result<Output> {
    let start = Instant::now();
    let mut out = match cmd {
        Command::Estimate(a) => Output::Report(Box::new(cmd_estimate(cmd, a)?)),
        Command::Groundstate(a) => Output::Report(Box::new(cmd_groundstate(cmd, a)?)),
        Command::Gap(a) => cmd_gap(cmd, a)?,
        Command::Prefactor(a) => cmd_prefactor(cmd, a)?,
        Command::Depthbench(a) => Output::Csv(cmd_depthbench(a)?),
        Command::ExtrapolateDemo(a) => Output::Report(Box::new(cmd_extrapolate_demo(cmd, a)?)),
    };
    if let Output::Report(r) = &mut out {
        r.timing.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn boundary(b: BoundaryArg) -> Boundary {
    match b {
        BoundaryArg::Open => Boundary::Open,
        BoundaryArg::Periodic => Boundary::Periodic,
    }
}

pub fn load_model(m: &ModelArgs) -> Result<HermitianDecomposition> {
    match (&m.hamiltonian, m.model) {
        (Some(path), _) => Ok(parse_hamiltonian(&read(path)?)?),
        (None, Some(kind)) => {
            let Some(n) = m.n else {
                return config("--model needs --n");
            };
            Ok(match kind {
                ModelKind::TfimLong => build_tfim_long_range_with(n, m.h, m.j, m.alpha, boundary(m.boundary))?,
                ModelKind::TfimHybrid => build_tfim_hybrid(n, m.h, m.j, m.g, m.alpha)?,
            })
        }
        (None, None) => config("give either --hamiltonian <path> or --model"),
    }
}

pub fn parse_state(spec: &str, n: usize) -> Result<StateVector> {
    match spec {
        "zero" => Ok(StateVector::zero(n)),
        "plus" => Ok(StateVector::plus(n)),
        bits if bits.len() == n && bits.chars().all(|c| c == '0' || c == '1') => {
            Ok(StateVector::basis(n, usize::from_str_radix(bits, 2).expect("checked digits")))
        }
        other => config(format!("state '{other}' is not zero, plus, or a {n}-bit string")),
    }
}

pub fn parse_observable(word: Option<&str>, n: usize) -> Result<Observable> {
    let p = match word {
        Some(w) => {
            if w.chars().count() != n {
                return config(format!("observable '{w}' does not act on {n} qubits"));
            }
            PauliString::from_word(w).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => PauliString::from_sites(n, &[(0, 'Z')])?,
    };
    Ok(Observable::from_pauli(&p))
}

fn need_seed(seed: Option<u64>, stochastic: bool, what: &str) -> Result<u64> {
    match (seed, stochastic) {
        (Some(s), _) => Ok(s),
        (None, false) => Ok(0),
        (None, true) => config(format!("--seed is required for {what}")),
    }
}

/// `e^{-iHt}` split into `segments` equal slices with identity layers.
pub fn evolution_circuit(h: &HermitianDecomposition, time: f64, segments: usize) -> Result<InterleavedCircuit> {
    if segments == 0 || !(time > 0.0 && time.is_finite()) {
        return config("need --segments >= 1 and --time > 0");
    }
    let slice = h.scaled(-time / segments as f64);
    Ok(InterleavedCircuit::new(h.n(), vec![Layer::Identity; segments + 1], vec![slice; segments])?)
}

fn fill_from_run(r: &mut Report, run: &Algorithm3Result) {
    let plan = &run.plan;
    let var: f64 = plan.b.iter().zip(&run.nodes).map(|(b, nd)| (b * nd.stderr).powi(2)).sum();
    let shots: u64 = run.nodes.iter().map(|nd| nd.shots).sum();
    // exact-channel runs draw no shots
    let sampled = shots > 0;
    r.estimate = Some(EstimateBlock {
        value: run.value,
        stderr: sampled.then(|| var.sqrt()),
        shots: sampled.then_some(shots),
    });
    r.plan = Some(PlanBlock {
        m: plan.m,
        s: plan.s,
        nodes: run
            .nodes
            .iter()
            .zip(&plan.b)
            .map(|(nd, &b)| PlanNode {
                j: nd.j,
                r_j: nd.r,
                s_j: nd.s,
                b_j: b,
                value: Some(nd.value),
                stderr: sampled.then_some(nd.stderr),
                gates: Some(nd.gates_used),
            })
            .collect(),
    });
    let per_node: Vec<u64> = run.nodes.iter().map(|nd| nd.gates_used - 1).collect();
    r.depth = Some(DepthBlock { max: run.max_depth, per_node });
}

pub fn cmd_estimate(cmd: &Command, a: &EstimateArgs) -> Result<Report> {
    let seed = need_seed(a.seed, a.mode.stochastic(), "sampled estimation")?;
    let h = load_model(&a.model)?;
    let n = h.n();
    let psi = parse_state(&a.state, n)?;
    let o = parse_observable(a.observable.as_deref(), n)?;
    let mut r = Report::new(cmd.clone());
    let a3 = |mode| Algorithm3Config { mode, delta_total: a.delta, max_total_shots: a.max_shots, ..Default::default() };
    match a.mode {
        EstimateMode::Alg2 => {
            let Some(path) = &a.poly else {
                return config("mode alg2 needs --poly <path>");
            };
            let p = DensePolynomial::parse(&read(path)?)?;
            let plan = Algorithm2Plan::new(&p, a.eps)?;
            let shots = hoeffding_shots(a.eps, a.delta)?;
            if shots > a.max_shots {
                return Err(CliError::Domain(rqsvt::Error::Infeasible(format!(
                    "requires {shots} shots, budget {}",
                    a.max_shots
                ))));
            }
            let est = algorithm2_with_plan(&h, &plan, &psi, &o, a.eps, a.delta, seed, &EstimatorOptions::default())?;
            r.estimate = Some(EstimateBlock { value: est.mean, stderr: Some(est.stderr), shots: Some(est.shots) });
            r.depth = Some(DepthBlock { max: plan.gates_per_circuit(), per_node: Vec::new() });
        }
        EstimateMode::Alg3 | EstimateMode::Alg3Exact => {
            let w = evolution_circuit(&h, a.time, a.segments)?;
            let mode = if a.mode == EstimateMode::Alg3 { Algorithm3Mode::Sampled } else { Algorithm3Mode::ExactChannel };
            let run = algorithm3_estimate(&w, &psi, &o, a.eps, seed, &a3(mode))?;
            fill_from_run(&mut r, &run);
        }
        EstimateMode::Gqsp | EstimateMode::GqspExact => {
            let Some(path) = &a.laurent else {
                return config("gqsp modes need --laurent <path>");
            };
            let p = LaurentPolynomial::parse(&read(path)?)?;
            let mode = if a.mode == EstimateMode::Gqsp { Algorithm3Mode::Sampled } else { Algorithm3Mode::ExactChannel };
            let (value, run) = gqsp_run(&h, &p, &psi, &o, a.eps, seed, &a3(mode))?;
            match run {
                Some(run) => fill_from_run(&mut r, &run),
                None => r.estimate = Some(EstimateBlock { value, stderr: None, shots: None }),
            }
        }
    }
    Ok(r)
}

pub fn cmd_groundstate(cmd: &Command, a: &GroundstateArgs) -> Result<Report> {
    let seed = need_seed(a.seed, !a.exact, "sampled ground-state estimation")?;
    if !(a.overlap > 0.0 && a.overlap <= 1.0) {
        return config("--overlap must lie in (0, 1]");
    }
    let h = load_model(&a.model)?;
    let n = h.n();
    let o = parse_observable(a.observable.as_deref(), n)?;
    let gap = spectral_gap(&h)?;
    let (_, vecs) = eigen(&h.dense_matrix())?;
    let v0 = StateVector { n, amps: vecs.column(0).into_owned() };
    let amps = vecs.column(0) * Complex64::new(a.overlap.sqrt(), 0.0)
        + vecs.column(1) * Complex64::new(0.0, (1.0 - a.overlap).sqrt());
    let guess = StateVector { n, amps };
    let gamma = a.gamma.unwrap_or(a.overlap.sqrt());
    let mu = a.mu.unwrap_or((gap.xi0 + gap.xi1) / 2.0);
    let delta = a.delta.unwrap_or(gap.gap);
    let problem = GroundStateProblem::new(h, mu, delta, gamma, guess, a.eps)?;
    let cfg = NormalizedConfig {
        mode: match a.mode {
            NormMode::Amplified => NormalizationMode::Amplified,
            NormMode::Ratio => NormalizationMode::Ratio,
        },
        inner: if a.exact { Algorithm3Config::exact() } else { Algorithm3Config::default() },
        max_gates: a.max_gates,
    };
    let est = groundstate_estimate(&problem, &o, &cfg, seed)?;
    let mut r = Report::new(cmd.clone());
    r.estimate = Some(EstimateBlock { value: est.value, stderr: None, shots: None });
    r.depth = Some(DepthBlock { max: est.inner.max_depth, per_node: Vec::new() });
    r.groundstate = Some(GroundStateBlock {
        lambda: est.lambda,
        mu,
        delta,
        gamma,
        filter_degree: est.filter_degree,
        eta: est.eta,
        mode: match est.inner.mode {
            NormalizationMode::Amplified => "amplified".into(),
            NormalizationMode::Ratio => "ratio".into(),
        },
        numerator: est.inner.numerator,
        denominator: est.inner.denominator,
        queries: est.inner.queries,
        reference: expectation_state(&v0, &o)?,
    });
    r.warnings = est.inner.warnings.clone();
    Ok(r)
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Config(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn cmd_gap(cmd: &Command, a: &GapArgs) -> Result<Output> {
    let n_min = a.n_min.unwrap_or(match a.model {
        ModelKind::TfimLong => 2,
        ModelKind::TfimHybrid => 3,
    });
    if a.n_max < n_min {
        return config(format!("--n-max {} is below the first size {n_min}", a.n_max));
    }
    let mut rows = Vec::new();
    for n in n_min..=a.n_max {
        let h = match a.model {
            ModelKind::TfimLong => build_tfim_long_range_with(n, a.h, a.j, a.alpha, boundary(a.boundary))?,
            ModelKind::TfimHybrid => build_tfim_hybrid(n, a.h, a.j, a.g, a.alpha)?,
        };
        let g = spectral_gap(&h)?;
        rows.push(GapRow { n, xi0: g.xi0, xi1: g.xi1, gap: g.gap });
    }
    Ok(match a.format {
        Format::Csv => Output::Csv(to_csv(&rows)?),
        Format::Json => {
            let mut r = Report::new(cmd.clone());
            r.gap = Some(rows);
            Output::Report(Box::new(r))
        }
    })
}

pub fn cmd_prefactor(cmd: &Command, a: &PrefactorArgs) -> Result<Output> {
    if a.n_max < a.n_min {
        return config("--n-max is below --n-min");
    }
    let mut rows = Vec::new();
    for n in a.n_min..=a.n_max {
        let res = match a.search {
            PrefactorSearch::Auto => commutator_prefactor(n, a.h, a.j, a.g, a.alpha, a.k)?,
            PrefactorSearch::Exhaustive => commutator_prefactor_with(n, a.h, a.j, a.g, a.alpha, a.k, PrefactorMode::Exhaustive)?,
            PrefactorSearch::Pruned => commutator_prefactor_with(n, a.h, a.j, a.g, a.alpha, a.k, PrefactorMode::Pruned)?,
        };
        rows.push(PrefactorRow {
            n,
            k: res.k,
            alpha_comm: res.alpha_comm,
            lambda_comm_prime: res.lambda_comm_prime,
            tuples: res.tuples,
            mode: match res.mode {
                PrefactorMode::Exhaustive => "exhaustive".into(),
                PrefactorMode::Pruned => "pruned".into(),
            },
            lower_bound: prefactor_lower_bound(n, a.h, a.j, a.k),
            upper_envelope: prefactor_upper_envelope(n, a.h, a.j, a.g, a.alpha, a.k),
        });
    }
    Ok(match a.format {
        Format::Csv => Output::Csv(to_csv(&rows)?),
        Format::Json => {
            let mut r = Report::new(cmd.clone());
            r.prefactor = Some(rows);
            Output::Report(Box::new(r))
        }
    })
}

#[derive(Serialize, Deserialize)]
struct DepthCsvRow {
    method: String,
    n: usize,
    depth: f64,
}

/// Size at which the per-site commutator prefactor is measured by default.
pub const PREFACTOR_REFERENCE_N: usize = 16;

pub fn cmd_depthbench(a: &DepthbenchArgs) -> Result<String> {
    let methods: Vec<DepthMethod> = if a.method.is_empty() {
        DepthMethod::ALL.to_vec()
    } else {
        a.method
            .iter()
            .map(|m| DepthMethod::from_str(m.trim()).map_err(|e| CliError::Config(e.to_string())))
            .collect::<Result<_>>()?
    };
    let ns: Vec<usize> = (0..usize::BITS).map(|e| 1usize << e).filter(|&n| n >= a.n_min && n <= a.n_max).collect();
    if ns.is_empty() {
        return config(format!("no power of two in [{}, {}]", a.n_min, a.n_max));
    }
    let per_site = match a.alpha_per_site {
        Some(v) => v,
        None => {
            let n = PREFACTOR_REFERENCE_N;
            commutator_prefactor(n, a.h, a.j, a.g, a.alpha, a.k as usize)?.alpha_comm / n as f64
        }
    };
    let sweep: Vec<_> = ns
        .iter()
        .map(|&n| (n as f64, hybrid_depth_params(n, a.h, a.j, a.g, a.alpha, a.gamma, a.eps, a.k, per_site)))
        .collect();
    let mut rows = Vec::new();
    for m in methods {
        for (row, &n) in depth_model_eval(m, &sweep)?.into_iter().zip(&ns) {
            rows.push(DepthCsvRow { method: row.method, n, depth: row.depth });
        }
    }
    to_csv(&rows)
}

#[derive(Deserialize)]
struct TableRow {
    s: f64,
    value: f64,
}

pub fn cmd_extrapolate_demo(cmd: &Command, a: &ExtrapolateArgs) -> Result<Report> {
    let plan = make_plan(a.m, a.t, a.s)?;
    let values: Option<Vec<f64>> = if let Some(path) = &a.table {
        let text = read(path)?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<TableRow> = rdr
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if rows.len() != plan.m {
            return config(format!("table has {} rows, plan has {} nodes", rows.len(), plan.m));
        }
        for (row, &s) in rows.iter().zip(&plan.s_nodes) {
            if (row.s - s).abs() > 1e-9 * s {
                return config(format!("table node s = {} does not match plan node {s}", row.s));
            }
        }
        Some(rows.into_iter().map(|r| r.value).collect())
    } else if !a.coeffs.is_empty() {
        Some(plan.s_nodes.iter().map(|&s| a.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)).collect())
    } else {
        None
    };
    let mut r = Report::new(cmd.clone());
    r.plan = Some(PlanBlock {
        m: plan.m,
        s: plan.s,
        nodes: (0..plan.m)
            .map(|j| PlanNode {
                j: j + 1,
                r_j: plan.r[j],
                s_j: plan.s_nodes[j],
                b_j: plan.b[j],
                value: values.as_ref().map(|v| v[j]),
                stderr: None,
                gates: None,
            })
            .collect(),
    });
    if let Some(v) = values {
        r.estimate = Some(EstimateBlock { value: extrapolate(&plan, &v)?, stderr: None, shots: None });
    }
    Ok(r)
}
