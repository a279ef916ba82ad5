//! Command-line front end.
//!
//! Every subcommand returns a report string; `main` prints it and maps
//! [`CliError`] to the process exit code.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::constants::{self, CurvePoint, DEFAULT_CURVE_POINTS};
use crate::exact::{
    build_hamiltonian, evaluate_product_state, lambda_max, lambda_min_tfim, optimize_product_state,
    BlochAssignment, BlochVector, ExactError, DEFAULT_QUBIT_CAP,
};
use crate::instance::{
    is_frustrated, parse_instance, random_instance, shift_constants, Instance, InstanceError, RandomInstanceParams,
};
use crate::relax::{solve_edge_relaxation, solve_soc_sdp, RelaxError, SdpSolution, DEFAULT_TOLERANCE};
use crate::rounding::{best_of, run_trials, Algorithm, RoundingError, RoundingOutcome, DEFAULT_TRIALS};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

const DEFAULT_RESTARTS: usize = 100;
const SHIFT_TOLERANCE: f64 = 1e-8;
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Constants(#[from] constants::ConstantsError),
    /// Checks failed; carries the full report and a summary of the failures.
    #[error("verification failed:\n{diff}")]
    Verification { report: String, diff: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Instance(_) => EXIT_PARSE,
            CliError::Relax(_) | CliError::Exact(_) | CliError::Rounding(_) | CliError::Constants(_) => EXIT_SOLVER,
            CliError::Verification { .. } => EXIT_VERIFICATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tfim-approx", version, about = "Certified product-state approximations for signed TFIM instances")]
pub struct Cli {
    /// Output format; defaults to csv for `curve` and `bench`, json otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoChoice {
    A,
    B,
    C,
    Warmup,
    Best,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the SOC-SDP relaxation of an instance.
    Solve {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Solve, round and compare against exact values.
    Round {
        path: PathBuf,
        #[command(flatten)]
        opts: RoundArgs,
    },
    /// Exact spectrum and best product state.
    Exact {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_QUBIT_CAP)]
        cap: usize,
        /// Ascent restarts for the product optimum; 0 skips it.
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// All approximation constants.
    Constants,
    /// Optimal interpolation parameter and ratio against the edge share p.
    Curve {
        #[arg(long, default_value_t = DEFAULT_CURVE_POINTS)]
        points: usize,
    },
    /// Verify the three-qubit triangle instance.
    Triangle {
        /// Uniform transverse field.
        #[arg(long, default_value_t = 0.6)]
        field: f64,
        #[command(flatten)]
        opts: RoundArgs,
    },
    /// Random ensemble sweep.
    Bench {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, default_value_t = 0.5)]
        edge_prob: f64,
        #[arg(long, default_value_t = 1.0)]
        h_max: f64,
        #[command(flatten)]
        opts: RoundArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RoundArgs {
    #[arg(long, value_enum, default_value_t = AlgoChoice::Best)]
    pub algo: AlgoChoice,
    /// Interpolation parameter for algorithm C; defaults to q*.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Largest instance handed to exact diagonalization.
    #[arg(long, default_value_t = DEFAULT_QUBIT_CAP)]
    pub cap: usize,
    /// Ascent restarts for the product optimum; 0 skips it.
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
}

impl Default for RoundArgs {
    fn default() -> Self {
        RoundArgs {
            algo: AlgoChoice::Best,
            q: None,
            trials: DEFAULT_TRIALS,
            seed: 0,
            tol: DEFAULT_TOLERANCE,
            cap: DEFAULT_QUBIT_CAP,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

impl RoundArgs {
    fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        if let Some(q) = self.q {
            if !(0.0..=1.0).contains(&q) {
                return Err(CliError::Usage(format!("--q must lie in [0, 1], got {q}")));
            }
        }
        Ok(())
    }
}

/// Round to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().expect("f64 number"));
            if let Some(m) = serde_json::Number::from_f64(r) {
                *n = m;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("reports serialize");
    round_floats(&mut v);
    serde_json::to_string_pretty(&v).expect("values serialize")
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut v = serde_json::to_value(rows).expect("rows serialize");
    round_floats(&mut v);
    let mut w = csv::Writer::from_writer(Vec::new());
    let Value::Array(items) = v else { unreachable!("rows serialize to an array") };
    for (i, item) in items.into_iter().enumerate() {
        let Value::Object(map) = item else { unreachable!("rows are flat records") };
        if i == 0 {
            w.write_record(map.keys()).expect("in-memory write");
        }
        let fields = map.values().map(|f| match f {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        });
        w.write_record(fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_instance(&text)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub edges: usize,
    pub total_weight: f64,
    pub total_field: f64,
    pub frustrated: bool,
}

impl InstanceSummary {
    pub fn of(inst: &Instance) -> Self {
        let (w, h) = shift_constants(inst);
        InstanceSummary {
            n: inst.n(),
            edges: inst.edges().len(),
            total_weight: w,
            total_field: h,
            frustrated: is_frustrated(inst),
        }
    }
}

/// `lambda_min(H_TFIM)` against `W + H - 2 lambda_max(H')`.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftIdentity {
    pub lambda_min_tfim: f64,
    pub shifted_lambda_max: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: &'static str,
    pub actual: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn close(name: &str, actual: f64, expected: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            relation: "==",
            actual,
            expected,
            tolerance,
            pass: (actual - expected).abs() <= tolerance,
        }
    }

    fn at_most(name: &str, actual: f64, bound: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            relation: "<=",
            actual,
            expected: bound,
            tolerance,
            pass: actual <= bound + tolerance,
        }
    }

    fn at_least(name: &str, actual: f64, bound: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            relation: ">=",
            actual,
            expected: bound,
            tolerance,
            pass: actual >= bound - tolerance,
        }
    }
}

fn verify<T: Serialize>(report: &T, checks: &[Check]) -> Result<String, CliError> {
    let text = to_json(report);
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| {
            format!(
                "  {}: actual {} {} {} (tolerance {}), off by {:e}",
                c.name,
                c.actual,
                c.relation,
                c.expected,
                c.tolerance,
                c.actual - c.expected
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(text)
    } else {
        Err(CliError::Verification {
            report: text,
            diff: failed.join("\n"),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmReport {
    pub algo: Algorithm,
    pub q: Option<f64>,
    pub best: f64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub ratio_sdp: f64,
    pub ratio_exact: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Selected {
    #[serde(flatten)]
    pub outcome: RoundingOutcome,
    pub ratio_sdp: f64,
    pub ratio_exact: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductReport {
    pub value: f64,
    pub state: BlochAssignment,
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub instance: InstanceSummary,
    pub sdp_value: f64,
    pub sdp_e: f64,
    pub sdp_x: f64,
    pub exact_opt: Option<f64>,
    pub prod_opt: Option<ProductReport>,
    pub shift_identity: Option<ShiftIdentity>,
    pub algorithms: Vec<AlgorithmReport>,
    pub selected: Selected,
    pub checks: Vec<Check>,
}

fn ratio(value: f64, denom: f64) -> f64 {
    if denom == 0.0 {
        1.0
    } else {
        value / denom
    }
}

pub fn shift_identity(inst: &Instance, cap: usize) -> Result<(f64, ShiftIdentity), CliError> {
    let h = build_hamiltonian(inst, cap)?;
    let (lmax, _) = lambda_max(&h);
    let direct = lambda_min_tfim(inst, cap)?;
    let (w, hf) = shift_constants(inst);
    let shifted = w + hf - 2.0 * lmax;
    Ok((
        lmax,
        ShiftIdentity {
            lambda_min_tfim: direct,
            shifted_lambda_max: shifted,
            residual: direct - shifted,
        },
    ))
}

/// Solve, round with the requested algorithms and compare with exact values.
pub fn ratio_report(inst: &Instance, opts: &RoundArgs) -> Result<RatioReport, CliError> {
    opts.validate()?;
    let sdp = solve_soc_sdp(inst, opts.tol)?;
    let q = match opts.q {
        Some(q) => q,
        None => constants::q_star()?,
    };
    let mut algos = Vec::new();
    if matches!(opts.algo, AlgoChoice::Warmup | AlgoChoice::Best) {
        algos.push(Algorithm::FieldOnly);
        algos.push(Algorithm::IsingGw);
    }
    if matches!(opts.algo, AlgoChoice::A | AlgoChoice::Best) {
        algos.push(Algorithm::AlgA);
    }
    if matches!(opts.algo, AlgoChoice::B | AlgoChoice::Best) {
        algos.push(Algorithm::AlgB);
    }
    if matches!(opts.algo, AlgoChoice::C | AlgoChoice::Best) {
        algos.push(Algorithm::AlgC(q));
    }
    let edge_sdp = if algos.contains(&Algorithm::IsingGw) {
        Some(solve_edge_relaxation(inst, opts.tol)?)
    } else {
        None
    };

    let (exact_opt, shift) = if inst.n() <= opts.cap {
        let (lmax, shift) = shift_identity(inst, opts.cap)?;
        (Some(lmax), Some(shift))
    } else {
        (None, None)
    };
    let prod_opt = (opts.restarts > 0 && inst.n() <= opts.cap).then(|| {
        let p = optimize_product_state(inst, opts.restarts, opts.seed);
        ProductReport {
            value: p.value,
            state: p.state,
            restarts: opts.restarts,
        }
    });

    let mut algorithms = Vec::new();
    let mut bests = Vec::new();
    for algo in algos {
        let (source, trials): (&SdpSolution, usize) = match algo {
            Algorithm::FieldOnly => (&sdp, 1),
            Algorithm::IsingGw => (edge_sdp.as_ref().expect("edge relaxation solved"), opts.trials),
            _ => (&sdp, opts.trials),
        };
        let s = run_trials(inst, source, algo, trials, opts.seed)?;
        algorithms.push(AlgorithmReport {
            algo,
            q: algo.q(),
            best: s.best.value,
            mean: s.mean,
            stderr: s.stderr,
            trials: s.trials,
            ratio_sdp: ratio(s.best.value, sdp.objective),
            ratio_exact: exact_opt.map(|e| ratio(s.best.value, e)),
        });
        bests.push(s.best);
    }
    let chosen = best_of(&bests)?;
    let selected = Selected {
        ratio_sdp: ratio(chosen.value, sdp.objective),
        ratio_exact: exact_opt.map(|e| ratio(chosen.value, e)),
        outcome: chosen,
    };

    let slack = opts.tol * (inst.total_weight() + inst.total_field()).max(1.0) + BOUND_SLACK;
    let mut checks = vec![Check::at_most("selected <= sdp", selected.outcome.value, sdp.objective, slack)];
    if let Some(e) = exact_opt {
        checks.push(Check::at_least("sdp >= exact", sdp.objective, e, slack));
        checks.push(Check::at_most("selected <= exact", selected.outcome.value, e, BOUND_SLACK));
        if let Some(p) = &prod_opt {
            checks.push(Check::at_most("prod_opt <= exact", p.value, e, BOUND_SLACK));
        }
    }
    if let Some(s) = &shift {
        checks.push(Check::close("shift identity", s.residual, 0.0, SHIFT_TOLERANCE));
    }

    Ok(RatioReport {
        instance: InstanceSummary::of(inst),
        sdp_value: sdp.objective,
        sdp_e: sdp.edge_part(),
        sdp_x: sdp.field_part(),
        exact_opt,
        prod_opt,
        shift_identity: shift,
        algorithms,
        selected,
        checks,
    })
}

pub fn cmd_solve(path: &Path, tol: f64) -> Result<String, CliError> {
    let inst = read_instance(path)?;
    Ok(to_json(&solve_soc_sdp(&inst, tol)?))
}

pub fn cmd_round(path: &Path, opts: &RoundArgs) -> Result<String, CliError> {
    let inst = read_instance(path)?;
    let report = ratio_report(&inst, opts)?;
    verify(&report, &report.checks)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactReport {
    pub instance: InstanceSummary,
    /// Eigenvalues of the projector Hamiltonian, descending.
    pub spectrum: Vec<f64>,
    pub lambda_max: f64,
    pub shift_identity: ShiftIdentity,
    pub prod_opt: Option<ProductReport>,
}

pub fn exact_report(inst: &Instance, cap: usize, restarts: usize, seed: u64) -> Result<ExactReport, CliError> {
    let h = build_hamiltonian(inst, cap)?;
    let (lmax, shift) = shift_identity(inst, cap)?;
    let prod_opt = (restarts > 0).then(|| {
        let p = optimize_product_state(inst, restarts, seed);
        ProductReport {
            value: p.value,
            state: p.state,
            restarts,
        }
    });
    Ok(ExactReport {
        instance: InstanceSummary::of(inst),
        spectrum: h.spectrum(),
        lambda_max: lmax,
        shift_identity: shift,
        prod_opt,
    })
}

pub fn cmd_exact(path: &Path, cap: usize, restarts: usize, seed: u64) -> Result<String, CliError> {
    let inst = read_instance(path)?;
    Ok(to_json(&exact_report(&inst, cap, restarts, seed)?))
}

pub fn cmd_constants(format: Format) -> Result<String, CliError> {
    let c = constants::all_constants()?;
    Ok(match format {
        Format::Json => to_json(&c),
        Format::Csv => to_csv(&[c]),
    })
}

pub fn cmd_curve(points: usize, format: Format) -> Result<String, CliError> {
    let curve: Vec<CurvePoint> = constants::q_opt_curve(points)?;
    Ok(match format {
        Format::Json => to_json(&curve),
        Format::Csv => to_csv(&curve),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExplicitState {
    pub state: BlochAssignment,
    /// Closed-form energy from the Bloch vectors.
    pub value: f64,
    /// `<psi|H'|psi>` from the amplitudes.
    pub state_vector_value: f64,
    /// Largest angular derivative at the point.
    pub gradient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleReport {
    pub field: f64,
    pub exact: ExactReport,
    pub ratio_prod_exact: Option<f64>,
    pub plus_state: ExplicitState,
    pub matching_state: ExplicitState,
    pub rounding: RatioReport,
    pub checks: Vec<Check>,
}

/// Product of per-qubit real amplitudes `(a0, a1)`, qubit 0 most significant.
fn kron_amplitudes(qubits: &[[f64; 2]]) -> Vec<Complex<f64>> {
    let n = qubits.len();
    (0..1usize << n)
        .map(|idx| {
            let amp: f64 = (0..n).map(|q| qubits[q][(idx >> (n - 1 - q)) & 1]).product();
            Complex::new(amp, 0.0)
        })
        .collect()
}

fn explicit_state(inst: &Instance, qubits: &[[f64; 2]], cap: usize) -> Result<ExplicitState, CliError> {
    // a|0> + b|1> has Bloch vector (2ab, 0, a^2 - b^2).
    let angles: Vec<f64> = qubits
        .iter()
        .map(|[a, b]| (a * a - b * b).atan2(2.0 * a * b))
        .collect();
    let state = BlochAssignment::new(
        qubits
            .iter()
            .map(|[a, b]| BlochVector::new(2.0 * a * b, 0.0, a * a - b * b))
            .collect(),
    );
    let value = evaluate_product_state(inst, &state)?.total;
    let state_vector_value = build_hamiltonian(inst, cap)?.expectation(&kron_amplitudes(qubits));
    let energy = |th: &[f64]| {
        evaluate_product_state(inst, &BlochAssignment::from_angles(th))
            .expect("sized to instance")
            .total
    };
    let h = 1e-5;
    let gradient = (0..angles.len())
        .map(|i| {
            let mut up = angles.clone();
            let mut down = angles.clone();
            up[i] += h;
            down[i] -= h;
            ((energy(&up) - energy(&down)) / (2.0 * h)).abs()
        })
        .fold(0.0, f64::max);
    Ok(ExplicitState {
        state,
        value,
        state_vector_value,
        gradient,
    })
}

pub fn triangle_report(field: f64, opts: &RoundArgs) -> Result<TriangleReport, CliError> {
    if !(field >= 0.0 && field.is_finite()) {
        return Err(CliError::Usage(format!("--field must be a finite non-negative number, got {field}")));
    }
    let inst = Instance::triangle(field);
    let cap = opts.cap.max(inst.n());
    let exact = exact_report(&inst, cap, opts.restarts.max(DEFAULT_RESTARTS), opts.seed)?;
    let rounding = ratio_report(&inst, &RoundArgs { cap, ..opts.clone() })?;
    let (s5, s2) = (0.5f64.sqrt(), 0.1f64.sqrt());
    let s9 = 0.9f64.sqrt();
    let plus_state = explicit_state(&inst, &[[s5, s5]; 3], cap)?;
    let matching_state = explicit_state(&inst, &[[s5, s5], [s9, s2], [s2, s9]], cap)?;
    let prod = exact.prod_opt.as_ref().map(|p| p.value);
    let ratio_prod_exact = prod.map(|p| ratio(p, exact.lambda_max));

    let mut checks = rounding.checks.clone();
    checks.push(Check::close("shift identity (exact)", exact.shift_identity.residual, 0.0, SHIFT_TOLERANCE));
    checks.push(Check::close(
        "closed form vs state vector (|+>)",
        plus_state.value,
        plus_state.state_vector_value,
        1e-9,
    ));
    checks.push(Check::close(
        "closed form vs state vector (matching)",
        matching_state.value,
        matching_state.state_vector_value,
        1e-9,
    ));
    if let Some(p) = prod {
        checks.push(Check::at_most("prod_opt <= lambda_max", p, exact.lambda_max, BOUND_SLACK));
        checks.push(Check::at_most("selected <= prod_opt", rounding.selected.outcome.value, p, 1e-6));
    }

    if (field - 0.6).abs() < 1e-15 {
        let r19 = 19f64.sqrt();
        let mut expected = vec![3.6, 3.2, 3.2, 2.6, 2.6, (8.0 + r19) / 5.0, 0.8, (8.0 - r19) / 5.0];
        expected.sort_by(|a, b| b.total_cmp(a));
        let spectrum_err = if exact.spectrum.len() == expected.len() {
            exact
                .spectrum
                .iter()
                .zip(&expected)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        checks.push(Check::close("spectrum", spectrum_err, 0.0, 1e-9));
        checks.push(Check::close("lambda_max", exact.lambda_max, 3.6, 1e-9));
        checks.push(Check::close("prod_opt", prod.unwrap_or(f64::NAN), 169.0 / 50.0, 1e-6));
        checks.push(Check::close("prod_opt / lambda_max", ratio_prod_exact.unwrap_or(f64::NAN), 169.0 / 180.0, 1e-6));
        checks.push(Check::close("matching state value", matching_state.value, 169.0 / 50.0, 1e-9));
        checks.push(Check::close("matching state gradient", matching_state.gradient, 0.0, 1e-6));
        checks.push(Check::close("|+> value", plus_state.value, 33.0 / 10.0, 1e-9));
        checks.push(Check::close("|+> gradient", plus_state.gradient, 0.0, 1e-6));
        checks.push(Check::at_least("sdp >= 18/5", rounding.sdp_value, 3.6, opts.tol));
        // No ascent may reach the product optimum with every z_i away from zero.
        let ascents = optimize_product_state(&inst, opts.restarts.max(DEFAULT_RESTARTS), opts.seed).restarts;
        let all_z_optimal = ascents
            .iter()
            .filter(|r| r.angles.iter().all(|t| t.sin().abs() > 1e-3) && r.value >= 169.0 / 50.0 - 1e-6)
            .count();
        checks.push(Check::close("optimal ascents with all z_i != 0", all_z_optimal as f64, 0.0, 0.0));
        checks.push(Check::at_most(
            "selected / lambda_max <= 169/180",
            rounding.selected.ratio_exact.unwrap_or(f64::NAN),
            169.0 / 180.0,
            1e-6,
        ));
    }

    Ok(TriangleReport {
        field,
        exact,
        ratio_prod_exact,
        plus_state,
        matching_state,
        rounding,
        checks,
    })
}

pub fn cmd_triangle(field: f64, opts: &RoundArgs) -> Result<String, CliError> {
    let report = triangle_report(field, opts)?;
    verify(&report, &report.checks)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub index: usize,
    pub n: usize,
    pub edges: usize,
    pub total_weight: f64,
    pub total_field: f64,
    pub frustrated: bool,
    pub sdp: f64,
    pub sdp_e: f64,
    pub sdp_x: f64,
    pub exact_opt: Option<f64>,
    pub prod_opt: Option<f64>,
    pub shift_residual: Option<f64>,
    pub field_state: Option<f64>,
    pub ising_best: Option<f64>,
    pub ising_mean: Option<f64>,
    pub a_best: Option<f64>,
    pub a_mean: Option<f64>,
    pub b_best: Option<f64>,
    pub b_mean: Option<f64>,
    pub c_best: Option<f64>,
    pub c_mean: Option<f64>,
    pub q: Option<f64>,
    pub best: f64,
    pub best_algo: &'static str,
    pub ratio_sdp: f64,
    pub ratio_exact: Option<f64>,
    pub checks_passed: bool,
}

impl BenchRow {
    fn from_report(index: usize, r: &RatioReport) -> Self {
        let find = |pred: fn(&Algorithm) -> bool| r.algorithms.iter().find(|a| pred(&a.algo));
        let ising = find(|a| *a == Algorithm::IsingGw);
        let a = find(|a| *a == Algorithm::AlgA);
        let b = find(|a| *a == Algorithm::AlgB);
        let c = find(|a| matches!(a, Algorithm::AlgC(_)));
        BenchRow {
            index,
            n: r.instance.n,
            edges: r.instance.edges,
            total_weight: r.instance.total_weight,
            total_field: r.instance.total_field,
            frustrated: r.instance.frustrated,
            sdp: r.sdp_value,
            sdp_e: r.sdp_e,
            sdp_x: r.sdp_x,
            exact_opt: r.exact_opt,
            prod_opt: r.prod_opt.as_ref().map(|p| p.value),
            shift_residual: r.shift_identity.as_ref().map(|s| s.residual),
            field_state: find(|a| *a == Algorithm::FieldOnly).map(|x| x.best),
            ising_best: ising.map(|x| x.best),
            ising_mean: ising.map(|x| x.mean),
            a_best: a.map(|x| x.best),
            a_mean: a.map(|x| x.mean),
            b_best: b.map(|x| x.best),
            b_mean: b.map(|x| x.mean),
            c_best: c.map(|x| x.best),
            c_mean: c.map(|x| x.mean),
            q: c.and_then(|x| x.q),
            best: r.selected.outcome.value,
            best_algo: r.selected.outcome.algo.name(),
            ratio_sdp: r.selected.ratio_sdp,
            ratio_exact: r.selected.ratio_exact,
            checks_passed: r.checks.iter().all(|c| c.pass),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchParams {
    pub instances: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub edge_prob: f64,
    pub h_max: f64,
}

/// Instance `index` of the ensemble: `n` cycles through `n_min..=n_max`.
pub fn bench_instance(p: &BenchParams, seed: u64, index: usize) -> Instance {
    let n = p.n_min + index % (p.n_max - p.n_min + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    random_instance(
        &RandomInstanceParams {
            n,
            edge_prob: p.edge_prob,
            h_max: p.h_max,
        },
        &mut rng,
    )
}

pub fn bench_rows(p: &BenchParams, opts: &RoundArgs) -> Result<Vec<BenchRow>, CliError> {
    if p.n_min == 0 || p.n_min > p.n_max {
        return Err(CliError::Usage("need 1 <= --n-min <= --n-max".into()));
    }
    if !(0.0..=1.0).contains(&p.edge_prob) {
        return Err(CliError::Usage("--edge-prob must lie in [0, 1]".into()));
    }
    if !(p.h_max >= 0.0 && p.h_max.is_finite()) {
        return Err(CliError::Usage("--h-max must be finite and non-negative".into()));
    }
    opts.validate()?;
    (0..p.instances)
        .into_par_iter()
        .map(|i| {
            let inst = bench_instance(p, opts.seed, i);
            ratio_report(&inst, opts).map(|r| BenchRow::from_report(i, &r))
        })
        .collect()
}

pub fn cmd_bench(p: &BenchParams, opts: &RoundArgs, format: Format) -> Result<String, CliError> {
    let rows = bench_rows(p, opts)?;
    Ok(match format {
        Format::Json => to_json(&rows),
        Format::Csv => to_csv(&rows),
    })
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let json_only = |f: Option<Format>| match f {
        Some(Format::Csv) => Err(CliError::Usage("this command only supports --format json".into())),
        _ => Ok(()),
    };
    match cli.command {
        Command::Solve { path, tol } => {
            json_only(cli.format)?;
            cmd_solve(&path, tol)
        }
        Command::Round { path, opts } => {
            json_only(cli.format)?;
            cmd_round(&path, &opts)
        }
        Command::Exact {
            path,
            cap,
            restarts,
            seed,
        } => {
            json_only(cli.format)?;
            cmd_exact(&path, cap, restarts, seed)
        }
        Command::Constants => cmd_constants(cli.format.unwrap_or(Format::Json)),
        Command::Curve { points } => cmd_curve(points, cli.format.unwrap_or(Format::Csv)),
        Command::Triangle { field, opts } => {
            json_only(cli.format)?;
            cmd_triangle(field, &opts)
        }
        Command::Bench {
            instances,
            n_min,
            n_max,
            edge_prob,
            h_max,
            opts,
        } => {
            let params = BenchParams {
                instances,
                n_min,
                n_max,
                edge_prob,
                h_max,
            };
            cmd_bench(&params, &opts, cli.format.unwrap_or(Format::Csv))
        }
    }
}
