//! Scenario implementations behind the subcommands.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64 as C64;
use serde::Serialize;

use openqs::linalg::{Operator, SuperOperator};
use openqs::master::{
    davies_generator, pauli_system, redfield_generator, thermalization_analysis, fdt_check,
    h_functional,
};
use openqs::openq::{exact_map_series, quasi_probability, qumulant_map_series, SEModel};
use openqs::propagators::{Generator, IntegratorCfg, Method};
use openqs::stochastic::{AsymTelegraphSpec, GaussSumSpec, ProcessSpec, RtnSpec};
use openqs::stochmap::{
    sample_average_series, truncated_map_series, StochasticHamiltonian, SuperCumulantTruncation,
};
use openqs::surrogate::{
    sequential_measurement_sample, sequential_measurement_sample_gkls, surrogate_verdict,
    surrogate_verdict_gkls, GklsEnv,
};
use openqs::OqsError;

#[derive(Debug)]
pub enum CliError {
    Io(std::io::Error),
    Config(String),
    Oqs(OqsError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "io: {e}"),
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Oqs(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<OqsError> for CliError {
    fn from(e: OqsError) -> Self {
        CliError::Oqs(e)
    }
}

type CliResult = Result<(), CliError>;

fn emit(out: &Option<PathBuf>, content: &str) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

/// Emits a numeric table as CSV, or as {"columns": [...], "rows": [[...]]}
/// when `--format json` was requested.
fn emit_table(out: &Option<PathBuf>, format: &str, csv: &str) -> CliResult {
    if format != "json" {
        return emit(out, csv);
    }
    let mut lines = csv.lines();
    let columns: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|line| {
            line.split(',')
                .map(|cell| {
                    cell.parse::<f64>()
                        .map_err(|e| CliError::Config(format!("non-numeric cell {cell}: {e}")))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let value = serde_json::json!({"columns": columns, "rows": rows});
    let text = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::Config(e.to_string()))?;
    emit(out, &(text + "\n"))
}

fn load_model(path: &PathBuf) -> Result<SEModel, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("model file: {e}")))
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    s.parse::<Method>().map_err(CliError::Oqs)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

fn parse_times_desc(spec: &str) -> Result<Vec<f64>, CliError> {
    let times: Vec<f64> = spec
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad time `{tok}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if times.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config(
            "times must be strictly decreasing".into(),
        ));
    }
    Ok(times)
}

// ---------------------------------------------------------------- propagate

#[derive(Args)]
pub struct PropagateArgs {
    /// JSON file with a constant Hamiltonian (Operator wire format).
    #[arg(long, conflicts_with = "rotating")]
    hamiltonian: Option<PathBuf>,
    /// Rotating qubit drive H(t) = (μ/2)[cos(ωt)σ_x - sin(ωt)σ_y]: "μ,ω".
    #[arg(long)]
    rotating: Option<String>,
    #[arg(long, default_value = "rk4")]
    method: String,
    /// Integrator step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    /// Emit every n-th step.
    #[arg(long, default_value_t = 10)]
    stride: usize,
}

pub fn run_propagate(args: &PropagateArgs, format: &str, out: &Option<PathBuf>) -> CliResult {
    let cfg = IntegratorCfg::new(parse_method(&args.method)?, args.step)?;
    let generator = match (&args.hamiltonian, &args.rotating) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            let h: Operator = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("hamiltonian file: {e}")))?;
            if !h.is_hermitian(1e-10) {
                return Err(CliError::Config("hamiltonian must be Hermitian".into()));
            }
            let dim = h.dim();
            Generator::from_hamiltonian(dim, move |_| h.clone())
        }
        (None, Some(spec)) => {
            let parts: Vec<f64> = spec
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(format!("--rotating: {e}")))?;
            if parts.len() != 2 {
                return Err(CliError::Config("--rotating needs \"mu,omega\"".into()));
            }
            let (mu, omega) = (parts[0], parts[1]);
            Generator::from_hamiltonian(2, move |t| {
                let x = Operator::pauli_x().scale_re(mu / 2.0 * (omega * t).cos());
                let y = Operator::pauli_y().scale_re(-mu / 2.0 * (omega * t).sin());
                &x + &y
            })
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of --hamiltonian or --rotating is required".into(),
            ))
        }
    };

    let dim = generator.dim();
    let mut csv = String::from("t");
    for i in 0..dim {
        for j in 0..dim {
            write!(csv, ",re_u{i}{j},im_u{i}{j}").expect("write to string");
        }
    }
    csv.push('\n');
    let stride = args.stride.max(1);
    let mut step_index = 0usize;
    openqs::propagators::propagate_observed(&generator, 0.0, args.t_max, &cfg, |t, u| {
        if step_index.is_multiple_of(stride) {
            write!(csv, "{}", fmt_f(t)).expect("write to string");
            for i in 0..dim {
                for j in 0..dim {
                    write!(csv, ",{},{}", fmt_f(u[(i, j)].re), fmt_f(u[(i, j)].im))
                        .expect("write to string");
                }
            }
            csv.push('\n');
        }
        step_index += 1;
    })?;
    emit_table(out, format, &csv)
}

// ---------------------------------------------------------------- stochastic

#[derive(Args)]
pub struct StochasticArgs {
    /// Driving process.
    #[arg(long, value_parser = ["rtn", "asym", "gauss-sum"], default_value = "rtn")]
    process: String,
    /// RTN switching rate (also the base rate of gauss-sum).
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Initial bias p for rtn/asym.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Asymmetric rates "w+,w-" (asym only).
    #[arg(long)]
    rates: Option<String>,
    /// Number of RTN components of the gauss-sum process.
    #[arg(long, default_value_t = 8)]
    n_components: usize,
    /// Coupling amplitude λ.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Free qubit splitting Ω₀ in H₀ = (Ω₀/2)σ_z.
    #[arg(long, default_value_t = 0.0)]
    omega0: f64,
    /// Coupling operator V: z ⇒ σ_z/2 (pure dephasing), x ⇒ σ_x/2.
    #[arg(long, value_parser = ["z", "x"], default_value = "z")]
    coupling: String,
    /// 0 ⇒ Monte-Carlo sample average; 1, 2 or 4 ⇒ super-cumulant order.
    #[arg(long, default_value_t = 0)]
    order: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value = "rk4")]
    method: String,
    /// Integrator step h.
    #[arg(long, default_value_t = 0.02)]
    h: f64,
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
}

fn stochastic_hamiltonian(args: &StochasticArgs) -> Result<StochasticHamiltonian, CliError> {
    let process = match args.process.as_str() {
        "rtn" => ProcessSpec::Rtn(RtnSpec::new(args.w, args.p)?),
        "asym" => {
            let (wp, wm) = match &args.rates {
                Some(spec) => {
                    let parts: Vec<f64> = spec
                        .split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| CliError::Config(format!("--rates: {e}")))?;
                    if parts.len() != 2 {
                        return Err(CliError::Config("--rates needs \"w+,w-\"".into()));
                    }
                    (parts[0], parts[1])
                }
                None => (args.w, args.w),
            };
            ProcessSpec::Asym(AsymTelegraphSpec::new(wp, wm, args.p)?)
        }
        "gauss-sum" => ProcessSpec::GaussSum(GaussSumSpec::new(args.w, args.n_components)?),
        other => return Err(CliError::Config(format!("unknown process {other}"))),
    };
    let v = match args.coupling.as_str() {
        "z" => Operator::pauli_z().scale_re(0.5),
        _ => Operator::pauli_x().scale_re(0.5),
    };
    Ok(StochasticHamiltonian::new(
        Operator::pauli_z().scale_re(args.omega0 / 2.0),
        v,
        args.lambda,
        process,
    )?)
}

fn stochastic_series(
    args: &StochasticArgs,
    seed: u64,
) -> Result<Vec<(f64, SuperOperator)>, CliError> {
    let h = stochastic_hamiltonian(args)?;
    let cfg = IntegratorCfg::new(parse_method(&args.method)?, args.h)?;
    let series = if args.order == 0 {
        sample_average_series(&h, args.t_max, args.samples, &cfg, seed)?
    } else {
        truncated_map_series(
            &h,
            &SuperCumulantTruncation::analytic(args.order),
            args.t_max,
            &cfg,
        )?
    };
    Ok(series)
}

fn map_series_csv(series: &[(f64, SuperOperator)]) -> String {
    let n = series
        .first()
        .map(|(_, m)| m.basis().len())
        .unwrap_or(0);
    let mut csv = String::from("t");
    for i in 0..n {
        for j in 0..n {
            write!(csv, ",re_m{i}{j},im_m{i}{j}").expect("write to string");
        }
    }
    csv.push_str(",abs_w\n");
    for (t, map) in series {
        write!(csv, "{}", fmt_f(*t)).expect("write to string");
        for i in 0..n {
            for j in 0..n {
                let z = map.mat()[(i, j)];
                write!(csv, ",{},{}", fmt_f(z.re), fmt_f(z.im)).expect("write to string");
            }
        }
        // coherence multiplier on the |↓⟩⟨↑| slot
        let w = map.mat()[(n - 1, n - 1)].norm();
        writeln!(csv, ",{}", fmt_f(w)).expect("write to string");
    }
    csv
}

pub fn run_stochastic(
    args: &StochasticArgs,
    seed: u64,
    format: &str,
    out: &Option<PathBuf>,
) -> CliResult {
    let series = stochastic_series(args, seed)?;
    emit_table(out, format, &map_series_csv(&series))
}

// ---------------------------------------------------------------- exact

#[derive(Args)]
pub struct ExactArgs {
    /// SE model JSON ({hs, he, v, f, lambda, rhoE | {"thermal": β}}).
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 6.5)]
    t_max: f64,
    /// Number of output points.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Initial ρ_S: maximally coherent pure state, maximally mixed, or a
    /// JSON Operator file.
    #[arg(long, default_value = "plus")]
    rho0: String,
}

fn initial_state(spec: &str, dim: usize) -> Result<Operator, CliError> {
    match spec {
        "plus" => Ok(Operator::from_fn(dim, |_, _| {
            C64::new(1.0 / dim as f64, 0.0)
        })),
        "mixed" => Ok(Operator::from_fn(dim, |i, j| {
            if i == j {
                C64::new(1.0 / dim as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })),
        path => {
            let text = std::fs::read_to_string(path)?;
            let rho: Operator = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("rho0 file: {e}")))?;
            if !rho.is_density(1e-8) {
                return Err(CliError::Config("rho0 must be a density matrix".into()));
            }
            Ok(rho)
        }
    }
}

pub fn run_exact(args: &ExactArgs, format: &str, out: &Option<PathBuf>) -> CliResult {
    let model = load_model(&args.model)?;
    if args.points == 0 {
        return Err(CliError::Config("need at least one output point".into()));
    }
    let rho0 = initial_state(&args.rho0, model.dim_s())?;
    let times: Vec<f64> = (0..=args.points)
        .map(|i| args.t_max * i as f64 / args.points as f64)
        .collect();
    let series = exact_map_series(&model, &times)?;
    let d = model.dim_s();
    let mut csv = String::from("t");
    for i in 0..d {
        for j in 0..d {
            write!(csv, ",re_rho{i}{j},im_rho{i}{j}").expect("write to string");
        }
    }
    csv.push('\n');
    for (t, map) in series {
        let rho = map.apply(&rho0)?;
        write!(csv, "{}", fmt_f(t)).expect("write to string");
        for i in 0..d {
            for j in 0..d {
                let z = rho.mat()[(i, j)];
                write!(csv, ",{},{}", fmt_f(z.re), fmt_f(z.im)).expect("write to string");
            }
        }
        csv.push('\n');
    }
    emit_table(out, format, &csv)
}

// ---------------------------------------------------------------- quasiprob

#[derive(Args)]
pub struct QuasiprobArgs {
    #[arg(long)]
    model: PathBuf,
    /// Strictly decreasing times "s1,s2,...,sk" (k ≤ 3).
    #[arg(long)]
    times: String,
}

#[derive(Serialize)]
struct QuasiprobReport {
    times: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Full tensor, slot-major over (f_i, f̄_i) pairs, as [re, im] pairs.
    values: Vec<[f64; 2]>,
    /// Diagonal part P^(k).
    diagonal: Vec<f64>,
    interference_norm: f64,
    normalization_defect: f64,
}

pub fn run_quasiprob(args: &QuasiprobArgs, out: &Option<PathBuf>) -> CliResult {
    let model = load_model(&args.model)?;
    let times = parse_times_desc(&args.times)?;
    let q = quasi_probability(&model, &times)?;
    let report = QuasiprobReport {
        times: q.times.clone(),
        eigenvalues: q.eigenvalues.clone(),
        values: q.values().iter().map(|z| [z.re, z.im]).collect(),
        diagonal: q.diagonal().iter().map(|z| z.re).collect(),
        interference_norm: q.max_interference(),
        normalization_defect: (q.total() - C64::new(1.0, 0.0)).norm(),
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Config(e.to_string()))?;
    emit(out, &(text + "\n"))
}

// ---------------------------------------------------------------- davies

#[derive(Args)]
pub struct DaviesArgs {
    #[arg(long)]
    model: PathBuf,
    /// Override/construct a thermal ρ_E at this inverse temperature.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    gap_tol: f64,
    /// Accepted for interface compatibility; exactly diagonalizable
    /// environments use analytic comb rates and no quadrature horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Time span of the reported H-theorem curve (units of 1/λ²).
    #[arg(long, default_value_t = 50.0)]
    t_max: f64,
    /// Points on the H-curve.
    #[arg(long, default_value_t = 40)]
    points: usize,
}

#[derive(Serialize)]
struct DaviesReport {
    omegas: Vec<f64>,
    gamma: Vec<[f64; 2]>,
    energies: Vec<f64>,
    population_spectrum: Vec<f64>,
    coherence_spectrum: Vec<[f64; 2]>,
    gap: f64,
    max_re_coherence: f64,
    ergodic: bool,
    fixed_point_error: f64,
    detailed_balance_defect: f64,
    fdt_deviation: Option<f64>,
    h_curve: Vec<[f64; 2]>,
}

pub fn run_davies(args: &DaviesArgs, out: &Option<PathBuf>) -> CliResult {
    let mut model = load_model(&args.model)?;
    if let Some(beta) = args.beta {
        model = SEModel::with_thermal_env(
            model.hs, model.he, model.v, model.f, model.lambda, beta,
        )?;
    }
    let _ = args.horizon; // no quadrature horizon for comb rates
    let bundle = davies_generator(&model, args.gap_tol)?;
    let report = thermalization_analysis(&bundle)?;
    let pauli = pauli_system(&bundle)?;
    let beta = bundle.beta.expect("thermal model");

    let mut h_curve = Vec::new();
    let d = pauli.energies.len();
    let p0: Vec<f64> = {
        // concentrated start, far from Gibbs
        let mut v = vec![0.05 / (d as f64 - 1.0).max(1.0); d];
        v[d - 1] = 1.0 - v.iter().take(d - 1).sum::<f64>();
        v
    };
    for i in 0..=args.points.max(1) {
        let t = args.t_max * i as f64 / args.points.max(1) as f64
            / (model.lambda * model.lambda).max(1e-12);
        let p = pauli.evolve(&p0, model.lambda, t)?;
        h_curve.push([t, h_functional(&p, &pauli.p_gibbs)?]);
    }

    let fdt_deviation = fdt_check(&model, 1e-6).ok();
    let out_report = DaviesReport {
        omegas: bundle.rates.iter().map(|(w, _)| *w).collect(),
        gamma: bundle.rates.iter().map(|(_, g)| [g.re, g.im]).collect(),
        energies: pauli.energies.clone(),
        population_spectrum: report.population_eigenvalues.clone(),
        coherence_spectrum: report
            .coherence_eigenvalues
            .iter()
            .map(|&(re, im)| [re, im])
            .collect(),
        gap: report.spectral_gap,
        max_re_coherence: report.max_re_coherence,
        ergodic: report.ergodic,
        fixed_point_error: pauli.gibbs_residual(),
        detailed_balance_defect: pauli.detailed_balance_defect(beta),
        fdt_deviation,
        h_curve,
    };
    let text = serde_json::to_string_pretty(&out_report)
        .map_err(|e| CliError::Config(e.to_string()))?;
    emit(out, &(text + "\n"))
}

// ---------------------------------------------------------------- surrogate

#[derive(Args)]
pub struct SurrogateArgs {
    /// SE model JSON; mutually exclusive with --gkls-rtn-w.
    #[arg(long, conflicts_with = "gkls_rtn_w")]
    model: Option<PathBuf>,
    /// Built-in GKLS two-level environment F = σ_z/2,
    /// L = -(w/2)[σ_x,[σ_x,•]] at this switching rate.
    #[arg(long)]
    gkls_rtn_w: Option<f64>,
    /// Base grid of strictly decreasing times; every prefix of length ≤
    /// k-max is checked.
    #[arg(long, default_value = "2.4,1.5,0.7")]
    times: String,
    #[arg(long, default_value_t = 3)]
    k_max: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Also sample this many sequential-measurement runs.
    #[arg(long, default_value_t = 0)]
    sample_sequences: usize,
    /// Where the sampled sequences go (CSV: run, t, f).
    #[arg(long)]
    sequences_out: Option<PathBuf>,
}

pub fn run_surrogate(args: &SurrogateArgs, seed: u64, out: &Option<PathBuf>) -> CliResult {
    let base = parse_times_desc(&args.times)?;
    let grids: Vec<Vec<f64>> = (1..=base.len().min(args.k_max))
        .map(|k| base[..k].to_vec())
        .collect();

    enum Env {
        Se(SEModel),
        Gkls(GklsEnv),
    }
    let env = match (&args.model, args.gkls_rtn_w) {
        (Some(path), None) => Env::Se(load_model(path)?),
        (None, Some(w)) => Env::Gkls(GklsEnv::rtn_qubit(
            w,
            Operator::diag(&[0.5, 0.5]),
        )?),
        _ => {
            return Err(CliError::Config(
                "exactly one of --model or --gkls-rtn-w is required".into(),
            ))
        }
    };

    let report = match &env {
        Env::Se(m) => surrogate_verdict(m, &grids, args.k_max, args.eps)?,
        Env::Gkls(g) => surrogate_verdict_gkls(g, &grids, args.k_max, args.eps)?,
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Config(e.to_string()))?;
    emit(out, &(text + "\n"))?;

    if args.sample_sequences > 0 {
        let mut ascending = base.clone();
        ascending.reverse();
        let mut csv = String::from("run,t,f\n");
        for run in 0..args.sample_sequences {
            let (outcomes, _) = match &env {
                Env::Se(m) => {
                    sequential_measurement_sample(m, &ascending, seed + run as u64)?
                }
                Env::Gkls(g) => {
                    sequential_measurement_sample_gkls(g, &ascending, seed + run as u64)?
                }
            };
            for (t, f) in ascending.iter().zip(outcomes.iter()) {
                writeln!(csv, "{run},{},{}", fmt_f(*t), fmt_f(*f)).expect("write to string");
            }
        }
        match &args.sequences_out {
            Some(path) => std::fs::write(path, csv)?,
            None => print!("{csv}"),
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- compare

#[derive(Args)]
pub struct CompareArgs {
    /// Left pipeline: sample-avg | order1 | order2 | order4 | exact |
    /// davies | redfield | qumulant2.
    #[arg(long)]
    left: String,
    /// Right pipeline, same choices.
    #[arg(long)]
    right: String,
    /// SE model JSON (exact/davies/redfield/qumulant2 pipelines).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Stochastic-scenario parameters (sample-avg/orderN pipelines).
    #[command(flatten)]
    stochastic: StochasticArgs,
}

fn pipeline_series(
    name: &str,
    args: &CompareArgs,
    seed: u64,
) -> Result<Vec<(f64, SuperOperator)>, CliError> {
    let cfg = IntegratorCfg::new(parse_method(&args.stochastic.method)?, args.stochastic.h)?;
    let t_max = args.stochastic.t_max;
    match name {
        "sample-avg" => {
            let h = stochastic_hamiltonian(&args.stochastic)?;
            Ok(sample_average_series(
                &h,
                t_max,
                args.stochastic.samples,
                &cfg,
                seed,
            )?)
        }
        "order1" | "order2" | "order4" => {
            let order = name[5..].parse::<usize>().expect("digit");
            let h = stochastic_hamiltonian(&args.stochastic)?;
            Ok(truncated_map_series(
                &h,
                &SuperCumulantTruncation::analytic(order),
                t_max,
                &cfg,
            )?)
        }
        "exact" | "davies" | "redfield" | "qumulant2" => {
            let path = args.model.as_ref().ok_or_else(|| {
                CliError::Config(format!("pipeline `{name}` needs --model"))
            })?;
            let model = load_model(path)?;
            let n_pts = ((t_max / args.stochastic.h).ceil() as usize).max(1);
            let times: Vec<f64> = (0..=n_pts)
                .map(|i| t_max * i as f64 / n_pts as f64)
                .collect();
            match name {
                "exact" => Ok(exact_map_series(&model, &times)?),
                "qumulant2" => Ok(qumulant_map_series(&model, 2, t_max, &cfg)?),
                _ => {
                    let bundle = if name == "davies" {
                        davies_generator(&model, 1e-8)?
                    } else {
                        redfield_generator(&model, 1e-8)?
                    };
                    let gen = bundle.generator()?;
                    times
                        .iter()
                        .map(|&t| {
                            let m = openqs::linalg::expm(&(gen.mat() * C64::new(t, 0.0)))?;
                            Ok((
                                t,
                                SuperOperator::from_matrix(gen.basis().clone(), m)?,
                            ))
                        })
                        .collect()
                }
            }
        }
        other => Err(CliError::Config(format!("unknown pipeline `{other}`"))),
    }
}

pub fn run_compare(args: &CompareArgs, seed: u64, format: &str, out: &Option<PathBuf>) -> CliResult {
    let left = pipeline_series(&args.left, args, seed)?;
    let right = pipeline_series(&args.right, args, seed)?;
    if left.is_empty() || right.is_empty() {
        return Err(CliError::Config("empty series".into()));
    }
    let dim_l = left[0].1.dim();
    let dim_r = right[0].1.dim();
    if dim_l != dim_r {
        return Err(CliError::Oqs(OqsError::DimMismatch {
            expected: dim_l,
            got: dim_r,
        }));
    }
    let mut csv = String::from("t,divergence\n");
    // walk the left series, matching right entries by time
    let mut j = 0usize;
    for (t, ml) in &left {
        while j + 1 < right.len() && (right[j].0 - t).abs() > (right[j + 1].0 - t).abs() {
            j += 1;
        }
        let (tr, mr) = &right[j];
        if (tr - t).abs() > 1e-9 * (1.0 + t.abs()) {
            continue;
        }
        let div = openqs::linalg::max_abs_diff(ml.mat(), mr.mat());
        writeln!(csv, "{},{}", fmt_f(*t), fmt_f(div)).expect("write to string");
    }
    emit_table(out, format, &csv)
}
