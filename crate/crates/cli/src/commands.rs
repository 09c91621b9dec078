//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use stabradius::ionorm::{io_norm_l1, io_norm_l2_hilbert, l1_witness_integral, IoNormEstimate, DEFAULT_BUDGET};
use stabradius::nonaut::{datko_test, nonaut_freq_response, DatkoVerdict};
use stabradius::radius::{destabilizing_perturbation, dichotomy_radius, io_norm, pointwise_radius_bounds, radius_bounds};
use stabradius::syscheck::internal_external_check;
use stabradius::transfer::{sup_transfer_real_axis, transfer_eval, transfer_norm_at, LtiSystem};
use stabradius::{ComplexMatrix, Error as CoreError, NormSpec, C64};

use crate::document::{matrix_value, parse_matrix, vector_value, DocumentError, SystemDocument};
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "stabradius", version, about = "Stability radii and input-output norms of linear systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// sup over the imaginary axis of the transfer function norm
    Supnorm,
    /// Norm of the input-output operator on L^p
    Ionorm,
    /// Lower and upper stability radius bounds
    Radius,
    /// Rank-one destabilizing perturbation
    Destabilize,
    /// Pointwise radius bounds at one lattice shift
    Pointwise,
    /// Dichotomy radius over the lattice shifts
    Dichotomy,
    /// Datko integral test of the (time-varying) family
    Datko,
    /// Response to a harmonic input at a finite time
    Freqresp,
    /// Internal/external stability flags
    Check,
    /// Recompute the published example values
    ReproducePaper,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Supnorm => "supnorm",
            Command::Ionorm => "ionorm",
            Command::Radius => "radius",
            Command::Destabilize => "destabilize",
            Command::Pointwise => "pointwise",
            Command::Dichotomy => "dichotomy",
            Command::Datko => "datko",
            Command::Freqresp => "freqresp",
            Command::Check => "check",
            Command::ReproducePaper => "reproduce-paper",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// System document (JSON)
    #[arg(long, global = true)]
    pub system: Option<PathBuf>,
    /// Time-integrability exponent of the signal spaces
    #[arg(long, global = true, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Write the sweep of the command to this CSV file
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Candidate budget of the multiplier searches
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, global = true, default_value_t = 40.0)]
    pub horizon: f64,
    #[arg(long = "xi-grid", global = true, default_value_t = 32)]
    pub xi_grid: usize,
    #[arg(long, global = true, default_value_t = 0.0)]
    pub xi: f64,
    #[arg(long, global = true, default_value_t = 0.0)]
    pub omega: f64,
    #[arg(long, global = true, default_value_t = 10.0)]
    pub time: f64,
    /// Frequency of the destabilizer (default: the maximizing frequency)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Input direction as a JSON array of [re, im] pairs (default e1)
    #[arg(long, global = true)]
    pub input: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Document(#[from] DocumentError),
    #[error("{0}")]
    Numerical(CoreError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Document(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Numerical(e) => match e {
                CoreError::EmptyMatrix
                | CoreError::NonFinite { .. }
                | CoreError::EntryCount { .. }
                | CoreError::InvalidNorm(_)
                | CoreError::NotSquare { .. }
                | CoreError::DimensionMismatch(_)
                | CoreError::TooLarge { .. }
                | CoreError::UnsupportedNorm(_)
                | CoreError::InvalidArgument(_) => 2,
                _ => 3,
            },
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Numerical(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn estimate_value(e: &IoNormEstimate) -> Value {
    json!({
        "value": num(e.value),
        "p": e.p,
        "mode": format!("{:?}", e.mode),
        "witness": format!("{:?}", e.witness),
        "evaluations": e.evaluations,
    })
}

fn load(opts: &Options) -> Result<SystemDocument> {
    let path = opts
        .system
        .as_ref()
        .ok_or_else(|| CliError::Input("this command needs --system PATH".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(SystemDocument::from_json(&text)?)
}

fn input_vector(opts: &Options, dim: usize) -> Result<Vec<C64>> {
    match &opts.input {
        None => {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            v[0] = C64::new(1.0, 0.0);
            Ok(v)
        }
        Some(text) => {
            let v: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("--input: {e}")))?;
            let m = parse_matrix(&json!([v]), "input")?;
            if m.cols() != dim {
                return Err(CliError::Input(format!("--input has {} entries, the system has {dim} inputs", m.cols())));
            }
            Ok(m.row(0).to_vec())
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn no_sweep(opts: &Options, command: Command) -> Result<()> {
    if opts.csv.is_some() {
        return Err(CliError::Input(format!("{} has no sweep to write with --csv", command.name())));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(CliError::Input(format!("--p {p} must be a finite value >= 1")));
    }
    Ok(())
}

/// Echo of the options that determine the results (paths excluded).
fn inputs_echo(command: Command, opts: &Options, doc: Option<&SystemDocument>) -> Value {
    json!({
        "command": command.name(),
        "system": doc.map(SystemDocument::to_value),
        "p": opts.p,
        "tol": opts.tol,
        "seed": opts.seed,
        "budget": opts.budget,
        "horizon": opts.horizon,
        "xi_grid": opts.xi_grid,
        "xi": opts.xi,
        "omega": opts.omega,
        "time": opts.time,
        "s": opts.s,
        "input": opts.input,
    })
}

/// Runs one command and returns the report document.
pub fn execute(cli: &Cli, argv: &[String]) -> Result<Value> {
    let start = Instant::now();
    let opts = &cli.opts;
    check_p(opts.p)?;
    if !(opts.tol > 0.0) {
        return Err(CliError::Input(format!("--tol {} must be positive", opts.tol)));
    }
    let doc = match cli.command {
        Command::ReproducePaper => None,
        _ => Some(load(opts)?),
    };
    let mut report = Report::default();
    match cli.command {
        Command::Supnorm => supnorm(doc.as_ref().unwrap(), opts, &mut report)?,
        Command::Ionorm => {
            no_sweep(opts, cli.command)?;
            let sys = doc.as_ref().unwrap().lti()?;
            let e = io_norm(&sys, opts.p, opts.tol, opts.budget)?;
            report.put("io_norm", estimate_value(&e), "radius::io_norm", Some(opts.tol));
        }
        Command::Radius => radius(doc.as_ref().unwrap(), opts, &mut report)?,
        Command::Destabilize => {
            no_sweep(opts, cli.command)?;
            let sys = doc.as_ref().unwrap().lti()?;
            let s = match opts.s {
                Some(s) => s,
                None => sup_transfer_real_axis(&sys, opts.tol)?.argmax,
            };
            let d = destabilizing_perturbation(&sys, s)?;
            let op = "radius::destabilizing_perturbation";
            report.put("frequency", num(d.frequency), op, None);
            report.put("delta", matrix_value(&d.delta), op, None);
            report.put("norm", num(d.norm), op, None);
            report.put("transfer_norm", num(d.transfer_norm), op, None);
            report.put("u_bar", vector_value(&d.u_bar), op, None);
            report.put("y_star", vector_value(&d.y_star), op, None);
            report.put("singularity_residual", num(d.singularity_residual(&sys)?), "radius::Perturbation::singularity_residual", None);
        }
        Command::Pointwise => {
            no_sweep(opts, cli.command)?;
            let sys = doc.as_ref().unwrap().lti()?;
            let b = pointwise_radius_bounds(&sys, opts.xi, opts.p, opts.budget)?;
            let op = "radius::pointwise_radius_bounds";
            report.put("xi", num(b.xi), op, None);
            report.put("lower", num(b.lower), op, None);
            report.put("upper", num(b.upper), op, None);
            report.put("lower_one_sided", json!(b.lower_one_sided), op, None);
            report.put("k", json!(b.k), op, None);
        }
        Command::Dichotomy => {
            let sys = doc.as_ref().unwrap().lti()?;
            let d = dichotomy_radius(&sys, opts.p, opts.xi_grid, opts.budget)?;
            let op = "radius::dichotomy_radius";
            report.put("value", num(d.value), op, None);
            report.put("xi", num(d.xi), op, None);
            if let Some(path) = &opts.csv {
                let rows: Vec<Vec<String>> = d
                    .trace
                    .iter()
                    .map(|t| vec![t.xi.to_string(), t.lower.to_string(), t.upper.to_string(), t.k.to_string(), t.lower_one_sided.to_string()])
                    .collect();
                write_csv(path, &["xi", "lower", "upper", "k", "lower_one_sided"], &rows)?;
            }
        }
        Command::Datko => datko(doc.as_ref().unwrap(), opts, &mut report)?,
        Command::Freqresp => freqresp(doc.as_ref().unwrap(), opts, &mut report)?,
        Command::Check => {
            no_sweep(opts, cli.command)?;
            let sys = doc.as_ref().unwrap().lti()?;
            let v = internal_external_check(&sys, opts.p)?;
            let op = "syscheck::internal_external_check";
            report.put("internal", json!(v.internal), op, None);
            report.put("stabilizable", json!(v.stabilizable), op, None);
            report.put("detectable", json!(v.detectable), op, None);
            report.put("externally_bounded", json!(v.externally_bounded), op, None);
            report.put("io_bounded", json!(v.io_bounded), op, None);
            report.put("consistent", json!(v.consistent), op, None);
            report.put("io_norm", v.io_norm.map_or(Value::Null, num), op, None);
            report.put("unstable_eigenvalues", vector_value(&v.unstable_eigenvalues), op, None);
            report.put("unstable_poles", vector_value(&v.unstable_poles), op, None);
        }
        Command::ReproducePaper => reproduce(opts, &mut report)?,
    }
    let inputs = inputs_echo(cli.command, opts, doc.as_ref());
    Ok(report.finish(cli.command.name(), argv, &inputs, start.elapsed().as_secs_f64()))
}

fn supnorm(doc: &SystemDocument, opts: &Options, report: &mut Report) -> Result<()> {
    let sys = doc.lti()?;
    let sup = sup_transfer_real_axis(&sys, opts.tol)?;
    let op = "transfer::sup_transfer_real_axis";
    report.put("value", num(sup.value), op, Some(opts.tol));
    report.put("argmax", num(sup.argmax), op, Some(opts.tol));
    report.put("exact_norm", json!(sup.exact_norm), op, None);
    if let Some(path) = &opts.csv {
        let reach = 2.0 * sup.argmax.abs() + 10.0;
        let rows = (0..=2000)
            .map(|i| {
                let s = -reach + 2.0 * reach * i as f64 / 2000.0;
                Ok(vec![s.to_string(), transfer_norm_at(&sys, s)?.value.to_string()])
            })
            .collect::<Result<Vec<_>>>()?;
        write_csv(path, &["s", "transfer_norm"], &rows)?;
    }
    Ok(())
}

fn radius(doc: &SystemDocument, opts: &Options, report: &mut Report) -> Result<()> {
    let sys = doc.lti()?;
    let r = radius_bounds(&sys, opts.p, opts.tol)?;
    let op = "radius::radius_bounds";
    report.put("lower", num(r.lower), op, Some(r.tolerance));
    report.put("upper", num(r.upper), op, Some(r.tolerance));
    report.put("exact", r.exact.map_or(Value::Null, num), op, Some(r.tolerance));
    report.put("strict_gap", json!(r.gap_strict), op, Some(r.tolerance));
    report.put("lower_one_sided", json!(r.lower_one_sided), op, None);
    report.put("io_norm", estimate_value(&r.io_norm), "radius::io_norm", Some(r.tolerance));
    report.put("transfer_sup", num(r.transfer_sup.value), "transfer::sup_transfer_real_axis", Some(r.tolerance));
    report.put("frequency", num(r.transfer_sup.argmax), "transfer::sup_transfer_real_axis", Some(r.tolerance));
    if let Some(d) = &r.destabilizer {
        report.put(
            "destabilizer",
            json!({ "delta": matrix_value(&d.delta), "norm": num(d.norm), "frequency": num(d.frequency) }),
            "radius::destabilizing_perturbation",
            None,
        );
    }
    if let Some(path) = &opts.csv {
        let rows: Vec<Vec<String>> = r
            .xi_trace
            .iter()
            .map(|t| vec![t.xi.to_string(), t.lower.to_string(), t.upper.to_string(), t.k.to_string()])
            .collect();
        write_csv(path, &["xi", "lower", "upper", "k"], &rows)?;
    }
    Ok(())
}

fn datko(doc: &SystemDocument, opts: &Options, report: &mut Report) -> Result<()> {
    let sys = doc.time_varying_system()?;
    let r = datko_test(&sys, opts.p, opts.horizon, opts.seed)?;
    let op = "nonaut::datko_test";
    report.put("sup_integral", num(r.sup_integral), op, None);
    let verdict = match r.verdict {
        DatkoVerdict::Stable => "stable",
        DatkoVerdict::Unstable => "unstable",
        DatkoVerdict::Inconclusive => "inconclusive",
    };
    report.put("verdict", json!(verdict), op, None);
    report.put("growth_exponent", num(r.growth_exponent), op, None);
    report.put("horizon", num(r.horizon), op, None);
    report.put("step", num(sys.family.step()), "nonaut::EvolutionFamily", None);
    if let Some(path) = &opts.csv {
        let rows: Vec<Vec<String>> = r
            .probes
            .iter()
            .map(|q| {
                vec![
                    q.tau.to_string(),
                    serde_json::to_string(&vector_value(&q.x)).unwrap(),
                    q.half_integral.to_string(),
                    q.three_quarter_integral.to_string(),
                    q.integral.to_string(),
                    q.growth_exponent.to_string(),
                ]
            })
            .collect();
        write_csv(path, &["tau", "x", "integral_half", "integral_three_quarter", "integral", "growth_exponent"], &rows)?;
    }
    Ok(())
}

fn freqresp(doc: &SystemDocument, opts: &Options, report: &mut Report) -> Result<()> {
    if !(opts.time >= 0.0) {
        return Err(CliError::Input(format!("--time {} must be non-negative", opts.time)));
    }
    let sys = doc.time_varying_system()?;
    let u0 = input_vector(opts, sys.input_dim())?;
    let y = nonaut_freq_response(&sys, opts.omega, &u0, opts.time)?;
    let op = "nonaut::nonaut_freq_response";
    report.put("response", vector_value(&y), op, None);
    report.put("input", vector_value(&u0), op, None);
    if doc.time_varying.is_none() {
        // steady state C(iω − A)⁻¹Bu₀ of the autonomous system
        let lti = doc.lti()?;
        match transfer_eval(&lti, C64::new(0.0, opts.omega)) {
            Ok(h) => {
                let steady: Vec<C64> = h.mul_vec(&u0).iter().map(|z| -z).collect();
                report.put("steady_state", vector_value(&steady), "transfer::transfer_eval", None);
            }
            Err(CoreError::InSpectrum { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(path) = &opts.csv {
        let rows = (0..=50)
            .map(|j| {
                let t = opts.time * j as f64 / 50.0;
                let y = nonaut_freq_response(&sys, opts.omega, &u0, t)?;
                let mut row = vec![t.to_string()];
                for z in &y {
                    row.push(z.re.to_string());
                    row.push(z.im.to_string());
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut header = vec!["t".to_string()];
        for i in 0..y.len() {
            header.push(format!("re_y{i}"));
            header.push(format!("im_y{i}"));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(path, &header, &rows)?;
    }
    Ok(())
}

/// Golden values of the two published examples.
pub const GOLDEN: [(&str, f64, f64); 4] = [
    ("rotation: sup_s ||(A - is)^-1|| in l1", 1.087_494_476, 1e-6),
    ("rotation: ||L|| on L1 with l1 norms", 1.262_434_309, 1e-6),
    ("saddle focus: int ||e^(tA) e1||_2 dt", 7.748_310_791, 1e-5),
    ("saddle focus: sup_s ||(A - is)^-1|| in l2", 2.732_492_852, 1e-6),
];

fn reproduce(opts: &Options, report: &mut Report) -> Result<()> {
    if opts.system.is_some() {
        return Err(CliError::Input("reproduce-paper uses built-in systems; drop --system".into()));
    }
    let rotation = ComplexMatrix::real(&[&[-1.0, 1.0], &[-1.0, -1.0]]);
    let saddle = ComplexMatrix::real(&[&[4.5, -2.5], &[12.5, -6.5]]);
    let rot1 = LtiSystem::unstructured(rotation, NormSpec::L1)?;
    let sad2 = LtiSystem::unstructured(saddle, NormSpec::L2)?;
    let e1 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let computed = [
        sup_transfer_real_axis(&rot1, 1e-10)?.value,
        io_norm_l1(&rot1, 1e-10)?.value,
        l1_witness_integral(&sad2, &e1, 1e-10)?.value,
        sup_transfer_real_axis(&sad2, 1e-10)?.value,
    ];
    let operations = [
        "transfer::sup_transfer_real_axis",
        "ionorm::io_norm_l1",
        "ionorm::l1_witness_integral",
        "transfer::sup_transfer_real_axis",
    ];
    let table: Vec<Value> = GOLDEN
        .iter()
        .zip(computed)
        .zip(operations)
        .map(|(((name, golden, tol), value), op)| {
            json!({
                "quantity": name,
                "golden": golden,
                "computed": num(value),
                "abs_diff": num((value - golden).abs()),
                "tolerance": tol,
                "within_tolerance": (value - golden).abs() <= *tol,
                "operation": op,
            })
        })
        .collect();
    // the L2 operator norm equals the transfer supremum in Hilbert spaces
    let l2 = io_norm_l2_hilbert(&sad2, 1e-10)?.value;
    report.put("table", Value::Array(table), "reproduce-paper", Some(1e-10));
    report.put("saddle_focus_l2_io_norm", num(l2), "ionorm::io_norm_l2_hilbert", Some(1e-10));
    if let Some(path) = &opts.csv {
        let rows: Vec<Vec<String>> = GOLDEN
            .iter()
            .zip(computed)
            .map(|((name, golden, tol), v)| {
                vec![name.to_string(), golden.to_string(), v.to_string(), (v - golden).abs().to_string(), tol.to_string()]
            })
            .collect();
        write_csv(path, &["quantity", "golden", "computed", "abs_diff", "tolerance"], &rows)?;
    }
    Ok(())
}
