mod inputs;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use splaylab::integrate::{integrate_flat, measure_decay_rate, measure_frequency, perturbed_initial_state, Perturbation};
use splaylab::oracle::attach_oracle_residual;
use splaylab::stability::{blocks_report, inertia_report, ks_traces, planar_report};
use splaylab::sweep::{write_boundary_csv, write_sweep_csv, run_sweep, BoundaryKind, SweepConfig};
use splaylab::verify;
use splaylab::{
    antipodal_pairs_family, collective_frequency, mean_field, model_jacobian, random_splay, twisted_state,
    Error as CoreError, SplayState, TraceSet, DEFAULT_TOL_SPLAY,
};

use inputs::{
    build_params, param_map, parse_axis, parse_fixed, read_json_file, read_state_file, splay_from_phases, usage,
    ModelKind, ParamArgs, Usage,
};

/// Splay states of coupled phase oscillators: construction, stability and sweeps.
#[derive(Parser, Debug)]
#[command(name = "splaylab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit a splay state as JSON
    Sample(SampleArgs),
    /// Linear stability report for one state, as JSON
    Stability(StabilityArgs),
    /// Evaluate the stability classifier on a parameter grid and write CSV
    Sweep(SweepArgs),
    /// Integrate the dynamics near a splay state; trajectory CSV plus measured rates
    Simulate(SimulateArgs),
    /// Run the analytic-vs-numeric verification suite
    Verify(VerifyArgs),
    /// Write analytic stability boundary curves as CSV
    Boundary(BoundaryArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Twisted,
    Random,
    Antipodal,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, value_enum, default_value = "ks")]
    model: ModelKind,
    /// Number of oscillators
    #[arg(long)]
    n: usize,
    /// Moment of the splay condition (default: the model's natural moment)
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, value_enum, default_value = "random")]
    method: Method,
    /// Twist of the equidistant state
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pair offsets for the antipodal-pairs family, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    deltas: Vec<f64>,
    #[command(flatten)]
    params: ParamArgs,
    /// Write to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[command(flatten)]
    params: ParamArgs,
    /// State JSON as written by `sample`
    #[arg(long)]
    state: Option<PathBuf>,
    /// Abstract point: tr(L) (with --tr-l2; no state needed)
    #[arg(long, allow_hyphen_values = true, requires = "tr_l2")]
    tr_l: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "tr_l")]
    tr_l2: Option<f64>,
    /// KS family point: R2 of the state (no state needed)
    #[arg(long, conflicts_with_all = ["state", "tr_l"])]
    r2: Option<f64>,
    /// Skip the numeric spectrum cross-check
    #[arg(long)]
    no_oracle: bool,
    /// Splay tolerance on R_m
    #[arg(long, default_value_t = DEFAULT_TOL_SPLAY)]
    tol: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep config; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// plain | inertia | ks | ks-inertia | adaptive
    #[arg(long)]
    model: Option<String>,
    /// Grid axis `name=min:max:count`; repeat for up to 3 axes (replaces config axes)
    #[arg(long = "axis", allow_hyphen_values = true)]
    axes: Vec<String>,
    /// Fixed parameter `name=value`; repeatable
    #[arg(long = "fixed", allow_hyphen_values = true)]
    fixed: Vec<String>,
    /// State source as JSON, e.g. {"kind":"random","n":6,"seed":1}
    #[arg(long)]
    state: Option<String>,
    /// Cross-check every point against the numeric spectrum
    #[arg(long)]
    oracle: bool,
    /// Output CSV (default: config output, else stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, env = "SPLAYLAB_JOBS")]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kick {
    /// Along the leading eigen-direction of the full Jacobian
    Dominant,
    /// Phases only, in the plane transverse to the splay manifold
    Transverse,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[command(flatten)]
    params: ParamArgs,
    /// State JSON; otherwise a random splay state with --n and --seed
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 50.0)]
    t_end: f64,
    /// Store every stride-th step
    #[arg(long, default_value_t = 10)]
    stride: usize,
    /// Size of the initial transverse deviation (0: start on the splay state)
    #[arg(long, default_value_t = 1e-4)]
    perturb: f64,
    #[arg(long, value_enum, default_value = "dominant")]
    kick: Kick,
    /// Trajectory CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL_SPLAY)]
    tol: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Reduced sample sizes
    #[arg(long)]
    quick: bool,
    /// Run only these checks (repeatable)
    #[arg(long)]
    only: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundaryChoice {
    /// Saddle and node/focus curves over trL
    Planar,
    /// Hopf surface of the inertia quartic over trL at fixed gamma
    InertiaGeneric,
    /// Hopf surface in (alpha, R2) for KS with inertia at fixed gamma, sigma
    KsInertia,
}

#[derive(Args, Debug)]
struct BoundaryArgs {
    #[arg(long, value_enum)]
    kind: BoundaryChoice,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Range start (default: -3 for trL curves, 0 for alpha)
    #[arg(long, allow_hyphen_values = true)]
    min: Option<f64>,
    /// Range end (default: 3, 0 or 2 pi)
    #[arg(long, allow_hyphen_values = true)]
    max: Option<f64>,
    #[arg(long, default_value_t = 401)]
    count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<Usage>()
            || c.is::<serde_json::Error>()
            || matches!(
                c.downcast_ref::<CoreError>(),
                Some(
                    CoreError::InvalidParameter { .. }
                        | CoreError::InvalidSweep(_)
                        | CoreError::InvalidMoment
                        | CoreError::TooFewOscillators(_)
                        | CoreError::NonFinitePhase { .. }
                        | CoreError::TwistOutOfRange { .. }
                        | CoreError::InvalidFamily { .. }
                        | CoreError::NotSplay { .. }
                        | CoreError::ShapeMismatch { .. }
                        | CoreError::Json(_)
                )
            )
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sample(a) => sample(a),
        Command::Stability(a) => stability(a),
        Command::Sweep(a) => sweep(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => Ok(run_verify(a)),
        Command::Boundary(a) => boundary(a),
    }
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sample(a: SampleArgs) -> Result<ExitCode> {
    let m = a.m.unwrap_or(a.model.natural_moment());
    let state = match a.method {
        Method::Twisted => {
            let s = twisted_state(a.n, a.k)?;
            if m == 1 {
                s
            } else {
                SplayState::new(s.theta, m, s.tol)?
            }
        }
        Method::Random => random_splay(a.n, m, a.seed)?,
        Method::Antipodal => {
            if a.deltas.is_empty() {
                return Err(usage("--method antipodal needs --deltas"));
            }
            let s = antipodal_pairs_family(a.n, &a.deltas)?;
            if m == 1 {
                s
            } else {
                SplayState::new(s.theta, m, s.tol)?
            }
        }
    };
    let model = param_map(Some(a.model), None, &a.params)?;
    let phases = state.theta.phases();
    let mut doc = json!({
        "phases": phases,
        "n": state.n(),
        "m": m,
        "r_m": mean_field(phases, m).norm(),
        "r1": mean_field(phases, 1).norm(),
        "r2": state.r2,
        "model": model,
    });
    if let Ok(params) = build_params(&model) {
        if let Ok(omega) = collective_frequency(&state.theta, &params, state.tol.max(DEFAULT_TOL_SPLAY)) {
            doc["omega_collective"] = json!(omega);
        }
    }
    let mut w = output(a.out.as_ref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn stability(a: StabilityArgs) -> Result<ExitCode> {
    let file = a.state.as_deref().map(read_state_file).transpose()?;
    let map = param_map(a.model, file.as_ref().and_then(|f| f.model.as_ref()), &a.params)?;
    let report = if let Some(file) = file {
        let params = build_params(&map)?;
        let m = params.natural_moment();
        if file.m.is_some_and(|fm| fm != m) {
            eprintln!("note: state file declares m = {}, using the model's m = {m}", file.m.unwrap_or(0));
        }
        let state = splay_from_phases(file.phases, m, a.tol)?;
        let blocks = model_jacobian(&state.theta, &params, state.tol)?;
        let report = blocks_report(&blocks)?;
        if a.no_oracle {
            report
        } else {
            attach_oracle_residual(report, &blocks)?
        }
    } else {
        let kind = map.get("kind").and_then(Value::as_str).unwrap_or("");
        let get = |k: &str| map.get(k).and_then(Value::as_f64);
        let sigma = get("sigma").unwrap_or(1.0);
        let traces = match (a.tr_l, a.tr_l2, a.r2) {
            (Some(t1), Some(t2), _) => TraceSet::plain(t1, t2),
            (_, _, Some(r2)) => {
                let alpha = get("alpha").ok_or_else(|| usage("--r2 needs --alpha"))?;
                if !(0.0..=1.0).contains(&r2) {
                    return Err(usage(format!("--r2 {r2} outside [0, 1]")));
                }
                let coupling = match kind {
                    "inertia" => sigma / get("m_inertia").unwrap_or(1.0),
                    _ => sigma,
                };
                ks_traces(coupling, alpha, r2)
            }
            _ => return Err(usage("give --state, --tr-l with --tr-l2, or --r2")),
        };
        match kind {
            "ks" => planar_report(&traces),
            "inertia" => {
                let gamma = get("gamma").ok_or_else(|| usage("inertia needs --gamma"))?;
                let gamma = gamma / get("m_inertia").unwrap_or(1.0);
                inertia_report(gamma, &traces)?
            }
            "adaptive" => return Err(usage("the adaptive model needs a concrete --state")),
            _ => return Err(usage("no model given")),
        }
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let mut doc = match &a.config {
        Some(p) => read_json_file(p)?,
        None => json!({}),
    };
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| usage("sweep config must be a JSON object"))?;
    if let Some(m) = &a.model {
        obj.insert("model".into(), json!(m));
    }
    if !a.axes.is_empty() {
        let axes = a.axes.iter().map(|s| parse_axis(s)).collect::<Result<Vec<_>>>()?;
        obj.insert("axes".into(), Value::Array(axes));
    }
    if !a.fixed.is_empty() {
        let fixed = obj
            .entry("fixed")
            .or_insert_with(|| json!({}))
            .as_object_mut()
            .ok_or_else(|| usage("'fixed' must be an object"))?;
        for s in &a.fixed {
            let (k, v) = parse_fixed(s)?;
            fixed.insert(k, json!(v));
        }
    }
    if let Some(s) = &a.state {
        let v: Value = serde_json::from_str(s).map_err(|e| usage(format!("--state: {e}")))?;
        obj.insert("state".into(), v);
    }
    if a.oracle {
        obj.insert("oracle".into(), json!(true));
    }
    if let Some(out) = &a.out {
        obj.insert("output".into(), json!(out));
    }
    if let Some(j) = a.jobs {
        obj.insert("jobs".into(), json!(j));
    }
    let config: SweepConfig = serde_json::from_value(doc).map_err(|e| usage(format!("sweep config: {e}")))?;
    config.validate()?;

    let rows = run_sweep(&config)?;
    let mut w = output(config.output.as_ref())?;
    write_sweep_csv(&config, &rows, &mut w)?;
    w.flush()?;

    let disagreements = rows.iter().filter(|r| r.agree == Some(false)).count();
    if disagreements > 0 {
        eprintln!("{disagreements} of {} points disagree with the numeric spectrum", rows.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let file = a.state.as_deref().map(read_state_file).transpose()?;
    let map = param_map(a.model, file.as_ref().and_then(|f| f.model.as_ref()), &a.params)?;
    let params = build_params(&map)?;
    let m = params.natural_moment();
    let state = match file {
        Some(f) => splay_from_phases(f.phases, m, a.tol)?,
        None => random_splay(a.n, m, a.seed)?,
    };
    let blocks = model_jacobian(&state.theta, &params, state.tol)?;
    let analytic = blocks_report(&blocks)?;
    let omega_collective = collective_frequency(&state.theta, &params, state.tol)?;

    let x0 = if a.perturb > 0.0 {
        let kind = match a.kick {
            Kick::Dominant => Perturbation::DominantMode,
            Kick::Transverse => Perturbation::Transverse { mix: 0.3 },
        };
        perturbed_initial_state(&state, &params, m, a.perturb, kind)?
    } else {
        splaylab::model::splay_dynamic_state(&state.theta, &params, state.tol)?.to_vector()
    };
    let traj = integrate_flat(&params, state.n(), x0, a.dt, a.t_end, a.stride)?;
    if let Some(p) = &a.out {
        let mut w = output(Some(p))?;
        traj.write_csv(&mut w)?;
        w.flush()?;
    }
    let omega = measure_frequency(&traj)?;
    let decay = if a.perturb > 0.0 {
        match measure_decay_rate(&traj, &state, m) {
            Ok(r) => Some(r),
            Err(e) => {
                eprintln!("note: no decay rate: {e}");
                None
            }
        }
    } else {
        None
    };
    let summary = json!({
        "model": params,
        "n": state.n(),
        "samples": traj.len(),
        "omega_measured": omega,
        "omega_collective": omega_collective,
        "decay_rate_measured": decay,
        "analytic_max_re": analytic.max_real_part,
        "class": analytic.classification.as_str(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

fn run_verify(a: VerifyArgs) -> ExitCode {
    let ids: Vec<u32> = if a.only.is_empty() {
        verify::CHECKS.iter().map(|(id, _)| *id).collect()
    } else {
        a.only
    };
    let mut all = true;
    for id in ids {
        let o = verify::run_check(id, a.quick);
        all &= o.passed;
        println!(
            "check {}: {} ({}) {} [{:.1}s]",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.title,
            o.detail,
            o.seconds
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn boundary(a: BoundaryArgs) -> Result<ExitCode> {
    let need_gamma = || a.gamma.ok_or_else(|| usage("this boundary needs --gamma"));
    let (kind, min, max) = match a.kind {
        BoundaryChoice::Planar => (BoundaryKind::Planar, -3.0, 3.0),
        BoundaryChoice::InertiaGeneric => (BoundaryKind::InertiaGeneric { gamma: need_gamma()? }, -3.0, 0.0),
        BoundaryChoice::KsInertia => (
            BoundaryKind::KsInertia {
                gamma: need_gamma()?,
                sigma: a.sigma,
            },
            0.0,
            std::f64::consts::TAU,
        ),
    };
    let mut w = output(a.out.as_ref())?;
    let rows = write_boundary_csv(kind, a.min.unwrap_or(min), a.max.unwrap_or(max), a.count, &mut w)?;
    w.flush()?;
    eprintln!("{rows} boundary points");
    Ok(ExitCode::SUCCESS)
}
