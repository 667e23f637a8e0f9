//! Command-line front end: argument types, subcommand runners and output
//! formatting. `main.rs` only maps errors to exit codes.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use copoly_core::oracle::{excursion_stats, free_energy_estimate, sample_paths};
use copoly_core::phase::{small_coupling_bracket, CRITICAL_BAND};
use copoly_core::{
    classify, evaluate, m_big_omega, m_omega, mean_excursion, parse_sequence, solve_b_tilde,
    sweep_curve, z_hat, Copolymer, PhasePoint,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "COPOLY_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) | CliError::Failed(_) => 3,
        }
    }
}

impl From<copoly_core::Error> for CliError {
    fn from(e: copoly_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "copoly", version, about = "Periodic copolymers at a selective interface")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Charge sequence over one period (e.g. "++--"), or a file containing it
    #[arg(long)]
    pub omega: String,
    /// Write output here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Largest N accepted by the finite-N oracle
    #[arg(long, default_value_t = copoly_core::oracle::DEFAULT_MAX_N)]
    pub n_max_oracle: usize,
}

#[derive(Debug, Clone, Args)]
pub struct Point {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub h: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free energy, phase and mean excursion length at one point
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
    },
    /// Critical curve h_c(λ) on a uniform λ grid
    Curve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Phase and excess free energy on a (λ, h) grid
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        lambda_steps: usize,
        #[arg(long, default_value_t = 0.0)]
        h_min: f64,
        #[arg(long, default_value_t = 1.0)]
        h_max: f64,
        #[arg(long)]
        h_steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Small- and large-coupling constants
    Asym {
        #[command(flatten)]
        common: Common,
    },
    /// Run the identity and cross-oracle checks
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Extrapolated finite-N free energy against the analytic value
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        /// Comma-separated increasing chain lengths
        #[arg(long, value_delimiter = ',', default_values_t = [4000usize, 10000, 20000])]
        n_list: Vec<usize>,
    },
    /// Exact path samples and their excursion statistics
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Levels L for the fraction of sites with S_x > L
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 10])]
        levels: Vec<u64>,
        /// Also write the paths, one per line, to this file
        #[arg(long)]
        dump_paths: Option<PathBuf>,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Eval { common, .. }
            | Command::Curve { common, .. }
            | Command::Sweep { common, .. }
            | Command::Asym { common }
            | Command::Verify { common }
            | Command::Oracle { common, .. }
            | Command::Sample { common, .. } => common,
        }
    }
}

/// `%.12g`-style rendering, independent of locale.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// JSON number rounded to 12 significant digits; `null` if not finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{:.11e}", x).parse().expect("round trip");
    json!(rounded)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

/// Reads the sequence from a file if `omega` names one, else parses it.
pub fn load_model(omega: &str) -> CliResult<Copolymer> {
    let text = if Path::new(omega).is_file() {
        std::fs::read_to_string(omega)
            .map_err(|e| CliError::Input(format!("cannot read {omega}: {e}")))?
    } else {
        omega.to_string()
    };
    Ok(Copolymer::new(parse_sequence(&text)?))
}

fn point(p: &Point) -> CliResult<PhasePoint> {
    Ok(PhasePoint::new(p.lambda, p.h)?)
}

fn grid(lo: f64, hi: f64, steps: usize, name: &str) -> CliResult<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0) {
        return Err(CliError::Input(format!("{name} range must be finite and >= 0")));
    }
    if steps == 0 {
        return Err(CliError::Input(format!("{name} steps must be >= 1")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    if hi <= lo {
        return Err(CliError::Input(format!("{name} max must exceed min")));
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Runs one subcommand and returns the text it prints.
pub fn run(cli: &Cli) -> CliResult<String> {
    let common = cli.command.common();
    let model = load_model(&common.omega)?;
    match &cli.command {
        Command::Eval { point: pt, .. } => cmd_eval(&model, point(pt)?),
        Command::Curve {
            lambda_min,
            lambda_max,
            steps,
            format,
            ..
        } => cmd_curve(&model, &grid(*lambda_min, *lambda_max, *steps, "lambda")?, *format),
        Command::Sweep {
            lambda_min,
            lambda_max,
            lambda_steps,
            h_min,
            h_max,
            h_steps,
            format,
            ..
        } => cmd_sweep(
            &model,
            &grid(*lambda_min, *lambda_max, *lambda_steps, "lambda")?,
            &grid(*h_min, *h_max, *h_steps, "h")?,
            *format,
        ),
        Command::Asym { .. } => cmd_asym(&model),
        Command::Verify { common } => cmd_verify(&model, common.n_max_oracle),
        Command::Oracle { point: pt, n_list, common } => {
            cmd_oracle(&model, point(pt)?, n_list, common.n_max_oracle)
        }
        Command::Sample {
            point: pt,
            n,
            count,
            seed,
            levels,
            dump_paths,
            common,
        } => cmd_sample(
            &model,
            point(pt)?,
            SampleArgs {
                n: *n,
                count: *count,
                seed: *seed,
                levels,
                dump_paths: dump_paths.as_deref(),
                max_n: common.n_max_oracle,
            },
        ),
    }
}

pub fn cmd_eval(model: &Copolymer, p: PhasePoint) -> CliResult<String> {
    let e = evaluate(model, p)?;
    Ok(pretty(&json!({
        "lambda": num(e.lambda),
        "h": num(e.h),
        "z_at_zero": num(e.z_at_zero),
        "b_tilde": num(e.b_tilde),
        "free_energy": num(e.free_energy),
        "phase": e.phase.as_str(),
        "region": e.phase.region(),
        "mean_excursion": opt_num(e.mean_excursion),
    })))
}

pub fn cmd_curve(model: &Copolymer, lambdas: &[f64], format: Format) -> CliResult<String> {
    let sweep = sweep_curve(model, lambdas)?;
    Ok(match format {
        Format::Csv => {
            let mut out = String::from("lambda,h_c,residual\n");
            for c in &sweep.points {
                out.push_str(&format!("{},{},{}\n", fmt_num(c.lambda), fmt_num(c.h_c), fmt_num(c.residual)));
            }
            out
        }
        Format::Json => pretty(&json!({
            "points": sweep.points.iter().map(|c| json!({
                "lambda": num(c.lambda),
                "h_c": num(c.h_c),
                "residual": num(c.residual),
            })).collect::<Vec<_>>(),
            "slopes": sweep.slopes.iter().map(|s| json!({
                "lambda_lo": num(s.lambda_lo),
                "lambda_hi": num(s.lambda_hi),
                "ratio": num(s.ratio),
                "bound": num(s.bound),
            })).collect::<Vec<_>>(),
        })),
    })
}

pub fn cmd_sweep(model: &Copolymer, lambdas: &[f64], hs: &[f64], format: Format) -> CliResult<String> {
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| hs.iter().map(move |&h| (l, h)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(l, h)| {
            let p = PhasePoint::new(l, h)?;
            let fe = solve_b_tilde(model, p)?;
            Ok((l, h, classify(model, p)?, fe.b_tilde))
        })
        .collect::<Result<Vec<_>, copoly_core::Error>>()?;
    Ok(match format {
        Format::Csv => {
            let mut out = String::from("lambda,h,phase,b_tilde\n");
            for (l, h, phase, b) in rows {
                out.push_str(&format!("{},{},{},{}\n", fmt_num(l), fmt_num(h), phase, fmt_num(b)));
            }
            out
        }
        Format::Json => pretty(&Value::Array(
            rows.into_iter()
                .map(|(l, h, phase, b)| {
                    json!({"lambda": num(l), "h": num(h), "phase": phase.as_str(), "b_tilde": num(b)})
                })
                .collect(),
        )),
    })
}

pub fn cmd_asym(model: &Copolymer) -> CliResult<String> {
    let z0 = z_hat(model, 0.0)?;
    Ok(pretty(&json!({
        "T_omega": model.period(),
        "xi_star": model.xi().xi_star(),
        "m_omega": num(m_omega(model)),
        "M_omega": num(m_big_omega(model)?),
        "z_hat_at_zero": num(z0),
        "z_hat_at_zero_is_half": (z0 - 0.5).abs() <= 1e-12,
    })))
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: Map<String, Value>,
}

fn check(name: &'static str, pass: bool, detail: Value) -> Check {
    Check {
        name,
        pass,
        detail: detail.as_object().cloned().unwrap_or_default(),
    }
}

pub fn cmd_verify(model: &Copolymer, max_n: usize) -> CliResult<String> {
    let mut checks = Vec::new();

    let p0 = PhasePoint::new(0.0, 0.0)?;
    let worst = [0.01, 0.1, 0.5, 1.0, 5.0]
        .iter()
        .map(|&b| {
            let s = (-2.0f64 * b).exp();
            Ok((model.z(b, p0)? - (1.0 - (1.0 - s).sqrt())).abs())
        })
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(check("closed_form_eigenvalue", worst <= 1e-12, json!({"max_error": num(worst)})));

    let p = PhasePoint::new(0.7, 0.1)?;
    let mut worst = 0.0f64;
    for b in [0.1, 0.5, 1.0] {
        let step = 1e-5;
        let fd = (model.z(b + step, p)?.ln() - model.z(b - step, p)?.ln()) / (2.0 * step);
        let f = model.mean_length(b, p)?;
        worst = worst.max((fd + f).abs() / f);
    }
    checks.push(check("derivative_identity", worst <= 1e-6, json!({"max_relative_error": num(worst)})));

    let b = 0.5;
    let (mu, removed) = model.mu_b(b, p, 10_000)?.truncated();
    let q = model.functional_q(&mu, p)?;
    let rhs = b * mean_excursion(&mu)? + model.z(b, p)?.ln();
    checks.push(check(
        "variational_identity",
        (q - rhs).abs() <= 1e-8,
        json!({"q": num(q), "rhs": num(rhs), "truncated_mass": num(removed)}),
    ));

    let bracket = small_coupling_bracket(model, m_omega(model)).abs();
    checks.push(check("small_coupling_bracket", bracket < 1e-10, json!({"value": num(bracket)})));

    let grid: Vec<f64> = (1..=12).map(|i| 0.4 * i as f64).collect();
    let sweep = sweep_curve(model, &grid)?;
    let monotone = sweep.points.windows(2).all(|w| w[1].h_c >= w[0].h_c)
        && sweep.points.iter().all(|c| (0.0..1.0).contains(&c.h_c));
    let slopes = sweep.slopes.iter().all(|s| s.ratio <= s.bound + 1e-9);
    checks.push(check("critical_curve_monotone", monotone && slopes, json!({})));

    let n_list = [4000usize, 10_000, 20_000];
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (l, h) in [(1.0, 0.0), (1.0, 1.2)] {
        let p = PhasePoint::new(l, h)?;
        let fe = solve_b_tilde(model, p)?;
        let est = free_energy_estimate(model.sequence(), p, &n_list, max_n)?;
        let diff = (est.f_est - fe.f).abs();
        worst = worst.max(diff);
        detail.push(json!({"lambda": num(l), "h": num(h), "analytic": num(fe.f), "oracle": num(est.f_est)}));
    }
    checks.push(check("oracle_agreement", worst <= 5e-3, json!({"max_difference": num(worst), "points": detail})));

    let all = checks.iter().all(|c| c.pass);
    let report = json!({
        "all_passed": all,
        "checks": checks.iter().map(|c| {
            let mut m = Map::new();
            m.insert("name".into(), json!(c.name));
            m.insert("pass".into(), json!(c.pass));
            m.extend(c.detail.clone());
            Value::Object(m)
        }).collect::<Vec<_>>(),
    });
    let text = pretty(&report);
    if all {
        Ok(text)
    } else {
        Err(CliError::Failed(text))
    }
}

pub fn cmd_oracle(model: &Copolymer, p: PhasePoint, n_list: &[usize], max_n: usize) -> CliResult<String> {
    let est = free_energy_estimate(model.sequence(), p, n_list, max_n)?;
    let fe = solve_b_tilde(model, p)?;
    Ok(pretty(&json!({
        "lambda": num(p.lambda),
        "h": num(p.h),
        "fit_model": "f + c log(N)/N",
        "f_est": num(est.f_est),
        "err_est": num(est.err_est),
        "slope": num(est.slope),
        "points": est.points.iter().map(|&(n, f)| json!({"n": n, "f_n": num(f)})).collect::<Vec<_>>(),
        "analytic_f": num(fe.f),
        "difference": num(est.f_est - fe.f),
    })))
}

pub struct SampleArgs<'a> {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub levels: &'a [u64],
    pub dump_paths: Option<&'a Path>,
    pub max_n: usize,
}

pub fn cmd_sample(model: &Copolymer, p: PhasePoint, args: SampleArgs<'_>) -> CliResult<String> {
    let paths = sample_paths(model.sequence(), p, args.n, args.count, args.seed, args.max_n)?;
    if let Some(file) = args.dump_paths {
        let body: String = paths.iter().map(|s| s.render() + "\n").collect();
        std::fs::write(file, body)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", file.display())))?;
    }
    let stats = excursion_stats(&paths, model.period(), args.levels)?;
    let fe = solve_b_tilde(model, p)?;
    let predicted = if fe.b_tilde > 0.0 {
        Some(model.mean_length(fe.b_tilde, p)?)
    } else {
        None
    };
    let z_margin = (fe.z_at_zero - 1.0).abs() > CRITICAL_BAND;
    Ok(pretty(&json!({
        "lambda": num(p.lambda),
        "h": num(p.h),
        "n": args.n,
        "count": args.count,
        "seed": args.seed,
        "ell_n_total": stats.ell_n,
        "ell_n_mean": num(stats.ell_n as f64 / args.count as f64),
        "mean_excursion": num(stats.mean_excursion),
        "predicted_mean_excursion": opt_num(predicted),
        "phase_certified": z_margin,
        "frac_above": stats.frac_above.iter().map(|(l, f)| (l.to_string(), num(*f))).collect::<Map<_, _>>(),
    })))
}
