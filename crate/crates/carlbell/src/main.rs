//! `carlbell` — evaluation, verification, and export CLI for the Bellman
//! function library.
//!
//! Output conventions: single results and verification reports are printed
//! as newline-delimited JSON with floats at 9 significant digits; tabular
//! exports are CSV (header row, LF, UTF-8). Exit codes: 0 success,
//! 1 verification failure, 2 usage or domain error.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use carlbell::cet_bellman::{eval_bmax, eval_bmin};
use carlbell::domain::{CetPoint, Exponent, JniParams, JniPoint, Window};
use carlbell::extremal_seq::{
    build_extremal, mixed_sum, self_similar_sum, MAX_EXPLICIT_DEPTH,
};
use carlbell::foliation::{extremal_line_point, recover_parameters, tangency_gap, upper_trace};
use carlbell::jni_bellman::eval_jni;
use carlbell::lp_bellman::eval_lp;
use carlbell::suites::{run_all, run_suite, RunReport};
use carlbell::{Error, Result};

#[derive(Parser)]
#[command(name = "carlbell", version, about = "Sharp Carleson-embedding Bellman functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one Bellman function at one point.
    Eval(EvalArgs),
    /// Run seeded verification suites.
    Verify(VerifyArgs),
    /// Build or summarize a near-extremal construction.
    Extremal(ExtremalArgs),
    /// Export the extremal-line foliation as CSV.
    Foliate(FoliateArgs),
    /// Evaluate a function on a Cartesian grid and export CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Bmax,
    Bmin,
    Jni,
    Lp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    Plus,
    Minus,
}

impl From<BranchArg> for carlbell::domain::Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Plus => carlbell::domain::Branch::Plus,
            BranchArg::Minus => carlbell::domain::Branch::Minus,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long)]
    x1: f64,
    #[arg(long)]
    x2: f64,
    #[arg(long)]
    x3: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    upper: f64,
    /// Integrability exponent for --which lp.
    #[arg(long)]
    p: Option<f64>,
    /// Branch for --which lp (bmax/bmin fix their own branch).
    #[arg(long, value_enum, default_value = "plus")]
    branch: BranchArg,
    /// BMO bound for --which jni.
    #[arg(long)]
    eps: Option<f64>,
    /// Family parameter for --which jni.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name or "all".
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 200)]
    samples: u64,
    /// Defaults to $CARLBELL_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExtremalArgs {
    #[arg(long)]
    x1: f64,
    #[arg(long)]
    x2: f64,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    depth: u32,
    /// Dump leaves and weights as CSV (requires an explicitly materializable depth).
    #[arg(long)]
    emit: Option<std::path::PathBuf>,
    /// Capacity level: mixes the lid extremizer along the extremal line.
    #[arg(long)]
    x3: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    upper: f64,
    /// Dyadic resolution of the mixing fraction.
    #[arg(long, default_value_t = 10)]
    mix_k: u32,
}

#[derive(Args)]
struct FoliateArgs {
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    upper: f64,
    #[arg(long)]
    xi1: f64,
    #[arg(long, value_enum, default_value = "plus")]
    branch: BranchArg,
    /// Number of line-parameter samples.
    #[arg(long)]
    count: u32,
    /// Capacity levels per line (1 emits only the upper lid).
    #[arg(long, default_value_t = 1)]
    x3_steps: u32,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    which: Which,
    /// Grid spec, e.g. "x1=0:1:11,x2=0.5:2:4,x3=1:1:1".
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    upper: f64,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum, default_value = "plus")]
    branch: BranchArg,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

/// Formats a float with 9 significant digits (printf `%.9g` semantics).
fn fmt9(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..9).contains(&exp) {
        let s = format!("{:.8e}", v);
        return s;
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, v);
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

fn report_json(r: &RunReport) -> String {
    format!(
        "{{\"suite\":\"{}\",\"samples\":{},\"failures\":{},\"worst_violation\":{},\"seed\":{},\"elapsed_ms\":{}}}",
        r.suite,
        r.samples,
        r.failures,
        fmt9(r.worst_violation),
        r.seed,
        r.elapsed_ms
    )
}

fn default_seed() -> u64 {
    std::env::var("CARLBELL_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    match args.which {
        Which::Jni => {
            let eps = args.eps.ok_or_else(|| {
                Error::InvalidParameter("--which jni requires --eps".into())
            })?;
            let delta = args.delta.unwrap_or(eps);
            let params = JniParams::new(eps, delta)?;
            let v = eval_jni(JniPoint::new(args.x1, args.x2), params)?;
            println!("{{\"value\":{},\"delta\":{}}}", fmt9(v), fmt9(delta));
        }
        Which::Bmax | Which::Bmin | Which::Lp => {
            let w = Window::new(args.m, args.upper)?;
            let x3 = args.x3.ok_or_else(|| {
                Error::InvalidParameter("this function requires --x3".into())
            })?;
            let pt = CetPoint::new(args.x1, args.x2, x3);
            let bv = match args.which {
                Which::Bmax => eval_bmax(pt, w)?,
                Which::Bmin => eval_bmin(pt, w)?,
                _ => {
                    let p = Exponent::new(args.p.unwrap_or(2.0))?;
                    eval_lp(pt, w, p, args.branch.into())?
                }
            };
            let a = if bv.a.is_finite() { fmt9(bv.a) } else { "null".into() };
            let branch = match bv.branch {
                carlbell::domain::Branch::Plus => "plus",
                carlbell::domain::Branch::Minus => "minus",
            };
            println!(
                "{{\"value\":{},\"a\":{},\"branch\":\"{}\"}}",
                fmt9(bv.value),
                a,
                branch
            );
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let seed = args.seed.unwrap_or_else(default_seed);
    let reports = if args.suite == "all" {
        run_all(args.samples, seed)?
    } else {
        vec![run_suite(&args.suite, args.samples, seed)?]
    };
    let mut ok = true;
    for r in &reports {
        println!("{}", report_json(r));
        ok &= r.failures == 0;
    }
    Ok(ok)
}

fn cmd_extremal(args: &ExtremalArgs) -> Result<()> {
    if args.depth < 2 * args.n {
        return Err(Error::DepthTooSmall { depth: args.depth, n: args.n });
    }
    let (sum, target, mean_err, second_err) = match args.x3 {
        None => {
            // Infinite-generation closed form; the depth flag gates feasibility
            // but truncation no longer perturbs the reported sum.
            let sum = self_similar_sum(args.x1, args.x2, args.n)?;
            let defect = (args.x2 - args.x1 * args.x1).max(0.0);
            let target = (args.x2.sqrt() + defect.sqrt()).powi(2);
            (sum, target, 0.0, 0.0)
        }
        Some(x3) => {
            let w = Window::new(args.m, args.upper)?;
            let pt = CetPoint::new(args.x1, args.x2, x3);
            let sum = mixed_sum(pt, w, args.n, args.mix_k)?;
            let target = eval_bmax(pt, w)?.value;
            // Moment error from the dyadic rounding of the mixing fraction.
            let theta = (x3 - w.lower) / w.width();
            let theta_k =
                (theta * (args.mix_k as f64).exp2()).round() * (-(args.mix_k as f64)).exp2();
            let (m_err, s_err) = if args.x1 == 0.0 {
                (0.0, 0.0)
            } else {
                let frame = recover_parameters(pt, w, carlbell::domain::Branch::Plus)?;
                (
                    (theta_k - theta).abs() * (frame.zeta1 - frame.xi1).abs(),
                    (theta_k - theta).abs() * (frame.zeta2 - frame.xi1 * frame.xi1).abs(),
                )
            };
            (sum, target, m_err, s_err)
        }
    };
    println!(
        "{{\"sum\":{},\"target\":{},\"ratio\":{},\"mean_err\":{},\"second_moment_err\":{}}}",
        fmt9(sum),
        fmt9(target),
        fmt9(sum / target),
        fmt9(mean_err),
        fmt9(second_err)
    );
    if let Some(path) = &args.emit {
        if args.depth > MAX_EXPLICIT_DEPTH {
            return Err(Error::DepthTooLarge(args.depth, MAX_EXPLICIT_DEPTH));
        }
        let (phi, alpha) = build_extremal(args.x1, args.x2, args.n, args.depth)?;
        let mut out = String::from("kind,depth,index,value,alpha_num,alpha_exp\n");
        for (i, v) in phi.values().iter().enumerate() {
            out.push_str(&format!("leaf,{},{},{},,\n", phi.depth(), i, fmt9(*v)));
        }
        for (node, exp) in alpha.iter() {
            out.push_str(&format!("alpha,{},{},,1,{}\n", node.depth, node.index, exp));
        }
        std::fs::write(path, out).map_err(|e| {
            Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))
        })?;
    }
    Ok(())
}

fn cmd_foliate(args: &FoliateArgs) -> Result<()> {
    let w = Window::new(args.m, args.upper)?;
    if args.count == 0 {
        return Err(Error::InvalidParameter("--count must be positive".into()));
    }
    let amax = 0.25 / w.width();
    let mut rows = String::from("a,x3,x1,x2,zeta1,zeta2,tangency_gap\n");
    for j in 0..args.count {
        let a = match args.branch {
            // Plus fan: evenly through [0, amax); Minus fan: geometric to the left.
            BranchArg::Plus => amax * j as f64 / args.count as f64,
            BranchArg::Minus => -((2.0f64).powi(j as i32) - 1.0) / w.width(),
        };
        let (zeta1, zeta2) = upper_trace(a, args.xi1, w)?;
        let gap = if a == 0.0 {
            0.0
        } else {
            let eta = 1.0 - 2.0 * a * w.width();
            tangency_gap(a, -args.xi1 / (a * eta), w)?
        };
        let levels: Vec<f64> = if args.x3_steps <= 1 {
            vec![w.upper]
        } else {
            (0..args.x3_steps)
                .map(|i| w.lower + w.width() * i as f64 / (args.x3_steps - 1) as f64)
                .collect()
        };
        for x3 in levels {
            let (x1, x2) = extremal_line_point(a, args.xi1, x3, w)?;
            rows.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt9(a),
                fmt9(x3),
                fmt9(x1),
                fmt9(x2),
                fmt9(zeta1),
                fmt9(zeta2),
                fmt9(gap)
            ));
        }
    }
    print!("{rows}");
    Ok(())
}

/// One axis of a sweep grid: `lo:hi:count`.
struct Axis {
    name: String,
    values: Vec<f64>,
}

fn parse_grid(spec: &str) -> Result<Vec<Axis>> {
    let mut axes = Vec::new();
    for part in spec.split(',') {
        let (name, range) = part.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("grid axis '{part}' is not name=lo:hi:count"))
        })?;
        let fields: Vec<&str> = range.split(':').collect();
        if fields.len() != 3 {
            return Err(Error::InvalidParameter(format!(
                "grid axis '{part}' is not name=lo:hi:count"
            )));
        }
        let lo: f64 = fields[0].parse().map_err(|_| {
            Error::InvalidParameter(format!("bad grid bound '{}'", fields[0]))
        })?;
        let hi: f64 = fields[1].parse().map_err(|_| {
            Error::InvalidParameter(format!("bad grid bound '{}'", fields[1]))
        })?;
        let count: usize = fields[2].parse().map_err(|_| {
            Error::InvalidParameter(format!("bad grid count '{}'", fields[2]))
        })?;
        if count == 0 {
            return Err(Error::InvalidParameter("grid count must be positive".into()));
        }
        let values = if count == 1 {
            vec![lo]
        } else {
            (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect()
        };
        axes.push(Axis { name: name.trim().to_string(), values });
    }
    Ok(axes)
}

fn axis<'a>(axes: &'a [Axis], name: &str) -> Result<&'a Axis> {
    axes.iter().find(|a| a.name == name).ok_or_else(|| {
        Error::InvalidParameter(format!("grid is missing the '{name}' axis"))
    })
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let axes = parse_grid(&args.grid)?;
    let mut out = String::new();
    if args.which == Which::Jni {
        let eps = args
            .eps
            .ok_or_else(|| Error::InvalidParameter("--which jni requires --eps".into()))?;
        let params = JniParams::new(eps, args.delta.unwrap_or(eps))?;
        let (ax1, ax2) = (axis(&axes, "x1")?, axis(&axes, "x2")?);
        out.push_str("x1,x2,value\n");
        for &x1 in &ax1.values {
            for &x2 in &ax2.values {
                let v = eval_jni(JniPoint::new(x1, x2), params).unwrap_or(f64::NAN);
                out.push_str(&format!("{},{},{}\n", fmt9(x1), fmt9(x2), fmt9(v)));
            }
        }
    } else {
        let w = Window::new(args.m, args.upper)?;
        let p = Exponent::new(args.p.unwrap_or(2.0))?;
        let (ax1, ax2, ax3) = (axis(&axes, "x1")?, axis(&axes, "x2")?, axis(&axes, "x3")?);
        out.push_str("x1,x2,x3,value\n");
        for &x1 in &ax1.values {
            for &x2 in &ax2.values {
                for &x3 in &ax3.values {
                    let pt = CetPoint::new(x1, x2, x3);
                    let v = match args.which {
                        Which::Bmax => eval_bmax(pt, w).map(|b| b.value),
                        Which::Bmin => eval_bmin(pt, w).map(|b| b.value),
                        Which::Lp => eval_lp(pt, w, p, args.branch.into()).map(|b| b.value),
                        Which::Jni => unreachable!(),
                    }
                    .unwrap_or(f64::NAN);
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt9(x1),
                        fmt9(x2),
                        fmt9(x3),
                        fmt9(v)
                    ));
                }
            }
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, out).map_err(|e| {
            Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))
        })?,
        None => {
            print!("{out}");
            std::io::stdout().flush().ok();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Eval(a) => cmd_eval(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
        Command::Extremal(a) => cmd_extremal(a).map(|_| true),
        Command::Foliate(a) => cmd_foliate(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
