//! `ssheat` — reproducible batch runs of the radial self-similar profile
//! pipelines: single profiles with tail offsets and decay certificates,
//! branch scans of `L(α)`, convergence tables of the power approximation,
//! and the blow-up/global dichotomy experiment.
//!
//! Every command resolves its configuration (flags override an optional
//! flat key=value config file), writes its outputs into `--out`, and drops
//! a `manifest.json` from which the run can be reproduced. With
//! `--reproducible` all outputs are byte-stable across reruns.

mod manifest;
mod svg;

use clap::{Args, Parser, Subcommand};
use manifest::RunManifest;
use ssheat_core::approx::{convergence_report, membership_of_solved, report_to_csv};
use ssheat_core::asymptotics::{certify_decay, estimate_l_integral, estimate_l_tail};
use ssheat_core::ode::{solve_profile, IntegratorConfig};
use ssheat_core::pde::{
    dichotomy_experiment_full, dichotomy_to_csv, Classification, DichotomyTarget, SimConfig,
    SimError, SpatialOrder,
};
use ssheat_core::problem::{Nonlinearity, ProblemParams};
use ssheat_core::shooting::{diagram_to_csv, scan_alpha, solve_s_l, ShootingError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "ssheat", version, about = "Radial self-similar profiles of semilinear heat equations")]
struct Cli {
    /// Output directory (default: $SSHEAT_OUT or the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Suppress wall-clock metadata so reruns are byte-identical.
    #[arg(long, global = true, default_value_t = false)]
    reproducible: bool,
    /// Flat key=value config file; flags override file entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one radial profile and report tail offsets and decay bounds.
    Profile(ProfileArgs),
    /// Scan L(α) over an α window and optionally solve L(α) = L.
    Scan(ScanArgs),
    /// Convergence of the power approximation toward the exponential profile.
    Converge(ConvergeArgs),
    /// Classify the flow from perturbed non-minimal profiles.
    Dichotomy(DichotomyArgs),
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long = "N")]
    n: u32,
    /// exp | approx:<n> | power:<p>
    #[arg(long)]
    nonlinearity: String,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 50.0)]
    r_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    /// Emit an SVG plot of the profile.
    #[arg(long, default_value_t = false)]
    svg: bool,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long = "N")]
    n: u32,
    /// a:b:count
    #[arg(long, allow_hyphen_values = true)]
    alpha_range: String,
    /// Also solve L(α) = value and write the root profiles.
    #[arg(long = "solve-L", allow_hyphen_values = true)]
    solve_l: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    r_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    root_tol: f64,
    #[arg(long, default_value_t = false)]
    svg: bool,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long = "N")]
    n: u32,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Comma-separated approximation orders.
    #[arg(long, value_delimiter = ',')]
    ns: Vec<u32>,
    #[arg(long, default_value_t = 5.0)]
    r0: f64,
    #[arg(long, default_value_t = false)]
    svg: bool,
}

#[derive(Args, Debug)]
struct DichotomyArgs {
    #[arg(long = "N")]
    n: u32,
    /// Explicit tail offset of the branch pair.
    #[arg(long = "L", allow_hyphen_values = true)]
    l: Option<f64>,
    /// Pick the offset from the scanned branch structure.
    #[arg(long, default_value_t = false)]
    auto_l: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 60.0)]
    grid_radius: f64,
    #[arg(long, default_value_t = 8192)]
    grid_points: usize,
    #[arg(long, default_value_t = 80.0)]
    s_max: f64,
    #[arg(long, default_value_t = false)]
    svg: bool,
}

/// Error taxonomy mapped to exit codes: validation 2, solver 3, missing
/// non-minimal branch 4.
enum AppError {
    Validation(String),
    Solver(String),
    NoBranch(String),
}

impl AppError {
    fn kind(&self) -> &'static str {
        match self {
            AppError::Validation(_) => "validation",
            AppError::Solver(_) => "solver",
            AppError::NoBranch(_) => "no-branch",
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Validation(m) | AppError::Solver(m) | AppError::NoBranch(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            AppError::Validation(_) => 2,
            AppError::Solver(_) => 3,
            AppError::NoBranch(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    let argv = merge_config_args();
    let cli = Cli::parse_from(&argv);
    if cli.jobs > 0 {
        // A second invocation in-process would fail; the result does not
        // depend on the pool size, so ignore that case.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.message() }
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Splice config-file entries into the argument list as trailing flags;
/// explicit flags win because clap sees them first and the injected copies
/// are skipped when the flag is already present.
fn merge_config_args() -> Vec<String> {
    let mut argv: Vec<String> = std::env::args().collect();
    let config_path = argv
        .iter()
        .position(|a| a == "--config")
        .and_then(|i| argv.get(i + 1).cloned())
        .or_else(|| {
            argv.iter()
                .find(|a| a.starts_with("--config="))
                .map(|a| a["--config=".len()..].to_string())
        });
    let Some(path) = config_path else { return argv };
    let Ok(text) = std::fs::read_to_string(&path) else { return argv };
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else { continue };
        let flag = format!("--{}", key.trim());
        let present = argv.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}=")));
        if !present {
            argv.push(flag);
            argv.push(value.trim().to_string());
        }
    }
    argv
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("SSHEAT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| AppError::Validation(format!("cannot create output dir: {e}")))?;

    let started = std::time::Instant::now();
    let mut manifest = RunManifest::new(command_name(&cli.command), cli.reproducible);
    manifest.record_config([("jobs", cli.jobs.to_string())]);
    if let Some(cfg) = &cli.config {
        manifest.hash_input("config_file", cfg);
    }

    let result = match &cli.command {
        Command::Profile(args) => cmd_profile(args, &out_dir, &mut manifest),
        Command::Scan(args) => cmd_scan(args, &out_dir, &mut manifest),
        Command::Converge(args) => cmd_converge(args, &out_dir, &mut manifest),
        Command::Dichotomy(args) => cmd_dichotomy(args, &out_dir, &mut manifest),
    };
    result?;

    manifest.wall_clock_s = if cli.reproducible { 0.0 } else { started.elapsed().as_secs_f64() };
    manifest
        .write(&out_dir)
        .map_err(|e| AppError::Solver(format!("cannot write manifest: {e}")))?;
    Ok(())
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Profile(_) => "profile",
        Command::Scan(_) => "scan",
        Command::Converge(_) => "converge",
        Command::Dichotomy(_) => "dichotomy",
    }
}

fn parse_nonlinearity(text: &str) -> Result<Nonlinearity, AppError> {
    if text == "exp" {
        return Ok(Nonlinearity::Exponential);
    }
    if let Some(n) = text.strip_prefix("approx:") {
        let n: u32 = n
            .parse()
            .map_err(|_| AppError::Validation(format!("bad approximation order in '{text}'")))?;
        return Ok(Nonlinearity::PowerApprox { n });
    }
    if let Some(p) = text.strip_prefix("power:") {
        let p: f64 = p
            .parse()
            .map_err(|_| AppError::Validation(format!("bad power exponent in '{text}'")))?;
        return Ok(Nonlinearity::Power { p });
    }
    Err(AppError::Validation(format!(
        "nonlinearity '{text}' not recognized; use exp | approx:<n> | power:<p>"
    )))
}

fn parse_alpha_range(text: &str) -> Result<(f64, f64, usize), AppError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(AppError::Validation(format!("alpha range '{text}' is not a:b:count")));
    }
    let parse = |s: &str| -> Result<f64, AppError> {
        s.parse().map_err(|_| AppError::Validation(format!("bad number '{s}' in alpha range")))
    };
    let count: usize = parts[2]
        .parse()
        .map_err(|_| AppError::Validation(format!("bad count '{}' in alpha range", parts[2])))?;
    Ok((parse(parts[0])?, parse(parts[1])?, count))
}

fn write_output(
    dir: &Path,
    name: &str,
    content: &str,
    manifest: &mut RunManifest,
) -> Result<(), AppError> {
    std::fs::write(dir.join(name), content)
        .map_err(|e| AppError::Solver(format!("cannot write {name}: {e}")))?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, AppError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| AppError::Solver(format!("serialization failed: {e}")))
}

fn cmd_profile(args: &ProfileArgs, out: &Path, manifest: &mut RunManifest) -> Result<(), AppError> {
    let nonlinearity = parse_nonlinearity(&args.nonlinearity)?;
    let params = ProblemParams::new(args.n, nonlinearity)
        .map_err(|e| AppError::Validation(e.to_string()))?;
    let cfg = IntegratorConfig {
        r_max: args.r_max,
        rel_tol: args.rel_tol,
        abs_tol: args.abs_tol,
        ..IntegratorConfig::default()
    };
    cfg.validate().map_err(|e| AppError::Validation(e.to_string()))?;
    manifest.record_config([
        ("N", args.n.to_string()),
        ("nonlinearity", args.nonlinearity.clone()),
        ("alpha", fmt(args.alpha)),
        ("r_max", fmt(args.r_max)),
        ("rel_tol", fmt(args.rel_tol)),
        ("abs_tol", fmt(args.abs_tol)),
        ("svg", args.svg.to_string()),
    ]);

    let solved =
        solve_profile(&params, args.alpha, &cfg).map_err(|e| AppError::Solver(e.to_string()))?;
    write_output(out, "profile.csv", &solved.profile.to_csv(), manifest)?;

    let tail = estimate_l_tail(&solved);
    let integral = estimate_l_integral(&solved).ok();
    let membership = match nonlinearity {
        Nonlinearity::PowerApprox { n } => Some(
            membership_of_solved(&solved, n).map_err(|e| AppError::Solver(e.to_string()))?,
        ),
        _ => None,
    };
    let estimates = serde_json::json!({
        "alpha": args.alpha,
        "status": solved.status.label(),
        "monotone_nonincreasing": solved.monotone_nonincreasing,
        "l_tail": tail.as_ref().ok().map(|t| t.l),
        "fit_error": tail.as_ref().ok().map(|t| t.fit_error),
        "l_integral": integral,
        "consistency": match (&tail, integral) {
            (Ok(t), Some(i)) => Some((t.l - i).abs()),
            _ => None,
        },
        "membership": membership,
    });
    write_output(out, "estimates.json", &to_json(&estimates)?, manifest)?;

    match certify_decay(&solved) {
        Ok(report) => {
            write_output(out, "decay.json", &to_json(&report)?, manifest)?;
        }
        Err(e) => {
            let placeholder = serde_json::json!({ "unavailable": e.to_string() });
            write_output(out, "decay.json", &to_json(&placeholder)?, manifest)?;
        }
    }

    if args.svg {
        let pts: Vec<(f64, f64)> =
            solved.profile.r.iter().cloned().zip(solved.profile.value.iter().cloned()).collect();
        let plot = svg::Plot {
            title: "radial profile",
            x_label: "r",
            y_label: "value",
            series: vec![("profile", pts)],
            marks: vec![],
            log_log: false,
        };
        write_output(out, "profile.svg", &svg::render(&plot), manifest)?;
    }
    Ok(())
}

fn cmd_scan(args: &ScanArgs, out: &Path, manifest: &mut RunManifest) -> Result<(), AppError> {
    let (lo, hi, count) = parse_alpha_range(&args.alpha_range)?;
    let params = ProblemParams::exponential(args.n)
        .map_err(|e| AppError::Validation(e.to_string()))?;
    params.require_branch_dimension().map_err(|e| AppError::Validation(e.to_string()))?;
    let cfg = IntegratorConfig { r_max: args.r_max, ..IntegratorConfig::default() };
    manifest.record_config([
        ("N", args.n.to_string()),
        ("alpha_range", args.alpha_range.clone()),
        ("r_max", fmt(args.r_max)),
        ("root_tol", fmt(args.root_tol)),
        (
            "solve_L",
            args.solve_l.map(fmt).unwrap_or_default(),
        ),
        ("svg", args.svg.to_string()),
    ]);

    let diagram = scan_alpha(&params, lo, hi, count, &cfg).map_err(map_shoot)?;
    write_output(out, "scan.csv", &diagram_to_csv(&diagram), manifest)?;
    write_output(out, "scan.json", &to_json(&diagram)?, manifest)?;
    let crit = serde_json::json!({ "critical_points": diagram.critical_points });
    write_output(out, "critical_points.json", &to_json(&crit)?, manifest)?;

    if let Some(l_target) = args.solve_l {
        let roots = solve_s_l(&diagram, l_target, args.root_tol).map_err(map_shoot)?;
        let mut profiles = Vec::new();
        for (k, &alpha) in roots.iter().enumerate() {
            let solved = solve_profile(&params, alpha, &cfg)
                .map_err(|e| AppError::Solver(e.to_string()))?;
            write_output(out, &format!("root_{k}.csv"), &solved.profile.to_csv(), manifest)?;
            profiles.push(solved);
        }
        let (minimal_index, ordered) =
            ssheat_core::shooting::classify_minimal(&profiles, 1e-6).map_err(map_shoot)?;
        let roots_json = serde_json::json!({
            "l_target": l_target,
            "roots": roots,
            "minimal_index": minimal_index,
            "pointwise_ordered": ordered,
        });
        write_output(out, "roots.json", &to_json(&roots_json)?, manifest)?;
    }

    if args.svg {
        let pts: Vec<(f64, f64)> = diagram
            .records
            .iter()
            .filter_map(|r| r.l_tail.map(|l| (r.alpha, l)))
            .collect();
        let marks: Vec<(f64, f64)> = diagram
            .critical_points
            .iter()
            .filter_map(|&c| {
                pts.iter()
                    .min_by(|a, b| (a.0 - c).abs().total_cmp(&(b.0 - c).abs()))
                    .map(|&(_, l)| (c, l))
            })
            .collect();
        let plot = svg::Plot {
            title: "tail offset over the initial value",
            x_label: "alpha",
            y_label: "L",
            series: vec![("L(alpha)", pts)],
            marks,
            log_log: false,
        };
        write_output(out, "scan.svg", &svg::render(&plot), manifest)?;
    }
    Ok(())
}

fn cmd_converge(args: &ConvergeArgs, out: &Path, manifest: &mut RunManifest) -> Result<(), AppError> {
    if args.ns.is_empty() {
        return Err(AppError::Validation("at least one approximation order required".into()));
    }
    manifest.record_config([
        ("N", args.n.to_string()),
        ("alpha", fmt(args.alpha)),
        ("ns", args.ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")),
        ("r0", fmt(args.r0)),
        ("svg", args.svg.to_string()),
    ]);
    let cfg = IntegratorConfig::default();
    let report = convergence_report(args.n, args.alpha, &args.ns, args.r0, &cfg)
        .map_err(|e| match e {
            ssheat_core::approx::ApproxError::OrderTooSmall { .. }
            | ssheat_core::approx::ApproxError::OrderTooLarge(_)
            | ssheat_core::approx::ApproxError::NoEntries => AppError::Validation(e.to_string()),
            other => AppError::Solver(other.to_string()),
        })?;
    write_output(out, "converge.csv", &report_to_csv(&report), manifest)?;
    write_output(out, "converge.json", &to_json(&report)?, manifest)?;
    if args.svg {
        let pts: Vec<(f64, f64)> =
            report.entries.iter().map(|e| (f64::from(e.n), e.sup_diff)).collect();
        let pts_l: Vec<(f64, f64)> =
            report.entries.iter().map(|e| (f64::from(e.n), e.l_n_err)).collect();
        let plot = svg::Plot {
            title: "approximation error vs order",
            x_label: "n",
            y_label: "error",
            series: vec![("sup_diff", pts), ("L_n_err", pts_l)],
            marks: vec![],
            log_log: true,
        };
        write_output(out, "converge.svg", &svg::render(&plot), manifest)?;
    }
    Ok(())
}

fn cmd_dichotomy(args: &DichotomyArgs, out: &Path, manifest: &mut RunManifest) -> Result<(), AppError> {
    if args.epsilons.is_empty() {
        return Err(AppError::Validation("at least one epsilon required".into()));
    }
    if args.l.is_some() == args.auto_l {
        return Err(AppError::Validation("specify exactly one of --L and --auto-l".into()));
    }
    manifest.record_config([
        ("N", args.n.to_string()),
        ("L", args.l.map(fmt).unwrap_or_default()),
        ("auto_l", args.auto_l.to_string()),
        (
            "epsilons",
            args.epsilons.iter().map(|e| fmt(*e)).collect::<Vec<_>>().join(","),
        ),
        ("grid_radius", fmt(args.grid_radius)),
        ("grid_points", args.grid_points.to_string()),
        ("s_max", fmt(args.s_max)),
        ("svg", args.svg.to_string()),
    ]);
    let target = match args.l {
        Some(l) => DichotomyTarget::Explicit(l),
        None => DichotomyTarget::Auto,
    };
    let cfg = SimConfig {
        grid_radius: args.grid_radius,
        grid_points: args.grid_points,
        s_max: args.s_max,
        spatial_order: SpatialOrder::Two,
        stationarity_tol: 1e-8,
        snapshot_interval: None,
        ..SimConfig::default()
    };
    let run = dichotomy_experiment_full(args.n, target, &args.epsilons, &cfg).map_err(|e| {
        match e {
            SimError::MissingNonMinimalBranch { .. } => AppError::NoBranch(e.to_string()),
            SimError::InvalidConfig => AppError::Validation(e.to_string()),
            other => AppError::Solver(other.to_string()),
        }
    })?;
    write_output(out, "dichotomy.csv", &dichotomy_to_csv(&run.table), manifest)?;
    write_output(out, "dichotomy.json", &to_json(&run.table)?, manifest)?;

    // Per-row snapshots: sup-norm history, plus the terminal profile of
    // every run that converged.
    for (k, outcome) in run.outcomes.iter().enumerate() {
        let mut sup = String::from("s,sup\n");
        for &(s, v) in &outcome.sup_history {
            sup.push_str(&format!("{s:.16e},{v:.16e}\n"));
        }
        write_output(out, &format!("sup_eps{k}.csv"), &sup, manifest)?;
        if let Classification::Global { terminal } = &outcome.classification {
            let mut csv = String::from("y,w\n");
            for i in 0..terminal.len() {
                csv.push_str(&format!("{:.16e},{:.16e}\n", terminal.r[i], terminal.value[i]));
            }
            write_output(out, &format!("terminal_eps{k}.csv"), &csv, manifest)?;
        }
    }
    if args.svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = run
            .outcomes
            .iter()
            .enumerate()
            .map(|(k, o)| {
                (format!("eps {}", run.table.rows[k].epsilon), o.sup_history.clone())
            })
            .collect();
        let plot = svg::Plot {
            title: "sup-norm history",
            x_label: "s",
            y_label: "sup w",
            series: series.iter().map(|(n, p)| (n.as_str(), p.clone())).collect(),
            marks: vec![],
            log_log: false,
        };
        write_output(out, "dichotomy.svg", &svg::render(&plot), manifest)?;
    }
    Ok(())
}

fn map_shoot(e: ShootingError) -> AppError {
    match e {
        ShootingError::InvalidRange { .. } | ShootingError::TooFewPoints(_) => {
            AppError::Validation(e.to_string())
        }
        ShootingError::NoBracket { .. } => AppError::NoBranch(e.to_string()),
        other => AppError::Solver(other.to_string()),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}
