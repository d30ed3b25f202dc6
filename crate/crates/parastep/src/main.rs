//! `parastep`: classify, iterate, and probe parabolic self-maps of the
//! upper half-plane given as (beta, measure) spec files.
//!
//! Exit codes: 0 success (classify: a definite verdict; validate: agreement),
//! 1 usage or runtime error, 2 undecided (classify: Unknown; validate: not
//! comparable), 3 validate disagreement.

use clap::{Parser, Subcommand, ValueEnum};
use parastep::dynamics::{self, DEFAULT_ZERO_THRESHOLD};
use parastep::classify::DEFAULT_EPS_BETA;
use parastep::expr;
use parastep::halfplane::HPoint;
use parastep::herglotz::ParabolicMap;
use parastep::mapspec::{MapSpecFile, RunConfig};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "parastep", version, about = "hyperbolic-step analysis of parabolic half-plane maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic classification of the hyperbolic step
    Classify {
        spec: PathBuf,
        /// Override the file's beta (accepts constant expressions like "pi/4")
        #[arg(long)]
        beta: Option<String>,
        /// Ambiguity band for a numerically computed beta-tilde
        #[arg(long)]
        eps_beta: Option<f64>,
    },
    /// Iterate the map and report the empirical verdict; optionally write the trace CSV
    Orbit {
        spec: PathBuf,
        #[arg(long)]
        beta: Option<String>,
        /// Number of iterations
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Starting point as "x,y"
        #[arg(long, default_value = "0,1")]
        z0: String,
        /// Total orbit error budget
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// d_n tail level separating zero from positive step
        #[arg(long, default_value_t = DEFAULT_ZERO_THRESHOLD)]
        zero_threshold: f64,
        /// Write the trace CSV to this exact path
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Output path prefix (trace goes to <prefix>.trace.csv)
        #[arg(long)]
        output: Option<String>,
    },
    /// Angular/drift probes along the imaginary axis, or Abel residuals
    Probe {
        spec: PathBuf,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, value_enum)]
        kind: ProbeKind,
        /// Probe grid "ymin,ymax,points" (log-spaced)
        #[arg(long, default_value = "10,1e6,13")]
        grid: String,
        /// Base point for abel, as "x,y"
        #[arg(long, default_value = "0,1")]
        z0: String,
        /// Probe point for abel, as "x,y"
        #[arg(long, default_value = "0,2")]
        z: String,
        /// Residual count for abel
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        output: Option<String>,
    },
    /// Run both classifiers and compare
    Validate {
        spec: PathBuf,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value = "0,1")]
        z0: String,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum ProbeKind {
    Angular,
    Drift,
    Abel,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn parse_point(s: &str, what: &str) -> Result<HPoint, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("{what}: expected \"x,y\", got \"{s}\""));
    }
    let x = expr::parse_constant(parts[0].trim())?;
    let y = expr::parse_constant(parts[1].trim())?;
    HPoint::new(x, y).map_err(|e| format!("{what}: {e}"))
}

fn parse_beta(beta: &Option<String>) -> Result<Option<f64>, String> {
    beta.as_deref().map(expr::parse_constant).transpose()
}

fn load_map(spec: &PathBuf, beta: &Option<String>) -> Result<(ParabolicMap, f64), String> {
    let file = MapSpecFile::load(spec).map_err(|e| e.to_string())?;
    let beta_override = parse_beta(beta)?;
    let beta_value = beta_override.unwrap_or(file.beta);
    let map = file.into_map(beta_override).map_err(|e| e.to_string())?;
    Ok((map, beta_value))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap());
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Classify { spec, beta, eps_beta } => {
            let (map, beta_value) = load_map(&spec, &beta)?;
            let eps = eps_beta.unwrap_or(DEFAULT_EPS_BETA);
            let c = parastep::classify(&map, eps).map_err(|e| e.to_string())?;
            let config = RunConfig {
                spec: spec.display().to_string(),
                beta: beta_value,
                z0: (0.0, 1.0),
                n: 0,
                tol: 0.0,
                eps_beta: eps,
                zero_threshold: DEFAULT_ZERO_THRESHOLD,
                output: None,
            };
            let unknown = matches!(c.verdict, parastep::Verdict::Unknown);
            print_json(&json!({
                "config": config,
                "classification": c,
            }));
            Ok(ExitCode::from(if unknown { 2 } else { 0 }))
        }
        Command::Orbit {
            spec,
            beta,
            n,
            z0,
            tol,
            zero_threshold,
            csv,
            output,
        } => {
            if n < 1 {
                return Err("--n must be at least 1".into());
            }
            if !(tol > 0.0) {
                return Err("--tol must be positive".into());
            }
            let (map, beta_value) = load_map(&spec, &beta)?;
            let start = parse_point(&z0, "--z0")?;
            let trace = dynamics::orbit(&map, start, n, tol).map_err(|e| e.to_string())?;
            let csv_path = csv.or_else(|| output.as_ref().map(|p| PathBuf::from(format!("{p}.trace.csv"))));
            if let Some(path) = &csv_path {
                let file = std::fs::File::create(path)
                    .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
                let mut w = std::io::BufWriter::new(file);
                trace.write_csv(&mut w).map_err(|e| e.to_string())?;
            }
            let config = RunConfig {
                spec: spec.display().to_string(),
                beta: beta_value,
                z0: (start.x(), start.y()),
                n,
                tol,
                eps_beta: DEFAULT_EPS_BETA,
                zero_threshold,
                output: csv_path.as_ref().map(|p| p.display().to_string()),
            };
            if !trace.is_valid() {
                print_json(&json!({
                    "config": config,
                    "abort": trace.abort,
                    "completed_steps": trace.len(),
                }));
                return Ok(ExitCode::from(1));
            }
            let window = (n / 10).max(10);
            let verdict =
                dynamics::empirical_step(&trace, zero_threshold, window).map_err(|e| e.to_string())?;
            let b = dynamics::pommerenke_b(&trace).map_err(|e| e.to_string())?;
            print_json(&json!({
                "config": config,
                "summary": verdict,
                "pommerenke": b,
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Probe {
            spec,
            beta,
            kind,
            grid,
            z0,
            z,
            n,
            csv,
            output,
        } => {
            let (map, beta_value) = load_map(&spec, &beta)?;
            let csv_path = csv.or_else(|| output.as_ref().map(|p| PathBuf::from(format!("{p}.probe.csv"))));
            let mut body = String::new();
            match kind {
                ProbeKind::Angular | ProbeKind::Drift => {
                    let parts: Vec<&str> = grid.split(',').collect();
                    if parts.len() != 3 {
                        return Err(format!("--grid: expected \"ymin,ymax,points\", got \"{grid}\""));
                    }
                    let ymin = expr::parse_constant(parts[0].trim())?;
                    let ymax = expr::parse_constant(parts[1].trim())?;
                    let points: usize = parts[2]
                        .trim()
                        .parse()
                        .map_err(|_| "--grid: points must be an integer".to_string())?;
                    if !(ymin > 0.0) || !(ymax > ymin) || points < 2 {
                        return Err("--grid: need 0 < ymin < ymax and points >= 2".into());
                    }
                    let ys: Vec<f64> = (0..points)
                        .map(|i| ymin * (ymax / ymin).powf(i as f64 / (points - 1) as f64))
                        .collect();
                    let values = match kind {
                        ProbeKind::Angular => dynamics::angular_probe(&map, &ys),
                        _ => dynamics::drift_probe(&map, &ys),
                    }
                    .map_err(|e| e.to_string())?;
                    body.push_str("y,re,im\n");
                    for (y, v) in ys.iter().zip(values) {
                        body.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", y, v.re, v.im));
                    }
                }
                ProbeKind::Abel => {
                    if n < 2 {
                        return Err("--n must be at least 2 for abel".into());
                    }
                    let base = parse_point(&z0, "--z0")?;
                    let probe = parse_point(&z, "--z")?;
                    let res = dynamics::abel_residual(&map, probe, base, n).map_err(|e| e.to_string())?;
                    body.push_str("k,residual\n");
                    for (k, r) in res.iter().enumerate() {
                        body.push_str(&format!("{},{:.17e}\n", k, r));
                    }
                }
            }
            match &csv_path {
                Some(path) => std::fs::write(path, &body)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => print!("{body}"),
            }
            let _ = beta_value;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { spec, beta, n, z0 } => {
            if n < 100 {
                return Err("--n must be at least 100".into());
            }
            let (map, beta_value) = load_map(&spec, &beta)?;
            let start = parse_point(&z0, "--z0")?;
            // classification and the orbit are independent; run them in parallel
            let report = std::thread::scope(|s| {
                let orbit_side = s.spawn(|| {
                    let trace = dynamics::orbit(&map, start, n, 1e-8)?;
                    dynamics::empirical_step(&trace, DEFAULT_ZERO_THRESHOLD, (n / 10).max(10))
                        .map_err(parastep::classify::ClassifyError::from)
                });
                let analytic = parastep::classify(&map, DEFAULT_EPS_BETA);
                match (analytic, orbit_side.join().expect("orbit thread panicked")) {
                    (Ok(a), Ok(e)) => {
                        use parastep::{Agreement, StepVerdict, Verdict};
                        let agree = match (a.verdict, e.verdict) {
                            (Verdict::Unknown, _) | (_, StepVerdict::Inconclusive) => {
                                Agreement::NotComparable
                            }
                            (Verdict::ZeroHS, StepVerdict::ZeroHS)
                            | (Verdict::PositiveHS, StepVerdict::PositiveHS) => Agreement::Yes,
                            _ => Agreement::No,
                        };
                        Ok(parastep::ValidationReport {
                            analytic: a,
                            empirical: e,
                            agree,
                        })
                    }
                    (Err(e), _) => Err(e.to_string()),
                    (_, Err(e)) => Err(e.to_string()),
                }
            })?;
            let config = RunConfig {
                spec: spec.display().to_string(),
                beta: beta_value,
                z0: (start.x(), start.y()),
                n,
                tol: 1e-8,
                eps_beta: DEFAULT_EPS_BETA,
                zero_threshold: DEFAULT_ZERO_THRESHOLD,
                output: None,
            };
            let code = match report.agree {
                parastep::Agreement::Yes => 0,
                parastep::Agreement::NotComparable => 2,
                parastep::Agreement::No => 3,
            };
            print_json(&json!({
                "config": config,
                "report": report,
            }));
            Ok(ExitCode::from(code))
        }
    }
}
