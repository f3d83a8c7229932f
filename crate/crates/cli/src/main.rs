use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncube_cli::commands;
use ncube_cli::error::Result;
use ncube_cli::json::{fmt_f64, to_json, write_text, DataFile, ElementFile};
use ncube_cli::replay::verify;
use ncube_cli::result::ResultFile;
use ncube_cli::sweep::{self, Suite, SweepConfig};
use ncube_core::quotientmaps::Route;
use ncube_core::sdpfeas::{SolveOptions, DEFAULT_STRICT_TOL};

/// Membership tests for the max and min matrix-convex cones over the
/// noncommutative cube, with replayable certificates.
#[derive(Debug, Parser)]
#[command(name = "ncube", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct Common {
    /// Strict-feasibility tolerance of the SDP engine.
    #[arg(long, default_value_t = DEFAULT_STRICT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the result (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn opts(&self) -> SolveOptions {
        SolveOptions {
            strict_tol: self.tol,
            seed: self.seed,
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RouteArg {
    Tridiag,
    Arrow,
    Diagonal,
    Qn,
    All,
}

impl RouteArg {
    fn routes(self) -> Vec<Route> {
        match self {
            RouteArg::Tridiag => vec![Route::Tridiag],
            RouteArg::Arrow => vec![Route::Arrow],
            RouteArg::Diagonal => vec![Route::Diagonal],
            RouteArg::Qn => vec![Route::Qn],
            RouteArg::All => Route::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Max-cone membership of an NC(n) element via lifted positivity.
    CheckMax {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = RouteArg::All)]
        route: RouteArg,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a contraction (NC) or unitary (S2) tuple with a negative pencil.
    CheckMin {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        dmax: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Riesz scheme for a1, a2 and b inside a subalgebra.
    RieszSolve {
        #[arg(long = "in")]
        input: PathBuf,
        /// full, diagonal or blocks:s1,s2,...
        #[arg(long, default_value = "full")]
        algebra: String,
        #[command(flatten)]
        common: Common,
    },
    /// A y in the subalgebra with b_j < y < a_i for all i, j.
    TrInterpolate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "full")]
        algebra: String,
        #[command(flatten)]
        common: Common,
    },
    /// Two-block decomposition certifying a0 + a1 u + a1* u* + a2 v + a2* v* > 0.
    ThSt {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Replay every certificate in a result file.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// List the quotient kernels for n and check that each is null.
    Kernels {
        #[arg(long)]
        n: usize,
    },
    /// Run a seeded experiment suite.
    Sweep {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        dmax: usize,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_STRICT_TOL)]
        tol: f64,
        /// CSV destination; stdout if absent.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Summary JSON destination.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn emit(mut result: ResultFile, common: &Common, start: Instant) -> Result<u8> {
    if common.timing {
        result.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    let text = to_json(&result)?;
    let line = status_line(&result);
    match &common.out {
        Some(path) => {
            write_text(path, &text)?;
            println!("{line}");
        }
        None => {
            print!("{text}");
            eprintln!("{line}");
        }
    }
    Ok(result.status.exit_code())
}

fn status_line(r: &ResultFile) -> String {
    let mut s = format!("status: {}", r.status.as_str());
    if let Some(m) = r.margin {
        s.push_str(&format!(", margin {}", fmt_f64(m)));
    }
    if let Some(u) = r.upper_bound {
        s.push_str(&format!(", upper bound {}", fmt_f64(u)));
    }
    s
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli, command: Vec<String>) -> Result<u8> {
    let start = Instant::now();
    match cli.cmd {
        Cmd::CheckMax { input, route, common } => {
            let el = ElementFile::load(&input)?;
            let r = commands::check_max(&el, &route.routes(), &common.opts(), command)?;
            emit(r, &common, start)
        }
        Cmd::CheckMin {
            input,
            dmax,
            restarts,
            common,
        } => {
            let el = ElementFile::load(&input)?;
            let r = commands::check_min(&el, dmax, restarts, common.seed, &common.opts(), command)?;
            emit(r, &common, start)
        }
        Cmd::RieszSolve { input, algebra, common } => {
            let data = DataFile::load(&input)?;
            let r = commands::riesz_solve(&data, &algebra, &common.opts(), command)?;
            emit(r, &common, start)
        }
        Cmd::TrInterpolate { input, algebra, common } => {
            let data = DataFile::load(&input)?;
            let r = commands::tr_interpolate_cmd(&data, &algebra, &common.opts(), command)?;
            emit(r, &common, start)
        }
        Cmd::ThSt { input, common } => {
            let data = DataFile::load(&input)?;
            let r = commands::th_st(&data, &common.opts(), command)?;
            emit(r, &common, start)
        }
        Cmd::Verify { input } => {
            let result = ResultFile::load(&input)?;
            let replay = verify(&result)?;
            for l in &replay.lines {
                println!("{l}");
            }
            println!("{}", if replay.confirmed { "confirmed" } else { "not confirmed" });
            Ok(if replay.confirmed { 0 } else { 1 })
        }
        Cmd::Kernels { n } => {
            let (text, good) = commands::kernels(n)?;
            print!("{text}");
            Ok(if good { 0 } else { 1 })
        }
        Cmd::Sweep {
            suite,
            trials,
            seed,
            dmax,
            restarts,
            tol,
            csv,
            summary,
        } => {
            let mut cfg = SweepConfig::new(trials, seed);
            cfg.d_max = dmax;
            cfg.restarts = restarts;
            cfg.opts.strict_tol = tol;
            let report = sweep::run(suite, &cfg)?;
            write_or_print(csv.as_deref(), &report.csv()?)?;
            let s = report.summary(&cfg, command);
            if let Some(p) = summary {
                write_text(&p, &to_json(&s)?)?;
            }
            eprintln!(
                "{}: {} instances, {} agreements, {} contradictions, {} skipped",
                suite.as_str(),
                s.instances,
                s.agreements,
                s.contradictions,
                s.skipped
            );
            Ok(if s.contradictions == 0 { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, args[1..].to_vec()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
