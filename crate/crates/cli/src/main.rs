use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpsup::io::{mps_json, read_mps, save_msv};
use mpsup_cli::analyze::{analyze, analyze_csv};
use mpsup_cli::certify::{certify, load_state};
use mpsup_cli::generate::{generate, GenParams};
use mpsup_cli::{emit, experiments, render_json, Failure, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(name = "mpsup", version, about = "Exact and approximate MPS-up analysis of many-body states")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = mpsup::numkernel::DEFAULT_RANK_TOL)]
    tol_rank: f64,
    #[arg(long, global = true, default_value_t = mpsup::mps::DEFAULT_AMP_CAP)]
    amp_cap: usize,
    #[arg(long, global = true, default_value_t = 50)]
    perm_samples: usize,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: FormatArg,
    /// Normalize states before analysis.
    #[arg(long, global = true)]
    normalized: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Normality, period, canonical form, lengths, angles and product structure of a TI MPS.
    Analyze {
        file: PathBuf,
        /// System size (defaults to the stored N or four periods).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Certify MPS-up at bond dimension D and tolerance eps over a permutation family.
    Certify {
        /// `.msv` state vector or MPS JSON file.
        file: PathBuf,
        #[arg(long = "bond", short = 'D')]
        bond: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run a named experiment: table2, border-w, ergodicity, lemma-sweeps, rank-counting, comb-purity.
    Reproduce {
        experiment: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Write a gallery state as MPS JSON, or as `.msv` with --state.
    Gen {
        /// ghz, w, dicke, weight, random or neel.
        kind: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        bond: Option<usize>,
        /// Excitations of a Dicke state.
        #[arg(long)]
        k: Option<usize>,
        /// Total weight of a weight state.
        #[arg(long)]
        a: Option<usize>,
        /// Largest local level of a weight state (defaults to a).
        #[arg(long)]
        delta: Option<usize>,
        /// Materialize the state vector instead of writing the MPS.
        #[arg(long)]
        state: bool,
    },
}

fn config(g: &GlobalArgs) -> RunConfig {
    RunConfig {
        seed: g.seed,
        tol_rank: g.tol_rank,
        amp_cap: g.amp_cap,
        perm_samples: g.perm_samples,
        format: match g.format {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        },
        out: g.out.clone(),
        normalized: g.normalized,
    }
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("MPSUP_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Failure::Input(format!("MPSUP_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    let cfg = config(&cli.global);
    cfg.validate()?;
    match cli.command {
        Command::Analyze { file, n } => {
            let mps = read_mps(&file)?;
            let report = analyze(&mps, n, &cfg)?;
            let text = match cfg.format {
                OutputFormat::Json => render_json(&report),
                OutputFormat::Csv => analyze_csv(&report),
            };
            emit(&text, &cfg)
        }
        Command::Certify { file, bond, eps, n } => {
            let psi = load_state(&file, n, &cfg)?;
            let cert = certify(&psi, bond, eps, &cfg)?;
            let text = match cfg.format {
                OutputFormat::Json => render_json(&cert.to_json(&cfg)),
                OutputFormat::Csv => cert.to_csv(),
            };
            emit(&text, &cfg)?;
            if cert.pass {
                Ok(())
            } else {
                Err(Failure::Certification(format!(
                    "eps* = {:e} exceeds eps = {:e} at D = {bond}",
                    cert.report.eps_star, eps
                )))
            }
        }
        Command::Reproduce { experiment, n } => {
            let report = experiments::run(&experiment, n, &cfg)?;
            let text = match cfg.format {
                OutputFormat::Json => render_json(&report.to_json(&cfg)),
                OutputFormat::Csv => report.to_csv(),
            };
            emit(&text, &cfg)
        }
        Command::Gen {
            kind,
            n,
            d,
            bond,
            k,
            a,
            delta,
            state,
        } => {
            let params = GenParams { n, d, bond, k, a, delta };
            let file = generate(&kind, &params, &cfg)?;
            if state {
                let path = cfg
                    .out
                    .clone()
                    .ok_or_else(|| Failure::Input("--state needs --out for the binary state file".into()))?;
                let psi = file.materialize(n, cfg.amp_cap)?;
                let psi = if cfg.normalized { psi.normalized() } else { psi };
                save_msv(&path, &psi)?;
                Ok(())
            } else {
                emit(&render_json(&mps_json(&file)), &cfg)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
