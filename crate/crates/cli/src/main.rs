use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use convex_torus::engine::{
    calibrate, export_mesh, ledger_check, run_global, write_ledger_sweep, write_run, CalibrationOptions, RunConfig,
};
use convex_torus::grid::io::load_binary;
use convex_torus::grid::Embedding;
use convex_torus::verify::{criterion, Suite};

#[derive(Parser)]
#[command(name = "convex-torus", version, about = "Convex integration of flat tori")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Corrugation,
    Step,
    Stage,
    Ledger,
    All,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the global iteration from a JSON config and write its artifacts.
    Run {
        config: PathBuf,
        /// Skip the calibration probes (the manifest then has no c₀, δ*, λ*).
        #[arg(long)]
        no_calibrate: bool,
    },
    /// Run an acceptance suite; exits non-zero if any criterion fails.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        /// Where criterion 10 writes its run artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check one exponent tuple, or write the lattice sweep as CSV.
    Ledger {
        #[arg(long)]
        sweep: bool,
        /// Dimensions; defaults to 2 3 4 5.
        #[arg(long, num_args = 1..)]
        n: Vec<usize>,
        /// Lattice points per axis.
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value = "ledger.csv")]
        out: PathBuf,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Export an embedding field as PLY (all coordinates) and OBJ (first three).
    Export {
        #[arg(long)]
        mesh: bool,
        /// Field binary holding the embedding values, e.g. `u_final.bin`.
        input: PathBuf,
        /// Output stem; `.ply` and `.obj` are appended.
        #[arg(long, default_value = "mesh")]
        out: PathBuf,
        /// Keep every `stride`-th node along each axis.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
}

fn run(config: PathBuf, no_calibrate: bool) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let cfg: RunConfig = serde_json::from_str(&text).context("parsing config")?;
    let cal = if no_calibrate {
        None
    } else {
        let opts = CalibrationOptions { s_max: cfg.s_max, ..Default::default() };
        Some(calibrate(&opts)?)
    };
    let art = run_global(&cfg, cal)?;
    let m = write_run(&art, &cfg.output_dir)?;
    println!(
        "{} of {} planned iterates run ({} skipped with χ = 0); defects {:?}",
        m.iterations_run, m.planned_iterations, m.skipped_iterates, m.defects
    );
    if let Some(c) = &m.iteration_cap {
        println!("iteration cap: {c}");
    }
    if let Some(h) = &m.halted {
        println!("halted: {h}");
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(if m.halted.is_some() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn verify(suite: SuiteArg, out: Option<PathBuf>) -> ExitCode {
    let suite = match suite {
        SuiteArg::Corrugation => Suite::Corrugation,
        SuiteArg::Step => Suite::Step,
        SuiteArg::Stage => Suite::Stage,
        SuiteArg::Ledger => Suite::Ledger,
        SuiteArg::All => Suite::All,
    };
    let mut ok = true;
    for id in suite.criteria() {
        let c = criterion(id, out.as_deref());
        println!("{}", c.line());
        ok &= c.pass;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

#[allow(clippy::too_many_arguments)]
fn ledger(
    sweep: bool,
    ns: Vec<usize>,
    points: usize,
    out: PathBuf,
    theta: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<ExitCode> {
    let ns = if ns.is_empty() { vec![2, 3, 4, 5] } else { ns };
    if sweep {
        let mut all_pass = true;
        for &n in &ns {
            let path = if ns.len() == 1 { out.clone() } else { with_suffix(&out, n) };
            let (total, pass) = write_ledger_sweep(n, points, &path)?;
            println!("n = {n}: {pass}/{total} pass -> {}", path.display());
            all_pass &= pass == total;
        }
        return Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE });
    }
    let (Some(t), Some(a), Some(b)) = (theta, alpha, beta) else {
        bail!("give --sweep, or --theta, --alpha and --beta");
    };
    let mut pass = true;
    for &n in &ns {
        let c = ledger_check(n, t, a, b)?;
        println!("{}", serde_json::to_string_pretty(&c)?);
        pass &= c.passes();
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn with_suffix(p: &std::path::Path, n: usize) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "ledger".into());
    let ext = p.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    p.with_file_name(format!("{stem}_n{n}.{ext}"))
}

fn export(mesh: bool, input: PathBuf, out: PathBuf, stride: usize) -> Result<ExitCode> {
    if !mesh {
        bail!("only --mesh export is available");
    }
    let values = load_binary::<f64>(&input).with_context(|| format!("reading {}", input.display()))?;
    let u = Embedding::from_values(values)?;
    let (ply, obj) = export_mesh(&u, stride, &out)?;
    println!("wrote {} and {}", ply.display(), obj.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config, no_calibrate } => run(config, no_calibrate),
        Cmd::Verify { suite, out } => Ok(verify(suite, out)),
        Cmd::Ledger { sweep, n, points, out, theta, alpha, beta } => ledger(sweep, n, points, out, theta, alpha, beta),
        Cmd::Export { mesh, input, out, stride } => export(mesh, input, out, stride),
    }
}
