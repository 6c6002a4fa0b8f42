use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rcp_ldlt::bench::{self, BenchConfig};
use rcp_ldlt::gallery::{self, random_solution, Family, MatrixSpec};
use rcp_ldlt::{factor, factor_robust, solve, FactorConfig, PivotBatch, Strategy};

#[derive(Parser)]
#[command(name = "bench", version, about = "Symmetric indefinite LDL^T experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a strategy x family x size grid from a TOML config and write CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a gallery matrix in Matrix Market format.
    Gen(GenArgs),
    /// Factor a Matrix Market file and solve against a random consistent right-hand side.
    Solve(SolveArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coupling parameter of type1.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value = "rcp")]
    strategy: Strategy,
    /// Sketch rows; defaults to q + 4.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    block: usize,
    /// Draw a whole panel of pivots from one sketch.
    #[arg(long)]
    panel_pivots: bool,
    /// Recompute budget of the robust driver (rcp only); 0 disables it.
    #[arg(long, default_value_t = 1)]
    robust: usize,
}

fn gen(args: GenArgs) -> Result<()> {
    if args.family == Family::Type9 {
        bail!("type9 is read from a file, not generated");
    }
    let mut spec = MatrixSpec::new(args.family, args.n).with_seed(args.seed);
    if let Some(e) = args.epsilon {
        spec = spec.with_epsilon(e);
    }
    let a = gallery::generate(&spec)?;
    gallery::write_matrix_market(&a, &args.out)?;
    println!("wrote {} ({}x{})", args.out.display(), a.n(), a.n());
    Ok(())
}

fn solve_file(args: SolveArgs) -> Result<()> {
    let a = gallery::load_matrix_market(&args.matrix)?;
    let mut cfg = FactorConfig::new(args.strategy).with_seed(args.seed).with_b(args.block);
    if args.panel_pivots {
        cfg = cfg.with_q(PivotBatch::Block);
    }
    if let Some(p) = args.p {
        cfg = cfg.with_p(p);
    }
    let robust = args.strategy == Strategy::Rcp && args.robust > 0;
    cfg = cfg.with_robust_r(if robust { args.robust } else { 0 });
    let x_true = random_solution(a.n(), args.seed);
    let b = a.matvec(&x_true);
    let t0 = Instant::now();
    let f = if robust { factor_robust(&a, &cfg) } else { factor(&a, &cfg) }.context("factorization failed")?;
    let r = solve::solve_checked(&f, &a, &b);
    let elapsed = t0.elapsed();
    println!("n                {}", a.n());
    println!("strategy         {}", args.strategy);
    println!("backward_error   {:e}", r.backward_error.unwrap_or(f64::NAN));
    println!("rho_cheap        {:e}", f.stats.rho_cheap);
    println!("max_multiplier   {}", f.stats.max_multiplier);
    println!("two_by_two       {}", f.d.two_by_two_count());
    println!("rank             {}", f.rank);
    println!("recomputes       {}", f.recompute_count);
    println!("comps            {}", f.stats.counters.comps);
    println!("mults            {}", f.stats.counters.mults);
    println!("wall_time_ms     {:.3}", elapsed.as_secs_f64() * 1e3);
    if r.singular {
        println!("warning: D is singular; the affected components were set to zero");
    }
    Ok(())
}

fn run_grid(config: PathBuf) -> Result<bool> {
    let cfg = BenchConfig::load(&config)?;
    let records = bench::run(&cfg)?;
    let failed: Vec<_> = records.iter().filter(|r| r.error.is_some()).collect();
    for r in &failed {
        eprintln!(
            "cell {} {} n={} p={} trial={}: {}",
            r.strategy,
            r.family.name(),
            r.n,
            r.p,
            r.trial,
            r.error.as_deref().unwrap_or("")
        );
    }
    println!("{} records -> {}", records.len(), cfg.output_path().display());
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Command::Run { config } => run_grid(config),
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Solve(a) => solve_file(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
