//! `pclt`: run simulation, γ̂, localization, CLT-rate and oracle studies
//! from a JSON config.

use clap::{Parser, Subcommand, ValueEnum};
use poisson_clt::experiments::{
    canonical_json, emit_plot_data, plot_rows, run_clt_study, run_gamma_study, run_localization_study,
    run_oracle_suite, run_simulation, write_json, ExperimentConfig, OracleKind,
};
use poisson_clt::{Error, Result};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "pclt", version, about = "Monte Carlo studies of normal approximation for Poisson functionals")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw `n` values of H per λ and report mean and variance.
    Simulate,
    /// Estimate the second-order Poincaré terms and their bounds.
    Gamma,
    /// Estimate localization profiles and assemble the theorem bounds.
    Localize,
    /// Kolmogorov and Wasserstein rate study over the λ grid.
    Clt,
    /// Compare primary implementations with the reference oracles.
    Oracle {
        /// Instances per oracle kind.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, value_enum)]
        kind: Vec<KindArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Ustat,
    BirthGrowth,
    Laguerre,
    NormalCdf,
    TorusMeans,
}

impl From<KindArg> for OracleKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Ustat => OracleKind::Ustat,
            KindArg::BirthGrowth => OracleKind::BirthGrowth,
            KindArg::Laguerre => OracleKind::Laguerre,
            KindArg::NormalCdf => OracleKind::NormalCdf,
            KindArg::TorusMeans => OracleKind::TorusMeans,
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        log::error!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, PathBuf)> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&dir)?;
    Ok((cfg, dir))
}

fn out_path(dir: &Path, cfg: &ExperimentConfig, suffix: &str) -> PathBuf {
    dir.join(format!("{}_{suffix}", cfg.output.prefix))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Oracle { n, kind } => {
            let seed = cli.seed.unwrap_or(0);
            let kinds: Vec<OracleKind> =
                if kind.is_empty() { OracleKind::all().to_vec() } else { kind.iter().map(|&k| k.into()).collect() };
            let reports = run_oracle_suite(&kinds, *n, seed)?;
            let mut sink: Box<dyn Write> = match &cli.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    Box::new(std::fs::File::create(dir.join("oracle.jsonl"))?)
                }
                None => Box::new(std::io::stdout().lock()),
            };
            for r in &reports {
                serde_json::to_writer(&mut sink, r)?;
                sink.write_all(b"\n")?;
            }
            let failed = reports.iter().filter(|r| !r.agree).count();
            log::info!("{} comparisons, {failed} disagreements", reports.len());
            if failed > 0 {
                return Err(Error::Diagnostic(format!("{failed} oracle disagreements")));
            }
        }
        Command::Simulate => {
            let (cfg, dir) = load(&cli)?;
            let rep = run_simulation(&cfg)?;
            write_json(&rep, &out_path(&dir, &cfg, "simulate.json"))?;
            let mut w = csv::Writer::from_path(out_path(&dir, &cfg, "simulate.csv"))?;
            w.write_record(["lambda", "n", "mean", "mean_stderr", "var", "var_lo", "var_hi"])?;
            for r in &rep.rows {
                w.serialize((r.lambda, r.n, r.mean, r.mean_stderr, r.var, r.var_lo, r.var_hi))?;
            }
            w.flush()?;
            if let Some(first) = rep.rows.first() {
                let mut w = csv::Writer::from_path(out_path(&dir, &cfg, "points.csv"))?;
                w.write_record(["id", "coords", "time", "mark"])?;
                for p in &first.first_configuration {
                    let coords: Vec<String> = p.loc.coords().iter().map(|c| c.to_string()).collect();
                    let time = p.time.map_or(String::new(), |t| t.to_string());
                    w.write_record([p.id.to_string(), coords.join(" "), time, p.mark.to_string()])?;
                }
                w.flush()?;
            }
            for r in &rep.rows {
                println!("λ = {}: mean {:.4} ± {:.4}, var {:.4} [{:.4}, {:.4}]", r.lambda, r.mean, r.mean_stderr, r.var, r.var_lo, r.var_hi);
            }
        }
        Command::Gamma => {
            let (cfg, dir) = load(&cli)?;
            let rep = run_gamma_study(&cfg)?;
            write_json(&rep, &out_path(&dir, &cfg, "gamma.json"))?;
            for g in &rep.per_lambda {
                println!("λ = {}: d_K ≤ {:.4e}, d_W ≤ {:.4e}", g.lambda, g.bounds.d_k, g.bounds.d_w);
            }
        }
        Command::Localize => {
            let (cfg, dir) = load(&cli)?;
            let rep = run_localization_study(&cfg)?;
            write_json(&rep, &out_path(&dir, &cfg, "localize.json"))?;
            println!(
                "λ = {}: ψ model {}, M5 = {:.4}, d_K ≤ {:.4e}, d_W ≤ {:.4e}",
                rep.lambda, rep.psi_model, rep.m5, rep.bound.d_k_bound, rep.bound.d_w_bound
            );
            if rep.m5_heavy_tail {
                return Err(Error::Diagnostic("fifth-moment estimate is dominated by its largest values".into()));
            }
        }
        Command::Clt => {
            let (cfg, dir) = load(&cli)?;
            let rep = run_clt_study(&cfg)?;
            let value = serde_json::to_value(&rep)?;
            write_json(&value, &out_path(&dir, &cfg, "clt.json"))?;
            write_json(&canonical_json(&value), &out_path(&dir, &cfg, "clt.canonical.json"))?;
            emit_plot_data(&plot_rows(&rep), &out_path(&dir, &cfg, "clt.csv"))?;
            for r in &rep.per_lambda {
                println!("λ = {}: d̂_K = {:.5} [{:.5}, {:.5}], d̂_W = {:.5}", r.lambda, r.d_k, r.d_k_lo, r.d_k_hi, r.d_w);
            }
            if let Some(s) = &rep.d_k_slope {
                println!("slope of ln d̂_K on ln λ: {:.3} [{:.3}, {:.3}]", s.slope, s.lo, s.hi);
            }
        }
    }
    Ok(())
}
