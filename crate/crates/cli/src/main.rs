use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use linucbpp::harness::{
    render_plot, render_table, run_experiment, run_sweep, run_verify, write_results,
    AggregateResult, ExperimentConfig, Format, RunOptions,
};
use linucbpp::lowerbound::{build_adversarial_family, FamilyParams};
use linucbpp::rates::{compare_rates, pareto_rate, RateFunction};

#[derive(Parser)]
#[command(name = "linucbpp", version, about = "Model selection experiments for linear bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm over seeded paired trials.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: ExperimentOpts,
    },
    /// Terminal regret across the configured d_star grid.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        opts: ExperimentOpts,
    },
    /// Tabulate frontier rates theta_beta(alpha) over a grid of hardness levels.
    Rates {
        /// May be repeated or comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = default_grid())]
        grid: Vec<f64>,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Build the lower-bound family from a TOML parameter file and export it as JSON.
    Lowerbound {
        params: PathBuf,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Run the randomized property suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Plot,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => Format::Table,
            FormatArg::Plot => Format::Plot,
        }
    }
}

#[derive(Args)]
struct OutputOpts {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace an existing output file.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ExperimentOpts {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
    /// Worker threads for trials.
    #[arg(long)]
    parallelism: Option<usize>,
    #[command(flatten)]
    out: OutputOpts,
}

fn emit_text(text: &str, out: &OutputOpts) -> Result<()> {
    match &out.out {
        Some(path) => {
            if path.exists() && !out.force {
                bail!("refusing to overwrite {} (pass --force)", path.display());
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn partial_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".partial.csv");
    out.with_file_name(name)
}

fn experiment(config: &Path, opts: &ExperimentOpts, sweep: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = opts.trials {
        cfg.trials = trials;
    }
    let out = opts.out.out.clone().or_else(|| cfg.output.clone());
    if let Some(path) = &out {
        if path.exists() && !opts.out.force {
            bail!("refusing to overwrite {} (pass --force)", path.display());
        }
    }
    let options = RunOptions {
        parallelism: opts.parallelism,
        partial_output: out.as_deref().map(partial_path),
    };
    let result: AggregateResult = if sweep {
        run_sweep(&cfg, &options)?
    } else {
        run_experiment(&cfg, &options)?
    };
    let format = Format::from(opts.format);
    match out {
        Some(path) => {
            write_results(&result, format, &path, opts.out.force)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let text = match format {
                Format::Table => render_table(&result)?,
                Format::Plot => render_plot(&result),
            };
            io::stdout().write_all(text.as_bytes())?;
        }
    }
    for c in &result.curves {
        eprintln!(
            "{:>16}  terminal regret {:10.3} +- {:.3}",
            c.algorithm,
            c.stats.mean.last().copied().unwrap_or(0.0),
            c.stats.band.last().copied().unwrap_or(0.0)
        );
    }
    Ok(())
}

fn rates(betas: &[f64], grid: &[f64], out: &OutputOpts) -> Result<()> {
    let mut text = String::from("alpha");
    for b in betas {
        text.push_str(&format!(",theta_{b}"));
    }
    text.push('\n');
    for &a in grid {
        text.push_str(&a.to_string());
        for &b in betas {
            text.push_str(&format!(",{}", pareto_rate(b, a)?));
        }
        text.push('\n');
    }
    for (i, &b1) in betas.iter().enumerate() {
        for &b2 in &betas[i + 1..] {
            let ord = compare_rates(&RateFunction::pareto(b1)?, &RateFunction::pareto(b2)?, grid)?;
            text.push_str(&format!("# theta_{b1} vs theta_{b2}: {ord:?}\n"));
        }
    }
    emit_text(&text, out)
}

fn lowerbound(params: &Path, out: &OutputOpts) -> Result<()> {
    let text = fs::read_to_string(params).with_context(|| format!("reading {}", params.display()))?;
    let params: FamilyParams = toml::from_str(&text).context("parsing family parameters")?;
    let family = build_adversarial_family(&params)?;
    let export = family.export()?;
    eprintln!(
        "K = {}, Delta = {}, d = {}, regret floor = {}",
        export.k,
        export.delta,
        family.dim(),
        export.regret_floor
    );
    emit_text(&serde_json::to_string_pretty(&export)?, out)
}

fn verify(seed: u64) -> Result<bool> {
    let checks = run_verify(seed);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, opts } => experiment(config, opts, false).map(|_| true),
        Command::Sweep { config, opts } => experiment(config, opts, true).map(|_| true),
        Command::Rates { beta, grid, out } => rates(beta, grid, out).map(|_| true),
        Command::Lowerbound { params, out } => lowerbound(params, out).map(|_| true),
        Command::Verify { seed } => verify(*seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
