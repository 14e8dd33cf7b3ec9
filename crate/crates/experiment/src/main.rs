use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use minn_experiment::output::{run_json, write_file, write_metrics, write_sweep};
use minn_experiment::runner::{baseline_digital, baseline_no_ms, mac_count, prepare_data, run, sweep, SweepAxis};
use minn_experiment::ExperimentConfig;

#[derive(Parser)]
#[command(version, about = "Train and sweep metasurface-integrated neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Replace the config's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Root that `data.dir` is resolved against.
    #[arg(long, global = true, default_value = "data")]
    data_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate the configured model.
    Train { config: PathBuf },
    /// One run per value of an axis.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
    },
    /// Reference runs without a metasurface or without a channel.
    Baseline {
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: BaselineKind,
    },
    /// Per-module multiply-accumulate counts.
    Maccount { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    NoMs,
    Digital,
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let mut c = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        c.seeds = vec![s];
    }
    Ok(c)
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let out = &cli.out_dir;
    match &cli.command {
        Command::Train { config } => {
            let c = load(config, cli.seed)?;
            let rec = run(&c, &cli.data_dir)?;
            write_file(&out.join("metrics.csv"), |b| write_metrics(b, &rec))?;
            std::fs::write(out.join("run.json"), run_json(&c, &[&rec]))?;
            println!("accuracy {:.4} ± {:.4}, mean power {:.3e} W", rec.accuracy_mean, rec.accuracy_std, rec.mean_power_w);
        }
        Command::Sweep { config, axis, values } => {
            let c = load(config, cli.seed)?;
            let runs = sweep(&c, *axis, values, &cli.data_dir)?;
            write_file(&out.join("sweep.csv"), |b| write_sweep(b, *axis, &runs))?;
            let recs: Vec<_> = runs.iter().map(|(_, r)| r).collect();
            std::fs::write(out.join("run.json"), run_json(&c, &recs))?;
            for (v, r) in &runs {
                println!("{}={v}: accuracy {:.4} ± {:.4}", axis.name(), r.accuracy_mean, r.accuracy_std);
            }
        }
        Command::Baseline { config, kind } => {
            let c = load(config, cli.seed)?;
            let rec = match kind {
                BaselineKind::NoMs => baseline_no_ms(&c, &cli.data_dir)?,
                BaselineKind::Digital => baseline_digital(&c, &cli.data_dir)?,
            };
            write_file(&out.join("metrics.csv"), |b| write_metrics(b, &rec))?;
            std::fs::write(out.join("run.json"), run_json(&c, &[&rec]))?;
            println!("accuracy {:.4} ± {:.4}", rec.accuracy_mean, rec.accuracy_std);
        }
        Command::Maccount { config } => {
            let c = load(config, cli.seed)?;
            if let Err(problems) = c.validate(Some(&cli.data_dir)) {
                anyhow::bail!("invalid config:\n  - {}", problems.join("\n  - "));
            }
            let data = prepare_data(&c, &cli.data_dir)?;
            let report = mac_count(&c, data.train.feature_dim(), data.train.classes())?;
            for (name, v) in &report.modules {
                println!("{name:<12} {v}");
            }
            println!("{:<12} {}", "total", report.total());
        }
    }
    Ok(())
}
