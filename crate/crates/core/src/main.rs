use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ladts::baselines::Method;
use ladts::diffusion::NoiseCoeff;
use ladts::harness::{emit_plot_data, run_training, sweep, write_csv, Experiment, ExperimentConfig, SweepParam};
use ladts::sac::{ActorStyle, TargetStyle};

#[derive(Parser)]
#[command(name = "ladts", version, about = "Edge task-offloading scheduler experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one method for one seed, write metrics and checkpoints.
    Train(Overrides),
    /// Fresh training run per value of one parameter, over all seeds.
    Sweep {
        /// N_max, z_max, f_max, B, I or alpha.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run argmax episodes with a saved checkpoint directory.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: u64,
        /// First episode index; picks unseen arrival streams by default.
        #[arg(long, default_value_t = 1_000_000)]
        first_episode: u64,
    },
}

#[derive(Args)]
struct Overrides {
    /// Flat TOML experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lad_ts, d2sac, sac, dqn or opt.
    #[arg(long)]
    method: Option<Method>,
    /// First seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Seeds per sweep point.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report each episode from an argmax pass after training.
    #[arg(long)]
    eval_greedy: bool,
    /// Record wall_ms (breaks byte-identical reruns).
    #[arg(long)]
    wall_clock: bool,
    /// sampled or expectation.
    #[arg(long, value_parser = parse_target_style)]
    target_style: Option<TargetStyle>,
    /// squared or standard.
    #[arg(long, value_parser = parse_actor_style)]
    actor_style: Option<ActorStyle>,
    /// half_var or sqrt_var.
    #[arg(long, value_parser = parse_noise_coeff)]
    noise_coeff: Option<NoiseCoeff>,
}

fn parse_target_style(s: &str) -> Result<TargetStyle, String> {
    match s {
        "sampled" => Ok(TargetStyle::Sampled),
        "expectation" => Ok(TargetStyle::Expectation),
        _ => Err("expected sampled or expectation".into()),
    }
}

fn parse_actor_style(s: &str) -> Result<ActorStyle, String> {
    match s {
        "squared" => Ok(ActorStyle::Squared),
        "standard" => Ok(ActorStyle::Standard),
        _ => Err("expected squared or standard".into()),
    }
}

fn parse_noise_coeff(s: &str) -> Result<NoiseCoeff, String> {
    match s {
        "half_var" => Ok(NoiseCoeff::HalfVar),
        "sqrt_var" => Ok(NoiseCoeff::SqrtVar),
        _ => Err("expected half_var or sqrt_var".into()),
    }
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.seeds {
            cfg.seeds = s;
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.eval_greedy |= self.eval_greedy;
        cfg.record_wall_clock |= self.wall_clock;
        if let Some(t) = self.target_style {
            cfg.target_style = t;
        }
        if let Some(a) = self.actor_style {
            cfg.actor_style = a;
        }
        if let Some(n) = self.noise_coeff {
            cfg.noise_coeff = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(o) => {
            let cfg = o.resolve()?;
            let (run, exp) = run_training(&cfg, cfg.seed, None)?;
            let out = &cfg.out_dir;
            write_csv(&run.rows, &out.join("metrics.csv"))?;
            emit_plot_data(&run.rows, out)?;
            exp.save_checkpoints(&out.join("checkpoints"))?;
            println!(
                "{} seed {}: final delay {:.6} s, converged at episode {}",
                cfg.method, cfg.seed, run.summary.final_delay, run.summary.convergence_episode
            );
        }
        Command::Sweep {
            param,
            values,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            let Some(name) = param.or_else(|| cfg.sweep_param.clone()) else {
                bail!("no sweep parameter given");
            };
            let param: SweepParam = name.parse()?;
            let values = values.unwrap_or_else(|| cfg.sweep_values.clone());
            let rows = sweep(&cfg, param, &values)?;
            write_csv(&rows, &cfg.out_dir.join("metrics.csv"))?;
            emit_plot_data(&rows, &cfg.out_dir)?;
            println!("{} rows written to {}", rows.len(), cfg.out_dir.display());
        }
        Command::Eval {
            ckpt,
            episodes,
            first_episode,
        } => {
            let exp = Experiment::load_checkpoints(&ckpt)
                .with_context(|| format!("loading checkpoints from {}", ckpt.display()))?;
            let mut total = 0.0;
            for e in 0..episodes {
                let stats = exp.greedy_episode(first_episode + e)?;
                println!("episode {}: mean delay {:.6} s", e + 1, stats.mean_delay_s);
                total += stats.mean_delay_s;
            }
            if episodes > 0 {
                println!("{}: mean over {episodes} episodes {:.6} s", exp.cfg.method, total / episodes as f64);
            }
        }
    }
    Ok(())
}
