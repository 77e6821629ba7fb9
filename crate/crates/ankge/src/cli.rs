use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::container;
use crate::error::Result;
use crate::pipeline::{self, ANALOGY_FILE, BASE_FILE, CACHE_FILE};
use crate::synth::{self, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "ankge", version, about = "Analogical inference on top of knowledge graph embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a base embedding model.
    TrainBase {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Retrieve analogical objects for every training triple.
    Retrieve {
        #[command(flatten)]
        run: RunArgs,
        /// Base checkpoint [default: <out>/base.ckpt]
        #[arg(long)]
        base: Option<PathBuf>,
    },
    /// Train the analogy functions on a frozen base model.
    TrainAnkge {
        #[command(flatten)]
        run: RunArgs,
        /// Base checkpoint [default: <out>/base.ckpt]
        #[arg(long)]
        base: Option<PathBuf>,
        /// Analogy cache [default: <out>/cache.bin]
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Filtered link prediction with or without analogy parameters.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Base checkpoint [default: <out>/base.ckpt]
        #[arg(long)]
        base: Option<PathBuf>,
        /// Analogy checkpoint [default: <out>/ankge.ckpt when present]
        #[arg(long, conflicts_with = "base_only")]
        analogy: Option<PathBuf>,
        /// Evaluate the base model alone.
        #[arg(long)]
        base_only: bool,
    },
    /// Print artifact manifests.
    Info {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Write a synthetic compositional dataset.
    Synth {
        /// Output directory for train.txt, valid.txt and test.txt.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SynthConfig::default().people)]
        people: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML config file with flat `key = value` entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset directory holding train.txt, valid.txt and test.txt.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Override any config key, e.g. `--set dim=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut overrides = self.overrides.clone();
        let quoted = |p: &Path| toml::Value::String(p.display().to_string()).to_string();
        if let Some(p) = &self.out {
            overrides.push(format!("out={}", quoted(p)));
        }
        if let Some(p) = &self.dataset {
            overrides.push(format!("dataset={}", quoted(p)));
        }
        if let Some(f) = &self.family {
            overrides.push(format!("family={}", toml::Value::String(f.clone())));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(t) = self.threads {
            overrides.push(format!("threads={t}"));
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainBase { run } => {
            pipeline::train_base(&run.resolve()?)?;
        }
        Command::Retrieve { run, base } => {
            let cfg = run.resolve()?;
            let base = base.unwrap_or_else(|| pipeline::default_path(&cfg, BASE_FILE));
            pipeline::retrieve(&cfg, &base)?;
        }
        Command::TrainAnkge { run, base, cache } => {
            let cfg = run.resolve()?;
            let base = base.unwrap_or_else(|| pipeline::default_path(&cfg, BASE_FILE));
            let cache = cache.unwrap_or_else(|| pipeline::default_path(&cfg, CACHE_FILE));
            pipeline::train_ankge(&cfg, &base, &cache)?;
        }
        Command::Evaluate { run, base, analogy, base_only } => {
            let cfg = run.resolve()?;
            let base = base.unwrap_or_else(|| pipeline::default_path(&cfg, BASE_FILE));
            let analogy = match (analogy, base_only) {
                (Some(p), _) => Some(p),
                (None, true) => None,
                (None, false) => Some(pipeline::default_path(&cfg, ANALOGY_FILE)).filter(|p| p.exists()),
            };
            match &analogy {
                Some(p) => log::info!("using analogy checkpoint {}", p.display()),
                None => log::info!("evaluating the base model alone"),
            }
            pipeline::evaluate(&cfg, &base, analogy.as_deref())?;
        }
        Command::Info { paths } => {
            for p in paths {
                let m = container::read_manifest(&p)?;
                println!("{}", p.display());
                for (k, v) in m.entries() {
                    println!("  {k} = {v}");
                }
            }
        }
        Command::Synth { out, seed, people } => {
            let data = synth::generate(&SynthConfig { seed, people, ..SynthConfig::default() });
            data.write(&out)?;
            println!(
                "wrote {} train, {} valid, {} test triples to {}",
                data.train.len(),
                data.valid.len(),
                data.test.len(),
                out.display()
            );
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
