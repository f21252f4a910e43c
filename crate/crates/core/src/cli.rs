//! Command-line surface. Every subcommand writes a manifest next to its outputs.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::evaluator;
use crate::grammar::generate_hand;
use crate::io::{
    ensure_dir, export_kinematic_tree, load_run_config, read_design_file, write_design_file, DesignDocument,
    HistoryWriter, Manifest, RunConfig,
};
use crate::search::{ghs_run_observed, mcts_run_observed, random_search_observed, SearchOutcome};
use crate::sensitivity::{report, run_sweep, write_samples_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hand-codesign", version, about = "Generate, evaluate and search dexterous hand designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: config, then $HAND_CODESIGN_OUT, then ./runs]
    #[arg(long)]
    out: Option<PathBuf>,
    /// rotation, grasp or oracle
    #[arg(long)]
    evaluator: Option<String>,
    /// Perturbation trials per evaluation.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct Budget {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    candidates: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Mcts,
    Random,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample hands from the grammar into design files.
    Generate {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Graph Heuristic Search.
    Search {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        budget: Budget,
    },
    /// MCTS or random search at the same budget.
    Baseline {
        #[arg(long, value_enum)]
        algo: Algo,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        budget: Budget,
    },
    /// Score one design file.
    Eval {
        #[arg(long)]
        design: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Parameter sensitivity sweep.
    Analyze {
        /// Samples per parameter.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the kinematic tree of a design.
    Export {
        #[arg(long)]
        design: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => load_run_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(e) = &self.evaluator {
            c.evaluator = e.clone();
        }
        if let Some(t) = self.trials {
            c.surrogate.trials = t;
        }
        let c = c.resolved();
        c.check()?;
        Ok(c)
    }

    fn out_dir(&self, config: &RunConfig) -> Result<PathBuf> {
        let dir = config.output_dir(self.out.as_deref());
        ensure_dir(&dir)?;
        Ok(dir)
    }
}

impl Budget {
    fn apply(&self, c: &mut RunConfig) -> Result<()> {
        if let Some(i) = self.iterations {
            c.search.iterations = i;
        }
        if let Some(k) = self.candidates {
            c.search.candidates = k;
        }
        c.search.check()
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn generate(n: usize, common: &Common) -> Result<()> {
    let config = common.config()?;
    let dir = common.out_dir(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let names: Vec<String> = (0..n).map(|i| format!("design_{i:04}.json")).collect();
    for name in &names {
        let d = generate_hand(&config.gen, &mut rng)?;
        write_design_file(&dir.join(name), &DesignDocument::new(&d).with_generator(&config.gen))?;
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Manifest::new("generate", &config, &refs).write(&dir)?;
    println!("wrote {n} designs to {}", dir.display());
    Ok(())
}

fn run_search(command: &str, algo: Option<Algo>, common: &Common, budget: &Budget) -> Result<()> {
    let mut config = common.config()?;
    budget.apply(&mut config)?;
    let dir = common.out_dir(&config)?;
    let ev = evaluator(&config.evaluator, &config.surrogate)?;
    let mut history = HistoryWriter::create(&dir.join("history.csv"))?;
    let mut observe = |r: &crate::search::IterationRecord| history.append(r);
    let (cfg, gen) = (&config.search, &config.gen);
    let outcome: SearchOutcome = match algo {
        None => ghs_run_observed(cfg, gen, ev.as_ref(), cfg.initial_net(), &mut observe)?,
        Some(Algo::Mcts) => mcts_run_observed(cfg, gen, ev.as_ref(), &mut observe)?,
        Some(Algo::Random) => random_search_observed(cfg, gen, ev.as_ref(), &mut observe)?,
    };
    let mut outputs = vec!["history.csv", "best.json"];
    let doc = DesignDocument::new(&outcome.best).with_generator(gen).with_score(&config.evaluator, outcome.best_score);
    write_design_file(&dir.join("best.json"), &doc)?;
    if let Some(net) = &outcome.net {
        crate::encoder::save_net(net, &dir.join("value_net.bin"))?;
        outputs.push("value_net.bin");
    }
    Manifest::new(command, &config, &outputs).write(&dir)?;
    println!("best {} {}", config.evaluator, outcome.best_score);
    Ok(())
}

fn eval(design: &Path, common: &Common) -> Result<()> {
    let config = common.config()?;
    let d = read_design_file(design)?.to_design()?;
    let score = evaluator(&config.evaluator, &config.surrogate)?.score(&d)?;
    let dir = common.out_dir(&config)?;
    Manifest::new("eval", &config, &[]).write(&dir)?;
    println!("{} {score}", config.evaluator);
    Ok(())
}

fn analyze(samples: Option<usize>, common: &Common) -> Result<()> {
    let mut config = common.config()?;
    if samples.is_some() {
        config.analysis.samples = samples;
    }
    let dir = common.out_dir(&config)?;
    let result = run_sweep(&config.sweep_specs(), &config.sweep_base(), config.search.parallelism)?;
    let samples_path = dir.join("sweep_samples.csv");
    let file = fs::File::create(&samples_path).map_err(|e| Error::io(&samples_path, e))?;
    write_samples_csv(&result, file)?;
    let rep = report(&result);
    let summary_path = dir.join("sweep_summary.csv");
    let file = fs::File::create(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
    rep.write_csv(file)?;
    Manifest::new("analyze", &config, &["sweep_samples.csv", "sweep_summary.csv"]).write(&dir)?;
    print!("{}", rep.summary());
    Ok(())
}

fn export(design: &Path, common: &Common) -> Result<()> {
    let config = common.config()?;
    let d = read_design_file(design)?.to_design()?;
    let (text, summary) = export_kinematic_tree(&d)?;
    let dir = common.out_dir(&config)?;
    write_text(&dir.join("hand.urdf"), &text)?;
    Manifest::new("export", &config, &["hand.urdf"]).write(&dir)?;
    println!("{} links, {} joints -> {}", summary.links, summary.joints, dir.join("hand.urdf").display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { n, common } => generate(*n, common),
        Command::Search { common, budget } => run_search("search", None, common, budget),
        Command::Baseline { algo, common, budget } => {
            let name = match algo {
                Algo::Mcts => "baseline mcts",
                Algo::Random => "baseline random",
            };
            run_search(name, Some(*algo), common, budget)
        }
        Command::Eval { design, common } => eval(design, common),
        Command::Analyze { samples, common } => analyze(*samples, common),
        Command::Export { design, common } => export(design, common),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                EXIT_USER
            } else {
                EXIT_INTERNAL
            }
        }
    }
}
