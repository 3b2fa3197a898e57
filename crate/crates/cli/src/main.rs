use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roadtest::orchestrator::{self, Database, IdFilter, OrchestratorError, ToolkitConfig};

const DEFAULT_DB: &str = "scenario-db";

#[derive(Parser)]
#[command(name = "roadtest", version, about = "Generate, simulate and evaluate road scenario campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand the logical scenario definitions into the scenario database
    Generate {
        #[arg(long, default_value = "definitions")]
        definitions: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every generated scenario in the simulator
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Compute KPIs and the campaign summary
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Render the spider chart and text report from the summary
    Report {
        #[command(flatten)]
        common: Common,
    },
    /// generate, simulate, evaluate and report in sequence
    Pipeline {
        #[arg(long, default_value = "definitions")]
        definitions: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check that the manifest and the files on disk agree
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Database root; defaults to `output` from the config, then ./scenario-db
    #[arg(long)]
    db: Option<PathBuf>,
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core)
    #[arg(long)]
    parallel: Option<usize>,
    /// Re-run scenarios that already have a result
    #[arg(long)]
    force: bool,
    /// Glob on concrete scenario ids
    #[arg(long)]
    filter: Option<String>,
}

struct Setup {
    db: Database,
    cfg: ToolkitConfig,
    filter: IdFilter,
    force: bool,
}

impl Common {
    fn setup(&self) -> Result<Setup, OrchestratorError> {
        let mut cfg = match &self.config {
            Some(p) => ToolkitConfig::load(p)?,
            None => ToolkitConfig::default(),
        };
        if let Some(n) = self.parallel {
            cfg.parallel = n;
        }
        let root = self.db.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| DEFAULT_DB.into());
        Ok(Setup { db: Database::new(root), cfg, filter: IdFilter::new(self.filter.as_deref())?, force: self.force })
    }
}

enum Failure {
    Config(OrchestratorError),
    Stage(&'static str, OrchestratorError),
}

fn stage<T>(name: &'static str, r: Result<T, OrchestratorError>) -> Result<T, Failure> {
    r.map_err(|e| if e.is_config() { Failure::Config(e) } else { Failure::Stage(name, e) })
}

fn generate(defs: &Path, s: &Setup) -> Result<(), Failure> {
    let r = stage("generate", orchestrator::generate(defs, &s.db, &s.cfg, &s.filter))?;
    println!("generated {} scenarios ({} failed) in {}", r.generated, r.failed, s.db.root.display());
    Ok(())
}

fn simulate(s: &Setup) -> Result<(), Failure> {
    let r = stage("simulate", orchestrator::simulate(&s.db, &s.cfg, &s.filter, s.force))?;
    let counts: Vec<String> = r.counts.iter().map(|(k, v)| format!("{} {v}", k.as_str())).collect();
    println!("simulated {} scenarios, {} already done: {}", r.ran, r.skipped, counts.join(", "));
    Ok(())
}

fn evaluate(s: &Setup) -> Result<(), Failure> {
    let summary = stage("evaluate", orchestrator::evaluate(&s.db, &s.cfg, &s.filter))?;
    println!("evaluated {} scenarios, {} skipped", summary.evaluated, summary.skipped.len());
    Ok(())
}

fn report(s: &Setup) -> Result<(), Failure> {
    let summary = stage("report", orchestrator::report(&s.db))?;
    print!("{}", orchestrator::render_report(&summary));
    Ok(())
}

fn run(cmd: &Command) -> Result<(), Failure> {
    let common = match cmd {
        Command::Generate { common, .. }
        | Command::Simulate { common }
        | Command::Evaluate { common }
        | Command::Report { common }
        | Command::Pipeline { common, .. }
        | Command::Verify { common } => common,
    };
    let s = common.setup().map_err(Failure::Config)?;
    match cmd {
        Command::Generate { definitions, .. } => generate(definitions, &s),
        Command::Simulate { .. } => simulate(&s),
        Command::Evaluate { .. } => evaluate(&s),
        Command::Report { .. } => report(&s),
        Command::Pipeline { definitions, .. } => {
            generate(definitions, &s)?;
            simulate(&s)?;
            evaluate(&s)?;
            report(&s)
        }
        Command::Verify { .. } => {
            stage("verify", orchestrator::verify(&s.db))?;
            println!("{} is consistent", s.db.root.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Stage(name, e)) => {
            eprintln!("error: {name} failed: {e}");
            if let OrchestratorError::Inconsistent { problems, .. } = &e {
                for p in problems {
                    eprintln!("  {p}");
                }
            }
            ExitCode::from(2)
        }
    }
}
